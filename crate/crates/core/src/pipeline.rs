//! The full run: configuration, every analysis stage in order, and the
//! report bundle written at the end.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ca::{self, ContingencyTable};
use crate::corpus::{self, Corpus, LabelMap, LexicalIndices, ParseOptions, ValidationReport};
use crate::error::{read_resource, Error, Result};
use crate::etm::{
    self, ClusterOptions, CountMode, LemmaFallback, Preprocessor, SelectOptions, Weighting,
};
use crate::graph::{self, GraphOptions, ReplyGraph};
use crate::language::{self, LanguageResources};
use crate::network::{self, ClosenessVariant, DistinctivenessVariant, NetworkOptions};
use crate::num;
use crate::stats::{self, CompareOptions, MetricsTable, ModelOptions, ModelSpec};
use crate::text::{LemmaTable, PolarityLexicon, Stemmer, StopWords, SuffixStemmer};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputPaths {
    pub posts: PathBuf,
    pub labels: PathBuf,
    pub lexicon: PathBuf,
    /// Built-in Italian list when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stopwords: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lemmas: Option<PathBuf>,
    /// Suffix-rule file; built-in Italian rules when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stemmer: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exclude_authors: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphConfig {
    pub thread_opener_edges: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    pub distinctiveness: DistinctivenessVariant,
    pub closeness: ClosenessVariant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EtmConfig {
    pub min_doc_freq: usize,
    pub high_freq_cutoff: f64,
    pub k_min: usize,
    pub k_max: usize,
    /// Fixed cluster count; chosen from the validity indices when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    pub restarts: usize,
    pub max_iterations: usize,
    pub weighting: Weighting,
    pub keyword_mode: CountMode,
    pub top_n: usize,
    pub lemma_fallback: LemmaFallback,
}

impl Default for EtmConfig {
    fn default() -> Self {
        let select = SelectOptions::default();
        let cluster = ClusterOptions::default();
        EtmConfig {
            min_doc_freq: select.min_doc_freq,
            high_freq_cutoff: select.high_freq_cutoff,
            k_min: 2,
            k_max: 6,
            k: None,
            restarts: cluster.restarts,
            max_iterations: cluster.max_iterations,
            weighting: cluster.weighting,
            keyword_mode: CountMode::Occurrences,
            top_n: 10,
            lemma_fallback: LemmaFallback::Stem,
        }
    }
}

impl EtmConfig {
    pub fn select_options(&self) -> SelectOptions {
        SelectOptions {
            min_doc_freq: self.min_doc_freq,
            high_freq_cutoff: self.high_freq_cutoff,
        }
    }

    pub fn cluster_options(&self) -> ClusterOptions {
        ClusterOptions {
            restarts: self.restarts,
            max_iterations: self.max_iterations,
            weighting: self.weighting,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.select_options().validate()?;
        if self.k_min < 2 || self.k_max < self.k_min {
            return Err(Error::Config(format!(
                "etm k range {}..={} is invalid; need 2 ≤ k_min ≤ k_max",
                self.k_min, self.k_max
            )));
        }
        if let Some(k) = self.k {
            if !(self.k_min..=self.k_max).contains(&k) {
                return Err(Error::Config(format!("etm.k = {k} lies outside {}..={}", self.k_min, self.k_max)));
            }
        }
        if self.restarts == 0 || self.max_iterations == 0 || self.top_n == 0 {
            return Err(Error::Config("etm restarts, max_iterations and top_n must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CaConfig {
    /// Human-chosen names for factors 1 and 2, shown on the factor map.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub axis_labels: Option<[String; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatsConfig {
    pub alpha: f64,
    pub standardize: bool,
    pub models: Vec<ModelSpec>,
}

impl Default for StatsConfig {
    fn default() -> Self {
        StatsConfig {
            alpha: CompareOptions::default().alpha,
            standardize: false,
            models: stats::default_blocks(),
        }
    }
}

impl StatsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("stats.alpha = {} must lie in (0, 1)", self.alpha)));
        }
        if self.models.is_empty() {
            return Err(Error::Config("stats.models is empty".into()));
        }
        let known = stats::groups::metric_columns();
        for (i, m) in self.models.iter().enumerate() {
            if m.columns.is_empty() {
                return Err(Error::Config(format!("model `{}` has no columns", m.name)));
            }
            if self.models[..i].iter().any(|o| o.name == m.name) {
                return Err(Error::Config(format!("model name `{}` repeated", m.name)));
            }
            if let Some(c) = m.columns.iter().find(|c| !known.contains(&c.as_str())) {
                return Err(Error::Config(format!("model `{}` names unknown column `{c}`", m.name)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub strict: bool,
    /// Worker threads; 0 uses every core.
    #[serde(default)]
    pub threads: usize,
    pub output_dir: PathBuf,
    pub inputs: InputPaths,
    #[serde(default)]
    pub graph: GraphConfig,
    #[serde(default)]
    pub network: NetworkConfig,
    #[serde(default)]
    pub etm: EtmConfig,
    #[serde(default)]
    pub ca: CaConfig,
    #[serde(default)]
    pub stats: StatsConfig,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_seed() -> u64 {
    1
}

impl PipelineConfig {
    /// A config reading the files written by the synthetic generator.
    pub fn for_inputs(dir: &Path, output_dir: &Path) -> Self {
        PipelineConfig {
            seed: default_seed(),
            strict: false,
            threads: 0,
            output_dir: output_dir.to_path_buf(),
            inputs: InputPaths {
                posts: "posts.jsonl".into(),
                labels: "labels.csv".into(),
                lexicon: "lexicon.tsv".into(),
                stopwords: Some("stopwords.txt".into()),
                lemmas: None,
                stemmer: None,
                exclude_authors: None,
            },
            graph: GraphConfig::default(),
            network: NetworkConfig::default(),
            etm: EtmConfig::default(),
            ca: CaConfig::default(),
            stats: StatsConfig::default(),
            base_dir: dir.to_path_buf(),
        }
    }

    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: PipelineConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.base_dir = base_dir.to_path_buf();
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parses a TOML document and applies `key.path=value` overrides first.
    pub fn from_toml_with_overrides(text: &str, base_dir: &Path, overrides: &[String]) -> Result<Self> {
        let mut doc: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        let text = toml::to_string(&doc).map_err(|e| Error::Config(e.to_string()))?;
        Self::from_toml(&text, base_dir)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::load_with_overrides(path, &[])
    }

    pub fn load_with_overrides(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = read_resource(path)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_toml_with_overrides(&text, &base, overrides)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.etm.validate()?;
        self.stats.validate()?;
        Ok(())
    }

    /// Every configured input path must exist before any computation.
    pub fn check_inputs(&self) -> Result<()> {
        let i = &self.inputs;
        let required = [("posts", Some(&i.posts)), ("labels", Some(&i.labels)), ("lexicon", Some(&i.lexicon))];
        let optional = [
            ("stopwords", i.stopwords.as_ref()),
            ("lemmas", i.lemmas.as_ref()),
            ("stemmer", i.stemmer.as_ref()),
            ("exclude_authors", i.exclude_authors.as_ref()),
        ];
        for (name, p) in required.into_iter().chain(optional) {
            if let Some(p) = p {
                let full = self.resolve(p);
                if !full.is_file() {
                    return Err(Error::Config(format!("inputs.{name}: {} does not exist", full.display())));
                }
            }
        }
        Ok(())
    }
}

fn apply_override(doc: &mut toml::Table, spec: &str) -> Result<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{spec}` must look like key.path=value")))?;
    let value: toml::Value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        // bare words are strings
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let mut parts: Vec<&str> = key.trim().split('.').collect();
    let last = parts.pop().filter(|s| !s.is_empty()).ok_or_else(|| Error::Config(format!("empty key in `{spec}`")))?;
    let mut table = doc;
    for p in parts {
        table = table
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("`{p}` in `{key}` is not a table")))?;
    }
    table.insert(last.to_string(), value);
    Ok(())
}

/// Parsed text resources.
pub struct Resources {
    pub stopwords: StopWords,
    pub lemmas: LemmaTable,
    pub stemmer: SuffixStemmer,
    pub lexicon: PolarityLexicon,
}

impl Resources {
    pub fn load(cfg: &PipelineConfig) -> Result<Self> {
        let i = &cfg.inputs;
        Ok(Resources {
            stopwords: match &i.stopwords {
                Some(p) => StopWords::load(&cfg.resolve(p))?,
                None => StopWords::italian(),
            },
            lemmas: match &i.lemmas {
                Some(p) => LemmaTable::load(&cfg.resolve(p))?,
                None => LemmaTable::default(),
            },
            stemmer: match &i.stemmer {
                Some(p) => SuffixStemmer::load(&cfg.resolve(p))?,
                None => SuffixStemmer::italian(),
            },
            lexicon: PolarityLexicon::load(&cfg.resolve(&i.lexicon))?,
        })
    }

    pub fn language(&self) -> LanguageResources<'_> {
        LanguageResources {
            stopwords: &self.stopwords,
            stemmer: &self.stemmer,
            lexicon: &self.lexicon,
        }
    }

    pub fn preprocessor(&self, fallback: LemmaFallback) -> Preprocessor<'_> {
        Preprocessor {
            stopwords: &self.stopwords,
            lemmas: &self.lemmas,
            stemmer: &self.stemmer as &dyn Stemmer,
            fallback,
        }
    }
}

/// Corpus, labels and the validation findings of both.
pub struct Ingested {
    pub corpus: Corpus,
    pub labels: LabelMap,
    pub report: ValidationReport,
    pub lexical: LexicalIndices,
}

pub fn ingest(cfg: &PipelineConfig) -> Result<Ingested> {
    let i = &cfg.inputs;
    let exclude_authors = match &i.exclude_authors {
        Some(p) => corpus::parse_author_list(&read_resource(&cfg.resolve(p))?),
        None => Default::default(),
    };
    let opts = ParseOptions {
        strict: cfg.strict,
        exclude_authors,
    };
    let (corpus, mut report) = corpus::parse_posts(&read_resource(&cfg.resolve(&i.posts))?, &opts)?;
    let (labels, label_issues) = corpus::parse_labels(&read_resource(&cfg.resolve(&i.labels))?, &corpus, cfg.strict)?;
    report.issues.extend(label_issues);
    let lexical = corpus::lexical_indices(&corpus)?;
    Ok(Ingested {
        corpus,
        labels,
        report,
        lexical,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub posts: usize,
    pub authors: usize,
    pub innovators: usize,
    pub arcs: usize,
    pub vocabulary: usize,
    pub coverage: f64,
    pub k: usize,
    pub group_cluster_chi2: f64,
    pub group_cluster_p: f64,
    pub factors: usize,
    pub significant_metrics: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub config_sha256: String,
    pub config: String,
    pub inputs: Vec<ManifestEntry>,
    pub outputs: Vec<ManifestEntry>,
    pub summary: RunSummary,
}

/// Everything a run produces, keyed by path relative to the output
/// directory.
#[derive(Debug, Clone)]
pub struct ReportBundle {
    pub files: BTreeMap<String, Vec<u8>>,
    pub manifest: Manifest,
    pub metrics: MetricsTable,
}

/// Artifact families and the directory holding each.
pub const ARTIFACT_FAMILIES: [(&str, &str); 7] = [
    ("graph", "graph/"),
    ("metrics", "metrics/"),
    ("etm", "etm/"),
    ("ca", "ca/"),
    ("group_tests", "stats/"),
    ("models", "models/"),
    ("manifest", "manifest.json"),
];

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn entry(path: &str, bytes: &[u8]) -> ManifestEntry {
    ManifestEntry {
        path: path.to_string(),
        bytes: bytes.len(),
        sha256: sha256_hex(bytes),
    }
}

fn validation_csv(report: &ValidationReport) -> String {
    let mut out = String::from("line,kind,message\n");
    for i in &report.issues {
        let kind = serde_json::to_value(i.kind).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        let _ = writeln!(out, "{},{},\"{}\"", i.line, kind, i.message.replace('"', "\"\""));
    }
    out
}

fn lexical_csv(l: &LexicalIndices, excluded_posts: usize) -> String {
    format!(
        "token_count,type_count,hapax_count,type_token_ratio,hapax_pct,excluded_posts\n{},{},{},{},{},{}\n",
        l.token_count,
        l.type_count,
        l.hapax_count,
        num::fmt(l.type_token_ratio),
        num::fmt(l.hapax_pct),
        excluded_posts
    )
}

fn network_options(cfg: &PipelineConfig) -> NetworkOptions {
    NetworkOptions {
        distinctiveness: cfg.network.distinctiveness,
        closeness: cfg.network.closeness,
    }
}

/// Pipeline stages in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Ingest,
    Graph,
    Metrics,
    Etm,
    Ca,
    Stats,
}

/// Runs every stage in memory; nothing is written.
pub fn compute(cfg: &PipelineConfig) -> Result<ReportBundle> {
    match compute_until(cfg, Stage::Stats)? {
        (files, Some(bundle)) => {
            debug_assert_eq!(files.len() + 1, bundle.files.len());
            Ok(bundle)
        }
        _ => unreachable!("the last stage yields a bundle"),
    }
}

/// Runs stages up to and including `last`, returning the artifacts made so
/// far. The full bundle with its manifest comes back only when `last` is
/// the final stage.
pub fn compute_until(cfg: &PipelineConfig, last: Stage) -> Result<(BTreeMap<String, Vec<u8>>, Option<ReportBundle>)> {
    cfg.validate()?;
    cfg.check_inputs()?;
    let res = Resources::load(cfg)?;
    let mut files: BTreeMap<String, Vec<u8>> = BTreeMap::new();
    let mut put = |path: &str, s: String| {
        files.insert(path.to_string(), s.into_bytes());
    };

    let ing = ingest(cfg).map_err(|e| e.in_stage("ingest"))?;
    ing.labels.check_two_groups(&ing.corpus).map_err(|e| e.in_stage("ingest"))?;
    let corpus = &ing.corpus;
    let flags = ing.labels.flags_for(corpus);
    log::info!("ingested {} posts by {} authors", corpus.len(), corpus.authors().len());
    put("metrics/validation.csv", validation_csv(&ing.report));
    put("metrics/lexical.csv", lexical_csv(&ing.lexical, ing.report.excluded_posts));
    if last == Stage::Ingest {
        return Ok((files, None));
    }

    let graph: ReplyGraph = graph::build_graph(
        corpus,
        GraphOptions {
            thread_opener_edges: cfg.graph.thread_opener_edges,
        },
    );
    let gs = graph::graph_summary(&graph);
    put("graph/edges.csv", graph.edges_csv());
    put("graph/nodes.csv", graph.nodes_csv());
    put(
        "graph/summary.csv",
        format!("nodes,arcs,total_weight,isolates\n{},{},{},{}\n", gs.nodes, gs.arcs, gs.total_weight, gs.isolates),
    );
    if last == Stage::Graph {
        return Ok((files, None));
    }

    log::info!("network metrics on {} nodes, {} arcs", gs.nodes, gs.arcs);
    let centralities = network::all_centralities(&graph, &network_options(cfg));
    let profiles = language::language_profiles(corpus, res.language());
    let table = MetricsTable::from_metrics(corpus.authors(), &centralities, &profiles, flags.clone())
        .map_err(|e| e.in_stage("metrics"))?;
    put("metrics/authors.csv", table.to_csv());
    if last == Stage::Metrics {
        return Ok((files, None));
    }

    log::info!("text mining");
    let etm_cfg = &cfg.etm;
    let docs = etm::preprocess(corpus, &res.preprocessor(etm_cfg.lemma_fallback));
    let vocab = etm::select_terms(&docs, &etm_cfg.select_options()).map_err(|e| e.in_stage("etm"))?;
    let tdm = etm::build_tdm(&docs, &vocab);
    let (bisection, scores) = etm::validate_clusters(&tdm, etm_cfg.k_min..=etm_cfg.k_max, cfg.seed, &etm_cfg.cluster_options())
        .map_err(|e| e.in_stage("etm"))?;
    let k = match etm_cfg.k {
        Some(k) => k,
        None => etm::select_k(&scores).map_err(|e| e.in_stage("etm"))?,
    };
    let clustering = bisection.clustering(k);
    let keywords = etm::cluster_keywords(&tdm, &vocab, &clustering, etm_cfg.top_n, etm_cfg.keyword_mode);
    let row_groups: Vec<Option<bool>> = tdm
        .doc_positions()
        .iter()
        .map(|&pos| corpus.author_index(&corpus.posts()[pos].author_id).map(|a| flags[a]))
        .collect();
    let group_table = etm::group_cluster_chi2(&clustering, &row_groups).map_err(|e| e.in_stage("etm"))?;
    put("etm/vocabulary.csv", etm::vocabulary_csv(&vocab));
    put("etm/assignments.csv", etm::assignments_csv(&docs, &tdm, &clustering));
    put("etm/validation.csv", etm::validation_csv(&scores));
    put("etm/coverage.csv", etm::coverage_csv(&tdm, &vocab, k));
    put("etm/keywords.csv", keywords.to_csv());
    put("etm/cluster_shares.csv", keywords.shares_csv());
    put("etm/group_cluster.csv", group_table.to_csv());
    put("etm/group_cluster_test.csv", group_table.test_csv());
    if last == Stage::Etm {
        return Ok((files, None));
    }

    log::info!("correspondence analysis on {} terms × {k} clusters", vocab.len());
    let counts = etm::term_cluster_counts(&tdm, &clustering, etm_cfg.keyword_mode);
    let ct = ContingencyTable::new(
        counts,
        vocab.terms().iter().map(|t| t.term.clone()).collect(),
        (1..=k).map(|c| format!("cluster_{c}")).collect(),
    )
    .map_err(|e| e.in_stage("ca"))?;
    let map = ca::ca(&ct).map_err(|e| e.in_stage("ca"))?;
    let poles = ca::assign_terms(&map);
    put("ca/coordinates.csv", map.coordinates_csv());
    put("ca/contributions.csv", ca::contributions_csv(&poles));
    put("ca/inertia.csv", map.inertia_csv());
    let labels = cfg.ca.axis_labels.as_ref().map(|[a, b]| (a.as_str(), b.as_str()));
    if let Some(svg) = ca::factor_map_svg(&map, labels) {
        put("ca/factor_map.svg", svg);
    }
    if last == Stage::Ca {
        return Ok((files, None));
    }

    log::info!("group statistics");
    let groups = stats::compare_groups(&table, &CompareOptions { alpha: cfg.stats.alpha }).map_err(|e| e.in_stage("stats"))?;
    put("stats/group_tests.csv", groups.to_csv());
    put("stats/group_tests.txt", groups.to_text());
    let models = stats::model_blocks(
        &table,
        &cfg.stats.models,
        &ModelOptions {
            standardize: cfg.stats.standardize,
        },
    )
    .map_err(|e| e.in_stage("models"))?;
    put("models/coefficients.csv", models.coefficients_csv());
    put("models/fit.csv", models.fit_csv());
    put("models/models.txt", models.to_text());

    let summary = RunSummary {
        posts: corpus.len(),
        authors: corpus.authors().len(),
        innovators: flags.iter().filter(|&&f| f).count(),
        arcs: gs.arcs,
        vocabulary: vocab.len(),
        coverage: tdm.coverage(),
        k,
        group_cluster_chi2: group_table.test.statistic,
        group_cluster_p: group_table.test.p_value,
        factors: map.factor_count(),
        significant_metrics: groups.rows.iter().filter(|r| r.significant).map(|r| r.metric.clone()).collect(),
    };
    let config_text = cfg.to_toml();
    let i = &cfg.inputs;
    let mut inputs = Vec::new();
    for p in [Some(&i.posts), Some(&i.labels), Some(&i.lexicon), i.stopwords.as_ref(), i.lemmas.as_ref(), i.stemmer.as_ref(), i.exclude_authors.as_ref()]
        .into_iter()
        .flatten()
    {
        let bytes = std::fs::read(cfg.resolve(p)).map_err(|source| Error::Resource {
            path: cfg.resolve(p),
            source,
        })?;
        inputs.push(entry(&p.to_string_lossy(), &bytes));
    }
    let manifest = Manifest {
        tool: "forumscope".into(),
        version: VERSION.into(),
        seed: cfg.seed,
        config_sha256: sha256_hex(config_text.as_bytes()),
        config: config_text,
        inputs,
        outputs: files.iter().map(|(p, b)| entry(p, b)).collect(),
        summary,
    };
    let mut manifest_json = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Numerical(e.to_string()))?;
    manifest_json.push('\n');
    let mut all = files.clone();
    all.insert("manifest.json".into(), manifest_json.into_bytes());
    Ok((
        files,
        Some(ReportBundle {
            files: all,
            manifest,
            metrics: table,
        }),
    ))
}

/// Writes the bundle into `dir`, replacing an earlier bundle there. Files
/// are staged in a sibling directory first so a failure leaves no partial
/// output behind.
pub fn write_bundle(bundle: &ReportBundle, dir: &Path) -> Result<()> {
    if dir.exists() {
        let is_bundle = dir.join("manifest.json").is_file();
        let empty = dir.read_dir()?.next().is_none();
        if !is_bundle && !empty {
            return Err(Error::Config(format!(
                "output directory {} exists and does not hold a previous bundle",
                dir.display()
            )));
        }
    }
    let name = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "bundle".into());
    let staging = dir.with_file_name(format!(".{name}.partial"));
    if staging.exists() {
        std::fs::remove_dir_all(&staging)?;
    }
    let written = (|| -> Result<()> {
        for (rel, bytes) in &bundle.files {
            let path = staging.join(rel);
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(path, bytes)?;
        }
        Ok(())
    })();
    if let Err(e) = written {
        let _ = std::fs::remove_dir_all(&staging);
        return Err(e);
    }
    if dir.exists() {
        std::fs::remove_dir_all(dir)?;
    }
    std::fs::rename(&staging, dir)?;
    Ok(())
}

/// Writes loose artifacts under `dir`, overwriting same-named files.
pub fn write_files(files: &BTreeMap<String, Vec<u8>>, dir: &Path) -> Result<()> {
    for (rel, bytes) in files {
        let path = dir.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(path, bytes)?;
    }
    Ok(())
}

/// Reads `manifest.json` from a bundle and checks every listed output
/// against its digest.
pub fn verify_bundle(dir: &Path) -> Result<Manifest> {
    let text = read_resource(&dir.join("manifest.json"))?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|e| Error::InvalidInput(format!("manifest.json: {e}")))?;
    let mut bad = Vec::new();
    for e in &manifest.outputs {
        match std::fs::read(dir.join(&e.path)) {
            Ok(bytes) if sha256_hex(&bytes) == e.sha256 => {}
            Ok(_) => bad.push(format!("{} (changed)", e.path)),
            Err(_) => bad.push(format!("{} (missing)", e.path)),
        }
    }
    if !bad.is_empty() {
        return Err(Error::InvalidInput(format!("bundle does not match its manifest: {}", bad.join(", "))));
    }
    Ok(manifest)
}

/// Computes and writes a full bundle, capping worker threads as configured.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<ReportBundle> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let bundle = pool.install(|| compute(cfg))?;
    write_bundle(&bundle, &cfg.resolve(&cfg.output_dir))?;
    Ok(bundle)
}
