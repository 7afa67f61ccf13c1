use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use forumscope::ca::{self, ContingencyTable};
use forumscope::pipeline::{self, PipelineConfig, Stage};
use forumscope::stats::{self, CompareOptions, MetricsTable, ModelOptions};
use forumscope::synth::{self, SynthSpec};
use forumscope::{Error, Result};

#[derive(Parser)]
#[command(name = "forumscope", version, about = "Innovator profiling for forum corpora")]
struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate posts and labels; write validation and lexical tables.
    Ingest(StageArgs),
    /// Build the reply network; write edge, node and summary tables.
    Graph(StageArgs),
    /// Per-author network and language metrics.
    Metrics(StageArgs),
    /// Text mining: vocabulary, clusters, keywords and validity indices.
    Etm(StageArgs),
    /// Correspondence analysis of a labeled count table.
    Ca(CaArgs),
    /// Group tests and logistic models on a per-author metrics table.
    Stats(StatsArgs),
    /// Verify a bundle against its manifest and print its reports.
    Report(ReportArgs),
    /// Generate a synthetic corpus with planted innovators and a config to run it.
    Synth(SynthArgs),
    /// Full pipeline from a config file.
    Run(StageArgs),
}

#[derive(Args)]
struct StageArgs {
    /// Pipeline config (TOML).
    #[arg(short, long)]
    config: PathBuf,
    /// Override a config key, e.g. `--set etm.k_max=8`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory; defaults to the config's output_dir.
    #[arg(short, long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Reject the whole input on the first invalid record.
    #[arg(long)]
    strict: bool,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct CaArgs {
    /// CSV with header `label,col1,col2,…` and one row per table row.
    #[arg(long)]
    counts: PathBuf,
    #[arg(short, long)]
    out: PathBuf,
    /// Names for factors 1 and 2 on the map, e.g. `--axis-labels rational,emotional`.
    #[arg(long, value_parser = label_pair)]
    axis_labels: Option<(String, String)>,
}

fn label_pair(s: &str) -> std::result::Result<(String, String), String> {
    match s.split_once(',') {
        Some((a, b)) if !a.is_empty() && !b.is_empty() && !b.contains(',') => Ok((a.into(), b.into())),
        _ => Err(format!("expected two comma-separated labels, got `{s}`")),
    }
}

#[derive(Args)]
struct StatsArgs {
    /// Metrics table as written by `metrics` (author_id, metric columns, innovator).
    #[arg(long)]
    metrics: PathBuf,
    #[arg(short, long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Z-score predictors before fitting.
    #[arg(long)]
    standardize: bool,
}

#[derive(Args)]
struct ReportArgs {
    /// Bundle directory written by `run`.
    bundle: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(short, long)]
    out: PathBuf,
    /// Generator spec (TOML); flags below override it.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    authors: Option<usize>,
    #[arg(long)]
    innovators: Option<usize>,
    /// Give innovators the same behaviour as everyone else.
    #[arg(long)]
    null: bool,
}

fn load_config(args: &StageArgs) -> Result<PipelineConfig> {
    let mut overrides = args.overrides.clone();
    if let Some(seed) = args.seed {
        overrides.push(format!("seed={seed}"));
    }
    if args.strict {
        overrides.push("strict=true".into());
    }
    if let Some(t) = args.threads {
        overrides.push(format!("threads={t}"));
    }
    let mut cfg = PipelineConfig::load_with_overrides(&args.config, &overrides)?;
    if let Some(out) = &args.out {
        cfg.output_dir = std::path::absolute(out)?;
    }
    Ok(cfg)
}

fn run_stage(args: &StageArgs, stage: Stage) -> Result<()> {
    let cfg = load_config(args)?;
    let pool = rayon_pool(cfg.threads)?;
    let (files, _) = pool.install(|| pipeline::compute_until(&cfg, stage))?;
    let out = cfg.resolve(&cfg.output_dir);
    pipeline::write_files(&files, &out)?;
    for name in files.keys() {
        println!("{}", out.join(name).display());
    }
    Ok(())
}

fn rayon_pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

fn run_full(args: &StageArgs) -> Result<()> {
    let cfg = load_config(args)?;
    let bundle = pipeline::run_pipeline(&cfg)?;
    let s = &bundle.manifest.summary;
    println!("bundle   {}", cfg.resolve(&cfg.output_dir).display());
    println!("posts    {}  authors {}  innovators {}", s.posts, s.authors, s.innovators);
    println!("arcs     {}", s.arcs);
    println!("clusters k={}  coverage {:.3}  vocabulary {}", s.k, s.coverage, s.vocabulary);
    println!("group × cluster chi2 {:.3}  p {:.3e}", s.group_cluster_chi2, s.group_cluster_p);
    println!("significant metrics: {}", s.significant_metrics.join(", "));
    Ok(())
}

fn run_ca(args: &CaArgs) -> Result<()> {
    let text = read(&args.counts)?;
    let table = ContingencyTable::from_csv(&text)?;
    let map = ca::ca(&table)?;
    let poles = ca::assign_terms(&map);
    let mut files = BTreeMap::new();
    files.insert("coordinates.csv".to_string(), map.coordinates_csv().into_bytes());
    files.insert("inertia.csv".to_string(), map.inertia_csv().into_bytes());
    files.insert("contributions.csv".to_string(), ca::contributions_csv(&poles).into_bytes());
    let labels = args.axis_labels.as_ref().map(|(a, b)| (a.as_str(), b.as_str()));
    match ca::factor_map_svg(&map, labels) {
        Some(svg) => {
            files.insert("factor_map.svg".to_string(), svg.into_bytes());
        }
        None => eprintln!("no factor map: the table has no inertia (rows and columns are independent)"),
    }
    pipeline::write_files(&files, &args.out)?;
    for (i, share) in map.shares().iter().enumerate() {
        println!("factor {}  inertia share {:.4}", i + 1, share);
    }
    Ok(())
}

fn run_stats(args: &StatsArgs) -> Result<()> {
    let table = MetricsTable::from_csv(&read(&args.metrics)?)?;
    let groups = stats::compare_groups(&table, &CompareOptions { alpha: args.alpha })?;
    let models = stats::model_blocks(
        &table,
        &stats::default_blocks(),
        &ModelOptions {
            standardize: args.standardize,
        },
    )?;
    let mut files = BTreeMap::new();
    files.insert("group_tests.csv".to_string(), groups.to_csv().into_bytes());
    files.insert("group_tests.txt".to_string(), groups.to_text().into_bytes());
    files.insert("coefficients.csv".to_string(), models.coefficients_csv().into_bytes());
    files.insert("fit.csv".to_string(), models.fit_csv().into_bytes());
    files.insert("models.txt".to_string(), models.to_text().into_bytes());
    pipeline::write_files(&files, &args.out)?;
    print!("{}", groups.to_text());
    Ok(())
}

fn run_report(args: &ReportArgs) -> Result<()> {
    let manifest = pipeline::verify_bundle(&args.bundle)?;
    println!(
        "{} {}  seed {}  config {}",
        manifest.tool,
        manifest.version,
        manifest.seed,
        &manifest.config_sha256[..12]
    );
    println!("{} outputs verified", manifest.outputs.len());
    for part in ["stats/group_tests.txt", "models/models.txt"] {
        println!();
        print!("{}", read(&args.bundle.join(part))?);
    }
    Ok(())
}

fn run_synth(args: &SynthArgs) -> Result<()> {
    let mut spec = match &args.spec {
        Some(p) => toml::from_str::<SynthSpec>(&read(p)?).map_err(|e| Error::Config(e.to_string()))?,
        None => SynthSpec::default(),
    };
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    if let Some(n) = args.authors {
        spec.authors = n;
    }
    if let Some(n) = args.innovators {
        spec.innovators = n;
    }
    if args.null {
        spec.innovator = spec.others.clone();
    }
    let out = synth::generate(&spec)?;
    synth::write_files(&out, &args.out)?;
    let mut cfg = PipelineConfig::for_inputs(&args.out, Path::new("bundle"));
    cfg.seed = spec.seed;
    std::fs::write(args.out.join("config.toml"), cfg.to_toml())?;
    println!(
        "{} posts by {} authors ({} innovators) in {}",
        out.corpus.len(),
        out.corpus.authors().len(),
        spec.innovators,
        args.out.display()
    );
    println!("run it with: forumscope run --config {}", args.out.join("config.toml").display());
    Ok(())
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Resource {
        path: path.to_path_buf(),
        source,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match &cli.command {
        Command::Ingest(a) => run_stage(a, Stage::Ingest),
        Command::Graph(a) => run_stage(a, Stage::Graph),
        Command::Metrics(a) => run_stage(a, Stage::Metrics),
        Command::Etm(a) => run_stage(a, Stage::Etm),
        Command::Ca(a) => run_ca(a),
        Command::Stats(a) => run_stats(a),
        Command::Report(a) => run_report(a),
        Command::Synth(a) => run_synth(a),
        Command::Run(a) => run_full(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let Some(hint) = e.hint() {
                eprintln!("hint: {hint}");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
