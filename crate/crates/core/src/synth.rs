//! Seeded synthetic forum corpora with a planted innovator signal.
//!
//! Text is bag-of-words: each post picks one of three disjoint topic
//! vocabularies and draws content words from it, interleaved with stop-word
//! filler, occasional sentiment words and rare words from a large pool.
//! Every generated word has a stem of its own, so topics survive stemming
//! intact.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, LabelMap, Post};
use crate::error::{Error, Result};
use crate::text::{Stemmer, StopWords, SuffixStemmer};

pub const TOPICS: usize = 3;

/// Behaviour of one author group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GroupProfile {
    /// Probability of exactly one, two and three posts; the rest post four
    /// or more.
    pub post_mix: [f64; 3],
    /// Mean post count of authors with four or more posts.
    pub tail_mean: f64,
    pub mean_words: f64,
    pub mean_sentence_words: f64,
    /// Probability that a post answers an earlier post instead of opening a
    /// thread.
    pub reply_rate: f64,
    /// Probability that a reply goes to the least-answered author among a
    /// sample of candidate posts rather than to a recent post.
    pub low_indegree_targeting: f64,
    /// Per content word, probability of a rare word instead of a topic word.
    pub rare_word_rate: f64,
    /// Per topic word, probability of drawing from the long-word half.
    pub long_word_share: f64,
    /// Per content word, probability of a sentiment word.
    pub sentiment_rate: f64,
    /// Probability that a sentiment word is positive.
    pub positive_share: f64,
    pub topic_weights: [f64; TOPICS],
}

impl Default for GroupProfile {
    fn default() -> Self {
        GroupProfile {
            post_mix: [0.524, 0.192, 0.092],
            tail_mean: 11.8,
            mean_words: 91.0,
            mean_sentence_words: 12.0,
            reply_rate: 0.35,
            low_indegree_targeting: 0.0,
            rare_word_rate: 0.01,
            long_word_share: 0.3,
            sentiment_rate: 0.03,
            positive_share: 0.65,
            topic_weights: [0.45, 0.35, 0.2],
        }
    }
}

impl GroupProfile {
    pub fn innovator_default() -> Self {
        GroupProfile {
            post_mix: [0.1, 0.1, 0.1],
            tail_mean: 20.0,
            mean_words: 140.0,
            mean_sentence_words: 15.0,
            reply_rate: 0.6,
            low_indegree_targeting: 0.8,
            rare_word_rate: 0.05,
            long_word_share: 0.45,
            sentiment_rate: 0.03,
            positive_share: 0.6,
            topic_weights: [0.2, 0.3, 0.5],
        }
    }

    fn validate(&self, name: &str) -> Result<()> {
        let probs = [
            ("reply_rate", self.reply_rate),
            ("low_indegree_targeting", self.low_indegree_targeting),
            ("rare_word_rate", self.rare_word_rate),
            ("long_word_share", self.long_word_share),
            ("sentiment_rate", self.sentiment_rate),
            ("positive_share", self.positive_share),
        ];
        for (field, p) in probs.iter().copied().chain(self.post_mix.iter().map(|&p| ("post_mix", p))) {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name}.{field} = {p} is not a probability")));
            }
        }
        if self.post_mix.iter().sum::<f64>() > 1.0 + 1e-12 {
            return Err(Error::Config(format!("{name}.post_mix sums above 1")));
        }
        if self.rare_word_rate + self.sentiment_rate > 1.0 {
            return Err(Error::Config(format!("{name}: rare_word_rate + sentiment_rate exceeds 1")));
        }
        if self.tail_mean < 4.0 || self.mean_words < 1.0 || self.mean_sentence_words < 1.0 {
            return Err(Error::Config(format!(
                "{name}: tail_mean must be ≥ 4, mean_words and mean_sentence_words ≥ 1"
            )));
        }
        if self.topic_weights.iter().any(|&w| !(w >= 0.0)) || self.topic_weights.iter().sum::<f64>() <= 0.0 {
            return Err(Error::Config(format!("{name}.topic_weights must be nonnegative with a positive sum")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub seed: u64,
    pub authors: usize,
    pub innovators: usize,
    /// Distinct words per topic vocabulary.
    pub topic_vocabulary: usize,
    pub rare_vocabulary: usize,
    pub sentiment_vocabulary: usize,
    /// Share of stop-word filler among the words of a post.
    pub filler_rate: f64,
    /// Probability that a topic word comes from the post's own topic.
    pub topic_purity: f64,
    pub min_words: usize,
    pub others: GroupProfile,
    pub innovator: GroupProfile,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            seed: 1,
            authors: 2000,
            innovators: 20,
            topic_vocabulary: 150,
            rare_vocabulary: 40_000,
            sentiment_vocabulary: 40,
            filler_rate: 0.4,
            topic_purity: 0.85,
            min_words: 8,
            others: GroupProfile::default(),
            innovator: GroupProfile::innovator_default(),
        }
    }
}

impl SynthSpec {
    /// Innovators behave exactly like everyone else.
    pub fn null(authors: usize, innovators: usize, seed: u64) -> Self {
        SynthSpec {
            seed,
            authors,
            innovators,
            innovator: GroupProfile::default(),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.innovators == 0 || self.innovators >= self.authors {
            return Err(Error::Config(format!(
                "need 0 < innovators < authors, got {} of {}",
                self.innovators, self.authors
            )));
        }
        if self.topic_vocabulary < 4 || self.rare_vocabulary < 1 || self.sentiment_vocabulary < 2 {
            return Err(Error::Config("vocabulary sizes too small".into()));
        }
        for (field, p) in [("filler_rate", self.filler_rate), ("topic_purity", self.topic_purity)] {
            if !(0.0..1.0).contains(&p) && !(field == "topic_purity" && p == 1.0) {
                return Err(Error::Config(format!("{field} = {p} out of range")));
            }
        }
        self.others.validate("others")?;
        self.innovator.validate("innovator")
    }
}

/// Planted facts recorded next to a generated corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub spec: SynthSpec,
    pub innovators: Vec<String>,
    /// Topic (0-based) of every post, keyed by post id.
    pub post_topics: BTreeMap<String, usize>,
    pub topic_words: Vec<Vec<String>>,
}

pub struct SynthOutput {
    pub corpus: Corpus,
    pub labels: LabelMap,
    pub truth: GroundTruth,
    /// `token<TAB>polarity` rows for the generated sentiment words.
    pub lexicon: String,
}

const CONSONANTS: &[u8] = b"bcdfglmnprstvz";
const VOWELS: &[u8] = b"aeiou";

struct Vocabulary {
    topics: Vec<[Vec<String>; 2]>,
    rare: Vec<String>,
    positive: Vec<String>,
    negative: Vec<String>,
    filler: Vec<String>,
}

/// Pseudo-Italian words with pairwise distinct stems.
struct WordMaker<'a> {
    stems: HashSet<String>,
    stop: &'a StopWords,
    stemmer: SuffixStemmer,
}

impl WordMaker<'_> {
    fn make(&mut self, rng: &mut ChaCha8Rng, syllables: usize) -> String {
        loop {
            let mut w = String::with_capacity(2 * syllables + 1);
            for _ in 0..syllables {
                w.push(char::from(*CONSONANTS.choose(rng).expect("nonempty")));
                w.push(char::from(*VOWELS.choose(rng).expect("nonempty")));
            }
            if rng.random_bool(0.5) {
                w.push(char::from(*b"lnrst".choose(rng).expect("nonempty")));
            }
            if self.stop.contains(&w) {
                continue;
            }
            let stem = self.stemmer.stem(&w);
            if stem.chars().count() >= 3 && self.stems.insert(stem) {
                return w;
            }
        }
    }
}

fn build_vocabulary(spec: &SynthSpec, rng: &mut ChaCha8Rng) -> Vocabulary {
    let stop = StopWords::italian();
    let mut maker = WordMaker {
        stems: HashSet::new(),
        stop: &stop,
        stemmer: SuffixStemmer::italian(),
    };
    let half = spec.topic_vocabulary / 2;
    let topics = (0..TOPICS)
        .map(|_| {
            // two or three syllables stay within six letters, four exceed it
            let short = (0..spec.topic_vocabulary - half).map(|_| {
                    let syllables = 2 + usize::from(rng.random_bool(0.5));
                    maker.make(rng, syllables)
                })
                .collect();
            let long = (0..half).map(|_| maker.make(rng, 4)).collect();
            [short, long]
        })
        .collect();
    let positive = (0..spec.sentiment_vocabulary / 2).map(|_| maker.make(rng, 3)).collect();
    let negative = (0..spec.sentiment_vocabulary - spec.sentiment_vocabulary / 2).map(|_| maker.make(rng, 3)).collect();
    let rare = (0..spec.rare_vocabulary)
        .map(|_| {
            let syllables = 4 + usize::from(rng.random_bool(0.5));
            maker.make(rng, syllables)
        })
        .collect();
    let mut filler: Vec<String> = stop.iter().filter(|w| w.chars().all(|c| c.is_ascii_lowercase())).map(String::from).collect();
    filler.sort();
    Vocabulary {
        topics,
        rare,
        positive,
        negative,
        filler,
    }
}

/// Zipf-like draw favouring low indices.
fn zipf_index(rng: &mut ChaCha8Rng, n: usize) -> usize {
    let u: f64 = rng.random();
    ((n as f64).powf(u) - 1.0).floor().min(n as f64 - 1.0) as usize
}

fn weighted(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut x = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if x < w {
            return i;
        }
        x -= w;
    }
    weights.len() - 1
}

fn geometric_with_mean(rng: &mut ChaCha8Rng, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Geometric::new(1.0 / (mean + 1.0)).expect("valid probability").sample(rng)
}

fn post_count(rng: &mut ChaCha8Rng, g: &GroupProfile) -> usize {
    match weighted(rng, &[g.post_mix[0], g.post_mix[1], g.post_mix[2], 1.0 - g.post_mix.iter().sum::<f64>()]) {
        k @ 0..=2 => k + 1,
        _ => 4 + geometric_with_mean(rng, g.tail_mean - 4.0) as usize,
    }
}

fn capitalize(w: &str) -> String {
    let mut c = w.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

fn post_text(rng: &mut ChaCha8Rng, spec: &SynthSpec, g: &GroupProfile, vocab: &Vocabulary, topic: usize) -> String {
    let len = spec.min_words + geometric_with_mean(rng, g.mean_words - spec.min_words as f64) as usize;
    let mut out = String::new();
    let mut in_sentence = 0;
    let mut sentence_len = 1 + geometric_with_mean(rng, g.mean_sentence_words - 1.0) as usize;
    for i in 0..len {
        let word: &str = if rng.random_bool(spec.filler_rate) {
            vocab.filler.choose(rng).expect("filler")
        } else {
            let x: f64 = rng.random();
            if x < g.rare_word_rate {
                vocab.rare.choose(rng).expect("rare")
            } else if x < g.rare_word_rate + g.sentiment_rate {
                if rng.random_bool(g.positive_share) {
                    vocab.positive.choose(rng).expect("positive")
                } else {
                    vocab.negative.choose(rng).expect("negative")
                }
            } else {
                let t = if rng.random_bool(spec.topic_purity) {
                    topic
                } else {
                    (topic + 1 + rng.random_range(0..TOPICS - 1)) % TOPICS
                };
                let half = &vocab.topics[t][usize::from(rng.random_bool(g.long_word_share))];
                &half[zipf_index(rng, half.len())]
            }
        };
        if in_sentence == 0 {
            if i > 0 {
                out.push(' ');
            }
            out.push_str(&capitalize(word));
        } else {
            out.push(' ');
            out.push_str(word);
        }
        in_sentence += 1;
        if in_sentence == sentence_len || i + 1 == len {
            out.push(*[b'.', b'.', b'.', b'?', b'!'].choose(rng).expect("punct") as char);
            in_sentence = 0;
            sentence_len = 1 + geometric_with_mean(rng, g.mean_sentence_words - 1.0) as usize;
        }
    }
    out
}

/// Recent posts considered by untargeted replies.
const REPLY_WINDOW: usize = 200;
/// Candidate posts compared by targeted replies.
const TARGET_CANDIDATES: usize = 25;

pub fn generate(spec: &SynthSpec) -> Result<SynthOutput> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let vocab = build_vocabulary(spec, &mut rng);

    let width = spec.authors.to_string().len().max(4);
    let author_ids: Vec<String> = (0..spec.authors).map(|i| format!("u{:0width$}", i + 1)).collect();
    let mut order: Vec<usize> = (0..spec.authors).collect();
    order.shuffle(&mut rng);
    let mut is_innovator = vec![false; spec.authors];
    for &a in &order[..spec.innovators] {
        is_innovator[a] = true;
    }
    let profile = |a: usize| if is_innovator[a] { &spec.innovator } else { &spec.others };

    let mut slots: Vec<usize> = Vec::new();
    for a in 0..spec.authors {
        let n = post_count(&mut rng, profile(a));
        slots.extend(std::iter::repeat_n(a, n));
    }
    slots.shuffle(&mut rng);

    let start: DateTime<Utc> = Utc.with_ymd_and_hms(2019, 1, 1, 8, 0, 0).single().expect("valid date");
    let mut now = start;
    let pwidth = slots.len().to_string().len().max(5);
    let mut posts: Vec<Post> = Vec::with_capacity(slots.len());
    let mut post_author: Vec<usize> = Vec::with_capacity(slots.len());
    let mut in_degree: Vec<HashSet<usize>> = vec![HashSet::new(); spec.authors];
    let mut threads = 0usize;
    let mut post_topics = BTreeMap::new();
    for &a in &slots {
        let g = profile(a);
        now += Duration::seconds(rng.random_range(30..1800));
        let post_id = format!("p{:0pwidth$}", posts.len() + 1);
        let mut parent: Option<usize> = None;
        if !posts.is_empty() && rng.random_bool(g.reply_rate) {
            let targeted = rng.random_bool(g.low_indegree_targeting);
            let pick = |rng: &mut ChaCha8Rng| {
                if targeted {
                    (0..TARGET_CANDIDATES)
                        .map(|_| rng.random_range(0..posts.len()))
                        .filter(|&p| post_author[p] != a)
                        .min_by_key(|&p| (in_degree[post_author[p]].len(), p))
                } else {
                    let lo = posts.len().saturating_sub(REPLY_WINDOW);
                    let p = rng.random_range(lo..posts.len());
                    (post_author[p] != a).then_some(p)
                }
            };
            parent = pick(&mut rng);
        }
        let (thread_id, topic) = match parent {
            Some(p) => {
                in_degree[post_author[p]].insert(a);
                // replies mostly stay on the thread's topic
                let parent_topic = post_topics[&posts[p].post_id];
                let topic = if rng.random_bool(0.8) { parent_topic } else { weighted(&mut rng, &g.topic_weights) };
                (posts[p].thread_id.clone(), topic)
            }
            None => {
                threads += 1;
                (format!("t{:0pwidth$}", threads), weighted(&mut rng, &g.topic_weights))
            }
        };
        let text = post_text(&mut rng, spec, g, &vocab, topic);
        post_topics.insert(post_id.clone(), topic);
        posts.push(Post {
            post_id,
            author_id: author_ids[a].clone(),
            thread_id,
            parent_post_id: parent.map(|p| posts[p].post_id.clone()),
            timestamp: now,
            text,
        });
        post_author.push(a);
    }

    let innovators: Vec<String> = (0..spec.authors).filter(|&a| is_innovator[a]).map(|a| author_ids[a].clone()).collect();
    let corpus = Corpus::new(posts)?;
    let labels = LabelMap::from_innovators(innovators.iter().cloned());

    let mut lexicon = String::new();
    for (words, sign) in [(&vocab.positive, 1.0), (&vocab.negative, -1.0)] {
        for w in words {
            let strength: f64 = rng.random_range(0.2..=1.0);
            let _ = writeln!(lexicon, "{w}\t{}", crate::num::fmt((sign * strength * 100.0).round() / 100.0));
        }
    }
    let topic_words = vocab.topics.iter().map(|[s, l]| s.iter().chain(l).cloned().collect()).collect();
    Ok(SynthOutput {
        corpus,
        labels,
        truth: GroundTruth {
            spec: spec.clone(),
            innovators,
            post_topics,
            topic_words,
        },
        lexicon,
    })
}

/// Stop-word list in the format read back by the pipeline.
pub fn stopwords_file() -> String {
    let stop = StopWords::italian();
    let mut words: Vec<&str> = stop.iter().collect();
    words.sort_unstable();
    let mut out = words.join("\n");
    out.push('\n');
    out
}

/// Writes `posts.jsonl`, `labels.csv`, `lexicon.tsv`, `stopwords.txt` and
/// `truth.json` into `dir`.
pub fn write_files(out: &SynthOutput, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("posts.jsonl"), out.corpus.to_jsonl())?;
    std::fs::write(dir.join("labels.csv"), out.labels.to_csv())?;
    std::fs::write(dir.join("lexicon.tsv"), &out.lexicon)?;
    std::fs::write(dir.join("stopwords.txt"), stopwords_file())?;
    let truth = serde_json::to_string_pretty(&out.truth).map_err(|e| Error::Numerical(e.to_string()))?;
    std::fs::write(dir.join("truth.json"), truth + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{parse_posts, ParseOptions};

    fn small() -> SynthSpec {
        SynthSpec {
            authors: 150,
            innovators: 5,
            rare_vocabulary: 500,
            ..Default::default()
        }
    }

    #[test]
    fn deterministic_for_a_seed() {
        let a = generate(&small()).unwrap();
        let b = generate(&small()).unwrap();
        assert_eq!(a.corpus.to_jsonl(), b.corpus.to_jsonl());
        assert_eq!(a.lexicon, b.lexicon);
        let c = generate(&SynthSpec { seed: 2, ..small() }).unwrap();
        assert_ne!(a.corpus.to_jsonl(), c.corpus.to_jsonl());
    }

    #[test]
    fn passes_strict_ingest() {
        let out = generate(&small()).unwrap();
        let (corpus, report) = parse_posts(&out.corpus.to_jsonl(), &ParseOptions::strict()).unwrap();
        assert!(report.issues.is_empty());
        assert_eq!(corpus.len(), out.corpus.len());
        assert_eq!(corpus.authors().len(), 150);
        assert_eq!(out.labels.innovator_count(), 5);
    }

    #[test]
    fn infeasible_specs_rejected() {
        assert!(generate(&SynthSpec { innovators: 150, ..small() }).is_err());
        let mut bad = small();
        bad.others.reply_rate = 1.5;
        assert!(matches!(generate(&bad), Err(Error::Config(_))));
    }

    #[test]
    fn topic_words_have_distinct_stems() {
        let out = generate(&small()).unwrap();
        let stemmer = SuffixStemmer::italian();
        let mut seen = HashSet::new();
        for w in out.truth.topic_words.iter().flatten() {
            assert!(seen.insert(stemmer.stem(w)), "{w}");
        }
    }
}
