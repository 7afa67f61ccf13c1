//! Per-author language characteristics: word count, words per sentence,
//! share of long words, lexicon sentiment and vocabulary novelty.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::Serialize;

use crate::corpus::Corpus;
use crate::text::{self, PolarityLexicon, Stemmer, StopWords};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Default)]
pub struct LanguageProfile {
    pub word_count: usize,
    pub wps: f64,
    pub six_letter_pct: f64,
    pub sentiment: f64,
    pub novelty: f64,
}

pub const LANGUAGE_COLUMNS: [&str; 5] = ["word_count", "wps", "six_letter_pct", "sentiment", "novelty"];

/// Tokens longer than six letters count as long words.
pub const LONG_WORD_MIN_LETTERS: usize = 7;

pub fn word_count<'a>(posts: impl IntoIterator<Item = &'a str>) -> usize {
    posts.into_iter().map(text::token_count).sum()
}

/// Total words over total sentences; 0 without words.
pub fn wps<'a>(posts: impl IntoIterator<Item = &'a str>) -> f64 {
    let (words, sentences) = posts
        .into_iter()
        .fold((0usize, 0usize), |(w, s), p| (w + text::token_count(p), s + text::sentence_count(p)));
    if sentences == 0 {
        0.0
    } else {
        words as f64 / sentences as f64
    }
}

pub fn six_letter_pct<'a>(posts: impl IntoIterator<Item = &'a str>) -> f64 {
    let (long, total) = posts.into_iter().flat_map(text::tokens).fold((0usize, 0usize), |(l, t), tok| {
        (l + usize::from(text::letter_count(&tok) >= LONG_WORD_MIN_LETTERS), t + 1)
    });
    if total == 0 {
        0.0
    } else {
        100.0 * long as f64 / total as f64
    }
}

/// Mean polarity of the lexicon hits in one post; 0 without hits.
pub fn post_sentiment(post: &str, lexicon: &PolarityLexicon) -> f64 {
    let (sum, hits) = text::tokens(post)
        .filter_map(|t| lexicon.polarity(&t))
        .fold((0.0, 0usize), |(s, n), p| (s + p, n + 1));
    if hits == 0 {
        0.0
    } else {
        sum / hits as f64
    }
}

/// Mean of the per-post scores.
pub fn sentiment<'a>(posts: impl IntoIterator<Item = &'a str>, lexicon: &PolarityLexicon) -> f64 {
    let (sum, n) = posts
        .into_iter()
        .fold((0.0, 0usize), |(s, n), p| (s + post_sentiment(p, lexicon), n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Stop-word-free, stemmed term counts per author and the number of authors
/// using each term.
#[derive(Debug, Clone)]
pub struct NoveltyContext {
    author_terms: Vec<BTreeMap<String, u64>>,
    users: HashMap<String, usize>,
}

impl NoveltyContext {
    pub fn build(corpus: &Corpus, stopwords: &StopWords, stemmer: &dyn Stemmer) -> Self {
        let author_terms: Vec<BTreeMap<String, u64>> = (0..corpus.authors().len())
            .into_par_iter()
            .map(|a| {
                let mut counts = BTreeMap::new();
                for &i in corpus.posts_of(a) {
                    for tok in text::tokens(&corpus.posts()[i].text) {
                        if stopwords.contains(&tok) {
                            continue;
                        }
                        *counts.entry(stemmer.stem(&tok)).or_default() += 1;
                    }
                }
                counts
            })
            .collect();
        Self::from_counts(author_terms)
    }

    /// Builds the context directly from per-author term frequencies.
    pub fn from_counts(author_terms: Vec<BTreeMap<String, u64>>) -> Self {
        let mut users: HashMap<String, usize> = HashMap::new();
        for terms in &author_terms {
            for term in terms.keys() {
                *users.entry(term.clone()).or_default() += 1;
            }
        }
        NoveltyContext { author_terms, users }
    }

    pub fn author_count(&self) -> usize {
        self.author_terms.len()
    }

    pub fn terms_of(&self, author: usize) -> &BTreeMap<String, u64> {
        &self.author_terms[author]
    }

    pub fn users_of(&self, term: &str) -> usize {
        self.users.get(term).copied().unwrap_or(0)
    }

    /// (1/n) Σ_w f_w log10(N / n_w) over the author's vocabulary.
    pub fn novelty(&self, author: usize) -> f64 {
        let terms = &self.author_terms[author];
        let n: u64 = terms.values().sum();
        if n == 0 {
            log::debug!("novelty: author {author} has no processed tokens");
            return 0.0;
        }
        let big_n = self.author_count() as f64;
        let weighted: f64 = terms
            .iter()
            .map(|(w, &f)| f as f64 * (big_n / self.users[w] as f64).log10())
            .sum();
        weighted / n as f64
    }
}

#[derive(Clone, Copy)]
pub struct LanguageResources<'a> {
    pub stopwords: &'a StopWords,
    pub stemmer: &'a dyn Stemmer,
    pub lexicon: &'a PolarityLexicon,
}

/// Profiles for every author, aligned with `corpus.authors()`.
pub fn language_profiles(corpus: &Corpus, res: LanguageResources<'_>) -> Vec<LanguageProfile> {
    let ctx = NoveltyContext::build(corpus, res.stopwords, res.stemmer);
    (0..corpus.authors().len())
        .into_par_iter()
        .map(|a| {
            let texts: Vec<&str> = corpus.posts_of(a).iter().map(|&i| corpus.posts()[i].text.as_str()).collect();
            let wc = word_count(texts.iter().copied());
            if wc == 0 {
                return LanguageProfile::default();
            }
            LanguageProfile {
                word_count: wc,
                wps: wps(texts.iter().copied()),
                six_letter_pct: six_letter_pct(texts.iter().copied()),
                sentiment: sentiment(texts.iter().copied(), res.lexicon),
                novelty: ctx.novelty(a),
            }
        })
        .collect()
}
