//! Text mining over posts: preprocessing, medium-frequency term selection,
//! the term-document matrix, bisecting k-means, validity indices and
//! chi-squared keyword extraction.

mod cluster;
mod keywords;

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use cluster::{
    bisect, bisecting_kmeans, select_k, validate_clusters, validation_csv, Bisection, ClusterOptions, Clustering,
    SplitRecord, ValidationScores,
};
pub use keywords::{
    cluster_keywords, group_cluster_chi2, term_cluster_counts, CountMode, GroupClusterTable, Keyword, KeywordTable,
};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::num;
use crate::text::{self, LemmaTable, Stemmer, StopWords};

/// What a token missing from the lemma table becomes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LemmaFallback {
    #[default]
    Stem,
    Identity,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProcessedDoc {
    pub doc_id: String,
    pub tokens: Vec<String>,
}

#[derive(Clone, Copy)]
pub struct Preprocessor<'a> {
    pub stopwords: &'a StopWords,
    pub lemmas: &'a LemmaTable,
    pub stemmer: &'a dyn Stemmer,
    pub fallback: LemmaFallback,
}

impl Preprocessor<'_> {
    pub fn process(&self, text: &str) -> Vec<String> {
        text::tokens(text)
            .filter(|t| !self.stopwords.contains(t))
            .map(|t| match self.lemmas.get(&t) {
                Some(l) => l.to_string(),
                None => match self.fallback {
                    LemmaFallback::Stem => self.stemmer.stem(&t),
                    LemmaFallback::Identity => t,
                },
            })
            .collect()
    }
}

/// One document per post, in corpus order.
pub fn preprocess(corpus: &Corpus, pre: &Preprocessor<'_>) -> Vec<ProcessedDoc> {
    corpus
        .posts()
        .par_iter()
        .map(|p| ProcessedDoc {
            doc_id: p.post_id.clone(),
            tokens: pre.process(&p.text),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectOptions {
    pub min_doc_freq: usize,
    /// Upper bound on document frequency as a fraction of the document count.
    pub high_freq_cutoff: f64,
}

impl Default for SelectOptions {
    fn default() -> Self {
        SelectOptions {
            min_doc_freq: 5,
            high_freq_cutoff: 0.5,
        }
    }
}

impl SelectOptions {
    pub fn validate(&self) -> Result<()> {
        if self.min_doc_freq < 2 {
            return Err(Error::Config(format!("min_doc_freq must be at least 2, got {}", self.min_doc_freq)));
        }
        if !(self.high_freq_cutoff > 0.0 && self.high_freq_cutoff <= 1.0) {
            return Err(Error::Config(format!(
                "high_freq_cutoff must lie in (0, 1], got {}",
                self.high_freq_cutoff
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Term {
    pub term: String,
    pub frequency: u64,
    pub doc_frequency: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TermVocabulary {
    terms: Vec<Term>,
    index: HashMap<String, usize>,
}

impl TermVocabulary {
    pub fn new(terms: Vec<Term>) -> Self {
        let index = terms.iter().enumerate().map(|(i, t)| (t.term.clone(), i)).collect();
        TermVocabulary { terms, index }
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn term(&self, i: usize) -> &str {
        &self.terms[i].term
    }
}

/// Corpus and document frequency of every lemma.
pub fn term_frequencies(docs: &[ProcessedDoc]) -> BTreeMap<&str, (u64, usize)> {
    let mut freq: BTreeMap<&str, (u64, usize)> = BTreeMap::new();
    for d in docs {
        let mut seen: Vec<&str> = d.tokens.iter().map(String::as_str).collect();
        for t in &seen {
            freq.entry(t).or_default().0 += 1;
        }
        seen.sort_unstable();
        seen.dedup();
        for t in seen {
            freq.get_mut(t).expect("counted above").1 += 1;
        }
    }
    freq
}

/// Keeps lemmas whose document frequency lies in
/// `[min_doc_freq, high_freq_cutoff × #docs]`, ordered by descending corpus
/// frequency, then lexicographically.
pub fn select_terms(docs: &[ProcessedDoc], opts: &SelectOptions) -> Result<TermVocabulary> {
    opts.validate()?;
    let ceiling = opts.high_freq_cutoff * docs.len() as f64;
    let mut terms: Vec<Term> = term_frequencies(docs)
        .into_iter()
        .filter(|&(_, (_, df))| df >= opts.min_doc_freq && df as f64 <= ceiling)
        .map(|(t, (f, df))| Term {
            term: t.to_string(),
            frequency: f,
            doc_frequency: df,
        })
        .collect();
    if terms.is_empty() {
        return Err(Error::EmptyVocabulary {
            min_doc_freq: opts.min_doc_freq,
            high_freq_cutoff: opts.high_freq_cutoff,
        });
    }
    terms.sort_by(|a, b| b.frequency.cmp(&a.frequency).then_with(|| a.term.cmp(&b.term)));
    Ok(TermVocabulary::new(terms))
}

/// Row vector weighting used for clustering.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    #[default]
    Binary,
    Count,
}

/// Sparse term-document matrix over classifiable documents. Each row keeps
/// the raw occurrence count of every selected term it contains, sorted by
/// term index.
#[derive(Debug, Clone, PartialEq)]
pub struct TermDocMatrix {
    rows: Vec<Vec<(usize, u32)>>,
    doc_ids: Vec<String>,
    doc_positions: Vec<usize>,
    unclassified: Vec<String>,
    n_terms: usize,
}

impl TermDocMatrix {
    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn term_count(&self) -> usize {
        self.n_terms
    }

    /// `(term index, occurrences)` pairs of one row.
    pub fn row(&self, i: usize) -> &[(usize, u32)] {
        &self.rows[i]
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    /// Position of each row's document in the preprocessed list.
    pub fn doc_positions(&self) -> &[usize] {
        &self.doc_positions
    }

    pub fn unclassified(&self) -> &[String] {
        &self.unclassified
    }

    pub fn total_docs(&self) -> usize {
        self.rows.len() + self.unclassified.len()
    }

    /// Share of documents with at least one selected term.
    pub fn coverage(&self) -> f64 {
        if self.total_docs() == 0 {
            0.0
        } else {
            self.rows.len() as f64 / self.total_docs() as f64
        }
    }

    /// Unit-norm row under the given weighting, as sparse pairs.
    pub fn unit_row(&self, i: usize, weighting: Weighting) -> Vec<(usize, f64)> {
        let w = |c: u32| match weighting {
            Weighting::Binary => 1.0,
            Weighting::Count => f64::from(c),
        };
        let norm = self.rows[i].iter().map(|&(_, c)| w(c) * w(c)).sum::<f64>().sqrt();
        self.rows[i].iter().map(|&(t, c)| (t, w(c) / norm)).collect()
    }

    /// Binary presence matrix, dense, for inspection and small tests.
    pub fn presence(&self) -> Vec<Vec<u8>> {
        self.rows
            .iter()
            .map(|r| {
                let mut v = vec![0; self.n_terms];
                for &(t, _) in r {
                    v[t] = 1;
                }
                v
            })
            .collect()
    }
}

pub fn build_tdm(docs: &[ProcessedDoc], vocab: &TermVocabulary) -> TermDocMatrix {
    let built: Vec<Vec<(usize, u32)>> = docs
        .par_iter()
        .map(|d| {
            let mut counts: BTreeMap<usize, u32> = BTreeMap::new();
            for t in &d.tokens {
                if let Some(i) = vocab.index_of(t) {
                    *counts.entry(i).or_default() += 1;
                }
            }
            counts.into_iter().collect()
        })
        .collect();
    let mut tdm = TermDocMatrix {
        rows: Vec::new(),
        doc_ids: Vec::new(),
        doc_positions: Vec::new(),
        unclassified: Vec::new(),
        n_terms: vocab.len(),
    };
    for (pos, (d, row)) in docs.iter().zip(built).enumerate() {
        if row.is_empty() {
            tdm.unclassified.push(d.doc_id.clone());
        } else {
            tdm.rows.push(row);
            tdm.doc_ids.push(d.doc_id.clone());
            tdm.doc_positions.push(pos);
        }
    }
    tdm
}

/// `post_id,cluster` for every document in corpus order; unclassified
/// documents have an empty cluster.
pub fn assignments_csv(docs: &[ProcessedDoc], tdm: &TermDocMatrix, clustering: &Clustering) -> String {
    let mut cluster_of = vec![None; docs.len()];
    for (row, &pos) in tdm.doc_positions().iter().enumerate() {
        cluster_of[pos] = Some(clustering.assignment[row] + 1);
    }
    let mut out = String::from("post_id,cluster\n");
    for (d, c) in docs.iter().zip(cluster_of) {
        let _ = writeln!(out, "{},{}", d.doc_id, c.map(|c| c.to_string()).unwrap_or_default());
    }
    out
}

pub fn coverage_csv(tdm: &TermDocMatrix, vocab: &TermVocabulary, k: usize) -> String {
    format!(
        "total_docs,classified,unclassified,coverage,vocabulary,k\n{},{},{},{},{},{}\n",
        tdm.total_docs(),
        tdm.row_count(),
        tdm.unclassified().len(),
        num::fmt(tdm.coverage()),
        vocab.len(),
        k
    )
}

pub fn vocabulary_csv(vocab: &TermVocabulary) -> String {
    let mut out = String::from("term,frequency,doc_frequency\n");
    for t in vocab.terms() {
        let _ = writeln!(out, "{},{},{}", t.term, t.frequency, t.doc_frequency);
    }
    out
}
