use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{Clustering, TermDocMatrix, TermVocabulary};
use crate::error::{Error, Result};
use crate::num;
use crate::stats::hypothesis::{chi2_2x2, chi2_contingency, ChiSquare};

/// What the keyword and correspondence tables count.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountMode {
    /// Term occurrences.
    #[default]
    Occurrences,
    /// Documents containing the term.
    Documents,
}

/// Term × cluster count matrix.
pub fn term_cluster_counts(tdm: &TermDocMatrix, clustering: &Clustering, mode: CountMode) -> Vec<Vec<f64>> {
    let mut counts = vec![vec![0.0; clustering.k]; tdm.term_count()];
    for (i, &c) in clustering.assignment.iter().enumerate() {
        for &(t, n) in tdm.row(i) {
            counts[t][c] += match mode {
                CountMode::Occurrences => f64::from(n),
                CountMode::Documents => 1.0,
            };
        }
    }
    counts
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Keyword {
    pub rank: usize,
    pub lemma: String,
    pub chi2: f64,
    pub in_count: f64,
    pub out_count: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterKeywords {
    /// 1-based cluster label.
    pub cluster: usize,
    pub messages: usize,
    /// Share of classified messages.
    pub share: f64,
    pub keywords: Vec<Keyword>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KeywordTable {
    pub mode: CountMode,
    pub clusters: Vec<ClusterKeywords>,
}

/// Per cluster, the `top_n` over-represented terms ranked by the 2×2
/// chi-squared of (term, rest) × (cluster, elsewhere).
pub fn cluster_keywords(
    tdm: &TermDocMatrix,
    vocab: &TermVocabulary,
    clustering: &Clustering,
    top_n: usize,
    mode: CountMode,
) -> KeywordTable {
    let counts = term_cluster_counts(tdm, clustering, mode);
    let totals: Vec<f64> = match mode {
        CountMode::Occurrences => (0..clustering.k).map(|c| counts.iter().map(|r| r[c]).sum()).collect(),
        CountMode::Documents => clustering.sizes.iter().map(|&s| s as f64).collect(),
    };
    let grand: f64 = totals.iter().sum();
    let classified = clustering.assignment.len() as f64;
    let clusters = (0..clustering.k)
        .map(|c| {
            let mut scored: Vec<(usize, f64, f64, f64)> = counts
                .iter()
                .enumerate()
                .filter_map(|(t, row)| {
                    let term_total: f64 = row.iter().sum();
                    let a = row[c];
                    let b = totals[c] - a;
                    let cc = term_total - a;
                    let d = grand - totals[c] - cc;
                    // over-represented: a / (a + b) > cc / (cc + d)
                    let over = a * (cc + d) > cc * (a + b);
                    over.then(|| (t, chi2_2x2(a, b, cc, d), a, cc))
                })
                .collect();
            scored.sort_by(|x, y| y.1.total_cmp(&x.1).then_with(|| vocab.term(x.0).cmp(vocab.term(y.0))));
            let keywords = scored
                .into_iter()
                .take(top_n)
                .enumerate()
                .map(|(r, (t, chi2, a, cc))| Keyword {
                    rank: r + 1,
                    lemma: vocab.term(t).to_string(),
                    chi2,
                    in_count: a,
                    out_count: cc,
                })
                .collect();
            ClusterKeywords {
                cluster: c + 1,
                messages: clustering.sizes[c],
                share: clustering.sizes[c] as f64 / classified,
                keywords,
            }
        })
        .collect();
    KeywordTable { mode, clusters }
}

impl KeywordTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("cluster,rank,lemma,chi2,in_count,out_count\n");
        for c in &self.clusters {
            for k in &c.keywords {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    c.cluster,
                    k.rank,
                    k.lemma,
                    num::fmt(k.chi2),
                    num::fmt(k.in_count),
                    num::fmt(k.out_count)
                );
            }
        }
        out
    }

    pub fn shares_csv(&self) -> String {
        let mut out = String::from("cluster,messages,share\n");
        for c in &self.clusters {
            let _ = writeln!(out, "{},{},{}", c.cluster, c.messages, num::fmt(c.share));
        }
        out
    }
}

/// Innovator/other × cluster message counts and their chi-squared test.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupClusterTable {
    /// Row 0 innovators, row 1 others.
    pub counts: Vec<Vec<f64>>,
    pub test: ChiSquare,
}

/// `groups[i]` is the innovator flag of the author of TDM row i, or `None`
/// when the author is unlabeled.
pub fn group_cluster_chi2(clustering: &Clustering, groups: &[Option<bool>]) -> Result<GroupClusterTable> {
    if groups.len() != clustering.assignment.len() {
        return Err(Error::InvalidInput("one group entry per classified document required".into()));
    }
    let mut counts = vec![vec![0.0; clustering.k]; 2];
    for (&c, g) in clustering.assignment.iter().zip(groups) {
        if let Some(innovator) = g {
            counts[usize::from(!innovator)][c] += 1.0;
        }
    }
    for (row, name) in counts.iter().zip(["innovators", "others"]) {
        if row.iter().sum::<f64>() == 0.0 {
            return Err(Error::DegenerateTable(format!("no classified message from {name}")));
        }
    }
    let test = chi2_contingency(&counts)?;
    Ok(GroupClusterTable { counts, test })
}

impl GroupClusterTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("group");
        for c in 0..self.counts[0].len() {
            let _ = write!(out, ",cluster_{}", c + 1);
        }
        out.push('\n');
        for (row, name) in self.counts.iter().zip(["innovators", "others"]) {
            out.push_str(name);
            for v in row {
                let _ = write!(out, ",{}", num::fmt(*v));
            }
            out.push('\n');
        }
        out
    }

    pub fn test_csv(&self) -> String {
        format!(
            "chi2,df,p_value\n{},{},{}\n",
            num::fmt(self.test.statistic),
            self.test.df,
            num::fmt(self.test.p_value)
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::etm::{build_tdm, ProcessedDoc, Term};

    fn setup(docs: &[&[&str]], assignment: Vec<usize>) -> (TermDocMatrix, TermVocabulary, Clustering) {
        let docs: Vec<ProcessedDoc> = docs
            .iter()
            .enumerate()
            .map(|(i, t)| ProcessedDoc {
                doc_id: format!("d{i}"),
                tokens: t.iter().map(|s| s.to_string()).collect(),
            })
            .collect();
        let mut terms: Vec<String> = docs.iter().flat_map(|d| d.tokens.clone()).collect();
        terms.sort();
        terms.dedup();
        let vocab = TermVocabulary::new(
            terms
                .into_iter()
                .map(|term| Term {
                    term,
                    frequency: 1,
                    doc_frequency: 1,
                })
                .collect(),
        );
        let tdm = build_tdm(&docs, &vocab);
        let k = assignment.iter().max().unwrap() + 1;
        let mut sizes = vec![0; k];
        assignment.iter().for_each(|&c| sizes[c] += 1);
        let clustering = Clustering {
            k,
            assignment,
            sizes,
            centroids: Vec::new(),
            coverage: 1.0,
            splits: Vec::new(),
        };
        (tdm, vocab, clustering)
    }

    #[test]
    fn exclusive_term_ranks_first() {
        let (tdm, vocab, c) = setup(
            &[&["solo", "comune"], &["solo", "comune", "misto"], &["comune", "misto"], &["comune", "altro"]],
            vec![0, 0, 1, 1],
        );
        let t = cluster_keywords(&tdm, &vocab, &c, 10, CountMode::Occurrences);
        assert_eq!(t.clusters[0].keywords[0].lemma, "solo");
        assert_eq!(t.clusters[0].keywords[0].out_count, 0.0);
        // ranks descend by chi2
        for cl in &t.clusters {
            assert!(cl.keywords.windows(2).all(|w| w[0].chi2 >= w[1].chi2));
        }
    }

    #[test]
    fn group_table_errors_on_empty_group() {
        let (_, _, c) = setup(&[&["a"], &["b"]], vec![0, 1]);
        assert!(group_cluster_chi2(&c, &[Some(false), Some(false)]).is_err());
        let ok = group_cluster_chi2(&c, &[Some(true), Some(false)]).unwrap();
        assert_eq!(ok.counts, [vec![1.0, 0.0], vec![0.0, 1.0]]);
    }
}
