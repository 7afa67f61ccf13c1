//! Forum corpus ingestion: posts, label table, validation report and the
//! corpus-level lexical indices.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Post {
    pub post_id: String,
    pub author_id: String,
    pub thread_id: String,
    #[serde(default)]
    pub parent_post_id: Option<String>,
    pub timestamp: DateTime<Utc>,
    pub text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IssueKind {
    Malformed,
    DuplicatePostId,
    UnknownParent,
    CrossThreadParent,
    EmptyText,
    UnknownLabelAuthor,
    ConflictingLabel,
}

impl IssueKind {
    /// Warnings never fail strict mode.
    pub fn is_warning(self) -> bool {
        matches!(self, IssueKind::EmptyText)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Issue {
    pub line: usize,
    pub kind: IssueKind,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
    pub excluded_posts: usize,
}

impl ValidationReport {
    pub fn errors(&self) -> impl Iterator<Item = &Issue> {
        self.issues.iter().filter(|i| !i.kind.is_warning())
    }

    pub fn has_errors(&self) -> bool {
        self.errors().next().is_some()
    }

    pub fn count(&self, kind: IssueKind) -> usize {
        self.issues.iter().filter(|i| i.kind == kind).count()
    }
}

#[derive(Debug, Clone, Default)]
pub struct ParseOptions {
    pub strict: bool,
    /// Posts by these authors are dropped before validation; replies to them
    /// lose their parent link.
    pub exclude_authors: HashSet<String>,
}

impl ParseOptions {
    pub fn strict() -> Self {
        ParseOptions {
            strict: true,
            ..Default::default()
        }
    }
}

/// An immutable, indexed collection of posts.
#[derive(Debug, Clone)]
pub struct Corpus {
    posts: Vec<Post>,
    authors: Vec<String>,
    author_index: HashMap<String, usize>,
    post_index: HashMap<String, usize>,
    threads: BTreeMap<String, Vec<usize>>,
    by_author: Vec<Vec<usize>>,
}

impl Corpus {
    /// Builds the indices. Posts must already satisfy the corpus invariants;
    /// a broken parent link is reported as [`Error::InvalidInput`].
    pub fn new(posts: Vec<Post>) -> Result<Self> {
        let mut post_index = HashMap::with_capacity(posts.len());
        for (i, p) in posts.iter().enumerate() {
            if post_index.insert(p.post_id.clone(), i).is_some() {
                return Err(Error::InvalidInput(format!("duplicate post_id `{}`", p.post_id)));
            }
        }
        for p in &posts {
            if let Some(parent) = &p.parent_post_id {
                match post_index.get(parent) {
                    None => {
                        return Err(Error::InvalidInput(format!(
                            "post `{}` has unknown parent `{parent}`",
                            p.post_id
                        )))
                    }
                    Some(&j) if posts[j].thread_id != p.thread_id => {
                        return Err(Error::InvalidInput(format!(
                            "post `{}`: cross-thread parent `{parent}`",
                            p.post_id
                        )))
                    }
                    _ => {}
                }
            }
        }
        let authors: Vec<String> = posts
            .iter()
            .map(|p| p.author_id.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let author_index: HashMap<String, usize> =
            authors.iter().enumerate().map(|(i, a)| (a.clone(), i)).collect();
        let mut threads: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        let mut by_author = vec![Vec::new(); authors.len()];
        for (i, p) in posts.iter().enumerate() {
            threads.entry(p.thread_id.clone()).or_default().push(i);
            by_author[author_index[&p.author_id]].push(i);
        }
        for list in threads.values_mut() {
            // stable: ties keep input order
            list.sort_by_key(|&i| posts[i].timestamp);
        }
        Ok(Corpus {
            posts,
            authors,
            author_index,
            post_index,
            threads,
            by_author,
        })
    }

    pub fn posts(&self) -> &[Post] {
        &self.posts
    }

    pub fn len(&self) -> usize {
        self.posts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.posts.is_empty()
    }

    /// Distinct author ids in ascending order; the position is the author index.
    pub fn authors(&self) -> &[String] {
        &self.authors
    }

    pub fn author_index(&self, author: &str) -> Option<usize> {
        self.author_index.get(author).copied()
    }

    pub fn post(&self, post_id: &str) -> Option<&Post> {
        self.post_index.get(post_id).map(|&i| &self.posts[i])
    }

    /// Post indices for a thread, timestamp-nondecreasing.
    pub fn thread(&self, thread_id: &str) -> Option<&[usize]> {
        self.threads.get(thread_id).map(Vec::as_slice)
    }

    pub fn threads(&self) -> impl Iterator<Item = (&str, &[usize])> {
        self.threads.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    /// Post indices written by the author at `author` index, in corpus order.
    pub fn posts_of(&self, author: usize) -> &[usize] {
        &self.by_author[author]
    }

    /// The author of the parent post, if the post has a resolvable parent.
    pub fn parent_author(&self, post: &Post) -> Option<usize> {
        let parent = post.parent_post_id.as_ref()?;
        let p = &self.posts[*self.post_index.get(parent)?];
        self.author_index(&p.author_id)
    }

    /// Serializes to the line-delimited JSON input format.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for p in &self.posts {
            out.push_str(&serde_json::to_string(p).expect("post serializes"));
            out.push('\n');
        }
        out
    }
}

/// Parses line-delimited JSON posts.
///
/// Problems are collected into the returned report. In strict mode any
/// non-warning issue turns into [`Error::Validation`]; otherwise the offending
/// record (or link) is dropped and parsing continues.
pub fn parse_posts(input: &str, opts: &ParseOptions) -> Result<(Corpus, ValidationReport)> {
    let mut report = ValidationReport::default();
    let mut posts: Vec<(usize, Post)> = Vec::new();
    let mut excluded_ids: HashSet<String> = HashSet::new();
    let mut seen: HashMap<String, usize> = HashMap::new();

    for (idx, line) in input.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let post: Post = match serde_json::from_str(line) {
            Ok(p) => p,
            Err(e) => {
                report.issues.push(Issue {
                    line: line_no,
                    kind: IssueKind::Malformed,
                    message: format!("malformed record: {e}"),
                });
                continue;
            }
        };
        if post.post_id.is_empty() || post.author_id.is_empty() || post.thread_id.is_empty() {
            report.issues.push(Issue {
                line: line_no,
                kind: IssueKind::Malformed,
                message: "post_id, author_id and thread_id must be nonempty".into(),
            });
            continue;
        }
        if let Some(&first) = seen.get(&post.post_id) {
            report.issues.push(Issue {
                line: line_no,
                kind: IssueKind::DuplicatePostId,
                message: format!(
                    "duplicate post_id `{}` (lines {first} and {line_no})",
                    post.post_id
                ),
            });
            continue;
        }
        seen.insert(post.post_id.clone(), line_no);
        if opts.exclude_authors.contains(&post.author_id) {
            excluded_ids.insert(post.post_id.clone());
            report.excluded_posts += 1;
            continue;
        }
        if post.text.trim().is_empty() {
            report.issues.push(Issue {
                line: line_no,
                kind: IssueKind::EmptyText,
                message: format!("post `{}` has empty text", post.post_id),
            });
        }
        posts.push((line_no, post));
    }

    let thread_of: HashMap<String, String> = posts
        .iter()
        .map(|(_, p)| (p.post_id.clone(), p.thread_id.clone()))
        .collect();
    for (line_no, post) in &mut posts {
        let Some(parent) = post.parent_post_id.clone() else { continue };
        match thread_of.get(&parent) {
            Some(t) if *t == post.thread_id => {}
            Some(_) => {
                report.issues.push(Issue {
                    line: *line_no,
                    kind: IssueKind::CrossThreadParent,
                    message: format!("cross-thread parent: post `{}` replies to `{parent}`", post.post_id),
                });
                post.parent_post_id = None;
            }
            None if excluded_ids.contains(&parent) => post.parent_post_id = None,
            None => {
                report.issues.push(Issue {
                    line: *line_no,
                    kind: IssueKind::UnknownParent,
                    message: format!("post `{}` replies to unknown post `{parent}`", post.post_id),
                });
                post.parent_post_id = None;
            }
        }
    }

    if opts.strict && report.has_errors() {
        return Err(Error::Validation(report.errors().cloned().collect()));
    }
    let corpus = Corpus::new(posts.into_iter().map(|(_, p)| p).collect())?;
    Ok((corpus, report))
}

/// Author → innovator flag. Authors without a row are non-innovators.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabelMap {
    flags: HashMap<String, bool>,
}

impl LabelMap {
    pub fn from_innovators<I, S>(ids: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        LabelMap {
            flags: ids.into_iter().map(|s| (s.into(), true)).collect(),
        }
    }

    pub fn is_innovator(&self, author: &str) -> bool {
        self.flags.get(author).copied().unwrap_or(false)
    }

    pub fn innovator_count(&self) -> usize {
        self.flags.values().filter(|&&f| f).count()
    }

    pub fn labeled_count(&self) -> usize {
        self.flags.len()
    }

    /// Innovator flags aligned with `corpus.authors()`.
    pub fn flags_for(&self, corpus: &Corpus) -> Vec<bool> {
        corpus.authors().iter().map(|a| self.is_innovator(a)).collect()
    }

    /// Group statistics need both an innovator and a non-innovator.
    pub fn check_two_groups(&self, corpus: &Corpus) -> Result<()> {
        let flags = self.flags_for(corpus);
        let k = flags.iter().filter(|&&f| f).count();
        if k == 0 || k == flags.len() {
            return Err(Error::InvalidInput(format!(
                "group statistics need at least one innovator and one non-innovator ({k} of {} authors flagged)",
                flags.len()
            )));
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut rows: Vec<_> = self.flags.iter().collect();
        rows.sort();
        let mut out = String::from("author_id,innovator\n");
        for (a, f) in rows {
            out.push_str(&format!("{a},{}\n", u8::from(*f)));
        }
        out
    }
}

fn parse_flag(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "1" | "true" => Some(true),
        "0" | "false" => Some(false),
        _ => None,
    }
}

/// Parses the two-column label table (header row required unless the input
/// is empty).
pub fn parse_labels(input: &str, corpus: &Corpus, strict: bool) -> Result<(LabelMap, Vec<Issue>)> {
    let mut issues = Vec::new();
    let mut flags: HashMap<String, bool> = HashMap::new();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(input.as_bytes());
    for (i, rec) in reader.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::Malformed {
            line,
            message: e.to_string(),
        })?;
        if rec.len() != 2 {
            return Err(Error::Malformed {
                line,
                message: format!("expected 2 columns, found {}", rec.len()),
            });
        }
        let author = rec[0].to_string();
        let flag = parse_flag(&rec[1]).ok_or_else(|| Error::Malformed {
            line,
            message: format!("flag `{}` is not one of 0, 1, true, false", &rec[1]),
        })?;
        if corpus.author_index(&author).is_none() {
            issues.push(Issue {
                line,
                kind: IssueKind::UnknownLabelAuthor,
                message: format!("label for unknown author `{author}`"),
            });
            continue;
        }
        if let Some(prev) = flags.insert(author.clone(), flag) {
            if prev != flag {
                issues.push(Issue {
                    line,
                    kind: IssueKind::ConflictingLabel,
                    message: format!("conflicting labels for `{author}`; keeping the last"),
                });
            }
        }
    }
    for issue in &issues {
        log::warn!("labels: {issue}");
    }
    if strict && !issues.is_empty() {
        return Err(Error::Validation(issues));
    }
    Ok((LabelMap { flags }, issues))
}

/// Reads an author exclusion list: one author id per line.
pub fn parse_author_list(input: &str) -> HashSet<String> {
    input
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LexicalIndices {
    pub token_count: usize,
    pub type_count: usize,
    pub hapax_count: usize,
    pub type_token_ratio: f64,
    pub hapax_pct: f64,
}

/// Token, type and hapax counts over raw (uncleaned) tokens.
pub fn lexical_indices(corpus: &Corpus) -> Result<LexicalIndices> {
    if corpus.is_empty() {
        return Err(Error::InvalidInput("lexical indices need a nonempty corpus".into()));
    }
    let mut freq: HashMap<String, usize> = HashMap::new();
    let mut token_count = 0;
    for p in corpus.posts() {
        for t in text::tokens(&p.text) {
            token_count += 1;
            *freq.entry(t).or_default() += 1;
        }
    }
    let type_count = freq.len();
    let hapax_count = freq.values().filter(|&&c| c == 1).count();
    Ok(LexicalIndices {
        token_count,
        type_count,
        hapax_count,
        type_token_ratio: if token_count == 0 { 0.0 } else { type_count as f64 / token_count as f64 },
        hapax_pct: if type_count == 0 { 0.0 } else { hapax_count as f64 / type_count as f64 },
    })
}
