//! Tokenization, sentence segmentation and the lexical resources shared by the
//! language metrics and the text-mining pipeline.
//!
//! A token is a maximal run of alphabetic characters, lowercased. Apostrophes,
//! digits, punctuation and whitespace all separate tokens, so `"l'azienda"`
//! yields `["l", "azienda"]`.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use crate::error::{read_resource, Error, Result};

const DEFAULT_STOPWORDS: &str = include_str!("resources/italian.stop");
const DEFAULT_STEM_RULES: &str = include_str!("resources/italian.stem");

/// Iterates over the lowercased tokens of `text`.
pub fn tokens(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphabetic())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
}

pub fn token_count(text: &str) -> usize {
    text.split(|c: char| !c.is_alphabetic())
        .filter(|t| !t.is_empty())
        .count()
}

fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '?' | '!' | '…')
}

/// Number of sentences in `text` that contain at least one token.
///
/// A sentence ends at a run of `.`, `?`, `!` or `…` followed by whitespace or
/// the end of the text. Text without terminal punctuation is one sentence.
pub fn sentence_count(text: &str) -> usize {
    let chars: Vec<char> = text.chars().collect();
    let mut count = 0;
    let mut has_word = false;
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if is_terminator(c) {
            let mut j = i;
            while j < chars.len() && is_terminator(chars[j]) {
                j += 1;
            }
            if j == chars.len() || chars[j].is_whitespace() {
                if has_word {
                    count += 1;
                }
                has_word = false;
            }
            i = j;
            continue;
        }
        if c.is_alphabetic() {
            has_word = true;
        }
        i += 1;
    }
    if has_word {
        count += 1;
    }
    count
}

/// Number of alphabetic characters in a token; tokens are alphabetic only,
/// so this is the character count.
pub fn letter_count(token: &str) -> usize {
    token.chars().filter(|c| c.is_alphabetic()).count()
}

#[derive(Debug, Clone, Default)]
pub struct StopWords {
    words: HashSet<String>,
}

impl StopWords {
    pub fn italian() -> Self {
        Self::parse(DEFAULT_STOPWORDS)
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// One token per line; blank lines and `#` comments are skipped.
    pub fn parse(input: &str) -> Self {
        let words = input
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_lowercase)
            .collect();
        StopWords { words }
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(Self::parse(&read_resource(path)?))
    }

    pub fn contains(&self, token: &str) -> bool {
        self.words.contains(token)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(String::as_str)
    }
}

pub trait Stemmer: Send + Sync {
    fn stem(&self, word: &str) -> String;
}

/// Leaves words untouched.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityStemmer;

impl Stemmer for IdentityStemmer {
    fn stem(&self, word: &str) -> String {
        word.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Region {
    Any,
    Rv,
    R1,
    R2,
}

#[derive(Debug, Clone)]
struct SuffixRule {
    suffix: Vec<char>,
    replacement: Vec<char>,
    region: Region,
    after: Vec<Vec<char>>,
}

#[derive(Debug, Clone)]
struct Step {
    id: String,
    rules: Vec<SuffixRule>,
    skip_if_changed: Vec<String>,
}

/// A table-driven suffix-stripping stemmer in the style of the Snowball
/// Romance-language stemmers (RV/R1/R2 regions, ordered rule steps).
#[derive(Debug, Clone)]
pub struct SuffixStemmer {
    vowels: Vec<char>,
    semivowels: Vec<char>,
    normalize: Vec<(char, char)>,
    steps: Vec<Step>,
}

impl SuffixStemmer {
    pub fn italian() -> Self {
        Self::parse(DEFAULT_STEM_RULES).expect("bundled stemmer table is valid")
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_resource(path)?)
    }

    pub fn parse(input: &str) -> Result<Self> {
        let mut stemmer = SuffixStemmer {
            vowels: Vec::new(),
            semivowels: Vec::new(),
            normalize: Vec::new(),
            steps: Vec::new(),
        };
        let mut skips: Vec<(String, String)> = Vec::new();
        for (idx, raw) in input.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |message: &str| Error::Malformed {
                line: idx + 1,
                message: message.to_string(),
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            match fields[0] {
                "@vowels" => stemmer.vowels = fields.get(1).ok_or_else(|| bad("missing vowels"))?.chars().collect(),
                "@semivowels" => {
                    stemmer.semivowels = fields.get(1).ok_or_else(|| bad("missing semivowels"))?.chars().collect()
                }
                "@normalize" => {
                    for pair in &fields[1..] {
                        let mut it = pair.split('=');
                        let (Some(a), Some(b)) = (it.next(), it.next()) else {
                            return Err(bad("normalize expects from=to"));
                        };
                        let (mut a, mut b) = (a.chars(), b.chars());
                        match (a.next(), b.next()) {
                            (Some(x), Some(y)) => stemmer.normalize.push((x, y)),
                            _ => return Err(bad("normalize expects single letters")),
                        }
                    }
                }
                "@after-change" => {
                    if fields.len() != 3 {
                        return Err(bad("@after-change expects two step ids"));
                    }
                    skips.push((fields[1].to_string(), fields[2].to_string()));
                }
                d if d.starts_with('@') => return Err(bad("unknown directive")),
                step_id => {
                    if fields.len() < 4 {
                        return Err(bad("rule expects: step region suffix replacement [after]"));
                    }
                    let region = match fields[1] {
                        "RV" => Region::Rv,
                        "R1" => Region::R1,
                        "R2" => Region::R2,
                        "ANY" => Region::Any,
                        _ => return Err(bad("region must be RV, R1, R2 or ANY")),
                    };
                    let replacement = if fields[3] == "-" { Vec::new() } else { fields[3].chars().collect() };
                    let after = fields
                        .get(4)
                        .map(|a| a.split(',').map(|s| s.chars().collect()).collect())
                        .unwrap_or_default();
                    let rule = SuffixRule {
                        suffix: fields[2].chars().collect(),
                        replacement,
                        region,
                        after,
                    };
                    match stemmer.steps.iter_mut().find(|s| s.id == step_id) {
                        Some(step) => step.rules.push(rule),
                        None => stemmer.steps.push(Step {
                            id: step_id.to_string(),
                            rules: vec![rule],
                            skip_if_changed: Vec::new(),
                        }),
                    }
                }
            }
        }
        for (step, other) in skips {
            if let Some(s) = stemmer.steps.iter_mut().find(|s| s.id == step) {
                s.skip_if_changed.push(other);
            }
        }
        for step in &mut stemmer.steps {
            step.rules.sort_by(|a, b| {
                (b.suffix.len() + longest(&b.after)).cmp(&(a.suffix.len() + longest(&a.after)))
            });
        }
        Ok(stemmer)
    }

    fn is_vowel(&self, w: &[char], i: usize) -> bool {
        let c = w[i];
        if !self.vowels.contains(&c) {
            return false;
        }
        if self.semivowels.contains(&c) && i > 0 && i + 1 < w.len() {
            let flanked = self.vowels.contains(&w[i - 1]) && self.vowels.contains(&w[i + 1]);
            return !flanked;
        }
        true
    }

    /// Start of the region after the first non-vowel following a vowel, at or
    /// after `from`.
    fn r_start(&self, w: &[char], from: usize) -> usize {
        let mut i = from.max(1);
        while i < w.len() {
            if !self.is_vowel(w, i) && self.is_vowel(w, i - 1) && i - 1 >= from {
                return i + 1;
            }
            i += 1;
        }
        w.len()
    }

    fn rv_start(&self, w: &[char]) -> usize {
        if w.len() < 2 {
            return w.len();
        }
        if !self.is_vowel(w, 1) {
            (2..w.len()).find(|&i| self.is_vowel(w, i)).map(|i| i + 1).unwrap_or(w.len())
        } else if self.is_vowel(w, 0) {
            (2..w.len()).find(|&i| !self.is_vowel(w, i)).map(|i| i + 1).unwrap_or(w.len())
        } else {
            3.min(w.len())
        }
    }
}

fn longest(after: &[Vec<char>]) -> usize {
    after.iter().map(Vec::len).max().unwrap_or(0)
}

impl Stemmer for SuffixStemmer {
    fn stem(&self, word: &str) -> String {
        let mut w: Vec<char> = word
            .chars()
            .map(|c| self.normalize.iter().find(|(a, _)| *a == c).map(|(_, b)| *b).unwrap_or(c))
            .collect();
        let mut changed: Vec<&str> = Vec::new();
        for step in &self.steps {
            if step.skip_if_changed.iter().any(|s| changed.contains(&s.as_str())) {
                continue;
            }
            // Regions are recomputed per step on the current word.
            let rv = self.rv_start(&w);
            let r1 = self.r_start(&w, 0);
            let r2 = self.r_start(&w, r1);
            for rule in &step.rules {
                if !w.ends_with(&rule.suffix) {
                    continue;
                }
                let at = w.len() - rule.suffix.len();
                let region_start = match rule.region {
                    Region::Any => 0,
                    Region::Rv => rv,
                    Region::R1 => r1,
                    Region::R2 => r2,
                };
                if at < region_start {
                    continue;
                }
                if !rule.after.is_empty() {
                    let stem = &w[..at];
                    let ok = rule
                        .after
                        .iter()
                        .any(|a| stem.ends_with(a) && stem.len() - a.len() >= region_start);
                    if !ok {
                        continue;
                    }
                }
                w.truncate(at);
                w.extend_from_slice(&rule.replacement);
                changed.push(step.id.as_str());
                break;
            }
        }
        w.into_iter().collect()
    }
}

/// Token → lemma dictionary (tab-separated `token<TAB>lemma`).
#[derive(Debug, Clone, Default)]
pub struct LemmaTable {
    map: HashMap<String, String>,
}

impl LemmaTable {
    pub fn parse(input: &str) -> Result<Self> {
        let mut map = HashMap::new();
        for (idx, line) in input.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split('\t');
            match (parts.next(), parts.next(), parts.next()) {
                (Some(t), Some(l), None) if !t.trim().is_empty() && !l.trim().is_empty() => {
                    map.insert(t.trim().to_lowercase(), l.trim().to_lowercase());
                }
                _ => {
                    return Err(Error::Malformed {
                        line: idx + 1,
                        message: "lemma row must be `token<TAB>lemma`".into(),
                    })
                }
            }
        }
        Ok(LemmaTable { map })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_resource(path)?)
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Self {
        LemmaTable {
            map: pairs.into_iter().map(|(t, l)| (t.to_string(), l.to_string())).collect(),
        }
    }

    pub fn get(&self, token: &str) -> Option<&str> {
        self.map.get(token).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// Token → polarity in [-1, 1] (tab-separated `token<TAB>polarity`).
#[derive(Debug, Clone, Default)]
pub struct PolarityLexicon {
    map: HashMap<String, f64>,
}

impl PolarityLexicon {
    pub fn parse(input: &str) -> Result<Self> {
        let mut map = HashMap::new();
        for (idx, line) in input.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |message: &str| Error::Malformed {
                line: idx + 1,
                message: message.to_string(),
            };
            let mut parts = line.split('\t');
            let (Some(tok), Some(pol), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(bad("lexicon row must be `token<TAB>polarity`"));
            };
            let polarity: f64 = pol.trim().parse().map_err(|_| bad("polarity is not a number"))?;
            if !(-1.0..=1.0).contains(&polarity) {
                return Err(bad("polarity outside [-1, 1]"));
            }
            if tok.trim().is_empty() {
                return Err(bad("empty token"));
            }
            map.insert(tok.trim().to_lowercase(), polarity);
        }
        Ok(PolarityLexicon { map })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_resource(path)?)
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, f64)>) -> Self {
        PolarityLexicon {
            map: pairs.into_iter().map(|(t, p)| (t.to_string(), p)).collect(),
        }
    }

    pub fn polarity(&self, token: &str) -> Option<f64> {
        self.map.get(token).copied()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// (min, max) polarity over the lexicon entries.
    pub fn range(&self) -> Option<(f64, f64)> {
        let mut it = self.map.values().copied();
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), p| (lo.min(p), hi.max(p))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokens_split_on_apostrophes_and_digits() {
        let t: Vec<String> = tokens("L'azienda ha 3 sedi, Perché?").collect();
        assert_eq!(t, ["l", "azienda", "ha", "sedi", "perché"]);
        assert_eq!(token_count("abc123def"), 2);
        assert_eq!(token_count(""), 0);
    }

    #[test]
    fn sentences() {
        assert_eq!(sentence_count("Ciao. Come stai?"), 2);
        assert_eq!(sentence_count("ciao"), 1);
        assert_eq!(sentence_count(""), 0);
        assert_eq!(sentence_count("Davvero?!... Sì"), 2);
        // no whitespace after the dot: not a boundary
        assert_eq!(sentence_count("www.example.com è giù"), 1);
        assert_eq!(sentence_count("Fine… "), 1);
        assert_eq!(sentence_count("... !!"), 0);
    }

    #[test]
    fn italian_stems() {
        let s = SuffixStemmer::italian();
        assert_eq!(s.stem("ottimo"), "ottim");
        assert_eq!(s.stem("innovazione"), "innov");
        assert_eq!(s.stem("innovazioni"), "innov");
        assert_eq!(s.stem("parlare"), "parl");
        assert_eq!(s.stem("parlando"), "parl");
        assert_eq!(s.stem("amiche"), "amic");
        assert_eq!(s.stem("io"), "io");
        assert_eq!(s.stem("velocemente"), s.stem("velocemente"));
    }

    #[test]
    fn stem_table_errors_carry_line() {
        let err = SuffixStemmer::parse("@vowels aeiou\n1 R9 a -\n").unwrap_err();
        assert!(matches!(err, Error::Malformed { line: 2, .. }));
    }

    #[test]
    fn lexicon_rejects_bad_rows() {
        assert!(matches!(
            PolarityLexicon::parse("buono\t0.5\ncattivo\tx\n").unwrap_err(),
            Error::Malformed { line: 2, .. }
        ));
        assert!(PolarityLexicon::parse("buono\t1.5\n").is_err());
        let lex = PolarityLexicon::parse("Buono\t0.5\ncattivo\t-0.25\n").unwrap();
        assert_eq!(lex.polarity("buono"), Some(0.5));
        assert_eq!(lex.range(), Some((-0.25, 0.5)));
    }

    #[test]
    fn lemma_table_parse() {
        let t = LemmaTable::parse("complimenti\tcomplimento\n").unwrap();
        assert_eq!(t.get("complimenti"), Some("complimento"));
        assert!(LemmaTable::parse("solo\n").is_err());
    }

    #[test]
    fn stopwords_default_list() {
        let sw = StopWords::italian();
        assert!(sw.contains("di") && sw.contains("tutti") && !sw.contains("innovazione"));
    }
}
