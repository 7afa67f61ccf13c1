//! Innovators-vs-others comparisons and blocked logistic models over the
//! per-author metrics table.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::hypothesis::{mann_whitney_u, welch_t, TestResult};
use super::logit::{logistic_fit, vif, LogitModel};
use crate::error::{Error, Result};
use crate::language::{LanguageProfile, LANGUAGE_COLUMNS};
use crate::network::{NodeCentralities, NETWORK_COLUMNS};
use crate::num;

/// Metric columns in table order: network metrics, then language metrics.
pub fn metric_columns() -> Vec<&'static str> {
    NETWORK_COLUMNS[1..].iter().chain(LANGUAGE_COLUMNS.iter()).copied().collect()
}

/// One row per author; `None` marks a missing value (constraint of an
/// isolate).
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsTable {
    authors: Vec<String>,
    columns: Vec<String>,
    values: Vec<Vec<Option<f64>>>,
    innovator: Vec<bool>,
}

impl MetricsTable {
    pub fn new(
        authors: Vec<String>,
        columns: Vec<String>,
        values: Vec<Vec<Option<f64>>>,
        innovator: Vec<bool>,
    ) -> Result<Self> {
        let n = authors.len();
        if innovator.len() != n || values.len() != columns.len() || values.iter().any(|c| c.len() != n) {
            return Err(Error::InvalidInput("metrics table columns must all have one value per author".into()));
        }
        Ok(MetricsTable {
            authors,
            columns,
            values,
            innovator,
        })
    }

    /// Assembles the standard table from network and language metrics
    /// aligned with `authors`.
    pub fn from_metrics(
        authors: &[String],
        network: &[NodeCentralities],
        language: &[LanguageProfile],
        innovator: Vec<bool>,
    ) -> Result<Self> {
        if network.len() != authors.len() || language.len() != authors.len() {
            return Err(Error::InvalidInput("metrics not aligned with the author list".into()));
        }
        let rows: Vec<[Option<f64>; 14]> = network
            .iter()
            .zip(language)
            .map(|(c, l)| {
                [
                    Some(c.in_degree as f64),
                    Some(c.out_degree as f64),
                    Some(c.w_in_degree as f64),
                    Some(c.w_out_degree as f64),
                    Some(c.in_distinctiveness),
                    Some(c.out_distinctiveness),
                    Some(c.closeness),
                    Some(c.betweenness),
                    c.constraint,
                    Some(l.word_count as f64),
                    Some(l.wps),
                    Some(l.six_letter_pct),
                    Some(l.sentiment),
                    Some(l.novelty),
                ]
            })
            .collect();
        let columns: Vec<String> = metric_columns().into_iter().map(String::from).collect();
        let values = (0..columns.len()).map(|j| rows.iter().map(|r| r[j]).collect()).collect();
        Self::new(authors.to_vec(), columns, values, innovator)
    }

    pub fn authors(&self) -> &[String] {
        &self.authors
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn innovator(&self) -> &[bool] {
        &self.innovator
    }

    pub fn column(&self, name: &str) -> Option<&[Option<f64>]> {
        self.columns.iter().position(|c| c == name).map(|j| self.values[j].as_slice())
    }

    pub fn len(&self) -> usize {
        self.authors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.authors.is_empty()
    }

    /// `author_id`, the metric columns, then `innovator` (0/1).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("author_id");
        for c in &self.columns {
            out.push(',');
            out.push_str(c);
        }
        out.push_str(",innovator\n");
        for (i, a) in self.authors.iter().enumerate() {
            out.push_str(a);
            for col in &self.values {
                out.push(',');
                out.push_str(&num::fmt_opt(col[i]));
            }
            let _ = writeln!(out, ",{}", u8::from(self.innovator[i]));
        }
        out
    }

    /// Reads the format written by [`MetricsTable::to_csv`]. Empty cells are
    /// missing values.
    pub fn from_csv(input: &str) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(input.as_bytes());
        let headers = reader.headers()?.clone();
        let names: Vec<&str> = headers.iter().collect();
        if names.first() != Some(&"author_id") || names.last() != Some(&"innovator") || names.len() < 3 {
            return Err(Error::Malformed {
                line: 1,
                message: "metrics header must start with author_id and end with innovator".into(),
            });
        }
        let columns: Vec<String> = names[1..names.len() - 1].iter().map(|s| s.to_string()).collect();
        let mut authors = Vec::new();
        let mut values = vec![Vec::new(); columns.len()];
        let mut innovator = Vec::new();
        for (row, record) in reader.records().enumerate() {
            let record = record?;
            let line = row + 2;
            let bad = |message: String| Error::Malformed { line, message };
            authors.push(record[0].to_string());
            for (j, col) in values.iter_mut().enumerate() {
                let cell = record[j + 1].trim();
                col.push(if cell.is_empty() {
                    None
                } else {
                    Some(cell.parse().map_err(|_| bad(format!("`{cell}` in column {} is not a number", columns[j])))?)
                });
            }
            let flag = record[record.len() - 1].trim();
            innovator.push(match flag {
                "1" | "true" => true,
                "0" | "false" => false,
                _ => return Err(bad(format!("innovator flag `{flag}` is not 0/1"))),
            });
        }
        Self::new(authors, columns, values, innovator)
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareOptions {
    /// A metric row is flagged significant when both tests fall below this.
    pub alpha: f64,
}

impl Default for CompareOptions {
    fn default() -> Self {
        CompareOptions { alpha: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupRow {
    pub metric: String,
    pub n_innovators: usize,
    pub n_others: usize,
    pub mean_innovators: f64,
    pub mean_others: f64,
    pub welch: TestResult,
    pub mann_whitney: TestResult,
    pub significant: bool,
    /// Rows dropped because the metric is missing.
    pub missing: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupReport {
    pub alpha: f64,
    pub rows: Vec<GroupRow>,
}

fn split_groups(values: &[Option<f64>], flags: &[bool]) -> (Vec<f64>, Vec<f64>, usize) {
    let (mut a, mut b, mut missing) = (Vec::new(), Vec::new(), 0);
    for (v, &f) in values.iter().zip(flags) {
        match v {
            Some(x) if f => a.push(*x),
            Some(x) => b.push(*x),
            None => missing += 1,
        }
    }
    (a, b, missing)
}

/// Per-metric Welch and Mann-Whitney tests, innovators as sample `a`.
pub fn compare_groups(table: &MetricsTable, opts: &CompareOptions) -> Result<GroupReport> {
    let rows = table
        .columns
        .par_iter()
        .zip(&table.values)
        .map(|(name, col)| {
            let (a, b, missing) = split_groups(col, &table.innovator);
            if a.is_empty() || b.is_empty() {
                return Err(Error::InvalidInput(format!("metric `{name}`: a group is empty after dropping missing values")));
            }
            if missing > 0 {
                log::info!("metric `{name}`: {missing} author(s) without a value excluded");
            }
            let annotate = |e: Error| Error::InvalidInput(format!("metric `{name}`: {e}"));
            let welch = welch_t(&a, &b).map_err(annotate)?;
            let mann_whitney = mann_whitney_u(&a, &b).map_err(annotate)?;
            Ok(GroupRow {
                metric: name.clone(),
                n_innovators: a.len(),
                n_others: b.len(),
                mean_innovators: welch.mean_a,
                mean_others: welch.mean_b,
                significant: welch.p_value < opts.alpha && mann_whitney.p_value < opts.alpha,
                welch,
                mann_whitney,
                missing,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GroupReport { alpha: opts.alpha, rows })
}

impl GroupReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "metric,n_innovators,n_others,mean_innovators,mean_others,welch_t,welch_df,welch_p,mann_whitney_u,mann_whitney_p,significant\n",
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                r.metric,
                r.n_innovators,
                r.n_others,
                num::fmt(r.mean_innovators),
                num::fmt(r.mean_others),
                num::fmt(r.welch.statistic),
                num::fmt_opt(r.welch.df),
                num::fmt(r.welch.p_value),
                num::fmt(r.mann_whitney.statistic),
                num::fmt(r.mann_whitney.p_value),
                u8::from(r.significant)
            );
        }
        out
    }

    /// Aligned plain-text table.
    pub fn to_text(&self) -> String {
        let header = ["metric", "group", "mean", "welch p", "m-w p", ""];
        let mut cells: Vec<[String; 6]> = Vec::new();
        for r in &self.rows {
            let mark = if r.significant { "*" } else { "" };
            cells.push([
                r.metric.clone(),
                "innovators".into(),
                num::fixed(r.mean_innovators, 4),
                num::fixed(r.welch.p_value, 3),
                num::fixed(r.mann_whitney.p_value, 3),
                mark.into(),
            ]);
            cells.push([
                String::new(),
                "others".into(),
                num::fixed(r.mean_others, 4),
                String::new(),
                String::new(),
                String::new(),
            ]);
        }
        let mut out = render_table(&header, &cells);
        let _ = writeln!(out, "* significant for both tests at alpha = {}", self.alpha);
        out
    }
}

fn render_table<const N: usize>(header: &[&str; N], rows: &[[String; N]]) -> String {
    let mut widths: [usize; N] = header.map(|h| h.chars().count());
    for r in rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, cells: &[&str]| {
        let mut s = String::new();
        for (k, (c, w)) in cells.iter().zip(&widths).enumerate() {
            if k == 0 {
                let _ = write!(s, "{c:<w$}");
            } else {
                let _ = write!(s, "  {c:>w$}");
            }
        }
        out.push_str(s.trim_end());
        out.push('\n');
    };
    line(&mut out, header);
    let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
    line(&mut out, &rule.iter().map(String::as_str).collect::<Vec<_>>());
    for r in rows {
        line(&mut out, &r.iter().map(String::as_str).collect::<Vec<_>>());
    }
    out
}

/// A named predictor block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub name: String,
    pub columns: Vec<String>,
}

impl ModelSpec {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        ModelSpec {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
        }
    }
}

/// Six blocks: degree, weighted degree, distinctiveness, closeness family,
/// language, and a combined model.
pub fn default_blocks() -> Vec<ModelSpec> {
    vec![
        ModelSpec::new("model_1", &["in_degree", "out_degree"]),
        ModelSpec::new("model_2", &["w_in_degree", "w_out_degree"]),
        ModelSpec::new("model_3", &["in_distinctiveness", "out_distinctiveness"]),
        ModelSpec::new("model_4", &["closeness", "betweenness", "constraint"]),
        ModelSpec::new("model_5", &["word_count", "sentiment", "novelty", "wps", "six_letter_pct"]),
        ModelSpec::new("model_6", &["out_degree", "closeness", "constraint", "wps", "six_letter_pct"]),
    ]
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelOptions {
    /// Z-score each predictor (over the model's complete cases) before
    /// fitting, so coefficients are per standard deviation.
    pub standardize: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FittedModel {
    pub name: String,
    pub model: LogitModel,
    /// Rows dropped for missing values in the model's columns.
    pub dropped: usize,
    /// Present for models with at least two predictors.
    pub vif: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelReport {
    pub models: Vec<FittedModel>,
}

pub fn stars(p: f64) -> &'static str {
    if p < 0.001 {
        "***"
    } else if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else if p < 0.1 {
        "^"
    } else {
        ""
    }
}

/// Design columns and response over the complete cases of `columns`.
pub fn complete_cases(table: &MetricsTable, columns: &[String]) -> Result<(Vec<Vec<f64>>, Vec<bool>, usize)> {
    let cols: Vec<&[Option<f64>]> = columns
        .iter()
        .map(|c| table.column(c).ok_or_else(|| Error::Config(format!("unknown metric column `{c}`"))))
        .collect::<Result<_>>()?;
    let keep: Vec<usize> = (0..table.len()).filter(|&i| cols.iter().all(|c| c[i].is_some())).collect();
    let design = cols
        .iter()
        .map(|c| keep.iter().map(|&i| c[i].expect("complete case")).collect())
        .collect();
    let y = keep.iter().map(|&i| table.innovator[i]).collect();
    Ok((design, y, table.len() - keep.len()))
}

fn standardize(columns: &mut [Vec<f64>]) {
    for col in columns {
        let n = col.len() as f64;
        let m = col.iter().sum::<f64>() / n;
        let sd = (col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0)).sqrt();
        if sd > 0.0 {
            col.iter_mut().for_each(|v| *v = (*v - m) / sd);
        }
    }
}

pub fn fit_block(table: &MetricsTable, spec: &ModelSpec, opts: &ModelOptions) -> Result<FittedModel> {
    let annotate = |e: Error| Error::Model {
        model: spec.name.clone(),
        source: Box::new(e),
    };
    if spec.columns.is_empty() {
        return Err(annotate(Error::Config("model has no predictors".into())));
    }
    let (mut design, y, dropped) = complete_cases(table, &spec.columns).map_err(annotate)?;
    if dropped > 0 {
        log::info!("model `{}`: {dropped} incomplete row(s) excluded", spec.name);
    }
    if opts.standardize {
        standardize(&mut design);
    }
    let model = logistic_fit(&spec.columns, &design, &y).map_err(annotate)?;
    let vif = if design.len() >= 2 { Some(vif(&design).map_err(annotate)?) } else { None };
    Ok(FittedModel {
        name: spec.name.clone(),
        model,
        dropped,
        vif,
    })
}

/// Fits every block independently, results in declared order.
pub fn model_blocks(table: &MetricsTable, blocks: &[ModelSpec], opts: &ModelOptions) -> Result<ModelReport> {
    if blocks.is_empty() {
        return Err(Error::Config("empty model block specification".into()));
    }
    let models = blocks
        .par_iter()
        .map(|spec| fit_block(table, spec, opts))
        .collect::<Result<Vec<_>>>()?;
    Ok(ModelReport { models })
}

impl ModelReport {
    /// Long format: one row per model term.
    pub fn coefficients_csv(&self) -> String {
        let mut out = String::from("model,term,estimate,std_error,z,p_value,stars,vif\n");
        for m in &self.models {
            let l = &m.model;
            for k in 0..l.names.len() {
                let vif = match (&m.vif, k) {
                    (Some(v), k) if k > 0 => num::fmt(v[k - 1]),
                    _ => String::new(),
                };
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{}",
                    m.name,
                    l.names[k],
                    num::fmt(l.coefficients[k]),
                    num::fmt(l.std_errors[k]),
                    num::fmt(l.z[k]),
                    num::fmt(l.p_values[k]),
                    stars(l.p_values[k]),
                    vif
                );
            }
        }
        out
    }

    pub fn fit_csv(&self) -> String {
        let mut out = String::from("model,n,dropped,log_likelihood,null_log_likelihood,mcfadden_r2,converged,iterations\n");
        for m in &self.models {
            let l = &m.model;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                m.name,
                l.n,
                m.dropped,
                num::fmt(l.log_likelihood),
                num::fmt(l.null_log_likelihood),
                num::fmt(l.mcfadden_r2),
                u8::from(l.convergence.converged),
                l.convergence.iterations
            );
        }
        out
    }

    /// Wide text table: predictors as rows, models as columns.
    pub fn to_text(&self) -> String {
        let mut terms: Vec<String> = Vec::new();
        for m in &self.models {
            for t in &m.model.names[1..] {
                if !terms.contains(t) {
                    terms.push(t.clone());
                }
            }
        }
        terms.push("constant".into());
        let width = self.models.len() + 1;
        let mut header = vec![String::new()];
        header.extend(self.models.iter().map(|m| m.name.clone()));
        let mut rows: Vec<Vec<String>> = Vec::new();
        for t in &terms {
            let mut row = vec![t.clone()];
            for m in &self.models {
                row.push(match m.model.names.iter().position(|n| n == t) {
                    Some(k) => format!("{}{}", num::fixed(m.model.coefficients[k], 5), stars(m.model.p_values[k])),
                    None => String::new(),
                });
            }
            rows.push(row);
        }
        let mut r2 = vec!["McFadden R2".to_string()];
        r2.extend(self.models.iter().map(|m| num::fixed(m.model.mcfadden_r2, 4)));
        rows.push(r2);
        let mut n = vec!["n".to_string()];
        n.extend(self.models.iter().map(|m| m.model.n.to_string()));
        rows.push(n);

        let mut widths = vec![0; width];
        for r in std::iter::once(&header).chain(&rows) {
            for (w, c) in widths.iter_mut().zip(r) {
                *w = (*w).max(c.chars().count());
            }
        }
        let mut out = String::new();
        for r in std::iter::once(&header).chain(&rows) {
            let mut s = String::new();
            for (k, (c, w)) in r.iter().zip(&widths).enumerate() {
                if k == 0 {
                    let _ = write!(s, "{c:<w$}");
                } else {
                    let _ = write!(s, "  {c:>w$}");
                }
            }
            out.push_str(s.trim_end());
            out.push('\n');
        }
        out.push_str("^ p < .1; * p < .05; ** p < .01; *** p < .001\n");
        out
    }
}

/// Area under the ROC curve of `scores` for the positive class, ties
/// counted as one half.
pub fn roc_auc(scores: &[f64], positive: &[bool]) -> Result<f64> {
    let a: Vec<f64> = scores.iter().zip(positive).filter(|p| *p.1).map(|p| *p.0).collect();
    let b: Vec<f64> = scores.iter().zip(positive).filter(|p| !*p.1).map(|p| *p.0).collect();
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidInput("AUC needs both classes".into()));
    }
    let u = mann_whitney_u(&a, &b)?.statistic;
    Ok(u / (a.len() * b.len()) as f64)
}
