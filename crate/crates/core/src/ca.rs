//! Correspondence analysis of a term × cluster count table.
//!
//! The standardized residual matrix S = D_r^{-1/2}(P − r cᵀ)D_c^{-1/2} is
//! decomposed through the eigenproblem of its smaller Gram matrix, so a
//! table with three clusters needs only a 3×3 symmetric eigensolve.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigen, Matrix};
use crate::num;

/// Eigenvalues below this (absolute, and relative to total inertia) are
/// treated as zero.
const ZERO_INERTIA: f64 = 1e-14;
const RELATIVE_ZERO: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct ContingencyTable {
    counts: Vec<Vec<f64>>,
    row_labels: Vec<String>,
    col_labels: Vec<String>,
}

impl ContingencyTable {
    pub fn new(counts: Vec<Vec<f64>>, row_labels: Vec<String>, col_labels: Vec<String>) -> Result<Self> {
        let r = counts.len();
        let c = counts.first().map_or(0, Vec::len);
        if r < 2 || c < 2 {
            return Err(Error::DegenerateTable(format!("need at least 2×2, got {r}×{c}")));
        }
        if counts.iter().any(|row| row.len() != c) || row_labels.len() != r || col_labels.len() != c {
            return Err(Error::InvalidInput("ragged table or label count mismatch".into()));
        }
        if counts.iter().flatten().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::DegenerateTable("counts must be finite and nonnegative".into()));
        }
        if let Some(i) = counts.iter().position(|row| row.iter().sum::<f64>() == 0.0) {
            return Err(Error::DegenerateTable(format!("row `{}` is all zero", row_labels[i])));
        }
        if let Some(j) = (0..c).position(|j| counts.iter().map(|row| row[j]).sum::<f64>() == 0.0) {
            return Err(Error::DegenerateTable(format!("column `{}` is all zero", col_labels[j])));
        }
        Ok(ContingencyTable {
            counts,
            row_labels,
            col_labels,
        })
    }

    /// Labels rows `r1..` and columns `c1..`.
    pub fn unlabeled(counts: Vec<Vec<f64>>) -> Result<Self> {
        let rows = (1..=counts.len()).map(|i| format!("r{i}")).collect();
        let cols = (1..=counts.first().map_or(0, Vec::len)).map(|j| format!("c{j}")).collect();
        Self::new(counts, rows, cols)
    }

    /// Reads a labeled table: header `label,col1,col2,…`, then one row per
    /// table row.
    pub fn from_csv(input: &str) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(input.as_bytes());
        let col_labels: Vec<String> = reader.headers()?.iter().skip(1).map(str::to_string).collect();
        let mut counts = Vec::new();
        let mut row_labels = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let record = record?;
            let line = i + 2;
            row_labels.push(record[0].to_string());
            let row = record
                .iter()
                .skip(1)
                .map(|cell| {
                    cell.trim().parse::<f64>().map_err(|_| Error::Malformed {
                        line,
                        message: format!("`{cell}` is not a count"),
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            counts.push(row);
        }
        Self::new(counts, row_labels, col_labels)
    }

    pub fn counts(&self) -> &[Vec<f64>] {
        &self.counts
    }

    pub fn total(&self) -> f64 {
        self.counts.iter().flatten().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FactorMap {
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    pub row_masses: Vec<f64>,
    pub col_masses: Vec<f64>,
    pub singular_values: Vec<f64>,
    /// Principal inertia λ_f of each factor.
    pub inertia: Vec<f64>,
    pub total_inertia: f64,
    /// Principal coordinates, `[point][factor]`.
    pub row_coords: Vec<Vec<f64>>,
    pub col_coords: Vec<Vec<f64>>,
    /// Absolute contributions, `[point][factor]`.
    pub row_ac: Vec<Vec<f64>>,
    pub col_ac: Vec<Vec<f64>>,
}

impl FactorMap {
    pub fn factor_count(&self) -> usize {
        self.inertia.len()
    }

    /// λ_f over total inertia.
    pub fn shares(&self) -> Vec<f64> {
        self.inertia.iter().map(|l| l / self.total_inertia).collect()
    }
}

pub fn ca(table: &ContingencyTable) -> Result<FactorMap> {
    let n = table.total();
    let (ni, nj) = (table.counts.len(), table.counts[0].len());
    let r: Vec<f64> = table.counts.iter().map(|row| row.iter().sum::<f64>() / n).collect();
    let c: Vec<f64> = (0..nj).map(|j| table.counts.iter().map(|row| row[j]).sum::<f64>() / n).collect();
    let mut s = Matrix::zeros(ni, nj);
    for i in 0..ni {
        for j in 0..nj {
            let e = r[i] * c[j];
            s[(i, j)] = (table.counts[i][j] / n - e) / e.sqrt();
        }
    }
    let total_inertia: f64 = (0..ni).map(|i| s.row(i).iter().map(|v| v * v).sum::<f64>()).sum();

    // eigenvectors of the smaller Gram matrix give one side's singular
    // vectors; the other side follows from S v = σ u
    let cols_side = nj <= ni;
    let gram = if cols_side { s.gram() } else { s.transpose().gram() };
    let (values, vectors) = symmetric_eigen(&gram);
    let max_factors = ni.min(nj) - 1;
    let kept: Vec<usize> = (0..values.len())
        .filter(|&f| values[f] > ZERO_INERTIA && values[f] > RELATIVE_ZERO * total_inertia)
        .take(max_factors)
        .collect();
    if kept.is_empty() {
        log::warn!("correspondence analysis: table is independent (total inertia {total_inertia:e}); no factors");
    }
    let nf = kept.len();
    let mut u = vec![vec![0.0; nf]; ni];
    let mut v = vec![vec![0.0; nf]; nj];
    let mut sigma = Vec::with_capacity(nf);
    for (f, &e) in kept.iter().enumerate() {
        let sv = values[e].sqrt();
        sigma.push(sv);
        if cols_side {
            for j in 0..nj {
                v[j][f] = vectors[(j, e)];
            }
            for i in 0..ni {
                u[i][f] = (0..nj).map(|j| s[(i, j)] * v[j][f]).sum::<f64>() / sv;
            }
        } else {
            for i in 0..ni {
                u[i][f] = vectors[(i, e)];
            }
            for j in 0..nj {
                v[j][f] = (0..ni).map(|i| s[(i, j)] * u[i][f]).sum::<f64>() / sv;
            }
        }
        // the row with the largest contribution gets a positive coordinate
        let lead = (0..ni).fold(0, |b, i| if u[i][f] * u[i][f] > u[b][f] * u[b][f] { i } else { b });
        if u[lead][f] < 0.0 {
            u.iter_mut().for_each(|row| row[f] = -row[f]);
            v.iter_mut().for_each(|row| row[f] = -row[f]);
        }
    }
    let row_coords = (0..ni).map(|i| (0..nf).map(|f| u[i][f] * sigma[f] / r[i].sqrt()).collect()).collect();
    let col_coords = (0..nj).map(|j| (0..nf).map(|f| v[j][f] * sigma[f] / c[j].sqrt()).collect()).collect();
    let row_ac = u.iter().map(|row| row.iter().map(|x| x * x).collect()).collect();
    let col_ac = v.iter().map(|row| row.iter().map(|x| x * x).collect()).collect();
    Ok(FactorMap {
        row_labels: table.row_labels.clone(),
        col_labels: table.col_labels.clone(),
        row_masses: r,
        col_masses: c,
        inertia: sigma.iter().map(|s| s * s).collect(),
        singular_values: sigma,
        total_inertia,
        row_coords,
        col_coords,
        row_ac,
        col_ac,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Pole {
    Positive,
    Negative,
}

impl Pole {
    pub fn sign(self) -> &'static str {
        match self {
            Pole::Positive => "+",
            Pole::Negative => "-",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TermAssignment {
    pub term: String,
    /// 0-based factor.
    pub factor: usize,
    pub pole: Pole,
    pub ac: f64,
}

/// Terms grouped by factor and pole, each list ranked by contribution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FactorPoles {
    pub factor: usize,
    pub positive: Vec<TermAssignment>,
    pub negative: Vec<TermAssignment>,
}

/// Assigns every row to the factor it contributes most to (ties: lower
/// factor), on the pole given by its coordinate's sign.
pub fn assign_terms(map: &FactorMap) -> Vec<FactorPoles> {
    let mut out: Vec<FactorPoles> = (0..map.factor_count())
        .map(|factor| FactorPoles {
            factor,
            positive: Vec::new(),
            negative: Vec::new(),
        })
        .collect();
    if out.is_empty() {
        return out;
    }
    for (i, term) in map.row_labels.iter().enumerate() {
        let ac = &map.row_ac[i];
        let f = (0..ac.len()).fold(0, |b, f| if ac[f] > ac[b] { f } else { b });
        let pole = if map.row_coords[i][f] >= 0.0 { Pole::Positive } else { Pole::Negative };
        let a = TermAssignment {
            term: term.clone(),
            factor: f,
            pole,
            ac: ac[f],
        };
        match pole {
            Pole::Positive => out[f].positive.push(a),
            Pole::Negative => out[f].negative.push(a),
        }
    }
    for p in &mut out {
        for list in [&mut p.positive, &mut p.negative] {
            list.sort_by(|a, b| b.ac.total_cmp(&a.ac).then_with(|| a.term.cmp(&b.term)));
        }
    }
    out
}

impl FactorMap {
    /// `entity,type,factor1_coord,…` with terms first, then clusters.
    pub fn coordinates_csv(&self) -> String {
        let mut out = String::from("entity,type");
        for f in 1..=self.factor_count() {
            let _ = write!(out, ",factor{f}_coord");
        }
        out.push('\n');
        let mut emit = |labels: &[String], coords: &[Vec<f64>], kind: &str| {
            for (l, row) in labels.iter().zip(coords) {
                out.push_str(l);
                out.push(',');
                out.push_str(kind);
                for x in row {
                    out.push(',');
                    out.push_str(&num::fmt(*x));
                }
                out.push('\n');
            }
        };
        emit(&self.row_labels, &self.row_coords, "term");
        emit(&self.col_labels, &self.col_coords, "cluster");
        out
    }

    pub fn inertia_csv(&self) -> String {
        let mut out = String::from("factor,singular_value,inertia,share,cumulative_share\n");
        let mut cum = 0.0;
        for (f, share) in self.shares().into_iter().enumerate() {
            cum += share;
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                f + 1,
                num::fmt(self.singular_values[f]),
                num::fmt(self.inertia[f]),
                num::fmt(share),
                num::fmt(cum)
            );
        }
        let _ = writeln!(out, "total,,{},1,", num::fmt(self.total_inertia));
        out
    }
}

/// `term,factor,AC,pole`: one row per term for its assigned factor.
pub fn contributions_csv(poles: &[FactorPoles]) -> String {
    let mut out = String::from("term,factor,AC,pole\n");
    for p in poles {
        for a in p.positive.iter().chain(&p.negative) {
            let _ = writeln!(out, "{},{},{},{}", a.term, a.factor + 1, num::fmt(a.ac), a.pole.sign());
        }
    }
    out
}

fn escape_xml(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Cluster points on factors 1 and 2 (a horizontal strip with one factor).
/// `None` when the map has no factors.
pub fn factor_map_svg(map: &FactorMap, axis_labels: Option<(&str, &str)>) -> Option<String> {
    if map.factor_count() == 0 {
        log::warn!("factor map has no factors; no plot written");
        return None;
    }
    const SIZE: f64 = 480.0;
    const PAD: f64 = 60.0;
    let two_d = map.factor_count() >= 2;
    let xs: Vec<f64> = map.col_coords.iter().map(|c| c[0]).collect();
    let ys: Vec<f64> = map.col_coords.iter().map(|c| if two_d { c[1] } else { 0.0 }).collect();
    let extent = xs.iter().chain(&ys).fold(0.0f64, |m, v| m.max(v.abs())).max(1e-12) * 1.15;
    let px = |x: f64| PAD + (x + extent) / (2.0 * extent) * (SIZE - 2.0 * PAD);
    let py = |y: f64| SIZE - (PAD + (y + extent) / (2.0 * extent) * (SIZE - 2.0 * PAD));
    let (x_label, y_label) = axis_labels.unwrap_or(("Factor 1", "Factor 2"));
    let shares = map.shares();

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{SIZE}" height="{SIZE}" fill="white"/>"#);
    let (ox, oy) = (px(0.0), py(0.0));
    let _ = writeln!(
        svg,
        r#"<line class="axis" data-factor="1" x1="{PAD}" y1="{oy}" x2="{}" y2="{oy}" stroke="black"/>"#,
        SIZE - PAD
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="end">{} ({:.1}%)</text>"#,
        SIZE - PAD,
        oy - 6.0,
        escape_xml(x_label),
        100.0 * shares[0]
    );
    if two_d {
        let _ = writeln!(
            svg,
            r#"<line class="axis" data-factor="2" x1="{ox}" y1="{}" x2="{ox}" y2="{PAD}" stroke="black"/>"#,
            SIZE - PAD
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}">{} ({:.1}%)</text>"#,
            ox + 6.0,
            PAD - 8.0,
            escape_xml(y_label),
            100.0 * shares[1]
        );
    }
    for (j, label) in map.col_labels.iter().enumerate() {
        let (x, y) = (xs[j], ys[j]);
        let data_y = if two_d { format!(r#" data-y="{}""#, num::fmt(y)) } else { String::new() };
        let _ = writeln!(
            svg,
            r#"<g class="cluster" data-label="{}" data-x="{}"{data_y}><circle cx="{:.2}" cy="{:.2}" r="6" fill="steelblue"/><text x="{:.2}" y="{:.2}">{}</text></g>"#,
            escape_xml(label),
            num::fmt(x),
            px(x),
            py(y),
            px(x) + 9.0,
            py(y) - 9.0,
            escape_xml(label)
        );
    }
    svg.push_str("</svg>\n");
    Some(svg)
}
