//! Maximum-likelihood logistic regression by iteratively reweighted least
//! squares, and variance inflation factors.
//!
//! The fit runs on centered and scaled predictors and maps the estimates back
//! to the raw scale. Maximum likelihood is equivariant under affine
//! reparametrization, so the raw-scale estimates are the raw-scale MLE; the
//! scaled problem is just better conditioned when predictors span several
//! orders of magnitude (word counts next to proportions).

use serde::Serialize;

use super::dist;
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};

pub const MAX_ITERATIONS: usize = 100;
pub const SCORE_TOLERANCE: f64 = 1e-8;
/// A coefficient beyond this many log-odds per standard deviation of its
/// predictor is treated as diverging (complete or quasi separation).
pub const SEPARATION_LIMIT: f64 = 30.0;
const MAX_HALVINGS: usize = 40;
const NOISE_GAIN: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Convergence {
    pub converged: bool,
    pub iterations: usize,
    /// max |Xᵀ(y − p̂)| on the raw scale, intercept included.
    pub max_score: f64,
    /// Log-likelihood after each accepted iteration (starting point first);
    /// nondecreasing up to rounding.
    pub log_likelihood_trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogitModel {
    /// `"constant"` first, then the predictor names.
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub z: Vec<f64>,
    pub p_values: Vec<f64>,
    pub log_likelihood: f64,
    pub null_log_likelihood: f64,
    pub mcfadden_r2: f64,
    pub n: usize,
    pub convergence: Convergence,
}

impl LogitModel {
    /// Linear predictor for one raw predictor row.
    pub fn linear_predictor(&self, row: &[f64]) -> f64 {
        self.coefficients[0] + row.iter().zip(&self.coefficients[1..]).map(|(x, b)| x * b).sum::<f64>()
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        sigmoid(self.linear_predictor(row))
    }
}

fn sigmoid(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

/// log(1 + e^η) without overflow.
fn softplus(eta: f64) -> f64 {
    if eta > 0.0 {
        eta + (-eta).exp().ln_1p()
    } else {
        eta.exp().ln_1p()
    }
}

fn log_likelihood(eta: &[f64], y: &[bool]) -> f64 {
    eta.iter().zip(y).map(|(&e, &yi)| if yi { e } else { 0.0 } - softplus(e)).sum()
}

/// Null (intercept-only) log-likelihood: n₁ ln ȳ + n₀ ln(1 − ȳ).
pub fn null_log_likelihood(y: &[bool]) -> f64 {
    let n = y.len() as f64;
    let n1 = y.iter().filter(|&&v| v).count() as f64;
    let n0 = n - n1;
    let term = |k: f64| if k > 0.0 { k * (k / n).ln() } else { 0.0 };
    term(n1) + term(n0)
}

/// Fits `logit P(y) = b0 + Σ b_j x_j`. `columns[j]` holds predictor j.
pub fn logistic_fit(names: &[String], columns: &[Vec<f64>], y: &[bool]) -> Result<LogitModel> {
    let n = y.len();
    let p = columns.len();
    if names.len() != p {
        return Err(Error::InvalidInput("one name per predictor column required".into()));
    }
    if columns.iter().any(|c| c.len() != n) {
        return Err(Error::InvalidInput("predictor columns must match the response length".into()));
    }
    if n <= p + 1 {
        return Err(Error::InvalidInput(format!("{n} observations cannot identify {} coefficients", p + 1)));
    }
    let n1 = y.iter().filter(|&&v| v).count();
    if n1 == 0 || n1 == n {
        return Err(Error::InvalidInput("response has a single class".into()));
    }
    let mut centers = Vec::with_capacity(p);
    let mut scales = Vec::with_capacity(p);
    for (name, col) in names.iter().zip(columns) {
        if col.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("predictor `{name}` has non-finite values")));
        }
        let m = col.iter().sum::<f64>() / n as f64;
        let sd = (col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n as f64).sqrt();
        if sd == 0.0 || sd <= 1e-12 * m.abs() {
            return Err(Error::InvalidInput(format!("predictor `{name}` is constant")));
        }
        centers.push(m);
        scales.push(sd);
    }
    // design on the standardized scale, intercept first
    let k = p + 1;
    let mut z = Matrix::zeros(n, k);
    for i in 0..n {
        z[(i, 0)] = 1.0;
        for j in 0..p {
            z[(i, j + 1)] = (columns[j][i] - centers[j]) / scales[j];
        }
    }

    let null_ll = null_log_likelihood(y);
    let ybar = n1 as f64 / n as f64;
    let mut beta = vec![0.0; k];
    beta[0] = (ybar / (1.0 - ybar)).ln();

    let eta_of = |beta: &[f64]| -> Vec<f64> {
        (0..n).map(|i| (0..k).map(|j| z[(i, j)] * beta[j]).sum()).collect()
    };
    let raw_score = |mu: &[f64]| -> f64 {
        let resid: Vec<f64> = (0..n).map(|i| f64::from(u8::from(y[i])) - mu[i]).collect();
        let intercept = resid.iter().sum::<f64>().abs();
        columns
            .iter()
            .map(|c| c.iter().zip(&resid).map(|(x, r)| x * r).sum::<f64>().abs())
            .fold(intercept, f64::max)
    };

    let mut eta = eta_of(&beta);
    let mut ll = log_likelihood(&eta, y);
    let mut trace = vec![ll];
    let mut iterations = 0;
    let mut converged = false;
    let mut max_score;
    let last_info: Matrix;
    loop {
        let mu: Vec<f64> = eta.iter().map(|&e| sigmoid(e)).collect();
        max_score = raw_score(&mu);
        // information matrix ZᵀWZ and score Zᵀ(y − μ)
        let mut info = Matrix::zeros(k, k);
        let mut score = vec![0.0; k];
        for i in 0..n {
            let w = mu[i] * (1.0 - mu[i]);
            let r = f64::from(u8::from(y[i])) - mu[i];
            for a in 0..k {
                let za = z[(i, a)];
                score[a] += za * r;
                for b in a..k {
                    info[(a, b)] += w * za * z[(i, b)];
                }
            }
        }
        for a in 0..k {
            for b in 0..a {
                info[(a, b)] = info[(b, a)];
            }
        }
        if max_score < SCORE_TOLERANCE {
            converged = true;
            last_info = info;
            break;
        }
        if iterations == MAX_ITERATIONS {
            last_info = info;
            break;
        }
        let Some(l) = linalg::cholesky(&info) else {
            check_separation(names, &beta)?;
            return Err(Error::Singular);
        };
        let step = linalg::cholesky_solve(&l, &score);
        // Close to the optimum the predicted gain drops below the rounding
        // noise of the log-likelihood sum, and comparing values would reject
        // good Newton steps.
        let predicted_gain: f64 = score.iter().zip(&step).map(|(g, s)| g * s).sum();
        let in_noise = predicted_gain <= NOISE_GAIN * (1.0 + ll.abs());
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..MAX_HALVINGS {
            let trial: Vec<f64> = beta.iter().zip(&step).map(|(b, s)| b + scale * s).collect();
            let trial_eta = eta_of(&trial);
            let trial_ll = log_likelihood(&trial_eta, y);
            if in_noise || trial_ll >= ll {
                beta = trial;
                eta = trial_eta;
                ll = trial_ll;
                accepted = true;
                break;
            }
            scale /= 2.0;
        }
        iterations += 1;
        if !accepted {
            // no ascent possible at working precision
            last_info = info;
            let mu: Vec<f64> = eta.iter().map(|&e| sigmoid(e)).collect();
            max_score = raw_score(&mu);
            converged = max_score < SCORE_TOLERANCE;
            break;
        }
        trace.push(ll);
        check_separation(names, &beta)?;
    }
    check_separation(names, &beta)?;
    if !converged {
        log::warn!("logistic fit stopped after {iterations} iterations with max |score| = {max_score:e}");
    }

    // back to the raw scale: β_raw = T β_std
    let mut t = Matrix::zeros(k, k);
    t[(0, 0)] = 1.0;
    for j in 0..p {
        t[(0, j + 1)] = -centers[j] / scales[j];
        t[(j + 1, j + 1)] = 1.0 / scales[j];
    }
    let coefficients: Vec<f64> = (0..k).map(|a| (0..k).map(|b| t[(a, b)] * beta[b]).sum()).collect();
    let l = linalg::cholesky(&last_info).ok_or(Error::Singular)?;
    let cov_std = linalg::cholesky_inverse(&l);
    let cov = t.matmul(&cov_std).matmul(&t.transpose());
    let std_errors: Vec<f64> = (0..k).map(|a| cov[(a, a)].max(0.0).sqrt()).collect();
    let zs: Vec<f64> = coefficients.iter().zip(&std_errors).map(|(b, s)| b / s).collect();
    let p_values = zs.iter().map(|&zv| dist::normal_two_sided(zv)).collect();

    let log_likelihood = if p == 0 { null_ll } else { ll };
    let mut all_names = vec!["constant".to_string()];
    all_names.extend(names.iter().cloned());
    Ok(LogitModel {
        names: all_names,
        coefficients,
        std_errors,
        z: zs,
        p_values,
        log_likelihood,
        null_log_likelihood: null_ll,
        mcfadden_r2: 1.0 - log_likelihood / null_ll,
        n,
        convergence: Convergence {
            converged,
            iterations,
            max_score,
            log_likelihood_trace: trace,
        },
    })
}

fn check_separation(names: &[String], beta_std: &[f64]) -> Result<()> {
    let offending: Vec<String> = names
        .iter()
        .zip(&beta_std[1..])
        .filter(|(_, b)| !b.is_finite() || b.abs() > SEPARATION_LIMIT)
        .map(|(n, _)| n.clone())
        .collect();
    if offending.is_empty() {
        Ok(())
    } else {
        Err(Error::Separation(offending))
    }
}

/// Variance inflation factor of each predictor: 1 / (1 − R²_j) from the OLS
/// regression of predictor j (with intercept) on the others. Exact
/// collinearity gives `f64::INFINITY`.
pub fn vif(columns: &[Vec<f64>]) -> Result<Vec<f64>> {
    let p = columns.len();
    if p < 2 {
        return Err(Error::InvalidInput("VIF needs at least 2 predictors".into()));
    }
    let n = columns[0].len();
    if columns.iter().any(|c| c.len() != n) || n < 3 {
        return Err(Error::InvalidInput("VIF needs equal-length columns with at least 3 rows".into()));
    }
    // centering absorbs the intercept
    let centered: Vec<Vec<f64>> = columns
        .iter()
        .map(|c| {
            let m = c.iter().sum::<f64>() / n as f64;
            c.iter().map(|v| v - m).collect()
        })
        .collect();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut out = Vec::with_capacity(p);
    for j in 0..p {
        let tss = dot(&centered[j], &centered[j]);
        if tss == 0.0 {
            out.push(f64::INFINITY);
            continue;
        }
        let others: Vec<usize> = (0..p).filter(|&i| i != j).collect();
        let m = others.len();
        let mut xtx = Matrix::zeros(m, m);
        let mut xty = vec![0.0; m];
        for (a, &ia) in others.iter().enumerate() {
            xty[a] = dot(&centered[ia], &centered[j]);
            for (b, &ib) in others.iter().enumerate().skip(a) {
                let v = dot(&centered[ia], &centered[ib]);
                xtx[(a, b)] = v;
                xtx[(b, a)] = v;
            }
        }
        let (coef, _) = linalg::solve_pivoted(&xtx, &xty, 1e-12);
        let rss: f64 = (0..n)
            .map(|i| {
                let fitted: f64 = others.iter().zip(&coef).map(|(&o, c)| centered[o][i] * c).sum();
                let r = centered[j][i] - fitted;
                r * r
            })
            .sum();
        let one_minus_r2 = rss / tss;
        out.push(if one_minus_r2 <= 1e-12 { f64::INFINITY } else { 1.0 / one_minus_r2 });
    }
    Ok(out)
}
