//! Number formatting shared by every CSV and text report.

/// Significant digits written to output files.
pub const SIGNIFICANT_DIGITS: usize = 12;

/// Rounds to 12 significant digits and prints the shortest decimal that
/// reads back to the rounded value. Very small or large magnitudes use
/// exponent notation.
pub fn fmt(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let rounded: f64 = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x).parse().expect("float round-trip");
    let a = rounded.abs();
    if (1e-6..1e15).contains(&a) {
        format!("{rounded}")
    } else {
        format!("{rounded:e}")
    }
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt).unwrap_or_default()
}

/// Fixed decimals for aligned text tables.
pub fn fixed(x: f64, decimals: usize) -> String {
    if x.is_finite() && x != 0.0 && x.abs() < 0.5 * 10f64.powi(-(decimals as i32)) {
        format!("{x:.2e}")
    } else {
        format!("{x:.decimals$}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formatting() {
        assert_eq!(fmt(0.1), "0.1");
        assert_eq!(fmt(2.0 / 3.0), "0.666666666667");
        assert_eq!(fmt(-1.5), "-1.5");
        assert_eq!(fmt(12.0), "12");
        assert_eq!(fmt(7.779121658870581e-252), "7.77912165887e-252");
        assert_eq!(fmt(f64::INFINITY), "inf");
        assert_eq!(fmt_opt(None), "");
        assert_eq!(fixed(0.000_01, 3), "1.00e-5");
        assert_eq!(fixed(1.23456, 3), "1.235");
    }
}
