//! Numerical tolerance constants, kept in one place so every module and
//! test agrees on what "valid" and "exact" mean.

/// Tolerances used throughout the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Slack allowed when checking construction invariants such as
    /// "rows sum to one" (default `1e-12`).
    pub validity: f64,
    /// Slack allowed when comparing two exact computations of the same
    /// quantity (default `1e-10`).
    pub exact: f64,
}

impl Tolerances {
    pub const fn new(validity: f64, exact: f64) -> Self {
        Self { validity, exact }
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        DEFAULT
    }
}

/// The crate-wide default tolerances.
pub const DEFAULT: Tolerances = Tolerances::new(1e-12, 1e-10);

/// Checks that `v` is a probability vector: entries nonnegative and
/// summing to one within `tol`.
pub fn check_probability_vector(v: &[f64], tol: f64, what: &str) -> crate::Result<()> {
    if v.is_empty() {
        return Err(crate::Error::InvalidParameter(format!("{what} is empty")));
    }
    if v.iter().any(|&x| !x.is_finite() || x < 0.0) {
        return Err(crate::Error::InvalidParameter(format!(
            "{what} has a negative or non-finite entry"
        )));
    }
    let sum: f64 = v.iter().sum();
    if (sum - 1.0).abs() > tol {
        return Err(crate::Error::InvalidParameter(format!(
            "{what} sums to {sum}, expected 1 within {tol}"
        )));
    }
    Ok(())
}
