//! Emission families and observation containers.
//!
//! Two families are supported: categorical emissions over a finite symbol
//! alphabet (which keep every enumeration oracle exact) and Gaussian
//! emissions with a known, shared variance (which exercise continuous
//! observations). Symbols and states are 1-based, matching the file
//! formats.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::tol::{check_probability_vector, Tolerances};
use crate::{Error, Result};

/// A single observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Observation {
    /// Categorical symbol in `1..=L`.
    Symbol(usize),
    /// Real-valued scalar.
    Real(f64),
}

/// Per-state emission parameters together with the family they belong to.
#[derive(Debug, Clone, PartialEq)]
pub enum Emissions {
    /// `probs[k-1]` is the length-L symbol distribution of state `k`.
    Categorical { probs: Vec<Vec<f64>> },
    /// `means[k-1]` is the mean of state `k`; the variance is shared and
    /// known.
    GaussianKnownVariance { means: Vec<f64>, variance: f64 },
}

impl Emissions {
    /// Validates the family invariants under the given tolerances.
    pub fn validate(&self, tol: &Tolerances) -> Result<()> {
        match self {
            Emissions::Categorical { probs } => {
                if probs.is_empty() {
                    return Err(Error::InvalidParameter("no emission states".into()));
                }
                let l = probs[0].len();
                for (k, row) in probs.iter().enumerate() {
                    if row.len() != l {
                        return Err(Error::DimensionMismatch(format!(
                            "emission row {} has length {}, expected {}",
                            k + 1,
                            row.len(),
                            l
                        )));
                    }
                    check_probability_vector(row, tol.validity, &format!("emission row {}", k + 1))?;
                }
                Ok(())
            }
            Emissions::GaussianKnownVariance { means, variance } => {
                if means.is_empty() {
                    return Err(Error::InvalidParameter("no emission states".into()));
                }
                if means.iter().any(|m| !m.is_finite()) {
                    return Err(Error::InvalidParameter("non-finite emission mean".into()));
                }
                if !(*variance > 0.0) || !variance.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "emission variance must be positive, got {variance}"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Number of states the parameters cover.
    pub fn n_states(&self) -> usize {
        match self {
            Emissions::Categorical { probs } => probs.len(),
            Emissions::GaussianKnownVariance { means, .. } => means.len(),
        }
    }

    /// Symbol-alphabet size for the categorical family.
    pub fn n_symbols(&self) -> Option<usize> {
        match self {
            Emissions::Categorical { probs } => Some(probs[0].len()),
            Emissions::GaussianKnownVariance { .. } => None,
        }
    }

    /// Density (mass for categorical) of `obs` under state `state` (1-based).
    ///
    /// The observation must match the family; use [`Emissions::check_series`]
    /// once per series before evaluating in a loop.
    pub fn density(&self, state: usize, obs: Observation) -> f64 {
        match (self, obs) {
            (Emissions::Categorical { probs }, Observation::Symbol(sym)) => {
                probs[state - 1][sym - 1]
            }
            (Emissions::GaussianKnownVariance { means, variance }, Observation::Real(y)) => {
                let d = y - means[state - 1];
                (-(d * d) / (2.0 * variance)).exp() / (2.0 * std::f64::consts::PI * variance).sqrt()
            }
            _ => panic!("observation kind does not match the emission family"),
        }
    }

    /// Draws one observation from state `state` (1-based).
    pub fn sample<R: Rng + ?Sized>(&self, state: usize, rng: &mut R) -> Observation {
        match self {
            Emissions::Categorical { probs } => {
                Observation::Symbol(sample_index(&probs[state - 1], rng) + 1)
            }
            Emissions::GaussianKnownVariance { means, variance } => {
                let normal = Normal::new(means[state - 1], variance.sqrt()).expect("valid normal");
                Observation::Real(normal.sample(rng))
            }
        }
    }

    /// Checks that every observation in the series matches this family.
    pub fn check_series(&self, y: &ObservationSeries) -> Result<()> {
        match (self, y) {
            (Emissions::Categorical { probs }, ObservationSeries::Symbols(s)) => {
                let l = probs[0].len();
                for (t, &sym) in s.iter().enumerate() {
                    if sym == 0 || sym > l {
                        return Err(Error::FamilyMismatch(format!(
                            "symbol {sym} at t={t} outside 1..={l}"
                        )));
                    }
                }
                Ok(())
            }
            (Emissions::GaussianKnownVariance { .. }, ObservationSeries::Reals(_)) => Ok(()),
            (Emissions::Categorical { .. }, ObservationSeries::Reals(_)) => Err(
                Error::FamilyMismatch("categorical family given real observations".into()),
            ),
            (Emissions::GaussianKnownVariance { .. }, ObservationSeries::Symbols(_)) => Err(
                Error::FamilyMismatch("gaussian family given symbol observations".into()),
            ),
        }
    }

    /// Reorders states: state `k` of the result is state `images[k-1]` of
    /// `self`.
    pub fn permute(&self, images: &[usize]) -> Emissions {
        match self {
            Emissions::Categorical { probs } => Emissions::Categorical {
                probs: images.iter().map(|&i| probs[i - 1].clone()).collect(),
            },
            Emissions::GaussianKnownVariance { means, variance } => {
                Emissions::GaussianKnownVariance {
                    means: images.iter().map(|&i| means[i - 1]).collect(),
                    variance: *variance,
                }
            }
        }
    }
}

/// Draws an index from an unnormalized nonnegative weight vector.
pub(crate) fn sample_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    debug_assert!(total > 0.0, "cannot sample from an all-zero weight vector");
    let mut u = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        u -= w;
        if u <= 0.0 {
            return i;
        }
    }
    weights.len() - 1
}

/// A sequence of observations `y_0..y_T`, all of one kind.
#[derive(Debug, Clone, PartialEq)]
pub enum ObservationSeries {
    /// Categorical symbols in `1..=L`.
    Symbols(Vec<usize>),
    /// Real scalars.
    Reals(Vec<f64>),
}

impl ObservationSeries {
    pub fn len(&self) -> usize {
        match self {
            ObservationSeries::Symbols(v) => v.len(),
            ObservationSeries::Reals(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Horizon `T`; the series covers `t = 0..=T`.
    pub fn horizon(&self) -> usize {
        self.len().saturating_sub(1)
    }

    pub fn get(&self, t: usize) -> Observation {
        match self {
            ObservationSeries::Symbols(v) => Observation::Symbol(v[t]),
            ObservationSeries::Reals(v) => Observation::Real(v[t]),
        }
    }

    /// Fails on an empty series; every operation requires at least `y_0`.
    pub fn check_nonempty(&self) -> Result<()> {
        if self.is_empty() {
            return Err(Error::InvalidParameter("empty observation series".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn categorical_density_reads_the_right_cell() {
        let e = Emissions::Categorical {
            probs: vec![vec![0.8, 0.2], vec![0.3, 0.7]],
        };
        assert_relative_eq!(e.density(1, Observation::Symbol(2)), 0.2);
        assert_relative_eq!(e.density(2, Observation::Symbol(1)), 0.3);
    }

    #[test]
    fn gaussian_density_matches_closed_form() {
        let e = Emissions::GaussianKnownVariance {
            means: vec![0.0, 2.0],
            variance: 4.0,
        };
        // N(2, 4) at y = 2 is 1 / sqrt(8 pi).
        let expect = 1.0 / (8.0 * std::f64::consts::PI).sqrt();
        assert_relative_eq!(e.density(2, Observation::Real(2.0)), expect, epsilon = 1e-14);
    }

    #[test]
    fn validation_rejects_bad_rows() {
        let bad = Emissions::Categorical {
            probs: vec![vec![0.6, 0.2]],
        };
        assert!(bad.validate(&Tolerances::default()).is_err());
        let bad_var = Emissions::GaussianKnownVariance {
            means: vec![0.0],
            variance: 0.0,
        };
        assert!(bad_var.validate(&Tolerances::default()).is_err());
    }

    #[test]
    fn series_family_mismatch_is_reported() {
        let e = Emissions::Categorical {
            probs: vec![vec![0.5, 0.5]],
        };
        assert!(e.check_series(&ObservationSeries::Reals(vec![0.1])).is_err());
        assert!(e
            .check_series(&ObservationSeries::Symbols(vec![3]))
            .is_err());
        assert!(e
            .check_series(&ObservationSeries::Symbols(vec![1, 2]))
            .is_ok());
    }

    #[test]
    fn permute_reorders_states() {
        let e = Emissions::Categorical {
            probs: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        };
        let p = e.permute(&[2, 1]);
        assert_eq!(
            p,
            Emissions::Categorical {
                probs: vec![vec![0.0, 1.0], vec![1.0, 0.0]],
            }
        );
    }
}
