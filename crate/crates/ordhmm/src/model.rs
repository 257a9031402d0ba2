//! The standard hidden Markov model: parameters, stationary distribution,
//! simulation, and the scaled-forward likelihood.
//!
//! Observations follow per-state emission densities while the hidden state
//! evolves as a K-state Markov chain with transition matrix `Q`. The chain
//! may start from the stationary distribution of `Q` or from an explicit
//! fixed distribution.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::emission::{sample_index, Emissions, ObservationSeries};
use crate::forward::scaled_forward;
use crate::seeding::rng_from_seed;
use crate::tol::{check_probability_vector, Tolerances};
use crate::{Error, Result};

/// A row-stochastic K x K transition matrix. State labels are 1-based in
/// the public API; storage is 0-based.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    rows: Vec<Vec<f64>>,
}

impl TransitionMatrix {
    /// Validates and wraps a row-stochastic matrix.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::new_with_tol(rows, &Tolerances::default())
    }

    pub fn new_with_tol(rows: Vec<Vec<f64>>, tol: &Tolerances) -> Result<Self> {
        let k = rows.len();
        if k == 0 {
            return Err(Error::InvalidParameter("empty transition matrix".into()));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != k {
                return Err(Error::DimensionMismatch(format!(
                    "transition row {} has length {}, expected {}",
                    i + 1,
                    row.len(),
                    k
                )));
            }
            check_probability_vector(row, tol.validity, &format!("transition row {}", i + 1))?;
        }
        Ok(Self { rows })
    }

    /// Number of states K.
    pub fn k(&self) -> usize {
        self.rows.len()
    }

    /// Transition probability from state `from` to state `to` (1-based).
    pub fn prob(&self, from: usize, to: usize) -> f64 {
        self.rows[from - 1][to - 1]
    }

    /// Row of state `from` (1-based), indexed 0-based by destination.
    pub fn row(&self, from: usize) -> &[f64] {
        &self.rows[from - 1]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// True iff every entry is strictly positive (the support condition
    /// required by appearance-order computations).
    pub fn strictly_positive(&self) -> bool {
        self.rows.iter().all(|r| r.iter().all(|&q| q > 0.0))
    }

    /// Cheap sufficient ergodicity test: some power `Q^n` with `n <= K^2`
    /// has all entries positive.
    pub fn is_ergodic(&self) -> bool {
        let k = self.k();
        // Track only the positivity pattern; magnitudes are irrelevant.
        let mut reach: Vec<Vec<bool>> = self
            .rows
            .iter()
            .map(|r| r.iter().map(|&q| q > 0.0).collect())
            .collect();
        let all_positive = |m: &[Vec<bool>]| m.iter().all(|r| r.iter().all(|&b| b));
        if all_positive(&reach) {
            return true;
        }
        let base = reach.clone();
        for _ in 1..k * k {
            let mut next = vec![vec![false; k]; k];
            for i in 0..k {
                for j in 0..k {
                    if next[i][j] {
                        continue;
                    }
                    next[i][j] = (0..k).any(|l| reach[i][l] && base[l][j]);
                }
            }
            reach = next;
            if all_positive(&reach) {
                return true;
            }
        }
        false
    }

    /// Solves `v Q = v`, `sum v = 1` for the stationary distribution.
    ///
    /// Fails with [`Error::NotErgodic`] when the positivity test on the
    /// powers of `Q` fails, in which case the solution would not be unique
    /// or would not attract the chain.
    pub fn stationary(&self) -> Result<Vec<f64>> {
        if !self.is_ergodic() {
            return Err(Error::NotErgodic);
        }
        let k = self.k();
        // (Q^T - I) v = 0 with the last equation replaced by sum(v) = 1.
        let mut a = DMatrix::<f64>::zeros(k, k);
        for i in 0..k {
            for j in 0..k {
                a[(i, j)] = self.rows[j][i] - if i == j { 1.0 } else { 0.0 };
            }
        }
        for j in 0..k {
            a[(k - 1, j)] = 1.0;
        }
        let mut b = DVector::<f64>::zeros(k);
        b[k - 1] = 1.0;
        let lu = a.lu();
        let v = lu
            .solve(&b)
            .ok_or_else(|| Error::InvalidParameter("singular stationary system".into()))?;
        Ok(v.iter().copied().collect())
    }
}

/// How the chain is initialized at `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialMode {
    /// Start from the stationary distribution of `Q`.
    Stationary,
    /// Start from an explicit distribution.
    Fixed(Vec<f64>),
}

/// Parameters of the standard model: transition matrix, per-state emission
/// parameters, and the initial-state mode.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardHmmParams {
    transition: TransitionMatrix,
    emissions: Emissions,
    initial: InitialMode,
}

impl StandardHmmParams {
    pub fn new(
        transition: TransitionMatrix,
        emissions: Emissions,
        initial: InitialMode,
    ) -> Result<Self> {
        Self::new_with_tol(transition, emissions, initial, &Tolerances::default())
    }

    pub fn new_with_tol(
        transition: TransitionMatrix,
        emissions: Emissions,
        initial: InitialMode,
        tol: &Tolerances,
    ) -> Result<Self> {
        emissions.validate(tol)?;
        if emissions.n_states() != transition.k() {
            return Err(Error::DimensionMismatch(format!(
                "{} emission states vs {} transition states",
                emissions.n_states(),
                transition.k()
            )));
        }
        if let InitialMode::Fixed(probs) = &initial {
            if probs.len() != transition.k() {
                return Err(Error::DimensionMismatch(format!(
                    "initial vector has length {}, expected {}",
                    probs.len(),
                    transition.k()
                )));
            }
            check_probability_vector(probs, tol.validity, "initial distribution")?;
        }
        Ok(Self {
            transition,
            emissions,
            initial,
        })
    }

    pub fn k(&self) -> usize {
        self.transition.k()
    }

    pub fn transition(&self) -> &TransitionMatrix {
        &self.transition
    }

    pub fn emissions(&self) -> &Emissions {
        &self.emissions
    }

    pub fn initial_mode(&self) -> &InitialMode {
        &self.initial
    }

    /// The distribution of `s_0`: the stationary distribution in
    /// [`InitialMode::Stationary`], the stored vector otherwise.
    pub fn initial_distribution(&self) -> Result<Vec<f64>> {
        match &self.initial {
            InitialMode::Stationary => self.transition.stationary(),
            InitialMode::Fixed(probs) => Ok(probs.clone()),
        }
    }

    /// Largest absolute difference between the numeric entries of two
    /// parameter values, ignoring the initial mode. Used for atom matching.
    pub fn numeric_distance(&self, other: &StandardHmmParams) -> f64 {
        let mut d: f64 = 0.0;
        if self.k() != other.k() {
            return f64::INFINITY;
        }
        for (a, b) in self.transition.rows().iter().zip(other.transition.rows()) {
            for (x, y) in a.iter().zip(b) {
                d = d.max((x - y).abs());
            }
        }
        match (&self.emissions, &other.emissions) {
            (
                Emissions::Categorical { probs: pa },
                Emissions::Categorical { probs: pb },
            ) => {
                if pa[0].len() != pb[0].len() {
                    return f64::INFINITY;
                }
                for (a, b) in pa.iter().zip(pb) {
                    for (x, y) in a.iter().zip(b) {
                        d = d.max((x - y).abs());
                    }
                }
            }
            (
                Emissions::GaussianKnownVariance {
                    means: ma,
                    variance: va,
                },
                Emissions::GaussianKnownVariance {
                    means: mb,
                    variance: vb,
                },
            ) => {
                for (x, y) in ma.iter().zip(mb) {
                    d = d.max((x - y).abs());
                }
                d = d.max((va - vb).abs());
            }
            _ => return f64::INFINITY,
        }
        d
    }
}

/// A realized hidden path `s_0..s_T`, labels in `1..=K`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StatePath {
    states: Vec<usize>,
}

impl StatePath {
    pub fn new(states: Vec<usize>, k: usize) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::InvalidPath("empty state path".into()));
        }
        if let Some(&bad) = states.iter().find(|&&s| s == 0 || s > k) {
            return Err(Error::InvalidPath(format!(
                "state label {bad} outside 1..={k}"
            )));
        }
        Ok(Self { states })
    }

    pub fn states(&self) -> &[usize] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        false // constructor rejects empty paths
    }
}

/// Solves `v Q = v` for a valid transition matrix.
pub fn stationary_distribution(q: &TransitionMatrix) -> Result<Vec<f64>> {
    q.stationary()
}

/// Simulates `s_0..s_T` and `y_0..y_T` from the standard model. The same
/// seed always produces the same output.
pub fn simulate_standard(
    params: &StandardHmmParams,
    horizon: usize,
    seed: u64,
) -> Result<(StatePath, ObservationSeries)> {
    let mut rng = rng_from_seed(seed);
    simulate_standard_with_rng(params, horizon, &mut rng)
}

pub fn simulate_standard_with_rng<R: Rng + ?Sized>(
    params: &StandardHmmParams,
    horizon: usize,
    rng: &mut R,
) -> Result<(StatePath, ObservationSeries)> {
    let init = params.initial_distribution()?;
    let mut states = Vec::with_capacity(horizon + 1);
    let mut state = sample_index(&init, rng) + 1;
    states.push(state);
    for _ in 0..horizon {
        state = sample_index(params.transition.row(state), rng) + 1;
        states.push(state);
    }
    let y = sample_emissions(params.emissions(), &states, rng);
    Ok((
        StatePath {
            states,
        },
        y,
    ))
}

pub(crate) fn sample_emissions<R: Rng + ?Sized>(
    emissions: &Emissions,
    states: &[usize],
    rng: &mut R,
) -> ObservationSeries {
    match emissions {
        Emissions::Categorical { .. } => ObservationSeries::Symbols(
            states
                .iter()
                .map(|&s| match emissions.sample(s, rng) {
                    crate::emission::Observation::Symbol(v) => v,
                    _ => unreachable!(),
                })
                .collect(),
        ),
        Emissions::GaussianKnownVariance { .. } => ObservationSeries::Reals(
            states
                .iter()
                .map(|&s| match emissions.sample(s, rng) {
                    crate::emission::Observation::Real(v) => v,
                    _ => unreachable!(),
                })
                .collect(),
        ),
    }
}

/// Log-likelihood `log p(y_0..y_T | params)` via the scaled forward
/// recursion. Returns `-inf` when the data has probability zero.
pub fn loglik_standard(params: &StandardHmmParams, y: &ObservationSeries) -> Result<f64> {
    y.check_nonempty()?;
    params.emissions().check_series(y)?;
    let init = params.initial_distribution()?;
    let pass = scaled_forward(
        &init,
        |from, to| params.transition.rows()[from][to],
        |state, t| params.emissions().density(state + 1, y.get(t)),
        y.len(),
    );
    Ok(pass.log_likelihood)
}

/// Density of a single observation under the model's initial law:
/// the mixture `sum_k initial_k f(y0 | xi_k)`.
pub fn marginal_density_y0_standard(
    params: &StandardHmmParams,
    y0: crate::emission::Observation,
) -> Result<f64> {
    let init = params.initial_distribution()?;
    Ok(init
        .iter()
        .enumerate()
        .map(|(k, &w)| w * params.emissions().density(k + 1, y0))
        .sum())
}

/// Relabels states: state `k` of the result is state `tau(k)` of the
/// input, i.e. `q'_{kl} = q_{tau(k) tau(l)}` and `xi'_k = xi_{tau(k)}`.
/// Fixed initial vectors are permuted the same way.
pub fn relabel_params(
    params: &StandardHmmParams,
    tau: &crate::relabel::Permutation,
) -> Result<StandardHmmParams> {
    if tau.k() != params.k() {
        return Err(Error::DimensionMismatch(format!(
            "permutation on {} labels applied to a {}-state model",
            tau.k(),
            params.k()
        )));
    }
    let images = tau.images();
    let k = params.k();
    let mut rows = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in 0..k {
            rows[i][j] = params.transition.prob(images[i], images[j]);
        }
    }
    let initial = match &params.initial {
        InitialMode::Stationary => InitialMode::Stationary,
        InitialMode::Fixed(probs) => {
            InitialMode::Fixed(images.iter().map(|&i| probs[i - 1]).collect())
        }
    };
    StandardHmmParams::new(
        TransitionMatrix::new(rows)?,
        params.emissions.permute(images),
        initial,
    )
}
