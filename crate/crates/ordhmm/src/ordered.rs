//! The appearance-ordered hidden Markov model.
//!
//! Hidden labels are assigned in order of first appearance: the first
//! state to occur is always labelled 1, the next new state 2, and so on.
//! The hidden process is the pair `(z_t, m_t)` where `z_t` is the current
//! label and `m_t` the number of labels seen so far. `(z, m)` is itself a
//! Markov chain on the K(K+1)/2 pairs with `z <= m`, which is how all
//! computations here are carried out. The start is deterministic at
//! `(1, 1)`, so no initial distribution is part of the parameters.

use rand::Rng;

use crate::emission::{sample_index, Emissions, ObservationSeries};
use crate::forward::{scaled_forward, ForwardPass};
use crate::model::{sample_emissions, TransitionMatrix};
use crate::seeding::rng_from_seed;
use crate::tol::Tolerances;
use crate::{Error, Result};

/// Parameters of the ordered model: a transition matrix read in
/// appearance-order coordinates and per-state emission parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderedHmmParams {
    transition: TransitionMatrix,
    emissions: Emissions,
}

impl OrderedHmmParams {
    pub fn new(transition: TransitionMatrix, emissions: Emissions) -> Result<Self> {
        Self::new_with_tol(transition, emissions, &Tolerances::default())
    }

    pub fn new_with_tol(
        transition: TransitionMatrix,
        emissions: Emissions,
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
        Ok(Self {
            transition,
            emissions,
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

    /// Largest absolute difference between the numeric entries of two
    /// parameter values. Used for atom matching.
    pub fn numeric_distance(&self, other: &OrderedHmmParams) -> f64 {
        use crate::model::{InitialMode, StandardHmmParams};
        let a = StandardHmmParams::new(
            self.transition.clone(),
            self.emissions.clone(),
            InitialMode::Fixed(uniform(self.k())),
        )
        .expect("valid by construction");
        let b = StandardHmmParams::new(
            other.transition.clone(),
            other.emissions.clone(),
            InitialMode::Fixed(uniform(other.k())),
        )
        .expect("valid by construction");
        a.numeric_distance(&b)
    }
}

fn uniform(k: usize) -> Vec<f64> {
    vec![1.0 / k as f64; k]
}

/// A realized hidden path of the ordered model: labels `z_0..z_T` and
/// appearance counts `m_0..m_T`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OrderedPath {
    z: Vec<usize>,
    m: Vec<usize>,
}

impl OrderedPath {
    /// Validates all structural rules: start at `(1, 1)`, `z_t <= m_t <= K`,
    /// `m_{t+1} = max(m_t, z_{t+1})`, and new labels only ever step to
    /// `m_t + 1`.
    pub fn new(z: Vec<usize>, m: Vec<usize>, k: usize) -> Result<Self> {
        if z.is_empty() || z.len() != m.len() {
            return Err(Error::InvalidPath(format!(
                "label and count sequences must be equal-length and nonempty (got {} and {})",
                z.len(),
                m.len()
            )));
        }
        if z[0] != 1 || m[0] != 1 {
            return Err(Error::InvalidPath(format!(
                "ordered paths start at (1, 1), got ({}, {})",
                z[0], m[0]
            )));
        }
        for t in 0..z.len() {
            if z[t] == 0 || z[t] > m[t] || m[t] > k {
                return Err(Error::InvalidPath(format!(
                    "(z, m) = ({}, {}) at t={t} violates 1 <= z <= m <= {k}",
                    z[t], m[t]
                )));
            }
            if t > 0 {
                if z[t] > m[t - 1] + 1 {
                    return Err(Error::InvalidPath(format!(
                        "label {} at t={t} skips ahead of {} seen states",
                        z[t],
                        m[t - 1]
                    )));
                }
                if m[t] != m[t - 1].max(z[t]) {
                    return Err(Error::InvalidPath(format!(
                        "count {} at t={t} is not max({}, {})",
                        m[t],
                        m[t - 1],
                        z[t]
                    )));
                }
            }
        }
        Ok(Self { z, m })
    }

    /// Builds a path from labels alone, deriving the running counts.
    pub fn from_labels(z: Vec<usize>, k: usize) -> Result<Self> {
        if z.is_empty() {
            return Err(Error::InvalidPath("empty label sequence".into()));
        }
        let mut m = Vec::with_capacity(z.len());
        let mut count = 0usize;
        for &label in &z {
            count = count.max(label);
            m.push(count);
        }
        Self::new(z, m, k)
    }

    pub(crate) fn new_unchecked(z: Vec<usize>, m: Vec<usize>) -> Self {
        Self { z, m }
    }

    /// Labels `z_0..z_T`.
    pub fn labels(&self) -> &[usize] {
        &self.z
    }

    /// Appearance counts `m_0..m_T`.
    pub fn counts(&self) -> &[usize] {
        &self.m
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        false // constructor rejects empty paths
    }

    /// Number of distinct labels at the end of the path.
    pub fn final_count(&self) -> usize {
        *self.m.last().unwrap()
    }
}

/// The expanded chain on pairs `(z, m)` with `z <= m`, materialized as a
/// dense row-stochastic matrix over K(K+1)/2 flat states.
///
/// Flat indices group pairs by `m`, so the block for each count is
/// contiguous: `(1,1), (1,2), (2,2), (1,3), ...`.
#[derive(Debug, Clone)]
pub struct ExpandedChain {
    k: usize,
    kernel: Vec<Vec<f64>>,
    pairs: Vec<(usize, usize)>,
}

impl ExpandedChain {
    /// Number of base states K.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of expanded states K(K+1)/2.
    pub fn n_states(&self) -> usize {
        self.pairs.len()
    }

    /// Flat index of the pair `(z, m)`, requiring `z <= m <= K`.
    pub fn flat_index(&self, z: usize, m: usize) -> usize {
        debug_assert!(z >= 1 && z <= m && m <= self.k);
        m * (m - 1) / 2 + (z - 1)
    }

    /// The pair `(z, m)` at a flat index.
    pub fn pair(&self, index: usize) -> (usize, usize) {
        self.pairs[index]
    }

    /// Row-stochastic kernel over flat states.
    pub fn kernel(&self) -> &[Vec<f64>] {
        &self.kernel
    }

    /// Transition probability between flat states.
    pub fn prob(&self, from: usize, to: usize) -> f64 {
        self.kernel[from][to]
    }
}

/// Builds the expanded `(z, m)` chain for the given parameters.
///
/// From `(k, m)`: staying among seen labels moves to `(l, m)` with
/// probability `q_{kl}` for `l <= m`; a new label moves to `(m+1, m+1)`
/// with the whole remaining mass `sum_{i=m+1..K} q_{ki}`. Everything else
/// has probability zero.
pub fn build_expanded_chain(params: &OrderedHmmParams) -> ExpandedChain {
    let k = params.k();
    let n = k * (k + 1) / 2;
    let mut pairs = Vec::with_capacity(n);
    for m in 1..=k {
        for z in 1..=m {
            pairs.push((z, m));
        }
    }
    let q = params.transition();
    let mut kernel = vec![vec![0.0; n]; n];
    for (from, &(z, m)) in pairs.iter().enumerate() {
        for l in 1..=m {
            kernel[from][m * (m - 1) / 2 + (l - 1)] = q.prob(z, l);
        }
        if m < k {
            let tail: f64 = (m + 1..=k).map(|i| q.prob(z, i)).sum();
            let to = (m + 1) * m / 2 + m; // flat index of (m+1, m+1)
            kernel[from][to] = tail;
        }
    }
    ExpandedChain { k, kernel, pairs }
}

/// Simulates `(z, m)_0..T` and observations from the ordered model.
pub fn simulate_ordered(
    params: &OrderedHmmParams,
    horizon: usize,
    seed: u64,
) -> (OrderedPath, ObservationSeries) {
    let mut rng = rng_from_seed(seed);
    simulate_ordered_with_rng(params, horizon, &mut rng)
}

pub fn simulate_ordered_with_rng<R: Rng + ?Sized>(
    params: &OrderedHmmParams,
    horizon: usize,
    rng: &mut R,
) -> (OrderedPath, ObservationSeries) {
    let chain = build_expanded_chain(params);
    let mut flat = chain.flat_index(1, 1);
    let mut z = Vec::with_capacity(horizon + 1);
    let mut m = Vec::with_capacity(horizon + 1);
    let (z0, m0) = chain.pair(flat);
    z.push(z0);
    m.push(m0);
    for _ in 0..horizon {
        flat = sample_index(&chain.kernel[flat], rng);
        let (zt, mt) = chain.pair(flat);
        z.push(zt);
        m.push(mt);
    }
    let y = sample_emissions(params.emissions(), &z, rng);
    (OrderedPath::new_unchecked(z, m), y)
}

fn expanded_forward(
    params: &OrderedHmmParams,
    y: &ObservationSeries,
) -> Result<(ExpandedChain, ForwardPass)> {
    y.check_nonempty()?;
    params.emissions().check_series(y)?;
    let chain = build_expanded_chain(params);
    let mut init = vec![0.0; chain.n_states()];
    init[chain.flat_index(1, 1)] = 1.0;
    let pass = scaled_forward(
        &init,
        |from, to| chain.kernel[from][to],
        |flat, t| {
            let (z, _) = chain.pair(flat);
            params.emissions().density(z, y.get(t))
        },
        y.len(),
    );
    Ok((chain, pass))
}

/// Log-likelihood of the ordered model via the scaled forward recursion
/// on the expanded chain. A length-1 series gives `log f(y_0 | xi_1)`.
pub fn loglik_ordered(params: &OrderedHmmParams, y: &ObservationSeries) -> Result<f64> {
    Ok(expanded_forward(params, y)?.1.log_likelihood)
}

/// Filtering distribution of the number of appeared states `m_T` given
/// the whole series. Sums to one.
pub fn m_posterior(params: &OrderedHmmParams, y: &ObservationSeries) -> Result<Vec<f64>> {
    let (chain, pass) = expanded_forward(params, y)?;
    let last = pass
        .filters
        .last()
        .ok_or_else(|| Error::InvalidParameter("empty observation series".into()))?;
    if pass.log_likelihood == f64::NEG_INFINITY {
        return Err(Error::ZeroLikelihood);
    }
    let mut out = vec![0.0; chain.k()];
    for (flat, &w) in last.iter().enumerate() {
        let (_, m) = chain.pair(flat);
        out[m - 1] += w;
    }
    Ok(out)
}
