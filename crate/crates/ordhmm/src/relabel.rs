//! Relabeling machinery: appearance records, the map from standard paths
//! to ordered paths, parameter pushforwards, and exact appearance-order
//! probabilities.
//!
//! The appearance record of a path lists state values in the order they
//! first occur. Mapping each state to its position in that record turns a
//! standard path into an ordered path, and reordering the parameters by a
//! completed record turns standard parameters into ordered parameters.
//! The probability that a chain discovers its states in a given order is
//! computed exactly from first-exit linear systems, one per seen-set.

use std::collections::HashMap;

use itertools::Itertools;
use nalgebra::DMatrix;
use rand::Rng;

use crate::emission::sample_index;
use crate::model::{StandardHmmParams, StatePath, TransitionMatrix};
use crate::ordered::{OrderedHmmParams, OrderedPath};
use crate::{Error, Result};

/// A permutation of the labels `1..=K`, stored as its image list.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    images: Vec<usize>,
}

impl Permutation {
    /// Validates that `images` is a bijection on `1..=K`.
    pub fn new(images: Vec<usize>) -> Result<Self> {
        let k = images.len();
        if k == 0 {
            return Err(Error::InvalidParameter("empty permutation".into()));
        }
        let mut hit = vec![false; k];
        for &v in &images {
            if v == 0 || v > k || hit[v - 1] {
                return Err(Error::InvalidParameter(format!(
                    "images {images:?} are not a permutation of 1..={k}"
                )));
            }
            hit[v - 1] = true;
        }
        Ok(Self { images })
    }

    pub fn identity(k: usize) -> Self {
        Self {
            images: (1..=k).collect(),
        }
    }

    pub fn k(&self) -> usize {
        self.images.len()
    }

    /// Image of label `i` (1-based).
    pub fn image(&self, i: usize) -> usize {
        self.images[i - 1]
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    pub fn inverse(&self) -> Permutation {
        let mut images = vec![0; self.images.len()];
        for (i, &v) in self.images.iter().enumerate() {
            images[v - 1] = i + 1;
        }
        Self { images }
    }

    /// Composition `self . other`: label `i` maps to `self(other(i))`.
    pub fn compose(&self, other: &Permutation) -> Permutation {
        Self {
            images: other.images.iter().map(|&v| self.image(v)).collect(),
        }
    }

    /// All permutations of `1..=K` in lexicographic order of their images.
    pub fn all(k: usize) -> Vec<Permutation> {
        (1..=k)
            .permutations(k)
            .map(|images| Permutation { images })
            .collect()
    }
}

/// The distinct state values of a path prefix, in order of first
/// appearance. Possibly shorter than K.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AppearanceRecord {
    seen: Vec<usize>,
}

impl AppearanceRecord {
    pub fn seen(&self) -> &[usize] {
        &self.seen
    }

    pub fn len(&self) -> usize {
        self.seen.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seen.is_empty()
    }

    pub fn is_complete(&self, k: usize) -> bool {
        self.seen.len() == k
    }

    /// 1-based position of `state` in the record, if it has appeared.
    pub fn position_of(&self, state: usize) -> Option<usize> {
        self.seen.iter().position(|&v| v == state).map(|p| p + 1)
    }

    /// Interprets a complete record as the permutation sending ordered
    /// labels to original labels.
    pub fn to_permutation(&self, k: usize) -> Result<Permutation> {
        if !self.is_complete(k) {
            return Err(Error::IncompleteRecord {
                seen: self.seen.len(),
                k,
            });
        }
        Permutation::new(self.seen.clone())
    }
}

/// First-appearance order of the states in `s`.
pub fn appearance_record(s: &StatePath) -> AppearanceRecord {
    let mut seen = Vec::new();
    for &state in s.states() {
        if !seen.contains(&state) {
            seen.push(state);
        }
    }
    AppearanceRecord { seen }
}

/// Rewrites a standard path in appearance-order coordinates: `z_t` is the
/// position of `s_t` in the record of `s_0..s_t`, and `m_t` counts the
/// distinct states so far. The result is label-free: relabeling `s` does
/// not change it.
pub fn to_ordered_path(s: &StatePath) -> OrderedPath {
    let mut seen: Vec<usize> = Vec::new();
    let mut z = Vec::with_capacity(s.len());
    let mut m = Vec::with_capacity(s.len());
    for &state in s.states() {
        let label = match seen.iter().position(|&v| v == state) {
            Some(pos) => pos + 1,
            None => {
                seen.push(state);
                seen.len()
            }
        };
        z.push(label);
        m.push(seen.len());
    }
    OrderedPath::new_unchecked(z, m)
}

/// Reorders standard parameters by a completed appearance order:
/// `qbar_{kl} = q_{sigma(k) sigma(l)}` and `xibar_k = xi_{sigma(k)}`. The
/// initial mode is dropped; the ordered model starts deterministically.
pub fn pushforward_params(
    params: &StandardHmmParams,
    sigma: &Permutation,
) -> Result<OrderedHmmParams> {
    if sigma.k() != params.k() {
        return Err(Error::DimensionMismatch(format!(
            "permutation on {} labels applied to a {}-state model",
            sigma.k(),
            params.k()
        )));
    }
    let k = params.k();
    let mut rows = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in 0..k {
            rows[i][j] = params.transition().prob(sigma.image(i + 1), sigma.image(j + 1));
        }
    }
    OrderedHmmParams::new(
        TransitionMatrix::new(rows)?,
        params.emissions().permute(sigma.images()),
    )
}

/// Exact first-exit probabilities for one transition matrix, memoized by
/// seen-set.
///
/// For a seen-set S, `exit_table(S)[i][j]` is the probability that a chain
/// currently at `i` (in S) first leaves S at state `j` (outside S). Rows
/// solve `h_j(i) = q_{ij} + sum_{l in S} q_{il} h_j(l)`.
pub struct OrderProbSolver<'a> {
    q: &'a TransitionMatrix,
    tables: HashMap<u64, Vec<Vec<f64>>>,
}

impl<'a> OrderProbSolver<'a> {
    /// Requires every entry of `q` to be strictly positive, which makes
    /// each system nonsingular and every appearance order possible.
    pub fn new(q: &'a TransitionMatrix) -> Result<Self> {
        if q.k() > 64 {
            return Err(Error::InvalidParameter(
                "appearance-order computations support at most 64 states".into(),
            ));
        }
        if !q.strictly_positive() {
            return Err(Error::ConditionViolated(
                "appearance-order probabilities require a strictly positive transition matrix"
                    .into(),
            ));
        }
        Ok(Self {
            q,
            tables: HashMap::new(),
        })
    }

    fn mask_of(states: impl IntoIterator<Item = usize>) -> u64 {
        states.into_iter().fold(0u64, |m, s| m | (1 << (s - 1)))
    }

    /// The K x K exit table for the seen-set encoded by `mask`; entries
    /// outside (seen row, unseen column) are zero.
    pub fn exit_table(&mut self, mask: u64) -> &Vec<Vec<f64>> {
        let k = self.q.k();
        let q = self.q;
        self.tables.entry(mask).or_insert_with(|| {
            let seen: Vec<usize> = (0..k).filter(|i| mask & (1 << i) != 0).collect();
            let unseen: Vec<usize> = (0..k).filter(|i| mask & (1 << i) == 0).collect();
            let mut table = vec![vec![0.0; k]; k];
            if seen.is_empty() || unseen.is_empty() {
                return table;
            }
            let ns = seen.len();
            let nu = unseen.len();
            let mut a = DMatrix::<f64>::zeros(ns, ns);
            for (ri, &i) in seen.iter().enumerate() {
                for (ci, &l) in seen.iter().enumerate() {
                    a[(ri, ci)] = if ri == ci { 1.0 } else { 0.0 } - q.rows()[i][l];
                }
            }
            let mut b = DMatrix::<f64>::zeros(ns, nu);
            for (ri, &i) in seen.iter().enumerate() {
                for (ci, &j) in unseen.iter().enumerate() {
                    b[(ri, ci)] = q.rows()[i][j];
                }
            }
            let h = a
                .lu()
                .solve(&b)
                .expect("strictly substochastic system is nonsingular");
            for (ri, &i) in seen.iter().enumerate() {
                for (ci, &j) in unseen.iter().enumerate() {
                    table[i][j] = h[(ri, ci)];
                }
            }
            table
        })
    }

    /// Probability that, starting from `current` with `seen` already
    /// discovered, the remaining states first appear exactly in the order
    /// `completion`. All labels 1-based; `completion` must cover every
    /// unseen state.
    pub fn completion_prob(
        &mut self,
        seen: &[usize],
        current: usize,
        completion: &[usize],
    ) -> f64 {
        let mut mask = Self::mask_of(seen.iter().copied());
        let mut from = current;
        let mut p = 1.0;
        for &next in completion {
            let table = self.exit_table(mask);
            p *= table[from - 1][next - 1];
            mask |= 1 << (next - 1);
            from = next;
        }
        p
    }

    /// Samples a completion of the appearance order, stage by stage, from
    /// the exact first-exit distributions.
    pub fn sample_completion<R: Rng + ?Sized>(
        &mut self,
        seen: &[usize],
        current: usize,
        rng: &mut R,
    ) -> Vec<usize> {
        let k = self.q.k();
        let mut mask = Self::mask_of(seen.iter().copied());
        let mut from = current;
        let mut out = Vec::new();
        while mask.count_ones() as usize size_hint() < k {
            let table = self.exit_table(mask);
            let weights = table[from - 1].clone();
            let next = sample_index(&weights, rng) + 1;
            out.push(next);
            mask |= 1 << (next - 1);
            from = next;
        }
        out
    }
}

/// Exact probability that the appearance order of the whole (infinite)
/// trajectory equals `order`, optionally conditioning on an observed path
/// prefix.
///
/// Without a prefix this is the initial-state probability of `order(1)`
/// times successive first-exit probabilities along `order`. With a prefix
/// the already-determined part of the record must match `order`, and the
/// product runs over the remaining stages starting from the prefix's last
/// state.
pub fn appearance_order_prob(
    params: &StandardHmmParams,
    order: &Permutation,
    prefix: Option<&StatePath>,
) -> Result<f64> {
    let k = params.k();
    if order.k() != k {
        return Err(Error::DimensionMismatch(format!(
            "order on {} labels for a {}-state model",
            order.k(),
            k
        )));
    }
    let mut solver = OrderProbSolver::new(params.transition())?;
    match prefix {
        None => {
            let init = params.initial_distribution()?;
            let first = order.image(1);
            let p0 = init[first - 1];
            let completion: Vec<usize> = (2..=k).map(|i| order.image(i)).collect();
            Ok(p0 * solver.completion_prob(&[first], first, &completion))
        }
        Some(path) => {
            if path.states().iter().any(|&s| s > k) {
                return Err(Error::DimensionMismatch(
                    "prefix contains labels outside the model".into(),
                ));
            }
            let record = appearance_record(path);
            for (i, &v) in record.seen().iter().enumerate() {
                if order.image(i + 1) != v {
                    return Err(Error::InconsistentPrefix);
                }
            }
            let current = *path.states().last().unwrap();
            let completion: Vec<usize> =
                (record.len() + 1..=k).map(|i| order.image(i)).collect();
            Ok(solver.completion_prob(record.seen(), current, &completion))
        }
    }
}

/// Exact distribution of the appearance order over all K! permutations,
/// in lexicographic order. Sums to one.
pub fn appearance_order_distribution(
    params: &StandardHmmParams,
) -> Result<Vec<(Permutation, f64)>> {
    let k = params.k();
    if k > 10 {
        return Err(Error::InvalidParameter(
            "full appearance-order enumeration is limited to K <= 10".into(),
        ));
    }
    let mut solver = OrderProbSolver::new(params.transition())?;
    let init = params.initial_distribution()?;
    let mut out = Vec::new();
    for order in Permutation::all(k) {
        let first = order.image(1);
        let completion: Vec<usize> = (2..=k).map(|i| order.image(i)).collect();
        let p = init[first - 1] * solver.completion_prob(&[first], first, &completion);
        out.push((order, p));
    }
    Ok(out)
}

/// Simulates the chain until every state has appeared and returns the
/// realized appearance order. Monte Carlo companion to the exact solver;
/// also the only route available when `Q` has zero entries.
pub fn sample_appearance_order<R: Rng + ?Sized>(
    params: &StandardHmmParams,
    max_steps: usize,
    rng: &mut R,
) -> Result<Permutation> {
    let k = params.k();
    let init = params.initial_distribution()?;
    let mut state = sample_index(&init, rng) + 1;
    let mut seen = vec![state];
    for _ in 0..max_steps {
        if seen.len() == k {
            break;
        }
        state = sample_index(params.transition().row(state), rng) + 1;
        if !seen.contains(&state) {
            seen.push(state);
        }
    }
    if seen.len() < k {
        return Err(Error::InvalidParameter(format!(
            "appearance order did not settle within {max_steps} steps"
        )));
    }
    Permutation::new(seen)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::emission::Emissions;
    use crate::model::InitialMode;
    use approx::assert_relative_eq;

    fn params_with_q(q: Vec<Vec<f64>>) -> StandardHmmParams {
        let k = q.len();
        StandardHmmParams::new(
            TransitionMatrix::new(q).unwrap(),
            Emissions::GaussianKnownVariance {
                means: (0..k).map(|i| i as f64).collect(),
                variance: 1.0,
            },
            InitialMode::Stationary,
        )
        .unwrap()
    }

    #[test]
    fn record_of_worked_example() {
        let s = StatePath::new(vec![4, 3, 4, 7, 3], 7).unwrap();
        assert_eq!(appearance_record(&s).seen(), &[4, 3, 7]);
    }

    #[test]
    fn record_trivial_cases() {
        let s = StatePath::new(vec![2, 2, 2], 3).unwrap();
        assert_eq!(appearance_record(&s).seen(), &[2]);
        let s = StatePath::new(vec![1, 2, 3], 3).unwrap();
        assert_eq!(appearance_record(&s).seen(), &[1, 2, 3]);
    }

    #[test]
    fn ordered_path_of_worked_example() {
        let s = StatePath::new(vec![4, 3, 4, 7, 3], 7).unwrap();
        let p = to_ordered_path(&s);
        assert_eq!(p.labels(), &[1, 2, 1, 3, 2]);
        assert_eq!(p.counts(), &[1, 2, 2, 3, 3]);
    }

    #[test]
    fn ordered_path_simple_cases() {
        let s = StatePath::new(vec![5, 5, 5], 5).unwrap();
        let p = to_ordered_path(&s);
        assert_eq!(p.labels(), &[1, 1, 1]);
        assert_eq!(p.counts(), &[1, 1, 1]);
        let s = StatePath::new(vec![1, 2, 1], 2).unwrap();
        let p = to_ordered_path(&s);
        assert_eq!(p.labels(), &[1, 2, 1]);
        assert_eq!(p.counts(), &[1, 2, 2]);
    }

    #[test]
    fn pushforward_identity_and_swap() {
        let params = params_with_q(vec![vec![0.9, 0.1], vec![0.2, 0.8]]);
        let id = pushforward_params(&params, &Permutation::identity(2)).unwrap();
        assert_eq!(id.transition().rows(), params.transition().rows());
        let sw = pushforward_params(&params, &Permutation::new(vec![2, 1]).unwrap()).unwrap();
        assert_relative_eq!(sw.transition().prob(1, 1), 0.8);
        assert_relative_eq!(sw.transition().prob(1, 2), 0.2);
        assert_relative_eq!(sw.transition().prob(2, 1), 0.1);
    }

    #[test]
    fn pushforward_stationary_is_permuted() {
        let params = params_with_q(vec![vec![0.9, 0.1], vec![0.2, 0.8]]);
        let sigma = Permutation::new(vec![2, 1]).unwrap();
        let pushed = pushforward_params(&params, &sigma).unwrap();
        let v = params.transition().stationary().unwrap();
        let vbar = pushed.transition().stationary().unwrap();
        for i in 1..=2 {
            assert_relative_eq!(vbar[i - 1], v[sigma.image(i) - 1], epsilon = 1e-10);
        }
    }

    #[test]
    fn two_state_order_prob_is_initial_mass() {
        let params = params_with_q(vec![vec![0.9, 0.1], vec![0.2, 0.8]]);
        let p12 =
            appearance_order_prob(&params, &Permutation::new(vec![1, 2]).unwrap(), None).unwrap();
        // With two states the order is settled by s_0 alone.
        assert_relative_eq!(p12, 2.0 / 3.0, epsilon = 1e-12);
        let p21 =
            appearance_order_prob(&params, &Permutation::new(vec![2, 1]).unwrap(), None).unwrap();
        assert_relative_eq!(p21, 1.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn uniform_three_state_orders_are_equiprobable() {
        let params = params_with_q(vec![vec![1.0 / 3.0; 3]; 3]);
        for (_, p) in appearance_order_distribution(&params).unwrap() {
            assert_relative_eq!(p, 1.0 / 6.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn order_distribution_sums_to_one() {
        let params = params_with_q(vec![
            vec![0.6, 0.3, 0.1],
            vec![0.2, 0.5, 0.3],
            vec![0.25, 0.3, 0.45],
        ]);
        let total: f64 = appearance_order_distribution(&params)
            .unwrap()
            .iter()
            .map(|(_, p)| p)
            .sum();
        assert_relative_eq!(total, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn exit_rows_are_probability_distributions() {
        let params = params_with_q(vec![
            vec![0.6, 0.3, 0.1],
            vec![0.2, 0.5, 0.3],
            vec![0.25, 0.3, 0.45],
        ]);
        let mut solver = OrderProbSolver::new(params.transition()).unwrap();
        for mask in 1u64..7 {
            let table = solver.exit_table(mask).clone();
            for i in 0..3 {
                if mask & (1 << i) == 0 {
                    continue;
                }
                let row_sum: f64 = table[i].iter().sum();
                assert_relative_eq!(row_sum, 1.0, epsilon = 1e-10);
                assert!(table[i].iter().all(|&h| (0.0..=1.0 + 1e-12).contains(&h)));
            }
        }
    }

    #[test]
    fn prefix_conditioning_matches_definition() {
        let params = params_with_q(vec![vec![0.9, 0.1], vec![0.2, 0.8]]);
        // Prefix (1): order (1,2) is the only consistent one and is certain.
        let prefix = StatePath::new(vec![1], 2).unwrap();
        let p = appearance_order_prob(
            &params,
            &Permutation::new(vec![1, 2]).unwrap(),
            Some(&prefix),
        )
        .unwrap();
        assert_relative_eq!(p, 1.0, epsilon = 1e-12);
        // Inconsistent prefix is an error.
        let err = appearance_order_prob(
            &params,
            &Permutation::new(vec![2, 1]).unwrap(),
            Some(&prefix),
        );
        assert!(matches!(err, Err(Error::InconsistentPrefix)));
    }

    #[test]
    fn zero_entries_violate_the_support_condition() {
        let params = params_with_q(vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
        let err = appearance_order_prob(&params, &Permutation::identity(2), None);
        assert!(matches!(err, Err(Error::ConditionViolated(_))));
    }

    #[test]
    fn equivariance_under_relabeling() {
        // P(sigma = tau^{-1} . rho | theta_tau) = P(sigma = rho | theta).
        let params = params_with_q(vec![
            vec![0.6, 0.3, 0.1],
            vec![0.2, 0.5, 0.3],
            vec![0.25, 0.3, 0.45],
        ]);
        for tau in Permutation::all(3) {
            let relabeled = crate::model::relabel_params(&params, &tau).unwrap();
            for rho in Permutation::all(3) {
                let lhs = appearance_order_prob(
                    &relabeled,
                    &tau.inverse().compose(&rho),
                    None,
                )
                .unwrap();
                let rhs = appearance_order_prob(&params, &rho, None).unwrap();
                assert_relative_eq!(lhs, rhs, epsilon = 1e-10);
            }
        }
    }
}
