//! Shared scaled forward recursion.
//!
//! One kernel serves both parametrizations: the standard model runs it on
//! `Q` with its initial distribution, the ordered model runs it on the
//! expanded chain with all mass on the start state. Each step renormalizes
//! the filter and accumulates the log normalizer, which keeps short
//! horizons exact and long horizons stable.

/// Result of a forward pass over `n` observations.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    /// `log p(y_0..y_{n-1})`; `-inf` when the data has probability zero.
    pub log_likelihood: f64,
    /// Normalized filtering distributions `p(state_t | y_0..y_t)`, one row
    /// per time step. Rows after a zero normalizer are all zero.
    pub filters: Vec<Vec<f64>>,
}

/// Runs the scaled forward recursion.
///
/// `kernel(from, to)` and `emit(state, t)` take 0-based state indices;
/// `init` is the distribution of the state at `t = 0`.
pub fn scaled_forward(
    init: &[f64],
    kernel: impl Fn(usize, usize) -> f64,
    emit: impl Fn(usize, usize) -> f64,
    n_obs: usize,
) -> ForwardPass {
    let n_states = init.len();
    let mut filters = Vec::with_capacity(n_obs);
    let mut log_likelihood = 0.0;

    let mut alpha: Vec<f64> = (0..n_states).map(|s| init[s] * emit(s, 0)).collect();
    for t in 0..n_obs {
        if t > 0 {
            let prev = filters.last().unwrap() as &Vec<f64>;
            alpha = (0..n_states)
                .map(|to| {
                    let m: f64 = (0..n_states).map(|from| prev[from] * kernel(from, to)).sum();
                    m * emit(to, t)
                })
                .collect();
        }
        let norm: f64 = alpha.iter().sum();
        if norm <= 0.0 {
            // Zero-probability data: stop and mark the rest unreachable.
            log_likelihood = f64::NEG_INFINITY;
            filters.push(vec![0.0; n_states]);
            for _ in t + 1..n_obs {
                filters.push(vec![0.0; n_states]);
            }
            return ForwardPass {
                log_likelihood,
                filters,
            };
        }
        log_likelihood += norm.ln();
        for a in alpha.iter_mut() {
            *a /= norm;
        }
        filters.push(alpha.clone());
    }
    ForwardPass {
        log_likelihood,
        filters,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn two_step_two_state_matches_hand_sum() {
        // init (0.5, 0.5), kernel [[0.7,0.3],[0.4,0.6]], emissions by state:
        // e0 = (0.9, 0.2), e1 = (0.1, 0.8) for both times, observing "0" then "1".
        let q = [[0.7, 0.3], [0.4, 0.6]];
        let e = [[0.9, 0.2], [0.1, 0.8]]; // e[t][state]
        let pass = scaled_forward(
            &[0.5, 0.5],
            |i, j| q[i][j],
            |s, t| e[t][s],
            2,
        );
        // Brute force over the 4 paths.
        let mut total = 0.0;
        for s0 in 0..2 {
            for s1 in 0..2 {
                total += 0.5 * e[0][s0] * q[s0][s1] * e[1][s1];
            }
        }
        assert_relative_eq!(pass.log_likelihood, total.ln(), epsilon = 1e-12);
    }

    #[test]
    fn zero_probability_gives_neg_infinity() {
        let pass = scaled_forward(&[1.0], |_, _| 1.0, |_, _| 0.0, 3);
        assert_eq!(pass.log_likelihood, f64::NEG_INFINITY);
        assert_eq!(pass.filters.len(), 3);
    }

    #[test]
    fn filters_are_normalized() {
        let q = [[0.5, 0.5], [0.2, 0.8]];
        let pass = scaled_forward(
            &[0.3, 0.7],
            |i, j| q[i][j],
            |s, t| if (s + t) % 2 == 0 { 0.4 } else { 0.6 },
            5,
        );
        for row in &pass.filters {
            assert_relative_eq!(row.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        }
    }
}
