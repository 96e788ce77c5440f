//! Policy-evaluation and optimality equations for the average, discounted
//! and finite-horizon criteria.

mod average;
mod discounted;
mod finite_horizon;

pub use average::{solve_aroe, solve_arpe, AroeOptions, AverageEvalSolution, AverageOptimalSolution};
pub use discounted::{solve_droe, solve_drpe, DiscountedOptimalSolution, DiscountedSolution};
pub use finite_horizon::{solve_fhdp, solve_fhpe, FiniteHorizonSolution};

use crate::model::{MdpModel, StationaryPolicy};
use crate::scalar::Real;

/// Relative tolerance for collecting tied maximizers into the greedy set.
pub const TIE_TOL: f64 = 1e-9;

/// Upper limit on how many optimal policies are materialized from the
/// per-state greedy sets.
pub const MAX_OPTIMAL_POLICIES: usize = 4096;

/// Per-state sets of actions whose `q(s,a)` is within `TIE_TOL` (relative to
/// `max(1, |max_a q|)`) or `slack` (absolute) of the maximum.
pub(crate) fn greedy_sets<T: Real>(
    model: &MdpModel<T>,
    slack: T,
    q: impl Fn(usize, usize) -> T,
) -> Vec<Vec<usize>> {
    (0..model.n_states())
        .map(|s| {
            let qs: Vec<T> = (0..model.n_actions()).map(|a| q(s, a)).collect();
            let best = qs.iter().copied().fold(T::neg_infinity(), T::max);
            let tol = (T::tol(TIE_TOL) * best.abs().max(T::one())).max(slack);
            (0..model.n_actions()).filter(|&a| best - qs[a] <= tol).collect()
        })
        .collect()
}

/// Cartesian product of greedy sets in lexicographic order, truncated at
/// [`MAX_OPTIMAL_POLICIES`].
pub(crate) fn policies_from_sets(sets: &[Vec<usize>]) -> Vec<StationaryPolicy> {
    let mut out = Vec::new();
    let mut idx = vec![0usize; sets.len()];
    loop {
        out.push(StationaryPolicy::new(idx.iter().zip(sets).map(|(&i, s)| s[i]).collect()));
        if out.len() >= MAX_OPTIMAL_POLICIES {
            break;
        }
        let mut k = sets.len();
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < sets[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
    out
}

pub(crate) fn check_gamma<T: Real>(gamma: T) -> crate::error::Result<()> {
    if gamma > T::zero() && gamma < T::one() {
        Ok(())
    } else {
        Err(crate::error::Error::DomainError(format!("gamma = {gamma} not in (0,1)")))
    }
}
