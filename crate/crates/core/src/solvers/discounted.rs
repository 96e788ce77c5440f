use serde::Serialize;

use crate::error::Result;
use crate::linalg::Dense;
use crate::model::{induced_chain, MdpModel, StationaryPolicy};
use crate::scalar::{max_abs, Real};

use super::{check_gamma, greedy_sets, policies_from_sets};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscountedSolution<T> {
    pub gamma: T,
    pub v: Vec<T>,
}

impl<T: Real> DiscountedSolution<T> {
    /// `max_s |V(s) - r(s,π(s)) - γ Σ P V|`.
    pub fn residual(&self, model: &MdpModel<T>, policy: &StationaryPolicy) -> T {
        (0..model.n_states())
            .map(|s| {
                let a = policy.action(s);
                (self.v[s] - model.reward(s, a) - self.gamma * model.expect(s, a, &self.v)).abs()
            })
            .fold(T::zero(), T::max)
    }
}

/// Direct solve of `(I - γ P^π) V = r_π`.
pub fn solve_drpe<T: Real>(model: &MdpModel<T>, policy: &StationaryPolicy, gamma: T) -> Result<DiscountedSolution<T>> {
    check_gamma(gamma)?;
    let chain = induced_chain(model, policy)?;
    let n = model.n_states();
    let mut a = Dense::identity(n);
    for s in 0..n {
        for (j, &p) in chain.transition.row(s).iter().enumerate() {
            a[(s, j)] = a[(s, j)] - gamma * p;
        }
    }
    let v = a.solve(chain.reward)?;
    Ok(DiscountedSolution { gamma, v })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscountedOptimalSolution<T> {
    pub solution: DiscountedSolution<T>,
    pub greedy_actions: Vec<Vec<usize>>,
    pub optimal_policies: Vec<StationaryPolicy>,
    pub iterations: usize,
    /// Largest `‖V_k‖∞` seen over the iterates.
    pub max_iterate_norm: T,
}

impl<T: Real> DiscountedOptimalSolution<T> {
    pub fn policy(&self) -> &StationaryPolicy {
        &self.optimal_policies[0]
    }
}

/// Value iteration from `V_0 = 0`, stopped once
/// `‖V_{k+1} - V_k‖∞ <= tol (1-γ) / (2γ)` so that `‖V - V*‖∞ <= tol`.
pub fn solve_droe<T: Real>(model: &MdpModel<T>, gamma: T, tol: T) -> Result<DiscountedOptimalSolution<T>> {
    check_gamma(gamma)?;
    let n = model.n_states();
    let stop = tol * (T::one() - gamma) / (T::c(2.0) * gamma);
    let q = |v: &[T], s: usize, a: usize| model.reward(s, a) + gamma * model.expect(s, a, v);
    let mut v = vec![T::zero(); n];
    let mut max_norm = T::zero();
    let mut iterations = 0;
    loop {
        let next: Vec<T> = (0..n)
            .map(|s| (0..model.n_actions()).map(|a| q(&v, s, a)).fold(T::neg_infinity(), T::max))
            .collect();
        iterations += 1;
        let change = next.iter().zip(&v).fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs()));
        v = next;
        max_norm = max_norm.max(max_abs(&v));
        if change <= stop {
            break;
        }
    }
    let greedy_actions = greedy_sets(model, T::zero(), |s, a| q(&v, s, a));
    let optimal_policies = policies_from_sets(&greedy_actions);
    Ok(DiscountedOptimalSolution {
        solution: DiscountedSolution { gamma, v },
        greedy_actions,
        optimal_policies,
        iterations,
        max_iterate_norm: max_norm,
    })
}
