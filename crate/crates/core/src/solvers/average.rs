use serde::Serialize;

use crate::classify::{class_gains, classify_chain, classify_model, in_pi_ar, Flag};
use crate::error::{Error, Result};
use crate::linalg::Dense;
use crate::model::{induced_chain, MdpModel, StationaryPolicy};
use crate::scalar::Real;
use crate::stats::span;

use super::{greedy_sets, policies_from_sets};

/// Gain and differential value `(λ^π, V^π)` with `V(ref_state) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AverageEvalSolution<T> {
    pub lambda: T,
    pub v: Vec<T>,
    pub ref_state: usize,
}

impl<T: Real> AverageEvalSolution<T> {
    /// `max_s |λ + V(s) - r_π(s) - Σ P^π V|`.
    pub fn residual(&self, model: &MdpModel<T>, policy: &StationaryPolicy) -> T {
        (0..model.n_states())
            .map(|s| {
                let a = policy.action(s);
                (self.lambda + self.v[s] - model.q_value(s, a, &self.v)).abs()
            })
            .fold(T::zero(), T::max)
    }
}

/// Solves the average-reward policy evaluation equation
/// `λ + V(s) = r(s,π(s)) + Σ_s' P(s'|s,π(s)) V(s')` with `V(ref_state) = 0`.
///
/// Unichain chains use the bordered `(n+1)`-unknown system. Multichain
/// chains whose classes share one gain pin `V` at one state per class
/// instead, then shift so `V(ref_state) = 0`.
pub fn solve_arpe<T: Real>(
    model: &MdpModel<T>,
    policy: &StationaryPolicy,
    ref_state: usize,
) -> Result<AverageEvalSolution<T>> {
    policy.check(model)?;
    let n = model.n_states();
    if ref_state >= n {
        return Err(Error::DomainError(format!("ref_state {ref_state} >= n_states {n}")));
    }
    if !in_pi_ar(model, policy)? {
        return Err(Error::NotInPiAr);
    }
    let chain = induced_chain(model, policy)?;
    let structure = classify_chain(&chain, T::zero());

    if structure.is_unichain() {
        let mut a = Dense::zeros(n + 1);
        let mut b = vec![T::zero(); n + 1];
        for s in 0..n {
            let row = a.row_mut(s);
            for (j, &p) in chain.transition.row(s).iter().enumerate() {
                row[j] = -p;
            }
            row[s] = row[s] + T::one();
            row[n] = T::one();
            b[s] = chain.reward[s];
        }
        a[(n, ref_state)] = T::one();
        let x = a.solve(b)?;
        return Ok(AverageEvalSolution {
            lambda: x[n],
            v: x[..n].to_vec(),
            ref_state,
        });
    }

    let gains = class_gains(&chain, &structure)?;
    let lambda = gains.iter().copied().sum::<T>() / T::from_count(gains.len());
    let mut a = Dense::zeros(n);
    let mut b = vec![T::zero(); n];
    for s in 0..n {
        let row = a.row_mut(s);
        for (j, &p) in chain.transition.row(s).iter().enumerate() {
            row[j] = -p;
        }
        row[s] = row[s] + T::one();
        b[s] = chain.reward[s] - lambda;
    }
    for class in &structure.recurrent_classes {
        let pin = if class.contains(&ref_state) { ref_state } else { class[0] };
        a.row_mut(pin).iter_mut().for_each(|x| *x = T::zero());
        a[(pin, pin)] = T::one();
        b[pin] = T::zero();
    }
    let mut v = a.solve(b)?;
    let shift = v[ref_state];
    v.iter_mut().for_each(|x| *x = *x - shift);
    Ok(AverageEvalSolution { lambda, v, ref_state })
}

/// Relative value iteration settings.
#[derive(Debug, Clone, Copy)]
pub struct AroeOptions<T> {
    /// Stop once `span(TV - V) <= tol`.
    pub tol: T,
    pub max_iter: usize,
    pub ref_state: usize,
    /// Weight `d` of the damped operator `(1-d) V + d T V`.
    pub damping: T,
    /// Skip the weak-communication precheck.
    pub force: bool,
    /// Policy-enumeration cap used by the precheck.
    pub classify_cap: u128,
}

impl<T: Real> Default for AroeOptions<T> {
    fn default() -> Self {
        Self {
            tol: T::tol(1e-11),
            max_iter: 1_000_000,
            ref_state: 0,
            damping: T::c(0.5),
            force: false,
            classify_cap: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AverageOptimalSolution<T> {
    pub lambda_star: T,
    pub v_star: Vec<T>,
    pub ref_state: usize,
    /// Greedy actions per state under the tie tolerance.
    pub greedy_actions: Vec<Vec<usize>>,
    /// All greedy selections (truncated at `MAX_OPTIMAL_POLICIES`).
    pub optimal_policies: Vec<StationaryPolicy>,
    pub iterations: usize,
    pub final_span: T,
}

impl<T: Real> AverageOptimalSolution<T> {
    pub fn policy(&self) -> &StationaryPolicy {
        &self.optimal_policies[0]
    }

    /// `max_s |λ* + V*(s) - max_a [r(s,a) + Σ P V*]|`.
    pub fn residual(&self, model: &MdpModel<T>) -> T {
        (0..model.n_states())
            .map(|s| {
                let best = (0..model.n_actions())
                    .map(|a| model.q_value(s, a, &self.v_star))
                    .fold(T::neg_infinity(), T::max);
                (self.lambda_star + self.v_star[s] - best).abs()
            })
            .fold(T::zero(), T::max)
    }
}

/// Solves the average-reward optimality equation by damped relative value
/// iteration.
pub fn solve_aroe<T: Real>(model: &MdpModel<T>, opts: &AroeOptions<T>) -> Result<AverageOptimalSolution<T>> {
    let n = model.n_states();
    if opts.ref_state >= n {
        return Err(Error::DomainError(format!("ref_state {} >= n_states {n}", opts.ref_state)));
    }
    if !(opts.damping > T::zero() && opts.damping <= T::one()) {
        return Err(Error::DomainError(format!("damping {} not in (0,1]", opts.damping)));
    }
    if !opts.force && classify_model(model, opts.classify_cap).weakly_communicating == Flag::False {
        return Err(Error::NotSolvableHint);
    }

    let d = opts.damping;
    let mut v = vec![T::zero(); n];
    let mut tv = vec![T::zero(); n];
    let mut diff = vec![T::zero(); n];
    for k in 0..opts.max_iter {
        for s in 0..n {
            tv[s] = (0..model.n_actions())
                .map(|a| model.q_value(s, a, &v))
                .fold(T::neg_infinity(), T::max);
            diff[s] = tv[s] - v[s];
        }
        let sp = span(&diff)?;
        if sp <= opts.tol {
            let lo = diff.iter().copied().fold(T::infinity(), T::min);
            let hi = diff.iter().copied().fold(T::neg_infinity(), T::max);
            let lambda_star = (lo + hi) / T::c(2.0);
            let greedy_actions = greedy_sets(model, opts.tol, |s, a| model.q_value(s, a, &v));
            let optimal_policies = policies_from_sets(&greedy_actions);
            return Ok(AverageOptimalSolution {
                lambda_star,
                v_star: v,
                ref_state: opts.ref_state,
                greedy_actions,
                optimal_policies,
                iterations: k,
                final_span: sp,
            });
        }
        for s in 0..n {
            v[s] = (T::one() - d) * v[s] + d * tv[s];
        }
        let anchor = v[opts.ref_state];
        v.iter_mut().for_each(|x| *x = *x - anchor);
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iter,
        residual: span(&diff)?.as_f64(),
    })
}
