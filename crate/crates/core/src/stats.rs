//! Dispersion statistics of a value function under a policy, plus the MDP
//! diameter.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::Dense;
use crate::model::{FiniteHorizonPolicy, MdpModel, StationaryPolicy};
use crate::scalar::Real;
use crate::solvers::FiniteHorizonSolution;

/// Expected hitting times beyond this many steps are reported as infinite.
pub const DIAMETER_CAP: f64 = 1e9;

/// Which successors the inner maximum of `K` ranges over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KScope {
    /// Every `s+` in the state space.
    #[default]
    AllStates,
    /// Only `s+` with `P(s+|s,π(s)) > 0`.
    Support,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DispersionStats<T> {
    pub h_span: T,
    pub k_dev: T,
    pub sigma: Vec<T>,
    /// `D · r_max`, present when the diameter was computed and is finite.
    pub d_rmax: Option<T>,
}

impl<T: Real> DispersionStats<T> {
    pub fn compute(model: &MdpModel<T>, policy: &StationaryPolicy, v: &[T], scope: KScope) -> Result<Self> {
        Ok(Self {
            h_span: span(v)?,
            k_dev: max_abs_deviation_scoped(model, policy, v, scope),
            sigma: conditional_std(model, policy, v),
            d_rmax: None,
        })
    }

    pub fn with_diameter(mut self, diameter: T, r_max: T) -> Self {
        self.d_rmax = diameter.is_finite().then(|| diameter * r_max);
        self
    }
}

/// `max(v) - min(v)`.
pub fn span<T: Real>(v: &[T]) -> Result<T> {
    if v.is_empty() {
        return Err(Error::EmptyVector);
    }
    let (lo, hi) = v
        .iter()
        .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    Ok(hi - lo)
}

fn conditional_means<T: Real>(model: &MdpModel<T>, policy: &StationaryPolicy, v: &[T]) -> Vec<T> {
    (0..model.n_states()).map(|s| model.expect(s, policy.action(s), v)).collect()
}

/// `max_{s,s+} |V(s+) - E[V(S+)|s,π(s)]|` with `s+` ranging over all states.
pub fn max_abs_deviation<T: Real>(model: &MdpModel<T>, policy: &StationaryPolicy, v: &[T]) -> T {
    max_abs_deviation_scoped(model, policy, v, KScope::AllStates)
}

pub fn max_abs_deviation_scoped<T: Real>(model: &MdpModel<T>, policy: &StationaryPolicy, v: &[T], scope: KScope) -> T {
    let means = conditional_means(model, policy, v);
    let mut k = T::zero();
    for (s, &m) in means.iter().enumerate() {
        let row = model.row(s, policy.action(s));
        for (next, &value) in v.iter().enumerate() {
            if scope == KScope::Support && row[next] <= T::zero() {
                continue;
            }
            k = k.max((value - m).abs());
        }
    }
    k
}

/// `σ(s) = sqrt(Σ_s' P(s'|s,π(s)) (V(s') - m(s))²)`, two-pass.
pub fn conditional_std<T: Real>(model: &MdpModel<T>, policy: &StationaryPolicy, v: &[T]) -> Vec<T> {
    conditional_means(model, policy, v)
        .into_iter()
        .enumerate()
        .map(|(s, m)| {
            let row = model.row(s, policy.action(s));
            row.iter()
                .zip(v)
                .map(|(&p, &x)| p * (x - m) * (x - m))
                .sum::<T>()
                .sqrt()
        })
        .collect()
}

/// Prefix sums `Σ_t = Σ_{τ<t} σ(S_τ)²` for `t = 0..=states.len()`.
pub fn sigma_process<T: Real>(states: &[usize], sigma: &[T]) -> Vec<T> {
    let mut out = Vec::with_capacity(states.len() + 1);
    let mut acc = T::zero();
    out.push(acc);
    for &s in states {
        acc = acc + sigma[s] * sigma[s];
        out.push(acc);
    }
    out
}

/// `max_{s≠s'} min_π E[hitting time of s' from s]`, or `+∞` when some
/// target is unreachable or the hitting time exceeds [`DIAMETER_CAP`].
///
/// Each target runs value iteration on the stochastic shortest path
/// operator, then refines the greedy policy by exact policy evaluation
/// until it is stable.
pub fn diameter<T: Real>(model: &MdpModel<T>, tol: T, max_iter: usize) -> Result<T> {
    let n = model.n_states();
    if n == 1 {
        return Ok(T::zero());
    }
    let succ = model.union_successors(T::zero());
    let per_target: Vec<Result<T>> = (0..n)
        .into_par_iter()
        .map(|target| {
            if !all_reach(&succ, target) {
                return Ok(T::infinity());
            }
            hitting_times(model, target, tol, max_iter)
                .map(|h| h.iter().copied().fold(T::zero(), T::max))
        })
        .collect();
    per_target
        .into_iter()
        .try_fold(T::zero(), |d, h| h.map(|h| d.max(h)))
}

fn all_reach(succ: &[Vec<usize>], target: usize) -> bool {
    let n = succ.len();
    let mut pred = vec![Vec::new(); n];
    for (s, next) in succ.iter().enumerate() {
        for &j in next {
            pred[j].push(s);
        }
    }
    let mut seen = vec![false; n];
    seen[target] = true;
    let mut stack = vec![target];
    while let Some(j) = stack.pop() {
        for &s in &pred[j] {
            if !seen[s] {
                seen[s] = true;
                stack.push(s);
            }
        }
    }
    seen.into_iter().all(|x| x)
}

fn ssp_q<T: Real>(model: &MdpModel<T>, target: usize, h: &[T], s: usize, a: usize) -> T {
    let row = model.row(s, a);
    T::one()
        + row
            .iter()
            .zip(h)
            .enumerate()
            .filter(|&(j, _)| j != target)
            .map(|(_, (&p, &x))| p * x)
            .sum::<T>()
}

/// Minimal expected hitting times of `target` from every state.
pub fn hitting_times<T: Real>(model: &MdpModel<T>, target: usize, tol: T, max_iter: usize) -> Result<Vec<T>> {
    let n = model.n_states();
    let cap = T::c(DIAMETER_CAP);
    let bellman = |h: &[T]| -> Vec<T> {
        (0..n)
            .map(|s| {
                if s == target {
                    T::zero()
                } else {
                    (0..model.n_actions())
                        .map(|a| ssp_q(model, target, h, s, a))
                        .fold(T::infinity(), T::min)
                }
            })
            .collect()
    };

    let mut h = vec![T::zero(); n];
    let mut change = T::infinity();
    let mut iterations = 0;
    while iterations < max_iter {
        let next = bellman(&h);
        change = next.iter().zip(&h).fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs()));
        h = next;
        iterations += 1;
        if change <= tol || h.iter().any(|&x| x > cap) {
            break;
        }
    }
    if h.iter().any(|&x| x > cap) {
        return Ok(vec![T::infinity(); n]);
    }

    // Exact refinement from the greedy policy of the value iterate.
    let mut policy: Vec<usize> = (0..n).map(|s| greedy_ssp(model, target, &h, s, None)).collect();
    for _ in 0..=n * model.n_actions() {
        let Ok(exact) = evaluate_ssp(model, target, &policy) else {
            break;
        };
        if exact.iter().any(|&x| !x.is_finite() || x < T::zero()) {
            break;
        }
        let improved: Vec<usize> = (0..n)
            .map(|s| greedy_ssp(model, target, &exact, s, Some(policy[s])))
            .collect();
        if improved == policy {
            if exact.iter().any(|&x| x > cap) {
                return Ok(vec![T::infinity(); n]);
            }
            return Ok(exact);
        }
        policy = improved;
    }
    if change <= tol {
        Ok(h)
    } else {
        Err(Error::NoConvergence {
            iterations,
            residual: change.as_f64(),
        })
    }
}

fn greedy_ssp<T: Real>(model: &MdpModel<T>, target: usize, h: &[T], s: usize, keep: Option<usize>) -> usize {
    if s == target {
        return keep.unwrap_or(0);
    }
    let qs: Vec<T> = (0..model.n_actions()).map(|a| ssp_q(model, target, h, s, a)).collect();
    let best = qs.iter().copied().fold(T::infinity(), T::min);
    let slack = T::tol(1e-12) * best.abs().max(T::one());
    if let Some(a) = keep {
        if qs[a] <= best + slack {
            return a;
        }
    }
    qs.iter().position(|&q| q <= best + slack).unwrap_or(0)
}

fn evaluate_ssp<T: Real>(model: &MdpModel<T>, target: usize, policy: &[usize]) -> Result<Vec<T>> {
    let n = model.n_states();
    let mut a = Dense::identity(n);
    let mut b = vec![T::one(); n];
    b[target] = T::zero();
    for (s, &act) in policy.iter().enumerate() {
        if s == target {
            continue;
        }
        for (j, &p) in model.row(s, act).iter().enumerate() {
            if j != target {
                a[(s, j)] = a[(s, j)] - p;
            }
        }
    }
    a.solve(b)
}

/// Per-stage dispersion of a finite-horizon value sequence.
///
/// Vectors are indexed by `t = 0..=h+1`; stage `h+1` has the zero value
/// function so `K_{h+1} = H_{h+1} = 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiniteHorizonDispersion<T> {
    pub horizon: usize,
    pub k_per_stage: Vec<T>,
    pub h_per_stage: Vec<T>,
    pub k_bar: Vec<T>,
    pub h_bar: Vec<T>,
    pub g: Vec<T>,
}

impl<T: Real> FiniteHorizonDispersion<T> {
    /// Builds the running maxima and `g(T) = Σ_{t=1}^T K_t² / K̄_T²` from
    /// per-stage values.
    pub fn from_stages(k_per_stage: Vec<T>, h_per_stage: Vec<T>) -> Self {
        let horizon = k_per_stage.len().saturating_sub(2);
        let running_max = |v: &[T]| -> Vec<T> {
            v.iter()
                .scan(T::zero(), |m, &x| {
                    *m = m.max(x);
                    Some(*m)
                })
                .collect()
        };
        let k_bar = running_max(&k_per_stage);
        let h_bar = running_max(&h_per_stage);
        let mut g = Vec::with_capacity(k_per_stage.len());
        let mut sum_sq = T::zero();
        for (t, &k) in k_per_stage.iter().enumerate() {
            if t > 0 {
                sum_sq = sum_sq + k * k;
            }
            let kb = k_bar[t];
            g.push(if kb > T::zero() { sum_sq / (kb * kb) } else { T::zero() });
        }
        Self {
            horizon,
            k_per_stage,
            h_per_stage,
            k_bar,
            h_bar,
            g,
        }
    }

    pub fn k_bar_at(&self, t: usize) -> T {
        self.k_bar[t]
    }

    pub fn h_bar_at(&self, t: usize) -> T {
        self.h_bar[t]
    }

    pub fn g_at(&self, t: usize) -> T {
        self.g[t]
    }

    /// Largest valid `T`, namely `h + 1`.
    pub fn t_max(&self) -> usize {
        self.horizon + 1
    }
}

/// `K_t` and `H_t` from stage value `V_t` and stage policy `π_t`.
pub fn fh_dispersion<T: Real>(
    model: &MdpModel<T>,
    policy: &FiniteHorizonPolicy,
    solution: &FiniteHorizonSolution<T>,
) -> Result<FiniteHorizonDispersion<T>> {
    policy.check(model)?;
    if solution.horizon != policy.horizon() || solution.v.len() != policy.horizon() + 2 {
        return Err(Error::DomainError(format!(
            "solution horizon {} does not match policy horizon {}",
            solution.horizon,
            policy.horizon()
        )));
    }
    let h = policy.horizon();
    let mut k = Vec::with_capacity(h + 2);
    let mut hs = Vec::with_capacity(h + 2);
    for t in 0..=h {
        k.push(max_abs_deviation(model, policy.stage(t), &solution.v[t]));
        hs.push(span(&solution.v[t])?);
    }
    k.push(T::zero());
    hs.push(T::zero());
    Ok(FiniteHorizonDispersion::from_stages(k, hs))
}
