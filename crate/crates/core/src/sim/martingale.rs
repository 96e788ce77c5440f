use serde::Serialize;

use super::Trajectory;
use crate::error::{Error, Result};
use crate::model::{FiniteHorizonPolicy, MdpModel, StationaryPolicy};
use crate::scalar::{max_abs, Real};
use crate::solvers::{AverageEvalSolution, DiscountedSolution, FiniteHorizonSolution};

/// Evaluation-equation residual above which `(policy, v)` is rejected.
pub const CONSISTENCY_TOL: f64 = 1e-6;

/// Which decomposition to apply, with the policy and value function it
/// is built from.
#[derive(Debug, Clone, Copy)]
pub enum Flavor<'a, T> {
    /// `R_T = Tλ + Σ M_t + V(S_0) - V(S_T)`.
    Average {
        policy: &'a StationaryPolicy,
        lambda: T,
        v: &'a [T],
    },
    /// `R^γ_T = Σ γ^t N_t + V_γ(S_0) - γ^T V_γ(S_T)`.
    Discounted {
        policy: &'a StationaryPolicy,
        gamma: T,
        v: &'a [T],
    },
    /// `R_T = Σ W_t + V_0(S_0) - V_T(S_T)`.
    FiniteHorizon {
        policy: &'a FiniteHorizonPolicy,
        v: &'a [Vec<T>],
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MartingaleTrace<T> {
    /// Increments `M_t` (or `N_t`, `W_t`) for `t = 1..=T`, unweighted.
    pub m: Vec<T>,
    /// Weights applied in the sum: `γ^t` for the discounted flavor, else 1.
    pub weights: Vec<T>,
    /// `Σ_{τ<=t} w_τ M_τ` for `t = 0..=T`.
    pub partial_sums: Vec<T>,
    /// Cumulative conditional variances `Σ_t = Σ_{τ<t} Var(M_{τ+1} | S_τ)`.
    pub sigma_cum: Vec<T>,
    /// `R_T` (discounted for that flavor).
    pub reward: T,
    /// Non-martingale part: `Tλ + V(S_0) - V(S_T)` or its analogue.
    pub center: T,
    /// `|reward - center - partial_sums[T]|`.
    pub identity_residual: T,
}

impl<T: Real> MartingaleTrace<T> {
    pub fn relative_residual(&self) -> T {
        self.identity_residual / (T::one() + self.reward.abs())
    }
}

fn inconsistent<T: Real>(residual: T, v_scale: T) -> Result<()> {
    if residual > T::tol(CONSISTENCY_TOL) * v_scale.max(T::one()) {
        Err(Error::InconsistentValueFunction {
            residual: residual.as_f64(),
        })
    } else {
        Ok(())
    }
}

/// Emits the martingale-difference terms of `traj` and checks the
/// decomposition identity.
pub fn martingale_trace<T: Real>(model: &MdpModel<T>, traj: &Trajectory<T>, flavor: Flavor<'_, T>) -> Result<MartingaleTrace<T>> {
    let n_steps = traj.len();
    match flavor {
        Flavor::Average { policy, lambda, v } => {
            policy.check(model)?;
            let eval = AverageEvalSolution {
                lambda,
                v: v.to_vec(),
                ref_state: 0,
            };
            inconsistent(eval.residual(model, policy), max_abs(v))?;
        }
        Flavor::Discounted { policy, gamma, v } => {
            policy.check(model)?;
            let eval = DiscountedSolution { gamma, v: v.to_vec() };
            inconsistent(eval.residual(model, policy), max_abs(v))?;
        }
        Flavor::FiniteHorizon { policy, v } => {
            policy.check(model)?;
            if v.len() != policy.horizon() + 2 {
                return Err(Error::DomainError("need V_0..V_{h+1}".into()));
            }
            if n_steps > policy.horizon() + 1 {
                return Err(Error::HorizonExceeded {
                    t: n_steps,
                    limit: policy.horizon() + 1,
                });
            }
            let sol = FiniteHorizonSolution {
                horizon: policy.horizon(),
                v: v.to_vec(),
            };
            let scale = v.iter().map(|x| max_abs(x)).fold(T::zero(), T::max);
            inconsistent(sol.residual(model, policy), scale)?;
        }
    }

    for t in 0..n_steps {
        let expected = match flavor {
            Flavor::Average { policy, .. } | Flavor::Discounted { policy, .. } => policy.action(traj.states[t]),
            Flavor::FiniteHorizon { policy, .. } => policy.stage(t.min(policy.horizon())).action(traj.states[t]),
        };
        if traj.actions[t] != expected {
            return Err(Error::InvalidPolicy(format!(
                "trajectory action {} at t={t} differs from policy action {expected}",
                traj.actions[t]
            )));
        }
    }

    let gamma = match flavor {
        Flavor::Discounted { gamma, .. } => Some(gamma),
        _ => None,
    };

    let mut m = Vec::with_capacity(n_steps);
    let mut weights = Vec::with_capacity(n_steps);
    let mut partial_sums = vec![T::zero()];
    let mut sigma_cum = vec![T::zero()];
    for t in 1..=n_steps {
        let prev = traj.states[t - 1];
        let a = traj.actions[t - 1];
        let v = match flavor {
            Flavor::Average { v, .. } | Flavor::Discounted { v, .. } => v,
            Flavor::FiniteHorizon { v, .. } => &v[t][..],
        };
        let row = model.row(prev, a);
        let mean = model.expect(prev, a, v);
        let var: T = row.iter().zip(v).map(|(&p, &x)| p * (x - mean) * (x - mean)).sum();
        let inc = v[traj.states[t]] - mean;
        let w = gamma.map_or(T::one(), |g| g.powi(t as i32));
        m.push(inc);
        weights.push(w);
        partial_sums.push(partial_sums[t - 1] + w * inc);
        sigma_cum.push(sigma_cum[t - 1] + var);
    }

    let s0 = traj.states[0];
    let st = traj.last_state();
    let (reward, center) = match flavor {
        Flavor::Average { lambda, v, .. } => (
            traj.cumulative_reward(),
            T::from_count(n_steps) * lambda + v[s0] - v[st],
        ),
        Flavor::Discounted { gamma, v, .. } => (
            traj.discounted_reward(gamma),
            v[s0] - gamma.powi(n_steps as i32) * v[st],
        ),
        Flavor::FiniteHorizon { v, .. } => (traj.cumulative_reward(), v[0][s0] - v[n_steps][st]),
    };
    let identity_residual = (reward - center - partial_sums[n_steps]).abs();
    Ok(MartingaleTrace {
        m,
        weights,
        partial_sums,
        sigma_cum,
        reward,
        center,
        identity_residual,
    })
}
