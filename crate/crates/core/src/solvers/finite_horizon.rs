use serde::Serialize;

use crate::error::Result;
use crate::model::{FiniteHorizonPolicy, MdpModel, StationaryPolicy};
use crate::scalar::Real;

/// Stagewise values `V_0, …, V_{h+1}` with `V_{h+1} ≡ 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiniteHorizonSolution<T> {
    pub horizon: usize,
    pub v: Vec<Vec<T>>,
}

impl<T: Real> FiniteHorizonSolution<T> {
    pub fn stage(&self, t: usize) -> &[T] {
        &self.v[t]
    }

    /// Largest violation of `V_t(s) = r(s,π_t(s)) + Σ P V_{t+1}` over all
    /// stages `t <= h`.
    pub fn residual(&self, model: &MdpModel<T>, policy: &FiniteHorizonPolicy) -> T {
        (0..=self.horizon)
            .flat_map(|t| {
                let pi = policy.stage(t);
                (0..model.n_states()).map(move |s| (t, s, pi.action(s)))
            })
            .map(|(t, s, a)| (self.v[t][s] - model.q_value(s, a, &self.v[t + 1])).abs())
            .fold(T::zero(), T::max)
    }
}

/// Backward induction of the finite-horizon policy evaluation recursion.
pub fn solve_fhpe<T: Real>(model: &MdpModel<T>, policy: &FiniteHorizonPolicy) -> Result<FiniteHorizonSolution<T>> {
    policy.check(model)?;
    let h = policy.horizon();
    let n = model.n_states();
    let mut v = vec![vec![T::zero(); n]; h + 2];
    for t in (0..=h).rev() {
        let pi = policy.stage(t);
        let (head, tail) = v.split_at_mut(t + 1);
        let next = &tail[0];
        for s in 0..n {
            head[t][s] = model.q_value(s, pi.action(s), next);
        }
    }
    Ok(FiniteHorizonSolution { horizon: h, v })
}

/// Backward induction of the finite-horizon optimality recursion. The
/// returned policy takes the lowest maximizing action at every stage.
pub fn solve_fhdp<T: Real>(model: &MdpModel<T>, horizon: usize) -> (FiniteHorizonSolution<T>, FiniteHorizonPolicy) {
    let n = model.n_states();
    let mut v = vec![vec![T::zero(); n]; horizon + 2];
    let mut stages = vec![StationaryPolicy::constant(n, 0); horizon + 1];
    for t in (0..=horizon).rev() {
        let mut actions = vec![0; n];
        for (s, action) in actions.iter_mut().enumerate() {
            let mut best = model.q_value(s, 0, &v[t + 1]);
            for a in 1..model.n_actions() {
                let q = model.q_value(s, a, &v[t + 1]);
                if q > best {
                    best = q;
                    *action = a;
                }
            }
            v[t][s] = best;
        }
        stages[t] = StationaryPolicy::new(actions);
    }
    let policy = FiniteHorizonPolicy::new(stages).expect("at least one stage");
    (FiniteHorizonSolution { horizon, v }, policy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::{enumerate_policies, random_model, Structure};

    #[test]
    fn zero_horizon_is_immediate_reward() {
        let m = random_model::<f64>(3, 2, 1.0, Structure::Dense, 5);
        let (opt, _) = solve_fhdp(&m, 0);
        for s in 0..3 {
            assert_eq!(opt.v[0][s], m.reward(s, 0).max(m.reward(s, 1)));
        }
        let pi = FiniteHorizonPolicy::stationary(StationaryPolicy::new(vec![1, 0, 1]), 0);
        let ev = solve_fhpe(&m, &pi).unwrap();
        assert_eq!(ev.v[0], vec![m.reward(0, 1), m.reward(1, 0), m.reward(2, 1)]);
        assert_eq!(ev.v[1], vec![0.0; 3]);
    }

    #[test]
    fn constant_reward_sums_over_stages() {
        let m = fixtures::symmetric::<f64>(&[0.25, 0.25]);
        let (opt, _) = solve_fhdp(&m, 7);
        assert!(opt.v[0].iter().all(|&x| (x - 8.0 * 0.25).abs() < 1e-14));
        assert_eq!(opt.v[8], vec![0.0, 0.0]);
    }

    #[test]
    fn swap_model_two_stages() {
        let m = fixtures::swap::<f64>(1.0, 0.0);
        let (opt, pi) = solve_fhdp(&m, 1);
        assert_eq!(opt.v[0], vec![1.0, 1.0]);
        assert_eq!(opt.v[1], vec![1.0, 0.0]);
        assert_eq!(pi.stage(0).actions(), &[0, 0]);
    }

    #[test]
    fn optimal_dominates_all_stagewise_policies() {
        let m = random_model::<f64>(2, 2, 1.0, Structure::Dense, 13);
        let h = 2;
        let (opt, greedy) = solve_fhdp(&m, h);
        assert!(solve_fhpe(&m, &greedy).unwrap().residual(&m, &greedy) < 1e-15);
        let singles: Vec<_> = enumerate_policies(&m, 100).unwrap().collect();
        for a in &singles {
            for b in &singles {
                for c in &singles {
                    let pi = FiniteHorizonPolicy::new(vec![a.clone(), b.clone(), c.clone()]).unwrap();
                    let ev = solve_fhpe(&m, &pi).unwrap();
                    for t in 0..=h + 1 {
                        assert!(ev.v[t].iter().zip(&opt.v[t]).all(|(x, y)| *x <= y + 1e-12));
                    }
                }
            }
        }
    }
}
