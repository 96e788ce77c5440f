use serde::Serialize;

use super::{Initial, RunKey, SimRng, LEARNER_SALT};
use crate::error::{Error, Result};
use crate::model::{FiniteHorizonPolicy, MdpModel, StationaryPolicy};
use crate::scalar::Real;

/// A sample path `S_0, A_0, r_0, …, S_T`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory<T> {
    pub states: Vec<usize>,
    pub actions: Vec<usize>,
    pub rewards: Vec<T>,
    pub seed: u64,
    pub stream: u64,
    pub policy_id: String,
}

impl<T: Real> Trajectory<T> {
    /// Number of steps `T`.
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn last_state(&self) -> usize {
        *self.states.last().expect("trajectory has S_0")
    }

    /// `R_T = Σ_{t<T} r(S_t, A_t)`.
    pub fn cumulative_reward(&self) -> T {
        self.rewards.iter().copied().sum()
    }

    /// `Σ_{t<T} γ^t r(S_t, A_t)` with each power evaluated directly.
    pub fn discounted_reward(&self, gamma: T) -> T {
        self.rewards
            .iter()
            .enumerate()
            .map(|(t, &r)| gamma.powi(t as i32) * r)
            .sum()
    }

    /// `R_0 = 0, R_1, …, R_T`.
    pub fn reward_prefix(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.rewards.len() + 1);
        let mut acc = T::zero();
        out.push(acc);
        for &r in &self.rewards {
            acc = acc + r;
            out.push(acc);
        }
        out
    }

    /// Checks lengths and that every transition has positive probability.
    pub fn check(&self, model: &MdpModel<T>) -> Result<()> {
        if self.states.len() != self.actions.len() + 1 || self.rewards.len() != self.actions.len() {
            return Err(Error::DomainError("inconsistent trajectory lengths".into()));
        }
        for t in 0..self.len() {
            let (s, a, next) = (self.states[t], self.actions[t], self.states[t + 1]);
            if model.prob(s, a, next) <= T::zero() {
                return Err(Error::DomainError(format!("zero-probability transition {s} -{a}-> {next} at t={t}")));
            }
        }
        Ok(())
    }
}

/// What a learner sees before choosing `A_t`: `S_0..S_t` and `A_0..A_{t-1}`.
#[derive(Debug, Clone, Copy)]
pub struct History<'a> {
    pub states: &'a [usize],
    pub actions: &'a [usize],
}

impl History<'_> {
    pub fn t(&self) -> usize {
        self.actions.len()
    }

    pub fn current(&self) -> usize {
        self.states[self.states.len() - 1]
    }
}

/// Any (possibly history-dependent, possibly randomized) decision rule.
/// Randomized rules draw from the private `rng`, never from the stream that
/// drives the transitions.
pub trait LearningPolicy: Sync {
    fn act(&self, history: &History<'_>, rng: &mut SimRng) -> usize;
    fn id(&self) -> String;
}

impl LearningPolicy for StationaryPolicy {
    fn act(&self, history: &History<'_>, _: &mut SimRng) -> usize {
        self.action(history.current())
    }

    fn id(&self) -> String {
        format!("stationary{self}")
    }
}

impl LearningPolicy for FiniteHorizonPolicy {
    fn act(&self, history: &History<'_>, _: &mut SimRng) -> usize {
        let t = history.t().min(self.horizon());
        self.stage(t).action(history.current())
    }

    fn id(&self) -> String {
        let stages: Vec<String> = self.stages().iter().map(|p| p.to_string()).collect();
        format!("finite_horizon[{}]", stages.join(","))
    }
}

/// Picks every action uniformly at random, ignoring the history.
#[derive(Debug, Clone, Copy)]
pub struct UniformRandomLearner {
    pub n_actions: usize,
}

impl LearningPolicy for UniformRandomLearner {
    fn act(&self, _: &History<'_>, rng: &mut SimRng) -> usize {
        rng.below(self.n_actions)
    }

    fn id(&self) -> String {
        "uniform_random".into()
    }
}

/// Simulates `t` steps on stream 0 of `seed`.
pub fn simulate<T: Real, P: LearningPolicy + ?Sized>(
    model: &MdpModel<T>,
    policy: &P,
    t: usize,
    seed: u64,
    initial: &Initial<T>,
) -> Result<Trajectory<T>> {
    simulate_run(model, policy, t, RunKey::new(seed, 0), initial)
}

/// Simulates `t` steps. Draw 0 of `key` selects `S_0`; draw `τ+1` selects
/// `S_{τ+1}` by inverse CDF over `P(·|S_τ, A_τ)`.
pub fn simulate_run<T: Real, P: LearningPolicy + ?Sized>(
    model: &MdpModel<T>,
    policy: &P,
    t: usize,
    key: RunKey,
    initial: &Initial<T>,
) -> Result<Trajectory<T>> {
    initial.check(model)?;
    let mut env = SimRng::new(key);
    let mut own = SimRng::new(key.salted(LEARNER_SALT));
    let mut states = Vec::with_capacity(t + 1);
    let mut actions = Vec::with_capacity(t);
    let mut rewards = Vec::with_capacity(t);
    states.push(initial.sample(&mut env));
    for _ in 0..t {
        let s = *states.last().expect("nonempty");
        let a = policy.act(
            &History {
                states: &states,
                actions: &actions,
            },
            &mut own,
        );
        if a >= model.n_actions() {
            return Err(Error::InvalidPolicy(format!("action {a} >= n_actions {}", model.n_actions())));
        }
        rewards.push(model.reward(s, a));
        actions.push(a);
        states.push(env.categorical(model.row(s, a)));
    }
    Ok(Trajectory {
        states,
        actions,
        rewards,
        seed: key.seed,
        stream: key.stream,
        policy_id: policy.id(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn deterministic_swap() {
        let m = fixtures::swap::<f64>(1.0, 0.0);
        let pi = StationaryPolicy::new(vec![0, 0]);
        let tr = simulate(&m, &pi, 4, 11, &Initial::Fixed(0)).unwrap();
        assert_eq!(tr.states, vec![0, 1, 0, 1, 0]);
        assert_eq!(tr.cumulative_reward(), 2.0);
        assert_eq!(tr.discounted_reward(0.5), 1.25);
        assert_eq!(tr.reward_prefix(), vec![0.0, 1.0, 1.0, 2.0, 2.0]);
        tr.check(&m).unwrap();
    }

    #[test]
    fn zero_rewards() {
        let m = fixtures::symmetric::<f64>(&[0.0, 0.0]);
        let tr = simulate(&m, &StationaryPolicy::new(vec![0, 1]), 50, 3, &Initial::Fixed(1)).unwrap();
        assert_eq!(tr.cumulative_reward(), 0.0);
    }

    #[test]
    fn same_seed_same_path() {
        let m = fixtures::symmetric::<f64>(&[1.0, 0.0]);
        let pi = StationaryPolicy::new(vec![0, 0]);
        let a = simulate(&m, &pi, 200, 99, &Initial::Fixed(0)).unwrap();
        let b = simulate(&m, &pi, 200, 99, &Initial::Fixed(0)).unwrap();
        let c = simulate(&m, &pi, 200, 100, &Initial::Fixed(0)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.states, c.states);
    }

    #[test]
    fn symmetric_occupation_frequency() {
        let m = fixtures::symmetric::<f64>(&[1.0, 0.0]);
        let tr = simulate(&m, &StationaryPolicy::new(vec![0, 0]), 10_000, 5, &Initial::Fixed(0)).unwrap();
        let freq = tr.states.iter().filter(|&&s| s == 0).count() as f64 / tr.states.len() as f64;
        assert!((freq - 0.5).abs() < 0.02);
    }

    #[test]
    fn random_learner_does_not_disturb_transitions() {
        // With uniform rows the action never matters for the next state, so
        // the state path is identical whatever the learner draws.
        let m = fixtures::symmetric::<f64>(&[1.0, 0.0]);
        let a = simulate(&m, &UniformRandomLearner { n_actions: 2 }, 300, 8, &Initial::Fixed(0)).unwrap();
        let b = simulate(&m, &StationaryPolicy::new(vec![1, 0]), 300, 8, &Initial::Fixed(0)).unwrap();
        assert_eq!(a.states, b.states);
        assert!(a.actions.iter().any(|&x| x == 0) && a.actions.iter().any(|&x| x == 1));
    }

    #[test]
    fn finite_horizon_policy_follows_stages() {
        let m = fixtures::swap::<f64>(1.0, 0.0);
        let pi = FiniteHorizonPolicy::new(vec![
            StationaryPolicy::new(vec![1, 1]),
            StationaryPolicy::new(vec![0, 0]),
        ])
        .unwrap();
        let tr = simulate(&m, &pi, 2, 1, &Initial::Fixed(0)).unwrap();
        assert_eq!(tr.actions, vec![1, 0]);
    }
}
