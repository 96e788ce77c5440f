//! MDP data model, policies, induced chains and the JSON model format.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, ModelError, Result};
use crate::linalg::Dense;
use crate::scalar::Real;

/// On-disk model description. Field names and nesting are the file format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawModel {
    pub n_states: usize,
    pub n_actions: usize,
    pub r_max: f64,
    /// Indexed `[s][a][s']`.
    pub transition: Vec<Vec<Vec<f64>>>,
    /// Indexed `[s][a]`.
    pub reward: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state_names: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action_names: Option<Vec<String>>,
}

impl RawModel {
    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }
}

/// A validated finite MDP. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct MdpModel<T> {
    n_states: usize,
    n_actions: usize,
    /// Flat `[s][a][s']`.
    transition: Vec<T>,
    /// Flat `[s][a]`.
    reward: Vec<T>,
    r_max: T,
    gamma: Option<T>,
    horizon: Option<usize>,
    state_names: Option<Vec<String>>,
    action_names: Option<Vec<String>>,
}

/// Lists every invariant violation in `raw`, in (state, action) order.
pub fn model_issues(raw: &RawModel) -> Vec<ModelError> {
    let mut issues = Vec::new();
    let (ns, na) = (raw.n_states, raw.n_actions);
    if ns == 0 || na == 0 {
        issues.push(ModelError::DimensionMismatch(format!(
            "n_states = {ns} and n_actions = {na} must be positive"
        )));
        return issues;
    }
    if !(raw.r_max.is_finite() && raw.r_max > 0.0) {
        issues.push(ModelError::DimensionMismatch(format!(
            "r_max = {} must be positive and finite",
            raw.r_max
        )));
    }
    if raw.transition.len() != ns {
        issues.push(ModelError::DimensionMismatch(format!(
            "transition has {} state rows, expected {ns}",
            raw.transition.len()
        )));
    }
    if raw.reward.len() != ns {
        issues.push(ModelError::DimensionMismatch(format!(
            "reward has {} state rows, expected {ns}",
            raw.reward.len()
        )));
    }
    if let Some(g) = raw.gamma {
        if !(g > 0.0 && g < 1.0) {
            issues.push(ModelError::DimensionMismatch(format!("gamma = {g} not in (0,1)")));
        }
    }
    if let Some(names) = &raw.state_names {
        if names.len() != ns {
            issues.push(ModelError::DimensionMismatch(format!(
                "{} state names for {ns} states",
                names.len()
            )));
        }
    }
    if let Some(names) = &raw.action_names {
        if names.len() != na {
            issues.push(ModelError::DimensionMismatch(format!(
                "{} action names for {na} actions",
                names.len()
            )));
        }
    }
    if !issues.is_empty() {
        return issues;
    }

    for s in 0..ns {
        if raw.transition[s].len() != na {
            issues.push(ModelError::DimensionMismatch(format!(
                "transition[{s}] has {} actions, expected {na}",
                raw.transition[s].len()
            )));
            continue;
        }
        if raw.reward[s].len() != na {
            issues.push(ModelError::DimensionMismatch(format!(
                "reward[{s}] has {} actions, expected {na}",
                raw.reward[s].len()
            )));
            continue;
        }
        for a in 0..na {
            let row = &raw.transition[s][a];
            if row.len() != ns {
                issues.push(ModelError::DimensionMismatch(format!(
                    "transition[{s}][{a}] has length {}, expected {ns}",
                    row.len()
                )));
                continue;
            }
            let mut bad_entry = false;
            for (next, &p) in row.iter().enumerate() {
                if !(p.is_finite() && p >= 0.0) {
                    issues.push(ModelError::InvalidProbability {
                        state: s,
                        action: a,
                        next,
                        value: p,
                    });
                    bad_entry = true;
                }
            }
            if !bad_entry {
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > f64::STOCHASTIC_TOL {
                    issues.push(ModelError::NonStochasticRow {
                        state: s,
                        action: a,
                        deficit: 1.0 - sum,
                    });
                }
            }
            let r = raw.reward[s][a];
            if !(r.is_finite() && r >= 0.0 && r <= raw.r_max) {
                issues.push(ModelError::RewardOutOfRange {
                    state: s,
                    action: a,
                    value: r,
                });
            }
        }
    }
    issues
}

/// Validates a raw description into a double precision model.
pub fn validate_model(raw: &RawModel) -> Result<MdpModel<f64>> {
    MdpModel::from_raw(raw)
}

impl<T: Real> MdpModel<T> {
    /// Validates `raw` and converts it to scalar type `T`.
    pub fn from_raw(raw: &RawModel) -> Result<Self> {
        if let Some(first) = model_issues(raw).into_iter().next() {
            return Err(first.into());
        }
        let transition = raw
            .transition
            .iter()
            .flat_map(|per_s| per_s.iter().flat_map(|row| row.iter().map(|&p| T::c(p))))
            .collect();
        let reward = raw
            .reward
            .iter()
            .flat_map(|per_s| per_s.iter().map(|&r| T::c(r)))
            .collect();
        let model = Self {
            n_states: raw.n_states,
            n_actions: raw.n_actions,
            transition,
            reward,
            r_max: T::c(raw.r_max),
            gamma: raw.gamma.map(T::c),
            horizon: raw.horizon,
            state_names: raw.state_names.clone(),
            action_names: raw.action_names.clone(),
        };
        // Re-check the row sums in T when T is coarser than f64.
        if T::STOCHASTIC_TOL != f64::STOCHASTIC_TOL {
            model.check_rows()?;
        }
        Ok(model)
    }

    /// Builds a model from nested `[s][a][s']` and `[s][a]` tables.
    pub fn from_tables(transition: Vec<Vec<Vec<T>>>, reward: Vec<Vec<T>>, r_max: T) -> Result<Self> {
        let n_states = transition.len();
        let n_actions = transition.first().map_or(0, Vec::len);
        let raw = RawModel {
            n_states,
            n_actions,
            r_max: r_max.as_f64(),
            transition: transition
                .iter()
                .map(|per_s| per_s.iter().map(|row| row.iter().map(|p| p.as_f64()).collect()).collect())
                .collect(),
            reward: reward
                .iter()
                .map(|per_s| per_s.iter().map(|r| r.as_f64()).collect())
                .collect(),
            gamma: None,
            horizon: None,
            state_names: None,
            action_names: None,
        };
        let issues = if T::STOCHASTIC_TOL == f64::STOCHASTIC_TOL {
            model_issues(&raw)
        } else {
            // Row sums are checked in T below; keep only structural issues.
            model_issues(&raw)
                .into_iter()
                .filter(|e| !matches!(e, ModelError::NonStochasticRow { .. }))
                .collect()
        };
        if let Some(first) = issues.into_iter().next() {
            return Err(first.into());
        }
        let model = Self {
            n_states,
            n_actions,
            transition: transition.into_iter().flatten().flatten().collect(),
            reward: reward.into_iter().flatten().collect(),
            r_max,
            gamma: None,
            horizon: None,
            state_names: None,
            action_names: None,
        };
        model.check_rows()?;
        Ok(model)
    }

    fn check_rows(&self) -> Result<()> {
        let tol = T::c(T::STOCHASTIC_TOL);
        for s in 0..self.n_states {
            for a in 0..self.n_actions {
                let sum: T = self.row(s, a).iter().copied().sum();
                if (sum - T::one()).abs() > tol {
                    return Err(ModelError::NonStochasticRow {
                        state: s,
                        action: a,
                        deficit: (T::one() - sum).as_f64(),
                    }
                    .into());
                }
            }
        }
        Ok(())
    }

    pub fn to_raw(&self) -> RawModel {
        RawModel {
            n_states: self.n_states,
            n_actions: self.n_actions,
            r_max: self.r_max.as_f64(),
            transition: (0..self.n_states)
                .map(|s| {
                    (0..self.n_actions)
                        .map(|a| self.row(s, a).iter().map(|p| p.as_f64()).collect())
                        .collect()
                })
                .collect(),
            reward: (0..self.n_states)
                .map(|s| (0..self.n_actions).map(|a| self.reward(s, a).as_f64()).collect())
                .collect(),
            gamma: self.gamma.map(Real::as_f64),
            horizon: self.horizon,
            state_names: self.state_names.clone(),
            action_names: self.action_names.clone(),
        }
    }

    pub fn with_gamma(mut self, gamma: Option<T>) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_horizon(mut self, horizon: Option<usize>) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn r_max(&self) -> T {
        self.r_max
    }

    pub fn gamma(&self) -> Option<T> {
        self.gamma
    }

    pub fn horizon(&self) -> Option<usize> {
        self.horizon
    }

    pub fn state_names(&self) -> Option<&[String]> {
        self.state_names.as_deref()
    }

    pub fn action_names(&self) -> Option<&[String]> {
        self.action_names.as_deref()
    }

    /// `P(·|s,a)`.
    #[inline]
    pub fn row(&self, s: usize, a: usize) -> &[T] {
        let start = (s * self.n_actions + a) * self.n_states;
        &self.transition[start..start + self.n_states]
    }

    #[inline]
    pub fn prob(&self, s: usize, a: usize, next: usize) -> T {
        self.row(s, a)[next]
    }

    #[inline]
    pub fn reward(&self, s: usize, a: usize) -> T {
        self.reward[s * self.n_actions + a]
    }

    /// `r(s,a) + Σ_s' P(s'|s,a) v(s')`.
    #[inline]
    pub fn q_value(&self, s: usize, a: usize, v: &[T]) -> T {
        self.reward(s, a) + crate::linalg::dot(self.row(s, a), v)
    }

    /// `E[v(S+) | s, a]`.
    #[inline]
    pub fn expect(&self, s: usize, a: usize, v: &[T]) -> T {
        crate::linalg::dot(self.row(s, a), v)
    }

    /// Union support digraph: `s -> s'` when `P(s'|s,a) > tol` for some `a`.
    pub fn union_successors(&self, tol: T) -> Vec<Vec<usize>> {
        (0..self.n_states)
            .map(|s| {
                (0..self.n_states)
                    .filter(|&n| (0..self.n_actions).any(|a| self.prob(s, a, n) > tol))
                    .collect()
            })
            .collect()
    }

    pub fn policy_count(&self) -> u128 {
        (self.n_actions as u128)
            .checked_pow(self.n_states as u32)
            .unwrap_or(u128::MAX)
    }
}

/// Deterministic stationary decision rule `s -> π(s)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StationaryPolicy(Vec<usize>);

impl StationaryPolicy {
    pub fn new(actions: Vec<usize>) -> Self {
        Self(actions)
    }

    pub fn constant(n_states: usize, action: usize) -> Self {
        Self(vec![action; n_states])
    }

    pub fn action(&self, s: usize) -> usize {
        self.0[s]
    }

    pub fn actions(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn check<T: Real>(&self, model: &MdpModel<T>) -> Result<()> {
        if self.0.len() != model.n_states() {
            return Err(Error::InvalidPolicy(format!(
                "policy covers {} states, model has {}",
                self.0.len(),
                model.n_states()
            )));
        }
        if let Some((s, &a)) = self.0.iter().enumerate().find(|(_, &a)| a >= model.n_actions()) {
            return Err(Error::InvalidPolicy(format!(
                "action {a} in state {s} out of range (n_actions = {})",
                model.n_actions()
            )));
        }
        Ok(())
    }
}

impl std::fmt::Display for StationaryPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(ToString::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Per-stage decision rules `π_0, …, π_h`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiniteHorizonPolicy {
    stages: Vec<StationaryPolicy>,
}

impl FiniteHorizonPolicy {
    pub fn new(stages: Vec<StationaryPolicy>) -> Result<Self> {
        if stages.is_empty() {
            return Err(Error::InvalidPolicy("finite-horizon policy needs h+1 >= 1 stages".into()));
        }
        Ok(Self { stages })
    }

    /// The same decision rule at every stage `0..=horizon`.
    pub fn stationary(policy: StationaryPolicy, horizon: usize) -> Self {
        Self {
            stages: vec![policy; horizon + 1],
        }
    }

    pub fn horizon(&self) -> usize {
        self.stages.len() - 1
    }

    pub fn stage(&self, t: usize) -> &StationaryPolicy {
        &self.stages[t]
    }

    pub fn stages(&self) -> &[StationaryPolicy] {
        &self.stages
    }

    pub fn check<T: Real>(&self, model: &MdpModel<T>) -> Result<()> {
        self.stages.iter().try_for_each(|p| p.check(model))
    }
}

/// Markov chain `(P^π, r_π)` induced by a stationary policy.
#[derive(Debug, Clone, PartialEq)]
pub struct InducedChain<T> {
    pub transition: Dense<T>,
    pub reward: Vec<T>,
}

impl<T: Real> InducedChain<T> {
    pub fn n_states(&self) -> usize {
        self.reward.len()
    }

    /// Builds a chain directly from a row-stochastic matrix; used for
    /// relabeling and by callers that already hold `P^π`.
    pub fn from_rows(rows: &[Vec<T>], reward: Vec<T>) -> Self {
        let n = rows.len();
        let mut transition = Dense::zeros(n);
        for (i, r) in rows.iter().enumerate() {
            transition.row_mut(i).copy_from_slice(r);
        }
        Self { transition, reward }
    }
}

pub fn induced_chain<T: Real>(model: &MdpModel<T>, policy: &StationaryPolicy) -> Result<InducedChain<T>> {
    policy.check(model)?;
    let n = model.n_states();
    let mut transition = Dense::zeros(n);
    let mut reward = Vec::with_capacity(n);
    for s in 0..n {
        let a = policy.action(s);
        transition.row_mut(s).copy_from_slice(model.row(s, a));
        reward.push(model.reward(s, a));
    }
    Ok(InducedChain { transition, reward })
}

/// Odometer over all `|A|^|S|` decision vectors, last state fastest.
#[derive(Debug, Clone)]
pub struct PolicyEnumerator {
    n_actions: usize,
    next: Option<Vec<usize>>,
}

impl Iterator for PolicyEnumerator {
    type Item = StationaryPolicy;

    fn next(&mut self) -> Option<StationaryPolicy> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        let mut i = succ.len();
        loop {
            if i == 0 {
                break;
            }
            i -= 1;
            succ[i] += 1;
            if succ[i] < self.n_actions {
                self.next = Some(succ);
                break;
            }
            succ[i] = 0;
        }
        Some(StationaryPolicy(current))
    }
}

pub fn enumerate_policies<T: Real>(model: &MdpModel<T>, cap: u128) -> Result<PolicyEnumerator> {
    let count = model.policy_count();
    if count > cap {
        return Err(Error::EnumerationTooLarge { count, cap });
    }
    Ok(PolicyEnumerator {
        n_actions: model.n_actions(),
        next: Some(vec![0; model.n_states()]),
    })
}

/// Transition structure drawn by [`random_model`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Structure {
    Dense,
    Communicating,
    Unichain,
}

const MIX_EPS: f64 = 0.01;

/// Seeded random model. Rows are uniform simplex samples; `Communicating`
/// mixes in a random cyclic permutation, `Unichain` a uniform row.
pub fn random_model<T: Real>(
    n_states: usize,
    n_actions: usize,
    r_max: f64,
    structure: Structure,
    seed: u64,
) -> MdpModel<T> {
    assert!(n_states >= 1 && n_actions >= 1, "empty model");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n_states).collect();
    order.shuffle(&mut rng);
    let mut cycle_next = vec![0; n_states];
    for i in 0..n_states {
        cycle_next[order[i]] = order[(i + 1) % n_states];
    }
    let uniform = 1.0 / n_states as f64;

    let mut transition = Vec::with_capacity(n_states);
    let mut reward = Vec::with_capacity(n_states);
    for s in 0..n_states {
        let mut per_a = Vec::with_capacity(n_actions);
        let mut rew = Vec::with_capacity(n_actions);
        for _ in 0..n_actions {
            // Normalized Exp(1) draws are uniform on the simplex.
            let mut row: Vec<f64> = (0..n_states)
                .map(|_| {
                    let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
                    -u.ln()
                })
                .collect();
            let total: f64 = row.iter().sum();
            row.iter_mut().for_each(|p| *p /= total);
            match structure {
                Structure::Dense => {}
                Structure::Communicating => {
                    row.iter_mut().for_each(|p| *p *= 1.0 - MIX_EPS);
                    row[cycle_next[s]] += MIX_EPS;
                }
                Structure::Unichain => {
                    row.iter_mut().for_each(|p| *p = (1.0 - MIX_EPS) * *p + MIX_EPS * uniform);
                }
            }
            per_a.push(row.into_iter().map(T::c).collect::<Vec<T>>());
            rew.push(T::c(rng.gen::<f64>() * r_max));
        }
        transition.push(per_a);
        reward.push(rew);
    }
    MdpModel::from_tables(transition, reward, T::c(r_max)).expect("generated model is valid")
}
