use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use super::{simulate_run, Initial, RunKey, SimRng};
use crate::classify::classify_chain;
use crate::error::{Error, Result};
use crate::model::{induced_chain, MdpModel, StationaryPolicy};
use crate::scalar::{ln_ln, Real};
use crate::solvers::{solve_arpe, AverageEvalSolution};
use crate::stats::conditional_std;

/// Default pass threshold for the finite-time LIL envelope ratio.
pub const LIL_HEURISTIC_THRESHOLD: f64 = 1.5;

/// Multiplier in the stopping-time cap `100 t_level / σ_min²`.
const CLT_CAP_FACTOR: f64 = 100.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LlnReport {
    pub t: usize,
    pub n_runs: usize,
    pub lambda: f64,
    /// `|R_T/T - λ|` per run.
    pub deviations: Vec<f64>,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CltReport {
    pub t_level: f64,
    pub n_samples: usize,
    pub lambda: f64,
    pub ks_distance: f64,
    pub mean_z: f64,
    pub var_z: f64,
    /// Mean of the stopping times `ν`.
    pub mean_stopping_time: f64,
    pub step_cap: u64,
    /// Whether every recurrent class has a state with `σ > 0`.
    pub nondegenerate_proxy: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LilReport {
    pub t_max: usize,
    pub n_runs: usize,
    /// `sup_t |Σ M| / sqrt(2 Σ_t ln ln Σ_t)` over `Σ_t > e`, per run.
    pub per_run_sup: Vec<f64>,
    pub sup_ratio: f64,
    pub median_run_sup: f64,
    /// Same supremum restricted to `Σ_t >= late_from`.
    pub late_from: f64,
    pub late_sup_ratio: f64,
    pub threshold: f64,
    pub within_band: bool,
    pub heuristic: bool,
}

fn eval_policy<T: Real>(model: &MdpModel<T>, policy: &StationaryPolicy) -> Result<AverageEvalSolution<T>> {
    solve_arpe(model, policy, 0)
}

/// Worst `|R_T/T - λ|` over `n_runs` seeded runs.
pub fn lln_experiment<T: Real>(
    model: &MdpModel<T>,
    policy: &StationaryPolicy,
    t: usize,
    n_runs: usize,
    base_seed: u64,
    initial: &Initial<T>,
    tolerance: f64,
) -> Result<LlnReport> {
    if t == 0 || n_runs == 0 {
        return Err(Error::DomainError("T and n_runs must be >= 1".into()));
    }
    let lambda = eval_policy(model, policy)?.lambda;
    let deviations: Vec<f64> = (0..n_runs)
        .into_par_iter()
        .map(|i| {
            let tr = simulate_run(model, policy, t, RunKey::new(base_seed, i as u64), initial)?;
            Ok((tr.cumulative_reward() / T::from_count(t) - lambda).abs().as_f64())
        })
        .collect::<Result<_>>()?;
    let max_deviation = deviations.iter().copied().fold(0.0, f64::max);
    Ok(LlnReport {
        t,
        n_runs,
        lambda: lambda.as_f64(),
        deviations,
        max_deviation,
        tolerance,
        pass: max_deviation < tolerance,
    })
}

/// `σ > 0` somewhere in every recurrent class of `P^π`.
fn sigma_proxy<T: Real>(model: &MdpModel<T>, policy: &StationaryPolicy, sigma: &[T]) -> Result<bool> {
    let chain = induced_chain(model, policy)?;
    let structure = classify_chain(&chain, T::zero());
    Ok(structure
        .recurrent_classes
        .iter()
        .all(|class| class.iter().any(|&s| sigma[s] > T::zero())))
}

/// One path of the stationary policy, driven step by step with the same
/// draw layout as [`simulate_run`].
struct Walker<'a, T> {
    model: &'a MdpModel<T>,
    policy: &'a StationaryPolicy,
    rng: SimRng,
    state: usize,
}

impl<'a, T: Real> Walker<'a, T> {
    fn new(model: &'a MdpModel<T>, policy: &'a StationaryPolicy, key: RunKey, initial: &Initial<T>) -> Self {
        let mut rng = SimRng::new(key);
        let state = initial.sample(&mut rng);
        Self { model, policy, rng, state }
    }

    /// Advances one step and returns `(S_t, r_t, S_{t+1})`.
    fn step(&mut self) -> (usize, T, usize) {
        let s = self.state;
        let a = self.policy.action(s);
        let r = self.model.reward(s, a);
        self.state = self.rng.categorical(self.model.row(s, a));
        (s, r, self.state)
    }
}

fn ks_distance(mut z: Vec<f64>) -> f64 {
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    z.sort_by(f64::total_cmp);
    let n = z.len() as f64;
    z.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = normal.cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Kolmogorov-Smirnov distance between the standard normal and the samples
/// `(R_ν - νλ) / sqrt(t_level)`, `ν = min{T >= 1 : Σ_T >= t_level}`.
pub fn clt_experiment<T: Real>(
    model: &MdpModel<T>,
    policy: &StationaryPolicy,
    t_level: f64,
    n_samples: usize,
    base_seed: u64,
    initial: &Initial<T>,
) -> Result<CltReport> {
    if !(t_level > 0.0) || n_samples == 0 {
        return Err(Error::DomainError("t_level must be > 0 and n_samples >= 1".into()));
    }
    initial.check(model)?;
    let sol = eval_policy(model, policy)?;
    let sigma = conditional_std(model, policy, &sol.v);
    let sigma_min = sigma
        .iter()
        .map(|s| s.as_f64())
        .filter(|&s| s > 0.0)
        .fold(f64::INFINITY, f64::min);
    if !sigma_min.is_finite() {
        return Err(Error::SigmaDegenerate("sigma is zero on every state".into()));
    }
    let nondegenerate_proxy = sigma_proxy(model, policy, &sigma)?;
    let step_cap = (CLT_CAP_FACTOR * t_level / (sigma_min * sigma_min)).ceil() as u64;
    let var: Vec<f64> = sigma.iter().map(|s| s.as_f64().powi(2)).collect();
    let lambda = sol.lambda.as_f64();
    let scale = t_level.sqrt();

    let samples: Vec<(f64, u64)> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut w = Walker::new(model, policy, RunKey::new(base_seed, i as u64), initial);
            let (mut cum_var, mut reward, mut nu) = (0.0f64, 0.0f64, 0u64);
            while cum_var < t_level || nu == 0 {
                if nu >= step_cap {
                    return Err(Error::SigmaDegenerate(format!(
                        "stopping time for level {t_level} not reached within {step_cap} steps"
                    )));
                }
                let (s, r, _) = w.step();
                cum_var += var[s];
                reward += r.as_f64();
                nu += 1;
            }
            Ok(((reward - nu as f64 * lambda) / scale, nu))
        })
        .collect::<Result<_>>()?;

    let n = n_samples as f64;
    let mean_z = samples.iter().map(|x| x.0).sum::<f64>() / n;
    let var_z = samples.iter().map(|x| (x.0 - mean_z).powi(2)).sum::<f64>() / n;
    let mean_stopping_time = samples.iter().map(|x| x.1 as f64).sum::<f64>() / n;
    Ok(CltReport {
        t_level,
        n_samples,
        lambda,
        ks_distance: ks_distance(samples.into_iter().map(|x| x.0).collect()),
        mean_z,
        var_z,
        mean_stopping_time,
        step_cap,
        nondegenerate_proxy,
    })
}

/// Running supremum of `|Σ_{τ<=t} M_τ| / sqrt(2 Σ_t ln ln Σ_t)` once
/// `Σ_t > e`. The finite-`T` value is only a heuristic view of an
/// asymptotic statement.
pub fn lil_envelope_experiment<T: Real>(
    model: &MdpModel<T>,
    policy: &StationaryPolicy,
    t_max: usize,
    n_runs: usize,
    base_seed: u64,
    initial: &Initial<T>,
) -> Result<LilReport> {
    if t_max == 0 || n_runs == 0 {
        return Err(Error::DomainError("T_max and n_runs must be >= 1".into()));
    }
    initial.check(model)?;
    let sol = eval_policy(model, policy)?;
    let sigma = conditional_std(model, policy, &sol.v);
    if sigma.iter().all(|&s| s <= T::zero()) {
        return Err(Error::SigmaDegenerate("sigma is zero on every state".into()));
    }
    let v: Vec<f64> = sol.v.iter().map(|x| x.as_f64()).collect();
    let var: Vec<f64> = sigma.iter().map(|s| s.as_f64().powi(2)).collect();
    let mean_next: Vec<f64> = (0..model.n_states())
        .map(|s| model.expect(s, policy.action(s), &sol.v).as_f64())
        .collect();
    let late_from = std::f64::consts::E.exp();

    let sups: Vec<(f64, f64)> = (0..n_runs)
        .into_par_iter()
        .map(|i| {
            let mut w = Walker::new(model, policy, RunKey::new(base_seed, i as u64), initial);
            let (mut m_sum, mut cum_var) = (0.0f64, 0.0f64);
            let (mut sup, mut late) = (0.0f64, 0.0f64);
            for _ in 0..t_max {
                let (s, _, next) = w.step();
                m_sum += v[next] - mean_next[s];
                cum_var += var[s];
                if let Some(ll) = ln_ln(cum_var) {
                    let ratio = m_sum.abs() / (2.0 * cum_var * ll).sqrt();
                    sup = sup.max(ratio);
                    if cum_var >= late_from {
                        late = late.max(ratio);
                    }
                }
            }
            (sup, late)
        })
        .collect();
    if sups.iter().all(|&(s, _)| s == 0.0) && var.iter().sum::<f64>() > 0.0 {
        // Σ_t never passed e on any run.
        return Err(Error::SigmaDegenerate(format!("Σ_t stayed below e for T_max = {t_max}")));
    }

    let per_run_sup: Vec<f64> = sups.iter().map(|x| x.0).collect();
    let sup_ratio = per_run_sup.iter().copied().fold(0.0, f64::max);
    let late_sup_ratio = sups.iter().map(|x| x.1).fold(0.0, f64::max);
    let mut sorted = per_run_sup.clone();
    sorted.sort_by(f64::total_cmp);
    let median_run_sup = sorted[(sorted.len() - 1) / 2];
    Ok(LilReport {
        t_max,
        n_runs,
        per_run_sup,
        sup_ratio,
        median_run_sup,
        late_from,
        late_sup_ratio,
        threshold: LIL_HEURISTIC_THRESHOLD,
        within_band: sup_ratio > 0.5 && sup_ratio < LIL_HEURISTIC_THRESHOLD,
        heuristic: true,
    })
}
