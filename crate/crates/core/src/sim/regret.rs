use rayon::prelude::*;
use serde::Serialize;

use super::{
    coverage_experiment, simulate_run, CoverageConfig, CoverageReport, Flavor, Initial, LearningPolicy, Reading,
    RunKey, Subject, PAIR_SALT,
};
use crate::bounds::{BoundKind, BoundParams, ThresholdRule};
use crate::error::{Error, Result};
use crate::model::{MdpModel, StationaryPolicy};
use crate::scalar::{ln_ln, Real};
use crate::solvers::AverageOptimalSolution;
use crate::stats::{max_abs_deviation, span};

/// Relative tolerance on `D_T = R - R̄ = R^{π*}_T - T J*`.
const IDENTITY_TOL: f64 = 1e-9;

/// One paired run of `π*` and a learner `μ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegretGapRun<T> {
    pub t: usize,
    pub j_star: T,
    pub optimal_reward: T,
    pub learner_reward: T,
    /// `R̄ = T J* - R^μ_T`.
    pub interim_regret: T,
    /// `R = R^{π*}_T - R^μ_T`.
    pub cumulative_regret: T,
    /// `D_T = R - R̄`.
    pub gap: T,
    /// `|D_T - (R^{π*}_T - T J*)|`.
    pub identity_residual: T,
    /// `R^{π*}_t - t J*` for `t = 0..=T`.
    pub gap_path: Vec<T>,
}

/// Simulates `π*` on `optimal_key` and `μ` on `learner_key` and forms both
/// regrets.
pub fn regret_gap_run<T: Real, P: LearningPolicy + ?Sized>(
    model: &MdpModel<T>,
    pi_star: &StationaryPolicy,
    j_star: T,
    learner: &P,
    t: usize,
    optimal_key: RunKey,
    learner_key: RunKey,
    initial: &Initial<T>,
) -> Result<RegretGapRun<T>> {
    let opt = simulate_run(model, pi_star, t, optimal_key, initial)?;
    let mu = simulate_run(model, learner, t, learner_key, initial)?;
    let gap_path: Vec<T> = opt
        .reward_prefix()
        .into_iter()
        .enumerate()
        .map(|(k, r)| r - T::from_count(k) * j_star)
        .collect();
    let optimal_reward = opt.cumulative_reward();
    let learner_reward = mu.cumulative_reward();
    let interim_regret = T::from_count(t) * j_star - learner_reward;
    let cumulative_regret = optimal_reward - learner_reward;
    let gap = cumulative_regret - interim_regret;
    let identity_residual = (gap - (optimal_reward - T::from_count(t) * j_star)).abs();
    Ok(RegretGapRun {
        t,
        j_star,
        optimal_reward,
        learner_reward,
        interim_regret,
        cumulative_regret,
        gap,
        identity_residual,
        gap_path,
    })
}

#[derive(Debug, Clone)]
pub struct RegretGapConfig<T> {
    pub t: usize,
    pub n_runs: usize,
    pub delta: T,
    pub base_seed: u64,
    pub reading: Reading,
    pub initial: Initial<T>,
    pub threshold_rule: ThresholdRule,
    /// Enables the model-level kinds when given.
    pub diameter: Option<T>,
    /// Times at which `D_t/t` and `D_t/sqrt(t ln ln t)` are summarized.
    pub checkpoints: Vec<usize>,
}

impl<T: Real> RegretGapConfig<T> {
    pub fn new(t: usize, n_runs: usize, delta: T, base_seed: u64) -> Self {
        let mut checkpoints: Vec<usize> = std::iter::successors(Some(10usize), |x| x.checked_mul(10))
            .take_while(|&x| x < t)
            .collect();
        checkpoints.push(t);
        Self {
            t,
            n_runs,
            delta,
            base_seed,
            reading: Reading::PerT,
            initial: Initial::Fixed(0),
            threshold_rule: ThresholdRule::Printed,
            diameter: None,
            checkpoints,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapCheckpoint {
    pub t: usize,
    pub mean_abs_gap_over_t: f64,
    pub max_abs_gap_over_t: f64,
    /// `|D_t| / sqrt(t ln ln t)`, absent while `t <= e`.
    pub mean_abs_gap_over_lil: Option<f64>,
    pub max_abs_gap_over_lil: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegretGapReport {
    pub t: usize,
    pub n_runs: usize,
    pub base_seed: u64,
    pub learner: String,
    pub j_star: f64,
    pub k_star: f64,
    pub h_star: f64,
    pub mean_interim_regret: f64,
    pub mean_cumulative_regret: f64,
    pub mean_gap: f64,
    pub max_identity_residual: f64,
    pub identity_holds: bool,
    pub coverage: Vec<CoverageReport>,
    pub checkpoints: Vec<GapCheckpoint>,
}

/// Runs `n_runs` paired simulations. Run `i` drives `π*` with stream `i` of
/// `base_seed` (the stream used by [`coverage_experiment`]) and the learner
/// with stream `i` of a salted seed.
pub fn regret_gap_experiment<T: Real, P: LearningPolicy + ?Sized>(
    model: &MdpModel<T>,
    optimal: &AverageOptimalSolution<T>,
    learner: &P,
    config: &RegretGapConfig<T>,
) -> Result<RegretGapReport> {
    if config.t == 0 || config.n_runs == 0 {
        return Err(Error::DomainError("T and n_runs must be >= 1".into()));
    }
    let pi_star = optimal.policy();
    let j_star = optimal.lambda_star;
    let k_star = max_abs_deviation(model, pi_star, &optimal.v_star);
    let h_star = span(&optimal.v_star)?;

    let runs: Vec<RegretGapRun<T>> = (0..config.n_runs)
        .into_par_iter()
        .map(|i| {
            let key = RunKey::new(config.base_seed, i as u64);
            regret_gap_run(model, pi_star, j_star, learner, config.t, key, key.salted(PAIR_SALT), &config.initial)
        })
        .collect::<Result<_>>()?;

    let n = config.n_runs as f64;
    let mean = |f: &dyn Fn(&RegretGapRun<T>) -> T| runs.iter().map(|r| f(r).as_f64()).sum::<f64>() / n;
    let max_identity_residual = runs
        .iter()
        .map(|r| (r.identity_residual / (T::one() + r.gap.abs())).as_f64())
        .fold(0.0, f64::max);

    let checkpoints = config
        .checkpoints
        .iter()
        .filter(|&&c| c >= 1 && c <= config.t)
        .map(|&c| {
            let abs: Vec<f64> = runs.iter().map(|r| r.gap_path[c].abs().as_f64()).collect();
            let tf = c as f64;
            let lil = ln_ln(tf).map(|ll| (tf * ll).sqrt());
            let mean_abs = abs.iter().sum::<f64>() / n;
            let max_abs = abs.iter().copied().fold(0.0, f64::max);
            GapCheckpoint {
                t: c,
                mean_abs_gap_over_t: mean_abs / tf,
                max_abs_gap_over_t: max_abs / tf,
                mean_abs_gap_over_lil: lil.map(|d| mean_abs / d),
                max_abs_gap_over_lil: lil.map(|d| max_abs / d),
            }
        })
        .collect();

    let mut params = BoundParams::new(config.t, config.delta);
    params.k = Some(k_star);
    params.h = Some(h_star);
    params.r_max = Some(model.r_max());
    params.diameter = config.diameter;
    params.threshold_rule = config.threshold_rule;
    let mut kinds = vec![BoundKind::RegretGapAzuma, BoundKind::RegretGapLil];
    if config.diameter.is_some() {
        kinds.extend([BoundKind::RegretGapModelAzuma, BoundKind::RegretGapModelLil]);
    }
    let subject = Subject::Single(Flavor::Average {
        policy: pi_star,
        lambda: j_star,
        v: &optimal.v_star,
    });
    let coverage = kinds
        .into_iter()
        .map(|kind| {
            coverage_experiment(
                model,
                subject,
                &CoverageConfig {
                    kind,
                    params: params.clone(),
                    n_runs: config.n_runs,
                    base_seed: config.base_seed,
                    reading: config.reading,
                    initial: config.initial.clone(),
                },
            )
        })
        .collect::<Result<_>>()?;

    Ok(RegretGapReport {
        t: config.t,
        n_runs: config.n_runs,
        base_seed: config.base_seed,
        learner: learner.id(),
        j_star: j_star.as_f64(),
        k_star: k_star.as_f64(),
        h_star: h_star.as_f64(),
        mean_interim_regret: mean(&|r| r.interim_regret),
        mean_cumulative_regret: mean(&|r| r.cumulative_regret),
        mean_gap: mean(&|r| r.gap),
        max_identity_residual,
        identity_holds: max_identity_residual <= IDENTITY_TOL,
        coverage,
        checkpoints,
    })
}
