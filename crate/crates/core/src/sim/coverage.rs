use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{simulate_run, Flavor, Initial, RunKey, Trajectory, PAIR_SALT};
use crate::bounds::{evaluate, BoundKind, BoundParams, Family};
use crate::error::{Error, Result};
use crate::model::MdpModel;
use crate::scalar::Real;

/// How "with probability at least 1-δ, for all T >= T0" is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reading {
    /// The event at the single time `T`.
    #[default]
    PerT,
    /// The event at every `t` in `[T0, T]` simultaneously.
    Uniform,
}

/// The reward process (or pair of processes) a bound speaks about.
#[derive(Debug, Clone, Copy)]
pub enum Subject<'a, T> {
    Single(Flavor<'a, T>),
    /// Two policies simulated on independent streams of the same run.
    Pair(Flavor<'a, T>, Flavor<'a, T>),
}

#[derive(Debug, Clone)]
pub struct CoverageConfig<T> {
    pub kind: BoundKind,
    /// Bound inputs; `params.t` is the experiment horizon `T`.
    pub params: BoundParams<T>,
    pub n_runs: usize,
    pub base_seed: u64,
    pub reading: Reading,
    pub initial: Initial<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quantiles {
    pub min: f64,
    pub q01: f64,
    pub q05: f64,
    pub q50: f64,
    pub q95: f64,
    pub max: f64,
}

impl Quantiles {
    /// Nearest-rank quantiles; `None` on empty input.
    pub fn from_samples(samples: &[f64]) -> Option<Self> {
        if samples.is_empty() {
            return None;
        }
        let mut s = samples.to_vec();
        s.sort_by(f64::total_cmp);
        let q = |p: f64| {
            let rank = (p * s.len() as f64).ceil() as usize;
            s[rank.clamp(1, s.len()) - 1]
        };
        Some(Self {
            min: s[0],
            q01: q(0.01),
            q05: q(0.05),
            q50: q(0.5),
            q95: q(0.95),
            max: s[s.len() - 1],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageReport {
    pub bound_kind: BoundKind,
    pub reading: Reading,
    pub n_runs: usize,
    pub violations: usize,
    pub coverage: f64,
    /// `1 - δ - 3 sqrt(δ(1-δ)/n)`.
    pub coverage_floor: f64,
    pub delta: f64,
    pub t: usize,
    /// First time checked; equals `t` under the per-T reading.
    pub t_start: usize,
    pub bound_value: f64,
    pub applicable: bool,
    pub threshold_t0: Option<u64>,
    /// `bound - lhs` per run (the minimum over checked times when uniform).
    pub margins: Option<Quantiles>,
    pub base_seed: u64,
}

impl CoverageReport {
    pub fn meets_floor(&self) -> bool {
        self.coverage >= self.coverage_floor
    }
}

pub fn coverage_floor(delta: f64, n_runs: usize) -> f64 {
    1.0 - delta - 3.0 * (delta * (1.0 - delta) / n_runs.max(1) as f64).sqrt()
}

fn flavor_family<T>(f: &Flavor<'_, T>) -> Family {
    match f {
        Flavor::Average { .. } => Family::Average,
        Flavor::Discounted { .. } => Family::Discounted,
        Flavor::FiniteHorizon { .. } => Family::FiniteHorizon,
    }
}

fn check_subject<T: Real>(model: &MdpModel<T>, kind: BoundKind, subject: &Subject<'_, T>, t: usize) -> Result<()> {
    let flavors: Vec<&Flavor<'_, T>> = match subject {
        Subject::Single(f) if !kind.is_pair() => vec![f],
        Subject::Pair(a, b) if kind.is_pair() => vec![a, b],
        _ => {
            return Err(Error::DomainError(format!(
                "bound `{kind}` needs {} subject",
                if kind.is_pair() { "a pair" } else { "a single" }
            )))
        }
    };
    for f in flavors {
        if flavor_family(f) != kind.family() {
            return Err(Error::DomainError(format!("bound `{kind}` does not match the subject's reward criterion")));
        }
        let n = model.n_states();
        match f {
            Flavor::Average { policy, v, .. } | Flavor::Discounted { policy, v, .. } => {
                policy.check(model)?;
                if v.len() != n {
                    return Err(Error::DomainError("value function length differs from n_states".into()));
                }
            }
            Flavor::FiniteHorizon { policy, v } => {
                policy.check(model)?;
                if v.len() != policy.horizon() + 2 || v.iter().any(|x| x.len() != n) {
                    return Err(Error::DomainError("need V_0..V_{h+1}, each of length n_states".into()));
                }
                if t > policy.horizon() + 1 {
                    return Err(Error::HorizonExceeded {
                        t,
                        limit: policy.horizon() + 1,
                    });
                }
            }
        }
    }
    Ok(())
}

fn simulate_flavor<T: Real>(model: &MdpModel<T>, f: &Flavor<'_, T>, t: usize, key: RunKey, initial: &Initial<T>) -> Result<Trajectory<T>> {
    match f {
        Flavor::Average { policy, .. } | Flavor::Discounted { policy, .. } => simulate_run(model, *policy, t, key, initial),
        Flavor::FiniteHorizon { policy, .. } => simulate_run(model, *policy, t, key, initial),
    }
}

/// Signed deviation at each `t = 0..=T`: `R_t - center_t` when `centered`,
/// else `R_t - base_t`.
fn deviations<T: Real>(f: &Flavor<'_, T>, traj: &Trajectory<T>, centered: bool) -> Vec<T> {
    let s0 = traj.states[0];
    let mut out = Vec::with_capacity(traj.len() + 1);
    let mut acc = T::zero();
    for t in 0..=traj.len() {
        if t > 0 {
            let r = traj.rewards[t - 1];
            acc = acc
                + match f {
                    Flavor::Discounted { gamma, .. } => gamma.powi((t - 1) as i32) * r,
                    _ => r,
                };
        }
        let st = traj.states[t];
        let dev = match f {
            Flavor::Average { lambda, v, .. } => {
                let base = T::from_count(t) * *lambda;
                if centered {
                    acc - base - (v[s0] - v[st])
                } else {
                    acc - base
                }
            }
            Flavor::Discounted { gamma, v, .. } => {
                if centered {
                    acc - (v[s0] - gamma.powi(t as i32) * v[st])
                } else {
                    acc - v[s0]
                }
            }
            Flavor::FiniteHorizon { v, .. } => {
                if centered {
                    acc - (v[0][s0] - v[t][st])
                } else {
                    acc - v[0][s0]
                }
            }
        };
        out.push(dev);
    }
    out
}

/// Runs `n_runs` seeded simulations and counts how often the bound's
/// left-hand side exceeds its value.
///
/// Run `i` uses stream `i` of `base_seed`; the second member of a pair uses
/// the same stream under a salted seed. The bound is evaluated even when
/// not applicable and the report says so.
pub fn coverage_experiment<T: Real>(model: &MdpModel<T>, subject: Subject<'_, T>, config: &CoverageConfig<T>) -> Result<CoverageReport> {
    let t_end = config.params.t;
    if t_end == 0 {
        return Err(Error::DomainError("T must be >= 1".into()));
    }
    if config.n_runs == 0 {
        return Err(Error::DomainError("n_runs must be >= 1".into()));
    }
    check_subject(model, config.kind, &subject, t_end)?;
    config.initial.check(model)?;
    let at_t = evaluate(config.kind, &config.params)?;
    let t_start = match config.reading {
        Reading::PerT => t_end,
        Reading::Uniform if at_t.applicable => at_t.threshold_t0.map_or(1, |t0| (t0 as usize).max(1)),
        Reading::Uniform => t_end,
    };
    let bound_values: Vec<T> = (t_start..=t_end)
        .map(|t| evaluate(config.kind, &config.params.at(t)).map(|b| b.value))
        .collect::<Result<_>>()?;
    let centered = config.kind.is_centered();

    let margins: Vec<f64> = (0..config.n_runs)
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let key = RunKey::new(config.base_seed, i as u64);
            let lhs: Vec<T> = match &subject {
                Subject::Single(f) => {
                    let tr = simulate_flavor(model, f, t_end, key, &config.initial)?;
                    deviations(f, &tr, centered).into_iter().map(|d| d.abs()).collect()
                }
                Subject::Pair(a, b) => {
                    let ta = simulate_flavor(model, a, t_end, key, &config.initial)?;
                    let tb = simulate_flavor(model, b, t_end, key.salted(PAIR_SALT), &config.initial)?;
                    let da = deviations(a, &ta, centered);
                    let db = deviations(b, &tb, centered);
                    da.iter().zip(&db).map(|(&x, &y)| (x - y).abs()).collect()
                }
            };
            let margin = (t_start..=t_end)
                .zip(&bound_values)
                .map(|(t, &b)| (b - lhs[t]).as_f64())
                .fold(f64::INFINITY, f64::min);
            Ok(margin)
        })
        .collect::<Result<_>>()?;

    let violations = margins.iter().filter(|&&m| m < 0.0).count();
    let delta = config.params.delta.as_f64();
    Ok(CoverageReport {
        bound_kind: config.kind,
        reading: config.reading,
        n_runs: config.n_runs,
        violations,
        coverage: 1.0 - violations as f64 / config.n_runs as f64,
        coverage_floor: coverage_floor(delta, config.n_runs),
        delta,
        t: t_end,
        t_start,
        bound_value: at_t.value.as_f64(),
        applicable: at_t.applicable,
        threshold_t0: at_t.threshold_t0,
        margins: Quantiles::from_samples(&margins),
        base_seed: config.base_seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::StationaryPolicy;
    use crate::solvers::solve_arpe;

    fn config(kind: BoundKind, t: usize, delta: f64, k: f64, n_runs: usize) -> CoverageConfig<f64> {
        let mut params = BoundParams::new(t, delta);
        params.k = Some(k);
        params.h = Some(k);
        CoverageConfig {
            kind,
            params,
            n_runs,
            base_seed: 17,
            reading: Reading::PerT,
            initial: Initial::Fixed(0),
        }
    }

    #[test]
    fn quantiles_nearest_rank() {
        let s: Vec<f64> = (1..=100).map(f64::from).collect();
        let q = Quantiles::from_samples(&s).unwrap();
        assert_eq!((q.min, q.q01, q.q05, q.q50, q.q95, q.max), (1.0, 1.0, 5.0, 50.0, 95.0, 100.0));
        assert!(Quantiles::from_samples(&[]).is_none());
    }

    #[test]
    fn floor_formula() {
        assert!((coverage_floor(0.05, 20_000) - (0.95 - 3.0 * (0.0475f64 / 20_000.0).sqrt())).abs() < 1e-15);
    }

    #[test]
    fn deterministic_model_never_violates() {
        let m = fixtures::swap::<f64>(1.0, 0.0);
        let pi = StationaryPolicy::new(vec![0, 0]);
        let sol = solve_arpe(&m, &pi, 0).unwrap();
        let flavor = Flavor::Average {
            policy: &pi,
            lambda: sol.lambda,
            v: &sol.v,
        };
        // K = 0 makes the centered bound zero, and the centered LHS is zero too.
        let r = coverage_experiment(&m, Subject::Single(flavor), &config(BoundKind::AzumaCentered, 51, 0.9, 0.0, 50)).unwrap();
        assert_eq!(r.violations, 0);
        assert_eq!(r.coverage, 1.0);
    }

    #[test]
    fn vacuous_delta_still_counts() {
        let m = fixtures::symmetric::<f64>(&[1.0, 0.0]);
        let pi = StationaryPolicy::new(vec![0, 0]);
        let sol = solve_arpe(&m, &pi, 0).unwrap();
        let flavor = Flavor::Average {
            policy: &pi,
            lambda: sol.lambda,
            v: &sol.v,
        };
        let r = coverage_experiment(&m, Subject::Single(flavor), &config(BoundKind::AzumaCentered, 100, 0.999, 0.5, 200)).unwrap();
        assert!(r.coverage >= 0.001);
        assert_eq!(r.n_runs, 200);
        assert!((r.coverage - (1.0 - r.violations as f64 / 200.0)).abs() < 1e-15);
    }

    #[test]
    fn repeatable_and_shape_checked() {
        let m = fixtures::symmetric::<f64>(&[1.0, 0.0]);
        let pi = StationaryPolicy::new(vec![0, 0]);
        let sol = solve_arpe(&m, &pi, 0).unwrap();
        let flavor = Flavor::Average {
            policy: &pi,
            lambda: sol.lambda,
            v: &sol.v,
        };
        let mut cfg = config(BoundKind::AzumaCentered, 200, 0.3, 0.5, 300);
        cfg.reading = Reading::Uniform;
        let a = coverage_experiment(&m, Subject::Single(flavor), &cfg).unwrap();
        let b = coverage_experiment(&m, Subject::Single(flavor), &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.t_start, 1);
        let pair = Subject::Pair(flavor, flavor);
        assert!(coverage_experiment(&m, pair, &cfg).is_err());
        cfg.kind = BoundKind::DiscAzuma;
        assert!(coverage_experiment(&m, Subject::Single(flavor), &cfg).is_err());
    }
}
