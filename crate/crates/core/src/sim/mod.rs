//! Seeded simulation, martingale traces and Monte Carlo experiments.

mod coverage;
mod limits;
mod martingale;
mod regret;
mod trajectory;

pub use coverage::{coverage_experiment, coverage_floor, CoverageConfig, CoverageReport, Quantiles, Reading, Subject};
pub use limits::{
    clt_experiment, lil_envelope_experiment, lln_experiment, CltReport, LilReport, LlnReport, LIL_HEURISTIC_THRESHOLD,
};
pub use martingale::{martingale_trace, Flavor, MartingaleTrace};
pub use regret::{regret_gap_experiment, regret_gap_run, RegretGapConfig, RegretGapReport, RegretGapRun};
pub use trajectory::{simulate, simulate_run, History, LearningPolicy, Trajectory, UniformRandomLearner};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::MdpModel;
use crate::scalar::Real;

/// XOR-ed into the seed of a learner's private random stream.
pub(crate) const LEARNER_SALT: u64 = 0x9E37_79B9_7F4A_7C15;
/// XOR-ed into the seed of the second trajectory of a policy pair.
pub(crate) const PAIR_SALT: u64 = 0xD1B5_4A32_D192_ED03;

/// Identifies one reproducible random stream: `seed` selects the key and
/// `stream` (the run index in experiments) the ChaCha stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct RunKey {
    pub seed: u64,
    pub stream: u64,
}

impl RunKey {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    pub(crate) fn salted(self, salt: u64) -> Self {
        Self {
            seed: self.seed ^ salt,
            stream: self.stream,
        }
    }
}

/// Counter-based generator: the `t`-th call to [`SimRng::next_u64`] returns
/// the `t`-th 64-bit word of ChaCha8 keyed by `(seed, stream)`, independent
/// of any other stream.
#[derive(Debug, Clone)]
pub struct SimRng {
    inner: ChaCha8Rng,
}

impl SimRng {
    pub fn new(key: RunKey) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(key.seed);
        inner.set_stream(key.stream);
        Self { inner }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on `[0, 1)` with 53 bits of resolution.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `0..n`.
    pub fn below(&mut self, n: usize) -> usize {
        ((self.uniform() * n as f64) as usize).min(n.saturating_sub(1))
    }

    /// Inverse-CDF draw from `probs` scanned in index order: the first `j`
    /// with `u < Σ_{i<=j} p_i`. Rounding shortfall falls back to the last
    /// positive entry.
    pub fn categorical<T: Real>(&mut self, probs: &[T]) -> usize {
        let u = T::c(self.uniform());
        let mut cum = T::zero();
        for (j, &p) in probs.iter().enumerate() {
            cum = cum + p;
            if u < cum {
                return j;
            }
        }
        probs.iter().rposition(|&p| p > T::zero()).unwrap_or(0)
    }
}

/// Distribution of `S_0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Initial<T> {
    Fixed(usize),
    Distribution(Vec<T>),
}

impl<T: Real> Initial<T> {
    pub fn check(&self, model: &MdpModel<T>) -> Result<()> {
        let n = model.n_states();
        match self {
            Initial::Fixed(s) if *s < n => Ok(()),
            Initial::Fixed(s) => Err(Error::DomainError(format!("initial state {s} >= n_states {n}"))),
            Initial::Distribution(rho) => {
                let total: T = rho.iter().copied().sum();
                if rho.len() != n || rho.iter().any(|&p| !(p >= T::zero())) {
                    return Err(Error::DomainError("initial distribution must be a nonnegative vector over states".into()));
                }
                if (total - T::one()).abs() > T::tol(T::STOCHASTIC_TOL) {
                    return Err(Error::DomainError(format!("initial distribution sums to {total}")));
                }
                Ok(())
            }
        }
    }

    /// Always consumes exactly one draw so later draws line up across
    /// initial-state specifications.
    pub(crate) fn sample(&self, rng: &mut SimRng) -> usize {
        match self {
            Initial::Fixed(s) => {
                rng.next_u64();
                *s
            }
            Initial::Distribution(rho) => rng.categorical(rho),
        }
    }
}

impl<T> Default for Initial<T> {
    fn default() -> Self {
        Initial::Fixed(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u64> = {
            let mut r = SimRng::new(RunKey::new(7, 3));
            (0..5).map(|_| r.next_u64()).collect()
        };
        let b: Vec<u64> = {
            let mut r = SimRng::new(RunKey::new(7, 3));
            (0..5).map(|_| r.next_u64()).collect()
        };
        let c: Vec<u64> = {
            let mut r = SimRng::new(RunKey::new(7, 4));
            (0..5).map(|_| r.next_u64()).collect()
        };
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn categorical_boundaries_advance() {
        // A point mass is always returned, including a leading zero entry.
        let mut r = SimRng::new(RunKey::new(1, 0));
        for _ in 0..100 {
            assert_eq!(r.categorical(&[0.0, 1.0, 0.0]), 1);
        }
        let mut counts = [0usize; 2];
        for _ in 0..10_000 {
            counts[r.categorical(&[0.5, 0.5])] += 1;
        }
        assert!((counts[0] as f64 / 10_000.0 - 0.5).abs() < 0.02);
    }

    #[test]
    fn initial_validation() {
        let m = crate::fixtures::symmetric::<f64>(&[1.0, 0.0]);
        assert!(Initial::Fixed(1).check(&m).is_ok());
        assert!(Initial::Fixed(2).check(&m).is_err());
        assert!(Initial::Distribution(vec![0.3, 0.7]).check(&m).is_ok());
        assert!(Initial::Distribution(vec![0.3, 0.6]).check(&m).is_err());
    }
}
