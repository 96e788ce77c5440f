//! Closed-form concentration bounds and their applicability thresholds.
//!
//! Logarithms are natural throughout. Values are always computed, even when
//! a bound is not yet applicable at the requested `T`.

mod average;
mod discounted;
mod finite_horizon;
mod vanishing;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use average::{
    azuma_centered, azuma_uncentered, lil_centered, lil_uncentered, policy_independent_azuma,
    policy_independent_lil, regret_gap_azuma, regret_gap_lil, regret_gap_model_azuma, regret_gap_model_lil,
    two_optimal_azuma, two_optimal_lil, two_policy_azuma, two_policy_lil,
};
pub use discounted::{
    disc_azuma, disc_lil, disc_threshold, disc_two_policy, disc_uncentered_azuma, disc_uncentered_lil, f_gamma,
    f_gamma_limit,
};
pub use finite_horizon::{fh_azuma, fh_lil, fh_threshold, fh_two_policy, fh_uncentered_azuma, fh_uncentered_lil};
pub use vanishing::{vanishing_discount_check, VanishingDiscountReport, VanishingDiscountRow};

use crate::error::{Error, Result};
use crate::scalar::{ceil_tol, ln_ln, Real};
use crate::stats::FiniteHorizonDispersion;

/// Constant in every LIL-type applicability threshold.
pub const LIL_CONSTANT: f64 = 173.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    AzumaCentered,
    LilCentered,
    AzumaUncentered,
    LilUncentered,
    PolicyIndependentAzuma,
    PolicyIndependentLil,
    TwoPolicyAzuma,
    TwoPolicyLil,
    TwoOptimalAzuma,
    TwoOptimalLil,
    RegretGapAzuma,
    RegretGapLil,
    RegretGapModelAzuma,
    RegretGapModelLil,
    DiscAzuma,
    DiscLil,
    DiscUncenteredAzuma,
    DiscUncenteredLil,
    DiscTwoPolicy,
    FhAzuma,
    FhLil,
    FhUncenteredAzuma,
    FhUncenteredLil,
    FhTwoPolicy,
}

impl BoundKind {
    pub const ALL: [BoundKind; 24] = [
        BoundKind::AzumaCentered,
        BoundKind::LilCentered,
        BoundKind::AzumaUncentered,
        BoundKind::LilUncentered,
        BoundKind::PolicyIndependentAzuma,
        BoundKind::PolicyIndependentLil,
        BoundKind::TwoPolicyAzuma,
        BoundKind::TwoPolicyLil,
        BoundKind::TwoOptimalAzuma,
        BoundKind::TwoOptimalLil,
        BoundKind::RegretGapAzuma,
        BoundKind::RegretGapLil,
        BoundKind::RegretGapModelAzuma,
        BoundKind::RegretGapModelLil,
        BoundKind::DiscAzuma,
        BoundKind::DiscLil,
        BoundKind::DiscUncenteredAzuma,
        BoundKind::DiscUncenteredLil,
        BoundKind::DiscTwoPolicy,
        BoundKind::FhAzuma,
        BoundKind::FhLil,
        BoundKind::FhUncenteredAzuma,
        BoundKind::FhUncenteredLil,
        BoundKind::FhTwoPolicy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BoundKind::AzumaCentered => "azuma_centered",
            BoundKind::LilCentered => "lil_centered",
            BoundKind::AzumaUncentered => "azuma_uncentered",
            BoundKind::LilUncentered => "lil_uncentered",
            BoundKind::PolicyIndependentAzuma => "policy_independent_azuma",
            BoundKind::PolicyIndependentLil => "policy_independent_lil",
            BoundKind::TwoPolicyAzuma => "two_policy_azuma",
            BoundKind::TwoPolicyLil => "two_policy_lil",
            BoundKind::TwoOptimalAzuma => "two_optimal_azuma",
            BoundKind::TwoOptimalLil => "two_optimal_lil",
            BoundKind::RegretGapAzuma => "regret_gap_azuma",
            BoundKind::RegretGapLil => "regret_gap_lil",
            BoundKind::RegretGapModelAzuma => "regret_gap_model_azuma",
            BoundKind::RegretGapModelLil => "regret_gap_model_lil",
            BoundKind::DiscAzuma => "disc_azuma",
            BoundKind::DiscLil => "disc_lil",
            BoundKind::DiscUncenteredAzuma => "disc_uncentered_azuma",
            BoundKind::DiscUncenteredLil => "disc_uncentered_lil",
            BoundKind::DiscTwoPolicy => "disc_two_policy",
            BoundKind::FhAzuma => "fh_azuma",
            BoundKind::FhLil => "fh_lil",
            BoundKind::FhUncenteredAzuma => "fh_uncentered_azuma",
            BoundKind::FhUncenteredLil => "fh_uncentered_lil",
            BoundKind::FhTwoPolicy => "fh_two_policy",
        }
    }

    pub fn family(self) -> Family {
        use BoundKind::*;
        match self {
            DiscAzuma | DiscLil | DiscUncenteredAzuma | DiscUncenteredLil | DiscTwoPolicy => Family::Discounted,
            FhAzuma | FhLil | FhUncenteredAzuma | FhUncenteredLil | FhTwoPolicy => Family::FiniteHorizon,
            _ => Family::Average,
        }
    }

    /// Whether the bound has an LIL-type applicability threshold. The two
    /// two-policy kinds depend on [`TwoPolicyForm`] and report `false`.
    pub fn is_lil(self) -> bool {
        self.name().ends_with("_lil")
    }

    /// Whether the bound concerns the difference of two reward processes.
    pub fn is_pair(self) -> bool {
        use BoundKind::*;
        matches!(
            self,
            TwoPolicyAzuma | TwoPolicyLil | TwoOptimalAzuma | TwoOptimalLil | DiscTwoPolicy | FhTwoPolicy
        )
    }

    /// Whether the bound is centered at `V(S_0) - V(S_T)` (or its analogue)
    /// rather than at the expected value alone.
    pub fn is_centered(self) -> bool {
        use BoundKind::*;
        matches!(
            self,
            AzumaCentered | LilCentered | DiscAzuma | DiscLil | DiscTwoPolicy | FhAzuma | FhLil | FhTwoPolicy
        )
    }
}

impl fmt::Display for BoundKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BoundKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().replace('-', "_").to_ascii_lowercase();
        BoundKind::ALL
            .into_iter()
            .find(|k| k.name() == key)
            .ok_or_else(|| Error::DomainError(format!("unknown bound kind `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Average,
    Discounted,
    FiniteHorizon,
}

/// Which LIL applicability threshold to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdRule {
    /// `⌈(173/K) ln(4/δ)⌉`.
    #[default]
    Printed,
    /// `⌈(173/K²) ln(4/δ)⌉`, from the martingale inequality's own condition
    /// `Σ c_t² ≥ 173 ln(4/δ)` with `c_t = K`.
    Conservative,
}

impl ThresholdRule {
    fn scale<T: Real>(self, k: T) -> T {
        match self {
            ThresholdRule::Printed => T::c(LIL_CONSTANT) / k,
            ThresholdRule::Conservative => T::c(LIL_CONSTANT) / (k * k),
        }
    }

    fn describe(self, log_arg: &str) -> String {
        match self {
            ThresholdRule::Printed => format!("T0 = ceil(173/K * ln({log_arg}))"),
            ThresholdRule::Conservative => format!("T0 = ceil(173/K^2 * ln({log_arg})) [conservative]"),
        }
    }
}

/// Shape of the two-policy bounds in the discounted and finite-horizon
/// families, which are requested through a single kind each.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TwoPolicyForm {
    #[default]
    Azuma,
    Lil,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundResult<T> {
    pub value: T,
    pub applicable: bool,
    pub threshold_t0: Option<u64>,
    pub notes: String,
}

impl<T: Real> BoundResult<T> {
    fn always(value: T, notes: impl Into<String>) -> Self {
        Self {
            value,
            applicable: true,
            threshold_t0: None,
            notes: notes.into(),
        }
    }

    fn gated(value: T, t: usize, t0: Option<u64>, notes: impl Into<String>) -> Self {
        Self {
            value,
            applicable: t0.is_some_and(|t0| t as u64 >= t0),
            threshold_t0: t0,
            notes: notes.into(),
        }
    }

    fn map_value(self, f: impl FnOnce(T) -> T) -> Self {
        Self {
            value: f(self.value),
            ..self
        }
    }
}

/// Inputs for [`evaluate`]. Each kind reads only the fields it needs and
/// reports [`Error::MissingParameter`] for absent ones.
#[derive(Debug, Clone, Serialize)]
pub struct BoundParams<T> {
    pub t: usize,
    pub delta: T,
    pub k: Option<T>,
    pub h: Option<T>,
    pub k2: Option<T>,
    pub h2: Option<T>,
    pub diameter: Option<T>,
    pub r_max: Option<T>,
    pub gamma: Option<T>,
    pub fh: Option<FiniteHorizonDispersion<T>>,
    pub fh2: Option<FiniteHorizonDispersion<T>>,
    pub threshold_rule: ThresholdRule,
    pub two_policy_form: TwoPolicyForm,
}

impl<T: Real> BoundParams<T> {
    pub fn new(t: usize, delta: T) -> Self {
        Self {
            t,
            delta,
            k: None,
            h: None,
            k2: None,
            h2: None,
            diameter: None,
            r_max: None,
            gamma: None,
            fh: None,
            fh2: None,
            threshold_rule: ThresholdRule::default(),
            two_policy_form: TwoPolicyForm::default(),
        }
    }

    pub fn at(&self, t: usize) -> Self {
        Self { t, ..self.clone() }
    }
}

fn need<T: Copy>(x: Option<T>, name: &'static str) -> Result<T> {
    x.ok_or(Error::MissingParameter(name))
}

/// Evaluates `kind` on `p`.
pub fn evaluate<T: Real>(kind: BoundKind, p: &BoundParams<T>) -> Result<BoundResult<T>> {
    use BoundKind::*;
    let (t, d, rule) = (p.t, p.delta, p.threshold_rule);
    let k = || need(p.k, "k");
    let h = || need(p.h, "h");
    let k2 = || need(p.k2, "k2");
    let h2 = || need(p.h2, "h2");
    let dm = || need(p.diameter, "diameter");
    let rm = || need(p.r_max, "r_max");
    let g = || need(p.gamma, "gamma");
    let fh = || p.fh.as_ref().ok_or(Error::MissingParameter("fh"));
    let fh2 = || p.fh2.as_ref().ok_or(Error::MissingParameter("fh2"));
    match kind {
        AzumaCentered => azuma_centered(k()?, t, d),
        LilCentered => lil_centered(k()?, t, d, rule),
        AzumaUncentered => azuma_uncentered(k()?, h()?, t, d),
        LilUncentered => lil_uncentered(k()?, h()?, t, d, rule),
        PolicyIndependentAzuma => policy_independent_azuma(dm()?, rm()?, t, d),
        PolicyIndependentLil => policy_independent_lil(dm()?, rm()?, t, d, rule),
        TwoPolicyAzuma => two_policy_azuma(k()?, h()?, k2()?, h2()?, t, d),
        TwoPolicyLil => two_policy_lil(k()?, h()?, k2()?, h2()?, t, d, rule),
        TwoOptimalAzuma => two_optimal_azuma(k()?, h()?, t, d),
        TwoOptimalLil => two_optimal_lil(k()?, h()?, t, d, rule),
        RegretGapAzuma => regret_gap_azuma(k()?, h()?, t, d),
        RegretGapLil => regret_gap_lil(k()?, h()?, t, d, rule),
        RegretGapModelAzuma => regret_gap_model_azuma(dm()?, rm()?, t, d),
        RegretGapModelLil => regret_gap_model_lil(dm()?, rm()?, t, d, rule),
        DiscAzuma => disc_azuma(k()?, g()?, t, d),
        DiscLil => disc_lil(k()?, g()?, t, d, rule),
        DiscUncenteredAzuma => disc_uncentered_azuma(k()?, g()?, rm()?, t, d),
        DiscUncenteredLil => disc_uncentered_lil(k()?, g()?, rm()?, t, d, rule),
        DiscTwoPolicy => disc_two_policy(k()?, k2()?, g()?, t, d, p.two_policy_form, rule),
        FhAzuma => fh_azuma(fh()?, t, d),
        FhLil => fh_lil(fh()?, t, d),
        FhUncenteredAzuma => fh_uncentered_azuma(fh()?, t, d),
        FhUncenteredLil => fh_uncentered_lil(fh()?, t, d),
        FhTwoPolicy => fh_two_policy(fh()?, fh2()?, t, d, p.two_policy_form),
    }
}

pub(crate) fn check_delta<T: Real>(delta: T) -> Result<()> {
    if delta > T::zero() && delta < T::one() {
        Ok(())
    } else {
        Err(Error::DomainError(format!("delta = {delta} not in (0,1)")))
    }
}

pub(crate) fn check_t(t: usize) -> Result<()> {
    if t >= 1 {
        Ok(())
    } else {
        Err(Error::DomainError("T must be at least 1".into()))
    }
}

pub(crate) fn check_nonneg<T: Real>(x: T, name: &str) -> Result<()> {
    if x >= T::zero() && x.is_finite() {
        Ok(())
    } else {
        Err(Error::DomainError(format!("{name} = {x} must be finite and nonnegative")))
    }
}

/// `k · sqrt(2 n ln(log_arg))`.
pub(crate) fn azuma_term<T: Real>(k: T, n: T, log_arg: T) -> T {
    k * (T::c(2.0) * n * log_arg.ln()).sqrt()
}

/// `max{k · sqrt(3 n (2 ln ln(3n/2) + ln(log_arg))), k²}`, falling back to
/// `k²` when `3n/2 <= e`.
pub(crate) fn lil_term<T: Real>(k: T, n: T, log_arg: T) -> T {
    let floor = k * k;
    match ln_ln(T::c(1.5) * n) {
        Some(ll) => (k * (T::c(3.0) * n * (T::c(2.0) * ll + log_arg.ln())).sqrt()).max(floor),
        None => floor,
    }
}

/// `max(1, ⌈scale(k) · ln(log_arg)⌉)`, saturating at `u64::MAX`.
pub(crate) fn lil_t0<T: Real>(k: T, log_arg: T, rule: ThresholdRule) -> Result<u64> {
    if k <= T::zero() {
        return Err(Error::KZero);
    }
    let raw = (rule.scale(k) * log_arg.ln()).as_f64();
    Ok(ceil_tol(raw).max(1.0) as u64)
}
