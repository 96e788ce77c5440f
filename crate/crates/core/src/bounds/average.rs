use super::{azuma_term, check_delta, check_nonneg, check_t, lil_t0, lil_term, BoundResult, ThresholdRule};
use crate::error::{Error, Result};
use crate::scalar::Real;

fn checked<T: Real>(t: usize, delta: T, dispersion: &[(T, &str)]) -> Result<T> {
    check_delta(delta)?;
    check_t(t)?;
    for &(x, name) in dispersion {
        check_nonneg(x, name)?;
    }
    Ok(T::from_count(t))
}

/// `K sqrt(2T ln(2/δ))`.
pub fn azuma_centered<T: Real>(k: T, t: usize, delta: T) -> Result<BoundResult<T>> {
    let n = checked(t, delta, &[(k, "K")])?;
    Ok(BoundResult::always(
        azuma_term(k, n, T::c(2.0) / delta),
        "K*sqrt(2T ln(2/delta))",
    ))
}

/// `max{K sqrt(3T(2 ln ln(3T/2) + ln(2/δ))), K²}`, applicable from `T0`.
pub fn lil_centered<T: Real>(k: T, t: usize, delta: T, rule: ThresholdRule) -> Result<BoundResult<T>> {
    let n = checked(t, delta, &[(k, "K")])?;
    let t0 = lil_t0(k, T::c(4.0) / delta, rule)?;
    Ok(BoundResult::gated(
        lil_term(k, n, T::c(2.0) / delta),
        t,
        Some(t0),
        format!("max(K*sqrt(3T(2 lnln(1.5T)+ln(2/delta))), K^2); {}", rule.describe("4/delta")),
    ))
}

/// Centered Azuma bound plus `H`.
pub fn azuma_uncentered<T: Real>(k: T, h: T, t: usize, delta: T) -> Result<BoundResult<T>> {
    check_nonneg(h, "H")?;
    Ok(azuma_centered(k, t, delta)?.map_value(|v| v + h))
}

/// Centered LIL bound plus `H`.
pub fn lil_uncentered<T: Real>(k: T, h: T, t: usize, delta: T, rule: ThresholdRule) -> Result<BoundResult<T>> {
    check_nonneg(h, "H")?;
    Ok(lil_centered(k, t, delta, rule)?.map_value(|v| v + h))
}

fn d_rmax<T: Real>(diameter: T, r_max: T) -> Result<T> {
    if diameter.is_infinite() {
        return Err(Error::InfiniteDiameter);
    }
    check_nonneg(diameter, "D")?;
    check_nonneg(r_max, "r_max")?;
    Ok(diameter * r_max)
}

/// Uncentered Azuma bound with `K = H = D·r_max`.
pub fn policy_independent_azuma<T: Real>(diameter: T, r_max: T, t: usize, delta: T) -> Result<BoundResult<T>> {
    let c = d_rmax(diameter, r_max)?;
    azuma_uncentered(c, c, t, delta)
}

/// Uncentered LIL bound with `K = H = D·r_max`.
pub fn policy_independent_lil<T: Real>(
    diameter: T,
    r_max: T,
    t: usize,
    delta: T,
    rule: ThresholdRule,
) -> Result<BoundResult<T>> {
    let c = d_rmax(diameter, r_max)?;
    lil_uncentered(c, c, t, delta, rule)
}

pub(crate) fn two_policy_azuma_unchecked<T: Real>(k1: T, h1: T, k2: T, h2: T, n: T, delta: T) -> T {
    let arg = T::c(4.0) / delta;
    azuma_term(k1, n, arg) + h1 + azuma_term(k2, n, arg) + h2
}

/// Sum of the two uncentered Azuma bounds at confidence `δ/2`.
pub fn two_policy_azuma<T: Real>(k1: T, h1: T, k2: T, h2: T, t: usize, delta: T) -> Result<BoundResult<T>> {
    let n = checked(t, delta, &[(k1, "K1"), (h1, "H1"), (k2, "K2"), (h2, "H2")])?;
    Ok(BoundResult::always(
        two_policy_azuma_unchecked(k1, h1, k2, h2, n, delta),
        "K1*sqrt(2T ln(4/delta)) + H1 + K2*sqrt(2T ln(4/delta)) + H2",
    ))
}

/// Sum of the two uncentered LIL bounds at confidence `δ/2`; `T0` is the
/// larger per-policy threshold with `ln(8/δ)`.
#[allow(clippy::too_many_arguments)]
pub fn two_policy_lil<T: Real>(
    k1: T,
    h1: T,
    k2: T,
    h2: T,
    t: usize,
    delta: T,
    rule: ThresholdRule,
) -> Result<BoundResult<T>> {
    let n = checked(t, delta, &[(k1, "K1"), (h1, "H1"), (k2, "K2"), (h2, "H2")])?;
    let arg = T::c(4.0) / delta;
    let t0 = lil_t0(k1, T::c(8.0) / delta, rule)?.max(lil_t0(k2, T::c(8.0) / delta, rule)?);
    Ok(BoundResult::gated(
        lil_term(k1, n, arg) + h1 + lil_term(k2, n, arg) + h2,
        t,
        Some(t0),
        format!("sum of per-policy LIL bounds at delta/2; max of {}", rule.describe("8/delta")),
    ))
}

pub(crate) fn two_optimal_azuma_unchecked<T: Real>(k: T, h: T, n: T, delta: T) -> T {
    T::c(2.0) * (azuma_term(k, n, T::c(4.0) / delta) + h)
}

/// `2 (K* sqrt(2T ln(4/δ)) + H*)`.
pub fn two_optimal_azuma<T: Real>(k: T, h: T, t: usize, delta: T) -> Result<BoundResult<T>> {
    let n = checked(t, delta, &[(k, "K"), (h, "H")])?;
    Ok(BoundResult::always(
        two_optimal_azuma_unchecked(k, h, n, delta),
        "2*(K*sqrt(2T ln(4/delta)) + H)",
    ))
}

/// `2 (max{K* sqrt(3T(2 ln ln(3T/2) + ln(4/δ))), K*²} + H*)`.
pub fn two_optimal_lil<T: Real>(k: T, h: T, t: usize, delta: T, rule: ThresholdRule) -> Result<BoundResult<T>> {
    let n = checked(t, delta, &[(k, "K"), (h, "H")])?;
    let t0 = lil_t0(k, T::c(8.0) / delta, rule)?;
    Ok(BoundResult::gated(
        T::c(2.0) * (lil_term(k, n, T::c(4.0) / delta) + h),
        t,
        Some(t0),
        format!("2*(LIL bound at delta/2 + H); {}", rule.describe("8/delta")),
    ))
}

/// Bound on `|R^{π*}_T - T J*|` with the optimal policy's `K*`, `H*`.
pub fn regret_gap_azuma<T: Real>(k_star: T, h_star: T, t: usize, delta: T) -> Result<BoundResult<T>> {
    azuma_uncentered(k_star, h_star, t, delta)
}

pub fn regret_gap_lil<T: Real>(k_star: T, h_star: T, t: usize, delta: T, rule: ThresholdRule) -> Result<BoundResult<T>> {
    lil_uncentered(k_star, h_star, t, delta, rule)
}

pub fn regret_gap_model_azuma<T: Real>(diameter: T, r_max: T, t: usize, delta: T) -> Result<BoundResult<T>> {
    policy_independent_azuma(diameter, r_max, t, delta)
}

pub fn regret_gap_model_lil<T: Real>(
    diameter: T,
    r_max: T,
    t: usize,
    delta: T,
    rule: ThresholdRule,
) -> Result<BoundResult<T>> {
    policy_independent_lil(diameter, r_max, t, delta, rule)
}
