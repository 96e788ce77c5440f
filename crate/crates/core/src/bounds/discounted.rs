use super::{
    azuma_term, check_delta, check_nonneg, check_t, lil_term, BoundResult, ThresholdRule, TwoPolicyForm,
};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::solvers::check_gamma;

/// `f^γ(T) = Σ_{t=1}^T γ^{2t} = (γ² - γ^{2T+2}) / (1 - γ²)`.
pub fn f_gamma<T: Real>(gamma: T, t: usize) -> T {
    let g2 = gamma * gamma;
    (g2 - gamma.powf(T::from_count(2 * t + 2))) / (T::one() - g2)
}

/// `lim_{T→∞} f^γ(T) = γ² / (1 - γ²)`.
pub fn f_gamma_limit<T: Real>(gamma: T) -> T {
    let g2 = gamma * gamma;
    g2 / (T::one() - g2)
}

/// `min{T' >= 1 : f^γ(T') > scale(K) ln(log_arg)}`, or `None` when the
/// limit of `f^γ` never exceeds the level.
pub fn disc_threshold<T: Real>(k: T, gamma: T, log_arg: T, rule: ThresholdRule) -> Result<Option<u64>> {
    if k <= T::zero() {
        return Err(Error::KZero);
    }
    let level = rule.scale(k) * log_arg.ln();
    if f_gamma_limit(gamma) <= level {
        return Ok(None);
    }
    let g2 = gamma * gamma;
    // f(T) > level  ⇔  γ^{2T+2} < γ² - level (1 - γ²) =: q.
    let q = g2 - level * (T::one() - g2);
    let exact = ((q.ln() / gamma.ln() - T::c(2.0)) / T::c(2.0)).as_f64();
    let mut t = if exact.is_finite() && exact > 0.0 {
        (exact.floor() as u64).saturating_add(1)
    } else {
        1
    };
    let f = |t: u64| f_gamma(gamma, t as usize);
    while t > 1 && f(t - 1) > level {
        t -= 1;
    }
    while f(t) <= level {
        t += 1;
    }
    Ok(Some(t))
}

fn checked<T: Real>(gamma: T, t: usize, delta: T, ks: &[T]) -> Result<T> {
    check_gamma(gamma)?;
    check_delta(delta)?;
    check_t(t)?;
    for &k in ks {
        check_nonneg(k, "K_gamma")?;
    }
    Ok(f_gamma(gamma, t))
}

fn tail<T: Real>(gamma: T, r_max: T, t: usize) -> Result<T> {
    check_nonneg(r_max, "r_max")?;
    Ok(gamma.powf(T::from_count(t)) * r_max / (T::one() - gamma))
}

/// `K_γ sqrt(2 f^γ(T) ln(2/δ))`.
pub fn disc_azuma<T: Real>(k_gamma: T, gamma: T, t: usize, delta: T) -> Result<BoundResult<T>> {
    let f = checked(gamma, t, delta, &[k_gamma])?;
    Ok(BoundResult::always(
        azuma_term(k_gamma, f, T::c(2.0) / delta),
        "K_gamma*sqrt(2 f(T) ln(2/delta))",
    ))
}

/// `max{K_γ sqrt(3 f(2 ln ln(3f/2) + ln(2/δ))), K_γ²}` with `f = f^γ(T)`.
pub fn disc_lil<T: Real>(k_gamma: T, gamma: T, t: usize, delta: T, rule: ThresholdRule) -> Result<BoundResult<T>> {
    let f = checked(gamma, t, delta, &[k_gamma])?;
    let t0 = disc_threshold(k_gamma, gamma, T::c(4.0) / delta, rule)?;
    let level = match rule {
        ThresholdRule::Printed => "173/K_gamma",
        ThresholdRule::Conservative => "173/K_gamma^2 [conservative]",
    };
    let notes = match t0 {
        Some(_) => format!("T0 = min T' with f(T') > {level} * ln(4/delta)"),
        None => format!("never applicable: lim f <= {level} * ln(4/delta)"),
    };
    Ok(BoundResult::gated(lil_term(k_gamma, f, T::c(2.0) / delta), t, t0, notes))
}

/// Centered discounted Azuma bound plus `γ^T r_max / (1-γ)`.
pub fn disc_uncentered_azuma<T: Real>(k_gamma: T, gamma: T, r_max: T, t: usize, delta: T) -> Result<BoundResult<T>> {
    let r = disc_azuma(k_gamma, gamma, t, delta)?;
    let tail = tail(gamma, r_max, t)?;
    Ok(r.map_value(|v| v + tail))
}

pub fn disc_uncentered_lil<T: Real>(
    k_gamma: T,
    gamma: T,
    r_max: T,
    t: usize,
    delta: T,
    rule: ThresholdRule,
) -> Result<BoundResult<T>> {
    let r = disc_lil(k_gamma, gamma, t, delta, rule)?;
    let tail = tail(gamma, r_max, t)?;
    Ok(r.map_value(|v| v + tail))
}

/// Two stationary policies under discounting: the sum of the per-policy
/// centered bounds at confidence `δ/2`.
pub fn disc_two_policy<T: Real>(
    k1_gamma: T,
    k2_gamma: T,
    gamma: T,
    t: usize,
    delta: T,
    form: TwoPolicyForm,
    rule: ThresholdRule,
) -> Result<BoundResult<T>> {
    let f = checked(gamma, t, delta, &[k1_gamma, k2_gamma])?;
    let arg = T::c(4.0) / delta;
    match form {
        TwoPolicyForm::Azuma => Ok(BoundResult::always(
            azuma_term(k1_gamma, f, arg) + azuma_term(k2_gamma, f, arg),
            "(K1+K2)*sqrt(2 f(T) ln(4/delta))",
        )),
        TwoPolicyForm::Lil => {
            let a = disc_threshold(k1_gamma, gamma, T::c(8.0) / delta, rule)?;
            let b = disc_threshold(k2_gamma, gamma, T::c(8.0) / delta, rule)?;
            let t0 = a.zip(b).map(|(a, b)| a.max(b));
            Ok(BoundResult::gated(
                lil_term(k1_gamma, f, arg) + lil_term(k2_gamma, f, arg),
                t,
                t0,
                "sum of per-policy LIL bounds at delta/2; T0 = max of per-policy first crossings with ln(8/delta)",
            ))
        }
    }
}
