use super::{azuma_term, check_delta, check_t, lil_term, BoundResult, TwoPolicyForm, LIL_CONSTANT};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::stats::FiniteHorizonDispersion;

/// `min{T' in 1..=h+1 : g(T') >= 173 ln(log_arg)}`.
pub fn fh_threshold<T: Real>(fd: &FiniteHorizonDispersion<T>, log_arg: T) -> Option<u64> {
    let level = T::c(LIL_CONSTANT) * log_arg.ln();
    (1..=fd.t_max()).find(|&t| fd.g_at(t) >= level).map(|t| t as u64)
}

fn checked<T: Real>(fd: &FiniteHorizonDispersion<T>, t: usize, delta: T) -> Result<()> {
    check_delta(delta)?;
    check_t(t)?;
    if t > fd.t_max() {
        return Err(Error::HorizonExceeded { t, limit: fd.t_max() });
    }
    Ok(())
}

const THRESHOLD_NOTE: &str = "T0 = min T' with g(T') >= 173 ln(4/delta), applicable only if g(h+1) reaches it";

/// `K̄_T sqrt(2 g(T) ln(2/δ))`.
pub fn fh_azuma<T: Real>(fd: &FiniteHorizonDispersion<T>, t: usize, delta: T) -> Result<BoundResult<T>> {
    checked(fd, t, delta)?;
    Ok(BoundResult::always(
        azuma_term(fd.k_bar_at(t), fd.g_at(t), T::c(2.0) / delta),
        "Kbar_T*sqrt(2 g(T) ln(2/delta))",
    ))
}

/// `max{K̄_T sqrt(3g(2 ln ln(3g/2) + ln(2/δ))), K̄_T²}` with `g = g(T)`.
pub fn fh_lil<T: Real>(fd: &FiniteHorizonDispersion<T>, t: usize, delta: T) -> Result<BoundResult<T>> {
    checked(fd, t, delta)?;
    Ok(BoundResult::gated(
        lil_term(fd.k_bar_at(t), fd.g_at(t), T::c(2.0) / delta),
        t,
        fh_threshold(fd, T::c(4.0) / delta),
        THRESHOLD_NOTE,
    ))
}

/// `K̄_T sqrt(2T ln(2/δ)) + H̄_T`.
pub fn fh_uncentered_azuma<T: Real>(fd: &FiniteHorizonDispersion<T>, t: usize, delta: T) -> Result<BoundResult<T>> {
    checked(fd, t, delta)?;
    Ok(BoundResult::always(
        azuma_term(fd.k_bar_at(t), T::from_count(t), T::c(2.0) / delta) + fd.h_bar_at(t),
        "Kbar_T*sqrt(2T ln(2/delta)) + Hbar_T",
    ))
}

pub fn fh_uncentered_lil<T: Real>(fd: &FiniteHorizonDispersion<T>, t: usize, delta: T) -> Result<BoundResult<T>> {
    checked(fd, t, delta)?;
    Ok(BoundResult::gated(
        lil_term(fd.k_bar_at(t), T::from_count(t), T::c(2.0) / delta) + fd.h_bar_at(t),
        t,
        fh_threshold(fd, T::c(4.0) / delta),
        THRESHOLD_NOTE,
    ))
}

/// Two finite-horizon policies: the sum of the per-policy centered bounds at
/// confidence `δ/2`.
pub fn fh_two_policy<T: Real>(
    fd1: &FiniteHorizonDispersion<T>,
    fd2: &FiniteHorizonDispersion<T>,
    t: usize,
    delta: T,
    form: TwoPolicyForm,
) -> Result<BoundResult<T>> {
    checked(fd1, t, delta)?;
    checked(fd2, t, delta)?;
    let arg = T::c(4.0) / delta;
    match form {
        TwoPolicyForm::Azuma => Ok(BoundResult::always(
            azuma_term(fd1.k_bar_at(t), fd1.g_at(t), arg) + azuma_term(fd2.k_bar_at(t), fd2.g_at(t), arg),
            "sum of Kbar_T*sqrt(2 g(T) ln(4/delta)) over both policies",
        )),
        TwoPolicyForm::Lil => {
            let t8 = T::c(8.0) / delta;
            let t0 = fh_threshold(fd1, t8).zip(fh_threshold(fd2, t8)).map(|(a, b)| a.max(b));
            Ok(BoundResult::gated(
                lil_term(fd1.k_bar_at(t), fd1.g_at(t), arg) + lil_term(fd2.k_bar_at(t), fd2.g_at(t), arg),
                t,
                t0,
                "sum of per-policy LIL bounds at delta/2; T0 = max of per-policy thresholds with ln(8/delta)",
            ))
        }
    }
}
