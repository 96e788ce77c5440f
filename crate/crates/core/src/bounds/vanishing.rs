use serde::Serialize;

use super::{azuma_centered, disc_azuma, f_gamma};
use crate::error::{Error, Result};
use crate::model::{MdpModel, StationaryPolicy};
use crate::scalar::Real;
use crate::solvers::{solve_arpe, solve_drpe};
use crate::stats::max_abs_deviation;

/// Gaps at or below this size count as already vanished when judging
/// whether a sequence of gaps shrinks.
pub const GAP_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VanishingDiscountRow<T> {
    pub gamma: T,
    pub f_gamma: T,
    pub f_gap: T,
    pub k_gamma: T,
    pub k_gap: T,
    pub disc_azuma: T,
    pub azuma_gap: T,
    /// `azuma_gap / avg_azuma`, or the absolute gap when the target is 0.
    pub relative_gap: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VanishingDiscountReport<T> {
    pub t: usize,
    pub delta: T,
    pub k_avg: T,
    pub avg_azuma: T,
    pub rows: Vec<VanishingDiscountRow<T>>,
    pub f_gap_shrinking: bool,
    pub k_gap_shrinking: bool,
    pub azuma_gap_shrinking: bool,
}

impl<T: Real> VanishingDiscountReport<T> {
    pub fn final_relative_gap(&self) -> T {
        self.rows.last().map_or(T::zero(), |r| r.relative_gap)
    }
}

/// Each step must strictly decrease unless the new gap is already below
/// [`GAP_FLOOR`].
fn shrinking<T: Real>(gaps: impl Iterator<Item = T>) -> bool {
    let floor = T::tol(GAP_FLOOR);
    let gaps: Vec<T> = gaps.collect();
    gaps.windows(2).all(|w| w[1] < w[0] || w[1] <= floor)
}

/// Compares discounted quantities along an increasing `γ` grid with their
/// average-reward counterparts at horizon `t`.
pub fn vanishing_discount_check<T: Real>(
    model: &MdpModel<T>,
    policy: &StationaryPolicy,
    t: usize,
    delta: T,
    gammas: &[T],
) -> Result<VanishingDiscountReport<T>> {
    if gammas.is_empty() || gammas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::DomainError("gamma grid must be nonempty and strictly increasing".into()));
    }
    let avg = solve_arpe(model, policy, 0)?;
    let k_avg = max_abs_deviation(model, policy, &avg.v);
    let avg_azuma = azuma_centered(k_avg, t, delta)?.value;
    let n = T::from_count(t);

    let rows = gammas
        .iter()
        .map(|&gamma| {
            let v = solve_drpe(model, policy, gamma)?.v;
            let k_gamma = max_abs_deviation(model, policy, &v);
            let f = f_gamma(gamma, t);
            let disc = disc_azuma(k_gamma, gamma, t, delta)?.value;
            let azuma_gap = (disc - avg_azuma).abs();
            Ok(VanishingDiscountRow {
                gamma,
                f_gamma: f,
                f_gap: (f - n).abs(),
                k_gamma,
                k_gap: (k_gamma - k_avg).abs(),
                disc_azuma: disc,
                azuma_gap,
                relative_gap: if avg_azuma > T::zero() { azuma_gap / avg_azuma } else { azuma_gap },
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(VanishingDiscountReport {
        t,
        delta,
        k_avg,
        avg_azuma,
        f_gap_shrinking: shrinking(rows.iter().map(|r| r.f_gap)),
        k_gap_shrinking: shrinking(rows.iter().map(|r| r.k_gap)),
        azuma_gap_shrinking: shrinking(rows.iter().map(|r| r.azuma_gap)),
        rows,
    })
}
