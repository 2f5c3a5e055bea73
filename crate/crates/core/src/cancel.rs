//! Two-tone cancellation of the second-order shift.

use alloc::vec::Vec;

use crate::drive::{pole_frequencies, rabi_rate, resonant_response, response_function, second_order_shift, DriveTone};
use crate::error::{invalid, Error, Result};
use crate::mask::{validity_mask, MaskConfig};
use crate::spectrum::QubitSubspace;

/// Bisection target for a cancellation root, rad/s (1e-4 x 2 pi MHz).
pub const ROOT_TOL: f64 = 2.0 * core::f64::consts::PI * 1.0e2;

/// R0 = C(omega2) / [C_BS(omega1) + C_AC2(omega1)].
///
/// The denominator never includes the near-resonant term of the primary.
pub fn ratio_r0(qs: &QubitSubspace, omega1: f64, omega2: f64) -> Result<f64> {
    let den = resonant_response(qs, omega1)?.non_resonant();
    let num = response_function(qs, omega2)?.total();
    if den == 0.0 || !(num / den).is_finite() {
        return Err(Error::DenominatorVanishes);
    }
    Ok(num / den)
}

/// Auxiliary amplitude that cancels the primary's shift.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CancellationAmplitude {
    /// E2, V/m.
    pub e2: f64,
    /// E2 within [E1/5, 5 E1].
    pub practical: bool,
}

/// E2 = E1 / sqrt(-R0).
pub fn solve_cancellation_amplitude(r0: f64, e1: f64) -> Result<CancellationAmplitude> {
    if !(r0 < 0.0) {
        return Err(Error::NoCancellation { r0 });
    }
    if !(e1 >= 0.0 && e1.is_finite()) {
        return Err(invalid("e1", "must be a finite non-negative amplitude"));
    }
    let e2 = e1 / (-r0).sqrt();
    Ok(CancellationAmplitude { e2, practical: e2 <= 5.0 * e1 && e2 >= e1 / 5.0 })
}

/// A zero of the two-tone shift in omega2.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CancellationRoot {
    /// Auxiliary frequency, rad/s.
    pub omega2: f64,
    /// Remaining delta omega^(2) at the root, rad/s.
    pub residual: f64,
    /// R0 at the root.
    pub r0: f64,
}

fn two_tone_shift(qs: &QubitSubspace, e1: f64, e2: f64, omega2: f64) -> Result<f64> {
    let tones = [DriveTone::new(e1, qs.omega0, 0.0)?, DriveTone::new(e2, omega2, 0.0)?];
    Ok(second_order_shift(qs, &tones)?.delta_omega2)
}

/// Roots of delta omega^(2)(omega2) with the primary fixed at omega0.
///
/// `mask = None` scans every point outside the pole guard bands.
pub fn find_cancellation_frequencies(
    qs: &QubitSubspace,
    e1: f64,
    e2: f64,
    band: (f64, f64),
    points: usize,
    mask: Option<&MaskConfig>,
) -> Result<Vec<CancellationRoot>> {
    find_cancellation_frequencies_tol(qs, e1, e2, band, points, mask, ROOT_TOL)
}

/// [`find_cancellation_frequencies`] with an explicit residual tolerance, rad/s.
#[allow(clippy::too_many_arguments)]
pub fn find_cancellation_frequencies_tol(
    qs: &QubitSubspace,
    e1: f64,
    e2: f64,
    band: (f64, f64),
    points: usize,
    mask: Option<&MaskConfig>,
    tol: f64,
) -> Result<Vec<CancellationRoot>> {
    let (lo, hi) = band;
    if !(lo > 0.0 && hi > lo) {
        return Err(invalid("band", "need 0 < lo < hi"));
    }
    if points < 2 {
        return Err(invalid("points", "need at least 2 scan points"));
    }
    let r1 = DriveTone::new(e1, qs.omega0, 0.0).map(|t| rabi_rate(qs, &t))?;
    let r2 = DriveTone::new(e2, qs.omega0, 0.0).map(|t| rabi_rate(qs, &t))?;
    let admitted = |w: f64| mask.is_none_or(|m| validity_mask(qs.omega0, w, qs.omega0, r1, r2, m).admits_auxiliary());
    let poles = pole_frequencies(qs);
    let step = (hi - lo) / (points - 1) as f64;
    let scan: Vec<(f64, Option<f64>)> = (0..points)
        .map(|i| {
            let w = lo + step * i as f64;
            let v = if admitted(w) { two_tone_shift(qs, e1, e2, w).ok() } else { None };
            (w, v)
        })
        .collect();
    let mut roots = Vec::new();
    for pair in scan.windows(2) {
        let ((a, Some(fa)), (b, Some(fb))) = (pair[0], pair[1]) else { continue };
        if fa == 0.0 {
            roots.push(a);
            continue;
        }
        if fa.signum() == fb.signum() || poles.iter().any(|&p| p > a && p < b) {
            continue;
        }
        if let Some(w) = bisect(|w| two_tone_shift(qs, e1, e2, w), a, fa, b, tol) {
            if admitted(w) {
                roots.push(w);
            }
        }
    }
    if roots.is_empty() {
        return Err(Error::NoRootInBand);
    }
    roots
        .into_iter()
        .map(|w| {
            Ok(CancellationRoot {
                omega2: w,
                residual: two_tone_shift(qs, e1, e2, w)?,
                r0: ratio_r0(qs, qs.omega0, w)?,
            })
        })
        .collect()
}

fn bisect(f: impl Fn(f64) -> Result<f64>, mut a: f64, mut fa: f64, mut b: f64, tol: f64) -> Option<f64> {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let fm = f(m).ok()?;
        if fm.abs() < tol || (b - a) <= 4.0 * f64::EPSILON * m {
            return (fm.abs() < tol).then_some(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    None
}
