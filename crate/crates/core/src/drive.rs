//! Rabi rates and the second-order drive response.
//!
//! Coefficients are returned in rad/s per (V/m)^2; multiply by E^2 for a shift.
//! The three terms are named by their physics:
//!
//! * `c_bs`: counter-rotating intra-doublet term, pole at hbar omega = -Delta21 (never hit).
//! * `c_ac1`: near-resonant intra-doublet term, pole at omega = omega0.
//! * `c_ac2`: virtual transitions through the higher levels n >= 3.

use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::mask::MaskConfig;
use crate::spectrum::QubitSubspace;

/// Relative half-width of the exclusion band around each pole.
pub const POLE_GUARD: f64 = 1e-3;

/// Dipoles with |x|^2 below this fraction of the row's largest entry carry no pole.
const NEGLIGIBLE_WEIGHT: f64 = 1e-16;

/// One monochromatic component of the in-plane drive E cos(omega t + phi) along x.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DriveTone {
    /// Field amplitude, V/m.
    pub amplitude: f64,
    /// Angular frequency, rad/s.
    pub omega: f64,
    /// Phase, rad.
    pub phase: f64,
}

impl DriveTone {
    /// Validated tone.
    pub fn new(amplitude: f64, omega: f64, phase: f64) -> Result<Self> {
        let t = DriveTone { amplitude, omega, phase };
        t.validate()?;
        Ok(t)
    }

    /// Checks amplitude >= 0 and omega > 0.
    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude >= 0.0 && self.amplitude.is_finite()) {
            return Err(invalid("tone.amplitude", alloc::format!("must be >= 0, got {}", self.amplitude)));
        }
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return Err(invalid("tone.omega", alloc::format!("must be > 0, got {}", self.omega)));
        }
        if !self.phase.is_finite() {
            return Err(invalid("tone.phase", "must be finite"));
        }
        Ok(())
    }
}

/// Second-order response at one frequency, rad/s per (V/m)^2.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResponseTerms {
    /// Near-resonant intra-doublet term; zero when `resonant`.
    pub c_ac1: f64,
    /// Counter-rotating intra-doublet term.
    pub c_bs: f64,
    /// Higher-level term.
    pub c_ac2: f64,
    /// The tone drives the qubit transition; `c_ac1` became Rabi splitting and is dropped.
    pub resonant: bool,
}

impl ResponseTerms {
    /// c_ac1 + c_bs + c_ac2.
    pub fn total(&self) -> f64 {
        self.c_ac1 + self.c_bs + self.c_ac2
    }

    /// c_bs + c_ac2, the part that stays finite at omega = omega0.
    pub fn non_resonant(&self) -> f64 {
        self.c_bs + self.c_ac2
    }

    /// The three terms in printed order: [1/(D21 + hw) term, 1/(D21 - hw) term, higher-level sum].
    pub fn by_position(&self) -> [f64; 3] {
        [self.c_bs, self.c_ac1, self.c_ac2]
    }

    /// The printed-order terms under the alternative naming that reads them as
    /// (AC2, BS, AC1); returned as (ac2, bs, ac1).
    pub fn positional_labels(&self) -> (f64, f64, f64) {
        let [p1, p2, p3] = self.by_position();
        (p1, p2, p3)
    }

    fn scaled(&self, e2: f64) -> ResponseTerms {
        ResponseTerms { c_ac1: self.c_ac1 * e2, c_bs: self.c_bs * e2, c_ac2: self.c_ac2 * e2, resonant: self.resonant }
    }
}

/// Contribution of a single tone.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ToneShift {
    /// The tone.
    pub tone: DriveTone,
    /// Response coefficients at the tone frequency.
    pub response: ResponseTerms,
    /// Coefficients times E^2, rad/s.
    pub shift: ResponseTerms,
}

/// Summed second-order shift of a tone list.
#[derive(Clone, Debug, PartialEq)]
pub struct ShiftBreakdown {
    /// One entry per tone, in input order.
    pub tones: Vec<ToneShift>,
    /// Sum over tones of c_ac1 E^2, rad/s.
    pub c_ac1: f64,
    /// Sum over tones of c_bs E^2, rad/s.
    pub c_bs: f64,
    /// Sum over tones of c_ac2 E^2, rad/s.
    pub c_ac2: f64,
    /// Total shift delta omega^(2), rad/s.
    pub delta_omega2: f64,
}

/// Omega = e E |x12| / hbar, rad/s.
pub fn rabi_rate(qs: &QubitSubspace, tone: &DriveTone) -> f64 {
    qs.field_energy_factor * tone.amplitude * qs.x12().norm() / qs.hbar_mev_s
}

/// Omega (1 - Omega^2 / (4 (omega0 + omega)^2)).
pub fn effective_rabi(rabi: f64, omega0: f64, omega: f64) -> Result<f64> {
    let s = omega0 + omega;
    if s <= 0.0 {
        return Err(invalid("omega", "omega0 + omega must be positive"));
    }
    Ok(rabi * (1.0 - rabi * rabi / (4.0 * s * s)))
}

/// f(Delta, omega) = 2 Delta / (Delta^2 - (hbar omega)^2), meV^-1.
pub fn level_factor(delta: f64, hw: f64) -> f64 {
    2.0 * delta / (delta * delta - hw * hw)
}

fn check_higher_poles(qs: &QubitSubspace, hw: f64) -> Result<()> {
    for (m, row) in [&qs.dipole_row1, &qs.dipole_row2].into_iter().enumerate() {
        let peak = row.iter().skip(2).fold(0.0f64, |a, x| a.max(x.norm_sqr()));
        for (n, x) in row.iter().enumerate().skip(2) {
            if x.norm_sqr() <= NEGLIGIBLE_WEIGHT * peak {
                continue;
            }
            let delta = (qs.energies[m] - qs.energies[n]).abs();
            let dist = (delta - hw).abs();
            if dist < POLE_GUARD * delta {
                return Err(Error::PoleProximity { tone: None, level: n + 1, distance: dist });
            }
        }
    }
    Ok(())
}

/// Frequencies (rad/s) at which the response diverges: omega0 and every
/// |E_m - E_n| / hbar with a non-negligible dipole, ascending.
pub fn pole_frequencies(qs: &QubitSubspace) -> Vec<f64> {
    let mut poles = alloc::vec![qs.omega0];
    for (m, row) in [&qs.dipole_row1, &qs.dipole_row2].into_iter().enumerate() {
        let peak = row.iter().skip(2).fold(0.0f64, |a, x| a.max(x.norm_sqr()));
        for (n, x) in row.iter().enumerate().skip(2) {
            if x.norm_sqr() > NEGLIGIBLE_WEIGHT * peak {
                poles.push((qs.energies[n] - qs.energies[m]).abs() / qs.hbar_mev_s);
            }
        }
    }
    poles.sort_by(f64::total_cmp);
    poles
}

fn intra_distance(qs: &QubitSubspace, hw: f64) -> (f64, f64) {
    let d21 = qs.e2() - qs.e1();
    ((d21 - hw).abs(), POLE_GUARD * d21)
}

fn prefactor(qs: &QubitSubspace) -> f64 {
    // (e x)^2 / hbar with x in nm, E in V/m: meV^2 nm^-2 (V/m)^-2 / (meV s)
    qs.field_energy_factor * qs.field_energy_factor / qs.hbar_mev_s
}

fn higher_sum(qs: &QubitSubspace, hw: f64) -> f64 {
    let (e1, e2) = (qs.e1(), qs.e2());
    let mut s = 0.0;
    for n in 2..qs.len() {
        let en = qs.energies[n];
        s += qs.dipole_row2[n].norm_sqr() * level_factor(e2 - en, hw)
            - qs.dipole_row1[n].norm_sqr() * level_factor(e1 - en, hw);
    }
    s
}

fn terms(qs: &QubitSubspace, omega: f64, resonant: bool) -> ResponseTerms {
    let hw = qs.hbar_mev_s * omega;
    let p = prefactor(qs);
    let d21 = qs.e2() - qs.e1();
    let x12 = qs.x12().norm_sqr();
    ResponseTerms {
        c_bs: 0.5 * p * x12 / (d21 + hw),
        c_ac1: if resonant { 0.0 } else { 0.5 * p * x12 / (d21 - hw) },
        c_ac2: 0.25 * p * higher_sum(qs, hw),
        resonant,
    }
}

/// Full three-term response at `omega`; rejects every pole guard band.
pub fn response_function(qs: &QubitSubspace, omega: f64) -> Result<ResponseTerms> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(invalid("omega", "must be positive"));
    }
    let hw = qs.hbar_mev_s * omega;
    let (dist, guard) = intra_distance(qs, hw);
    if dist < guard {
        return Err(Error::PoleProximity { tone: None, level: 2, distance: dist });
    }
    check_higher_poles(qs, hw)?;
    Ok(terms(qs, omega, false))
}

/// Response of a tone that drives the qubit transition: `c_ac1` is dropped.
pub fn resonant_response(qs: &QubitSubspace, omega: f64) -> Result<ResponseTerms> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(invalid("omega", "must be positive"));
    }
    check_higher_poles(qs, qs.hbar_mev_s * omega)?;
    Ok(terms(qs, omega, true))
}

/// Running sum of the higher-level term over n = 3, 4, ..., rad/s per (V/m)^2.
pub fn c_ac2_partial_sums(qs: &QubitSubspace, omega: f64) -> Vec<f64> {
    let hw = qs.hbar_mev_s * omega;
    let p = 0.25 * prefactor(qs);
    let (e1, e2) = (qs.e1(), qs.e2());
    let mut acc = 0.0;
    (2..qs.len())
        .map(|n| {
            let en = qs.energies[n];
            acc += p
                * (qs.dipole_row2[n].norm_sqr() * level_factor(e2 - en, hw)
                    - qs.dipole_row1[n].norm_sqr() * level_factor(e1 - en, hw));
            acc
        })
        .collect()
}

/// Sums the per-tone shifts. A tone inside the guard band of the qubit transition is
/// treated as the resonant primary (its `c_ac1` is dropped and `resonant` is set).
pub fn second_order_shift(qs: &QubitSubspace, tones: &[DriveTone]) -> Result<ShiftBreakdown> {
    let mut out =
        ShiftBreakdown { tones: Vec::with_capacity(tones.len()), c_ac1: 0.0, c_bs: 0.0, c_ac2: 0.0, delta_omega2: 0.0 };
    for (i, tone) in tones.iter().enumerate() {
        tone.validate()?;
        let tag = |e: Error| match e {
            Error::PoleProximity { level, distance, .. } => Error::PoleProximity { tone: Some(i), level, distance },
            other => other,
        };
        let (dist, guard) = intra_distance(qs, qs.hbar_mev_s * tone.omega);
        let response = if dist < guard {
            resonant_response(qs, tone.omega).map_err(tag)?
        } else {
            response_function(qs, tone.omega).map_err(tag)?
        };
        let shift = response.scaled(tone.amplitude * tone.amplitude);
        out.c_ac1 += shift.c_ac1;
        out.c_bs += shift.c_bs;
        out.c_ac2 += shift.c_ac2;
        out.tones.push(ToneShift { tone: *tone, response, shift });
    }
    out.delta_omega2 = out.c_ac1 + out.c_bs + out.c_ac2;
    Ok(out)
}

/// Rabi envelope of two near-degenerate tones; `averaged` drops the beat term.
pub fn beat_envelope_rabi(rabi1: f64, phase1: f64, rabi2: f64, phase2: f64, averaged: bool) -> f64 {
    let base = rabi1 * rabi1 + rabi2 * rabi2;
    if averaged {
        base.sqrt()
    } else {
        (base + 2.0 * rabi1 * rabi2 * (phase2 - phase1).cos()).max(0.0).sqrt()
    }
}

/// Off-resonant estimate of the mixed (1,1) channel rate.
pub fn mixed_channel_rabi(
    rabi1: f64,
    rabi2: f64,
    omega0: f64,
    omega1: f64,
    omega2: f64,
    cfg: &MaskConfig,
) -> Result<f64> {
    let d1 = (omega0 - omega1).abs();
    let d2 = (omega0 - omega2).abs();
    if d1 <= cfg.ratio_factor * rabi1 || d2 <= cfg.ratio_factor * rabi2 {
        return Err(Error::FmValidityViolated { detuning: d1.min(d2), rabi: rabi1.max(rabi2) });
    }
    let w2 = omega0 * omega0;
    Ok(0.5 * rabi1 * rabi2 * (omega1 / (w2 - omega1 * omega1) + omega2 / (w2 - omega2 * omega2)))
}
