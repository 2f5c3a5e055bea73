//! Direct time evolution of the driven qubit, used to check the perturbative shifts.
//!
//! Two-level convention, index 0 = |1>, index 1 = |2>, hbar = 1 (rad/s):
//! H(t) = diag(-omega0/2, omega0/2) + sum_a Omega_a cos(omega_a t + phi_a) (e^{i theta} |1><2| + h.c.).
//! Counter-rotating terms are kept.

use alloc::vec::Vec;
use core::f64::consts::PI;

use faer::{Mat, Side};

use crate::drive::DriveTone;
use crate::error::{invalid, Error, Result};
use crate::mask::MaskConfig;
use crate::operator::HermitianOperator;
use crate::spectrum::{QubitSubspace, Spectrum};
use crate::{PhysicalConstants, C64};

/// Largest accepted deviation from unitarity.
pub const UNITARITY_TOL: f64 = 1e-8;
/// Minimum number of steps per shortest period.
pub const MIN_STEPS_PER_PERIOD: usize = 40;
/// Denominator cap for frequency rationalization.
pub const MAX_DENOMINATOR: u64 = 10_000;
/// Accepted relative error of a rationalized frequency ratio.
pub const COMMENSURATE_TOL: f64 = 1e-6;
/// Largest level count of the d-level mode.
pub const MAX_LEVELS: usize = 12;

/// Time-evolution operator.
#[derive(Clone, Debug, PartialEq)]
pub struct Propagator {
    /// U(t_final, 0).
    pub u: Mat<C64>,
    /// Final time, s.
    pub t_final: f64,
    /// Step actually used, s.
    pub step: f64,
}

/// One tone acting on the two-level qubit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QubitTone {
    /// Rabi rate Omega, rad/s.
    pub rabi: f64,
    /// Angular frequency, rad/s.
    pub omega: f64,
    /// Phase, rad.
    pub phase: f64,
}

/// max_ij |U^dagger U - 1|_ij.
pub fn unitarity_drift(u: &Mat<C64>) -> f64 {
    let g = u.adjoint() * u;
    let mut worst = 0.0f64;
    for j in 0..g.ncols() {
        for i in 0..g.nrows() {
            let target = if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
            worst = worst.max((g[(i, j)] - target).norm());
        }
    }
    worst
}

// modified Gram-Schmidt on the columns
fn unitarize(u: &mut Mat<C64>) {
    let n = u.ncols();
    for j in 0..n {
        for k in 0..j {
            let mut dot = C64::new(0.0, 0.0);
            for i in 0..u.nrows() {
                dot += u[(i, k)].conj() * u[(i, j)];
            }
            for i in 0..u.nrows() {
                let v = u[(i, k)];
                u[(i, j)] -= dot * v;
            }
        }
        let norm = (0..u.nrows()).map(|i| u[(i, j)].norm_sqr()).sum::<f64>().sqrt();
        for i in 0..u.nrows() {
            u[(i, j)] /= norm;
        }
    }
}

type M2 = [[C64; 2]; 2];

fn mul2(a: &M2, b: &M2) -> M2 {
    let mut c = [[C64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

/// exp(-i K) for Hermitian 2x2 K, exact.
fn expm_herm2(k: &M2) -> M2 {
    let k0 = 0.5 * (k[0][0].re + k[1][1].re);
    let kz = 0.5 * (k[0][0].re - k[1][1].re);
    let kx = k[0][1].re;
    let ky = -k[0][1].im;
    let r = (kx * kx + ky * ky + kz * kz).sqrt();
    let (s, c) = r.sin_cos();
    let f = if r > 0.0 { s / r } else { 1.0 };
    let g = C64::from_polar(1.0, -k0);
    let i = C64::new(0.0, 1.0);
    [[g * (c - i * f * kz), g * (-i * f * C64::new(kx, -ky))], [g * (-i * f * C64::new(kx, ky)), g * (c + i * f * kz)]]
}

const GAUSS_OFFSET: f64 = 0.288_675_134_594_812_9; // sqrt(3)/6
const COMMUTATOR_WEIGHT: f64 = 0.144_337_567_297_406_44; // sqrt(3)/12

fn qubit_h(omega0: f64, theta: f64, tones: &[QubitTone], t: f64) -> M2 {
    let drive: f64 = tones.iter().map(|d| d.rabi * (d.omega * t + d.phase).cos()).sum();
    let off = C64::from_polar(drive, theta);
    [[C64::new(-0.5 * omega0, 0.0), off], [off.conj(), C64::new(0.5 * omega0, 0.0)]]
}

// fourth-order Magnus generator K with U_step = exp(-i K)
fn magnus_k2(h1: &M2, h2: &M2, dt: f64) -> M2 {
    let c21 = {
        let a = mul2(h2, h1);
        let b = mul2(h1, h2);
        [[a[0][0] - b[0][0], a[0][1] - b[0][1]], [a[1][0] - b[1][0], a[1][1] - b[1][1]]]
    };
    let w = C64::new(0.0, -COMMUTATOR_WEIGHT * dt * dt);
    let mut k = [[C64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            k[i][j] = (h1[i][j] + h2[i][j]) * (0.5 * dt) + w * c21[i][j];
        }
    }
    k
}

fn check_step(requested: f64, frequencies: impl Iterator<Item = f64>) -> Result<()> {
    if !(requested > 0.0 && requested.is_finite()) {
        return Err(invalid("step", "must be positive"));
    }
    for w in frequencies {
        if w > 0.0 && requested > 2.0 * PI / w / MIN_STEPS_PER_PERIOD as f64 * (1.0 + 1e-12) {
            return Err(invalid("step", "must not exceed 1/40 of the shortest period"));
        }
    }
    Ok(())
}

fn step_count(t_final: f64, step: f64) -> Result<usize> {
    if !(t_final >= 0.0 && t_final.is_finite()) {
        return Err(invalid("t_final", "must be finite and non-negative"));
    }
    Ok(((t_final / step).ceil() as usize).max(1))
}

fn m2_to_mat(u: &M2) -> Mat<C64> {
    Mat::from_fn(2, 2, |i, j| u[i][j])
}

fn drift2(u: &M2) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..2 {
        for j in 0..2 {
            let g = u[0][i].conj() * u[0][j] + u[1][i].conj() * u[1][j];
            let t = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g - t).norm());
        }
    }
    worst
}

fn unitarize2(u: &mut M2) {
    let mut m = m2_to_mat(u);
    unitarize(&mut m);
    for i in 0..2 {
        for j in 0..2 {
            u[i][j] = m[(i, j)];
        }
    }
}

/// Time-ordered U(t_final, 0) of the two-level drive Hamiltonian.
///
/// Fourth-order Magnus steps, re-unitarized after every step. `observe` sees (t, U(t, 0)).
pub fn evolve_driven_qubit_with(
    omega0: f64,
    theta: f64,
    tones: &[QubitTone],
    t_final: f64,
    step: f64,
    mut observe: impl FnMut(f64, &[[C64; 2]; 2]),
) -> Result<Propagator> {
    check_step(step, core::iter::once(omega0).chain(tones.iter().map(|d| d.omega.abs())))?;
    let n = step_count(t_final, step)?;
    let dt = t_final / n as f64;
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let mut u: M2 = [[one, zero], [zero, one]];
    for s in 0..n {
        let t = s as f64 * dt;
        let h1 = qubit_h(omega0, theta, tones, t + (0.5 - GAUSS_OFFSET) * dt);
        let h2 = qubit_h(omega0, theta, tones, t + (0.5 + GAUSS_OFFSET) * dt);
        u = mul2(&expm_herm2(&magnus_k2(&h1, &h2, dt)), &u);
        let drift = drift2(&u);
        if drift > UNITARITY_TOL {
            return Err(Error::UnitarityDrift { drift });
        }
        unitarize2(&mut u);
        observe(t + dt, &u);
    }
    Ok(Propagator { u: m2_to_mat(&u), t_final: n as f64 * dt, step: dt })
}

/// [`evolve_driven_qubit_with`] without an observer.
pub fn evolve_driven_qubit(
    omega0: f64,
    theta: f64,
    tones: &[QubitTone],
    t_final: f64,
    step: f64,
) -> Result<Propagator> {
    evolve_driven_qubit_with(omega0, theta, tones, t_final, step, |_, _| {})
}

/// Lowest levels of the dot with their full dipole coupling.
#[derive(Clone, Debug, PartialEq)]
pub struct MultilevelSystem {
    /// (E_n - E_1) / hbar, rad/s.
    pub omegas: Vec<f64>,
    /// <m|x|n> e / hbar, rad/s per V/m.
    pub coupling: Mat<C64>,
}

impl MultilevelSystem {
    /// Levels in meV and a Hermitian dipole block in nm.
    pub fn new(energies: &[f64], dipole: &Mat<C64>, c: &PhysicalConstants) -> Result<Self> {
        let d = energies.len();
        if !(2..=MAX_LEVELS).contains(&d) {
            return Err(invalid("levels", "need 2 <= d <= 12"));
        }
        if dipole.nrows() != d || dipole.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: dipole.nrows() });
        }
        let f = c.field_energy_factor() / c.hbar_mev_s();
        Ok(MultilevelSystem {
            omegas: energies.iter().map(|e| c.energy_to_angular(e - energies[0])).collect(),
            coupling: Mat::from_fn(d, d, |i, j| dipole[(i, j)] * f),
        })
    }

    /// Lowest `d` eigenstates of `spectrum` with <m|x|n> between all of them.
    pub fn from_spectrum(
        spectrum: &Spectrum,
        x_op: &HermitianOperator,
        d: usize,
        c: &PhysicalConstants,
    ) -> Result<Self> {
        if d > spectrum.len() {
            return Err(Error::TooFewStates { needed: d, available: spectrum.len() });
        }
        if x_op.dim() != spectrum.states.nrows() {
            return Err(Error::DimensionMismatch { expected: spectrum.states.nrows(), found: x_op.dim() });
        }
        let v = spectrum.states.subcols(0, d);
        let block = v.adjoint() * (x_op.matrix() * v);
        Self::new(&spectrum.energies[..d], &block, c)
    }

    /// Lowest `d` levels of a qubit subspace; only the rows of |1> and |2> couple.
    pub fn from_subspace(qs: &QubitSubspace, d: usize, c: &PhysicalConstants) -> Result<Self> {
        let d = d.min(qs.len());
        let mut x = Mat::<C64>::zeros(d, d);
        for n in 0..d {
            x[(0, n)] = qs.dipole_row1[n];
            x[(n, 0)] = qs.dipole_row1[n].conj();
            x[(1, n)] = qs.dipole_row2[n];
            x[(n, 1)] = qs.dipole_row2[n].conj();
        }
        Self::new(&qs.energies[..d], &x, c)
    }

    /// Number of levels.
    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    /// Never true for a validated system.
    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }

    fn max_spacing(&self) -> f64 {
        self.omegas.iter().fold(0.0f64, |a, &w| a.max(w.abs()))
    }

    fn hamiltonian(&self, tones: &[DriveTone], t: f64) -> Mat<C64> {
        let e: f64 = tones.iter().map(|d| d.amplitude * (d.omega * t + d.phase).cos()).sum();
        let d = self.len();
        Mat::from_fn(d, d, |i, j| {
            let diag = if i == j { self.omegas[i] } else { 0.0 };
            self.coupling[(i, j)] * e + diag
        })
    }
}

fn expm_herm(k: &Mat<C64>) -> Result<Mat<C64>> {
    let n = k.nrows();
    let evd = k.self_adjoint_eigen(Side::Lower).map_err(|_| Error::EigenNonConvergence { dim: n })?;
    let w = evd.U();
    let s = evd.S().column_vector();
    let phased = Mat::from_fn(n, n, |i, j| w[(i, j)] * C64::from_polar(1.0, -s[j].re));
    Ok(phased * w.adjoint())
}

/// Time-ordered U(t_final, 0) for the d-level system driven by field tones.
pub fn evolve_multilevel(
    system: &MultilevelSystem,
    tones: &[DriveTone],
    t_final: f64,
    step: f64,
) -> Result<Propagator> {
    for t in tones {
        t.validate()?;
    }
    check_step(step, core::iter::once(system.max_spacing()).chain(tones.iter().map(|d| d.omega.abs())))?;
    let n = step_count(t_final, step)?;
    let dt = t_final / n as f64;
    let d = system.len();
    let mut u = Mat::<C64>::identity(d, d);
    let w = C64::new(0.0, -COMMUTATOR_WEIGHT * dt * dt);
    for s in 0..n {
        let t = s as f64 * dt;
        let h1 = system.hamiltonian(tones, t + (0.5 - GAUSS_OFFSET) * dt);
        let h2 = system.hamiltonian(tones, t + (0.5 + GAUSS_OFFSET) * dt);
        let comm = &h2 * &h1 - &h1 * &h2;
        let k = Mat::from_fn(d, d, |i, j| (h1[(i, j)] + h2[(i, j)]) * (0.5 * dt) + w * comm[(i, j)]);
        u = expm_herm(&k)? * &u;
        let drift = unitarity_drift(&u);
        if drift > UNITARITY_TOL {
            return Err(Error::UnitarityDrift { drift });
        }
        unitarize(&mut u);
    }
    Ok(Propagator { u, t_final: n as f64 * dt, step: dt })
}

/// Best p/q approximation of `ratio` with q <= `max_den`, by continued fractions.
///
/// Returns the first convergent within `tol` relative error.
pub fn rationalize(ratio: f64, max_den: u64, tol: f64) -> Result<(u64, u64)> {
    if !(ratio > 0.0 && ratio.is_finite()) {
        return Err(invalid("ratio", "must be positive and finite"));
    }
    let (mut p0, mut q0, mut p1, mut q1) = (0u64, 1u64, 1u64, 0u64);
    let mut x = ratio;
    let mut best = (0u64, 1u64);
    for _ in 0..64 {
        let a = x.floor();
        if a > u64::MAX as f64 / 2.0 {
            break;
        }
        let a = a as u64;
        let (p2, q2) = (a.saturating_mul(p1).saturating_add(p0), a.saturating_mul(q1).saturating_add(q0));
        if q2 > max_den {
            break;
        }
        best = (p2, q2);
        if ((p2 as f64 / q2 as f64) / ratio - 1.0).abs() < tol {
            return Ok(best);
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        let frac = x - a as f64;
        if frac <= 0.0 {
            break;
        }
        x = 1.0 / frac;
    }
    Err(Error::Incommensurate { ratio, num: best.0, den: best.1 })
}

/// Quasi-energy shifts of one tone over an amplitude ladder.
#[derive(Clone, Debug, PartialEq)]
pub struct QuasiEnergyReport {
    /// Tone frequency after rationalization, rad/s.
    pub omega: f64,
    /// omega / omega0 = num / den.
    pub ratio: (u64, u64),
    /// Common period, s.
    pub period: f64,
    /// Dressed splitting minus omega0 at each ladder entry, rad/s.
    pub shifts: Vec<f64>,
}

fn commensurate(omega0: f64, omega: f64) -> Result<(f64, (u64, u64), f64)> {
    let (p, q) = rationalize(omega / omega0, MAX_DENOMINATOR, COMMENSURATE_TOL)?;
    let w = omega0 * p as f64 / q as f64;
    Ok((w, (p, q), 2.0 * PI * q as f64 / omega0))
}

fn wrap(phase: f64) -> f64 {
    let r = phase.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

// eigenphases of U(T) attached to the undriven levels 0 and 1
fn dressed_phases(u: &Mat<C64>) -> Result<(f64, f64)> {
    let n = u.nrows();
    let evd = u.eigen().map_err(|_| Error::EigenNonConvergence { dim: n })?;
    let vecs = evd.U();
    let vals = evd.S().column_vector();
    let pick = |level: usize| -> f64 {
        let j = (0..n).max_by(|&a, &b| vecs[(level, a)].norm().total_cmp(&vecs[(level, b)].norm())).unwrap_or(0);
        -vals[j].arg()
    };
    Ok((pick(0), pick(1)))
}

/// Dressed-splitting shift of the two-level qubit for each Rabi rate in `rabi_ladder`.
///
/// The tone is moved onto the nearest commensurate frequency and its one-period
/// propagator diagonalized.
pub fn quasi_energy_shift(
    omega0: f64,
    theta: f64,
    omega: f64,
    rabi_ladder: &[f64],
    steps_per_period: usize,
    mask: &MaskConfig,
) -> Result<QuasiEnergyReport> {
    let (w, ratio, period) = commensurate(omega0, omega)?;
    let steps_per_period = steps_per_period.max(MIN_STEPS_PER_PERIOD);
    let step = 2.0 * PI / w.max(omega0) / steps_per_period as f64;
    let mut shifts = Vec::with_capacity(rabi_ladder.len());
    for &rabi in rabi_ladder {
        let detuning = (omega0 - w).abs();
        if detuning <= mask.ratio_factor * rabi {
            return Err(Error::FmValidityViolated { detuning, rabi });
        }
        let tone = QubitTone { rabi, omega: w, phase: 0.0 };
        let prop = evolve_driven_qubit(omega0, theta, &[tone], period, step)?;
        let (p1, p2) = dressed_phases(&prop.u)?;
        shifts.push(wrap(p2 - p1 - omega0 * period) / period);
    }
    Ok(QuasiEnergyReport { omega: w, ratio, period, shifts })
}

/// Same as [`quasi_energy_shift`] for the d-level system and a ladder of field amplitudes (V/m).
pub fn multilevel_quasi_energy_shift(
    system: &MultilevelSystem,
    omega: f64,
    amplitudes: &[f64],
    steps_per_period: usize,
    mask: &MaskConfig,
) -> Result<QuasiEnergyReport> {
    if system.len() < 2 {
        return Err(Error::TooFewStates { needed: 2, available: system.len() });
    }
    let omega0 = system.omegas[1];
    let (w, ratio, period) = commensurate(omega0, omega)?;
    let steps_per_period = steps_per_period.max(MIN_STEPS_PER_PERIOD);
    let step = 2.0 * PI / w.max(system.max_spacing()) / steps_per_period as f64;
    let mut shifts = Vec::with_capacity(amplitudes.len());
    for &e in amplitudes {
        let rabi = e * system.coupling[(0, 1)].norm();
        let detuning = (omega0 - w).abs();
        if detuning <= mask.ratio_factor * rabi {
            return Err(Error::FmValidityViolated { detuning, rabi });
        }
        let prop = evolve_multilevel(system, &[DriveTone::new(e, w, 0.0)?], period, step)?;
        let (p1, p2) = dressed_phases(&prop.u)?;
        shifts.push(wrap(p2 - p1 - omega0 * period) / period);
    }
    Ok(QuasiEnergyReport { omega: w, ratio, period, shifts })
}

/// (d + |Tr(U_ideal^dagger U_actual)|^2) / (d (d + 1)) for d = 2.
pub fn average_gate_fidelity(actual: &Mat<C64>, ideal: &Mat<C64>) -> Result<f64> {
    for m in [actual, ideal] {
        if m.nrows() != 2 || m.ncols() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, found: m.nrows() });
        }
        let drift = unitarity_drift(m);
        if drift > UNITARITY_TOL {
            return Err(Error::NonUnitary { drift });
        }
    }
    let mut tr = C64::new(0.0, 0.0);
    for i in 0..2 {
        for k in 0..2 {
            tr += ideal[(k, i)].conj() * actual[(k, i)];
        }
    }
    Ok((2.0 + tr.norm_sqr()) / 6.0)
}

/// X_pi = exp(-i pi sigma_x / 2).
pub fn x_pi() -> Mat<C64> {
    let m = C64::new(0.0, -1.0);
    let z = C64::new(0.0, 0.0);
    Mat::from_fn(2, 2, |i, j| if i == j { z } else { m })
}

/// Pulse length convention for [`detuned_pi_pulse`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum PulseDuration {
    /// t = pi / Omega, calibrated for zero detuning.
    #[default]
    Nominal,
    /// t = pi / sqrt(Omega^2 + delta^2).
    Generalized,
}

/// Rotating-frame propagator of H = (delta sigma_z + Omega sigma_x) / 2.
pub fn detuned_pi_pulse(rabi: f64, delta: f64, duration: PulseDuration) -> Result<Propagator> {
    if !(rabi > 0.0 && rabi.is_finite() && delta.is_finite()) {
        return Err(invalid("rabi", "must be positive and finite"));
    }
    let t = match duration {
        PulseDuration::Nominal => PI / rabi,
        PulseDuration::Generalized => PI / rabi.hypot(delta),
    };
    let k = [
        [C64::new(0.5 * delta * t, 0.0), C64::new(0.5 * rabi * t, 0.0)],
        [C64::new(0.5 * rabi * t, 0.0), C64::new(-0.5 * delta * t, 0.0)],
    ];
    Ok(Propagator { u: m2_to_mat(&expm_herm2(&k)), t_final: t, step: t })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::CODATA;
    use crate::drive::response_function;
    use alloc::vec;
    use proptest::prelude::*;

    const W0: f64 = 1.0;

    #[test]
    fn free_evolution_is_exact() {
        let t = 37.3;
        let p = evolve_driven_qubit(W0, 0.0, &[], t, 0.1).unwrap();
        let e = C64::from_polar(1.0, 0.5 * W0 * p.t_final);
        assert!((p.u[(0, 0)] - e).norm() < 1e-8);
        assert!((p.u[(1, 1)] - e.conj()).norm() < 1e-8);
        assert!(p.u[(0, 1)].norm() < 1e-12);
    }

    #[test]
    fn step_bound_enforced() {
        assert!(evolve_driven_qubit(W0, 0.0, &[], 10.0, 0.2).is_err());
    }

    #[test]
    fn resonant_rabi_oscillation() {
        let rabi = 0.004;
        let tone = QubitTone { rabi, omega: W0, phase: 0.0 };
        let mut peak = (0.0, 0.0);
        let t_end = 1.5 * PI / rabi;
        evolve_driven_qubit_with(W0, 0.3, &[tone], t_end, 2.0 * PI / 80.0, |t, u| {
            let p = u[1][0].norm_sqr();
            if p > peak.1 {
                peak = (t, p);
            }
        })
        .unwrap();
        let t_pi = peak.0;
        let measured = PI / t_pi;
        assert!((measured / rabi - 1.0).abs() < 0.01, "{measured} vs {rabi} at {t_pi}");
    }

    #[test]
    fn fourth_order_convergence() {
        let tones = [QubitTone { rabi: 0.2, omega: 0.37, phase: 0.4 }];
        let run = |n: usize| evolve_driven_qubit(W0, 0.0, &tones, 20.0, 20.0 / n as f64).unwrap().u;
        let (a, b, c) = (run(200), run(400), run(800));
        let e1 = (&a - &c).norm_max();
        let e2 = (&b - &c).norm_max();
        let order = (e1 / e2 - 1.0).log2() + 1.0;
        assert!(order > 3.5, "order {order}");
        let (_, pb) = dressed_phases(&b).unwrap();
        let (_, pc) = dressed_phases(&c).unwrap();
        assert!(wrap(pb - pc).abs() < 1e-6);
    }

    #[test]
    fn rationalization() {
        assert_eq!(rationalize(0.3, MAX_DENOMINATOR, COMMENSURATE_TOL).unwrap(), (3, 10));
        assert_eq!(rationalize(355.0 / 113.0, MAX_DENOMINATOR, 1e-12).unwrap(), (355, 113));
        assert!(matches!(rationalize(PI, 100, 1e-12), Err(Error::Incommensurate { .. })));
    }

    // two-level second-order shift: Omega^2/2 [1/(w0 - w) + 1/(w0 + w)]
    fn two_level_prediction(rabi: f64, w: f64) -> f64 {
        0.5 * rabi * rabi * (1.0 / (W0 - w) + 1.0 / (W0 + w))
    }

    #[test]
    fn quasi_energy_matches_two_level_shift() {
        let ladder = [0.005, 0.01, 0.02];
        let r = quasi_energy_shift(W0, 0.7, 0.3, &ladder, 400, &MaskConfig::default()).unwrap();
        let mut disc = vec![];
        for (&om, &s) in ladder.iter().zip(&r.shifts) {
            let c = two_level_prediction(om, r.omega);
            assert!(s.signum() == c.signum());
            disc.push((s - c).abs());
        }
        assert!((r.shifts[0] / two_level_prediction(0.005, r.omega) - 1.0).abs() < 0.01);
        // quartering the amplitude
        let ratio = disc[2] / disc[0];
        assert!(ratio > 64.0 && ratio < 1024.0, "{ratio}");
        // E -> 0
        let z = quasi_energy_shift(W0, 0.0, 0.3, &[0.0], 400, &MaskConfig::default()).unwrap();
        assert!(z.shifts[0].abs() < 1e-10);
    }

    #[test]
    fn near_resonant_tone_rejected() {
        let r = quasi_energy_shift(W0, 0.0, 0.99, &[0.01], 100, &MaskConfig::default());
        assert!(matches!(r, Err(Error::FmValidityViolated { .. })));
    }

    // Two off-resonant tones modulate the splitting at |w1 - w2| with amplitude
    // Omega1 Omega2 w0 [1/(w0^2 - w1^2) + 1/(w0^2 - w2^2)], equal to the mean shift when Omega1 = Omega2.
    #[test]
    fn two_tone_beat_modulation() {
        use faer::linalg::solvers::Solve;
        let (r, w1, w2) = (0.01, 0.3, 0.5);
        let tones = [QubitTone { rabi: r, omega: w1, phase: 0.0 }, QubitTone { rabi: r, omega: w2, phase: 0.0 }];
        let wb = w2 - w1;
        let s = 0.5f64.sqrt();
        let mut rows = vec![];
        let (mut last, mut turns) = (0.0, 0.0);
        evolve_driven_qubit_with(W0, 0.0, &tones, 100.0 * 2.0 * PI / wb, 2.0 * PI / 100.0, |t, u| {
            let c1 = (u[0][0] + u[0][1]) * s;
            let c2 = (u[1][0] + u[1][1]) * s;
            let ph = ((c1 * c2.conj()).arg() - W0 * t).rem_euclid(2.0 * PI);
            if ph - last > PI {
                turns -= 2.0 * PI;
            } else if ph - last < -PI {
                turns += 2.0 * PI;
            }
            last = ph;
            rows.push((t, ph + turns));
        })
        .unwrap();
        let basis = |t: f64| [1.0, t, (wb * t).sin(), (wb * t).cos()];
        let mut ata = Mat::<f64>::zeros(4, 4);
        let mut atb = Mat::<f64>::zeros(4, 1);
        for &(t, y) in &rows {
            let f = basis(t);
            for i in 0..4 {
                atb[(i, 0)] += f[i] * y;
                for j in 0..4 {
                    ata[(i, j)] += f[i] * f[j];
                }
            }
        }
        let x = ata.partial_piv_lu().solve(&atb);
        let mean = r * r * W0 * (1.0 / (W0 * W0 - w1 * w1) + 1.0 / (W0 * W0 - w2 * w2));
        let modulation = x[(2, 0)].hypot(x[(3, 0)]) * wb;
        assert!((x[(1, 0)] / mean - 1.0).abs() < 0.01);
        assert!((modulation / mean - 1.0).abs() < 0.02, "{modulation} vs {mean}");
    }

    #[test]
    fn multilevel_reduces_to_two_level() {
        let dx = C64::from_polar(2.0e-3, 0.4);
        let qs = QubitSubspace::from_parts(
            vec![0.0, 0.012, 0.4],
            vec![C64::new(0.0, 0.0), dx, C64::new(0.0, 0.0)],
            vec![dx.conj(), C64::new(0.0, 0.0), C64::new(0.0, 0.0)],
            &CODATA,
        )
        .unwrap();
        let sys = MultilevelSystem::from_subspace(&qs, 2, &CODATA).unwrap();
        let w = 0.3 * qs.omega0;
        let r = multilevel_quasi_energy_shift(&sys, w, &[2.0e4], 200, &MaskConfig::default()).unwrap();
        let c = response_function(&qs, r.omega).unwrap();
        let pert = (c.c_ac1 + c.c_bs) * 4.0e8;
        assert!((r.shifts[0] / pert - 1.0).abs() < 1e-3, "{} vs {pert}", r.shifts[0]);
    }

    #[test]
    fn multilevel_captures_higher_levels() {
        let qs = QubitSubspace::from_parts(
            vec![0.0, 0.012, 0.1, 0.13],
            vec![C64::new(0.0, 0.0), C64::new(1e-3, 0.0), C64::new(5.0, 0.0), C64::new(0.0, 1.0)],
            vec![C64::new(1e-3, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 2.0), C64::new(4.0, 0.0)],
            &CODATA,
        )
        .unwrap();
        let sys = MultilevelSystem::from_subspace(&qs, 4, &CODATA).unwrap();
        let w = 0.3 * qs.omega0;
        let e = 5.0e2;
        let r = multilevel_quasi_energy_shift(&sys, w, &[e], 80, &MaskConfig::default()).unwrap();
        let c = response_function(&qs, r.omega).unwrap();
        let pert = c.total() * e * e;
        assert!((r.shifts[0] / pert - 1.0).abs() < 0.02, "{} vs {pert}", r.shifts[0]);
    }

    #[test]
    fn fidelity_anchors() {
        let x = x_pi();
        assert!((average_gate_fidelity(&x, &x).unwrap() - 1.0).abs() < 1e-15);
        let id = Mat::<C64>::identity(2, 2);
        assert!((average_gate_fidelity(&id, &x).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        let p = detuned_pi_pulse(1.0, 0.0, PulseDuration::Nominal).unwrap();
        assert!((average_gate_fidelity(&p.u, &x).unwrap() - 1.0).abs() < 1e-14);
        let bad = Mat::from_fn(2, 2, |i, j| if i == j { C64::new(1.1, 0.0) } else { C64::new(0.0, 0.0) });
        assert!(matches!(average_gate_fidelity(&bad, &x), Err(Error::NonUnitary { .. })));
    }

    #[test]
    fn infidelity_is_quadratic_in_detuning() {
        let x = x_pi();
        let pts: Vec<(f64, f64)> = [0.005, 0.01, 0.02, 0.04]
            .iter()
            .map(|&r| {
                (
                    r,
                    1.0 - average_gate_fidelity(&detuned_pi_pulse(1.0, r, PulseDuration::Nominal).unwrap().u, &x)
                        .unwrap(),
                )
            })
            .collect();
        let n = pts.len() as f64;
        let (lx, ly): (Vec<f64>, Vec<f64>) = pts.iter().map(|&(r, i)| (r.ln(), i.ln())).unzip();
        let mx = lx.iter().sum::<f64>() / n;
        let my = ly.iter().sum::<f64>() / n;
        let slope = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
            / lx.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
        assert!((slope - 2.0).abs() < 0.1, "{slope}");
    }

    fn random_unitary(a: f64, b: f64, c: f64, d: f64) -> Mat<C64> {
        let k = [[C64::new(a, 0.0), C64::new(b, c)], [C64::new(b, -c), C64::new(d, 0.0)]];
        m2_to_mat(&expm_herm2(&k))
    }

    proptest! {
        #[test]
        fn fidelity_bounds(a in -4.0..4.0f64, b in -4.0..4.0f64, c in -4.0..4.0f64, d in -4.0..4.0f64,
                           e in -4.0..4.0f64, f in -4.0..4.0f64, g in -4.0..4.0f64, h in -4.0..4.0f64) {
            let u = random_unitary(a, b, c, d);
            let v = random_unitary(e, f, g, h);
            let fid = average_gate_fidelity(&u, &v).unwrap();
            prop_assert!((1.0 / 3.0 - 1e-12..=1.0 + 1e-12).contains(&fid));
        }

        #[test]
        fn propagators_stay_unitary(rabi in 0.0..0.5f64, w in 0.1..3.0f64, phase in 0.0..core::f64::consts::TAU) {
            let tones = [QubitTone { rabi, omega: w, phase }];
            let p = evolve_driven_qubit(W0, 0.2, &tones, 15.0, 2.0 * PI / w.max(W0) / 50.0).unwrap();
            prop_assert!(unitarity_drift(&p.u) <= UNITARITY_TOL);
        }
    }
}
