//! Grid sweeps and single-shot reports built on a cached working point.

use rayon::prelude::*;
use serde::Serialize;

use hhqubit_core::cancel::{find_cancellation_frequencies, ratio_r0};
use hhqubit_core::charge::{charge_shift, minimize_residual, ChargeShift, DefectConfig, E2Policy, ResidualReport};
use hhqubit_core::constants::{angular_to_ghz, ghz_to_angular, mhz_to_angular, CODATA};
use hhqubit_core::contour::{zero_contour, Segment};
use hhqubit_core::drive::{pole_frequencies, rabi_rate, response_function, second_order_shift, DriveTone};
use hhqubit_core::dynamics::{
    average_gate_fidelity, detuned_pi_pulse, multilevel_quasi_energy_shift, quasi_energy_shift, x_pi, MultilevelSystem,
    PulseDuration,
};
use hhqubit_core::mask::{in_fast_edsr_band, validity_mask, MaskConfig};
use hhqubit_core::spectrum::{convergence_scan, ConvergenceReport, CONVERGENCE_THRESHOLD};
use hhqubit_core::{QubitSubspace, Result};

use crate::cache::{SolveCache, Solved};
use crate::config::{E2Choice, RunSpec};
use crate::output::ConvergenceStamp;

/// `spectrum` report.
#[derive(Clone, Debug, Serialize, PartialEq)]
#[allow(non_snake_case)]
pub struct SpectrumReport {
    /// Larmor frequency / 2 pi, GHz.
    pub omega0_GHz: f64,
    /// Lowest levels, meV.
    pub E_levels_meV: Vec<f64>,
    /// |x_12|, nm.
    pub x12_nm: f64,
    /// arg x_12, rad.
    pub x12_phase_rad: f64,
    /// E3 - E2, meV.
    pub gap3_meV: f64,
    /// (E3 - E2) / (E2 - E1).
    pub gap_ratio: f64,
    /// nx, ny, nz and the full dimension.
    pub basis: [usize; 4],
    /// Working-point hash, hex.
    pub params_hash: String,
}

/// Levels listed in the spectrum report.
pub const REPORTED_LEVELS: usize = 24;

/// Summary of a solved working point.
pub fn spectrum_report(s: &Solved) -> SpectrumReport {
    let q = &s.qubit;
    let b = &s.working_point.basis;
    SpectrumReport {
        omega0_GHz: angular_to_ghz(q.omega0),
        E_levels_meV: q.energies.iter().take(REPORTED_LEVELS).copied().collect(),
        x12_nm: q.x12().norm(),
        x12_phase_rad: q.theta12,
        gap3_meV: q.gap3,
        gap_ratio: q.gap_ratio(),
        basis: [b.nx, b.ny, b.nz, b.dim()],
        params_hash: format!("{:016x}", s.working_point.params_hash()),
    }
}

/// omega0 drift against the basis two levels smaller on every axis.
pub fn convergence_stamp(spec: &RunSpec, cache: &SolveCache) -> Result<Option<ConvergenceStamp>> {
    let (nx, ny, nz) = spec.basis;
    let reference = ((nx.saturating_sub(2)).max(4), (ny.saturating_sub(2)).max(4), (nz.saturating_sub(2)).max(2));
    if reference == spec.basis {
        return Ok(None);
    }
    let full = cache.solve(&spec.working_point())?;
    let mut wp = spec.working_point();
    wp.basis.nx = reference.0;
    wp.basis.ny = reference.1;
    wp.basis.nz = reference.2;
    let small = cache.solve(&wp)?;
    let drift = (full.qubit.omega0 / small.qubit.omega0 - 1.0).abs();
    Ok(Some(ConvergenceStamp {
        basis: [nx, ny, nz],
        reference_basis: [reference.0, reference.1, reference.2],
        relative_drift: drift,
        converged: drift < CONVERGENCE_THRESHOLD,
    }))
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
}

/// Flags of one heatmap cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HeatCell {
    /// delta omega^(2), rad/s; `None` inside a pole guard band.
    pub value: Option<f64>,
    /// On a multiphoton or combination line.
    pub multiphoton: bool,
    /// Auxiliary detuned beyond the Autler-Townes bound.
    pub autler_townes_ok: bool,
    /// Both tones satisfy the Floquet-Magnus bound.
    pub fm_valid: bool,
    /// Primary inside the fast-EDSR band.
    pub fast_edsr: bool,
}

/// delta omega^(2) on an (omega1, omega2) grid.
#[derive(Clone, Debug, PartialEq)]
pub struct HeatmapGrid {
    /// Larmor frequency, rad/s.
    pub omega0: f64,
    /// omega1 axis, rad/s.
    pub omega1: Vec<f64>,
    /// omega2 axis, rad/s.
    pub omega2: Vec<f64>,
    /// Cell (i1, i2) at index i2 * omega1.len() + i1.
    pub cells: Vec<HeatCell>,
    /// delta omega^(2) = 0 over cells free of multiphoton lines and poles.
    pub contour: Vec<Segment>,
}

/// Evaluates the two-tone shift with E1, E2 from the spec.
pub fn heatmap(spec: &RunSpec, qs: &QubitSubspace) -> Result<HeatmapGrid> {
    let w0 = qs.omega0;
    let (n1, n2) = spec.heatmap_points;
    let omega1 = linspace(spec.heatmap_omega1.0 * w0, spec.heatmap_omega1.1 * w0, n1);
    let omega2 = linspace(spec.heatmap_omega2.0 * w0, spec.heatmap_omega2.1 * w0, n2);
    let cells: Vec<HeatCell> = (0..n1 * n2)
        .into_par_iter()
        .map(|k| -> Result<HeatCell> {
            let (w1, w2) = (omega1[k % n1], omega2[k / n1]);
            let t1 = DriveTone::new(spec.e1, w1, 0.0)?;
            let t2 = DriveTone::new(spec.e2, w2, 0.0)?;
            let (r1, r2) = (rabi_rate(qs, &t1), rabi_rate(qs, &t2));
            let m = validity_mask(w1, w2, w0, r1, r2, &spec.mask);
            Ok(HeatCell {
                value: second_order_shift(qs, &[t1, t2]).ok().map(|s| s.delta_omega2),
                multiphoton: m.multiphoton_excluded,
                autler_townes_ok: m.autler_townes_ok,
                fm_valid: m.fm_valid,
                fast_edsr: in_fast_edsr_band(w1, w0, r1, &spec.mask),
            })
        })
        .collect::<Result<_>>()?;
    let masked: Vec<Option<f64>> = cells.iter().map(|c| if c.multiphoton { None } else { c.value }).collect();
    let contour = zero_contour(&omega1, &omega2, &masked)?;
    Ok(HeatmapGrid { omega0: w0, omega1, omega2, cells, contour })
}

/// One omega2 sample of an R0 curve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct R0Row {
    /// Auxiliary frequency, rad/s.
    pub omega2: f64,
    /// R0 ignoring the validity mask; `None` inside a pole guard band.
    pub raw: Option<f64>,
    /// On a multiphoton line.
    pub multiphoton: bool,
    /// Outside the Autler-Townes window.
    pub autler_townes_ok: bool,
}

impl R0Row {
    /// R0 where the mask admits the point.
    pub fn r0(&self) -> Option<f64> {
        if self.multiphoton {
            None
        } else {
            self.raw
        }
    }
}

/// R0 against omega2 at one gate field.
#[derive(Clone, Debug, PartialEq)]
pub struct R0Curve {
    /// Gate field, V/m.
    pub e_gate: f64,
    /// Larmor frequency, rad/s.
    pub omega0: f64,
    /// Samples, ascending omega2.
    pub rows: Vec<R0Row>,
    /// Zero crossings of the raw curve (linear interpolation), rad/s.
    pub raw_sign_changes: Vec<f64>,
    /// Crossings between unmasked neighbours only, rad/s.
    pub unmasked_sign_changes: Vec<f64>,
    /// First unmasked omega2 with R0 < 0, rad/s.
    pub threshold: Option<f64>,
}

fn crossings(rows: &[R0Row], poles: &[f64], value: impl Fn(&R0Row) -> Option<f64>) -> Vec<f64> {
    let mut out = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for r in rows {
        let Some(v) = value(r) else {
            prev = None;
            continue;
        };
        if let Some((w, p)) = prev {
            let through_pole = poles.iter().any(|&q| q >= w && q <= r.omega2);
            if (p < 0.0) != (v < 0.0) && !through_pole {
                out.push(w + (r.omega2 - w) * p / (p - v));
            }
        }
        prev = Some((r.omega2, v));
    }
    out
}

/// Uniform grid over the configured band merged with a dense window around omega0.
pub fn r0_curve(spec: &RunSpec, qs: &QubitSubspace, e_gate: f64) -> Result<R0Curve> {
    let w0 = qs.omega0;
    let mut grid = linspace(spec.r0_omega2.0 * w0, spec.r0_omega2.1 * w0, spec.r0_points);
    if spec.r0_refine_points > 1 && spec.r0_refine_width > 0.0 {
        let lo = (1.0 - spec.r0_refine_width).max(spec.r0_omega2.0) * w0;
        let hi = (1.0 + spec.r0_refine_width).min(spec.r0_omega2.1) * w0;
        if hi > lo {
            grid.extend(linspace(lo, hi, spec.r0_refine_points));
        }
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());
    let primary = DriveTone::new(spec.e1, w0, 0.0)?;
    let r1 = rabi_rate(qs, &primary);
    let rows: Vec<R0Row> = grid
        .par_iter()
        .map(|&w2| -> Result<R0Row> {
            let aux = DriveTone::new(spec.e2, w2, 0.0)?;
            let m = validity_mask(w0, w2, w0, r1, rabi_rate(qs, &aux), &spec.mask);
            Ok(R0Row {
                omega2: w2,
                raw: ratio_r0(qs, w0, w2).ok(),
                multiphoton: m.multiphoton_excluded,
                autler_townes_ok: m.autler_townes_ok,
            })
        })
        .collect::<Result<_>>()?;
    let poles = pole_frequencies(qs);
    let raw_sign_changes = crossings(&rows, &poles, |r| r.raw);
    let unmasked_sign_changes = crossings(&rows, &poles, |r| r.r0().filter(|_| r.autler_townes_ok));
    let threshold = rows.iter().find(|r| r.autler_townes_ok && r.r0().is_some_and(|v| v < 0.0)).map(|r| r.omega2);
    Ok(R0Curve { e_gate, omega0: w0, rows, raw_sign_changes, unmasked_sign_changes, threshold })
}

/// R0 curves at every configured gate field, one diagonalization each.
pub fn r0_sweep(spec: &RunSpec, cache: &SolveCache) -> Result<Vec<R0Curve>> {
    spec.r0_gates
        .par_iter()
        .map(|&g| {
            let s = cache.solve(&spec.working_point_at(g))?;
            r0_curve(spec, &s.qubit, g)
        })
        .collect()
}

/// Charge shift plus the residual scan.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualOutcome {
    /// Defect used.
    pub defect: DefectConfig,
    /// Quadrature result.
    pub charge: ChargeShift,
    /// Scan and optimum.
    pub report: ResidualReport,
}

/// Residual detuning against omega2 with the primary on resonance.
pub fn residual_sweep(spec: &RunSpec, s: &Solved, defect: &DefectConfig) -> Result<ResidualOutcome> {
    let charge = charge_shift(&s.spectrum.states, &s.working_point.basis, defect, &CODATA)?;
    let policy = match spec.residual_e2 {
        E2Choice::Equal => E2Policy::EqualToE1,
        E2Choice::Cancelling => E2Policy::Cancelling,
        E2Choice::Fixed(v) => E2Policy::Fixed(v),
    };
    let band = (ghz_to_angular(spec.residual_band_ghz.0), ghz_to_angular(spec.residual_band_ghz.1));
    let report =
        minimize_residual(&s.qubit, charge.delta_omega_c, spec.e1, policy, band, spec.residual_points, &spec.mask)?;
    Ok(ResidualOutcome { defect: *defect, charge, report })
}

/// `cancel-solve` report.
#[derive(Clone, Debug, Serialize, PartialEq)]
#[allow(non_snake_case)]
pub struct CancelReport {
    /// Roots / 2 pi, GHz.
    pub roots_GHz: Vec<f64>,
    /// R0 at each root.
    pub R0_at_roots: Vec<f64>,
    /// E1 / sqrt(-R0) at each root, V/m.
    pub E2_required: Vec<f64>,
    /// delta omega^(2) / 2 pi left at each root, MHz.
    pub residual_MHz: Vec<f64>,
    /// Primary amplitude, V/m.
    pub E1: f64,
    /// Auxiliary amplitude searched with, V/m.
    pub E2: f64,
    /// Mask thresholds, or null when the search ran unmasked.
    pub mask_config: Option<crate::output::MaskMeta>,
}

/// Roots of the two-tone shift in the configured band.
pub fn cancel_solve(spec: &RunSpec, qs: &QubitSubspace) -> Result<CancelReport> {
    let w0 = qs.omega0;
    let band = (spec.cancel_band.0 * w0, spec.cancel_band.1 * w0);
    let mask = spec.cancel_use_mask.then_some(&spec.mask);
    let roots = find_cancellation_frequencies(qs, spec.e1, spec.e2, band, spec.cancel_points, mask)?;
    Ok(CancelReport {
        roots_GHz: roots.iter().map(|r| angular_to_ghz(r.omega2)).collect(),
        R0_at_roots: roots.iter().map(|r| r.r0).collect(),
        E2_required: roots.iter().map(|r| if r.r0 < 0.0 { spec.e1 / (-r.r0).sqrt() } else { f64::NAN }).collect(),
        residual_MHz: roots.iter().map(|r| r.residual / mhz_to_angular(1.0)).collect(),
        E1: spec.e1,
        E2: spec.e2,
        mask_config: mask.map(crate::output::MaskMeta::from),
    })
}

/// `oracle-check` report; shifts in rad/s.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct OracleReport {
    /// Levels evolved (2 = qubit reduction).
    pub levels: usize,
    /// Tone frequency after rationalization / 2 pi, GHz.
    #[serde(rename = "omega_GHz")]
    pub omega_ghz: f64,
    /// Field amplitudes, V/m.
    pub amplitudes: Vec<f64>,
    /// Dressed-splitting shifts from time evolution, rad/s.
    pub shift_exact: Vec<f64>,
    /// C E^2 over the same levels, rad/s.
    pub shift_perturbative: Vec<f64>,
    /// shift_exact / shift_perturbative.
    pub ratio: Vec<f64>,
    /// Slope of log |exact - perturbative| against log E.
    pub scaling_exponent: f64,
    /// X_pi fidelity at Omega/2pi = 10 MHz, delta/2pi = 0.3 MHz, t = pi/Omega.
    pub fidelity_anchor: f64,
}

/// Least-squares slope of ln y against ln x.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Anchor fidelity of a detuned pi pulse.
pub fn fidelity_anchor() -> Result<f64> {
    let p = detuned_pi_pulse(mhz_to_angular(10.0), mhz_to_angular(0.3), PulseDuration::Nominal)?;
    average_gate_fidelity(&p.u, &x_pi())
}

/// Time-evolution check of the perturbative shift for one off-resonant tone.
pub fn oracle_check(spec: &RunSpec, s: &Solved) -> Result<OracleReport> {
    let qs = &s.qubit;
    let w = spec.oracle_omega * qs.omega0;
    let amps = &spec.oracle_amplitudes;
    let (report, levels_qs) = if spec.oracle_levels <= 2 {
        let rabi: Vec<f64> =
            amps.iter().map(|&e| DriveTone::new(e, w, 0.0).map(|t| rabi_rate(qs, &t))).collect::<Result<_>>()?;
        (quasi_energy_shift(qs.omega0, qs.theta12, w, &rabi, spec.oracle_steps, &MaskConfig::default())?, None)
    } else {
        let sys = MultilevelSystem::from_subspace(qs, spec.oracle_levels, &CODATA)?;
        let r = multilevel_quasi_energy_shift(&sys, w, amps, spec.oracle_steps, &MaskConfig::default())?;
        (r, Some(qs.truncated(spec.oracle_levels)))
    };
    let c = match &levels_qs {
        None => {
            let t = response_function(qs, report.omega)?;
            t.c_ac1 + t.c_bs
        }
        Some(t) => response_function(t, report.omega)?.total(),
    };
    let pert: Vec<f64> = amps.iter().map(|e| c * e * e).collect();
    let ratio: Vec<f64> = report.shifts.iter().zip(&pert).map(|(a, b)| a / b).collect();
    let disc: Vec<f64> = report.shifts.iter().zip(&pert).map(|(a, b)| (a - b).abs()).collect();
    let scaling_exponent = if amps.len() >= 2 { log_log_slope(amps, &disc) } else { f64::NAN };
    Ok(OracleReport {
        levels: spec.oracle_levels,
        omega_ghz: angular_to_ghz(report.omega),
        amplitudes: amps.clone(),
        shift_exact: report.shifts,
        shift_perturbative: pert,
        ratio,
        scaling_exponent,
        fidelity_anchor: fidelity_anchor()?,
    })
}

/// Convergence ladder at the configured working point.
pub fn converge(spec: &RunSpec) -> Result<ConvergenceReport> {
    convergence_scan(&spec.working_point(), &spec.converge_ladder, &CODATA)
}
