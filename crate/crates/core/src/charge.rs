//! Single screened charge defect and the residual detuning it leaves behind.

use alloc::vec;
use alloc::vec::Vec;

use faer::Mat;

use crate::basis::BasisSpec;
use crate::constants::PhysicalConstants;
use crate::drive::{rabi_rate, second_order_shift, DriveTone};
use crate::error::{invalid, Error, Result};
use crate::mask::{validity_mask, MaskConfig};
use crate::quadrature::{gauss_hermite, gauss_legendre_on, GaussRule};
use crate::spectrum::QubitSubspace;
use crate::C64;

/// Point charge with Thomas-Fermi screening.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DefectConfig {
    /// Position relative to the dot center, nm.
    pub position: [f64; 3],
    /// +1 or -1 elementary charges.
    pub charge_sign: f64,
    /// Screening length lambda, nm; `f64::INFINITY` gives bare Coulomb.
    pub screening_length: f64,
    /// Relative permittivity.
    pub epsilon_r: f64,
    /// Permit a defect inside the well.
    pub allow_inside: bool,
}

impl DefectConfig {
    /// 30 nm lateral offset along x, 5 nm below a well of width `well_width`.
    pub fn below_well(well_width: f64) -> Self {
        DefectConfig {
            position: [30.0, 0.0, -0.5 * well_width - 5.0],
            charge_sign: 1.0,
            screening_length: 5.0,
            epsilon_r: 15.36,
            allow_inside: false,
        }
    }

    /// Checks the invariants against a well of width `well_width`.
    pub fn validate(&self, well_width: f64) -> Result<()> {
        if !(self.screening_length > 0.0) {
            return Err(invalid("defect.screening_length", "must be positive"));
        }
        if !(self.epsilon_r > 0.0 && self.epsilon_r.is_finite()) {
            return Err(invalid("defect.epsilon_r", "must be positive"));
        }
        if self.charge_sign != 1.0 && self.charge_sign != -1.0 {
            return Err(invalid("defect.charge_sign", "must be +1 or -1"));
        }
        if self.position.iter().any(|v| !v.is_finite()) {
            return Err(invalid("defect.position", "must be finite"));
        }
        if !self.allow_inside && self.position[2].abs() < 0.5 * well_width {
            return Err(invalid("defect.position", "defect lies inside the well"));
        }
        Ok(())
    }
}

impl Default for DefectConfig {
    fn default() -> Self {
        DefectConfig::below_well(15.0)
    }
}

/// Screened Coulomb energy of the hole at `r` (nm), meV.
pub fn tf_potential(r: [f64; 3], defect: &DefectConfig, c: &PhysicalConstants) -> Result<f64> {
    let d = ((r[0] - defect.position[0]).powi(2)
        + (r[1] - defect.position[1]).powi(2)
        + (r[2] - defect.position[2]).powi(2))
    .sqrt();
    if d < 1e-12 {
        return Err(Error::SingularPoint);
    }
    Ok(defect.charge_sign * c.coulomb_constant() / (defect.epsilon_r * d) * (-d / defect.screening_length).exp())
}

/// Expectation values of the defect potential in the qubit states.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChargeShift {
    /// <1|V|1>, meV.
    pub v11: f64,
    /// <2|V|2>, meV.
    pub v22: f64,
    /// (<2|V|2> - <1|V|1>) / hbar, rad/s.
    pub delta_omega_c: f64,
    /// (xy, z) quadrature orders of the accepted result.
    pub order: (usize, usize),
    /// Relative change of delta_omega_c at the last doubling.
    pub last_change: f64,
}

/// Accepted relative change between successive quadrature orders.
pub const QUADRATURE_TOL: f64 = 0.01;

const ORDER_LADDER: [(usize, usize); 6] = [(32, 16), (64, 32), (128, 48), (256, 64), (512, 96), (1024, 128)];

/// Hermite functions times exp(u^2/2) at every node, levels 0..n.
fn hermite_table(rule: &GaussRule, n: usize) -> Vec<Vec<f64>> {
    let c0 = core::f64::consts::PI.powf(-0.25);
    rule.nodes
        .iter()
        .map(|&u| {
            let mut row = vec![0.0; n];
            row[0] = c0;
            if n > 1 {
                row[1] = 2.0f64.sqrt() * u * c0;
            }
            for k in 1..n.saturating_sub(1) {
                let kf = k as f64;
                row[k + 1] = (2.0 / (kf + 1.0)).sqrt() * u * row[k] - (kf / (kf + 1.0)).sqrt() * row[k - 1];
            }
            row
        })
        .collect()
}

fn well_table(rule: &GaussRule, n: usize, width: f64) -> Vec<Vec<f64>> {
    let norm = (2.0 / width).sqrt();
    rule.nodes
        .iter()
        .map(|&z| (1..=n).map(|p| norm * (p as f64 * core::f64::consts::PI * (z / width + 0.5)).sin()).collect())
        .collect()
}

/// Drops nodes whose weight cannot matter for functions bounded by the table rows.
fn significant(rule: &GaussRule, table: &[Vec<f64>]) -> Vec<usize> {
    let peak = rule
        .weights
        .iter()
        .zip(table)
        .map(|(w, row)| w * row.iter().fold(0.0f64, |a, v| a.max(v * v)))
        .fold(0.0f64, f64::max);
    (0..rule.len())
        .filter(|&i| rule.weights[i] * table[i].iter().fold(0.0f64, |a, v| a.max(v * v)) > 1e-18 * peak)
        .collect()
}

/// Integrates sum_s |psi_m|^2 g(r) for the given state columns on one tensor rule.
///
/// `g` must be smooth over the dot; returns one value per column.
pub fn density_integrals(
    states: &Mat<C64>,
    columns: &[usize],
    basis: &BasisSpec,
    order: (usize, usize),
    g: &dyn Fn([f64; 3]) -> f64,
) -> Result<Vec<f64>> {
    if states.nrows() != basis.dim() {
        return Err(Error::DimensionMismatch { expected: basis.dim(), found: states.nrows() });
    }
    let gx = gauss_hermite(order.0)?;
    let gy = gx.clone();
    let half = 0.5 * basis.well_width;
    let gz = gauss_legendre_on(order.1, -half, half)?;
    let tx = hermite_table(&gx, basis.nx);
    let ty = hermite_table(&gy, basis.ny);
    let tz = well_table(&gz, basis.nz, basis.well_width);
    let ix = significant(&gx, &tx);
    let iy = significant(&gy, &ty);
    let (nx, ny, nz) = (basis.nx, basis.ny, basis.nz);
    let qz = gz.len();

    let mut out = Vec::with_capacity(columns.len());
    for &col in columns {
        // t1[((a*ny + b)*qz + k)*4 + s] = sum_p c[a,b,p,s] chi_p(z_k)
        let mut t1 = vec![C64::new(0.0, 0.0); nx * ny * qz * 4];
        for a in 0..nx {
            for b in 0..ny {
                for p in 0..nz {
                    for s in 0..4 {
                        let c = states[(((a * ny + b) * nz + p) * 4 + s, col)];
                        if c == C64::new(0.0, 0.0) {
                            continue;
                        }
                        for k in 0..qz {
                            t1[((a * ny + b) * qz + k) * 4 + s] += c * tz[k][p];
                        }
                    }
                }
            }
        }
        // t2[((a*|iy| + j)*qz + k)*4 + s] = sum_b t1 h_b(y_j)
        let njy = iy.len();
        let mut t2 = vec![C64::new(0.0, 0.0); nx * njy * qz * 4];
        for a in 0..nx {
            for (jj, &j) in iy.iter().enumerate() {
                for b in 0..ny {
                    let h = ty[j][b];
                    let src = &t1[((a * ny + b) * qz) * 4..((a * ny + b + 1) * qz) * 4];
                    let dst = &mut t2[((a * njy + jj) * qz) * 4..((a * njy + jj + 1) * qz) * 4];
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d += s * h;
                    }
                }
            }
        }
        let mut total = 0.0;
        let mut amp = vec![C64::new(0.0, 0.0); qz * 4];
        for &i in &ix {
            let x = basis.lx * gx.nodes[i];
            for (jj, &j) in iy.iter().enumerate() {
                let y = basis.ly * gy.nodes[j];
                amp.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
                for a in 0..nx {
                    let h = tx[i][a];
                    let src = &t2[((a * njy + jj) * qz) * 4..((a * njy + jj + 1) * qz) * 4];
                    for (d, s) in amp.iter_mut().zip(src) {
                        *d += s * h;
                    }
                }
                let wxy = gx.weights[i] * gy.weights[j];
                for k in 0..qz {
                    let rho: f64 = amp[k * 4..k * 4 + 4].iter().map(|v| v.norm_sqr()).sum();
                    total += wxy * gz.weights[k] * rho * g([x, y, gz.nodes[k]]);
                }
            }
        }
        out.push(total);
    }
    Ok(out)
}

/// delta omega_c from the two lowest columns of `states`, raising the quadrature order until stable.
pub fn charge_shift(
    states: &Mat<C64>,
    basis: &BasisSpec,
    defect: &DefectConfig,
    c: &PhysicalConstants,
) -> Result<ChargeShift> {
    defect.validate(basis.well_width)?;
    if states.ncols() < 2 {
        return Err(Error::TooFewStates { needed: 2, available: states.ncols() });
    }
    let v = |r: [f64; 3]| tf_potential(r, defect, c).unwrap_or(0.0);
    let hbar = c.hbar_mev_s();
    let mut prev: Option<ChargeShift> = None;
    let mut last_change = f64::INFINITY;
    for &order in ORDER_LADDER.iter() {
        let e = density_integrals(states, &[0, 1], basis, order, &v)?;
        let cur = ChargeShift { v11: e[0], v22: e[1], delta_omega_c: (e[1] - e[0]) / hbar, order, last_change };
        if let Some(p) = prev {
            let scale = cur.delta_omega_c.abs().max(1e-300);
            last_change = (cur.delta_omega_c - p.delta_omega_c).abs() / scale;
            if last_change < QUADRATURE_TOL {
                return Ok(ChargeShift { last_change, ..cur });
            }
        }
        prev = Some(cur);
    }
    Err(Error::QuadratureNotConverged { last_change })
}

/// How the auxiliary amplitude is chosen at each omega2.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum E2Policy {
    /// E2 = E1.
    EqualToE1,
    /// Fixed amplitude, V/m.
    Fixed(f64),
    /// E2 = E1 / sqrt(-R0(omega2)) where R0 < 0; points with R0 >= 0 are skipped.
    Cancelling,
}

/// One omega2 sample of a residual scan.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResidualPoint {
    /// Auxiliary frequency, rad/s.
    pub omega2: f64,
    /// Auxiliary amplitude used, V/m.
    pub e2: f64,
    /// Drive-induced shift of both tones, rad/s.
    pub delta_omega2: f64,
    /// delta_omega_c + delta_omega2, rad/s.
    pub residual: f64,
    /// Excluded by the validity mask or a pole guard.
    pub masked: bool,
}

/// Outcome of a residual scan.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualReport {
    /// Charge-induced shift, rad/s.
    pub delta_omega_c: f64,
    /// Drive-induced shift at the optimum, rad/s.
    pub delta_omega2: f64,
    /// delta_omega_c + delta_omega2 at the optimum, rad/s.
    pub delta_omega_res: f64,
    /// Minimizing auxiliary frequency, rad/s.
    pub omega2_star: f64,
    /// Single-tone residual delta_omega_c + delta_omega2(omega1 = omega0, E2 = 0), rad/s.
    pub baseline_mono: f64,
    /// |baseline_mono| / |delta_omega_res|.
    pub reduction: f64,
    /// Every scan sample in ascending omega2.
    pub scan: Vec<ResidualPoint>,
}

/// Residual of the resonant primary plus one auxiliary tone.
pub fn residual_detuning(qs: &QubitSubspace, delta_omega_c: f64, tones: &[DriveTone]) -> Result<ResidualPoint> {
    let s = second_order_shift(qs, tones)?;
    let (omega2, e2) = tones.get(1).map(|t| (t.omega, t.amplitude)).unwrap_or((0.0, 0.0));
    Ok(ResidualPoint {
        omega2,
        e2,
        delta_omega2: s.delta_omega2,
        residual: delta_omega_c + s.delta_omega2,
        masked: false,
    })
}

/// Monochromatic reference: primary at omega0 only.
pub fn baseline_residual(qs: &QubitSubspace, delta_omega_c: f64, e1: f64) -> Result<f64> {
    let primary = DriveTone::new(e1, qs.omega0, 0.0)?;
    Ok(residual_detuning(qs, delta_omega_c, &[primary])?.residual)
}

fn sample(
    qs: &QubitSubspace,
    delta_omega_c: f64,
    e1: f64,
    policy: E2Policy,
    omega2: f64,
    mask: &MaskConfig,
) -> ResidualPoint {
    let masked = ResidualPoint { omega2, e2: 0.0, delta_omega2: f64::NAN, residual: f64::NAN, masked: true };
    let Ok(primary) = DriveTone::new(e1, qs.omega0, 0.0) else { return masked };
    let e2 = match policy {
        E2Policy::EqualToE1 => e1,
        E2Policy::Fixed(v) => v,
        E2Policy::Cancelling => match crate::cancel::ratio_r0(qs, qs.omega0, omega2)
            .and_then(|r0| crate::cancel::solve_cancellation_amplitude(r0, e1))
        {
            Ok(sol) => sol.e2,
            Err(_) => return masked,
        },
    };
    let Ok(aux) = DriveTone::new(e2, omega2, 0.0) else { return masked };
    let m = validity_mask(qs.omega0, omega2, qs.omega0, rabi_rate(qs, &primary), rabi_rate(qs, &aux), mask);
    if !m.admits_auxiliary() {
        return masked;
    }
    match residual_detuning(qs, delta_omega_c, &[primary, aux]) {
        Ok(p) => p,
        Err(_) => masked,
    }
}

/// Largest auxiliary angular frequency accepted by the residual scan, rad/s.
pub const MAX_AUX_OMEGA: f64 = 2.0 * core::f64::consts::PI * 8.0e9;

/// Dense scan of |delta_omega_res|(omega2) over `band`, refined by golden-section search.
#[allow(clippy::too_many_arguments)]
pub fn minimize_residual(
    qs: &QubitSubspace,
    delta_omega_c: f64,
    e1: f64,
    policy: E2Policy,
    band: (f64, f64),
    points: usize,
    mask: &MaskConfig,
) -> Result<ResidualReport> {
    let (lo, hi) = band;
    if !(lo > 0.0 && hi > lo) {
        return Err(invalid("band", "need 0 < lo < hi"));
    }
    if hi > MAX_AUX_OMEGA * (1.0 + 1e-12) {
        return Err(invalid("band", "upper edge exceeds 2 pi x 8 GHz"));
    }
    if points < 3 {
        return Err(invalid("points", "need at least 3 scan points"));
    }
    let baseline_mono = baseline_residual(qs, delta_omega_c, e1)?;
    let step = (hi - lo) / (points - 1) as f64;
    let scan: Vec<ResidualPoint> =
        (0..points).map(|i| sample(qs, delta_omega_c, e1, policy, lo + step * i as f64, mask)).collect();
    let best = scan
        .iter()
        .enumerate()
        .filter(|(_, p)| !p.masked)
        .min_by(|a, b| a.1.residual.abs().total_cmp(&b.1.residual.abs()))
        .map(|(i, _)| i)
        .ok_or(Error::EmptyBandAfterMask)?;
    let mut star = scan[best];
    let left = best.checked_sub(1).map(|i| scan[i]).filter(|p| !p.masked);
    let right = scan.get(best + 1).copied().filter(|p| !p.masked);
    if let (Some(l), Some(r)) = (left, right) {
        let f = |w: f64| {
            let p = sample(qs, delta_omega_c, e1, policy, w, mask);
            if p.masked {
                f64::INFINITY
            } else {
                p.residual.abs()
            }
        };
        let w = golden_section(f, l.omega2, r.omega2, 1e-10 * qs.omega0);
        let p = sample(qs, delta_omega_c, e1, policy, w, mask);
        if !p.masked && p.residual.abs() <= star.residual.abs() {
            star = p;
        }
    }
    let reduction = baseline_mono.abs() / star.residual.abs().max(f64::MIN_POSITIVE);
    Ok(ResidualReport {
        delta_omega_c,
        delta_omega2: star.delta_omega2,
        delta_omega_res: star.residual,
        omega2_star: star.omega2,
        baseline_mono,
        reduction,
        scan,
    })
}

/// Minimizes a unimodal `f` on [a, b] to absolute tolerance `tol`.
pub fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = 0.5 * (5.0f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}
