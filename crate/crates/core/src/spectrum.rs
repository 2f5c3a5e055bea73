//! Exact diagonalization and the qubit subspace.

use alloc::vec::Vec;

use faer::{Mat, Side};

use crate::algebra::oscillator_operators;
use crate::basis::{Axis, BasisSpec};
use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::hamiltonian::WorkingPoint;
use crate::operator::{lift_to_product, HermitianOperator};
use crate::C64;

/// Residual bound relative to the spectral norm.
pub const RESIDUAL_TOL: f64 = 1e-9;
/// Orthonormality bound on the eigenvectors.
pub const OVERLAP_TOL: f64 = 1e-10;
/// Required (E3 - E2) / (E2 - E1) for a usable qubit doublet.
pub const MIN_GAP_RATIO: f64 = 10.0;

/// Lowest eigenpairs of a Hermitian operator, ascending.
#[derive(Clone, Debug)]
pub struct Spectrum {
    /// Eigenvalues, meV.
    pub energies: Vec<f64>,
    /// Eigenvectors as columns (dim x k).
    pub states: Mat<C64>,
    /// Spectral norm max |E| of the full operator, meV.
    pub norm: f64,
    /// Largest residual ||H v - E v|| seen during verification.
    pub max_residual: f64,
}

impl Spectrum {
    /// Number of eigenpairs kept.
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    /// True when no pairs are kept.
    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    /// Copy with every eigenvector multiplied by exp(i phase_n).
    pub fn with_phases(&self, phases: &[f64]) -> Spectrum {
        let mut out = self.clone();
        for (n, &p) in phases.iter().enumerate().take(self.len()) {
            let f = C64::from_polar(1.0, p);
            for i in 0..out.states.nrows() {
                out.states[(i, n)] *= f;
            }
        }
        out
    }

    /// Copy with eigenvectors `a` and `b` replaced by a unitary rotation within their span.
    ///
    /// Only meaningful for a degenerate pair.
    pub fn with_pair_rotation(&self, a: usize, b: usize, angle: f64, phase: f64) -> Spectrum {
        let mut out = self.clone();
        let (c, s) = (angle.cos(), angle.sin());
        let e = C64::from_polar(1.0, phase);
        for i in 0..out.states.nrows() {
            let va = self.states[(i, a)];
            let vb = self.states[(i, b)];
            out.states[(i, a)] = va * c + vb * e * s;
            out.states[(i, b)] = -va * e.conj() * s + vb * c;
        }
        out
    }
}

/// Lowest `k` eigenpairs of `h`, with residual and orthonormality verification.
pub fn diagonalize(h: &HermitianOperator, k: usize) -> Result<Spectrum> {
    let dim = h.dim();
    if k == 0 || k > dim {
        return Err(crate::error::invalid("k", alloc::format!("need 1 <= k <= {dim}, got {k}")));
    }
    let evd = h.matrix().self_adjoint_eigen(Side::Lower).map_err(|_| Error::EigenNonConvergence { dim })?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let all: Vec<f64> = (0..dim).map(|i| s[i].re).collect();
    let norm = all.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    let energies: Vec<f64> = all[..k].to_vec();
    let states = u.subcols(0, k).to_owned();

    let hv = h.matrix() * &states;
    let mut max_residual = 0.0f64;
    for n in 0..k {
        let mut r2 = 0.0;
        for i in 0..dim {
            r2 += (hv[(i, n)] - states[(i, n)] * energies[n]).norm_sqr();
        }
        let r = r2.sqrt();
        max_residual = max_residual.max(r);
        let bound = RESIDUAL_TOL * norm.max(f64::MIN_POSITIVE);
        if r > bound {
            return Err(Error::ResidualTooLarge { index: n, residual: r, bound });
        }
    }
    let gram = states.adjoint() * &states;
    for j in 0..k {
        for i in 0..k {
            let expect = if i == j { 1.0 } else { 0.0 };
            let d = (gram[(i, j)] - C64::new(expect, 0.0)).norm();
            if d > OVERLAP_TOL {
                return Err(Error::ResidualTooLarge { index: i.max(j), residual: d, bound: OVERLAP_TOL });
            }
        }
    }
    Ok(Spectrum { energies, states, norm, max_residual })
}

/// Qubit doublet, Larmor frequency and the dipole rows needed by the drive response.
#[derive(Clone, Debug, PartialEq)]
pub struct QubitSubspace {
    /// All kept levels, ascending, meV; index 0 is |1>, index 1 is |2>.
    pub energies: Vec<f64>,
    /// Larmor frequency (E2 - E1) / hbar, rad/s.
    pub omega0: f64,
    /// x_{1n} = <1|x|n>, nm.
    pub dipole_row1: Vec<C64>,
    /// x_{2n} = <2|x|n>, nm.
    pub dipole_row2: Vec<C64>,
    /// arg(x_12), rad.
    pub theta12: f64,
    /// E3 - E2, meV.
    pub gap3: f64,
    /// hbar in meV s, carried so the drive layer converts without extra arguments.
    pub hbar_mev_s: f64,
    /// Energy (meV) of unit charge moved 1 nm in 1 V/m.
    pub field_energy_factor: f64,
}

impl QubitSubspace {
    /// Builds a subspace from explicit levels and dipole rows (used for synthetic level sets).
    pub fn from_parts(
        energies: Vec<f64>,
        dipole_row1: Vec<C64>,
        dipole_row2: Vec<C64>,
        c: &PhysicalConstants,
    ) -> Result<Self> {
        let n = energies.len();
        if n < 3 {
            return Err(Error::TooFewStates { needed: 3, available: n });
        }
        if dipole_row1.len() != n || dipole_row2.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: dipole_row1.len().min(dipole_row2.len()) });
        }
        let omega0 = c.energy_to_angular(energies[1] - energies[0]);
        let x12 = dipole_row1[1];
        Ok(QubitSubspace {
            omega0,
            theta12: x12.arg(),
            gap3: energies[2] - energies[1],
            energies,
            dipole_row1,
            dipole_row2,
            hbar_mev_s: c.hbar_mev_s(),
            field_energy_factor: c.field_energy_factor(),
        })
    }

    /// Number of levels.
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    /// Always false: a subspace holds at least three levels.
    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    /// E_1, meV.
    pub fn e1(&self) -> f64 {
        self.energies[0]
    }

    /// E_2, meV.
    pub fn e2(&self) -> f64 {
        self.energies[1]
    }

    /// x_12, nm.
    pub fn x12(&self) -> C64 {
        self.dipole_row1[1]
    }

    /// (E3 - E2) / (E2 - E1); infinite at a Kramers point.
    pub fn gap_ratio(&self) -> f64 {
        let split = self.e2() - self.e1();
        if split <= 0.0 {
            f64::INFINITY
        } else {
            self.gap3 / split
        }
    }

    /// Keeps only the lowest `d` levels (for truncated sums and d-level oracles).
    pub fn truncated(&self, d: usize) -> QubitSubspace {
        let d = d.min(self.len()).max(3);
        QubitSubspace {
            energies: self.energies[..d].to_vec(),
            dipole_row1: self.dipole_row1[..d].to_vec(),
            dipole_row2: self.dipole_row2[..d].to_vec(),
            ..self.clone()
        }
    }

    /// Same subspace with every dipole multiplied by `factor`.
    pub fn with_scaled_dipoles(&self, factor: f64) -> QubitSubspace {
        QubitSubspace {
            dipole_row1: self.dipole_row1.iter().map(|x| x * factor).collect(),
            dipole_row2: self.dipole_row2.iter().map(|x| x * factor).collect(),
            ..self.clone()
        }
    }
}

/// x lifted to the full product basis.
pub fn position_x(basis: &BasisSpec) -> Result<HermitianOperator> {
    let ops = oscillator_operators(basis.nx, basis.lx)?;
    lift_to_product(&ops.r, Axis::X, basis)
}

/// Extracts energies, Larmor frequency and the dipole rows <1|x|n>, <2|x|n>.
pub fn extract_qubit_subspace(
    spectrum: &Spectrum,
    x_op: &HermitianOperator,
    c: &PhysicalConstants,
) -> Result<QubitSubspace> {
    let k = spectrum.len();
    if k < 3 {
        return Err(Error::TooFewStates { needed: 3, available: k });
    }
    if x_op.dim() != spectrum.states.nrows() {
        return Err(Error::DimensionMismatch { expected: spectrum.states.nrows(), found: x_op.dim() });
    }
    let v = &spectrum.states;
    let low = v.subcols(0, 2).to_owned();
    // w_m = X v_m ; x_{mn} = <m|X|n> = conj((V^dagger w_m)_n)
    let w = x_op.matrix() * &low;
    let proj = v.adjoint() * &w;
    let row = |m: usize| -> Vec<C64> { (0..k).map(|n| proj[(n, m)].conj()).collect() };
    let qs = QubitSubspace::from_parts(spectrum.energies.clone(), row(0), row(1), c)?;
    let ratio = qs.gap_ratio();
    if ratio <= MIN_GAP_RATIO {
        return Err(Error::GapTooSmall { ratio, required: MIN_GAP_RATIO });
    }
    Ok(qs)
}

/// Assembles, diagonalizes and extracts the qubit subspace for a working point.
pub fn solve_working_point(wp: &WorkingPoint, c: &PhysicalConstants) -> Result<(Spectrum, QubitSubspace)> {
    let h = wp.hamiltonian(c)?;
    let spectrum = diagonalize(&h, h.dim())?;
    let x = position_x(&wp.basis)?;
    let qs = extract_qubit_subspace(&spectrum, &x, c)?;
    Ok((spectrum, qs))
}

/// One rung of a basis-convergence ladder.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    /// Basis used.
    pub basis: BasisSpec,
    /// Larmor frequency, rad/s.
    pub omega0: f64,
    /// |x_12|, nm.
    pub x12_abs: f64,
    /// E3 - E2, meV.
    pub gap3: f64,
    /// |omega0 / omega0_previous - 1|, `None` on the first rung.
    pub rel_change: Option<f64>,
}

/// Outcome of a convergence ladder.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    /// One row per rung, in ladder order.
    pub rows: Vec<ConvergenceRow>,
    /// Last relative change below the threshold.
    pub converged: bool,
    /// Successive changes failed to decrease somewhere along the ladder.
    pub non_monotone: bool,
    /// Threshold used.
    pub threshold: f64,
}

/// Relative omega0 drift accepted as converged.
pub const CONVERGENCE_THRESHOLD: f64 = 1e-3;

/// Solves the working point on each basis of a monotone ladder.
pub fn convergence_scan(
    wp: &WorkingPoint,
    ladder: &[(usize, usize, usize)],
    c: &PhysicalConstants,
) -> Result<ConvergenceReport> {
    for w in ladder.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b.0 < a.0 || b.1 < a.1 || b.2 < a.2 {
            return Err(crate::error::invalid("ladder", "basis sizes must be non-decreasing"));
        }
    }
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(ladder.len());
    for &(nx, ny, nz) in ladder {
        let mut point = *wp;
        point.basis.nx = nx;
        point.basis.ny = ny;
        point.basis.nz = nz;
        let (_, qs) = solve_working_point(&point, c)?;
        let rel_change = rows.last().map(|prev| (qs.omega0 / prev.omega0 - 1.0).abs());
        rows.push(ConvergenceRow {
            basis: point.basis,
            omega0: qs.omega0,
            x12_abs: qs.x12().norm(),
            gap3: qs.gap3,
            rel_change,
        });
    }
    let changes: Vec<f64> = rows.iter().filter_map(|r| r.rel_change).collect();
    let converged = changes.last().is_some_and(|&d| d < CONVERGENCE_THRESHOLD);
    let non_monotone = changes.windows(2).any(|w| w[1] > w[0]);
    Ok(ConvergenceReport { rows, converged, non_monotone, threshold: CONVERGENCE_THRESHOLD })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::CODATA;
    use crate::hamiltonian::{assemble_total, assemble_zeeman, DotGeometry, FieldConfig, MaterialParams};
    use crate::operator::Unit;

    fn tiny_basis() -> BasisSpec {
        BasisSpec { nx: 4, ny: 4, nz: 2, lx: 50.0, ly: 50.0, well_width: 15.0 }
    }

    #[test]
    fn zeeman_only_spectrum_is_closed_form() {
        let b = BasisSpec { nx: 4, ny: 4, nz: 2, ..tiny_basis() };
        let m = MaterialParams { q: 0.0, ..Default::default() };
        let h = assemble_zeeman(&m, &FieldConfig { b: [0.0, 0.0, 1.0] }, &b, &CODATA);
        let s = diagonalize(&h, h.dim()).unwrap();
        let mu = CODATA.mu_b_mev_per_t() * m.kappa;
        let per = b.orbital_dim();
        let expect = [-3.0 * mu, -mu, mu, 3.0 * mu];
        for (block, e) in expect.iter().enumerate() {
            for i in 0..per {
                assert!((s.energies[block * per + i] - e).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn separable_limit_reproduces_ladders() {
        let b = BasisSpec { nx: 5, ny: 5, nz: 3, lx: 40.0, ly: 40.0, well_width: 15.0 };
        let m =
            MaterialParams { gamma2: 0.0, gamma3: 0.0, eps_xx: 0.0, eps_yy: 0.0, eps_zz: 0.0, ..Default::default() };
        let g = DotGeometry { a_x: 40.0, a_y: 40.0, well_width: 15.0, e_gate: 0.0 };
        let h = assemble_total(&m, &g, &FieldConfig { b: [0.0; 3] }, &b, &CODATA).unwrap();
        let s = diagonalize(&h, 12).unwrap();
        let pre = CODATA.kinetic_prefactor() * m.gamma1;
        let hw = 2.0 * pre / (40.0f64 * 40.0);
        let ez1 = pre * (core::f64::consts::PI / 15.0).powi(2);
        // ground level: 4-fold (spin) at hw + ez1; next: 8-fold at 2 hw + ez1
        for i in 0..4 {
            assert!((s.energies[i] - (hw + ez1)).abs() < 1e-10);
        }
        for i in 4..12 {
            assert!((s.energies[i] - (2.0 * hw + ez1)).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_bad_k() {
        let h = HermitianOperator::identity(4, Unit::ENERGY);
        assert!(diagonalize(&h, 0).is_err());
        assert!(diagonalize(&h, 5).is_err());
    }

    #[test]
    fn subspace_from_parts_validates() {
        let e = alloc::vec![0.0, 0.01, 1.0];
        let x = alloc::vec![C64::new(0.0, 0.0); 3];
        assert!(QubitSubspace::from_parts(e.clone(), x.clone(), x.clone(), &CODATA).is_ok());
        assert!(QubitSubspace::from_parts(e[..2].to_vec(), x[..2].to_vec(), x[..2].to_vec(), &CODATA).is_err());
        assert!(QubitSubspace::from_parts(e, x[..2].to_vec(), x, &CODATA).is_err());
    }

    #[test]
    fn dipole_rows_are_hermitian_consistent() {
        let mut wp = WorkingPoint::default();
        wp.basis = wp.geometry.basis(4, 4, 2);
        let (spec, qs) = solve_working_point(&wp, &CODATA).unwrap();
        // x_21 from row 2 must equal conj(x_12) from row 1
        assert!((qs.dipole_row2[0] - qs.dipole_row1[1].conj()).norm() < 1e-12);
        assert!(qs.omega0 > 0.0);
        assert_eq!(qs.len(), spec.len());
        assert!(spec.max_residual <= RESIDUAL_TOL * spec.norm);
    }

    #[test]
    fn non_monotone_ladder_rejected() {
        let wp = WorkingPoint::default();
        assert!(convergence_scan(&wp, &[(5, 5, 3), (4, 5, 3)], &CODATA).is_err());
    }
}
