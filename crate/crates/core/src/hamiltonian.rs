//! Luttinger-Kohn, Bir-Pikus, confinement and Zeeman terms on the product basis.
//!
//! The magnetic field enters through k -> K = k + e A / hbar with
//! A = -r x B / 2. Every K_i is a real linear combination of one-slot
//! position and wave-vector operators, so products of two K's expand into
//! sums of tensor products. Products that land on the same slot are replaced
//! by the closed-form symmetrized quadratic forms from [`crate::algebra`].

use alloc::vec::Vec;

use faer::Mat;

use crate::algebra::{oscillator_operators, spin_matrices, well_operators, SlotOperators, SpinMatrices};
use crate::basis::{Axis, BasisSpec};
use crate::constants::PhysicalConstants;
use crate::error::{invalid, Error, Result};
use crate::operator::{hermiticity_defect, kron4_accumulate, lift_to_product, HermitianOperator, Unit};
use crate::C64;

/// Luttinger, deformation-potential and Zeeman constants plus the biaxial strain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaterialParams {
    /// Luttinger gamma_1.
    pub gamma1: f64,
    /// Luttinger gamma_2.
    pub gamma2: f64,
    /// Luttinger gamma_3.
    pub gamma3: f64,
    /// Isotropic Zeeman constant.
    pub kappa: f64,
    /// Cubic Zeeman constant.
    pub q: f64,
    /// Hydrostatic deformation potential, eV.
    pub a_v: f64,
    /// Shear deformation potential, eV.
    pub b_v: f64,
    /// Strain component xx.
    pub eps_xx: f64,
    /// Strain component yy.
    pub eps_yy: f64,
    /// Strain component zz.
    pub eps_zz: f64,
}

impl Default for MaterialParams {
    /// Ge on a Si_0.25 Ge_0.75 buffer.
    #[allow(clippy::approx_constant)]
    fn default() -> Self {
        MaterialParams {
            gamma1: 13.14,
            gamma2: 4.59,
            gamma3: 5.13,
            kappa: 3.14,
            q: 0.07,
            a_v: 2.0,
            b_v: -2.3,
            eps_xx: -0.006,
            eps_yy: -0.006,
            eps_zz: 0.0042,
        }
    }
}

impl MaterialParams {
    /// (gamma_3 + gamma_2) / 2.
    pub fn gamma_bar(&self) -> f64 {
        (self.gamma3 + self.gamma2) / 2.0
    }

    /// (gamma_3 - gamma_2) / 2.
    pub fn delta(&self) -> f64 {
        (self.gamma3 - self.gamma2) / 2.0
    }

    /// Hydrostatic strain energy P = -a_v tr(eps), meV.
    pub fn strain_p(&self) -> f64 {
        -self.a_v * (self.eps_xx + self.eps_yy + self.eps_zz) * 1e3
    }

    /// Biaxial strain energy Q = -b_v (eps_xx + eps_yy - 2 eps_zz) / 2, meV.
    pub fn strain_q(&self) -> f64 {
        -self.b_v * (self.eps_xx + self.eps_yy - 2.0 * self.eps_zz) / 2.0 * 1e3
    }

    /// In-plane heavy-hole mass m0 / (gamma_1 + gamma_2), in units of m0.
    pub fn in_plane_mass(&self) -> f64 {
        1.0 / (self.gamma1 + self.gamma2)
    }

    /// Checks that the in-plane mass is positive and every value finite.
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.gamma1,
            self.gamma2,
            self.gamma3,
            self.kappa,
            self.q,
            self.a_v,
            self.b_v,
            self.eps_xx,
            self.eps_yy,
            self.eps_zz,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(invalid("material", "all parameters must be finite"));
        }
        if self.gamma1 + self.gamma2 <= 0.0 {
            return Err(invalid("material.gamma1", "gamma1 + gamma2 must be positive"));
        }
        Ok(())
    }
}

/// Dot size, well width and the static gate field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DotGeometry {
    /// In-plane dot size along x, nm.
    pub a_x: f64,
    /// In-plane dot size along y, nm.
    pub a_y: f64,
    /// Well width, nm.
    pub well_width: f64,
    /// Perpendicular gate field, V/m.
    pub e_gate: f64,
}

impl Default for DotGeometry {
    fn default() -> Self {
        DotGeometry { a_x: 50.0, a_y: 50.0, well_width: 15.0, e_gate: 1e7 }
    }
}

impl DotGeometry {
    /// Checks positivity of every length and the field.
    pub fn validate(&self) -> Result<()> {
        for (name, v) in
            [("geometry.a_x", self.a_x), ("geometry.a_y", self.a_y), ("geometry.well_width", self.well_width)]
        {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, alloc::format!("must be positive, got {v}")));
            }
        }
        if !(self.e_gate >= 0.0 && self.e_gate.is_finite()) {
            return Err(invalid("geometry.e_gate", alloc::format!("must be non-negative, got {}", self.e_gate)));
        }
        Ok(())
    }

    /// Basis whose oscillator lengths equal the dot sizes (omega_0,i = hbar / (m_HP a_i^2)).
    pub fn basis(&self, nx: usize, ny: usize, nz: usize) -> BasisSpec {
        BasisSpec { nx, ny, nz, lx: self.a_x, ly: self.a_y, well_width: self.well_width }
    }
}

/// Static magnetic field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldConfig {
    /// Field vector, T.
    pub b: [f64; 3],
}

/// Sanity bound on |B|, T.
pub const MAX_FIELD_T: f64 = 10.0;

impl Default for FieldConfig {
    fn default() -> Self {
        FieldConfig { b: [1.0, 0.0, 0.0] }
    }
}

impl FieldConfig {
    /// Field along x.
    pub fn along_x(bx: f64) -> Self {
        FieldConfig { b: [bx, 0.0, 0.0] }
    }

    /// The reversed field -B.
    pub fn reversed(&self) -> Self {
        FieldConfig { b: [-self.b[0], -self.b[1], -self.b[2]] }
    }

    /// |B|, T.
    pub fn magnitude(&self) -> f64 {
        (self.b[0] * self.b[0] + self.b[1] * self.b[1] + self.b[2] * self.b[2]).sqrt()
    }

    /// Checks the |B| bound.
    pub fn validate(&self) -> Result<()> {
        let m = self.magnitude();
        if !m.is_finite() || m > MAX_FIELD_T {
            return Err(invalid("field.b", alloc::format!("|B| = {m} T exceeds {MAX_FIELD_T} T")));
        }
        Ok(())
    }
}

/// Everything that determines H_total.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WorkingPoint {
    /// Material constants.
    pub material: MaterialParams,
    /// Dot and gate.
    pub geometry: DotGeometry,
    /// Magnetic field.
    pub field: FieldConfig,
    /// Truncated basis.
    pub basis: BasisSpec,
}

impl Default for WorkingPoint {
    fn default() -> Self {
        let geometry = DotGeometry::default();
        WorkingPoint {
            material: MaterialParams::default(),
            geometry,
            field: FieldConfig::default(),
            basis: geometry.basis(8, 8, 10),
        }
    }
}

impl WorkingPoint {
    /// Validates every component.
    pub fn validate(&self) -> Result<()> {
        self.material.validate()?;
        self.geometry.validate()?;
        self.field.validate()?;
        self.basis.validate()
    }

    /// Stable 64-bit FNV-1a hash over the bit patterns of every parameter.
    pub fn params_hash(&self) -> u64 {
        let m = &self.material;
        let g = &self.geometry;
        let b = &self.basis;
        let floats = [
            m.gamma1,
            m.gamma2,
            m.gamma3,
            m.kappa,
            m.q,
            m.a_v,
            m.b_v,
            m.eps_xx,
            m.eps_yy,
            m.eps_zz,
            g.a_x,
            g.a_y,
            g.well_width,
            g.e_gate,
            self.field.b[0],
            self.field.b[1],
            self.field.b[2],
            b.lx,
            b.ly,
            b.well_width,
        ];
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |bytes: [u8; 8]| {
            for byte in bytes {
                h ^= byte as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        for f in floats {
            eat(f.to_bits().to_le_bytes());
        }
        for n in [b.nx, b.ny, b.nz] {
            eat((n as u64).to_le_bytes());
        }
        h
    }

    /// Assembles H_total for this working point.
    pub fn hamiltonian(&self, c: &PhysicalConstants) -> Result<HermitianOperator> {
        self.validate()?;
        assemble_total(&self.material, &self.geometry, &self.field, &self.basis, c)
    }
}

/// Position (`R`) or wave vector (`K`) along one axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quadrature {
    /// r_i.
    R,
    /// k_i.
    K,
}

/// Real linear combination of one-slot operators, e.g. K_y = k_y - (e B_x / 2 hbar) z.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearForm {
    /// (slot, operator, coefficient); coefficients of R terms are in nm^-2.
    pub terms: Vec<(Axis, Quadrature, f64)>,
}

/// Operator placed on one slot of a product term.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Factor {
    /// Identity.
    Id,
    /// r.
    R,
    /// k.
    K,
    /// r^2.
    R2,
    /// k^2.
    K2,
    /// (r k + k r) / 2.
    RK,
}

/// coeff * F_x (x) F_y (x) F_z on the orbital space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProductTerm {
    /// Real coefficient.
    pub coeff: f64,
    /// Factors on the x, y and z slots.
    pub factors: [Factor; 3],
}

fn slot_index(a: Axis) -> usize {
    match a {
        Axis::X => 0,
        Axis::Y => 1,
        Axis::Z => 2,
        Axis::Spin => unreachable!("orbital forms never act on spin"),
    }
}

/// Linear forms of the kinetic wave vectors K_x, K_y, K_z in the gauge A = -r x B / 2.
pub fn wavevector_forms(field: &FieldConfig, c: &PhysicalConstants) -> [LinearForm; 3] {
    let h = 0.5 * c.charge_over_hbar();
    let [bx, by, bz] = field.b;
    let axes = [Axis::X, Axis::Y, Axis::Z];
    // (e/hbar) A = (e/2hbar) (B_y z - B_z y, B_z x - B_x z, B_x y - B_y x)
    let vector_potential: [[(Axis, f64); 2]; 3] = [
        [(Axis::Z, h * by), (Axis::Y, -h * bz)],
        [(Axis::X, h * bz), (Axis::Z, -h * bx)],
        [(Axis::Y, h * bx), (Axis::X, -h * by)],
    ];
    core::array::from_fn(|i| {
        let mut terms = alloc::vec![(axes[i], Quadrature::K, 1.0)];
        for &(axis, coeff) in &vector_potential[i] {
            if coeff != 0.0 {
                terms.push((axis, Quadrature::R, coeff));
            }
        }
        LinearForm { terms }
    })
}

/// {P, Q} / 2 expanded into product terms, same-slot pairs symmetrized.
pub fn symmetric_form_product(p: &LinearForm, q: &LinearForm) -> Vec<ProductTerm> {
    let mut out: Vec<ProductTerm> = Vec::new();
    for &(sa, ka, ca) in &p.terms {
        for &(sb, kb, cb) in &q.terms {
            let mut factors = [Factor::Id; 3];
            let (ia, ib) = (slot_index(sa), slot_index(sb));
            if ia == ib {
                factors[ia] = match (ka, kb) {
                    (Quadrature::R, Quadrature::R) => Factor::R2,
                    (Quadrature::K, Quadrature::K) => Factor::K2,
                    _ => Factor::RK,
                };
            } else {
                let single = |k| if k == Quadrature::R { Factor::R } else { Factor::K };
                factors[ia] = single(ka);
                factors[ib] = single(kb);
            }
            let coeff = ca * cb;
            match out.iter_mut().find(|t| t.factors == factors) {
                Some(t) => t.coeff += coeff,
                None => out.push(ProductTerm { coeff, factors }),
            }
        }
    }
    out.retain(|t| t.coeff != 0.0);
    out
}

/// One-slot matrices for the three orbital directions.
pub struct OrbitalOperators {
    /// x slot.
    pub x: SlotOperators,
    /// y slot.
    pub y: SlotOperators,
    /// z slot.
    pub z: SlotOperators,
}

impl OrbitalOperators {
    /// Builds the slot matrices for `basis`.
    pub fn new(basis: &BasisSpec) -> Result<Self> {
        basis.validate()?;
        Ok(OrbitalOperators {
            x: oscillator_operators(basis.nx, basis.lx)?,
            y: oscillator_operators(basis.ny, basis.ly)?,
            z: well_operators(basis.nz, basis.well_width)?,
        })
    }

    fn slot(&self, i: usize) -> &SlotOperators {
        [&self.x, &self.y, &self.z][i]
    }

    fn factor_matrix(&self, i: usize, f: Factor) -> Mat<C64> {
        let s = self.slot(i);
        match f {
            Factor::Id => identity(s.r.dim()),
            Factor::R => s.r.matrix().clone(),
            Factor::K => s.k.matrix().clone(),
            Factor::R2 => s.r2.matrix().clone(),
            Factor::K2 => s.k2.matrix().clone(),
            Factor::RK => s.rk_sym.matrix().clone(),
        }
    }
}

fn identity(n: usize) -> Mat<C64> {
    Mat::from_fn(n, n, |i, j| if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
}

fn accumulate_terms(
    out: &mut Mat<C64>,
    basis: &BasisSpec,
    ops: &OrbitalOperators,
    terms: &[ProductTerm],
    scale: f64,
    spin: &Mat<C64>,
) {
    for t in terms {
        let fx = ops.factor_matrix(0, t.factors[0]);
        let fy = ops.factor_matrix(1, t.factors[1]);
        let fz = ops.factor_matrix(2, t.factors[2]);
        kron4_accumulate(out, basis, C64::new(scale * t.coeff, 0.0), &fx, &fy, &fz, spin);
    }
}

/// K_x, K_y, K_z lifted to the full product space.
pub fn kinetic_wavevectors(
    field: &FieldConfig,
    basis: &BasisSpec,
    c: &PhysicalConstants,
) -> Result<[HermitianOperator; 3]> {
    field.validate()?;
    let ops = OrbitalOperators::new(basis)?;
    let forms = wavevector_forms(field, c);
    let mut out: [Option<HermitianOperator>; 3] = [None, None, None];
    for (i, form) in forms.iter().enumerate() {
        let mut acc = HermitianOperator::zeros(basis.dim(), Unit::INVERSE_LENGTH);
        for &(axis, kind, coeff) in &form.terms {
            let s = ops.slot(slot_index(axis));
            let one = if kind == Quadrature::R { &s.r } else { &s.k };
            let lifted = lift_to_product(one, axis, basis)?.scale(coeff, Unit::INVERSE_LENGTH);
            acc = &acc + &lifted;
        }
        out[i] = Some(acc);
    }
    Ok(out.map(|o| o.expect("filled above")))
}

const CYCLIC_PAIRS: [(usize, usize); 3] = [(0, 1), (1, 2), (2, 0)];

/// Four-band Luttinger-Kohn Hamiltonian with the Peierls substitution, meV.
pub fn assemble_luttinger_kohn(
    params: &MaterialParams,
    field: &FieldConfig,
    basis: &BasisSpec,
    c: &PhysicalConstants,
) -> Result<HermitianOperator> {
    let ops = OrbitalOperators::new(basis)?;
    let forms = wavevector_forms(field, c);
    let spin = spin_matrices();
    let pre = c.kinetic_prefactor();
    let dim = basis.dim();
    let mut h = Mat::<C64>::zeros(dim, dim);
    let eye4 = identity(4);

    for (i, form) in forms.iter().enumerate() {
        let k2 = symmetric_form_product(form, form);
        let ji2 = spin.anticommutator_half(i, i);
        accumulate_terms(&mut h, basis, &ops, &k2, pre * (params.gamma1 + 2.5 * params.gamma2), &eye4);
        accumulate_terms(&mut h, basis, &ops, &k2, -2.0 * pre * params.gamma2, &ji2);
    }
    for &(i, j) in &CYCLIC_PAIRS {
        let kij = symmetric_form_product(&forms[i], &forms[j]);
        let jij = spin.anticommutator_half(i, j);
        accumulate_terms(&mut h, basis, &ops, &kij, -4.0 * pre * params.gamma3, &jij);
    }
    checked(h, Unit::ENERGY)
}

/// Biaxial-strain Bir-Pikus term: P+Q on heavy holes, P-Q on light holes, meV.
pub fn assemble_bir_pikus(params: &MaterialParams, basis: &BasisSpec) -> HermitianOperator {
    let (p, q) = (params.strain_p(), params.strain_q());
    let mut spin = Mat::<C64>::zeros(4, 4);
    for (i, s) in crate::basis::SpinComponent::ALL.iter().enumerate() {
        spin[(i, i)] = C64::new(if s.is_heavy() { p + q } else { p - q }, 0.0);
    }
    orbital_identity_times(&spin, basis)
}

fn orbital_identity_times(spin: &Mat<C64>, basis: &BasisSpec) -> HermitianOperator {
    let dim = basis.dim();
    let mut h = Mat::<C64>::zeros(dim, dim);
    for block in 0..basis.orbital_dim() {
        for a in 0..4 {
            for b in 0..4 {
                h[(4 * block + a, 4 * block + b)] = spin[(a, b)];
            }
        }
    }
    HermitianOperator::from_trusted(h, Unit::ENERGY)
}

/// Parabolic in-plane confinement plus the uniform gate field, spin-diagonal, meV.
pub fn assemble_confinement(
    params: &MaterialParams,
    geometry: &DotGeometry,
    basis: &BasisSpec,
    c: &PhysicalConstants,
) -> Result<HermitianOperator> {
    geometry.validate()?;
    let ops = OrbitalOperators::new(basis)?;
    // (m_HP / 2) omega_i^2 r_i^2 with omega_i = hbar / (m_HP a_i^2)
    let stiffness = c.kinetic_prefactor() * (params.gamma1 + params.gamma2);
    let terms = [
        ProductTerm { coeff: stiffness / geometry.a_x.powi(4), factors: [Factor::R2, Factor::Id, Factor::Id] },
        ProductTerm { coeff: stiffness / geometry.a_y.powi(4), factors: [Factor::Id, Factor::R2, Factor::Id] },
        ProductTerm { coeff: c.field_energy_factor() * geometry.e_gate, factors: [Factor::Id, Factor::Id, Factor::R] },
    ];
    let mut h = Mat::<C64>::zeros(basis.dim(), basis.dim());
    accumulate_terms(&mut h, basis, &ops, &terms, 1.0, &identity(4));
    checked(h, Unit::ENERGY)
}

/// 2 mu_B (kappa J + q J^3) . B, meV.
pub fn assemble_zeeman(
    params: &MaterialParams,
    field: &FieldConfig,
    basis: &BasisSpec,
    c: &PhysicalConstants,
) -> HermitianOperator {
    let spin = zeeman_spin_matrix(params, field, c, &spin_matrices());
    orbital_identity_times(&spin, basis)
}

/// 4x4 spin part of the Zeeman term, meV.
pub fn zeeman_spin_matrix(
    params: &MaterialParams,
    field: &FieldConfig,
    c: &PhysicalConstants,
    s: &SpinMatrices,
) -> Mat<C64> {
    let mu = 2.0 * c.mu_b_mev_per_t();
    let cubes = [&s.jx3, &s.jy3, &s.jz3];
    Mat::from_fn(4, 4, |a, b| {
        (0..3).map(|i| (s.j(i)[(a, b)] * params.kappa + cubes[i][(a, b)] * params.q) * (mu * field.b[i])).sum()
    })
}

fn checked(h: Mat<C64>, unit: Unit) -> Result<HermitianOperator> {
    let d = hermiticity_defect(&h);
    if !d.is_ok() {
        return Err(Error::NotHermitian { row: d.row, col: d.col, deviation: d.deviation, scale: d.scale });
    }
    Ok(HermitianOperator::from_trusted(h, unit))
}

/// H_total = H_LK + H_BP + H_conf + H_Zeeman, meV.
pub fn assemble_total(
    params: &MaterialParams,
    geometry: &DotGeometry,
    field: &FieldConfig,
    basis: &BasisSpec,
    c: &PhysicalConstants,
) -> Result<HermitianOperator> {
    params.validate()?;
    field.validate()?;
    let lk = assemble_luttinger_kohn(params, field, basis, c)?;
    let bp = assemble_bir_pikus(params, basis);
    let conf = assemble_confinement(params, geometry, basis, c)?;
    let zee = assemble_zeeman(params, field, basis, c);
    let mut h = lk.into_matrix();
    for part in [bp, conf, zee] {
        h = &h + part.matrix();
    }
    checked(h, Unit::ENERGY)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{ho_position_and_momentum, well_operators};
    use crate::basis::{BasisState, SpinComponent};
    use crate::constants::CODATA;
    use crate::operator::symmetrized_product;

    fn small_basis() -> BasisSpec {
        BasisSpec { nx: 4, ny: 4, nz: 3, lx: 50.0, ly: 50.0, well_width: 15.0 }
    }

    fn max_diff(a: &Mat<C64>, b: &Mat<C64>) -> f64 {
        let mut w = 0.0f64;
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                w = w.max((a[(i, j)] - b[(i, j)]).norm());
            }
        }
        w
    }

    #[test]
    fn table_defaults_and_derived_values() {
        let m = MaterialParams::default();
        assert_eq!((m.gamma1, m.gamma2, m.gamma3), (13.14, 4.59, 5.13));
        assert!((m.gamma_bar() - 4.86).abs() < 1e-12);
        assert!((m.delta() - 0.27).abs() < 1e-12);
        let mut m2 = m;
        m2.gamma3 = 6.0;
        assert!((m2.gamma_bar() - 5.295).abs() < 1e-12);
    }

    #[test]
    fn bir_pikus_table_values() {
        // hand arithmetic: P = -2.0 eV * (-0.0078) = 15.6 meV; Q = 2.3/2 eV * (-0.0204) = -23.46 meV
        let m = MaterialParams::default();
        assert!((m.strain_p() - 15.6).abs() < 1e-9);
        assert!((m.strain_q() + 23.46).abs() < 1e-9);
        let b = small_basis();
        let h = assemble_bir_pikus(&m, &b);
        let hh = h.get(0, 0).re;
        let lh = h.get(1, 1).re;
        assert!((hh - lh + 46.92).abs() < 1e-9);
        assert_eq!(h.get(3, 3), h.get(0, 0));
        assert_eq!(h.get(2, 2), h.get(1, 1));
    }

    #[test]
    fn bir_pikus_limits() {
        let b = small_basis();
        let mut m = MaterialParams { eps_xx: 0.0, eps_yy: 0.0, eps_zz: 0.0, ..Default::default() };
        assert_eq!(assemble_bir_pikus(&m, &b).max_abs(), 0.0);
        m.eps_xx = 0.01;
        m.eps_yy = 0.01;
        m.eps_zz = 0.01;
        assert!(m.strain_q().abs() < 1e-15);
        let h = assemble_bir_pikus(&m, &b);
        assert!((h.get(0, 0).re - h.get(1, 1).re).abs() < 1e-12);
    }

    #[test]
    fn wavevectors_without_field_are_bare() {
        let b = small_basis();
        let k = kinetic_wavevectors(&FieldConfig { b: [0.0; 3] }, &b, &CODATA).unwrap();
        let (_, kx) = ho_position_and_momentum(Axis::X, &b).unwrap();
        let lifted = lift_to_product(&kx, Axis::X, &b).unwrap();
        assert!(max_diff(k[0].matrix(), lifted.matrix()) < 1e-15);
    }

    #[test]
    fn peierls_shift_along_x_field() {
        let b = small_basis();
        let bx = 1.0;
        let k0 = kinetic_wavevectors(&FieldConfig { b: [0.0; 3] }, &b, &CODATA).unwrap();
        let k1 = kinetic_wavevectors(&FieldConfig::along_x(bx), &b, &CODATA).unwrap();
        let ops = OrbitalOperators::new(&b).unwrap();
        let z = lift_to_product(&ops.z.r, Axis::Z, &b).unwrap();
        let y = lift_to_product(&ops.y.r, Axis::Y, &b).unwrap();
        // r x B for B = (1,0,0): (0, z, -y); A = -(r x B)/2 = (0, -z/2, y/2)
        let coeff = CODATA.charge_over_hbar() * bx / 2.0;
        let dy = k1[1].matrix() - k0[1].matrix();
        let dz = k1[2].matrix() - k0[2].matrix();
        assert!(max_diff(&dy, &z.scale(-coeff, Unit::INVERSE_LENGTH).into_matrix()) < 1e-15);
        assert!(max_diff(&dz, &y.scale(coeff, Unit::INVERSE_LENGTH).into_matrix()) < 1e-15);
        assert!(max_diff(k1[0].matrix(), k0[0].matrix()) < 1e-15);
    }

    #[test]
    fn magnetic_translation_commutator() {
        // [K_y, K_z] = c [k_y, y] - c [z, k_z] with c = e B_x / 2 hbar; both slot commutators
        // tend to -i and +i, giving -i e B_x / hbar on interior blocks.
        let b = BasisSpec { nx: 4, ny: 6, nz: 4, lx: 50.0, ly: 30.0, well_width: 15.0 };
        let bx = 2.0;
        let c = CODATA.charge_over_hbar() * bx / 2.0;
        let k = kinetic_wavevectors(&FieldConfig::along_x(bx), &b, &CODATA).unwrap();
        let comm = k[1].commutator(&k[2]).unwrap();
        let ops = OrbitalOperators::new(&b).unwrap();
        let ky_y = ops.y.k.commutator(&ops.y.r).unwrap();
        let z_kz = ops.z.r.commutator(&ops.z.k).unwrap();
        let mut expect = Mat::<C64>::zeros(b.dim(), b.dim());
        kron4_accumulate(&mut expect, &b, C64::new(c, 0.0), &identity(b.nx), &ky_y, &identity(b.nz), &identity(4));
        kron4_accumulate(&mut expect, &b, C64::new(-c, 0.0), &identity(b.nx), &identity(b.ny), &z_kz, &identity(4));
        assert!(max_diff(&comm, &expect) < 1e-15);
        for n in 0..b.ny - 1 {
            assert!((ky_y[(n, n)] - C64::new(0.0, -1.0)).norm() < 1e-12);
        }
        // the sine-basis [z, k_z] approaches i as the truncation grows
        let lowest = |nz: usize| {
            let w = well_operators(nz, 15.0).unwrap();
            w.r.commutator(&w.k).unwrap()[(0, 0)]
        };
        let errs: alloc::vec::Vec<f64> =
            [4, 8, 16, 64].iter().map(|&n| (lowest(n) - C64::new(0.0, 1.0)).norm()).collect();
        assert!(errs.windows(2).all(|w| w[1] < w[0]));
        assert!(errs[3] < 0.01);
    }

    #[test]
    fn symmetrized_kx_ky_equals_tensor_product() {
        let b = small_basis();
        let k = kinetic_wavevectors(&FieldConfig { b: [0.0; 3] }, &b, &CODATA).unwrap();
        let sym = symmetrized_product(&k[0], &k[1]).unwrap();
        let ops = OrbitalOperators::new(&b).unwrap();
        let mut direct = Mat::<C64>::zeros(b.dim(), b.dim());
        kron4_accumulate(
            &mut direct,
            &b,
            C64::new(1.0, 0.0),
            ops.x.k.matrix(),
            ops.y.k.matrix(),
            &identity(b.nz),
            &identity(4),
        );
        assert!(max_diff(sym.matrix(), &direct) < 1e-15);
    }

    #[test]
    fn spherical_limit_is_spin_diagonal() {
        let b = small_basis();
        let m = MaterialParams { gamma2: 0.0, gamma3: 0.0, ..Default::default() };
        let h = assemble_luttinger_kohn(&m, &FieldConfig { b: [0.0; 3] }, &b, &CODATA).unwrap();
        let ops = OrbitalOperators::new(&b).unwrap();
        let pre = CODATA.kinetic_prefactor() * m.gamma1;
        for i in 0..b.dim() {
            for j in 0..b.dim() {
                let (si, sj) = (b.unflatten(i).unwrap(), b.unflatten(j).unwrap());
                let v = h.get(i, j);
                if si.j != sj.j {
                    assert_eq!(v, C64::new(0.0, 0.0));
                    continue;
                }
                let dx = |a: usize, c: usize| if a == c { 1.0 } else { 0.0 };
                let k2 = ops.x.k2.get(si.nx, sj.nx).re * dx(si.ny, sj.ny) * dx(si.nz, sj.nz)
                    + ops.y.k2.get(si.ny, sj.ny).re * dx(si.nx, sj.nx) * dx(si.nz, sj.nz)
                    + ops.z.k2.get(si.nz - 1, sj.nz - 1).re * dx(si.nx, sj.nx) * dx(si.ny, sj.ny);
                assert!((v.re - pre * k2).abs() < 1e-12 && v.im.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn bulk_masses_on_diagonal() {
        // Diagonal LK elements: heavy holes see gamma1+gamma2 in plane and gamma1-2gamma2 along z,
        // light holes gamma1-gamma2 in plane and gamma1+2gamma2 along z.
        let b = small_basis();
        let m = MaterialParams::default();
        let h = assemble_luttinger_kohn(&m, &FieldConfig { b: [0.0; 3] }, &b, &CODATA).unwrap();
        let ops = OrbitalOperators::new(&b).unwrap();
        let pre = CODATA.kinetic_prefactor();
        for (nx, ny, nz) in [(0, 0, 1), (1, 2, 2), (3, 0, 3)] {
            let kxy = ops.x.k2.get(nx, nx).re + ops.y.k2.get(ny, ny).re;
            let kz = ops.z.k2.get(nz - 1, nz - 1).re;
            for j in SpinComponent::ALL {
                let i = b.flatten(&BasisState { nx, ny, nz, j });
                let (g_in, g_z) = if j.is_heavy() {
                    (m.gamma1 + m.gamma2, m.gamma1 - 2.0 * m.gamma2)
                } else {
                    (m.gamma1 - m.gamma2, m.gamma1 + 2.0 * m.gamma2)
                };
                let expect = pre * (g_in * kxy + g_z * kz);
                assert!((h.get(i, i).re - expect).abs() < 1e-10 * expect, "{nx}{ny}{nz} {j:?}");
            }
        }
    }

    #[test]
    fn zeeman_limits() {
        let b = small_basis();
        let m = MaterialParams::default();
        assert_eq!(assemble_zeeman(&m, &FieldConfig { b: [0.0; 3] }, &b, &CODATA).max_abs(), 0.0);
        let mut only_kappa = m;
        only_kappa.q = 0.0;
        let s = spin_matrices();
        let z = zeeman_spin_matrix(&only_kappa, &FieldConfig { b: [0.0, 0.0, 1.0] }, &CODATA, &s);
        let mu = CODATA.mu_b_mev_per_t();
        let expect = [3.0, 1.0, -1.0, -3.0];
        for i in 0..4 {
            assert!((z[(i, i)].re - expect[i] * m.kappa * mu).abs() < 1e-15);
        }
        let x = zeeman_spin_matrix(&m, &FieldConfig::along_x(1.0), &CODATA, &s);
        for i in 0..4 {
            assert_eq!(x[(i, i)], C64::new(0.0, 0.0));
        }
    }

    #[test]
    fn total_is_hermitian_and_linear_in_gate() {
        let b = small_basis();
        let m = MaterialParams::default();
        let g = DotGeometry::default();
        let f = FieldConfig { b: [0.7, 0.2, 0.3] };
        let h = assemble_total(&m, &g, &f, &b, &CODATA).unwrap();
        assert!(h.hermiticity().is_ok());
        let mut g2 = g;
        g2.e_gate *= 2.0;
        let h2 = assemble_total(&m, &g2, &f, &b, &CODATA).unwrap();
        let c1 = assemble_confinement(&m, &g, &b, &CODATA).unwrap();
        let c2 = assemble_confinement(&m, &g2, &b, &CODATA).unwrap();
        let dh = h2.matrix() - h.matrix();
        let dc = c2.matrix() - c1.matrix();
        assert!(max_diff(&dh, &dc) < 1e-12);
        // repeated assembly is bit-identical
        let again = assemble_total(&m, &g, &f, &b, &CODATA).unwrap();
        assert!(max_diff(h.matrix(), again.matrix()) == 0.0);
    }

    #[test]
    fn cubic_terms_alone_are_hermitian() {
        let b = small_basis();
        let m = MaterialParams { gamma1: 0.0, gamma2: 0.0, ..Default::default() };
        let h = assemble_luttinger_kohn(&m, &FieldConfig { b: [1.0, 0.5, 0.0] }, &b, &CODATA).unwrap();
        assert!(h.hermiticity().is_ok());
    }

    #[test]
    fn rejects_excessive_field() {
        let b = small_basis();
        let r = assemble_total(
            &MaterialParams::default(),
            &DotGeometry::default(),
            &FieldConfig::along_x(11.0),
            &b,
            &CODATA,
        );
        assert!(r.is_err());
    }
}
