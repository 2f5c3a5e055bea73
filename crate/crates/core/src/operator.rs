//! Dense Hermitian operators on the product basis.

use core::ops::{Add, Mul};

use faer::Mat;

use crate::basis::{Axis, BasisSpec};
use crate::error::{Error, Result};
use crate::C64;

/// Relative Hermiticity tolerance: ||M - M^dagger||_max <= TOL * ||M||_max.
pub const HERMITICITY_TOL: f64 = 1e-12;

/// Physical dimension of an operator as exponents of (meV, nm).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Unit {
    /// Power of energy.
    pub energy: i8,
    /// Power of length.
    pub length: i8,
}

impl Unit {
    /// No dimension.
    pub const DIMENSIONLESS: Unit = Unit { energy: 0, length: 0 };
    /// meV.
    pub const ENERGY: Unit = Unit { energy: 1, length: 0 };
    /// nm.
    pub const LENGTH: Unit = Unit { energy: 0, length: 1 };
    /// 1/nm.
    pub const INVERSE_LENGTH: Unit = Unit { energy: 0, length: -1 };
}

impl Mul for Unit {
    type Output = Unit;
    fn mul(self, rhs: Unit) -> Unit {
        Unit { energy: self.energy + rhs.energy, length: self.length + rhs.length }
    }
}

/// Square complex matrix that is Hermitian to within [`HERMITICITY_TOL`].
#[derive(Clone, Debug)]
pub struct HermitianOperator {
    matrix: Mat<C64>,
    unit: Unit,
}

/// Location and size of the worst Hermiticity violation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HermiticityDefect {
    /// Row of the worst pair.
    pub row: usize,
    /// Column of the worst pair.
    pub col: usize,
    /// |M_ij - conj(M_ji)|.
    pub deviation: f64,
    /// max |M_ij|.
    pub scale: f64,
}

impl HermiticityDefect {
    /// True when the defect is inside the relative tolerance.
    pub fn is_ok(&self) -> bool {
        self.deviation <= HERMITICITY_TOL * self.scale
    }
}

/// Worst-element Hermiticity check of a square matrix.
pub fn hermiticity_defect(m: &Mat<C64>) -> HermiticityDefect {
    let n = m.nrows();
    let mut worst = HermiticityDefect { row: 0, col: 0, deviation: 0.0, scale: 0.0 };
    for j in 0..n {
        for i in 0..n {
            let a = m[(i, j)];
            worst.scale = worst.scale.max(a.norm());
            if i <= j {
                let d = (a - m[(j, i)].conj()).norm();
                if d > worst.deviation {
                    worst.deviation = d;
                    worst.row = i;
                    worst.col = j;
                }
            }
        }
    }
    worst
}

impl HermitianOperator {
    /// Wraps a matrix after checking squareness and Hermiticity.
    pub fn new(matrix: Mat<C64>, unit: Unit) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch { expected: matrix.nrows(), found: matrix.ncols() });
        }
        let d = hermiticity_defect(&matrix);
        if !d.is_ok() {
            return Err(Error::NotHermitian { row: d.row, col: d.col, deviation: d.deviation, scale: d.scale });
        }
        Ok(HermitianOperator { matrix, unit })
    }

    /// Wraps a matrix known to be Hermitian by construction (checked in debug builds).
    pub(crate) fn from_trusted(matrix: Mat<C64>, unit: Unit) -> Self {
        debug_assert!(hermiticity_defect(&matrix).is_ok());
        HermitianOperator { matrix, unit }
    }

    /// Identity of dimension `n`.
    pub fn identity(n: usize, unit: Unit) -> Self {
        HermitianOperator {
            matrix: Mat::from_fn(n, n, |i, j| if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) }),
            unit,
        }
    }

    /// Zero operator of dimension `n`.
    pub fn zeros(n: usize, unit: Unit) -> Self {
        HermitianOperator { matrix: Mat::zeros(n, n), unit }
    }

    /// Matrix dimension.
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Physical unit tag.
    pub fn unit(&self) -> Unit {
        self.unit
    }

    /// Underlying dense matrix.
    pub fn matrix(&self) -> &Mat<C64> {
        &self.matrix
    }

    /// Consumes the operator, returning the matrix.
    pub fn into_matrix(self) -> Mat<C64> {
        self.matrix
    }

    /// Matrix element (row, col).
    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.matrix[(row, col)]
    }

    /// Largest |M_ij|.
    pub fn max_abs(&self) -> f64 {
        let mut m = 0.0f64;
        for j in 0..self.dim() {
            for i in 0..self.dim() {
                m = m.max(self.matrix[(i, j)].norm());
            }
        }
        m
    }

    /// Worst Hermiticity violation.
    pub fn hermiticity(&self) -> HermiticityDefect {
        hermiticity_defect(&self.matrix)
    }

    /// Sum of the diagonal.
    pub fn trace(&self) -> C64 {
        (0..self.dim()).map(|i| self.matrix[(i, i)]).sum()
    }

    /// Multiplies by a real scalar, changing the unit tag.
    pub fn scale(&self, factor: f64, unit: Unit) -> Self {
        HermitianOperator { matrix: Mat::from_fn(self.dim(), self.dim(), |i, j| self.matrix[(i, j)] * factor), unit }
    }

    /// Plain matrix product (not Hermitian in general).
    pub fn matmul(&self, other: &Self) -> Result<Mat<C64>> {
        check_same_dim(self, other)?;
        Ok(&self.matrix * &other.matrix)
    }

    /// Commutator [A, B] as a plain matrix.
    pub fn commutator(&self, other: &Self) -> Result<Mat<C64>> {
        check_same_dim(self, other)?;
        let ab = &self.matrix * &other.matrix;
        let ba = &other.matrix * &self.matrix;
        Ok(&ab - &ba)
    }

    /// Sum of two operators with matching unit.
    pub fn try_add(&self, other: &Self) -> Result<Self> {
        check_same_dim(self, other)?;
        Ok(HermitianOperator { matrix: &self.matrix + &other.matrix, unit: self.unit })
    }
}

impl Add for &HermitianOperator {
    type Output = HermitianOperator;
    fn add(self, rhs: &HermitianOperator) -> HermitianOperator {
        self.try_add(rhs).expect("operator dimensions must agree")
    }
}

fn check_same_dim(a: &HermitianOperator, b: &HermitianOperator) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    Ok(())
}

/// (AB + BA) / 2, Hermitian whenever A and B are.
pub fn symmetrized_product(a: &HermitianOperator, b: &HermitianOperator) -> Result<HermitianOperator> {
    check_same_dim(a, b)?;
    let ab = &a.matrix * &b.matrix;
    let ba = &b.matrix * &a.matrix;
    let n = a.dim();
    let sum = Mat::from_fn(n, n, |i, j| (ab[(i, j)] + ba[(i, j)]) * 0.5);
    HermitianOperator::new(sum, a.unit * b.unit)
}

/// Embeds a one-slot operator into the full product space (identity elsewhere).
pub fn lift_to_product(op: &HermitianOperator, slot: Axis, basis: &BasisSpec) -> Result<HermitianOperator> {
    let expected = basis.slot_dim(slot);
    if op.dim() != expected {
        return Err(Error::DimensionMismatch { expected, found: op.dim() });
    }
    let eye = |n: usize| Mat::<C64>::from_fn(n, n, |i, j| if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) });
    let mut factors = [eye(basis.nx), eye(basis.ny), eye(basis.nz), eye(4)];
    let k = match slot {
        Axis::X => 0,
        Axis::Y => 1,
        Axis::Z => 2,
        Axis::Spin => 3,
    };
    factors[k] = op.matrix.clone();
    let mut out = Mat::zeros(basis.dim(), basis.dim());
    let [fx, fy, fz, fs] = &factors;
    kron4_accumulate(&mut out, basis, C64::new(1.0, 0.0), fx, fy, fz, fs);
    Ok(HermitianOperator::from_trusted(out, op.unit))
}

fn nonzeros(m: &Mat<C64>) -> alloc::vec::Vec<(usize, usize, C64)> {
    let mut v = alloc::vec::Vec::new();
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let a = m[(i, j)];
            if a.re != 0.0 || a.im != 0.0 {
                v.push((i, j, a));
            }
        }
    }
    v
}

/// out += coeff * (fx (x) fy (x) fz (x) spin), in the basis ordering of [`BasisSpec`].
///
/// Iterates only over the nonzero entries of each factor.
pub fn kron4_accumulate(
    out: &mut Mat<C64>,
    basis: &BasisSpec,
    coeff: C64,
    fx: &Mat<C64>,
    fy: &Mat<C64>,
    fz: &Mat<C64>,
    spin: &Mat<C64>,
) {
    let (nyb, nzb) = (basis.ny, basis.nz);
    let nx_list = nonzeros(fx);
    let ny_list = nonzeros(fy);
    let nz_list = nonzeros(fz);
    let s_list = nonzeros(spin);
    for &(ax, bx, vx) in &nx_list {
        let cx = coeff * vx;
        for &(ay, by, vy) in &ny_list {
            let cxy = cx * vy;
            for &(az, bz, vz) in &nz_list {
                let cxyz = cxy * vz;
                let row0 = ((ax * nyb + ay) * nzb + az) * 4;
                let col0 = ((bx * nyb + by) * nzb + bz) * 4;
                for &(sa, sb, vs) in &s_list {
                    out[(row0 + sa, col0 + sb)] += cxyz * vs;
                }
            }
        }
    }
}
