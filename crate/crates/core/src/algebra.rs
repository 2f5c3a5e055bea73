//! One-dimensional position, wave-vector and spin-3/2 matrices.
//!
//! Oscillator matrices come from the ladder-operator closed forms and the
//! square-well matrices from the analytic sine integrals for a well on
//! [-L/2, L/2]. Same-slot quadratic forms (x^2, k^2 and {x, k}/2) are built
//! analytically rather than by multiplying truncated matrices, so they are
//! exact inside the truncated space.

use faer::Mat;

use crate::basis::{Axis, BasisSpec};
use crate::error::{invalid, Result};
use crate::operator::{HermitianOperator, Unit};
use crate::C64;

const PI: f64 = core::f64::consts::PI;

/// Closed-form quadratic forms for one oscillator or well direction.
#[derive(Clone, Debug)]
pub struct SlotOperators {
    /// Position r.
    pub r: HermitianOperator,
    /// Wave vector k = -i d/dr.
    pub k: HermitianOperator,
    /// r^2.
    pub r2: HermitianOperator,
    /// k^2.
    pub k2: HermitianOperator,
    /// (r k + k r) / 2.
    pub rk_sym: HermitianOperator,
}

fn real(v: f64) -> C64 {
    C64::new(v, 0.0)
}

fn imag(v: f64) -> C64 {
    C64::new(0.0, v)
}

/// Oscillator matrices for `n` levels and oscillator length `length` (nm).
pub fn oscillator_operators(n: usize, length: f64) -> Result<SlotOperators> {
    if !(length > 0.0 && length.is_finite()) {
        return Err(invalid("oscillator length", alloc::format!("must be positive, got {length}")));
    }
    let s2 = 2.0f64.sqrt();
    let mut x = Mat::<C64>::zeros(n, n);
    let mut k = Mat::<C64>::zeros(n, n);
    let mut x2 = Mat::<C64>::zeros(n, n);
    let mut k2 = Mat::<C64>::zeros(n, n);
    let mut xk = Mat::<C64>::zeros(n, n);
    for m in 0..n {
        let diag = 2.0 * m as f64 + 1.0;
        x2[(m, m)] = real(length * length * diag / 2.0);
        k2[(m, m)] = real(diag / (2.0 * length * length));
        if m + 1 < n {
            let a = ((m + 1) as f64).sqrt();
            x[(m, m + 1)] = real(length * a / s2);
            x[(m + 1, m)] = real(length * a / s2);
            k[(m + 1, m)] = imag(a / (length * s2));
            k[(m, m + 1)] = imag(-a / (length * s2));
        }
        if m + 2 < n {
            let b = (((m + 1) * (m + 2)) as f64).sqrt();
            x2[(m, m + 2)] = real(length * length * b / 2.0);
            x2[(m + 2, m)] = real(length * length * b / 2.0);
            k2[(m, m + 2)] = real(-b / (2.0 * length * length));
            k2[(m + 2, m)] = real(-b / (2.0 * length * length));
            xk[(m + 2, m)] = imag(b / 2.0);
            xk[(m, m + 2)] = imag(-b / 2.0);
        }
    }
    Ok(SlotOperators {
        r: HermitianOperator::from_trusted(x, Unit::LENGTH),
        k: HermitianOperator::from_trusted(k, Unit::INVERSE_LENGTH),
        r2: HermitianOperator::from_trusted(x2, Unit::LENGTH * Unit::LENGTH),
        k2: HermitianOperator::from_trusted(k2, Unit::INVERSE_LENGTH * Unit::INVERSE_LENGTH),
        rk_sym: HermitianOperator::from_trusted(xk, Unit::DIMENSIONLESS),
    })
}

/// Infinite-square-well matrices for levels 1..=n of a well of width `width` centered at 0.
pub fn well_operators(n: usize, width: f64) -> Result<SlotOperators> {
    if !(width > 0.0 && width.is_finite()) {
        return Err(invalid("well width", alloc::format!("must be positive, got {width}")));
    }
    let l = width;
    let mut z = Mat::<C64>::zeros(n, n);
    let mut kz = Mat::<C64>::zeros(n, n);
    let mut z2 = Mat::<C64>::zeros(n, n);
    let mut kz2 = Mat::<C64>::zeros(n, n);
    let mut zk = Mat::<C64>::zeros(n, n);
    for a in 0..n {
        let p = (a + 1) as f64;
        kz2[(a, a)] = real((p * PI / l).powi(2));
        z2[(a, a)] = real(l * l * (1.0 / 12.0 - 1.0 / (2.0 * p * p * PI * PI)));
        for b in 0..n {
            if a == b {
                continue;
            }
            let q = (b + 1) as f64;
            let odd = (a + b) % 2 == 1;
            let diff = p * p - q * q;
            let cross = 4.0 * p * q / (diff * diff);
            if odd {
                // <p|z|q> = -(2L/pi^2) 4pq/(p^2-q^2)^2 ; <p|d/dz|q> = 4pq / (L (p^2-q^2))
                z[(a, b)] = real(-2.0 * l / (PI * PI) * cross);
                kz[(a, b)] = imag(-4.0 * p * q / (l * diff));
            } else {
                z2[(a, b)] = real(2.0 * l * l / (PI * PI) * cross);
                zk[(a, b)] = imag(2.0 * p * q / diff);
            }
        }
    }
    Ok(SlotOperators {
        r: HermitianOperator::from_trusted(z, Unit::LENGTH),
        k: HermitianOperator::from_trusted(kz, Unit::INVERSE_LENGTH),
        r2: HermitianOperator::from_trusted(z2, Unit::LENGTH * Unit::LENGTH),
        k2: HermitianOperator::from_trusted(kz2, Unit::INVERSE_LENGTH * Unit::INVERSE_LENGTH),
        rk_sym: HermitianOperator::from_trusted(zk, Unit::DIMENSIONLESS),
    })
}

/// Position and wave-vector matrices of an oscillator axis.
pub fn ho_position_and_momentum(axis: Axis, basis: &BasisSpec) -> Result<(HermitianOperator, HermitianOperator)> {
    let (n, len) = match axis {
        Axis::X => (basis.nx, basis.lx),
        Axis::Y => (basis.ny, basis.ly),
        _ => return Err(invalid("axis", "oscillator operators exist only for x and y")),
    };
    let ops = oscillator_operators(n, len)?;
    Ok((ops.r, ops.k))
}

/// z, k_z and z^2 for the square well.
pub fn well_position_and_momentum(
    basis: &BasisSpec,
) -> Result<(HermitianOperator, HermitianOperator, HermitianOperator)> {
    if basis.nz < 2 {
        return Err(invalid("basis.nz", "need at least 2 well levels"));
    }
    let ops = well_operators(basis.nz, basis.well_width)?;
    Ok((ops.r, ops.k, ops.r2))
}

/// Spin-3/2 matrices and their cubes in the ordered basis {+3/2, +1/2, -1/2, -3/2}.
#[derive(Clone, Debug)]
pub struct SpinMatrices {
    /// J_x.
    pub jx: Mat<C64>,
    /// J_y.
    pub jy: Mat<C64>,
    /// J_z.
    pub jz: Mat<C64>,
    /// J_x^3.
    pub jx3: Mat<C64>,
    /// J_y^3.
    pub jy3: Mat<C64>,
    /// J_z^3.
    pub jz3: Mat<C64>,
}

impl SpinMatrices {
    /// J_i for i = 0, 1, 2.
    pub fn j(&self, i: usize) -> &Mat<C64> {
        [&self.jx, &self.jy, &self.jz][i]
    }

    /// (J_i J_j + J_j J_i) / 2.
    pub fn anticommutator_half(&self, i: usize, j: usize) -> Mat<C64> {
        let a = self.j(i) * self.j(j);
        let b = self.j(j) * self.j(i);
        Mat::from_fn(4, 4, |r, c| (a[(r, c)] + b[(r, c)]) * 0.5)
    }
}

/// Builds the spin-3/2 matrices.
pub fn spin_matrices() -> SpinMatrices {
    let s3 = 3.0f64.sqrt();
    // J+ |m> = sqrt(15/4 - m(m+1)) |m+1>
    let mut jp = Mat::<C64>::zeros(4, 4);
    jp[(0, 1)] = real(s3);
    jp[(1, 2)] = real(2.0);
    jp[(2, 3)] = real(s3);
    let jm = jp.adjoint().to_owned();
    let jx = Mat::from_fn(4, 4, |i, j| (jp[(i, j)] + jm[(i, j)]) * 0.5);
    let jy = Mat::from_fn(4, 4, |i, j| (jp[(i, j)] - jm[(i, j)]) * C64::new(0.0, -0.5));
    let jz = Mat::from_fn(4, 4, |i, j| if i == j { real(1.5 - i as f64) } else { real(0.0) });
    let cube = |m: &Mat<C64>| -> Mat<C64> {
        let m2 = m * m;
        &m2 * m
    };
    SpinMatrices { jx3: cube(&jx), jy3: cube(&jy), jz3: cube(&jz), jx, jy, jz }
}
