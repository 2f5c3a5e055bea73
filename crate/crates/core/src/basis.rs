//! Truncated product basis |n_x, n_y, n_z, j>.
//!
//! Harmonic-oscillator levels along x and y, infinite-square-well levels along
//! z (indexed from 1, well centered at z = 0) and the four spin-3/2 components.
//! Linear index ordering: spin fastest, then n_z, n_y, n_x.

use crate::error::{invalid, Result};

/// Tensor slot of the product basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    /// In-plane x (harmonic oscillator).
    X,
    /// In-plane y (harmonic oscillator).
    Y,
    /// Growth direction z (square well).
    Z,
    /// Spin-3/2 spinor.
    Spin,
}

/// Spin-3/2 projection, ordered {+3/2, +1/2, -1/2, -3/2}.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SpinComponent {
    /// j_z = +3/2 (heavy hole).
    Plus3Half,
    /// j_z = +1/2 (light hole).
    Plus1Half,
    /// j_z = -1/2 (light hole).
    Minus1Half,
    /// j_z = -3/2 (heavy hole).
    Minus3Half,
}

impl SpinComponent {
    /// All components in basis order.
    pub const ALL: [SpinComponent; 4] =
        [SpinComponent::Plus3Half, SpinComponent::Plus1Half, SpinComponent::Minus1Half, SpinComponent::Minus3Half];

    /// Position in the spinor.
    pub fn index(self) -> usize {
        self as usize
    }

    /// Inverse of [`SpinComponent::index`].
    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    /// The projection m_j.
    pub fn m(self) -> f64 {
        1.5 - self.index() as f64
    }

    /// True for |m_j| = 3/2.
    pub fn is_heavy(self) -> bool {
        matches!(self, SpinComponent::Plus3Half | SpinComponent::Minus3Half)
    }
}

/// Size and length scales of the truncated basis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BasisSpec {
    /// Oscillator levels along x.
    pub nx: usize,
    /// Oscillator levels along y.
    pub ny: usize,
    /// Square-well levels along z.
    pub nz: usize,
    /// Oscillator length along x, nm.
    pub lx: f64,
    /// Oscillator length along y, nm.
    pub ly: f64,
    /// Well width, nm.
    pub well_width: f64,
}

/// One element of the product basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BasisState {
    /// Oscillator quantum number along x (from 0).
    pub nx: usize,
    /// Oscillator quantum number along y (from 0).
    pub ny: usize,
    /// Well quantum number (from 1).
    pub nz: usize,
    /// Spinor component.
    pub j: SpinComponent,
}

impl BasisSpec {
    /// Default truncation (10, 10, 5) with the given length scales.
    pub fn with_lengths(lx: f64, ly: f64, well_width: f64) -> Self {
        BasisSpec { nx: 10, ny: 10, nz: 5, lx, ly, well_width }
    }

    /// Checks the truncation and length invariants.
    pub fn validate(&self) -> Result<()> {
        if self.nx < 4 || self.ny < 4 {
            return Err(invalid("basis.nx/ny", "need at least 4 oscillator levels per axis"));
        }
        if self.nz < 2 {
            return Err(invalid("basis.nz", "need at least 2 well levels"));
        }
        for (name, v) in [("basis.lx", self.lx), ("basis.ly", self.ly), ("basis.well_width", self.well_width)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, alloc::format!("length must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Number of orbital states n_x n_y n_z.
    pub fn orbital_dim(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    /// Full dimension 4 n_x n_y n_z.
    pub fn dim(&self) -> usize {
        4 * self.orbital_dim()
    }

    /// Dimension of one tensor factor.
    pub fn slot_dim(&self, slot: Axis) -> usize {
        match slot {
            Axis::X => self.nx,
            Axis::Y => self.ny,
            Axis::Z => self.nz,
            Axis::Spin => 4,
        }
    }

    /// Linear index of a basis state.
    pub fn flatten(&self, s: &BasisState) -> usize {
        debug_assert!(s.nx < self.nx && s.ny < self.ny && s.nz >= 1 && s.nz <= self.nz);
        ((s.nx * self.ny + s.ny) * self.nz + (s.nz - 1)) * 4 + s.j.index()
    }

    /// Basis state at a linear index.
    pub fn unflatten(&self, index: usize) -> Option<BasisState> {
        if index >= self.dim() {
            return None;
        }
        let j = SpinComponent::from_index(index % 4)?;
        let orb = index / 4;
        let nz = orb % self.nz + 1;
        let rest = orb / self.nz;
        let ny = rest % self.ny;
        let nx = rest / self.ny;
        Some(BasisState { nx, ny, nz, j })
    }
}
