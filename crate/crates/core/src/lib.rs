//! Single heavy-hole spin qubit in a strained Ge quantum well.
//!
//! The crate assembles the four-band Luttinger-Kohn + Bir-Pikus + confinement +
//! Zeeman Hamiltonian on a truncated product basis (harmonic oscillator in x
//! and y, infinite square well in z, spin-3/2 spinor), diagonalizes it, and
//! evaluates second-order drive-induced frequency shifts for one- and two-tone
//! electric driving. An independent time-evolution layer ([`dynamics`]) checks
//! the perturbative results.
//!
//! Internal units: energies in meV, lengths in nm, magnetic field in T,
//! electric field in V/m, angular frequencies in rad/s, times in s.
//!
//! The crate is `no_std` and only needs `alloc`. Enabling the `std` feature
//! turns on SIMD dispatch and threading in the dense eigensolver.
#![no_std]
#![warn(missing_docs)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod algebra;
pub mod basis;
pub mod cancel;
pub mod charge;
pub mod constants;
pub mod contour;
pub mod drive;
pub mod dynamics;
pub mod error;
pub mod hamiltonian;
pub mod mask;
pub mod operator;
pub mod quadrature;
pub mod spectrum;

pub use basis::{Axis, BasisSpec, BasisState, SpinComponent};
pub use constants::PhysicalConstants;
pub use error::{Error, Result};
pub use hamiltonian::{DotGeometry, FieldConfig, MaterialParams, WorkingPoint};
pub use operator::{HermitianOperator, Unit};
pub use spectrum::{QubitSubspace, Spectrum};

/// Complex scalar used for every matrix in the crate.
pub type C64 = num_complex::Complex64;
