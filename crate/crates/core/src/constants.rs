//! CODATA constants and the unit conversions used by every module.
//!
//! All conversions between SI and the internal (meV, nm, T, V/m, rad/s)
//! system live here.

/// Fundamental constants in SI units.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhysicalConstants {
    /// Reduced Planck constant, J s.
    pub hbar: f64,
    /// Elementary charge (positive), C.
    pub e: f64,
    /// Free electron mass, kg.
    pub m0: f64,
    /// Bohr magneton, J/T.
    pub mu_b: f64,
    /// Vacuum permittivity, F/m.
    pub eps0: f64,
}

/// CODATA 2018 values.
pub const CODATA: PhysicalConstants = PhysicalConstants {
    hbar: 1.054_571_817e-34,
    e: 1.602_176_634e-19,
    m0: 9.109_383_701_5e-31,
    mu_b: 9.274_010_078_3e-24,
    eps0: 8.854_187_812_8e-12,
};

const MEV_IN_J: f64 = 1.602_176_634e-22;
const NM_IN_M: f64 = 1e-9;

impl Default for PhysicalConstants {
    fn default() -> Self {
        CODATA
    }
}

impl PhysicalConstants {
    /// hbar in meV s.
    pub fn hbar_mev_s(&self) -> f64 {
        self.hbar / MEV_IN_J
    }

    /// hbar^2 / (2 m0) in meV nm^2.
    pub fn kinetic_prefactor(&self) -> f64 {
        self.hbar * self.hbar / (2.0 * self.m0) / MEV_IN_J / (NM_IN_M * NM_IN_M)
    }

    /// e / hbar in 1 / (T nm^2); multiplies a vector potential B*r to give a wave vector.
    pub fn charge_over_hbar(&self) -> f64 {
        self.e / self.hbar * NM_IN_M * NM_IN_M
    }

    /// Bohr magneton in meV/T.
    pub fn mu_b_mev_per_t(&self) -> f64 {
        self.mu_b / MEV_IN_J
    }

    /// Energy in meV of a charge e displaced by 1 nm in a 1 V/m field.
    pub fn field_energy_factor(&self) -> f64 {
        self.e * NM_IN_M / MEV_IN_J
    }

    /// e^2 / (4 pi eps0) in meV nm.
    pub fn coulomb_constant(&self) -> f64 {
        self.e * self.e / (4.0 * core::f64::consts::PI * self.eps0) / MEV_IN_J / NM_IN_M
    }

    /// Converts an energy in meV to an angular frequency in rad/s.
    pub fn energy_to_angular(&self, energy_mev: f64) -> f64 {
        energy_mev / self.hbar_mev_s()
    }

    /// Converts an angular frequency in rad/s to an energy in meV.
    pub fn angular_to_energy(&self, omega: f64) -> f64 {
        omega * self.hbar_mev_s()
    }
}

/// Converts an angular frequency in rad/s to a cyclic frequency in GHz.
pub fn angular_to_ghz(omega: f64) -> f64 {
    omega / (2.0 * core::f64::consts::PI) / 1e9
}

/// Converts an angular frequency in rad/s to a cyclic frequency in MHz.
pub fn angular_to_mhz(omega: f64) -> f64 {
    omega / (2.0 * core::f64::consts::PI) / 1e6
}

/// Converts a cyclic frequency in GHz to rad/s.
pub fn ghz_to_angular(f_ghz: f64) -> f64 {
    f_ghz * 1e9 * 2.0 * core::f64::consts::PI
}

/// Converts a cyclic frequency in MHz to rad/s.
pub fn mhz_to_angular(f_mhz: f64) -> f64 {
    f_mhz * 1e6 * 2.0 * core::f64::consts::PI
}
