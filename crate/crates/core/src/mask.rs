//! Validity windows for the perturbative drive analytics.

/// Thresholds that decide where the second-order treatment is trusted.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaskConfig {
    /// Half-width of a multiphoton line, in units of omega0.
    pub line_width: f64,
    /// Factor standing in for "much greater than".
    pub ratio_factor: f64,
    /// Fast-EDSR band: |omega1 - omega0| <= width * Omega1.
    pub fast_edsr_width: f64,
    /// Largest |n| + |m| for combination lines.
    pub max_order: i32,
}

impl Default for MaskConfig {
    fn default() -> Self {
        MaskConfig { line_width: 0.05, ratio_factor: 20.0, fast_edsr_width: 2.0, max_order: 3 }
    }
}

/// Flags for one (omega1, omega2) cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ValidityMask {
    /// Cell sits on a multiphoton or combination line.
    pub multiphoton_excluded: bool,
    /// Auxiliary tone is detuned far enough from omega0.
    pub autler_townes_ok: bool,
    /// Both tones detuned far enough for the Floquet-Magnus estimate.
    pub fm_valid: bool,
}

impl ValidityMask {
    /// Usable as a primary/auxiliary pair for shift cancellation.
    pub fn admits_auxiliary(&self) -> bool {
        !self.multiphoton_excluded && self.autler_townes_ok
    }

    /// Every flag passes.
    pub fn all_ok(&self) -> bool {
        self.admits_auxiliary() && self.fm_valid
    }
}

const HARMONICS: [f64; 6] = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0];

/// True when `omega2` lies on a (half-)integer multiple of `omega0`, or `n omega1 + m omega2`
/// hits `omega0` for some m != 0 with |n| + |m| <= max_order.
///
/// Lines with m = 0 (the primary's own harmonics) are not checked.
pub fn on_multiphoton_line(omega1: f64, omega2: f64, omega0: f64, cfg: &MaskConfig) -> bool {
    let width = cfg.line_width * omega0;
    if HARMONICS.iter().any(|k| (omega2 - k * omega0).abs() < width) {
        return true;
    }
    let r = cfg.max_order;
    for n in -r..=r {
        for m in -r..=r {
            if m == 0 || n.abs() + m.abs() > r {
                continue;
            }
            if (f64::from(n) * omega1 + f64::from(m) * omega2 - omega0).abs() < width {
                return true;
            }
        }
    }
    false
}

/// Evaluates all flags for a two-tone cell.
pub fn validity_mask(omega1: f64, omega2: f64, omega0: f64, rabi1: f64, rabi2: f64, cfg: &MaskConfig) -> ValidityMask {
    let f = cfg.ratio_factor;
    ValidityMask {
        multiphoton_excluded: on_multiphoton_line(omega1, omega2, omega0, cfg),
        autler_townes_ok: (omega2 - omega0).abs() > f * rabi1.max(rabi2),
        fm_valid: (omega0 - omega1).abs() > f * rabi1 && (omega0 - omega2).abs() > f * rabi2,
    }
}

/// Primary tone close enough to resonance to keep a fast Rabi rate.
pub fn in_fast_edsr_band(omega1: f64, omega0: f64, rabi1: f64, cfg: &MaskConfig) -> bool {
    (omega1 - omega0).abs() <= cfg.fast_edsr_width * rabi1
}
