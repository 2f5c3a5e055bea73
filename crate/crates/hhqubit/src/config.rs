//! Run configuration: flat `section.key = value` text.
//!
//! Blank lines and lines starting with `#` are ignored. Every key is optional;
//! absent keys keep the built-in defaults. Unknown or repeated keys are errors.

use std::fmt::Write as _;
use std::path::Path;

use hhqubit_core::charge::DefectConfig;
use hhqubit_core::mask::MaskConfig;
use hhqubit_core::{DotGeometry, FieldConfig, MaterialParams, WorkingPoint};
use sha2::{Digest, Sha256};

/// Problems reading or validating a configuration.
#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    /// Syntax or value error at a line.
    #[error("line {line}: {message}")]
    Parse {
        /// 1-based line number.
        line: usize,
        /// What went wrong.
        message: String,
    },
    /// A parsed value violates an invariant.
    #[error("invalid {field}: {reason}")]
    Invalid {
        /// Dotted key.
        field: String,
        /// Why.
        reason: String,
    },
    /// The file could not be read.
    #[error("cannot read {path}: {message}")]
    Io {
        /// Path as given.
        path: String,
        /// OS error text.
        message: String,
    },
}

fn invalid(field: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field: field.to_string(), reason: reason.into() }
}

/// How the auxiliary amplitude is chosen in residual sweeps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum E2Choice {
    /// E2 = E1.
    Equal,
    /// E2 cancels the primary's shift wherever R0 < 0.
    Cancelling,
    /// Fixed value, V/m.
    Fixed(f64),
}

/// Fully validated run description.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSpec {
    /// Material constants.
    pub material: MaterialParams,
    /// Dot geometry and gate field.
    pub geometry: DotGeometry,
    /// Static magnetic field.
    pub field: FieldConfig,
    /// Basis sizes (nx, ny, nz).
    pub basis: (usize, usize, usize),
    /// Primary amplitude, V/m.
    pub e1: f64,
    /// Auxiliary amplitude, V/m.
    pub e2: f64,
    /// Heatmap omega1 range in units of omega0.
    pub heatmap_omega1: (f64, f64),
    /// Heatmap omega2 range in units of omega0.
    pub heatmap_omega2: (f64, f64),
    /// Heatmap points along omega1 and omega2.
    pub heatmap_points: (usize, usize),
    /// Gate fields of the R0 sweep, V/m.
    pub r0_gates: Vec<f64>,
    /// R0 sweep range in units of omega0.
    pub r0_omega2: (f64, f64),
    /// Uniform R0 sweep points.
    pub r0_points: usize,
    /// Half-width (units of omega0) of the dense window around omega0.
    pub r0_refine_width: f64,
    /// Points in the dense window.
    pub r0_refine_points: usize,
    /// Residual sweep band, GHz.
    pub residual_band_ghz: (f64, f64),
    /// Residual sweep points.
    pub residual_points: usize,
    /// Auxiliary amplitude policy of the residual sweep.
    pub residual_e2: E2Choice,
    /// Cancellation search band in units of omega0.
    pub cancel_band: (f64, f64),
    /// Cancellation pre-scan points.
    pub cancel_points: usize,
    /// Apply the validity mask in the cancellation search.
    pub cancel_use_mask: bool,
    /// Validity thresholds.
    pub mask: MaskConfig,
    /// Charge defect, present only when configured.
    pub defect: Option<DefectConfig>,
    /// Basis ladder of the convergence scan.
    pub converge_ladder: Vec<(usize, usize, usize)>,
    /// Oracle tone frequency in units of omega0.
    pub oracle_omega: f64,
    /// Oracle amplitude ladder, V/m.
    pub oracle_amplitudes: Vec<f64>,
    /// Oracle integration steps per shortest period.
    pub oracle_steps: usize,
    /// Levels of the multilevel oracle; 2 keeps the two-level reduction only.
    pub oracle_levels: usize,
}

impl Default for RunSpec {
    fn default() -> Self {
        let wp = WorkingPoint::default();
        RunSpec {
            material: wp.material,
            geometry: wp.geometry,
            field: wp.field,
            basis: (wp.basis.nx, wp.basis.ny, wp.basis.nz),
            e1: 1e4,
            e2: 1e4,
            heatmap_omega1: (0.8, 1.2),
            heatmap_omega2: (0.1, 3.5),
            heatmap_points: (60, 60),
            r0_gates: vec![5e6, 1e7],
            r0_omega2: (0.1, 3.5),
            r0_points: 341,
            r0_refine_width: 0.05,
            r0_refine_points: 201,
            residual_band_ghz: (0.2, 8.0),
            residual_points: 400,
            residual_e2: E2Choice::Equal,
            cancel_band: (0.1, 3.5),
            cancel_points: 2000,
            cancel_use_mask: true,
            mask: MaskConfig::default(),
            defect: None,
            converge_ladder: vec![(6, 6, 8), (7, 7, 9), (8, 8, 10)],
            oracle_omega: 0.3,
            oracle_amplitudes: vec![1e4, 2e4, 4e4, 8e4],
            oracle_steps: 200,
            oracle_levels: 2,
        }
    }
}

fn parse_f64(v: &str) -> Result<f64, String> {
    let x: f64 = v.trim().parse().map_err(|_| format!("not a number: {v:?}"))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("not finite: {v:?}"))
    }
}

fn parse_usize(v: &str) -> Result<usize, String> {
    v.trim().parse().map_err(|_| format!("not a non-negative integer: {v:?}"))
}

fn parse_bool(v: &str) -> Result<bool, String> {
    match v.trim() {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(format!("expected true or false, got {v:?}")),
    }
}

fn parse_list(v: &str) -> Result<Vec<f64>, String> {
    v.split(',').map(parse_f64).collect()
}

fn parse_pair(v: &str) -> Result<(f64, f64), String> {
    match parse_list(v)?.as_slice() {
        [a, b] => Ok((*a, *b)),
        _ => Err(format!("expected two comma-separated numbers, got {v:?}")),
    }
}

fn parse_ladder(v: &str) -> Result<Vec<(usize, usize, usize)>, String> {
    v.split(',')
        .map(|rung| {
            let n: Vec<usize> = rung.split('x').map(parse_usize).collect::<Result<_, _>>()?;
            match n.as_slice() {
                [a, b, c] => Ok((*a, *b, *c)),
                _ => Err(format!("expected NXxNYxNZ, got {rung:?}")),
            }
        })
        .collect()
}

fn list(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

const DEFECT_KEYS: [&str; 6] =
    ["defect.x", "defect.y", "defect.z", "defect.charge_sign", "defect.screening_length", "defect.epsilon_r"];

impl RunSpec {
    /// Working point at the configured gate field.
    pub fn working_point(&self) -> WorkingPoint {
        self.working_point_at(self.geometry.e_gate)
    }

    /// Working point with the gate field replaced.
    pub fn working_point_at(&self, e_gate: f64) -> WorkingPoint {
        let geometry = DotGeometry { e_gate, ..self.geometry };
        WorkingPoint {
            material: self.material,
            geometry,
            field: self.field,
            basis: geometry.basis(self.basis.0, self.basis.1, self.basis.2),
        }
    }

    fn set(
        &mut self,
        key: &str,
        v: &str,
        defect: &mut [Option<f64>; 6],
        allow_inside: &mut bool,
    ) -> Result<(), String> {
        let m = &mut self.material;
        let g = &mut self.geometry;
        match key {
            "material.gamma1" => m.gamma1 = parse_f64(v)?,
            "material.gamma2" => m.gamma2 = parse_f64(v)?,
            "material.gamma3" => m.gamma3 = parse_f64(v)?,
            "material.kappa" => m.kappa = parse_f64(v)?,
            "material.q" => m.q = parse_f64(v)?,
            "material.a_v" => m.a_v = parse_f64(v)?,
            "material.b_v" => m.b_v = parse_f64(v)?,
            "material.eps_xx" => m.eps_xx = parse_f64(v)?,
            "material.eps_yy" => m.eps_yy = parse_f64(v)?,
            "material.eps_zz" => m.eps_zz = parse_f64(v)?,
            "geometry.a_x" => g.a_x = parse_f64(v)?,
            "geometry.a_y" => g.a_y = parse_f64(v)?,
            "geometry.well_width" => g.well_width = parse_f64(v)?,
            "geometry.e_gate" => g.e_gate = parse_f64(v)?,
            "field.b_x" => self.field.b[0] = parse_f64(v)?,
            "field.b_y" => self.field.b[1] = parse_f64(v)?,
            "field.b_z" => self.field.b[2] = parse_f64(v)?,
            "basis.nx" => self.basis.0 = parse_usize(v)?,
            "basis.ny" => self.basis.1 = parse_usize(v)?,
            "basis.nz" => self.basis.2 = parse_usize(v)?,
            "drive.e1" => self.e1 = parse_f64(v)?,
            "drive.e2" => self.e2 = parse_f64(v)?,
            "heatmap.omega1_over_omega0" => self.heatmap_omega1 = parse_pair(v)?,
            "heatmap.omega2_over_omega0" => self.heatmap_omega2 = parse_pair(v)?,
            "heatmap.points_omega1" => self.heatmap_points.0 = parse_usize(v)?,
            "heatmap.points_omega2" => self.heatmap_points.1 = parse_usize(v)?,
            "r0.e_gates" => self.r0_gates = parse_list(v)?,
            "r0.omega2_over_omega0" => self.r0_omega2 = parse_pair(v)?,
            "r0.points" => self.r0_points = parse_usize(v)?,
            "r0.refine_width" => self.r0_refine_width = parse_f64(v)?,
            "r0.refine_points" => self.r0_refine_points = parse_usize(v)?,
            "residual.band_ghz" => self.residual_band_ghz = parse_pair(v)?,
            "residual.points" => self.residual_points = parse_usize(v)?,
            "residual.e2_policy" => {
                self.residual_e2 = match v.trim() {
                    "equal" => E2Choice::Equal,
                    "cancelling" => E2Choice::Cancelling,
                    other => E2Choice::Fixed(
                        parse_f64(other)
                            .map_err(|_| format!("expected equal, cancelling or an amplitude in V/m, got {other:?}"))?,
                    ),
                }
            }
            "cancel.band_over_omega0" => self.cancel_band = parse_pair(v)?,
            "cancel.points" => self.cancel_points = parse_usize(v)?,
            "cancel.use_mask" => self.cancel_use_mask = parse_bool(v)?,
            "mask.line_width" => self.mask.line_width = parse_f64(v)?,
            "mask.ratio_factor" => self.mask.ratio_factor = parse_f64(v)?,
            "mask.fast_edsr_width" => self.mask.fast_edsr_width = parse_f64(v)?,
            "mask.max_order" => {
                self.mask.max_order = i32::try_from(parse_usize(v)?).map_err(|_| "max_order too large".to_string())?
            }
            "defect.allow_inside" => *allow_inside = parse_bool(v)?,
            "converge.ladder" => self.converge_ladder = parse_ladder(v)?,
            "oracle.omega_over_omega0" => self.oracle_omega = parse_f64(v)?,
            "oracle.amplitudes" => self.oracle_amplitudes = parse_list(v)?,
            "oracle.steps_per_period" => self.oracle_steps = parse_usize(v)?,
            "oracle.levels" => self.oracle_levels = parse_usize(v)?,
            other => match DEFECT_KEYS.iter().position(|k| *k == other) {
                Some(i) => defect[i] = Some(parse_f64(v)?),
                None => return Err(format!("unknown key {other:?}")),
            },
        }
        Ok(())
    }

    /// Parses configuration text and validates the result.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut spec = RunSpec::default();
        let mut seen = std::collections::BTreeSet::new();
        let mut defect = [None; 6];
        let mut allow_inside = false;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| ConfigError::Parse { line: i + 1, message };
            let (key, value) = line.split_once('=').ok_or_else(|| err("expected key = value".into()))?;
            let key = key.trim();
            if !seen.insert(key.to_string()) {
                return Err(err(format!("duplicate key {key:?}")));
            }
            spec.set(key, value, &mut defect, &mut allow_inside).map_err(err)?;
        }
        if defect.iter().any(Option::is_some) {
            let mut vals = [0.0; 6];
            for (k, (slot, name)) in defect.iter().zip(DEFECT_KEYS).enumerate() {
                vals[k] =
                    slot.ok_or_else(|| invalid(name, "every defect.* key is required once a defect is configured"))?;
            }
            spec.defect = Some(DefectConfig {
                position: [vals[0], vals[1], vals[2]],
                charge_sign: vals[3],
                screening_length: vals[4],
                epsilon_r: vals[5],
                allow_inside,
            });
        } else if allow_inside {
            return Err(invalid("defect.allow_inside", "given without a defect"));
        }
        spec.validate()?;
        Ok(spec)
    }

    /// Reads and parses a configuration file.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io { path: path.display().to_string(), message: e.to_string() })?;
        Self::parse(&text)
    }

    /// Checks every invariant, naming the offending key.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let core = |e: hhqubit_core::Error| match e {
            hhqubit_core::Error::InvalidParameter { name, reason } => invalid(name, reason),
            other => invalid("run", other.to_string()),
        };
        let wp = self.working_point();
        wp.validate().map_err(core)?;
        for &g in &self.r0_gates {
            self.working_point_at(g).validate().map_err(|_| invalid("r0.e_gates", "must be non-negative"))?;
        }
        for (name, v) in [("drive.e1", self.e1), ("drive.e2", self.e2)] {
            if v < 0.0 {
                return Err(invalid(name, "must be non-negative"));
            }
        }
        let ordered = |name: &str, (a, b): (f64, f64)| {
            if a > 0.0 && b > a {
                Ok(())
            } else {
                Err(invalid(name, "need 0 < min < max"))
            }
        };
        ordered("heatmap.omega1_over_omega0", self.heatmap_omega1)?;
        ordered("heatmap.omega2_over_omega0", self.heatmap_omega2)?;
        ordered("r0.omega2_over_omega0", self.r0_omega2)?;
        ordered("residual.band_ghz", self.residual_band_ghz)?;
        ordered("cancel.band_over_omega0", self.cancel_band)?;
        if self.residual_band_ghz.1 > 8.0 {
            return Err(invalid("residual.band_ghz", "upper edge must not exceed 8 GHz"));
        }
        for (name, n, min) in [
            ("heatmap.points_omega1", self.heatmap_points.0, 2),
            ("heatmap.points_omega2", self.heatmap_points.1, 2),
            ("r0.points", self.r0_points, 2),
            ("residual.points", self.residual_points, 3),
            ("cancel.points", self.cancel_points, 2),
            ("oracle.steps_per_period", self.oracle_steps, 40),
        ] {
            if n < min {
                return Err(invalid(name, format!("must be at least {min}")));
            }
        }
        if !(self.r0_refine_width >= 0.0) {
            return Err(invalid("r0.refine_width", "must be non-negative"));
        }
        if self.r0_gates.is_empty() {
            return Err(invalid("r0.e_gates", "need at least one gate field"));
        }
        if let E2Choice::Fixed(v) = self.residual_e2 {
            if v < 0.0 {
                return Err(invalid("residual.e2_policy", "amplitude must be non-negative"));
            }
        }
        let m = &self.mask;
        if !(m.line_width > 0.0 && m.ratio_factor > 0.0 && m.fast_edsr_width > 0.0) {
            return Err(invalid("mask", "widths and ratio factor must be positive"));
        }
        if let Some(d) = &self.defect {
            d.validate(self.geometry.well_width).map_err(core)?;
        }
        if self.converge_ladder.len() < 2 {
            return Err(invalid("converge.ladder", "need at least two rungs"));
        }
        if !(self.oracle_omega > 0.0) {
            return Err(invalid("oracle.omega_over_omega0", "must be positive"));
        }
        if self.oracle_amplitudes.is_empty() || self.oracle_amplitudes.iter().any(|&a| a <= 0.0) {
            return Err(invalid("oracle.amplitudes", "need positive amplitudes"));
        }
        if !(2..=hhqubit_core::dynamics::MAX_LEVELS).contains(&self.oracle_levels) {
            return Err(invalid("oracle.levels", "must lie in 2..=12"));
        }
        Ok(())
    }

    /// Canonical text form; parsing it gives back an equal spec.
    pub fn to_config_string(&self) -> String {
        let m = &self.material;
        let g = &self.geometry;
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("material.gamma1", m.gamma1.to_string());
        kv("material.gamma2", m.gamma2.to_string());
        kv("material.gamma3", m.gamma3.to_string());
        kv("material.kappa", m.kappa.to_string());
        kv("material.q", m.q.to_string());
        kv("material.a_v", m.a_v.to_string());
        kv("material.b_v", m.b_v.to_string());
        kv("material.eps_xx", m.eps_xx.to_string());
        kv("material.eps_yy", m.eps_yy.to_string());
        kv("material.eps_zz", m.eps_zz.to_string());
        kv("geometry.a_x", g.a_x.to_string());
        kv("geometry.a_y", g.a_y.to_string());
        kv("geometry.well_width", g.well_width.to_string());
        kv("geometry.e_gate", g.e_gate.to_string());
        kv("field.b_x", self.field.b[0].to_string());
        kv("field.b_y", self.field.b[1].to_string());
        kv("field.b_z", self.field.b[2].to_string());
        kv("basis.nx", self.basis.0.to_string());
        kv("basis.ny", self.basis.1.to_string());
        kv("basis.nz", self.basis.2.to_string());
        kv("drive.e1", self.e1.to_string());
        kv("drive.e2", self.e2.to_string());
        kv("heatmap.omega1_over_omega0", list(&[self.heatmap_omega1.0, self.heatmap_omega1.1]));
        kv("heatmap.omega2_over_omega0", list(&[self.heatmap_omega2.0, self.heatmap_omega2.1]));
        kv("heatmap.points_omega1", self.heatmap_points.0.to_string());
        kv("heatmap.points_omega2", self.heatmap_points.1.to_string());
        kv("r0.e_gates", list(&self.r0_gates));
        kv("r0.omega2_over_omega0", list(&[self.r0_omega2.0, self.r0_omega2.1]));
        kv("r0.points", self.r0_points.to_string());
        kv("r0.refine_width", self.r0_refine_width.to_string());
        kv("r0.refine_points", self.r0_refine_points.to_string());
        kv("residual.band_ghz", list(&[self.residual_band_ghz.0, self.residual_band_ghz.1]));
        kv("residual.points", self.residual_points.to_string());
        kv(
            "residual.e2_policy",
            match self.residual_e2 {
                E2Choice::Equal => "equal".to_string(),
                E2Choice::Cancelling => "cancelling".to_string(),
                E2Choice::Fixed(v) => v.to_string(),
            },
        );
        kv("cancel.band_over_omega0", list(&[self.cancel_band.0, self.cancel_band.1]));
        kv("cancel.points", self.cancel_points.to_string());
        kv("cancel.use_mask", self.cancel_use_mask.to_string());
        kv("mask.line_width", self.mask.line_width.to_string());
        kv("mask.ratio_factor", self.mask.ratio_factor.to_string());
        kv("mask.fast_edsr_width", self.mask.fast_edsr_width.to_string());
        kv("mask.max_order", self.mask.max_order.to_string());
        if let Some(d) = &self.defect {
            let vals = [d.position[0], d.position[1], d.position[2], d.charge_sign, d.screening_length, d.epsilon_r];
            for (k, v) in DEFECT_KEYS.iter().zip(vals) {
                kv(k, v.to_string());
            }
            kv("defect.allow_inside", d.allow_inside.to_string());
        }
        kv(
            "converge.ladder",
            self.converge_ladder.iter().map(|(a, b, c)| format!("{a}x{b}x{c}")).collect::<Vec<_>>().join(", "),
        );
        kv("oracle.omega_over_omega0", self.oracle_omega.to_string());
        kv("oracle.amplitudes", list(&self.oracle_amplitudes));
        kv("oracle.steps_per_period", self.oracle_steps.to_string());
        kv("oracle.levels", self.oracle_levels.to_string());
        s
    }

    /// SHA-256 of the canonical text, lowercase hex.
    pub fn hash(&self) -> String {
        Sha256::digest(self.to_config_string().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_gives_defaults() {
        assert_eq!(RunSpec::parse("").unwrap(), RunSpec::default());
        assert_eq!(RunSpec::parse("# only a comment\n\n").unwrap(), RunSpec::default());
    }

    #[test]
    fn round_trip() {
        let text = "geometry.e_gate = 5e6\nfield.b_x = 0.5\nresidual.e2_policy = 2500\n\
                    defect.x = 40\ndefect.y = 0\ndefect.z = -12.5\ndefect.charge_sign = -1\n\
                    defect.screening_length = 6\ndefect.epsilon_r = 15.36\nconverge.ladder = 4x4x4, 6x6x6\n";
        let a = RunSpec::parse(text).unwrap();
        let b = RunSpec::parse(&a.to_config_string()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), RunSpec::default().hash());
    }

    #[test]
    fn errors_carry_line_numbers_and_fields() {
        match RunSpec::parse("basis.nx = 8\nnonsense.key = 1\n") {
            Err(ConfigError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        match RunSpec::parse("geometry.well_width = -3\n") {
            Err(ConfigError::Invalid { field, .. }) => assert_eq!(field, "geometry.well_width"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(RunSpec::parse("a = 1\na = 1"), Err(ConfigError::Parse { line: 1, .. })));
        assert!(matches!(RunSpec::parse("drive.e1 10"), Err(ConfigError::Parse { line: 1, .. })));
        assert!(matches!(RunSpec::parse("defect.x = 30\n"), Err(ConfigError::Invalid { .. })));
        assert!(matches!(RunSpec::parse("residual.band_ghz = 1, 9\n"), Err(ConfigError::Invalid { .. })));
    }
}
