//! Command-line front end: argument parsing and one writer per subcommand.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use hhqubit_core::charge::DefectConfig;
use hhqubit_core::constants::{angular_to_ghz, angular_to_mhz, CODATA};

use crate::cache::SolveCache;
use crate::config::RunSpec;
use crate::error::RunError;
use crate::output::{flag, num, opt, write_csv, write_h_dump, write_json, ConvergenceStamp, MaskMeta, Sidecar, Table};
use crate::sweeps;

/// Heavy-hole spin qubit: spectra, drive-induced shifts and cancellation sweeps.
#[derive(Debug, Parser)]
#[command(name = "hhqubit", version)]
pub struct Cli {
    /// Shared flags.
    #[command(flatten)]
    pub global: GlobalArgs,
    /// What to compute.
    #[command(subcommand)]
    pub command: Command,
}

/// Flags accepted by every subcommand.
#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Run configuration file; built-in defaults when absent.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Worker threads for grid sweeps.
    #[arg(long, global = true, default_value_t = 1)]
    pub workers: usize,
    /// Reserved; every computation is deterministic.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Skip the basis-convergence stamp (saves one smaller diagonalization).
    #[arg(long, global = true)]
    pub no_stamp: bool,
}

/// Subcommands.
#[derive(Debug, Subcommand)]
pub enum Command {
    /// Levels, Larmor frequency and dipole at the working point (spectrum.json).
    Spectrum {
        /// Also write the full Hamiltonian to hamiltonian.bin.
        #[arg(long)]
        dump_h: bool,
    },
    /// Two-tone shift on an (omega1, omega2) grid (heatmap.csv, heatmap_contour.csv).
    Heatmap,
    /// R0 against omega2 at each configured gate field (r0_sweep.csv).
    R0Sweep,
    /// Residual detuning with a charge defect (residual_sweep.csv).
    ResidualSweep {
        /// Use the built-in defect when the configuration has none.
        #[arg(long)]
        use_default_defect: bool,
    },
    /// Auxiliary frequencies cancelling the shift (cancel_solve.json).
    CancelSolve,
    /// Time-evolution check of the perturbative shift (oracle_check.json).
    OracleCheck,
    /// omega0, |x12| and the gap along a basis ladder (converge.csv).
    Converge,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Spectrum { .. } => "spectrum",
            Command::Heatmap => "heatmap",
            Command::R0Sweep => "r0-sweep",
            Command::ResidualSweep { .. } => "residual-sweep",
            Command::CancelSolve => "cancel-solve",
            Command::OracleCheck => "oracle-check",
            Command::Converge => "converge",
        }
    }
}

struct Ctx<'a> {
    spec: &'a RunSpec,
    cache: SolveCache,
    out: &'a Path,
    workers: usize,
    stamp: bool,
    started: Instant,
    subcommand: &'static str,
}

impl Ctx<'_> {
    fn sidecar(&self, data: &Path, notes: Vec<String>) -> Result<Sidecar, RunError> {
        let basis_convergence: Option<ConvergenceStamp> =
            if self.stamp { sweeps::convergence_stamp(self.spec, &self.cache)? } else { None };
        Ok(Sidecar {
            run_spec_sha256: self.spec.hash(),
            subcommand: self.subcommand.to_string(),
            data_file: data.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
            params_hashes: vec![format!("{:016x}", self.spec.working_point().params_hash())],
            mask_config: MaskMeta::from(&self.spec.mask),
            basis_convergence,
            wall_time_s: self.started.elapsed().as_secs_f64(),
            workers: self.workers,
            notes,
            run_spec: self.spec.to_config_string(),
        })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

/// Loads the configuration, runs the subcommand and returns the files written.
pub fn run(cli: &Cli) -> Result<Vec<PathBuf>, RunError> {
    let spec = match &cli.global.config {
        Some(p) => RunSpec::load(p)?,
        None => RunSpec::default(),
    };
    spec.validate()?;
    if cli.global.workers == 0 {
        return Err(
            crate::config::ConfigError::Invalid { field: "--workers".into(), reason: "must be >= 1".into() }.into()
        );
    }
    std::fs::create_dir_all(&cli.global.out)?;
    faer::set_global_parallelism(faer::Par::Seq);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.global.workers)
        .build()
        .map_err(|e| std::io::Error::other(e.to_string()))?;
    let ctx = Ctx {
        spec: &spec,
        cache: SolveCache::new(),
        out: &cli.global.out,
        workers: cli.global.workers,
        stamp: !cli.global.no_stamp,
        started: Instant::now(),
        subcommand: cli.command.name(),
    };
    pool.install(|| dispatch(&ctx, &cli.command))
}

fn dispatch(ctx: &Ctx<'_>, cmd: &Command) -> Result<Vec<PathBuf>, RunError> {
    let spec = ctx.spec;
    match cmd {
        Command::Spectrum { dump_h } => {
            let wp = spec.working_point();
            let solved = ctx.cache.solve(&wp)?;
            let mut written = Vec::new();
            if *dump_h {
                let p = ctx.path("hamiltonian.bin");
                write_h_dump(&p, &wp.hamiltonian(&CODATA)?, wp.params_hash())?;
                written.push(p);
            }
            let p = ctx.path("spectrum.json");
            let meta = ctx.sidecar(&p, Vec::new())?;
            write_json(&p, &sweeps::spectrum_report(&solved), &meta)?;
            written.push(p);
            Ok(written)
        }
        Command::Heatmap => heatmap(ctx),
        Command::R0Sweep => r0_sweep(ctx),
        Command::ResidualSweep { use_default_defect } => residual_sweep(ctx, *use_default_defect),
        Command::CancelSolve => {
            let solved = ctx.cache.solve(&spec.working_point())?;
            let report = sweeps::cancel_solve(spec, &solved.qubit)?;
            let p = ctx.path("cancel_solve.json");
            let note = if spec.cancel_use_mask { "validity mask applied" } else { "validity mask disabled" };
            write_json(&p, &report, &ctx.sidecar(&p, vec![note.to_string()])?)?;
            Ok(vec![p])
        }
        Command::OracleCheck => {
            let solved = ctx.cache.solve(&spec.working_point())?;
            let report = sweeps::oracle_check(spec, &solved)?;
            let p = ctx.path("oracle_check.json");
            let notes = vec!["shift_exact and shift_perturbative in rad/s".to_string()];
            write_json(&p, &report, &ctx.sidecar(&p, notes)?)?;
            Ok(vec![p])
        }
        Command::Converge => {
            let report = sweeps::converge(spec)?;
            let mut t =
                Table::new(&["nx", "ny", "nz", "dim", "omega0_over_2pi_GHz", "x12_abs_nm", "gap3_meV", "rel_change"]);
            for r in &report.rows {
                let b = &r.basis;
                t.push(vec![
                    b.nx.to_string(),
                    b.ny.to_string(),
                    b.nz.to_string(),
                    b.dim().to_string(),
                    num(angular_to_ghz(r.omega0)),
                    num(r.x12_abs),
                    num(r.gap3),
                    opt(r.rel_change),
                ]);
            }
            let p = ctx.path("converge.csv");
            let mut notes = vec![format!("converged={} threshold={}", report.converged, report.threshold)];
            if report.non_monotone {
                notes.push("successive changes not monotone".to_string());
            }
            write_csv(&p, &t, &ctx.sidecar(&p, notes)?)?;
            Ok(vec![p])
        }
    }
}

fn heatmap(ctx: &Ctx<'_>) -> Result<Vec<PathBuf>, RunError> {
    let spec = ctx.spec;
    let solved = ctx.cache.solve(&spec.working_point())?;
    let grid = sweeps::heatmap(spec, &solved.qubit)?;
    let n1 = grid.omega1.len();
    let mut t = Table::new(&[
        "omega1_over_omega0",
        "omega2_over_omega0",
        "delta_omega2_over_2pi_MHz",
        "multiphoton_excluded",
        "autler_townes_ok",
        "fm_valid",
        "fast_edsr",
        "pole_guard",
    ]);
    for (k, c) in grid.cells.iter().enumerate() {
        t.push(vec![
            num(grid.omega1[k % n1] / grid.omega0),
            num(grid.omega2[k / n1] / grid.omega0),
            opt(c.value.map(angular_to_mhz)),
            flag(c.multiphoton),
            flag(c.autler_townes_ok),
            flag(c.fm_valid),
            flag(c.fast_edsr),
            flag(c.value.is_none()),
        ]);
    }
    let mut seg = Table::new(&[
        "omega1_a_over_omega0",
        "omega2_a_over_omega0",
        "omega1_b_over_omega0",
        "omega2_b_over_omega0",
        "cell_i",
        "cell_j",
    ]);
    for s in &grid.contour {
        seg.push(vec![
            num(s.a[0] / grid.omega0),
            num(s.a[1] / grid.omega0),
            num(s.b[0] / grid.omega0),
            num(s.b[1] / grid.omega0),
            s.cell.0.to_string(),
            s.cell.1.to_string(),
        ]);
    }
    let notes = vec![
        format!("E1={} V/m E2={} V/m", spec.e1, spec.e2),
        format!("omega0/2pi={} GHz", num(angular_to_ghz(grid.omega0))),
        "contour excludes multiphoton lines and pole guard bands".to_string(),
    ];
    let p = ctx.path("heatmap.csv");
    write_csv(&p, &t, &ctx.sidecar(&p, notes.clone())?)?;
    let q = ctx.path("heatmap_contour.csv");
    write_csv(&q, &seg, &ctx.sidecar(&q, notes)?)?;
    Ok(vec![p, q])
}

fn r0_sweep(ctx: &Ctx<'_>) -> Result<Vec<PathBuf>, RunError> {
    let spec = ctx.spec;
    let curves = sweeps::r0_sweep(spec, &ctx.cache)?;
    let mut t = Table::new(&[
        "e_gate_MV_per_m",
        "omega0_over_2pi_GHz",
        "omega2_over_2pi_GHz",
        "omega2_over_omega0",
        "r0",
        "r0_raw",
        "multiphoton_excluded",
        "autler_townes_ok",
        "pole_guard",
    ]);
    let mut notes = Vec::new();
    let ghz = |v: &[f64]| v.iter().map(|w| num(angular_to_ghz(*w))).collect::<Vec<_>>().join(" ");
    for c in &curves {
        for r in &c.rows {
            t.push(vec![
                num(c.e_gate * 1e-6),
                num(angular_to_ghz(c.omega0)),
                num(angular_to_ghz(r.omega2)),
                num(r.omega2 / c.omega0),
                opt(r.r0()),
                opt(r.raw),
                flag(r.multiphoton),
                flag(r.autler_townes_ok),
                flag(r.raw.is_none()),
            ]);
        }
        let g = c.e_gate * 1e-6;
        notes.push(format!("E_gate={g} MV/m raw sign changes (GHz): [{}]", ghz(&c.raw_sign_changes)));
        notes.push(format!("E_gate={g} MV/m unmasked sign changes (GHz): [{}]", ghz(&c.unmasked_sign_changes)));
        notes.push(match c.threshold {
            Some(w) => format!("E_gate={g} MV/m first admitted R0<0 at {} GHz", num(angular_to_ghz(w))),
            None => format!("E_gate={g} MV/m no admitted R0<0 sample"),
        });
    }
    let p = ctx.path("r0_sweep.csv");
    let mut meta = ctx.sidecar(&p, notes)?;
    meta.params_hashes =
        spec.r0_gates.iter().map(|&g| format!("{:016x}", spec.working_point_at(g).params_hash())).collect();
    write_csv(&p, &t, &meta)?;
    Ok(vec![p])
}

fn residual_sweep(ctx: &Ctx<'_>, use_default_defect: bool) -> Result<Vec<PathBuf>, RunError> {
    let spec = ctx.spec;
    let mut notes = Vec::new();
    let defect = match (spec.defect, use_default_defect) {
        (Some(d), _) => d,
        (None, true) => {
            let d = DefectConfig::below_well(spec.geometry.well_width);
            notes.push(format!(
                "default defect in use: position={:?} nm charge_sign={} screening_length={} nm epsilon_r={}",
                d.position, d.charge_sign, d.screening_length, d.epsilon_r
            ));
            d
        }
        (None, false) => {
            return Err(crate::config::ConfigError::Invalid {
                field: "defect".into(),
                reason: "no defect configured; pass --use-default-defect to use the built-in one".into(),
            }
            .into())
        }
    };
    let solved = ctx.cache.solve(&spec.working_point())?;
    let out = sweeps::residual_sweep(spec, &solved, &defect)?;
    let rep = &out.report;
    let mut t = Table::new(&[
        "omega2_over_2pi_GHz",
        "e2_V_per_m",
        "abs_residual_over_2pi_MHz",
        "delta_omega_c_MHz",
        "delta_omega2_MHz",
        "baseline_MHz",
        "masked",
    ]);
    for s in &rep.scan {
        t.push(vec![
            num(angular_to_ghz(s.omega2)),
            num(s.e2),
            num(angular_to_mhz(s.residual.abs())),
            num(angular_to_mhz(rep.delta_omega_c)),
            num(angular_to_mhz(s.delta_omega2)),
            num(angular_to_mhz(rep.baseline_mono.abs())),
            flag(s.masked),
        ]);
    }
    notes.push(format!("E2 policy: {:?}", spec.residual_e2));
    notes.push(format!(
        "optimum omega2/2pi={} GHz |residual|/2pi={} MHz reduction={}",
        num(angular_to_ghz(rep.omega2_star)),
        num(angular_to_mhz(rep.delta_omega_res.abs())),
        num(rep.reduction)
    ));
    notes.push(format!("charge quadrature order {:?}, last change {}", out.charge.order, num(out.charge.last_change)));
    let p = ctx.path("residual_sweep.csv");
    write_csv(&p, &t, &ctx.sidecar(&p, notes)?)?;
    Ok(vec![p])
}
