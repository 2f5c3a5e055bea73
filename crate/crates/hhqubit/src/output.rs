//! CSV tables, JSON sidecars and the binary Hamiltonian dump.

use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use hhqubit_core::mask::MaskConfig;
use hhqubit_core::{HermitianOperator, C64};
use serde::Serialize;

/// Table with a fixed column order; units live in the column names.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    /// Column names.
    pub header: Vec<String>,
    /// Rows, already formatted.
    pub rows: Vec<Vec<String>>,
}

impl Table {
    /// Empty table with the given columns.
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    /// Appends a row; panics on a width mismatch, which is a programming error.
    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row width");
        self.rows.push(row);
    }
}

/// Fixed-format float used in every CSV cell.
pub fn num(x: f64) -> String {
    format!("{x:.9e}")
}

/// `num` for present values, empty cell otherwise.
pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// 0 or 1.
pub fn flag(b: bool) -> String {
    u8::from(b).to_string()
}

/// Mask thresholds as written into sidecars.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct MaskMeta {
    /// Multiphoton line half-width, units of omega0.
    pub line_width: f64,
    /// Factor standing in for "much greater than".
    pub ratio_factor: f64,
    /// Fast-EDSR band half-width, units of Omega1.
    pub fast_edsr_width: f64,
    /// Largest combination order.
    pub max_order: i32,
}

impl From<&MaskConfig> for MaskMeta {
    fn from(m: &MaskConfig) -> Self {
        MaskMeta {
            line_width: m.line_width,
            ratio_factor: m.ratio_factor,
            fast_edsr_width: m.fast_edsr_width,
            max_order: m.max_order,
        }
    }
}

/// omega0 drift between the run's basis and a smaller reference basis.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ConvergenceStamp {
    /// (nx, ny, nz) of the run.
    pub basis: [usize; 3],
    /// (nx, ny, nz) of the reference.
    pub reference_basis: [usize; 3],
    /// |omega0 / omega0_reference - 1|.
    pub relative_drift: f64,
    /// Drift below 1e-3.
    pub converged: bool,
}

/// Metadata written next to every output file.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Sidecar {
    /// SHA-256 of the canonical run configuration.
    pub run_spec_sha256: String,
    /// Subcommand that produced the file.
    pub subcommand: String,
    /// Data file this sidecar describes.
    pub data_file: String,
    /// Working-point hashes (hex) of every diagonalization used.
    pub params_hashes: Vec<String>,
    /// Mask thresholds.
    pub mask_config: MaskMeta,
    /// Basis convergence stamp, absent when skipped.
    pub basis_convergence: Option<ConvergenceStamp>,
    /// Wall time of the run, s.
    pub wall_time_s: f64,
    /// Worker threads.
    pub workers: usize,
    /// Free-form remarks (policies, excluded regions, defaults in use).
    pub notes: Vec<String>,
    /// Canonical run configuration text.
    pub run_spec: String,
}

/// `<stem>.meta.json` next to `data`.
pub fn sidecar_path(data: &Path) -> PathBuf {
    let stem = data.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    data.with_file_name(format!("{stem}.meta.json"))
}

fn write_sidecar(data: &Path, meta: &Sidecar) -> io::Result<()> {
    let mut f = BufWriter::new(File::create(sidecar_path(data))?);
    serde_json::to_writer_pretty(&mut f, meta)?;
    f.write_all(b"\n")?;
    f.flush()
}

/// Writes the sidecar, then `# run_spec_sha256=...`, the header and the rows.
pub fn write_csv(path: &Path, table: &Table, meta: &Sidecar) -> io::Result<()> {
    write_sidecar(path, meta)?;
    let mut f = BufWriter::new(File::create(path)?);
    writeln!(f, "# run_spec_sha256={}", meta.run_spec_sha256)?;
    let mut w = csv::Writer::from_writer(f);
    w.write_record(&table.header)?;
    for r in &table.rows {
        w.write_record(r)?;
    }
    w.flush()
}

/// Writes the sidecar, then `value` as pretty JSON with the run-configuration hash merged in.
pub fn write_json<T: Serialize>(path: &Path, value: &T, meta: &Sidecar) -> io::Result<()> {
    write_sidecar(path, meta)?;
    let mut v = serde_json::to_value(value)?;
    if let Some(obj) = v.as_object_mut() {
        obj.insert("run_spec_sha256".into(), meta.run_spec_sha256.clone().into());
    }
    let mut f = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut f, &v)?;
    f.write_all(b"\n")?;
    f.flush()
}

/// First bytes of a Hamiltonian dump.
pub const H_DUMP_MAGIC: [u8; 8] = *b"HHQHAM01";

/// Writes `magic, dim: u64, params_hash: u64, dim*dim (re, im) f64` little-endian, row-major.
pub fn write_h_dump(path: &Path, h: &HermitianOperator, params_hash: u64) -> io::Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    let n = h.dim();
    f.write_all(&H_DUMP_MAGIC)?;
    f.write_all(&(n as u64).to_le_bytes())?;
    f.write_all(&params_hash.to_le_bytes())?;
    for i in 0..n {
        for j in 0..n {
            let z = h.get(i, j);
            f.write_all(&z.re.to_le_bytes())?;
            f.write_all(&z.im.to_le_bytes())?;
        }
    }
    f.flush()
}

/// Reads a dump back: (dimension, params hash, row-major entries).
pub fn read_h_dump(path: &Path) -> io::Result<(usize, u64, Vec<C64>)> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    let bad = |m: &str| io::Error::new(io::ErrorKind::InvalidData, m.to_string());
    if bytes.len() < 24 || bytes[..8] != H_DUMP_MAGIC {
        return Err(bad("not a Hamiltonian dump"));
    }
    let word = |k: usize| u64::from_le_bytes(bytes[k..k + 8].try_into().expect("8 bytes"));
    let n = usize::try_from(word(8)).map_err(|_| bad("dimension overflow"))?;
    let hash = word(16);
    if bytes.len() != 24 + 16 * n * n {
        return Err(bad("length does not match the dimension header"));
    }
    let f = |k: usize| f64::from_le_bytes(bytes[k..k + 8].try_into().expect("8 bytes"));
    let entries = (0..n * n).map(|k| C64::new(f(24 + 16 * k), f(32 + 16 * k))).collect();
    Ok((n, hash, entries))
}
