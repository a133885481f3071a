//! File formats: covariance-matrix JSON/CSV, channel JSON, per-setting
//! sample CSVs with a metadata file, and the sweep and error-surface tables.
//!
//! Every writer goes through [`write_atomic`], so readers never observe a
//! half-written file.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::channel::GaussianChannel;
use crate::error::{Error, Result};
use crate::numcore::Matrix;
use crate::state::CovarianceMatrix;
use crate::synth::{ClassSpec, Crossing, Dataset, SurfacePoint, SweepRow};
use crate::tomography::{MeasurementSetting, SettingRecord};

pub const MODE_ORDER: [&str; 4] = ["xA", "pA", "xB", "pB"];
pub const UNITS: &str = "vacuum=identity";
pub const SAMPLE_HEADER: [&str; 4] = ["setting_alice_deg", "setting_bob_deg", "alice", "bob"];
pub const SWEEP_HEADER: [&str; 6] = ["class", "mu", "r", "log_negativity", "q_lower_bound", "fidelity"];
pub const SURFACE_HEADER: [&str; 5] = ["phi", "theta", "xi", "alpha", "percent_error"];
pub const METADATA_FILE: &str = "metadata.json";
pub const VACUUM_FILE: &str = "vacuum.csv";

/// File name of the `k`-th setting (0-based) in a dataset directory.
pub fn setting_file(k: usize) -> String {
    format!("s{}.csv", k + 1)
}

/// Writes `bytes` to a temporary file next to `path`, then renames it over.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct CmFile {
    #[serde(default)]
    order: Option<Vec<String>>,
    #[serde(default)]
    units: Option<String>,
    matrix: Vec<Vec<f64>>,
}

fn rows_from_vec(rows: Vec<Vec<f64>>) -> Result<[[f64; 4]; 4]> {
    if rows.len() != 4 || rows.iter().any(|r| r.len() != 4) {
        return Err(Error::Parse(format!(
            "expected a 4x4 matrix, got {} rows with lengths {:?}",
            rows.len(),
            rows.iter().map(Vec::len).collect::<Vec<_>>()
        )));
    }
    let mut out = [[0.0; 4]; 4];
    for (i, r) in rows.into_iter().enumerate() {
        out[i].copy_from_slice(&r);
    }
    Ok(out)
}

/// Parses a CM from JSON text.
pub fn parse_cm_json(text: &str) -> Result<CovarianceMatrix> {
    if text.trim_start().starts_with('[') {
        let rows: Vec<Vec<f64>> =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("covariance JSON: {e}")))?;
        return CovarianceMatrix::new(Matrix(rows_from_vec(rows)?));
    }
    let f: CmFile = serde_json::from_str(text).map_err(|e| Error::Parse(format!("covariance JSON: {e}")))?;
    if let Some(order) = &f.order {
        if order.iter().map(String::as_str).ne(MODE_ORDER) {
            return Err(Error::Parse(format!("unsupported mode order {order:?}; expected {MODE_ORDER:?}")));
        }
    }
    if let Some(units) = &f.units {
        if units != UNITS {
            return Err(Error::Parse(format!("unsupported units '{units}'; expected '{UNITS}'")));
        }
    }
    CovarianceMatrix::new(Matrix(rows_from_vec(f.matrix)?))
}

/// Parses a bare 4×4 CSV (no header; commas or whitespace).
pub fn parse_cm_csv(text: &str) -> Result<CovarianceMatrix> {
    let rows = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            l.split(|c: char| c == ',' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .map(|t| t.parse::<f64>().map_err(|e| Error::Parse(format!("'{t}': {e}"))))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    CovarianceMatrix::new(Matrix(rows_from_vec(rows)?))
}

/// Reads a CM from a JSON object, a bare JSON array of rows, or CSV.
pub fn read_cm(path: &Path) -> Result<CovarianceMatrix> {
    let text = fs::read_to_string(path)?;
    if text.trim_start().starts_with(['{', '[']) {
        parse_cm_json(&text)
    } else {
        parse_cm_csv(&text)
    }
}

pub fn cm_to_json(g: &CovarianceMatrix) -> Result<String> {
    let f = CmFile {
        order: Some(MODE_ORDER.iter().map(|s| s.to_string()).collect()),
        units: Some(UNITS.into()),
        matrix: g.rows().iter().map(|r| r.to_vec()).collect(),
    };
    Ok(serde_json::to_string_pretty(&f)? + "\n")
}

pub fn write_cm(path: &Path, g: &CovarianceMatrix) -> Result<()> {
    write_atomic(path, cm_to_json(g)?.as_bytes())
}

pub fn read_channel(path: &Path) -> Result<GaussianChannel> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("channel JSON: {e}")))
}

/// Serializes one setting record as CSV.
pub fn record_to_csv(rec: &SettingRecord) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::with_capacity(rec.len() * 48));
    w.write_record(SAMPLE_HEADER)?;
    let s = rec.setting();
    for (a, b) in rec.alice().iter().zip(rec.bob()) {
        w.serialize((s.alice_deg, s.bob_deg, a, b))?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

pub fn write_record(path: &Path, rec: &SettingRecord) -> Result<()> {
    write_atomic(path, &record_to_csv(rec)?)
}

/// Reads one setting file. Every row must carry the same angles.
pub fn read_record(path: &Path) -> Result<SettingRecord> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if header.iter().map(String::as_str).ne(SAMPLE_HEADER) {
        return Err(Error::Parse(format!(
            "{}: header {header:?}, expected {SAMPLE_HEADER:?}",
            path.display()
        )));
    }
    let mut setting: Option<MeasurementSetting> = None;
    let (mut alice, mut bob) = (Vec::new(), Vec::new());
    for (line, row) in r.deserialize::<(f64, f64, f64, f64)>().enumerate() {
        let (sa, sb, a, b) = row.map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        match setting {
            None => setting = Some(MeasurementSetting::new(sa, sb)),
            Some(s) if s.alice_deg != sa || s.bob_deg != sb => {
                return Err(Error::Parse(format!(
                    "{}: row {} has setting ({sa}, {sb}), file started with ({}, {})",
                    path.display(),
                    line + 2,
                    s.alice_deg,
                    s.bob_deg
                )))
            }
            Some(_) => {}
        }
        alice.push(a);
        bob.push(b);
    }
    let setting = setting.ok_or_else(|| Error::Parse(format!("{}: no samples", path.display())))?;
    SettingRecord::new(setting, alice, bob)
}

/// Per-file entry in the dataset metadata.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FileEntry {
    pub file: String,
    pub alice_deg: f64,
    pub bob_deg: f64,
    pub count: usize,
}

/// Describes a simulated (or recorded) dataset directory.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Metadata {
    pub tool: String,
    pub version: String,
    pub seed: Option<u64>,
    pub settings: Vec<FileEntry>,
    pub vacuum: Option<FileEntry>,
    #[serde(default)]
    pub detector_gains: Option<(f64, f64)>,
    #[serde(default)]
    pub spec: Option<ClassSpec>,
    #[serde(default)]
    pub ground_truth: Option<[[f64; 4]; 4]>,
}

fn entry(file: String, rec: &SettingRecord) -> FileEntry {
    let s = rec.setting();
    FileEntry { file, alice_deg: s.alice_deg, bob_deg: s.bob_deg, count: rec.len() }
}

/// Writes `s1.csv`..`s5.csv`, `vacuum.csv` and `metadata.json`.
pub fn write_dataset(
    dir: &Path,
    data: &Dataset,
    seed: Option<u64>,
    gains: Option<(f64, f64)>,
    spec: Option<ClassSpec>,
    truth: Option<&CovarianceMatrix>,
) -> Result<Metadata> {
    fs::create_dir_all(dir)?;
    let mut settings = Vec::new();
    for (k, rec) in data.records.iter().enumerate() {
        let name = setting_file(k);
        write_record(&dir.join(&name), rec)?;
        settings.push(entry(name, rec));
    }
    write_record(&dir.join(VACUUM_FILE), &data.vacuum)?;
    let meta = Metadata {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed,
        settings,
        vacuum: Some(entry(VACUUM_FILE.into(), &data.vacuum)),
        detector_gains: gains,
        spec,
        ground_truth: truth.map(CovarianceMatrix::rows),
    };
    write_atomic(&dir.join(METADATA_FILE), (serde_json::to_string_pretty(&meta)? + "\n").as_bytes())?;
    Ok(meta)
}

/// Loads a dataset directory. The metadata file is optional; without it
/// the five setting files and the vacuum reference are found by name.
pub fn read_dataset(dir: &Path) -> Result<(Dataset, Option<Metadata>)> {
    if !dir.is_dir() {
        return Err(Error::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("sample directory {} not found", dir.display()),
        )));
    }
    let meta_path = dir.join(METADATA_FILE);
    let meta: Option<Metadata> = if meta_path.exists() {
        let text = fs::read_to_string(&meta_path)?;
        Some(serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", meta_path.display())))?)
    } else {
        None
    };
    let names: Vec<String> = match &meta {
        Some(m) if !m.settings.is_empty() => m.settings.iter().map(|e| e.file.clone()).collect(),
        _ => (0..5).map(setting_file).collect(),
    };
    let records = names
        .iter()
        .map(|n| read_record(&dir.join(n)))
        .collect::<Result<Vec<_>>>()?;
    let vac_name = meta
        .as_ref()
        .and_then(|m| m.vacuum.as_ref().map(|v| v.file.clone()))
        .unwrap_or_else(|| VACUUM_FILE.to_string());
    let vacuum = read_record(&dir.join(vac_name))?;
    Ok((Dataset { records, vacuum }, meta))
}

pub fn sweep_to_csv(rows: &[SweepRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SWEEP_HEADER)?;
    for r in rows {
        w.serialize((r.class.to_string(), r.mu, r.r, r.log_negativity, r.q_lower_bound, r.fidelity))?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

pub fn surface_to_csv(points: &[SurfacePoint]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SURFACE_HEADER)?;
    for p in points {
        w.serialize((p.phi, p.theta, p.xi, p.alpha, p.percent_error))?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// Plain-text table of zero crossings.
pub fn crossing_table(crossings: &[Crossing]) -> String {
    let mut out = String::from("class     mu          r*     E_N*\n");
    for c in crossings {
        let f = |v: Option<f64>| v.map_or_else(|| "none".to_string(), |v| format!("{v:.5}"));
        out.push_str(&format!("{:<5} {:>6.3} {:>11} {:>8}\n", c.class, c.mu, f(c.r), f(c.log_negativity)));
    }
    out
}
