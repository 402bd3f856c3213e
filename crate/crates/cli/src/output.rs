//! Report writers. Floats go through the shortest round-trip formatting so
//! identical runs produce byte-identical files.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

/// Resolved configuration echoed into every output directory.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub response: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subsamples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub datasets: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pi_thr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub screen_threshold: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gs_mode: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pipeline: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub signal: Option<Vec<usize>>,
    pub out_dir: PathBuf,
}

impl Manifest {
    pub fn new(command: &str, out_dir: &Path) -> Self {
        Manifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            input: None,
            response: None,
            scenario: None,
            seed: None,
            subsamples: None,
            datasets: None,
            jobs: None,
            grid_count: None,
            grid_ratio: None,
            pi_thr: None,
            screen_threshold: None,
            gs_mode: None,
            pipeline: None,
            signal: None,
            out_dir: out_dir.to_path_buf(),
        }
    }
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

/// Formats an optional float; absent values become empty CSV cells.
pub fn opt_cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

pub struct CsvFile {
    writer: csv::Writer<fs::File>,
    path: PathBuf,
}

impl CsvFile {
    pub fn create(path: &Path, header: &[&str]) -> Result<Self> {
        let file = fs::File::create(path)
            .with_context(|| format!("cannot create {}", path.display()))?;
        let mut writer = csv::Writer::from_writer(file);
        writer.write_record(header)?;
        Ok(CsvFile {
            writer,
            path: path.to_path_buf(),
        })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.writer
            .flush()
            .with_context(|| format!("cannot flush {}", self.path.display()))?;
        Ok(())
    }
}
