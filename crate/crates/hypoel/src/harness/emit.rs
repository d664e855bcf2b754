//! Deterministic artifact emission: atomic writes, CSV/JSON helpers, and
//! the run manifest.

use serde::Serialize;
use std::path::{Path, PathBuf};

use super::config::HarnessError;

/// Write bytes atomically: to a temp file in the target directory, then
/// rename over the final path.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Collects artifact paths as they are written and renders the manifest.
pub struct Emitter {
    dir: PathBuf,
    artifacts: Vec<String>,
}

impl Emitter {
    pub fn new(dir: &Path) -> Result<Emitter, HarnessError> {
        std::fs::create_dir_all(dir)?;
        Ok(Emitter {
            dir: dir.to_path_buf(),
            artifacts: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn artifacts(&self) -> &[String] {
        &self.artifacts
    }

    fn register(&mut self, name: &str) -> PathBuf {
        self.artifacts.push(name.to_string());
        self.dir.join(name)
    }

    /// Pretty-printed JSON artifact.
    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), HarnessError> {
        let path = self.register(name);
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        write_atomic(&path, &bytes)
    }

    /// CSV artifact from a header and string rows (RFC 4180 quoting).
    pub fn csv(
        &mut self,
        name: &str,
        header: &[&str],
        rows: &[Vec<String>],
    ) -> Result<(), HarnessError> {
        let path = self.register(name);
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for row in rows {
            w.write_record(row)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| HarnessError::Runtime(e.to_string()))?;
        write_atomic(&path, &bytes)
    }

    /// Binary snapshot artifact.
    pub fn field_binary(
        &mut self,
        name: &str,
        field: &crate::spectral::GridField,
    ) -> Result<(), HarnessError> {
        let path = self.register(name);
        let mut bytes = Vec::new();
        crate::spectral::write_binary(field, &mut bytes)?;
        write_atomic(&path, &bytes)
    }

    /// CSV dump of a field in the `x1,...,xd,value` dialect.
    pub fn field_csv(
        &mut self,
        name: &str,
        field: &crate::spectral::GridField,
    ) -> Result<(), HarnessError> {
        let path = self.register(name);
        let mut bytes = Vec::new();
        crate::spectral::write_csv(field, &mut bytes)?;
        write_atomic(&path, &bytes)
    }

    /// Write the manifest last; it lists every artifact, the seed, the crate
    /// version, and the wall time. The manifest itself is the one output
    /// whose bytes vary run to run (through the wall time).
    pub fn manifest(
        mut self,
        kind: &str,
        seed: u64,
        wall_time_s: f64,
        error: Option<&str>,
    ) -> Result<(), HarnessError> {
        #[derive(Serialize)]
        struct Manifest<'a> {
            kind: &'a str,
            seed: u64,
            versions: Versions,
            wall_time_s: f64,
            artifacts: Vec<String>,
            #[serde(skip_serializing_if = "Option::is_none")]
            error: Option<&'a str>,
        }
        #[derive(Serialize)]
        struct Versions {
            hypoel: &'static str,
        }
        let mut artifacts = std::mem::take(&mut self.artifacts);
        artifacts.sort();
        let manifest = Manifest {
            kind,
            seed,
            versions: Versions {
                hypoel: env!("CARGO_PKG_VERSION"),
            },
            wall_time_s,
            artifacts,
            error,
        };
        let mut bytes = serde_json::to_vec_pretty(&manifest)?;
        bytes.push(b'\n');
        write_atomic(&self.dir.join("manifest.json"), &bytes)
    }
}

/// Render a float in shortest round-trip form for CSV cells.
pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}
