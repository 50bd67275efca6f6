//! Output files: CSV with a `#` metadata header, 16-bit PGM maps, JSON
//! summaries, and the run manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};
use twinslit_core::biphoton::RealMap2D;

use crate::error::RunError;

pub const DETERMINISM: &str = "bit-identical for any worker count (fixed per-pixel and per-slice reduction order)";

#[derive(Debug, Clone, Serialize)]
pub struct FileRecord {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

/// Header lines shared by every file of a run.
#[derive(Debug, Clone)]
pub struct Metadata {
    pub lines: Vec<(String, String)>,
}

/// Output directory that records a checksum for every file written.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    meta: Metadata,
    files: Vec<FileRecord>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

impl OutputDir {
    pub fn create(root: impl Into<PathBuf>, meta: Metadata) -> Result<Self, RunError> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|e| RunError::io(&root, e))?;
        Ok(Self { root, meta, files: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn files(&self) -> &[FileRecord] {
        &self.files
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), RunError> {
        let path = self.root.join(name);
        atomic_write(&path, bytes)?;
        self.files.push(FileRecord { path: name.into(), bytes: bytes.len() as u64, sha256: sha256_hex(bytes) });
        Ok(())
    }

    /// CSV with `# key: value` metadata lines, a header row, then rows.
    /// Numbers use the shortest text that parses back to the same `f64`;
    /// missing values are written as `NaN`.
    pub fn csv(
        &mut self,
        name: &str,
        extra: &[(&str, String)],
        header: &[&str],
        rows: &[Vec<f64>],
    ) -> Result<(), RunError> {
        let mut s = String::new();
        for (k, v) in self.meta.lines.iter().map(|(k, v)| (k.as_str(), v)).chain(extra.iter().map(|(k, v)| (*k, v))) {
            let _ = writeln!(s, "# {k}: {v}");
        }
        s.push_str(&header.join(","));
        s.push('\n');
        for row in rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        self.write(name, s.as_bytes())
    }

    /// Binary 16-bit PGM, big-endian, linearly scaled to the map maximum.
    /// The first row is the highest `q_y`.
    pub fn pgm(&mut self, name: &str, map: &RealMap2D) -> Result<(), RunError> {
        let g = map.grid;
        let n = g.n;
        let max = map.max();
        let mut out = Vec::with_capacity(n * n * 2 + 256);
        out.extend_from_slice(b"P5\n");
        let sellmeier = self.meta.lines.iter().find(|(k, _)| k == "sellmeier").map(|(_, v)| v.as_str()).unwrap_or("");
        out.extend_from_slice(
            format!(
                "# q_x [{}, {}] q_y [{}, {}] rad/um; value = 65535 * rate / {max}; sellmeier: {sellmeier}\n",
                g.qx(0),
                g.qx(n - 1),
                g.qy(0),
                g.qy(n - 1)
            )
            .as_bytes(),
        );
        out.extend_from_slice(format!("{n} {n}\n65535\n").as_bytes());
        for iy in (0..n).rev() {
            for ix in 0..n {
                let v = if max > 0.0 { (map.at(ix, iy) / max * 65535.0).round().clamp(0.0, 65535.0) as u16 } else { 0 };
                out.extend_from_slice(&v.to_be_bytes());
            }
        }
        self.write(name, &out)
    }

    /// Map as `(x-index, y-index, value)` rows, y-index 0 at the lowest `q_y`.
    pub fn map_csv(&mut self, name: &str, map: &RealMap2D) -> Result<(), RunError> {
        let g = map.grid;
        let n = g.n;
        let extra = [
            ("q_x", format!("q_x(ix) = {} + ix * {}", g.qx(0), g.dq())),
            ("q_y", format!("q_y(iy) = {} + iy * {}", g.qy(0), g.dq())),
        ];
        let rows: Vec<Vec<f64>> = (0..n * n).map(|p| vec![(p % n) as f64, (p / n) as f64, map.data[p]]).collect();
        self.csv(name, &extra, &["ix", "iy", "value"], &rows)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), RunError> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| RunError::io(self.root.join(name), e.into()))?;
        bytes.push(b'\n');
        self.write(name, &bytes)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub software: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config_sha256: String,
    pub config: String,
    pub started_unix_s: u64,
    pub elapsed_s: f64,
    pub workers: usize,
    pub determinism: &'static str,
    pub outputs: Vec<FileRecord>,
}

impl RunManifest {
    /// Written last, through a temporary file and a rename.
    pub fn write(&self, dir: &Path) -> Result<(), RunError> {
        let mut bytes = serde_json::to_vec_pretty(self).map_err(|e| RunError::io(dir, e.into()))?;
        bytes.push(b'\n');
        atomic_write(&dir.join("manifest.json"), &bytes)
    }
}

fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), RunError> {
    let tmp = path.with_extension("partial");
    fs::write(&tmp, bytes).map_err(|e| RunError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| RunError::io(path, e))
}
