use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

impl FileDigest {
    fn of(path: &Path, bytes: &[u8]) -> Self {
        Self { path: path.display().to_string(), sha256: hex::encode(Sha256::digest(bytes)), bytes: bytes.len() as u64 }
    }
}

/// Provenance record written next to every output.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: Vec<String>,
    pub subcommand: &'static str,
    pub seeds: BTreeMap<String, u64>,
    pub parameters: BTreeMap<String, serde_json::Value>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub warnings: Vec<String>,
    pub started_at: String,
    pub wall_clock_seconds: f64,
}

/// Collects inputs, outputs and parameters of one run.
pub struct Run {
    manifest: RunManifest,
    clock: Instant,
}

impl Run {
    pub fn start(subcommand: &'static str) -> Self {
        Self {
            manifest: RunManifest {
                tool: "netmark",
                version: env!("CARGO_PKG_VERSION"),
                command: std::env::args().collect(),
                subcommand,
                seeds: BTreeMap::new(),
                parameters: BTreeMap::new(),
                inputs: Vec::new(),
                outputs: Vec::new(),
                warnings: Vec::new(),
                started_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
                wall_clock_seconds: 0.0,
            },
            clock: Instant::now(),
        }
    }

    pub fn seed(&mut self, name: &str, seed: u64) {
        self.manifest.seeds.insert(name.to_string(), seed);
    }

    pub fn param(&mut self, name: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).expect("parameter serialises");
        self.manifest.parameters.insert(name.to_string(), v);
    }

    pub fn warn(&mut self, msg: String) {
        log::warn!("{msg}");
        self.manifest.warnings.push(msg);
    }

    /// Hash an input file.
    pub fn input(&mut self, path: &Path) -> Result<()> {
        let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        self.manifest.inputs.push(FileDigest::of(path, &bytes));
        Ok(())
    }

    /// Write an output file and record its digest.
    pub fn output(&mut self, path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
        let bytes = contents.as_ref();
        fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.manifest.outputs.push(FileDigest::of(path, bytes));
        Ok(())
    }

    /// Write the manifest to `path`, or next to the first output.
    pub fn finish(mut self, path: Option<&Path>) -> Result<Option<PathBuf>> {
        let target = match (path, self.manifest.outputs.first()) {
            (Some(p), _) => p.to_path_buf(),
            (None, Some(first)) => PathBuf::from(format!("{}.manifest.json", first.path)),
            (None, None) => return Ok(None),
        };
        self.manifest.wall_clock_seconds = self.clock.elapsed().as_secs_f64();
        let mut text = serde_json::to_string_pretty(&self.manifest)?;
        text.push('\n');
        fs::write(&target, text).with_context(|| format!("writing {}", target.display()))?;
        Ok(Some(target))
    }
}
