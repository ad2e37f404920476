use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::error::{CliError, CliResult};

/// Provenance record written next to every CSV as `<csv>.manifest.json`.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: Vec<String>,
    pub config_hash: String,
    pub seed: Option<u64>,
    /// Every seed of a multi-seed run, in order.
    pub seeds: Vec<u64>,
    pub tool_version: &'static str,
    pub started_unix: u64,
    pub wall_clock_seconds: f64,
    pub outputs: Vec<String>,
}

/// Accumulates the inputs that determine a run's output and hashes them.
/// Line endings are normalised so the hash does not depend on platform.
#[derive(Debug)]
pub struct Provenance {
    hasher: Sha256,
    seeds: Vec<u64>,
    started: Instant,
    started_unix: u64,
}

impl Provenance {
    pub fn start(subcommand: &str) -> Self {
        let mut p = Provenance {
            hasher: Sha256::new(),
            seeds: Vec::new(),
            started: Instant::now(),
            started_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        };
        p.add("command", subcommand);
        p
    }

    pub fn add(&mut self, role: &str, content: &str) {
        self.hasher.update(role.as_bytes());
        self.hasher.update([0]);
        self.hasher.update(content.replace("\r\n", "\n").as_bytes());
        self.hasher.update([0]);
    }

    pub fn seed(&mut self, seed: u64) {
        self.seeds.push(seed);
        self.add("seed", &seed.to_string());
    }

    /// Writes the manifest for `csv` and returns its path.
    pub fn finish(&self, csv: &Path) -> CliResult<PathBuf> {
        let manifest = RunManifest {
            command: std::env::args().collect(),
            config_hash: hex::encode(self.hasher.clone().finalize()),
            seed: self.seeds.first().copied(),
            seeds: self.seeds.clone(),
            tool_version: env!("CARGO_PKG_VERSION"),
            started_unix: self.started_unix,
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
            outputs: vec![csv.display().to_string()],
        };
        let mut path = csv.as_os_str().to_owned();
        path.push(".manifest.json");
        let path = PathBuf::from(path);
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serialises");
        fs::write(&path, text + "\n")
            .map_err(|e| CliError::input(format!("cannot write {}: {}", path.display(), e)))?;
        Ok(path)
    }
}
