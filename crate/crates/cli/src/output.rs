use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};
use wormmod::densitylab::MeasuredConstants;

use crate::config::Settings;
use crate::failure::Failure;

#[derive(Clone, Debug, Serialize)]
pub struct OutputDigest {
    pub path: String,
    pub sha256: String,
}

/// Written once per run, after every primary output. The only file that
/// carries wall time.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub config: Settings,
    pub seeds: Vec<u64>,
    pub threads: usize,
    pub wall_time_secs: f64,
    pub status: String,
    pub constants: Option<MeasuredConstants>,
    pub outputs: Vec<OutputDigest>,
}

/// Collects primary outputs and their digests for the manifest.
pub struct Outputs {
    dir: PathBuf,
    digests: Vec<OutputDigest>,
    started: Instant,
}

impl Outputs {
    pub fn create(dir: &Path) -> Result<Self, Failure> {
        fs::create_dir_all(dir).map_err(|e| Failure::io(format!("creating {}: {e}", dir.display())))?;
        Ok(Self { dir: dir.to_path_buf(), digests: Vec::new(), started: Instant::now() })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), Failure> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| Failure::io(format!("writing {}: {e}", path.display())))?;
        self.digests.push(OutputDigest { path: name.to_string(), sha256: hex::encode(Sha256::digest(bytes)) });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), Failure> {
        let mut text = serde_json::to_vec_pretty(value).map_err(|e| Failure::io(format!("encoding {name}: {e}")))?;
        text.push(b'\n');
        self.write(name, &text)
    }

    pub fn write_csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<(), Failure> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in rows {
            w.serialize(r).map_err(|e| Failure::io(format!("encoding {name}: {e}")))?;
        }
        let bytes = w.into_inner().map_err(|e| Failure::io(format!("encoding {name}: {e}")))?;
        self.write(name, &bytes)
    }

    pub fn finish(
        self,
        command: &str,
        config: Settings,
        seeds: Vec<u64>,
        status: &str,
        constants: Option<MeasuredConstants>,
    ) -> Result<(), Failure> {
        let manifest = RunManifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            seeds,
            threads: rayon::current_num_threads(),
            wall_time_secs: self.started.elapsed().as_secs_f64(),
            status: status.to_string(),
            constants,
            outputs: self.digests,
        };
        let path = self.dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| Failure::io(e.to_string()))? + "\n";
        fs::write(&path, text).map_err(|e| Failure::io(format!("writing {}: {e}", path.display())))
    }
}
