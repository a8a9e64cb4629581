use std::collections::BTreeMap;
use std::fs;
use std::io::Read;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{artifacts, PipelineConfig};
use super::stages::{self, EvalTask};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StageStatus {
    Completed,
    /// No ground truth was configured.
    Skipped,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    pub status: StageStatus,
    pub seconds: f64,
    /// Artifact path relative to the output directory, and its SHA-256.
    pub artifacts: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub config: PipelineConfig,
    pub stages: Vec<StageRecord>,
}

impl RunManifest {
    /// Checksums of every artifact across stages.
    pub fn checksums(&self) -> BTreeMap<String, String> {
        self.stages
            .iter()
            .flat_map(|s| s.artifacts.iter().map(|(k, v)| (k.clone(), v.clone())))
            .collect()
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| Error::invalid(e.to_string()).in_file(path))
    }
}

/// Lowercase hex SHA-256 of a file's bytes.
pub fn sha256_file(path: &Path) -> Result<String> {
    let io = |source| Error::Io {
        path: path.to_owned(),
        source,
    };
    let mut file = fs::File::open(path).map_err(io)?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 1 << 16];
    loop {
        let n = file.read(&mut buf).map_err(io)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hasher.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

fn record(cfg: &PipelineConfig, name: &str, f: impl FnOnce() -> Result<Option<Vec<std::path::PathBuf>>>) -> Result<StageRecord> {
    let start = Instant::now();
    let produced = f()?;
    let seconds = start.elapsed().as_secs_f64();
    let mut artifacts = BTreeMap::new();
    for p in produced.iter().flatten() {
        let key = p.strip_prefix(&cfg.out_dir).unwrap_or(p).to_string_lossy().replace('\\', "/");
        artifacts.insert(key, sha256_file(p)?);
    }
    log::info!("stage {name} finished in {seconds:.3}s");
    Ok(StageRecord {
        name: name.to_owned(),
        status: if produced.is_some() {
            StageStatus::Completed
        } else {
            StageStatus::Skipped
        },
        seconds,
        artifacts,
    })
}

/// ingest, matrix, walks, embed and (with ground truth) eval, then write
/// `manifest.json`. The first failing stage aborts the run.
pub fn run(cfg: &PipelineConfig) -> Result<RunManifest> {
    cfg.validate()?;
    let mut records = vec![
        record(cfg, "ingest", || stages::ingest(cfg).map(Some))?,
        record(cfg, "matrix", || stages::matrix(cfg).map(Some))?,
        record(cfg, "walks", || stages::walks(cfg).map(Some))?,
    ];
    // embeddings of this run, not a file passed for standalone evaluation
    let cfg = &PipelineConfig {
        embeddings: None,
        ..cfg.clone()
    };
    records.push(record(cfg, "embed", || stages::embed(cfg).map(Some))?);
    records.push(record(cfg, "eval", || {
        let tasks: Vec<EvalTask> = stages::available_eval_tasks(cfg);
        if tasks.is_empty() {
            return Ok(None);
        }
        let mut out = Vec::new();
        for t in tasks {
            out.extend(stages::eval(cfg, t)?);
        }
        Ok(Some(out))
    })?);

    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").to_owned(),
        config: cfg.clone(),
        stages: records,
    };
    let path = cfg.out_dir.join(artifacts::MANIFEST);
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| Error::invalid(e.to_string()))?;
    fs::write(&path, json + "\n").map_err(|source| Error::Io { path, source })?;
    Ok(manifest)
}
