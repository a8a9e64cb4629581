use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hetgraph::Directedness;
use crate::skipgram::{TrainMode, TrainParams};
use crate::transition::EmParams;
use crate::walker::WalkParams;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    /// `src<TAB>etype<TAB>dst[<TAB>weight]`
    #[default]
    Edgelist,
    /// One RDF triple per line.
    Triples,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Deterministic,
    Parallel,
}

impl From<Mode> for TrainMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Deterministic => TrainMode::Deterministic,
            Mode::Parallel => TrainMode::Parallel,
        }
    }
}

/// Everything a run needs. Defaults reproduce the reference settings:
/// p = q = 0.25, d = 128, r = 1, l = 50, sample ratio 0.01, 10 EM iterations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub input: Option<PathBuf>,
    pub format: InputFormat,
    pub type_rule: Option<String>,
    pub has_weight: bool,
    pub directed: bool,

    pub p: f64,
    pub q: f64,
    pub walk_length: usize,
    pub walks_per_node: usize,
    pub em_iters: usize,
    pub sample_ratio: f64,
    pub uniform_matrix: bool,

    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub lr: f64,
    pub lr_min: f64,

    pub seed: u64,
    /// `None` uses all available cores.
    pub threads: Option<usize>,
    pub mode: Mode,
    pub out_dir: PathBuf,

    pub embeddings: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub positives: Option<PathBuf>,
    pub negatives_file: Option<PathBuf>,
    pub queries: Option<PathBuf>,
    pub topk: usize,
    pub folds: usize,
    pub concat_degrees: bool,
    pub max_per_class: Option<usize>,
    pub candidate_type: Option<String>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let walk = WalkParams::<f64>::default();
        let em = EmParams::<f64>::default();
        let train = TrainParams::<f64>::default();
        PipelineConfig {
            input: None,
            format: InputFormat::Edgelist,
            type_rule: None,
            has_weight: true,
            directed: false,
            p: walk.p,
            q: walk.q,
            walk_length: walk.walk_length,
            walks_per_node: walk.walks_per_node,
            em_iters: em.iterations,
            sample_ratio: em.sample_ratio,
            uniform_matrix: false,
            dim: train.dim,
            window: train.window,
            negatives: train.negatives,
            epochs: train.epochs,
            lr: train.lr,
            lr_min: train.lr_min,
            seed: 0,
            threads: None,
            mode: Mode::Deterministic,
            out_dir: PathBuf::from("edge2vec-out"),
            embeddings: None,
            labels: None,
            positives: None,
            negatives_file: None,
            queries: None,
            topk: 100,
            folds: 10,
            concat_degrees: false,
            max_per_class: None,
            candidate_type: None,
        }
    }
}

impl PipelineConfig {
    pub fn directedness(&self) -> Directedness {
        if self.directed {
            Directedness::Directed
        } else {
            Directedness::Undirected
        }
    }

    pub fn walk_params(&self) -> WalkParams<f64> {
        WalkParams {
            p: self.p,
            q: self.q,
            walk_length: self.walk_length,
            walks_per_node: self.walks_per_node,
        }
    }

    pub fn em_params(&self) -> EmParams<f64> {
        EmParams {
            iterations: self.em_iters,
            sample_ratio: self.sample_ratio,
        }
    }

    pub fn train_params(&self) -> TrainParams<f64> {
        TrainParams {
            dim: self.dim,
            window: self.window,
            negatives: self.negatives,
            epochs: self.epochs,
            lr: self.lr,
            lr_min: self.lr_min,
            mode: self.mode.into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.walk_params().validate()?;
        self.em_params().validate()?;
        self.train_params().validate()?;
        if self.topk == 0 {
            return Err(Error::param("topk must be at least 1"));
        }
        if self.folds < 2 {
            return Err(Error::param("need at least 2 folds"));
        }
        if self.threads == Some(0) {
            return Err(Error::param("threads must be at least 1"));
        }
        Ok(())
    }

    pub fn input_path(&self) -> Result<&Path> {
        self.input.as_deref().ok_or_else(|| Error::param("no input file given"))
    }

    pub fn embeddings_path(&self) -> PathBuf {
        self.embeddings
            .clone()
            .unwrap_or_else(|| self.out_dir.join(artifacts::EMBEDDINGS))
    }
}

/// File names inside the output directory.
pub mod artifacts {
    pub const GRAPH_DIR: &str = "graph";
    pub const STATS: &str = "stats.tsv";
    pub const MATRIX: &str = "matrix.tsv";
    pub const MATRIX_LOG: &str = "matrix_iterations.tsv";
    pub const WALKS: &str = "walks.txt";
    pub const WALK_ETYPES: &str = "walks.etypes";
    pub const EMBEDDINGS: &str = "embeddings.txt";
    pub const EVAL_DIR: &str = "eval";
    pub const MANIFEST: &str = "manifest.json";
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = PipelineConfig::default();
        assert_eq!((c.p, c.q, c.dim, c.walks_per_node, c.walk_length), (0.25, 0.25, 128, 1, 50));
        assert_eq!((c.sample_ratio, c.em_iters), (0.01, 10));
        c.validate().unwrap();
    }

    #[test]
    fn bounds_are_checked() {
        let c = PipelineConfig {
            em_iters: 0,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        let c = PipelineConfig {
            threads: Some(0),
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn serde_round_trip() {
        let c = PipelineConfig {
            input: Some("g.tsv".into()),
            mode: Mode::Parallel,
            ..Default::default()
        };
        let s = serde_json::to_string(&c).unwrap();
        assert!(s.contains("\"parallel\""));
        assert_eq!(serde_json::from_str::<PipelineConfig>(&s).unwrap(), c);
    }
}
