//! Stage-separated pipeline: every stage reads its inputs from and writes
//! its artifacts to the output directory, so stages can be rerun alone.

mod config;
mod manifest;
mod stages;

pub use config::{artifacts, InputFormat, Mode, PipelineConfig};
pub use manifest::{run, sha256_file, RunManifest, StageRecord, StageStatus};
pub use stages::{available_eval_tasks, embed, eval, ingest, matrix, walks, EvalTask, STAGES};
