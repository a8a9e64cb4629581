//! Evaluation protocols: node classification, pair (link) prediction,
//! top-K retrieval, similarity search and 2-D PCA projection.

mod features;
mod linear;
mod metrics;
mod pca;
mod ranking;

pub use features::{balanced_sample, node_features, pair_features, EmbeddingTable, LabeledInstances};
pub use linear::{train_linear, LinearConfig, LinearModel, LossKind};
pub use metrics::{
    auroc, classification_metrics, cross_validate, stratified_folds, ClassificationMetrics, CvReport, FoldReport,
};
pub use pca::{pca_project_2d, Pca2d};
pub use ranking::{cosine, cosine_topk, ranking_metrics, QueryMetrics, RankingReport};
