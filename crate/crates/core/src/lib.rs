//! Heterogeneous graph embeddings that learn which edge types a random walk
//! should follow.
//!
//! The pipeline indexes a typed graph ([`hetgraph`]), learns an edge-type
//! transition matrix by alternating biased walks with a correlation refit
//! ([`transition`], [`walker`]), trains skip-gram embeddings on a full walk
//! corpus ([`skipgram`]) and scores them with the protocols in [`evalkit`].
//!
//! All numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix it to `f64`, which the command-line pipeline uses.

pub mod error;
pub mod evalkit;
pub mod hetgraph;
pub mod pipeline;
pub mod rng;
pub mod scalar;
pub mod skipgram;
pub mod transition;
pub mod walker;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Graph = hetgraph::HetGraph<f64>;
pub type TransitionMatrix = transition::TransitionMatrix<f64>;
pub type Embeddings = skipgram::EmbeddingMatrix<f64>;
pub type Embeddings32 = skipgram::EmbeddingMatrix<f32>;
pub type EmbeddingTable = evalkit::EmbeddingTable<f64>;
pub type WalkParams = walker::WalkParams<f64>;
pub type EmParams = transition::EmParams<f64>;
pub type TrainParams = skipgram::TrainParams<f64>;
