use std::collections::BTreeMap;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::hetgraph::{HetGraph, Vocab};
use crate::rng;
use crate::scalar::Scalar;
use crate::skipgram::EmbeddingMatrix;

/// Embedding matrix addressed by node label.
#[derive(Clone, Debug)]
pub struct EmbeddingTable<T> {
    pub vocab: Vocab,
    pub matrix: EmbeddingMatrix<T>,
}

impl<T: Scalar> EmbeddingTable<T> {
    pub fn new(labels: Vec<String>, matrix: EmbeddingMatrix<T>) -> Result<Self> {
        if labels.len() != matrix.rows() {
            return Err(Error::LengthMismatch(labels.len(), matrix.rows()));
        }
        Ok(EmbeddingTable {
            vocab: Vocab::from_labels(labels)?,
            matrix,
        })
    }

    pub fn index(&self, label: &str) -> Result<usize> {
        self.vocab
            .get(label)
            .ok_or_else(|| Error::UnknownNode(label.to_owned()))
    }

    pub fn vector(&self, label: &str) -> Result<&[T]> {
        Ok(self.matrix.row(self.index(label)?))
    }
}

/// Feature rows with integer class labels in `0..classes`.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledInstances<T> {
    pub features: Vec<Vec<T>>,
    pub labels: Vec<usize>,
    pub classes: usize,
}

impl<T: Scalar> LabeledInstances<T> {
    pub fn new(features: Vec<Vec<T>>, labels: Vec<usize>, classes: usize) -> Result<Self> {
        if features.len() != labels.len() {
            return Err(Error::LengthMismatch(features.len(), labels.len()));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
            return Err(Error::invalid(format!("label {bad} outside 0..{classes}")));
        }
        if classes < 2 {
            return Err(Error::invalid("need at least two classes"));
        }
        Ok(LabeledInstances {
            features,
            labels,
            classes,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn subset(&self, idx: &[usize]) -> Self {
        LabeledInstances {
            features: idx.iter().map(|&i| self.features[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            classes: self.classes,
        }
    }
}

/// Embedding row of each node, optionally followed by the node's per-edge-type
/// degree vector.
pub fn node_features<T: Scalar>(
    table: &EmbeddingTable<T>,
    nodes: &[&str],
    graph: Option<&HetGraph<T>>,
    concat_edge_type_degrees: bool,
) -> Result<Vec<Vec<T>>> {
    let graph = match (concat_edge_type_degrees, graph) {
        (true, None) => return Err(Error::param("edge-type degree features need the graph")),
        (true, g) => g,
        (false, _) => None,
    };
    nodes
        .iter()
        .map(|&label| {
            let mut row = table.vector(label)?.to_vec();
            if let Some(g) = graph {
                let v = g.node_index(label)?;
                row.extend(
                    g.edge_type_degrees(v)?
                        .into_iter()
                        .map(|c| T::from_usize(c).expect("count fits in scalar")),
                );
            }
            Ok(row)
        })
        .collect()
}

/// `f_a - f_b`.
pub fn pair_features<T: Scalar>(table: &EmbeddingTable<T>, a: &str, b: &str) -> Result<Vec<T>> {
    let (fa, fb) = (table.vector(a)?, table.vector(b)?);
    Ok(fa.iter().zip(fb).map(|(&x, &y)| x - y).collect())
}

/// Equal-size random sample from every class: the smallest class size,
/// optionally capped. Returns sorted instance indices.
pub fn balanced_sample(labels: &[usize], cap: Option<usize>, seed: u64) -> Vec<usize> {
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        by_class.entry(l).or_default().push(i);
    }
    let mut size = by_class.values().map(Vec::len).min().unwrap_or(0);
    if let Some(cap) = cap {
        size = size.min(cap);
    }
    let mut rng = rng::stream(seed, &[]);
    let mut out: Vec<usize> = by_class
        .into_values()
        .flat_map(|mut members| {
            members.shuffle(&mut rng);
            members.truncate(size);
            members
        })
        .collect();
    out.sort_unstable();
    out
}
