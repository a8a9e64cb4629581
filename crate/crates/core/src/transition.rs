//! Edge-type transition matrix learned by alternating walk generation with
//! a correlation refit of edge-type occurrence counts.

use std::io::{BufRead, Write};

use rand::seq::index;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hetgraph::{HetGraph, Vocab};
use crate::rng;
use crate::scalar::Scalar;
use crate::walker::{generate_corpus, WalkCorpus, WalkParams};

/// Square matrix of edge-type to edge-type transition weights.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionMatrix<T> {
    labels: Vec<String>,
    values: Vec<T>,
}

impl<T: Scalar> TransitionMatrix<T> {
    pub fn uniform(labels: Vec<String>, value: T) -> Self {
        let m = labels.len();
        TransitionMatrix {
            labels,
            values: vec![value; m * m],
        }
    }

    /// The all-ones starting matrix.
    pub fn ones(labels: Vec<String>) -> Self {
        Self::uniform(labels, T::one())
    }

    pub fn from_rows(labels: Vec<String>, rows: Vec<Vec<T>>) -> Result<Self> {
        let m = labels.len();
        if rows.len() != m || rows.iter().any(|r| r.len() != m) {
            return Err(Error::invalid(format!("transition matrix must be {m}x{m}")));
        }
        Ok(TransitionMatrix {
            labels,
            values: rows.into_iter().flatten().collect(),
        })
    }

    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    #[inline]
    pub fn get(&self, from: usize, to: usize) -> T {
        self.values[from * self.size() + to]
    }

    #[inline]
    pub fn row(&self, from: usize) -> &[T] {
        let m = self.size();
        &self.values[from * m..(from + 1) * m]
    }

    pub fn set(&mut self, from: usize, to: usize, value: T) {
        let m = self.size();
        self.values[from * m + to] = value;
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn is_symmetric(&self) -> bool {
        let m = self.size();
        (0..m).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| (a - b).abs())
            .fold(T::zero(), T::max)
    }

    /// Multiply every entry by `factor`.
    pub fn scaled(&self, factor: T) -> Self {
        TransitionMatrix {
            labels: self.labels.clone(),
            values: self.values.iter().map(|&v| v * factor).collect(),
        }
    }

    /// Reorder rows and columns to follow `vocab`; fails unless both carry
    /// exactly the same edge-type labels.
    pub fn aligned_to(&self, vocab: &Vocab) -> Result<Self> {
        if vocab.len() != self.size() {
            return Err(Error::invalid(format!(
                "matrix has {} edge types, graph has {}",
                self.size(),
                vocab.len()
            )));
        }
        let own = Vocab::from_labels(self.labels.iter().cloned())?;
        let perm = vocab
            .labels()
            .iter()
            .map(|l| own.get(l).ok_or_else(|| Error::UnknownEdgeType(l.clone())))
            .collect::<Result<Vec<_>>>()?;
        let m = self.size();
        let mut values = Vec::with_capacity(m * m);
        for &i in &perm {
            for &j in &perm {
                values.push(self.get(i, j));
            }
        }
        Ok(TransitionMatrix {
            labels: vocab.labels().to_vec(),
            values,
        })
    }

    /// TSV: a header row of labels, then `label` followed by the row values.
    /// Values use shortest round-trip formatting.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{}", self.labels.join("\t"))?;
        for (i, label) in self.labels.iter().enumerate() {
            write!(out, "{label}")?;
            for v in self.row(i) {
                write!(out, "\t{v}")?;
            }
            writeln!(out)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_tsv<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines.next().ok_or_else(|| Error::invalid("empty matrix file"))??;
        let labels: Vec<String> = header.split('\t').map(str::to_owned).collect();
        let m = labels.len();
        let mut rows = Vec::with_capacity(m);
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let lineno = i + 2;
            if fields.len() != m + 1 {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("expected {} fields, found {}", m + 1, fields.len()),
                });
            }
            if rows.len() >= m || fields[0] != labels[rows.len()] {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("unexpected row label `{}`", fields[0]),
                });
            }
            let row = fields[1..]
                .iter()
                .map(|f| {
                    f.parse::<T>().map_err(|_| Error::Parse {
                        line: lineno,
                        msg: format!("`{f}` is not a number"),
                    })
                })
                .collect::<Result<Vec<T>>>()?;
            rows.push(row);
        }
        Self::from_rows(labels, rows)
    }
}

/// Per-walk occurrence counts of each edge type: row `i` is the count vector
/// of edge type `i`, column `k` is walk `k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeTypeCounts {
    types: usize,
    walks: usize,
    counts: Vec<u32>,
}

impl EdgeTypeCounts {
    pub fn from_rows(rows: Vec<Vec<u32>>) -> Result<Self> {
        let walks = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != walks) {
            return Err(Error::invalid("count rows differ in length"));
        }
        Ok(EdgeTypeCounts {
            types: rows.len(),
            walks,
            counts: rows.into_iter().flatten().collect(),
        })
    }

    pub fn num_types(&self) -> usize {
        self.types
    }

    pub fn num_walks(&self) -> usize {
        self.walks
    }

    pub fn row(&self, etype: usize) -> &[u32] {
        &self.counts[etype * self.walks..(etype + 1) * self.walks]
    }

    pub fn get(&self, etype: usize, walk: usize) -> u32 {
        self.counts[etype * self.walks + walk]
    }
}

pub fn edge_type_count_vectors(corpus: &WalkCorpus, num_types: usize) -> Result<EdgeTypeCounts> {
    if corpus.edge_walks.is_empty() {
        return Err(Error::invalid("corpus has no walks"));
    }
    let walks = corpus.edge_walks.len();
    let mut counts = vec![0u32; num_types * walks];
    for (k, walk) in corpus.edge_walks.iter().enumerate() {
        for &t in walk {
            if t >= num_types {
                return Err(Error::invalid(format!("edge type {t} out of range")));
            }
            counts[t * walks + k] += 1;
        }
    }
    Ok(EdgeTypeCounts {
        types: num_types,
        walks,
        counts,
    })
}

/// Pearson correlation with population moments.
///
/// Constant vectors have no defined correlation: identical vectors give 1,
/// otherwise a zero-variance input gives 0.
pub fn pearson<T: Scalar>(a: &[T], b: &[T]) -> Result<T> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    if a.len() < 2 {
        return Err(Error::param("correlation needs at least 2 observations"));
    }
    if a == b {
        return Ok(T::one());
    }
    let n = T::from_usize(a.len()).expect("length fits in scalar");
    let mean_a = a.iter().copied().sum::<T>() / n;
    let mean_b = b.iter().copied().sum::<T>() / n;
    let (mut cov, mut var_a, mut var_b) = (T::zero(), T::zero(), T::zero());
    for (&x, &y) in a.iter().zip(b) {
        let (dx, dy) = (x - mean_a, y - mean_b);
        cov += dx * dy;
        var_a += dx * dx;
        var_b += dy * dy;
    }
    if var_a == T::zero() || var_b == T::zero() {
        return Ok(T::zero());
    }
    let r = cov / (var_a.sqrt() * var_b.sqrt());
    Ok(r.max(-T::one()).min(T::one()))
}

pub fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

/// Refit: `M[i][j] = sigmoid(pearson(v_i, v_j))`.
pub fn update_matrix<T: Scalar>(counts: &EdgeTypeCounts, labels: &[String]) -> Result<TransitionMatrix<T>> {
    if labels.len() != counts.num_types() {
        return Err(Error::LengthMismatch(labels.len(), counts.num_types()));
    }
    if counts.num_walks() < 2 {
        return Err(Error::param("matrix update needs at least 2 walks"));
    }
    let m = counts.num_types();
    let rows: Vec<Vec<T>> = (0..m)
        .map(|i| counts.row(i).iter().map(|&c| T::of(f64::from(c))).collect())
        .collect();
    let upper: Vec<Vec<T>> = (0..m)
        .into_par_iter()
        .map(|i| {
            (i..m)
                .map(|j| pearson(&rows[i], &rows[j]).map(sigmoid))
                .collect::<Result<Vec<T>>>()
        })
        .collect::<Result<_>>()?;
    let mut matrix = TransitionMatrix::ones(labels.to_vec());
    for (i, row) in upper.into_iter().enumerate() {
        for (offset, v) in row.into_iter().enumerate() {
            matrix.set(i, i + offset, v);
            matrix.set(i + offset, i, v);
        }
    }
    Ok(matrix)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EmParams<T> {
    pub iterations: usize,
    /// Fraction of nodes used as walk starts in each iteration.
    pub sample_ratio: T,
}

impl<T: Scalar> Default for EmParams<T> {
    fn default() -> Self {
        EmParams {
            iterations: 10,
            sample_ratio: T::of(0.01),
        }
    }
}

impl<T: Scalar> EmParams<T> {
    pub fn validate(&self) -> Result<()> {
        if self.iterations < 1 {
            return Err(Error::param("EM iterations must be at least 1"));
        }
        if !(self.sample_ratio > T::zero() && self.sample_ratio <= T::one()) {
            return Err(Error::param(format!("sample ratio must be in (0, 1], got {}", self.sample_ratio)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct EmRun<T> {
    pub matrix: TransitionMatrix<T>,
    /// Corpus generated in the final iteration.
    pub corpus: WalkCorpus,
    /// Matrix after each iteration.
    pub history: Vec<TransitionMatrix<T>>,
    /// `max |M_t - M_{t-1}|` for each iteration, `M_0` being all ones.
    pub max_changes: Vec<T>,
}

fn sample_size(nodes: usize, ratio: f64, walks_per_node: usize) -> usize {
    let mut k = ((ratio * nodes as f64).ceil() as usize).clamp(1, nodes);
    // the refit needs two walks
    if k * walks_per_node < 2 {
        k = nodes.min(2);
    }
    k
}

/// Learn the transition matrix. Each iteration draws a fresh uniform sample
/// of start nodes, walks with the current matrix and refits the matrix from
/// those walks.
pub fn train_transition_matrix<T: Scalar>(
    graph: &HetGraph<T>,
    em: &EmParams<T>,
    walk: &WalkParams<T>,
    seed: u64,
) -> Result<EmRun<T>> {
    em.validate()?;
    walk.validate()?;
    let labels = graph.edge_types().labels().to_vec();
    let n = graph.num_nodes();
    let k = sample_size(n, em.sample_ratio.as_f64(), walk.walks_per_node);

    let mut matrix = TransitionMatrix::ones(labels.clone());
    let mut history = Vec::with_capacity(em.iterations);
    let mut max_changes = Vec::with_capacity(em.iterations);
    let mut corpus = WalkCorpus::default();
    for iter in 0..em.iterations {
        let mut sampler = rng::stream(seed, &[0, iter as u64]);
        let mut starts = index::sample(&mut sampler, n, k).into_vec();
        starts.sort_unstable();
        corpus = generate_corpus(graph, &matrix, &starts, walk, rng::mix(seed, &[1, iter as u64]))?;
        let counts = edge_type_count_vectors(&corpus, labels.len())?;
        let next = update_matrix(&counts, &labels)?;
        let change = next.max_abs_diff(&matrix);
        log::debug!("transition iteration {}: max change {}", iter + 1, change);
        max_changes.push(change);
        history.push(next.clone());
        matrix = next;
    }
    Ok(EmRun {
        matrix,
        corpus,
        history,
        max_changes,
    })
}
