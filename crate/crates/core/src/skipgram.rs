//! Skip-gram with negative sampling over walk corpora, trained by SGD on a
//! single shared embedding table.

use std::io::{BufRead, Write};
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng;
use crate::scalar::{dot, Scalar};
use crate::transition::sigmoid;
use crate::walker::WalkCorpus;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum TrainMode {
    /// Single worker, canonical pair order, bit-reproducible.
    #[default]
    Deterministic,
    /// Lock-free concurrent updates; not reproducible.
    Parallel,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainParams<T> {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub lr: T,
    pub lr_min: T,
    pub mode: TrainMode,
}

impl<T: Scalar> Default for TrainParams<T> {
    fn default() -> Self {
        TrainParams {
            dim: 128,
            window: 10,
            negatives: 5,
            epochs: 5,
            lr: T::of(0.025),
            lr_min: T::of(1e-4),
            mode: TrainMode::Deterministic,
        }
    }
}

impl<T: Scalar> TrainParams<T> {
    pub fn validate(&self) -> Result<()> {
        if self.dim < 1 || self.window < 1 || self.negatives < 1 || self.epochs < 1 {
            return Err(Error::param("dim, window, negatives and epochs must all be at least 1"));
        }
        if !(self.lr > self.lr_min && self.lr_min > T::zero()) {
            return Err(Error::param(format!(
                "learning rates must satisfy lr > lr_min > 0 (got {} and {})",
                self.lr, self.lr_min
            )));
        }
        Ok(())
    }
}

/// Dense row-major `rows x dim` matrix; row `i` is node `i`'s vector.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingMatrix<T> {
    rows: usize,
    dim: usize,
    data: Vec<T>,
}

impl<T: Scalar> EmbeddingMatrix<T> {
    pub fn zeros(rows: usize, dim: usize) -> Self {
        EmbeddingMatrix {
            rows,
            dim,
            data: vec![T::zero(); rows * dim],
        }
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::invalid("embedding rows differ in length"));
        }
        Ok(EmbeddingMatrix {
            rows: rows.len(),
            dim,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// word2vec text format: `rows dim` header, then `label v1 .. vd` with
    /// six decimals.
    pub fn write_word2vec<W: Write>(&self, labels: &[String], mut out: W) -> Result<()> {
        if labels.len() != self.rows {
            return Err(Error::LengthMismatch(labels.len(), self.rows));
        }
        writeln!(out, "{} {}", self.rows, self.dim)?;
        for (i, label) in labels.iter().enumerate() {
            write!(out, "{label}")?;
            for v in self.row(i) {
                write!(out, " {v:.6}")?;
            }
            writeln!(out)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_word2vec<R: BufRead>(input: R) -> Result<(Vec<String>, Self)> {
        let mut lines = input.lines();
        let header = lines.next().ok_or_else(|| Error::invalid("empty embedding file"))??;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|s| s.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Parse {
                line: 1,
                msg: format!("bad header `{header}`"),
            })?;
        let [rows, dim] = dims[..] else {
            return Err(Error::Parse {
                line: 1,
                msg: format!("bad header `{header}`"),
            });
        };
        let mut labels = Vec::with_capacity(rows);
        let mut data = Vec::with_capacity(rows * dim);
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let lineno = i + 2;
            let mut fields = line.split_whitespace();
            let label = fields.next().unwrap_or_default().to_owned();
            let before = data.len();
            for f in fields {
                data.push(f.parse::<T>().map_err(|_| Error::Parse {
                    line: lineno,
                    msg: format!("`{f}` is not a number"),
                })?);
            }
            if data.len() - before != dim {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("expected {dim} values, found {}", data.len() - before),
                });
            }
            labels.push(label);
        }
        if labels.len() != rows {
            return Err(Error::invalid(format!("header says {rows} rows, found {}", labels.len())));
        }
        Ok((labels, EmbeddingMatrix { rows, dim, data }))
    }
}

/// Entries independent uniform in `[-0.5/dim, 0.5/dim]`.
pub fn init_embeddings<T: Scalar>(rows: usize, dim: usize, seed: u64) -> EmbeddingMatrix<T> {
    let mut rng = rng::stream(seed, &[]);
    let scale = T::of(1.0 / dim as f64);
    let data = (0..rows * dim)
        .map(|_| T::of(rng.gen::<f64>() - 0.5) * scale)
        .collect();
    EmbeddingMatrix { rows, dim, data }
}

/// `(center, context)` pairs within `window` positions of each other.
pub fn window_pairs(walk: &[usize], window: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
    (0..walk.len()).flat_map(move |i| {
        let lo = i.saturating_sub(window);
        let hi = (i + window).min(walk.len().saturating_sub(1));
        (lo..=hi).filter(move |&j| j != i).map(move |j| (walk[i], walk[j]))
    })
}

pub fn extract_pairs(corpus: &WalkCorpus, window: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
    corpus.node_walks.iter().flat_map(move |w| window_pairs(w, window))
}

/// Number of pairs [`window_pairs`] yields for a walk of `len` nodes.
pub fn pair_count(len: usize, window: usize) -> usize {
    (0..len)
        .map(|i| i.min(window) + (len - 1 - i).min(window))
        .sum()
}

/// `log sigmoid(x)` without overflow.
pub fn log_sigmoid<T: Scalar>(x: T) -> T {
    // -softplus(-x)
    let z = -x;
    -(z.max(T::zero()) + (-z.abs()).exp().ln_1p())
}

/// Negative-sampling objective of one `(center, context)` pair:
/// `log s(f_t . f_v) + sum_i log s(-f_ui . f_v)`.
pub fn pair_objective<T: Scalar>(center: &[T], context: &[T], negatives: &[&[T]]) -> T {
    log_sigmoid(dot(context, center))
        + negatives
            .iter()
            .map(|u| log_sigmoid(-dot(u, center)))
            .sum::<T>()
}

/// Gradient of [`pair_objective`] with respect to each argument.
#[derive(Clone, Debug, PartialEq)]
pub struct PairGradient<T> {
    pub center: Vec<T>,
    pub context: Vec<T>,
    pub negatives: Vec<Vec<T>>,
}

pub fn pair_gradient<T: Scalar>(center: &[T], context: &[T], negatives: &[&[T]]) -> PairGradient<T> {
    let g = T::one() - sigmoid(dot(context, center));
    let mut grad_center: Vec<T> = context.iter().map(|&c| g * c).collect();
    let mut grad_negs = Vec::with_capacity(negatives.len());
    for u in negatives {
        let s = sigmoid(dot(u, center));
        for (gc, &ui) in grad_center.iter_mut().zip(*u) {
            *gc -= s * ui;
        }
        grad_negs.push(center.iter().map(|&v| -s * v).collect());
    }
    PairGradient {
        center: grad_center,
        context: center.iter().map(|&v| g * v).collect(),
        negatives: grad_negs,
    }
}

#[derive(Default)]
struct Scratch<T> {
    center: Vec<T>,
    grad: Vec<T>,
    coef: Vec<T>,
}

/// One ascent step on a pair, all gradients taken at the pre-update point.
fn step_pair<T: Scalar>(
    emb: &mut EmbeddingMatrix<T>,
    v: usize,
    t: usize,
    negatives: &[usize],
    lr: T,
    s: &mut Scratch<T>,
) {
    s.center.clear();
    s.center.extend_from_slice(emb.row(v));
    let g = T::one() - sigmoid(dot(emb.row(t), &s.center));
    s.grad.clear();
    s.grad.extend(emb.row(t).iter().map(|&x| g * x));
    s.coef.clear();
    for &u in negatives {
        let c = sigmoid(dot(emb.row(u), &s.center));
        for (gv, &x) in s.grad.iter_mut().zip(emb.row(u)) {
            *gv -= c * x;
        }
        s.coef.push(c);
    }

    let step = lr * g;
    for (x, &c) in emb.row_mut(t).iter_mut().zip(&s.center) {
        *x += step * c;
    }
    for (&u, &c) in negatives.iter().zip(&s.coef) {
        let step = lr * c;
        for (x, &cv) in emb.row_mut(u).iter_mut().zip(&s.center) {
            *x -= step * cv;
        }
    }
    for (x, &gv) in emb.row_mut(v).iter_mut().zip(&s.grad) {
        *x += lr * gv;
    }
}

/// In-place SGD ascent step for one `(v, t)` pair with the given negatives.
pub fn sgd_update<T: Scalar>(emb: &mut EmbeddingMatrix<T>, v: usize, t: usize, negatives: &[usize], lr: T) {
    step_pair(emb, v, t, negatives, lr, &mut Scratch::default());
}

/// Uniform negative sampler over `0..n`, excluding the positive context.
#[derive(Clone, Copy, Debug)]
pub struct NegativeSampler {
    n: usize,
}

impl NegativeSampler {
    pub fn new(n: usize) -> Self {
        NegativeSampler { n }
    }

    /// `None` when the vocabulary has no node other than `exclude`.
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, exclude: usize, rng: &mut R) -> Option<usize> {
        if self.n < 2 {
            return None;
        }
        let u = rng.gen_range(0..self.n - 1);
        Some(if u >= exclude { u + 1 } else { u })
    }
}

struct Schedule<T> {
    lr: T,
    lr_min: T,
    total: f64,
}

impl<T: Scalar> Schedule<T> {
    #[inline]
    fn at(&self, processed: usize) -> T {
        let frac = T::of((processed as f64 / self.total).min(1.0));
        (self.lr - (self.lr - self.lr_min) * frac).max(self.lr_min)
    }
}

/// Train embeddings for `num_nodes` nodes from a walk corpus.
///
/// The learning rate decays linearly from `lr` to `lr_min` over all pairs
/// of all epochs.
pub fn train_embeddings<T: Scalar>(
    corpus: &WalkCorpus,
    num_nodes: usize,
    params: &TrainParams<T>,
    seed: u64,
) -> Result<EmbeddingMatrix<T>> {
    params.validate()?;
    if corpus.is_empty() {
        return Err(Error::invalid("empty corpus"));
    }
    if let Some(&bad) = corpus.node_walks.iter().flatten().find(|&&v| v >= num_nodes) {
        return Err(Error::UnknownNode(bad.to_string()));
    }
    let per_epoch: usize = corpus
        .node_walks
        .iter()
        .map(|w| pair_count(w.len(), params.window))
        .sum();
    let schedule = Schedule {
        lr: params.lr,
        lr_min: params.lr_min,
        total: (per_epoch * params.epochs).max(1) as f64,
    };
    let emb = init_embeddings(num_nodes, params.dim, rng::mix(seed, &[0]));
    Ok(match params.mode {
        TrainMode::Deterministic => train_sequential(corpus, emb, params, &schedule, seed),
        TrainMode::Parallel => train_hogwild(corpus, emb, params, &schedule, seed),
    })
}

fn train_sequential<T: Scalar>(
    corpus: &WalkCorpus,
    mut emb: EmbeddingMatrix<T>,
    params: &TrainParams<T>,
    schedule: &Schedule<T>,
    seed: u64,
) -> EmbeddingMatrix<T> {
    let sampler = NegativeSampler::new(emb.rows());
    let mut rng = rng::stream(seed, &[1]);
    let mut scratch = Scratch::default();
    let mut negs = Vec::with_capacity(params.negatives);
    let mut processed = 0usize;
    for _ in 0..params.epochs {
        for (v, t) in extract_pairs(corpus, params.window) {
            negs.clear();
            negs.extend((0..params.negatives).filter_map(|_| sampler.sample(t, &mut rng)));
            step_pair(&mut emb, v, t, &negs, schedule.at(processed), &mut scratch);
            processed += 1;
        }
    }
    emb
}

/// Embedding table whose rows are read and written without locks. Each
/// entry is an atomic bit pattern; concurrent updates to the same row may
/// overwrite each other.
struct SharedTable {
    dim: usize,
    cells: Vec<AtomicU64>,
}

impl SharedTable {
    fn new<T: Scalar>(emb: &EmbeddingMatrix<T>) -> Self {
        SharedTable {
            dim: emb.dim(),
            cells: emb.as_slice().iter().map(|v| AtomicU64::new(v.to_bits64())).collect(),
        }
    }

    fn load<T: Scalar>(&self, i: usize, out: &mut Vec<T>) {
        out.clear();
        out.extend(
            self.cells[i * self.dim..(i + 1) * self.dim]
                .iter()
                .map(|c| T::from_bits64(c.load(Ordering::Relaxed))),
        );
    }

    fn add_scaled<T: Scalar>(&self, i: usize, scale: T, delta: &[T]) {
        for (c, &d) in self.cells[i * self.dim..(i + 1) * self.dim].iter().zip(delta) {
            let v = T::from_bits64(c.load(Ordering::Relaxed)) + scale * d;
            c.store(v.to_bits64(), Ordering::Relaxed);
        }
    }

    fn into_matrix<T: Scalar>(self, rows: usize) -> EmbeddingMatrix<T> {
        EmbeddingMatrix {
            rows,
            dim: self.dim,
            data: self.cells.into_iter().map(|c| T::from_bits64(c.into_inner())).collect(),
        }
    }
}

fn train_hogwild<T: Scalar>(
    corpus: &WalkCorpus,
    emb: EmbeddingMatrix<T>,
    params: &TrainParams<T>,
    schedule: &Schedule<T>,
    seed: u64,
) -> EmbeddingMatrix<T> {
    let rows = emb.rows();
    let table = SharedTable::new(&emb);
    drop(emb);
    let sampler = NegativeSampler::new(rows);
    let processed = AtomicUsize::new(0);
    let workers = rayon::current_num_threads().max(1);
    let chunk = corpus.node_walks.len().div_ceil(workers);

    for epoch in 0..params.epochs {
        corpus
            .node_walks
            .par_chunks(chunk)
            .enumerate()
            .for_each(|(worker, walks)| {
                let mut rng = rng::stream(seed, &[2, epoch as u64, worker as u64]);
                let (mut center, mut ctx, mut neg) = (Vec::new(), Vec::new(), Vec::new());
                let mut grad: Vec<T> = Vec::new();
                for walk in walks {
                    for (v, t) in window_pairs(walk, params.window) {
                        let lr = schedule.at(processed.fetch_add(1, Ordering::Relaxed));
                        table.load(v, &mut center);
                        table.load(t, &mut ctx);
                        let g = T::one() - sigmoid(dot(&ctx, &center));
                        grad.clear();
                        grad.extend(ctx.iter().map(|&x| g * x));
                        table.add_scaled(t, lr * g, &center);
                        for _ in 0..params.negatives {
                            let Some(u) = sampler.sample(t, &mut rng) else { break };
                            table.load(u, &mut neg);
                            let c = sigmoid(dot(&neg, &center));
                            for (gv, &x) in grad.iter_mut().zip(&neg) {
                                *gv -= c * x;
                            }
                            table.add_scaled(u, -(lr * c), &center);
                        }
                        table.add_scaled(v, lr, &grad);
                    }
                }
            });
    }
    table.into_matrix(rows)
}
