use std::cmp::Ordering;
use std::collections::HashSet;
use std::hash::Hash;

use crate::error::{Error, Result};
use crate::scalar::{dot, norm, Scalar};
use crate::skipgram::EmbeddingMatrix;

/// Cosine similarity; 0 when either vector is zero.
pub fn cosine<T: Scalar>(a: &[T], b: &[T]) -> T {
    let (na, nb) = (norm(a), norm(b));
    if na == T::zero() || nb == T::zero() {
        return T::zero();
    }
    dot(a, b) / (na * nb)
}

/// The `k` rows most cosine-similar to row `query`, best first. Ties go to
/// the lower index; the query itself is never returned.
pub fn cosine_topk<T: Scalar>(
    emb: &EmbeddingMatrix<T>,
    query: usize,
    k: usize,
    filter: Option<&dyn Fn(usize) -> bool>,
) -> Result<Vec<(usize, T)>> {
    if query >= emb.rows() {
        return Err(Error::NodeOutOfRange(query));
    }
    if k == 0 {
        return Err(Error::param("K must be at least 1"));
    }
    let q = emb.row(query);
    if norm(q) == T::zero() {
        return Err(Error::invalid(format!("query row {query} has zero norm")));
    }
    let mut scored: Vec<(usize, T)> = (0..emb.rows())
        .filter(|&i| i != query && filter.is_none_or(|f| f(i)))
        .map(|i| (i, cosine(q, emb.row(i))))
        .collect();
    let order = |a: &(usize, T), b: &(usize, T)| {
        b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal).then(a.0.cmp(&b.0))
    };
    if scored.len() > k {
        scored.select_nth_unstable_by(k - 1, order);
        scored.truncate(k);
    }
    scored.sort_by(order);
    Ok(scored)
}

#[derive(Clone, Debug, PartialEq)]
pub struct QueryMetrics<T> {
    /// Aligned with the report's cutoffs.
    pub precision: Vec<T>,
    pub recall: Vec<T>,
    pub average_precision: T,
    pub ndcg: T,
    pub reciprocal_rank: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RankingReport<T> {
    pub cutoffs: Vec<usize>,
    pub precision: Vec<T>,
    pub recall: Vec<T>,
    pub map: T,
    pub ndcg: T,
    pub mrr: T,
    pub per_query: Vec<QueryMetrics<T>>,
}

fn query_metrics<I: Eq + Hash>(ranked: &[I], relevant: &HashSet<I>, cutoffs: &[usize]) -> QueryMetrics<f64> {
    let hits: Vec<bool> = ranked.iter().map(|r| relevant.contains(r)).collect();
    let n_rel = relevant.len() as f64;
    let hits_at = |k: usize| hits.iter().take(k).filter(|&&h| h).count() as f64;

    let mut found = 0.0;
    let mut ap = 0.0;
    let mut dcg = 0.0;
    let mut rr = 0.0;
    for (i, &h) in hits.iter().enumerate() {
        if h {
            found += 1.0;
            ap += found / (i + 1) as f64;
            dcg += 1.0 / ((i + 2) as f64).log2();
            if rr == 0.0 {
                rr = 1.0 / (i + 1) as f64;
            }
        }
    }
    let ideal = relevant.len().min(ranked.len());
    let idcg: f64 = (0..ideal).map(|i| 1.0 / ((i + 2) as f64).log2()).sum();
    QueryMetrics {
        precision: cutoffs.iter().map(|&k| hits_at(k) / k as f64).collect(),
        recall: cutoffs.iter().map(|&k| hits_at(k) / n_rel).collect(),
        average_precision: ap / n_rel,
        ndcg: if idcg > 0.0 { dcg / idcg } else { 0.0 },
        reciprocal_rank: rr,
    }
}

/// P@K and R@K for each cutoff, MAP, NDCG (binary gains, log2 discount) and
/// MRR over a set of ranked lists. Relevant items missing from a list add
/// nothing to its average precision.
pub fn ranking_metrics<T: Scalar, I: Eq + Hash>(
    ranked: &[Vec<I>],
    relevant: &[HashSet<I>],
    cutoffs: &[usize],
) -> Result<RankingReport<T>> {
    if ranked.is_empty() {
        return Err(Error::invalid("no queries"));
    }
    if ranked.len() != relevant.len() {
        return Err(Error::LengthMismatch(ranked.len(), relevant.len()));
    }
    if let Some(i) = relevant.iter().position(HashSet::is_empty) {
        return Err(Error::invalid(format!("query {i} has an empty relevance set")));
    }
    if cutoffs.contains(&0) {
        return Err(Error::param("cutoffs must be positive"));
    }
    let per_query: Vec<QueryMetrics<f64>> = ranked
        .iter()
        .zip(relevant)
        .map(|(r, rel)| query_metrics(r, rel, cutoffs))
        .collect();
    let nq = per_query.len() as f64;
    let mean = |f: &dyn Fn(&QueryMetrics<f64>) -> f64| T::of(per_query.iter().map(f).sum::<f64>() / nq);
    let conv = |q: &QueryMetrics<f64>| QueryMetrics {
        precision: q.precision.iter().map(|&v| T::of(v)).collect(),
        recall: q.recall.iter().map(|&v| T::of(v)).collect(),
        average_precision: T::of(q.average_precision),
        ndcg: T::of(q.ndcg),
        reciprocal_rank: T::of(q.reciprocal_rank),
    };
    Ok(RankingReport {
        cutoffs: cutoffs.to_vec(),
        precision: (0..cutoffs.len()).map(|c| mean(&|q| q.precision[c])).collect(),
        recall: (0..cutoffs.len()).map(|c| mean(&|q| q.recall[c])).collect(),
        map: mean(&|q| q.average_precision),
        ndcg: mean(&|q| q.ndcg),
        mrr: mean(&|q| q.reciprocal_rank),
        per_query: per_query.iter().map(conv).collect(),
    })
}
