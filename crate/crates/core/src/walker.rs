//! Edge-type aware second-order random walks.
//!
//! The next-step score of candidate `k` from `curr` (having arrived from
//! `prev` over an edge of type `t_prev`) is
//! `w(curr,k) * M[t_prev][t(curr,k)] * alpha(p, q, d(k, prev))`.

use std::io::{BufRead, Write};

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hetgraph::{HetGraph, Neighbor};
use crate::rng;
use crate::scalar::Scalar;
use crate::transition::TransitionMatrix;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WalkParams<T> {
    /// Return parameter.
    pub p: T,
    /// In-out parameter.
    pub q: T,
    /// Maximum number of nodes per walk.
    pub walk_length: usize,
    pub walks_per_node: usize,
}

impl<T: Scalar> Default for WalkParams<T> {
    fn default() -> Self {
        WalkParams {
            p: T::of(0.25),
            q: T::of(0.25),
            walk_length: 50,
            walks_per_node: 1,
        }
    }
}

impl<T: Scalar> WalkParams<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.p > T::zero() && self.p.is_finite()) {
            return Err(Error::param(format!("p must be positive, got {}", self.p)));
        }
        if !(self.q > T::zero() && self.q.is_finite()) {
            return Err(Error::param(format!("q must be positive, got {}", self.q)));
        }
        if self.walk_length < 2 {
            return Err(Error::param("walk length must be at least 2"));
        }
        if self.walks_per_node < 1 {
            return Err(Error::param("walks per node must be at least 1"));
        }
        Ok(())
    }
}

/// Distance bias: `1/p` for returning (d = 0), `1` for a neighbor of the
/// previous node (d = 1), `1/q` otherwise (d = 2).
pub fn alpha<T: Scalar>(p: T, q: T, d: usize) -> Result<T> {
    match d {
        0 => Ok(p.recip()),
        1 => Ok(T::one()),
        2 => Ok(q.recip()),
        _ => Err(Error::InvalidDistance(d)),
    }
}

/// Fills `scores` with the unnormalized score of every adjacency entry of
/// `curr`, returning their sum.
#[allow(clippy::too_many_arguments)]
fn score_candidates<T: Scalar>(
    graph: &HetGraph<T>,
    matrix: &TransitionMatrix<T>,
    prev: usize,
    curr: usize,
    prev_etype: usize,
    inv_p: T,
    inv_q: T,
    scores: &mut Vec<T>,
) -> T {
    scores.clear();
    let row = matrix.row(prev_etype);
    let mut total = T::zero();
    for nb in graph.neighbors_unchecked(curr) {
        let bias = if nb.node == prev {
            inv_p
        } else if graph.has_edge(nb.node, prev) {
            T::one()
        } else {
            inv_q
        };
        let s = nb.weight * row[nb.etype] * bias;
        total += s;
        scores.push(s);
    }
    total
}

fn check_inputs<T: Scalar>(graph: &HetGraph<T>, matrix: &TransitionMatrix<T>) -> Result<()> {
    if matrix.size() != graph.num_edge_types() {
        return Err(Error::invalid(format!(
            "transition matrix is {0}x{0} but the graph has {1} edge types",
            matrix.size(),
            graph.num_edge_types()
        )));
    }
    Ok(())
}

/// Probability of each adjacency entry of `curr` being the next step.
/// The result is aligned with `graph.neighbors(curr)`.
pub fn step_distribution<T: Scalar>(
    graph: &HetGraph<T>,
    matrix: &TransitionMatrix<T>,
    prev: usize,
    curr: usize,
    prev_etype: usize,
    params: &WalkParams<T>,
) -> Result<Vec<T>> {
    check_inputs(graph, matrix)?;
    graph.neighbors(prev)?;
    if graph.neighbors(curr)?.is_empty() {
        return Err(Error::DeadEnd(curr));
    }
    if prev_etype >= matrix.size() {
        return Err(Error::invalid(format!("edge type {prev_etype} out of range")));
    }
    let mut scores = Vec::new();
    let total = score_candidates(graph, matrix, prev, curr, prev_etype, params.p.recip(), params.q.recip(), &mut scores);
    if total <= T::zero() {
        return Err(Error::DeadEnd(curr));
    }
    for s in &mut scores {
        *s /= total;
    }
    Ok(scores)
}

/// Inverse-CDF draw over non-negative scores; zero entries are never chosen.
fn sample_index<T: Scalar, R: Rng + ?Sized>(scores: &[T], total: T, rng: &mut R) -> Option<usize> {
    if total <= T::zero() {
        return None;
    }
    let target = T::of(rng.gen::<f64>()) * total;
    let mut acc = T::zero();
    let mut last = None;
    for (i, &s) in scores.iter().enumerate() {
        if s <= T::zero() {
            continue;
        }
        acc += s;
        last = Some(i);
        if target < acc {
            return Some(i);
        }
    }
    last
}

fn sample_by_weight<'g, T: Scalar, R: Rng + ?Sized>(
    candidates: &'g [Neighbor<T>],
    scores: &mut Vec<T>,
    rng: &mut R,
) -> Option<&'g Neighbor<T>> {
    scores.clear();
    scores.extend(candidates.iter().map(|n| n.weight));
    let total = scores.iter().copied().sum();
    sample_index(scores, total, rng).map(|i| &candidates[i])
}

/// Draw one biased step; returns the chosen `(node, edge type)`.
pub fn sample_step<T: Scalar, R: Rng + ?Sized>(
    graph: &HetGraph<T>,
    matrix: &TransitionMatrix<T>,
    prev: usize,
    curr: usize,
    prev_etype: usize,
    params: &WalkParams<T>,
    rng: &mut R,
) -> Result<(usize, usize)> {
    check_inputs(graph, matrix)?;
    graph.neighbors(prev)?;
    graph.neighbors(curr)?;
    if prev_etype >= matrix.size() {
        return Err(Error::invalid(format!("edge type {prev_etype} out of range")));
    }
    let mut scores = Vec::new();
    let total = score_candidates(graph, matrix, prev, curr, prev_etype, params.p.recip(), params.q.recip(), &mut scores);
    let i = sample_index(&scores, total, rng).ok_or(Error::DeadEnd(curr))?;
    let nb = graph.neighbors_unchecked(curr)[i];
    Ok((nb.node, nb.etype))
}

fn walk_with_scratch<T: Scalar, R: Rng + ?Sized>(
    graph: &HetGraph<T>,
    matrix: &TransitionMatrix<T>,
    start: usize,
    params: &WalkParams<T>,
    rng: &mut R,
    scores: &mut Vec<T>,
) -> (Vec<usize>, Vec<usize>) {
    let mut nodes = Vec::with_capacity(params.walk_length);
    let mut etypes = Vec::with_capacity(params.walk_length.saturating_sub(1));
    nodes.push(start);

    let first = match sample_by_weight(graph.neighbors_unchecked(start), scores, rng) {
        Some(nb) => *nb,
        None => return (nodes, etypes),
    };
    nodes.push(first.node);
    etypes.push(first.etype);

    let (inv_p, inv_q) = (params.p.recip(), params.q.recip());
    while nodes.len() < params.walk_length {
        let curr = nodes[nodes.len() - 1];
        let prev = nodes[nodes.len() - 2];
        let prev_etype = etypes[etypes.len() - 1];
        let total = score_candidates(graph, matrix, prev, curr, prev_etype, inv_p, inv_q, scores);
        match sample_index(scores, total, rng) {
            Some(i) => {
                let nb = graph.neighbors_unchecked(curr)[i];
                nodes.push(nb.node);
                etypes.push(nb.etype);
            }
            None => break,
        }
    }
    (nodes, etypes)
}

/// One walk from `start`. The first hop is weighted by edge weight alone;
/// later hops follow [`step_distribution`]. Dead ends truncate the walk.
pub fn hetero_random_walk<T: Scalar, R: Rng + ?Sized>(
    graph: &HetGraph<T>,
    matrix: &TransitionMatrix<T>,
    start: usize,
    params: &WalkParams<T>,
    rng: &mut R,
) -> Result<(Vec<usize>, Vec<usize>)> {
    check_inputs(graph, matrix)?;
    graph.neighbors(start)?;
    Ok(walk_with_scratch(graph, matrix, start, params, rng, &mut Vec::new()))
}

/// Parallel node walks with the edge types traversed between them.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct WalkCorpus {
    pub node_walks: Vec<Vec<usize>>,
    pub edge_walks: Vec<Vec<usize>>,
}

impl WalkCorpus {
    pub fn len(&self) -> usize {
        self.node_walks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.node_walks.is_empty()
    }

    pub fn num_tokens(&self) -> usize {
        self.node_walks.iter().map(Vec::len).sum()
    }

    /// Checks that every hop is a graph edge of the recorded type.
    pub fn check_against<T: Scalar>(&self, graph: &HetGraph<T>) -> Result<()> {
        if self.node_walks.len() != self.edge_walks.len() {
            return Err(Error::invalid("node and edge-type walk counts differ"));
        }
        for (i, (nodes, types)) in self.node_walks.iter().zip(&self.edge_walks).enumerate() {
            if nodes.len() != types.len() + 1 {
                return Err(Error::invalid(format!("walk {i}: edge-type walk has wrong length")));
            }
            for (hop, pair) in nodes.windows(2).enumerate() {
                if pair[0] >= graph.num_nodes() || pair[1] >= graph.num_nodes() {
                    return Err(Error::NodeOutOfRange(pair[0].max(pair[1])));
                }
                if !graph.edges_between(pair[0], pair[1]).iter().any(|n| n.etype == types[hop]) {
                    return Err(Error::invalid(format!("walk {i}: hop {hop} is not a graph edge")));
                }
            }
        }
        Ok(())
    }

    /// Walks as space-separated node labels, and line-aligned edge-type labels.
    pub fn write<T: Scalar, W1: Write, W2: Write>(
        &self,
        graph: &HetGraph<T>,
        mut nodes_out: W1,
        mut etypes_out: W2,
    ) -> Result<()> {
        for (nodes, types) in self.node_walks.iter().zip(&self.edge_walks) {
            let line: Vec<&str> = nodes.iter().map(|&v| graph.nodes().label(v)).collect();
            writeln!(nodes_out, "{}", line.join(" "))?;
            let line: Vec<&str> = types.iter().map(|&t| graph.edge_types().label(t)).collect();
            writeln!(etypes_out, "{}", line.join(" "))?;
        }
        nodes_out.flush()?;
        etypes_out.flush()?;
        Ok(())
    }

    /// Read a corpus written by [`WalkCorpus::write`]. Without an edge-type
    /// stream the edge walks are left empty.
    pub fn read<T: Scalar, R1: BufRead, R2: BufRead>(
        graph: &HetGraph<T>,
        nodes_in: R1,
        etypes_in: Option<R2>,
    ) -> Result<Self> {
        let mut corpus = WalkCorpus::default();
        for line in nodes_in.lines() {
            let line = line?;
            let walk = line
                .split_whitespace()
                .map(|l| graph.nodes().get(l).ok_or_else(|| Error::UnknownNode(l.to_owned())))
                .collect::<Result<Vec<_>>>()?;
            if !walk.is_empty() {
                corpus.node_walks.push(walk);
            }
        }
        if let Some(etypes_in) = etypes_in {
            for line in etypes_in.lines() {
                let line = line?;
                let types = line
                    .split_whitespace()
                    .map(|l| graph.edge_types().get(l).ok_or_else(|| Error::UnknownEdgeType(l.to_owned())))
                    .collect::<Result<Vec<_>>>()?;
                corpus.edge_walks.push(types);
            }
            corpus.edge_walks.truncate(corpus.node_walks.len());
            if corpus.edge_walks.len() != corpus.node_walks.len() {
                return Err(Error::invalid("edge-type file has fewer lines than the walk file"));
            }
        }
        Ok(corpus)
    }
}

/// `walks_per_node` walks from each start node, emitted in
/// `(start position, walk index)` order. Each walk draws from its own stream
/// keyed by `(seed, node, walk index)`, so output is independent of the
/// number of threads.
pub fn generate_corpus<T: Scalar>(
    graph: &HetGraph<T>,
    matrix: &TransitionMatrix<T>,
    start_nodes: &[usize],
    params: &WalkParams<T>,
    seed: u64,
) -> Result<WalkCorpus> {
    params.validate()?;
    check_inputs(graph, matrix)?;
    if start_nodes.is_empty() {
        return Err(Error::param("no start nodes"));
    }
    if let Some(&bad) = start_nodes.iter().find(|&&v| v >= graph.num_nodes()) {
        return Err(Error::NodeOutOfRange(bad));
    }
    let r = params.walks_per_node;
    let walks: Vec<(Vec<usize>, Vec<usize>)> = (0..start_nodes.len() * r)
        .into_par_iter()
        .map_init(Vec::new, |scores, task| {
            let node = start_nodes[task / r];
            let walk = (task % r) as u64;
            let mut rng = rng::stream(seed, &[node as u64, walk]);
            walk_with_scratch(graph, matrix, node, params, &mut rng, scores)
        })
        .collect();
    let (node_walks, edge_walks) = walks.into_iter().unzip();
    Ok(WalkCorpus { node_walks, edge_walks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hetgraph::{build_graph, Directedness, RawEdge};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn graph(edges: &[(&str, &str, &str)]) -> HetGraph<f64> {
        let recs: Vec<RawEdge<f64>> = edges.iter().map(|&(s, t, d)| RawEdge::new(s, t, d, 1.0)).collect();
        build_graph(&recs, Directedness::Undirected).unwrap().0
    }

    /// A-B (type1), B-C (type2), B-D (type1).
    fn abcd() -> HetGraph<f64> {
        graph(&[("A", "1", "B"), ("B", "2", "C"), ("B", "1", "D")])
    }

    fn probs_by_label(g: &HetGraph<f64>, m: &TransitionMatrix<f64>, p: f64, q: f64) -> Vec<(String, f64)> {
        let params = WalkParams { p, q, ..Default::default() };
        let (a, b) = (g.node_index("A").unwrap(), g.node_index("B").unwrap());
        let t1 = g.edge_types().get("1").unwrap();
        let dist = step_distribution(g, m, a, b, t1, &params).unwrap();
        g.neighbors(b)
            .unwrap()
            .iter()
            .zip(dist)
            .map(|(n, pr)| (g.nodes().label(n.node).to_owned(), pr))
            .collect()
    }

    #[test]
    fn alpha_branches() {
        assert_eq!(alpha(1.0, 1.0, 0).unwrap(), 1.0);
        assert_eq!(alpha(0.25, 0.25, 2).unwrap(), 4.0);
        assert_eq!(alpha(2.0, 0.5, 1).unwrap(), 1.0);
        assert!(matches!(alpha(1.0, 1.0, 3), Err(Error::InvalidDistance(3))));
    }

    #[test]
    fn uniform_matrix_cancels() {
        let g = abcd();
        let m = TransitionMatrix::uniform(g.edge_types().labels().to_vec(), 0.3);
        for (_, p) in probs_by_label(&g, &m, 1.0, 1.0) {
            assert!((p - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    fn biased_matrix(g: &HetGraph<f64>) -> TransitionMatrix<f64> {
        let mut m = TransitionMatrix::ones(g.edge_types().labels().to_vec());
        let (t1, t2) = (g.edge_types().get("1").unwrap(), g.edge_types().get("2").unwrap());
        m.set(t1, t1, 0.8);
        m.set(t1, t2, 0.4);
        m.set(t2, t1, 0.4);
        m
    }

    #[test]
    fn biased_matrix_hand_enumeration() {
        let g = abcd();
        let m = biased_matrix(&g);
        // scores: A 0.8, C 0.4, D 0.8 -> total 2.0
        let expect = [("A", 0.4), ("C", 0.2), ("D", 0.4)];
        let got = probs_by_label(&g, &m, 1.0, 1.0);
        for (label, p) in expect {
            let v = got.iter().find(|(l, _)| l == label).unwrap().1;
            assert!((v - p).abs() < 1e-12, "{label}: {v}");
        }
    }

    #[test]
    fn biased_matrix_with_return_bias() {
        let g = abcd();
        let m = biased_matrix(&g);
        // scores: A 0.8*4 = 3.2, C 0.4*1 = 0.4 (d=2, q=1), D 0.8 -> total 4.4
        let expect = [("A", 3.2 / 4.4), ("C", 0.4 / 4.4), ("D", 0.8 / 4.4)];
        let got = probs_by_label(&g, &m, 0.25, 1.0);
        for (label, p) in expect {
            let v = got.iter().find(|(l, _)| l == label).unwrap().1;
            assert!((v - p).abs() < 1e-12, "{label}: {v}");
        }
        assert!((got[0].1 - 0.7273).abs() < 1e-4);
    }

    #[test]
    fn dead_end_is_reported() {
        let recs = vec![RawEdge::new("a", "t", "b", 1.0)];
        let (g, _) = build_graph::<f64>(&recs, Directedness::Directed).unwrap();
        let m = TransitionMatrix::ones(g.edge_types().labels().to_vec());
        let r = step_distribution(&g, &m, 0, 1, 0, &WalkParams::default());
        assert!(matches!(r, Err(Error::DeadEnd(1))));
    }

    #[test]
    fn isolated_start_gives_single_node_walk() {
        let recs = vec![RawEdge::new("a", "t", "b", 1.0), RawEdge::new("c", "t", "c", 1.0)];
        let (g, _) = build_graph::<f64>(&recs, Directedness::Undirected).unwrap();
        let m = TransitionMatrix::ones(g.edge_types().labels().to_vec());
        let c = g.node_index("c").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (nodes, types) = hetero_random_walk(&g, &m, c, &WalkParams::default(), &mut rng).unwrap();
        assert_eq!(nodes, vec![c]);
        assert!(types.is_empty());
    }

    #[test]
    fn two_node_graph_alternates() {
        let g = graph(&[("a", "t", "b")]);
        let m = TransitionMatrix::ones(g.edge_types().labels().to_vec());
        let params = WalkParams { walk_length: 4, ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (nodes, types) = hetero_random_walk(&g, &m, 0, &params, &mut rng).unwrap();
        assert_eq!(nodes, vec![0, 1, 0, 1]);
        assert_eq!(types, vec![0, 0, 0]);
    }

    #[test]
    fn path_graph_second_step_is_fair() {
        // a-b-c from a: first hop is forced to b, then a or c with p=q=1
        let g = graph(&[("a", "t", "b"), ("b", "t", "c")]);
        let m = TransitionMatrix::ones(g.edge_types().labels().to_vec());
        let params = WalkParams { p: 1.0, q: 1.0, walk_length: 3, walks_per_node: 1 };
        let (a, c) = (g.node_index("a").unwrap(), g.node_index("c").unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let trials = 100_000;
        let mut ends_a = 0;
        for _ in 0..trials {
            let (nodes, _) = hetero_random_walk(&g, &m, a, &params, &mut rng).unwrap();
            assert_eq!(nodes.len(), 3);
            if nodes[2] == a {
                ends_a += 1;
            } else {
                assert_eq!(nodes[2], c);
            }
        }
        let frac = ends_a as f64 / trials as f64;
        assert!((frac - 0.5).abs() < 0.01, "{frac}");
    }

    fn branching() -> HetGraph<f64> {
        graph(&[
            ("a", "x", "b"),
            ("b", "y", "c"),
            ("b", "x", "d"),
            ("c", "y", "d"),
            ("d", "x", "e"),
            ("e", "y", "a"),
            ("c", "x", "f"),
            ("f", "y", "g"),
            ("g", "x", "h"),
            ("h", "y", "i"),
            ("i", "x", "j"),
            ("j", "y", "a"),
        ])
    }

    #[test]
    fn corpus_shape_and_determinism() {
        let g = branching();
        assert_eq!(g.num_nodes(), 10);
        let m = TransitionMatrix::ones(g.edge_types().labels().to_vec());
        let params = WalkParams { walks_per_node: 2, walk_length: 12, ..Default::default() };
        let starts: Vec<usize> = (0..10).collect();
        let c1 = generate_corpus(&g, &m, &starts, &params, 42).unwrap();
        let c2 = generate_corpus(&g, &m, &starts, &params, 42).unwrap();
        let c3 = generate_corpus(&g, &m, &starts, &params, 43).unwrap();
        assert_eq!(c1.len(), 20);
        assert_eq!(c1, c2);
        assert_ne!(c1, c3);
        for (i, w) in c1.node_walks.iter().enumerate() {
            assert_eq!(w[0], starts[i / 2]);
        }
        c1.check_against(&g).unwrap();
    }

    #[test]
    fn corpus_independent_of_thread_count() {
        let g = branching();
        let m = TransitionMatrix::ones(g.edge_types().labels().to_vec());
        let params = WalkParams { walks_per_node: 3, walk_length: 20, ..Default::default() };
        let starts: Vec<usize> = (0..10).collect();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| generate_corpus(&g, &m, &starts, &params, 5).unwrap())
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn corpus_file_round_trip() {
        let g = branching();
        let m = TransitionMatrix::ones(g.edge_types().labels().to_vec());
        let starts: Vec<usize> = (0..10).collect();
        let c = generate_corpus(&g, &m, &starts, &WalkParams::default(), 9).unwrap();
        let (mut nodes, mut types) = (Vec::new(), Vec::new());
        c.write(&g, &mut nodes, &mut types).unwrap();
        let back = WalkCorpus::read(&g, nodes.as_slice(), Some(types.as_slice())).unwrap();
        assert_eq!(back, c);
        let unknown = WalkCorpus::read::<f64, _, &[u8]>(&g, "a zz".as_bytes(), None);
        assert!(matches!(unknown, Err(Error::UnknownNode(l)) if l == "zz"));
    }
}
