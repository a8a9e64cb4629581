use std::collections::HashMap;

use super::{Directedness, HetGraph, Neighbor, RawEdge, Vocab};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BuildReport {
    pub records: usize,
    pub self_loops_dropped: usize,
    pub duplicates_merged: usize,
}

/// Indexes raw edge records into a [`HetGraph`].
///
/// Vocabularies may be pre-seeded so that a reloaded snapshot keeps its
/// original node and edge-type indices.
#[derive(Clone, Debug)]
pub struct GraphBuilder {
    directedness: Directedness,
    nodes: Vocab,
    node_types: Vec<Option<String>>,
    edge_types: Vocab,
}

impl GraphBuilder {
    pub fn new(directedness: Directedness) -> Self {
        GraphBuilder {
            directedness,
            nodes: Vocab::new(),
            node_types: Vec::new(),
            edge_types: Vocab::new(),
        }
    }

    pub fn with_node(mut self, label: &str, node_type: Option<String>) -> Self {
        let i = self.nodes.intern(label);
        if i == self.node_types.len() {
            self.node_types.push(node_type);
        } else if self.node_types[i].is_none() {
            self.node_types[i] = node_type;
        }
        self
    }

    pub fn with_edge_type(mut self, label: &str) -> Self {
        self.edge_types.intern(label);
        self
    }

    fn node(&mut self, label: &str, node_type: &Option<String>) -> usize {
        let i = self.nodes.intern(label);
        if i == self.node_types.len() {
            self.node_types.push(node_type.clone());
        } else if self.node_types[i].is_none() && node_type.is_some() {
            self.node_types[i] = node_type.clone();
        }
        i
    }

    pub fn build<T: Scalar>(mut self, records: &[RawEdge<T>]) -> Result<(HetGraph<T>, BuildReport)> {
        let mut report = BuildReport {
            records: records.len(),
            ..Default::default()
        };
        let undirected = !self.directedness.is_directed();

        let mut merged: HashMap<(usize, usize, usize), usize> = HashMap::new();
        let mut edges: Vec<(usize, usize, usize, T)> = Vec::new();
        for r in records {
            let s = self.node(&r.src, &r.src_type);
            let d = self.node(&r.dst, &r.dst_type);
            if s == d {
                report.self_loops_dropped += 1;
                continue;
            }
            let t = self.edge_types.intern(&r.etype);
            let key = if undirected { (s.min(d), s.max(d), t) } else { (s, d, t) };
            match merged.get(&key) {
                Some(&slot) => {
                    edges[slot].3 += r.weight;
                    report.duplicates_merged += 1;
                }
                None => {
                    merged.insert(key, edges.len());
                    edges.push((key.0, key.1, t, r.weight));
                }
            }
        }
        if report.self_loops_dropped > 0 {
            log::warn!("dropped {} self-loop record(s)", report.self_loops_dropped);
        }
        if edges.is_empty() {
            return Err(Error::EmptyGraph);
        }

        let n = self.nodes.len();
        let mut degree = vec![0usize; n + 1];
        for &(s, d, _, _) in &edges {
            degree[s] += 1;
            if undirected {
                degree[d] += 1;
            }
        }
        let mut offsets = vec![0usize; n + 1];
        for v in 0..n {
            offsets[v + 1] = offsets[v] + degree[v];
        }
        let mut fill = offsets.clone();
        let placeholder = Neighbor {
            node: 0,
            etype: 0,
            weight: T::zero(),
        };
        let mut adjacency = vec![placeholder; offsets[n]];
        let mut put = |from: usize, to: usize, etype: usize, weight: T| {
            adjacency[fill[from]] = Neighbor { node: to, etype, weight };
            fill[from] += 1;
        };
        for &(s, d, t, w) in &edges {
            put(s, d, t, w);
            if undirected {
                put(d, s, t, w);
            }
        }
        for v in 0..n {
            adjacency[offsets[v]..offsets[v + 1]].sort_unstable_by_key(|nb| (nb.node, nb.etype));
        }

        Ok((
            HetGraph {
                nodes: self.nodes,
                node_types: self.node_types,
                edge_types: self.edge_types,
                offsets,
                adjacency,
                directedness: self.directedness,
            },
            report,
        ))
    }
}

/// Index records into a graph with vocabularies in first-appearance order.
pub fn build_graph<T: Scalar>(
    records: &[RawEdge<T>],
    directedness: Directedness,
) -> Result<(HetGraph<T>, BuildReport)> {
    GraphBuilder::new(directedness).build(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(s: &str, t: &str, d: &str, w: f64) -> RawEdge<f64> {
        RawEdge::new(s, t, d, w)
    }

    #[test]
    fn undirected_reverse_records_collapse() {
        let (g, rep) = build_graph(&[rec("a", "t", "b", 1.0), rec("b", "t", "a", 1.0)], Directedness::Undirected).unwrap();
        assert_eq!(g.num_nodes(), 2);
        assert_eq!(g.num_edges(), 1);
        assert_eq!(rep.duplicates_merged, 1);
        let a = g.neighbors(0).unwrap();
        let b = g.neighbors(1).unwrap();
        assert_eq!((a.len(), b.len()), (1, 1));
        assert_eq!(a[0].weight, b[0].weight);
    }

    #[test]
    fn duplicate_weights_sum() {
        let (g, _) = build_graph(&[rec("a", "t", "b", 1.0), rec("a", "t", "b", 2.0)], Directedness::Directed).unwrap();
        assert_eq!(g.num_edges(), 1);
        assert_eq!(g.neighbors(0).unwrap()[0].weight, 3.0);
    }

    #[test]
    fn parallel_edges_with_distinct_types_kept() {
        let (g, _) = build_graph(&[rec("a", "x", "b", 1.0), rec("a", "y", "b", 1.0)], Directedness::Undirected).unwrap();
        assert_eq!(g.num_edges(), 2);
        assert_eq!(g.edges_between(0, 1).len(), 2);
    }

    #[test]
    fn self_loop_only_is_error() {
        let r = build_graph(&[rec("a", "t", "a", 1.0)], Directedness::Undirected);
        assert!(matches!(r, Err(Error::EmptyGraph)));
    }

    #[test]
    fn self_loop_dropped_and_counted() {
        let (g, rep) = build_graph(&[rec("a", "t", "a", 1.0), rec("a", "t", "b", 1.0)], Directedness::Undirected).unwrap();
        assert_eq!(rep.self_loops_dropped, 1);
        assert_eq!(g.num_edges(), 1);
    }

    #[test]
    fn directed_keeps_one_direction() {
        let (g, _) = build_graph(&[rec("a", "t", "b", 1.0)], Directedness::Directed).unwrap();
        assert!(g.has_edge(0, 1));
        assert!(!g.has_edge(1, 0));
        assert!(g.neighbors(1).unwrap().is_empty());
    }

    #[test]
    fn first_appearance_order() {
        let (g, _) = build_graph(&[rec("z", "q", "y", 1.0), rec("x", "p", "z", 1.0)], Directedness::Undirected).unwrap();
        assert_eq!(g.nodes().labels(), ["z", "y", "x"]);
        assert_eq!(g.edge_types().labels(), ["q", "p"]);
    }
}
