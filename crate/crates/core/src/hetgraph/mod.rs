//! Heterogeneous graphs: typed nodes, typed weighted edges, CSR adjacency.

mod build;
mod io;
mod parse;

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub use build::{build_graph, BuildReport, GraphBuilder};
pub use io::{load_snapshot, write_edge_list, write_snapshot, SNAPSHOT_EDGES, SNAPSHOT_EDGE_TYPES, SNAPSHOT_NODES};
pub use parse::{parse_edge_list, parse_triples, RawEdge, TypeRule, DEFAULT_TYPE_RULE};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Directedness {
    Directed,
    Undirected,
}

impl Directedness {
    pub fn is_directed(self) -> bool {
        matches!(self, Directedness::Directed)
    }
}

/// Dense label <-> index mapping, indices assigned in first-appearance order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Vocab {
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocab {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_labels<I, S>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut vocab = Vocab::new();
        for label in labels {
            let label = label.into();
            if vocab.get(&label).is_some() {
                return Err(Error::invalid(format!("duplicate label `{label}`")));
            }
            vocab.intern(&label);
        }
        Ok(vocab)
    }

    pub fn intern(&mut self, label: &str) -> usize {
        if let Some(&i) = self.index.get(label) {
            return i;
        }
        let i = self.labels.len();
        self.labels.push(label.to_owned());
        self.index.insert(label.to_owned(), i);
        i
    }

    pub fn get(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// One adjacency entry of a node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Neighbor<T> {
    pub node: usize,
    pub etype: usize,
    pub weight: T,
}

/// Immutable heterogeneous graph.
///
/// Each node's neighbor list is sorted by `(node, etype)`, so membership
/// tests are a binary search. Undirected graphs store both directions.
#[derive(Clone, Debug)]
pub struct HetGraph<T> {
    nodes: Vocab,
    node_types: Vec<Option<String>>,
    edge_types: Vocab,
    offsets: Vec<usize>,
    adjacency: Vec<Neighbor<T>>,
    directedness: Directedness,
}

impl<T: Scalar> HetGraph<T> {
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_edge_types(&self) -> usize {
        self.edge_types.len()
    }

    pub fn directedness(&self) -> Directedness {
        self.directedness
    }

    pub fn nodes(&self) -> &Vocab {
        &self.nodes
    }

    pub fn edge_types(&self) -> &Vocab {
        &self.edge_types
    }

    pub fn node_type(&self, v: usize) -> Option<&str> {
        self.node_types.get(v).and_then(|t| t.as_deref())
    }

    pub fn node_index(&self, label: &str) -> Result<usize> {
        self.nodes
            .get(label)
            .ok_or_else(|| Error::UnknownNode(label.to_owned()))
    }

    /// Typed neighbor list of `v`, sorted by neighbor index.
    pub fn neighbors(&self, v: usize) -> Result<&[Neighbor<T>]> {
        if v >= self.num_nodes() {
            return Err(Error::NodeOutOfRange(v));
        }
        Ok(self.neighbors_unchecked(v))
    }

    #[inline]
    pub(crate) fn neighbors_unchecked(&self, v: usize) -> &[Neighbor<T>] {
        &self.adjacency[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    /// All entries `u -> v` (one per edge type).
    pub fn edges_between(&self, u: usize, v: usize) -> &[Neighbor<T>] {
        let list = self.neighbors_unchecked(u);
        let lo = list.partition_point(|n| n.node < v);
        let hi = lo + list[lo..].partition_point(|n| n.node == v);
        &list[lo..hi]
    }

    #[inline]
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        let list = self.neighbors_unchecked(u);
        list.binary_search_by(|n| n.node.cmp(&v)).is_ok()
    }

    /// Number of logical edges; undirected edges counted once.
    pub fn num_edges(&self) -> usize {
        match self.directedness {
            Directedness::Directed => self.adjacency.len(),
            Directedness::Undirected => self.adjacency.len() / 2,
        }
    }

    /// Logical edges as `(src, dst, etype, weight)`. Undirected edges are
    /// reported once with `src < dst`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, usize, T)> + '_ {
        let directed = self.directedness.is_directed();
        (0..self.num_nodes()).flat_map(move |u| {
            self.neighbors_unchecked(u)
                .iter()
                .filter(move |n| directed || u < n.node)
                .map(move |n| (u, n.node, n.etype, n.weight))
        })
    }

    /// Count of incident (outgoing, for directed graphs) edges per edge type.
    pub fn edge_type_degrees(&self, v: usize) -> Result<Vec<usize>> {
        let mut counts = vec![0; self.num_edge_types()];
        for n in self.neighbors(v)? {
            counts[n.etype] += 1;
        }
        Ok(counts)
    }

    pub fn stats(&self) -> GraphStats {
        graph_stats(self)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphStats {
    pub nodes: usize,
    pub edges: usize,
    pub untyped_nodes: usize,
    /// Node-type label and count, in first-appearance order.
    pub node_type_counts: Vec<(String, usize)>,
    /// Edge-type label and logical edge count, in vocabulary order.
    pub edge_type_counts: Vec<(String, usize)>,
}

pub fn graph_stats<T: Scalar>(graph: &HetGraph<T>) -> GraphStats {
    let mut node_type_counts: Vec<(String, usize)> = Vec::new();
    let mut slot: HashMap<&str, usize> = HashMap::new();
    let mut untyped_nodes = 0;
    for v in 0..graph.num_nodes() {
        match graph.node_type(v) {
            Some(t) => {
                let i = *slot.entry(t).or_insert_with(|| {
                    node_type_counts.push((t.to_owned(), 0));
                    node_type_counts.len() - 1
                });
                node_type_counts[i].1 += 1;
            }
            None => untyped_nodes += 1,
        }
    }

    let mut per_type = vec![0usize; graph.num_edge_types()];
    for (_, _, t, _) in graph.edges() {
        per_type[t] += 1;
    }
    GraphStats {
        nodes: graph.num_nodes(),
        edges: graph.num_edges(),
        untyped_nodes,
        node_type_counts,
        edge_type_counts: graph
            .edge_types()
            .labels()
            .iter()
            .cloned()
            .zip(per_type)
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(s: &str, t: &str, d: &str) -> RawEdge<f64> {
        RawEdge::new(s, t, d, 1.0)
    }

    fn graph(records: &[RawEdge<f64>]) -> HetGraph<f64> {
        build_graph(records, Directedness::Undirected).unwrap().0
    }

    #[test]
    fn star_neighbors() {
        let g = graph(&[rec("c", "t", "a"), rec("c", "t", "b"), rec("c", "t", "d")]);
        let c = g.node_index("c").unwrap();
        assert_eq!(g.neighbors(c).unwrap().len(), 3);
        let a = g.node_index("a").unwrap();
        let na = g.neighbors(a).unwrap();
        assert_eq!(na.len(), 1);
        assert_eq!(na[0].node, c);
    }

    #[test]
    fn path_neighbors_sorted_with_types() {
        let g = graph(&[rec("a", "x", "b"), rec("b", "y", "c")]);
        let b = g.node_index("b").unwrap();
        let n = g.neighbors(b).unwrap();
        assert_eq!(n.iter().map(|n| g.nodes().label(n.node)).collect::<Vec<_>>(), ["a", "c"]);
        assert_eq!(n.iter().map(|n| g.edge_types().label(n.etype)).collect::<Vec<_>>(), ["x", "y"]);
    }

    #[test]
    fn neighbors_out_of_range() {
        let g = graph(&[rec("a", "x", "b")]);
        assert!(matches!(g.neighbors(2), Err(Error::NodeOutOfRange(2))));
    }

    #[test]
    fn triangle_stats() {
        let g = graph(&[rec("a", "t", "b"), rec("b", "t", "c"), rec("c", "t", "a")]);
        let s = g.stats();
        assert_eq!((s.nodes, s.edges), (3, 3));
        assert_eq!(s.edge_type_counts, vec![("t".to_owned(), 3)]);
    }

    #[test]
    fn disconnected_two_types_stats() {
        let g = graph(&[rec("a", "x", "b"), rec("c", "y", "d")]);
        let s = g.stats();
        assert_eq!(s.edge_type_counts.iter().map(|c| c.1).collect::<Vec<_>>(), [1, 1]);
        assert_eq!(s.untyped_nodes, 4);
    }

    #[test]
    fn edge_type_degree_vector() {
        let mut recs = vec![rec("v", "t1", "a")];
        recs.extend([rec("v", "t2", "b"), rec("v", "t2", "c")]);
        recs.extend([rec("v", "t3", "d"), rec("v", "t3", "e"), rec("v", "t3", "f")]);
        recs.push(rec("x", "t4", "y"));
        let g = graph(&recs);
        let v = g.node_index("v").unwrap();
        assert_eq!(g.edge_type_degrees(v).unwrap(), vec![1, 2, 3, 0]);
    }
}
