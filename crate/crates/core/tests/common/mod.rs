#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::Path;

use edge2vec::hetgraph::{build_graph, Directedness, HetGraph, RawEdge};
use edge2vec::rng;
use rand::Rng;

pub const TYPES: [&str; 3] = ["A", "B", "C"];
pub const PER_TYPE: usize = 200;

/// Planted heterograph: 3 node types of 200 nodes each. Within-type edges
/// (probability 0.05) carry a type-specific edge type, cross-type edges
/// (probability 0.005) a shared fourth type.
pub struct Planted {
    pub records: Vec<RawEdge<f64>>,
    /// `(node, class)` for every node.
    pub labels: Vec<(String, String)>,
}

pub fn node_label(ty: usize, i: usize) -> String {
    format!("{}{i}", TYPES[ty])
}

pub fn planted(seed: u64) -> Planted {
    let mut rng = rng::stream(seed, &[]);
    let n = TYPES.len() * PER_TYPE;
    let ty = |v: usize| v / PER_TYPE;
    let label = |v: usize| node_label(ty(v), v % PER_TYPE);
    let mut records = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            let (ta, tb) = (ty(a), ty(b));
            let (p, etype) = if ta == tb {
                (0.05, format!("in{}", TYPES[ta]))
            } else {
                (0.005, "cross".to_owned())
            };
            if rng.gen::<f64>() < p {
                records.push(RawEdge::new(label(a), etype, label(b), 1.0));
            }
        }
    }
    let labels = (0..n).map(|v| (label(v), TYPES[ty(v)].to_owned())).collect();
    Planted { records, labels }
}

impl Planted {
    pub fn edge_list(&self) -> String {
        let mut s = String::new();
        for r in &self.records {
            writeln!(s, "{}\t{}\t{}\t{}", r.src, r.etype, r.dst, r.weight).unwrap();
        }
        s
    }

    pub fn labels_tsv(&self) -> String {
        self.labels.iter().map(|(n, c)| format!("{n}\t{c}\n")).collect()
    }

    pub fn write(&self, dir: &Path) -> (std::path::PathBuf, std::path::PathBuf) {
        let (g, l) = (dir.join("planted.tsv"), dir.join("labels.tsv"));
        std::fs::write(&g, self.edge_list()).unwrap();
        std::fs::write(&l, self.labels_tsv()).unwrap();
        (g, l)
    }
}

/// Zachary's karate club, nodes 1..=34.
pub const KARATE: [(u32, u32); 78] = [
    (1, 2), (1, 3), (1, 4), (1, 5), (1, 6), (1, 7), (1, 8), (1, 9), (1, 11), (1, 12), (1, 13), (1, 14),
    (1, 18), (1, 20), (1, 22), (1, 32), (2, 3), (2, 4), (2, 8), (2, 14), (2, 18), (2, 20), (2, 22),
    (2, 31), (3, 4), (3, 8), (3, 9), (3, 10), (3, 14), (3, 28), (3, 29), (3, 33), (4, 8), (4, 13),
    (4, 14), (5, 7), (5, 11), (6, 7), (6, 11), (6, 17), (7, 17), (9, 31), (9, 33), (9, 34), (10, 34),
    (14, 34), (15, 33), (15, 34), (16, 33), (16, 34), (19, 33), (19, 34), (20, 34), (21, 33), (21, 34),
    (23, 33), (23, 34), (24, 26), (24, 28), (24, 30), (24, 33), (24, 34), (25, 26), (25, 28), (25, 32),
    (26, 32), (27, 30), (27, 34), (28, 34), (29, 32), (29, 34), (30, 33), (30, 34), (31, 33), (31, 34),
    (32, 33), (32, 34), (33, 34),
];

pub fn karate() -> HetGraph<f64> {
    let recs: Vec<RawEdge<f64>> = KARATE
        .iter()
        .map(|&(a, b)| RawEdge::new(a.to_string(), "tie", b.to_string(), 1.0))
        .collect();
    build_graph(&recs, Directedness::Undirected).unwrap().0
}

pub fn graph_from(edges: &[(&str, &str, &str)]) -> HetGraph<f64> {
    let recs: Vec<RawEdge<f64>> = edges.iter().map(|&(s, t, d)| RawEdge::new(s, t, d, 1.0)).collect();
    build_graph(&recs, Directedness::Undirected).unwrap().0
}
