use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use super::{parse_edge_list, Directedness, GraphBuilder, HetGraph};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const SNAPSHOT_EDGES: &str = "edges.tsv";
pub const SNAPSHOT_NODES: &str = "nodes.tsv";
pub const SNAPSHOT_EDGE_TYPES: &str = "edge_types.tsv";
const SNAPSHOT_META: &str = "meta.tsv";

/// Canonical edge list: `src etype dst weight`, one logical edge per line.
pub fn write_edge_list<T: Scalar, W: Write>(graph: &HetGraph<T>, mut out: W) -> Result<()> {
    for (s, d, t, w) in graph.edges() {
        writeln!(
            out,
            "{}\t{}\t{}\t{}",
            graph.nodes().label(s),
            graph.edge_types().label(t),
            graph.nodes().label(d),
            w
        )?;
    }
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })
}

pub(crate) fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}

/// Write the portable graph snapshot into `dir`; returns the files written.
pub fn write_snapshot<T: Scalar>(graph: &HetGraph<T>, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_owned(),
        source,
    })?;
    let paths: Vec<PathBuf> = [SNAPSHOT_EDGES, SNAPSHOT_NODES, SNAPSHOT_EDGE_TYPES, SNAPSHOT_META]
        .iter()
        .map(|f| dir.join(f))
        .collect();

    let mut w = create(&paths[0])?;
    write_edge_list(graph, &mut w)?;
    w.flush()?;

    let mut w = create(&paths[1])?;
    for v in 0..graph.num_nodes() {
        writeln!(w, "{}\t{}", graph.nodes().label(v), graph.node_type(v).unwrap_or(""))?;
    }
    w.flush()?;

    let mut w = create(&paths[2])?;
    for label in graph.edge_types().labels() {
        writeln!(w, "{label}")?;
    }
    w.flush()?;

    let mut w = create(&paths[3])?;
    writeln!(w, "directed\t{}", graph.directedness().is_directed())?;
    w.flush()?;
    Ok(paths)
}

/// Reload a snapshot written by [`write_snapshot`], preserving indices.
pub fn load_snapshot<T: Scalar>(dir: &Path) -> Result<HetGraph<T>> {
    let meta_path = dir.join(SNAPSHOT_META);
    let mut directedness = Directedness::Undirected;
    for line in open(&meta_path)?.lines() {
        let line = line?;
        if let Some(("directed", v)) = line.split_once('\t') {
            directedness = match v.trim() {
                "true" => Directedness::Directed,
                "false" => Directedness::Undirected,
                other => {
                    return Err(Error::invalid(format!("bad directed flag `{other}`")).in_file(&meta_path))
                }
            };
        }
    }

    let mut builder = GraphBuilder::new(directedness);
    let nodes_path = dir.join(SNAPSHOT_NODES);
    for line in open(&nodes_path)?.lines() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let (label, ty) = line.split_once('\t').unwrap_or((line.as_str(), ""));
        let ty = (!ty.is_empty()).then(|| ty.to_owned());
        builder = builder.with_node(label, ty);
    }
    for line in open(&dir.join(SNAPSHOT_EDGE_TYPES))?.lines() {
        let line = line?;
        if !line.is_empty() {
            builder = builder.with_edge_type(&line);
        }
    }
    let edges_path = dir.join(SNAPSHOT_EDGES);
    let records = parse_edge_list(open(&edges_path)?, true).map_err(|e| e.in_file(&edges_path))?;
    Ok(builder.build(&records)?.0)
}
