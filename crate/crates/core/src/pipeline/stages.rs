use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use super::config::{artifacts, InputFormat, PipelineConfig};
use crate::error::{Error, Result};
use crate::evalkit::{
    balanced_sample, cosine_topk, cross_validate, node_features, pair_features, pca_project_2d, ranking_metrics,
    CvReport, EmbeddingTable, LabeledInstances, LinearConfig,
};
use crate::hetgraph::{build_graph, load_snapshot, parse_edge_list, parse_triples, write_snapshot, HetGraph, TypeRule};
use crate::rng;
use crate::skipgram::{train_embeddings, EmbeddingMatrix};
use crate::transition::{train_transition_matrix, TransitionMatrix};
use crate::walker::{generate_corpus, WalkCorpus};

pub const STAGES: [&str; 5] = ["ingest", "matrix", "walks", "embed", "eval"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EvalTask {
    Classify,
    Linkpred,
    Rank,
    Similar,
    Project,
}

impl EvalTask {
    pub fn name(self) -> &'static str {
        match self {
            EvalTask::Classify => "classify",
            EvalTask::Linkpred => "linkpred",
            EvalTask::Rank => "rank",
            EvalTask::Similar => "similar",
            EvalTask::Project => "project",
        }
    }
}

impl std::str::FromStr for EvalTask {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "classify" => EvalTask::Classify,
            "linkpred" => EvalTask::Linkpred,
            "rank" => EvalTask::Rank,
            "similar" => EvalTask::Similar,
            "project" => EvalTask::Project,
            other => return Err(Error::param(format!("unknown eval subtask `{other}`"))),
        })
    }
}

fn staged<T>(stage: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Stage {
        stage,
        source: Box::new(e),
    })
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_owned(),
        source,
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(io_err(path))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    File::create(path).map(BufWriter::new).map_err(io_err(path))
}

/// Write through `f` and flush; I/O errors name the file.
fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<PathBuf> {
    let mut w = create(path)?;
    f(&mut w).map_err(|e| match e {
        Error::RawIo(source) => Error::Io {
            path: path.to_owned(),
            source,
        },
        e => e,
    })?;
    w.flush().map_err(io_err(path))?;
    Ok(path.to_owned())
}

fn graph_dir(cfg: &PipelineConfig) -> PathBuf {
    cfg.out_dir.join(artifacts::GRAPH_DIR)
}

fn load_graph(cfg: &PipelineConfig) -> Result<HetGraph<f64>> {
    load_snapshot(&graph_dir(cfg))
}

/// Parse the input file and write the graph snapshot and stats report.
pub fn ingest(cfg: &PipelineConfig) -> Result<Vec<PathBuf>> {
    staged("ingest", ingest_inner(cfg))
}

fn ingest_inner(cfg: &PipelineConfig) -> Result<Vec<PathBuf>> {
    let path = cfg.input_path()?;
    let reader = open(path)?;
    let records = match cfg.format {
        InputFormat::Edgelist => parse_edge_list::<f64, _>(reader, cfg.has_weight),
        InputFormat::Triples => {
            let rule = match &cfg.type_rule {
                Some(pattern) => TypeRule::new(pattern)?,
                None => TypeRule::default(),
            };
            parse_triples(reader, &rule)
        }
    }
    .map_err(|e| e.in_file(path))?;
    let (graph, report) = build_graph(&records, cfg.directedness()).map_err(|e| e.in_file(path))?;
    let mut out = write_snapshot(&graph, &graph_dir(cfg))?;

    let stats = graph.stats();
    log::info!("ingested {} nodes, {} edges", stats.nodes, stats.edges);
    out.push(write_file(&cfg.out_dir.join(artifacts::STATS), |w| {
        writeln!(w, "nodes\t{}", stats.nodes)?;
        writeln!(w, "edges\t{}", stats.edges)?;
        writeln!(w, "edge_types\t{}", graph.num_edge_types())?;
        writeln!(w, "untyped_nodes\t{}", stats.untyped_nodes)?;
        writeln!(w, "records\t{}", report.records)?;
        writeln!(w, "self_loops_dropped\t{}", report.self_loops_dropped)?;
        writeln!(w, "duplicates_merged\t{}", report.duplicates_merged)?;
        for (t, c) in &stats.node_type_counts {
            writeln!(w, "node_type\t{t}\t{c}")?;
        }
        for (t, c) in &stats.edge_type_counts {
            writeln!(w, "edge_type\t{t}\t{c}")?;
        }
        Ok(())
    })?);
    Ok(out)
}

/// Learn the edge-type transition matrix and log the per-iteration change.
pub fn matrix(cfg: &PipelineConfig) -> Result<Vec<PathBuf>> {
    staged("matrix", matrix_inner(cfg))
}

fn matrix_inner(cfg: &PipelineConfig) -> Result<Vec<PathBuf>> {
    let graph = load_graph(cfg)?;
    let seed = rng::stage_seed(cfg.seed, "matrix");
    let run = train_transition_matrix(&graph, &cfg.em_params(), &cfg.walk_params(), seed)?;
    let m = write_file(&cfg.out_dir.join(artifacts::MATRIX), |w| run.matrix.write_tsv(w))?;
    let log = write_file(&cfg.out_dir.join(artifacts::MATRIX_LOG), |w| {
        writeln!(w, "iteration\tmax_abs_change")?;
        for (i, c) in run.max_changes.iter().enumerate() {
            writeln!(w, "{}\t{}", i + 1, c)?;
        }
        Ok(())
    })?;
    Ok(vec![m, log])
}

/// Full-coverage corpus: `walks_per_node` walks from every node.
pub fn walks(cfg: &PipelineConfig) -> Result<Vec<PathBuf>> {
    staged("walks", walks_inner(cfg))
}

fn walks_inner(cfg: &PipelineConfig) -> Result<Vec<PathBuf>> {
    let graph = load_graph(cfg)?;
    let labels = graph.edge_types().labels().to_vec();
    let matrix = if cfg.uniform_matrix {
        TransitionMatrix::ones(labels)
    } else {
        let path = cfg.out_dir.join(artifacts::MATRIX);
        TransitionMatrix::read_tsv(open(&path)?)
            .and_then(|m| m.aligned_to(graph.edge_types()))
            .map_err(|e| e.in_file(&path))?
    };
    let starts: Vec<usize> = (0..graph.num_nodes()).collect();
    let corpus = generate_corpus(
        &graph,
        &matrix,
        &starts,
        &cfg.walk_params(),
        rng::stage_seed(cfg.seed, "walks"),
    )?;
    log::info!("generated {} walks, {} tokens", corpus.len(), corpus.num_tokens());
    let nodes_path = cfg.out_dir.join(artifacts::WALKS);
    let types_path = cfg.out_dir.join(artifacts::WALK_ETYPES);
    let (mut wn, mut wt) = (create(&nodes_path)?, create(&types_path)?);
    corpus.write(&graph, &mut wn, &mut wt)?;
    Ok(vec![nodes_path, types_path])
}

/// Train skip-gram embeddings on the walk corpus.
pub fn embed(cfg: &PipelineConfig) -> Result<Vec<PathBuf>> {
    staged("embed", embed_inner(cfg))
}

fn embed_inner(cfg: &PipelineConfig) -> Result<Vec<PathBuf>> {
    let graph = load_graph(cfg)?;
    let walks_path = cfg.out_dir.join(artifacts::WALKS);
    let corpus = WalkCorpus::read(&graph, open(&walks_path)?, None::<BufReader<File>>)
        .map_err(|e| e.in_file(&walks_path))?;
    let emb = train_embeddings::<f64>(
        &corpus,
        graph.num_nodes(),
        &cfg.train_params(),
        rng::stage_seed(cfg.seed, "embed"),
    )?;
    if !emb.is_finite() {
        return Err(Error::invalid("training diverged to non-finite embeddings"));
    }
    let path = write_file(&cfg.out_dir.join(artifacts::EMBEDDINGS), |w| {
        emb.write_word2vec(graph.nodes().labels(), w)
    })?;
    Ok(vec![path])
}

/// Run one evaluation protocol against the embedding file.
pub fn eval(cfg: &PipelineConfig, task: EvalTask) -> Result<Vec<PathBuf>> {
    staged("eval", eval_inner(cfg, task))
}

/// Every protocol whose ground truth is configured: classification and
/// projection with labels, link prediction with both pair files, ranking
/// with queries.
pub fn available_eval_tasks(cfg: &PipelineConfig) -> Vec<EvalTask> {
    let mut tasks = Vec::new();
    if cfg.labels.is_some() {
        tasks.extend([EvalTask::Classify, EvalTask::Project]);
    }
    if cfg.positives.is_some() && cfg.negatives_file.is_some() {
        tasks.push(EvalTask::Linkpred);
    }
    if cfg.queries.is_some() {
        tasks.push(EvalTask::Rank);
    }
    tasks
}

fn eval_inner(cfg: &PipelineConfig, task: EvalTask) -> Result<Vec<PathBuf>> {
    let path = cfg.embeddings_path();
    let (labels, matrix) = EmbeddingMatrix::<f64>::read_word2vec(open(&path)?).map_err(|e| e.in_file(&path))?;
    let table = EmbeddingTable::new(labels, matrix)?;
    let seed = rng::stage_seed(cfg.seed, "eval");
    let dir = cfg.out_dir.join(artifacts::EVAL_DIR);
    match task {
        EvalTask::Classify => classify(cfg, &table, seed, &dir),
        EvalTask::Linkpred => linkpred(cfg, &table, seed, &dir),
        EvalTask::Rank => rank(cfg, &table, &dir),
        EvalTask::Similar => similar(cfg, &table, &dir),
        EvalTask::Project => project(cfg, &table, &dir),
    }
}

fn require<'a>(path: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    path.as_deref()
        .ok_or_else(|| Error::param(format!("this subtask needs {flag}")))
}

/// Tab-separated rows of `min..=max` columns; blank and `#` lines skipped.
fn read_rows(path: &Path, min: usize, max: usize) -> Result<Vec<Vec<String>>> {
    let mut rows = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        let line = line.trim_end_matches(['\r', '\n']);
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<String> = line.split('\t').map(|c| c.trim().to_owned()).collect();
        if cols.len() < min || cols.len() > max || cols.iter().any(String::is_empty) {
            let msg = format!("expected {min} to {max} tab-separated columns, got {}", cols.len());
            return Err(Error::Parse { line: i + 1, msg }.in_file(path));
        }
        rows.push(cols);
    }
    if rows.is_empty() {
        return Err(Error::invalid("no records").in_file(path));
    }
    Ok(rows)
}

type Labeled = Vec<(String, usize)>;

/// `(node, class)` rows and the sorted class names.
fn read_labels(path: &Path) -> Result<(Labeled, Vec<String>)> {
    let rows = read_rows(path, 2, 2)?;
    let classes: Vec<String> = rows
        .iter()
        .map(|r| r[1].clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let index: HashMap<&str, usize> = classes.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
    let labeled = rows.iter().map(|r| (r[0].clone(), index[r[1].as_str()])).collect();
    Ok((labeled, classes))
}

fn write_cv(dir: &Path, name: &str, cv: &CvReport<f64>, instances: usize, classes: usize) -> Result<Vec<PathBuf>> {
    let summary = write_file(&dir.join(format!("{name}.tsv")), |w| {
        writeln!(w, "instances\t{instances}")?;
        writeln!(w, "classes\t{classes}")?;
        writeln!(w, "folds\t{}", cv.folds.len())?;
        writeln!(w, "precision\t{}", cv.mean.precision)?;
        writeln!(w, "recall\t{}", cv.mean.recall)?;
        writeln!(w, "f1\t{}", cv.mean.f1)?;
        writeln!(w, "hamming\t{}", cv.mean.hamming)?;
        if let Some(a) = cv.mean_auroc {
            writeln!(w, "auroc\t{a}")?;
        }
        Ok(())
    })?;
    let detail = write_file(&dir.join(format!("{name}_folds.tsv")), |w| {
        writeln!(w, "fold\ttest_size\tprecision\trecall\tf1\thamming\tauroc")?;
        for (k, f) in cv.folds.iter().enumerate() {
            let m = &f.metrics;
            let auroc = f.auroc.map_or_else(|| "NA".to_owned(), |a| a.to_string());
            writeln!(
                w,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                k + 1,
                f.test_size,
                m.precision,
                m.recall,
                m.f1,
                m.hamming,
                auroc
            )?;
        }
        Ok(())
    })?;
    Ok(vec![summary, detail])
}

fn classify(cfg: &PipelineConfig, table: &EmbeddingTable<f64>, seed: u64, dir: &Path) -> Result<Vec<PathBuf>> {
    let path = require(&cfg.labels, "--labels")?;
    let (labeled, classes) = read_labels(path)?;
    let y: Vec<usize> = labeled.iter().map(|(_, c)| *c).collect();
    let keep = balanced_sample(&y, cfg.max_per_class, rng::mix(seed, &[0]));
    let nodes: Vec<&str> = keep.iter().map(|&i| labeled[i].0.as_str()).collect();
    let y: Vec<usize> = keep.iter().map(|&i| y[i]).collect();
    let graph = if cfg.concat_degrees { Some(load_graph(cfg)?) } else { None };
    let features = node_features(table, &nodes, graph.as_ref(), cfg.concat_degrees)?;
    let data = LabeledInstances::new(features, y, classes.len())?;
    let cv = cross_validate(&data, cfg.folds, &LinearConfig::svm(), rng::mix(seed, &[1]))?;
    log::info!("classify: macro F1 {:.4}", cv.mean.f1);
    write_cv(dir, "classify", &cv, data.len(), classes.len())
}

fn linkpred(cfg: &PipelineConfig, table: &EmbeddingTable<f64>, seed: u64, dir: &Path) -> Result<Vec<PathBuf>> {
    let pos = read_rows(require(&cfg.positives, "--positives")?, 2, 2)?;
    let neg = read_rows(require(&cfg.negatives_file, "--negatives-file")?, 2, 2)?;
    let pairs: Vec<(&Vec<String>, usize)> = neg.iter().map(|r| (r, 0)).chain(pos.iter().map(|r| (r, 1))).collect();
    let y: Vec<usize> = pairs.iter().map(|p| p.1).collect();
    let keep = balanced_sample(&y, cfg.max_per_class, rng::mix(seed, &[2]));
    let features = keep
        .iter()
        .map(|&i| pair_features(table, &pairs[i].0[0], &pairs[i].0[1]))
        .collect::<Result<Vec<_>>>()?;
    let data = LabeledInstances::new(features, keep.iter().map(|&i| y[i]).collect(), 2)?;
    let cv = cross_validate(&data, cfg.folds, &LinearConfig::logistic(), rng::mix(seed, &[3]))?;
    log::info!("linkpred: F1 {:.4}, AUROC {:?}", cv.mean.f1, cv.mean_auroc);
    write_cv(dir, "linkpred", &cv, data.len(), 2)
}

/// Queries in first-appearance order with their relevant sets.
fn read_queries(path: &Path, need_relevant: bool) -> Result<Vec<(String, HashSet<String>)>> {
    let rows = read_rows(path, if need_relevant { 2 } else { 1 }, 2)?;
    let mut order: Vec<(String, HashSet<String>)> = Vec::new();
    let mut slot: HashMap<String, usize> = HashMap::new();
    for r in rows {
        let i = *slot.entry(r[0].clone()).or_insert_with(|| {
            order.push((r[0].clone(), HashSet::new()));
            order.len() - 1
        });
        if let Some(rel) = r.get(1) {
            order[i].1.insert(rel.clone());
        }
    }
    Ok(order)
}

/// Rows allowed as retrieval candidates under `--candidate-type`.
fn candidate_mask(cfg: &PipelineConfig, table: &EmbeddingTable<f64>) -> Result<Option<Vec<bool>>> {
    let Some(wanted) = &cfg.candidate_type else {
        return Ok(None);
    };
    let graph = load_graph(cfg)?;
    Ok(Some(
        table
            .vocab
            .labels()
            .iter()
            .map(|l| {
                graph
                    .nodes()
                    .get(l)
                    .and_then(|v| graph.node_type(v))
                    .is_some_and(|t| t == wanted)
            })
            .collect(),
    ))
}

fn top_labels(
    table: &EmbeddingTable<f64>,
    query: &str,
    k: usize,
    mask: &Option<Vec<bool>>,
) -> Result<Vec<(String, f64)>> {
    let q = table.index(query)?;
    let filter = mask.as_ref().map(|m| move |i: usize| m[i]);
    let filter_ref: Option<&dyn Fn(usize) -> bool> = filter.as_ref().map(|f| f as &dyn Fn(usize) -> bool);
    Ok(cosine_topk(&table.matrix, q, k, filter_ref)?
        .into_iter()
        .map(|(i, s)| (table.vocab.label(i).to_owned(), s))
        .collect())
}

fn rank(cfg: &PipelineConfig, table: &EmbeddingTable<f64>, dir: &Path) -> Result<Vec<PathBuf>> {
    let queries = read_queries(require(&cfg.queries, "--queries")?, true)?;
    let mask = candidate_mask(cfg, table)?;
    let mut ranked = Vec::with_capacity(queries.len());
    for (q, _) in &queries {
        ranked.push(top_labels(table, q, cfg.topk, &mask)?.into_iter().map(|(l, _)| l).collect());
    }
    let relevant: Vec<HashSet<String>> = queries.iter().map(|(_, r)| r.clone()).collect();
    let report = ranking_metrics::<f64, String>(&ranked, &relevant, &[10, 100])?;
    log::info!("rank: MAP {:.4}, MRR {:.4}", report.map, report.mrr);
    let summary = write_file(&dir.join("rank.tsv"), |w| {
        writeln!(w, "queries\t{}", queries.len())?;
        for (i, k) in report.cutoffs.iter().enumerate() {
            writeln!(w, "P@{k}\t{}", report.precision[i])?;
        }
        for (i, k) in report.cutoffs.iter().enumerate() {
            writeln!(w, "R@{k}\t{}", report.recall[i])?;
        }
        writeln!(w, "MAP\t{}", report.map)?;
        writeln!(w, "NDCG\t{}", report.ndcg)?;
        writeln!(w, "MRR\t{}", report.mrr)?;
        Ok(())
    })?;
    let detail = write_file(&dir.join("rank_queries.tsv"), |w| {
        writeln!(w, "query\trelevant\tP@10\tP@100\tR@10\tR@100\tAP\tNDCG\tRR")?;
        for ((q, rel), m) in queries.iter().zip(&report.per_query) {
            writeln!(
                w,
                "{q}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                rel.len(),
                m.precision[0],
                m.precision[1],
                m.recall[0],
                m.recall[1],
                m.average_precision,
                m.ndcg,
                m.reciprocal_rank
            )?;
        }
        Ok(())
    })?;
    Ok(vec![summary, detail])
}

fn similar(cfg: &PipelineConfig, table: &EmbeddingTable<f64>, dir: &Path) -> Result<Vec<PathBuf>> {
    let queries = read_queries(require(&cfg.queries, "--queries")?, false)?;
    let mask = candidate_mask(cfg, table)?;
    let mut rows = Vec::new();
    for (q, _) in &queries {
        rows.push((q, top_labels(table, q, cfg.topk, &mask)?));
    }
    let path = write_file(&dir.join("similar.tsv"), |w| {
        writeln!(w, "query\trank\tnode\tcosine")?;
        for (q, top) in &rows {
            for (r, (node, s)) in top.iter().enumerate() {
                writeln!(w, "{q}\t{}\t{node}\t{s}", r + 1)?;
            }
        }
        Ok(())
    })?;
    Ok(vec![path])
}

/// 2-D PCA coordinates of the labeled nodes, or of every node (classed by
/// node type when a graph snapshot exists).
fn project(cfg: &PipelineConfig, table: &EmbeddingTable<f64>, dir: &Path) -> Result<Vec<PathBuf>> {
    let points: Vec<(String, String)> = match &cfg.labels {
        Some(path) => read_rows(path, 2, 2)?
            .into_iter()
            .map(|mut r| (std::mem::take(&mut r[0]), std::mem::take(&mut r[1])))
            .collect(),
        None => {
            let graph = load_graph(cfg).ok();
            table
                .vocab
                .labels()
                .iter()
                .map(|l| {
                    let class = graph
                        .as_ref()
                        .and_then(|g| g.nodes().get(l).and_then(|v| g.node_type(v)))
                        .unwrap_or("")
                        .to_owned();
                    (l.clone(), class)
                })
                .collect()
        }
    };
    let rows = points
        .iter()
        .map(|(n, _)| table.vector(n).map(<[f64]>::to_vec))
        .collect::<Result<Vec<_>>>()?;
    let pca = pca_project_2d(&rows)?;
    let path = write_file(&dir.join("project.tsv"), |w| {
        for ((node, class), [x, y]) in points.iter().zip(&pca.coords) {
            writeln!(w, "{node}\t{x}\t{y}\t{class}")?;
        }
        Ok(())
    })?;
    Ok(vec![path])
}
