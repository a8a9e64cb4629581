use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use edge2vec::pipeline::{self, EvalTask, InputFormat, Mode, PipelineConfig};

#[derive(Parser, Debug)]
#[command(name = "edge2vec", version, about = "Edge-type aware embeddings for heterogeneous graphs")]
struct Cli {
    #[command(flatten)]
    opts: Opts,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse the input graph and write a snapshot plus stats.
    Ingest,
    /// Learn the edge-type transition matrix.
    Matrix,
    /// Generate the full walk corpus.
    Walks,
    /// Train node embeddings on the corpus.
    Embed,
    /// Evaluate embeddings.
    Eval {
        #[arg(value_enum)]
        subtask: Subtask,
    },
    /// All stages end to end, writing manifest.json.
    Run,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Subtask {
    Classify,
    Linkpred,
    Rank,
    Similar,
    Project,
}

impl From<Subtask> for EvalTask {
    fn from(s: Subtask) -> Self {
        match s {
            Subtask::Classify => EvalTask::Classify,
            Subtask::Linkpred => EvalTask::Linkpred,
            Subtask::Rank => EvalTask::Rank,
            Subtask::Similar => EvalTask::Similar,
            Subtask::Project => EvalTask::Project,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Edgelist,
    Triples,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Deterministic,
    Parallel,
}

#[derive(Args, Debug)]
struct Opts {
    /// Graph file (edge list or triples).
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "edgelist", global = true)]
    format: FormatArg,
    /// Regex whose first capture group extracts a node type from a URI.
    #[arg(long, global = true)]
    type_rule: Option<String>,
    /// Ignore the weight column of an edge list.
    #[arg(long, global = true)]
    unweighted: bool,
    #[arg(long, global = true, overrides_with = "directed")]
    undirected: bool,
    #[arg(long, global = true, overrides_with = "undirected")]
    directed: bool,

    #[arg(long, default_value_t = 0.25, global = true)]
    p: f64,
    #[arg(long, default_value_t = 0.25, global = true)]
    q: f64,
    #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u64).range(1..), global = true)]
    walk_length: u64,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..), global = true)]
    walks_per_node: u64,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..), global = true)]
    em_iters: u64,
    #[arg(long, default_value_t = 0.01, global = true)]
    sample_ratio: f64,
    /// Walk with an all-ones matrix instead of the learned one.
    #[arg(long, global = true)]
    uniform_matrix: bool,

    #[arg(long, default_value_t = 128, value_parser = clap::value_parser!(u64).range(1..), global = true)]
    dim: u64,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..), global = true)]
    window: u64,
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..), global = true)]
    negatives: u64,
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..), global = true)]
    epochs: u64,
    #[arg(long, default_value_t = 0.025, global = true)]
    lr: f64,
    #[arg(long, default_value_t = 1e-4, global = true)]
    lr_min: f64,

    #[arg(long, default_value_t = 0, global = true)]
    seed: u64,
    /// Worker threads; defaults to all cores.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..), global = true)]
    threads: Option<u64>,
    #[arg(long, value_enum, default_value = "deterministic", global = true)]
    mode: ModeArg,
    #[arg(long, default_value = "edge2vec-out", global = true)]
    out_dir: PathBuf,

    /// Embedding file to evaluate instead of <out-dir>/embeddings.txt.
    #[arg(long, global = true)]
    embeddings: Option<PathBuf>,
    /// `node<TAB>class` file.
    #[arg(long, global = true)]
    labels: Option<PathBuf>,
    /// Positive `nodeA<TAB>nodeB` pairs.
    #[arg(long, global = true)]
    positives: Option<PathBuf>,
    /// Negative `nodeA<TAB>nodeB` pairs.
    #[arg(long, global = true)]
    negatives_file: Option<PathBuf>,
    /// `query<TAB>relevant` pairs (a bare query column is enough for `similar`).
    #[arg(long, global = true)]
    queries: Option<PathBuf>,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..), global = true)]
    topk: u64,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(2..), global = true)]
    folds: u64,
    /// Append per-edge-type degree counts to classification features.
    #[arg(long, global = true)]
    concat_degrees: bool,
    /// Cap on instances per class after balanced sampling.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..), global = true)]
    max_per_class: Option<u64>,
    /// Only retrieve nodes of this type.
    #[arg(long, global = true)]
    candidate_type: Option<String>,
}

impl Opts {
    fn config(&self) -> PipelineConfig {
        let n = |v: u64| v as usize;
        PipelineConfig {
            input: self.input.clone(),
            format: match self.format {
                FormatArg::Edgelist => InputFormat::Edgelist,
                FormatArg::Triples => InputFormat::Triples,
            },
            type_rule: self.type_rule.clone(),
            has_weight: !self.unweighted,
            directed: self.directed && !self.undirected,
            p: self.p,
            q: self.q,
            walk_length: n(self.walk_length),
            walks_per_node: n(self.walks_per_node),
            em_iters: n(self.em_iters),
            sample_ratio: self.sample_ratio,
            uniform_matrix: self.uniform_matrix,
            dim: n(self.dim),
            window: n(self.window),
            negatives: n(self.negatives),
            epochs: n(self.epochs),
            lr: self.lr,
            lr_min: self.lr_min,
            seed: self.seed,
            threads: self.threads.map(n),
            mode: match self.mode {
                ModeArg::Deterministic => Mode::Deterministic,
                ModeArg::Parallel => Mode::Parallel,
            },
            out_dir: self.out_dir.clone(),
            embeddings: self.embeddings.clone(),
            labels: self.labels.clone(),
            positives: self.positives.clone(),
            negatives_file: self.negatives_file.clone(),
            queries: self.queries.clone(),
            topk: n(self.topk),
            folds: n(self.folds),
            concat_degrees: self.concat_degrees,
            max_per_class: self.max_per_class.map(n),
            candidate_type: self.candidate_type.clone(),
        }
    }
}

fn execute(cli: Cli) -> anyhow::Result<()> {
    let cfg = cli.opts.config();
    cfg.validate()?;
    if let Some(t) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| anyhow::anyhow!("configuring the thread pool: {e}"))?;
    }
    let written = match cli.command {
        Command::Ingest => pipeline::ingest(&cfg)?,
        Command::Matrix => pipeline::matrix(&cfg)?,
        Command::Walks => pipeline::walks(&cfg)?,
        Command::Embed => pipeline::embed(&cfg)?,
        Command::Eval { subtask } => pipeline::eval(&cfg, subtask.into())?,
        Command::Run => {
            pipeline::run(&cfg)?;
            vec![cfg.out_dir.join(pipeline::artifacts::MANIFEST)]
        }
    };
    for p in written {
        println!("{}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
