//! Experiment driver: ingest an interaction file, generate seeded
//! realizations, run the selected model, evaluate, and write reports.
//!
//! Environment overrides: `AIPROBS_SEED` replaces the base seed and
//! `AIPROBS_OUT` the output directory, taking precedence over flags.

use std::path::PathBuf;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};

use aiprobs::diffusion::{
    export_prediction_text, export_prediction_triples, CombinationConfig, Normalization,
    PredictionMatrix, Proportioning,
};
use aiprobs::embed::{export_representations, SpectralMode};
use aiprobs::eval::render_table;
use aiprobs::experiment::{
    load_graph, run_experiment, run_matrix, Model, Representation, RunConfig,
};
use aiprobs::graph::BipartiteGraph;
use aiprobs::similarity::Metric;
use aiprobs::split::{export_split, split};

#[derive(Parser)]
#[command(
    name = "aiprobs",
    version,
    about = "Bipartite diffusion link prediction with determinable node representations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one model over seeded realizations and write reports
    Run(RunArgs),
    /// Sweep similarity/normalization/proportioning combinations into one table
    Matrix(MatrixArgs),
    /// Export seeded train/eval/test split manifests for audit
    Split(SplitArgs),
    /// Compute node representations and export them as delimited text
    Repr(ReprArgs),
    /// Export one model's full prediction matrix
    Predict(PredictArgs),
}

#[derive(Args)]
struct DataArgs {
    /// Interaction file: `user item [0/1]` per line, '#' comments skipped
    #[arg(long)]
    data: PathBuf,
    /// Field delimiter (default: any run of whitespace)
    #[arg(long)]
    delimiter: Option<char>,
}

#[derive(Args)]
struct ProtocolArgs {
    /// Base seed; realization k uses seed + k (env: AIPROBS_SEED)
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Number of independent split realizations
    #[arg(long, default_value_t = 30)]
    realizations: usize,
    /// Train/eval/test ratios, comma separated
    #[arg(long, value_parser = parse_ratios, default_value = "0.8,0.1,0.1")]
    ratios: (f64, f64, f64),
    /// Recommendation list length N
    #[arg(long = "top-n", default_value_t = 10)]
    top_n: usize,
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long, value_enum, default_value_t = ModelArg::Aiprobs)]
    model: ModelArg,
    #[command(flatten)]
    repr: ReprOpts,
    #[arg(long, value_enum, default_value_t = MetricArg::Cosine)]
    metric: MetricArg,
    #[arg(long, value_enum, default_value_t = NormArg::Maxmin)]
    normalization: NormArg,
    #[arg(long, value_enum, default_value_t = PropArg::Share)]
    proportioning: PropArg,
}

#[derive(Args)]
struct ReprOpts {
    #[arg(long, value_enum, default_value_t = ReprArg::MethodOne)]
    representation: ReprArg,
    /// Method-two matrix choice per eigenpair
    #[arg(long = "spectral-mode", value_enum, default_value_t = ModeArg::WeightedByEigenvalue)]
    spectral_mode: ModeArg,
    /// Method-two top-k eigenpair truncation (approximation for large graphs)
    #[arg(long)]
    truncation: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Probs,
    Aiprobs,
    PureDhc,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReprArg {
    MethodOne,
    MethodTwo,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    WeightedByEigenvalue,
    RawIdempotent,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Cosine,
    Cov,
    Dot,
    Euclidean,
    Pearson,
}

#[derive(Clone, Copy, ValueEnum)]
enum NormArg {
    Maxmin,
    None,
}

#[derive(Clone, Copy, ValueEnum)]
enum PropArg {
    Share,
    Literal,
    None,
}

impl From<ModelArg> for Model {
    fn from(v: ModelArg) -> Self {
        match v {
            ModelArg::Probs => Model::Probs,
            ModelArg::Aiprobs => Model::AiProbs,
            ModelArg::PureDhc => Model::PureDhc,
        }
    }
}

impl From<ReprArg> for Representation {
    fn from(v: ReprArg) -> Self {
        match v {
            ReprArg::MethodOne => Representation::MethodOne,
            ReprArg::MethodTwo => Representation::MethodTwo,
        }
    }
}

impl From<ModeArg> for SpectralMode {
    fn from(v: ModeArg) -> Self {
        match v {
            ModeArg::WeightedByEigenvalue => SpectralMode::WeightedByEigenvalue,
            ModeArg::RawIdempotent => SpectralMode::RawIdempotent,
        }
    }
}

impl From<MetricArg> for Metric {
    fn from(v: MetricArg) -> Self {
        match v {
            MetricArg::Cosine => Metric::Cosine,
            MetricArg::Cov => Metric::Cov,
            MetricArg::Dot => Metric::Dot,
            MetricArg::Euclidean => Metric::Euclidean,
            MetricArg::Pearson => Metric::Pearson,
        }
    }
}

impl From<NormArg> for Normalization {
    fn from(v: NormArg) -> Self {
        match v {
            NormArg::Maxmin => Normalization::MaxMin,
            NormArg::None => Normalization::None,
        }
    }
}

impl From<PropArg> for Proportioning {
    fn from(v: PropArg) -> Self {
        match v {
            PropArg::Share => Proportioning::Share,
            PropArg::Literal => Proportioning::Literal,
            PropArg::None => Proportioning::None,
        }
    }
}

fn parse_ratios(s: &str) -> Result<(f64, f64, f64), String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err("ratios must be three comma-separated numbers".into());
    }
    let mut vals = [0.0f64; 3];
    for (slot, part) in vals.iter_mut().zip(&parts) {
        *slot = part
            .trim()
            .parse()
            .map_err(|e| format!("bad ratio {part:?}: {e}"))?;
    }
    Ok((vals[0], vals[1], vals[2]))
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    protocol: ProtocolArgs,
    #[command(flatten)]
    model: ModelArgs,
    /// Output directory (env: AIPROBS_OUT)
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct MatrixArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    protocol: ProtocolArgs,
    #[command(flatten)]
    repr: ReprOpts,
    /// Comma-separated combination keys (metric+normalization+proportioning);
    /// default: the fifteen standard combinations
    #[arg(long)]
    combinations: Option<String>,
    /// Output directory (env: AIPROBS_OUT)
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct SplitArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    protocol: ProtocolArgs,
    /// Output directory (env: AIPROBS_OUT)
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct ReprArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    repr: ReprOpts,
    /// Build representations on the train graph of this split seed instead
    /// of the whole graph
    #[arg(long)]
    seed: Option<u64>,
    /// Train/eval/test ratios used when --seed is given
    #[arg(long, value_parser = parse_ratios, default_value = "0.8,0.1,0.1")]
    ratios: (f64, f64, f64),
    /// Output directory (env: AIPROBS_OUT)
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    model: ModelArgs,
    /// Predict from the train graph of this split seed instead of the whole
    /// graph
    #[arg(long)]
    seed: Option<u64>,
    /// Train/eval/test ratios used when --seed is given
    #[arg(long, value_parser = parse_ratios, default_value = "0.8,0.1,0.1")]
    ratios: (f64, f64, f64),
    /// Output format: full matrix as text or nonzero (user, item, score)
    /// little-endian binary triples
    #[arg(long, value_enum, default_value_t = FormatArg::Text)]
    format: FormatArg,
    /// Output file (env: AIPROBS_OUT sets the parent directory)
    #[arg(long, default_value = "predictions.out")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Binary,
}

fn env_seed(flag: u64) -> anyhow::Result<u64> {
    match std::env::var("AIPROBS_SEED") {
        Ok(v) => v
            .parse()
            .with_context(|| format!("AIPROBS_SEED={v:?} is not an integer")),
        Err(_) => Ok(flag),
    }
}

fn env_out(flag: PathBuf) -> PathBuf {
    match std::env::var("AIPROBS_OUT") {
        Ok(v) => PathBuf::from(v),
        Err(_) => flag,
    }
}

fn build_config(
    data: &DataArgs,
    protocol: &ProtocolArgs,
    model: &ModelArgs,
    out: &std::path::Path,
) -> anyhow::Result<RunConfig> {
    let mut cfg = RunConfig::new(&data.data, env_out(out.to_path_buf()));
    cfg.delimiter = data.delimiter;
    cfg.base_seed = env_seed(protocol.seed)?;
    cfg.realizations = protocol.realizations;
    cfg.ratios = protocol.ratios;
    cfg.top_n = protocol.top_n;
    cfg.model = model.model.into();
    cfg.representation = model.repr.representation.into();
    cfg.spectral_mode = model.repr.spectral_mode.into();
    cfg.truncation = model.repr.truncation;
    cfg.combination = CombinationConfig::new(
        model.metric.into(),
        model.normalization.into(),
        model.proportioning.into(),
    );
    Ok(cfg)
}

fn cmd_run(args: RunArgs) -> anyhow::Result<()> {
    let cfg = build_config(&args.data, &args.protocol, &args.model, &args.out)?;
    let output = run_experiment::<f64>(&cfg)?;
    print!("{}", render_table(std::slice::from_ref(&output.report)));
    eprintln!("reports written to {}", cfg.output.display());
    Ok(())
}

fn cmd_matrix(args: MatrixArgs) -> anyhow::Result<()> {
    let model = ModelArgs {
        model: ModelArg::Aiprobs,
        repr: args.repr,
        metric: MetricArg::Cosine,
        normalization: NormArg::Maxmin,
        proportioning: PropArg::Share,
    };
    let cfg = build_config(&args.data, &args.protocol, &model, &args.out)?;
    let combos = match &args.combinations {
        None => CombinationConfig::standard_matrix(),
        Some(list) => list
            .split(',')
            .map(|key| CombinationConfig::parse(key.trim()))
            .collect::<Result<Vec<_>, _>>()?,
    };
    let reports = run_matrix::<f64>(&cfg, &combos)?;
    print!("{}", render_table(&reports));
    eprintln!("reports written to {}", cfg.output.display());
    Ok(())
}

fn cmd_split(args: SplitArgs) -> anyhow::Result<()> {
    let out = env_out(args.out);
    let base_seed = env_seed(args.protocol.seed)?;
    let mut cfg = RunConfig::new(&args.data.data, &out);
    cfg.delimiter = args.data.delimiter;
    let graph = load_graph(&cfg)?;
    for k in 0..args.protocol.realizations as u64 {
        let seed = base_seed + k;
        let realization = split(&graph, seed, args.protocol.ratios)?;
        let dir = out.join(format!("seed-{seed}"));
        export_split(&realization, &graph, &dir)?;
        eprintln!(
            "seed={seed}: train {} / eval {} / test {} edges -> {}",
            realization.train.edge_count(),
            realization.eval_edges.len(),
            realization.test_edges.len(),
            dir.display()
        );
    }
    Ok(())
}

fn train_graph_for(
    data: &DataArgs,
    seed: Option<u64>,
    ratios: (f64, f64, f64),
) -> anyhow::Result<BipartiteGraph> {
    let mut cfg = RunConfig::new(&data.data, "unused");
    cfg.delimiter = data.delimiter;
    let graph = load_graph(&cfg)?;
    match seed {
        None => Ok(graph),
        Some(seed) => Ok(split(&graph, seed, ratios)?.train),
    }
}

fn cmd_repr(args: ReprArgs) -> anyhow::Result<()> {
    let out = env_out(args.out);
    let graph = train_graph_for(&args.data, args.seed, args.ratios)?;
    let reprs = match Representation::from(args.repr.representation) {
        Representation::MethodOne => aiprobs::embed::method_one_representations::<f64>(&graph),
        Representation::MethodTwo => aiprobs::embed::method_two_representations::<f64>(
            &graph,
            args.repr.spectral_mode.into(),
            args.repr.truncation,
        )?,
    };
    export_representations(&graph, &reprs.0, &reprs.1, &out)?;
    eprintln!(
        "wrote {} user and {} item representations of width {} to {}",
        reprs.0.rows(),
        reprs.1.rows(),
        reprs.0.width(),
        out.display()
    );
    Ok(())
}

fn cmd_predict(args: PredictArgs) -> anyhow::Result<()> {
    let out = match std::env::var("AIPROBS_OUT") {
        Ok(dir) => {
            let name = args
                .out
                .file_name()
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from("predictions.out"));
            PathBuf::from(dir).join(name)
        }
        Err(_) => args.out.clone(),
    };
    let graph = train_graph_for(&args.data, args.seed, args.ratios)?;
    let combo = CombinationConfig::new(
        args.model.metric.into(),
        args.model.normalization.into(),
        args.model.proportioning.into(),
    );
    let pred: PredictionMatrix<f64> = match Model::from(args.model.model) {
        Model::Probs => aiprobs::diffusion::probs_predict(&graph),
        Model::AiProbs => {
            let (f_u, f_i) = representations(&graph, &args.model.repr)?;
            aiprobs::diffusion::aiprobs_predict(&graph, &f_u, &f_i, &combo)?
        }
        Model::PureDhc => {
            let (f_u, f_i) = representations(&graph, &args.model.repr)?;
            aiprobs::diffusion::pure_dhc_predict(&f_u, &f_i)?
        }
    };
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    match args.format {
        FormatArg::Text => export_prediction_text(&pred, &out)?,
        FormatArg::Binary => export_prediction_triples(&pred, &out)?,
    }
    eprintln!(
        "wrote {}×{} predictions to {}",
        pred.shape().0,
        pred.shape().1,
        out.display()
    );
    Ok(())
}

fn representations(
    graph: &BipartiteGraph,
    repr: &ReprOpts,
) -> anyhow::Result<(
    aiprobs::embed::RepresentationMatrix<f64>,
    aiprobs::embed::RepresentationMatrix<f64>,
)> {
    match Representation::from(repr.representation) {
        Representation::MethodOne => Ok(aiprobs::embed::method_one_representations(graph)),
        Representation::MethodTwo => {
            if graph.node_count() > 4000 && repr.truncation.is_none() {
                eprintln!(
                    "note: full spectral decomposition of order {} is cubic; \
                     consider --truncation for an approximation",
                    graph.node_count()
                );
            }
            Ok(aiprobs::embed::method_two_representations(
                graph,
                repr.spectral_mode.into(),
                repr.truncation,
            )?)
        }
    }
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Matrix(args) => cmd_matrix(args),
        Command::Split(args) => cmd_split(args),
        Command::Repr(args) => cmd_repr(args),
        Command::Predict(args) => cmd_predict(args),
    }
}
