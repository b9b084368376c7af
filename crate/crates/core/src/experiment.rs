//! End-to-end experiment orchestration: ingest a dataset, generate seeded
//! realizations, run the selected model, evaluate, and write reports.
//!
//! All outputs are deterministic functions of (dataset bytes, config): no
//! timestamps, fixed float formatting, fixed iteration order.

use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::diffusion::{aiprobs_weights, probs_weights, score_user_into, CombinationConfig};
use crate::embed::{
    method_one_representations, method_two_representations, RepresentationMatrix, SpectralMode,
};
use crate::error::{Error, Result};
use crate::eval::{
    long_format_lines, mrr_at_n, ndcg_at_n, recall_at_n, render_table, top_n_streaming,
    GroundTruth, MetricReport, RealizationMetrics,
};
use crate::graph::{parse_interactions, BipartiteGraph, ParseOptions};
use crate::scalar::Real;
use crate::similarity::{Metric, PairwiseSimilarity};
use crate::split::{split, DEFAULT_RATIOS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    Probs,
    #[serde(rename = "aiprobs")]
    AiProbs,
    PureDhc,
}

impl Model {
    pub fn key(self) -> &'static str {
        match self {
            Model::Probs => "probs",
            Model::AiProbs => "aiprobs",
            Model::PureDhc => "pure-dhc",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "probs" => Ok(Model::Probs),
            "aiprobs" => Ok(Model::AiProbs),
            "pure-dhc" => Ok(Model::PureDhc),
            other => Err(Error::InvalidInput(format!("unknown model {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Representation {
    MethodOne,
    MethodTwo,
}

impl Representation {
    pub fn key(self) -> &'static str {
        match self {
            Representation::MethodOne => "method-one",
            Representation::MethodTwo => "method-two",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "method-one" => Ok(Representation::MethodOne),
            "method-two" => Ok(Representation::MethodTwo),
            other => Err(Error::InvalidInput(format!(
                "unknown representation {other:?}"
            ))),
        }
    }
}

/// Full experiment configuration; defaults reproduce the evaluation
/// protocol (30 realizations, 80/10/10, N = 10).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub dataset: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delimiter: Option<char>,
    pub base_seed: u64,
    pub realizations: usize,
    pub ratios: (f64, f64, f64),
    pub top_n: usize,
    pub model: Model,
    pub representation: Representation,
    pub spectral_mode: SpectralMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<usize>,
    pub combination: CombinationConfig,
    pub output: PathBuf,
}

impl RunConfig {
    pub fn new(dataset: impl Into<PathBuf>, output: impl Into<PathBuf>) -> Self {
        Self {
            dataset: dataset.into(),
            delimiter: None,
            base_seed: 1,
            realizations: 30,
            ratios: DEFAULT_RATIOS,
            top_n: 10,
            model: Model::AiProbs,
            representation: Representation::MethodOne,
            spectral_mode: SpectralMode::WeightedByEigenvalue,
            truncation: None,
            combination: CombinationConfig::default_cosine(),
            output: output.into(),
        }
    }

    pub fn seeds(&self) -> Vec<u64> {
        (0..self.realizations as u64)
            .map(|k| self.base_seed + k)
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if self.realizations == 0 {
            return Err(Error::InvalidInput("realization count must be ≥ 1".into()));
        }
        if self.top_n == 0 {
            return Err(Error::InvalidInput("top-n must be ≥ 1".into()));
        }
        Ok(())
    }
}

/// Loads and indexes the configured dataset.
pub fn load_graph(cfg: &RunConfig) -> Result<BipartiteGraph> {
    let file = fs::File::open(&cfg.dataset).map_err(|e| {
        Error::InvalidInput(format!(
            "cannot open dataset {}: {e}",
            cfg.dataset.display()
        ))
    })?;
    let records = parse_interactions(
        BufReader::new(file),
        &ParseOptions {
            delimiter: cfg.delimiter,
        },
    )?;
    BipartiteGraph::build(&records)
}

/// Builds the configured representations on a train graph.
pub fn representations_for<R: Real>(
    cfg: &RunConfig,
    train: &BipartiteGraph,
) -> Result<(RepresentationMatrix<R>, RepresentationMatrix<R>)> {
    match cfg.representation {
        Representation::MethodOne => Ok(method_one_representations(train)),
        Representation::MethodTwo => {
            method_two_representations(train, cfg.spectral_mode, cfg.truncation)
        }
    }
}

fn lists_for_model<R: Real>(
    cfg: &RunConfig,
    combo: &CombinationConfig,
    train: &BipartiteGraph,
    reprs: Option<&(RepresentationMatrix<R>, RepresentationMatrix<R>)>,
) -> Result<crate::eval::RecommendationLists> {
    let m = train.user_count();
    match cfg.model {
        Model::Probs => {
            let weights = probs_weights::<R>(train);
            Ok(top_n_streaming(train, cfg.top_n, |u, row: &mut [R]| {
                let mut scratch = vec![R::zero(); m];
                score_user_into(train, &weights, u, &mut scratch, row);
            }))
        }
        Model::AiProbs => {
            let (f_u, f_i) = reprs.expect("adaptive model needs representations");
            let weights = aiprobs_weights(train, f_u, f_i, combo)?;
            Ok(top_n_streaming(train, cfg.top_n, |u, row: &mut [R]| {
                let mut scratch = vec![R::zero(); m];
                score_user_into(train, &weights, u, &mut scratch, row);
            }))
        }
        Model::PureDhc => {
            let (f_u, f_i) = reprs.expect("representation baseline needs representations");
            let pairwise = PairwiseSimilarity::new(f_u, f_i, Metric::Cosine)?;
            Ok(top_n_streaming(train, cfg.top_n, |u, row: &mut [R]| {
                pairwise.fill_row(u, row);
            }))
        }
    }
}

fn evaluate_realization<R: Real>(
    cfg: &RunConfig,
    combo: &CombinationConfig,
    graph: &BipartiteGraph,
    seed: u64,
) -> Result<RealizationMetrics<R>> {
    let realization = split(graph, seed, cfg.ratios)?;
    let reprs = if cfg.model == Model::Probs {
        None
    } else {
        Some(representations_for::<R>(cfg, &realization.train)?)
    };
    let lists = lists_for_model(cfg, combo, &realization.train, reprs.as_ref())?;
    let truth = GroundTruth::from_edges(graph.user_count(), &realization.test_edges);
    Ok(RealizationMetrics {
        seed,
        recall: recall_at_n(&lists, &truth, cfg.top_n)?,
        mrr: mrr_at_n(&lists, &truth, cfg.top_n)?,
        ndcg: ndcg_at_n(&lists, &truth, cfg.top_n)?,
    })
}

/// Everything a finished run carries besides the files on disk.
#[derive(Debug, Clone)]
pub struct ExperimentOutput<R> {
    pub report: MetricReport<R>,
    pub users: usize,
    pub items: usize,
    pub interactions: usize,
    pub log: Vec<String>,
}

fn model_label(cfg: &RunConfig) -> String {
    match cfg.model {
        Model::Probs => "probs".to_string(),
        Model::PureDhc => format!("pure-dhc ({})", cfg.representation.key()),
        Model::AiProbs => format!(
            "aiprobs ({}, {})",
            cfg.representation.key(),
            cfg.combination.label()
        ),
    }
}

/// Runs every realization, aggregates, and writes the report files under the
/// configured output directory. Nothing is written until all realizations
/// have succeeded.
pub fn run_experiment<R: Real>(cfg: &RunConfig) -> Result<ExperimentOutput<R>> {
    cfg.validate()?;
    let graph = load_graph(cfg)?;
    let mut log = vec![format!(
        "dataset {}: {} users, {} items, {} interactions",
        cfg.dataset.display(),
        graph.user_count(),
        graph.item_count(),
        graph.edge_count()
    )];
    eprintln!("{}", log[0]);

    let mut rows = Vec::with_capacity(cfg.realizations);
    for seed in cfg.seeds() {
        let row = evaluate_realization::<R>(cfg, &cfg.combination, &graph, seed)?;
        let line = format!(
            "seed={seed} recall@{n}={:.6} mrr@{n}={:.6} ndcg@{n}={:.6}",
            row.recall.to_f64().unwrap_or(f64::NAN),
            row.mrr.to_f64().unwrap_or(f64::NAN),
            row.ndcg.to_f64().unwrap_or(f64::NAN),
            n = cfg.top_n
        );
        eprintln!("{line}");
        log.push(line);
        rows.push(row);
    }
    let report = MetricReport::from_realizations(model_label(cfg), cfg.top_n, rows)?;

    fs::create_dir_all(&cfg.output)?;
    write_manifest(cfg, &graph, &cfg.output.join("manifest.toml"))?;
    write_realizations_tsv(
        std::slice::from_ref(&report),
        &cfg.output.join("realizations.tsv"),
    )?;
    write_aggregate_tsv(
        std::slice::from_ref(&report),
        &cfg.output.join("aggregate.tsv"),
    )?;
    let table = render_table(std::slice::from_ref(&report));
    fs::write(cfg.output.join("report.txt"), &table)?;
    fs::write(cfg.output.join("run.log"), log.join("\n") + "\n")?;

    Ok(ExperimentOutput {
        report,
        users: graph.user_count(),
        items: graph.item_count(),
        interactions: graph.edge_count(),
        log,
    })
}

/// Runs a set of combinations over shared splits and representations,
/// producing one comparison table. The model is forced to the adaptive
/// variant; representations are computed once per realization and reused
/// across combinations.
pub fn run_matrix<R: Real>(
    cfg: &RunConfig,
    combos: &[CombinationConfig],
) -> Result<Vec<MetricReport<R>>> {
    cfg.validate()?;
    if combos.is_empty() {
        return Err(Error::EmptyInput("combination set"));
    }
    let mut cfg = cfg.clone();
    cfg.model = Model::AiProbs;
    let graph = load_graph(&cfg)?;
    eprintln!(
        "dataset {}: {} users, {} items, {} interactions ({} combinations)",
        cfg.dataset.display(),
        graph.user_count(),
        graph.item_count(),
        graph.edge_count(),
        combos.len()
    );

    let mut rows: Vec<Vec<RealizationMetrics<R>>> = vec![Vec::new(); combos.len()];
    for seed in cfg.seeds() {
        let realization = split(&graph, seed, cfg.ratios)?;
        let reprs = representations_for::<R>(&cfg, &realization.train)?;
        let truth = GroundTruth::from_edges(graph.user_count(), &realization.test_edges);
        for (k, combo) in combos.iter().enumerate() {
            let lists = lists_for_model(&cfg, combo, &realization.train, Some(&reprs))?;
            rows[k].push(RealizationMetrics {
                seed,
                recall: recall_at_n(&lists, &truth, cfg.top_n)?,
                mrr: mrr_at_n(&lists, &truth, cfg.top_n)?,
                ndcg: ndcg_at_n(&lists, &truth, cfg.top_n)?,
            });
        }
        eprintln!("seed={seed} done");
    }

    let reports: Vec<MetricReport<R>> = combos
        .iter()
        .zip(rows)
        .map(|(combo, r)| MetricReport::from_realizations(combo.label(), cfg.top_n, r))
        .collect::<Result<_>>()?;

    fs::create_dir_all(&cfg.output)?;
    write_manifest(&cfg, &graph, &cfg.output.join("manifest.toml"))?;
    write_realizations_tsv(&reports, &cfg.output.join("realizations.tsv"))?;
    write_aggregate_tsv(&reports, &cfg.output.join("aggregate.tsv"))?;
    fs::write(cfg.output.join("matrix-report.txt"), render_table(&reports))?;
    Ok(reports)
}

#[derive(Serialize)]
struct Manifest<'a> {
    config: &'a RunConfig,
    users: usize,
    items: usize,
    interactions: usize,
    seeds: Vec<u64>,
}

fn write_manifest(cfg: &RunConfig, graph: &BipartiteGraph, path: &Path) -> Result<()> {
    let manifest = Manifest {
        config: cfg,
        users: graph.user_count(),
        items: graph.item_count(),
        interactions: graph.edge_count(),
        seeds: cfg.seeds(),
    };
    let doc = toml::to_string(&manifest)
        .map_err(|e| Error::InvalidInput(format!("manifest serialization: {e}")))?;
    fs::write(path, doc)?;
    Ok(())
}

/// Reads back a manifest's embedded config, enough to re-run any single
/// realization in isolation.
pub fn read_manifest_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path)?;
    #[derive(Deserialize)]
    struct ManifestIn {
        config: RunConfig,
    }
    let parsed: ManifestIn =
        toml::from_str(&text).map_err(|e| Error::InvalidInput(format!("manifest parse: {e}")))?;
    Ok(parsed.config)
}

fn write_realizations_tsv<R: Real>(reports: &[MetricReport<R>], path: &Path) -> Result<()> {
    let mut out = fs::File::create(path)?;
    writeln!(out, "model\tseed\tmetric\tvalue")?;
    for report in reports {
        for line in long_format_lines(report) {
            writeln!(out, "{line}")?;
        }
    }
    Ok(())
}

fn write_aggregate_tsv<R: Real>(reports: &[MetricReport<R>], path: &Path) -> Result<()> {
    let mut out = fs::File::create(path)?;
    writeln!(out, "model\tmetric\tmean\tstd\trealizations")?;
    for r in reports {
        let n = r.n;
        for (name, (mean, std)) in [
            (format!("recall@{n}"), r.recall),
            (format!("mrr@{n}"), r.mrr),
            (format!("ndcg@{n}"), r.ndcg),
        ] {
            writeln!(
                out,
                "{}\t{name}\t{}\t{}\t{}",
                r.model,
                mean,
                std,
                r.realization_count()
            )?;
        }
    }
    Ok(())
}

/// Re-runs exactly one realization from a config, for manifest-driven
/// reproduction.
pub fn run_single_realization<R: Real>(
    cfg: &RunConfig,
    seed: u64,
) -> Result<RealizationMetrics<R>> {
    cfg.validate()?;
    let graph = load_graph(cfg)?;
    evaluate_realization(cfg, &cfg.combination, &graph, seed)
}
