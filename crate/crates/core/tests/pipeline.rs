//! End-to-end pipeline tests on a synthetic dataset: full-run determinism,
//! manifest-driven reproduction, and the export surfaces.

use std::fs;
use std::path::{Path, PathBuf};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use aiprobs::diffusion::{aiprobs_predict, CombinationConfig, Normalization, Proportioning};
use aiprobs::embed::{export_representations, method_one_representations, RepresentationMatrix};
use aiprobs::eval::top_n;
use aiprobs::experiment::{
    read_manifest_config, run_experiment, run_matrix, run_single_realization, Model, RunConfig,
};
use aiprobs::graph::BipartiteGraph;
use aiprobs::similarity::Metric;
use aiprobs::split::{export_split, split, DEFAULT_RATIOS};

/// Writes a deterministic synthetic interaction file and returns its path.
fn synthetic_dataset(dir: &Path) -> PathBuf {
    let mut rng = StdRng::seed_from_u64(99);
    let users = 60;
    let items = 80;
    let mut lines = vec!["# synthetic interactions".to_string()];
    for u in 0..users {
        let k = rng.random_range(5..20);
        for _ in 0..k {
            let i = rng.random_range(0..items);
            lines.push(format!("u{u} m{i}"));
        }
    }
    let path = dir.join("synthetic.tsv");
    fs::write(&path, lines.join("\n") + "\n").unwrap();
    path
}

fn quick_config(dataset: &Path, out: &Path) -> RunConfig {
    let mut cfg = RunConfig::new(dataset, out);
    cfg.realizations = 4;
    cfg.base_seed = 7;
    cfg
}

#[test]
fn identical_configs_produce_byte_identical_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let dataset = synthetic_dataset(tmp.path());
    let cfg_a = quick_config(&dataset, &tmp.path().join("a"));
    let cfg_b = quick_config(&dataset, &tmp.path().join("b"));
    run_experiment::<f64>(&cfg_a).unwrap();
    run_experiment::<f64>(&cfg_b).unwrap();
    for name in ["realizations.tsv", "aggregate.tsv", "report.txt", "run.log"] {
        let a = fs::read(cfg_a.output.join(name)).unwrap();
        let b = fs::read(cfg_b.output.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
}

#[test]
fn manifest_reproduces_single_realizations() {
    let tmp = tempfile::tempdir().unwrap();
    let dataset = synthetic_dataset(tmp.path());
    let cfg = quick_config(&dataset, &tmp.path().join("run"));
    let output = run_experiment::<f64>(&cfg).unwrap();
    let recovered = read_manifest_config(&cfg.output.join("manifest.toml")).unwrap();
    for row in &output.report.per_realization {
        let again = run_single_realization::<f64>(&recovered, row.seed).unwrap();
        assert_eq!(again.recall, row.recall, "seed {}", row.seed);
        assert_eq!(again.mrr, row.mrr);
        assert_eq!(again.ndcg, row.ndcg);
    }
}

#[test]
fn matrix_singleton_agrees_with_plain_run() {
    let tmp = tempfile::tempdir().unwrap();
    let dataset = synthetic_dataset(tmp.path());
    let cfg = quick_config(&dataset, &tmp.path().join("run"));
    let single = run_experiment::<f64>(&cfg).unwrap();
    let mut mcfg = quick_config(&dataset, &tmp.path().join("matrix"));
    mcfg.model = Model::AiProbs;
    let reports = run_matrix::<f64>(&mcfg, &[CombinationConfig::default_cosine()]).unwrap();
    assert_eq!(reports.len(), 1);
    assert_eq!(reports[0].recall.0, single.report.recall.0);
    assert_eq!(reports[0].mrr.0, single.report.mrr.0);
    assert_eq!(reports[0].ndcg.0, single.report.ndcg.0);
}

#[test]
fn matrix_report_has_one_row_per_combination() {
    let tmp = tempfile::tempdir().unwrap();
    let dataset = synthetic_dataset(tmp.path());
    let mut cfg = quick_config(&dataset, &tmp.path().join("matrix"));
    cfg.realizations = 2;
    let combos = CombinationConfig::standard_matrix();
    let reports = run_matrix::<f64>(&cfg, &combos).unwrap();
    assert_eq!(reports.len(), 15);
    let table = fs::read_to_string(cfg.output.join("matrix-report.txt")).unwrap();
    for combo in &combos {
        assert!(
            table.contains(&combo.label()),
            "missing row {}",
            combo.label()
        );
    }
}

#[test]
fn duplicate_combinations_produce_equal_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let dataset = synthetic_dataset(tmp.path());
    let mut cfg = quick_config(&dataset, &tmp.path().join("dup"));
    cfg.realizations = 3;
    let combo = CombinationConfig::default_cosine();
    let reports = run_matrix::<f64>(&cfg, &[combo, combo]).unwrap();
    assert_eq!(reports[0].recall.0, reports[1].recall.0);
    assert_eq!(reports[0].mrr.0, reports[1].mrr.0);
    assert_eq!(reports[0].ndcg.0, reports[1].ndcg.0);
}

#[test]
fn invalid_combination_fails_before_writing_any_report() {
    let tmp = tempfile::tempdir().unwrap();
    let dataset = synthetic_dataset(tmp.path());
    let mut cfg = quick_config(&dataset, &tmp.path().join("bad"));
    cfg.combination = CombinationConfig::new(
        Metric::Cosine,
        Normalization::MaxMin,
        Proportioning::Literal,
    );
    let err = run_experiment::<f64>(&cfg).unwrap_err();
    assert!(err.to_string().contains("literal proportioning"));
    assert!(
        !cfg.output.exists(),
        "partial reports were written despite the failure"
    );
}

#[test]
fn split_export_covers_all_edges() {
    let tmp = tempfile::tempdir().unwrap();
    let dataset = synthetic_dataset(tmp.path());
    let cfg = quick_config(&dataset, &tmp.path().join("unused"));
    let graph = aiprobs::experiment::load_graph(&cfg).unwrap();
    let realization = split(&graph, 3, DEFAULT_RATIOS).unwrap();
    let dir = tmp.path().join("splits");
    export_split(&realization, &graph, &dir).unwrap();
    let count = |name: &str| fs::read_to_string(dir.join(name)).unwrap().lines().count();
    assert_eq!(count("train.txt"), realization.train.edge_count());
    assert_eq!(count("eval.txt"), realization.eval_edges.len());
    assert_eq!(count("test.txt"), realization.test_edges.len());
    assert_eq!(
        count("train.txt") + count("eval.txt") + count("test.txt"),
        graph.edge_count()
    );
}

#[test]
fn representation_export_writes_key_plus_coordinates() {
    let tmp = tempfile::tempdir().unwrap();
    let dataset = synthetic_dataset(tmp.path());
    let cfg = quick_config(&dataset, &tmp.path().join("unused"));
    let graph = aiprobs::experiment::load_graph(&cfg).unwrap();
    let (f_u, f_i) = method_one_representations::<f64>(&graph);
    let dir = tmp.path().join("reprs");
    export_representations(&graph, &f_u, &f_i, &dir).unwrap();
    let users = fs::read_to_string(dir.join("users.tsv")).unwrap();
    let first = users.lines().next().unwrap();
    let fields: Vec<&str> = first.split('\t').collect();
    assert_eq!(fields.len(), 1 + f_u.width());
    assert_eq!(fields[0], graph.user_key(0));
    assert_eq!(users.lines().count(), graph.user_count());
    let items = fs::read_to_string(dir.join("items.tsv")).unwrap();
    assert_eq!(items.lines().count(), graph.item_count());
}

#[test]
fn positive_scaling_of_representations_preserves_rankings() {
    let mut rng = StdRng::seed_from_u64(4);
    let mut edges = Vec::new();
    for u in 0..12u32 {
        for i in 0..15u32 {
            if rng.random_bool(0.4) {
                edges.push((u, i));
            }
        }
    }
    let graph = BipartiteGraph::from_edges(12, 15, &edges);
    let (f_u, f_i) = method_one_representations::<f64>(&graph);
    let combo = CombinationConfig::default_cosine();
    let base = aiprobs_predict(&graph, &f_u, &f_i, &combo).unwrap();
    let scale = 3.7;
    let f_u2 = RepresentationMatrix::new(f_u.data() * scale);
    let f_i2 = RepresentationMatrix::new(f_i.data() * scale);
    let scaled = aiprobs_predict(&graph, &f_u2, &f_i2, &combo).unwrap();
    let lists_a = top_n(&base, &graph, 5);
    let lists_b = top_n(&scaled, &graph, 5);
    assert_eq!(lists_a, lists_b);
}

#[test]
fn pipeline_also_instantiates_at_f32() {
    let tmp = tempfile::tempdir().unwrap();
    let dataset = synthetic_dataset(tmp.path());
    let cfg = quick_config(&dataset, &tmp.path().join("f32"));
    let narrow = run_experiment::<f32>(&cfg).unwrap();
    let wide = run_experiment::<f64>(&quick_config(&dataset, &tmp.path().join("f64"))).unwrap();
    assert!((narrow.report.recall.0 as f64 - wide.report.recall.0).abs() < 1e-3);
}

#[test]
fn method_two_runs_end_to_end() {
    let tmp = tempfile::tempdir().unwrap();
    let dataset = synthetic_dataset(tmp.path());
    let mut cfg = quick_config(&dataset, &tmp.path().join("spectral"));
    cfg.realizations = 2;
    cfg.representation = aiprobs::experiment::Representation::MethodTwo;
    cfg.truncation = Some(24);
    let output = run_experiment::<f64>(&cfg).unwrap();
    assert_eq!(output.report.realization_count(), 2);
    assert!(output.report.recall.0 >= 0.0 && output.report.recall.0 <= 1.0);
}

#[test]
fn zero_degree_nodes_flow_through_the_whole_pipeline() {
    // user 4 and item 7 have no training edges at all
    let mut edges = Vec::new();
    for u in 0..4u32 {
        for i in 0..7u32 {
            if (u + i) % 2 == 0 {
                edges.push((u, i));
            }
        }
    }
    let graph = BipartiteGraph::from_edges(5, 8, &edges);
    let (f_u, f_i) = method_one_representations::<f64>(&graph);
    assert!(f_u.row(4).iter().all(|&v| v == 0.0));
    let combo = CombinationConfig::default_cosine();
    let pred = aiprobs_predict(&graph, &f_u, &f_i, &combo).unwrap();
    assert!(pred.data().row(4).iter().all(|&v| v == 0.0));
    let lists = top_n(&pred, &graph, 3);
    assert_eq!(lists.lists.len(), 5);
}
