//! Seeded train/eval/test realizations.
//!
//! Splitting is edge-level uniform random over the whole edge set, driven by
//! a counter-based generator keyed on the seed, so identical `(graph, seed)`
//! pairs always produce identical partitions regardless of platform.

use std::fs;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::BipartiteGraph;

/// The 80/10/10 protocol default.
pub const DEFAULT_RATIOS: (f64, f64, f64) = (0.8, 0.1, 0.1);

/// One seeded partition of a graph's edges. The train partition is a full
/// graph over the parent's index space; eval and test are bare edge lists.
#[derive(Debug, Clone)]
pub struct SplitRealization {
    pub seed: u64,
    pub train: BipartiteGraph,
    pub eval_edges: Vec<(u32, u32)>,
    pub test_edges: Vec<(u32, u32)>,
}

fn validate_ratios(ratios: (f64, f64, f64)) -> Result<()> {
    let (a, b, c) = ratios;
    if !(a >= 0.0 && b >= 0.0 && c >= 0.0) || (a + b + c - 1.0).abs() > 1e-9 {
        return Err(Error::BadRatios(a, b, c));
    }
    Ok(())
}

/// Shuffles the edge set with a generator keyed on `seed` and cuts it by
/// ratio. Partition sizes are `⌊r·E⌋` for train and eval, remainder test.
pub fn split(
    graph: &BipartiteGraph,
    seed: u64,
    ratios: (f64, f64, f64),
) -> Result<SplitRealization> {
    validate_ratios(ratios)?;
    let total = graph.edge_count();
    if total < 10 {
        return Err(Error::InvalidInput(format!(
            "need at least 10 edges to split, got {total}"
        )));
    }
    let mut edges: Vec<(u32, u32)> = graph.edges().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    edges.shuffle(&mut rng);

    let n_train = (ratios.0 * total as f64).floor() as usize;
    let n_eval = (ratios.1 * total as f64).floor() as usize;
    let train_edges = &edges[..n_train];
    let mut eval_edges = edges[n_train..n_train + n_eval].to_vec();
    let mut test_edges = edges[n_train + n_eval..].to_vec();
    eval_edges.sort_unstable();
    test_edges.sort_unstable();

    Ok(SplitRealization {
        seed,
        train: graph.with_edges(train_edges),
        eval_edges,
        test_edges,
    })
}

/// Generates `count` realizations seeded `base_seed, base_seed+1, …`.
/// Seeds are independent, so the splits run in parallel; the returned order
/// follows the seed sequence.
pub fn realizations(
    graph: &BipartiteGraph,
    base_seed: u64,
    count: usize,
) -> Result<Vec<SplitRealization>> {
    if count == 0 {
        return Err(Error::InvalidInput("realization count must be ≥ 1".into()));
    }
    (0..count)
        .into_par_iter()
        .map(|k| split(graph, base_seed + k as u64, DEFAULT_RATIOS))
        .collect()
}

/// Writes `train.txt`, `eval.txt`, `test.txt` under `dir`, one
/// `user_key item_key` pair per line, for audit.
pub fn export_split(
    realization: &SplitRealization,
    source: &BipartiteGraph,
    dir: &Path,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    let parts: [(&str, Vec<(u32, u32)>); 3] = [
        ("train.txt", realization.train.edges().collect()),
        ("eval.txt", realization.eval_edges.clone()),
        ("test.txt", realization.test_edges.clone()),
    ];
    for (name, edges) in parts {
        let mut out = fs::File::create(dir.join(name))?;
        for (u, i) in edges {
            writeln!(
                out,
                "{} {}",
                source.user_key(u as usize),
                source.item_key(i as usize)
            )?;
        }
    }
    Ok(())
}
