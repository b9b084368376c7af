//! Top-N recommendation lists and ranking metrics.
//!
//! Candidates are all items minus the user's training items; ties break by
//! ascending item index so runs are reproducible. Users without ground-truth
//! items are excluded from every metric average.

use rayon::prelude::*;

use crate::diffusion::PredictionMatrix;
use crate::error::{Error, Result};
use crate::graph::BipartiteGraph;
use crate::scalar::{real, real_from_usize, Real};

/// Per-user ordered recommendation lists of length ≤ N.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecommendationLists {
    pub n: usize,
    pub lists: Vec<Vec<u32>>,
}

fn select_top<R: Real>(scores: &[R], banned: &[u32], n: usize) -> Vec<u32> {
    let mut candidates: Vec<u32> = (0..scores.len() as u32)
        .filter(|i| banned.binary_search(i).is_err())
        .collect();
    let k = n.min(candidates.len());
    if k == 0 {
        return Vec::new();
    }
    let cmp = |a: &u32, b: &u32| {
        scores[*b as usize]
            .partial_cmp(&scores[*a as usize])
            .expect("finite scores")
            .then(a.cmp(b))
    };
    if candidates.len() > k {
        candidates.select_nth_unstable_by(k - 1, cmp);
        candidates.truncate(k);
    }
    candidates.sort_unstable_by(cmp);
    candidates
}

/// Ranks every item outside the user's training set by score descending
/// (ties by index ascending) and truncates to `n`.
pub fn top_n<R: Real>(
    pred: &PredictionMatrix<R>,
    train_mask: &BipartiteGraph,
    n: usize,
) -> RecommendationLists {
    assert!(n >= 1, "recommendation list length must be ≥ 1");
    let (m, _) = pred.shape();
    let lists: Vec<Vec<u32>> = (0..m)
        .into_par_iter()
        .map(|u| {
            let row = pred.data().row(u);
            let scores = row.as_slice().expect("row-major layout");
            select_top(scores, train_mask.items_of(u), n)
        })
        .collect();
    RecommendationLists { n, lists }
}

/// Streaming variant: scores one user row at a time through `fill` and never
/// materializes the prediction matrix.
pub fn top_n_streaming<R, F>(train_mask: &BipartiteGraph, n: usize, fill: F) -> RecommendationLists
where
    R: Real,
    F: Fn(usize, &mut [R]) + Sync,
{
    assert!(n >= 1, "recommendation list length must be ≥ 1");
    let m = train_mask.user_count();
    let items = train_mask.item_count();
    let lists: Vec<Vec<u32>> = (0..m)
        .into_par_iter()
        .map_init(
            || vec![R::zero(); items],
            |row, u| {
                fill(u, row);
                select_top(row, train_mask.items_of(u), n)
            },
        )
        .collect();
    RecommendationLists { n, lists }
}

/// Per-user ground-truth item sets, sorted for binary search.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    per_user: Vec<Vec<u32>>,
}

impl GroundTruth {
    pub fn from_edges(user_count: usize, edges: &[(u32, u32)]) -> Self {
        let mut per_user = vec![Vec::new(); user_count];
        for &(u, i) in edges {
            per_user[u as usize].push(i);
        }
        for items in &mut per_user {
            items.sort_unstable();
            items.dedup();
        }
        Self { per_user }
    }

    pub fn items_of(&self, u: usize) -> &[u32] {
        &self.per_user[u]
    }

    pub fn user_count(&self) -> usize {
        self.per_user.len()
    }
}

fn metric_mean<R, F>(lists: &RecommendationLists, truth: &GroundTruth, per_user: F) -> Result<R>
where
    R: Real,
    F: Fn(&[u32], &[u32]) -> R,
{
    let mut acc = R::zero();
    let mut counted = 0usize;
    for (u, list) in lists.lists.iter().enumerate() {
        let relevant = truth.items_of(u);
        if relevant.is_empty() {
            continue;
        }
        acc += per_user(list, relevant);
        counted += 1;
    }
    if counted == 0 {
        return Err(Error::NoTestUsers);
    }
    Ok(acc / real_from_usize(counted))
}

/// Mean over users of `|hits| / |relevant|`.
pub fn recall_at_n<R: Real>(
    lists: &RecommendationLists,
    truth: &GroundTruth,
    n: usize,
) -> Result<R> {
    metric_mean(lists, truth, |list, relevant| {
        let hits = list
            .iter()
            .take(n)
            .filter(|i| relevant.binary_search(i).is_ok())
            .count();
        real_from_usize::<R>(hits) / real_from_usize(relevant.len())
    })
}

/// Mean over users of the reciprocal rank of the first hit; 0 when the
/// top-N list has no hit.
pub fn mrr_at_n<R: Real>(lists: &RecommendationLists, truth: &GroundTruth, n: usize) -> Result<R> {
    metric_mean(lists, truth, |list, relevant| {
        for (pos, item) in list.iter().take(n).enumerate() {
            if relevant.binary_search(item).is_ok() {
                return R::one() / real_from_usize(pos + 1);
            }
        }
        R::zero()
    })
}

/// Mean over users of DCG/IDCG with logarithmic position discounts.
pub fn ndcg_at_n<R: Real>(lists: &RecommendationLists, truth: &GroundTruth, n: usize) -> Result<R> {
    let two: R = real(2.0);
    metric_mean(lists, truth, |list, relevant| {
        let mut dcg = R::zero();
        for (pos, item) in list.iter().take(n).enumerate() {
            if relevant.binary_search(item).is_ok() {
                dcg += R::one() / real_from_usize::<R>(pos + 2).log(two);
            }
        }
        let ideal_len = relevant.len().min(n);
        let mut idcg = R::zero();
        for pos in 0..ideal_len {
            idcg += R::one() / real_from_usize::<R>(pos + 2).log(two);
        }
        dcg / idcg
    })
}

/// Arithmetic mean and sample standard deviation.
pub fn aggregate<R: Real>(values: &[R]) -> Result<(R, R)> {
    if values.is_empty() {
        return Err(Error::EmptyInput("metric values"));
    }
    let k = real_from_usize::<R>(values.len());
    let mean = values.iter().copied().sum::<R>() / k;
    let std = if values.len() == 1 {
        R::zero()
    } else {
        let ss: R = values.iter().map(|&v| (v - mean) * (v - mean)).sum();
        (ss / (k - R::one())).sqrt()
    };
    Ok((mean, std))
}

/// One realization's metric triple.
#[derive(Debug, Clone, Copy)]
pub struct RealizationMetrics<R> {
    pub seed: u64,
    pub recall: R,
    pub mrr: R,
    pub ndcg: R,
}

/// Per-realization values plus mean/std aggregates for one model or
/// combination.
#[derive(Debug, Clone)]
pub struct MetricReport<R> {
    pub model: String,
    pub n: usize,
    pub per_realization: Vec<RealizationMetrics<R>>,
    pub recall: (R, R),
    pub mrr: (R, R),
    pub ndcg: (R, R),
}

impl<R: Real> MetricReport<R> {
    pub fn from_realizations(
        model: String,
        n: usize,
        per_realization: Vec<RealizationMetrics<R>>,
    ) -> Result<Self> {
        let recall = aggregate(&per_realization.iter().map(|r| r.recall).collect::<Vec<_>>())?;
        let mrr = aggregate(&per_realization.iter().map(|r| r.mrr).collect::<Vec<_>>())?;
        let ndcg = aggregate(&per_realization.iter().map(|r| r.ndcg).collect::<Vec<_>>())?;
        Ok(Self {
            model,
            n,
            per_realization,
            recall,
            mrr,
            ndcg,
        })
    }

    pub fn realization_count(&self) -> usize {
        self.per_realization.len()
    }
}

/// Aligned human-readable table over a set of reports; the best value per
/// metric column is starred.
pub fn render_table<R: Real>(reports: &[MetricReport<R>]) -> String {
    if reports.is_empty() {
        return String::new();
    }
    let n = reports[0].n;
    let count = reports[0].realization_count();
    let best = |pick: fn(&MetricReport<R>) -> R| -> usize {
        let mut idx = 0;
        for (k, r) in reports.iter().enumerate() {
            if pick(r) > pick(&reports[idx]) {
                idx = k;
            }
        }
        idx
    };
    let best_recall = best(|r| r.recall.0);
    let best_mrr = best(|r| r.mrr.0);
    let best_ndcg = best(|r| r.ndcg.0);

    let name_width = reports
        .iter()
        .map(|r| r.model.len())
        .max()
        .unwrap_or(5)
        .max(5);
    let mut out = String::new();
    out.push_str(&format!(
        "{:name_width$}  {:>16}  {:>16}  {:>16}\n",
        "model",
        format!("Recall@{n}"),
        format!("MRR@{n}"),
        format!("NDCG@{n}"),
    ));
    let flag_best = reports.len() > 1;
    for (k, r) in reports.iter().enumerate() {
        let cell = |mean_std: (R, R), star: bool| {
            let star = if star && flag_best { "*" } else { " " };
            format!(
                "{:.4}±{:.4}{star}",
                mean_std.0.to_f64().unwrap_or(f64::NAN),
                mean_std.1.to_f64().unwrap_or(f64::NAN)
            )
        };
        out.push_str(&format!(
            "{:name_width$}  {:>16}  {:>16}  {:>16}\n",
            r.model,
            cell(r.recall, k == best_recall),
            cell(r.mrr, k == best_mrr),
            cell(r.ndcg, k == best_ndcg),
        ));
    }
    out.push_str(&format!("({count} realizations)\n"));
    out
}

/// Machine-readable long format: `model<TAB>seed<TAB>metric<TAB>value`,
/// one record per model × realization × metric.
pub fn long_format_lines<R: Real>(report: &MetricReport<R>) -> Vec<String> {
    let mut lines = Vec::with_capacity(report.per_realization.len() * 3);
    for row in &report.per_realization {
        for (metric, value) in [("recall", row.recall), ("mrr", row.mrr), ("ndcg", row.ndcg)] {
            lines.push(format!(
                "{}\t{}\t{metric}@{}\t{}",
                report.model, row.seed, report.n, value
            ));
        }
    }
    lines
}
