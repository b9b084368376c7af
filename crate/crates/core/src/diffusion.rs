//! Resource-diffusion link prediction.
//!
//! ProbS allocates diffusion mass equally by degree; the adaptive variant
//! replaces the equal allocation with weights derived from representation
//! similarity via per-line max-min normalization and proportioning. Both run
//! exactly one two-hop diffusion round: `R = A · W_Iᵀ · W_U`.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embed::RepresentationMatrix;
use crate::error::{Error, Result};
use crate::graph::BipartiteGraph;
use crate::scalar::{real_from_usize, Real};
use crate::similarity::{Metric, PairwiseSimilarity, SimilarityMatrix};

/// Which way a masked line runs through a matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Row,
    Column,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    MaxMin,
    None,
}

impl Normalization {
    pub fn key(self) -> &'static str {
        match self {
            Normalization::MaxMin => "maxmin",
            Normalization::None => "none",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "maxmin" => Ok(Normalization::MaxMin),
            "none" => Ok(Normalization::None),
            other => Err(Error::InvalidInput(format!(
                "unknown normalization {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Proportioning {
    /// `w = entry / Σ entries` per line; a zero-sum line falls back to
    /// uniform weights. The default: well-defined after max-min and reduces
    /// to equal allocation under constant similarity.
    Share,
    /// `w = Σ entries / entry` exactly as printed; undefined whenever a
    /// masked entry is zero, which max-min produces on every non-tied line.
    Literal,
    None,
}

impl Proportioning {
    pub fn key(self) -> &'static str {
        match self {
            Proportioning::Share => "share",
            Proportioning::Literal => "literal",
            Proportioning::None => "none",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "share" => Ok(Proportioning::Share),
            "literal" => Ok(Proportioning::Literal),
            "none" => Ok(Proportioning::None),
            other => Err(Error::InvalidInput(format!(
                "unknown proportioning {other:?}"
            ))),
        }
    }
}

/// One similarity/normalization/proportioning combination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CombinationConfig {
    pub metric: Metric,
    pub normalization: Normalization,
    pub proportioning: Proportioning,
}

impl CombinationConfig {
    pub fn new(metric: Metric, normalization: Normalization, proportioning: Proportioning) -> Self {
        Self {
            metric,
            normalization,
            proportioning,
        }
    }

    /// The headline combination: cosine + M-M + P (share form).
    pub fn default_cosine() -> Self {
        Self::new(Metric::Cosine, Normalization::MaxMin, Proportioning::Share)
    }

    /// Machine-readable key, e.g. `cosine+maxmin+share`.
    pub fn key(&self) -> String {
        format!(
            "{}+{}+{}",
            self.metric.key(),
            self.normalization.key(),
            self.proportioning.key()
        )
    }

    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split('+').collect();
        if parts.len() != 3 {
            return Err(Error::InvalidInput(format!(
                "combination must be metric+normalization+proportioning, got {s:?}"
            )));
        }
        Ok(Self::new(
            Metric::parse(parts[0])?,
            Normalization::parse(parts[1])?,
            Proportioning::parse(parts[2])?,
        ))
    }

    /// Table-style display name, e.g. `cosine + M-M + P`.
    pub fn label(&self) -> String {
        let mut label = self.metric.table_name().to_string();
        if self.normalization == Normalization::MaxMin {
            label.push_str(" + M-M");
        }
        match self.proportioning {
            Proportioning::Share => label.push_str(" + P"),
            Proportioning::Literal => label.push_str(" + P(literal)"),
            Proportioning::None => {}
        }
        label
    }

    /// The fifteen standard combinations: per metric, `M-M + P`, `M-M`, and
    /// the bare metric.
    pub fn standard_matrix() -> Vec<CombinationConfig> {
        let mut combos = Vec::with_capacity(15);
        for metric in Metric::ALL {
            combos.push(Self::new(
                metric,
                Normalization::MaxMin,
                Proportioning::Share,
            ));
            combos.push(Self::new(
                metric,
                Normalization::MaxMin,
                Proportioning::None,
            ));
            combos.push(Self::new(metric, Normalization::None, Proportioning::None));
        }
        combos
    }
}

// ---------------------------------------------------------------------------
// Per-line kernels. Every masked-matrix operation funnels through these so
// the dense API and the edge-aligned pipeline cannot drift apart.

fn maxmin_line<R: Real>(vals: &mut [R]) {
    if vals.is_empty() {
        return;
    }
    let max = vals.iter().copied().fold(R::neg_infinity(), R::max);
    let min = vals.iter().copied().fold(R::infinity(), R::min);
    if max == min {
        for v in vals.iter_mut() {
            *v = R::one();
        }
    } else {
        let span = max - min;
        for v in vals.iter_mut() {
            *v = (*v - min) / span;
        }
    }
}

fn share_line<R: Real>(vals: &mut [R]) {
    if vals.is_empty() {
        return;
    }
    let sum: R = vals.iter().copied().sum();
    if sum == R::zero() {
        let uniform = R::one() / real_from_usize(vals.len());
        for v in vals.iter_mut() {
            *v = uniform;
        }
    } else {
        for v in vals.iter_mut() {
            *v /= sum;
        }
    }
}

fn literal_line<R: Real>(vals: &mut [R], axis: &'static str, index: usize) -> Result<()> {
    if vals.is_empty() {
        return Ok(());
    }
    if vals.iter().any(|&v| v == R::zero()) {
        return Err(Error::LiteralProportioningZero { axis, index });
    }
    let sum: R = vals.iter().copied().sum();
    for v in vals.iter_mut() {
        *v = sum / *v;
    }
    Ok(())
}

fn apply_line<R: Real>(
    vals: &mut [R],
    cfg: &CombinationConfig,
    axis: &'static str,
    index: usize,
) -> Result<()> {
    if cfg.normalization == Normalization::MaxMin {
        maxmin_line(vals);
    }
    match cfg.proportioning {
        Proportioning::Share => share_line(vals),
        Proportioning::Literal => literal_line(vals, axis, index)?,
        Proportioning::None => {}
    }
    Ok(())
}

fn group_mask_by_line(
    shape: (usize, usize),
    axis: Axis,
    mask: &[(usize, usize)],
) -> Vec<Vec<(usize, usize)>> {
    let lines = match axis {
        Axis::Row => shape.0,
        Axis::Column => shape.1,
    };
    let mut grouped: Vec<Vec<(usize, usize)>> = vec![Vec::new(); lines];
    for &(r, c) in mask {
        assert!(
            r < shape.0 && c < shape.1,
            "mask entry ({r},{c}) out of bounds"
        );
        let line = match axis {
            Axis::Row => r,
            Axis::Column => c,
        };
        grouped[line].push((r, c));
    }
    grouped
}

/// Per-line max-min normalization over the masked entries only; everything
/// outside the mask is forced to 0. A constant masked line maps to all 1.
pub fn maxmin_normalize<R: Real>(
    m: &ArrayView2<'_, R>,
    axis: Axis,
    mask: &[(usize, usize)],
) -> Array2<R> {
    let mut out = Array2::zeros(m.dim());
    for group in group_mask_by_line(m.dim(), axis, mask) {
        let mut vals: Vec<R> = group.iter().map(|&(r, c)| m[(r, c)]).collect();
        maxmin_line(&mut vals);
        for (&(r, c), v) in group.iter().zip(vals) {
            out[(r, c)] = v;
        }
    }
    out
}

/// Per-line proportioning over the masked entries; unmasked entries stay 0.
pub fn proportioning<R: Real>(
    m: &ArrayView2<'_, R>,
    axis: Axis,
    mask: &[(usize, usize)],
    form: Proportioning,
) -> Result<Array2<R>> {
    let mut out = Array2::zeros(m.dim());
    let axis_name = match axis {
        Axis::Row => "row",
        Axis::Column => "column",
    };
    for (index, group) in group_mask_by_line(m.dim(), axis, mask)
        .into_iter()
        .enumerate()
    {
        let mut vals: Vec<R> = group.iter().map(|&(r, c)| m[(r, c)]).collect();
        match form {
            Proportioning::Share => share_line(&mut vals),
            Proportioning::Literal => literal_line(&mut vals, axis_name, index)?,
            Proportioning::None => {}
        }
        for (&(r, c), v) in group.iter().zip(vals) {
            out[(r, c)] = v;
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Diffusion weights.

/// The two weight matrices steering the diffusion, stored edge-aligned in
/// the train graph's CSR order. `w_u` is row-normalized (per user), `w_i`
/// column-normalized (per item); both vanish off the observed edges.
#[derive(Debug, Clone)]
pub struct WeightPair<R> {
    pub w_u: Vec<R>,
    pub w_i: Vec<R>,
}

impl<R: Real> WeightPair<R> {
    pub fn to_dense_u(&self, graph: &BipartiteGraph) -> Array2<R> {
        self.to_dense(graph, &self.w_u)
    }

    pub fn to_dense_i(&self, graph: &BipartiteGraph) -> Array2<R> {
        self.to_dense(graph, &self.w_i)
    }

    fn to_dense(&self, graph: &BipartiteGraph, vals: &[R]) -> Array2<R> {
        let mut out = Array2::zeros((graph.user_count(), graph.item_count()));
        for u in 0..graph.user_count() {
            for pos in graph.row_range(u) {
                out[(u, graph.item_at(pos) as usize)] = vals[pos];
            }
        }
        out
    }
}

/// Equal-allocation weights: `1/k_U` along rows, `1/k_I` along columns.
/// Zero-degree lines simply have no entries, matching the convention that a
/// degree-zero term contributes nothing.
pub fn probs_weights<R: Real>(graph: &BipartiteGraph) -> WeightPair<R> {
    let nnz = graph.edge_count();
    let mut w_u = vec![R::zero(); nnz];
    let mut w_i = vec![R::zero(); nnz];
    for u in 0..graph.user_count() {
        let share = R::one() / real_from_usize(graph.user_degrees()[u] as usize);
        for pos in graph.row_range(u) {
            w_u[pos] = share;
        }
    }
    for (pos, slot) in w_i.iter_mut().enumerate() {
        let item = graph.item_at(pos) as usize;
        *slot = R::one() / real_from_usize(graph.item_degrees()[item] as usize);
    }
    WeightPair { w_u, w_i }
}

fn build_weights<R: Real>(
    graph: &BipartiteGraph,
    edge_similarity: Vec<R>,
    cfg: &CombinationConfig,
) -> Result<WeightPair<R>> {
    let mut w_u = edge_similarity.clone();
    for u in 0..graph.user_count() {
        let range = graph.row_range(u);
        apply_line(&mut w_u[range], cfg, "row", u)?;
    }

    let mut w_i = edge_similarity;
    let mut buf: Vec<R> = Vec::new();
    for i in 0..graph.item_count() {
        let positions = graph.col_positions(i);
        buf.clear();
        buf.extend(positions.iter().map(|&pos| w_i[pos as usize]));
        apply_line(&mut buf, cfg, "column", i)?;
        for (&pos, &v) in positions.iter().zip(buf.iter()) {
            w_i[pos as usize] = v;
        }
    }
    Ok(WeightPair { w_u, w_i })
}

fn edge_similarities<R: Real>(
    graph: &BipartiteGraph,
    pairwise: &PairwiseSimilarity<'_, R>,
) -> Vec<R> {
    let mut vals = vec![R::zero(); graph.edge_count()];
    // Rows are disjoint slices of the CSR value vector.
    let mut slices: Vec<(usize, &mut [R])> = Vec::with_capacity(graph.user_count());
    let mut rest: &mut [R] = &mut vals;
    let mut offset = 0usize;
    for u in 0..graph.user_count() {
        let len = graph.row_range(u).len();
        let (head, tail) = rest.split_at_mut(len);
        slices.push((u, head));
        rest = tail;
        offset += len;
    }
    debug_assert_eq!(offset, graph.edge_count());
    slices.into_par_iter().for_each(|(u, slice)| {
        for (k, pos) in graph.row_range(u).enumerate() {
            slice[k] = pairwise.value(u, graph.item_at(pos) as usize);
        }
    });
    vals
}

/// Similarity-steered diffusion weights: the masked similarity values go
/// through a row-wise pass for `W_U` and a column-wise pass for `W_I`.
pub fn aiprobs_weights<R: Real>(
    graph: &BipartiteGraph,
    f_u: &RepresentationMatrix<R>,
    f_i: &RepresentationMatrix<R>,
    cfg: &CombinationConfig,
) -> Result<WeightPair<R>> {
    let pairwise = PairwiseSimilarity::new(f_u, f_i, cfg.metric)?;
    if pairwise.users() != graph.user_count() || pairwise.items() != graph.item_count() {
        return Err(Error::InvalidInput(format!(
            "representations ({}×{}) do not match graph ({}×{})",
            pairwise.users(),
            pairwise.items(),
            graph.user_count(),
            graph.item_count()
        )));
    }
    let svals = edge_similarities(graph, &pairwise);
    build_weights(graph, svals, cfg)
}

/// Same pipeline but starting from an explicit similarity matrix, the hook
/// for plugging in representations produced elsewhere.
pub fn aiprobs_weights_from_similarity<R: Real>(
    graph: &BipartiteGraph,
    s: &SimilarityMatrix<R>,
    cfg: &CombinationConfig,
) -> Result<WeightPair<R>> {
    let (rows, cols) = s.shape();
    if rows != graph.user_count() || cols != graph.item_count() {
        return Err(Error::InvalidInput(format!(
            "similarity matrix {rows}×{cols} does not match graph {}×{}",
            graph.user_count(),
            graph.item_count()
        )));
    }
    let mut svals = vec![R::zero(); graph.edge_count()];
    for u in 0..graph.user_count() {
        for pos in graph.row_range(u) {
            svals[pos] = s.data()[(u, graph.item_at(pos) as usize)];
        }
    }
    build_weights(graph, svals, cfg)
}

// ---------------------------------------------------------------------------
// Prediction.

/// Dense `m×n` diffusion scores.
#[derive(Debug, Clone)]
pub struct PredictionMatrix<R> {
    data: Array2<R>,
}

impl<R: Real> PredictionMatrix<R> {
    pub fn new(data: Array2<R>) -> Self {
        Self { data }
    }

    pub fn data(&self) -> &Array2<R> {
        &self.data
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.data.nrows(), self.data.ncols())
    }
}

/// One user's diffusion scores: two sparse hops through `W_I` then `W_U`.
/// `user_scratch` must have length `m`, `out` length `n`.
pub fn score_user_into<R: Real>(
    graph: &BipartiteGraph,
    weights: &WeightPair<R>,
    u: usize,
    user_scratch: &mut [R],
    out: &mut [R],
) {
    user_scratch.fill(R::zero());
    for pos in graph.row_range(u) {
        let item = graph.item_at(pos) as usize;
        for (&h, &cpos) in graph.users_of(item).iter().zip(graph.col_positions(item)) {
            user_scratch[h as usize] += weights.w_i[cpos as usize];
        }
    }
    out.fill(R::zero());
    for (h, &mass) in user_scratch.iter().enumerate() {
        if mass == R::zero() {
            continue;
        }
        for pos in graph.row_range(h) {
            out[graph.item_at(pos) as usize] += mass * weights.w_u[pos];
        }
    }
}

/// `R = A · W_Iᵀ · W_U`, materialized densely. Row order is deterministic;
/// rows are computed independently in parallel.
pub fn predict_scores<R: Real>(
    graph: &BipartiteGraph,
    weights: &WeightPair<R>,
) -> PredictionMatrix<R> {
    let m = graph.user_count();
    let n = graph.item_count();
    let mut data = Array2::zeros((m, n));
    data.axis_iter_mut(ndarray::Axis(0))
        .into_par_iter()
        .enumerate()
        .for_each_init(
            || vec![R::zero(); m],
            |scratch, (u, mut row)| {
                let out = row.as_slice_mut().expect("row-major layout");
                score_user_into(graph, weights, u, scratch, out);
            },
        );
    PredictionMatrix::new(data)
}

/// Classical equal-allocation diffusion, one round.
pub fn probs_predict<R: Real>(graph: &BipartiteGraph) -> PredictionMatrix<R> {
    predict_scores(graph, &probs_weights(graph))
}

/// Similarity-steered diffusion, one round.
pub fn aiprobs_predict<R: Real>(
    graph: &BipartiteGraph,
    f_u: &RepresentationMatrix<R>,
    f_i: &RepresentationMatrix<R>,
    cfg: &CombinationConfig,
) -> Result<PredictionMatrix<R>> {
    Ok(predict_scores(
        graph,
        &aiprobs_weights(graph, f_u, f_i, cfg)?,
    ))
}

/// Similarity-steered diffusion from an explicit similarity matrix.
pub fn aiprobs_predict_from_similarity<R: Real>(
    graph: &BipartiteGraph,
    s: &SimilarityMatrix<R>,
    cfg: &CombinationConfig,
) -> Result<PredictionMatrix<R>> {
    Ok(predict_scores(
        graph,
        &aiprobs_weights_from_similarity(graph, s, cfg)?,
    ))
}

/// Representation-only baseline: cosine similarity used directly as scores.
pub fn pure_dhc_predict<R: Real>(
    f_u: &RepresentationMatrix<R>,
    f_i: &RepresentationMatrix<R>,
) -> Result<PredictionMatrix<R>> {
    let s = crate::similarity::similarity(f_u, f_i, Metric::Cosine)?;
    Ok(PredictionMatrix::new(s.data().clone()))
}

// ---------------------------------------------------------------------------
// The diffusion operator and its convergence.

/// Materializes `T = (D_I ∘ A)ᵀ · (D_U ∘ A)`; row-stochastic when no item
/// has zero degree. Intended for analysis on small instances.
pub fn diffusion_operator<R: Real>(graph: &BipartiteGraph) -> Array2<R> {
    let n = graph.item_count();
    let mut t = Array2::zeros((n, n));
    t.axis_iter_mut(ndarray::Axis(0))
        .into_par_iter()
        .enumerate()
        .for_each(|(j, mut row)| {
            let kj = graph.item_degrees()[j] as usize;
            if kj == 0 {
                return;
            }
            let inv_kj = R::one() / real_from_usize(kj);
            for &h in graph.users_of(j) {
                let h = h as usize;
                let coef = inv_kj / real_from_usize(graph.user_degrees()[h] as usize);
                for &j2 in graph.items_of(h) {
                    row[j2 as usize] += coef;
                }
            }
        });
    t
}

/// Iterates `A ← A·T` and records the entrywise max-abs distance between
/// successive iterates, stopping below `epsilon` or at `max_steps`. Used to
/// exercise the contraction property, not for prediction.
pub fn iterate_to_fixpoint<R: Real>(
    a0: &ArrayView2<'_, R>,
    t: &ArrayView2<'_, R>,
    max_steps: usize,
    epsilon: R,
) -> Vec<R> {
    let mut distances = Vec::new();
    let mut cur = a0.to_owned();
    for _ in 0..max_steps {
        let next = cur.dot(t);
        let d = crate::spectral::max_abs_diff(&next.view(), &cur.view());
        distances.push(d);
        cur = next;
        if d < epsilon {
            break;
        }
    }
    distances
}

// ---------------------------------------------------------------------------
// Prediction export.

/// Writes the full score matrix as delimited text, one user per line.
pub fn export_prediction_text<R: Real>(pred: &PredictionMatrix<R>, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    for row in pred.data().rows() {
        let mut line = String::new();
        for (k, v) in row.iter().enumerate() {
            if k > 0 {
                line.push('\t');
            }
            line.push_str(&format!("{v}"));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Writes nonzero scores as a binary triple stream: little-endian
/// `u32 user, u32 item, f64 score` records.
pub fn export_prediction_triples<R: Real>(pred: &PredictionMatrix<R>, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    for ((u, i), &v) in pred.data().indexed_iter() {
        if v == R::zero() {
            continue;
        }
        out.write_all(&(u as u32).to_le_bytes())?;
        out.write_all(&(i as u32).to_le_bytes())?;
        out.write_all(&v.to_f64().expect("finite score").to_le_bytes())?;
    }
    Ok(())
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)] // index loops mirror the hand formulas in the oracles
mod tests {
    use super::*;
    use crate::embed::method_one_representations;
    use ndarray::array;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn toy_graph() -> BipartiteGraph {
        // A = [[1,1,0],[0,1,1]]
        BipartiteGraph::from_edges(2, 3, &[(0, 0), (0, 1), (1, 1), (1, 2)])
    }

    #[test]
    fn probs_matches_hand_computed_values() {
        let r = probs_predict::<f64>(&toy_graph());
        let expected = array![[0.75, 1.0, 0.25], [0.25, 1.0, 0.75]];
        for (idx, &v) in r.data().indexed_iter() {
            assert!((v - expected[idx]).abs() < 1e-12, "at {idx:?}");
        }
    }

    #[test]
    fn probs_matches_bruteforce_resource_flow() {
        // Independent oracle: simulate the two diffusion hops edge by edge.
        let mut rng = StdRng::seed_from_u64(21);
        for _ in 0..20 {
            let m = 5;
            let n = 7;
            let mut edges = Vec::new();
            for u in 0..m as u32 {
                for i in 0..n as u32 {
                    if rng.random_bool(0.45) {
                        edges.push((u, i));
                    }
                }
            }
            if edges.is_empty() {
                continue;
            }
            let g = BipartiteGraph::from_edges(m, n, &edges);
            let r = probs_predict::<f64>(&g);
            for u in 0..m {
                // resources start at user u's items with value 1
                let mut item_resource = vec![0.0f64; n];
                for &i in g.items_of(u) {
                    item_resource[i as usize] = 1.0;
                }
                // items split equally among their users
                let mut user_resource = vec![0.0f64; m];
                for i in 0..n {
                    let ki = g.item_degrees()[i] as f64;
                    if ki == 0.0 {
                        continue;
                    }
                    for &h in g.users_of(i) {
                        user_resource[h as usize] += item_resource[i] / ki;
                    }
                }
                // users split equally among their items
                let mut back = vec![0.0f64; n];
                for h in 0..m {
                    let ku = g.user_degrees()[h] as f64;
                    if ku == 0.0 {
                        continue;
                    }
                    for &i in g.items_of(h) {
                        back[i as usize] += user_resource[h] / ku;
                    }
                }
                for i in 0..n {
                    assert!((r.data()[(u, i)] - back[i]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn zero_degree_user_row_is_zero() {
        let g = BipartiteGraph::from_edges(3, 2, &[(0, 0), (1, 1), (0, 1)]);
        let r = probs_predict::<f64>(&g);
        assert!(r.data().row(2).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn probs_row_sums_equal_user_degrees() {
        let mut rng = StdRng::seed_from_u64(5);
        for _ in 0..10 {
            let (m, n) = (5, 7);
            let mut edges = Vec::new();
            // dense enough that no degree is zero
            for u in 0..m as u32 {
                for i in 0..n as u32 {
                    if rng.random_bool(0.6) {
                        edges.push((u, i));
                    }
                }
            }
            for u in 0..m as u32 {
                edges.push((u, u % n as u32));
            }
            for i in 0..n as u32 {
                edges.push((i % m as u32, i));
            }
            let g = BipartiteGraph::from_edges(m, n, &edges);
            let r = probs_predict::<f64>(&g);
            for u in 0..m {
                let sum: f64 = r.data().row(u).iter().sum();
                assert!((sum - g.user_degrees()[u] as f64).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn operator_matches_hand_computed_rows() {
        let t = diffusion_operator::<f64>(&toy_graph());
        let expected = array![[0.5, 0.5, 0.0], [0.25, 0.5, 0.25], [0.0, 0.5, 0.5]];
        for (idx, &v) in t.indexed_iter() {
            assert!((v - expected[idx]).abs() < 1e-12, "at {idx:?}");
        }
    }

    #[test]
    fn operator_single_edge_is_identity() {
        let g = BipartiteGraph::from_edges(1, 1, &[(0, 0)]);
        let t = diffusion_operator::<f64>(&g);
        assert_eq!(t[(0, 0)], 1.0);
    }

    #[test]
    fn operator_rows_are_stochastic() {
        let mut rng = StdRng::seed_from_u64(13);
        for _ in 0..10 {
            let (m, n) = (6, 8);
            let mut edges = Vec::new();
            for u in 0..m as u32 {
                for i in 0..n as u32 {
                    if rng.random_bool(0.5) {
                        edges.push((u, i));
                    }
                }
            }
            for i in 0..n as u32 {
                edges.push((i % m as u32, i));
            }
            let g = BipartiteGraph::from_edges(m, n, &edges);
            let t = diffusion_operator::<f64>(&g);
            for j in 0..n {
                let sum: f64 = t.row(j).iter().sum();
                assert!((sum - 1.0).abs() < 1e-10, "row {j} sums to {sum}");
            }
        }
    }

    #[test]
    fn fixpoint_distances_shrink_below_epsilon() {
        let g = toy_graph();
        let t = diffusion_operator::<f64>(&g);
        let a = g.to_dense::<f64>();
        let distances = iterate_to_fixpoint(&a.view(), &t.view(), 10_000, 1e-10);
        assert!(*distances.last().unwrap() < 1e-10);
        for pair in distances.windows(2) {
            assert!(pair[1] <= pair[0], "distance increased: {pair:?}");
        }
    }

    #[test]
    fn fixpoint_at_identity_operator() {
        let g = BipartiteGraph::from_edges(1, 1, &[(0, 0)]);
        let t = diffusion_operator::<f64>(&g);
        let a = g.to_dense::<f64>();
        let distances = iterate_to_fixpoint(&a.view(), &t.view(), 10, 1e-10);
        assert_eq!(distances, vec![0.0]);
    }

    #[test]
    fn maxmin_spec_examples() {
        let m = array![[0.2f64, 0.6, 1.0]];
        let mask = [(0, 0), (0, 1), (0, 2)];
        let out = maxmin_normalize(&m.view(), Axis::Row, &mask);
        assert_eq!(out[(0, 0)], 0.0);
        assert!((out[(0, 1)] - 0.5).abs() < 1e-15);
        assert_eq!(out[(0, 2)], 1.0);

        let tie = array![[0.4, 0.4]];
        let out = maxmin_normalize(&tie.view(), Axis::Row, &[(0, 0), (0, 1)]);
        assert_eq!(out, array![[1.0, 1.0]]);

        let partial = array![[0.9, 0.1, 0.5]];
        let out = maxmin_normalize(&partial.view(), Axis::Row, &[(0, 1), (0, 2)]);
        assert_eq!(out[(0, 0)], 0.0); // outside mask → 0 regardless of value
        assert_eq!(out[(0, 1)], 0.0);
        assert_eq!(out[(0, 2)], 1.0);
    }

    #[test]
    fn proportioning_spec_examples() {
        let m = array![[0.0f64, 0.5, 1.0]];
        let out = proportioning(
            &m.view(),
            Axis::Row,
            &[(0, 1), (0, 2)],
            Proportioning::Share,
        )
        .unwrap();
        assert_eq!(out[(0, 0)], 0.0);
        assert!((out[(0, 1)] - 1.0 / 3.0).abs() < 1e-12);
        assert!((out[(0, 2)] - 2.0 / 3.0).abs() < 1e-12);

        let uniform = array![[0.3f64, 0.3, 0.3]];
        let out = proportioning(
            &uniform.view(),
            Axis::Row,
            &[(0, 0), (0, 1), (0, 2)],
            Proportioning::Share,
        )
        .unwrap();
        for c in 0..3 {
            assert!((out[(0, c)] - 1.0 / 3.0).abs() < 1e-12);
        }

        let with_zero = array![[0.0, 0.5]];
        let err = proportioning(
            &with_zero.view(),
            Axis::Row,
            &[(0, 0), (0, 1)],
            Proportioning::Literal,
        );
        assert!(matches!(err, Err(Error::LiteralProportioningZero { .. })));
    }

    #[test]
    fn literal_form_on_strictly_positive_line() {
        let m = array![[0.5f64, 1.0]];
        let out = proportioning(
            &m.view(),
            Axis::Row,
            &[(0, 0), (0, 1)],
            Proportioning::Literal,
        )
        .unwrap();
        // sum 1.5 divided by each entry, as printed
        assert!((out[(0, 0)] - 3.0).abs() < 1e-12);
        assert!((out[(0, 1)] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn proportioning_zero_sum_line_falls_back_to_uniform() {
        let m = array![[0.0, 0.0]];
        let out = proportioning(
            &m.view(),
            Axis::Row,
            &[(0, 0), (0, 1)],
            Proportioning::Share,
        )
        .unwrap();
        assert_eq!(out, array![[0.5, 0.5]]);
    }

    #[test]
    fn column_axis_normalizes_down_columns() {
        let m = array![[0.0, 4.0], [1.0, 2.0]];
        let mask = [(0, 1), (1, 1)];
        let out = maxmin_normalize(&m.view(), Axis::Column, &mask);
        assert_eq!(out[(0, 1)], 1.0);
        assert_eq!(out[(1, 1)], 0.0);
        assert_eq!(out[(0, 0)], 0.0);
        assert_eq!(out[(1, 0)], 0.0);
    }

    fn random_graph_all_degrees_positive(rng: &mut StdRng, m: usize, n: usize) -> BipartiteGraph {
        let mut edges = Vec::new();
        for u in 0..m as u32 {
            for i in 0..n as u32 {
                if rng.random_bool(0.5) {
                    edges.push((u, i));
                }
            }
        }
        for u in 0..m as u32 {
            edges.push((u, u % n as u32));
        }
        for i in 0..n as u32 {
            edges.push((i % m as u32, i));
        }
        BipartiteGraph::from_edges(m, n, &edges)
    }

    #[test]
    fn constant_similarity_reduces_to_probs() {
        let mut rng = StdRng::seed_from_u64(17);
        for _ in 0..10 {
            let g = random_graph_all_degrees_positive(&mut rng, 6, 8);
            let s = SimilarityMatrix::new(Array2::from_elem((6, 8), 0.37f64));
            let adaptive =
                aiprobs_predict_from_similarity(&g, &s, &CombinationConfig::default_cosine())
                    .unwrap();
            let classic = probs_predict::<f64>(&g);
            for (idx, &v) in adaptive.data().indexed_iter() {
                assert!((v - classic.data()[idx]).abs() <= 1e-12, "at {idx:?}");
            }
        }
    }

    #[test]
    fn share_weights_sum_to_one_per_line() {
        let mut rng = StdRng::seed_from_u64(23);
        let g = random_graph_all_degrees_positive(&mut rng, 6, 8);
        let (f_u, f_i) = method_one_representations::<f64>(&g);
        let w = aiprobs_weights(&g, &f_u, &f_i, &CombinationConfig::default_cosine()).unwrap();
        let dense_u = w.to_dense_u(&g);
        let dense_i = w.to_dense_i(&g);
        for u in 0..6 {
            let sum: f64 = dense_u.row(u).iter().sum();
            assert!((sum - 1.0).abs() < 1e-10);
        }
        for i in 0..8 {
            let sum: f64 = dense_i.column(i).iter().sum();
            assert!((sum - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn weights_vanish_off_edges() {
        let g = BipartiteGraph::from_edges(3, 3, &[(0, 0), (1, 1), (2, 2), (0, 2)]);
        let (f_u, f_i) = method_one_representations::<f64>(&g);
        let w = aiprobs_weights(&g, &f_u, &f_i, &CombinationConfig::default_cosine()).unwrap();
        let dense_u = w.to_dense_u(&g);
        let dense_i = w.to_dense_i(&g);
        for u in 0..3 {
            for i in 0..3u32 {
                if !g.has_edge(u, i) {
                    assert_eq!(dense_u[(u, i as usize)], 0.0);
                    assert_eq!(dense_i[(u, i as usize)], 0.0);
                }
            }
        }
    }

    #[test]
    fn nonnegative_scores_in_share_form() {
        let mut rng = StdRng::seed_from_u64(31);
        let g = random_graph_all_degrees_positive(&mut rng, 5, 6);
        let (f_u, f_i) = method_one_representations::<f64>(&g);
        for metric in Metric::ALL {
            let cfg = CombinationConfig::new(metric, Normalization::MaxMin, Proportioning::Share);
            let r = aiprobs_predict(&g, &f_u, &f_i, &cfg).unwrap();
            assert!(r.data().iter().all(|&v| v >= 0.0), "metric {metric:?}");
        }
    }

    #[test]
    fn pure_dhc_identical_vectors_top_score() {
        let f_u = RepresentationMatrix::new(array![[1.0f64, 2.0]]);
        let f_i = RepresentationMatrix::new(array![[1.0, 2.0], [2.0, 1.0]]);
        let r = pure_dhc_predict(&f_u, &f_i).unwrap();
        assert!((r.data()[(0, 0)] - 1.0).abs() < 1e-12);
        assert!(r.data()[(0, 0)] > r.data()[(0, 1)]);
    }

    #[test]
    fn streaming_row_matches_dense_prediction() {
        let mut rng = StdRng::seed_from_u64(41);
        let g = random_graph_all_degrees_positive(&mut rng, 7, 9);
        let (f_u, f_i) = method_one_representations::<f64>(&g);
        let w = aiprobs_weights(&g, &f_u, &f_i, &CombinationConfig::default_cosine()).unwrap();
        let dense = predict_scores(&g, &w);
        let mut scratch = vec![0.0; 7];
        let mut row = vec![0.0; 9];
        for u in 0..7 {
            score_user_into(&g, &w, u, &mut scratch, &mut row);
            for i in 0..9 {
                assert_eq!(row[i], dense.data()[(u, i)]);
            }
        }
    }

    #[test]
    fn sparse_kernel_matches_dense_matrix_products() {
        let mut rng = StdRng::seed_from_u64(53);
        for _ in 0..10 {
            let g = random_graph_all_degrees_positive(&mut rng, 7, 9);
            let (f_u, f_i) = method_one_representations::<f64>(&g);
            let w = aiprobs_weights(&g, &f_u, &f_i, &CombinationConfig::default_cosine()).unwrap();
            let via_kernel = predict_scores(&g, &w);
            let a = g.to_dense::<f64>();
            let dense_i = w.to_dense_i(&g);
            let dense_u = w.to_dense_u(&g);
            let via_matrices = a.dot(&dense_i.t()).dot(&dense_u);
            for (idx, &v) in via_kernel.data().indexed_iter() {
                assert!(
                    (v - via_matrices[idx]).abs() < 1e-12,
                    "at {idx:?}: kernel {v} vs matrices {}",
                    via_matrices[idx]
                );
            }
        }
    }

    #[test]
    fn combination_labels_and_keys() {
        let cfg = CombinationConfig::default_cosine();
        assert_eq!(cfg.label(), "cosine + M-M + P");
        assert_eq!(cfg.key(), "cosine+maxmin+share");
        assert_eq!(
            CombinationConfig::parse("pearson+none+none")
                .unwrap()
                .label(),
            "Pearson"
        );
        assert_eq!(CombinationConfig::standard_matrix().len(), 15);
    }

    #[test]
    fn literal_after_maxmin_errors_descriptively() {
        let g = toy_graph();
        let (f_u, f_i) = method_one_representations::<f64>(&g);
        let cfg = CombinationConfig::new(
            Metric::Cosine,
            Normalization::MaxMin,
            Proportioning::Literal,
        );
        let err = aiprobs_weights(&g, &f_u, &f_i, &cfg);
        assert!(matches!(err, Err(Error::LiteralProportioningZero { .. })));
    }
}
