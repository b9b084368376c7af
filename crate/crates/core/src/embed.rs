//! Node representation builders.
//!
//! Method one takes each node's iterated H-index sequence as its coordinates.
//! Method two decomposes the augmented adjacency into rank-one idempotents,
//! runs the weighted H-index iteration on each factor, and turns the
//! column-wise Shannon entropies of the resulting table into that node's
//! coordinates.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::{Array2, ArrayView1, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{augment, BipartiteGraph};
use crate::hindex::{
    h_index_sequences, scaled_outer_h_index_sequences, weighted_h_index_sequences, HIndexTable,
};
use crate::scalar::{real, real_from_usize, Real};
use crate::spectral::{spectral_decompose, SpectralDecomposition};

/// Default max-norm tolerance for validating the spectral reconstruction.
pub const SPECTRAL_TOLERANCE: f64 = 1e-8;

/// Per-partition representation matrix: one row per node, `s` columns.
#[derive(Debug, Clone, PartialEq)]
pub struct RepresentationMatrix<R> {
    data: Array2<R>,
}

impl<R: Real> RepresentationMatrix<R> {
    pub fn new(data: Array2<R>) -> Self {
        Self { data }
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    /// Representation width `s`.
    pub fn width(&self) -> usize {
        self.data.ncols()
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, R> {
        self.data.row(i)
    }

    pub fn data(&self) -> &Array2<R> {
        &self.data
    }
}

/// Whole-graph embedding: one entropy per H-table column.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector<R> {
    values: Vec<R>,
}

impl<R: Real> EmbeddingVector<R> {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[R] {
        &self.values
    }
}

/// Frequency-based Shannon entropy (natural log) of a value multiset, with
/// values quantized to 6 decimal digits before counting.
fn column_entropy<R: Real>(values: &[R]) -> R {
    if values.is_empty() {
        return R::zero();
    }
    let mut counts: HashMap<i64, usize> = HashMap::new();
    for &v in values {
        let key = (v.to_f64().expect("finite representation value") * 1e6).round() as i64;
        *counts.entry(key).or_insert(0) += 1;
    }
    let total: R = real_from_usize(values.len());
    let mut entropy = R::zero();
    for &count in counts.values() {
        let p = real_from_usize::<R>(count) / total;
        entropy -= p * p.ln();
    }
    entropy.max(R::zero())
}

fn entropy_of_table<R: Real>(table: &HIndexTable<R>) -> EmbeddingVector<R> {
    let nodes = table.node_count();
    let values = (0..table.steps())
        .map(|t| {
            let column: Vec<R> = (0..nodes).map(|i| table.values()[(i, t)]).collect();
            column_entropy(&column)
        })
        .collect();
    EmbeddingVector { values }
}

/// DHC-E operator: weighted H-index iteration on `|W|`, then the Shannon
/// entropy of each table column.
pub fn dhc_entropy<R: Real>(w: &ArrayView2<'_, R>) -> Result<EmbeddingVector<R>> {
    let table = weighted_h_index_sequences(w)?;
    Ok(entropy_of_table(&table))
}

/// H-index sequence representations: the bipartite graph is iterated as one
/// network of `m + n` nodes and the table rows become coordinates, users
/// first. Both partitions share the global width.
pub fn method_one_representations<R: Real>(
    train: &BipartiteGraph,
) -> (RepresentationMatrix<R>, RepresentationMatrix<R>) {
    let table: HIndexTable<R> = h_index_sequences(train);
    let m = train.user_count();
    let n = train.item_count();
    let s = table.steps();
    let mut f_u = Array2::zeros((m, s));
    let mut f_i = Array2::zeros((n, s));
    for u in 0..m {
        f_u.row_mut(u).assign(&table.row(u));
    }
    for i in 0..n {
        f_i.row_mut(i).assign(&table.row(m + i));
    }
    (
        RepresentationMatrix::new(f_u),
        RepresentationMatrix::new(f_i),
    )
}

/// Which matrix each per-node DHC-E run sees in method two.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectralMode {
    /// `λ_i B_i`, keeping eigenvalue information (default).
    WeightedByEigenvalue,
    /// Bare `B_i`.
    RawIdempotent,
}

/// Spectral-entropy representations: one DHC-E embedding per eigenpair,
/// assigned to the node with the same index. With `truncation = Some(k)`
/// only the `k` largest-magnitude eigenpairs are embedded and the remaining
/// nodes receive zero vectors (a flagged approximation for large graphs).
pub fn method_two_representations<R: Real>(
    train: &BipartiteGraph,
    mode: SpectralMode,
    truncation: Option<usize>,
) -> Result<(RepresentationMatrix<R>, RepresentationMatrix<R>)> {
    if train.edge_count() == 0 {
        return Err(Error::EmptyInput("train graph"));
    }
    let b = augment::<R>(train);
    let decomp = spectral_decompose(&b, real(SPECTRAL_TOLERANCE))?;
    method_two_from_decomposition(train, &decomp, mode, truncation)
}

/// Same as [`method_two_representations`] but reusing an existing
/// decomposition, which tests and sweeps over modes exploit.
pub fn method_two_from_decomposition<R: Real>(
    train: &BipartiteGraph,
    decomp: &SpectralDecomposition<R>,
    mode: SpectralMode,
    truncation: Option<usize>,
) -> Result<(RepresentationMatrix<R>, RepresentationMatrix<R>)> {
    let order = decomp.order();
    let selected: Vec<bool> = match truncation {
        None => vec![true; order],
        Some(k) => {
            if k == 0 || k > order {
                return Err(Error::TruncationOutOfRange {
                    requested: k,
                    order,
                });
            }
            let mut by_magnitude: Vec<usize> = (0..order).collect();
            by_magnitude.sort_by(|&x, &y| {
                decomp.lambdas()[y]
                    .abs()
                    .partial_cmp(&decomp.lambdas()[x].abs())
                    .expect("finite eigenvalues")
                    .then(x.cmp(&y))
            });
            let mut mask = vec![false; order];
            for &i in by_magnitude.iter().take(k) {
                mask[i] = true;
            }
            mask
        }
    };

    let embeddings: Vec<Option<EmbeddingVector<R>>> = (0..order)
        .into_par_iter()
        .map(|i| {
            if !selected[i] {
                return Ok(None);
            }
            let scale = match mode {
                SpectralMode::WeightedByEigenvalue => decomp.lambdas()[i],
                SpectralMode::RawIdempotent => R::one(),
            };
            let vector: Vec<R> = decomp.eigenvector(i).to_vec();
            let table = scaled_outer_h_index_sequences(scale, &vector)?;
            Ok(Some(entropy_of_table(&table)))
        })
        .collect::<Result<_>>()?;

    let s = embeddings
        .iter()
        .flatten()
        .map(EmbeddingVector::len)
        .max()
        .expect("at least one eigenpair is embedded");

    let mut rows = Array2::zeros((order, s));
    for (i, emb) in embeddings.iter().enumerate() {
        if let Some(emb) = emb {
            let vals = emb.values();
            let last = *vals.last().expect("tables have at least two columns");
            for t in 0..s {
                rows[(i, t)] = if t < vals.len() { vals[t] } else { last };
            }
        }
    }

    let m = train.user_count();
    let n = train.item_count();
    let f_u = rows.slice(ndarray::s![0..m, ..]).to_owned();
    let f_i = rows.slice(ndarray::s![m..m + n, ..]).to_owned();
    Ok((
        RepresentationMatrix::new(f_u),
        RepresentationMatrix::new(f_i),
    ))
}

/// Writes `users.tsv` and `items.tsv` under `dir`: node key, then the `s`
/// coordinates, tab-delimited.
pub fn export_representations<R: Real>(
    graph: &BipartiteGraph,
    f_u: &RepresentationMatrix<R>,
    f_i: &RepresentationMatrix<R>,
    dir: &Path,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    let write_side =
        |name: &str, mat: &RepresentationMatrix<R>, key: &dyn Fn(usize) -> String| -> Result<()> {
            let mut out = fs::File::create(dir.join(name))?;
            for r in 0..mat.rows() {
                let mut line = key(r);
                for v in mat.row(r) {
                    line.push('\t');
                    line.push_str(&format!("{v}"));
                }
                writeln!(out, "{line}")?;
            }
            Ok(())
        };
    write_side("users.tsv", f_u, &|u| graph.user_key(u).to_string())?;
    write_side("items.tsv", f_i, &|i| graph.item_key(i).to_string())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    const LN2: f64 = std::f64::consts::LN_2;

    #[test]
    fn entropy_of_constant_column_is_zero() {
        assert_eq!(column_entropy(&[0.7f64, 0.7, 0.7, 0.7]), 0.0);
    }

    #[test]
    fn entropy_of_two_equiprobable_values() {
        let e = column_entropy(&[1.0f64, 1.0, 2.0, 2.0]);
        assert!((e - LN2).abs() < 1e-12);
    }

    #[test]
    fn entropy_of_four_distinct_values() {
        let e = column_entropy(&[1.0f64, 2.0, 3.0, 4.0]);
        assert!((e - 4.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn entropy_quantizes_at_one_millionth() {
        // differ by 1e-9: same bucket
        assert_eq!(column_entropy(&[0.5f64, 0.5 + 1e-9]), 0.0);
        // differ by 1e-3: distinct buckets
        let e = column_entropy(&[0.5f64, 0.501]);
        assert!((e - LN2).abs() < 1e-12);
    }

    #[test]
    fn dhc_entropy_bounded_by_ln_node_count() {
        let w = array![[0.0, 1.0, 2.0], [1.0, 0.0, 0.5], [2.0, 0.5, 0.0],];
        let e = dhc_entropy(&w.view()).unwrap();
        let bound = 3.0f64.ln() + 1e-12;
        assert!(e.values().iter().all(|&v| (0.0..=bound).contains(&v)));
    }

    #[test]
    fn dhc_entropy_invariant_under_simultaneous_permutation() {
        let w = array![
            [0.0f64, 2.0, 1.0, 1.0],
            [2.0, 0.0, 1.5, 0.0],
            [1.0, 1.5, 0.0, 0.3],
            [1.0, 0.0, 0.3, 0.0],
        ];
        // permutation (0 1 2 3) -> (2 0 3 1)
        let perm = [2usize, 0, 3, 1];
        let mut pw = Array2::zeros((4, 4));
        for a in 0..4 {
            for b in 0..4 {
                pw[(perm[a], perm[b])] = w[(a, b)];
            }
        }
        let e1 = dhc_entropy(&w.view()).unwrap();
        let e2 = dhc_entropy(&pw.view()).unwrap();
        assert_eq!(e1.len(), e2.len());
        for (a, b) in e1.values().iter().zip(e2.values()) {
            assert!((*a - *b).abs() < 1e-12);
        }
    }

    #[test]
    fn method_one_on_three_edge_graph() {
        let g = BipartiteGraph::from_edges(2, 2, &[(0, 0), (0, 1), (1, 1)]);
        let (f_u, f_i) = method_one_representations::<f64>(&g);
        assert_eq!(f_u.width(), f_i.width());
        assert_eq!(f_u.row(0).to_vec(), vec![2.0, 1.0, 1.0]);
        assert_eq!(f_u.row(1).to_vec(), vec![1.0, 1.0, 1.0]);
        assert_eq!(f_i.row(0).to_vec(), vec![1.0, 1.0, 1.0]);
        assert_eq!(f_i.row(1).to_vec(), vec![2.0, 1.0, 1.0]);
    }

    #[test]
    fn method_one_zero_degree_user_gets_zero_row() {
        let g = BipartiteGraph::from_edges(2, 1, &[(1, 0)]);
        let (f_u, _) = method_one_representations::<f64>(&g);
        assert!(f_u.row(0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn method_one_last_column_is_coreness() {
        let g = BipartiteGraph::from_edges(3, 4, &[(0, 0), (0, 1), (1, 0), (1, 1), (2, 2), (2, 3)]);
        let (f_u, f_i) = method_one_representations::<f64>(&g);
        let core = crate::hindex::coreness(&g);
        let s = f_u.width();
        for (u, &c) in core.iter().take(3).enumerate() {
            assert_eq!(f_u.row(u)[s - 1], c as f64);
        }
        for (i, &c) in core.iter().skip(3).enumerate() {
            assert_eq!(f_i.row(i)[s - 1], c as f64);
        }
    }

    #[test]
    fn method_two_on_single_edge_graph() {
        let g = BipartiteGraph::from_edges(1, 1, &[(0, 0)]);
        let (f_u, f_i) =
            method_two_representations::<f64>(&g, SpectralMode::WeightedByEigenvalue, None)
                .unwrap();
        // both eigenpairs of the order-2 exchange matrix have |λ| = 1 and
        // |λ B_i| is the constant-half matrix: every table column is constant,
        // so every entropy vanishes.
        assert_eq!(f_u.width(), f_i.width());
        assert!(f_u.row(0).iter().all(|&v| v == 0.0));
        assert!(f_i.row(0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn method_two_mode_switch_changes_representations() {
        // 1 user, 2 items: eigenvalues (√2, 0, −√2), |λ| ≠ 1
        let g = BipartiteGraph::from_edges(1, 2, &[(0, 0), (0, 1)]);
        let weighted =
            method_two_representations::<f64>(&g, SpectralMode::WeightedByEigenvalue, None)
                .unwrap();
        let raw = method_two_representations::<f64>(&g, SpectralMode::RawIdempotent, None).unwrap();
        // the zero eigenpair embeds the zero matrix in weighted mode but a
        // nonzero idempotent in raw mode, so the item rows must differ
        assert_ne!(weighted.1.data(), raw.1.data());
    }

    #[test]
    fn method_two_widths_match() {
        let g = BipartiteGraph::from_edges(3, 3, &[(0, 0), (0, 1), (1, 1), (2, 2), (1, 2)]);
        let (f_u, f_i) =
            method_two_representations::<f64>(&g, SpectralMode::WeightedByEigenvalue, None)
                .unwrap();
        assert_eq!(f_u.width(), f_i.width());
        assert_eq!(f_u.rows(), 3);
        assert_eq!(f_i.rows(), 3);
    }

    #[test]
    fn truncation_out_of_range_errors() {
        let g = BipartiteGraph::from_edges(1, 2, &[(0, 0), (0, 1)]);
        let err =
            method_two_representations::<f64>(&g, SpectralMode::WeightedByEigenvalue, Some(9));
        assert!(matches!(err, Err(Error::TruncationOutOfRange { .. })));
    }

    #[test]
    fn truncation_zeroes_unselected_nodes() {
        let g = BipartiteGraph::from_edges(2, 3, &[(0, 0), (0, 1), (1, 1), (1, 2)]);
        let (f_u, f_i) =
            method_two_representations::<f64>(&g, SpectralMode::WeightedByEigenvalue, Some(2))
                .unwrap();
        let full = method_two_representations::<f64>(&g, SpectralMode::WeightedByEigenvalue, None)
            .unwrap();
        // top-|λ| pairs are the first and last index (symmetric spectrum)
        let zeros = f_u
            .data()
            .rows()
            .into_iter()
            .chain(f_i.data().rows())
            .filter(|r| r.iter().all(|&v| v == 0.0))
            .count();
        assert!(zeros >= (f_u.rows() + f_i.rows()) - 2);
        assert_eq!(f_u.width(), f_i.width());
        let _ = full;
    }
}
