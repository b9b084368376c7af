//! User–item similarity from representation matrices.
//!
//! Cosine is the headline metric; covariance, dot product, Euclidean
//! distance (a dissimilarity, made usable by the downstream normalization),
//! and the Pearson coefficient are the alternative combinations.

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embed::RepresentationMatrix;
use crate::error::{Error, Result};
use crate::scalar::{real_from_usize, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Cosine,
    Cov,
    Dot,
    Euclidean,
    Pearson,
}

impl Metric {
    pub const ALL: [Metric; 5] = [
        Metric::Cosine,
        Metric::Cov,
        Metric::Dot,
        Metric::Euclidean,
        Metric::Pearson,
    ];

    /// Config key, matching the CLI vocabulary.
    pub fn key(self) -> &'static str {
        match self {
            Metric::Cosine => "cosine",
            Metric::Cov => "cov",
            Metric::Dot => "dot",
            Metric::Euclidean => "euclidean",
            Metric::Pearson => "pearson",
        }
    }

    /// Display name used in combination tables.
    pub fn table_name(self) -> &'static str {
        match self {
            Metric::Cosine => "cosine",
            Metric::Cov => "Cov",
            Metric::Dot => "dot_product",
            Metric::Euclidean => "ED",
            Metric::Pearson => "Pearson",
        }
    }

    pub fn parse(s: &str) -> Result<Metric> {
        match s {
            "cosine" => Ok(Metric::Cosine),
            "cov" => Ok(Metric::Cov),
            "dot" => Ok(Metric::Dot),
            "euclidean" => Ok(Metric::Euclidean),
            "pearson" => Ok(Metric::Pearson),
            other => Err(Error::InvalidInput(format!("unknown metric {other:?}"))),
        }
    }
}

/// `m×n` similarity scores between user and item representations.
#[derive(Debug, Clone)]
pub struct SimilarityMatrix<R> {
    data: Array2<R>,
}

impl<R: Real> SimilarityMatrix<R> {
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

struct RowStats<R> {
    mean: Vec<R>,
    norm: Vec<R>,
    centered_norm: Vec<R>,
}

impl<R: Real> RowStats<R> {
    fn new(mat: &RepresentationMatrix<R>) -> Self {
        let s = real_from_usize::<R>(mat.width().max(1));
        let mut mean = Vec::with_capacity(mat.rows());
        let mut norm = Vec::with_capacity(mat.rows());
        let mut centered_norm = Vec::with_capacity(mat.rows());
        for r in 0..mat.rows() {
            let row = mat.row(r);
            let sum: R = row.iter().copied().sum();
            let sq: R = row.iter().map(|&v| v * v).sum();
            let mu = sum / s;
            mean.push(mu);
            norm.push(sq.sqrt());
            centered_norm.push((sq - s * mu * mu).max(R::zero()).sqrt());
        }
        Self {
            mean,
            norm,
            centered_norm,
        }
    }
}

/// Pairwise similarity evaluator with per-row statistics precomputed once.
/// Serves both the dense matrix builder and streaming row consumers.
pub struct PairwiseSimilarity<'a, R> {
    metric: Metric,
    f_u: &'a RepresentationMatrix<R>,
    f_i: &'a RepresentationMatrix<R>,
    u_stats: RowStats<R>,
    i_stats: RowStats<R>,
    width: R,
}

impl<'a, R: Real> PairwiseSimilarity<'a, R> {
    pub fn new(
        f_u: &'a RepresentationMatrix<R>,
        f_i: &'a RepresentationMatrix<R>,
        metric: Metric,
    ) -> Result<Self> {
        if f_u.width() != f_i.width() {
            return Err(Error::WidthMismatch {
                left: f_u.width(),
                right: f_i.width(),
            });
        }
        Ok(Self {
            metric,
            f_u,
            f_i,
            u_stats: RowStats::new(f_u),
            i_stats: RowStats::new(f_i),
            width: real_from_usize(f_u.width().max(1)),
        })
    }

    pub fn users(&self) -> usize {
        self.f_u.rows()
    }

    pub fn items(&self) -> usize {
        self.f_i.rows()
    }

    pub fn value(&self, u: usize, i: usize) -> R {
        let dot = self.f_u.row(u).dot(&self.f_i.row(i));
        match self.metric {
            Metric::Dot => dot,
            Metric::Cosine => {
                let nu = self.u_stats.norm[u];
                let ni = self.i_stats.norm[i];
                if nu == R::zero() || ni == R::zero() {
                    R::zero()
                } else {
                    clamp_unit(dot / (nu * ni))
                }
            }
            Metric::Cov => {
                let centered = dot - self.width * self.u_stats.mean[u] * self.i_stats.mean[i];
                centered / self.width
            }
            Metric::Pearson => {
                let cu = self.u_stats.centered_norm[u];
                let ci = self.i_stats.centered_norm[i];
                if cu == R::zero() || ci == R::zero() {
                    R::zero()
                } else {
                    let centered = dot - self.width * self.u_stats.mean[u] * self.i_stats.mean[i];
                    clamp_unit(centered / (cu * ci))
                }
            }
            Metric::Euclidean => {
                // The distance expression as printed: the row norms enter
                // unsquared and the absolute value keeps the root real.
                let two = R::one() + R::one();
                (-(two) * dot + self.u_stats.norm[u] + self.i_stats.norm[i])
                    .abs()
                    .sqrt()
            }
        }
    }

    pub fn fill_row(&self, u: usize, out: &mut [R]) {
        debug_assert_eq!(out.len(), self.items());
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = self.value(u, i);
        }
    }
}

fn clamp_unit<R: Real>(x: R) -> R {
    x.min(R::one()).max(-R::one())
}

/// Full `m×n` similarity matrix between the two partitions' representations.
pub fn similarity<R: Real>(
    f_u: &RepresentationMatrix<R>,
    f_i: &RepresentationMatrix<R>,
    metric: Metric,
) -> Result<SimilarityMatrix<R>> {
    let pairwise = PairwiseSimilarity::new(f_u, f_i, metric)?;
    let m = pairwise.users();
    let n = pairwise.items();
    let mut data = Array2::zeros((m, n));
    data.axis_iter_mut(ndarray::Axis(0))
        .into_par_iter()
        .enumerate()
        .for_each(|(u, mut row)| {
            let buf = row.as_slice_mut().expect("row-major layout");
            pairwise.fill_row(u, buf);
        });
    Ok(SimilarityMatrix::new(data))
}
