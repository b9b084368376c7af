//! Symmetric eigendecomposition and the rank-one idempotent factorization of
//! the augmented adjacency matrix.
//!
//! The solver is the classical two-stage routine: Householder reduction to
//! tridiagonal form followed by the implicit-shift QL iteration with
//! accumulated rotations (the EISPACK `tred2`/`tql2` pair). It is generic
//! over the scalar type and needs no external linear-algebra backend.

use ndarray::{Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};
use crate::graph::AugmentedMatrix;
use crate::scalar::Real;

const MAX_QL_ITERATIONS: usize = 64;

/// Householder reduction of a symmetric matrix to tridiagonal form, with the
/// orthogonal transformation accumulated in `v`.
fn tred2<R: Real>(v: &mut Array2<R>, d: &mut [R], e: &mut [R]) {
    let n = v.nrows();
    for j in 0..n {
        d[j] = v[(n - 1, j)];
    }

    for i in (1..n).rev() {
        let mut scale = R::zero();
        let mut h = R::zero();
        for item in d.iter().take(i) {
            scale += item.abs();
        }
        if scale == R::zero() {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(i - 1, j)];
                v[(i, j)] = R::zero();
                v[(j, i)] = R::zero();
            }
        } else {
            for item in d.iter_mut().take(i) {
                *item /= scale;
                h += *item * *item;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > R::zero() {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for item in e.iter_mut().take(i) {
                *item = R::zero();
            }
            for j in 0..i {
                f = d[j];
                v[(j, i)] = f;
                g = e[j] + v[(j, j)] * f;
                for k in j + 1..i {
                    g += v[(k, j)] * d[k];
                    e[k] += v[(k, j)] * f;
                }
                e[j] = g;
            }
            f = R::zero();
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    let delta = f * e[k] + g * d[k];
                    v[(k, j)] -= delta;
                }
                d[j] = v[(i - 1, j)];
                v[(i, j)] = R::zero();
            }
        }
        d[i] = h;
    }

    // Accumulate transformations.
    for i in 0..n.saturating_sub(1) {
        v[(n - 1, i)] = v[(i, i)];
        v[(i, i)] = R::one();
        let h = d[i + 1];
        if h != R::zero() {
            for k in 0..=i {
                d[k] = v[(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = R::zero();
                for k in 0..=i {
                    g += v[(k, i + 1)] * v[(k, j)];
                }
                for k in 0..=i {
                    let delta = g * d[k];
                    v[(k, j)] -= delta;
                }
            }
        }
        for k in 0..=i {
            v[(k, i + 1)] = R::zero();
        }
    }
    for j in 0..n {
        d[j] = v[(n - 1, j)];
        v[(n - 1, j)] = R::zero();
    }
    v[(n - 1, n - 1)] = R::one();
    e[0] = R::zero();
}

/// Implicit-shift QL iteration on the tridiagonal form, rotations applied to
/// the accumulated eigenvector matrix.
fn tql2<R: Real>(v: &mut Array2<R>, d: &mut [R], e: &mut [R]) -> Result<()> {
    let n = v.nrows();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    if n > 0 {
        e[n - 1] = R::zero();
    }

    let mut f = R::zero();
    let mut tst1 = R::zero();
    let eps = R::epsilon();
    let two = R::one() + R::one();

    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > MAX_QL_ITERATIONS {
                    return Err(Error::EigenNonConvergence { index: l });
                }

                // Implicit shift to speed convergence.
                let g = d[l];
                let mut p = (d[l + 1] - g) / (two * e[l]);
                let mut r = p.hypot(R::one());
                if p < R::zero() {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for item in d.iter_mut().take(n).skip(l + 2) {
                    *item -= h;
                }
                f += h;

                // Implicit QL sweep.
                p = d[m];
                let mut c = R::one();
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = R::zero();
                let mut s2 = R::zero();
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..n {
                        h = v[(k, i + 1)];
                        v[(k, i + 1)] = s * v[(k, i)] + c * h;
                        v[(k, i)] = c * v[(k, i)] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;

                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = R::zero();
    }
    Ok(())
}

/// Full eigendecomposition of a symmetric matrix: eigenvalues descending,
/// orthonormal eigenvectors as the columns of the returned matrix.
pub fn symmetric_eigen<R: Real>(a: &ArrayView2<'_, R>) -> Result<(Vec<R>, Array2<R>)> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::InvalidInput(format!(
            "eigendecomposition needs a square matrix, got {}×{}",
            n,
            a.ncols()
        )));
    }
    if let Some(bad) = a.iter().find(|v| !v.is_finite()) {
        return Err(Error::BadValue(format!("matrix entry {bad}")));
    }
    if n == 0 {
        return Ok((Vec::new(), Array2::zeros((0, 0))));
    }
    let mut v = a.to_owned();
    let mut d = vec![R::zero(); n];
    let mut e = vec![R::zero(); n];
    tred2(&mut v, &mut d, &mut e);
    tql2(&mut v, &mut d, &mut e)?;

    // Sort descending by eigenvalue, ties by original position.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| {
        d[y].partial_cmp(&d[x])
            .expect("finite eigenvalues")
            .then(x.cmp(&y))
    });
    let lambdas: Vec<R> = order.iter().map(|&k| d[k]).collect();
    let mut vectors = Array2::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        vectors.column_mut(dst).assign(&v.column(src));
    }
    Ok((lambdas, vectors))
}

/// Eigenvalues plus rank-one idempotent factors of a symmetric matrix,
/// ordered by descending eigenvalue.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition<R> {
    lambdas: Vec<R>,
    vectors: Array2<R>,
}

impl<R: Real> SpectralDecomposition<R> {
    pub fn order(&self) -> usize {
        self.lambdas.len()
    }

    /// Eigenvalues, descending.
    pub fn lambdas(&self) -> &[R] {
        &self.lambdas
    }

    /// Unit eigenvector for index `i` (column of the orthonormal basis).
    pub fn eigenvector(&self, i: usize) -> ArrayView1<'_, R> {
        self.vectors.column(i)
    }

    pub fn vectors(&self) -> &Array2<R> {
        &self.vectors
    }

    /// Materializes the idempotent factor `B_i = ν_i ν_iᵀ`.
    pub fn idempotent(&self, i: usize) -> Array2<R> {
        self.scaled_outer(R::one(), i)
    }

    /// Materializes `λ_i B_i`.
    pub fn weighted_idempotent(&self, i: usize) -> Array2<R> {
        self.scaled_outer(self.lambdas[i], i)
    }

    fn scaled_outer(&self, scale: R, i: usize) -> Array2<R> {
        let n = self.order();
        let v = self.vectors.column(i);
        let mut out = Array2::zeros((n, n));
        for a in 0..n {
            for b in 0..n {
                out[(a, b)] = scale * v[a] * v[b];
            }
        }
        out
    }

    /// `Σ λ_i B_i`, which must reproduce the decomposed matrix.
    pub fn reconstruct(&self) -> Array2<R> {
        let mut scaled = self.vectors.clone();
        for (j, &l) in self.lambdas.iter().enumerate() {
            scaled.column_mut(j).mapv_inplace(|x| x * l);
        }
        scaled.dot(&self.vectors.t())
    }

    /// `Σ B_i`, which must reproduce the identity.
    pub fn sum_of_idempotents(&self) -> Array2<R> {
        self.vectors.dot(&self.vectors.t())
    }
}

/// Decomposes a symmetric matrix into eigenvalues and idempotent factors and
/// verifies the reconstruction within `tolerance` (max norm).
pub fn spectral_decompose_matrix<R: Real>(
    b: &ArrayView2<'_, R>,
    tolerance: R,
) -> Result<SpectralDecomposition<R>> {
    let n = b.nrows();
    if n != b.ncols() {
        return Err(Error::InvalidInput(format!(
            "spectral decomposition needs a square matrix, got {}×{}",
            n,
            b.ncols()
        )));
    }
    for a in 0..n {
        for c in a + 1..n {
            if (b[(a, c)] - b[(c, a)]).abs() > tolerance {
                return Err(Error::InvalidInput(
                    "spectral decomposition needs a symmetric matrix".into(),
                ));
            }
        }
    }
    let (lambdas, vectors) = symmetric_eigen(b)?;
    let decomp = SpectralDecomposition { lambdas, vectors };
    let err = max_abs_diff(&decomp.reconstruct().view(), b);
    if err > tolerance {
        return Err(Error::EigenNonConvergence { index: 0 });
    }
    Ok(decomp)
}

/// Decomposes the augmented adjacency matrix of a bipartite graph.
pub fn spectral_decompose<R: Real>(
    b: &AugmentedMatrix<R>,
    tolerance: R,
) -> Result<SpectralDecomposition<R>> {
    spectral_decompose_matrix(&b.matrix().view(), tolerance)
}

/// Entrywise max-abs difference between two matrices of equal shape.
pub fn max_abs_diff<R: Real>(a: &ArrayView2<'_, R>, b: &ArrayView2<'_, R>) -> R {
    debug_assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (*x - *y).abs())
        .fold(R::zero(), R::max)
}
