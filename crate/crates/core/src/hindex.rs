//! The H-index operator and its synchronous iteration to the fixed point,
//! plus the k-core peeling routine used as an independent cross-check on the
//! converged values.
//!
//! The operator generalizes to nonnegative reals as `max_r min(r, x_(r))`
//! over the descending-sorted inputs, which coincides with the classical
//! H-index on integers. In weighted mode a node's zero-order value is its
//! row sum of absolute weights and its neighbors are the indices carrying
//! nonzero weight.

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::BipartiteGraph;
use crate::scalar::{real, real_from_usize, Real};

/// Hard stop for the synchronous iteration. Integer input converges within
/// O(node count) steps (long paths need about half their length), so the cap
/// scales with the network; real-valued input draws from a finite value set
/// and either converges within a handful of steps or oscillates forever, in
/// which case the cap surfaces an error.
fn step_cap(nodes: usize) -> usize {
    10_000.max(4 * nodes)
}

/// Greatest `h` such that at least `h` of the inputs are ≥ `h`, extended to
/// reals as `max_r min(r, x_(r))`. Empty input yields 0.
pub fn h_operator<R: Real>(values: &[R]) -> Result<R> {
    for &v in values {
        if !v.is_finite() || v < R::zero() {
            return Err(Error::BadValue(format!("h_operator input {v}")));
        }
    }
    let mut buf = values.to_vec();
    Ok(h_value(&mut buf))
}

/// Core kernel: sorts the buffer descending and scans for the crossover.
fn h_value<R: Real>(buf: &mut [R]) -> R {
    buf.sort_unstable_by(|a, b| b.partial_cmp(a).expect("finite h-operator input"));
    let mut best = R::zero();
    for (idx, &x) in buf.iter().enumerate() {
        let rank = real_from_usize(idx + 1);
        let cand = if x < rank { x } else { rank };
        if cand > best {
            best = cand;
        }
        // Ranks only grow; once the sorted value drops to `best` no later
        // term can beat it.
        if x <= best {
            break;
        }
    }
    best
}

/// Node-value table of the synchronous H-index iteration: one row per node,
/// one column per step, column 0 holding the zero-order values.
#[derive(Debug, Clone)]
pub struct HIndexTable<R> {
    values: Array2<R>,
}

impl<R: Real> HIndexTable<R> {
    pub fn node_count(&self) -> usize {
        self.values.nrows()
    }

    /// Global width `s`: iterations performed + 1.
    pub fn steps(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &Array2<R> {
        &self.values
    }

    pub fn row(&self, node: usize) -> ndarray::ArrayView1<'_, R> {
        self.values.row(node)
    }

    /// Converged values; equals coreness on unweighted input.
    pub fn last_column(&self) -> Vec<R> {
        let s = self.steps();
        (0..self.node_count())
            .map(|i| self.values[(i, s - 1)])
            .collect()
    }

    /// True when every row is monotonically non-increasing left to right.
    pub fn is_monotone_nonincreasing(&self) -> bool {
        (0..self.node_count()).all(|i| {
            self.row(i)
                .iter()
                .zip(self.row(i).iter().skip(1))
                .all(|(a, b)| b <= a)
        })
    }
}

/// Neighbor access abstraction shared by the unweighted and weighted modes.
trait HIndexInput<R: Real>: Sync {
    fn len(&self) -> usize;
    fn zero_order(&self, node: usize) -> R;
    fn gather(&self, node: usize, current: &[R], buf: &mut Vec<R>);
}

struct UnifiedGraphInput<'a> {
    graph: &'a BipartiteGraph,
}

impl<R: Real> HIndexInput<R> for UnifiedGraphInput<'_> {
    fn len(&self) -> usize {
        self.graph.node_count()
    }

    fn zero_order(&self, node: usize) -> R {
        let m = self.graph.user_count();
        let deg = if node < m {
            self.graph.user_degrees()[node]
        } else {
            self.graph.item_degrees()[node - m]
        };
        real(deg as f64)
    }

    fn gather(&self, node: usize, current: &[R], buf: &mut Vec<R>) {
        let m = self.graph.user_count();
        if node < m {
            for &i in self.graph.items_of(node) {
                buf.push(current[m + i as usize]);
            }
        } else {
            for &u in self.graph.users_of(node - m) {
                buf.push(current[u as usize]);
            }
        }
    }
}

struct DenseMatrixInput<'a, R> {
    w: ArrayView2<'a, R>,
}

impl<R: Real> HIndexInput<R> for DenseMatrixInput<'_, R> {
    fn len(&self) -> usize {
        self.w.nrows()
    }

    fn zero_order(&self, node: usize) -> R {
        self.w.row(node).iter().map(|v| v.abs()).sum()
    }

    fn gather(&self, node: usize, current: &[R], buf: &mut Vec<R>) {
        for (k, &v) in self.w.row(node).iter().enumerate() {
            if v != R::zero() {
                buf.push(current[k]);
            }
        }
    }
}

/// Rank-one view `scale · v vᵀ` that never materializes the matrix. Entry
/// arithmetic matches the dense path exactly so both routes agree bit for
/// bit.
pub(crate) struct ScaledOuterInput<'a, R> {
    pub scale: R,
    pub vector: &'a [R],
}

impl<R: Real> HIndexInput<R> for ScaledOuterInput<'_, R> {
    fn len(&self) -> usize {
        self.vector.len()
    }

    fn zero_order(&self, node: usize) -> R {
        let va = self.vector[node];
        let mut acc = R::zero();
        for &vb in self.vector {
            acc += (self.scale * va * vb).abs();
        }
        acc
    }

    fn gather(&self, node: usize, current: &[R], buf: &mut Vec<R>) {
        let va = self.vector[node];
        if self.scale * va == R::zero() {
            return;
        }
        for (k, &vb) in self.vector.iter().enumerate() {
            if self.scale * va * vb != R::zero() {
                buf.push(current[k]);
            }
        }
    }
}

fn iterate<R: Real, I: HIndexInput<R>>(input: &I, tol: R) -> Result<HIndexTable<R>> {
    let n = input.len();
    let max_steps = step_cap(n);
    let mut columns: Vec<Vec<R>> = Vec::with_capacity(8);
    columns.push((0..n).map(|i| input.zero_order(i)).collect());
    loop {
        let cur = columns.last().expect("at least the zero-order column");
        let next: Vec<R> = (0..n)
            .into_par_iter()
            .map_init(Vec::new, |buf, i| {
                buf.clear();
                input.gather(i, cur, buf);
                h_value(buf)
            })
            .collect();
        let drift = cur
            .iter()
            .zip(&next)
            .map(|(a, b)| (*a - *b).abs())
            .fold(R::zero(), R::max);
        columns.push(next);
        if drift <= tol {
            break;
        }
        if columns.len() > max_steps {
            return Err(Error::InvalidInput(
                "H-index iteration exceeded the step limit without converging".into(),
            ));
        }
    }
    let s = columns.len();
    let mut values = Array2::zeros((n, s));
    for (t, col) in columns.into_iter().enumerate() {
        for (i, v) in col.into_iter().enumerate() {
            values[(i, t)] = v;
        }
    }
    Ok(HIndexTable { values })
}

/// Iterates the operator over the bipartite graph treated as one network of
/// `m + n` nodes (users first). Integer values converge exactly.
pub fn h_index_sequences<R: Real>(graph: &BipartiteGraph) -> HIndexTable<R> {
    iterate(&UnifiedGraphInput { graph }, R::zero())
        .expect("integer H-index iteration always converges")
}

/// Weighted-mode iteration on `|W|` for a square real matrix: neighbors are
/// the nonzero-weight indices, zero-order values the absolute row sums.
pub fn weighted_h_index_sequences<R: Real>(w: &ArrayView2<'_, R>) -> Result<HIndexTable<R>> {
    if w.nrows() != w.ncols() {
        return Err(Error::InvalidInput(format!(
            "weighted H-index input must be square, got {}×{}",
            w.nrows(),
            w.ncols()
        )));
    }
    if let Some(bad) = w.iter().find(|v| !v.is_finite()) {
        return Err(Error::BadValue(format!("matrix entry {bad}")));
    }
    let abs = w.mapv(|v| v.abs());
    iterate(&DenseMatrixInput { w: abs.view() }, real(1e-12))
}

pub(crate) fn scaled_outer_h_index_sequences<R: Real>(
    scale: R,
    vector: &[R],
) -> Result<HIndexTable<R>> {
    iterate(&ScaledOuterInput { scale, vector }, real(1e-12))
}

/// K-core numbers of the bipartite graph's `m + n` nodes by iterative
/// pruning (bucket peeling). Kept free of any H-index code so it can serve
/// as an independent oracle for the converged table.
pub fn coreness(graph: &BipartiteGraph) -> Vec<u32> {
    let m = graph.user_count();
    let total = graph.node_count();
    let mut degree: Vec<usize> = (0..total)
        .map(|v| {
            if v < m {
                graph.user_degrees()[v] as usize
            } else {
                graph.item_degrees()[v - m] as usize
            }
        })
        .collect();
    let max_degree = degree.iter().copied().max().unwrap_or(0);

    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); max_degree + 1];
    for (v, &d) in degree.iter().enumerate() {
        buckets[d].push(v);
    }
    let mut core = vec![0u32; total];
    let mut removed = vec![false; total];
    let mut level = 0usize;
    let mut processed = 0usize;
    // Lazy deletion: nodes are re-pushed at each new degree and entries that
    // no longer match the node's current degree are skipped. Decrements are
    // clamped at the peel level, so the level cursor never moves backwards.
    while processed < total {
        while level <= max_degree && buckets[level].is_empty() {
            level += 1;
        }
        let v = buckets[level]
            .pop()
            .expect("live nodes keep a bucket entry");
        if removed[v] || degree[v] != level {
            continue;
        }
        removed[v] = true;
        processed += 1;
        core[v] = level as u32;
        let neighbors: Vec<usize> = if v < m {
            graph.items_of(v).iter().map(|&i| m + i as usize).collect()
        } else {
            graph.users_of(v - m).iter().map(|&u| u as usize).collect()
        };
        for w in neighbors {
            if !removed[w] && degree[w] > level {
                degree[w] -= 1;
                buckets[degree[w]].push(w);
            }
        }
    }
    core
}
