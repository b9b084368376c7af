//! Bipartite interaction graphs: file parsing, dense-index construction, and
//! the symmetric augmented adjacency matrix.
//!
//! External user/item keys are arbitrary strings; internal indices are dense
//! integers assigned in first-appearance order, which keeps construction
//! deterministic for a given input file.

use std::collections::HashMap;
use std::io::BufRead;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::scalar::{real, Real};

/// One `(user, item, flag)` tuple read from an interaction file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InteractionRecord {
    pub user_key: String,
    pub item_key: String,
    /// 1 for an observed interaction, 0 for an explicit non-interaction.
    /// Zero-flag records are parsed but ignored at graph build.
    pub flag: u8,
}

/// Field-splitting configuration for interaction files.
#[derive(Debug, Clone, Copy, Default)]
pub struct ParseOptions {
    /// Field delimiter; `None` splits on any run of whitespace.
    pub delimiter: Option<char>,
}

/// Parses a line-oriented interaction stream into records.
///
/// Each non-empty, non-`#` line must carry at least `user item`, optionally
/// followed by a binary flag (missing flag defaults to 1). Fields past the
/// third are ignored so files with trailing columns still load.
pub fn parse_interactions<B: BufRead>(
    reader: B,
    opts: &ParseOptions,
) -> Result<Vec<InteractionRecord>> {
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = match opts.delimiter {
            Some(d) => trimmed.split(d).map(str::trim).collect(),
            None => trimmed.split_whitespace().collect(),
        };
        if fields.len() < 2 {
            return Err(Error::MalformedLine {
                line: lineno,
                reason: format!("expected at least 2 fields, got {}", fields.len()),
            });
        }
        if fields[0].is_empty() || fields[1].is_empty() {
            return Err(Error::MalformedLine {
                line: lineno,
                reason: "empty user or item field".into(),
            });
        }
        let flag = match fields.get(2) {
            None => 1,
            Some(&"0") => 0,
            Some(&"1") => 1,
            Some(other) => {
                return Err(Error::MalformedLine {
                    line: lineno,
                    reason: format!("flag must be 0 or 1, got {other:?}"),
                })
            }
        };
        records.push(InteractionRecord {
            user_key: fields[0].to_string(),
            item_key: fields[1].to_string(),
            flag,
        });
    }
    Ok(records)
}

/// Immutable binary user–item adjacency with degree vectors.
///
/// Edges are stored twice: CSR by user (the canonical edge order) and a
/// column view that maps each item's incident edges back to their CSR
/// positions. Edge-aligned value vectors (diffusion weights) index into the
/// CSR order.
#[derive(Debug, Clone)]
pub struct BipartiteGraph {
    m: usize,
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<u32>,
    col_ptr: Vec<usize>,
    col_user: Vec<u32>,
    col_pos: Vec<u32>,
    k_u: Vec<u32>,
    k_i: Vec<u32>,
    user_keys: Vec<String>,
    item_keys: Vec<String>,
}

impl BipartiteGraph {
    /// Builds a graph from parsed records, skipping zero-flag records.
    ///
    /// Keys are mapped to dense indices in first-appearance order among the
    /// effective (flag = 1) records; duplicate pairs collapse to one edge.
    pub fn build(records: &[InteractionRecord]) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::EmptyInput("interaction records"));
        }
        let mut user_ids: HashMap<&str, u32> = HashMap::new();
        let mut item_ids: HashMap<&str, u32> = HashMap::new();
        let mut user_keys = Vec::new();
        let mut item_keys = Vec::new();
        let mut edges = Vec::new();
        for rec in records {
            if rec.flag == 0 {
                continue;
            }
            let u = *user_ids.entry(&rec.user_key).or_insert_with(|| {
                user_keys.push(rec.user_key.clone());
                (user_keys.len() - 1) as u32
            });
            let i = *item_ids.entry(&rec.item_key).or_insert_with(|| {
                item_keys.push(rec.item_key.clone());
                (item_keys.len() - 1) as u32
            });
            edges.push((u, i));
        }
        if edges.is_empty() {
            return Err(Error::EmptyInput("observed interactions"));
        }
        edges.sort_unstable();
        edges.dedup();
        Ok(Self::from_parts(
            user_keys.len(),
            item_keys.len(),
            edges,
            user_keys,
            item_keys,
        ))
    }

    /// Builds a graph from explicit index pairs, generating placeholder keys.
    ///
    /// Intended for tests and synthetic instances; duplicate pairs collapse.
    pub fn from_edges(m: usize, n: usize, edges: &[(u32, u32)]) -> Self {
        let mut edges: Vec<(u32, u32)> = edges.to_vec();
        edges.sort_unstable();
        edges.dedup();
        assert!(
            edges
                .iter()
                .all(|&(u, i)| (u as usize) < m && (i as usize) < n),
            "edge index out of bounds"
        );
        let user_keys = (0..m).map(|u| format!("u{u}")).collect();
        let item_keys = (0..n).map(|i| format!("i{i}")).collect();
        Self::from_parts(m, n, edges, user_keys, item_keys)
    }

    /// Same index space and keys, different edge set. Used by the splitter:
    /// nodes that lose all edges keep their index with degree 0.
    pub fn with_edges(&self, edges: &[(u32, u32)]) -> Self {
        let mut edges: Vec<(u32, u32)> = edges.to_vec();
        edges.sort_unstable();
        edges.dedup();
        Self::from_parts(
            self.m,
            self.n,
            edges,
            self.user_keys.clone(),
            self.item_keys.clone(),
        )
    }

    fn from_parts(
        m: usize,
        n: usize,
        sorted_edges: Vec<(u32, u32)>,
        user_keys: Vec<String>,
        item_keys: Vec<String>,
    ) -> Self {
        let nnz = sorted_edges.len();
        assert!(nnz < u32::MAX as usize, "edge count exceeds u32 range");
        let mut k_u = vec![0u32; m];
        let mut k_i = vec![0u32; n];
        for &(u, i) in &sorted_edges {
            k_u[u as usize] += 1;
            k_i[i as usize] += 1;
        }
        let mut row_ptr = vec![0usize; m + 1];
        for u in 0..m {
            row_ptr[u + 1] = row_ptr[u] + k_u[u] as usize;
        }
        let col_idx: Vec<u32> = sorted_edges.iter().map(|&(_, i)| i).collect();

        let mut col_ptr = vec![0usize; n + 1];
        for i in 0..n {
            col_ptr[i + 1] = col_ptr[i] + k_i[i] as usize;
        }
        let mut col_user = vec![0u32; nnz];
        let mut col_pos = vec![0u32; nnz];
        let mut cursor = col_ptr.clone();
        for (pos, &(u, i)) in sorted_edges.iter().enumerate() {
            let slot = cursor[i as usize];
            col_user[slot] = u;
            col_pos[slot] = pos as u32;
            cursor[i as usize] += 1;
        }
        Self {
            m,
            n,
            row_ptr,
            col_idx,
            col_ptr,
            col_user,
            col_pos,
            k_u,
            k_i,
            user_keys,
            item_keys,
        }
    }

    pub fn user_count(&self) -> usize {
        self.m
    }

    pub fn item_count(&self) -> usize {
        self.n
    }

    /// Total nodes when the two partitions are treated as one network.
    pub fn node_count(&self) -> usize {
        self.m + self.n
    }

    pub fn edge_count(&self) -> usize {
        self.col_idx.len()
    }

    pub fn user_degrees(&self) -> &[u32] {
        &self.k_u
    }

    pub fn item_degrees(&self) -> &[u32] {
        &self.k_i
    }

    /// CSR position range of user `u`'s edges.
    pub fn row_range(&self, u: usize) -> std::ops::Range<usize> {
        self.row_ptr[u]..self.row_ptr[u + 1]
    }

    /// Items interacted with by user `u`, ascending.
    pub fn items_of(&self, u: usize) -> &[u32] {
        &self.col_idx[self.row_range(u)]
    }

    /// Item index of the edge at CSR position `pos`.
    pub fn item_at(&self, pos: usize) -> u32 {
        self.col_idx[pos]
    }

    /// Column-view range of item `i`'s edges.
    pub fn col_range(&self, i: usize) -> std::ops::Range<usize> {
        self.col_ptr[i]..self.col_ptr[i + 1]
    }

    /// Users incident to item `i` (column view), ascending.
    pub fn users_of(&self, i: usize) -> &[u32] {
        &self.col_user[self.col_range(i)]
    }

    /// CSR positions of item `i`'s edges, aligned with [`Self::users_of`].
    pub fn col_positions(&self, i: usize) -> &[u32] {
        &self.col_pos[self.col_range(i)]
    }

    pub fn has_edge(&self, u: usize, i: u32) -> bool {
        self.items_of(u).binary_search(&i).is_ok()
    }

    /// Edges in canonical CSR order: by user, then item.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (0..self.m).flat_map(move |u| self.items_of(u).iter().map(move |&i| (u as u32, i)))
    }

    pub fn user_key(&self, u: usize) -> &str {
        &self.user_keys[u]
    }

    pub fn item_key(&self, i: usize) -> &str {
        &self.item_keys[i]
    }

    /// Dense adjacency, mostly for small instances and tests.
    pub fn to_dense<R: Real>(&self) -> Array2<R> {
        let mut a = Array2::zeros((self.m, self.n));
        for (u, i) in self.edges() {
            a[(u as usize, i as usize)] = R::one();
        }
        a
    }
}

/// Symmetric order-`m+n` matrix with zero diagonal blocks and the bipartite
/// adjacency in the off-diagonal blocks.
#[derive(Debug, Clone)]
pub struct AugmentedMatrix<R> {
    matrix: Array2<R>,
    m: usize,
    n: usize,
}

impl<R: Real> AugmentedMatrix<R> {
    pub fn order(&self) -> usize {
        self.m + self.n
    }

    pub fn user_count(&self) -> usize {
        self.m
    }

    pub fn item_count(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &Array2<R> {
        &self.matrix
    }

    /// The upper-right `m×n` block; recovers the original adjacency exactly.
    pub fn upper_right_block(&self) -> Array2<R> {
        self.matrix
            .slice(ndarray::s![0..self.m, self.m..self.m + self.n])
            .to_owned()
    }
}

/// Embeds the bipartite adjacency in a symmetric matrix of order `m + n`.
pub fn augment<R: Real>(graph: &BipartiteGraph) -> AugmentedMatrix<R> {
    let (m, n) = (graph.user_count(), graph.item_count());
    let mut b = Array2::zeros((m + n, m + n));
    for (u, i) in graph.edges() {
        let (u, i) = (u as usize, i as usize);
        b[(u, m + i)] = real(1.0);
        b[(m + i, u)] = real(1.0);
    }
    AugmentedMatrix { matrix: b, m, n }
}
