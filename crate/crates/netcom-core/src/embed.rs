//! Node coordinates and the structure-preserving distance between them.
//!
//! A node's coordinates are its row of the matrix `D(lambda) + A`: the value
//! `lambda` on the diagonal and 1 in each neighbor column. The distance
//! between two nodes is `phi(sigma(row_a, row_b))`. With cosine similarity
//! and `phi = arccos` this is the angular distance between nonnegative
//! vectors, a genuine (pseudo)metric: nodes with identical closed
//! neighborhoods and equal diagonal weight sit at distance exactly zero.

use std::sync::Arc;

use crate::error::{CoreError, Result};
use crate::graph::Graph;

/// Diagonal weight placed at a node's own column.
#[derive(Debug, Clone, PartialEq)]
pub enum LambdaMode {
    /// One fixed weight for every node.
    Constant(f64),
    /// A per-node weight, indexed by dense node id.
    PerNode(Arc<Vec<f64>>),
}

impl LambdaMode {
    /// Per-node mode with the graph's mean degree as a flat surrogate, for
    /// callers that request per-node weights without supplying their own.
    pub fn per_node_mean_degree(g: &Graph) -> LambdaMode {
        LambdaMode::PerNode(Arc::new(vec![g.mean_degree(); g.node_count() as usize]))
    }

    pub fn value(&self, u: u32) -> f64 {
        match self {
            LambdaMode::Constant(l) => *l,
            LambdaMode::PerNode(v) => v[u as usize],
        }
    }
}

/// Similarity between two rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sigma {
    Cosine,
    Pearson,
    Spearman,
}

/// Map from similarity to distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phi {
    /// Angular distance, in radians.
    Arccos,
    /// `1 - sigma`.
    Complement,
}

/// How rows are built and compared.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbedConfig {
    pub lambda: LambdaMode,
    pub sigma: Sigma,
    pub phi: Phi,
}

impl Default for EmbedConfig {
    fn default() -> Self {
        EmbedConfig {
            lambda: LambdaMode::Constant(1.0),
            sigma: Sigma::Cosine,
            phi: Phi::Arccos,
        }
    }
}

impl EmbedConfig {
    pub fn with_lambda(lambda: f64) -> Self {
        EmbedConfig {
            lambda: LambdaMode::Constant(lambda),
            ..Default::default()
        }
    }

    /// True only for the (cosine, arccos) combination, the one for which the
    /// triangle inequality is asserted. Index structures accept the other
    /// combinations but exactness of pruning is only guaranteed here.
    pub fn metric_guaranteed(&self) -> bool {
        matches!((self.sigma, self.phi), (Sigma::Cosine, Phi::Arccos))
    }

    /// Check that every diagonal weight is finite and nonnegative and that a
    /// per-node table covers all `node_count` nodes.
    pub fn validate(&self, node_count: u32) -> Result<()> {
        match &self.lambda {
            LambdaMode::Constant(l) => {
                if !l.is_finite() || *l < 0.0 {
                    return Err(CoreError::InvalidParameter(format!(
                        "lambda must be finite and >= 0, got {l}"
                    )));
                }
            }
            LambdaMode::PerNode(v) => {
                if v.len() != node_count as usize {
                    return Err(CoreError::InvalidParameter(format!(
                        "per-node lambda table has {} entries for {} nodes",
                        v.len(),
                        node_count
                    )));
                }
                if let Some(bad) = v.iter().find(|l| !l.is_finite() || **l < 0.0) {
                    return Err(CoreError::InvalidParameter(format!(
                        "per-node lambda must be finite and >= 0, got {bad}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Sparse row of `D(lambda) + A` for one node, or any sparse point living in
/// the same space. Entries are sorted by column and the Euclidean norm is
/// cached at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeVector {
    owner: u32,
    dim: u32,
    entries: Vec<(u32, f64)>,
    norm: f64,
}

impl NodeVector {
    /// Build a vector from raw `(column, value)` entries. Columns must be
    /// unique; they are sorted here.
    pub fn from_entries(owner: u32, dim: u32, mut entries: Vec<(u32, f64)>) -> NodeVector {
        entries.sort_unstable_by_key(|&(c, _)| c);
        debug_assert!(
            entries.windows(2).all(|w| w[0].0 < w[1].0),
            "duplicate columns"
        );
        let norm = entries.iter().map(|&(_, v)| v * v).sum::<f64>().sqrt();
        NodeVector {
            owner,
            dim,
            entries,
            norm,
        }
    }

    pub fn owner(&self) -> u32 {
        self.owner
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    /// Value at `col`, zero if absent.
    pub fn value(&self, col: u32) -> f64 {
        match self.entries.binary_search_by_key(&col, |&(c, _)| c) {
            Ok(i) => self.entries[i].1,
            Err(_) => 0.0,
        }
    }

    fn sum(&self) -> f64 {
        self.entries.iter().map(|&(_, v)| v).sum()
    }

    fn sum_squares(&self) -> f64 {
        self.entries.iter().map(|&(_, v)| v * v).sum()
    }
}

fn sparse_dot(a: &NodeVector, b: &NodeVector) -> f64 {
    let (xs, ys) = (&a.entries, &b.entries);
    let (mut i, mut j) = (0, 0);
    let mut dot = 0.0;
    while i < xs.len() && j < ys.len() {
        match xs[i].0.cmp(&ys[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                dot += xs[i].1 * ys[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    dot
}

/// Sparse row of `D(lambda) + A` for node `u`: `lambda` at column `u`, 1 at
/// each neighbor column.
pub fn lx_row(g: &Graph, cfg: &EmbedConfig, u: u32) -> Result<NodeVector> {
    let neighbors = g.neighbors(u)?;
    let lam = cfg.lambda.value(u);
    let mut entries = Vec::with_capacity(neighbors.len() + 1);
    let mut placed = false;
    for &v in neighbors {
        if !placed && u < v {
            entries.push((u, lam));
            placed = true;
        }
        entries.push((v, 1.0));
    }
    if !placed {
        // owner column is larger than every neighbor column
        entries.push((u, lam));
    }
    let norm = entries.iter().map(|&(_, v)| v * v).sum::<f64>().sqrt();
    Ok(NodeVector {
        owner: u,
        dim: g.node_count(),
        entries,
        norm,
    })
}

/// Rows for every node of the graph.
pub fn embed_all(g: &Graph, cfg: &EmbedConfig) -> Result<Vec<NodeVector>> {
    cfg.validate(g.node_count())?;
    (0..g.node_count()).map(|u| lx_row(g, cfg, u)).collect()
}

/// Density heuristic for an unspecified diagonal weight: 2 emphasizes the
/// direct edge on sparse graphs (mean degree < 4), 1 balances edge and
/// common neighbor on moderate ones (up to 50), 0 mutes the edge on dense
/// ones.
pub fn auto_lambda(g: &Graph) -> f64 {
    let mean = g.mean_degree();
    if mean < 4.0 {
        2.0
    } else if mean <= 50.0 {
        1.0
    } else {
        0.0
    }
}

/// Similarity in `[-1, 1]` under the named coefficient.
///
/// Identical entry lists short-circuit to exactly 1 so that equal rows sit at
/// distance exactly zero under any `phi`.
pub fn similarity(a: &NodeVector, b: &NodeVector, sigma: Sigma) -> Result<f64> {
    if a.dim != b.dim {
        return Err(CoreError::InvalidParameter(format!(
            "dimension mismatch: {} vs {}",
            a.dim, b.dim
        )));
    }
    match sigma {
        Sigma::Cosine => {
            if a.norm == 0.0 || b.norm == 0.0 {
                return Err(CoreError::UndefinedSimilarity(
                    "zero-norm vector under cosine".into(),
                ));
            }
            if a.entries == b.entries {
                return Ok(1.0);
            }
            Ok((sparse_dot(a, b) / (a.norm * b.norm)).clamp(-1.0, 1.0))
        }
        Sigma::Pearson => {
            let n = a.dim as f64;
            let (sa, sb) = (a.sum(), b.sum());
            let va = a.sum_squares() - sa * sa / n;
            let vb = b.sum_squares() - sb * sb / n;
            if va <= 0.0 || vb <= 0.0 {
                return Err(CoreError::UndefinedSimilarity(
                    "constant vector under pearson".into(),
                ));
            }
            if a.entries == b.entries {
                return Ok(1.0);
            }
            let cov = sparse_dot(a, b) - sa * sb / n;
            Ok((cov / (va.sqrt() * vb.sqrt())).clamp(-1.0, 1.0))
        }
        Sigma::Spearman => spearman(a, b),
    }
}

/// Spearman rank correlation over the union of the two supports.
///
/// Full n-length rank vectors would be wasteful for sparse rows, so ranks
/// are taken over the union of the entry columns of both vectors (which
/// always includes both diagonal positions). Ties receive average ranks.
fn spearman(a: &NodeVector, b: &NodeVector) -> Result<f64> {
    let mut cols: Vec<u32> = Vec::with_capacity(a.entries.len() + b.entries.len());
    let (mut i, mut j) = (0, 0);
    while i < a.entries.len() || j < b.entries.len() {
        let ca = a.entries.get(i).map(|e| e.0);
        let cb = b.entries.get(j).map(|e| e.0);
        match (ca, cb) {
            (Some(x), Some(y)) if x == y => {
                cols.push(x);
                i += 1;
                j += 1;
            }
            (Some(x), Some(y)) if x < y => {
                cols.push(x);
                i += 1;
            }
            (Some(_), Some(y)) => {
                cols.push(y);
                j += 1;
            }
            (Some(x), None) => {
                cols.push(x);
                i += 1;
            }
            (None, Some(y)) => {
                cols.push(y);
                j += 1;
            }
            (None, None) => break,
        }
    }
    let va: Vec<f64> = cols.iter().map(|&c| a.value(c)).collect();
    let vb: Vec<f64> = cols.iter().map(|&c| b.value(c)).collect();
    let ra = average_ranks(&va);
    let rb = average_ranks(&vb);
    dense_pearson(&ra, &rb)
        .ok_or_else(|| CoreError::UndefinedSimilarity("constant rank vector under spearman".into()))
}

/// Ranks 1..=m with ties assigned the mean rank of their group.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let m = values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&x, &y| values[x].partial_cmp(&values[y]).unwrap());
    let mut ranks = vec![0.0; m];
    let mut i = 0;
    while i < m {
        let mut j = i;
        while j + 1 < m && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let mean_rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = mean_rank;
        }
        i = j + 1;
    }
    ranks
}

fn dense_pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (a, b) in x.iter().zip(y) {
        cov += (a - mx) * (b - my);
        vx += (a - mx) * (a - mx);
        vy += (b - my) * (b - my);
    }
    if vx <= 0.0 || vy <= 0.0 {
        return None;
    }
    if x == y {
        return Some(1.0);
    }
    Some((cov / (vx.sqrt() * vy.sqrt())).clamp(-1.0, 1.0))
}

/// Distance `phi(sigma(a, b))`. Similarity is clamped to `[-1, 1]` before
/// `phi` to absorb floating-point drift; arccos distances are in radians.
pub fn distance(a: &NodeVector, b: &NodeVector, cfg: &EmbedConfig) -> Result<f64> {
    let sim = similarity(a, b, cfg.sigma)?;
    Ok(match cfg.phi {
        Phi::Arccos => sim.clamp(-1.0, 1.0).acos(),
        Phi::Complement => 1.0 - sim,
    })
}

/// Classic neighborhood-overlap scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    CommonNeighbors,
    Jaccard,
    PreferentialAttachment,
}

/// Common-neighbor count, Jaccard coefficient, or preferential attachment
/// for a node pair. Jaccard of two empty neighborhoods is 0.
pub fn baseline_similarity(g: &Graph, u: u32, v: u32, kind: BaselineKind) -> Result<f64> {
    let nu = g.neighbors(u)?;
    let nv = g.neighbors(v)?;
    let mut common = 0usize;
    let (mut i, mut j) = (0, 0);
    while i < nu.len() && j < nv.len() {
        match nu[i].cmp(&nv[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                common += 1;
                i += 1;
                j += 1;
            }
        }
    }
    Ok(match kind {
        BaselineKind::CommonNeighbors => common as f64,
        BaselineKind::Jaccard => {
            let union = nu.len() + nv.len() - common;
            if union == 0 {
                0.0
            } else {
                common as f64 / union as f64
            }
        }
        BaselineKind::PreferentialAttachment => (nu.len() * nv.len()) as f64,
    })
}
