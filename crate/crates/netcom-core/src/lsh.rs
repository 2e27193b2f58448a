//! Approximate nearest-neighbor queries via pivot-threshold hashing.
//!
//! Each hash bit compares the distance to a pivot drawn from the dataset
//! against a threshold (by default the median distance from that pivot to
//! the whole dataset, so every bit splits the data roughly in half). A table
//! concatenates `bits` such comparisons into a key; `tables` independent
//! tables are queried and the union of the matching buckets is rescored
//! exactly. Near points agree on many bits, far points on few, which is the
//! locality-sensitive property the query relies on.
//!
//! Object ids are indices into the point slice the index was built over.

use std::collections::HashMap;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::embed::{distance, EmbedConfig, NodeVector};
use crate::error::{CoreError, Result};

/// How each bit's threshold is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdRule {
    /// Median of the distances from the pivot to every indexed point.
    Median,
    /// One fixed threshold for every bit.
    Fixed(f64),
}

/// Index parameters. `bits * tables` pivots are drawn from the dataset
/// without replacement when the dataset is large enough, with replacement
/// otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LshParams {
    pub bits: u32,
    pub tables: u32,
    pub threshold_rule: ThresholdRule,
    pub seed: u64,
}

impl Default for LshParams {
    fn default() -> Self {
        LshParams {
            bits: 8,
            tables: 4,
            threshold_rule: ThresholdRule::Median,
            seed: 0,
        }
    }
}

/// One pivot-threshold comparison: bit = 1 iff `d(x, pivot) <= threshold`.
#[derive(Debug, Clone, PartialEq)]
struct HashFunction {
    pivot: u32,
    threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
struct Table {
    funcs: Vec<HashFunction>,
    buckets: HashMap<u64, Vec<u32>>,
}

/// Seeded locality-sensitive hash index.
#[derive(Debug, Clone, PartialEq)]
pub struct LshIndex {
    points: Vec<NodeVector>,
    cfg: EmbedConfig,
    params: LshParams,
    tables: Vec<Table>,
    build_evaluations: u64,
}

/// Result of an approximate query. The returned distance is always the
/// exactly recomputed `d(q, id)`, so it can never undercut the true nearest
/// distance. When every bucket of the query is empty the index falls back to
/// a full linear scan, reported via `used_fallback` and
/// `candidates_scanned == len()`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnResult {
    pub id: u32,
    pub distance: f64,
    pub candidates_scanned: usize,
    pub distance_evaluations: u64,
    pub used_fallback: bool,
}

impl LshIndex {
    pub fn build(points: Vec<NodeVector>, cfg: EmbedConfig, params: LshParams) -> Result<LshIndex> {
        if points.is_empty() {
            return Err(CoreError::EmptyIndex(
                "cannot build lsh index over no points".into(),
            ));
        }
        if params.bits == 0 || params.bits > 63 {
            return Err(CoreError::InvalidParameter(format!(
                "bits per table must be in 1..=63, got {}",
                params.bits
            )));
        }
        if params.tables == 0 {
            return Err(CoreError::InvalidParameter(
                "table count must be >= 1".into(),
            ));
        }
        if let ThresholdRule::Fixed(t) = params.threshold_rule {
            if !t.is_finite() || t < 0.0 {
                return Err(CoreError::InvalidParameter(format!(
                    "fixed threshold must be finite and >= 0, got {t}"
                )));
            }
        }

        let n = points.len();
        let want = (params.bits * params.tables) as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let pivots: Vec<u32> = if n >= want {
            rand::seq::index::sample(&mut rng, n, want)
                .into_iter()
                .map(|i| i as u32)
                .collect()
        } else {
            (0..want).map(|_| rng.random_range(0..n) as u32).collect()
        };

        let mut evals = 0u64;
        let mut tables = Vec::with_capacity(params.tables as usize);
        for t in 0..params.tables as usize {
            let slice = &pivots[t * params.bits as usize..(t + 1) * params.bits as usize];
            // pivot -> all-points distance columns; reused for thresholds and keys
            let mut columns: Vec<Vec<f64>> = Vec::with_capacity(slice.len());
            for &pivot in slice {
                evals += n as u64;
                let col = points
                    .iter()
                    .map(|p| distance(p, &points[pivot as usize], &cfg))
                    .collect::<Result<Vec<f64>>>()?;
                columns.push(col);
            }
            let funcs: Vec<HashFunction> = slice
                .iter()
                .zip(&columns)
                .map(|(&pivot, col)| {
                    let threshold = match params.threshold_rule {
                        ThresholdRule::Fixed(t) => t,
                        ThresholdRule::Median => lower_median(col),
                    };
                    HashFunction { pivot, threshold }
                })
                .collect();
            let mut buckets: HashMap<u64, Vec<u32>> = HashMap::new();
            for i in 0..n {
                let mut key = 0u64;
                for (b, (func, col)) in funcs.iter().zip(&columns).enumerate() {
                    if col[i] <= func.threshold {
                        key |= 1 << b;
                    }
                }
                buckets.entry(key).or_default().push(i as u32);
            }
            tables.push(Table { funcs, buckets });
        }

        Ok(LshIndex {
            points,
            cfg,
            params,
            tables,
            build_evaluations: evals,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[NodeVector] {
        &self.points
    }

    pub fn params(&self) -> &LshParams {
        &self.params
    }

    /// Metric evaluations spent during construction.
    pub fn build_evaluations(&self) -> u64 {
        self.build_evaluations
    }

    /// Key of `x` in the given table: bit `i` is 1 iff the distance to that
    /// bit's pivot does not exceed its threshold.
    pub fn hash_key(&self, table: usize, x: &NodeVector) -> Result<u64> {
        let t = self.tables.get(table).ok_or_else(|| {
            CoreError::InvalidParameter(format!(
                "table {table} out of range ({} tables)",
                self.tables.len()
            ))
        })?;
        let mut key = 0u64;
        for (b, func) in t.funcs.iter().enumerate() {
            let d = distance(x, &self.points[func.pivot as usize], &self.cfg)?;
            if d <= func.threshold {
                key |= 1 << b;
            }
        }
        Ok(key)
    }

    /// Approximate nearest neighbor: the exact-distance minimizer over the
    /// union of the query's buckets (ties to the smaller id).
    pub fn ann_query(&self, q: &NodeVector) -> Result<AnnResult> {
        self.ann_query_excluding(q, None)
    }

    /// Like [`ann_query`](Self::ann_query) but never returns `exclude`; used
    /// for leave-one-out workloads where the query is itself an object.
    pub fn ann_query_excluding(&self, q: &NodeVector, exclude: Option<u32>) -> Result<AnnResult> {
        if self.points.len() <= usize::from(exclude.is_some()) {
            return Err(CoreError::EmptyIndex(
                "query on empty lsh index (or every object excluded)".into(),
            ));
        }
        let mut evals = 0u64;
        let mut candidates: Vec<u32> = Vec::new();
        for (t, table) in self.tables.iter().enumerate() {
            evals += self.params.bits as u64;
            let key = self.hash_key(t, q)?;
            if let Some(bucket) = table.buckets.get(&key) {
                candidates.extend_from_slice(bucket);
            }
        }
        candidates.sort_unstable();
        candidates.dedup();
        if let Some(x) = exclude {
            candidates.retain(|&id| id != x);
        }

        let used_fallback = candidates.is_empty();
        if used_fallback {
            candidates = (0..self.points.len() as u32)
                .filter(|&id| Some(id) != exclude)
                .collect();
        }

        let mut best_id = u32::MAX;
        let mut best_d = f64::INFINITY;
        for &id in &candidates {
            let d = distance(q, &self.points[id as usize], &self.cfg)?;
            evals += 1;
            if d < best_d || (d == best_d && id < best_id) {
                best_id = id;
                best_d = d;
            }
        }
        Ok(AnnResult {
            id: best_id,
            distance: best_d,
            candidates_scanned: candidates.len(),
            distance_evaluations: evals,
            used_fallback,
        })
    }
}

/// Lower median: element at index `(n-1)/2` of the sorted values, so the
/// bit `d <= median` selects about half the dataset.
fn lower_median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    sorted[(sorted.len() - 1) / 2]
}
