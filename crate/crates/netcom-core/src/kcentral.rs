//! k-central community detection: iterated nearest-center assignment with
//! medoid recentering, seeded by farthest-first traversal.
//!
//! The cost of a partition is the sum of node-to-center distances. One
//! iteration assigns every node to its nearest center (through the chosen
//! backend), repairs any community that emptied, then recenters each
//! community at its medoid; both steps can only lower the cost, so the cost
//! sequence is non-increasing and the loop stops as soon as it repeats
//! exactly. Ties always resolve downward (smaller community id for
//! assignments, smaller node id for medoids) so runs are deterministic.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::embed::{distance, EmbedConfig, NodeVector};
use crate::error::{CoreError, Result};
use crate::lsh::{LshIndex, LshParams, ThresholdRule};
use crate::mtree::MTree;

/// Below this many centers every backend assigns by linear scan; building an
/// index over a handful of points costs more than it saves.
pub const INDEX_BACKEND_MIN_CENTERS: usize = 33;

/// Largest community recentered by the exact quadratic medoid; larger ones
/// pick the best of a seeded member sample, verified against the incumbent
/// center with full sums so the cost still cannot increase.
pub const EXACT_MEDOID_LIMIT: usize = 4096;

const SELECT_K_DROP_THRESHOLD: f64 = 0.5;

/// Which nearest-neighbor machinery resolves assignments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    Exact,
    MTree { leaf_capacity: usize },
    Lsh { bits: u32, tables: u32 },
}

impl Backend {
    pub fn label(&self) -> &'static str {
        match self {
            Backend::Exact => "exact",
            Backend::MTree { .. } => "mtree",
            Backend::Lsh { .. } => "lsh",
        }
    }
}

/// Assignment of every node to one of k communities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    /// Community id per dense node id.
    pub assignment: Vec<u32>,
    /// Medoid node of each community; always a member of it.
    pub centers: Vec<u32>,
    /// Sum of node-to-center distances.
    pub cost: f64,
    /// Improvement passes taken to produce this partition.
    pub iterations: u32,
}

/// A converged run with its diagnostics.
#[derive(Debug, Clone)]
pub struct Detection {
    pub partition: Partition,
    /// Accepted cost after each pass; non-increasing.
    pub cost_trace: Vec<f64>,
    pub distance_evaluations: u64,
    /// Passes where an LSH assignment raised the cost and was redone exactly.
    pub exact_redo_passes: u32,
}

/// Farthest-first traversal: a seeded random start, then repeatedly the node
/// farthest from all chosen centers.
pub fn farthest_first_init(
    points: &[NodeVector],
    cfg: &EmbedConfig,
    k: usize,
    seed: u64,
) -> Result<Vec<u32>> {
    Ok(farthest_first(points, cfg, k, seed)?.0)
}

/// Traversal that also reports each center's insertion radius (distance to
/// its nearest predecessor at selection time; infinity for the first).
fn farthest_first(
    points: &[NodeVector],
    cfg: &EmbedConfig,
    k: usize,
    seed: u64,
) -> Result<(Vec<u32>, Vec<f64>, u64)> {
    let n = points.len();
    if k < 1 || k > n {
        return Err(CoreError::InvalidParameter(format!(
            "k must be in 1..={n}, got {k}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let first = rng.random_range(0..n) as u32;
    let mut centers = vec![first];
    let mut radii = vec![f64::INFINITY];
    let mut chosen = vec![false; n];
    chosen[first as usize] = true;
    let mut evals = n as u64;
    let mut min_dist: Vec<f64> = points
        .iter()
        .map(|p| distance(p, &points[first as usize], cfg))
        .collect::<Result<_>>()?;
    min_dist[first as usize] = 0.0;

    while centers.len() < k {
        // farthest unchosen node; ties (including all-zero radii among
        // duplicate rows) go to the smallest id
        let mut next: Option<usize> = None;
        for u in 0..n {
            if chosen[u] {
                continue;
            }
            if next.is_none_or(|b| min_dist[u] > min_dist[b]) {
                next = Some(u);
            }
        }
        let next = next.expect("k <= n leaves an unchosen node");
        radii.push(min_dist[next]);
        centers.push(next as u32);
        chosen[next] = true;
        evals += n as u64;
        for u in 0..n {
            let d = distance(&points[u], &points[next], cfg)?;
            if d < min_dist[u] {
                min_dist[u] = d;
            }
        }
    }
    Ok((centers, radii, evals))
}

/// Pick k from the farthest-first insertion radii: the smallest k whose next
/// radius drops below half the current one, else `k_max`.
pub fn select_k(
    points: &[NodeVector],
    cfg: &EmbedConfig,
    k_max: usize,
    seed: u64,
) -> Result<usize> {
    let (_, radii, _) = farthest_first(points, cfg, k_max, seed)?;
    if k_max == 1 {
        return Ok(1);
    }
    if radii[1] == 0.0 {
        // every remaining node coincides with the first center
        return Ok(1);
    }
    for k in 2..k_max {
        let rk = radii[k - 1];
        let rk1 = radii[k];
        if rk > 0.0 && rk1 / rk < SELECT_K_DROP_THRESHOLD {
            return Ok(k);
        }
    }
    Ok(k_max)
}

/// One assignment + repair + recenter pass from the given centers.
pub fn kcentral_iterate(
    points: &[NodeVector],
    cfg: &EmbedConfig,
    centers: &[u32],
    backend: Backend,
    seed: u64,
) -> Result<Partition> {
    Ok(iterate_once(points, cfg, centers, backend, seed, 1)?.0)
}

fn iterate_once(
    points: &[NodeVector],
    cfg: &EmbedConfig,
    centers: &[u32],
    backend: Backend,
    seed: u64,
    iteration: u32,
) -> Result<(Partition, u64)> {
    let n = points.len();
    let k = centers.len();
    if k == 0 || k > n {
        return Err(CoreError::InvalidParameter(format!(
            "need 1..={n} centers, got {k}"
        )));
    }
    let mut sorted = centers.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != k {
        return Err(CoreError::InvalidParameter(
            "centers must be distinct".into(),
        ));
    }
    if let Some(&c) = centers.iter().find(|&&c| c as usize >= n) {
        return Err(CoreError::NodeOutOfRange {
            id: c,
            node_count: n as u32,
        });
    }

    let mut evals = 0u64;
    let (mut assignment, mut dist, assign_evals) =
        assign_nodes(points, cfg, centers, backend, mix_seed(seed, iteration, 0))?;
    evals += assign_evals;

    let mut centers = centers.to_vec();
    repair_empty(&mut assignment, &mut dist, &mut centers);

    let recenter_evals = recenter(points, cfg, &assignment, &mut centers, seed, iteration)?;
    evals += recenter_evals;

    let mut partition = Partition {
        assignment,
        centers,
        cost: 0.0,
        iterations: iteration,
    };
    partition.cost = partition_cost(points, cfg, &partition)?;
    evals += n as u64;
    Ok((partition, evals))
}

/// Sum of node-to-center distances of a partition.
pub fn partition_cost(points: &[NodeVector], cfg: &EmbedConfig, p: &Partition) -> Result<f64> {
    if p.assignment.len() != points.len() {
        return Err(CoreError::InvalidParameter(format!(
            "assignment covers {} nodes, point set has {}",
            p.assignment.len(),
            points.len()
        )));
    }
    let mut cost = 0.0;
    for (u, &c) in p.assignment.iter().enumerate() {
        let center = *p.centers.get(c as usize).ok_or_else(|| {
            CoreError::InvalidParameter(format!("node {u} assigned to unknown community {c}"))
        })?;
        cost += distance(&points[u], &points[center as usize], cfg)?;
    }
    Ok(cost)
}

/// Run k-central to convergence: stop when the cost repeats exactly between
/// consecutive passes, or after `max_iters` passes.
///
/// With the LSH backend an assignment pass may misroute nodes; the cost is
/// always recomputed with true distances, and a pass that raised it is
/// redone with the exact backend, which keeps the recorded trace
/// non-increasing.
pub fn detect_communities(
    points: &[NodeVector],
    cfg: &EmbedConfig,
    k: usize,
    backend: Backend,
    seed: u64,
    max_iters: u32,
) -> Result<Detection> {
    if max_iters < 1 {
        return Err(CoreError::InvalidParameter("max_iters must be >= 1".into()));
    }
    let (mut centers, _, mut evals) = farthest_first(points, cfg, k, seed)?;
    let mut trace: Vec<f64> = Vec::new();
    let mut exact_redos = 0u32;
    let mut last: Option<Partition> = None;

    for t in 1..=max_iters {
        let (mut p, e) = iterate_once(points, cfg, &centers, backend, seed, t)?;
        evals += e;
        let prev_cost = last.as_ref().map(|p| p.cost);
        if let Some(prev) = prev_cost {
            if p.cost > prev && matches!(backend, Backend::Lsh { .. }) {
                let (exact_p, e2) = iterate_once(points, cfg, &centers, Backend::Exact, seed, t)?;
                evals += e2;
                exact_redos += 1;
                p = exact_p;
                p.iterations = t;
            }
        }
        trace.push(p.cost);
        let converged = prev_cost == Some(p.cost);
        centers = p.centers.clone();
        last = Some(p);
        if converged {
            break;
        }
    }

    Ok(Detection {
        partition: last.expect("at least one pass runs"),
        cost_trace: trace,
        distance_evaluations: evals,
        exact_redo_passes: exact_redos,
    })
}

fn mix_seed(seed: u64, iteration: u32, salt: u64) -> u64 {
    let mut z = seed
        .wrapping_add((iteration as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(salt.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Nearest center of every node: `(community, distance)` per node plus the
/// metric evaluations spent. Backends with too few centers fall back to the
/// linear scan.
fn assign_nodes(
    points: &[NodeVector],
    cfg: &EmbedConfig,
    centers: &[u32],
    backend: Backend,
    lsh_seed: u64,
) -> Result<(Vec<u32>, Vec<f64>, u64)> {
    let k = centers.len();
    let effective = if k < INDEX_BACKEND_MIN_CENTERS {
        Backend::Exact
    } else {
        backend
    };

    let per_node: Vec<(u32, f64, u64)> = match effective {
        Backend::Exact => {
            let run = |u: usize| -> Result<(u32, f64, u64)> {
                let mut best_j = 0u32;
                let mut best_d = f64::INFINITY;
                for (j, &c) in centers.iter().enumerate() {
                    let d = distance(&points[u], &points[c as usize], cfg)?;
                    if d < best_d {
                        best_d = d;
                        best_j = j as u32;
                    }
                }
                Ok((best_j, best_d, k as u64))
            };
            map_nodes(points.len(), run)?
        }
        Backend::MTree { leaf_capacity } => {
            let center_points: Vec<NodeVector> = centers
                .iter()
                .map(|&c| points[c as usize].clone())
                .collect();
            let tree = MTree::build(center_points, cfg.clone(), leaf_capacity)?;
            let build = tree.build_evaluations();
            let run = |u: usize| -> Result<(u32, f64, u64)> {
                let (j, d, stats) = tree.nn_query(&points[u])?;
                Ok((j, d, stats.distance_evaluations))
            };
            let mut rows = map_nodes(points.len(), run)?;
            if let Some(first) = rows.first_mut() {
                first.2 += build;
            }
            rows
        }
        Backend::Lsh { bits, tables } => {
            let center_points: Vec<NodeVector> = centers
                .iter()
                .map(|&c| points[c as usize].clone())
                .collect();
            let index = LshIndex::build(
                center_points,
                cfg.clone(),
                LshParams {
                    bits,
                    tables,
                    threshold_rule: ThresholdRule::Median,
                    seed: lsh_seed,
                },
            )?;
            let build = index.build_evaluations();
            let run = |u: usize| -> Result<(u32, f64, u64)> {
                let res = index.ann_query(&points[u])?;
                Ok((res.id, res.distance, res.distance_evaluations))
            };
            let mut rows = map_nodes(points.len(), run)?;
            if let Some(first) = rows.first_mut() {
                first.2 += build;
            }
            rows
        }
    };

    let mut assignment = Vec::with_capacity(points.len());
    let mut dist = Vec::with_capacity(points.len());
    let mut evals = 0u64;
    for (j, d, e) in per_node {
        assignment.push(j);
        dist.push(d);
        evals += e;
    }
    Ok((assignment, dist, evals))
}

#[cfg(feature = "parallel")]
fn map_nodes<F>(n: usize, f: F) -> Result<Vec<(u32, f64, u64)>>
where
    F: Fn(usize) -> Result<(u32, f64, u64)> + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_nodes<F>(n: usize, f: F) -> Result<Vec<(u32, f64, u64)>>
where
    F: Fn(usize) -> Result<(u32, f64, u64)>,
{
    (0..n).map(f).collect()
}

/// Give every empty community a fresh center: the node of the largest donor
/// community farthest from the donor's center, skipping nodes that center a
/// nonempty community. Moving such a node can only lower the cost (its new
/// distance is zero).
fn repair_empty(assignment: &mut [u32], dist: &mut [f64], centers: &mut [u32]) {
    let k = centers.len();
    let mut sizes = vec![0u32; k];
    for &a in assignment.iter() {
        sizes[a as usize] += 1;
    }
    while let Some(empty) = (0..k).find(|&j| sizes[j] == 0) {
        let mut center_of_nonempty = vec![false; assignment.len()];
        for j in 0..k {
            if sizes[j] > 0 {
                center_of_nonempty[centers[j] as usize] = true;
            }
        }
        let mut donors: Vec<usize> = (0..k).filter(|&j| sizes[j] > 0).collect();
        donors.sort_by_key(|&j| (std::cmp::Reverse(sizes[j]), j));
        let mut moved = false;
        for donor in donors {
            let mut best: Option<u32> = None;
            for (u, &a) in assignment.iter().enumerate() {
                if a as usize != donor || center_of_nonempty[u] {
                    continue;
                }
                if best.is_none_or(|b| dist[u] > dist[b as usize]) {
                    best = Some(u as u32);
                }
            }
            if let Some(u) = best {
                sizes[donor] -= 1;
                sizes[empty] += 1;
                assignment[u as usize] = empty as u32;
                centers[empty] = u;
                dist[u as usize] = 0.0;
                moved = true;
                break;
            }
        }
        debug_assert!(moved, "repair always finds a movable node");
        if !moved {
            break;
        }
    }
}

/// Recenter every community at its medoid. Returns evaluations spent.
fn recenter(
    points: &[NodeVector],
    cfg: &EmbedConfig,
    assignment: &[u32],
    centers: &mut [u32],
    seed: u64,
    iteration: u32,
) -> Result<u64> {
    let k = centers.len();
    let mut members: Vec<Vec<u32>> = vec![Vec::new(); k];
    for (u, &a) in assignment.iter().enumerate() {
        members[a as usize].push(u as u32);
    }
    let mut evals = 0u64;
    for j in 0..k {
        let m = &members[j];
        debug_assert!(!m.is_empty(), "communities are nonempty after repair");
        if m.len() <= EXACT_MEDOID_LIMIT {
            let (medoid, _) = best_medoid(points, cfg, m, m)?;
            evals += (m.len() * m.len()) as u64;
            centers[j] = medoid;
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, iteration, j as u64 + 1));
            let sample: Vec<u32> = rand::seq::index::sample(&mut rng, m.len(), EXACT_MEDOID_LIMIT)
                .into_iter()
                .map(|i| m[i])
                .collect();
            let (candidate, _) = best_medoid(points, cfg, &sample, &sample)?;
            evals += (sample.len() * sample.len()) as u64;
            // verify against the incumbent with full sums so cost cannot rise
            let cand_total = sum_dist(points, cfg, candidate, m)?;
            let cur_total = sum_dist(points, cfg, centers[j], m)?;
            evals += 2 * m.len() as u64;
            if cand_total < cur_total || (cand_total == cur_total && candidate < centers[j]) {
                centers[j] = candidate;
            }
        }
    }
    Ok(evals)
}

/// Candidate with the minimum total distance to `members`; ties to the
/// smaller node id.
fn best_medoid(
    points: &[NodeVector],
    cfg: &EmbedConfig,
    candidates: &[u32],
    members: &[u32],
) -> Result<(u32, f64)> {
    let score =
        |&cand: &u32| -> Result<(f64, u32)> { Ok((sum_dist(points, cfg, cand, members)?, cand)) };
    #[cfg(feature = "parallel")]
    let scored: Vec<(f64, u32)> = candidates.par_iter().map(score).collect::<Result<_>>()?;
    #[cfg(not(feature = "parallel"))]
    let scored: Vec<(f64, u32)> = candidates.iter().map(score).collect::<Result<_>>()?;

    let mut best = scored[0];
    for &(total, cand) in &scored[1..] {
        if total < best.0 || (total == best.0 && cand < best.1) {
            best = (total, cand);
        }
    }
    Ok((best.1, best.0))
}

fn sum_dist(points: &[NodeVector], cfg: &EmbedConfig, from: u32, members: &[u32]) -> Result<f64> {
    let mut total = 0.0;
    for &m in members {
        total += distance(&points[from as usize], &points[m as usize], cfg)?;
    }
    Ok(total)
}
