//! Seeded generators for synthetic graphs and point clouds.
//!
//! Everything here is deterministic given its seed; the generators back the
//! test fixtures, the benchmark harness, and the browser demo.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::embed::NodeVector;
use crate::graph::Graph;

/// Path graph `0 - 1 - ... - (n-1)`.
pub fn path(n: u32) -> Graph {
    let edges: Vec<(u32, u32)> = (1..n).map(|v| (v - 1, v)).collect();
    Graph::from_edges(n, &edges)
}

/// Complete graph on `n` nodes.
pub fn complete(n: u32) -> Graph {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            edges.push((u, v));
        }
    }
    Graph::from_edges(n, &edges)
}

/// Two triangles `{0,1,2}` and `{3,4,5}` joined by the bridge `2 - 3`.
pub fn barbell() -> Graph {
    Graph::from_edges(6, &[(0, 1), (0, 2), (1, 2), (2, 3), (3, 4), (3, 5), (4, 5)])
}

/// Two disjoint triangles plus one isolated node (node 6).
pub fn two_triangles_plus_isolated() -> Graph {
    Graph::from_edges(7, &[(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5)])
}

/// Planted-partition graph: `blocks` groups of near-equal size, edges inside
/// a group with probability `p_in` and across groups with probability
/// `p_out`. Returns the graph and the ground-truth block of each node.
pub fn planted_partition(
    n: u32,
    blocks: u32,
    p_in: f64,
    p_out: f64,
    seed: u64,
) -> (Graph, Vec<u32>) {
    assert!(blocks >= 1 && blocks <= n);
    let mut membership = Vec::with_capacity(n as usize);
    for u in 0..n {
        membership.push(u % blocks);
    }
    membership.sort_unstable();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    sample_pairs(
        n,
        &mut rng,
        |u, v| {
            if membership[u as usize] == membership[v as usize] {
                p_in
            } else {
                p_out
            }
        },
        &mut edges,
    );
    (Graph::from_edges(n, &edges), membership)
}

/// Erdos-Renyi graph `G(n, p)`.
pub fn erdos_renyi(n: u32, p: f64, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    sample_pairs(n, &mut rng, |_, _| p, &mut edges);
    Graph::from_edges(n, &edges)
}

/// Hub-structured cluster graph. The first `anchor_universe` nodes are hub
/// anchors; every block draws a pool of `pool_per_block` anchors from that
/// shared universe, and each remaining node wires to a random number of
/// anchors (uniform in `links_min..=links_max`) from its block's pool.
///
/// Nodes of one block share most of their neighborhoods, so their rows of
/// `D(lambda)+A` form a tight angular cluster; blocks overlap through the
/// shared anchor universe, which spreads cross-block distances over a
/// continuous band instead of piling them up at the orthogonal maximum.
/// Returns the graph and each node's block (anchors are assigned blocks
/// round-robin; they are hubs shared by construction).
pub fn hub_clusters(
    n: u32,
    blocks: u32,
    anchor_universe: u32,
    pool_per_block: u32,
    links_min: u32,
    links_max: u32,
    seed: u64,
) -> (Graph, Vec<u32>) {
    assert!(blocks >= 1 && anchor_universe < n);
    assert!(pool_per_block >= 1 && pool_per_block <= anchor_universe);
    assert!(links_min >= 1 && links_min <= links_max && links_max <= pool_per_block);

    let regular = n - anchor_universe;
    let mut membership = Vec::with_capacity(n as usize);
    for a in 0..anchor_universe {
        membership.push(a % blocks);
    }
    let mut rest: Vec<u32> = (0..regular).map(|u| u % blocks).collect();
    rest.sort_unstable();
    membership.extend(rest);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pools: Vec<Vec<u32>> = (0..blocks)
        .map(|_| {
            rand::seq::index::sample(&mut rng, anchor_universe as usize, pool_per_block as usize)
                .into_iter()
                .map(|i| i as u32)
                .collect()
        })
        .collect();

    let mut edges = Vec::new();
    for u in anchor_universe..n {
        let pool = &pools[membership[u as usize] as usize];
        let count = rng.random_range(links_min..=links_max) as usize;
        for idx in rand::seq::index::sample(&mut rng, pool.len(), count) {
            edges.push((u, pool[idx]));
        }
    }
    (Graph::from_edges(n, &edges), membership)
}

fn sample_pairs(
    n: u32,
    rng: &mut ChaCha8Rng,
    prob: impl Fn(u32, u32) -> f64,
    edges: &mut Vec<(u32, u32)>,
) {
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.random::<f64>() < prob(u, v) {
                edges.push((u, v));
            }
        }
    }
}

/// Clustered sparse points on the positive orthant: `clusters` Gaussian-like
/// blobs around random positive unit directions in `dim` dimensions, with
/// per-coordinate noise of scale `spread`. Cluster of point `i` is
/// `i % clusters`.
pub fn sphere_clusters(n: u32, clusters: u32, dim: u32, spread: f64, seed: u64) -> Vec<NodeVector> {
    sphere_clusters_with_queries(n, 0, clusters, dim, spread, seed).0
}

/// Like [`sphere_clusters`], but also draws `n_queries` extra points from
/// the same cluster centers, for query workloads that follow the data
/// distribution.
pub fn sphere_clusters_with_queries(
    n: u32,
    n_queries: u32,
    clusters: u32,
    dim: u32,
    spread: f64,
    seed: u64,
) -> (Vec<NodeVector>, Vec<NodeVector>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers: Vec<Vec<f64>> = (0..clusters)
        .map(|_| {
            let mut c: Vec<f64> = (0..dim).map(|_| gaussian(&mut rng).abs()).collect();
            let norm = c.iter().map(|x| x * x).sum::<f64>().sqrt();
            for x in &mut c {
                *x /= norm;
            }
            c
        })
        .collect();
    let mut draw = |i: u32| {
        let center = &centers[(i % clusters) as usize];
        let entries: Vec<(u32, f64)> = center
            .iter()
            .enumerate()
            .map(|(col, &c)| (col as u32, (c + spread * gaussian(&mut rng)).abs()))
            .collect();
        NodeVector::from_entries(i, dim, entries)
    };
    let points = (0..n).map(&mut draw).collect();
    let queries = (0..n_queries).map(draw).collect();
    (points, queries)
}

/// Standard normal deviate via Box-Muller.
fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}
