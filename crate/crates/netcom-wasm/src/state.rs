//! Demo logic kept free of the wasm boundary so it compiles and tests on
//! any target. The wasm layer in `lib.rs` only forwards JSON strings.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use netcom_core::{
    auto_lambda, detect_communities, distance, embed_all, quality_report, select_k, synth, Backend,
    CoreError, EmbedConfig, Graph, LshIndex, LshParams, MTree, ThresholdRule,
};

pub struct DemoState {
    graph: Graph,
    truth: Vec<u32>,
}

#[derive(Serialize)]
struct GraphView {
    n: u32,
    m: usize,
    mean_degree: f64,
    auto_lambda: f64,
    nodes: Vec<NodeView>,
    edges: Vec<(u32, u32)>,
}

#[derive(Serialize)]
struct NodeView {
    x: f32,
    y: f32,
    degree: usize,
    block: u32,
}

#[derive(Serialize)]
struct DetectView {
    assignment: Vec<u32>,
    centers: Vec<u32>,
    k: usize,
    lambda: f64,
    backend: String,
    iterations: u32,
    cost: f64,
    cost_trace: Vec<f64>,
    distance_evaluations: u64,
    modularity: f64,
    conductance_mean: Option<f64>,
    conductance_min: Option<f64>,
    conductance_max: Option<f64>,
    truth_agreement: f64,
}

#[derive(Serialize)]
struct NnView {
    query: u32,
    lambda: f64,
    exact: NnRow,
    mtree: NnRow,
    lsh: NnRow,
    n: usize,
}

#[derive(Serialize)]
struct NnRow {
    id: u32,
    distance: f64,
    distance_evaluations: u64,
    note: String,
}

impl DemoState {
    /// Build a preset graph plus a deterministic layout. Returns the state
    /// and a JSON description for drawing.
    pub fn generate(
        preset: &str,
        n: u32,
        blocks: u32,
        p_in: f64,
        p_out: f64,
        seed: u64,
    ) -> Result<(DemoState, String), CoreError> {
        let (graph, truth) = match preset {
            "planted" => {
                check((2..=4000).contains(&n), "n must be in 2..=4000")?;
                check(
                    (1..=n.min(64)).contains(&blocks),
                    "blocks must be in 1..=min(n,64)",
                )?;
                check((0.0..=1.0).contains(&p_in), "p_in must be a probability")?;
                check((0.0..=1.0).contains(&p_out), "p_out must be a probability")?;
                synth::planted_partition(n, blocks, p_in, p_out, seed)
            }
            "hubs" => {
                check((64..=4000).contains(&n), "n must be in 64..=4000")?;
                check((1..=64).contains(&blocks), "blocks must be in 1..=64")?;
                let universe = (n / 8).clamp(16, 96);
                let pool = (universe / 2).max(8);
                let links = (pool / 2).max(4);
                synth::hub_clusters(n, blocks, universe, pool, links, pool.min(links + 4), seed)
            }
            "barbell" => (synth::barbell(), vec![0, 0, 0, 1, 1, 1]),
            other => {
                return Err(CoreError::InvalidParameter(format!(
                    "unknown preset {other:?}"
                )))
            }
        };
        let positions = layout(&graph, &truth, seed);
        let view = GraphView {
            n: graph.node_count(),
            m: graph.edge_count(),
            mean_degree: graph.mean_degree(),
            auto_lambda: auto_lambda(&graph),
            nodes: (0..graph.node_count())
                .map(|u| NodeView {
                    x: positions[u as usize].0,
                    y: positions[u as usize].1,
                    degree: graph.degree(u).unwrap(),
                    block: truth[u as usize],
                })
                .collect(),
            edges: graph.edges().collect(),
        };
        let json = serde_json::to_string(&view).expect("view serializes");
        Ok((DemoState { graph, truth }, json))
    }

    /// Run detection and report the partition plus quality numbers as JSON.
    pub fn detect(
        &self,
        lambda_spec: &str,
        k_spec: &str,
        backend_name: &str,
        lsh_bits: u32,
        lsh_tables: u32,
        seed: u64,
    ) -> Result<String, CoreError> {
        let lambda = self.resolve_lambda(lambda_spec)?;
        let cfg = EmbedConfig::with_lambda(lambda);
        let rows = embed_all(&self.graph, &cfg)?;
        let n = rows.len();
        let k = match k_spec {
            "auto" => select_k(&rows, &cfg, n.min(64), seed)?,
            text => {
                let k: usize = text.parse().map_err(|_| {
                    CoreError::InvalidParameter(format!(
                        "k must be an integer or auto, got {text:?}"
                    ))
                })?;
                check(k >= 1 && k <= n, "k out of range")?;
                k
            }
        };
        let backend = match backend_name {
            "exact" => Backend::Exact,
            "mtree" => Backend::MTree { leaf_capacity: 16 },
            "lsh" => Backend::Lsh {
                bits: lsh_bits.clamp(1, 16),
                tables: lsh_tables.clamp(1, 16),
            },
            other => {
                return Err(CoreError::InvalidParameter(format!(
                    "unknown backend {other:?}"
                )))
            }
        };
        let detection = detect_communities(&rows, &cfg, k, backend, seed, 100)?;
        let report = quality_report(&self.graph, &detection.partition, 0, backend.label())?;
        let agreement = pair_agreement(&detection.partition.assignment, &self.truth);
        let view = DetectView {
            assignment: detection.partition.assignment.clone(),
            centers: detection.partition.centers.clone(),
            k,
            lambda,
            backend: backend.label().to_string(),
            iterations: detection.partition.iterations,
            cost: detection.partition.cost,
            cost_trace: detection.cost_trace.clone(),
            distance_evaluations: detection.distance_evaluations,
            modularity: report.modularity,
            conductance_mean: report.conductance_summary.map(|s| s.mean),
            conductance_min: report.conductance_summary.map(|s| s.min),
            conductance_max: report.conductance_summary.map(|s| s.max),
            truth_agreement: agreement,
        };
        Ok(serde_json::to_string(&view).expect("view serializes"))
    }

    /// One leave-one-out NN query through all three backends, with their
    /// metric-evaluation counters side by side.
    pub fn nn_compare(&self, node: u32, lambda_spec: &str) -> Result<String, CoreError> {
        let lambda = self.resolve_lambda(lambda_spec)?;
        let cfg = EmbedConfig::with_lambda(lambda);
        let rows = embed_all(&self.graph, &cfg)?;
        let n = rows.len();
        check(n >= 2, "need at least two nodes")?;
        check((node as usize) < n, "node out of range")?;
        let q = &rows[node as usize];

        let mut exact = NnRow {
            id: u32::MAX,
            distance: f64::INFINITY,
            distance_evaluations: 0,
            note: "linear scan".into(),
        };
        for (v, row) in rows.iter().enumerate() {
            if v as u32 == node {
                continue;
            }
            let d = distance(q, row, &cfg)?;
            exact.distance_evaluations += 1;
            if d < exact.distance || (d == exact.distance && (v as u32) < exact.id) {
                exact.id = v as u32;
                exact.distance = d;
            }
        }

        let tree = MTree::build(rows.clone(), cfg.clone(), 16)?;
        let (tid, td, stats) = tree.nn_query_excluding(q, Some(node))?;
        let mtree = NnRow {
            id: tid,
            distance: td,
            distance_evaluations: stats.distance_evaluations,
            note: format!("covering-radius pruning, depth {}", tree.depth()),
        };

        let index = LshIndex::build(
            rows.clone(),
            cfg.clone(),
            LshParams {
                bits: 8,
                tables: 4,
                threshold_rule: ThresholdRule::Median,
                seed: 7,
            },
        )?;
        let res = index.ann_query_excluding(q, Some(node))?;
        let lsh = NnRow {
            id: res.id,
            distance: res.distance,
            distance_evaluations: res.distance_evaluations,
            note: if res.used_fallback {
                "empty bucket union, fell back to full scan".into()
            } else {
                format!("{} bucket candidates rescored", res.candidates_scanned)
            },
        };

        let view = NnView {
            query: node,
            lambda,
            exact,
            mtree,
            lsh,
            n,
        };
        Ok(serde_json::to_string(&view).expect("view serializes"))
    }

    fn resolve_lambda(&self, spec: &str) -> Result<f64, CoreError> {
        match spec {
            "auto" => Ok(auto_lambda(&self.graph)),
            text => {
                let l: f64 = text.parse().map_err(|_| {
                    CoreError::InvalidParameter(format!(
                        "lambda must be a number or auto, got {text:?}"
                    ))
                })?;
                check(l.is_finite() && l >= 0.0, "lambda must be finite and >= 0")?;
                Ok(l)
            }
        }
    }
}

fn check(ok: bool, msg: &str) -> Result<(), CoreError> {
    if ok {
        Ok(())
    } else {
        Err(CoreError::InvalidParameter(msg.to_string()))
    }
}

/// Rand-index style agreement between a detected assignment and the ground
/// truth, over sampled node pairs (1.0 = identical grouping).
fn pair_agreement(a: &[u32], truth: &[u32]) -> f64 {
    let n = a.len();
    if n < 2 {
        return 1.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let samples = 20_000.min(n * (n - 1) / 2);
    let mut agree = 0usize;
    for _ in 0..samples {
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        if i == j {
            agree += 1;
            continue;
        }
        if (a[i] == a[j]) == (truth[i] == truth[j]) {
            agree += 1;
        }
    }
    agree as f64 / samples as f64
}

/// Deterministic layout: blocks seeded on a ring, then a few dozen rounds of
/// force-directed relaxation.
fn layout(g: &Graph, blocks: &[u32], seed: u64) -> Vec<(f32, f32)> {
    let n = g.node_count() as usize;
    if n == 0 {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x1A11);
    let block_count = blocks.iter().copied().max().unwrap_or(0) as usize + 1;
    let mut pos: Vec<(f32, f32)> = (0..n)
        .map(|u| {
            let b = blocks[u] as f32;
            let angle = b / block_count as f32 * std::f32::consts::TAU;
            let jitter = 0.25f32;
            (
                0.5 + 0.33 * angle.cos() + jitter * (rng.random::<f32>() - 0.5),
                0.5 + 0.33 * angle.sin() + jitter * (rng.random::<f32>() - 0.5),
            )
        })
        .collect();

    let iters = if n <= 600 { 120 } else { 40 };
    let k = (1.0 / n as f32).sqrt() * 0.9;
    let mut disp = vec![(0.0f32, 0.0f32); n];
    for iter in 0..iters {
        let temp = 0.08 * (1.0 - iter as f32 / iters as f32) + 0.002;
        disp.fill((0.0, 0.0));
        for i in 0..n {
            for j in (i + 1)..n {
                let dx = pos[i].0 - pos[j].0;
                let dy = pos[i].1 - pos[j].1;
                let dist2 = (dx * dx + dy * dy).max(1e-6);
                let f = k * k / dist2;
                disp[i].0 += dx * f;
                disp[i].1 += dy * f;
                disp[j].0 -= dx * f;
                disp[j].1 -= dy * f;
            }
        }
        for (u, v) in g.edges() {
            let (u, v) = (u as usize, v as usize);
            let dx = pos[u].0 - pos[v].0;
            let dy = pos[u].1 - pos[v].1;
            let dist = (dx * dx + dy * dy).sqrt().max(1e-3);
            let f = dist / k * 0.05;
            disp[u].0 -= dx * f;
            disp[u].1 -= dy * f;
            disp[v].0 += dx * f;
            disp[v].1 += dy * f;
        }
        for i in 0..n {
            let (dx, dy) = disp[i];
            let len = (dx * dx + dy * dy).sqrt().max(1e-9);
            let step = len.min(temp);
            pos[i].0 = (pos[i].0 + dx / len * step).clamp(0.02, 0.98);
            pos[i].1 = (pos[i].1 + dy / len * step).clamp(0.02, 0.98);
        }
    }
    pos
}
