//! Backend comparison: the same graph, embedding, and seed run once per
//! backend. Each row combines a leave-one-out nearest-neighbor workload over
//! the full point set (where the index choice actually bites) with a
//! community-detection run, and reports wall time, metric-evaluation
//! counters, and quality.

use std::time::Instant;

use anyhow::Result;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use netcom_core::{
    detect_communities, distance, quality_report, Backend, EmbedConfig, LshIndex, LshParams, MTree,
    NodeVector, ThresholdRule,
};

use crate::pipeline::{prepare, write_text, Prepared};
use crate::{BackendArg, CommonArgs, FormatArg, UsageError};

#[derive(Serialize, Clone)]
struct BenchRow {
    backend: &'static str,
    wall_ms: u64,
    nn_queries: usize,
    nn_build_evaluations: u64,
    nn_query_evaluations: u64,
    /// Queries whose bucket union was empty and fell back to a full scan
    /// (always 0 for the exact and m-tree backends).
    nn_fallbacks: u64,
    detect_evaluations: u64,
    total_evaluations: u64,
    modularity: Option<f64>,
    conductance_min: Option<f64>,
    conductance_mean: Option<f64>,
    conductance_max: Option<f64>,
    k: u32,
    iterations: u32,
    error: Option<String>,
}

pub fn run_bench(args: &CommonArgs, backends_flag: &str, queries: usize) -> Result<()> {
    let backends = parse_backends(backends_flag)?;
    let prepared = prepare(args)?;
    let n = prepared.rows.len();

    // one seeded query sample shared by every backend
    let count = queries.min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed ^ 0xBE6C_4A11);
    let mut query_ids: Vec<u32> = rand::seq::index::sample(&mut rng, n, count)
        .into_iter()
        .map(|i| i as u32)
        .collect();
    query_ids.sort_unstable();

    let mut rows = Vec::new();
    let mut any_ok = false;
    for backend in backends {
        match bench_one(&prepared, backend, &query_ids, args) {
            Ok(row) => {
                any_ok = true;
                rows.push(row);
            }
            Err(e) => rows.push(BenchRow {
                backend: backend_label(backend),
                wall_ms: 0,
                nn_queries: query_ids.len(),
                nn_build_evaluations: 0,
                nn_query_evaluations: 0,
                nn_fallbacks: 0,
                detect_evaluations: 0,
                total_evaluations: 0,
                modularity: None,
                conductance_min: None,
                conductance_mean: None,
                conductance_max: None,
                k: prepared.k as u32,
                iterations: 0,
                error: Some(format!("{e:#}")),
            }),
        }
    }

    let text = match args.format {
        FormatArg::Json => serde_json::to_string_pretty(&rows)? + "\n",
        FormatArg::Csv => to_csv(&rows),
    };
    write_text(args.output.as_deref(), &text)?;

    if !any_ok {
        anyhow::bail!("every benchmark row failed");
    }
    Ok(())
}

fn backend_label(b: BackendArg) -> &'static str {
    match b {
        BackendArg::Exact => "exact",
        BackendArg::Mtree => "mtree",
        BackendArg::Lsh => "lsh",
    }
}

fn parse_backends(flag: &str) -> Result<Vec<BackendArg>> {
    let mut out = Vec::new();
    for token in flag.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let backend = match token {
            "exact" => BackendArg::Exact,
            "mtree" => BackendArg::Mtree,
            "lsh" => BackendArg::Lsh,
            other => {
                return Err(UsageError(format!(
                    "unknown backend {other:?}; expected exact, mtree, lsh"
                ))
                .into())
            }
        };
        if !out.contains(&backend) {
            out.push(backend);
        }
    }
    if out.is_empty() {
        return Err(UsageError("--backends needs at least one backend".into()).into());
    }
    Ok(out)
}

fn bench_one(
    prepared: &Prepared,
    backend_arg: BackendArg,
    query_ids: &[u32],
    args: &CommonArgs,
) -> Result<BenchRow> {
    let Prepared {
        graph,
        rows,
        cfg,
        k,
        ..
    } = prepared;
    let backend = match backend_arg {
        BackendArg::Exact => Backend::Exact,
        BackendArg::Mtree => Backend::MTree {
            leaf_capacity: args.leaf_capacity,
        },
        BackendArg::Lsh => Backend::Lsh {
            bits: args.lsh_bits,
            tables: args.lsh_tables,
        },
    };

    let started = Instant::now();
    let (build_evals, query_evals, fallbacks) =
        nn_workload(rows, cfg, backend, query_ids, args.seed)?;
    let detection = detect_communities(rows, cfg, *k, backend, args.seed, args.max_iters)?;
    let wall_ms = started.elapsed().as_millis() as u64;

    let report = quality_report(graph, &detection.partition, wall_ms, backend.label())?;
    Ok(BenchRow {
        backend: backend.label(),
        wall_ms,
        nn_queries: query_ids.len(),
        nn_build_evaluations: build_evals,
        nn_query_evaluations: query_evals,
        nn_fallbacks: fallbacks,
        detect_evaluations: detection.distance_evaluations,
        total_evaluations: build_evals + query_evals + detection.distance_evaluations,
        modularity: Some(report.modularity),
        conductance_min: report.conductance_summary.map(|s| s.min),
        conductance_mean: report.conductance_summary.map(|s| s.mean),
        conductance_max: report.conductance_summary.map(|s| s.max),
        k: *k as u32,
        iterations: detection.partition.iterations,
        error: None,
    })
}

/// Leave-one-out nearest-neighbor pass over the sampled nodes: every query
/// finds its nearest *other* node through the chosen machinery. Returns
/// (build evaluations, query evaluations, fallback count).
fn nn_workload(
    rows: &[NodeVector],
    cfg: &EmbedConfig,
    backend: Backend,
    query_ids: &[u32],
    seed: u64,
) -> Result<(u64, u64, u64)> {
    if rows.len() < 2 || query_ids.is_empty() {
        return Ok((0, 0, 0));
    }
    match backend {
        Backend::Exact => {
            let mut evals = 0u64;
            for &u in query_ids {
                let mut best = (u32::MAX, f64::INFINITY);
                for (v, row) in rows.iter().enumerate() {
                    if v as u32 == u {
                        continue;
                    }
                    let d = distance(&rows[u as usize], row, cfg)?;
                    evals += 1;
                    if d < best.1 || (d == best.1 && (v as u32) < best.0) {
                        best = (v as u32, d);
                    }
                }
            }
            Ok((0, evals, 0))
        }
        Backend::MTree { leaf_capacity } => {
            let tree = MTree::build(rows.to_vec(), cfg.clone(), leaf_capacity)?;
            let mut evals = 0u64;
            for &u in query_ids {
                let (_, _, stats) = tree.nn_query_excluding(&rows[u as usize], Some(u))?;
                evals += stats.distance_evaluations;
            }
            Ok((tree.build_evaluations(), evals, 0))
        }
        Backend::Lsh { bits, tables } => {
            let index = LshIndex::build(
                rows.to_vec(),
                cfg.clone(),
                LshParams {
                    bits,
                    tables,
                    threshold_rule: ThresholdRule::Median,
                    seed,
                },
            )?;
            let mut evals = 0u64;
            let mut fallbacks = 0u64;
            for &u in query_ids {
                let res = index.ann_query_excluding(&rows[u as usize], Some(u))?;
                evals += res.distance_evaluations;
                fallbacks += u64::from(res.used_fallback);
            }
            Ok((index.build_evaluations(), evals, fallbacks))
        }
    }
}

fn to_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from(
        "backend,wall_ms,nn_queries,nn_build_evaluations,nn_query_evaluations,nn_fallbacks,detect_evaluations,total_evaluations,modularity,conductance_min,conductance_mean,conductance_max,k,iterations,error\n",
    );
    let opt = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.backend,
            r.wall_ms,
            r.nn_queries,
            r.nn_build_evaluations,
            r.nn_query_evaluations,
            r.nn_fallbacks,
            r.detect_evaluations,
            r.total_evaluations,
            opt(r.modularity),
            opt(r.conductance_min),
            opt(r.conductance_mean),
            opt(r.conductance_max),
            r.k,
            r.iterations,
            r.error.clone().unwrap_or_default(),
        ));
    }
    out
}
