use std::fs::File;
use std::io::{BufReader, Write};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use serde::Serialize;

use netcom_core::{
    detect_communities, embed_all, quality_report, select_k, Backend, EmbedConfig, Graph,
    LambdaMode, NodeVector, Phi, QualityReport, Sigma,
};

use crate::{BackendArg, CommonArgs, FormatArg, PhiArg, SigmaArg, UsageError};

/// Cap handed to `select_k` when `--k auto` is requested. The radius-drop
/// rule returns the cap itself when no clear drop exists (smoothly decaying
/// radii on small-world graphs), so the cap stays well below n to keep that
/// fallback non-degenerate.
fn auto_k_max(n: usize) -> usize {
    (n / 3).clamp(2, 100).min(n)
}

/// Everything resolved and embedded, shared by detect and bench.
pub struct Prepared {
    pub graph: Graph,
    pub rows: Vec<NodeVector>,
    pub cfg: EmbedConfig,
    pub backend: Backend,
    pub k: usize,
    pub echo: ConfigEcho,
}

/// The run configuration echoed into every report, with "auto" values both
/// as requested and as resolved. Thread count is an execution detail and is
/// deliberately absent: output bytes must not depend on it.
#[derive(Serialize, Clone)]
pub struct ConfigEcho {
    pub input: String,
    pub directed: bool,
    pub lambda: String,
    pub lambda_resolved: f64,
    pub sigma: &'static str,
    pub phi: &'static str,
    pub k: String,
    pub k_resolved: u32,
    pub backend: &'static str,
    pub lsh_bits: u32,
    pub lsh_tables: u32,
    pub leaf_capacity: usize,
    pub seed: u64,
    pub max_iters: u32,
    pub output: Option<String>,
    pub format: &'static str,
}

#[derive(Serialize)]
struct NodeRow {
    id: i64,
    community: u32,
}

#[derive(Serialize)]
struct DetectOutput<'a> {
    nodes: Vec<NodeRow>,
    report: &'a QualityReport,
    config: &'a ConfigEcho,
}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

pub fn prepare(args: &CommonArgs) -> Result<Prepared> {
    init_threads(args)?;

    if args.lsh_bits == 0 || args.lsh_bits > 63 {
        return Err(usage(format!(
            "--lsh-bits must be in 1..=63, got {}",
            args.lsh_bits
        )));
    }
    if args.lsh_tables == 0 {
        return Err(usage("--lsh-tables must be >= 1"));
    }
    if args.leaf_capacity == 0 {
        return Err(usage("--leaf-capacity must be >= 1"));
    }
    if args.max_iters == 0 {
        return Err(usage("--max-iters must be >= 1"));
    }

    let file = File::open(&args.input)
        .with_context(|| format!("cannot open input file {}", args.input.display()))?;
    let graph = Graph::parse_edge_list(BufReader::new(file), args.directed)?;
    if graph.node_count() == 0 {
        bail!("input graph has no nodes");
    }
    let n = graph.node_count() as usize;

    let lambda_resolved = match args.lambda.as_str() {
        "auto" => netcom_core::auto_lambda(&graph),
        text => {
            let l: f64 = text.parse().map_err(|_| {
                usage(format!(
                    "--lambda must be a number or \"auto\", got {text:?}"
                ))
            })?;
            if !l.is_finite() || l < 0.0 {
                return Err(usage(format!("--lambda must be finite and >= 0, got {l}")));
            }
            l
        }
    };
    let cfg = EmbedConfig {
        lambda: LambdaMode::Constant(lambda_resolved),
        sigma: match args.sigma {
            SigmaArg::Cosine => Sigma::Cosine,
            SigmaArg::Pearson => Sigma::Pearson,
            SigmaArg::Spearman => Sigma::Spearman,
        },
        phi: match args.phi {
            PhiArg::Arccos => Phi::Arccos,
            PhiArg::Linear => Phi::Complement,
        },
    };
    let rows = embed_all(&graph, &cfg)?;

    let k = match args.k.as_str() {
        "auto" => select_k(&rows, &cfg, auto_k_max(n), args.seed)?,
        text => {
            let k: usize = text
                .parse()
                .map_err(|_| usage(format!("--k must be an integer or \"auto\", got {text:?}")))?;
            if k < 1 || k > n {
                return Err(usage(format!("--k must be in 1..={n}, got {k}")));
            }
            k
        }
    };

    let backend = match args.backend {
        BackendArg::Exact => Backend::Exact,
        BackendArg::Mtree => Backend::MTree {
            leaf_capacity: args.leaf_capacity,
        },
        BackendArg::Lsh => Backend::Lsh {
            bits: args.lsh_bits,
            tables: args.lsh_tables,
        },
    };

    let echo = ConfigEcho {
        input: args.input.display().to_string(),
        directed: args.directed,
        lambda: args.lambda.clone(),
        lambda_resolved,
        sigma: match args.sigma {
            SigmaArg::Cosine => "cosine",
            SigmaArg::Pearson => "pearson",
            SigmaArg::Spearman => "spearman",
        },
        phi: match args.phi {
            PhiArg::Arccos => "arccos",
            PhiArg::Linear => "linear",
        },
        k: args.k.clone(),
        k_resolved: k as u32,
        backend: backend.label(),
        lsh_bits: args.lsh_bits,
        lsh_tables: args.lsh_tables,
        leaf_capacity: args.leaf_capacity,
        seed: args.seed,
        max_iters: args.max_iters,
        output: args.output.as_ref().map(|p| p.display().to_string()),
        format: match args.format {
            FormatArg::Json => "json",
            FormatArg::Csv => "csv",
        },
    };

    Ok(Prepared {
        graph,
        rows,
        cfg,
        backend,
        k,
        echo,
    })
}

fn init_threads(args: &CommonArgs) -> Result<()> {
    let from_env = match std::env::var("NETCOM_THREADS") {
        Ok(text) => Some(
            text.parse::<usize>()
                .map_err(|_| usage(format!("NETCOM_THREADS must be an integer, got {text:?}")))?,
        ),
        Err(_) => None,
    };
    let threads = from_env.or(args.threads);
    if let Some(t) = threads {
        if t == 0 {
            return Err(usage("thread count must be >= 1"));
        }
        // a second init in the same process keeps the first pool; results do
        // not depend on the pool size, so that is fine
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global();
    }
    Ok(())
}

pub fn run_detect(args: &CommonArgs) -> Result<()> {
    if args.format == FormatArg::Csv && args.output.is_none() {
        return Err(usage(
            "--format csv needs --output: the report goes to a .report.json sidecar",
        ));
    }
    let prepared = prepare(args)?;
    let started = Instant::now();
    let detection = detect_communities(
        &prepared.rows,
        &prepared.cfg,
        prepared.k,
        prepared.backend,
        args.seed,
        args.max_iters,
    )?;
    let runtime_ms = started.elapsed().as_millis() as u64;
    let report = quality_report(
        &prepared.graph,
        &detection.partition,
        runtime_ms,
        prepared.backend.label(),
    )?;

    eprintln!(
        "netcom: n={} m={} k={} backend={} iterations={} cost={:.6} distance_evaluations={} exact_redos={}",
        prepared.graph.node_count(),
        prepared.graph.edge_count(),
        prepared.k,
        prepared.backend.label(),
        detection.partition.iterations,
        detection.partition.cost,
        detection.distance_evaluations,
        detection.exact_redo_passes,
    );

    let nodes: Vec<NodeRow> = detection
        .partition
        .assignment
        .iter()
        .enumerate()
        .map(|(u, &c)| NodeRow {
            id: prepared.graph.label(u as u32),
            community: c,
        })
        .collect();

    match args.format {
        FormatArg::Json => {
            let doc = DetectOutput {
                nodes,
                report: &report,
                config: &prepared.echo,
            };
            let text = serde_json::to_string_pretty(&doc)?;
            match &args.output {
                Some(path) => {
                    std::fs::write(path, text + "\n")
                        .with_context(|| format!("cannot write {}", path.display()))?;
                }
                None => println!("{text}"),
            }
        }
        FormatArg::Csv => {
            let path = args.output.as_ref().expect("validated above");
            let mut out = String::from("node,community\n");
            for row in &nodes {
                out.push_str(&format!("{},{}\n", row.id, row.community));
            }
            std::fs::write(path, out)
                .with_context(|| format!("cannot write {}", path.display()))?;
            let sidecar = sidecar_path(path);
            #[derive(Serialize)]
            struct Sidecar<'a> {
                report: &'a QualityReport,
                config: &'a ConfigEcho,
            }
            let text = serde_json::to_string_pretty(&Sidecar {
                report: &report,
                config: &prepared.echo,
            })?;
            std::fs::write(&sidecar, text + "\n")
                .with_context(|| format!("cannot write {}", sidecar.display()))?;
        }
    }
    Ok(())
}

fn sidecar_path(path: &std::path::Path) -> std::path::PathBuf {
    let mut name = path.as_os_str().to_os_string();
    name.push(".report.json");
    std::path::PathBuf::from(name)
}

/// Write either to the given path or stdout.
pub fn write_text(output: Option<&std::path::Path>, text: &str) -> Result<()> {
    match output {
        Some(path) => std::fs::write(path, text)
            .with_context(|| format!("cannot write {}", path.display()))?,
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
        }
    }
    Ok(())
}
