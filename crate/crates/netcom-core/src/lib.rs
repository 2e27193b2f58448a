//! Nearest-neighbor search and community detection on complex networks.
//!
//! The pipeline implemented here maps the nodes of an undirected graph into
//! a metric space (sparse rows of the adjacency matrix with a tunable
//! diagonal weight), answers nearest-neighbor queries over that space either
//! exactly (linear scan or a metric tree) or approximately (pivot-threshold
//! locality-sensitive hashing), and partitions the nodes into k communities
//! by iterated nearest-center assignment with medoid recentering.
//!
//! Modules mirror the pipeline stages:
//!
//! * [`graph`] — edge-list parsing into a compact undirected graph
//! * [`embed`] — node coordinates and the angular distance between them
//! * [`mtree`] — exact NN queries via a covering-radius metric tree
//! * [`lsh`] — approximate NN queries via seeded hash tables
//! * [`kcentral`] — k-central partitioning with farthest-first seeding
//! * [`quality`] — modularity and conductance scoring
//! * [`synth`] — seeded generators for synthetic graphs and point clouds
//!
//! ```
//! use netcom_core::{detect_communities, embed_all, quality_report, Backend, EmbedConfig, Graph};
//!
//! // two triangles joined by a bridge
//! let graph = Graph::parse_edge_list(
//!     "0 1\n0 2\n1 2\n2 3\n3 4\n3 5\n4 5\n".as_bytes(),
//!     false,
//! )?;
//! let cfg = EmbedConfig::with_lambda(1.0);
//! let rows = embed_all(&graph, &cfg)?;
//! let detection = detect_communities(&rows, &cfg, 2, Backend::Exact, 42, 100)?;
//! let report = quality_report(&graph, &detection.partition, 0, "exact")?;
//! assert!((report.modularity - 0.357143).abs() < 1e-6);
//! # Ok::<(), netcom_core::CoreError>(())
//! ```

pub mod embed;
pub mod error;
pub mod graph;
pub mod kcentral;
pub mod lsh;
pub mod mtree;
pub mod quality;
pub mod synth;

pub use embed::{
    auto_lambda, baseline_similarity, distance, embed_all, lx_row, similarity, BaselineKind,
    EmbedConfig, LambdaMode, NodeVector, Phi, Sigma,
};
pub use error::CoreError;
pub use graph::Graph;
pub use kcentral::{
    detect_communities, farthest_first_init, kcentral_iterate, partition_cost, select_k, Backend,
    Detection, Partition,
};
pub use lsh::{AnnResult, LshIndex, LshParams, ThresholdRule};
pub use mtree::{MTree, QueryStats};
pub use quality::{conductance, modularity, quality_report, QualityReport};
