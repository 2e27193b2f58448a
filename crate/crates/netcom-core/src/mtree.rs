//! Exact nearest-neighbor queries via a covering-radius metric tree.
//!
//! The tree is binary: every internal node holds two routing entries, each
//! with a pivot object, the covering radius of its subtree, and the pivot's
//! distance to the parent pivot. Queries prune a subtree whenever the ball
//! around its pivot cannot intersect the ball of the current best radius
//! around the query; the stored parent distances let many pivot distances be
//! skipped outright through the triangle inequality.
//!
//! Object ids are indices into the point slice the tree was built over.

use crate::embed::{distance, EmbedConfig, NodeVector};
use crate::error::{CoreError, Result};

/// Default number of objects per leaf.
pub const DEFAULT_LEAF_CAPACITY: usize = 16;

/// Counters for one query (or one build).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct QueryStats {
    pub distance_evaluations: u64,
    pub nodes_visited: u64,
}

#[derive(Debug, Clone, PartialEq)]
struct LeafItem {
    id: u32,
    /// Distance to the pivot of the routing entry owning this leaf; 0 when
    /// the whole tree is a single root leaf.
    parent_dist: f64,
}

#[derive(Debug, Clone, PartialEq)]
struct RoutingEntry {
    pivot: u32,
    covering_radius: f64,
    /// Distance from this entry's pivot to the parent entry's pivot; 0 at
    /// the root.
    parent_distance: f64,
    child: Node,
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Leaf(Vec<LeafItem>),
    Internal(Box<(RoutingEntry, RoutingEntry)>),
}

/// Static metric tree over a set of embedded points.
#[derive(Debug, Clone, PartialEq)]
pub struct MTree {
    points: Vec<NodeVector>,
    cfg: EmbedConfig,
    leaf_capacity: usize,
    root: Node,
    build_evaluations: u64,
}

impl MTree {
    /// Build a tree over `points` with the given leaf capacity.
    ///
    /// Pivots per node are found by a linear double sweep (farthest point of
    /// an arbitrary start, then the farthest point of that); the set is then
    /// split at the median of `d(x, left_pivot) - d(x, right_pivot)`, which
    /// keeps the depth logarithmic using metric evaluations only.
    pub fn build(points: Vec<NodeVector>, cfg: EmbedConfig, leaf_capacity: usize) -> Result<MTree> {
        if points.is_empty() {
            return Err(CoreError::EmptyIndex(
                "cannot build m-tree over no points".into(),
            ));
        }
        if leaf_capacity == 0 {
            return Err(CoreError::InvalidParameter(
                "leaf capacity must be >= 1".into(),
            ));
        }
        let ids: Vec<u32> = (0..points.len() as u32).collect();
        let mut evals = 0u64;
        let root = build_node(&points, &cfg, ids, None, leaf_capacity, &mut evals)?;
        Ok(MTree {
            points,
            cfg,
            leaf_capacity,
            root,
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

    /// Metric evaluations spent during construction.
    pub fn build_evaluations(&self) -> u64 {
        self.build_evaluations
    }

    /// Longest root-to-leaf path, in edges.
    pub fn depth(&self) -> usize {
        fn walk(n: &Node) -> usize {
            match n {
                Node::Leaf(_) => 0,
                Node::Internal(e) => 1 + walk(&e.0.child).max(walk(&e.1.child)),
            }
        }
        walk(&self.root)
    }

    /// Exact nearest neighbor of `q`: `(object id, distance, stats)`.
    ///
    /// Equal distances resolve to the smaller object id. Exactness holds for
    /// metric-guaranteed embed configurations; other configurations are
    /// searched with the same pruning but without the exactness claim.
    pub fn nn_query(&self, q: &NodeVector) -> Result<(u32, f64, QueryStats)> {
        self.nn_query_excluding(q, None)
    }

    /// Like [`nn_query`](Self::nn_query) but never returns `exclude`; used
    /// for leave-one-out workloads where the query is itself an object.
    pub fn nn_query_excluding(
        &self,
        q: &NodeVector,
        exclude: Option<u32>,
    ) -> Result<(u32, f64, QueryStats)> {
        if self.points.len() <= usize::from(exclude.is_some()) {
            return Err(CoreError::EmptyIndex(
                "query on empty m-tree (or every object excluded)".into(),
            ));
        }
        let mut best = Best {
            id: u32::MAX,
            dist: f64::INFINITY,
            exclude,
        };
        let mut stats = QueryStats::default();
        self.search(&self.root, q, None, &mut best, &mut stats)?;
        Ok((best.id, best.dist, stats))
    }

    fn search(
        &self,
        node: &Node,
        q: &NodeVector,
        parent: Option<f64>,
        best: &mut Best,
        stats: &mut QueryStats,
    ) -> Result<()> {
        stats.nodes_visited += 1;
        match node {
            Node::Leaf(items) => {
                for item in items {
                    if let Some(dqp) = parent {
                        // |d(q,parent) - d(o,parent)| lower-bounds d(q,o)
                        if (dqp - item.parent_dist).abs() > best.dist {
                            continue;
                        }
                    }
                    let d = distance(q, &self.points[item.id as usize], &self.cfg)?;
                    stats.distance_evaluations += 1;
                    best.offer(item.id, d);
                }
            }
            Node::Internal(entries) => {
                let (left, right) = (&entries.0, &entries.1);
                let dl = self.eval_entry(left, q, parent, best, stats)?;
                let dr = self.eval_entry(right, q, parent, best, stats)?;
                let mut order = [(dl, left), (dr, right)];
                if nearer(dr, dl) {
                    order.swap(0, 1);
                }
                for (dp, entry) in order {
                    if let Some(dp) = dp {
                        if dp - entry.covering_radius > best.dist {
                            continue;
                        }
                        self.search(&entry.child, q, Some(dp), best, stats)?;
                    }
                }
            }
        }
        Ok(())
    }

    /// Distance from `q` to the entry pivot, or `None` when the parent
    /// distance proves the whole subtree (pivot included) cannot beat the
    /// current best.
    fn eval_entry(
        &self,
        entry: &RoutingEntry,
        q: &NodeVector,
        parent: Option<f64>,
        best: &mut Best,
        stats: &mut QueryStats,
    ) -> Result<Option<f64>> {
        if let Some(dqp) = parent {
            if (dqp - entry.parent_distance).abs() - entry.covering_radius > best.dist {
                return Ok(None);
            }
        }
        let d = distance(q, &self.points[entry.pivot as usize], &self.cfg)?;
        stats.distance_evaluations += 1;
        best.offer(entry.pivot, d);
        Ok(Some(d))
    }

    /// Exhaustively re-check the structural invariants: every object sits
    /// within the covering radius of every routing entry above it, leaves
    /// respect the capacity, and each object appears in exactly one leaf.
    pub fn validate(&self) -> Result<()> {
        let mut seen: Vec<u32> = Vec::with_capacity(self.points.len());
        self.validate_node(&self.root, &mut seen)?;
        seen.sort_unstable();
        let expected: Vec<u32> = (0..self.points.len() as u32).collect();
        if seen != expected {
            return Err(CoreError::InvalidParameter(
                "tree leaves do not partition the point set".into(),
            ));
        }
        Ok(())
    }

    fn validate_node(&self, node: &Node, seen: &mut Vec<u32>) -> Result<Vec<u32>> {
        match node {
            Node::Leaf(items) => {
                if items.len() > self.leaf_capacity {
                    return Err(CoreError::InvalidParameter(format!(
                        "leaf holds {} > capacity {}",
                        items.len(),
                        self.leaf_capacity
                    )));
                }
                let ids: Vec<u32> = items.iter().map(|i| i.id).collect();
                seen.extend_from_slice(&ids);
                Ok(ids)
            }
            Node::Internal(entries) => {
                let mut all = Vec::new();
                for entry in [&entries.0, &entries.1] {
                    let subtree = self.validate_node(&entry.child, seen)?;
                    for &id in &subtree {
                        let d = distance(
                            &self.points[id as usize],
                            &self.points[entry.pivot as usize],
                            &self.cfg,
                        )?;
                        if d > entry.covering_radius + 1e-9 {
                            return Err(CoreError::InvalidParameter(format!(
                                "object {id} at {d} exceeds covering radius {} of pivot {}",
                                entry.covering_radius, entry.pivot
                            )));
                        }
                    }
                    all.extend(subtree);
                }
                Ok(all)
            }
        }
    }
}

struct Best {
    id: u32,
    dist: f64,
    exclude: Option<u32>,
}

impl Best {
    fn offer(&mut self, id: u32, d: f64) {
        if self.exclude == Some(id) {
            return;
        }
        if d < self.dist || (d == self.dist && id < self.id) {
            self.id = id;
            self.dist = d;
        }
    }
}

fn nearer(a: Option<f64>, b: Option<f64>) -> bool {
    match (a, b) {
        (Some(x), Some(y)) => x < y,
        (Some(_), None) => true,
        _ => false,
    }
}

fn build_node(
    points: &[NodeVector],
    cfg: &EmbedConfig,
    ids: Vec<u32>,
    parent: Option<u32>,
    leaf_capacity: usize,
    evals: &mut u64,
) -> Result<Node> {
    if ids.len() <= leaf_capacity {
        let items = ids
            .into_iter()
            .map(|id| {
                let parent_dist = match parent {
                    Some(p) => {
                        *evals += 1;
                        distance(&points[id as usize], &points[p as usize], cfg)?
                    }
                    None => 0.0,
                };
                Ok(LeafItem { id, parent_dist })
            })
            .collect::<Result<Vec<_>>>()?;
        return Ok(Node::Leaf(items));
    }

    // double sweep: farthest from an arbitrary start, then farthest from that
    let start = ids[0];
    let d_start = dist_column(points, cfg, &ids, start, evals)?;
    let p1 = ids[argmax(&d_start)];
    let d_p1 = dist_column(points, cfg, &ids, p1, evals)?;
    let p2 = {
        let mut best_i = usize::MAX;
        for (i, &id) in ids.iter().enumerate() {
            if id == p1 {
                continue;
            }
            if best_i == usize::MAX || d_p1[i] > d_p1[best_i] {
                best_i = i;
            }
        }
        ids[best_i]
    };
    let d_p2 = dist_column(points, cfg, &ids, p2, evals)?;

    // median split along x(p) = d(p, p1) - d(p, p2)
    let mut keyed: Vec<(f64, usize)> = d_p1
        .iter()
        .zip(&d_p2)
        .map(|(a, b)| a - b)
        .enumerate()
        .map(|(i, x)| (x, i))
        .collect();
    keyed.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(ids[a.1].cmp(&ids[b.1])));
    let mid = keyed.len() / 2;

    let side = |slice: &[(f64, usize)], pivot_col: &[f64]| -> (Vec<u32>, f64) {
        let mut set = Vec::with_capacity(slice.len());
        let mut radius = 0.0f64;
        for &(_, i) in slice {
            set.push(ids[i]);
            radius = radius.max(pivot_col[i]);
        }
        (set, radius)
    };
    let (left_ids, cov_left) = side(&keyed[..mid], &d_p1);
    let (right_ids, cov_right) = side(&keyed[mid..], &d_p2);

    let parent_dist = |pivot: u32, evals: &mut u64| -> Result<f64> {
        match parent {
            Some(p) => {
                *evals += 1;
                distance(&points[pivot as usize], &points[p as usize], cfg)
            }
            None => Ok(0.0),
        }
    };
    let left = RoutingEntry {
        pivot: p1,
        covering_radius: cov_left,
        parent_distance: parent_dist(p1, evals)?,
        child: build_node(points, cfg, left_ids, Some(p1), leaf_capacity, evals)?,
    };
    let right = RoutingEntry {
        pivot: p2,
        covering_radius: cov_right,
        parent_distance: parent_dist(p2, evals)?,
        child: build_node(points, cfg, right_ids, Some(p2), leaf_capacity, evals)?,
    };
    Ok(Node::Internal(Box::new((left, right))))
}

fn dist_column(
    points: &[NodeVector],
    cfg: &EmbedConfig,
    ids: &[u32],
    from: u32,
    evals: &mut u64,
) -> Result<Vec<f64>> {
    *evals += ids.len() as u64;
    ids.iter()
        .map(|&id| distance(&points[id as usize], &points[from as usize], cfg))
        .collect()
}

fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::{embed_all, EmbedConfig};
    use crate::synth;

    /// Independent oracle: exhaustive scan with the same tie rule.
    fn linear_nn(points: &[NodeVector], q: &NodeVector, cfg: &EmbedConfig) -> (u32, f64) {
        let mut best = Best {
            id: u32::MAX,
            dist: f64::INFINITY,
            exclude: None,
        };
        for (i, p) in points.iter().enumerate() {
            best.offer(i as u32, distance(q, p, cfg).unwrap());
        }
        (best.id, best.dist)
    }

    #[test]
    fn singleton_tree_is_one_leaf() {
        let pts = synth::sphere_clusters(1, 1, 8, 0.1, 0);
        let tree =
            MTree::build(pts.clone(), EmbedConfig::default(), DEFAULT_LEAF_CAPACITY).unwrap();
        assert_eq!(tree.depth(), 0);
        let (id, d, stats) = tree.nn_query(&pts[0]).unwrap();
        assert_eq!(id, 0);
        assert_eq!(d, 0.0);
        assert!(stats.distance_evaluations >= 1);
        assert!(stats.nodes_visited >= 1);
    }

    #[test]
    fn empty_build_is_an_error() {
        assert!(matches!(
            MTree::build(Vec::new(), EmbedConfig::default(), 16),
            Err(CoreError::EmptyIndex(_))
        ));
    }

    #[test]
    fn median_split_keeps_depth_logarithmic() {
        let pts = synth::sphere_clusters(1024, 16, 16, 0.1, 7);
        let tree = MTree::build(pts, EmbedConfig::default(), 16).unwrap();
        assert!(tree.depth() <= 7, "depth {} > 7", tree.depth());
    }

    #[test]
    fn barbell_tree_satisfies_covering_invariant() {
        let g = synth::barbell();
        let rows = embed_all(&g, &EmbedConfig::default()).unwrap();
        let tree = MTree::build(rows, EmbedConfig::default(), 2).unwrap();
        tree.validate().unwrap();
    }

    #[test]
    fn query_matches_linear_oracle() {
        let cfg = EmbedConfig::default();
        let pts = synth::sphere_clusters(128, 8, 12, 0.15, 11);
        let queries = synth::sphere_clusters(64, 8, 12, 0.15, 12);
        let tree = MTree::build(pts.clone(), cfg.clone(), 8).unwrap();
        tree.validate().unwrap();
        for q in &queries {
            let (id, d, _) = tree.nn_query(q).unwrap();
            let (oid, od) = linear_nn(&pts, q, &cfg);
            assert_eq!((id, d), (oid, od));
        }
    }

    #[test]
    fn stored_point_is_its_own_neighbor() {
        let g = synth::barbell();
        let rows = embed_all(&g, &EmbedConfig::default()).unwrap();
        let tree = MTree::build(rows.clone(), EmbedConfig::default(), 2).unwrap();
        // nodes 0 and 1 have identical rows; the tie resolves to the smaller id
        let (id, d, _) = tree.nn_query(&rows[1]).unwrap();
        assert_eq!(d, 0.0);
        assert_eq!(id, 0);
        let (id, d, _) = tree.nn_query(&rows[3]).unwrap();
        assert_eq!((id, d), (3, 0.0));
    }

    #[test]
    fn leave_one_out_matches_masked_oracle() {
        let cfg = EmbedConfig::default();
        let pts = synth::sphere_clusters(96, 6, 10, 0.12, 19);
        let tree = MTree::build(pts.clone(), cfg.clone(), 8).unwrap();
        for u in 0..pts.len() as u32 {
            let (id, d, _) = tree.nn_query_excluding(&pts[u as usize], Some(u)).unwrap();
            let mut best = Best {
                id: u32::MAX,
                dist: f64::INFINITY,
                exclude: Some(u),
            };
            for (i, p) in pts.iter().enumerate() {
                best.offer(i as u32, distance(&pts[u as usize], p, &cfg).unwrap());
            }
            assert_eq!((id, d), (best.id, best.dist));
            assert_ne!(id, u);
        }
    }

    #[test]
    fn identical_inputs_build_identical_trees() {
        let pts = synth::sphere_clusters(200, 4, 10, 0.1, 3);
        let a = MTree::build(pts.clone(), EmbedConfig::default(), 8).unwrap();
        let b = MTree::build(pts, EmbedConfig::default(), 8).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn clustered_queries_prune_most_of_the_tree() {
        let n = 1024;
        let (pts, queries) = synth::sphere_clusters_with_queries(n, 128, 16, 16, 0.05, 21);
        let cfg = EmbedConfig::default();
        let tree = MTree::build(pts, cfg, 16).unwrap();
        let total: u64 = queries
            .iter()
            .map(|q| tree.nn_query(q).unwrap().2.distance_evaluations)
            .sum();
        let mean = total as f64 / 128.0;
        assert!(
            mean < n as f64 / 2.0,
            "mean evaluations {mean} not sublinear"
        );
    }
}
