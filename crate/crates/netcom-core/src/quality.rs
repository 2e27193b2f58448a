//! Partition scoring: modularity and per-community conductance.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::graph::Graph;
use crate::kcentral::Partition;

/// Newman modularity of an assignment: the intra-community edge fraction
/// minus its expectation under a degree-preserving random rewiring,
/// `Q = sum_c [ e_c/m - (d_c/(2m))^2 ]`.
pub fn modularity(g: &Graph, assignment: &[u32]) -> Result<f64> {
    if assignment.len() != g.node_count() as usize {
        return Err(CoreError::InvalidParameter(format!(
            "assignment covers {} nodes, graph has {}",
            assignment.len(),
            g.node_count()
        )));
    }
    let m = g.edge_count();
    if m == 0 {
        return Err(CoreError::UndefinedMeasure(
            "modularity needs at least one edge".into(),
        ));
    }
    let k = assignment
        .iter()
        .copied()
        .max()
        .map_or(0, |c| c as usize + 1);
    let mut intra = vec![0u64; k];
    let mut degree_sum = vec![0u64; k];
    for (u, &c) in assignment.iter().enumerate() {
        degree_sum[c as usize] += g.degree(u as u32)? as u64;
    }
    for (u, v) in g.edges() {
        if assignment[u as usize] == assignment[v as usize] {
            intra[assignment[u as usize] as usize] += 1;
        }
    }
    let m = m as f64;
    let mut q = 0.0;
    for c in 0..k {
        let frac = intra[c] as f64 / m;
        let expected = degree_sum[c] as f64 / (2.0 * m);
        q += frac - expected * expected;
    }
    Ok(q)
}

/// Conductance of a node set: cut edges over the smaller side volume,
/// `cut(S, S^c) / min(vol(S), vol(S^c))`.
pub fn conductance(g: &Graph, s: &[u32]) -> Result<f64> {
    let n = g.node_count() as usize;
    let mut inside = vec![false; n];
    let mut size = 0usize;
    for &u in s {
        if u as usize >= n {
            return Err(CoreError::NodeOutOfRange {
                id: u,
                node_count: g.node_count(),
            });
        }
        if !inside[u as usize] {
            inside[u as usize] = true;
            size += 1;
        }
    }
    if size == 0 || size == n {
        return Err(CoreError::UndefinedMeasure(
            "conductance needs a nonempty proper subset".into(),
        ));
    }
    let mut cut = 0u64;
    let mut vol_s = 0u64;
    for u in 0..n as u32 {
        if !inside[u as usize] {
            continue;
        }
        vol_s += g.degree(u)? as u64;
        for &v in g.neighbors(u)? {
            if !inside[v as usize] {
                cut += 1;
            }
        }
    }
    let vol_c = 2 * g.edge_count() as u64 - vol_s;
    let denom = vol_s.min(vol_c);
    if denom == 0 {
        return Err(CoreError::UndefinedMeasure(
            "conductance undefined when one side has zero volume".into(),
        ));
    }
    Ok(cut as f64 / denom as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConductanceSummary {
    pub min: f64,
    pub mean: f64,
    pub max: f64,
}

/// Scores of one detection run, shaped like the benchmark tables: one
/// modularity value plus per-community conductances with their min, mean
/// and max. The mean is the headline number in benchmark output. A
/// community whose conductance is undefined (the whole graph, or a side of
/// zero volume) is reported as null and skipped in the summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub modularity: f64,
    pub conductance_per_community: Vec<Option<f64>>,
    pub conductance_summary: Option<ConductanceSummary>,
    pub runtime_ms: u64,
    pub backend: String,
    pub k: u32,
}

/// Assemble the report for a partition.
pub fn quality_report(
    g: &Graph,
    p: &Partition,
    runtime_ms: u64,
    backend: &str,
) -> Result<QualityReport> {
    let q = modularity(g, &p.assignment)?;
    let k = p.centers.len();
    let mut members: Vec<Vec<u32>> = vec![Vec::new(); k];
    for (u, &c) in p.assignment.iter().enumerate() {
        members[c as usize].push(u as u32);
    }
    let per_community: Vec<Option<f64>> = members
        .iter()
        .map(|s| match conductance(g, s) {
            Ok(phi) => Some(phi),
            Err(CoreError::UndefinedMeasure(_)) => None,
            Err(e) => panic!("conductance on partition members cannot fail otherwise: {e}"),
        })
        .collect();
    let defined: Vec<f64> = per_community.iter().flatten().copied().collect();
    let conductance_summary = if defined.is_empty() {
        None
    } else {
        Some(ConductanceSummary {
            min: defined.iter().copied().fold(f64::INFINITY, f64::min),
            mean: defined.iter().sum::<f64>() / defined.len() as f64,
            max: defined.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
    };
    Ok(QualityReport {
        modularity: q,
        conductance_per_community: per_community,
        conductance_summary,
        runtime_ms,
        backend: backend.to_string(),
        k: k as u32,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;
    use rand::seq::SliceRandom;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn barbell_partition() -> Partition {
        Partition {
            assignment: vec![0, 0, 0, 1, 1, 1],
            centers: vec![0, 5],
            cost: 0.0,
            iterations: 1,
        }
    }

    #[test]
    fn barbell_modularity_hand_value() {
        let g = synth::barbell();
        let q = modularity(&g, &[0, 0, 0, 1, 1, 1]).unwrap();
        assert!((q - 2.0 * (3.0 / 7.0 - 0.25)).abs() < 1e-12);
        assert!((q - 0.357143).abs() < 1e-6);
    }

    #[test]
    fn single_community_has_zero_modularity() {
        let g = synth::barbell();
        assert_eq!(modularity(&g, &[0; 6]).unwrap(), 0.0);
    }

    #[test]
    fn triangle_singletons_hand_value() {
        let g = synth::complete(3);
        let q = modularity(&g, &[0, 1, 2]).unwrap();
        assert!((q - (-1.0 / 3.0)).abs() < 1e-6);
    }

    #[test]
    fn edgeless_graph_has_no_modularity() {
        let g = Graph::from_edges(3, &[]);
        assert!(matches!(
            modularity(&g, &[0, 0, 1]),
            Err(CoreError::UndefinedMeasure(_))
        ));
    }

    #[test]
    fn barbell_conductance_hand_value() {
        let g = synth::barbell();
        let phi = conductance(&g, &[0, 1, 2]).unwrap();
        assert!((phi - 1.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn singleton_set_has_full_conductance() {
        let g = synth::barbell();
        assert_eq!(conductance(&g, &[0]).unwrap(), 1.0);
    }

    #[test]
    fn disconnected_component_has_zero_conductance() {
        let g = synth::two_triangles_plus_isolated();
        assert_eq!(conductance(&g, &[0, 1, 2]).unwrap(), 0.0);
    }

    #[test]
    fn degenerate_sets_are_rejected() {
        let g = synth::barbell();
        assert!(conductance(&g, &[]).is_err());
        assert!(conductance(&g, &[0, 1, 2, 3, 4, 5]).is_err());
        // isolated node: volume zero on its side
        let t = synth::two_triangles_plus_isolated();
        assert!(matches!(
            conductance(&t, &[6]),
            Err(CoreError::UndefinedMeasure(_))
        ));
    }

    #[test]
    fn conductance_is_complement_symmetric() {
        let g = synth::barbell();
        let all: Vec<u32> = (0..6).collect();
        for mask in 1u32..(1 << 6) - 1 {
            let s: Vec<u32> = all
                .iter()
                .copied()
                .filter(|&u| mask >> u & 1 == 1)
                .collect();
            let c: Vec<u32> = all
                .iter()
                .copied()
                .filter(|&u| mask >> u & 1 == 0)
                .collect();
            assert_eq!(conductance(&g, &s).unwrap(), conductance(&g, &c).unwrap());
        }
    }

    #[test]
    fn report_on_barbell() {
        let g = synth::barbell();
        let report = quality_report(&g, &barbell_partition(), 3, "exact").unwrap();
        assert!((report.modularity - 0.357143).abs() < 1e-6);
        let expected = 1.0 / 7.0;
        for phi in &report.conductance_per_community {
            assert!((phi.unwrap() - expected).abs() < 1e-12);
        }
        let summary = report.conductance_summary.unwrap();
        assert!((summary.mean - expected).abs() < 1e-12);
        assert_eq!(report.k, 2);
    }

    #[test]
    fn k1_report_marks_conductance_not_applicable() {
        let g = synth::barbell();
        let p = Partition {
            assignment: vec![0; 6],
            centers: vec![2],
            cost: 0.0,
            iterations: 1,
        };
        let report = quality_report(&g, &p, 0, "exact").unwrap();
        assert_eq!(report.modularity, 0.0);
        assert_eq!(report.conductance_per_community, vec![None]);
        assert!(report.conductance_summary.is_none());
    }

    #[test]
    fn report_round_trips_through_json() {
        let g = synth::barbell();
        let report = quality_report(&g, &barbell_partition(), 5, "mtree").unwrap();
        let text = serde_json::to_string(&report).unwrap();
        let back: QualityReport = serde_json::from_str(&text).unwrap();
        assert_eq!(report, back);
    }

    #[test]
    fn modularity_stays_in_bounds_on_random_partitions() {
        let g = synth::erdos_renyi(200, 0.05, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for trial in 0..50 {
            let assignment: Vec<u32> = (0..200).map(|_| trial % 7).collect();
            let q = modularity(&g, &assignment).unwrap();
            assert!((-0.5..=1.0).contains(&q));
            let mut ids: Vec<u32> = (0..200).collect();
            ids.shuffle(&mut rng);
            let mut random = vec![0u32; 200];
            for (rank, &u) in ids.iter().enumerate() {
                random[u as usize] = (rank % 5) as u32;
            }
            let q = modularity(&g, &random).unwrap();
            assert!((-0.5..=1.0).contains(&q));
        }
    }

    #[test]
    fn random_balanced_bipartition_concentrates_near_zero() {
        for seed in 0..20 {
            let g = synth::erdos_renyi(1000, 0.01, 100 + seed);
            let mut ids: Vec<u32> = (0..1000).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            ids.shuffle(&mut rng);
            let mut assignment = vec![0u32; 1000];
            for &u in ids.iter().take(500) {
                assignment[u as usize] = 1;
            }
            let q = modularity(&g, &assignment).unwrap();
            assert!(
                q.abs() < 0.05,
                "seed {seed}: |Q| = {} too far from 0",
                q.abs()
            );
        }
    }
}
