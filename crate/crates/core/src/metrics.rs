//! Segment quality of a summary graph.

use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::community::louvain;
use crate::error::{Error, Result};
use crate::summary::SummaryGraph;

/// Segment id of every summary node: level 0 of Louvain on the edge weights.
/// Edgeless graphs give every node its own segment.
pub fn pseudo_label(g: &SummaryGraph, seed: u64) -> Vec<usize> {
    let dendrogram = louvain(&g.weighted_graph(), seed);
    let part = &dendrogram.levels[0];
    (0..g.node_count()).map(|v| part.community_of(v)).collect()
}

/// Segment of every raw point, through the summary's point assignment.
pub fn point_segments(g: &SummaryGraph, node_segments: &[usize]) -> Result<Vec<usize>> {
    if g.point_assignment.is_empty() {
        return Err(Error::InvalidInput("summary graph carries no point assignment".into()));
    }
    g.point_assignment
        .iter()
        .map(|&v| {
            node_segments
                .get(v as usize)
                .copied()
                .ok_or_else(|| Error::InvalidInput(format!("point assigned to unknown node {v}")))
        })
        .collect()
}

/// Mean cosine similarity over all unordered pairs of points that share a
/// segment. Zero vectors are skipped with a warning. `None` when no segment
/// holds two usable points.
///
/// Per segment the pair sum is `(|sum u|^2 - sum |u|^2) / 2` over the
/// normalized vectors, so the cost is linear in the number of points.
pub fn avg_intra_segment_cosine(pc: &PointCloud, segments: &[usize]) -> Result<Option<f64>> {
    if segments.len() != pc.len() {
        return Err(Error::InvalidInput(format!(
            "{} segment ids for {} points",
            segments.len(),
            pc.len()
        )));
    }
    let d = pc.dim();
    let count = segments.iter().max().map_or(0, |&s| s + 1);
    let mut sums = vec![0.0; count * d];
    let mut norms = vec![0.0; count];
    let mut sizes = vec![0u64; count];
    let mut zeros = 0usize;
    for (row, &s) in pc.rows().zip(segments) {
        let len = row.iter().map(|x| x * x).sum::<f64>().sqrt();
        if len == 0.0 {
            zeros += 1;
            continue;
        }
        let acc = &mut sums[s * d..(s + 1) * d];
        let mut sq = 0.0;
        for (a, &x) in acc.iter_mut().zip(row) {
            let u = x / len;
            *a += u;
            sq += u * u;
        }
        norms[s] += sq;
        sizes[s] += 1;
    }
    if zeros > 0 {
        log::warn!("{zeros} zero vector(s) excluded from the cosine metric");
    }
    let mut total = 0.0;
    let mut pairs = 0.0;
    for s in 0..count {
        if sizes[s] < 2 {
            continue;
        }
        let sum_sq: f64 = sums[s * d..(s + 1) * d].iter().map(|x| x * x).sum();
        total += (sum_sq - norms[s]) / 2.0;
        let k = sizes[s] as f64;
        pairs += k * (k - 1.0) / 2.0;
    }
    Ok((pairs > 0.0).then(|| (total / pairs).clamp(-1.0, 1.0)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentReport {
    pub nodes: usize,
    pub edges: usize,
    pub components: usize,
    pub segments: usize,
    pub points: usize,
    pub avg_intra_segment_cosine: Option<f64>,
}

/// Pseudo-labels the summary and scores the segments on the raw points.
pub fn segment_report(pc: &PointCloud, g: &SummaryGraph, seed: u64) -> Result<SegmentReport> {
    let node_segments = pseudo_label(g, seed);
    let segments = point_segments(g, &node_segments)?;
    Ok(SegmentReport {
        nodes: g.node_count(),
        edges: g.edge_count(),
        components: g.component_count(),
        segments: node_segments.iter().max().map_or(0, |&s| s + 1),
        points: segments.len(),
        avg_intra_segment_cosine: avg_intra_segment_cosine(pc, &segments)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::stream_rng;
    use crate::summary::{EdgePhase, SummaryEdge, SummaryNode};
    use proptest::prelude::*;
    use rand::Rng;

    fn brute_force(pc: &PointCloud, seg: &[usize]) -> Option<f64> {
        let norm = |r: &[f64]| r.iter().map(|x| x * x).sum::<f64>().sqrt();
        let (mut total, mut pairs) = (0.0, 0usize);
        for i in 0..pc.len() {
            for j in i + 1..pc.len() {
                let (a, b) = (pc.row(i), pc.row(j));
                if seg[i] != seg[j] || norm(a) == 0.0 || norm(b) == 0.0 {
                    continue;
                }
                let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                total += dot / (norm(a) * norm(b));
                pairs += 1;
            }
        }
        (pairs > 0).then(|| total / pairs as f64)
    }

    fn summary(n: usize, edges: &[(usize, usize, f64)]) -> SummaryGraph {
        SummaryGraph {
            nodes: (0..n)
                .map(|id| SummaryNode {
                    id,
                    landmarks: vec![id],
                    point_count: 1,
                    self_weight: 0.0,
                    label_histogram: Vec::new(),
                    dominant_label: None,
                })
                .collect(),
            edges: edges
                .iter()
                .map(|&(source, target, weight)| SummaryEdge {
                    source,
                    target,
                    weight,
                    modularity: 0.0,
                    phase: EdgePhase::Spanning,
                })
                .collect(),
            landmark_rows: Vec::new(),
            point_assignment: (0..n as u32).collect(),
        }
    }

    #[test]
    fn identical_vectors_score_one() {
        let pc = PointCloud::from_rows(&vec![vec![0.3, -1.2, 4.0]; 50], None).unwrap();
        let v = avg_intra_segment_cosine(&pc, &[0; 50]).unwrap().unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_pair_scores_zero() {
        let pc = PointCloud::from_rows(&[vec![1.0, 0.0], vec![0.0, 2.0]], None).unwrap();
        let v = avg_intra_segment_cosine(&pc, &[0, 0]).unwrap().unwrap();
        assert!(v.abs() < 1e-12);
    }

    #[test]
    fn singletons_contribute_nothing() {
        let pc = PointCloud::from_rows(&[vec![1.0, 0.0], vec![0.0, 2.0]], None).unwrap();
        assert_eq!(avg_intra_segment_cosine(&pc, &[0, 1]).unwrap(), None);
    }

    #[test]
    fn zero_vectors_are_skipped() {
        let pc = PointCloud::from_rows(&[vec![1.0, 1.0], vec![0.0, 0.0], vec![2.0, 2.0]], None).unwrap();
        let v = avg_intra_segment_cosine(&pc, &[0, 0, 0]).unwrap().unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scalar_multiples_score_one_and_others_less() {
        let pc = PointCloud::from_rows(&[vec![1.0, 2.0], vec![3.0, 6.0], vec![0.5, 1.0]], None).unwrap();
        assert!((avg_intra_segment_cosine(&pc, &[0, 0, 0]).unwrap().unwrap() - 1.0).abs() < 1e-12);
        let pc = PointCloud::from_rows(&[vec![1.0, 2.0], vec![3.0, 6.1]], None).unwrap();
        assert!(avg_intra_segment_cosine(&pc, &[0, 0]).unwrap().unwrap() < 1.0);
    }

    proptest! {
        #[test]
        fn matches_pairwise_mean(seed in 0u64..1000, n in 2usize..40, segs in 1usize..5) {
            let mut rng = stream_rng(seed, 700, 0);
            let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
            let seg: Vec<usize> = (0..n).map(|_| rng.random_range(0..segs)).collect();
            let pc = PointCloud::from_rows(&rows, None).unwrap();
            let fast = avg_intra_segment_cosine(&pc, &seg).unwrap();
            let slow = brute_force(&pc, &seg);
            prop_assert_eq!(fast.is_some(), slow.is_some());
            if let (Some(a), Some(b)) = (fast, slow) {
                prop_assert!((a - b).abs() < 1e-10);
                prop_assert!((-1.0..=1.0).contains(&a));
            }
        }
    }

    #[test]
    fn disjoint_components_get_separate_segments() {
        let g = summary(4, &[(0, 1, 1.0), (2, 3, 1.0)]);
        let seg = pseudo_label(&g, 1);
        assert_ne!(seg[0], seg[2]);
        assert_eq!(seg[0], seg[1]);
    }

    #[test]
    fn single_node_is_one_segment() {
        assert_eq!(pseudo_label(&summary(1, &[]), 1), vec![0]);
    }

    #[test]
    fn edgeless_graph_gives_singletons() {
        let seg = pseudo_label(&summary(3, &[]), 1);
        assert_eq!(seg, vec![0, 1, 2]);
    }

    #[test]
    fn weak_bridge_splits_segments() {
        let mut edges = Vec::new();
        for (a, b) in [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)] {
            edges.push((a, b, 1.0));
        }
        edges.push((2, 3, 0.1));
        let g = summary(6, &edges);
        let seg = pseudo_label(&g, 3);
        assert_eq!(seg, vec![0, 0, 0, 1, 1, 1]);
        // direct check: split beats merge
        let w = g.weighted_graph();
        let split = crate::community::modularity(&w, &crate::graph::Partition::from_assignment(&seg, 0));
        let merged = crate::community::modularity(&w, &crate::graph::Partition::from_assignment(&[0; 6], 0));
        assert!(split > merged);
    }

    #[test]
    fn segments_cover_components() {
        for seed in 0..10 {
            let mut rng = stream_rng(seed, 701, 0);
            let edges: Vec<(usize, usize, f64)> = (0..15)
                .map(|_| (rng.random_range(0..20), rng.random_range(0..20), rng.random_range(0.1..1.0)))
                .filter(|&(a, b, _)| a < b)
                .collect();
            let g = summary(20, &edges);
            let segs = pseudo_label(&g, seed).into_iter().max().unwrap() + 1;
            assert!(segs >= g.component_count());
        }
    }
}
