//! Two-stage landmarking: a uniform sample with its k-NN graph augmented by
//! 1-witness edges, then a greedy cover of that graph by hop neighborhoods.

use rand::seq::{index, SliceRandom};
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::Result;
use crate::exec::{self, salt, stream_rng, Execution};
use crate::graph::{LandmarkCover, NeighborGraph};
use crate::knn::{graph_search, Metric};

/// `min(m_cap, ceil(n * fraction))`, at least 1.
pub fn sample_size(n: usize, m_cap: usize, fraction: f64) -> usize {
    let raw = n as f64 * fraction;
    // absorb representation error so that e.g. 9 * (1/3) stays 3
    let m = (raw - raw.abs() * 1e-12).ceil() as usize;
    m.clamp(1, n.max(1)).min(m_cap.max(1))
}

/// Uniform sample without replacement. Both returned lists are ascending and
/// together cover `0..n`.
pub fn sample_points(n: usize, m_cap: usize, fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let m = sample_size(n, m_cap, fraction);
    let mut rng = stream_rng(seed, salt::SAMPLE, 0);
    let mut sample = index::sample(&mut rng, n, m).into_vec();
    sample.sort_unstable();
    let mut in_sample = vec![false; n];
    for &s in &sample {
        in_sample[s] = true;
    }
    let complement = (0..n).filter(|&i| !in_sample[i]).collect();
    (sample, complement)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WitnessParams {
    pub metric: Metric,
    /// Brute force while `|sample| * |complement|` stays at or below this.
    pub exact_limit: usize,
    /// Candidate pool of the graph search used above the limit.
    pub ef: usize,
    pub seed: u64,
    pub execution: Execution,
}

impl Default for WitnessParams {
    fn default() -> Self {
        Self {
            metric: Metric::Euclidean,
            exact_limit: 50_000_000,
            ef: 32,
            seed: 42,
            execution: Execution::Parallel,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WitnessAugmentation {
    pub graph: NeighborGraph,
    /// Nearest sample node of each complement point, aligned with the input.
    pub nearest: Vec<usize>,
    pub edges_added: usize,
}

const SEARCH_ENTRIES: usize = 8;
const MAX_COMPONENT_ENTRIES: usize = 64;

/// Adds the edge `{p, q}` for every complement point whose two nearest sample
/// points are `p` and `q` (ties to the smaller sample id).
pub fn witness_augment(
    g: &NeighborGraph,
    pc: &PointCloud,
    complement: &[usize],
    params: WitnessParams,
) -> Result<WitnessAugmentation> {
    let m = g.node_count();
    if m < 2 {
        if !complement.is_empty() {
            log::warn!("only {m} sampled point(s); skipping witness augmentation");
        }
        return Ok(WitnessAugmentation {
            graph: g.clone(),
            nearest: vec![0; if m == 0 { 0 } else { complement.len() }],
            edges_added: 0,
        });
    }
    let metric = params.metric;
    let sample_row = |v: usize| pc.row(g.sample_row(v));
    let exact = m.saturating_mul(complement.len()) <= params.exact_limit;

    let component_entries: Vec<usize> = if exact {
        Vec::new()
    } else {
        let (count, labels) = g.components();
        if count <= MAX_COMPONENT_ENTRIES {
            let mut firsts = vec![usize::MAX; count];
            for (v, &c) in labels.iter().enumerate() {
                if firsts[c] == usize::MAX {
                    firsts[c] = v;
                }
            }
            firsts
        } else {
            Vec::new()
        }
    };

    let pairs: Vec<(u32, u32)> = exec::map_range(params.execution, complement.len(), |i| {
        let q = pc.row(complement[i]);
        let top = if exact {
            let mut best = [(f64::INFINITY, u32::MAX); 2];
            for v in 0..m {
                let cand = (metric.rank(q, sample_row(v)), v as u32);
                if cand < best[1] {
                    if cand < best[0] {
                        best[1] = best[0];
                        best[0] = cand;
                    } else {
                        best[1] = cand;
                    }
                }
            }
            best.to_vec()
        } else {
            let mut rng = stream_rng(params.seed, salt::WITNESS_ENTRY, i as u64);
            let mut entries = index::sample(&mut rng, m, SEARCH_ENTRIES.min(m)).into_vec();
            entries.extend_from_slice(&component_entries);
            graph_search(g, sample_row, metric, q, &entries, params.ef, 2)
        };
        (top[0].1, top[1].1)
    });

    let before = g.edge_count();
    let graph = g.with_extra_edges(pairs.iter().map(|&(p, q)| (p as usize, q as usize)))?;
    let edges_added = graph.edge_count() - before;
    let nearest = pairs.iter().map(|&(p, _)| p as usize).collect();
    Ok(WitnessAugmentation {
        graph,
        nearest,
        edges_added,
    })
}

/// Greedy landmark cover.
///
/// Nodes are visited in a seeded random order; every node not yet covered
/// becomes a landmark and claims all still-unclaimed nodes within `hops` hops.
/// Visiting a uniform random permutation and skipping covered nodes is the
/// same as repeatedly drawing uniformly from the uncovered set.
pub fn select_landmarks(g: &NeighborGraph, hops: usize, seed: u64) -> LandmarkCover {
    let n = g.node_count();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut stream_rng(seed, salt::LANDMARKS, 0));

    const UNASSIGNED: u32 = u32::MAX;
    let mut rev_neigh = vec![UNASSIGNED; n];
    let mut landmarks = Vec::new();
    let mut seen_stamp = vec![0u32; n];
    let mut frontier = Vec::new();
    let mut next = Vec::new();

    for &start in &order {
        if rev_neigh[start] != UNASSIGNED {
            continue;
        }
        let id = landmarks.len() as u32;
        landmarks.push(start);
        rev_neigh[start] = id;
        let stamp = id + 1;
        seen_stamp[start] = stamp;
        frontier.clear();
        frontier.push(start);
        for _ in 0..hops {
            next.clear();
            for &v in &frontier {
                for &u in g.neighbors(v) {
                    let u = u as usize;
                    if seen_stamp[u] == stamp {
                        continue;
                    }
                    seen_stamp[u] = stamp;
                    if rev_neigh[u] == UNASSIGNED {
                        rev_neigh[u] = id;
                    }
                    next.push(u);
                }
            }
            std::mem::swap(&mut frontier, &mut next);
            if frontier.is_empty() {
                break;
            }
        }
    }
    LandmarkCover::from_parts_unchecked(landmarks, rev_neigh)
}
