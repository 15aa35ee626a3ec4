//! Newman-Girvan modularity and Louvain community detection.
//!
//! Conventions: `m` counts every edge and self-loop once; a self-loop of
//! weight `w` adds `2w` both to its node's degree and to its community's
//! internal weight. With these, the modularity of a partition is unchanged
//! when the graph is collapsed along it.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::exec::{salt, stream_rng};
use crate::graph::{Partition, WeightedGraph};
use crate::summary::{InducedGraph, NodeMeta};

/// `Q = sum_c [in_c / 2m - (tot_c / 2m)^2]`. Defined as 0 when `m = 0`.
pub fn modularity(g: &WeightedGraph, part: &Partition) -> f64 {
    assert_eq!(g.node_count(), part.node_count(), "partition does not cover the graph");
    let m = g.total_weight();
    if m <= 0.0 {
        log::warn!("modularity of a graph without weight is taken as 0");
        return 0.0;
    }
    let c = part.community_count();
    let mut inside = vec![0.0; c];
    let mut tot = vec![0.0; c];
    for v in 0..g.node_count() {
        let cv = part.community_of(v);
        tot[cv] += g.degree(v);
        inside[cv] += 2.0 * g.self_weight(v);
    }
    for (a, b, w) in g.edges() {
        if part.community_of(a) == part.community_of(b) {
            inside[part.community_of(a)] += 2.0 * w;
        }
    }
    let two_m = 2.0 * m;
    inside
        .iter()
        .zip(&tot)
        .map(|(i, t)| i / two_m - (t / two_m) * (t / two_m))
        .sum()
}

/// Partitions from finest (level 0) to coarsest, each over the input nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    pub levels: Vec<Partition>,
    /// Modularity of each level on the input graph.
    pub modularity: Vec<f64>,
}

impl Dendrogram {
    pub fn level(&self, p: usize) -> Option<&Partition> {
        self.levels.get(p)
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }
}

const MAX_PASSES: usize = 1000;

/// Local-move phase on one graph. `order` yields the sweep order for each
/// pass. Returns the community of every node, or `None` if nothing moved.
pub(crate) fn local_moves(g: &WeightedGraph, order: &mut dyn FnMut(usize) -> Vec<usize>) -> Option<Vec<usize>> {
    let n = g.node_count();
    let degree: Vec<f64> = (0..n).map(|v| g.degree(v)).collect();
    let two_m: f64 = degree.iter().sum();
    if two_m <= 0.0 {
        return None;
    }
    let tol = 1e-12 * two_m;
    let mut comm: Vec<usize> = (0..n).collect();
    let mut tot = degree.clone();
    let mut link = vec![0.0; n];
    let mut touched: Vec<usize> = Vec::new();
    let mut is_touched = vec![false; n];
    let mut any_move = false;

    for pass in 0..MAX_PASSES {
        let mut moved = false;
        for v in order(pass) {
            let kv = degree[v];
            let home = comm[v];
            for &(u, w) in g.neighbors(v) {
                let c = comm[u as usize];
                if !is_touched[c] {
                    is_touched[c] = true;
                    touched.push(c);
                }
                link[c] += w;
            }
            tot[home] -= kv;
            let stay = link[home] - tot[home] * kv / two_m;
            touched.sort_unstable();
            let mut best: Option<(usize, f64)> = None;
            for &c in &touched {
                if c == home {
                    continue;
                }
                let gain = link[c] - tot[c] * kv / two_m;
                if best.is_none_or(|(_, b)| gain > b) {
                    best = Some((c, gain));
                }
            }
            let target = match best {
                Some((c, gain)) if gain > stay + tol => c,
                _ => home,
            };
            tot[target] += kv;
            if target != home {
                comm[v] = target;
                moved = true;
            }
            for &c in &touched {
                link[c] = 0.0;
                is_touched[c] = false;
            }
            touched.clear();
        }
        if !moved {
            break;
        }
        any_move = true;
    }
    any_move.then_some(comm)
}

/// Collapses `g` along `part`: intra-community weight (including existing
/// self-loops) becomes the community's self-loop.
pub fn aggregate(g: &WeightedGraph, part: &Partition) -> WeightedGraph {
    let self_terms = (0..g.node_count()).map(|v| {
        let c = part.community_of(v);
        (c, c, g.self_weight(v))
    });
    let edge_terms = g
        .edges()
        .map(|(a, b, w)| (part.community_of(a), part.community_of(b), w));
    WeightedGraph::from_edges(part.community_count(), self_terms.chain(edge_terms))
        .expect("community ids are in range")
}

/// Louvain modularity optimization.
///
/// Each level sweeps nodes in a seeded random order, moving a node to the
/// neighboring community with the largest gain when that beats staying
/// (ties go to the smallest community id), then aggregates. One partition is
/// recorded per aggregation round. A graph where no move helps yields a
/// single level of singletons.
pub fn louvain(g: &WeightedGraph, seed: u64) -> Dendrogram {
    let n = g.node_count();
    let mut levels: Vec<Partition> = Vec::new();
    let mut current = g.clone();
    let mut node_of: Vec<usize> = (0..n).collect();

    loop {
        let level = levels.len();
        let mut rng = stream_rng(seed, salt::LOUVAIN, level as u64);
        let size = current.node_count();
        let mut shuffled = move |_pass: usize| {
            let mut o: Vec<usize> = (0..size).collect();
            o.shuffle(&mut rng);
            o
        };
        let Some(comm) = local_moves(&current, &mut shuffled) else {
            break;
        };
        let local = Partition::from_assignment(&comm, level);
        let composed: Vec<usize> = node_of.iter().map(|&x| local.community_of(x)).collect();
        let part = Partition::from_assignment(&composed, level);
        debug_assert_eq!(part.community_count(), local.community_count());
        current = aggregate(&current, &local);
        node_of = composed;
        levels.push(part);
        if current.node_count() == 1 {
            break;
        }
    }
    if levels.is_empty() {
        levels.push(Partition::singletons(n));
    }
    let modularity = levels.iter().map(|p| modularity(g, p)).collect();
    Dendrogram { levels, modularity }
}

/// Quotient graph with per-community metadata roll-up. `landmark_meta[v]` is
/// the roll-up of node `v` of `g`.
pub fn induce(g: &WeightedGraph, part: &Partition, landmark_meta: &[NodeMeta]) -> InducedGraph {
    assert_eq!(landmark_meta.len(), g.node_count(), "one metadata entry per node");
    let graph = aggregate(g, part);
    let meta = part
        .members()
        .into_iter()
        .map(|members| NodeMeta::merge(members.into_iter().map(|v| (v, landmark_meta[v].clone()))))
        .collect();
    InducedGraph { graph, meta }
}
