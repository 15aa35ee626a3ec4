//! Modularity-based tearing of the induced graph.
//!
//! Every induced edge is scored by its additive share of Newman modularity,
//! `dq = w / 2m - d_u d_v / (2m)^2`. Phase one pops edges in descending `dq`
//! and keeps those that join two components until the component count of
//! the induced graph is reached. Phase two revisits the discarded edges, again
//! in descending `dq`, and restores an edge when it plus the minimum-hop path
//! between its endpoints in the current graph sums to at least `c`. A
//! restored edge is immediately usable by later paths.

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::community::modularity;
use crate::config::TearingMode;
use crate::error::{Error, Result};
use crate::graph::{Partition, UnionFind, WeightedGraph};
use crate::summary::{EdgePhase, InducedGraph, SummaryEdge, SummaryGraph, SummaryNode};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeScore {
    pub source: usize,
    pub target: usize,
    pub weight: f64,
    pub modularity: f64,
}

/// Scores for every edge of an induced graph, in canonical `(source, target)` order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeModularityTable {
    pub edges: Vec<EdgeScore>,
    pub total_weight: f64,
}

impl EdgeModularityTable {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Edge indices by descending modularity, ties by `(source, target)`.
    pub fn descending(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.edges.len()).collect();
        idx.sort_by(|&a, &b| {
            let (ea, eb) = (&self.edges[a], &self.edges[b]);
            eb.modularity
                .total_cmp(&ea.modularity)
                .then((ea.source, ea.target).cmp(&(eb.source, eb.target)))
        });
        idx
    }
}

/// Weighted degrees include self-loops (counted twice); `m` includes them once.
pub fn edge_modularity(g: &WeightedGraph) -> Result<EdgeModularityTable> {
    let m = g.total_weight();
    if m <= 0.0 {
        return Err(Error::InvalidInput("induced graph has no weight to tear".into()));
    }
    let two_m = 2.0 * m;
    let degree: Vec<f64> = (0..g.node_count()).map(|v| g.degree(v)).collect();
    let edges = g
        .edges()
        .map(|(a, b, w)| EdgeScore {
            source: a,
            target: b,
            weight: w,
            modularity: w / two_m - degree[a] * degree[b] / (two_m * two_m),
        })
        .collect();
    Ok(EdgeModularityTable { edges, total_weight: m })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpanningResult {
    /// Accepted edge indices, in acceptance order.
    pub spanning: Vec<usize>,
    /// Everything else, ascending by index.
    pub discarded: Vec<usize>,
    pub components: usize,
}

pub fn spanning_phase(node_count: usize, table: &EdgeModularityTable) -> SpanningResult {
    let mut all = UnionFind::new(node_count);
    for e in &table.edges {
        all.union(e.source, e.target);
    }
    let components = all.set_count();

    let mut uf = UnionFind::new(node_count);
    let mut accepted = vec![false; table.len()];
    let mut spanning = Vec::new();
    for idx in table.descending() {
        if uf.set_count() == components {
            break;
        }
        let e = &table.edges[idx];
        if uf.union(e.source, e.target) {
            accepted[idx] = true;
            spanning.push(idx);
        }
    }
    let discarded = (0..table.len()).filter(|&i| !accepted[i]).collect();
    SpanningResult {
        spanning,
        discarded,
        components,
    }
}

/// Minimum-hop path `from -> to`, expanding neighbors in ascending id order.
/// Returns the path's nodes, or `None` if `to` is unreachable.
fn bfs_path(adj: &[Vec<usize>], from: usize, to: usize) -> Option<Vec<usize>> {
    let mut parent = vec![usize::MAX; adj.len()];
    parent[from] = from;
    let mut queue = VecDeque::from([from]);
    while let Some(v) = queue.pop_front() {
        if v == to {
            let mut path = vec![to];
            let mut cur = to;
            while cur != from {
                cur = parent[cur];
                path.push(cur);
            }
            path.reverse();
            return Some(path);
        }
        for &u in &adj[v] {
            if parent[u] == usize::MAX {
                parent[u] = v;
                queue.push_back(u);
            }
        }
    }
    None
}

/// Restores discarded edges that close loops with modularity sum `>= c`.
/// Returns restored edge indices in the order they were added.
pub fn reinstated_edges(
    node_count: usize,
    table: &EdgeModularityTable,
    spanning: &SpanningResult,
    c: f64,
) -> Result<Vec<usize>> {
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); node_count];
    let mut lookup: HashMap<(usize, usize), usize> = HashMap::new();
    let add = |adj: &mut Vec<Vec<usize>>, lookup: &mut HashMap<(usize, usize), usize>, idx: usize| {
        let e = &table.edges[idx];
        for (x, y) in [(e.source, e.target), (e.target, e.source)] {
            let pos = adj[x].partition_point(|&z| z < y);
            adj[x].insert(pos, y);
        }
        lookup.insert((e.source, e.target), idx);
    };
    for &idx in &spanning.spanning {
        add(&mut adj, &mut lookup, idx);
    }

    let mut order = spanning.discarded.clone();
    order.sort_by(|&a, &b| {
        let (ea, eb) = (&table.edges[a], &table.edges[b]);
        eb.modularity
            .total_cmp(&ea.modularity)
            .then((ea.source, ea.target).cmp(&(eb.source, eb.target)))
    });

    let mut restored = Vec::new();
    for idx in order {
        let e = table.edges[idx];
        let path = bfs_path(&adj, e.source, e.target).ok_or_else(|| {
            Error::Internal(format!(
                "discarded edge ({}, {}) joins different components",
                e.source, e.target
            ))
        })?;
        let mut sum = e.modularity;
        for hop in path.windows(2) {
            let key = (hop[0].min(hop[1]), hop[0].max(hop[1]));
            sum += table.edges[lookup[&key]].modularity;
        }
        if sum >= c {
            add(&mut adj, &mut lookup, idx);
            restored.push(idx);
        }
    }
    Ok(restored)
}

/// Runs the second phase and assembles the summary graph.
pub fn reintroduce_loops(
    ig: &InducedGraph,
    table: &EdgeModularityTable,
    spanning: &SpanningResult,
    c: f64,
) -> Result<SummaryGraph> {
    let restored = reinstated_edges(ig.node_count(), table, spanning, c)?;
    let mut edges: Vec<SummaryEdge> = spanning
        .spanning
        .iter()
        .map(|&i| (i, EdgePhase::Spanning))
        .chain(restored.iter().map(|&i| (i, EdgePhase::Reintroduced)))
        .map(|(i, phase)| {
            let e = table.edges[i];
            SummaryEdge {
                source: e.source,
                target: e.target,
                weight: e.weight,
                modularity: e.modularity,
                phase,
            }
        })
        .collect();
    edges.sort_by_key(|e| (e.source, e.target));
    Ok(SummaryGraph {
        nodes: summary_nodes(ig),
        edges,
        landmark_rows: Vec::new(),
        point_assignment: Vec::new(),
    })
}

pub(crate) fn summary_nodes(ig: &InducedGraph) -> Vec<SummaryNode> {
    ig.meta
        .iter()
        .enumerate()
        .map(|(id, meta)| SummaryNode {
            id,
            landmarks: meta.landmarks.clone(),
            point_count: meta.point_count,
            self_weight: ig.graph.self_weight(id),
            label_histogram: meta.label_histogram.clone(),
            dominant_label: meta.dominant_label(),
        })
        .collect()
}

/// Both phases. A graph without any weight comes back edgeless.
pub fn tear(ig: &InducedGraph, c: f64) -> Result<SummaryGraph> {
    if ig.graph.total_weight() <= 0.0 {
        log::warn!("induced graph has no weight; returning it without edges");
        return Ok(SummaryGraph {
            nodes: summary_nodes(ig),
            edges: Vec::new(),
            landmark_rows: Vec::new(),
            point_assignment: Vec::new(),
        });
    }
    let table = edge_modularity(&ig.graph)?;
    let spanning = spanning_phase(ig.node_count(), &table);
    reintroduce_loops(ig, &table, &spanning, c)
}

/// `2 ln q`, or `-inf` (restore every loop) when `q <= 0`.
pub fn threshold_from_modularity(q: f64) -> f64 {
    if q > 0.0 {
        2.0 * q.ln()
    } else {
        log::warn!("modularity {q} is not positive; restoring every loop");
        f64::NEG_INFINITY
    }
}

/// Threshold for the partition's modularity on the landmark graph.
pub fn default_threshold(landmark_graph: &WeightedGraph, part: &Partition) -> f64 {
    threshold_from_modularity(modularity(landmark_graph, part))
}

pub fn resolve_threshold(mode: TearingMode, q: f64) -> f64 {
    match mode {
        TearingMode::LogModularity => threshold_from_modularity(q),
        TearingMode::Fixed(c) => c,
        TearingMode::All => f64::NEG_INFINITY,
        TearingMode::None => f64::INFINITY,
    }
}
