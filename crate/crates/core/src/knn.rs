//! k-nearest-neighbor search over the sampled points.
//!
//! [`exact_knn`] is a brute-force scan and doubles as the oracle for
//! [`nn_descent_knn`], an approximate neighbor-of-neighbor refinement that is
//! deterministic for a fixed seed at any thread count. Ties are broken by the
//! smaller point id everywhere.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::exec::{self, salt, stream_rng, Execution};
use crate::graph::NeighborGraph;

/// Below this many points NN-descent hands over to the exact scan.
pub const EXACT_CUTOFF: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    Euclidean,
    /// `1 - cos(a, b)`.
    Cosine,
}

impl Metric {
    /// Monotone proxy used for ranking (squared distance for Euclidean).
    #[inline]
    pub(crate) fn rank(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Metric::Euclidean => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum(),
            Metric::Cosine => {
                let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
                for (x, y) in a.iter().zip(b) {
                    dot += x * y;
                    na += x * x;
                    nb += y * y;
                }
                if na == 0.0 || nb == 0.0 {
                    1.0
                } else {
                    (1.0 - dot / (na.sqrt() * nb.sqrt())).max(0.0)
                }
            }
        }
    }

    #[inline]
    pub(crate) fn finish(self, rank: f64) -> f64 {
        match self {
            Metric::Euclidean => rank.sqrt(),
            Metric::Cosine => rank,
        }
    }

    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        self.finish(self.rank(a, b))
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "euclidean" => Ok(Metric::Euclidean),
            "cosine" => Ok(Metric::Cosine),
            other => Err(Error::Config(format!("unknown metric `{other}`"))),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Euclidean => "euclidean",
            Metric::Cosine => "cosine",
        })
    }
}

#[inline]
fn by_dist_then_id(a: &(f64, u32), b: &(f64, u32)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

/// Per-point neighbor lists, each ascending by `(distance, id)` and never
/// containing the point itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnResult {
    pub k: usize,
    pub neighbors: Vec<Vec<(u32, f64)>>,
}

impl KnnResult {
    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    pub fn ids(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.neighbors[i].iter().map(|&(j, _)| j as usize)
    }
}

fn clamp_k(k: usize, m: usize) -> Result<usize> {
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    let max = m.saturating_sub(1);
    if k > max {
        log::warn!("k = {k} is not below the point count {m}; clamping to {max}");
        return Ok(max);
    }
    Ok(k)
}

/// Exact k-NN by full scan.
pub fn exact_knn(points: &PointCloud, k: usize, metric: Metric, exec: Execution) -> Result<KnnResult> {
    let m = points.len();
    let k = clamp_k(k, m)?;
    let neighbors = exec::map_range(exec, m, |i| {
        let q = points.row(i);
        let mut cand: Vec<(f64, u32)> = (0..m)
            .filter(|&j| j != i)
            .map(|j| (metric.rank(q, points.row(j)), j as u32))
            .collect();
        if k < cand.len() {
            cand.select_nth_unstable_by(k, by_dist_then_id);
            cand.truncate(k);
        }
        cand.sort_unstable_by(by_dist_then_id);
        cand.into_iter().map(|(d, j)| (j, metric.finish(d))).collect()
    });
    Ok(KnnResult { k, neighbors })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NnDescentParams {
    pub iters: usize,
    /// Fraction of each list's new entries joined per round.
    pub sample_rate: f64,
    /// Stop once fewer than `delta * M * k` list slots change in a round.
    pub delta: f64,
    pub seed: u64,
}

impl Default for NnDescentParams {
    fn default() -> Self {
        Self {
            iters: 10,
            sample_rate: 0.5,
            delta: 0.001,
            seed: 42,
        }
    }
}

#[derive(Clone)]
struct NeighborList {
    // (rank distance, id, not yet joined)
    items: Vec<(f64, u32, bool)>,
}

impl NeighborList {
    fn worst(&self, k: usize) -> f64 {
        if self.items.len() < k {
            f64::INFINITY
        } else {
            self.items[k - 1].0
        }
    }

    fn insert(&mut self, d: f64, id: u32, k: usize) -> bool {
        if self.items.len() >= k && by_dist_then_id(&(d, id), &(self.items[k - 1].0, self.items[k - 1].1)) != Ordering::Less {
            return false;
        }
        if self.items.iter().any(|&(_, j, _)| j == id) {
            return false;
        }
        let pos = self
            .items
            .partition_point(|&(dd, j, _)| by_dist_then_id(&(dd, j), &(d, id)) == Ordering::Less);
        self.items.insert(pos, (d, id, true));
        self.items.truncate(k);
        true
    }
}

/// `(new, old)` join candidates of one point.
type Candidates = (Vec<u32>, Vec<u32>);

/// Points whose proposals are generated and applied together. Fixed, so the
/// result does not depend on the thread count.
const JOIN_CHUNK: usize = 8192;

/// Approximate k-NN by NN-descent.
///
/// Each round samples up to `ceil(sample_rate * k)` new entries per list,
/// adds equally capped reverse lists, and runs the local join. Proposals are
/// collected per chunk of points and merged into each list in
/// `(distance, id)` order, so the outcome is order-independent.
pub fn nn_descent_knn(
    points: &PointCloud,
    k: usize,
    params: NnDescentParams,
    metric: Metric,
    exec: Execution,
) -> Result<KnnResult> {
    let m = points.len();
    if m <= EXACT_CUTOFF {
        return exact_knn(points, k, metric, exec);
    }
    let k = clamp_k(k, m)?;
    nn_descent_inner(points, k, params, metric, exec)
}

pub(crate) fn nn_descent_inner(
    points: &PointCloud,
    k: usize,
    params: NnDescentParams,
    metric: Metric,
    exec: Execution,
) -> Result<KnnResult> {
    let m = points.len();
    let sample = ((params.sample_rate * k as f64).ceil() as usize).max(1);

    let mut lists: Vec<NeighborList> = exec::map_range(exec, m, |i| {
        let mut rng = stream_rng(params.seed, salt::NN_DESCENT_INIT, i as u64);
        let mut items: Vec<(f64, u32, bool)> = index::sample(&mut rng, m - 1, k)
            .into_iter()
            .map(|j| if j >= i { j + 1 } else { j })
            .map(|j| (metric.rank(points.row(i), points.row(j)), j as u32, true))
            .collect();
        items.sort_unstable_by(|a, b| by_dist_then_id(&(a.0, a.1), &(b.0, b.1)));
        NeighborList { items }
    });

    for iter in 0..params.iters {
        // forward candidates; sampled new entries are flagged as joined
        let mut forward: Vec<Candidates> = vec![(Vec::new(), Vec::new()); m];
        let seed = params.seed;
        {
            let mut zipped: Vec<(&mut NeighborList, &mut Candidates)> =
                lists.iter_mut().zip(forward.iter_mut()).collect();
            exec::for_each_mut(exec, &mut zipped, |i, (list, (new, old))| {
                let mut fresh: Vec<usize> = (0..list.items.len()).filter(|&p| list.items[p].2).collect();
                if fresh.len() > sample {
                    let mut rng = stream_rng(seed, salt::NN_DESCENT_SAMPLE, (iter * m + i) as u64);
                    fresh.shuffle(&mut rng);
                    fresh.truncate(sample);
                    fresh.sort_unstable();
                }
                for &p in &fresh {
                    list.items[p].2 = false;
                    new.push(list.items[p].1);
                }
                for (p, item) in list.items.iter().enumerate() {
                    if !item.2 && fresh.binary_search(&p).is_err() {
                        old.push(item.1);
                    }
                }
            });
        }

        let mut rev: Vec<Candidates> = vec![(Vec::new(), Vec::new()); m];
        for (i, (new, old)) in forward.iter().enumerate() {
            for &j in new {
                rev[j as usize].0.push(i as u32);
            }
            for &j in old {
                rev[j as usize].1.push(i as u32);
            }
        }
        let mut joined: Vec<Candidates> = forward;
        {
            let mut zipped: Vec<(&mut Candidates, Candidates)> =
                joined.iter_mut().zip(rev).collect();
            exec::for_each_mut(exec, &mut zipped, |i, (cur, (rnew, rold))| {
                let mut rng = stream_rng(seed, salt::NN_DESCENT_REVERSE, (iter * m + i) as u64);
                for (mut extra, dst) in [(std::mem::take(rnew), &mut cur.0), (std::mem::take(rold), &mut cur.1)] {
                    if extra.len() > sample {
                        extra.shuffle(&mut rng);
                        extra.truncate(sample);
                    }
                    dst.extend(extra);
                    dst.sort_unstable();
                    dst.dedup();
                }
                let new = cur.0.clone();
                cur.1.retain(|x| new.binary_search(x).is_err());
            });
        }

        let mut updates = 0usize;
        let mut start = 0;
        while start < m {
            let end = (start + JOIN_CHUNK).min(m);
            let lists_ref = &lists;
            let joined_ref = &joined;
            let per_node: Vec<Vec<(u32, f64, u32)>> = exec::map_range(exec, end - start, |off| {
                let (new, old) = &joined_ref[start + off];
                let mut props = Vec::new();
                let push = |a: u32, b: u32, props: &mut Vec<(u32, f64, u32)>| {
                    let d = metric.rank(points.row(a as usize), points.row(b as usize));
                    if d <= lists_ref[a as usize].worst(k) {
                        props.push((a, d, b));
                    }
                    if d <= lists_ref[b as usize].worst(k) {
                        props.push((b, d, a));
                    }
                };
                for (x, &a) in new.iter().enumerate() {
                    for &b in &new[x + 1..] {
                        push(a, b, &mut props);
                    }
                    for &b in old {
                        if a != b {
                            push(a, b, &mut props);
                        }
                    }
                }
                props
            });
            let mut props: Vec<(u32, f64, u32)> = per_node.into_iter().flatten().collect();
            exec::sort_unstable_by(exec, &mut props, |x, y| {
                x.0.cmp(&y.0).then(x.1.total_cmp(&y.1)).then(x.2.cmp(&y.2))
            });
            props.dedup_by(|x, y| x.0 == y.0 && x.2 == y.2);

            let mut bounds = vec![0u32; m + 1];
            for &(t, _, _) in &props {
                bounds[t as usize + 1] += 1;
            }
            for i in 0..m {
                bounds[i + 1] += bounds[i];
            }
            let props_ref = &props;
            let bounds_ref = &bounds;
            let changed: Vec<usize> = {
                let mut counts = vec![0usize; m];
                let mut zipped: Vec<(&mut NeighborList, &mut usize)> = lists.iter_mut().zip(counts.iter_mut()).collect();
                exec::for_each_mut(exec, &mut zipped, |t, (list, count)| {
                    let (lo, hi) = (bounds_ref[t] as usize, bounds_ref[t + 1] as usize);
                    for &(_, d, c) in &props_ref[lo..hi] {
                        if list.insert(d, c, k) {
                            **count += 1;
                        }
                    }
                });
                counts
            };
            updates += changed.iter().sum::<usize>();
            start = end;
        }
        log::debug!("nn-descent round {iter}: {updates} updates");
        if (updates as f64) < params.delta * (m * k) as f64 {
            break;
        }
    }

    let neighbors = lists
        .into_iter()
        .map(|l| l.items.into_iter().map(|(d, j, _)| (j, metric.finish(d))).collect())
        .collect();
    Ok(KnnResult { k, neighbors })
}

/// Fraction of exact neighbors recovered by `approx`.
pub fn recall(approx: &KnnResult, exact: &KnnResult) -> f64 {
    let mut hit = 0usize;
    let mut total = 0usize;
    for (a, e) in approx.neighbors.iter().zip(&exact.neighbors) {
        let want: HashSet<u32> = e.iter().map(|&(j, _)| j).collect();
        hit += a.iter().filter(|(j, _)| want.contains(j)).count();
        total += want.len();
    }
    if total == 0 {
        1.0
    } else {
        hit as f64 / total as f64
    }
}

/// Union-symmetrized neighbor graph: `i ~ j` if either lists the other.
pub fn knn_to_graph(r: &KnnResult) -> NeighborGraph {
    let edges = r
        .neighbors
        .iter()
        .enumerate()
        .flat_map(|(i, list)| list.iter().map(move |&(j, _)| (i, j as usize)));
    NeighborGraph::from_edges(r.len(), edges).expect("knn ids are in range")
}

#[derive(PartialEq)]
struct Entry(f64, u32);

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        by_dist_then_id(&(self.0, self.1), &(other.0, other.1))
    }
}

/// Best-first search over `graph` (node `v` has coordinates `row(v)`) for
/// the `want` nearest nodes to `query`. Returns `(rank distance, node)` pairs
/// ascending.
pub(crate) fn graph_search<'a, R>(
    graph: &NeighborGraph,
    row: R,
    metric: Metric,
    query: &[f64],
    entries: &[usize],
    ef: usize,
    want: usize,
) -> Vec<(f64, u32)>
where
    R: Fn(usize) -> &'a [f64],
{
    let ef = ef.max(want);
    let mut visited: HashSet<u32> = HashSet::with_capacity(ef * 8);
    let mut frontier: BinaryHeap<std::cmp::Reverse<Entry>> = BinaryHeap::new();
    let mut best: BinaryHeap<Entry> = BinaryHeap::new();
    for &e in entries {
        if visited.insert(e as u32) {
            let d = metric.rank(query, row(e));
            frontier.push(std::cmp::Reverse(Entry(d, e as u32)));
            best.push(Entry(d, e as u32));
            if best.len() > ef {
                best.pop();
            }
        }
    }
    while let Some(std::cmp::Reverse(Entry(d, v))) = frontier.pop() {
        if best.len() >= ef && best.peek().is_some_and(|w| d > w.0) {
            break;
        }
        for &n in graph.neighbors(v as usize) {
            if !visited.insert(n) {
                continue;
            }
            let dn = metric.rank(query, row(n as usize));
            let admit = best.len() < ef || best.peek().is_some_and(|w| Entry(dn, n) < *w);
            if admit {
                frontier.push(std::cmp::Reverse(Entry(dn, n)));
                best.push(Entry(dn, n));
                if best.len() > ef {
                    best.pop();
                }
            }
        }
    }
    let mut out: Vec<(f64, u32)> = best.into_iter().map(|Entry(d, n)| (d, n)).collect();
    out.sort_unstable_by(by_dist_then_id);
    out.truncate(want);
    out
}
