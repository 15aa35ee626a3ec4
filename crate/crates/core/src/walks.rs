//! Landmark graph weighting from random-walk endpoint counts.
//!
//! From every landmark `beta` walks of length drawn uniformly from
//! `[min_len, max_len]` run on the neighbor graph. Endpoint `y` is credited to
//! the landmark covering it, giving counts `n_ij`. Rows become transition
//! probabilities `a_ij = n_ij / sum_k n_ik` (zero where `n_ij < th`) and the
//! landmark graph weight is the probabilistic union
//! `w_ij = a_ij + a_ji - a_ij * a_ji`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, salt, stream_rng, Execution};
use crate::graph::{LandmarkCover, NeighborGraph, WeightedGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkParams {
    pub beta: usize,
    pub min_len: usize,
    pub max_len: usize,
    pub seed: u64,
    pub execution: Execution,
}

impl Default for WalkParams {
    fn default() -> Self {
        Self {
            beta: 1000,
            min_len: 25,
            max_len: 50,
            seed: 42,
            execution: Execution::Parallel,
        }
    }
}

/// Sparse walk endpoint counts between landmarks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkCountMatrix {
    /// Off-diagonal `(j, n_ij)` per landmark row, sorted by `j`.
    pub rows: Vec<Vec<(u32, u32)>>,
    /// Walks that ended in the starting landmark's own cell (`n_ii`).
    pub self_counts: Vec<u32>,
    /// Walks started per landmark.
    pub row_totals: Vec<u64>,
}

impl WalkCountMatrix {
    pub fn landmark_count(&self) -> usize {
        self.rows.len()
    }

    pub fn count(&self, i: usize, j: usize) -> u32 {
        if i == j {
            return self.self_counts[i];
        }
        self.rows[i]
            .binary_search_by_key(&(j as u32), |&(c, _)| c)
            .map_or(0, |p| self.rows[i][p].1)
    }

    pub fn total_walks(&self) -> u64 {
        self.row_totals.iter().sum()
    }
}

/// Runs `beta` walks from every landmark.
///
/// Each landmark draws from its own RNG stream, so counts do not depend on
/// the thread count. A walk stops early on a node without neighbors.
pub fn run_walks(g: &NeighborGraph, cover: &LandmarkCover, params: WalkParams) -> Result<WalkCountMatrix> {
    if params.beta == 0 {
        return Err(Error::Config("beta must be at least 1".into()));
    }
    if params.min_len == 0 || params.min_len > params.max_len {
        return Err(Error::Config(format!(
            "walk length range [{}, {}] is empty",
            params.min_len, params.max_len
        )));
    }
    if cover.node_count() != g.node_count() {
        return Err(Error::InvalidInput("landmark cover does not match the graph".into()));
    }
    let landmarks = cover.landmarks();
    let rows: Vec<(Vec<(u32, u32)>, u32)> = exec::map_range(params.execution, landmarks.len(), |i| {
        let mut rng = stream_rng(params.seed, salt::WALKS, i as u64);
        let mut ends: Vec<u32> = Vec::with_capacity(params.beta);
        for _ in 0..params.beta {
            let len = rng.random_range(params.min_len..=params.max_len);
            let mut node = landmarks[i];
            for _ in 0..len {
                let nbrs = g.neighbors(node);
                if nbrs.is_empty() {
                    break;
                }
                node = nbrs[rng.random_range(0..nbrs.len())] as usize;
            }
            ends.push(cover.rev_neigh()[node]);
        }
        ends.sort_unstable();
        let mut row: Vec<(u32, u32)> = Vec::new();
        let mut own = 0;
        for j in ends {
            if j as usize == i {
                own += 1;
            } else {
                match row.last_mut() {
                    Some((last, c)) if *last == j => *c += 1,
                    _ => row.push((j, 1)),
                }
            }
        }
        (row, own)
    });
    let (rows, self_counts) = rows.into_iter().unzip();
    Ok(WalkCountMatrix {
        rows,
        self_counts,
        row_totals: vec![params.beta as u64; landmarks.len()],
    })
}

/// Sparse row-oriented matrix with `(column, value)` rows sorted by column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseMatrix {
    pub rows: Vec<Vec<(u32, f64)>>,
}

impl SparseMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i]
            .binary_search_by_key(&(j as u32), |&(c, _)| c)
            .map_or(0.0, |p| self.rows[i][p].1)
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.rows[i].iter().map(|&(_, v)| v).sum()
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }
}

/// Thresholded row normalization.
///
/// The denominator is the row's raw count total over all other landmarks,
/// taken before thresholding; self-transitions are excluded unless
/// `retain_self` is set, in which case `n_ii` joins the denominator (the
/// diagonal itself never becomes an edge). A row without counts stays zero.
pub fn transition_matrix(n: &WalkCountMatrix, th: u32, retain_self: bool) -> SparseMatrix {
    let rows = n
        .rows
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut total: u64 = row.iter().map(|&(_, c)| u64::from(c)).sum();
            if retain_self {
                total += u64::from(n.self_counts[i]);
            }
            if total == 0 {
                return Vec::new();
            }
            row.iter()
                .filter(|&&(_, c)| c >= th)
                .map(|&(j, c)| (j, f64::from(c) / total as f64))
                .collect()
        })
        .collect();
    SparseMatrix { rows }
}

/// `W = A + A^T - A o A^T` with a zero diagonal. Each unordered pair is
/// evaluated once, so `W` is exactly symmetric.
pub fn symmetrize(a: &SparseMatrix) -> WeightedGraph {
    let n = a.rows.len();
    let mut entries: Vec<(u32, u32, f64, f64)> = Vec::with_capacity(a.nnz());
    for (i, row) in a.rows.iter().enumerate() {
        for &(j, v) in row {
            let (i32_, j32) = (i as u32, j);
            match i32_.cmp(&j32) {
                std::cmp::Ordering::Less => entries.push((i32_, j32, v, 0.0)),
                std::cmp::Ordering::Greater => entries.push((j32, i32_, 0.0, v)),
                std::cmp::Ordering::Equal => {}
            }
        }
    }
    entries.sort_unstable_by_key(|x| (x.0, x.1));
    let mut adjacency = vec![Vec::new(); n];
    let mut k = 0;
    while k < entries.len() {
        let (i, j, mut fwd, mut back) = entries[k];
        let mut l = k + 1;
        while l < entries.len() && entries[l].0 == i && entries[l].1 == j {
            fwd += entries[l].2;
            back += entries[l].3;
            l += 1;
        }
        let w = fwd + back - fwd * back;
        if w > 0.0 {
            adjacency[i as usize].push((j, w));
            adjacency[j as usize].push((i, w));
        }
        k = l;
    }
    for list in &mut adjacency {
        list.sort_unstable_by_key(|&(c, _)| c);
    }
    WeightedGraph::from_adjacency_unchecked(adjacency, vec![0.0; n])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn counts(rows: Vec<Vec<(u32, u32)>>) -> WalkCountMatrix {
        let n = rows.len();
        WalkCountMatrix {
            rows,
            self_counts: vec![0; n],
            row_totals: vec![10; n],
        }
    }

    #[test]
    fn threshold_uses_raw_row_total() {
        let a = transition_matrix(&counts(vec![vec![(1, 8), (2, 2)], vec![], vec![]]), 3, false);
        assert_eq!(a.get(0, 1), 0.8);
        assert_eq!(a.get(0, 2), 0.0);
    }

    #[test]
    fn zero_threshold_is_row_normalization() {
        let a = transition_matrix(&counts(vec![vec![(1, 3), (2, 1)], vec![(0, 5)], vec![]]), 0, false);
        assert_eq!(a.get(0, 1), 0.75);
        assert_eq!(a.get(0, 2), 0.25);
        assert_eq!(a.get(1, 0), 1.0);
        assert_eq!(a.row_sum(2), 0.0);
    }

    #[test]
    fn threshold_can_remove_everything() {
        let a = transition_matrix(&counts(vec![vec![(1, 1)], vec![(0, 1)]]), 2, false);
        assert_eq!(a.nnz(), 0);
    }

    #[test]
    fn retained_self_transitions_dilute_rows() {
        let mut n = counts(vec![vec![(1, 5)], vec![]]);
        n.self_counts[0] = 5;
        assert_eq!(transition_matrix(&n, 0, false).get(0, 1), 1.0);
        assert_eq!(transition_matrix(&n, 0, true).get(0, 1), 0.5);
    }

    #[test]
    fn union_formula() {
        let a = SparseMatrix {
            rows: vec![vec![(1, 0.5)], vec![(0, 0.2)]],
        };
        let w = symmetrize(&a);
        assert!((w.weight(0, 1) - 0.6).abs() < 1e-15);
        assert_eq!(w.weight(0, 1), w.weight(1, 0));
    }

    #[test]
    fn union_saturates_and_vanishes() {
        let a = SparseMatrix {
            rows: vec![vec![(1, 1.0)], vec![(0, 1.0)]],
        };
        assert_eq!(symmetrize(&a).weight(0, 1), 1.0);
        let z = SparseMatrix {
            rows: vec![vec![], vec![]],
        };
        assert_eq!(symmetrize(&z).edge_count(), 0);
    }

    #[test]
    fn single_landmark_only_self_transitions() {
        let g = NeighborGraph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let cover = LandmarkCover::new(vec![1], vec![0, 0, 0]).unwrap();
        let n = run_walks(&g, &cover, WalkParams::default()).unwrap();
        assert!(n.rows[0].is_empty());
        assert_eq!(n.self_counts[0], 1000);
        assert_eq!(symmetrize(&transition_matrix(&n, 2, false)).edge_count(), 0);
    }

    #[test]
    fn isolated_landmark_stays_home() {
        let g = NeighborGraph::from_edges(3, [(1, 2)]).unwrap();
        let cover = LandmarkCover::new(vec![0, 1], vec![0, 1, 1]).unwrap();
        let n = run_walks(&g, &cover, WalkParams { beta: 50, ..Default::default() }).unwrap();
        assert_eq!(n.self_counts[0], 50);
        assert!(n.rows[0].is_empty());
        assert_eq!(n.count(1, 0), 0);
    }

    #[test]
    fn row_totals_count_walks() {
        let g = NeighborGraph::from_edges(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
        let cover = LandmarkCover::new(vec![0, 3], vec![0, 0, 1, 1]).unwrap();
        let n = run_walks(&g, &cover, WalkParams { beta: 200, ..Default::default() }).unwrap();
        for i in 0..2 {
            let sum: u64 = n.rows[i].iter().map(|&(_, c)| u64::from(c)).sum::<u64>() + u64::from(n.self_counts[i]);
            assert_eq!(sum, n.row_totals[i]);
        }
    }

    #[test]
    fn counts_ignore_thread_count() {
        let g = NeighborGraph::from_edges(6, [(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (4, 5), (3, 5)]).unwrap();
        let cover = LandmarkCover::new(vec![0, 4], vec![0, 0, 0, 1, 1, 1]).unwrap();
        let p = WalkParams { beta: 2000, seed: 3, ..Default::default() };
        let one = crate::exec::with_threads(1, || run_walks(&g, &cover, p).unwrap());
        let four = crate::exec::with_threads(4, || run_walks(&g, &cover, p).unwrap());
        let seq = run_walks(&g, &cover, WalkParams { execution: Execution::Sequential, ..p }).unwrap();
        assert_eq!(one, four);
        assert_eq!(one, seq);
    }

    #[test]
    fn bad_parameters_rejected() {
        let g = NeighborGraph::from_edges(2, [(0, 1)]).unwrap();
        let cover = LandmarkCover::new(vec![0], vec![0, 0]).unwrap();
        assert!(run_walks(&g, &cover, WalkParams { beta: 0, ..Default::default() }).is_err());
        assert!(run_walks(&g, &cover, WalkParams { min_len: 9, max_len: 3, ..Default::default() }).is_err());
    }

    fn arb_matrix() -> impl Strategy<Value = SparseMatrix> {
        (2usize..15).prop_flat_map(|n| {
            prop::collection::vec(prop::collection::btree_map(0..n as u32, 0.0f64..=1.0, 0..n), n)
                .prop_map(|rows| SparseMatrix {
                    rows: rows.into_iter().map(|r| r.into_iter().collect()).collect(),
                })
        })
    }

    proptest! {
        #[test]
        fn symmetrized_weights_are_bounded_unions(a in arb_matrix()) {
            let w = symmetrize(&a);
            let n = a.rows.len();
            for i in 0..n {
                prop_assert_eq!(w.weight(i, i), 0.0);
                for j in 0..n {
                    let wij = w.weight(i, j);
                    prop_assert_eq!(wij, w.weight(j, i));
                    prop_assert!((0.0..=1.0).contains(&wij));
                    if i != j {
                        prop_assert!(wij >= a.get(i, j).max(a.get(j, i)) - 1e-15);
                    }
                }
            }
        }

        #[test]
        fn transition_rows_are_substochastic(rows in prop::collection::vec(prop::collection::btree_map(0u32..10, 1u32..50, 0..10), 10), th in 0u32..20) {
            let rows: Vec<Vec<(u32, u32)>> = rows.into_iter().enumerate()
                .map(|(i, r)| r.into_iter().filter(|&(j, _)| j as usize != i).collect())
                .collect();
            let n = counts(rows);
            let a = transition_matrix(&n, th, false);
            for i in 0..10 {
                prop_assert!(a.row_sum(i) <= 1.0 + 1e-12);
                if th == 0 && !n.rows[i].is_empty() {
                    prop_assert!((a.row_sum(i) - 1.0).abs() < 1e-12);
                }
            }
        }
    }
}
