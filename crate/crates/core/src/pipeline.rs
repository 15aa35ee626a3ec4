//! End-to-end run: sample, neighbor graph, witnesses, landmarks, walks,
//! weighting, communities, induced graph and tearing.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::community::{induce, louvain, modularity};
use crate::config::{PipelineConfig, TearingMode};
use crate::error::{Error, Result};
use crate::exec::with_threads;
use crate::graph::WeightedGraph;
use crate::knn::{knn_to_graph, nn_descent_knn, NnDescentParams};
use crate::landmarks::{sample_points, select_landmarks, witness_augment, WitnessParams};
use crate::summary::{EdgePhase, NodeMeta, SummaryGraph};
use crate::tearing::{resolve_threshold, tear};
use crate::walks::{run_walks, symmetrize, transition_matrix, WalkParams};

/// Smallest input the pipeline accepts.
pub const MIN_POINTS: usize = 4;

/// Timings and sizes of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub stage_times_ms: BTreeMap<String, f64>,
    pub total_ms: f64,
    pub n: usize,
    pub d: usize,
    pub m_sampled: usize,
    pub witnesses: usize,
    pub edges_knn: usize,
    pub edges_witness: usize,
    pub landmarks: usize,
    pub walks: u64,
    pub edges_landmark: usize,
    pub dendrogram_levels: usize,
    pub level: usize,
    pub communities: usize,
    pub edges_induced: usize,
    pub edges_spanning: usize,
    pub edges_reinstated: usize,
    pub modularity_q: f64,
    /// `None` when the threshold is infinite.
    pub threshold_c: Option<f64>,
    pub tearing: TearingMode,
    pub seed: u64,
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub summary: SummaryGraph,
    pub report: RunReport,
    /// Symmetrized landmark graph `W`.
    pub landmark_graph: WeightedGraph,
}

struct Stopwatch {
    times: BTreeMap<String, f64>,
}

impl Stopwatch {
    fn time<T>(&mut self, stage: &'static str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = f().map_err(|e| e.in_stage(stage));
        *self.times.entry(stage.to_string()).or_default() += start.elapsed().as_secs_f64() * 1e3;
        if out.is_ok() {
            log::debug!("stage {stage} done in {:.1} ms", self.times[stage]);
        }
        out
    }
}

pub fn run_pipeline(pc: &PointCloud, cfg: &PipelineConfig) -> Result<(SummaryGraph, RunReport)> {
    run_pipeline_detailed(pc, cfg).map(|o| (o.summary, o.report))
}

pub fn run_pipeline_detailed(pc: &PointCloud, cfg: &PipelineConfig) -> Result<PipelineOutput> {
    cfg.validate()?;
    with_threads(cfg.threads, || run(pc, cfg))
}

fn run(pc: &PointCloud, cfg: &PipelineConfig) -> Result<PipelineOutput> {
    let started = Instant::now();
    let mut sw = Stopwatch { times: BTreeMap::new() };
    let n = pc.len();

    sw.time("validate", || {
        if n < MIN_POINTS {
            return Err(Error::InvalidInput(format!(
                "input too small: {n} point(s), need at least {MIN_POINTS}"
            )));
        }
        pc.validate().into_result()
    })?;

    let (sample, complement) = sw.time("sample", || Ok(sample_points(n, cfg.m_cap, cfg.m_fraction, cfg.seed)))?;
    let m = sample.len();
    log::info!("sampled {m} of {n} points");

    let knn_graph = sw.time("knn", || {
        let points = pc.select(&sample);
        let params = NnDescentParams {
            iters: cfg.nn_iters,
            sample_rate: cfg.nn_sample_rate,
            seed: cfg.seed,
            ..NnDescentParams::default()
        };
        let knn = nn_descent_knn(&points, cfg.k, params, cfg.metric, cfg.execution)?;
        knn_to_graph(&knn).with_sample_map(sample.clone())
    })?;
    let edges_knn = knn_graph.edge_count();

    let witnessed = sw.time("witness", || {
        let params = WitnessParams {
            metric: cfg.metric,
            exact_limit: cfg.witness_exact_limit,
            seed: cfg.seed,
            execution: cfg.execution,
            ..WitnessParams::default()
        };
        witness_augment(&knn_graph, pc, &complement, params)
    })?;
    drop(knn_graph);
    let graph = &witnessed.graph;
    log::info!(
        "neighbor graph: {edges_knn} k-NN edges, {} added by witnesses",
        witnessed.edges_added
    );

    let cover = sw.time("landmarks", || Ok(select_landmarks(graph, cfg.k_prime_hops, cfg.seed)))?;
    log::info!("{} landmarks", cover.landmark_count());

    let counts = sw.time("walks", || {
        let (min_len, max_len) = cfg.walk_bounds();
        let params = WalkParams {
            beta: cfg.beta,
            min_len,
            max_len,
            seed: cfg.seed,
            execution: cfg.execution,
        };
        run_walks(graph, &cover, params)
    })?;

    let landmark_graph = sw.time("weighting", || {
        let a = transition_matrix(&counts, cfg.th, cfg.retain_self_transitions);
        Ok(symmetrize(&a))
    })?;

    let dendrogram = sw.time("louvain", || Ok(louvain(&landmark_graph, cfg.seed)))?;
    let level = if cfg.level < dendrogram.depth() {
        cfg.level
    } else {
        let deepest = dendrogram.depth() - 1;
        log::warn!(
            "level {} requested but the dendrogram has {} level(s); using level {deepest}",
            cfg.level,
            dendrogram.depth()
        );
        deepest
    };
    let partition = dendrogram.level(level).expect("level is in range").clone();

    // per-landmark roll-up of sampled and witness points
    let (induced, landmark_of_point) = sw.time("induce", || {
        let mut landmark_of_point = vec![u32::MAX; n];
        for (v, &row) in sample.iter().enumerate() {
            landmark_of_point[row] = cover.rev_neigh()[v];
        }
        for (i, &row) in complement.iter().enumerate() {
            let v = witnessed.nearest.get(i).copied().unwrap_or(0);
            landmark_of_point[row] = cover.rev_neigh()[v];
        }
        let mut hist: Vec<BTreeMap<i32, u64>> = vec![BTreeMap::new(); cover.landmark_count()];
        let mut sizes = vec![0u64; cover.landmark_count()];
        for (row, &l) in landmark_of_point.iter().enumerate() {
            sizes[l as usize] += 1;
            if let Some(label) = pc.label(row) {
                *hist[l as usize].entry(label).or_default() += 1;
            }
        }
        let meta: Vec<NodeMeta> = (0..cover.landmark_count())
            .map(|l| NodeMeta {
                landmarks: vec![l],
                point_count: sizes[l],
                label_histogram: std::mem::take(&mut hist[l]).into_iter().collect(),
            })
            .collect();
        Ok((induce(&landmark_graph, &partition, &meta), landmark_of_point))
    })?;

    let q = modularity(&landmark_graph, &partition);
    let c = resolve_threshold(cfg.tearing, q);
    let mut summary = sw.time("tearing", || tear(&induced, c))?;

    sw.time("assemble", || {
        summary.landmark_rows = cover.landmarks().iter().map(|&v| sample[v]).collect();
        summary.point_assignment = landmark_of_point
            .iter()
            .map(|&l| partition.community_of(l as usize) as u32)
            .collect();
        Ok(())
    })?;

    let report = RunReport {
        stage_times_ms: sw.times,
        total_ms: started.elapsed().as_secs_f64() * 1e3,
        n,
        d: pc.dim(),
        m_sampled: m,
        witnesses: complement.len(),
        edges_knn,
        edges_witness: witnessed.edges_added,
        landmarks: cover.landmark_count(),
        walks: counts.total_walks(),
        edges_landmark: landmark_graph.edge_count(),
        dendrogram_levels: dendrogram.depth(),
        level,
        communities: partition.community_count(),
        edges_induced: induced.graph.edge_count(),
        edges_spanning: summary.count_phase(EdgePhase::Spanning),
        edges_reinstated: summary.count_phase(EdgePhase::Reintroduced),
        modularity_q: q,
        threshold_c: c.is_finite().then_some(c),
        tearing: cfg.tearing,
        seed: cfg.seed,
    };
    log::info!(
        "summary: {} nodes, {} edges ({} reinstated), Q = {:.4}",
        summary.node_count(),
        summary.edge_count(),
        report.edges_reinstated,
        q
    );
    Ok(PipelineOutput {
        summary,
        report,
        landmark_graph,
    })
}
