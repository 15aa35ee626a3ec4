//! Wall-time growth of the pipeline on uniform sphere samples.

use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::pipeline::run_pipeline;
use crate::synth::gen_sphere;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub n: usize,
    pub seconds: f64,
    pub knn_s: f64,
    pub walks_s: f64,
    pub louvain_s: f64,
    pub tearing_s: f64,
    pub landmarks: usize,
    pub communities: usize,
    pub summary_edges: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingTable {
    pub rows: Vec<ScalingRow>,
    /// Least-squares slope of log(seconds) on log(n); `None` below two sizes.
    pub slope: Option<f64>,
    /// Sizes whose run failed, with the error.
    pub failures: Vec<(usize, String)>,
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|&(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

/// Generates a sphere sample and runs the pipeline for every size, in order.
/// Failed sizes are logged and skipped.
pub fn scaling_run(sizes: &[usize], d: usize, cfg: &PipelineConfig, seed: u64) -> Result<ScalingTable> {
    if sizes.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidInput("sizes must be ascending".into()));
    }
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for &n in sizes {
        let pc = match gen_sphere(n, d, seed) {
            Ok(pc) => pc,
            Err(e) => {
                log::error!("n = {n}: {e}");
                failures.push((n, e.to_string()));
                continue;
            }
        };
        let start = Instant::now();
        match run_pipeline(&pc, cfg) {
            Ok((g, report)) => {
                let seconds = start.elapsed().as_secs_f64();
                let stage = |name: &str| report.stage_times_ms.get(name).copied().unwrap_or(0.0) / 1e3;
                log::info!("n = {n}: {seconds:.2} s");
                rows.push(ScalingRow {
                    n,
                    seconds,
                    knn_s: stage("knn") + stage("witness"),
                    walks_s: stage("walks"),
                    louvain_s: stage("louvain"),
                    tearing_s: stage("tearing"),
                    landmarks: report.landmarks,
                    communities: report.communities,
                    summary_edges: g.edge_count(),
                });
            }
            Err(e) => {
                log::error!("n = {n}: {e}");
                failures.push((n, e.to_string()));
            }
        }
    }
    let slope = log_log_slope(&rows.iter().map(|r| (r.n as f64, r.seconds)).collect::<Vec<_>>());
    Ok(ScalingTable { rows, slope, failures })
}

impl ScalingTable {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            w.serialize(row).map_err(|e| Error::Format(e.to_string()))?;
        }
        w.flush().map_err(|e| Error::Format(e.to_string()))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = [1.0, 2.0, 4.0, 8.0].iter().map(|&x: &f64| (x, 3.0 * x.powf(1.3))).collect();
        assert!((log_log_slope(&pts).unwrap() - 1.3).abs() < 1e-12);
        assert_eq!(log_log_slope(&pts[..1]), None);
    }

    #[test]
    fn single_size_has_no_slope() {
        let cfg = PipelineConfig {
            beta: 50,
            ..PipelineConfig::default()
        };
        let t = scaling_run(&[300], 5, &cfg, 1).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.slope, None);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("n,seconds,knn_s,walks_s,louvain_s,tearing_s,landmarks,communities"));
    }

    #[test]
    fn repeated_size_repeats_work() {
        let cfg = PipelineConfig {
            beta: 50,
            ..PipelineConfig::default()
        };
        let t = scaling_run(&[300, 300], 5, &cfg, 1).unwrap();
        assert_eq!(t.rows[0].landmarks, t.rows[1].landmarks);
        assert_eq!(t.rows[0].communities, t.rows[1].communities);
        assert_eq!(t.rows[0].summary_edges, t.rows[1].summary_edges);
    }

    #[test]
    fn failed_sizes_are_skipped() {
        let t = scaling_run(&[2, 300], 5, &PipelineConfig { beta: 20, ..Default::default() }, 1).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.failures.len(), 1);
    }

    #[test]
    fn descending_sizes_are_rejected() {
        assert!(scaling_run(&[20, 10], 5, &PipelineConfig::default(), 1).is_err());
    }
}
