use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::knn::Metric;

/// How the loop-reinstatement threshold `c` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode", content = "value")]
pub enum TearingMode {
    /// `c = 2 ln Q`, with `Q` the modularity of the chosen partition on the
    /// landmark graph. Falls back to `All` when `Q <= 0`.
    #[default]
    #[serde(rename = "paper")]
    LogModularity,
    Fixed(f64),
    /// `c = -inf`: every discarded edge comes back.
    All,
    /// `c = +inf`: only the spanning subgraph is kept.
    None,
}

impl FromStr for TearingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "paper" | "log-q" => Ok(TearingMode::LogModularity),
            "all" => Ok(TearingMode::All),
            "none" => Ok(TearingMode::None),
            other => {
                let value = other
                    .strip_prefix("fixed:")
                    .ok_or_else(|| Error::Config(format!("unknown tearing mode `{other}`")))?;
                let v: f64 = value
                    .parse()
                    .map_err(|_| Error::Config(format!("bad fixed threshold `{value}`")))?;
                if v.is_nan() {
                    return Err(Error::Config("fixed threshold is NaN".into()));
                }
                Ok(TearingMode::Fixed(v))
            }
        }
    }
}

impl fmt::Display for TearingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TearingMode::LogModularity => f.write_str("paper"),
            TearingMode::Fixed(v) => write!(f, "fixed:{v}"),
            TearingMode::All => f.write_str("all"),
            TearingMode::None => f.write_str("none"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Upper bound on the number of sampled points.
    pub m_cap: usize,
    /// Fraction of the input that is sampled (before the cap).
    pub m_fraction: f64,
    pub k: usize,
    /// Hop radius of a landmark's covered neighborhood.
    pub k_prime_hops: usize,
    /// Random walks started from every landmark.
    pub beta: usize,
    /// Walk lengths are drawn uniformly from `[walk_len / 2, walk_len]`.
    pub walk_len: usize,
    /// Minimum walk count for a landmark pair to get a transition weight.
    pub th: u32,
    /// Dendrogram level used for the induced graph.
    pub level: usize,
    pub tearing: TearingMode,
    /// Keep walks that end in their own landmark's cell in the row totals.
    pub retain_self_transitions: bool,
    pub metric: Metric,
    pub nn_iters: usize,
    pub nn_sample_rate: f64,
    /// Switch from brute-force to graph search for witness queries once
    /// `|sample| * |complement|` exceeds this.
    pub witness_exact_limit: usize,
    pub seed: u64,
    /// Worker threads; 0 uses every core.
    pub threads: usize,
    pub execution: Execution,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            m_cap: 1_000_000,
            m_fraction: 1.0 / 3.0,
            k: 10,
            k_prime_hops: 1,
            beta: 1000,
            walk_len: 50,
            th: 2,
            level: 0,
            tearing: TearingMode::LogModularity,
            retain_self_transitions: false,
            metric: Metric::Euclidean,
            nn_iters: 10,
            nn_sample_rate: 0.5,
            witness_exact_limit: 50_000_000,
            seed: 42,
            threads: 0,
            execution: Execution::Parallel,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("m-cap", self.m_cap),
            ("k", self.k),
            ("hops", self.k_prime_hops),
            ("beta", self.beta),
            ("walk-len", self.walk_len),
            ("nn-iters", self.nn_iters),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if !(self.m_fraction > 0.0 && self.m_fraction <= 1.0) {
            return Err(Error::Config(format!("m-frac must be in (0, 1], got {}", self.m_fraction)));
        }
        if !(self.nn_sample_rate > 0.0 && self.nn_sample_rate <= 1.0) {
            return Err(Error::Config(format!(
                "nn-sample-rate must be in (0, 1], got {}",
                self.nn_sample_rate
            )));
        }
        Ok(())
    }

    /// Shortest and longest walk length.
    pub fn walk_bounds(&self) -> (usize, usize) {
        ((self.walk_len / 2).max(1), self.walk_len)
    }

    /// Sets one option by its command-line name (without the leading dashes).
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad value `{value}` for `{key}`")))
        }
        match key.trim() {
            "m-cap" => self.m_cap = num(key, value)?,
            "m-frac" => {
                let v = value.trim();
                self.m_fraction = match v.split_once('/') {
                    Some((a, b)) => num::<f64>(key, a)? / num::<f64>(key, b)?,
                    None => num(key, v)?,
                }
            }
            "k" => self.k = num(key, value)?,
            "hops" => self.k_prime_hops = num(key, value)?,
            "beta" => self.beta = num(key, value)?,
            "walk-len" => self.walk_len = num(key, value)?,
            "th" => self.th = num(key, value)?,
            "level" => self.level = num(key, value)?,
            "tearing" => self.tearing = value.parse()?,
            "retain-self" => self.retain_self_transitions = num(key, value)?,
            "metric" => self.metric = value.parse()?,
            "nn-iters" => self.nn_iters = num(key, value)?,
            "nn-sample-rate" => self.nn_sample_rate = num(key, value)?,
            "witness-exact-limit" => self.witness_exact_limit = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "threads" => self.threads = num(key, value)?,
            "execution" => {
                self.execution = match value.trim() {
                    "sequential" => Execution::Sequential,
                    "parallel" => Execution::Parallel,
                    other => return Err(Error::Config(format!("unknown execution `{other}`"))),
                }
            }
            other => return Err(Error::Config(format!("unknown option `{other}`"))),
        }
        Ok(())
    }

    /// Applies a flat `key = value` document. Blank lines and `#` comments are ignored.
    pub fn apply_kv(&mut self, text: &str) -> Result<()> {
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: lineno as u64 + 1,
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }
}
