//! Execution strategy for the data-parallel kernels.
//!
//! Every kernel that fans out over points, walks or queries goes through the
//! helpers here. With the `parallel` feature they dispatch to rayon; without it
//! (or with [`Execution::Sequential`]) they run on the calling thread. Results
//! are collected in index order either way, so outputs never depend on the
//! strategy or on the size of the thread pool.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Execution {
    Sequential,
    /// Falls back to sequential when built without the `parallel` feature.
    #[default]
    Parallel,
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// `(0..n).map(f).collect()`, possibly in parallel.
pub(crate) fn map_range<T, F>(exec: Execution, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Applies `f` to every element together with its index.
pub(crate) fn for_each_mut<T, F>(exec: Execution, items: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize, &mut T) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        items.par_iter_mut().enumerate().for_each(|(i, x)| f(i, x));
        return;
    }
    let _ = exec;
    items.iter_mut().enumerate().for_each(|(i, x)| f(i, x));
}

pub(crate) fn sort_unstable_by<T, F>(exec: Execution, items: &mut [T], cmp: F)
where
    T: Send,
    F: Fn(&T, &T) -> std::cmp::Ordering + Sync,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        items.par_sort_unstable_by(cmp);
        return;
    }
    let _ = exec;
    items.sort_unstable_by(cmp);
}

/// Runs `f` inside a pool capped at `threads` workers (0 = rayon default).
pub fn with_threads<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    if threads > 0 {
        match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
            Ok(pool) => return pool.install(f),
            Err(err) => log::warn!("could not build a {threads}-thread pool ({err}); using the global pool"),
        }
    }
    let _ = threads;
    f()
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE5_E9B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent RNG stream for `(seed, salt, index)`.
///
/// Kernels derive one stream per unit of work (point, landmark, query) so the
/// random choices made for that unit do not depend on scheduling.
pub fn stream_rng(seed: u64, salt: u64, index: u64) -> ChaCha8Rng {
    let mixed = splitmix64(splitmix64(seed ^ splitmix64(salt)) ^ index);
    ChaCha8Rng::seed_from_u64(mixed)
}

pub(crate) mod salt {
    pub const SAMPLE: u64 = 1;
    pub const NN_DESCENT_INIT: u64 = 2;
    pub const NN_DESCENT_SAMPLE: u64 = 3;
    pub const NN_DESCENT_REVERSE: u64 = 4;
    pub const WITNESS_ENTRY: u64 = 5;
    pub const LANDMARKS: u64 = 6;
    pub const WALKS: u64 = 7;
    pub const LOUVAIN: u64 = 8;
    pub const SPHERE: u64 = 9;
    pub const BLOBS: u64 = 10;
    pub const ANNULUS: u64 = 11;
}
