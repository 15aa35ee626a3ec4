//! Synthetic point clouds with known shape.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::exec::{salt, stream_rng};

fn gaussian_row(seed: u64, salt: u64, row: u64, d: usize) -> Vec<f64> {
    let mut rng = stream_rng(seed, salt, row);
    (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// `n` points uniform on the unit sphere in `R^d`.
pub fn gen_sphere(n: usize, d: usize, seed: u64) -> Result<PointCloud> {
    if n == 0 || d < 2 {
        return Err(Error::InvalidInput(format!("sphere needs n >= 1 and d >= 2 (got n = {n}, d = {d})")));
    }
    let mut data = Vec::with_capacity(n * d);
    for i in 0..n {
        let mut row = gaussian_row(seed, salt::SPHERE, i as u64, d);
        let mut len = row.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut retry = 1;
        while len == 0.0 {
            row = gaussian_row(seed, salt::SPHERE, i as u64 ^ (retry << 48), d);
            len = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            retry += 1;
        }
        data.extend(row.iter().map(|x| x / len));
    }
    PointCloud::new(n, d, data, None)
}

/// Lattice of blob centers with spacing `separation`.
fn blob_center(c: usize, centers: usize, d: usize, separation: f64) -> Vec<f64> {
    let mut side = 1usize;
    while (side as f64).powi(d.min(32) as i32) < centers as f64 {
        side += 1;
    }
    let mut center = vec![0.0; d];
    let mut rest = c;
    for x in center.iter_mut() {
        *x = (rest % side) as f64 * separation;
        rest /= side;
        if rest == 0 {
            break;
        }
    }
    center
}

/// Equal-sized isotropic Gaussian blobs labeled by blob index. Centers sit
/// on a lattice, so every pair is at least `separation` apart.
pub fn gen_blobs(n: usize, d: usize, centers: usize, sigma: f64, separation: f64, seed: u64) -> Result<PointCloud> {
    if n == 0 || d == 0 || centers == 0 {
        return Err(Error::InvalidInput("blobs need n, d and centers at least 1".into()));
    }
    if !(sigma >= 0.0 && sigma.is_finite() && separation >= 0.0 && separation.is_finite()) {
        return Err(Error::InvalidInput("sigma and separation must be finite and non-negative".into()));
    }
    let table: Vec<Vec<f64>> = (0..centers).map(|c| blob_center(c, centers, d, separation)).collect();
    let mut data = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let blob = i * centers / n;
        let noise = gaussian_row(seed, salt::BLOBS, i as u64, d);
        data.extend(table[blob].iter().zip(&noise).map(|(c, z)| c + sigma * z));
        labels.push(blob as i32);
    }
    PointCloud::new(n, d, data, Some(labels))
}

/// Noisy unit circle in `R^2`: uniform angle, radius uniform in `1 ± noise`.
pub fn gen_annulus(n: usize, noise: f64, seed: u64) -> Result<PointCloud> {
    if n < 10 {
        return Err(Error::InvalidInput(format!("annulus needs at least 10 points (got {n})")));
    }
    if !(0.0..1.0).contains(&noise) {
        return Err(Error::InvalidInput(format!("annulus noise must be in [0, 1) (got {noise})")));
    }
    let mut data = Vec::with_capacity(2 * n);
    for i in 0..n {
        let mut rng = stream_rng(seed, salt::ANNULUS, i as u64);
        let angle = rng.random_range(0.0..std::f64::consts::TAU);
        let r = if noise > 0.0 {
            rng.random_range(1.0 - noise..=1.0 + noise)
        } else {
            1.0
        };
        data.push(r * angle.cos());
        data.push(r * angle.sin());
    }
    PointCloud::new(n, 2, data, None)
}
