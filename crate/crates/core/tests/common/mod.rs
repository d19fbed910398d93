#![allow(dead_code)]

use cq_core::PixelImage;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Smooth shading, soft-edged objects and fine texture: enough structure for
/// VIF and k-means to behave as on photographs.
pub fn natural_image(width: usize, height: usize, seed: u64) -> PixelImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let waves: Vec<[f64; 5]> = (0..12)
        .map(|_| {
            [
                rng.random_range(0.3..3.0),
                rng.random_range(0.3..3.0),
                rng.random_range(0.0..std::f64::consts::TAU),
                rng.random_range(20.0..60.0),
                rng.random_range(0.0..3.0),
            ]
        })
        .collect();
    let base: [f64; 3] = std::array::from_fn(|_| rng.random_range(60.0..190.0));
    let blobs: Vec<([f64; 2], f64, [f64; 3])> = (0..14)
        .map(|_| {
            (
                [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)],
                rng.random_range(0.04..0.25),
                std::array::from_fn(|_| rng.random_range(0.0..255.0)),
            )
        })
        .collect();

    let mut samples = Vec::with_capacity(3 * width * height);
    for y in 0..height {
        for x in 0..width {
            let u = x as f64 / width as f64;
            let v = y as f64 / height as f64;
            let mut c = base;
            for w in &waves {
                let s = (std::f64::consts::TAU * (w[0] * u + w[1] * v) + w[2]).sin() * w[3];
                c[w[4] as usize] += s;
            }
            for (centre, r, color) in &blobs {
                let d = ((u - centre[0]).powi(2) + (v - centre[1]).powi(2)).sqrt();
                let a = (1.0 - ((d - r) / 0.01).clamp(0.0, 1.0)) * 0.85;
                for ch in 0..3 {
                    c[ch] = c[ch] * (1.0 - a) + color[ch] * a;
                }
            }
            let texture = ((x * 7 + y * 13) % 11) as f64 - 5.0;
            for ch in c {
                let n: f64 = rng.random_range(-4.0..4.0);
                samples.push((ch + n + texture).round().clamp(0.0, 255.0) as u8);
            }
        }
    }
    PixelImage::new(width, height, samples).unwrap()
}

/// Adds zero-mean Gaussian noise of standard deviation `sigma` to every sample.
pub fn add_noise(img: &PixelImage, sigma: f64, seed: u64) -> PixelImage {
    use rand_distr::{Distribution, Normal};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma).unwrap();
    let samples = img
        .samples()
        .iter()
        .map(|&v| {
            (v as f64 + normal.sample(&mut rng))
                .round()
                .clamp(0.0, 255.0) as u8
        })
        .collect();
    PixelImage::new(img.width(), img.height(), samples).unwrap()
}

pub fn sq_dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    (0..3).map(|j| (a[j] - b[j]).powi(2)).sum()
}

/// WCSS of a labelling with exact means.
pub fn labelling_wcss(points: &[[f64; 3]], labels: &[usize], k: usize) -> f64 {
    let mut sums = vec![[0.0; 3]; k];
    let mut counts = vec![0usize; k];
    for (p, &l) in points.iter().zip(labels) {
        counts[l] += 1;
        for j in 0..3 {
            sums[l][j] += p[j];
        }
    }
    let means: Vec<[f64; 3]> = sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| s.map(|v| v / c.max(1) as f64))
        .collect();
    points
        .iter()
        .zip(labels)
        .map(|(p, &l)| sq_dist(p, &means[l]))
        .sum()
}

/// Minimum WCSS over every labelling with `k` nonempty clusters.
pub fn exhaustive_optimum(points: &[[f64; 3]], k: usize) -> f64 {
    let n = points.len();
    let mut labels = vec![0usize; n];
    let mut best = f64::INFINITY;
    loop {
        let mut used = vec![false; k];
        for &l in &labels {
            used[l] = true;
        }
        if used.iter().all(|&u| u) {
            best = best.min(labelling_wcss(points, &labels, k));
        }
        let mut i = 0;
        loop {
            if i == n {
                return best;
            }
            labels[i] += 1;
            if labels[i] < k {
                break;
            }
            labels[i] = 0;
            i += 1;
        }
    }
}

/// Whether no single-point move between clusters lowers WCSS, using exact
/// means. `tol` is relative to the squared distances involved.
pub fn hartigan_locally_optimal(points: &[[f64; 3]], labels: &[u32], k: usize, tol: f64) -> bool {
    let mut sums = vec![[0.0; 3]; k];
    let mut counts = vec![0usize; k];
    for (p, &l) in points.iter().zip(labels) {
        counts[l as usize] += 1;
        for j in 0..3 {
            sums[l as usize][j] += p[j];
        }
    }
    let means: Vec<[f64; 3]> = sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| s.map(|v| v / c.max(1) as f64))
        .collect();
    for (p, &l) in points.iter().zip(labels) {
        let l = l as usize;
        let nl = counts[l] as f64;
        if counts[l] < 2 {
            continue;
        }
        let removal = nl / (nl - 1.0) * sq_dist(p, &means[l]);
        for m in (0..k).filter(|&m| m != l) {
            let nm = counts[m] as f64;
            let addition = nm / (nm + 1.0) * sq_dist(p, &means[m]);
            if addition < removal - tol * (1.0 + removal) {
                return false;
            }
        }
    }
    true
}
