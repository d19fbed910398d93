//! k-means color quantization of a normalized 3-component point cloud.
//!
//! Seeding is k-means++ and refinement is the Hartigan-Wong optimal-transfer /
//! quick-transfer iteration. Each restart draws from its own ChaCha8 stream
//! (`seed`, stream = restart index), so palettes reproduce across platforms
//! and thread counts.

mod hartigan;
mod seeding;

use std::collections::HashSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::colorspace::{to_gamma_rgb, ColorSpace, NormalizationParams};
use crate::sum::chunked_sum;

pub use hartigan::HartiganWong;
pub use seeding::kmeanspp_init;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KMeansError {
    #[error("k must be at least 1")]
    ZeroClusters,
    #[error("k = {k} exceeds the {distinct} distinct colors in the data")]
    TooFewDistinct { k: usize, distinct: usize },
    #[error("dataset is empty")]
    Empty,
    #[error("point {index} has a non-finite component")]
    NonFinite { index: usize },
    #[error("point {index} component {value} is outside [0, 1]")]
    OutOfRange { index: usize, value: f64 },
    #[error("label {label} at point {index} is out of range for k = {k}")]
    LabelOutOfRange { index: usize, label: u32, k: usize },
    #[error("assignment has {labels} labels for {points} points")]
    LengthMismatch { labels: usize, points: usize },
    #[error("restarts and max_iterations must be positive")]
    InvalidConfig,
}

/// The point cloud being clustered: every component in `[0, 1]`.
#[derive(Debug, Clone)]
pub struct PixelDataset {
    points: Vec<[f64; 3]>,
    space: ColorSpace,
    params: NormalizationParams,
}

impl PixelDataset {
    pub fn new(
        points: Vec<[f64; 3]>,
        space: ColorSpace,
        params: NormalizationParams,
    ) -> Result<Self, KMeansError> {
        if points.is_empty() {
            return Err(KMeansError::Empty);
        }
        for (index, p) in points.iter().enumerate() {
            for &value in p {
                if !value.is_finite() {
                    return Err(KMeansError::NonFinite { index });
                }
                if !(0.0..=1.0).contains(&value) {
                    return Err(KMeansError::OutOfRange { index, value });
                }
            }
        }
        Ok(Self {
            points,
            space,
            params,
        })
    }

    /// A dataset of points already in `[0, 1]` with the identity normalization.
    pub fn from_unit_points(points: Vec<[f64; 3]>) -> Result<Self, KMeansError> {
        Self::new(
            points,
            ColorSpace::GammaRgb,
            NormalizationParams::fixed(ColorSpace::GammaRgb),
        )
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn space(&self) -> ColorSpace {
        self.space
    }

    pub fn params(&self) -> &NormalizationParams {
        &self.params
    }

    /// Number of distinct points, counting no further than `limit`.
    pub fn distinct_up_to(&self, limit: usize) -> usize {
        let mut seen = HashSet::new();
        for p in &self.points {
            seen.insert(p.map(f64::to_bits));
            if seen.len() >= limit {
                break;
            }
        }
        seen.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Palette {
    pub centroids: Vec<[f64; 3]>,
    pub space: ColorSpace,
    pub params: NormalizationParams,
}

impl Palette {
    pub fn k(&self) -> usize {
        self.centroids.len()
    }

    /// Each centroid as 8-bit sRGB plus whether it left the RGB gamut.
    pub fn to_srgb8(&self) -> Vec<([u8; 3], bool)> {
        self.centroids
            .iter()
            .map(|&c| {
                let (rgb, clamped) = to_gamma_rgb(self.space, self.params.denormalize(c));
                (rgb.to_srgb8(), clamped)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    pub labels: Vec<u32>,
    pub counts: Vec<usize>,
}

impl Assignment {
    pub fn from_labels(labels: Vec<u32>, k: usize) -> Self {
        let mut counts = vec![0; k];
        for &l in &labels {
            counts[l as usize] += 1;
        }
        Self { labels, counts }
    }

    pub fn k(&self) -> usize {
        self.counts.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansConfig {
    pub k: usize,
    pub max_iterations: usize,
    pub restarts: usize,
    pub seed: u64,
}

impl KMeansConfig {
    /// Defaults: 200 iterations, 10 restarts for `k <= 64` and 3 above.
    pub fn new(k: usize) -> Self {
        Self {
            k,
            max_iterations: 200,
            restarts: Self::default_restarts(k),
            seed: 0,
        }
    }

    pub fn default_restarts(k: usize) -> usize {
        if k <= 64 {
            10
        } else {
            3
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    pub fn with_max_iterations(mut self, max_iterations: usize) -> Self {
        self.max_iterations = max_iterations;
        self
    }
}

/// Outcome of one seeded Hartigan-Wong run.
#[derive(Debug, Clone)]
pub struct RunTrace {
    /// Exact WCSS after the initial assignment and after every iteration.
    pub wcss_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct KMeansResult {
    pub palette: Palette,
    pub assignment: Assignment,
    pub wcss: f64,
    /// Index of the winning restart.
    pub best_restart: usize,
    /// One trace per restart, in restart order.
    pub traces: Vec<RunTrace>,
}

/// The per-restart generator.
pub fn restart_rng(seed: u64, restart: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64);
    rng
}

/// Best-of-restarts Hartigan-Wong k-means. Ties in WCSS go to the lowest
/// restart index.
pub fn run_kmeans(data: &PixelDataset, cfg: &KMeansConfig) -> Result<KMeansResult, KMeansError> {
    if cfg.k == 0 {
        return Err(KMeansError::ZeroClusters);
    }
    if cfg.restarts == 0 || cfg.max_iterations == 0 {
        return Err(KMeansError::InvalidConfig);
    }
    let distinct = data.distinct_up_to(cfg.k);
    if distinct < cfg.k {
        return Err(KMeansError::TooFewDistinct { k: cfg.k, distinct });
    }

    let runs = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = restart_rng(cfg.seed, r);
            let init = kmeanspp_init(data, cfg.k, &mut rng)?;
            Ok(HartiganWong::new(data.points(), &init.centroids).run(cfg.max_iterations))
        })
        .collect::<Result<Vec<_>, KMeansError>>()?;

    let best_restart = runs
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.wcss.total_cmp(&b.1.wcss).then(a.0.cmp(&b.0)))
        .map(|(i, _)| i)
        .unwrap_or(0);

    let mut traces = Vec::with_capacity(runs.len());
    let mut best = None;
    for (i, run) in runs.into_iter().enumerate() {
        traces.push(run.trace.clone());
        if i == best_restart {
            best = Some(run);
        }
    }
    let best = best.expect("restarts >= 1");
    Ok(KMeansResult {
        palette: Palette {
            centroids: best.centroids,
            space: data.space(),
            params: *data.params(),
        },
        assignment: Assignment::from_labels(best.labels, cfg.k),
        wcss: best.wcss,
        best_restart,
        traces,
    })
}

/// Sum of squared distances from each point to its assigned centroid.
pub fn wcss(
    data: &PixelDataset,
    palette: &Palette,
    assignment: &Assignment,
) -> Result<f64, KMeansError> {
    wcss_points(data.points(), &palette.centroids, &assignment.labels)
}

pub(crate) fn wcss_points(
    points: &[[f64; 3]],
    centroids: &[[f64; 3]],
    labels: &[u32],
) -> Result<f64, KMeansError> {
    if labels.len() != points.len() {
        return Err(KMeansError::LengthMismatch {
            labels: labels.len(),
            points: points.len(),
        });
    }
    let k = centroids.len();
    if let Some((index, &label)) = labels.iter().enumerate().find(|(_, &l)| l as usize >= k) {
        return Err(KMeansError::LabelOutOfRange { index, label, k });
    }
    let terms: Vec<f64> = points
        .par_iter()
        .zip(labels.par_iter())
        .map(|(p, &l)| sq_dist(p, &centroids[l as usize]))
        .collect();
    Ok(chunked_sum(&terms))
}

#[inline]
pub(crate) fn sq_dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let d0 = a[0] - b[0];
    let d1 = a[1] - b[1];
    let d2 = a[2] - b[2];
    d0 * d0 + d1 * d1 + d2 * d2
}

/// Pixel colors after quantization: each pixel takes its centroid's color,
/// mapped back to 8-bit sRGB.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reconstruction {
    pub pixels: Vec<[u8; 3]>,
    /// Pixels whose centroid fell outside the RGB gamut and was clamped.
    pub clamped: usize,
}

pub fn reconstruct(assignment: &Assignment, palette: &Palette) -> Reconstruction {
    let colors = palette.to_srgb8();
    let clamped = colors
        .iter()
        .zip(&assignment.counts)
        .filter(|((_, c), _)| *c)
        .map(|(_, n)| n)
        .sum();
    Reconstruction {
        pixels: assignment
            .labels
            .iter()
            .map(|&l| colors[l as usize].0)
            .collect(),
        clamped,
    }
}
