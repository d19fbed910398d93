//! Image ingest and egress, single-image quantization, and the batch
//! experiment runner.

use std::path::PathBuf;

use rayon::prelude::*;
use thiserror::Error;

use crate::colorspace::{from_srgb8, normalize_components, Scaling};
use crate::imagestats::StatsError;
use crate::metrics::MetricsError;
use crate::quantizer::{
    reconstruct, run_kmeans, Assignment, KMeansConfig, KMeansError, Palette, PixelDataset, RunTrace,
};
use crate::{PixelImage, Space};

mod batch;
mod io;

pub use batch::{
    read_rows, run_experiment, write_outputs, write_rows, BestSpaceTally, ExperimentConfig,
    ExperimentOutput, ExperimentRow, ImageFailure, ImageInput, ImageReport, ImageSource,
    CSV_HEADER,
};
pub use io::{decode, encode};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Decode {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
    #[error("{}: {source}", path.display())]
    Encode {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
    #[error("{}: unsupported bit depth {depth}", path.display())]
    UnsupportedBitDepth { path: PathBuf, depth: u16 },
    #[error("{}: unsupported image format '{format}' (expected PNG or TIFF)", path.display())]
    UnsupportedFormat { path: PathBuf, format: String },
    #[error(transparent)]
    Quantize(#[from] KMeansError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("invalid experiment: {0}")]
    InvalidConfig(String),
}

/// A quantized image together with the clustering that produced it.
#[derive(Debug, Clone)]
pub struct QuantizedImage {
    pub image: PixelImage,
    pub palette: Palette,
    pub assignment: Assignment,
    /// WCSS in the normalized clustering space.
    pub wcss: f64,
    /// Pixels whose palette color fell outside the RGB gamut.
    pub clamped: usize,
    /// Pixels clamped into `[0, 1]` during component scaling.
    pub scaling_clamped: usize,
    pub traces: Vec<RunTrace>,
}

/// Transform, scale, cluster and map every pixel to its centroid's color.
/// `Hcl` clusters in LUV.
pub fn quantize_image(
    img: &PixelImage,
    space: Space,
    cfg: &KMeansConfig,
    scaling: Scaling,
) -> Result<QuantizedImage, PipelineError> {
    let working = space.working_space();
    let points: Vec<[f64; 3]> = img
        .samples()
        .par_chunks_exact(3)
        .map(|p| from_srgb8(working, [p[0], p[1], p[2]]))
        .collect();
    let (unit, params, scaling_clamped) = normalize_components(&points, working, scaling);
    drop(points);
    let data = PixelDataset::new(unit, working, params)?;
    let result = run_kmeans(&data, cfg)?;
    let rec = reconstruct(&result.assignment, &result.palette);
    let image = PixelImage::from_pixels(img.width(), img.height(), &rec.pixels)
        .expect("one label per pixel");
    Ok(QuantizedImage {
        image,
        palette: result.palette,
        assignment: result.assignment,
        wcss: result.wcss,
        clamped: rec.clamped,
        scaling_clamped,
        traces: result.traces,
    })
}
