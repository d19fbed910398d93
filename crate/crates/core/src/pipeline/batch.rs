use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{decode, encode, quantize_image, PipelineError};
use crate::colorspace::Scaling;
use crate::imagestats::{characterize_image, ImageProfile, COVARIATE_NAMES};
use crate::metrics::{
    logit_vif_clamped, mse, partial_response_matrix, psnr_from_mse, vif_with, ResponseMatrix,
    VifChannel, RESPONSE_SPACES,
};
use crate::quantizer::KMeansConfig;
use crate::{PixelImage, Space};

pub const CSV_HEADER: [&str; 13] = [
    "image",
    "I",
    "J",
    "space",
    "k",
    "seed",
    "wcss",
    "vif",
    "psnr",
    "logit_vif",
    "y_xyz_or_luv",
    "clamped",
    "ms",
];

/// One (image, space, k) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub image: String,
    #[serde(rename = "I")]
    pub i: usize,
    #[serde(rename = "J")]
    pub j: usize,
    pub space: Space,
    pub k: usize,
    pub seed: u64,
    pub wcss: f64,
    pub vif: f64,
    pub psnr: f64,
    /// Logit of the VIF after clamping into the open unit interval.
    pub logit_vif: f64,
    /// Logit-VIF difference against RGB at the same `k`; empty for RGB rows
    /// and when RGB was not run.
    pub y_xyz_or_luv: Option<f64>,
    /// Pixels whose palette color was clamped into the RGB gamut.
    pub clamped: usize,
    /// Wall time of the cell; 0 unless timings are enabled.
    pub ms: u64,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub spaces: Vec<Space>,
    pub ks: Vec<usize>,
    pub seed: u64,
    /// `None` uses the per-`k` default.
    pub restarts: Option<usize>,
    pub max_iterations: usize,
    pub scaling: Scaling,
    pub vif_channel: VifChannel,
    pub timings: bool,
    /// Directory receiving `{image}_{space}_k{k}.png` for every cell.
    pub image_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(spaces: Vec<Space>, ks: Vec<usize>, seed: u64) -> Self {
        Self {
            spaces,
            ks,
            seed,
            restarts: None,
            max_iterations: KMeansConfig::new(1).max_iterations,
            scaling: Scaling::Fixed,
            vif_channel: VifChannel::Luminance,
            timings: false,
            image_dir: None,
        }
    }

    fn kmeans(&self, k: usize) -> KMeansConfig {
        let cfg = KMeansConfig::new(k)
            .with_seed(self.seed)
            .with_max_iterations(self.max_iterations);
        match self.restarts {
            Some(r) => cfg.with_restarts(r),
            None => cfg,
        }
    }

    fn validate(&self) -> Result<(), PipelineError> {
        if self.spaces.is_empty() {
            return Err(PipelineError::InvalidConfig("no colorspaces given".into()));
        }
        if self.ks.is_empty() || self.ks.contains(&0) {
            return Err(PipelineError::InvalidConfig(
                "palette sizes must be a nonempty list of positive integers".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub enum ImageSource {
    File(PathBuf),
    Decoded(PixelImage),
}

#[derive(Debug, Clone)]
pub struct ImageInput {
    pub id: String,
    pub source: ImageSource,
}

impl ImageInput {
    /// Identified by the file stem.
    pub fn file(path: impl Into<PathBuf>) -> Self {
        let path = path.into();
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        Self {
            id,
            source: ImageSource::File(path),
        }
    }

    pub fn decoded(id: impl Into<String>, image: PixelImage) -> Self {
        Self {
            id: id.into(),
            source: ImageSource::Decoded(image),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ImageReport {
    pub id: String,
    pub profile: ImageProfile,
    pub rows: Vec<ExperimentRow>,
    pub response: ResponseMatrix,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageFailure {
    pub id: String,
    pub message: String,
}

/// Count of images for which each space attained the highest VIF, per `k`.
/// Ties go to the space listed first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BestSpaceTally {
    pub spaces: Vec<Space>,
    pub ks: Vec<usize>,
    /// `counts[i][j]`: images whose best space at `ks[i]` is `spaces[j]`.
    pub counts: Vec<Vec<usize>>,
}

impl BestSpaceTally {
    fn from_reports(spaces: &[Space], ks: &[usize], reports: &[ImageReport]) -> Self {
        let mut counts = vec![vec![0; spaces.len()]; ks.len()];
        for report in reports {
            for (i, &k) in ks.iter().enumerate() {
                let best = spaces
                    .iter()
                    .enumerate()
                    .filter_map(|(j, &s)| {
                        report
                            .rows
                            .iter()
                            .find(|r| r.space == s && r.k == k)
                            .map(|r| (j, r.vif))
                    })
                    .fold(None, |acc: Option<(usize, f64)>, (j, v)| match acc {
                        Some((_, bv)) if bv >= v => acc,
                        _ => Some((j, v)),
                    });
                if let Some((j, _)) = best {
                    counts[i][j] += 1;
                }
            }
        }
        Self {
            spaces: spaces.to_vec(),
            ks: ks.to_vec(),
            counts,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub reports: Vec<ImageReport>,
    pub failures: Vec<ImageFailure>,
    pub tally: BestSpaceTally,
}

impl ExperimentOutput {
    pub fn rows(&self) -> impl Iterator<Item = &ExperimentRow> {
        self.reports.iter().flat_map(|r| &r.rows)
    }
}

fn unique_ids(inputs: &[ImageInput]) -> Vec<String> {
    let mut seen = HashSet::new();
    inputs
        .iter()
        .map(|input| {
            let mut id = input.id.clone();
            let mut n = 2;
            while !seen.insert(id.clone()) {
                id = format!("{}-{n}", input.id);
                n += 1;
            }
            id
        })
        .collect()
}

/// Every (space, k) cell for every image. Images are processed in order and
/// their cells in parallel; a failing image is logged and skipped.
pub fn run_experiment(
    inputs: &[ImageInput],
    cfg: &ExperimentConfig,
) -> Result<ExperimentOutput, PipelineError> {
    cfg.validate()?;
    if let Some(dir) = &cfg.image_dir {
        fs::create_dir_all(dir).map_err(|source| PipelineError::Io {
            path: dir.clone(),
            source,
        })?;
    }
    let mut reports = Vec::new();
    let mut failures = Vec::new();
    for (input, id) in inputs.iter().zip(unique_ids(inputs)) {
        match run_image(input, &id, cfg) {
            Ok(report) => reports.push(report),
            Err(e) => {
                log::error!("{id}: {e}");
                failures.push(ImageFailure {
                    id,
                    message: e.to_string(),
                });
            }
        }
    }
    let tally = BestSpaceTally::from_reports(&cfg.spaces, &cfg.ks, &reports);
    Ok(ExperimentOutput {
        reports,
        failures,
        tally,
    })
}

fn run_image(
    input: &ImageInput,
    id: &str,
    cfg: &ExperimentConfig,
) -> Result<ImageReport, PipelineError> {
    let decoded;
    let img = match &input.source {
        ImageSource::File(path) => {
            decoded = decode(path)?;
            &decoded
        }
        ImageSource::Decoded(img) => img,
    };
    let profile = characterize_image(img)?;
    let cells: Vec<(Space, usize)> = cfg
        .spaces
        .iter()
        .flat_map(|&s| cfg.ks.iter().map(move |&k| (s, k)))
        .collect();

    let mut rows = cells
        .par_iter()
        .map(|&(space, k)| {
            let start = Instant::now();
            let q = quantize_image(img, space, &cfg.kmeans(k), cfg.scaling)?;
            let vif = vif_with(img, &q.image, cfg.vif_channel)?;
            if vif <= 0.0 || vif >= 1.0 {
                log::warn!("{id}: VIF {vif} for {space} k={k} clamped before logit");
            }
            let err = mse(img, &q.image)?;
            let ms = if cfg.timings {
                start.elapsed().as_millis() as u64
            } else {
                0
            };
            if let Some(dir) = &cfg.image_dir {
                encode(&q.image, dir.join(format!("{id}_{space}_k{k}.png")))?;
            }
            Ok(ExperimentRow {
                image: id.to_string(),
                i: profile.i,
                j: profile.j,
                space,
                k,
                seed: cfg.seed,
                wcss: q.wcss,
                vif,
                psnr: psnr_from_mse(err),
                logit_vif: logit_vif_clamped(vif),
                y_xyz_or_luv: None,
                clamped: q.clamped,
                ms,
            })
        })
        .collect::<Result<Vec<_>, PipelineError>>()?;

    let vifs: BTreeMap<(Space, usize), f64> =
        rows.iter().map(|r| ((r.space, r.k), r.vif)).collect();
    for row in &mut rows {
        if row.space != Space::Rgb {
            if let Some(&base) = vifs.get(&(Space::Rgb, row.k)) {
                row.y_xyz_or_luv = Some(row.logit_vif - logit_vif_clamped(base));
            }
        }
    }
    let response = partial_response_matrix(&vifs);
    let missing = response.missing_spaces();
    if !missing.is_empty() {
        log::warn!(
            "{id}: response matrix lacks {}",
            missing
                .iter()
                .map(|s| s.as_str())
                .collect::<Vec<_>>()
                .join(", ")
        );
    }
    Ok(ImageReport {
        id: id.to_string(),
        profile,
        rows,
        response,
    })
}

pub fn write_rows<W: std::io::Write>(
    writer: W,
    rows: impl IntoIterator<Item = impl std::borrow::Borrow<ExperimentRow>>,
) -> Result<(), PipelineError> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(writer);
    w.write_record(CSV_HEADER)?;
    for row in rows {
        w.serialize(row.borrow())?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_rows<R: std::io::Read>(reader: R) -> Result<Vec<ExperimentRow>, PipelineError> {
    let mut r = csv::Reader::from_reader(reader);
    let header = r.headers()?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(PipelineError::InvalidConfig(format!(
            "unexpected CSV header: {}",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    r.deserialize()
        .map(|row| row.map_err(PipelineError::from))
        .collect()
}

fn create(path: PathBuf) -> Result<csv::Writer<fs::File>, PipelineError> {
    let file = fs::File::create(&path).map_err(|source| PipelineError::Io { path, source })?;
    Ok(csv::Writer::from_writer(file))
}

fn num(v: f64) -> String {
    v.to_string()
}

/// Writes `results.csv`, `profiles.csv`, `responses.csv` and `tally.csv`
/// into `dir`.
pub fn write_outputs(dir: &Path, output: &ExperimentOutput) -> Result<(), PipelineError> {
    fs::create_dir_all(dir).map_err(|source| PipelineError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let results = dir.join("results.csv");
    let file = fs::File::create(&results).map_err(|source| PipelineError::Io {
        path: results.clone(),
        source,
    })?;
    write_rows(std::io::BufWriter::new(file), output.rows())?;

    let mut w = create(dir.join("profiles.csv"))?;
    let mut header = vec!["image"];
    header.extend(COVARIATE_NAMES);
    header.push("zero_chroma");
    w.write_record(&header)?;
    for r in &output.reports {
        let mut rec = vec![r.id.clone()];
        rec.extend(r.profile.covariates().map(num));
        rec.push(r.profile.zero_chroma.to_string());
        w.write_record(&rec)?;
    }
    w.flush().map_err(csv::Error::from)?;

    let mut w = create(dir.join("responses.csv"))?;
    let mut header = vec!["image".to_string(), "k".to_string()];
    header.extend(RESPONSE_SPACES.iter().map(|s| s.to_string()));
    w.write_record(&header)?;
    for r in &output.reports {
        for (k, row) in r.response.ks.iter().zip(&r.response.rows) {
            let mut rec = vec![r.id.clone(), k.to_string()];
            rec.extend(row.iter().map(|v| v.map(num).unwrap_or_default()));
            w.write_record(&rec)?;
        }
    }
    w.flush().map_err(csv::Error::from)?;

    let mut w = create(dir.join("tally.csv"))?;
    let mut header = vec!["k".to_string()];
    header.extend(output.tally.spaces.iter().map(|s| s.to_string()));
    w.write_record(&header)?;
    for (k, counts) in output.tally.ks.iter().zip(&output.tally.counts) {
        let mut rec = vec![k.to_string()];
        rec.extend(counts.iter().map(|c| c.to_string()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
