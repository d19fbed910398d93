//! Fidelity of a quantized image against its source: VIF, MSE, PSNR, the
//! logit of VIF, and per-image response matrices built from those logits.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::{PixelImage, Space};

mod vif;

pub use vif::{gaussian_window, information_terms, luminance_plane, min_edge, window_len, Plane};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("dimension mismatch: reference is {ref_w}x{ref_h}, distorted is {dist_w}x{dist_h}")]
    DimensionMismatch {
        ref_w: usize,
        ref_h: usize,
        dist_w: usize,
        dist_h: usize,
    },
    #[error("image {width}x{height} is too small for VIF; both edges must be at least {min}")]
    TooSmall {
        width: usize,
        height: usize,
        min: usize,
    },
    #[error("logit is undefined for {0}; argument must lie strictly inside (0, 1)")]
    LogitDomain(f64),
    #[error("missing VIF for space {space} at k = {k}")]
    MissingEntry { space: Space, k: usize },
}

fn check_dims(reference: &PixelImage, distorted: &PixelImage) -> Result<(), MetricsError> {
    if reference.same_dimensions(distorted) {
        Ok(())
    } else {
        Err(MetricsError::DimensionMismatch {
            ref_w: reference.width(),
            ref_h: reference.height(),
            dist_w: distorted.width(),
            dist_h: distorted.height(),
        })
    }
}

/// Plane(s) VIF is computed on.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub enum VifChannel {
    /// Luminance from linearized RGB.
    #[default]
    Luminance,
    /// Mean of the VIFs of the R, G and B planes on the 8-bit scale.
    RgbMean,
}

/// Pixel-domain VIF on the luminance plane, in `[0, 1]`.
///
/// A flat reference carries no information; the score is then 1 when the
/// distorted plane is identical and 0 otherwise.
pub fn vif(reference: &PixelImage, distorted: &PixelImage) -> Result<f64, MetricsError> {
    vif_with(reference, distorted, VifChannel::Luminance)
}

pub fn vif_with(
    reference: &PixelImage,
    distorted: &PixelImage,
    channel: VifChannel,
) -> Result<f64, MetricsError> {
    check_dims(reference, distorted)?;
    let min = min_edge();
    if reference.width() < min || reference.height() < min {
        return Err(MetricsError::TooSmall {
            width: reference.width(),
            height: reference.height(),
            min,
        });
    }
    match channel {
        VifChannel::Luminance => Ok(plane_vif(
            &luminance_plane(reference),
            &luminance_plane(distorted),
        )),
        VifChannel::RgbMean => {
            let total: f64 = (0..3)
                .map(|c| plane_vif(&channel_plane(reference, c), &channel_plane(distorted, c)))
                .sum();
            Ok(total / 3.0)
        }
    }
}

fn channel_plane(img: &PixelImage, c: usize) -> Plane {
    let data = img
        .samples()
        .iter()
        .skip(c)
        .step_by(3)
        .map(|&v| f64::from(v))
        .collect();
    Plane::new(img.width(), img.height(), data)
}

fn plane_vif(r: &Plane, d: &Plane) -> f64 {
    let (num, den) = information_terms(r, d);
    if den <= 0.0 {
        return if r == d { 1.0 } else { 0.0 };
    }
    (num / den).clamp(0.0, 1.0)
}

/// Mean squared error over all pixels and channels, 8-bit scale.
pub fn mse(reference: &PixelImage, distorted: &PixelImage) -> Result<f64, MetricsError> {
    check_dims(reference, distorted)?;
    let n = reference.samples().len();
    if n == 0 {
        return Ok(0.0);
    }
    let sse: u64 = reference
        .samples()
        .iter()
        .zip(distorted.samples())
        .map(|(&a, &b)| {
            let d = a.abs_diff(b) as u64;
            d * d
        })
        .sum();
    Ok(sse as f64 / n as f64)
}

/// Peak signal-to-noise ratio in dB for a given MSE; `+inf` at zero error.
pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (255.0 * 255.0 / mse).log10()
    }
}

pub fn psnr(reference: &PixelImage, distorted: &PixelImage) -> Result<f64, MetricsError> {
    mse(reference, distorted).map(psnr_from_mse)
}

/// `ln(v / (1 - v))`.
pub fn logit_vif(v: f64) -> Result<f64, MetricsError> {
    if v > 0.0 && v < 1.0 {
        Ok((v / (1.0 - v)).ln())
    } else {
        Err(MetricsError::LogitDomain(v))
    }
}

/// Bounds VIF values are pulled into before taking a logit when a boundary
/// score must not abort a batch.
pub const LOGIT_CLAMP: (f64, f64) = (1e-9, 1.0 - 1e-9);

pub fn logit_vif_clamped(v: f64) -> f64 {
    let v = v.clamp(LOGIT_CLAMP.0, LOGIT_CLAMP.1);
    (v / (1.0 - v)).ln()
}

/// Every fidelity number for one (image, space, k) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct QualityReport {
    pub space: Space,
    pub k: usize,
    pub wcss: f64,
    pub vif: f64,
    pub mse: f64,
    pub psnr: f64,
    /// `None` when the VIF sits on the boundary of `[0, 1]`.
    pub logit_vif: Option<f64>,
}

impl QualityReport {
    pub fn evaluate(
        space: Space,
        k: usize,
        wcss: f64,
        reference: &PixelImage,
        distorted: &PixelImage,
    ) -> Result<Self, MetricsError> {
        let vif = vif(reference, distorted)?;
        let mse = mse(reference, distorted)?;
        Ok(Self {
            space,
            k,
            wcss,
            vif,
            mse,
            psnr: psnr_from_mse(mse),
            logit_vif: logit_vif(vif).ok(),
        })
    }
}

/// Spaces compared against RGB in a response matrix.
pub const RESPONSE_SPACES: [Space; 2] = [Space::Xyz, Space::Luv];

/// Logit-VIF differences against RGB, one row per palette size.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseMatrix {
    pub ks: Vec<usize>,
    /// `rows[i][j]` is `logit(VIF[RESPONSE_SPACES[j], ks[i]]) - logit(VIF[Rgb, ks[i]])`,
    /// or `None` when that space was not evaluated.
    pub rows: Vec<[Option<f64>; 2]>,
}

impl ResponseMatrix {
    pub fn get(&self, space: Space, k: usize) -> Option<f64> {
        let j = RESPONSE_SPACES
            .iter()
            .position(|&s| s == lum_alias(space))?;
        let i = self.ks.iter().position(|&x| x == k)?;
        self.rows[i][j]
    }

    /// Whether every entry is present.
    pub fn is_complete(&self) -> bool {
        self.rows.iter().flatten().all(Option::is_some)
    }

    /// Response spaces with no entry at any palette size.
    pub fn missing_spaces(&self) -> Vec<Space> {
        RESPONSE_SPACES
            .iter()
            .enumerate()
            .filter(|&(j, _)| self.rows.iter().all(|r| r[j].is_none()))
            .map(|(_, &s)| s)
            .collect()
    }
}

fn lum_alias(space: Space) -> Space {
    if space == Space::Hcl {
        Space::Luv
    } else {
        space
    }
}

fn lookup(vifs: &BTreeMap<(Space, usize), f64>, space: Space, k: usize) -> Option<f64> {
    vifs.get(&(space, k)).copied().or_else(|| {
        (space == Space::Luv)
            .then(|| vifs.get(&(Space::Hcl, k)).copied())
            .flatten()
    })
}

/// Response matrix over `ks`. Every RGB, XYZ and LUV entry must be present
/// (an HCL entry stands in for a missing LUV one) and strictly inside
/// `(0, 1)`.
pub fn response_matrix(
    vifs: &BTreeMap<(Space, usize), f64>,
    ks: &[usize],
) -> Result<ResponseMatrix, MetricsError> {
    let mut rows = Vec::with_capacity(ks.len());
    for &k in ks {
        let get = |space| lookup(vifs, space, k).ok_or(MetricsError::MissingEntry { space, k });
        let base = logit_vif(get(Space::Rgb)?)?;
        let mut row = [None; 2];
        for (slot, &space) in row.iter_mut().zip(&RESPONSE_SPACES) {
            *slot = Some(logit_vif(get(space)?)? - base);
        }
        rows.push(row);
    }
    Ok(ResponseMatrix {
        ks: ks.to_vec(),
        rows,
    })
}

/// Lenient variant for batch output: palette sizes without an RGB entry are
/// dropped, other missing entries are left as `None`, and boundary VIF values
/// are clamped into [`LOGIT_CLAMP`].
pub fn partial_response_matrix(vifs: &BTreeMap<(Space, usize), f64>) -> ResponseMatrix {
    let mut ks: Vec<usize> = vifs.keys().map(|&(_, k)| k).collect();
    ks.dedup();
    ks.sort_unstable();
    ks.dedup();
    let mut out = ResponseMatrix {
        ks: Vec::new(),
        rows: Vec::new(),
    };
    for k in ks {
        let Some(base) = lookup(vifs, Space::Rgb, k) else {
            continue;
        };
        let b = logit_vif_clamped(base);
        out.ks.push(k);
        out.rows
            .push(RESPONSE_SPACES.map(|s| lookup(vifs, s, k).map(|v| logit_vif_clamped(v) - b)));
    }
    out
}
