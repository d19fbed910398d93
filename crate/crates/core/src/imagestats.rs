//! Distributional summaries of an image's hue (circular), chroma and
//! luminance (linear).

use rayon::prelude::*;
use thiserror::Error;

use crate::colorspace::{from_srgb8, wrap_degrees, ColorSpace};
use crate::sum::{chunked_sum, chunked_sum_by};
use crate::PixelImage;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("cannot summarize an empty sample")]
    Empty,
    #[error("sample contains a non-finite value at index {0}")]
    NonFinite(usize),
}

/// Mean, SD (`n - 1` divisor), Fisher-Pearson skewness and Pearson kurtosis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearSummary {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    pub skewness: f64,
    pub kurtosis: f64,
    /// Zero spread: skewness and kurtosis are reported as 0.
    pub degenerate: bool,
}

/// First-order circular summary plus the skewness and kurtosis built from
/// the second trigonometric moment. Angles are in degrees; `sd` is in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircularSummary {
    pub n: usize,
    pub mean_direction: f64,
    pub resultant_length: f64,
    pub sd: f64,
    pub skewness: f64,
    pub kurtosis: f64,
    /// `R̄ = 1`: skewness and kurtosis are reported as 0.
    pub degenerate: bool,
    /// `R̄ = 0`: the mean direction is reported as 0.
    pub mean_undefined: bool,
}

/// `p`-th trigonometric moment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrigMoment {
    pub cos_mean: f64,
    pub sin_mean: f64,
    pub resultant_length: f64,
    /// Degrees in `[0, 360)`.
    pub mean_direction: f64,
    pub undefined: bool,
}

fn check_finite(samples: &[f64]) -> Result<(), StatsError> {
    if samples.is_empty() {
        return Err(StatsError::Empty);
    }
    match samples.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(StatsError::NonFinite(i)),
        None => Ok(()),
    }
}

/// Two-pass central moments.
pub fn linear_summary(samples: &[f64]) -> Result<LinearSummary, StatsError> {
    check_finite(samples)?;
    let n = samples.len();
    let nf = n as f64;
    let first = samples[0];
    let constant = samples.par_iter().all(|&x| x == first);
    let mean = if constant {
        first
    } else {
        chunked_sum(samples) / nf
    };
    let m2 = chunked_sum_by(samples, |&x| (x - mean).powi(2)) / nf;
    if constant || m2 == 0.0 {
        return Ok(LinearSummary {
            n,
            mean,
            sd: 0.0,
            skewness: 0.0,
            kurtosis: 0.0,
            degenerate: true,
        });
    }
    let m3 = chunked_sum_by(samples, |&x| (x - mean).powi(3)) / nf;
    let m4 = chunked_sum_by(samples, |&x| (x - mean).powi(4)) / nf;
    Ok(LinearSummary {
        n,
        mean,
        sd: (m2 * nf / (nf - 1.0)).sqrt(),
        skewness: m3 / m2.powf(1.5),
        kurtosis: m4 / (m2 * m2),
        degenerate: false,
    })
}

/// Trigonometric moment of order `p` for angles in degrees. Each `p·θ` is
/// reduced modulo 360° before conversion to radians.
pub fn trig_moment(angles: &[f64], p: u32) -> Result<TrigMoment, StatsError> {
    check_finite(angles)?;
    let nf = angles.len() as f64;
    let pf = f64::from(p);
    let rad = |&t: &f64| (pf * t).rem_euclid(360.0).to_radians();
    let cos_mean = chunked_sum_by(angles, |t| rad(t).cos()) / nf;
    let sin_mean = chunked_sum_by(angles, |t| rad(t).sin()) / nf;
    let resultant_length = cos_mean.hypot(sin_mean).min(1.0);
    let undefined = resultant_length == 0.0;
    let mean_direction = if undefined {
        0.0
    } else {
        wrap_degrees(sin_mean.atan2(cos_mean).to_degrees())
    };
    Ok(TrigMoment {
        cos_mean,
        sin_mean,
        resultant_length,
        mean_direction,
        undefined,
    })
}

/// Below this gap to 1, `R̄` is treated as 1.
const DEGENERATE_GAP: f64 = 1e-12;

/// `a - b` in degrees, reduced to `(-180, 180]`.
fn angle_difference(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    if d > 180.0 {
        d - 360.0
    } else {
        d
    }
}

pub fn circular_summary(angles: &[f64]) -> Result<CircularSummary, StatsError> {
    let m1 = trig_moment(angles, 1)?;
    let m2 = trig_moment(angles, 2)?;
    let r = m1.resultant_length;
    let sd = (-2.0 * r.ln()).sqrt();
    let gap = 1.0 - r;
    let degenerate = gap < DEGENERATE_GAP;
    let (skewness, kurtosis) = if degenerate {
        (0.0, 0.0)
    } else {
        let d = angle_difference(m2.mean_direction, 2.0 * m1.mean_direction).to_radians();
        let r2 = m2.resultant_length;
        (
            r2 * d.sin() / gap.powf(1.5),
            (r2 * d.cos() - r.powi(4)) / (gap * gap),
        )
    };
    Ok(CircularSummary {
        n: angles.len(),
        mean_direction: m1.mean_direction,
        resultant_length: r,
        sd: if degenerate { 0.0 } else { sd },
        skewness,
        kurtosis,
        degenerate,
        mean_undefined: m1.undefined,
    })
}

/// Per-image covariates: edge lengths and the hue, chroma and luminance
/// summaries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageProfile {
    /// Shorter edge in pixels.
    pub i: usize,
    /// Longer edge in pixels.
    pub j: usize,
    pub hue: CircularSummary,
    pub chroma: LinearSummary,
    pub luminance: LinearSummary,
    /// Pixels with zero chroma, whose hue is taken as 0°.
    pub zero_chroma: usize,
    /// Whether those pixels were left out of the hue summary.
    pub zero_chroma_excluded: bool,
}

pub const COVARIATE_NAMES: [&str; 14] = [
    "I", "J", "sd_H", "skew_H", "kurt_H", "mean_C", "sd_C", "skew_C", "kurt_C", "mean_L", "sd_L",
    "skew_L", "kurt_L", "mean_H",
];

impl ImageProfile {
    /// Values in the order of [`COVARIATE_NAMES`].
    pub fn covariates(&self) -> [f64; 14] {
        [
            self.i as f64,
            self.j as f64,
            self.hue.sd,
            self.hue.skewness,
            self.hue.kurtosis,
            self.chroma.mean,
            self.chroma.sd,
            self.chroma.skewness,
            self.chroma.kurtosis,
            self.luminance.mean,
            self.luminance.sd,
            self.luminance.skewness,
            self.luminance.kurtosis,
            self.hue.mean_direction,
        ]
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ProfileOptions {
    pub exclude_zero_chroma: bool,
}

pub fn characterize_image(img: &PixelImage) -> Result<ImageProfile, StatsError> {
    characterize_image_with(img, ProfileOptions::default())
}

pub fn characterize_image_with(
    img: &PixelImage,
    opts: ProfileOptions,
) -> Result<ImageProfile, StatsError> {
    if img.pixel_count() == 0 {
        return Err(StatsError::Empty);
    }
    let hcl: Vec<[f64; 3]> = img
        .samples()
        .par_chunks_exact(3)
        .map(|p| from_srgb8(ColorSpace::Hcl, [p[0], p[1], p[2]]))
        .collect();
    let zero_chroma = hcl.iter().filter(|p| p[1] == 0.0).count();
    let hues: Vec<f64> = if opts.exclude_zero_chroma {
        hcl.iter().filter(|p| p[1] != 0.0).map(|p| p[0]).collect()
    } else {
        hcl.iter().map(|p| p[0]).collect()
    };
    let chroma: Vec<f64> = hcl.iter().map(|p| p[1]).collect();
    let luminance: Vec<f64> = hcl.iter().map(|p| p[2]).collect();
    let hue = if hues.is_empty() {
        circular_summary(&[0.0])?
    } else {
        circular_summary(&hues)?
    };
    let (i, j) = img.edges();
    Ok(ImageProfile {
        i,
        j,
        hue,
        chroma: linear_summary(&chroma)?,
        luminance: linear_summary(&luminance)?,
        zero_chroma,
        zero_chroma_excluded: opts.exclude_zero_chroma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_sample_is_degenerate() {
        let s = linear_summary(&[2.5; 3]).unwrap();
        assert_eq!((s.mean, s.sd, s.skewness, s.kurtosis), (2.5, 0.0, 0.0, 0.0));
        assert!(s.degenerate);
        assert_eq!(linear_summary(&[]), Err(StatsError::Empty));
        assert_eq!(
            linear_summary(&[1.0, f64::NAN]),
            Err(StatsError::NonFinite(1))
        );
    }

    #[test]
    fn three_point_moments() {
        let s = linear_summary(&[-1.0, 0.0, 1.0]).unwrap();
        assert_eq!(s.mean, 0.0);
        assert!((s.sd - 1.0).abs() < 1e-15);
        assert_eq!(s.skewness, 0.0);
        assert!((s.kurtosis - 1.5).abs() < 1e-12);
    }

    #[test]
    fn equal_angles() {
        for p in 1..4 {
            let m = trig_moment(&[100.0; 5], p).unwrap();
            assert!((m.resultant_length - 1.0).abs() < 1e-15);
            assert!((m.mean_direction - (100.0 * p as f64) % 360.0).abs() < 1e-9);
        }
        let c = circular_summary(&[42.0; 7]).unwrap();
        assert!(c.degenerate);
        assert_eq!((c.sd, c.skewness, c.kurtosis), (0.0, 0.0, 0.0));
    }

    #[test]
    fn wraparound_pair() {
        let c = circular_summary(&[1.0, 359.0]).unwrap();
        let dist = c.mean_direction.min(360.0 - c.mean_direction);
        assert!(dist < 1e-9, "{}", c.mean_direction);
        assert!((c.resultant_length - 1f64.to_radians().cos()).abs() < 1e-15);
        let expect = (-2.0 * 1f64.to_radians().cos().ln()).sqrt();
        assert!((c.sd - expect).abs() < 1e-12);
        assert!((c.sd - 0.017453).abs() < 1e-6);
    }

    #[test]
    fn antipodal_set() {
        let base = [10.0, 37.5, 80.0, 200.0];
        let angles: Vec<f64> = base
            .iter()
            .chain(&base.map(|t| t + 180.0))
            .copied()
            .collect();
        let m = trig_moment(&angles, 1).unwrap();
        assert!(m.resultant_length <= 1e-12);
    }

    #[test]
    fn difference_reduction() {
        assert_eq!(angle_difference(10.0, 350.0), 20.0);
        assert_eq!(angle_difference(350.0, 10.0), -20.0);
        assert_eq!(angle_difference(180.0, 0.0), 180.0);
        assert_eq!(angle_difference(0.0, 180.0), 180.0);
    }

    #[test]
    fn constant_image_profile() {
        let img = PixelImage::filled(5, 3, [200, 40, 90]);
        let p = characterize_image(&img).unwrap();
        assert_eq!((p.i, p.j), (3, 5));
        assert!(p.hue.degenerate && p.chroma.degenerate && p.luminance.degenerate);
        assert_eq!(p.chroma.sd, 0.0);
        assert_eq!(p.zero_chroma, 0);
        assert!(characterize_image(&PixelImage::filled(0, 4, [0; 3])).is_err());
    }

    #[test]
    fn black_pixels_count_as_zero_chroma() {
        let img = PixelImage::from_pixels(2, 1, &[[0, 0, 0], [255, 0, 0]]).unwrap();
        let p = characterize_image(&img).unwrap();
        assert_eq!(p.zero_chroma, 1);
        assert_eq!(p.hue.n, 2);
        let q = characterize_image_with(
            &img,
            ProfileOptions {
                exclude_zero_chroma: true,
            },
        )
        .unwrap();
        assert_eq!(q.hue.n, 1);
        assert!(q.hue.degenerate);
    }
}
