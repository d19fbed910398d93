//! Pixel-domain visual information fidelity over a four-scale Gaussian
//! pyramid of the luminance plane.

use rayon::prelude::*;

use crate::colorspace::{linearize_u8, RGB_TO_XYZ};
use crate::PixelImage;

pub const SCALES: usize = 4;
/// Variance of the additive visual noise channel.
pub const NOISE_VARIANCE: f64 = 2.0;
const EPS: f64 = 1e-10;

/// Single-channel `f64` image, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl Plane {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), width * height, "plane shape mismatch");
        Self {
            width,
            height,
            data,
        }
    }

    fn zip_map(&self, other: &Plane, f: impl Fn(f64, f64) -> f64 + Sync) -> Plane {
        let data = self
            .data
            .par_iter()
            .zip(&other.data)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Plane::new(self.width, self.height, data)
    }

    /// Correlation with a separable kernel keeping only fully covered
    /// positions.
    fn filter_valid(&self, kernel: &[f64]) -> Plane {
        let n = kernel.len();
        let w = self.width + 1 - n;
        let h = self.height + 1 - n;
        let horizontal: Vec<f64> = self
            .data
            .par_chunks(self.width)
            .flat_map_iter(|row| {
                (0..w).map(move |x| {
                    row[x..x + n]
                        .iter()
                        .zip(kernel)
                        .map(|(a, b)| a * b)
                        .sum::<f64>()
                })
            })
            .collect();
        let data: Vec<f64> = (0..h)
            .into_par_iter()
            .flat_map_iter(|y| {
                let horizontal = &horizontal;
                (0..w).map(move |x| {
                    kernel
                        .iter()
                        .enumerate()
                        .map(|(j, kv)| kv * horizontal[(y + j) * w + x])
                        .sum::<f64>()
                })
            })
            .collect();
        Plane::new(w, h, data)
    }

    /// Keeps every second row and column starting from the first.
    fn decimate(&self) -> Plane {
        let w = self.width.div_ceil(2);
        let h = self.height.div_ceil(2);
        let mut data = Vec::with_capacity(w * h);
        for y in (0..self.height).step_by(2) {
            let row = &self.data[y * self.width..(y + 1) * self.width];
            data.extend(row.iter().step_by(2));
        }
        Plane::new(w, h, data)
    }
}

/// Luminance plane on the 0–255 scale: the `Y` row of the RGB→XYZ matrix
/// applied to linearized channels.
pub fn luminance_plane(img: &PixelImage) -> Plane {
    let [wr, wg, wb] = RGB_TO_XYZ[1];
    let data = img
        .samples()
        .par_chunks_exact(3)
        .map(|p| {
            255.0 * (wr * linearize_u8(p[0]) + wg * linearize_u8(p[1]) + wb * linearize_u8(p[2]))
        })
        .collect();
    Plane::new(img.width(), img.height(), data)
}

/// Window length at `scale` (0-based): 17, 9, 5, 3.
pub fn window_len(scale: usize) -> usize {
    (1 << (SCALES - scale)) + 1
}

/// Normalized Gaussian taps with standard deviation `len / 5`.
pub fn gaussian_window(len: usize) -> Vec<f64> {
    let sigma = len as f64 / 5.0;
    let mid = (len as f64 - 1.0) / 2.0;
    let taps: Vec<f64> = (0..len)
        .map(|i| {
            let t = i as f64 - mid;
            (-t * t / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let s: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / s).collect()
}

fn edge_fits(mut n: usize) -> bool {
    for scale in 0..SCALES {
        let len = window_len(scale);
        if scale > 0 {
            if n < len {
                return false;
            }
            n = (n + 1 - len).div_ceil(2);
        }
        if n < len {
            return false;
        }
    }
    true
}

/// Smallest edge length for which every pyramid level still holds one full
/// window.
pub fn min_edge() -> usize {
    (1..).find(|&n| edge_fits(n)).unwrap()
}

/// Sums of the information terms over all scales: `(numerator, denominator)`.
pub fn information_terms(reference: &Plane, distorted: &Plane) -> (f64, f64) {
    let mut r = reference.clone();
    let mut d = distorted.clone();
    let mut num = 0.0;
    let mut den = 0.0;
    for scale in 0..SCALES {
        let win = gaussian_window(window_len(scale));
        if scale > 0 {
            r = r.filter_valid(&win).decimate();
            d = d.filter_valid(&win).decimate();
        }
        let mu1 = r.filter_valid(&win);
        let mu2 = d.filter_valid(&win);
        let rr = r.zip_map(&r, |a, b| a * b).filter_valid(&win);
        let dd = d.zip_map(&d, |a, b| a * b).filter_valid(&win);
        let rd = r.zip_map(&d, |a, b| a * b).filter_valid(&win);

        let (n, e) = (0..mu1.data.len())
            .into_par_iter()
            .with_min_len(1024)
            .map(|i| {
                let (m1, m2) = (mu1.data[i], mu2.data[i]);
                let sigma1_sq = (rr.data[i] - m1 * m1).max(0.0);
                let mut sigma2_sq = (dd.data[i] - m2 * m2).max(0.0);
                let sigma12 = rd.data[i] - m1 * m2;

                let mut g = sigma12 / (sigma1_sq + EPS);
                let mut sv_sq = sigma2_sq - g * sigma12;
                if sigma1_sq < EPS {
                    g = 0.0;
                    sv_sq = sigma2_sq;
                }
                let sigma1_sq = if sigma1_sq < EPS { 0.0 } else { sigma1_sq };
                if sigma2_sq < EPS {
                    g = 0.0;
                    sv_sq = 0.0;
                    sigma2_sq = 0.0;
                }
                if g < 0.0 {
                    sv_sq = sigma2_sq;
                    g = 0.0;
                }
                let sv_sq = sv_sq.max(EPS);

                let num = (1.0 + g * g * sigma1_sq / (sv_sq + NOISE_VARIANCE)).log10();
                let den = (1.0 + sigma1_sq / NOISE_VARIANCE).log10();
                (num, den)
            })
            .fold(|| (0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1))
            .collect::<Vec<_>>()
            .into_iter()
            .fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
        num += n;
        den += e;
    }
    (num, den)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn windows() {
        let lens: Vec<usize> = (0..SCALES).map(window_len).collect();
        assert_eq!(lens, [17, 9, 5, 3]);
        for len in lens {
            let w = gaussian_window(len);
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!((w[0] - w[len - 1]).abs() < 1e-15);
        }
    }

    #[test]
    fn min_edge_is_tight() {
        let m = min_edge();
        assert!(edge_fits(m));
        assert!(!edge_fits(m - 1));
        assert_eq!(m, 41);
    }

    #[test]
    fn valid_filter_of_constant_is_constant() {
        let p = Plane::new(10, 7, vec![3.0; 70]);
        let f = p.filter_valid(&gaussian_window(5));
        assert_eq!((f.width, f.height), (6, 3));
        assert!(f.data.iter().all(|v| (v - 3.0).abs() < 1e-12));
        let d = p.decimate();
        assert_eq!((d.width, d.height), (5, 4));
    }

    #[test]
    fn luminance_of_white_is_row_sum() {
        let img = PixelImage::filled(1, 1, [255, 255, 255]);
        let y = luminance_plane(&img).data[0];
        assert!((y - 255.0 * RGB_TO_XYZ[1].iter().sum::<f64>()).abs() < 1e-9);
    }
}
