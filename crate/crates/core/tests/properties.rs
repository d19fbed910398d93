mod common;

use cq_core::colorspace::{
    from_srgb8, hcl_to_luv, luv_to_hcl, rgb_to_xyz, to_gamma_rgb, xyz_to_luv, ColorSpace, Hcl,
    LinearRgb, NormalizationParams, Scaling, WhitePoint,
};
use cq_core::imagestats::{characterize_image, circular_summary, linear_summary, trig_moment};
use cq_core::metrics::{logit_vif, mse, psnr, psnr_from_mse};
use cq_core::pipeline::{read_rows, write_rows, ExperimentRow};
use cq_core::quantizer::{run_kmeans, wcss, KMeansConfig, PixelDataset};
use cq_core::{PixelImage, Space};
use proptest::prelude::*;

fn pixel() -> impl Strategy<Value = [u8; 3]> {
    any::<[u8; 3]>()
}

fn unit_points(max: usize) -> impl Strategy<Value = Vec<[f64; 3]>> {
    prop::collection::vec(prop::array::uniform3(0.0f64..=1.0), 1..max)
}

fn space() -> impl Strategy<Value = Space> {
    prop::sample::select(Space::ALL.to_vec())
}

fn naive_circular(angles: &[f64]) -> [f64; 5] {
    let n = angles.len() as f64;
    let moment = |p: f64| {
        let c = angles
            .iter()
            .map(|a| (p * a).to_radians().cos())
            .sum::<f64>()
            / n;
        let s = angles
            .iter()
            .map(|a| (p * a).to_radians().sin())
            .sum::<f64>()
            / n;
        (c.hypot(s), s.atan2(c))
    };
    let (r, mu) = moment(1.0);
    let (r2, mu2) = moment(2.0);
    let gap = 1.0 - r;
    [
        mu.to_degrees().rem_euclid(360.0),
        r,
        (-2.0 * r.ln()).sqrt(),
        r2 * (mu2 - 2.0 * mu).sin() / gap.powf(1.5),
        (r2 * (mu2 - 2.0 * mu).cos() - r.powi(4)) / (gap * gap),
    ]
}

proptest! {
    #[test]
    fn every_space_round_trips_8bit(p in pixel(), s in space()) {
        let ws = s.working_space();
        let (g, clamped) = to_gamma_rgb(ws, from_srgb8(ws, p));
        prop_assert!(!clamped);
        for (a, b) in g.to_array().iter().zip(p) {
            prop_assert!((a - b as f64 / 255.0).abs() <= 0.5 / 255.0);
        }
    }

    #[test]
    fn fixed_normalization_inverts(p in pixel(), s in space()) {
        let ws = s.working_space();
        let params = NormalizationParams::fixed(ws);
        let x = from_srgb8(ws, p);
        let (u, clamped) = params.normalize(x);
        prop_assert!(!clamped);
        prop_assert!(u.iter().all(|v| (0.0..=1.0).contains(v)));
        let back = params.denormalize(u);
        for (a, b) in back.iter().zip(x) {
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn hcl_polar_round_trip(h in 0.0f64..360.0, c in 0.001f64..180.0, l in 0.0f64..100.0) {
        let back = luv_to_hcl(hcl_to_luv(Hcl::new(h, c, l)).unwrap());
        let dh = (back.h - h).rem_euclid(360.0);
        prop_assert!(dh.min(360.0 - dh) < 1e-9);
        prop_assert!((back.c - c).abs() < 1e-9);
        prop_assert_eq!(back.l, l);
    }

    #[test]
    fn luv_lightness_is_bounded(p in pixel()) {
        let luv = xyz_to_luv(rgb_to_xyz(LinearRgb::from_srgb8(p)), &WhitePoint::D65);
        prop_assert!(luv.l >= 0.0 && luv.l <= 100.0 + 1e-5);
    }

    #[test]
    fn kmeans_invariants(pts in unit_points(60), k in 1usize..6, seed in any::<u64>()) {
        let data = PixelDataset::from_unit_points(pts.clone()).unwrap();
        prop_assume!(data.distinct_up_to(k) >= k);
        let cfg = KMeansConfig::new(k).with_seed(seed).with_restarts(2);
        let a = run_kmeans(&data, &cfg).unwrap();
        let b = run_kmeans(&data, &cfg).unwrap();
        prop_assert_eq!(&a.palette, &b.palette);
        prop_assert_eq!(&a.assignment, &b.assignment);
        prop_assert!(a.assignment.counts.iter().all(|&c| c > 0));
        prop_assert_eq!(a.assignment.counts.iter().sum::<usize>(), pts.len());
        let recomputed = wcss(&data, &a.palette, &a.assignment).unwrap();
        prop_assert!((recomputed - a.wcss).abs() <= 1e-12 * (1.0 + a.wcss));
        prop_assert!(common::hartigan_locally_optimal(&pts, &a.assignment.labels, k, 1e-12));
        for t in &a.traces {
            for w in t.wcss_history.windows(2) {
                prop_assert!(w[1] <= w[0] * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn linear_summary_affine(xs in prop::collection::vec(-100.0f64..100.0, 3..40),
                             shift in -50.0f64..50.0, scale in 0.1f64..10.0) {
        let a = linear_summary(&xs).unwrap();
        prop_assume!(!a.degenerate && a.sd > 1e-3);
        let moved: Vec<f64> = xs.iter().map(|x| x * scale + shift).collect();
        let b = linear_summary(&moved).unwrap();
        prop_assert!((b.mean - (a.mean * scale + shift)).abs() < 1e-8 * (1.0 + b.mean.abs()));
        prop_assert!((b.sd - a.sd * scale).abs() < 1e-8 * b.sd);
        prop_assert!((b.skewness - a.skewness).abs() < 1e-6);
        prop_assert!((b.kurtosis - a.kurtosis).abs() < 1e-6);
        prop_assert!(a.kurtosis >= 1.0 - 1e-12);
        let flipped: Vec<f64> = xs.iter().map(|x| -x).collect();
        let c = linear_summary(&flipped).unwrap();
        prop_assert!((c.skewness + a.skewness).abs() < 1e-9);
    }

    #[test]
    fn circular_matches_naive(angles in prop::collection::vec(0.0f64..360.0, 1..=12)) {
        let s = circular_summary(&angles).unwrap();
        prop_assume!(!s.degenerate && !s.mean_undefined && s.resultant_length > 1e-6);
        let naive = naive_circular(&angles);
        let d = (s.mean_direction - naive[0]).rem_euclid(360.0);
        prop_assert!(d.min(360.0 - d) < 1e-12 * 360.0);
        prop_assert!((s.resultant_length - naive[1]).abs() < 1e-12);
        prop_assert!((s.sd - naive[2]).abs() < 1e-12 * (1.0 + naive[2]));
        let tol = |v: f64| 1e-12 * (1.0 + v.abs()) / (1.0 - s.resultant_length).powi(2);
        prop_assert!((s.skewness - naive[3]).abs() < tol(naive[3]), "{} {}", s.skewness, naive[3]);
        prop_assert!((s.kurtosis - naive[4]).abs() < tol(naive[4]), "{} {}", s.kurtosis, naive[4]);
        prop_assert_eq!(s.sd, (-2.0 * s.resultant_length.ln()).sqrt());
    }

    #[test]
    fn trig_moment_of_constant(theta in 0.0f64..360.0, p in 1u32..5) {
        let m = trig_moment(&[theta; 4], p).unwrap();
        prop_assert!((m.resultant_length - 1.0).abs() < 1e-12);
        let d = (m.mean_direction - (p as f64 * theta).rem_euclid(360.0)).rem_euclid(360.0);
        prop_assert!(d.min(360.0 - d) < 1e-9);
    }

    #[test]
    fn profile_ignores_pixel_order(px in prop::collection::vec(pixel(), 12), rot in 0usize..12) {
        let a = PixelImage::from_pixels(4, 3, &px).unwrap();
        let mut shuffled = px.clone();
        shuffled.rotate_left(rot);
        shuffled.reverse();
        let b = PixelImage::from_pixels(3, 4, &shuffled).unwrap();
        let (pa, pb) = (characterize_image(&a).unwrap(), characterize_image(&b).unwrap());
        for (x, y) in pa.covariates().iter().zip(pb.covariates()) {
            prop_assert!((x - y).abs() <= 1e-9 * (1.0 + x.abs()), "{} vs {}", x, y);
        }
    }

    #[test]
    fn psnr_agrees_with_mse(a in prop::collection::vec(any::<u8>(), 12), b in prop::collection::vec(any::<u8>(), 12)) {
        let ia = PixelImage::new(2, 2, a).unwrap();
        let ib = PixelImage::new(2, 2, b).unwrap();
        let m = mse(&ia, &ib).unwrap();
        let p = psnr(&ia, &ib).unwrap();
        prop_assert_eq!(p, psnr_from_mse(m));
        prop_assert_eq!(p.is_finite(), m > 0.0);
    }

    #[test]
    fn logit_is_monotone(a in 1e-6f64..1.0 - 1e-6, b in 1e-6f64..1.0 - 1e-6) {
        prop_assume!(a < b);
        prop_assert!(logit_vif(a).unwrap() < logit_vif(b).unwrap());
    }

    #[test]
    fn csv_rows_round_trip(rows in prop::collection::vec(
        (any::<u64>(), 1usize..1000, space(), 0.0f64..1e3, 0.0f64..=1.0, prop::option::of(-30.0f64..30.0), any::<u32>()),
        0..8,
    )) {
        let rows: Vec<ExperimentRow> = rows
            .into_iter()
            .map(|(seed, k, space, w, v, y, c)| ExperimentRow {
                image: format!("im \"{k}\", x"),
                i: k,
                j: k + 1,
                space,
                k,
                seed,
                wcss: w,
                vif: v,
                psnr: if v == 1.0 { f64::INFINITY } else { -10.0 * (1.0 - v).log10() },
                logit_vif: cq_core::metrics::logit_vif_clamped(v),
                y_xyz_or_luv: y,
                clamped: c as usize,
                ms: seed >> 40,
            })
            .collect();
        let mut buf = Vec::new();
        write_rows(&mut buf, &rows).unwrap();
        prop_assert_eq!(read_rows(buf.as_slice()).unwrap(), rows);
    }
}

#[test]
fn minmax_scaling_spans_unit_cube() {
    let px = [[10u8, 200, 30], [90, 15, 255], [45, 45, 45]];
    let pts: Vec<[f64; 3]> = px.iter().map(|&p| from_srgb8(ColorSpace::Luv, p)).collect();
    let params = NormalizationParams::for_points(ColorSpace::Luv, Scaling::MinMax, &pts);
    for j in 0..3 {
        let mapped: Vec<f64> = pts.iter().map(|&p| params.normalize(p).0[j]).collect();
        let lo = mapped.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = mapped.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!(lo.abs() < 1e-12 && (hi - 1.0).abs() < 1e-12);
    }
}
