//! Transforms among gamma-encoded sRGB, linear RGB, CIE-XYZ (with xy
//! chromaticity), CIE-LUV and its polar form HCL.
//!
//! All transforms use the D65 reference white and the 2° observer. XYZ values
//! produced by [`rgb_to_xyz`] are on the unit scale (`Y <= ~1.0`); the
//! reference white is stored on the 0–100 scale, so every ratio against it is
//! formed after multiplying by 100.
//!
//! The stored reference tristimulus `(95.5, 100, 108.9)` is not exactly the
//! row sum of the RGB→XYZ matrix (`(95.047, 100.000, 108.883)`); gray pixels
//! therefore carry a small nonzero chroma (about `0.0116 * L`).

use std::sync::LazyLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ColorError {
    #[error("channel value {0} outside [0, 1]")]
    Domain(f64),
    #[error("chroma must be nonnegative, got {0}")]
    NegativeChroma(f64),
}

/// Tag naming the coordinate system a triple (or a whole point cloud) lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ColorSpace {
    GammaRgb,
    LinearRgb,
    Xyz,
    Luv,
    Hcl,
}

/// Colorspace a quantization runs in. `Hcl` is clustered as `Luv`: its
/// Cartesian form is the LUV `(u, v)` plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Space {
    Rgb,
    Xyz,
    Luv,
    Hcl,
}

impl Space {
    pub const ALL: [Space; 4] = [Space::Rgb, Space::Xyz, Space::Luv, Space::Hcl];

    /// Coordinates the k-means point cloud lives in.
    pub fn working_space(self) -> ColorSpace {
        match self {
            Space::Rgb => ColorSpace::GammaRgb,
            Space::Xyz => ColorSpace::Xyz,
            Space::Luv | Space::Hcl => ColorSpace::Luv,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Space::Rgb => "rgb",
            Space::Xyz => "xyz",
            Space::Luv => "luv",
            Space::Hcl => "hcl",
        }
    }
}

impl std::fmt::Display for Space {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Space {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "rgb" => Ok(Space::Rgb),
            "xyz" => Ok(Space::Xyz),
            "luv" => Ok(Space::Luv),
            "hcl" => Ok(Space::Hcl),
            other => Err(format!(
                "unknown colorspace '{other}' (expected rgb, xyz, luv or hcl)"
            )),
        }
    }
}

/// Linear-light sRGB primaries to XYZ, D65, 2° observer.
pub const RGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.4124564, 0.3575761, 0.1804375],
    [0.2126729, 0.7151522, 0.0721750],
    [0.0193339, 0.1191920, 0.9503041],
];

/// Numerical inverse of [`RGB_TO_XYZ`], computed once from the 7-digit matrix.
pub static XYZ_TO_RGB: LazyLock<[[f64; 3]; 3]> = LazyLock::new(|| invert3(&RGB_TO_XYZ));

/// Row sums of [`RGB_TO_XYZ`]: the XYZ image of linear RGB `(1, 1, 1)` and the
/// upper end of each XYZ channel over the RGB cube.
pub fn xyz_row_sums() -> [f64; 3] {
    RGB_TO_XYZ.map(|row| row.iter().sum())
}

const KNOT: f64 = (6.0 / 29.0) * (6.0 / 29.0) * (6.0 / 29.0);
const KAPPA: f64 = (29.0 / 3.0) * (29.0 / 3.0) * (29.0 / 3.0);

/// Reference white: tristimulus on the 0–100 scale plus its `(u′, v′)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WhitePoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub u_prime: f64,
    pub v_prime: f64,
}

impl WhitePoint {
    pub const D65: WhitePoint = WhitePoint {
        x: 95.5,
        y: 100.0,
        z: 108.9,
        u_prime: 0.19873,
        v_prime: 0.46821,
    };

    /// The stored tristimulus rescaled to the unit XYZ scale.
    pub fn unit_tristimulus(&self) -> Xyz {
        Xyz::new(self.x / 100.0, self.y / 100.0, self.z / 100.0)
    }

    /// Unit-scale XYZ with `Y = Yr` whose `(u′, v′)` equals the stored
    /// reference chromaticity. This is the point LUV maps to `(100, 0, 0)`;
    /// it agrees with [`Self::unit_tristimulus`] to the printed precision of
    /// the tristimulus (about 5e-5).
    pub fn chromaticity_tristimulus(&self) -> Xyz {
        let y = self.y / 100.0;
        let (up, vp) = (self.u_prime, self.v_prime);
        Xyz::new(
            y * 9.0 * up / (4.0 * vp),
            y,
            y * (12.0 - 3.0 * up - 20.0 * vp) / (4.0 * vp),
        )
    }

    /// xy chromaticity of the stored tristimulus.
    pub fn chromaticity(&self) -> Chromaticity {
        let s = self.x + self.y + self.z;
        Chromaticity {
            x: self.x / s,
            y: self.y / s,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GammaRgb {
    pub r: f64,
    pub g: f64,
    pub b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LinearRgb {
    pub r: f64,
    pub g: f64,
    pub b: f64,
}

/// CIE-XYZ on the unit scale.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Xyz {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Luv {
    pub l: f64,
    pub u: f64,
    pub v: f64,
}

/// Polar LUV. `h` is in degrees, `[0, 360)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Hcl {
    pub h: f64,
    pub c: f64,
    pub l: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Chromaticity {
    pub x: f64,
    pub y: f64,
}

impl Chromaticity {
    pub fn z(&self) -> f64 {
        1.0 - self.x - self.y
    }
}

macro_rules! triple_conversions {
    ($t:ident, $a:ident, $b:ident, $c:ident) => {
        impl $t {
            pub const fn new($a: f64, $b: f64, $c: f64) -> Self {
                Self { $a, $b, $c }
            }

            pub fn to_array(self) -> [f64; 3] {
                [self.$a, self.$b, self.$c]
            }

            pub fn from_array(p: [f64; 3]) -> Self {
                Self::new(p[0], p[1], p[2])
            }
        }
    };
}

triple_conversions!(GammaRgb, r, g, b);
triple_conversions!(LinearRgb, r, g, b);
triple_conversions!(Xyz, x, y, z);
triple_conversions!(Luv, l, u, v);
triple_conversions!(Hcl, h, c, l);

fn check_unit(x: f64) -> Result<f64, ColorError> {
    if (0.0..=1.0).contains(&x) {
        Ok(x)
    } else {
        Err(ColorError::Domain(x))
    }
}

fn linearize_unchecked(x: f64) -> f64 {
    if x <= 0.04045 {
        x / 12.92
    } else {
        ((x + 0.055) / 1.055).powf(2.4)
    }
}

fn delinearize_unchecked(x: f64) -> f64 {
    let y = if x <= 0.04045 / 12.92 {
        x * 12.92
    } else {
        1.055 * x.powf(1.0 / 2.4) - 0.055
    };
    y.clamp(0.0, 1.0)
}

/// sRGB transfer function: gamma-encoded channel to linear light.
pub fn srgb_linearize(channel: f64) -> Result<f64, ColorError> {
    check_unit(channel).map(linearize_unchecked)
}

/// Inverse of [`srgb_linearize`].
pub fn srgb_delinearize(channel: f64) -> Result<f64, ColorError> {
    check_unit(channel).map(delinearize_unchecked)
}

static LINEARIZE_U8: LazyLock<[f64; 256]> =
    LazyLock::new(|| std::array::from_fn(|i| linearize_unchecked(i as f64 / 255.0)));

/// Table lookup of [`srgb_linearize`] for an 8-bit channel.
pub fn linearize_u8(v: u8) -> f64 {
    LINEARIZE_U8[v as usize]
}

impl GammaRgb {
    pub fn from_srgb8(p: [u8; 3]) -> Self {
        Self::new(
            p[0] as f64 / 255.0,
            p[1] as f64 / 255.0,
            p[2] as f64 / 255.0,
        )
    }

    /// Rounds each channel to 8 bits, clamping into `[0, 255]`.
    pub fn to_srgb8(self) -> [u8; 3] {
        self.to_array()
            .map(|c| (c * 255.0).round().clamp(0.0, 255.0) as u8)
    }

    pub fn linearize(self) -> Result<LinearRgb, ColorError> {
        Ok(LinearRgb::new(
            srgb_linearize(self.r)?,
            srgb_linearize(self.g)?,
            srgb_linearize(self.b)?,
        ))
    }
}

impl LinearRgb {
    pub fn from_srgb8(p: [u8; 3]) -> Self {
        Self::new(linearize_u8(p[0]), linearize_u8(p[1]), linearize_u8(p[2]))
    }

    pub fn delinearize(self) -> Result<GammaRgb, ColorError> {
        Ok(GammaRgb::new(
            srgb_delinearize(self.r)?,
            srgb_delinearize(self.g)?,
            srgb_delinearize(self.b)?,
        ))
    }
}

fn mat_vec(m: &[[f64; 3]; 3], v: [f64; 3]) -> [f64; 3] {
    m.map(|row| row[0] * v[0] + row[1] * v[1] + row[2] * v[2])
}

fn invert3(m: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let cof =
        |r0: usize, r1: usize, c0: usize, c1: usize| m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
    let c00 = cof(1, 2, 1, 2);
    let c01 = -cof(1, 2, 0, 2);
    let c02 = cof(1, 2, 0, 1);
    let det = m[0][0] * c00 + m[0][1] * c01 + m[0][2] * c02;
    let adj = [
        [c00, -cof(0, 2, 1, 2), cof(0, 1, 1, 2)],
        [c01, cof(0, 2, 0, 2), -cof(0, 1, 0, 2)],
        [c02, -cof(0, 2, 0, 1), cof(0, 1, 0, 1)],
    ];
    adj.map(|row| row.map(|a| a / det))
}

pub fn rgb_to_xyz(t: LinearRgb) -> Xyz {
    Xyz::from_array(mat_vec(&RGB_TO_XYZ, t.to_array()))
}

/// Inverse matrix transform. The second field is `true` when any channel had
/// to be clamped into `[0, 1]` (the input was outside the RGB gamut).
pub fn xyz_to_rgb(t: Xyz) -> (LinearRgb, bool) {
    let raw = mat_vec(&XYZ_TO_RGB, t.to_array());
    let mut clamped = false;
    let out = raw.map(|c| {
        // Matrix round-off on in-gamut input is far below this.
        if !(-1e-9..=1.0 + 1e-9).contains(&c) {
            clamped = true;
        }
        c.clamp(0.0, 1.0)
    });
    (LinearRgb::from_array(out), clamped)
}

/// xy chromaticity. A black input (`X + Y + Z = 0`) returns the D65
/// chromaticity.
pub fn xyz_to_xyy(t: Xyz) -> Chromaticity {
    let s = t.x + t.y + t.z;
    if s <= 0.0 {
        return WhitePoint::D65.chromaticity();
    }
    Chromaticity {
        x: t.x / s,
        y: t.y / s,
    }
}

/// Lightness from the luminance ratio `Y / Yr`.
pub fn lightness(y_ratio: f64) -> f64 {
    if y_ratio <= KNOT {
        KAPPA * y_ratio
    } else {
        116.0 * y_ratio.cbrt() - 16.0
    }
}

fn lightness_inverse(l: f64) -> f64 {
    if l <= 8.0 {
        l / KAPPA
    } else {
        let f = (l + 16.0) / 116.0;
        f * f * f
    }
}

pub fn xyz_to_luv(t: Xyz, w: &WhitePoint) -> Luv {
    let l = lightness(100.0 * t.y / w.y);
    let den = t.x + 15.0 * t.y + 3.0 * t.z;
    let (up, vp) = if den > 0.0 {
        (4.0 * t.x / den, 9.0 * t.y / den)
    } else {
        (w.u_prime, w.v_prime)
    };
    Luv::new(l, 13.0 * l * (up - w.u_prime), 13.0 * l * (vp - w.v_prime))
}

pub fn luv_to_xyz(t: Luv, w: &WhitePoint) -> Xyz {
    if t.l <= 0.0 {
        return Xyz::default();
    }
    let y = w.y / 100.0 * lightness_inverse(t.l);
    let up = t.u / (13.0 * t.l) + w.u_prime;
    // v′ stays well above zero for anything reachable from the RGB cube.
    let vp = (t.v / (13.0 * t.l) + w.v_prime).max(1e-12);
    Xyz::new(
        y * 9.0 * up / (4.0 * vp),
        y,
        y * (12.0 - 3.0 * up - 20.0 * vp) / (4.0 * vp),
    )
}

pub(crate) fn wrap_degrees(h: f64) -> f64 {
    let h = h.rem_euclid(360.0);
    if h >= 360.0 {
        0.0
    } else {
        h
    }
}

/// Polar form of the `(u, v)` plane. Hue is 0° when chroma is zero.
pub fn luv_to_hcl(t: Luv) -> Hcl {
    let c = t.u.hypot(t.v);
    let h = if c == 0.0 {
        0.0
    } else {
        wrap_degrees(t.v.atan2(t.u).to_degrees())
    };
    Hcl::new(h, c, t.l)
}

pub fn hcl_to_luv(t: Hcl) -> Result<Luv, ColorError> {
    if t.c < 0.0 {
        return Err(ColorError::NegativeChroma(t.c));
    }
    let (s, c) = t.h.to_radians().sin_cos();
    Ok(Luv::new(t.l, t.c * c, t.c * s))
}

/// Converts an 8-bit sRGB pixel into coordinates of `space`. `Hcl` hue is in
/// degrees.
pub fn from_srgb8(space: ColorSpace, p: [u8; 3]) -> [f64; 3] {
    match space {
        ColorSpace::GammaRgb => GammaRgb::from_srgb8(p).to_array(),
        ColorSpace::LinearRgb => LinearRgb::from_srgb8(p).to_array(),
        ColorSpace::Xyz => rgb_to_xyz(LinearRgb::from_srgb8(p)).to_array(),
        ColorSpace::Luv => {
            xyz_to_luv(rgb_to_xyz(LinearRgb::from_srgb8(p)), &WhitePoint::D65).to_array()
        }
        ColorSpace::Hcl => luv_to_hcl(xyz_to_luv(
            rgb_to_xyz(LinearRgb::from_srgb8(p)),
            &WhitePoint::D65,
        ))
        .to_array(),
    }
}

/// Maps coordinates in `space` back to gamma-encoded RGB in `[0, 1]`. The flag
/// reports whether the color fell outside the RGB gamut and was clamped.
pub fn to_gamma_rgb(space: ColorSpace, p: [f64; 3]) -> (GammaRgb, bool) {
    let clamp_unit = |p: [f64; 3]| {
        let out = p.map(|c| c.clamp(0.0, 1.0));
        (out, out != p)
    };
    match space {
        ColorSpace::GammaRgb => {
            let (c, clamped) = clamp_unit(p);
            (GammaRgb::from_array(c), clamped)
        }
        ColorSpace::LinearRgb => {
            let (c, clamped) = clamp_unit(p);
            (GammaRgb::from_array(c.map(delinearize_unchecked)), clamped)
        }
        ColorSpace::Xyz => {
            let (lin, clamped) = xyz_to_rgb(Xyz::from_array(p));
            (
                GammaRgb::from_array(lin.to_array().map(delinearize_unchecked)),
                clamped,
            )
        }
        ColorSpace::Luv => to_gamma_rgb(
            ColorSpace::Xyz,
            luv_to_xyz(Luv::from_array(p), &WhitePoint::D65).to_array(),
        ),
        ColorSpace::Hcl => {
            let hcl = Hcl::from_array(p);
            let luv = hcl_to_luv(Hcl {
                c: hcl.c.max(0.0),
                ..hcl
            })
            .unwrap_or_default();
            to_gamma_rgb(ColorSpace::Luv, luv.to_array())
        }
    }
}

/// Lightness reached by linear RGB white under [`RGB_TO_XYZ`] (slightly above
/// 100 because the Y row sums to 1.0000001).
pub fn max_lightness() -> f64 {
    lightness(100.0 * xyz_row_sums()[1] / WhitePoint::D65.y)
}

/// Nominal `u` range covering the whole sRGB cube (observed -84.1 to 174.4).
pub const LUV_U_RANGE: (f64, f64) = (-100.0, 180.0);
/// Nominal `v` range covering the whole sRGB cube (observed -134.0 to 107.5).
pub const LUV_V_RANGE: (f64, f64) = (-140.0, 110.0);

/// How components are mapped into `[0, 1]` before clustering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scaling {
    /// Fixed per-space nominal ranges.
    #[default]
    Fixed,
    /// Per-image minimum and maximum of each component.
    MinMax,
}

impl std::str::FromStr for Scaling {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "fixed" => Ok(Scaling::Fixed),
            "minmax" | "min-max" => Ok(Scaling::MinMax),
            other => Err(format!(
                "unknown scaling '{other}' (expected fixed or minmax)"
            )),
        }
    }
}

/// Per-component affine map `x -> (x - lo) / (hi - lo)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizationParams {
    pub space: ColorSpace,
    pub lo: [f64; 3],
    pub hi: [f64; 3],
}

impl NormalizationParams {
    pub fn fixed(space: ColorSpace) -> Self {
        let (lo, hi) = match space {
            ColorSpace::GammaRgb | ColorSpace::LinearRgb => ([0.0; 3], [1.0; 3]),
            ColorSpace::Xyz => ([0.0; 3], xyz_row_sums()),
            ColorSpace::Luv => (
                [0.0, LUV_U_RANGE.0, LUV_V_RANGE.0],
                [max_lightness(), LUV_U_RANGE.1, LUV_V_RANGE.1],
            ),
            ColorSpace::Hcl => {
                let c_max = LUV_U_RANGE.1.hypot(LUV_V_RANGE.0);
                ([0.0; 3], [360.0, c_max, max_lightness()])
            }
        };
        Self { space, lo, hi }
    }

    /// Ranges spanning the observed extent of `points`; a constant component
    /// gets a unit-width range so it maps to zero.
    pub fn min_max(space: ColorSpace, points: &[[f64; 3]]) -> Self {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for p in points {
            for i in 0..3 {
                lo[i] = lo[i].min(p[i]);
                hi[i] = hi[i].max(p[i]);
            }
        }
        for i in 0..3 {
            if !lo[i].is_finite() {
                lo[i] = 0.0;
                hi[i] = 1.0;
            } else if hi[i] <= lo[i] {
                hi[i] = lo[i] + 1.0;
            }
        }
        Self { space, lo, hi }
    }

    pub fn for_points(space: ColorSpace, scaling: Scaling, points: &[[f64; 3]]) -> Self {
        match scaling {
            Scaling::Fixed => Self::fixed(space),
            Scaling::MinMax => Self::min_max(space, points),
        }
    }

    /// Maps `p` into `[0, 1]^3`, returning whether any component was clamped.
    pub fn normalize(&self, p: [f64; 3]) -> ([f64; 3], bool) {
        let mut clamped = false;
        let out = std::array::from_fn(|i| {
            let t = (p[i] - self.lo[i]) / (self.hi[i] - self.lo[i]);
            // Tolerate round-off at the range ends without flagging.
            if !(-1e-12..=1.0 + 1e-12).contains(&t) {
                clamped = true;
            }
            t.clamp(0.0, 1.0)
        });
        (out, clamped)
    }

    pub fn denormalize(&self, p: [f64; 3]) -> [f64; 3] {
        std::array::from_fn(|i| self.lo[i] + p[i] * (self.hi[i] - self.lo[i]))
    }
}

/// Normalizes a point cloud already expressed in `space`. Returns the mapped
/// points, the parameters to invert the map, and the number of points with a
/// clamped component.
pub fn normalize_components(
    points: &[[f64; 3]],
    space: ColorSpace,
    scaling: Scaling,
) -> (Vec<[f64; 3]>, NormalizationParams, usize) {
    let params = NormalizationParams::for_points(space, scaling, points);
    let mut clamped = 0;
    let out = points
        .iter()
        .map(|&p| {
            let (q, c) = params.normalize(p);
            clamped += c as usize;
            q
        })
        .collect();
    (out, params, clamped)
}
