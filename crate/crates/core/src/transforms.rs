//! The fourteen intensity-parameterized augmentations.
//!
//! Every transform is driven by one global intensity `r ∈ [0, 1]`. How `r`
//! maps onto a concrete argument is controlled by [`AugmentMode`]:
//!
//! * `aligned` makes the six photometric transforms (Solarize, Posterize,
//!   Color, Contrast, Brightness, Sharpness) vanish at `r = 0` and grow with
//!   `r`. Without it they follow the older parameterization, in which
//!   Solarize and Posterize weaken as `r` grows and the enhancement factor is
//!   `0.1 + 1.8r`.
//! * `random` draws the argument uniformly over its interval. Without it,
//!   sign-symmetric intervals resolve to a fair coin over `±hi` and one-sided
//!   intervals resolve to their far endpoint.
//! * `expanded` selects the wider caps (Rotate 90°, Shear 0.5, Translate a
//!   third of the image, Posterize 7 bits) instead of the narrow ones
//!   (30°, 0.3, 100 px clamped to the image, 4 bits).
//!
//! One-sided intervals always run from the transform's no-op value to the
//! formula value, so with `random` off the formula value itself is used.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::image::{
    apply_lut, blend_enhance, identity_luts, round_clamp, uniform_luts, warp_affine, AffineMap,
    ChannelLuts, Image, CHANNELS,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransformError {
    #[error("intensity r = {0} is outside [0, 1]")]
    Domain(f64),
    #[error("unknown transform kind {0:?}")]
    UnknownKind(String),
}

/// The augmentation kinds. Declaration order is the sampling order used by
/// the policy and must not change.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TransformKind {
    Identity,
    AutoContrast,
    Equalize,
    Rotate,
    Solarize,
    Posterize,
    Color,
    Contrast,
    Brightness,
    Sharpness,
    ShearX,
    ShearY,
    TranslateX,
    TranslateY,
}

impl TransformKind {
    pub const ALL: [TransformKind; 14] = [
        TransformKind::Identity,
        TransformKind::AutoContrast,
        TransformKind::Equalize,
        TransformKind::Rotate,
        TransformKind::Solarize,
        TransformKind::Posterize,
        TransformKind::Color,
        TransformKind::Contrast,
        TransformKind::Brightness,
        TransformKind::Sharpness,
        TransformKind::ShearX,
        TransformKind::ShearY,
        TransformKind::TranslateX,
        TransformKind::TranslateY,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            TransformKind::Identity => "Identity",
            TransformKind::AutoContrast => "AutoContrast",
            TransformKind::Equalize => "Equalize",
            TransformKind::Rotate => "Rotate",
            TransformKind::Solarize => "Solarize",
            TransformKind::Posterize => "Posterize",
            TransformKind::Color => "Color",
            TransformKind::Contrast => "Contrast",
            TransformKind::Brightness => "Brightness",
            TransformKind::Sharpness => "Sharpness",
            TransformKind::ShearX => "ShearX",
            TransformKind::ShearY => "ShearY",
            TransformKind::TranslateX => "TranslateX",
            TransformKind::TranslateY => "TranslateY",
        }
    }

    /// Kinds that take no argument.
    pub fn is_parameter_free(self) -> bool {
        matches!(
            self,
            TransformKind::Identity | TransformKind::AutoContrast | TransformKind::Equalize
        )
    }

    /// The photometric kinds whose older parameterization does not vanish at
    /// `r = 0`.
    pub fn is_starred(self) -> bool {
        matches!(
            self,
            TransformKind::Solarize
                | TransformKind::Posterize
                | TransformKind::Color
                | TransformKind::Contrast
                | TransformKind::Brightness
                | TransformKind::Sharpness
        )
    }
}

impl fmt::Display for TransformKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TransformKind {
    type Err = TransformError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TransformKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| TransformError::UnknownKind(s.to_string()))
    }
}

/// Ablation switches selecting how `r` becomes a transform argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AugmentMode {
    pub aligned: bool,
    pub random: bool,
    pub expanded: bool,
}

impl AugmentMode {
    /// All three modifications on.
    pub const RUA: AugmentMode = AugmentMode {
        aligned: true,
        random: true,
        expanded: true,
    };
    /// The older fixed-magnitude parameterization.
    pub const RA: AugmentMode = AugmentMode {
        aligned: false,
        random: false,
        expanded: false,
    };

    pub fn new(aligned: bool, random: bool, expanded: bool) -> Self {
        Self {
            aligned,
            random,
            expanded,
        }
    }
}

impl Default for AugmentMode {
    fn default() -> Self {
        Self::RUA
    }
}

/// A fully resolved transform.
///
/// `magnitude` is degrees for Rotate, the threshold for Solarize, the bit
/// shift for Posterize, the blend factor for the enhancement kinds, the shear
/// coefficient for ShearX/Y and the pixel offset for TranslateX/Y. It is 0
/// and ignored for the parameter-free kinds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransformParams {
    pub kind: TransformKind,
    pub magnitude: f64,
}

impl TransformParams {
    pub fn new(kind: TransformKind, magnitude: f64) -> Self {
        Self { kind, magnitude }
    }

    /// True when applying these parameters cannot change any pixel.
    pub fn is_identity(&self) -> bool {
        let m = self.magnitude;
        match self.kind {
            TransformKind::Identity => true,
            TransformKind::AutoContrast | TransformKind::Equalize => false,
            TransformKind::Rotate
            | TransformKind::ShearX
            | TransformKind::ShearY
            | TransformKind::TranslateX
            | TransformKind::TranslateY => m == 0.0,
            TransformKind::Solarize => m >= 256.0,
            TransformKind::Posterize => posterize_shift(m) == 0,
            TransformKind::Color
            | TransformKind::Contrast
            | TransformKind::Brightness
            | TransformKind::Sharpness => m == 1.0,
        }
    }
}

// ---------------------------------------------------------------------------
// Parameter sampling
// ---------------------------------------------------------------------------

const SOLARIZE_SPAN: f64 = 256.0;
const ENHANCE_HALF_SPAN: f64 = 0.9;
const RA_TRANSLATE_PX: f64 = 100.0;

/// Interval a magnitude is drawn from.
#[derive(Debug, Clone, Copy)]
enum ParamRange {
    Unused,
    /// `[center − half, center + half]`
    Symmetric { center: f64, half: f64 },
    /// Between the no-op value and the formula value.
    OneSided { identity: f64, far: f64 },
}

fn param_range(kind: TransformKind, r: f64, mode: AugmentMode, dims: (u32, u32)) -> ParamRange {
    use ParamRange::*;
    use TransformKind::*;
    let pick = |narrow: f64, wide: f64| if mode.expanded { wide } else { narrow };
    let translate_cap = |extent: u32| {
        let extent = extent as f64;
        pick(RA_TRANSLATE_PX.min(extent), extent / 3.0)
    };
    match kind {
        Identity | AutoContrast | Equalize => Unused,
        Rotate => Symmetric {
            center: 0.0,
            half: pick(30.0, 90.0) * r,
        },
        ShearX | ShearY => Symmetric {
            center: 0.0,
            half: pick(0.3, 0.5) * r,
        },
        TranslateX => Symmetric {
            center: 0.0,
            half: translate_cap(dims.0) * r,
        },
        TranslateY => Symmetric {
            center: 0.0,
            half: translate_cap(dims.1) * r,
        },
        Solarize => OneSided {
            identity: SOLARIZE_SPAN,
            far: if mode.aligned {
                SOLARIZE_SPAN - SOLARIZE_SPAN * r
            } else {
                SOLARIZE_SPAN * r
            },
        },
        Posterize => {
            let cap = pick(4.0, 7.0);
            OneSided {
                identity: 0.0,
                far: if mode.aligned { cap * r } else { 8.0 - cap * r },
            }
        }
        Color | Contrast | Brightness | Sharpness => {
            if mode.aligned {
                Symmetric {
                    center: 1.0,
                    half: ENHANCE_HALF_SPAN * r,
                }
            } else {
                OneSided {
                    identity: 1.0,
                    far: 1.0 + ENHANCE_HALF_SPAN * (2.0 * r - 1.0),
                }
            }
        }
    }
}

/// Resolves a transform argument for intensity `r`.
///
/// `dims` is the `(width, height)` of the image the transform will act on;
/// only the translations read it. Exactly two `f64` draws are taken from
/// `rng` on every call (a sign draw, then a magnitude draw), whatever the
/// kind and mode.
pub fn sample_params<R: Rng + ?Sized>(
    kind: TransformKind,
    r: f64,
    mode: AugmentMode,
    dims: (u32, u32),
    rng: &mut R,
) -> Result<TransformParams, TransformError> {
    if !(0.0..=1.0).contains(&r) {
        return Err(TransformError::Domain(r));
    }
    let u_sign: f64 = rng.random();
    let u_mag: f64 = rng.random();
    let magnitude = match param_range(kind, r, mode, dims) {
        ParamRange::Unused => 0.0,
        ParamRange::Symmetric { center, half } => {
            if mode.random {
                center + half * (2.0 * u_mag - 1.0)
            } else if u_sign < 0.5 {
                center - half
            } else {
                center + half
            }
        }
        ParamRange::OneSided { identity, far } => {
            if mode.random {
                identity + (far - identity) * u_mag
            } else {
                far
            }
        }
    };
    let magnitude = if kind == TransformKind::Posterize {
        posterize_shift(magnitude) as f64
    } else {
        magnitude
    };
    Ok(TransformParams { kind, magnitude })
}

/// Rounds a continuous shift half-up into `0..=8`.
fn posterize_shift(m: f64) -> u32 {
    (m + 0.5).floor().clamp(0.0, 8.0) as u32
}

// ---------------------------------------------------------------------------
// Application
// ---------------------------------------------------------------------------

/// Applies a resolved transform. Parameters that cannot change any pixel
/// return a copy of the input.
pub fn apply_transform(params: &TransformParams, img: &Image) -> Image {
    if params.is_identity() {
        return img.clone();
    }
    let m = params.magnitude;
    let (w, h) = img.dimensions();
    match params.kind {
        TransformKind::Identity => img.clone(),
        TransformKind::AutoContrast => apply_lut(img, &autocontrast_luts(img)),
        TransformKind::Equalize => apply_lut(img, &equalize_luts(img)),
        TransformKind::Rotate => warp_affine(img, &AffineMap::rotate(m, w, h)),
        TransformKind::ShearX => warp_affine(img, &AffineMap::shear_x(m)),
        TransformKind::ShearY => warp_affine(img, &AffineMap::shear_y(m)),
        TransformKind::TranslateX => warp_affine(img, &AffineMap::translate(m, 0.0)),
        TransformKind::TranslateY => warp_affine(img, &AffineMap::translate(0.0, m)),
        TransformKind::Solarize => apply_lut(img, &solarize_luts(m)),
        TransformKind::Posterize => apply_lut(img, &posterize_luts(posterize_shift(m))),
        TransformKind::Color => blend(img, &grayscale(img), m),
        TransformKind::Contrast => {
            let mean = mean_luma(img);
            let degenerate = Image::filled(w, h, [mean; 3]).expect("same geometry as input");
            blend(img, &degenerate, m)
        }
        TransformKind::Brightness => {
            let black = Image::filled(w, h, [0; 3]).expect("same geometry as input");
            blend(img, &black, m)
        }
        TransformKind::Sharpness => blend(img, &sharpness_degenerate(img), m),
    }
}

fn blend(img: &Image, degenerate: &Image, factor: f64) -> Image {
    blend_enhance(img, degenerate, factor).expect("degenerate image shares the input geometry")
}

/// Samples `v ≥ threshold` are inverted.
pub fn solarize_luts(threshold: f64) -> ChannelLuts {
    uniform_luts(|v| if v as f64 >= threshold { 255 - v } else { v })
}

/// Clears the `shift` low bits of every sample. A shift of 8 or more
/// clears the sample entirely.
pub fn posterize_luts(shift: u32) -> ChannelLuts {
    uniform_luts(|v| if shift >= 8 { 0 } else { (v >> shift) << shift })
}

/// ITU-R 601 luma rounded half-up.
#[inline]
pub fn luma(p: [u8; 3]) -> u8 {
    round_clamp(0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64)
}

pub fn grayscale(img: &Image) -> Image {
    img.map_pixels(|p| [luma(p); 3])
}

/// Mean of the per-pixel luma over the whole image, rounded half-up.
pub fn mean_luma(img: &Image) -> u8 {
    let (sum, n) = img
        .pixels()
        .fold((0u64, 0u64), |(s, n), p| (s + luma(p) as u64, n + 1));
    ((2 * sum + n) / (2 * n)) as u8
}

/// Per-channel stretch so the darkest sample maps to 0 and the brightest to
/// 255. Constant channels get the identity table.
pub fn autocontrast_luts(img: &Image) -> ChannelLuts {
    let mut luts = identity_luts();
    for (ch, lut) in luts.iter_mut().enumerate() {
        let samples = img.as_raw().iter().skip(ch).step_by(CHANNELS);
        let (lo, hi) = samples.fold((255u8, 0u8), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        if lo >= hi {
            continue;
        }
        let (lo, hi) = (lo as f64, hi as f64);
        for (v, out) in lut.iter_mut().enumerate() {
            *out = round_clamp((v as f64 - lo) * 255.0 / (hi - lo));
        }
    }
    luts
}

/// Per-channel histogram equalization tables.
pub fn equalize_luts(img: &Image) -> ChannelLuts {
    let mut luts = identity_luts();
    for (ch, lut) in luts.iter_mut().enumerate() {
        let mut hist = [0u64; 256];
        for &v in img.as_raw().iter().skip(ch).step_by(CHANNELS) {
            hist[v as usize] += 1;
        }
        if let Some(table) = equalize_table(&hist) {
            *lut = table;
        }
    }
    luts
}

/// `None` means the identity table.
fn equalize_table(hist: &[u64; 256]) -> Option<[u8; 256]> {
    let mut nonzero = hist.iter().filter(|&&c| c > 0);
    let nonzero_count = nonzero.clone().count();
    if nonzero_count <= 1 {
        return None;
    }
    let last = *nonzero.next_back().expect("at least two nonzero bins");
    let total: u64 = hist.iter().sum();
    let step = (total - last) / 255;
    if step == 0 {
        return None;
    }
    let mut table = [0u8; 256];
    let mut n = step / 2;
    for (out, &count) in table.iter_mut().zip(hist) {
        *out = (n / step).min(255) as u8;
        n += count;
    }
    Some(table)
}

/// Smoothed reference for the Sharpness blend: interior pixels become the
/// 3×3 weighted mean with center weight 5 and neighbour weight 1; the
/// one-pixel border is copied unchanged.
pub fn sharpness_degenerate(img: &Image) -> Image {
    let (w, h) = img.dimensions();
    let mut out = img.clone();
    if w < 3 || h < 3 {
        return out;
    }
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let mut acc = [0u32; 3];
            for dy in 0..3 {
                for dx in 0..3 {
                    let p = img.pixel(x + dx - 1, y + dy - 1);
                    let weight = if dx == 1 && dy == 1 { 5 } else { 1 };
                    for ch in 0..CHANNELS {
                        acc[ch] += weight * p[ch] as u32;
                    }
                }
            }
            out.set_pixel(x, y, acc.map(|s| ((2 * s + 13) / 26).min(255) as u8));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn noise_image(w: u32, h: u32, seed: u64) -> Image {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..w * h * 3).map(|_| rng.random()).collect();
        Image::from_raw(w, h, data).unwrap()
    }

    fn channel(img: &Image, ch: usize) -> Vec<u8> {
        img.as_raw().iter().skip(ch).step_by(3).copied().collect()
    }

    #[test]
    fn kind_order_is_fixed() {
        let names: Vec<_> = TransformKind::ALL.iter().map(|k| k.name()).collect();
        assert_eq!(
            names,
            [
                "Identity",
                "AutoContrast",
                "Equalize",
                "Rotate",
                "Solarize",
                "Posterize",
                "Color",
                "Contrast",
                "Brightness",
                "Sharpness",
                "ShearX",
                "ShearY",
                "TranslateX",
                "TranslateY"
            ]
        );
        for (i, k) in TransformKind::ALL.iter().enumerate() {
            assert_eq!(k.index(), i);
            assert_eq!(k.name().parse::<TransformKind>().unwrap(), *k);
        }
        assert_eq!(TransformKind::ALL.iter().filter(|k| k.is_starred()).count(), 6);
    }

    #[test]
    fn rejects_out_of_range_r() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for r in [-0.1, 1.1, f64::NAN] {
            assert!(matches!(
                sample_params(TransformKind::Rotate, r, AugmentMode::RUA, (8, 8), &mut rng),
                Err(TransformError::Domain(_))
            ));
        }
    }

    #[test]
    fn rotate_ranges() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = sample_params(TransformKind::Rotate, 0.0, AugmentMode::RUA, (8, 8), &mut rng).unwrap();
        assert_eq!(p.magnitude, 0.0);
        for _ in 0..1000 {
            let p = sample_params(TransformKind::Rotate, 0.5, AugmentMode::RUA, (8, 8), &mut rng).unwrap();
            assert!((-45.0..=45.0).contains(&p.magnitude));
            let p = sample_params(TransformKind::Rotate, 0.5, AugmentMode::RA, (8, 8), &mut rng).unwrap();
            assert!(p.magnitude == 15.0 || p.magnitude == -15.0);
        }
    }

    #[test]
    fn ra_formulas() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ra = |kind, r, rng: &mut ChaCha8Rng| {
            sample_params(kind, r, AugmentMode::RA, (300, 40), rng).unwrap().magnitude
        };
        for _ in 0..50 {
            assert_eq!(ra(TransformKind::Solarize, 0.5, &mut rng), 128.0);
            assert_eq!(ra(TransformKind::Solarize, 0.25, &mut rng), 64.0);
            // 8 − 4r
            assert_eq!(ra(TransformKind::Posterize, 0.0, &mut rng), 8.0);
            assert_eq!(ra(TransformKind::Posterize, 0.5, &mut rng), 6.0);
            assert_eq!(ra(TransformKind::Posterize, 1.0, &mut rng), 4.0);
            // 0.1 + 1.8r
            assert!((ra(TransformKind::Color, 0.0, &mut rng) - 0.1).abs() < 1e-12);
            assert!((ra(TransformKind::Sharpness, 1.0, &mut rng) - 1.9).abs() < 1e-12);
            assert!((ra(TransformKind::ShearX, 1.0, &mut rng).abs() - 0.3).abs() < 1e-12);
            // 100 px on a wide image, clamped on a short one
            assert_eq!(ra(TransformKind::TranslateX, 1.0, &mut rng).abs(), 100.0);
            assert_eq!(ra(TransformKind::TranslateY, 1.0, &mut rng).abs(), 40.0);
        }
    }

    #[test]
    fn rua_ranges() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let dims = (90, 60);
        for _ in 0..2000 {
            let r: f64 = rng.random();
            let mut draw = |k| sample_params(k, r, AugmentMode::RUA, dims, &mut rng).unwrap().magnitude;
            let t = draw(TransformKind::Solarize);
            assert!((256.0 - 256.0 * r..=256.0).contains(&t));
            let s = draw(TransformKind::Posterize);
            assert!(s.fract() == 0.0 && s >= 0.0 && s <= (7.0 * r + 0.5).floor());
            let f = draw(TransformKind::Brightness);
            assert!((1.0 - 0.9 * r..=1.0 + 0.9 * r).contains(&f));
            let tx = draw(TransformKind::TranslateX);
            assert!(tx.abs() <= 30.0 * r);
            let ty = draw(TransformKind::TranslateY);
            assert!(ty.abs() <= 20.0 * r);
            let sh = draw(TransformKind::ShearY);
            assert!(sh.abs() <= 0.5 * r);
        }
    }

    #[test]
    fn always_two_draws() {
        use rand::RngCore;
        for kind in TransformKind::ALL {
            for mode in [AugmentMode::RUA, AugmentMode::RA, AugmentMode::new(true, false, true)] {
                let mut a = ChaCha8Rng::seed_from_u64(9);
                let mut b = ChaCha8Rng::seed_from_u64(9);
                sample_params(kind, 0.7, mode, (16, 16), &mut a).unwrap();
                let _: f64 = b.random();
                let _: f64 = b.random();
                assert_eq!(a.next_u64(), b.next_u64(), "{kind} {mode:?}");
            }
        }
    }

    #[test]
    fn posterize_brute_force() {
        for k in 0..8u32 {
            let luts = posterize_luts(k);
            for v in 0..=255u8 {
                let expected = (v >> k) << k;
                assert_eq!(luts[0][v as usize], expected);
                assert_eq!(luts[0][v as usize] as u32 % (1 << k), 0);
            }
        }
        assert_eq!(posterize_luts(3)[1][255], 248);
        assert!(posterize_luts(8)[2].iter().all(|&v| v == 0));
    }

    #[test]
    fn solarize_rule() {
        let luts = solarize_luts(128.0);
        assert_eq!(luts[0][200], 55);
        assert_eq!(luts[0][100], 100);
        assert_eq!(solarize_luts(256.0), identity_luts());
        assert!(solarize_luts(0.0)[0].iter().enumerate().all(|(v, &o)| o == 255 - v as u8));
    }

    #[test]
    fn autocontrast_tables() {
        let full = Image::from_raw(2, 1, vec![0, 0, 0, 255, 255, 255]).unwrap();
        assert_eq!(autocontrast_luts(&full), identity_luts());
        let flat = Image::filled(3, 3, [77, 0, 255]).unwrap();
        assert_eq!(autocontrast_luts(&flat), identity_luts());

        let im = Image::from_raw(2, 1, vec![50, 0, 0, 200, 255, 255]).unwrap();
        let lut = autocontrast_luts(&im)[0];
        assert_eq!(lut[50], 0);
        assert_eq!(lut[200], 255);
        // 75·255/150 = 127.5, rounds half-up
        assert_eq!(lut[125], 128);
    }

    #[test]
    fn autocontrast_idempotent() {
        for seed in 0..20 {
            let im = noise_image(10, 7, seed).map_pixels(|p| p.map(|v| 40 + v / 3));
            let once = apply_transform(&TransformParams::new(TransformKind::AutoContrast, 0.0), &im);
            let twice = apply_transform(&TransformParams::new(TransformKind::AutoContrast, 0.0), &once);
            assert_eq!(once, twice);
        }
    }

    /// Independent evaluation of the equalization recurrence.
    fn equalize_oracle(values: &[u8]) -> Vec<u8> {
        let mut hist = vec![0u64; 256];
        for &v in values {
            hist[v as usize] += 1;
        }
        let nz: Vec<u64> = hist.iter().copied().filter(|&c| c != 0).collect();
        if nz.len() <= 1 {
            return (0..=255).collect();
        }
        let step = (values.len() as u64 - nz[nz.len() - 1]) / 255;
        if step == 0 {
            return (0..=255).collect();
        }
        let mut n = step / 2;
        (0..256)
            .map(|i| {
                let out = (n / step).min(255) as u8;
                n += hist[i];
                out
            })
            .collect()
    }

    #[test]
    fn equalize_cases() {
        let flat = Image::filled(4, 4, [9, 9, 9]).unwrap();
        assert_eq!(equalize_luts(&flat), identity_luts());
        assert_eq!(apply_transform(&TransformParams::new(TransformKind::Equalize, 0.0), &flat), flat);

        // every value exactly twice: table is the identity (±1)
        let data: Vec<u8> = (0..512).flat_map(|i| [(i % 256) as u8; 3]).collect();
        let uniform = Image::from_raw(512, 1, data).unwrap();
        let lut = equalize_luts(&uniform)[0];
        for v in 0..256usize {
            assert!((lut[v] as i32 - v as i32).abs() <= 1);
        }

        // half 0s half 255s on 4 pixels: (4 − 2) / 255 floors to 0, identity
        let two = Image::from_raw(4, 1, vec![0, 0, 0, 0, 0, 0, 255, 255, 255, 255, 255, 255]).unwrap();
        let lut = equalize_luts(&two)[0];
        assert_eq!(lut[0], 0);
        assert_eq!(lut[255], 255);

        for seed in 0..10 {
            let im = noise_image(40, 30, seed).map_pixels(|p| [p[0] / 2, p[1], 200 + p[2] % 50]);
            let luts = equalize_luts(&im);
            for ch in 0..3 {
                assert_eq!(luts[ch].to_vec(), equalize_oracle(&channel(&im, ch)));
                assert!(luts[ch].windows(2).all(|w| w[0] <= w[1]));
            }
        }
    }

    #[test]
    fn sharpness_kernel() {
        let flat = Image::filled(5, 4, [10, 20, 30]).unwrap();
        assert_eq!(sharpness_degenerate(&flat), flat);

        let mut spike = Image::filled(3, 3, [0, 0, 0]).unwrap();
        spike.set_pixel(1, 1, [255, 255, 255]);
        assert_eq!(sharpness_degenerate(&spike).pixel(1, 1), [98, 98, 98]);

        let row = noise_image(7, 1, 4);
        assert_eq!(sharpness_degenerate(&row), row);
        let dot = noise_image(1, 1, 5);
        assert_eq!(sharpness_degenerate(&dot), dot);
    }

    #[test]
    fn degenerate_references() {
        assert_eq!(luma([255, 255, 255]), 255);
        assert_eq!(luma([255, 0, 0]), 76);
        let im = Image::from_raw(2, 1, vec![255, 0, 0, 0, 0, 0]).unwrap();
        // lumas 76 and 0, mean 38
        assert_eq!(mean_luma(&im), 38);
        let out = apply_transform(&TransformParams::new(TransformKind::Brightness, 0.0), &im);
        assert!(out.as_raw().iter().all(|&v| v == 0));
        let gray = apply_transform(&TransformParams::new(TransformKind::Color, 0.0), &im);
        assert_eq!(gray.pixel(0, 0), [76, 76, 76]);
        let contrast = apply_transform(&TransformParams::new(TransformKind::Contrast, 0.0), &im);
        assert!(contrast.as_raw().iter().all(|&v| v == 38));
    }

    #[test]
    fn zero_intensity_is_identity() {
        for kind in TransformKind::ALL.into_iter().filter(|k| {
            !matches!(k, TransformKind::AutoContrast | TransformKind::Equalize)
        }) {
            let mut rng = ChaCha8Rng::seed_from_u64(kind.index() as u64);
            for seed in 0..5 {
                let im = noise_image(16, 12, seed);
                let p = sample_params(kind, 0.0, AugmentMode::RUA, im.dimensions(), &mut rng).unwrap();
                assert!(p.is_identity(), "{p:?}");
                assert_eq!(apply_transform(&p, &im), im);
            }
        }
    }

    #[test]
    fn enhancement_unit_factor_is_identity() {
        let im = noise_image(9, 9, 11);
        for kind in [
            TransformKind::Color,
            TransformKind::Contrast,
            TransformKind::Brightness,
            TransformKind::Sharpness,
        ] {
            assert_eq!(apply_transform(&TransformParams::new(kind, 1.0), &im), im);
            assert_ne!(apply_transform(&TransformParams::new(kind, 0.3), &im), im);
        }
    }

    #[test]
    fn geometric_transforms_move_pixels() {
        let im = noise_image(12, 12, 12);
        for (kind, m) in [
            (TransformKind::Rotate, 20.0),
            (TransformKind::ShearX, 0.2),
            (TransformKind::ShearY, -0.2),
            (TransformKind::TranslateX, 3.0),
            (TransformKind::TranslateY, -2.0),
        ] {
            let out = apply_transform(&TransformParams::new(kind, m), &im);
            assert_eq!(out.dimensions(), im.dimensions());
            assert_ne!(out, im, "{kind}");
        }
        let shifted = apply_transform(&TransformParams::new(TransformKind::TranslateX, 3.0), &im);
        assert_eq!(shifted.pixel(5, 4), im.pixel(2, 4));
        assert_eq!(shifted.pixel(0, 4), [128; 3]);
    }

    #[test]
    fn deterministic_given_stream() {
        let im = noise_image(20, 20, 13);
        for kind in TransformKind::ALL {
            let mut a = ChaCha8Rng::seed_from_u64(99);
            let mut b = ChaCha8Rng::seed_from_u64(99);
            let pa = sample_params(kind, 0.8, AugmentMode::RUA, (20, 20), &mut a).unwrap();
            let pb = sample_params(kind, 0.8, AugmentMode::RUA, (20, 20), &mut b).unwrap();
            assert_eq!(pa, pb);
            assert_eq!(apply_transform(&pa, &im), apply_transform(&pb, &im));
        }
    }

    /// Expected distortion under RUA, estimated by averaging many draws.
    fn expected_distortion(kind: TransformKind, r: f64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let n = 20_000;
        let total: f64 = (0..n)
            .map(|_| {
                let m = sample_params(kind, r, AugmentMode::RUA, (32, 32), &mut rng)
                    .unwrap()
                    .magnitude;
                match kind {
                    TransformKind::Solarize => 256.0 - m,
                    TransformKind::Posterize => m,
                    _ => (m - 1.0).abs(),
                }
            })
            .sum();
        total / n as f64
    }

    #[test]
    fn starred_distortion_grows_with_r() {
        for kind in TransformKind::ALL.into_iter().filter(|k| k.is_starred()) {
            let means: Vec<f64> = (0..=10).map(|i| expected_distortion(kind, i as f64 / 10.0)).collect();
            assert_eq!(means[0], 0.0);
            assert!(means.windows(2).all(|w| w[1] >= w[0]), "{kind}: {means:?}");
        }
    }
}
