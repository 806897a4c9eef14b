//! The single-intensity augmentation policy.
//!
//! At intensity `r` with at most `n_max` transforms, an image receives
//! `floor(r·n_max)` transforms plus one more with probability
//! `frac(r·n_max)`. Each transform kind is drawn uniformly, with
//! replacement, from all fourteen kinds.
//!
//! Randomness for image `i` comes from its own ChaCha8 stream seeded with
//! [`stream_seed`]`(seed, i)`, so batches can be processed in any order or in
//! parallel with identical results. Draw order within a stream: the count
//! Bernoulli, then for each slot the kind draw followed by the two parameter
//! draws of [`sample_params`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::image::Image;
use crate::transforms::{apply_transform, sample_params, AugmentMode, TransformError, TransformKind, TransformParams};

pub const DEFAULT_N_MAX: u32 = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolicyError {
    #[error("intensity r = {0} is outside [0, 1]")]
    Domain(f64),
    #[error("n_max must be at least 1")]
    ZeroNMax,
    #[error(transparent)]
    Transform(#[from] TransformError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyConfig {
    pub r: f64,
    pub n_max: u32,
    pub mode: AugmentMode,
    pub seed: u64,
}

impl PolicyConfig {
    pub fn new(r: f64, n_max: u32, mode: AugmentMode, seed: u64) -> Result<Self, PolicyError> {
        let cfg = Self { r, n_max, mode, seed };
        cfg.validate()?;
        Ok(cfg)
    }

    /// RUA mode, `n_max = 5`.
    pub fn rua(r: f64, seed: u64) -> Result<Self, PolicyError> {
        Self::new(r, DEFAULT_N_MAX, AugmentMode::RUA, seed)
    }

    pub fn validate(&self) -> Result<(), PolicyError> {
        check_r(self.r)?;
        if self.n_max == 0 {
            return Err(PolicyError::ZeroNMax);
        }
        Ok(())
    }
}

fn check_r(r: f64) -> Result<(), PolicyError> {
    if (0.0..=1.0).contains(&r) {
        Ok(())
    } else {
        Err(PolicyError::Domain(r))
    }
}

/// Transforms applied to one image, in application order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AppliedTrace(pub Vec<TransformParams>);

impl AppliedTrace {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, TransformParams> {
        self.0.iter()
    }
}

/// 64-bit finalizer from SplitMix64.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the per-image stream:
/// `mix64(seed ^ index·0x9E3779B97F4A7C15)`.
///
/// For a fixed `seed` this is a bijection of `index`, so distinct images
/// never share a stream. Stable across releases.
#[inline]
pub fn stream_seed(seed: u64, index: u64) -> u64 {
    mix64(seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

pub fn image_rng(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_seed(seed, index))
}

/// `floor(r·n_max)` plus a Bernoulli draw on the fractional part. Always
/// consumes one `f64` draw.
pub fn sample_op_count<R: Rng + ?Sized>(r: f64, n_max: u32, rng: &mut R) -> Result<u32, PolicyError> {
    check_r(r)?;
    if n_max == 0 {
        return Err(PolicyError::ZeroNMax);
    }
    let target = r * n_max as f64;
    let whole = target.floor();
    let u: f64 = rng.random();
    let extra = u < target - whole;
    Ok(whole as u32 + extra as u32)
}

fn sample_kind<R: Rng + ?Sized>(rng: &mut R) -> TransformKind {
    TransformKind::ALL[rng.random_range(0..TransformKind::ALL.len())]
}

/// Draws and applies exactly `count` transforms at intensity `r`.
pub fn apply_n<R: Rng + ?Sized>(
    img: &Image,
    count: u32,
    r: f64,
    mode: AugmentMode,
    rng: &mut R,
) -> Result<(Image, AppliedTrace), PolicyError> {
    check_r(r)?;
    let mut current = img.clone();
    let mut trace = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let kind = sample_kind(rng);
        let params = sample_params(kind, r, mode, current.dimensions(), rng)?;
        current = apply_transform(&params, &current);
        trace.push(params);
    }
    Ok((current, AppliedTrace(trace)))
}

/// Augments image number `image_index` of a batch under `cfg`.
pub fn augment_image(img: &Image, cfg: &PolicyConfig, image_index: u64) -> Result<(Image, AppliedTrace), PolicyError> {
    cfg.validate()?;
    let mut rng = image_rng(cfg.seed, image_index);
    let count = sample_op_count(cfg.r, cfg.n_max, &mut rng)?;
    apply_n(img, count, cfg.r, cfg.mode, &mut rng)
}

/// Fixed-count variant used for throughput measurements: exactly `count`
/// transforms, no Bernoulli remainder.
pub fn augment_image_fixed(
    img: &Image,
    count: u32,
    r: f64,
    mode: AugmentMode,
    seed: u64,
    image_index: u64,
) -> Result<(Image, AppliedTrace), PolicyError> {
    let mut rng = image_rng(seed, image_index);
    apply_n(img, count, r, mode, &mut rng)
}
