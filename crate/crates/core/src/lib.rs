//! Random unidimensional augmentation.
//!
//! A single intensity `r ∈ [0, 1]` sets both how many transforms are applied
//! to an image and how strong each one is. Because model quality tends to be
//! unimodal in `r`, the best intensity can be found with a short
//! golden-section search instead of a grid.
//!
//! * [`image`]: RGB rasters, the PPM codec and the pixel kernels.
//! * [`transforms`]: the fourteen augmentations and their parameterization.
//! * [`policy`]: turning `(r, n_max, mode, seed)` into per-image transforms.
//! * [`gss`]: golden-section maximization as a resumable state machine.
//! * [`search`]: evaluators, the JSON-lines ledger, and the search drivers.
//! * [`cli`]: the `rua` command-line tool.

pub mod cli;
pub mod gss;
pub mod image;
pub mod policy;
pub mod search;
pub mod transforms;

pub use gss::{maximize, try_maximize, GssError, GssState, Maximum, PHI1, PHI2};
pub use image::{
    apply_lut, blend_enhance, decode_ppm, encode_ppm, warp_affine, AffineMap, ChannelLuts, Image, ImageError,
    Interpolation,
};
pub use policy::{augment_image, augment_image_fixed, sample_op_count, AppliedTrace, PolicyConfig, PolicyError};
pub use search::{
    evaluate, ledger_append, ledger_load, run_gss_search, run_grid, EvalRecord, EvaluatorSpec, GridSpec,
    GssOptions, SearchError, SearchReport, SyntheticSurface,
};
pub use transforms::{apply_transform, sample_params, AugmentMode, TransformKind, TransformParams};
