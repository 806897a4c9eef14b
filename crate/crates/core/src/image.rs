//! 8-bit RGB rasters, the binary PPM codec, and the pixel kernels the
//! transforms are assembled from.
//!
//! All kernels are pure functions: they take images by reference and return
//! new ones, so an [`Image`] can be shared freely between worker threads.

use thiserror::Error;

/// Number of interleaved channels in every [`Image`].
pub const CHANNELS: usize = 3;

/// One 256-entry lookup table per channel (R, G, B).
pub type ChannelLuts = [[u8; 256]; CHANNELS];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ImageError {
    #[error("not a binary PPM file (expected magic \"P6\")")]
    BadMagic,
    #[error("malformed PPM header: {0}")]
    BadHeader(String),
    #[error("truncated PPM payload: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("image dimensions differ: {left:?} vs {right:?}")]
    DimensionMismatch {
        left: (u32, u32),
        right: (u32, u32),
    },
    #[error("invalid image geometry: {0}")]
    InvalidGeometry(String),
}

/// Row-major interleaved RGB raster with 8-bit samples.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Image {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl std::fmt::Debug for Image {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Image")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

impl Image {
    /// Wraps `data` as a `width`×`height` RGB image.
    pub fn from_raw(width: u32, height: u32, data: Vec<u8>) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::InvalidGeometry(format!(
                "dimensions must be positive, got {width}x{height}"
            )));
        }
        let expected = sample_count(width, height)?;
        if data.len() != expected {
            return Err(ImageError::InvalidGeometry(format!(
                "{width}x{height} RGB needs {expected} samples, got {}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// A `width`×`height` image with every pixel set to `rgb`.
    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Result<Self, ImageError> {
        let n = sample_count(width, height)? / CHANNELS;
        let data = rgb.iter().copied().cycle().take(n * CHANNELS).collect();
        Self::from_raw(width, height, data)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dimensions(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    /// Interleaved samples, row-major.
    pub fn as_raw(&self) -> &[u8] {
        &self.data
    }

    pub fn into_raw(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    fn offset(&self, x: u32, y: u32) -> usize {
        (y as usize * self.width as usize + x as usize) * CHANNELS
    }

    /// Pixel at `(x, y)`. Panics when out of bounds.
    #[inline]
    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        assert!(x < self.width && y < self.height, "pixel ({x}, {y}) out of bounds");
        let o = self.offset(x, y);
        [self.data[o], self.data[o + 1], self.data[o + 2]]
    }

    #[inline]
    pub fn set_pixel(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        assert!(x < self.width && y < self.height, "pixel ({x}, {y}) out of bounds");
        let o = self.offset(x, y);
        self.data[o..o + CHANNELS].copy_from_slice(&rgb);
    }

    /// Iterates over pixels in row-major order.
    pub fn pixels(&self) -> impl Iterator<Item = [u8; 3]> + '_ {
        self.data.chunks_exact(CHANNELS).map(|p| [p[0], p[1], p[2]])
    }

    /// Builds a same-sized image by mapping each pixel.
    pub fn map_pixels(&self, mut f: impl FnMut([u8; 3]) -> [u8; 3]) -> Image {
        let mut data = Vec::with_capacity(self.data.len());
        for p in self.pixels() {
            data.extend_from_slice(&f(p));
        }
        Image {
            width: self.width,
            height: self.height,
            data,
        }
    }
}

fn sample_count(width: u32, height: u32) -> Result<usize, ImageError> {
    (width as usize)
        .checked_mul(height as usize)
        .and_then(|n| n.checked_mul(CHANNELS))
        .ok_or_else(|| ImageError::InvalidGeometry(format!("{width}x{height} overflows")))
}

/// Rounds half-up and saturates into the sample range.
#[inline]
pub(crate) fn round_clamp(v: f64) -> u8 {
    let r = (v + 0.5).floor();
    if r <= 0.0 {
        0
    } else if r >= 255.0 {
        255
    } else {
        r as u8
    }
}

// ---------------------------------------------------------------------------
// PPM codec
// ---------------------------------------------------------------------------

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderCursor<'_> {
    fn skip_whitespace_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn next_uint(&mut self, what: &str) -> Result<u64, ImageError> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(ImageError::BadHeader(format!("expected integer {what}")));
        }
        let token = std::str::from_utf8(&self.bytes[start..self.pos]).expect("ascii digits");
        token
            .parse::<u64>()
            .map_err(|_| ImageError::BadHeader(format!("{what} {token} out of range")))
    }
}

/// Decodes a binary (P6) PPM with maxval 255.
///
/// Trailing bytes after the payload are ignored.
pub fn decode_ppm(bytes: &[u8]) -> Result<Image, ImageError> {
    if bytes.len() < 2 || &bytes[..2] != b"P6" {
        return Err(ImageError::BadMagic);
    }
    let mut cur = HeaderCursor { bytes, pos: 2 };
    if !cur
        .bytes
        .get(cur.pos)
        .is_some_and(|b| b.is_ascii_whitespace() || *b == b'#')
    {
        return Err(ImageError::BadMagic);
    }
    let width = cur.next_uint("width")?;
    let height = cur.next_uint("height")?;
    let maxval = cur.next_uint("maxval")?;
    if width == 0 || height == 0 {
        return Err(ImageError::BadHeader(format!(
            "dimensions must be positive, got {width}x{height}"
        )));
    }
    let (width, height) = match (u32::try_from(width), u32::try_from(height)) {
        (Ok(w), Ok(h)) => (w, h),
        _ => return Err(ImageError::BadHeader("dimensions too large".into())),
    };
    if maxval != 255 {
        return Err(ImageError::BadHeader(format!("maxval must be 255, got {maxval}")));
    }
    // exactly one whitespace byte separates the header from the raster
    match bytes.get(cur.pos) {
        Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
        Some(_) => return Err(ImageError::BadHeader("missing separator after maxval".into())),
        None => {}
    }
    let expected = sample_count(width, height).map_err(|e| ImageError::BadHeader(e.to_string()))?;
    let payload = &bytes[cur.pos.min(bytes.len())..];
    if payload.len() < expected {
        return Err(ImageError::Truncated {
            expected,
            found: payload.len(),
        });
    }
    Image::from_raw(width, height, payload[..expected].to_vec())
}

/// Encodes as binary PPM: `P6\n<w> <h>\n255\n` followed by the raw samples.
pub fn encode_ppm(img: &Image) -> Vec<u8> {
    let header = format!("P6\n{} {}\n255\n", img.width, img.height);
    let mut out = Vec::with_capacity(header.len() + img.data.len());
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(&img.data);
    out
}

// ---------------------------------------------------------------------------
// Affine warp
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interpolation {
    Nearest,
    #[default]
    Bilinear,
}

/// Fill value used for samples that fall outside the source image.
pub const DEFAULT_FILL: u8 = 128;

/// Inverse affine map: destination pixel `(x, y)` samples the source at
/// `(a·x + b·y + c, d·x + e·y + f)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineMap {
    pub coeffs: [f64; 6],
    pub fill: u8,
    pub interpolation: Interpolation,
}

impl Default for AffineMap {
    fn default() -> Self {
        Self::identity()
    }
}

impl AffineMap {
    pub fn new(coeffs: [f64; 6]) -> Self {
        Self {
            coeffs,
            fill: DEFAULT_FILL,
            interpolation: Interpolation::default(),
        }
    }

    pub fn identity() -> Self {
        Self::new([1.0, 0.0, 0.0, 0.0, 1.0, 0.0])
    }

    /// Moves image content by `(dx, dy)` pixels.
    pub fn translate(dx: f64, dy: f64) -> Self {
        Self::new([1.0, 0.0, -dx, 0.0, 1.0, -dy])
    }

    /// Horizontal shear about the origin: source x = x + coef·y.
    pub fn shear_x(coef: f64) -> Self {
        Self::new([1.0, coef, 0.0, 0.0, 1.0, 0.0])
    }

    /// Vertical shear about the origin: source y = y + coef·x.
    pub fn shear_y(coef: f64) -> Self {
        Self::new([1.0, 0.0, 0.0, coef, 1.0, 0.0])
    }

    /// Rotation by `degrees` about the pixel-grid center
    /// `((w-1)/2, (h-1)/2)`. Positive angles turn the content
    /// counter-clockwise as displayed (y axis pointing down).
    pub fn rotate(degrees: f64, width: u32, height: u32) -> Self {
        let (sin, cos) = degrees.to_radians().sin_cos();
        let cx = (width as f64 - 1.0) / 2.0;
        let cy = (height as f64 - 1.0) / 2.0;
        Self::new([
            cos,
            -sin,
            cx - cos * cx + sin * cy,
            sin,
            cos,
            cy - sin * cx - cos * cy,
        ])
    }

    pub fn with_fill(mut self, fill: u8) -> Self {
        self.fill = fill;
        self
    }

    pub fn with_interpolation(mut self, interpolation: Interpolation) -> Self {
        self.interpolation = interpolation;
        self
    }

    #[inline]
    pub fn apply(&self, x: f64, y: f64) -> (f64, f64) {
        let [a, b, c, d, e, f] = self.coeffs;
        (a * x + b * y + c, d * x + e * y + f)
    }
}

/// Resamples `img` through `map`. Output has the input's dimensions.
///
/// Nearest interpolation reads the source pixel at the coordinate rounded
/// half-up; bilinear mixes the four surrounding pixels and rounds the result
/// half-up. Any source pixel outside the raster reads as `map.fill`.
pub fn warp_affine(img: &Image, map: &AffineMap) -> Image {
    let (w, h) = img.dimensions();
    let fill = [map.fill as f64; CHANNELS];
    let mut data = Vec::with_capacity(img.data.len());

    let fetch = |ix: i64, iy: i64| -> Option<[u8; 3]> {
        if ix >= 0 && iy >= 0 && ix < w as i64 && iy < h as i64 {
            Some(img.pixel(ix as u32, iy as u32))
        } else {
            None
        }
    };

    for y in 0..h {
        for x in 0..w {
            let (sx, sy) = map.apply(x as f64, y as f64);
            match map.interpolation {
                Interpolation::Nearest => {
                    let ix = (sx + 0.5).floor();
                    let iy = (sy + 0.5).floor();
                    let p = if ix.is_finite() && iy.is_finite() {
                        fetch(ix as i64, iy as i64)
                    } else {
                        None
                    };
                    data.extend_from_slice(&p.unwrap_or([map.fill; 3]));
                }
                Interpolation::Bilinear => {
                    if !(sx.is_finite() && sy.is_finite()) {
                        data.extend_from_slice(&[map.fill; 3]);
                        continue;
                    }
                    let x0 = sx.floor();
                    let y0 = sy.floor();
                    let fx = sx - x0;
                    let fy = sy - y0;
                    let (x0, y0) = (x0 as i64, y0 as i64);
                    let read = |ix, iy| fetch(ix, iy).map(|p| p.map(f64::from)).unwrap_or(fill);
                    let p00 = read(x0, y0);
                    let p10 = read(x0 + 1, y0);
                    let p01 = read(x0, y0 + 1);
                    let p11 = read(x0 + 1, y0 + 1);
                    for ch in 0..CHANNELS {
                        let top = p00[ch] + fx * (p10[ch] - p00[ch]);
                        let bottom = p01[ch] + fx * (p11[ch] - p01[ch]);
                        data.push(round_clamp(top + fy * (bottom - top)));
                    }
                }
            }
        }
    }
    Image {
        width: w,
        height: h,
        data,
    }
}

// ---------------------------------------------------------------------------
// Blend and lookup kernels
// ---------------------------------------------------------------------------

/// `degenerate + factor·(original − degenerate)` per sample, rounded half-up
/// and saturated once at the end.
pub fn blend_enhance(original: &Image, degenerate: &Image, factor: f64) -> Result<Image, ImageError> {
    if original.dimensions() != degenerate.dimensions() {
        return Err(ImageError::DimensionMismatch {
            left: original.dimensions(),
            right: degenerate.dimensions(),
        });
    }
    let data = original
        .data
        .iter()
        .zip(&degenerate.data)
        .map(|(&o, &d)| {
            let (o, d) = (o as f64, d as f64);
            round_clamp(d + factor * (o - d))
        })
        .collect();
    Ok(Image {
        width: original.width,
        height: original.height,
        data,
    })
}

/// Identity table for each channel.
pub fn identity_luts() -> ChannelLuts {
    let mut lut = [0u8; 256];
    for (i, v) in lut.iter_mut().enumerate() {
        *v = i as u8;
    }
    [lut; CHANNELS]
}

/// Same table on every channel, built from `f`.
pub fn uniform_luts(f: impl Fn(u8) -> u8) -> ChannelLuts {
    let mut lut = [0u8; 256];
    for (i, v) in lut.iter_mut().enumerate() {
        *v = f(i as u8);
    }
    [lut; CHANNELS]
}

pub fn apply_lut(img: &Image, luts: &ChannelLuts) -> Image {
    let data = img
        .data
        .chunks_exact(CHANNELS)
        .flat_map(|p| [luts[0][p[0] as usize], luts[1][p[1] as usize], luts[2][p[2] as usize]])
        .collect();
    Image {
        width: img.width,
        height: img.height,
        data,
    }
}
