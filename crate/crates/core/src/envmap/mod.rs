//! Equirectangular HDR light maps.
//!
//! A map is `width x height` with `width == 2 * height`. Row 0 is the zenith
//! (polar angle 0) and column 0 is azimuth 0; pixel `(i, j)` is centred on
//! `theta = pi (i + 0.5) / height`, `phi = 2 pi (j + 0.5) / width`.
//!
//! Values are linear radiance. Maps read from disk are non-negative; maps
//! produced by [`high_pass`] carry signed values, which are clamped to zero
//! only when written out.

mod filter;
pub mod pfm;
pub mod rgbe;

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use thiserror::Error;

pub use filter::{gaussian_blur, gaussian_kernel, high_pass, low_pass, BlurParams};

/// Rec.709 luma weights.
pub const LUMA: [f64; 3] = [0.2126, 0.7152, 0.0722];

#[derive(Debug, Error)]
pub enum EnvMapError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("unrecognized HDR container")]
    UnknownContainer,
    #[error("corrupt header: {0}")]
    CorruptHeader(String),
    #[error("corrupt pixel data: {0}")]
    CorruptData(String),
    #[error("light map must be 2:1, got {width}x{height}")]
    Aspect { width: usize, height: usize },
    #[error("pixel buffer holds {got} pixels, expected {expected}")]
    BufferSize { expected: usize, got: usize },
    #[error("pixel value {0} is not finite")]
    NonFinite(f64),
    #[error("negative radiance {0} in input file")]
    Negative(f64),
    #[error("{0}")]
    Domain(String),
}

pub type Rgb = [f64; 3];

pub fn luminance(p: Rgb) -> f64 {
    LUMA[0] * p[0] + LUMA[1] * p[1] + LUMA[2] * p[2]
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquirectMap {
    width: usize,
    height: usize,
    pixels: Vec<Rgb>,
}

impl EquirectMap {
    /// Wrap a row-major pixel buffer. Values must be finite; sign is not
    /// checked (see [`EquirectMap::is_non_negative`]).
    pub fn from_pixels(width: usize, height: usize, pixels: Vec<Rgb>) -> Result<Self, EnvMapError> {
        if height == 0 || width != 2 * height {
            return Err(EnvMapError::Aspect { width, height });
        }
        if pixels.len() != width * height {
            return Err(EnvMapError::BufferSize {
                expected: width * height,
                got: pixels.len(),
            });
        }
        if let Some(v) = pixels.iter().flatten().find(|v| !v.is_finite()) {
            return Err(EnvMapError::NonFinite(*v));
        }
        Ok(Self { width, height, pixels })
    }

    pub fn constant(height: usize, value: Rgb) -> Result<Self, EnvMapError> {
        Self::from_pixels(2 * height, height, vec![value; 2 * height * height])
    }

    /// Build a map by evaluating `f(theta, phi)` at every pixel centre.
    pub fn from_fn<F>(height: usize, f: F) -> Result<Self, EnvMapError>
    where
        F: Fn(f64, f64) -> Rgb + Sync,
    {
        let width = 2 * height;
        let pixels: Vec<Rgb> = (0..height)
            .into_par_iter()
            .flat_map_iter(|i| {
                let theta = PI * (i as f64 + 0.5) / height as f64;
                let f = &f;
                (0..width).map(move |j| f(theta, 2.0 * PI * (j as f64 + 0.5) / width as f64))
            })
            .collect();
        Self::from_pixels(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[Rgb] {
        &self.pixels
    }

    pub fn pixel(&self, row: usize, col: usize) -> Rgb {
        self.pixels[row * self.width + col]
    }

    pub fn row(&self, row: usize) -> &[Rgb] {
        &self.pixels[row * self.width..(row + 1) * self.width]
    }

    /// Polar angle of the centre of `row`.
    pub fn theta(&self, row: usize) -> f64 {
        PI * (row as f64 + 0.5) / self.height as f64
    }

    /// Azimuth of the centre of `col`.
    pub fn phi(&self, col: usize) -> f64 {
        2.0 * PI * (col as f64 + 0.5) / self.width as f64
    }

    pub fn is_non_negative(&self) -> bool {
        self.pixels.iter().flatten().all(|v| *v >= 0.0)
    }

    pub fn max_channel(&self) -> f64 {
        self.pixels.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn luminance_values(&self) -> Vec<f64> {
        self.pixels.iter().map(|p| luminance(*p)).collect()
    }

    pub(crate) fn map_pixels(&self, f: impl Fn(Rgb) -> Rgb + Sync) -> Self {
        Self {
            width: self.width,
            height: self.height,
            pixels: self.pixels.par_iter().map(|p| f(*p)).collect(),
        }
    }

    pub(crate) fn zip_pixels(&self, other: &Self, f: impl Fn(Rgb, Rgb) -> Rgb + Sync) -> Self {
        debug_assert_eq!((self.width, self.height), (other.width, other.height));
        Self {
            width: self.width,
            height: self.height,
            pixels: self
                .pixels
                .par_iter()
                .zip(other.pixels.par_iter())
                .map(|(a, b)| f(*a, *b))
                .collect(),
        }
    }

    /// Shift every row by `cols` columns, i.e. rotate about the polar axis.
    pub fn rotate_azimuth(&self, cols: usize) -> Self {
        let mut pixels = Vec::with_capacity(self.pixels.len());
        for i in 0..self.height {
            let row = self.row(i);
            let s = cols % self.width;
            pixels.extend_from_slice(&row[self.width - s..]);
            pixels.extend_from_slice(&row[..self.width - s]);
        }
        Self { pixels, ..*self }
    }

    /// Box-average downsample by an integer factor on both axes.
    pub fn downsample(&self, factor: usize) -> Result<Self, EnvMapError> {
        if factor == 0 || self.height % factor != 0 {
            return Err(EnvMapError::Domain(format!(
                "downsample factor {factor} does not divide height {}",
                self.height
            )));
        }
        let (w, h) = (self.width / factor, self.height / factor);
        let norm = (factor * factor) as f64;
        let pixels = (0..h * w)
            .map(|idx| {
                let (i, j) = (idx / w, idx % w);
                let mut acc = [0.0; 3];
                for di in 0..factor {
                    for dj in 0..factor {
                        let p = self.pixel(i * factor + di, j * factor + dj);
                        for c in 0..3 {
                            acc[c] += p[c];
                        }
                    }
                }
                acc.map(|v| v / norm)
            })
            .collect();
        Self::from_pixels(w, h, pixels)
    }
}

/// Container formats understood by [`load`] and [`save`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Container {
    Rgbe,
    Pfm,
}

impl Container {
    pub fn sniff(bytes: &[u8]) -> Option<Self> {
        if bytes.starts_with(b"#?") {
            Some(Self::Rgbe)
        } else if bytes.starts_with(b"PF") || bytes.starts_with(b"Pf") {
            Some(Self::Pfm)
        } else {
            None
        }
    }

    pub fn from_path(path: &Path) -> Option<Self> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "hdr" | "pic" | "rgbe" => Some(Self::Rgbe),
            "pfm" => Some(Self::Pfm),
            _ => None,
        }
    }
}

/// Decode an in-memory HDR file, detecting the container from its magic.
pub fn decode(bytes: &[u8]) -> Result<EquirectMap, EnvMapError> {
    let image = match Container::sniff(bytes) {
        Some(Container::Rgbe) => rgbe::decode(bytes)?,
        Some(Container::Pfm) => pfm::decode(bytes)?,
        None => return Err(EnvMapError::UnknownContainer),
    };
    if let Some(v) = image.pixels.iter().flatten().find(|v| **v < 0.0) {
        return Err(EnvMapError::Negative(*v));
    }
    EquirectMap::from_pixels(image.width, image.height, image.pixels)
}

pub fn encode(map: &EquirectMap, container: Container) -> Vec<u8> {
    let image = HdrImage {
        width: map.width,
        height: map.height,
        pixels: map.pixels.iter().map(|p| p.map(|v| v.max(0.0))).collect(),
    };
    match container {
        Container::Rgbe => rgbe::encode(&image),
        Container::Pfm => pfm::encode(&image),
    }
}

pub fn load(path: impl AsRef<Path>) -> Result<EquirectMap, EnvMapError> {
    decode(&fs::read(path)?)
}

/// Write `map`; the container follows the file extension. Negative values
/// are clamped to zero.
pub fn save(map: &EquirectMap, path: impl AsRef<Path>) -> Result<(), EnvMapError> {
    let path = path.as_ref();
    let container = Container::from_path(path).ok_or(EnvMapError::UnknownContainer)?;
    fs::write(path, encode(map, container))?;
    Ok(())
}

/// Raw decoded image of arbitrary shape, before the 2:1 check.
#[derive(Debug, Clone, PartialEq)]
pub struct HdrImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<Rgb>,
}

/// Multiply every channel by `factor`.
pub fn scale_intensity(map: &EquirectMap, factor: f64) -> Result<EquirectMap, EnvMapError> {
    if !(factor.is_finite() && factor > 0.0) {
        return Err(EnvMapError::Domain(format!(
            "intensity factor must be positive, got {factor}"
        )));
    }
    Ok(map.map_pixels(|p| p.map(|v| v * factor)))
}

/// Replace every pixel by its Rec.709 luma.
pub fn desaturate(map: &EquirectMap) -> EquirectMap {
    map.map_pixels(|p| [luminance(p); 3])
}
