use rayon::prelude::*;

use super::{EnvMapError, EquirectMap, Rgb};

/// Blur size as a "pixel width" plus the width-to-sigma ratio.
///
/// With the default ratio of 1/6 the kernel's +-3 sigma support spans the
/// stated width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlurParams {
    pub width_px: f64,
    pub sigma_per_width: f64,
}

impl BlurParams {
    pub const DEFAULT_SIGMA_PER_WIDTH: f64 = 1.0 / 6.0;

    pub fn new(width_px: f64) -> Self {
        Self {
            width_px,
            sigma_per_width: Self::DEFAULT_SIGMA_PER_WIDTH,
        }
    }

    pub fn sigma(&self) -> f64 {
        self.width_px * self.sigma_per_width
    }

    /// Same physical blur on a map `to_height` rows tall, given a width
    /// expressed for `from_height` rows.
    pub fn rescaled(&self, from_height: usize, to_height: usize) -> Self {
        Self {
            width_px: self.width_px * to_height as f64 / from_height as f64,
            ..*self
        }
    }

    fn validate(&self) -> Result<(), EnvMapError> {
        if !(self.width_px.is_finite() && self.width_px > 0.0) {
            return Err(EnvMapError::Domain(format!(
                "blur width must be positive, got {}",
                self.width_px
            )));
        }
        if !(self.sigma_per_width.is_finite() && self.sigma_per_width > 0.0) {
            return Err(EnvMapError::Domain(format!(
                "sigma-per-width ratio must be positive, got {}",
                self.sigma_per_width
            )));
        }
        Ok(())
    }
}

/// Normalized Gaussian taps for offsets `-r..=r`, `r = ceil(3 sigma)`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as usize;
    if radius == 0 {
        return vec![1.0];
    }
    let mut taps: Vec<f64> = (0..=2 * radius)
        .map(|i| {
            let x = i as f64 - radius as f64;
            (-x * x / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    taps
}

fn horizontal(map: &EquirectMap, taps: &[f64]) -> Vec<Rgb> {
    let w = map.width();
    let r = (taps.len() / 2) as isize;
    (0..map.height())
        .into_par_iter()
        .flat_map_iter(|i| {
            let row = map.row(i);
            (0..w).map(move |j| {
                let mut acc = [0.0; 3];
                for (t, weight) in taps.iter().enumerate() {
                    let src = (j as isize + t as isize - r).rem_euclid(w as isize) as usize;
                    for c in 0..3 {
                        acc[c] += weight * row[src][c];
                    }
                }
                acc
            })
        })
        .collect()
}

fn vertical(src: &[Rgb], width: usize, height: usize, taps: &[f64]) -> Vec<Rgb> {
    let r = (taps.len() / 2) as isize;
    (0..height)
        .into_par_iter()
        .flat_map_iter(|i| {
            (0..width).map(move |j| {
                let mut acc = [0.0; 3];
                for (t, weight) in taps.iter().enumerate() {
                    let row = (i as isize + t as isize - r).clamp(0, height as isize - 1) as usize;
                    let p = src[row * width + j];
                    for c in 0..3 {
                        acc[c] += weight * p[c];
                    }
                }
                acc
            })
        })
        .collect()
}

/// Separable planar Gaussian blur: azimuth wraps, rows clamp at the poles.
pub fn gaussian_blur(map: &EquirectMap, params: BlurParams) -> Result<EquirectMap, EnvMapError> {
    params.validate()?;
    let taps = gaussian_kernel(params.sigma());
    let h = horizontal(map, &taps);
    let v = vertical(&h, map.width(), map.height(), &taps);
    EquirectMap::from_pixels(map.width(), map.height(), v)
}

pub fn low_pass(map: &EquirectMap, params: BlurParams) -> Result<EquirectMap, EnvMapError> {
    gaussian_blur(map, params)
}

/// `map - low_pass(map)`. The result may hold negative values.
pub fn high_pass(map: &EquirectMap, params: BlurParams) -> Result<EquirectMap, EnvMapError> {
    let blurred = gaussian_blur(map, params)?;
    Ok(map.zip_pixels(&blurred, |a, b| [a[0] - b[0], a[1] - b[1], a[2] - b[2]]))
}
