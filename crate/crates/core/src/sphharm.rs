//! Real spherical-harmonic analysis of light maps.
//!
//! Uses real orthonormal harmonics with the Condon-Shortley phase:
//!
//! ```text
//! Y_l0  =      N_l0 P_l^0(cos theta)
//! Y_lm  = sqrt2 N_lm P_l^m(cos theta) cos(m phi)     m > 0
//! Y_l-m = sqrt2 N_lm P_l^m(cos theta) sin(m phi)     m > 0
//! ```
//!
//! Projection integrates pixel luminance over the pixel-centre grid. The
//! default polar weights are Fejer's first rule, which is exact for
//! polynomials in `cos(theta)` of degree below the map height, so band-limited
//! content (and the constant map) projects without quadrature leakage. Plain
//! midpoint weights `sin(theta) (pi / height)` are available for comparison.

use std::f64::consts::{PI, SQRT_2};

use rayon::prelude::*;
use thiserror::Error;

use crate::envmap::{luminance, EquirectMap};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ShError {
    #[error("map {width}x{height} is too small for quadrature (need at least 4x2)")]
    Resolution { width: usize, height: usize },
    #[error("expected {expected} coefficients for order {order}, got {got}")]
    CoefficientCount { order: usize, expected: usize, got: usize },
    #[error("coefficient {0} is not finite")]
    NonFinite(f64),
    #[error("{metric} is undefined: {reason}")]
    UndefinedMetric { metric: &'static str, reason: &'static str },
}

/// Flat index of `(l, m)` in a coefficient vector.
pub fn sh_index(l: usize, m: i64) -> usize {
    ((l * l + l) as i64 + m) as usize
}

pub fn coefficient_count(max_order: usize) -> usize {
    (max_order + 1) * (max_order + 1)
}

/// Orthonormalized associated Legendre values `N_lm P_l^m(x)` for
/// `0 <= m <= l <= max_order`, stored at `l (l + 1) / 2 + m`.
fn normalized_legendre(max_order: usize, x: f64) -> Vec<f64> {
    let tri = |l: usize, m: usize| l * (l + 1) / 2 + m;
    let mut p = vec![0.0; (max_order + 1) * (max_order + 2) / 2];
    let s = (1.0 - x * x).max(0.0).sqrt();
    p[0] = 0.5 / PI.sqrt();
    for m in 1..=max_order {
        let mf = m as f64;
        p[tri(m, m)] = -((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * s * p[tri(m - 1, m - 1)];
    }
    for m in 0..max_order {
        p[tri(m + 1, m)] = (2.0 * m as f64 + 3.0).sqrt() * x * p[tri(m, m)];
    }
    for m in 0..=max_order {
        for l in m + 2..=max_order {
            let (lf, mf) = (l as f64, m as f64);
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0).powi(2) - mf * mf) / (4.0 * (lf - 1.0).powi(2) - 1.0)).sqrt();
            p[tri(l, m)] = a * (x * p[tri(l - 1, m)] - b * p[tri(l - 2, m)]);
        }
    }
    p
}

/// All real harmonics up to `max_order` at `(theta, phi)`, indexed by
/// [`sh_index`].
pub fn eval_basis(max_order: usize, theta: f64, phi: f64) -> Vec<f64> {
    let legendre = normalized_legendre(max_order, theta.cos());
    let mut out = vec![0.0; coefficient_count(max_order)];
    for l in 0..=max_order {
        let row = l * (l + 1) / 2;
        out[sh_index(l, 0)] = legendre[row];
        for m in 1..=l {
            let (s, c) = (m as f64 * phi).sin_cos();
            let v = SQRT_2 * legendre[row + m];
            out[sh_index(l, m as i64)] = v * c;
            out[sh_index(l, -(m as i64))] = v * s;
        }
    }
    out
}

/// Real SH coefficients of a luminance function.
#[derive(Debug, Clone, PartialEq)]
pub struct ShSpectrum {
    max_order: usize,
    coeffs: Vec<f64>,
}

impl ShSpectrum {
    pub fn new(max_order: usize, coeffs: Vec<f64>) -> Result<Self, ShError> {
        let expected = coefficient_count(max_order);
        if coeffs.len() != expected {
            return Err(ShError::CoefficientCount {
                order: max_order,
                expected,
                got: coeffs.len(),
            });
        }
        if let Some(v) = coeffs.iter().find(|v| !v.is_finite()) {
            return Err(ShError::NonFinite(*v));
        }
        Ok(Self { max_order, coeffs })
    }

    pub fn zeros(max_order: usize) -> Self {
        Self {
            max_order,
            coeffs: vec![0.0; coefficient_count(max_order)],
        }
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn get(&self, l: usize, m: i64) -> f64 {
        self.coeffs[sh_index(l, m)]
    }

    pub fn set(&mut self, l: usize, m: i64, value: f64) {
        self.coeffs[sh_index(l, m)] = value;
    }

    /// Keep orders `0..=max_order` only.
    pub fn truncated(&self, max_order: usize) -> Self {
        let max_order = max_order.min(self.max_order);
        Self {
            max_order,
            coeffs: self.coeffs[..coefficient_count(max_order)].to_vec(),
        }
    }

    /// `(l, m, coeff)` triples in index order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, i64, f64)> + '_ {
        (0..=self.max_order).flat_map(move |l| {
            (-(l as i64)..=l as i64).map(move |m| (l, m, self.get(l, m)))
        })
    }

    pub fn evaluate(&self, theta: f64, phi: f64) -> f64 {
        eval_basis(self.max_order, theta, phi)
            .iter()
            .zip(&self.coeffs)
            .map(|(y, c)| y * c)
            .sum()
    }
}

/// Pairwise sum of equal-length vectors. The split points depend only on
/// the slice length, so the result does not depend on thread scheduling.
fn pairwise_sum(parts: &[Vec<f64>]) -> Vec<f64> {
    match parts.len() {
        0 => Vec::new(),
        1 => parts[0].clone(),
        n => {
            let (a, b) = parts.split_at(n / 2);
            let mut left = pairwise_sum(a);
            for (x, y) in left.iter_mut().zip(pairwise_sum(b)) {
                *x += y;
            }
            left
        }
    }
}

/// Polar quadrature rule over the pixel-centre rows.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Quadrature {
    /// Fejer's first rule on the nodes `theta_i = pi (i + 0.5) / height`.
    #[default]
    Fejer,
    /// `sin(theta_i) pi / height`.
    Midpoint,
}

impl Quadrature {
    /// Weights `w_i` with `sum_i w_i f(theta_i) ~ int_0^pi f(theta) sin(theta) dtheta`.
    pub fn polar_weights(self, height: usize) -> Vec<f64> {
        let theta = |i: usize| PI * (i as f64 + 0.5) / height as f64;
        match self {
            Quadrature::Midpoint => (0..height).map(|i| theta(i).sin() * PI / height as f64).collect(),
            Quadrature::Fejer => (0..height)
                .map(|i| {
                    let t = theta(i);
                    let s: f64 = (1..=height / 2)
                        .map(|j| (2.0 * j as f64 * t).cos() / (4.0 * (j * j) as f64 - 1.0))
                        .sum();
                    2.0 / height as f64 * (1.0 - 2.0 * s)
                })
                .collect(),
        }
    }
}

/// Project the luminance of `map` onto real harmonics up to `max_order`.
pub fn project(map: &EquirectMap, max_order: usize) -> Result<ShSpectrum, ShError> {
    project_with(map, max_order, Quadrature::default())
}

pub fn project_with(map: &EquirectMap, max_order: usize, quadrature: Quadrature) -> Result<ShSpectrum, ShError> {
    let (width, height) = (map.width(), map.height());
    if width < 4 || height < 2 {
        return Err(ShError::Resolution { width, height });
    }
    let d_phi = 2.0 * PI / width as f64;
    let polar = quadrature.polar_weights(height);

    // cos(m phi_j), sin(m phi_j) for every column.
    let trig: Vec<Vec<(f64, f64)>> = (0..width)
        .map(|j| {
            let phi = map.phi(j);
            (0..=max_order)
                .map(|m| {
                    let (s, c) = (m as f64 * phi).sin_cos();
                    (c, s)
                })
                .collect()
        })
        .collect();

    let rows: Vec<Vec<f64>> = (0..height)
        .into_par_iter()
        .map(|i| {
            let theta = map.theta(i);
            let weight = polar[i] * d_phi;
            // Azimuthal Fourier sums of this row.
            let mut a = vec![0.0; max_order + 1];
            let mut b = vec![0.0; max_order + 1];
            for (px, t) in map.row(i).iter().zip(&trig) {
                let y = luminance(*px);
                if y == 0.0 {
                    continue;
                }
                for m in 0..=max_order {
                    a[m] += y * t[m].0;
                    b[m] += y * t[m].1;
                }
            }
            let legendre = normalized_legendre(max_order, theta.cos());
            let mut out = vec![0.0; coefficient_count(max_order)];
            for l in 0..=max_order {
                let row = l * (l + 1) / 2;
                out[sh_index(l, 0)] = weight * legendre[row] * a[0];
                for m in 1..=l {
                    let v = weight * SQRT_2 * legendre[row + m];
                    out[sh_index(l, m as i64)] = v * a[m];
                    out[sh_index(l, -(m as i64))] = v * b[m];
                }
            }
            out
        })
        .collect();

    ShSpectrum::new(max_order, pairwise_sum(&rows))
}

/// Grayscale map of `sum c_lm Y_lm` sampled at pixel centres.
pub fn reconstruct(spec: &ShSpectrum, height: usize) -> Result<EquirectMap, ShError> {
    let width = 2 * height;
    if height < 2 {
        return Err(ShError::Resolution { width, height });
    }
    let order = spec.max_order();
    let trig: Vec<Vec<(f64, f64)>> = (0..width)
        .map(|j| {
            let phi = 2.0 * PI * (j as f64 + 0.5) / width as f64;
            (0..=order).map(|m| (m as f64 * phi).sin_cos()).collect()
        })
        .collect();
    let pixels: Vec<[f64; 3]> = (0..height)
        .into_par_iter()
        .flat_map_iter(|i| {
            let theta = PI * (i as f64 + 0.5) / height as f64;
            let legendre = normalized_legendre(order, theta.cos());
            // Per-m cosine and sine amplitudes of this row.
            let mut a = vec![0.0; order + 1];
            let mut b = vec![0.0; order + 1];
            for l in 0..=order {
                let row = l * (l + 1) / 2;
                a[0] += legendre[row] * spec.get(l, 0);
                for m in 1..=l {
                    let v = SQRT_2 * legendre[row + m];
                    a[m] += v * spec.get(l, m as i64);
                    b[m] += v * spec.get(l, -(m as i64));
                }
            }
            trig.iter()
                .map(|t| {
                    let y = a[0] + (1..=order).map(|m| a[m] * t[m].1 + b[m] * t[m].0).sum::<f64>();
                    [y; 3]
                })
                .collect::<Vec<_>>()
        })
        .collect();
    EquirectMap::from_pixels(width, height, pixels).map_err(|_| ShError::Resolution { width, height })
}

/// How per-order power is formed from the coefficients of that order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum PowerMode {
    /// `sqrt(sum_m c_lm^2 / (2l + 1))`
    #[default]
    Rms,
    /// `sum_m c_lm^2`, for sensitivity comparisons.
    SumOfSquares,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderPowers {
    powers: Vec<f64>,
}

impl OrderPowers {
    pub fn new(powers: Vec<f64>) -> Self {
        Self { powers }
    }

    pub fn powers(&self) -> &[f64] {
        &self.powers
    }

    pub fn max_order(&self) -> usize {
        self.powers.len().saturating_sub(1)
    }

    pub fn get(&self, l: usize) -> f64 {
        self.powers.get(l).copied().unwrap_or(0.0)
    }
}

pub fn order_powers(spec: &ShSpectrum, mode: PowerMode) -> OrderPowers {
    let powers = (0..=spec.max_order())
        .map(|l| {
            let sq: f64 = (-(l as i64)..=l as i64).map(|m| spec.get(l, m).powi(2)).sum();
            match mode {
                PowerMode::Rms => (sq / (2 * l + 1) as f64).sqrt(),
                PowerMode::SumOfSquares => sq,
            }
        })
        .collect();
    OrderPowers { powers }
}

fn ratio_to_p0(p: &OrderPowers, l: usize, metric: &'static str) -> Result<f64, ShError> {
    let p0 = p.get(0);
    if !(p0 > 0.0) {
        return Err(ShError::UndefinedMetric {
            metric,
            reason: "zero-order power is zero",
        });
    }
    Ok(p.get(l) / p0)
}

/// `P_1 / P_0`.
pub fn diffuseness(p: &OrderPowers) -> Result<f64, ShError> {
    ratio_to_p0(p, 1, "diffuseness")
}

/// `P_2 / P_0`.
pub fn diffuseness2(p: &OrderPowers) -> Result<f64, ShError> {
    ratio_to_p0(p, 2, "diffuseness2")
}

/// Share of total power held in orders 3 and up. Callers should supply
/// powers to order 30.
pub fn brilliance(p: &OrderPowers) -> Result<f64, ShError> {
    let total: f64 = p.powers().iter().sum();
    if !(total > 0.0) {
        return Err(ShError::UndefinedMetric {
            metric: "brilliance",
            reason: "total power is zero",
        });
    }
    Ok(p.powers().iter().skip(3).sum::<f64>() / total)
}

/// Order used for brilliance.
pub const BRILLIANCE_ORDER: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct IlluminationMetrics {
    pub diffuseness: f64,
    pub brilliance: f64,
    pub diffuseness2: f64,
}

pub fn illumination_metrics(p: &OrderPowers) -> Result<IlluminationMetrics, ShError> {
    Ok(IlluminationMetrics {
        diffuseness: diffuseness(p)?,
        brilliance: brilliance(p)?,
        diffuseness2: diffuseness2(p)?,
    })
}
