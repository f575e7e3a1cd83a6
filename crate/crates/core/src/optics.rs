//! Fresnel reflectance of smooth dielectric and conducting surfaces.
//!
//! Materials are described by a complex index of refraction `n - ki`. The
//! ambient medium is air (index 1). Reflectance is reported for unpolarized
//! light, i.e. the mean of the s- and p-polarized power reflectances.
//!
//! Internally the transmitted-angle cosine is computed with the `n + ki`
//! sign convention and the principal complex square root, whose imaginary
//! part is non-negative, so the transmitted wave decays into the material.
//! Power reflectances are identical under either sign convention.

use std::fmt;
use std::io::Write;

use num_complex::Complex64;
use thiserror::Error;

/// Index of refraction of the "metal" side of a metalness switch.
pub const METAL_PROXY_N: f64 = 50.0;

/// Chromium, as used for the metal stimuli.
pub const CHROME: ComplexIor = ComplexIor { n: 3.21, k: 3.30 };
/// Obsidian-like black glass, used for the shiny black stimuli.
pub const OBSIDIAN: ComplexIor = ComplexIor { n: 1.51, k: 0.0 };
/// Aluminum.
pub const ALUMINUM: ComplexIor = ComplexIor { n: 1.2, k: 7.0 };

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OpticsError {
    #[error("invalid index of refraction ({n}, {k}): need finite n > 0 and k >= 0")]
    InvalidIor { n: f64, k: f64 },
    #[error("incident angle {0} deg outside [0, 90]")]
    AngleOutOfRange(f64),
    #[error("curve step {0} deg outside (0, 10]")]
    InvalidStep(f64),
    #[error("reflectance {0} outside [0, 1)")]
    ReflectanceOutOfRange(f64),
    #[error("metalness must be 0 or 1, got {0}")]
    FractionalMetalness(f64),
    #[error("dielectric index must be > 1, got {0}")]
    InvalidDielectricIndex(f64),
    #[error(
        "cannot recover an index of refraction from facing reflectance {facing} and grazing reflectance {grazing}: only dielectrics (grazing = 1) are supported"
    )]
    UnsupportedParameterization { facing: f64, grazing: f64 },
}

/// Complex index of refraction `n - ki`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ComplexIor {
    n: f64,
    k: f64,
}

impl ComplexIor {
    pub fn new(n: f64, k: f64) -> Result<Self, OpticsError> {
        if !(n.is_finite() && k.is_finite() && n > 0.0 && k >= 0.0) {
            return Err(OpticsError::InvalidIor { n, k });
        }
        Ok(Self { n, k })
    }

    pub fn dielectric(n: f64) -> Result<Self, OpticsError> {
        Self::new(n, 0.0)
    }

    pub fn n(&self) -> f64 {
        self.n
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn is_conductor(&self) -> bool {
        self.k > 0.0
    }

    fn validated(self) -> Result<Self, OpticsError> {
        Self::new(self.n, self.k)
    }
}

impl fmt::Display for ComplexIor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.n, self.k)
    }
}

/// s- and p-polarized power reflectance at `cos_i`, with `cos_i` in (0, 1].
pub(crate) fn polarized_reflectance(ior: ComplexIor, cos_i: f64) -> (f64, f64) {
    let eta = Complex64::new(ior.n, ior.k);
    let sin2_i = (1.0 - cos_i * cos_i).max(0.0);
    let cos_t = (Complex64::new(1.0, 0.0) - sin2_i / (eta * eta)).sqrt();
    let ci = Complex64::new(cos_i, 0.0);

    let r_s = (ci - eta * cos_t) / (ci + eta * cos_t);
    let r_p = (eta * ci - cos_t) / (eta * ci + cos_t);
    (r_s.norm_sqr().min(1.0), r_p.norm_sqr().min(1.0))
}

/// Unpolarized Fresnel reflectance at incident angle `theta_deg` (degrees).
///
/// Exactly 90 degrees is treated as the grazing limit and returns 1.
pub fn reflectance_unpolarized(ior: ComplexIor, theta_deg: f64) -> Result<f64, OpticsError> {
    let ior = ior.validated()?;
    if !(theta_deg.is_finite() && (0.0..=90.0).contains(&theta_deg)) {
        return Err(OpticsError::AngleOutOfRange(theta_deg));
    }
    if theta_deg == 90.0 {
        return Ok(1.0);
    }
    Ok(reflectance_at_cos(ior, theta_deg.to_radians().cos()))
}

/// Unpolarized reflectance for an already-validated IOR, given the cosine of
/// the incident angle. Cosines at or below zero give the grazing limit.
pub(crate) fn reflectance_at_cos(ior: ComplexIor, cos_i: f64) -> f64 {
    if cos_i <= 0.0 {
        return 1.0;
    }
    let (rs, rp) = polarized_reflectance(ior, cos_i.min(1.0));
    0.5 * (rs + rp)
}

/// Closed-form reflectance at normal incidence: `((n-1)^2 + k^2) / ((n+1)^2 + k^2)`.
pub fn normal_incidence_reflectance(ior: ComplexIor) -> Result<f64, OpticsError> {
    let ComplexIor { n, k } = ior.validated()?;
    Ok(((n - 1.0).powi(2) + k * k) / ((n + 1.0).powi(2) + k * k))
}

/// Recover an IOR from its facing (0 deg) and grazing (90 deg) reflectances.
///
/// Only the dielectric branch is implemented: every dielectric reflects
/// fully at grazing incidence, so `r_grazing` must be 1.
pub fn ior_from_facing_grazing(r_facing: f64, r_grazing: f64) -> Result<ComplexIor, OpticsError> {
    if !(r_facing.is_finite() && (0.0..1.0).contains(&r_facing)) {
        return Err(OpticsError::ReflectanceOutOfRange(r_facing));
    }
    if !(r_grazing.is_finite() && (0.0..=1.0).contains(&r_grazing)) {
        return Err(OpticsError::ReflectanceOutOfRange(r_grazing));
    }
    if (r_grazing - 1.0).abs() > 1e-12 {
        return Err(OpticsError::UnsupportedParameterization {
            facing: r_facing,
            grazing: r_grazing,
        });
    }
    let root = r_facing.sqrt();
    ComplexIor::new((1.0 + root) / (1.0 - root), 0.0)
}

/// Metalness switch: 0 keeps the dielectric index, 1 substitutes the
/// high-index metal proxy `(50, 0)`.
pub fn metalness_ior(metalness: f64, dielectric_n: f64) -> Result<ComplexIor, OpticsError> {
    if !(dielectric_n.is_finite() && dielectric_n > 1.0) {
        return Err(OpticsError::InvalidDielectricIndex(dielectric_n));
    }
    if metalness == 0.0 {
        ComplexIor::dielectric(dielectric_n)
    } else if metalness == 1.0 {
        ComplexIor::dielectric(METAL_PROXY_N)
    } else {
        Err(OpticsError::FractionalMetalness(metalness))
    }
}

/// Sampled reflectance as a function of incident angle.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectanceCurve {
    samples: Vec<(f64, f64)>,
}

impl ReflectanceCurve {
    /// `(theta_deg, reflectance)` pairs with strictly increasing angles.
    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    pub fn min_reflectance(&self) -> f64 {
        self.samples.iter().map(|s| s.1).fold(f64::INFINITY, f64::min)
    }

    /// Two-column CSV with a header row.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "theta_deg,reflectance")?;
        for (theta, r) in &self.samples {
            writeln!(out, "{theta},{r}")?;
        }
        Ok(())
    }
}

/// Sample reflectance at 0, step, 2 step, ... and always end at 90 degrees.
pub fn curve(ior: ComplexIor, step_deg: f64) -> Result<ReflectanceCurve, OpticsError> {
    let ior = ior.validated()?;
    if !(step_deg.is_finite() && step_deg > 0.0 && step_deg <= 10.0) {
        return Err(OpticsError::InvalidStep(step_deg));
    }
    let mut samples = Vec::new();
    let mut i = 0u32;
    loop {
        let theta = f64::from(i) * step_deg;
        // Snap to 90 when within rounding of the terminal sample.
        if theta >= 90.0 - 1e-9 {
            break;
        }
        samples.push((theta, reflectance_unpolarized(ior, theta)?));
        i += 1;
    }
    samples.push((90.0, 1.0));
    Ok(ReflectanceCurve { samples })
}
