//! Rendering, image statistics and analysis tools for studying how
//! illumination shapes the appearance of shiny materials.
//!
//! - [`optics`]: Fresnel reflectance from complex indices of refraction.
//! - [`envmap`]: equirectangular HDR light maps, RGBE/PFM I/O and filtering.
//! - [`sphharm`]: spherical-harmonic power spectra and illumination metrics.
//! - [`specrender`]: mirror / diffuse+specular sphere stimuli.
//! - [`imstats`]: specular coverage and mean intensity.
//! - [`analysis`]: confidence ratings, bias index and regressions.
//! - [`raster`]: 8-bit PNG input and output for stimuli and masks.

pub mod analysis;
pub mod envmap;
pub mod imstats;
pub mod optics;
pub mod raster;
pub mod specrender;
pub mod sphharm;
