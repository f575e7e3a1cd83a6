//! Analytic renderer for mirror and diffuse+specular spheres.
//!
//! The camera is orthographic and looks down `-z`; camera `+y` is the light
//! map's zenith, and the direction towards the viewer is azimuth 0 on the
//! horizon. Each object pixel gets a single bounce: Fresnel-weighted mirror
//! lookup of the light map, plus (for shiny white) Lambertian irradiance
//! from the order-2 SH expansion of the map. There is no shadowing or
//! inter-reflection.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::envmap::{gaussian_blur, luminance, BlurParams, EnvMapError, EquirectMap};
use crate::optics::{reflectance_at_cos, ComplexIor, CHROME, OBSIDIAN};
use crate::sphharm::{eval_basis, project, sh_index, ShError};

/// Gray level of the uniform background.
pub const BACKGROUND_GRAY: u8 = 100;
/// Tone-mapped value of the brightest object pixel after exposure
/// normalization.
pub const CEILING_GRAY: u8 = 254;
pub const DISPLAY_GAMMA: f64 = 2.2;
pub const MIN_SIZE: usize = 32;
/// Lambertian albedo of the shiny white diffuse layer.
pub const SHINY_WHITE_ALBEDO: f64 = 0.5;

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("image size {0} is below the minimum of {MIN_SIZE}")]
    Size(usize),
    #[error("invalid material: {0}")]
    Material(String),
    #[error("cannot normalize exposure: no positive object pixel")]
    Exposure,
    #[error("{0}")]
    Domain(String),
    #[error(transparent)]
    EnvMap(#[from] EnvMapError),
    #[error(transparent)]
    Sh(#[from] ShError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaterialKind {
    Metal,
    ShinyBlack,
    ShinyWhite,
}

impl MaterialKind {
    pub const ALL: [MaterialKind; 3] = [Self::Metal, Self::ShinyBlack, Self::ShinyWhite];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Metal => "metal",
            Self::ShinyBlack => "shiny_black",
            Self::ShinyWhite => "shiny_white",
        }
    }
}

impl fmt::Display for MaterialKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MaterialKind {
    type Err = String;

    /// Accepts `shiny_black` and `shiny-black` spellings.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().replace('-', "_").as_str() {
            "metal" => Ok(Self::Metal),
            "shiny_black" => Ok(Self::ShinyBlack),
            "shiny_white" => Ok(Self::ShinyWhite),
            _ => Err(format!("unknown material {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialSpec {
    kind: MaterialKind,
    ior: ComplexIor,
    diffuse_albedo: f64,
}

impl MaterialSpec {
    pub fn new(kind: MaterialKind, ior: ComplexIor, diffuse_albedo: f64) -> Result<Self, RenderError> {
        let err = |msg: &str| Err(RenderError::Material(format!("{kind}: {msg}")));
        if !(0.0..=1.0).contains(&diffuse_albedo) {
            return err("diffuse albedo outside [0, 1]");
        }
        match kind {
            MaterialKind::Metal if !ior.is_conductor() => return err("metal needs k > 0"),
            MaterialKind::Metal if diffuse_albedo != 0.0 => return err("metal has no diffuse layer"),
            MaterialKind::ShinyBlack if ior.is_conductor() || diffuse_albedo != 0.0 => {
                return err("shiny black needs k = 0 and no diffuse layer")
            }
            MaterialKind::ShinyWhite if ior.is_conductor() || diffuse_albedo <= 0.0 => {
                return err("shiny white needs k = 0 and a diffuse layer")
            }
            _ => {}
        }
        Ok(Self { kind, ior, diffuse_albedo })
    }

    /// Standard material for each category: chrome, obsidian, and obsidian
    /// over a Lambertian base.
    pub fn standard(kind: MaterialKind) -> Self {
        match kind {
            MaterialKind::Metal => Self { kind, ior: CHROME, diffuse_albedo: 0.0 },
            MaterialKind::ShinyBlack => Self { kind, ior: OBSIDIAN, diffuse_albedo: 0.0 },
            MaterialKind::ShinyWhite => Self { kind, ior: OBSIDIAN, diffuse_albedo: SHINY_WHITE_ALBEDO },
        }
    }

    pub fn kind(&self) -> MaterialKind {
        self.kind
    }

    pub fn ior(&self) -> ComplexIor {
        self.ior
    }

    pub fn diffuse_albedo(&self) -> f64 {
        self.diffuse_albedo
    }
}

/// Light-map lookup filter.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Sampling {
    #[default]
    Bilinear,
    Nearest,
}

/// Sinusoidal height perturbation of the sphere, as seen by the camera:
/// `h(u, v) = amplitude sin(frequency u) sin(frequency v)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Deformation {
    pub amplitude: f64,
    pub frequency: f64,
}

/// Which terms contribute to the rendered radiance.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Components {
    #[default]
    All,
    SpecularOnly,
    DiffuseOnly,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderOptions {
    pub sampling: Sampling,
    pub deformation: Option<Deformation>,
    /// Blur width (pixels at the map's resolution) applied to the light map
    /// before lookup, as a stand-in for slight surface roughness.
    pub prefilter_width: Option<f64>,
    /// Replace Fresnel reflectance by 1 everywhere.
    pub unit_reflectance: bool,
    pub components: Components,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self {
            sampling: Sampling::Bilinear,
            deformation: None,
            prefilter_width: None,
            unit_reflectance: false,
            components: Components::All,
        }
    }
}

/// Linear-radiance render of one object.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    size: usize,
    radiance: Vec<f64>,
    mask: Vec<bool>,
}

impl Raster {
    pub fn new(size: usize, radiance: Vec<f64>, mask: Vec<bool>) -> Result<Self, RenderError> {
        if radiance.len() != size * size || mask.len() != size * size {
            return Err(RenderError::Domain("raster buffers do not match size".into()));
        }
        Ok(Self { size, radiance, mask })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn radiance(&self) -> &[f64] {
        &self.radiance
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn max_object(&self) -> f64 {
        self.object_values().fold(0.0, f64::max)
    }

    pub fn object_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.radiance
            .iter()
            .zip(&self.mask)
            .filter(|(_, m)| **m)
            .map(|(v, _)| *v)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            radiance: self.radiance.iter().map(|v| v * factor).collect(),
            ..self.clone()
        }
    }
}

/// Unit vector for map coordinates `(theta, phi)`, in camera space.
pub fn map_direction(theta: f64, phi: f64) -> [f64; 3] {
    let s = theta.sin();
    [s * phi.sin(), theta.cos(), s * phi.cos()]
}

/// Map coordinates `(theta, phi)` of a camera-space unit vector.
pub fn direction_angles(d: [f64; 3]) -> (f64, f64) {
    let theta = d[1].clamp(-1.0, 1.0).acos();
    let phi = d[0].atan2(d[2]).rem_euclid(2.0 * PI);
    (theta, phi)
}

/// Radiance of `map` (luminance) in direction `d`.
pub fn sample_map(map: &EquirectMap, d: [f64; 3], sampling: Sampling) -> f64 {
    let (theta, phi) = direction_angles(d);
    let (w, h) = (map.width(), map.height());
    match sampling {
        Sampling::Nearest => {
            let i = ((theta / PI * h as f64) as usize).min(h - 1);
            let j = ((phi / (2.0 * PI) * w as f64) as usize).min(w - 1);
            luminance(map.pixel(i, j))
        }
        Sampling::Bilinear => {
            let y = (theta / PI * h as f64 - 0.5).clamp(0.0, (h - 1) as f64);
            let x = phi / (2.0 * PI) * w as f64 - 0.5;
            let (y0, fy) = (y.floor() as usize, y.fract());
            let y1 = (y0 + 1).min(h - 1);
            let x0f = x.floor();
            let fx = x - x0f;
            let x0 = (x0f as isize).rem_euclid(w as isize) as usize;
            let x1 = (x0 + 1) % w;
            let l = |i, j| luminance(map.pixel(i, j));
            (1.0 - fy) * ((1.0 - fx) * l(y0, x0) + fx * l(y0, x1))
                + fy * ((1.0 - fx) * l(y1, x0) + fx * l(y1, x1))
        }
    }
}

/// Cosine-lobe irradiance from an order-2 SH expansion of the map.
struct Irradiance {
    coeffs: Vec<f64>,
}

impl Irradiance {
    fn from_map(map: &EquirectMap) -> Result<Self, RenderError> {
        let spec = project(map, 2)?;
        // Clamped-cosine convolution weights for orders 0, 1, 2.
        let lobe = [PI, 2.0 * PI / 3.0, PI / 4.0];
        let coeffs = spec
            .iter()
            .map(|(l, _, c)| lobe[l] * c)
            .collect();
        Ok(Self { coeffs })
    }

    fn at(&self, n: [f64; 3]) -> f64 {
        let (theta, phi) = direction_angles(n);
        let basis = eval_basis(2, theta, phi);
        debug_assert_eq!(basis.len(), sh_index(2, 2) + 1);
        basis.iter().zip(&self.coeffs).map(|(y, c)| y * c).sum::<f64>().max(0.0)
    }
}

fn normalize(v: [f64; 3]) -> [f64; 3] {
    let len = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / len, v[1] / len, v[2] / len]
}

/// Surface normal under pixel-plane coordinates `(u, v)` on the unit disk.
fn surface_normal(u: f64, v: f64, deformation: Option<Deformation>) -> [f64; 3] {
    let z = (1.0 - u * u - v * v).max(0.0).sqrt();
    match deformation {
        None => [u, v, z],
        Some(Deformation { amplitude, frequency }) => {
            let (fu, fv) = (frequency * u, frequency * v);
            let hu = amplitude * frequency * fu.cos() * fv.sin();
            let hv = amplitude * frequency * fu.sin() * fv.cos();
            // Gradient of z + h scaled by z, which stays finite at the rim.
            normalize([u - z * hu, v - z * hv, z.max(1e-12)])
        }
    }
}

/// Pixel-plane coordinates of pixel `(x, y)` centre.
pub fn pixel_to_plane(size: usize, x: usize, y: usize) -> (f64, f64) {
    let u = 2.0 * (x as f64 + 0.5) / size as f64 - 1.0;
    let v = 1.0 - 2.0 * (y as f64 + 0.5) / size as f64;
    (u, v)
}

pub fn render_sphere(
    map: &EquirectMap,
    material: &MaterialSpec,
    size: usize,
    options: &RenderOptions,
) -> Result<Raster, RenderError> {
    if size < MIN_SIZE {
        return Err(RenderError::Size(size));
    }
    let prefiltered;
    let lookup = match options.prefilter_width {
        Some(w) if w > 0.0 => {
            prefiltered = gaussian_blur(map, BlurParams::new(w))?;
            &prefiltered
        }
        _ => map,
    };
    let want_specular = options.components != Components::DiffuseOnly;
    let want_diffuse = options.components != Components::SpecularOnly && material.diffuse_albedo > 0.0;
    let irradiance = if want_diffuse { Some(Irradiance::from_map(map)?) } else { None };
    let ior = material.ior;
    let albedo = material.diffuse_albedo;

    let pixels: Vec<(f64, bool)> = (0..size * size)
        .into_par_iter()
        .map(|idx| {
            let (x, y) = (idx % size, idx / size);
            let (u, v) = pixel_to_plane(size, x, y);
            if u * u + v * v > 1.0 {
                return (0.0, false);
            }
            let n = surface_normal(u, v, options.deformation);
            let cos_i = n[2];
            let mut radiance = 0.0;
            if want_specular {
                let r = [2.0 * cos_i * n[0], 2.0 * cos_i * n[1], 2.0 * cos_i * n[2] - 1.0];
                let fresnel = if options.unit_reflectance { 1.0 } else { reflectance_at_cos(ior, cos_i) };
                radiance += fresnel * sample_map(lookup, r, options.sampling);
            }
            if let Some(irr) = &irradiance {
                radiance += albedo / PI * irr.at(n);
            }
            (radiance, true)
        })
        .collect();
    let (radiance, mask) = pixels.into_iter().unzip();
    Raster::new(size, radiance, mask)
}

/// Linear value that tone-maps to [`CEILING_GRAY`].
pub fn ceiling_value() -> f64 {
    (f64::from(CEILING_GRAY) / 255.0).powf(DISPLAY_GAMMA)
}

/// Scale `raster` so its brightest object pixel lands exactly on the
/// ceiling. Returns the scaled raster and the scale.
pub fn normalize_exposure(raster: &Raster) -> Result<(Raster, f64), RenderError> {
    let max = raster.max_object();
    if !(max > 0.0 && max.is_finite()) {
        return Err(RenderError::Exposure);
    }
    let scale = ceiling_value() / max;
    Ok((raster.scaled(scale), scale))
}

/// Gamma-encode one linear value. Values at or above the ceiling give
/// [`CEILING_GRAY`].
pub fn tone_map_value(v: f64) -> u8 {
    let g = (255.0 * v.clamp(0.0, 1.0).powf(1.0 / DISPLAY_GAMMA)).round();
    (g as u8).min(CEILING_GRAY)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StimulusMeta {
    pub object: String,
    pub material: MaterialKind,
    pub light_map: String,
    pub factor: f64,
    pub exposure_scale: f64,
}

impl StimulusMeta {
    /// `<map>_<object>_<material>_x<factor>`.
    pub fn stimulus_id(&self) -> String {
        format!("{}_{}_{}_x{}", self.light_map, self.object, self.material, self.factor)
    }
}

/// 8-bit grayscale stimulus with its object mask.
#[derive(Debug, Clone, PartialEq)]
pub struct Stimulus {
    size: usize,
    image: Vec<u8>,
    mask: Vec<bool>,
    meta: StimulusMeta,
}

impl Stimulus {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn image(&self) -> &[u8] {
        &self.image
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn meta(&self) -> &StimulusMeta {
        &self.meta
    }

    pub fn id(&self) -> String {
        self.meta.stimulus_id()
    }

    pub fn object_pixels(&self) -> impl Iterator<Item = u8> + '_ {
        self.image.iter().zip(&self.mask).filter(|(_, m)| **m).map(|(v, _)| *v)
    }

    pub fn max_object(&self) -> u8 {
        self.object_pixels().max().unwrap_or(0)
    }
}

/// Global gamma-2.2 tone map onto a uniform background.
pub fn tone_map(raster: &Raster, meta: StimulusMeta) -> Stimulus {
    let image = raster
        .radiance
        .iter()
        .zip(&raster.mask)
        .map(|(v, m)| if *m { tone_map_value(*v) } else { BACKGROUND_GRAY })
        .collect();
    Stimulus {
        size: raster.size,
        image,
        mask: raster.mask.clone(),
        meta,
    }
}

/// One row of the condition table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Condition {
    pub material: MaterialKind,
    pub factor: f64,
}

impl Condition {
    /// Metal x1, metal x0.2, shiny black x1, shiny black x5, shiny white x1.
    pub fn standard_set() -> Vec<Condition> {
        vec![
            Condition { material: MaterialKind::Metal, factor: 1.0 },
            Condition { material: MaterialKind::Metal, factor: 0.2 },
            Condition { material: MaterialKind::ShinyBlack, factor: 1.0 },
            Condition { material: MaterialKind::ShinyBlack, factor: 5.0 },
            Condition { material: MaterialKind::ShinyWhite, factor: 1.0 },
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StimulusObject {
    pub id: String,
    pub deformation: Option<Deformation>,
}

impl StimulusObject {
    pub fn sphere() -> Self {
        Self { id: "sphere".into(), deformation: None }
    }

    /// The three standard objects: a sphere and two deformed spheres.
    pub fn standard_set() -> Vec<Self> {
        vec![
            Self::sphere(),
            Self {
                id: "lumpy".into(),
                deformation: Some(Deformation { amplitude: 0.06, frequency: 4.0 }),
            },
            Self {
                id: "rippled".into(),
                deformation: Some(Deformation { amplitude: 0.02, frequency: 11.0 }),
            },
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionSetParams {
    pub objects: Vec<StimulusObject>,
    pub conditions: Vec<Condition>,
    pub size: usize,
    pub sampling: Sampling,
    pub prefilter_width: Option<f64>,
}

impl Default for ConditionSetParams {
    fn default() -> Self {
        Self {
            objects: vec![StimulusObject::sphere()],
            conditions: Condition::standard_set(),
            size: 256,
            sampling: Sampling::Bilinear,
            prefilter_width: None,
        }
    }
}

/// Render every (map, object, condition) stimulus.
///
/// For each map and object the metal x1 render fixes the exposure scale;
/// all other conditions reuse it with their intensity factor applied, and
/// any render that would exceed the ceiling is re-normalized down to it.
/// Intensity factors are applied to the linear render, which equals
/// rendering the scaled map because rendering is linear in the map.
pub fn render_condition_set(
    maps: &[(String, EquirectMap)],
    params: &ConditionSetParams,
) -> Result<Vec<Stimulus>, RenderError> {
    if maps.is_empty() || params.objects.is_empty() || params.conditions.is_empty() {
        return Err(RenderError::Domain("condition set needs maps, objects and conditions".into()));
    }
    if let Some(c) = params.conditions.iter().find(|c| !(c.factor.is_finite() && c.factor > 0.0)) {
        return Err(RenderError::Domain(format!("intensity factor must be positive, got {}", c.factor)));
    }
    let mut out = Vec::with_capacity(maps.len() * params.objects.len() * params.conditions.len());
    for (map_id, map) in maps {
        for object in &params.objects {
            let options = RenderOptions {
                sampling: params.sampling,
                deformation: object.deformation,
                prefilter_width: params.prefilter_width,
                ..RenderOptions::default()
            };
            let reference = render_sphere(map, &MaterialSpec::standard(MaterialKind::Metal), params.size, &options)?;
            let (_, base_scale) = normalize_exposure(&reference)?;

            for cond in &params.conditions {
                let raw = if cond.material == MaterialKind::Metal {
                    reference.clone()
                } else {
                    render_sphere(map, &MaterialSpec::standard(cond.material), params.size, &options)?
                };
                let mut scale = base_scale * cond.factor;
                let max = raw.max_object() * scale;
                if max > ceiling_value() {
                    scale = ceiling_value() / raw.max_object();
                }
                let meta = StimulusMeta {
                    object: object.id.clone(),
                    material: cond.material,
                    light_map: map_id.clone(),
                    factor: cond.factor,
                    exposure_scale: scale,
                };
                out.push(tone_map(&raw.scaled(scale), meta));
            }
        }
    }
    Ok(out)
}
