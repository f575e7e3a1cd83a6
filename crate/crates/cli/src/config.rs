//! Flat `key = value` pipeline configuration.
//!
//! ```text
//! # lines starting with '#' are comments
//! output_dir = out
//! map.esplanade = maps/esplanade.hdr
//! map.snowfield = maps/snowfield.pfm
//! objects = sphere, lumpy, rippled
//! conditions = metal:1, metal:0.2, shiny_black:1, shiny_black:5, shiny_white:1
//! size = 256
//! threshold = 50
//! max_order = 30
//! power_mode = rms
//! desaturate = true
//! prefilter_width = 2
//! filter = low:800
//! filter_reference_height = 2400
//! ratings = ratings.csv
//! ```
//!
//! Only `output_dir` and at least one `map.<id>` are required. Relative
//! paths are resolved against the directory holding the config file.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use glint_core::specrender::{Condition, MaterialKind, StimulusObject, MIN_SIZE};
use glint_core::sphharm::{PowerMode, BRILLIANCE_ORDER};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("line {line}: {message}")]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterMode {
    Low,
    High,
}

/// Band filter applied to every light map before analysis and rendering.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapFilter {
    pub mode: FilterMode,
    /// Blur width in pixels at `reference_height` rows (or at the map's own
    /// height when unset).
    pub width: f64,
    pub reference_height: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub output_dir: PathBuf,
    pub maps: Vec<(String, PathBuf)>,
    pub objects: Vec<StimulusObject>,
    pub conditions: Vec<Condition>,
    pub size: usize,
    pub threshold: u8,
    pub max_order: usize,
    pub power_mode: PowerMode,
    pub desaturate: bool,
    pub prefilter_width: Option<f64>,
    pub filter: Option<MapFilter>,
    pub ratings: Option<PathBuf>,
}

fn is_id(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-')
}

fn parse_list<T>(value: &str, item: impl Fn(&str) -> Result<T, String>) -> Result<Vec<T>, String> {
    let items: Vec<T> = value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(item)
        .collect::<Result<_, _>>()?;
    if items.is_empty() {
        return Err("empty list".into());
    }
    Ok(items)
}

fn parse_object(name: &str) -> Result<StimulusObject, String> {
    StimulusObject::standard_set()
        .into_iter()
        .find(|o| o.id == name)
        .ok_or_else(|| format!("unknown object {name:?} (known: sphere, lumpy, rippled)"))
}

fn parse_condition(s: &str) -> Result<Condition, String> {
    let (material, factor) = s
        .split_once(':')
        .ok_or_else(|| format!("condition {s:?} is not material:factor"))?;
    let material: MaterialKind = material.trim().parse()?;
    let factor: f64 = factor
        .trim()
        .parse()
        .map_err(|_| format!("bad factor in {s:?}"))?;
    if !(factor.is_finite() && factor > 0.0) {
        return Err(format!("factor must be positive in {s:?}"));
    }
    Ok(Condition { material, factor })
}

fn parse_filter(s: &str) -> Result<(FilterMode, f64), String> {
    let (mode, width) = s.split_once(':').ok_or("filter must be low:<width> or high:<width>")?;
    let mode = match mode.trim() {
        "low" => FilterMode::Low,
        "high" => FilterMode::High,
        other => return Err(format!("unknown filter mode {other:?}")),
    };
    let width: f64 = width.trim().parse().map_err(|_| "bad filter width".to_string())?;
    if !(width.is_finite() && width > 0.0) {
        return Err("filter width must be positive".into());
    }
    Ok((mode, width))
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("expected a boolean, got {s:?}")),
    }
}

fn parse_num<T: std::str::FromStr>(s: &str, what: &str) -> Result<T, String> {
    s.parse().map_err(|_| format!("bad {what} {s:?}"))
}

impl PipelineConfig {
    /// Parse config text; relative paths are joined onto `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, ConfigError> {
        let mut output_dir = None;
        let mut maps: Vec<(String, PathBuf)> = Vec::new();
        let mut cfg = PipelineConfig {
            output_dir: PathBuf::new(),
            maps: Vec::new(),
            objects: vec![StimulusObject::sphere()],
            conditions: Condition::standard_set(),
            size: 256,
            threshold: glint_core::imstats::DEFAULT_THRESHOLD,
            max_order: BRILLIANCE_ORDER,
            power_mode: PowerMode::Rms,
            desaturate: false,
            prefilter_width: None,
            filter: None,
            ratings: None,
        };
        let mut filter = None;
        let mut reference_height = None;
        let mut seen = HashSet::new();
        let path = |v: &str| base.join(v);

        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let err = |message: String| ConfigError { line, message };
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (key, value) = trimmed
                .split_once('=')
                .ok_or_else(|| err("expected key = value".into()))?;
            let (key, value) = (key.trim(), value.trim());
            if value.is_empty() {
                return Err(err(format!("{key} has no value")));
            }
            if !seen.insert(key.to_owned()) {
                return Err(err(format!("duplicate key {key}")));
            }
            match key {
                "output_dir" => output_dir = Some(path(value)),
                "objects" => cfg.objects = parse_list(value, parse_object).map_err(err)?,
                "conditions" => cfg.conditions = parse_list(value, parse_condition).map_err(err)?,
                "size" => {
                    cfg.size = parse_num(value, "size").map_err(err)?;
                    if cfg.size < MIN_SIZE || cfg.size > 8192 {
                        return Err(err(format!("size must be in {MIN_SIZE}..=8192")));
                    }
                }
                "threshold" => cfg.threshold = parse_num(value, "threshold").map_err(err)?,
                "max_order" => {
                    cfg.max_order = parse_num(value, "max_order").map_err(err)?;
                    if !(3..=100).contains(&cfg.max_order) {
                        return Err(err("max_order must be in 3..=100".into()));
                    }
                }
                "power_mode" => {
                    cfg.power_mode = match value {
                        "rms" => PowerMode::Rms,
                        "sum_of_squares" => PowerMode::SumOfSquares,
                        _ => return Err(err(format!("unknown power mode {value:?}"))),
                    }
                }
                "desaturate" => cfg.desaturate = parse_bool(value).map_err(err)?,
                "prefilter_width" => {
                    let w: f64 = parse_num(value, "prefilter_width").map_err(err)?;
                    if !(w.is_finite() && w >= 0.0) {
                        return Err(err("prefilter_width must be >= 0".into()));
                    }
                    cfg.prefilter_width = (w > 0.0).then_some(w);
                }
                "filter" => filter = Some(parse_filter(value).map_err(err)?),
                "filter_reference_height" => {
                    let h: usize = parse_num(value, "filter_reference_height").map_err(err)?;
                    if h == 0 {
                        return Err(err("filter_reference_height must be positive".into()));
                    }
                    reference_height = Some(h);
                }
                "ratings" => cfg.ratings = Some(path(value)),
                _ => match key.strip_prefix("map.") {
                    Some(id) if is_id(id) => maps.push((id.to_owned(), path(value))),
                    Some(id) => return Err(err(format!("invalid map id {id:?}"))),
                    None => return Err(err(format!("unknown key {key:?}"))),
                },
            }
        }

        let whole = |message: &str| ConfigError { line: 0, message: message.into() };
        cfg.output_dir = output_dir.ok_or_else(|| whole("output_dir is required"))?;
        if maps.is_empty() {
            return Err(whole("at least one map.<id> entry is required"));
        }
        let mut ids = HashSet::new();
        for c in &cfg.conditions {
            if !ids.insert((c.material, c.factor.to_bits())) {
                return Err(whole("conditions contain a duplicate"));
            }
        }
        let mut ids = HashSet::new();
        if !cfg.objects.iter().all(|o| ids.insert(o.id.clone())) {
            return Err(whole("objects contain a duplicate"));
        }
        if reference_height.is_some() && filter.is_none() {
            return Err(whole("filter_reference_height needs filter"));
        }
        cfg.filter = filter.map(|(mode, width)| MapFilter {
            mode,
            width,
            reference_height,
        });
        cfg.maps = maps;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, crate::StageError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| crate::StageError::io("config", format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base).map_err(|e| crate::StageError::validation("config", e))
    }
}
