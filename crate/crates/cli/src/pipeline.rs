//! Light maps in, replication report out.
//!
//! Stages run in order: `envmap` (load, desaturate, band filter), `metrics`
//! (harmonic analysis), `render`, `coverage`, `analysis` (only with a ratings
//! file) and `report`. Everything is written below the configured output
//! directory:
//!
//! - `stimuli/<id>.png`, `stimuli/<id>_mask.png` and `stimuli/catalog.csv`
//! - `report.csv`: one row per stimulus
//! - `maps.csv`: per-map illumination metrics and bias index
//! - `powers.csv`: per-map, per-order harmonic power
//! - `report.json`: all of the above plus regressions

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use glint_core::analysis::{
    bias_index, linear_fit, Factor, StimulusKey, predictor_rating_correlation, read_ratings_csv, CategoryFits, RatingRecord,
    RegressionFit,
};
use glint_core::envmap::{self, high_pass, low_pass, BlurParams, EquirectMap};
use glint_core::imstats::{mean_intensity, specular_coverage};
use glint_core::raster::write_stimulus;
use glint_core::specrender::{render_condition_set, ConditionSetParams, MaterialKind, Sampling};
use glint_core::sphharm::{illumination_metrics, order_powers, project};
use glint_exprig::catalog::{write_catalog, CatalogEntry, CATALOG_FILE};
use serde::Serialize;

use crate::config::{FilterMode, MapFilter, PipelineConfig};
use crate::{at, Classify, StageError};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StimulusRow {
    pub id: String,
    pub light_map: String,
    pub object: String,
    pub material: MaterialKind,
    pub factor: f64,
    pub exposure_scale: f64,
    pub max_gray: u8,
    pub object_pixels: usize,
    pub above_pixels: usize,
    pub coverage: f64,
    pub mean_intensity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MapRow {
    pub id: String,
    pub width: usize,
    pub height: usize,
    pub diffuseness: f64,
    pub brilliance: f64,
    pub diffuseness2: f64,
    pub bias_index: Option<f64>,
    pub powers: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Analysis {
    pub records: usize,
    pub bias_vs_diffuseness: RegressionFit,
    pub bias_vs_brilliance: RegressionFit,
    pub bias_vs_diffuseness2: RegressionFit,
    pub coverage_vs_rating: CategoryFits,
    pub mean_intensity_vs_rating: CategoryFits,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub threshold: u8,
    pub max_order: usize,
    pub size: usize,
    pub maps: Vec<MapRow>,
    pub stimuli: Vec<StimulusRow>,
    pub analysis: Option<Analysis>,
}

fn clamp_negative(map: &EquirectMap) -> EquirectMap {
    let px = map.pixels().iter().map(|p| p.map(|v| v.max(0.0))).collect();
    EquirectMap::from_pixels(map.width(), map.height(), px).expect("same shape as a valid map")
}

fn apply_filter(map: &EquirectMap, f: &MapFilter) -> Result<EquirectMap, StageError> {
    let params = BlurParams::new(f.width).rescaled(f.reference_height.unwrap_or(map.height()), map.height());
    match f.mode {
        FilterMode::Low => low_pass(map, params).map_err(at("filter")),
        // Negative lobes are dropped, as they would be when writing the
        // filtered map to an HDR file.
        FilterMode::High => high_pass(map, params).map(|m| clamp_negative(&m)).map_err(at("filter")),
    }
}

/// Load, desaturate and filter every configured map.
pub fn prepare_maps(cfg: &PipelineConfig) -> Result<Vec<(String, EquirectMap)>, StageError> {
    cfg.maps
        .iter()
        .map(|(id, path)| {
            let map = envmap::load(path)
                .map_err(|e| StageError::new("envmap", e.class(), format!("{id} ({}): {e}", path.display())))?;
            let map = if cfg.desaturate { envmap::desaturate(&map) } else { map };
            let map = match &cfg.filter {
                Some(f) => apply_filter(&map, f)?,
                None => map,
            };
            Ok((id.clone(), map))
        })
        .collect()
}

fn analyze(maps: &[MapRow], stimuli: &[StimulusRow], records: &[RatingRecord]) -> Result<Analysis, StageError> {
    let bias: Vec<f64> = maps.iter().map(|m| m.bias_index.expect("filled before analysis")).collect();
    let metric = |f: fn(&MapRow) -> f64| maps.iter().map(f).collect::<Vec<_>>();
    let predictor = |f: fn(&StimulusRow) -> f64| {
        stimuli
            .iter()
            .map(|s| {
                let key = StimulusKey {
                    object: s.object.clone(),
                    material: s.material,
                    light_map: s.light_map.clone(),
                    factor: Factor(s.factor),
                };
                (key, f(s))
            })
            .collect::<Vec<_>>()
    };
    Ok(Analysis {
        records: records.len(),
        bias_vs_diffuseness: linear_fit(&metric(|m| m.diffuseness), &bias).map_err(at("analysis"))?,
        bias_vs_brilliance: linear_fit(&metric(|m| m.brilliance), &bias).map_err(at("analysis"))?,
        bias_vs_diffuseness2: linear_fit(&metric(|m| m.diffuseness2), &bias).map_err(at("analysis"))?,
        coverage_vs_rating: predictor_rating_correlation(&predictor(|s| s.coverage), records)
            .map_err(at("analysis"))?,
        mean_intensity_vs_rating: predictor_rating_correlation(&predictor(|s| s.mean_intensity), records)
            .map_err(at("analysis"))?,
    })
}

/// Run every stage and write the outputs. The report is also returned.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<Report, StageError> {
    let maps = prepare_maps(cfg)?;

    let mut map_rows = Vec::with_capacity(maps.len());
    for (id, map) in &maps {
        let spectrum = project(map, cfg.max_order).map_err(at("metrics"))?;
        let powers = order_powers(&spectrum, cfg.power_mode);
        let m = illumination_metrics(&powers)
            .map_err(|e| StageError::new("metrics", e.class(), format!("{id}: {e}")))?;
        map_rows.push(MapRow {
            id: id.clone(),
            width: map.width(),
            height: map.height(),
            diffuseness: m.diffuseness,
            brilliance: m.brilliance,
            diffuseness2: m.diffuseness2,
            bias_index: None,
            powers: powers.powers().to_vec(),
        });
    }

    let params = ConditionSetParams {
        objects: cfg.objects.clone(),
        conditions: cfg.conditions.clone(),
        size: cfg.size,
        sampling: Sampling::Bilinear,
        prefilter_width: cfg.prefilter_width,
    };
    let stimuli = render_condition_set(&maps, &params).map_err(at("render"))?;

    let stim_dir = cfg.output_dir.join("stimuli");
    fs::create_dir_all(&stim_dir).map_err(|e| StageError::io("render", format!("{}: {e}", stim_dir.display())))?;
    let mut catalog = Vec::with_capacity(stimuli.len());
    let mut rows = Vec::with_capacity(stimuli.len());
    for s in &stimuli {
        let id = s.id();
        let image = format!("{id}.png");
        let mask = stim_dir.join(format!("{id}_mask.png"));
        write_stimulus(s, stim_dir.join(&image), Some(&mask)).map_err(at("render"))?;
        catalog.push(CatalogEntry::from_meta(s.meta(), image));

        let cov = specular_coverage(s, cfg.threshold).map_err(at("coverage"))?;
        let meta = s.meta();
        rows.push(StimulusRow {
            id,
            light_map: meta.light_map.clone(),
            object: meta.object.clone(),
            material: meta.material,
            factor: meta.factor,
            exposure_scale: meta.exposure_scale,
            max_gray: s.max_object(),
            object_pixels: cov.object_pixels,
            above_pixels: cov.above_pixels,
            coverage: cov.coverage,
            mean_intensity: mean_intensity(s).map_err(at("coverage"))?,
        });
    }
    let catalog_path = stim_dir.join(CATALOG_FILE);
    let file = File::create(&catalog_path).map_err(|e| StageError::io("render", format!("{}: {e}", catalog_path.display())))?;
    write_catalog(BufWriter::new(file), &catalog).map_err(at("render"))?;

    let analysis = match &cfg.ratings {
        None => None,
        Some(path) => {
            let file = File::open(path).map_err(|e| StageError::io("analysis", format!("{}: {e}", path.display())))?;
            let records = read_ratings_csv(file).map_err(at("analysis"))?;
            for m in &mut map_rows {
                m.bias_index = Some(bias_index(&records, &m.id).map_err(at("analysis"))?);
            }
            Some(analyze(&map_rows, &rows, &records)?)
        }
    };

    let report = Report {
        threshold: cfg.threshold,
        max_order: cfg.max_order,
        size: cfg.size,
        maps: map_rows,
        stimuli: rows,
        analysis,
    };
    write_report(&report, &cfg.output_dir)?;
    Ok(report)
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_report(report: &Report, dir: &Path) -> Result<(), StageError> {
    let io = |path: &Path| {
        let p = path.display().to_string();
        move |e: std::io::Error| StageError::io("report", format!("{p}: {e}"))
    };
    let write = |name: &str, body: &[u8]| {
        let path = dir.join(name);
        fs::write(&path, body).map_err(io(&path))
    };

    let mut csv = Vec::new();
    writeln!(
        csv,
        "id,light_map,object,material,factor,exposure_scale,max_gray,object_pixels,above_pixels,coverage,mean_intensity"
    )
    .expect("write to Vec");
    for s in &report.stimuli {
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{},{}",
            s.id,
            s.light_map,
            s.object,
            s.material,
            s.factor,
            s.exposure_scale,
            s.max_gray,
            s.object_pixels,
            s.above_pixels,
            s.coverage,
            s.mean_intensity
        )
        .expect("write to Vec");
    }
    write("report.csv", &csv)?;

    let mut maps = Vec::new();
    let mut powers = Vec::new();
    writeln!(maps, "light_map,width,height,diffuseness,brilliance,diffuseness2,bias_index").expect("write to Vec");
    writeln!(powers, "light_map,l,power").expect("write to Vec");
    for m in &report.maps {
        writeln!(
            maps,
            "{},{},{},{},{},{},{}",
            m.id,
            m.width,
            m.height,
            m.diffuseness,
            m.brilliance,
            m.diffuseness2,
            opt(m.bias_index)
        )
        .expect("write to Vec");
        for (l, p) in m.powers.iter().enumerate() {
            writeln!(powers, "{},{l},{p}", m.id).expect("write to Vec");
        }
    }
    write("maps.csv", &maps)?;
    write("powers.csv", &powers)?;

    let mut json = serde_json::to_vec_pretty(report).map_err(at("report"))?;
    json.push(b'\n');
    write("report.json", &json)
}
