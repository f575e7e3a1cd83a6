use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, ValueEnum};
use glint_core::analysis::{bias_index, light_maps, linear_fit, read_ratings_csv, RatingRecord};
use glint_core::envmap::{self, high_pass, low_pass, BlurParams, EquirectMap};
use glint_core::imstats::{mask_from_background, MaskedImage, DEFAULT_THRESHOLD};
use glint_core::optics::{curve, ComplexIor};
use glint_core::raster::{read_gray, read_mask, write_stimulus};
use glint_core::specrender::{render_condition_set, Condition, ConditionSetParams, MaterialKind, Sampling, StimulusObject};
use glint_core::sphharm::{illumination_metrics, order_powers, project, PowerMode, BRILLIANCE_ORDER};
use glint_exprig::{Catalog, Experiment};
use serde_json::json;

use crate::config::PipelineConfig;
use crate::pipeline::run_pipeline;
use crate::{at, Classify, StageError};

fn create(stage: &'static str, path: &Path) -> Result<BufWriter<File>, StageError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| StageError::io(stage, format!("{}: {e}", path.display())))
}

fn load_map(path: &Path) -> Result<EquirectMap, StageError> {
    envmap::load(path).map_err(|e| StageError::new("envmap", e.class(), format!("{}: {e}", path.display())))
}

fn save_map(map: &EquirectMap, path: &Path) -> Result<(), StageError> {
    envmap::save(map, path).map_err(|e| StageError::new("envmap", e.class(), format!("{}: {e}", path.display())))
}

fn stdout_or_file(stage: &'static str, out: Option<&Path>) -> Result<Box<dyn Write>, StageError> {
    Ok(match out {
        Some(p) => Box::new(create(stage, p)?),
        None => Box::new(io::stdout().lock()),
    })
}

fn finish(stage: &'static str, mut w: impl Write) -> Result<(), StageError> {
    w.flush().map_err(at(stage))
}

#[derive(Debug, Args)]
pub struct FresnelCurveArgs {
    /// Real part of the index of refraction.
    #[arg(long)]
    pub n: f64,
    /// Extinction coefficient.
    #[arg(long, default_value_t = 0.0)]
    pub k: f64,
    /// Angle step in degrees.
    #[arg(long, default_value_t = 1.0)]
    pub step: f64,
    /// Output CSV (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn fresnel_curve(a: &FresnelCurveArgs) -> Result<(), StageError> {
    let ior = ComplexIor::new(a.n, a.k).map_err(at("optics"))?;
    let c = curve(ior, a.step).map_err(at("optics"))?;
    let mut w = stdout_or_file("optics", a.out.as_deref())?;
    c.write_csv(&mut w).map_err(at("optics"))?;
    finish("optics", w)
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum BandMode {
    Low,
    High,
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Blur width in pixels.
    #[arg(long)]
    pub width: f64,
    #[arg(long, value_enum)]
    pub mode: BandMode,
    /// Height the width is expressed at; it is rescaled to the map's height.
    #[arg(long)]
    pub reference_height: Option<usize>,
    /// Gaussian sigma as a fraction of the width.
    #[arg(long, default_value_t = BlurParams::DEFAULT_SIGMA_PER_WIDTH)]
    pub sigma_per_width: f64,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn filter(a: &FilterArgs) -> Result<(), StageError> {
    let map = load_map(&a.input)?;
    let params = BlurParams {
        width_px: a.width,
        sigma_per_width: a.sigma_per_width,
    }
    .rescaled(a.reference_height.unwrap_or(map.height()), map.height());
    let out = match a.mode {
        BandMode::Low => low_pass(&map, params),
        BandMode::High => high_pass(&map, params),
    }
    .map_err(at("filter"))?;
    save_map(&out, &a.out)
}

#[derive(Debug, Args)]
pub struct ScaleArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub factor: f64,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn scale(a: &ScaleArgs) -> Result<(), StageError> {
    let map = load_map(&a.input)?;
    let out = envmap::scale_intensity(&map, a.factor).map_err(at("envmap"))?;
    save_map(&out, &a.out)
}

#[derive(Debug, Args)]
pub struct DesaturateArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn desaturate(a: &DesaturateArgs) -> Result<(), StageError> {
    save_map(&envmap::desaturate(&load_map(&a.input)?), &a.out)
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PowerModeArg {
    Rms,
    SumOfSquares,
}

#[derive(Debug, Args)]
pub struct ShAnalyzeArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, default_value_t = BRILLIANCE_ORDER)]
    pub max_order: usize,
    /// Coefficient CSV (l, m, coeff).
    #[arg(long)]
    pub out: PathBuf,
    /// Per-order power CSV; defaults to `<out>` with a `_powers.csv` suffix.
    #[arg(long)]
    pub powers: Option<PathBuf>,
    /// Metrics JSON; defaults to `<out>` with a `_metrics.json` suffix.
    #[arg(long)]
    pub metrics: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "rms")]
    pub power_mode: PowerModeArg,
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

pub fn sh_analyze(a: &ShAnalyzeArgs) -> Result<(), StageError> {
    let map = load_map(&a.input)?;
    let spec = project(&map, a.max_order).map_err(at("metrics"))?;
    let mode = match a.power_mode {
        PowerModeArg::Rms => PowerMode::Rms,
        PowerModeArg::SumOfSquares => PowerMode::SumOfSquares,
    };
    let powers = order_powers(&spec, mode);

    let mut w = create("metrics", &a.out)?;
    let line = |w: &mut BufWriter<File>, s: String| writeln!(w, "{s}").map_err(at("metrics"));
    line(&mut w, "l,m,coeff".into())?;
    for (l, m, c) in spec.iter() {
        line(&mut w, format!("{l},{m},{c}"))?;
    }
    finish("metrics", w)?;

    let powers_path = a.powers.clone().unwrap_or_else(|| sibling(&a.out, "_powers.csv"));
    let mut w = create("metrics", &powers_path)?;
    line(&mut w, "l,power".into())?;
    for (l, p) in powers.powers().iter().enumerate() {
        line(&mut w, format!("{l},{p}"))?;
    }
    finish("metrics", w)?;

    let metrics = illumination_metrics(&powers).map_err(at("metrics"))?;
    let metrics_path = a.metrics.clone().unwrap_or_else(|| sibling(&a.out, "_metrics.json"));
    let mut body = serde_json::to_vec_pretty(&metrics).map_err(at("metrics"))?;
    body.push(b'\n');
    fs::write(&metrics_path, body).map_err(|e| StageError::io("metrics", format!("{}: {e}", metrics_path.display())))
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[arg(long)]
    pub map: PathBuf,
    /// metal, shiny-black or shiny-white.
    #[arg(long)]
    pub material: MaterialKind,
    /// Intensity factor relative to the metal exposure.
    #[arg(long, default_value_t = 1.0)]
    pub factor: f64,
    #[arg(long, default_value_t = 512)]
    pub size: usize,
    /// sphere, lumpy or rippled.
    #[arg(long, default_value = "sphere")]
    pub object: String,
    #[arg(long)]
    pub prefilter_width: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub mask: Option<PathBuf>,
}

pub fn render(a: &RenderArgs) -> Result<(), StageError> {
    let map = load_map(&a.map)?;
    let object = StimulusObject::standard_set()
        .into_iter()
        .find(|o| o.id == a.object)
        .ok_or_else(|| StageError::validation("render", format!("unknown object {:?}", a.object)))?;
    let map_id = a.map.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "map".into());
    let params = ConditionSetParams {
        objects: vec![object],
        conditions: vec![Condition { material: a.material, factor: a.factor }],
        size: a.size,
        sampling: Sampling::Bilinear,
        prefilter_width: a.prefilter_width,
    };
    let stimuli = render_condition_set(&[(map_id, map)], &params).map_err(at("render"))?;
    write_stimulus(&stimuli[0], &a.out, a.mask.as_deref()).map_err(at("render"))
}

#[derive(Debug, Args)]
pub struct CoverageArgs {
    #[arg(long)]
    pub img: PathBuf,
    /// Object mask; without one, every pixel that is not background gray
    /// counts as object.
    #[arg(long)]
    pub mask: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    pub threshold: u8,
    #[arg(long)]
    pub json: bool,
}

pub fn coverage(a: &CoverageArgs) -> Result<(), StageError> {
    let img = read_gray(&a.img).map_err(at("coverage"))?;
    let mask = match &a.mask {
        Some(p) => {
            let (w, h, m) = read_mask(p).map_err(at("coverage"))?;
            if (w, h) != (img.width, img.height) {
                return Err(StageError::validation(
                    "coverage",
                    format!("mask is {w}x{h} but image is {}x{}", img.width, img.height),
                ));
            }
            m
        }
        None => mask_from_background(&img.pixels),
    };
    let masked = MaskedImage::new(&img.pixels, &mask).map_err(at("coverage"))?;
    let cov = masked.coverage(a.threshold).map_err(at("coverage"))?;
    let mean = masked.mean_intensity().map_err(at("coverage"))?;
    let mut out = io::stdout().lock();
    let res = if a.json {
        let v = json!({
            "coverage": cov.coverage,
            "mean_intensity": mean,
            "object_pixels": cov.object_pixels,
            "threshold": cov.threshold,
        });
        writeln!(out, "{v}")
    } else {
        writeln!(out, "coverage {}\nmean_intensity {mean}\nobject_pixels {}", cov.coverage, cov.object_pixels)
    };
    res.map_err(at("coverage"))
}

fn read_records(path: &Path) -> Result<Vec<RatingRecord>, StageError> {
    let f = File::open(path).map_err(|e| StageError::io("analysis", format!("{}: {e}", path.display())))?;
    read_ratings_csv(f).map_err(|e| StageError::new("analysis", e.class(), format!("{}: {e}", path.display())))
}

#[derive(Debug, Args)]
pub struct BiasArgs {
    #[arg(long)]
    pub ratings: PathBuf,
    /// Light map id; all maps in the file when omitted.
    #[arg(long)]
    pub map: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn bias(a: &BiasArgs) -> Result<(), StageError> {
    let records = read_records(&a.ratings)?;
    let maps = match &a.map {
        Some(m) => vec![m.clone()],
        None => light_maps(&records),
    };
    let mut w = stdout_or_file("analysis", a.out.as_deref())?;
    writeln!(w, "light_map,bias_index").map_err(at("analysis"))?;
    for m in maps {
        let b = bias_index(&records, &m).map_err(at("analysis"))?;
        writeln!(w, "{m},{b}").map_err(at("analysis"))?;
    }
    finish("analysis", w)
}

/// `FILE` or `FILE:COLUMN`.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnRef {
    pub path: PathBuf,
    pub column: Option<String>,
}

impl std::str::FromStr for ColumnRef {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        // Split on the last ':' only when what follows looks like a column
        // name, so Windows drive prefixes survive.
        match s.rsplit_once(':') {
            Some((p, c)) if !p.is_empty() && !c.is_empty() && !c.contains(['/', '\\']) => Ok(Self {
                path: p.into(),
                column: Some(c.into()),
            }),
            _ if s.is_empty() => Err("empty path".into()),
            _ => Ok(Self { path: s.into(), column: None }),
        }
    }
}

pub const JOIN_COLUMN: &str = "light_map";

/// Read `(light_map, value)` pairs from a CSV with a header row.
pub fn read_keyed_column(r: &ColumnRef, default_column: &str) -> Result<Vec<(String, f64)>, StageError> {
    let column = r.column.as_deref().unwrap_or(default_column);
    let stage = "analysis";
    let file = File::open(&r.path).map_err(|e| StageError::io(stage, format!("{}: {e}", r.path.display())))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let invalid = |m: String| StageError::validation(stage, format!("{}: {m}", r.path.display()));
    let headers = reader.headers().map_err(|e| invalid(e.to_string()))?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| invalid(format!("no column {name:?}")))
    };
    let (key_idx, val_idx) = (find(JOIN_COLUMN)?, find(column)?);
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| invalid(e.to_string()))?;
        let line = i + 2;
        let key = rec.get(key_idx).unwrap_or_default().to_owned();
        let raw = rec.get(val_idx).unwrap_or_default();
        let v: f64 = raw
            .parse()
            .map_err(|_| invalid(format!("line {line}: {column} value {raw:?} is not a number")))?;
        out.push((key, v));
    }
    Ok(out)
}

#[derive(Debug, Args)]
pub struct RegressArgs {
    /// Predictor as FILE:COLUMN.
    #[arg(long)]
    pub x: ColumnRef,
    /// Response as FILE[:COLUMN]; the column defaults to bias_index.
    #[arg(long)]
    pub y: ColumnRef,
}

pub fn regress(a: &RegressArgs) -> Result<(), StageError> {
    if a.x.column.is_none() {
        return Err(StageError::validation("analysis", "--x needs FILE:COLUMN"));
    }
    let xs = read_keyed_column(&a.x, "")?;
    let ys: HashMap<String, f64> = read_keyed_column(&a.y, "bias_index")?.into_iter().collect();
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (key, v) in &xs {
        let yv = ys
            .get(key)
            .ok_or_else(|| StageError::validation("analysis", format!("{key} missing from {}", a.y.path.display())))?;
        x.push(*v);
        y.push(*yv);
    }
    let fit = linear_fit(&x, &y).map_err(at("analysis"))?;
    writeln!(io::stdout().lock(), "{}", serde_json::to_string(&fit).map_err(at("analysis"))?).map_err(at("analysis"))
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Directory with the stimulus images and catalog.csv.
    #[arg(long)]
    pub stimuli: PathBuf,
    /// Append-only session log.
    #[arg(long)]
    pub store: PathBuf,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: IpAddr,
}

pub fn serve(a: &ServeArgs) -> Result<(), StageError> {
    let catalog = Catalog::load(&a.stimuli).map_err(at("serve"))?;
    let exp = Arc::new(Experiment::open(catalog, &a.store).map_err(at("serve"))?);
    let runtime = tokio::runtime::Runtime::new().map_err(at("serve"))?;
    let addr = SocketAddr::new(a.host, a.port);
    eprintln!("serving {} stimuli on http://{addr}", exp.catalog().len());
    runtime
        .block_on(glint_exprig::http::serve(exp, a.stimuli.clone(), addr))
        .map_err(at("serve"))
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    /// Flat key = value config file.
    #[arg(long)]
    pub config: PathBuf,
}

pub fn pipeline(a: &PipelineArgs) -> Result<(), StageError> {
    let cfg = PipelineConfig::load(&a.config)?;
    let report = run_pipeline(&cfg)?;
    eprintln!(
        "wrote {} stimuli and {} map summaries to {}",
        report.stimuli.len(),
        report.maps.len(),
        cfg.output_dir.display()
    );
    Ok(())
}
