//! Confidence ratings, condition summaries, bias index and regressions.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::io::{Read, Write};

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::specrender::MaterialKind;

/// Column order of the ratings CSV.
pub const RATINGS_HEADER: [&str; 10] = [
    "observer",
    "session",
    "object",
    "material",
    "light_map",
    "factor",
    "metal",
    "shiny_black",
    "shiny_white",
    "other",
];

const SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("line {line}: {message}")]
    Csv { line: u64, message: String },
    #[error("ratings must each lie in [0, 100] and sum to 100 (sum = {sum})")]
    InvalidRatings { sum: f64 },
    #[error("session must be 1 or 2, got {0}")]
    InvalidSession(u8),
    #[error("no ratings for condition {0}")]
    MissingData(String),
    #[error("bias index undefined for {0}: mean shiny-black confidence is zero")]
    UndefinedBias(String),
    #[error("degenerate fit: {0}")]
    DegenerateFit(&'static str),
    #[error("x has {x} values but y has {y}")]
    LengthMismatch { x: usize, y: usize },
    #[error("need at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Intensity factor, usable as a map key (compares by total order).
#[derive(Debug, Clone, Copy)]
pub struct Factor(pub f64);

impl PartialEq for Factor {
    fn eq(&self, other: &Self) -> bool {
        self.0.total_cmp(&other.0) == Ordering::Equal
    }
}

impl Eq for Factor {}

impl Hash for Factor {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.to_bits().hash(state);
    }
}

impl PartialOrd for Factor {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Factor {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Serialize for Factor {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.0)
    }
}

impl<'de> Deserialize<'de> for Factor {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        f64::deserialize(d).map(Factor)
    }
}

/// The four confidence percentages of one response.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ratings {
    pub metal: f64,
    pub shiny_black: f64,
    pub shiny_white: f64,
    pub other: f64,
}

impl Ratings {
    pub fn new(metal: f64, shiny_black: f64, shiny_white: f64, other: f64) -> Result<Self, AnalysisError> {
        let r = Self { metal, shiny_black, shiny_white, other };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<(), AnalysisError> {
        let values = self.to_array();
        let sum: f64 = values.iter().sum();
        let each_ok = values.iter().all(|v| v.is_finite() && (0.0..=100.0).contains(v));
        if !each_ok || !((sum - 100.0).abs() <= SUM_TOLERANCE) {
            return Err(AnalysisError::InvalidRatings { sum });
        }
        Ok(())
    }

    pub fn sum(&self) -> f64 {
        self.to_array().iter().sum()
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.metal, self.shiny_black, self.shiny_white, self.other]
    }
}

/// Identity of a rendered stimulus.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StimulusKey {
    pub object: String,
    pub material: MaterialKind,
    pub light_map: String,
    pub factor: Factor,
}

impl StimulusKey {
    pub fn condition(&self) -> ConditionKey {
        ConditionKey {
            light_map: self.light_map.clone(),
            material: self.material,
            factor: self.factor,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatingRecord {
    pub observer: String,
    pub session: u8,
    pub stimulus: StimulusKey,
    pub ratings: Ratings,
}

impl RatingRecord {
    pub fn validate(&self) -> Result<(), AnalysisError> {
        if !(1..=2).contains(&self.session) {
            return Err(AnalysisError::InvalidSession(self.session));
        }
        self.ratings.validate()
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    observer: String,
    session: u8,
    object: String,
    material: String,
    light_map: String,
    factor: f64,
    metal: f64,
    shiny_black: f64,
    shiny_white: f64,
    other: f64,
}

/// Parse a ratings CSV, rejecting any row that violates the record
/// invariants. Line numbers count the header as line 1.
pub fn read_ratings_csv<R: Read>(input: R) -> Result<Vec<RatingRecord>, AnalysisError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header_err = |line, message: String| AnalysisError::Csv { line, message };
    let headers = reader
        .headers()
        .map_err(|e| header_err(1, e.to_string()))?
        .clone();
    if headers.iter().ne(RATINGS_HEADER.iter().copied()) {
        return Err(header_err(
            1,
            format!("expected header {}", RATINGS_HEADER.join(",")),
        ));
    }
    let mut out = Vec::new();
    for (i, row) in reader.deserialize::<CsvRow>().enumerate() {
        let line = i as u64 + 2;
        let row = row.map_err(|e| header_err(line, e.to_string()))?;
        let material = row
            .material
            .parse::<MaterialKind>()
            .map_err(|e| header_err(line, e))?;
        let record = RatingRecord {
            observer: row.observer,
            session: row.session,
            stimulus: StimulusKey {
                object: row.object,
                material,
                light_map: row.light_map,
                factor: Factor(row.factor),
            },
            ratings: Ratings {
                metal: row.metal,
                shiny_black: row.shiny_black,
                shiny_white: row.shiny_white,
                other: row.other,
            },
        };
        record
            .validate()
            .map_err(|e| header_err(line, e.to_string()))?;
        out.push(record);
    }
    Ok(out)
}

pub fn write_ratings_csv<W: Write>(out: W, records: &[RatingRecord]) -> Result<(), AnalysisError> {
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    let io = |e: csv::Error| AnalysisError::Io(e.into());
    writer.write_record(RATINGS_HEADER).map_err(io)?;
    for r in records {
        writer
            .serialize(CsvRow {
                observer: r.observer.clone(),
                session: r.session,
                object: r.stimulus.object.clone(),
                material: r.stimulus.material.to_string(),
                light_map: r.stimulus.light_map.clone(),
                factor: r.stimulus.factor.0,
                metal: r.ratings.metal,
                shiny_black: r.ratings.shiny_black,
                shiny_white: r.ratings.shiny_white,
                other: r.ratings.other,
            })
            .map_err(io)?;
    }
    writer.flush()?;
    Ok(())
}

/// Light map x material x intensity factor.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ConditionKey {
    pub light_map: String,
    pub material: MaterialKind,
    pub factor: Factor,
}

impl fmt::Display for ConditionKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/x{}", self.light_map, self.material, self.factor)
    }
}

/// Mean and standard error of the four ratings for one condition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionSummary {
    pub key: ConditionKey,
    pub n: usize,
    pub mean: [f64; 4],
    /// Sample standard deviation over sqrt(n); zero when `n == 1`.
    pub sem: [f64; 4],
    pub single_sample: bool,
}

fn summarize(key: ConditionKey, rows: &[&RatingRecord]) -> ConditionSummary {
    let n = rows.len();
    let mut mean = [0.0; 4];
    for r in rows {
        for (m, v) in mean.iter_mut().zip(r.ratings.to_array()) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut sem = [0.0; 4];
    if n > 1 {
        for (c, s) in sem.iter_mut().enumerate() {
            let ss: f64 = rows.iter().map(|r| (r.ratings.to_array()[c] - mean[c]).powi(2)).sum();
            *s = (ss / (n - 1) as f64).sqrt() / (n as f64).sqrt();
        }
    }
    ConditionSummary { key, n, mean, sem, single_sample: n == 1 }
}

fn group(records: &[RatingRecord]) -> BTreeMap<ConditionKey, Vec<&RatingRecord>> {
    let mut groups: BTreeMap<ConditionKey, Vec<&RatingRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(r.stimulus.condition()).or_default().push(r);
    }
    groups
}

/// Summaries for the requested conditions, in request order.
pub fn aggregate(records: &[RatingRecord], conditions: &[ConditionKey]) -> Result<Vec<ConditionSummary>, AnalysisError> {
    let groups = group(records);
    conditions
        .iter()
        .map(|key| {
            groups
                .get(key)
                .map(|rows| summarize(key.clone(), rows))
                .ok_or_else(|| AnalysisError::MissingData(key.to_string()))
        })
        .collect()
}

/// Summaries for every condition present, ordered by key.
pub fn aggregate_all(records: &[RatingRecord]) -> Vec<ConditionSummary> {
    group(records)
        .into_iter()
        .map(|(key, rows)| summarize(key, &rows))
        .collect()
}

/// Mean metal confidence over mean shiny-black confidence, across every
/// metal and shiny-black stimulus (all intensity factors) shown under
/// `light_map`.
pub fn bias_index(records: &[RatingRecord], light_map: &str) -> Result<f64, AnalysisError> {
    let relevant: Vec<&RatingRecord> = records
        .iter()
        .filter(|r| {
            r.stimulus.light_map == light_map
                && matches!(r.stimulus.material, MaterialKind::Metal | MaterialKind::ShinyBlack)
        })
        .collect();
    if relevant.is_empty() {
        return Err(AnalysisError::MissingData(format!(
            "{light_map}: no metal or shiny-black ratings"
        )));
    }
    let n = relevant.len() as f64;
    let metal = relevant.iter().map(|r| r.ratings.metal).sum::<f64>() / n;
    let black = relevant.iter().map(|r| r.ratings.shiny_black).sum::<f64>() / n;
    if black == 0.0 {
        return Err(AnalysisError::UndefinedBias(light_map.to_string()));
    }
    Ok(metal / black)
}

/// Distinct light maps in first-seen order.
pub fn light_maps(records: &[RatingRecord]) -> Vec<String> {
    let mut seen = Vec::new();
    for r in records {
        if !seen.contains(&r.stimulus.light_map) {
            seen.push(r.stimulus.light_map.clone());
        }
    }
    seen
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n_points: usize,
}

/// Ordinary least squares of `y` on `x`, with `R^2 = 1 - SS_res / SS_tot`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<RegressionFit, AnalysisError> {
    if x.len() != y.len() {
        return Err(AnalysisError::LengthMismatch { x: x.len(), y: y.len() });
    }
    let n = x.len();
    if n < 2 {
        return Err(AnalysisError::TooFewPoints(n));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(AnalysisError::DegenerateFit("non-finite input"));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    if sxx <= f64::EPSILON * mx.abs().max(1.0) * nf {
        return Err(AnalysisError::DegenerateFit("x is constant"));
    }
    if syy == 0.0 {
        return Err(AnalysisError::DegenerateFit("y is constant; R^2 undefined"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - (intercept + slope * a)).powi(2))
        .sum();
    let r_squared = (1.0 - ss_res / syy).clamp(0.0, 1.0);
    Ok(RegressionFit { slope, intercept, r_squared, n_points: n })
}

/// Fits of mean confidence against a per-stimulus predictor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CategoryFits {
    pub shiny_black: RegressionFit,
    pub metal: RegressionFit,
}

/// Regress mean shiny-black and mean metal confidence on a per-stimulus
/// predictor (specular coverage or mean intensity). Shiny-white stimuli are
/// skipped; each remaining stimulus must have at least one rating.
pub fn predictor_rating_correlation(
    predictor: &[(StimulusKey, f64)],
    records: &[RatingRecord],
) -> Result<CategoryFits, AnalysisError> {
    let mut by_stimulus: BTreeMap<&StimulusKey, Vec<&RatingRecord>> = BTreeMap::new();
    for r in records {
        by_stimulus.entry(&r.stimulus).or_default().push(r);
    }
    let mut x = Vec::new();
    let mut black = Vec::new();
    let mut metal = Vec::new();
    for (key, value) in predictor {
        if key.material == MaterialKind::ShinyWhite {
            continue;
        }
        let rows = by_stimulus.get(key).ok_or_else(|| {
            AnalysisError::MissingData(format!("{} ({})", key.condition(), key.object))
        })?;
        let n = rows.len() as f64;
        x.push(*value);
        black.push(rows.iter().map(|r| r.ratings.shiny_black).sum::<f64>() / n);
        metal.push(rows.iter().map(|r| r.ratings.metal).sum::<f64>() / n);
    }
    Ok(CategoryFits {
        shiny_black: linear_fit(&x, &black)?,
        metal: linear_fit(&x, &metal)?,
    })
}

/// Same as [`predictor_rating_correlation`] with specular coverage as the
/// predictor.
pub fn coverage_rating_correlation(
    coverage: &[(StimulusKey, f64)],
    records: &[RatingRecord],
) -> Result<CategoryFits, AnalysisError> {
    predictor_rating_correlation(coverage, records)
}

/// One row of the published light-map summary table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceMapRow {
    pub light_map: String,
    pub bias_index: f64,
    pub diffuseness: f64,
    pub brilliance: f64,
    pub diffuseness2: f64,
}

pub const REFERENCE_MAPS_CSV: &str = include_str!("../fixtures/reference_maps.csv");

pub fn reference_maps() -> Vec<ReferenceMapRow> {
    csv::Reader::from_reader(REFERENCE_MAPS_CSV.as_bytes())
        .deserialize()
        .collect::<Result<_, _>>()
        .expect("bundled table is well formed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn key(map: &str, material: MaterialKind, factor: f64) -> StimulusKey {
        StimulusKey {
            object: "sphere".into(),
            material,
            light_map: map.into(),
            factor: Factor(factor),
        }
    }

    fn record(map: &str, material: MaterialKind, factor: f64, r: [f64; 4]) -> RatingRecord {
        RatingRecord {
            observer: "o1".into(),
            session: 1,
            stimulus: key(map, material, factor),
            ratings: Ratings::new(r[0], r[1], r[2], r[3]).unwrap(),
        }
    }

    #[test]
    fn ratings_validation() {
        assert!(Ratings::new(30.0, 50.0, 15.0, 5.0).is_ok());
        let err = Ratings::new(30.0, 50.0, 15.0, 10.0).unwrap_err();
        assert!(matches!(err, AnalysisError::InvalidRatings { sum } if sum == 105.0));
        assert!(Ratings::new(120.0, -20.0, 0.0, 0.0).is_err());
        assert!(Ratings::new(f64::NAN, 50.0, 50.0, 0.0).is_err());
    }

    #[test]
    fn aggregate_examples() {
        let one = vec![record("a", MaterialKind::Metal, 1.0, [10.0, 20.0, 30.0, 40.0])];
        let s = aggregate_all(&one);
        assert_eq!(s[0].mean, [10.0, 20.0, 30.0, 40.0]);
        assert_eq!(s[0].sem, [0.0; 4]);
        assert!(s[0].single_sample);

        let two = vec![
            record("a", MaterialKind::Metal, 1.0, [40.0, 60.0, 0.0, 0.0]),
            record("a", MaterialKind::Metal, 1.0, [60.0, 40.0, 0.0, 0.0]),
        ];
        let s = &aggregate_all(&two)[0];
        assert_eq!(s.mean[0], 50.0);
        assert!((s.sem[0] - 10.0).abs() < 1e-12);
        assert_eq!(s.n, 2);
        assert!((s.mean.iter().sum::<f64>() - 100.0).abs() < 1e-9);

        let missing = ConditionKey {
            light_map: "b".into(),
            material: MaterialKind::Metal,
            factor: Factor(1.0),
        };
        let err = aggregate(&two, &[missing]).unwrap_err();
        assert!(err.to_string().contains("b/metal/x1"), "{err}");
    }

    #[test]
    fn bias_examples() {
        // Mean metal 8 and mean shiny-black 61.5 over the four conditions.
        let recs = vec![
            record("hall", MaterialKind::Metal, 1.0, [10.0, 60.0, 20.0, 10.0]),
            record("hall", MaterialKind::Metal, 0.2, [4.0, 70.0, 20.0, 6.0]),
            record("hall", MaterialKind::ShinyBlack, 1.0, [2.0, 66.0, 30.0, 2.0]),
            record("hall", MaterialKind::ShinyBlack, 5.0, [16.0, 50.0, 30.0, 4.0]),
            record("hall", MaterialKind::ShinyWhite, 1.0, [90.0, 0.0, 10.0, 0.0]),
        ];
        let b = bias_index(&recs, "hall").unwrap();
        assert!((b - 8.0 / 61.5).abs() < 1e-12);
        assert!((b - 0.13).abs() < 0.005);

        let sym = vec![
            record("m", MaterialKind::Metal, 1.0, [40.0, 40.0, 10.0, 10.0]),
            record("m", MaterialKind::ShinyBlack, 1.0, [30.0, 30.0, 20.0, 20.0]),
        ];
        assert_eq!(bias_index(&sym, "m").unwrap(), 1.0);

        let zero = vec![record("z", MaterialKind::Metal, 1.0, [100.0, 0.0, 0.0, 0.0])];
        assert!(matches!(bias_index(&zero, "z"), Err(AnalysisError::UndefinedBias(_))));
        assert!(matches!(bias_index(&zero, "nope"), Err(AnalysisError::MissingData(_))));
    }

    #[test]
    fn fit_examples() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let f = linear_fit(&x, &y).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12 && (f.intercept - 1.0).abs() < 1e-12);
        assert_eq!(f.r_squared, 1.0);
        assert!(matches!(linear_fit(&[1.0, 1.0], &[1.0, 2.0]), Err(AnalysisError::DegenerateFit(_))));
        assert!(matches!(linear_fit(&[1.0], &[1.0]), Err(AnalysisError::TooFewPoints(1))));
        assert!(linear_fit(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn reference_map_regressions() {
        let t = reference_maps();
        assert_eq!(t.len(), 5);
        let bias: Vec<f64> = t.iter().map(|r| r.bias_index).collect();
        let r2 = |f: fn(&ReferenceMapRow) -> f64| {
            linear_fit(&t.iter().map(f).collect::<Vec<_>>(), &bias).unwrap().r_squared
        };
        assert!((r2(|r| r.diffuseness) - 0.18).abs() < 0.03);
        assert!((r2(|r| r.brilliance) - 0.40).abs() < 0.03);
        assert!((r2(|r| r.diffuseness2) - 0.88).abs() < 0.03);
    }

    #[test]
    fn csv_round_trip_and_rejection() {
        let recs = vec![
            record("atrium", MaterialKind::ShinyBlack, 5.0, [12.5, 80.0, 5.0, 2.5]),
            record("snow, field", MaterialKind::Metal, 0.2, [1.0 / 3.0, 99.0, 2.0 / 3.0, 0.0]),
        ];
        let mut buf = Vec::new();
        write_ratings_csv(&mut buf, &recs).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("observer,session,object,material,light_map,factor,metal,shiny_black,shiny_white,other\n"));
        assert_eq!(read_ratings_csv(buf.as_slice()).unwrap(), recs);

        let bad = "observer,session,object,material,light_map,factor,metal,shiny_black,shiny_white,other\n\
                   o,1,sphere,metal,a,1,25,25,25,25\n\
                   o,1,sphere,metal,a,1,30,50,15,10\n";
        let err = read_ratings_csv(bad.as_bytes()).unwrap_err();
        assert!(matches!(err, AnalysisError::Csv { line: 3, .. }), "{err}");
        assert!(err.to_string().contains("105"));

        let wrong_header = "a,b\n1,2\n";
        assert!(matches!(read_ratings_csv(wrong_header.as_bytes()), Err(AnalysisError::Csv { line: 1, .. })));
        let mut empty = Vec::new();
        write_ratings_csv(&mut empty, &[]).unwrap();
        assert_eq!(String::from_utf8(empty).unwrap().lines().count(), 1);
    }

    #[test]
    fn noiseless_coverage_relation() {
        let mut predictor = Vec::new();
        let mut recs = Vec::new();
        for (i, c) in [0.1, 0.3, 0.5, 0.9].iter().enumerate() {
            let k = key(&format!("m{i}"), MaterialKind::ShinyBlack, 1.0);
            predictor.push((k.clone(), *c));
            let black = 80.0 - 60.0 * c;
            let metal = 10.0 + 70.0 * c;
            recs.push(RatingRecord {
                observer: "o".into(),
                session: 1,
                stimulus: k,
                ratings: Ratings::new(metal, black, 100.0 - metal - black, 0.0).unwrap(),
            });
        }
        predictor.push((key("m0", MaterialKind::ShinyWhite, 1.0), 0.99));
        let fits = coverage_rating_correlation(&predictor, &recs).unwrap();
        assert!((fits.shiny_black.r_squared - 1.0).abs() < 1e-12);
        assert!((fits.metal.r_squared - 1.0).abs() < 1e-12);
        assert_eq!(fits.metal.n_points, 4);

        predictor.push((key("m9", MaterialKind::Metal, 1.0), 0.5));
        assert!(matches!(
            coverage_rating_correlation(&predictor, &recs),
            Err(AnalysisError::MissingData(_))
        ));
    }

    proptest! {
        #[test]
        fn r_squared_affine_invariant(
            pts in prop::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 3..30),
            a in 0.1f64..10.0, b in -50.0f64..50.0, c in -10.0f64..-0.1, d in -50.0f64..50.0,
        ) {
            let x: Vec<f64> = pts.iter().map(|p| p.0).collect();
            let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
            if let Ok(f) = linear_fit(&x, &y) {
                let x2: Vec<f64> = x.iter().map(|v| a * v + b).collect();
                let y2: Vec<f64> = y.iter().map(|v| c * v + d).collect();
                let g = linear_fit(&x2, &y2).unwrap();
                prop_assert!((f.r_squared - g.r_squared).abs() < 1e-9);
                prop_assert!((0.0..=1.0).contains(&f.r_squared));
            }
        }

        #[test]
        fn condition_means_sum_to_100(raw in prop::collection::vec(
            (0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0, 0.01f64..1.0, 0usize..3), 1..40)) {
            let recs: Vec<RatingRecord> = raw.iter().map(|(a, b, c, d, m)| {
                let s = a + b + c + d;
                let (a, b, c) = (100.0 * a / s, 100.0 * b / s, 100.0 * c / s);
                record("x", MaterialKind::ALL[*m], 1.0, [a, b, c, 100.0 - a - b - c])
            }).collect();
            for s in aggregate_all(&recs) {
                prop_assert!((s.mean.iter().sum::<f64>() - 100.0).abs() < 1e-9);
            }
        }

        #[test]
        fn bias_ignores_common_scaling(
            raw in prop::collection::vec((1.0f64..25.0, 1.0f64..25.0, any::<bool>()), 1..20),
            k in 0.1f64..2.0,
        ) {
            // Scaling metal and shiny-black confidence by a common factor
            // (taking the difference from "other") leaves the ratio fixed.
            let build = |scale: f64| -> Vec<RatingRecord> {
                raw.iter().map(|(m, b, metal)| {
                    let mat = if *metal { MaterialKind::Metal } else { MaterialKind::ShinyBlack };
                    let (m, b) = (m * scale, b * scale);
                    record("x", mat, 1.0, [m, b, 0.0, 100.0 - m - b])
                }).collect()
            };
            let a = bias_index(&build(1.0), "x").unwrap();
            let b = bias_index(&build(k), "x").unwrap();
            prop_assert!((a - b).abs() < 1e-9 * a.max(1.0));
        }
    }
}
