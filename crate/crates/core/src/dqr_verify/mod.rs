//! Data Quality Requirement checks: source suitability, completeness,
//! representativeness and accuracy, assembled into a compliance report.
//!
//! Every thresholded metric carries an explicit [`Threshold`]; a result
//! passes iff all of its thresholds hold. Suitability is advisory only.

mod divergence;
mod features;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset_io::{check_disjoint, DatasetRecord, DatasetSplit, RunwayDb, Source, SplitName};
use crate::error::{Error, Result};
use crate::geometry::{project_runway, CameraModel};
use crate::odd_spec::{ApproachCone, ConeParameter, Interval, OddSpec};

pub use divergence::{jensen_shannon, Histogram, HistogramSpec};
pub use features::Feature;

/// Records flagged individually in evidence before summarizing.
const MAX_FLAGGED_IN_EVIDENCE: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Requirement {
    Suitability,
    Completeness,
    Representativeness,
    Accuracy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Advisory,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Threshold {
    AtLeast(f64),
    AtMost(f64),
}

impl Threshold {
    pub fn holds(self, value: f64) -> bool {
        match self {
            Threshold::AtLeast(t) => value >= t,
            Threshold::AtMost(t) => value <= t,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub subject: String,
    pub note: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub values: BTreeMap<String, f64>,
}

impl Evidence {
    fn note(subject: impl Into<String>, note: impl Into<String>) -> Self {
        Self { subject: subject.into(), note: note.into(), values: BTreeMap::new() }
    }

    fn with_values(mut self, values: impl IntoIterator<Item = (&'static str, f64)>) -> Self {
        self.values.extend(values.into_iter().map(|(k, v)| (k.to_string(), v)));
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DqrResult {
    pub requirement: Requirement,
    pub metrics: BTreeMap<String, f64>,
    pub thresholds: BTreeMap<String, Threshold>,
    pub verdict: Verdict,
    pub evidence: Vec<Evidence>,
}

impl DqrResult {
    /// Verdict from thresholds: pass iff every thresholded metric exists and
    /// satisfies its threshold.
    fn assess(
        requirement: Requirement,
        metrics: BTreeMap<String, f64>,
        thresholds: BTreeMap<String, Threshold>,
        evidence: Vec<Evidence>,
    ) -> Self {
        let verdict = if requirement == Requirement::Suitability {
            Verdict::Advisory
        } else if thresholds
            .iter()
            .all(|(name, t)| metrics.get(name).is_some_and(|&v| t.holds(v)))
        {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        Self { requirement, metrics, thresholds, verdict, evidence }
    }

    fn not_applicable(requirement: Requirement, reason: &str) -> Self {
        Self {
            requirement,
            metrics: BTreeMap::new(),
            thresholds: BTreeMap::new(),
            verdict: if requirement == Requirement::Suitability { Verdict::Advisory } else { Verdict::Fail },
            evidence: vec![Evidence::note("not_applicable", reason)],
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    /// Thresholded metrics that fail.
    pub fn failing_metrics(&self) -> Vec<&str> {
        self.thresholds
            .iter()
            .filter(|(name, t)| !self.metrics.get(*name).is_some_and(|&v| t.holds(v)))
            .map(|(name, _)| name.as_str())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CompletenessConfig {
    /// Bins over (along-track, lateral path, vertical path).
    pub position_grid: [usize; 3],
    /// Bins over (yaw, pitch, roll).
    pub attitude_grid: [usize; 3],
    pub min_per_cell: usize,
    pub min_cone_coverage: f64,
    pub min_attitude_coverage: f64,
    pub min_airports: usize,
}

impl Default for CompletenessConfig {
    fn default() -> Self {
        Self {
            position_grid: [8, 4, 4],
            attitude_grid: [4, 4, 4],
            min_per_cell: 1,
            min_cone_coverage: 0.95,
            min_attitude_coverage: 0.95,
            min_airports: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RepresentativenessConfig {
    pub histograms: Vec<HistogramSpec>,
    pub max_divergence: f64,
    pub aspect_band: Interval,
    pub aspect_floor: f64,
    pub fill_band: Interval,
    pub fill_floor: f64,
    pub min_area_px: f64,
    pub area_floor: f64,
    /// Minimum span of each cone parameter in the test split, as a fraction
    /// of the cone interval width.
    pub min_range_coverage: f64,
    /// Add per-airport divergences to the evidence (not thresholded).
    pub condition_on_airport: bool,
}

impl RepresentativenessConfig {
    pub fn default_histograms(cone: &ApproachCone) -> Vec<HistogramSpec> {
        let bins = 20;
        let mut specs = vec![
            HistogramSpec::new(Feature::CenterX, bins, 0.0, 1.0),
            HistogramSpec::new(Feature::CenterY, bins, 0.0, 1.0),
            HistogramSpec::new(Feature::AspectRatio, bins, 0.0, 4.0),
            HistogramSpec::new(Feature::FillRatio, bins, 0.0, 1.0),
            HistogramSpec::new(Feature::BboxAreaLog, bins, 0.0, 16.0),
            HistogramSpec::new(Feature::SlantDistance, bins, 0.0, 6000.0),
            HistogramSpec::new(Feature::TimeToLanding, bins, 0.0, 120.0),
        ];
        specs.extend(ConeParameter::ALL.into_iter().map(|p| {
            let iv = cone.interval(p);
            HistogramSpec::new(Feature::Cone(p), bins, iv.min, iv.max)
        }));
        specs
    }
}

impl Default for RepresentativenessConfig {
    fn default() -> Self {
        Self {
            histograms: Self::default_histograms(&ApproachCone::generic()),
            max_divergence: 0.1,
            aspect_band: Interval::new(0.5, 1.5),
            aspect_floor: 0.80,
            fill_band: Interval::new(0.20, 0.80),
            fill_floor: 0.80,
            min_area_px: 625.0,
            area_floor: 0.95,
            min_range_coverage: 0.9,
            condition_on_airport: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AccuracyConfig {
    pub reproj_tol_px: f64,
}

impl Default for AccuracyConfig {
    fn default() -> Self {
        Self { reproj_tol_px: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub camera: CameraModel,
    #[serde(default)]
    pub completeness: CompletenessConfig,
    #[serde(default)]
    pub representativeness: RepresentativenessConfig,
    #[serde(default)]
    pub accuracy: AccuracyConfig,
}

impl VerifyConfig {
    pub fn new(camera: CameraModel) -> Self {
        Self {
            camera,
            completeness: CompletenessConfig::default(),
            representativeness: RepresentativenessConfig::default(),
            accuracy: AccuracyConfig::default(),
        }
    }

    /// Range checks on every threshold and grid.
    pub fn validate(&self) -> Result<()> {
        self.camera.validate()?;
        let c = &self.completeness;
        if c.position_grid.iter().chain(&c.attitude_grid).any(|&b| b == 0) {
            return Err(Error::Config("completeness grids need at least one bin per axis".into()));
        }
        let r = &self.representativeness;
        let fractions = [
            ("min_cone_coverage", c.min_cone_coverage),
            ("min_attitude_coverage", c.min_attitude_coverage),
            ("aspect_floor", r.aspect_floor),
            ("fill_floor", r.fill_floor),
            ("area_floor", r.area_floor),
            ("min_range_coverage", r.min_range_coverage),
        ];
        for (name, v) in fractions {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        if !(0.0..=std::f64::consts::LN_2).contains(&r.max_divergence) {
            return Err(Error::Config(format!("max_divergence must lie in [0, ln 2], got {}", r.max_divergence)));
        }
        if !(self.accuracy.reproj_tol_px >= 0.0 && self.accuracy.reproj_tol_px.is_finite()) {
            return Err(Error::Config(format!("reproj_tol_px must be non-negative, got {}", self.accuracy.reproj_tol_px)));
        }
        for spec in &r.histograms {
            spec.validate()?;
        }
        Ok(())
    }
}

fn cell_index(values: &[f64], intervals: &[Interval], bins: &[usize]) -> Option<usize> {
    let mut index = 0;
    for ((&v, iv), &n) in values.iter().zip(intervals).zip(bins) {
        if !iv.contains(v) {
            return None;
        }
        let b = (((v - iv.min) / iv.width() * n as f64) as usize).min(n - 1);
        index = index * n + b;
    }
    Some(index)
}

fn coverage(records: &[&DatasetRecord], cone: &ApproachCone, params: [ConeParameter; 3], bins: [usize; 3], min_per_cell: usize) -> f64 {
    let cells: usize = bins.iter().product();
    let intervals = params.map(|p| cone.interval(p));
    let mut counts = vec![0usize; cells];
    for pose in records.iter().filter_map(|r| r.pose) {
        if let Some(i) = cell_index(&params.map(|p| pose.get(p)), &intervals, &bins) {
            counts[i] += 1;
        }
    }
    counts.iter().filter(|&&c| c >= min_per_cell.max(1)).count() as f64 / cells as f64
}

/// Cell coverage of the position and attitude grids plus airport diversity.
pub fn check_completeness(split: &DatasetSplit, cone: &ApproachCone, cfg: &CompletenessConfig) -> Result<DqrResult> {
    let posed: Vec<&DatasetRecord> = split.records.iter().filter(|r| r.pose.is_some()).collect();
    if posed.is_empty() && !split.is_empty() {
        return Err(Error::NotApplicable(format!(
            "{:?} split has no pose-bearing records",
            split.name
        )));
    }
    let airports: BTreeSet<&str> = split.records.iter().map(|r| r.airport_id.as_str()).collect();
    let position = [ConeParameter::AlongTrack, ConeParameter::LateralPath, ConeParameter::VerticalPath];
    let attitude = [ConeParameter::Yaw, ConeParameter::Pitch, ConeParameter::Roll];
    let metrics = BTreeMap::from([
        ("cone_coverage".to_string(), coverage(&posed, cone, position, cfg.position_grid, cfg.min_per_cell)),
        ("attitude_coverage".to_string(), coverage(&posed, cone, attitude, cfg.attitude_grid, cfg.min_per_cell)),
        ("airport_count".to_string(), airports.len() as f64),
    ]);
    let thresholds = BTreeMap::from([
        ("cone_coverage".to_string(), Threshold::AtLeast(cfg.min_cone_coverage)),
        ("attitude_coverage".to_string(), Threshold::AtLeast(cfg.min_attitude_coverage)),
        ("airport_count".to_string(), Threshold::AtLeast(cfg.min_airports as f64)),
    ]);
    let outside = posed.iter().filter(|r| !cone.contains(&r.pose.unwrap()).unwrap_or(false)).count();
    let mut evidence = vec![Evidence::note(
        format!("{:?}", split.name).to_lowercase(),
        format!(
            "{} pose-bearing records over {}x{}x{} position and {}x{}x{} attitude cells",
            posed.len(),
            cfg.position_grid[0],
            cfg.position_grid[1],
            cfg.position_grid[2],
            cfg.attitude_grid[0],
            cfg.attitude_grid[1],
            cfg.attitude_grid[2]
        ),
    )];
    if outside > 0 {
        evidence.push(
            Evidence::note("out_of_cone", "records outside the cone are not counted in any cell")
                .with_values([("records", outside as f64)]),
        );
    }
    Ok(DqrResult::assess(Requirement::Completeness, metrics, thresholds, evidence))
}

/// Fraction of records (carrying the feature) whose value satisfies `keep`.
pub fn band_fraction(records: &[DatasetRecord], feature: Feature, keep: impl Fn(f64) -> bool) -> Option<f64> {
    let values: Vec<f64> = records.iter().filter_map(|r| feature.value(r)).collect();
    if values.is_empty() {
        return None;
    }
    Some(values.iter().filter(|&&v| keep(v)).count() as f64 / values.len() as f64)
}

/// Train and test histograms for one feature.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramPair {
    pub spec: HistogramSpec,
    pub train: Histogram,
    pub test: Histogram,
}

impl HistogramPair {
    /// `feature,bin_low,bin_high,train_count,test_count`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("feature,bin_low,bin_high,train_count,test_count\n");
        for bin in 0..self.spec.bins {
            let (lo, hi) = self.spec.bin_edges(bin);
            out.push_str(&format!(
                "{},{lo},{hi},{},{}\n",
                self.spec.feature, self.train.counts[bin], self.test.counts[bin]
            ));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepresentativenessOutcome {
    pub result: DqrResult,
    pub histograms: Vec<HistogramPair>,
}

fn divergence_for(spec: &HistogramSpec, a: &[DatasetRecord], b: &[DatasetRecord]) -> Option<(HistogramPair, f64)> {
    let train = Histogram::build(spec, a.iter().filter_map(|r| spec.feature.value(r)));
    let test = Histogram::build(spec, b.iter().filter_map(|r| spec.feature.value(r)));
    let jsd = jensen_shannon(&train.counts, &test.counts).ok()?;
    Some((HistogramPair { spec: spec.clone(), train, test }, jsd))
}

/// Train/test distribution agreement, shape bands and range coverage.
pub fn check_representativeness(
    train: &DatasetSplit,
    test: &DatasetSplit,
    cone: &ApproachCone,
    cfg: &RepresentativenessConfig,
) -> Result<RepresentativenessOutcome> {
    if train.is_empty() || test.is_empty() {
        return Err(Error::NotApplicable(format!(
            "representativeness needs non-empty train and test splits (got {} and {} records)",
            train.len(),
            test.len()
        )));
    }
    let mut metrics = BTreeMap::new();
    let mut thresholds = BTreeMap::new();
    let mut evidence = Vec::new();
    let mut histograms = Vec::new();

    for spec in &cfg.histograms {
        let key = format!("jsd.{}", spec.feature);
        match divergence_for(spec, &train.records, &test.records) {
            Some((pair, jsd)) => {
                metrics.insert(key.clone(), jsd);
                thresholds.insert(key, Threshold::AtMost(cfg.max_divergence));
                let out = (pair.train.out_of_range + pair.test.out_of_range) as f64;
                evidence.push(
                    Evidence::note(spec.feature.name(), format!("{}-bin histogram over [{}, {}]", spec.bins, spec.range.min, spec.range.max))
                        .with_values([
                            ("jsd", jsd),
                            ("train_binned", pair.train.total() as f64),
                            ("test_binned", pair.test.total() as f64),
                            ("out_of_range", out),
                        ]),
                );
                histograms.push(pair);
            }
            None => evidence.push(Evidence::note(
                spec.feature.name(),
                "skipped: feature absent from train or test records",
            )),
        }
    }

    let bands = [
        ("aspect_in_band", Feature::AspectRatio, cfg.aspect_floor),
        ("fill_in_band", Feature::FillRatio, cfg.fill_floor),
        ("area_above_min", Feature::BboxAreaLog, cfg.area_floor),
    ];
    for (split_key, split) in [("train", train), ("test", test)] {
        for (name, feature, floor) in bands {
            let fraction = match feature {
                Feature::AspectRatio => band_fraction(&split.records, feature, |v| cfg.aspect_band.contains(v)),
                Feature::FillRatio => band_fraction(&split.records, feature, |v| cfg.fill_band.contains(v)),
                _ => {
                    let areas: Vec<f64> = split.records.iter().map(|r| r.label.bbox.area()).collect();
                    Some(areas.iter().filter(|&&a| a >= cfg.min_area_px).count() as f64 / areas.len() as f64)
                }
            };
            let key = format!("{split_key}.{name}");
            match fraction {
                Some(f) => {
                    metrics.insert(key.clone(), f);
                    thresholds.insert(key, Threshold::AtLeast(floor));
                }
                None => evidence.push(Evidence::note(key, "skipped: no record carries the feature")),
            }
        }
    }

    for p in ConeParameter::ALL {
        let values: Vec<f64> = test.records.iter().filter_map(|r| r.pose.map(|x| x.get(p))).collect();
        let key = format!("range_coverage.{p}");
        if values.is_empty() {
            evidence.push(Evidence::note(key, "skipped: no pose-bearing test records"));
            continue;
        }
        let iv = cone.interval(p);
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min).max(iv.min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max).min(iv.max);
        let span = ((hi - lo) / iv.width()).max(0.0);
        metrics.insert(key.clone(), span);
        thresholds.insert(key, Threshold::AtLeast(cfg.min_range_coverage));
    }

    if cfg.condition_on_airport {
        let airports: BTreeSet<&str> = test.records.iter().map(|r| r.airport_id.as_str()).collect();
        for airport in airports {
            let a: Vec<DatasetRecord> = train.records.iter().filter(|r| r.airport_id == airport).cloned().collect();
            let b: Vec<DatasetRecord> = test.records.iter().filter(|r| r.airport_id == airport).cloned().collect();
            let mut item = Evidence::note(format!("airport.{airport}"), "per-airport divergences, not thresholded");
            for spec in &cfg.histograms {
                if let Some((_, jsd)) = divergence_for(spec, &a, &b) {
                    item.values.insert(format!("jsd.{}", spec.feature), jsd);
                }
            }
            evidence.push(item);
        }
    }

    Ok(RepresentativenessOutcome {
        result: DqrResult::assess(Requirement::Representativeness, metrics, thresholds, evidence),
        histograms,
    })
}

#[derive(Debug, Clone, PartialEq)]
struct StructuralIssue {
    image_id: String,
    reason: String,
}

fn structural_issues(record: &DatasetRecord) -> Vec<String> {
    let mut issues = Vec::new();
    let label = &record.label;
    let (w, h) = (record.image_size.0 as f64, record.image_size.1 as f64);
    let c = &label.corners;
    if c.iter().any(|p| !p.is_finite()) {
        issues.push("non-projectable corner".to_string());
        return issues;
    }
    for (i, p) in c.iter().enumerate() {
        if !(p.u >= 0.0 && p.u <= w && p.v >= 0.0 && p.v <= h) {
            issues.push(format!("corner {} outside image", i + 1));
        }
        if !label.bbox.contains(p) {
            issues.push(format!("bbox misses corner {}", i + 1));
        }
    }
    if 0.5 * (c[0].v + c[1].v) <= 0.5 * (c[2].v + c[3].v) {
        issues.push("near corners not below far corners".to_string());
    }
    issues
}

/// Reprojection error of synthetic labels and structural checks on all.
pub fn check_accuracy(
    records: &[&DatasetRecord],
    camera: &CameraModel,
    runway_db: &RunwayDb,
    cfg: &AccuracyConfig,
) -> Result<DqrResult> {
    if records.is_empty() {
        return Err(Error::NotApplicable("no records to check".into()));
    }
    let tol = cfg.reproj_tol_px;
    let mut structural: Vec<StructuralIssue> = Vec::new();
    let mut unverifiable: Vec<StructuralIssue> = Vec::new();
    let mut flagged: Vec<(String, f64)> = Vec::new();
    let mut per_record_mean = Vec::new();
    let mut max_error: f64 = 0.0;
    let mut structural_only = 0usize;

    for record in records {
        for reason in structural_issues(record) {
            structural.push(StructuralIssue { image_id: record.image_id.clone(), reason });
        }
        let Some(pose) = record.pose.filter(|_| record.source == Source::Synthetic) else {
            structural_only += 1;
            continue;
        };
        let Some(runway) = runway_db.get(&record.runway_id) else {
            unverifiable.push(StructuralIssue { image_id: record.image_id.clone(), reason: format!("runway {} not in database", record.runway_id) });
            continue;
        };
        if record.image_size != (camera.width_px, camera.height_px) {
            unverifiable.push(StructuralIssue { image_id: record.image_id.clone(), reason: "image size differs from camera".into() });
            continue;
        }
        let expected = match project_runway(&pose, runway, camera, record.label.margin_px) {
            Ok(label) => label,
            Err(e) => {
                unverifiable.push(StructuralIssue { image_id: record.image_id.clone(), reason: e.to_string() });
                continue;
            }
        };
        let errors: Vec<f64> = expected
            .corners
            .iter()
            .zip(&record.label.corners)
            .map(|(a, b)| {
                let e = ((a.u - b.u).powi(2) + (a.v - b.v).powi(2)).sqrt();
                if e.is_nan() { f64::INFINITY } else { e }
            })
            .collect();
        let worst = errors.iter().copied().fold(0.0, f64::max);
        per_record_mean.push(errors.iter().sum::<f64>() / errors.len() as f64);
        max_error = max_error.max(worst);
        if worst > tol {
            flagged.push((record.image_id.clone(), worst));
        }
    }

    let verified = per_record_mean.len();
    let mut metrics = BTreeMap::from([
        ("structural_violations".to_string(), structural.len() as f64),
        ("records_over_tolerance".to_string(), flagged.len() as f64),
        ("verified_records".to_string(), verified as f64),
        ("structural_only_records".to_string(), structural_only as f64),
        ("unverifiable_records".to_string(), unverifiable.len() as f64),
    ]);
    let mut thresholds = BTreeMap::from([
        ("structural_violations".to_string(), Threshold::AtMost(0.0)),
        ("records_over_tolerance".to_string(), Threshold::AtMost(0.0)),
    ]);
    if verified > 0 {
        metrics.insert("mean_error_px".into(), per_record_mean.iter().sum::<f64>() / verified as f64);
        metrics.insert("max_error_px".into(), max_error);
        thresholds.insert("mean_error_px".into(), Threshold::AtMost(tol));
    }

    let mut evidence = Vec::new();
    if structural_only > 0 {
        evidence.push(
            Evidence::note("structural_only", "records without pose (real footage): only structural checks applied")
                .with_values([("records", structural_only as f64)]),
        );
    }
    for (id, err) in flagged.iter().take(MAX_FLAGGED_IN_EVIDENCE) {
        evidence.push(Evidence::note(id.clone(), "reprojection error above tolerance").with_values([("max_error_px", *err)]));
    }
    for issue in structural.iter().take(MAX_FLAGGED_IN_EVIDENCE) {
        evidence.push(Evidence::note(issue.image_id.clone(), issue.reason.clone()));
    }
    for issue in unverifiable.iter().take(MAX_FLAGGED_IN_EVIDENCE) {
        evidence.push(Evidence::note(issue.image_id.clone(), format!("unverifiable: {}", issue.reason)));
    }
    let hidden = flagged.len().saturating_sub(MAX_FLAGGED_IN_EVIDENCE)
        + structural.len().saturating_sub(MAX_FLAGGED_IN_EVIDENCE)
        + unverifiable.len().saturating_sub(MAX_FLAGGED_IN_EVIDENCE);
    if hidden > 0 {
        evidence.push(Evidence::note("truncated", format!("{hidden} further flagged records not listed")));
    }
    Ok(DqrResult::assess(Requirement::Accuracy, metrics, thresholds, evidence))
}

/// Synthetic versus real comparison. Never fails; the verdict is advisory.
pub fn check_source_suitability(records: &[&DatasetRecord], specs: &[HistogramSpec]) -> DqrResult {
    let synthetic: Vec<DatasetRecord> = records.iter().filter(|r| r.source == Source::Synthetic).map(|r| (*r).clone()).collect();
    let real: Vec<DatasetRecord> = records.iter().filter(|r| r.source == Source::Real).map(|r| (*r).clone()).collect();
    if real.is_empty() {
        return DqrResult::not_applicable(Requirement::Suitability, "no real-footage baseline");
    }
    if synthetic.is_empty() {
        return DqrResult::not_applicable(Requirement::Suitability, "no synthetic records to compare");
    }
    let mut metrics = BTreeMap::new();
    let mut evidence = Vec::new();
    let shared = [Feature::CenterX, Feature::CenterY, Feature::AspectRatio, Feature::FillRatio];
    for spec in specs.iter().filter(|s| shared.contains(&s.feature)) {
        let mean = |rs: &[DatasetRecord]| {
            let v: Vec<f64> = rs.iter().filter_map(|r| spec.feature.value(r)).collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        match divergence_for(spec, &synthetic, &real) {
            Some((_, jsd)) => {
                metrics.insert(format!("jsd.{}", spec.feature), jsd);
                evidence.push(
                    Evidence::note(spec.feature.name(), "synthetic vs real")
                        .with_values([("jsd", jsd), ("mean_synthetic", mean(&synthetic)), ("mean_real", mean(&real))]),
                );
            }
            None => evidence.push(Evidence::note(spec.feature.name(), "skipped: feature absent")),
        }
    }
    evidence.push(
        Evidence::note("sources", "advisory only: no acceptance rationale for synthetic imagery is encoded")
            .with_values([("synthetic", synthetic.len() as f64), ("real", real.len() as f64)]),
    );
    DqrResult::assess(Requirement::Suitability, metrics, BTreeMap::new(), evidence)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSummary {
    pub name: SplitName,
    pub records: usize,
    pub synthetic: usize,
    pub real: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DqrReport {
    pub odd_version: u32,
    pub timestamp: String,
    pub overall: Verdict,
    pub splits: Vec<SplitSummary>,
    pub runways: Vec<String>,
    pub config: VerifyConfig,
    pub results: Vec<DqrResult>,
    #[serde(skip)]
    pub histograms: Vec<HistogramPair>,
}

impl DqrReport {
    pub fn result(&self, requirement: Requirement) -> &DqrResult {
        self.results
            .iter()
            .find(|r| r.requirement == requirement)
            .expect("report holds one result per requirement")
    }

    pub fn passed(&self) -> bool {
        self.overall == Verdict::Pass
    }

    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }

    /// `report.json` plus one `hist_<feature>.csv` per compared feature.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let report = dir.join("report.json");
        std::fs::write(&report, self.to_json()?).map_err(|e| Error::io(&report, e))?;
        for pair in &self.histograms {
            let path = dir.join(format!("hist_{}.csv", pair.spec.feature));
            std::fs::write(&path, pair.to_csv()).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

fn merge_per_split(requirement: Requirement, parts: Vec<(&str, Result<DqrResult>)>) -> DqrResult {
    let mut metrics = BTreeMap::new();
    let mut thresholds = BTreeMap::new();
    let mut evidence = Vec::new();
    let mut failed_na = false;
    for (prefix, part) in parts {
        match part {
            Ok(r) => {
                metrics.extend(r.metrics.into_iter().map(|(k, v)| (format!("{prefix}.{k}"), v)));
                thresholds.extend(r.thresholds.into_iter().map(|(k, v)| (format!("{prefix}.{k}"), v)));
                evidence.extend(r.evidence);
            }
            Err(e) => {
                failed_na = true;
                evidence.push(Evidence::note(format!("{prefix}.not_applicable"), e.to_string()));
            }
        }
    }
    let mut result = DqrResult::assess(requirement, metrics, thresholds, evidence);
    if failed_na {
        result.verdict = Verdict::Fail;
    }
    result
}

/// Run all four checks. Overall pass iff completeness, representativeness
/// and accuracy pass.
pub fn run_all(splits: &[DatasetSplit], odd: &OddSpec, runway_db: &RunwayDb, cfg: &VerifyConfig) -> Result<DqrReport> {
    cfg.validate()?;
    let cone = odd.cone()?;
    let empty_train = DatasetSplit::new(SplitName::Train, Vec::new());
    let empty_test = DatasetSplit::new(SplitName::Test, Vec::new());
    let train = splits.iter().find(|s| s.name == SplitName::Train).unwrap_or(&empty_train);
    let test = splits.iter().find(|s| s.name == SplitName::Test).unwrap_or(&empty_test);
    check_disjoint(train, test)?;

    let completeness = merge_per_split(
        Requirement::Completeness,
        vec![
            ("train", check_completeness(train, &cone, &cfg.completeness)),
            ("test", check_completeness(test, &cone, &cfg.completeness)),
        ],
    );
    let (representativeness, histograms) = match check_representativeness(train, test, &cone, &cfg.representativeness) {
        Ok(outcome) => (outcome.result, outcome.histograms),
        Err(e) => (DqrResult::not_applicable(Requirement::Representativeness, &e.to_string()), Vec::new()),
    };
    let all: Vec<&DatasetRecord> = splits.iter().flat_map(|s| s.records.iter()).collect();
    let accuracy = check_accuracy(&all, &cfg.camera, runway_db, &cfg.accuracy)
        .unwrap_or_else(|e| DqrResult::not_applicable(Requirement::Accuracy, &e.to_string()));
    let suitability = check_source_suitability(&all, &cfg.representativeness.histograms);

    let overall = if completeness.passed() && representativeness.passed() && accuracy.passed() {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(DqrReport {
        odd_version: odd.version,
        timestamp: chrono::Utc::now().to_rfc3339(),
        overall,
        splits: splits
            .iter()
            .map(|s| SplitSummary {
                name: s.name,
                records: s.len(),
                synthetic: s.records.iter().filter(|r| r.source == Source::Synthetic).count(),
                real: s.records.iter().filter(|r| r.source == Source::Real).count(),
            })
            .collect(),
        runways: runway_db.iter().map(|r| r.id.clone()).collect(),
        config: cfg.clone(),
        results: vec![suitability, completeness, representativeness, accuracy],
        histograms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::RunwayGeometry;
    use crate::pipeline::{synthesize, SynthesisConfig};

    fn camera() -> CameraModel {
        CameraModel::centered(1400.0, 2448, 2048)
    }

    fn runways() -> Vec<RunwayGeometry> {
        (0..3).map(|i| RunwayGeometry::new(format!("R{i}"), format!("A{i}"), 2500.0 + 500.0 * i as f64, 45.0)).collect()
    }

    fn dataset(count: usize, seed: u64, prefix: &str) -> Vec<DatasetRecord> {
        let rws = runways();
        let refs: Vec<&RunwayGeometry> = rws.iter().collect();
        synthesize(
            &ApproachCone::generic(),
            &refs,
            &camera(),
            &SynthesisConfig { count, seed, margin_px: 0.0, id_prefix: prefix.into() },
        )
        .unwrap()
    }

    #[test]
    fn empty_split_has_zero_coverage_and_fails() {
        let r = check_completeness(&DatasetSplit::new(SplitName::Test, vec![]), &ApproachCone::generic(), &CompletenessConfig::default()).unwrap();
        assert_eq!(r.metrics["cone_coverage"], 0.0);
        assert_eq!(r.verdict, Verdict::Fail);
    }

    #[test]
    fn real_only_split_is_not_applicable() {
        let mut records = dataset(5, 1, "s");
        for r in &mut records {
            r.source = Source::Real;
            r.pose = None;
        }
        let split = DatasetSplit::new(SplitName::Test, records);
        assert!(matches!(
            check_completeness(&split, &ApproachCone::generic(), &CompletenessConfig::default()),
            Err(Error::NotApplicable(_))
        ));
    }

    #[test]
    fn coverage_counts_cells_meeting_minimum() {
        let cone = ApproachCone::generic();
        let mut records = dataset(1, 1, "s");
        let mut r = records.remove(0);
        let mut split = DatasetSplit::new(SplitName::Train, vec![]);
        for k in 0..3 {
            let mut pose = cone.center();
            pose.lateral_path_deg = -3.5 + 2.0 * k as f64;
            r.pose = Some(pose);
            r.image_id = format!("x{k}");
            split.records.push(r.clone());
        }
        let cfg = CompletenessConfig { position_grid: [1, 4, 1], ..Default::default() };
        let result = check_completeness(&split, &cone, &cfg).unwrap();
        assert_eq!(result.metrics["cone_coverage"], 0.75);
        let strict = CompletenessConfig { min_per_cell: 2, ..cfg };
        assert_eq!(check_completeness(&split, &cone, &strict).unwrap().metrics["cone_coverage"], 0.0);
    }

    #[test]
    fn identical_splits_have_zero_divergence() {
        let records = dataset(300, 2, "t");
        let train = DatasetSplit::new(SplitName::Train, records.clone());
        let test = DatasetSplit::new(SplitName::Test, records);
        let outcome = check_representativeness(&train, &test, &ApproachCone::generic(), &RepresentativenessConfig::default()).unwrap();
        for (k, v) in &outcome.result.metrics {
            if k.starts_with("jsd.") {
                assert_eq!(*v, 0.0, "{k}");
            }
        }
        assert!(outcome.result.evidence.iter().any(|e| e.subject == "time_to_landing" && e.note.starts_with("skipped")));
    }

    #[test]
    fn aspect_band_membership() {
        let band = RepresentativenessConfig::default().aspect_band;
        let a = crate::geometry::aspect_ratio(&crate::geometry::BoundingBox::new(0.0, 0.0, 200.0, 150.0)).unwrap();
        let b = crate::geometry::aspect_ratio(&crate::geometry::BoundingBox::new(0.0, 0.0, 100.0, 300.0)).unwrap();
        assert!(band.contains(a));
        assert!(!band.contains(b));
    }

    #[test]
    fn self_labelled_records_are_accurate() {
        let records = dataset(200, 3, "a");
        let db = RunwayDb::new(runways()).unwrap();
        let refs: Vec<&DatasetRecord> = records.iter().collect();
        let r = check_accuracy(&refs, &camera(), &db, &AccuracyConfig::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{:?}", r.failing_metrics());
        assert!(r.metrics["max_error_px"] < 1e-9);
    }

    #[test]
    fn perturbed_corner_is_flagged() {
        let mut records = dataset(50, 4, "p");
        records[7].label.corners[2].u += 2.0;
        records[7].label.bbox = crate::geometry::bounding_box(&records[7].label.corners, 0.0, &camera());
        let db = RunwayDb::new(runways()).unwrap();
        let refs: Vec<&DatasetRecord> = records.iter().collect();
        let r = check_accuracy(&refs, &camera(), &db, &AccuracyConfig { reproj_tol_px: 0.5 }).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        assert_eq!(r.metrics["records_over_tolerance"], 1.0);
        assert!(r.evidence.iter().any(|e| e.subject == records[7].image_id));
    }

    #[test]
    fn real_records_get_structural_checks_only() {
        let mut records = dataset(10, 5, "r");
        for r in &mut records {
            r.source = Source::Real;
            r.pose = None;
            r.slant_distance_m = None;
            r.time_to_landing_s = Some(30.0);
        }
        let db = RunwayDb::new(runways()).unwrap();
        let refs: Vec<&DatasetRecord> = records.iter().collect();
        let r = check_accuracy(&refs, &camera(), &db, &AccuracyConfig::default()).unwrap();
        assert_eq!(r.metrics["structural_only_records"], 10.0);
        assert!(!r.metrics.contains_key("mean_error_px"));
        assert!(r.evidence.iter().any(|e| e.subject == "structural_only"));
        assert_eq!(r.verdict, Verdict::Pass);
    }

    #[test]
    fn missing_runway_is_unverifiable() {
        let records = dataset(6, 6, "u");
        let db = RunwayDb::new(runways().into_iter().filter(|r| r.id != "R1")).unwrap();
        let refs: Vec<&DatasetRecord> = records.iter().collect();
        let r = check_accuracy(&refs, &camera(), &db, &AccuracyConfig::default()).unwrap();
        assert_eq!(r.metrics["unverifiable_records"], 2.0);
    }

    #[test]
    fn suitability_is_advisory() {
        let records = dataset(60, 7, "s");
        let refs: Vec<&DatasetRecord> = records.iter().collect();
        let specs = RepresentativenessConfig::default().histograms;
        let r = check_source_suitability(&refs, &specs);
        assert_eq!(r.verdict, Verdict::Advisory);
        assert!(r.evidence[0].note.contains("no real-footage baseline"));

        // Same generator output relabelled as real.
        let mut real = records.clone();
        for r in &mut real {
            r.source = Source::Real;
        }
        let mixed: Vec<&DatasetRecord> = records.iter().chain(real.iter()).collect();
        let r = check_source_suitability(&mixed, &specs);
        assert_eq!(r.verdict, Verdict::Advisory);
        assert_eq!(r.metrics["jsd.center_x"], 0.0);
    }

    #[test]
    fn bottom_right_bias_raises_center_divergence() {
        let records = dataset(400, 8, "b");
        let mut real: Vec<DatasetRecord> = dataset(400, 9, "r");
        for r in &mut real {
            r.source = Source::Real;
            for c in &mut r.label.corners {
                c.u += 400.0;
                c.v += 250.0;
            }
        }
        let all: Vec<&DatasetRecord> = records.iter().chain(real.iter()).collect();
        let r = check_source_suitability(&all, &RepresentativenessConfig::default().histograms);
        assert_eq!(r.verdict, Verdict::Advisory);
        assert!(r.metrics["jsd.center_x"] > 0.1, "{:?}", r.metrics);
        assert!(r.metrics["jsd.center_y"] > 0.1, "{:?}", r.metrics);
        let ev = r.evidence.iter().find(|e| e.subject == "center_x").unwrap();
        assert!(ev.values["mean_real"] > ev.values["mean_synthetic"]);
    }

    #[test]
    fn empty_test_split_reports_not_applicable() {
        let cfg = VerifyConfig::new(camera());
        let db = RunwayDb::new(runways()).unwrap();
        let splits = vec![DatasetSplit::new(SplitName::Train, dataset(50, 10, "e")), DatasetSplit::new(SplitName::Test, vec![])];
        let report = run_all(&splits, &OddSpec::generic(), &db, &cfg).unwrap();
        assert_eq!(report.overall, Verdict::Fail);
        assert_eq!(report.results.len(), 4);
        assert_eq!(report.result(Requirement::Representativeness).verdict, Verdict::Fail);
        assert!(report.result(Requirement::Representativeness).evidence[0].subject == "not_applicable");
    }

    #[test]
    fn shared_image_ids_are_rejected() {
        let cfg = VerifyConfig::new(camera());
        let db = RunwayDb::new(runways()).unwrap();
        let records = dataset(5, 11, "d");
        let splits = vec![DatasetSplit::new(SplitName::Train, records.clone()), DatasetSplit::new(SplitName::Test, records)];
        assert!(matches!(run_all(&splits, &OddSpec::generic(), &db, &cfg), Err(Error::SplitIntegrity(_))));
    }

    #[test]
    fn config_validation_catches_bad_thresholds() {
        let mut cfg = VerifyConfig::new(camera());
        assert!(cfg.validate().is_ok());
        cfg.representativeness.aspect_floor = 1.5;
        assert!(cfg.validate().is_err());
        let mut cfg = VerifyConfig::new(camera());
        cfg.completeness.position_grid = [0, 4, 4];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn threshold_semantics() {
        assert!(Threshold::AtLeast(0.95).holds(0.95));
        assert!(!Threshold::AtLeast(0.95).holds(0.9));
        assert!(Threshold::AtMost(0.1).holds(0.1));
        assert!(!Threshold::AtMost(0.1).holds(f64::NAN));
    }
}
