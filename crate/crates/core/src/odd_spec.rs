//! Operational Design Domain: the generic landing approach cone, the
//! categorical restrictions layered on top of it by successive refinements,
//! and per-sample membership / non-nominal classification.
//!
//! Distances are canonical in meters and angles in degrees. Along-track
//! bounds may be declared in nautical miles in a spec file; they are
//! converted with [`METERS_PER_NM`] when the cone is derived.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const METERS_PER_NM: f64 = 1852.0;

/// Default edge band as a fraction of each parameter's range width.
pub const DEFAULT_EDGE_BAND: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Unit {
    #[serde(rename = "NM")]
    NauticalMiles,
    #[serde(rename = "deg")]
    Degrees,
    #[serde(rename = "m")]
    Meters,
    #[serde(rename = "unitless")]
    Unitless,
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Unit::NauticalMiles => "NM",
            Unit::Degrees => "deg",
            Unit::Meters => "m",
            Unit::Unitless => "unitless",
        })
    }
}

/// Closed interval `[min, max]`. Both ends are inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub min: f64,
    pub max: f64,
}

impl Interval {
    pub const fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    pub fn width(&self) -> f64 {
        self.max - self.min
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.min + self.max)
    }

    pub fn contains(&self, value: f64) -> bool {
        value >= self.min && value <= self.max
    }

    pub fn is_empty(&self) -> bool {
        !(self.min <= self.max)
    }

    fn scaled(&self, factor: f64) -> Self {
        Self::new(self.min * factor, self.max * factor)
    }
}

/// The six parameters of the approach cone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConeParameter {
    AlongTrack,
    LateralPath,
    VerticalPath,
    Yaw,
    Pitch,
    Roll,
}

impl ConeParameter {
    pub const ALL: [ConeParameter; 6] = [
        ConeParameter::AlongTrack,
        ConeParameter::LateralPath,
        ConeParameter::VerticalPath,
        ConeParameter::Yaw,
        ConeParameter::Pitch,
        ConeParameter::Roll,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ConeParameter::AlongTrack => "along_track",
            ConeParameter::LateralPath => "lateral_path",
            ConeParameter::VerticalPath => "vertical_path",
            ConeParameter::Yaw => "yaw",
            ConeParameter::Pitch => "pitch",
            ConeParameter::Roll => "roll",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }

    /// Units a spec file may declare for this parameter.
    pub fn accepts_unit(self, unit: Unit) -> bool {
        match self {
            ConeParameter::AlongTrack => matches!(unit, Unit::NauticalMiles | Unit::Meters),
            _ => unit == Unit::Degrees,
        }
    }
}

impl fmt::Display for ConeParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Aircraft state expressed in cone parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub along_track_m: f64,
    pub lateral_path_deg: f64,
    pub vertical_path_deg: f64,
    pub yaw_deg: f64,
    pub pitch_deg: f64,
    pub roll_deg: f64,
}

impl Pose {
    pub fn new(
        along_track_m: f64,
        lateral_path_deg: f64,
        vertical_path_deg: f64,
        yaw_deg: f64,
        pitch_deg: f64,
        roll_deg: f64,
    ) -> Self {
        Self {
            along_track_m,
            lateral_path_deg,
            vertical_path_deg,
            yaw_deg,
            pitch_deg,
            roll_deg,
        }
    }

    pub fn get(&self, parameter: ConeParameter) -> f64 {
        match parameter {
            ConeParameter::AlongTrack => self.along_track_m,
            ConeParameter::LateralPath => self.lateral_path_deg,
            ConeParameter::VerticalPath => self.vertical_path_deg,
            ConeParameter::Yaw => self.yaw_deg,
            ConeParameter::Pitch => self.pitch_deg,
            ConeParameter::Roll => self.roll_deg,
        }
    }

    pub fn set(&mut self, parameter: ConeParameter, value: f64) {
        match parameter {
            ConeParameter::AlongTrack => self.along_track_m = value,
            ConeParameter::LateralPath => self.lateral_path_deg = value,
            ConeParameter::VerticalPath => self.vertical_path_deg = value,
            ConeParameter::Yaw => self.yaw_deg = value,
            ConeParameter::Pitch => self.pitch_deg = value,
            ConeParameter::Roll => self.roll_deg = value,
        }
    }

    pub fn is_finite(&self) -> bool {
        ConeParameter::ALL.iter().all(|&p| self.get(p).is_finite())
    }
}

/// The generic landing approach cone in canonical units (m, deg).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApproachCone {
    pub along_track_m: Interval,
    pub lateral_path_deg: Interval,
    pub vertical_path_deg: Interval,
    pub yaw_deg: Interval,
    pub pitch_deg: Interval,
    pub roll_deg: Interval,
}

impl ApproachCone {
    /// The generic landing approach cone. The vertical path range is stored
    /// in ascending order.
    pub fn generic() -> Self {
        Self {
            along_track_m: Interval::new(0.08 * METERS_PER_NM, 3.0 * METERS_PER_NM),
            lateral_path_deg: Interval::new(-4.0, 4.0),
            vertical_path_deg: Interval::new(-3.8, -2.2),
            yaw_deg: Interval::new(-10.0, 10.0),
            pitch_deg: Interval::new(-8.0, 0.0),
            roll_deg: Interval::new(-10.0, 10.0),
        }
    }

    pub fn interval(&self, parameter: ConeParameter) -> Interval {
        match parameter {
            ConeParameter::AlongTrack => self.along_track_m,
            ConeParameter::LateralPath => self.lateral_path_deg,
            ConeParameter::VerticalPath => self.vertical_path_deg,
            ConeParameter::Yaw => self.yaw_deg,
            ConeParameter::Pitch => self.pitch_deg,
            ConeParameter::Roll => self.roll_deg,
        }
    }

    pub fn interval_mut(&mut self, parameter: ConeParameter) -> &mut Interval {
        match parameter {
            ConeParameter::AlongTrack => &mut self.along_track_m,
            ConeParameter::LateralPath => &mut self.lateral_path_deg,
            ConeParameter::VerticalPath => &mut self.vertical_path_deg,
            ConeParameter::Yaw => &mut self.yaw_deg,
            ConeParameter::Pitch => &mut self.pitch_deg,
            ConeParameter::Roll => &mut self.roll_deg,
        }
    }

    /// Pose at the midpoint of every interval.
    pub fn center(&self) -> Pose {
        let mut pose = Pose::new(0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        for p in ConeParameter::ALL {
            pose.set(p, self.interval(p).center());
        }
        pose
    }

    /// Membership test, boundaries inclusive.
    pub fn contains(&self, pose: &Pose) -> Result<bool> {
        if !pose.is_finite() {
            return Err(Error::InvalidInput(format!("non-finite pose field in {pose:?}")));
        }
        Ok(ConeParameter::ALL
            .iter()
            .all(|&p| self.interval(p).contains(pose.get(p))))
    }

    /// Parameters whose value lies outside the cone.
    pub fn violated_parameters(&self, pose: &Pose) -> Vec<ConeParameter> {
        ConeParameter::ALL
            .into_iter()
            .filter(|&p| !self.interval(p).contains(pose.get(p)))
            .collect()
    }

    /// Invariant violations of the cone itself.
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for p in ConeParameter::ALL {
            let iv = self.interval(p);
            if !iv.min.is_finite() || !iv.max.is_finite() {
                out.push(Violation::NonFiniteBound { parameter: p.name().to_string() });
            } else if iv.min > iv.max {
                out.push(Violation::EmptyInterval { parameter: p.name().to_string(), min: iv.min, max: iv.max });
            } else if iv.min == iv.max {
                out.push(Violation::DegenerateInterval { parameter: p.name().to_string() });
            }
        }
        let vertical = self.vertical_path_deg;
        if vertical.max >= 0.0 {
            out.push(Violation::SignConstraint {
                parameter: ConeParameter::VerticalPath.name().to_string(),
                requirement: "entirely negative",
            });
        }
        if self.along_track_m.min <= 0.0 {
            out.push(Violation::SignConstraint {
                parameter: ConeParameter::AlongTrack.name().to_string(),
                requirement: "entirely positive",
            });
        }
        out
    }
}

/// Image-content restrictions added by ODD refinements. They are recorded
/// and checked for lineage consistency but never evaluated on images.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Restriction {
    SingleRunwayInCone,
    PianoPresent,
    RunwayFullyVisible,
    ClearDaylightNoAdverseWeather,
}

impl Restriction {
    pub const REGISTRY: [Restriction; 4] = [
        Restriction::SingleRunwayInCone,
        Restriction::PianoPresent,
        Restriction::RunwayFullyVisible,
        Restriction::ClearDaylightNoAdverseWeather,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Restriction::SingleRunwayInCone => "single_runway_in_cone",
            Restriction::PianoPresent => "piano_present",
            Restriction::RunwayFullyVisible => "runway_fully_visible",
            Restriction::ClearDaylightNoAdverseWeather => "clear_daylight_no_adverse_weather",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::REGISTRY.into_iter().find(|r| r.as_str() == name)
    }
}

impl fmt::Display for Restriction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Range of a declared parameter: a closed interval or a finite value set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParameterRange {
    Continuous { min: f64, max: f64 },
    Categorical { values: Vec<String> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParameterKind {
    Continuous,
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSpec {
    pub name: String,
    pub unit: Unit,
    #[serde(flatten)]
    pub range: ParameterRange,
}

impl ParameterSpec {
    pub fn continuous(name: &str, unit: Unit, min: f64, max: f64) -> Self {
        Self { name: name.to_string(), unit, range: ParameterRange::Continuous { min, max } }
    }

    pub fn categorical(name: &str, values: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            unit: Unit::Unitless,
            range: ParameterRange::Categorical { values: values.iter().map(|v| v.to_string()).collect() },
        }
    }

    pub fn kind(&self) -> ParameterKind {
        match self.range {
            ParameterRange::Continuous { .. } => ParameterKind::Continuous,
            ParameterRange::Categorical { .. } => ParameterKind::Categorical,
        }
    }
}

/// A single invariant violation found by [`OddSpec::validate`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    EmptyInterval { parameter: String, min: f64, max: f64 },
    DegenerateInterval { parameter: String },
    NonFiniteBound { parameter: String },
    EmptyValueSet { parameter: String },
    UnitMismatch { parameter: String, unit: Unit },
    KindMismatch { parameter: String },
    MissingParameter { parameter: String },
    DuplicateParameter { parameter: String },
    SignConstraint { parameter: String, requirement: &'static str },
    UnknownRestriction { restriction: String },
    DuplicateRestriction { restriction: String },
    RestrictionRegression { version: u32, missing: Vec<String> },
    VersionNotIncreasing { version: u32, parent_version: u32 },
    LineageRoot { version: u32 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyInterval { parameter, min, max } => {
                write!(f, "empty interval: {parameter} has min {min} > max {max}")
            }
            Violation::DegenerateInterval { parameter } => write!(f, "degenerate interval: {parameter} has min == max"),
            Violation::NonFiniteBound { parameter } => write!(f, "non-finite bound on {parameter}"),
            Violation::EmptyValueSet { parameter } => write!(f, "empty value set for categorical {parameter}"),
            Violation::UnitMismatch { parameter, unit } => write!(f, "unit mismatch: {parameter} declared in {unit}"),
            Violation::KindMismatch { parameter } => write!(f, "kind mismatch: {parameter} must be continuous"),
            Violation::MissingParameter { parameter } => write!(f, "missing cone parameter {parameter}"),
            Violation::DuplicateParameter { parameter } => write!(f, "parameter {parameter} declared twice"),
            Violation::SignConstraint { parameter, requirement } => {
                write!(f, "sign constraint: {parameter} must be {requirement}")
            }
            Violation::UnknownRestriction { restriction } => write!(f, "unknown restriction {restriction:?}"),
            Violation::DuplicateRestriction { restriction } => write!(f, "restriction {restriction} listed twice"),
            Violation::RestrictionRegression { version, missing } => write!(
                f,
                "restriction regression: version {version} drops {}",
                missing.join(", ")
            ),
            Violation::VersionNotIncreasing { version, parent_version } => write!(
                f,
                "lineage break: version {version} does not follow parent version {parent_version}"
            ),
            Violation::LineageRoot { version } => write!(f, "lineage break: root version is {version}, expected 1"),
        }
    }
}

/// A versioned ODD specification.
///
/// `parameters` keeps the declared units so that a loaded file saves back
/// unchanged; [`OddSpec::cone`] derives the canonical cone from them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OddSpec {
    pub version: u32,
    pub parent: Option<Box<OddSpec>>,
    pub parameters: Vec<ParameterSpec>,
    pub restrictions: Vec<String>,
}

/// Result of [`OddSpec::refine`]. `duplicates` lists requested restrictions
/// that were already present and therefore ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct Refinement {
    pub spec: OddSpec,
    pub duplicates: Vec<Restriction>,
}

impl OddSpec {
    /// Version 1: the generic cone with no restrictions, along-track in NM.
    pub fn generic() -> Self {
        Self {
            version: 1,
            parent: None,
            parameters: vec![
                ParameterSpec::continuous("along_track", Unit::NauticalMiles, 0.08, 3.0),
                ParameterSpec::continuous("vertical_path", Unit::Degrees, -3.8, -2.2),
                ParameterSpec::continuous("lateral_path", Unit::Degrees, -4.0, 4.0),
                ParameterSpec::continuous("yaw", Unit::Degrees, -10.0, 10.0),
                ParameterSpec::continuous("pitch", Unit::Degrees, -8.0, 0.0),
                ParameterSpec::continuous("roll", Unit::Degrees, -10.0, 10.0),
            ],
            restrictions: Vec::new(),
        }
    }

    pub fn from_cone(cone: &ApproachCone) -> Self {
        let parameters = ConeParameter::ALL
            .into_iter()
            .map(|p| {
                let iv = cone.interval(p);
                let unit = if p == ConeParameter::AlongTrack { Unit::Meters } else { Unit::Degrees };
                ParameterSpec::continuous(p.name(), unit, iv.min, iv.max)
            })
            .collect();
        Self { version: 1, parent: None, parameters, restrictions: Vec::new() }
    }

    /// Derive the cone in canonical units. Fails if a cone parameter is
    /// missing, categorical, or declared in an unsupported unit. Bounds are
    /// taken as written; use [`OddSpec::validate`] to check them.
    pub fn cone(&self) -> Result<ApproachCone> {
        let mut cone = ApproachCone::generic();
        for p in ConeParameter::ALL {
            let spec = self
                .parameters
                .iter()
                .find(|s| s.name == p.name())
                .ok_or_else(|| Error::Config(format!("missing cone parameter {p}")))?;
            let ParameterRange::Continuous { min, max } = spec.range else {
                return Err(Error::Config(format!("cone parameter {p} must be continuous")));
            };
            if !p.accepts_unit(spec.unit) {
                return Err(Error::Config(format!("cone parameter {p} cannot be declared in {}", spec.unit)));
            }
            let iv = Interval::new(min, max);
            *cone.interval_mut(p) = if spec.unit == Unit::NauticalMiles { iv.scaled(METERS_PER_NM) } else { iv };
        }
        Ok(cone)
    }

    /// Restrictions that belong to the registry, in declaration order.
    pub fn known_restrictions(&self) -> Vec<Restriction> {
        self.restrictions.iter().filter_map(|r| Restriction::parse(r)).collect()
    }

    pub fn has_restriction(&self, restriction: Restriction) -> bool {
        self.restrictions.iter().any(|r| r == restriction.as_str())
    }

    /// Versions from this one back to the root.
    pub fn lineage(&self) -> impl Iterator<Item = &OddSpec> {
        std::iter::successors(Some(self), |s| s.parent.as_deref())
    }

    /// Every invariant violation across this version and its ancestors.
    /// An empty list means the spec is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for spec in self.lineage() {
            spec.validate_own(&mut out);
        }
        let chain: Vec<&OddSpec> = self.lineage().collect();
        for pair in chain.windows(2) {
            let (child, parent) = (pair[0], pair[1]);
            if child.version <= parent.version {
                out.push(Violation::VersionNotIncreasing { version: child.version, parent_version: parent.version });
            }
            let missing: Vec<String> = parent
                .restrictions
                .iter()
                .filter(|r| !child.restrictions.contains(r))
                .cloned()
                .collect();
            if !missing.is_empty() {
                out.push(Violation::RestrictionRegression { version: child.version, missing });
            }
        }
        if let Some(root) = chain.last() {
            if root.version != 1 {
                out.push(Violation::LineageRoot { version: root.version });
            }
        }
        out
    }

    fn validate_own(&self, out: &mut Vec<Violation>) {
        let mut seen = Vec::new();
        for spec in &self.parameters {
            if seen.contains(&spec.name.as_str()) {
                out.push(Violation::DuplicateParameter { parameter: spec.name.clone() });
                continue;
            }
            seen.push(spec.name.as_str());
            let cone_param = ConeParameter::from_name(&spec.name);
            match &spec.range {
                ParameterRange::Continuous { min, max } => {
                    if !min.is_finite() || !max.is_finite() {
                        out.push(Violation::NonFiniteBound { parameter: spec.name.clone() });
                    } else if min > max {
                        out.push(Violation::EmptyInterval { parameter: spec.name.clone(), min: *min, max: *max });
                    } else if min == max {
                        out.push(Violation::DegenerateInterval { parameter: spec.name.clone() });
                    }
                    if matches!(cone_param, Some(p) if !p.accepts_unit(spec.unit)) {
                        out.push(Violation::UnitMismatch { parameter: spec.name.clone(), unit: spec.unit });
                    }
                }
                ParameterRange::Categorical { values } => {
                    if values.is_empty() {
                        out.push(Violation::EmptyValueSet { parameter: spec.name.clone() });
                    }
                    if cone_param.is_some() {
                        out.push(Violation::KindMismatch { parameter: spec.name.clone() });
                    }
                }
            }
        }
        for p in ConeParameter::ALL {
            if !seen.contains(&p.name()) {
                out.push(Violation::MissingParameter { parameter: p.name().to_string() });
            }
        }
        // Sign constraints only make sense on an otherwise well-formed cone.
        if let Ok(cone) = self.cone() {
            out.extend(
                cone.violations()
                    .into_iter()
                    .filter(|v| matches!(v, Violation::SignConstraint { .. })),
            );
        }
        let mut listed: Vec<&str> = Vec::new();
        for r in &self.restrictions {
            if Restriction::parse(r).is_none() {
                out.push(Violation::UnknownRestriction { restriction: r.clone() });
            }
            if listed.contains(&r.as_str()) {
                out.push(Violation::DuplicateRestriction { restriction: r.clone() });
            }
            listed.push(r);
        }
    }

    /// New version with `added` appended to the restrictions. Restrictions
    /// already present are skipped and reported in
    /// [`Refinement::duplicates`].
    pub fn refine(&self, added: &[Restriction]) -> Refinement {
        let mut restrictions = self.restrictions.clone();
        let mut duplicates = Vec::new();
        for r in added {
            if restrictions.iter().any(|x| x == r.as_str()) {
                log::warn!("restriction {r} already present in version {}; ignored", self.version);
                duplicates.push(*r);
            } else {
                restrictions.push(r.as_str().to_string());
            }
        }
        Refinement {
            spec: OddSpec {
                version: self.version + 1,
                parent: Some(Box::new(self.clone())),
                parameters: self.parameters.clone(),
                restrictions,
            },
            duplicates,
        }
    }

    pub fn classify_sample(&self, pose: &Pose, edge_band: f64) -> Result<SampleClassification> {
        classify_sample(&self.cone()?, pose, edge_band)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }
}

/// Free-function form of [`OddSpec::validate`].
pub fn validate_spec(spec: &OddSpec) -> Vec<Violation> {
    spec.validate()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleStatus {
    InOdd,
    EdgeCase,
    Outlier,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleClassification {
    pub status: SampleStatus,
    pub violated_parameters: Vec<ConeParameter>,
    /// Signed distance to the nearest bound as a fraction of the range
    /// width; negative when the value lies outside the interval.
    pub boundary_proximity: BTreeMap<ConeParameter, f64>,
}

/// Outlier if any parameter leaves its interval, edge case if every value is
/// inside but at least one lies within `edge_band * width` of a bound.
pub fn classify_sample(cone: &ApproachCone, pose: &Pose, edge_band: f64) -> Result<SampleClassification> {
    if !(edge_band > 0.0 && edge_band < 0.5) {
        return Err(Error::InvalidInput(format!("edge_band must lie in (0, 0.5), got {edge_band}")));
    }
    if !pose.is_finite() {
        return Err(Error::InvalidInput(format!("non-finite pose field in {pose:?}")));
    }
    let mut violated = Vec::new();
    let mut proximity = BTreeMap::new();
    let mut near_edge = false;
    for p in ConeParameter::ALL {
        let iv = cone.interval(p);
        let value = pose.get(p);
        let width = iv.width();
        let distance = (value - iv.min).min(iv.max - value);
        proximity.insert(p, distance / width);
        if !iv.contains(value) {
            violated.push(p);
        } else if distance < edge_band * width {
            near_edge = true;
        }
    }
    let status = if !violated.is_empty() {
        SampleStatus::Outlier
    } else if near_edge {
        SampleStatus::EdgeCase
    } else {
        SampleStatus::InOdd
    };
    Ok(SampleClassification { status, violated_parameters: violated, boundary_proximity: proximity })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConceptLevel {
    /// Fundamental to the task; absence rules the object out.
    Primary,
    /// Reinforces a decision; absence is not prohibitive.
    Secondary,
    /// Should have no impact on detection.
    Tertiary,
    /// Residual elements outside the other three levels.
    Quaternary,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConceptTag {
    pub label: String,
    pub category: ConceptLevel,
}

impl ConceptTag {
    pub fn new(label: impl Into<String>, category: ConceptLevel) -> Self {
        Self { label: label.into(), category }
    }
}
