//! Dataset records and their file formats.
//!
//! Label CSV: a `#` schema comment line, then a header. The first 26 columns
//! are fixed; `margin_px`, `fully_visible`, the normalized corners and
//! `concepts` follow, then any extra metadata columns in sorted order.
//! Absent optionals are empty cells. Unknown columns are kept as opaque
//! metadata and written back.
//!
//! Label JSON: `{"schema_version": 1, "records": [...]}`.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{to_cartesian, BoundingBox, ImageLabel, PixelPoint, RunwayGeometry};
use crate::odd_spec::{ConceptLevel, ConceptTag, Pose};
use crate::sampling::{to_geodetic, Trajectory};

pub const SCHEMA_VERSION: u32 = 1;
pub const CSV_SCHEMA_COMMENT: &str = "# odd-forge label schema v1";

/// Fixed leading columns of the label CSV.
pub const LABEL_COLUMNS: [&str; 26] = [
    "image_id",
    "source",
    "airport",
    "runway",
    "width",
    "height",
    "x1",
    "y1",
    "x2",
    "y2",
    "x3",
    "y3",
    "x4",
    "y4",
    "bbox_xmin",
    "bbox_ymin",
    "bbox_xmax",
    "bbox_ymax",
    "slant_distance_m",
    "time_to_landing_s",
    "along_track_m",
    "lateral_deg",
    "vertical_deg",
    "yaw_deg",
    "pitch_deg",
    "roll_deg",
];

/// Columns written after [`LABEL_COLUMNS`].
pub const LABEL_EXTENSION_COLUMNS: [&str; 11] = [
    "margin_px",
    "fully_visible",
    "x1_norm",
    "y1_norm",
    "x2_norm",
    "y2_norm",
    "x3_norm",
    "y3_norm",
    "x4_norm",
    "y4_norm",
    "concepts",
];

const POSE_COLUMNS: [&str; 6] = ["along_track_m", "lateral_deg", "vertical_deg", "yaw_deg", "pitch_deg", "roll_deg"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Synthetic,
    Real,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::Synthetic => "synthetic",
            Source::Real => "real",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "synthetic" => Some(Source::Synthetic),
            "real" => Some(Source::Real),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DataFormat {
    Csv,
    Json,
}

impl DataFormat {
    /// Guess from the file extension, defaulting to CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => DataFormat::Json,
            _ => DataFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub image_id: String,
    pub source: Source,
    pub airport_id: String,
    pub runway_id: String,
    pub label: ImageLabel,
    pub pose: Option<Pose>,
    pub slant_distance_m: Option<f64>,
    pub time_to_landing_s: Option<f64>,
    /// `(width, height)` in pixels.
    pub image_size: (u32, u32),
    pub concepts: Vec<ConceptTag>,
    pub extra: BTreeMap<String, String>,
}

impl DatasetRecord {
    /// Schema invariants. The error is a human-readable rejection reason.
    pub fn check_schema(&self) -> std::result::Result<(), String> {
        if self.image_id.is_empty() {
            return Err("empty image_id".into());
        }
        match self.source {
            Source::Synthetic => {
                if self.pose.is_none() {
                    return Err("missing pose for synthetic".into());
                }
                if self.slant_distance_m.is_none() {
                    return Err("missing slant_distance for synthetic".into());
                }
            }
            Source::Real => {
                if self.time_to_landing_s.is_none() {
                    return Err("missing time_to_landing for real".into());
                }
                if self.pose.is_some() {
                    return Err("pose present for real".into());
                }
                if self.slant_distance_m.is_some() {
                    return Err("slant_distance present for real".into());
                }
            }
        }
        if self.label.fully_visible {
            let (w, h) = (self.image_size.0 as f64, self.image_size.1 as f64);
            for (i, c) in self.label.corners.iter().enumerate() {
                if !(c.u >= 0.0 && c.u <= w && c.v >= 0.0 && c.v <= h) {
                    return Err(format!("corner {} outside image bounds", i + 1));
                }
            }
        }
        Ok(())
    }

    /// Corners divided by the image size.
    pub fn normalized_corners(&self) -> [PixelPoint; 4] {
        let (w, h) = (self.image_size.0 as f64, self.image_size.1 as f64);
        self.label.corners.map(|c| PixelPoint::new(c.u / w, c.v / h))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitName {
    Train,
    Test,
    RealSubset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub name: SplitName,
    pub records: Vec<DatasetRecord>,
}

impl DatasetSplit {
    pub fn new(name: SplitName, records: Vec<DatasetRecord>) -> Self {
        Self { name, records }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Fails with the shared ids if two splits have an image in common.
pub fn check_disjoint(a: &DatasetSplit, b: &DatasetSplit) -> Result<()> {
    let ids: BTreeSet<&str> = a.records.iter().map(|r| r.image_id.as_str()).collect();
    let shared: BTreeSet<String> = b
        .records
        .iter()
        .filter(|r| ids.contains(r.image_id.as_str()))
        .map(|r| r.image_id.clone())
        .collect();
    if shared.is_empty() {
        Ok(())
    } else {
        Err(Error::SplitIntegrity(shared.into_iter().collect()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rejection {
    /// 1-based data row (CSV) or array index + 1 (JSON).
    pub row: usize,
    pub image_id: Option<String>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadOutcome {
    pub split: DatasetSplit,
    pub rejections: Vec<Rejection>,
    pub rows_read: usize,
}

/// Load and schema-check every row. Invalid rows go to the rejection list;
/// more than half rejected is a format error.
pub fn load_records(path: impl AsRef<Path>, format: DataFormat, name: SplitName) -> Result<LoadOutcome> {
    let path = path.as_ref();
    let rows = match format {
        DataFormat::Csv => read_csv_rows(path)?,
        DataFormat::Json => read_json_rows(path)?,
    };
    let rows_read = rows.len();
    let mut records = Vec::new();
    let mut rejections = Vec::new();
    for (index, row) in rows.into_iter().enumerate() {
        let (image_id, parsed) = row;
        match parsed.and_then(|r| r.check_schema().map(|_| r)) {
            Ok(record) => records.push(record),
            Err(reason) => rejections.push(Rejection { row: index + 1, image_id, reason }),
        }
    }
    if rejections.len() * 2 > rows_read {
        return Err(Error::Format {
            path: path.to_path_buf(),
            reason: format!(
                "{} of {} rows rejected; first: row {}: {}",
                rejections.len(),
                rows_read,
                rejections[0].row,
                rejections[0].reason
            ),
        });
    }
    Ok(LoadOutcome { split: DatasetSplit::new(name, records), rejections, rows_read })
}

type ParsedRow = (Option<String>, std::result::Result<DatasetRecord, String>);

fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn encode_concepts(concepts: &[ConceptTag]) -> String {
    concepts
        .iter()
        .map(|c| format!("{}:{}", c.label, concept_level_name(c.category)))
        .collect::<Vec<_>>()
        .join(";")
}

fn concept_level_name(level: ConceptLevel) -> &'static str {
    match level {
        ConceptLevel::Primary => "primary",
        ConceptLevel::Secondary => "secondary",
        ConceptLevel::Tertiary => "tertiary",
        ConceptLevel::Quaternary => "quaternary",
    }
}

fn decode_concepts(cell: &str) -> std::result::Result<Vec<ConceptTag>, String> {
    if cell.is_empty() {
        return Ok(Vec::new());
    }
    cell.split(';')
        .map(|item| {
            let (label, level) = item.rsplit_once(':').ok_or_else(|| format!("malformed concept {item:?}"))?;
            let category = match level {
                "primary" => ConceptLevel::Primary,
                "secondary" => ConceptLevel::Secondary,
                "tertiary" => ConceptLevel::Tertiary,
                "quaternary" => ConceptLevel::Quaternary,
                other => return Err(format!("unknown concept level {other:?}")),
            };
            Ok(ConceptTag::new(label, category))
        })
        .collect()
}

/// Normalized corners must agree with the absolute ones.
fn check_normalized(record: &DatasetRecord, normalized: &[Option<f64>; 8]) -> std::result::Result<(), String> {
    let expected = record.normalized_corners();
    for (i, c) in expected.iter().enumerate() {
        for (value, stored, axis) in [(c.u, normalized[2 * i], "x"), (c.v, normalized[2 * i + 1], "y")] {
            let Some(stored) = stored else { continue };
            let consistent = (value.is_nan() && stored.is_nan()) || (value - stored).abs() <= 1e-9;
            if !consistent {
                return Err(format!("normalized {axis}{} inconsistent with absolute corner", i + 1));
            }
        }
    }
    Ok(())
}

fn read_csv_rows(path: &Path) -> Result<Vec<ParsedRow>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(file);
    let headers = reader.headers()?.clone();
    let missing: Vec<&str> = LABEL_COLUMNS
        .iter()
        .copied()
        .filter(|c| !headers.iter().any(|h| h == *c))
        .collect();
    if !missing.is_empty() {
        return Err(Error::Format { path: path.to_path_buf(), reason: format!("missing columns {missing:?}") });
    }
    let index: BTreeMap<&str, usize> = headers.iter().enumerate().map(|(i, h)| (h, i)).collect();
    let known: BTreeSet<&str> = LABEL_COLUMNS.iter().chain(LABEL_EXTENSION_COLUMNS.iter()).copied().collect();
    let extra_columns: Vec<(&str, usize)> = index
        .iter()
        .filter(|(name, _)| !known.contains(*name))
        .map(|(name, i)| (*name, *i))
        .collect();

    let mut rows = Vec::new();
    for result in reader.records() {
        let row = result?;
        let row = CsvRow { index: &index, row: &row };
        let image_id = Some(row.cell("image_id").to_string()).filter(|s| !s.is_empty());
        let parsed = parse_csv_row(&row, &extra_columns);
        rows.push((image_id, parsed));
    }
    Ok(rows)
}

struct CsvRow<'a> {
    index: &'a BTreeMap<&'a str, usize>,
    row: &'a csv::StringRecord,
}

impl CsvRow<'_> {
    fn cell(&self, name: &str) -> &str {
        self.index.get(name).and_then(|&i| self.row.get(i)).unwrap_or("").trim()
    }
}

fn parse_csv_row(row: &CsvRow<'_>, extra_columns: &[(&str, usize)]) -> std::result::Result<DatasetRecord, String> {
    let cell = |name: &str| row.cell(name).to_string();
    let number = |name: &str| -> std::result::Result<f64, String> {
        let text = cell(name);
        let text = text.as_str();
        if text.is_empty() {
            return Err(format!("missing {name}"));
        }
        text.parse::<f64>().map_err(|_| format!("invalid value for {name}: {text:?}"))
    };
    let optional = |name: &str| -> std::result::Result<Option<f64>, String> {
        if cell(name).is_empty() {
            Ok(None)
        } else {
            number(name).map(Some)
        }
    };
    let dimension = |name: &str| -> std::result::Result<u32, String> {
        cell(name).parse::<u32>().map_err(|_| format!("invalid value for {name}: {:?}", cell(name)))
    };

    let source = Source::parse(&cell("source")).ok_or_else(|| format!("unknown source {:?}", cell("source")))?;
    let mut corners = [PixelPoint::new(0.0, 0.0); 4];
    for (i, c) in corners.iter_mut().enumerate() {
        *c = PixelPoint::new(number(&format!("x{}", i + 1))?, number(&format!("y{}", i + 1))?);
    }
    let bbox = BoundingBox::new(number("bbox_xmin")?, number("bbox_ymin")?, number("bbox_xmax")?, number("bbox_ymax")?);

    let pose_values: Vec<Option<f64>> = POSE_COLUMNS.iter().map(|c| optional(c)).collect::<std::result::Result<_, _>>()?;
    let pose = match pose_values.iter().filter(|v| v.is_some()).count() {
        0 => None,
        6 => {
            let v: Vec<f64> = pose_values.into_iter().flatten().collect();
            Some(Pose::new(v[0], v[1], v[2], v[3], v[4], v[5]))
        }
        _ => return Err("incomplete pose".into()),
    };

    let margin_px = optional("margin_px")?.unwrap_or(0.0);
    let fully_visible = match cell("fully_visible").as_str() {
        "" => corners.iter().all(|c| c.is_finite()),
        "true" => true,
        "false" => false,
        other => return Err(format!("invalid value for fully_visible: {other:?}")),
    };
    let mut normalized = [None; 8];
    for (i, slot) in normalized.iter_mut().enumerate() {
        let axis = if i % 2 == 0 { "x" } else { "y" };
        *slot = optional(&format!("{axis}{}_norm", i / 2 + 1))?;
    }

    let extra = extra_columns
        .iter()
        .filter_map(|(name, i)| {
            let v = row.row.get(*i).unwrap_or("");
            (!v.is_empty()).then(|| (name.to_string(), v.to_string()))
        })
        .collect();

    let record = DatasetRecord {
        image_id: cell("image_id"),
        source,
        airport_id: cell("airport"),
        runway_id: cell("runway"),
        label: ImageLabel { corners, bbox, margin_px, fully_visible },
        pose,
        slant_distance_m: optional("slant_distance_m")?,
        time_to_landing_s: optional("time_to_landing_s")?,
        image_size: (dimension("width")?, dimension("height")?),
        concepts: decode_concepts(&cell("concepts"))?,
        extra,
    };
    check_normalized(&record, &normalized)?;
    Ok(record)
}

fn write_csv(records: &[DatasetRecord], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    writeln!(out, "{CSV_SCHEMA_COMMENT}").map_err(|e| Error::io(path, e))?;
    let extra_keys: BTreeSet<&str> = records.iter().flat_map(|r| r.extra.keys().map(String::as_str)).collect();
    let mut writer = csv::Writer::from_writer(out);
    let header: Vec<&str> = LABEL_COLUMNS
        .iter()
        .chain(LABEL_EXTENSION_COLUMNS.iter())
        .copied()
        .chain(extra_keys.iter().copied())
        .collect();
    writer.write_record(&header)?;
    for r in records {
        let mut row: Vec<String> = vec![
            r.image_id.clone(),
            r.source.as_str().to_string(),
            r.airport_id.clone(),
            r.runway_id.clone(),
            r.image_size.0.to_string(),
            r.image_size.1.to_string(),
        ];
        for c in &r.label.corners {
            row.push(fmt_f64(c.u));
            row.push(fmt_f64(c.v));
        }
        let b = r.label.bbox;
        row.extend([b.x_min, b.y_min, b.x_max, b.y_max].map(fmt_f64));
        row.push(fmt_opt(r.slant_distance_m));
        row.push(fmt_opt(r.time_to_landing_s));
        match &r.pose {
            Some(p) => row.extend(
                [p.along_track_m, p.lateral_path_deg, p.vertical_path_deg, p.yaw_deg, p.pitch_deg, p.roll_deg]
                    .map(fmt_f64),
            ),
            None => row.extend(std::iter::repeat_n(String::new(), 6)),
        }
        row.push(fmt_f64(r.label.margin_px));
        row.push(r.label.fully_visible.to_string());
        for c in r.normalized_corners() {
            row.push(fmt_f64(c.u));
            row.push(fmt_f64(c.v));
        }
        row.push(encode_concepts(&r.concepts));
        for key in &extra_keys {
            row.push(r.extra.get(*key).cloned().unwrap_or_default());
        }
        writer.write_record(&row)?;
    }
    writer.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordDoc {
    image_id: String,
    source: Source,
    airport: String,
    runway: String,
    width: u32,
    height: u32,
    /// `null` marks a corner behind the camera.
    corners: [[Option<f64>; 2]; 4],
    #[serde(default)]
    corners_normalized: Option<[[Option<f64>; 2]; 4]>,
    bbox: BoundingBox,
    #[serde(default)]
    margin_px: f64,
    fully_visible: bool,
    #[serde(default)]
    slant_distance_m: Option<f64>,
    #[serde(default)]
    time_to_landing_s: Option<f64>,
    #[serde(default)]
    pose: Option<Pose>,
    #[serde(default)]
    concepts: Vec<ConceptTag>,
    #[serde(default)]
    extra: BTreeMap<String, String>,
}

fn finite_or_none(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

impl RecordDoc {
    fn from_record(r: &DatasetRecord) -> Self {
        Self {
            image_id: r.image_id.clone(),
            source: r.source,
            airport: r.airport_id.clone(),
            runway: r.runway_id.clone(),
            width: r.image_size.0,
            height: r.image_size.1,
            corners: r.label.corners.map(|c| [finite_or_none(c.u), finite_or_none(c.v)]),
            corners_normalized: Some(r.normalized_corners().map(|c| [finite_or_none(c.u), finite_or_none(c.v)])),
            bbox: r.label.bbox,
            margin_px: r.label.margin_px,
            fully_visible: r.label.fully_visible,
            slant_distance_m: r.slant_distance_m,
            time_to_landing_s: r.time_to_landing_s,
            pose: r.pose,
            concepts: r.concepts.clone(),
            extra: r.extra.clone(),
        }
    }

    fn into_record(self) -> std::result::Result<DatasetRecord, String> {
        let nan = f64::NAN;
        let corners = self.corners.map(|[u, v]| PixelPoint::new(u.unwrap_or(nan), v.unwrap_or(nan)));
        let normalized = self.corners_normalized.map(|n| {
            let flat: [Option<f64>; 8] = std::array::from_fn(|i| Some(n[i / 2][i % 2].unwrap_or(nan)));
            flat
        });
        let record = DatasetRecord {
            image_id: self.image_id,
            source: self.source,
            airport_id: self.airport,
            runway_id: self.runway,
            label: ImageLabel { corners, bbox: self.bbox, margin_px: self.margin_px, fully_visible: self.fully_visible },
            pose: self.pose,
            slant_distance_m: self.slant_distance_m,
            time_to_landing_s: self.time_to_landing_s,
            image_size: (self.width, self.height),
            concepts: self.concepts,
            extra: self.extra,
        };
        if let Some(n) = normalized {
            check_normalized(&record, &n)?;
        }
        Ok(record)
    }
}

fn read_json_rows(path: &Path) -> Result<Vec<ParsedRow>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let format_error = |reason: String| Error::Format { path: path.to_path_buf(), reason };
    let doc: serde_json::Value = serde_json::from_str(&text).map_err(|e| format_error(e.to_string()))?;
    match doc.get("schema_version").and_then(|v| v.as_u64()) {
        Some(v) if v == SCHEMA_VERSION as u64 => {}
        other => return Err(format_error(format!("unsupported schema_version {other:?}"))),
    }
    let records = doc
        .get("records")
        .and_then(|v| v.as_array())
        .ok_or_else(|| format_error("missing records array".into()))?;
    Ok(records
        .iter()
        .map(|value| {
            let image_id = value.get("image_id").and_then(|v| v.as_str()).map(str::to_string);
            let parsed = serde_json::from_value::<RecordDoc>(value.clone())
                .map_err(|e| e.to_string())
                .and_then(RecordDoc::into_record);
            (image_id, parsed)
        })
        .collect())
}

#[derive(Serialize)]
struct LabelFile {
    schema_version: u32,
    records: Vec<RecordDoc>,
}

fn write_json(records: &[DatasetRecord], path: &Path) -> Result<()> {
    let file = LabelFile {
        schema_version: SCHEMA_VERSION,
        records: records.iter().map(RecordDoc::from_record).collect(),
    };
    let mut text = serde_json::to_string_pretty(&file)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_labels(records: &[DatasetRecord], path: impl AsRef<Path>, format: DataFormat) -> Result<()> {
    let path = path.as_ref();
    match format {
        DataFormat::Csv => write_csv(records, path),
        DataFormat::Json => write_json(records, path),
    }
}

/// One renderer keyframe. `yaw` is the true heading of the aircraft nose in
/// `[0, 360)`; `pitch` and `roll` are relative to the horizontal plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioKeyframe {
    pub frame: usize,
    pub lat: f64,
    pub lon: f64,
    pub alt_m: f64,
    pub yaw: f64,
    pub pitch: f64,
    pub roll: f64,
}

pub fn scenario_keyframes(traj: &Trajectory, rw: &RunwayGeometry) -> Result<Vec<ScenarioKeyframe>> {
    let georef = rw.georef()?;
    traj.frames
        .iter()
        .enumerate()
        .map(|(frame, pose)| {
            let geo = to_geodetic(&to_cartesian(pose)?, Some(georef))?;
            Ok(ScenarioKeyframe {
                frame,
                lat: geo.latitude_deg,
                lon: geo.longitude_deg,
                alt_m: geo.altitude_m,
                yaw: (georef.heading_deg + pose.yaw_deg).rem_euclid(360.0),
                pitch: pose.pitch_deg,
                roll: pose.roll_deg,
            })
        })
        .collect()
}

/// Write the trajectory as a JSON keyframe array.
pub fn write_scenario(traj: &Trajectory, rw: &RunwayGeometry, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let keyframes = scenario_keyframes(traj, rw)?;
    let mut text = serde_json::to_string_pretty(&keyframes)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_scenario(path: impl AsRef<Path>) -> Result<Vec<ScenarioKeyframe>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

pub const POSE_CSV_COLUMNS: [&str; 10] = [
    "index",
    "along_track_m",
    "lateral_deg",
    "vertical_deg",
    "yaw_deg",
    "pitch_deg",
    "roll_deg",
    "x_m",
    "y_m",
    "z_m",
];

/// Pose table with runway-frame Cartesian columns.
pub fn write_poses(poses: &[Pose], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(POSE_CSV_COLUMNS)?;
    for (i, p) in poses.iter().enumerate() {
        let c = to_cartesian(p)?;
        let mut row = vec![i.to_string()];
        row.extend(
            [p.along_track_m, p.lateral_path_deg, p.vertical_path_deg, p.yaw_deg, p.pitch_deg, p.roll_deg, c.x_m, c.y_m, c.z_m]
                .map(fmt_f64),
        );
        writer.write_record(&row)?;
    }
    writer.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Read the pose columns of a pose table; Cartesian columns are ignored.
pub fn read_poses(path: impl AsRef<Path>) -> Result<Vec<Pose>> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let columns: Vec<usize> = POSE_COLUMNS
        .iter()
        .map(|name| {
            headers.iter().position(|h| h == *name).ok_or_else(|| Error::Format {
                path: path.to_path_buf(),
                reason: format!("missing column {name}"),
            })
        })
        .collect::<Result<_>>()?;
    let mut poses = Vec::new();
    for (row_index, row) in reader.records().enumerate() {
        let row = row?;
        let mut values = [0.0; 6];
        for (k, &col) in columns.iter().enumerate() {
            let text = row.get(col).unwrap_or("");
            values[k] = text.trim().parse().map_err(|_| Error::Format {
                path: path.to_path_buf(),
                reason: format!("row {}: invalid {} {text:?}", row_index + 1, POSE_COLUMNS[k]),
            })?;
        }
        poses.push(Pose::new(values[0], values[1], values[2], values[3], values[4], values[5]));
    }
    Ok(poses)
}

/// Runways keyed by id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunwayDb {
    runways: BTreeMap<String, RunwayGeometry>,
}

impl RunwayDb {
    pub fn new(runways: impl IntoIterator<Item = RunwayGeometry>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for rw in runways {
            rw.validate()?;
            if map.contains_key(&rw.id) {
                return Err(Error::Config(format!("runway {} listed twice", rw.id)));
            }
            map.insert(rw.id.clone(), rw);
        }
        Ok(Self { runways: map })
    }

    pub fn get(&self, id: &str) -> Option<&RunwayGeometry> {
        self.runways.get(id)
    }

    pub fn require(&self, id: &str) -> Result<&RunwayGeometry> {
        self.get(id).ok_or_else(|| Error::Config(format!("unknown runway {id}")))
    }

    pub fn iter(&self) -> impl Iterator<Item = &RunwayGeometry> {
        self.runways.values()
    }

    pub fn len(&self) -> usize {
        self.runways.len()
    }

    pub fn is_empty(&self) -> bool {
        self.runways.is_empty()
    }

    /// JSON array of runway objects.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let runways: Vec<RunwayGeometry> = serde_json::from_str(&text)?;
        Self::new(runways)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let list: Vec<&RunwayGeometry> = self.iter().collect();
        let mut text = serde_json::to_string_pretty(&list)?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{project_runway, slant_distance, CameraModel, GeoRef};
    use crate::odd_spec::ApproachCone;
    use crate::sampling::{generate_trajectory, ScenarioKind};

    fn synthetic(id: &str, pose: Pose) -> DatasetRecord {
        let cam = CameraModel::centered(1400.0, 2448, 2048);
        let rw = RunwayGeometry::new("R1", "AP1", 3000.0, 45.0);
        DatasetRecord {
            image_id: id.into(),
            source: Source::Synthetic,
            airport_id: "AP1".into(),
            runway_id: "R1".into(),
            label: project_runway(&pose, &rw, &cam, 5.0).unwrap(),
            pose: Some(pose),
            slant_distance_m: Some(slant_distance(&to_cartesian(&pose).unwrap())),
            time_to_landing_s: None,
            image_size: (2448, 2048),
            concepts: vec![ConceptTag::new("piano", ConceptLevel::Primary)],
            extra: BTreeMap::new(),
        }
    }

    fn real(id: &str) -> DatasetRecord {
        let mut r = synthetic(id, Pose::new(2000.0, 1.0, -3.0, 2.0, -3.0, 1.0));
        r.source = Source::Real;
        r.pose = None;
        r.slant_distance_m = None;
        r.time_to_landing_s = Some(42.5);
        r.concepts.clear();
        r.extra.insert("video".into(), "clip-7".into());
        r
    }

    #[test]
    fn schema_rules() {
        let ok = synthetic("a", Pose::new(2000.0, 0.0, -3.0, 0.0, -3.0, 0.0));
        assert!(ok.check_schema().is_ok());
        let mut r = ok.clone();
        r.slant_distance_m = None;
        assert_eq!(r.check_schema().unwrap_err(), "missing slant_distance for synthetic");
        let mut r = real("b");
        assert!(r.check_schema().is_ok());
        r.time_to_landing_s = None;
        assert_eq!(r.check_schema().unwrap_err(), "missing time_to_landing for real");
        let mut r = real("c");
        r.pose = Some(Pose::new(2000.0, 0.0, -3.0, 0.0, -3.0, 0.0));
        assert_eq!(r.check_schema().unwrap_err(), "pose present for real");
        let mut r = ok;
        r.label.corners[2].u = 5000.0;
        assert!(r.check_schema().unwrap_err().contains("outside image bounds"));
    }

    #[test]
    fn csv_and_json_round_trip_mixed_split() {
        let dir = tempfile::tempdir().unwrap();
        let records = vec![
            synthetic("s1", Pose::new(2000.0, 0.5, -3.0, 1.0, -3.0, 2.0)),
            real("r1"),
            synthetic("s2", Pose::new(4000.0, -2.0, -2.5, -4.0, -1.0, -6.0)),
        ];
        for format in [DataFormat::Csv, DataFormat::Json] {
            let path = dir.path().join(format!("labels.{format:?}"));
            write_labels(&records, &path, format).unwrap();
            let loaded = load_records(&path, format, SplitName::Test).unwrap();
            assert!(loaded.rejections.is_empty(), "{:?}", loaded.rejections);
            assert_eq!(loaded.rows_read, 3);
            assert_eq!(loaded.split.records, records);
        }
        let text = std::fs::read_to_string(dir.path().join("labels.Csv")).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(CSV_SCHEMA_COMMENT));
        assert!(lines.next().unwrap().starts_with(&LABEL_COLUMNS.join(",")));
        // The real row leaves slant distance and pose cells empty.
        let real_row = text.lines().find(|l| l.starts_with("r1,")).unwrap();
        let cells: Vec<&str> = real_row.split(',').collect();
        assert_eq!(cells[18], "");
        assert_eq!(cells[19], "42.5");
        assert!(cells[20..26].iter().all(|c| c.is_empty()));
    }

    #[test]
    fn empty_split_writes_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        write_labels(&[], &path, DataFormat::Csv).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap().lines().count(), 2);
        let loaded = load_records(&path, DataFormat::Csv, SplitName::Train).unwrap();
        assert!(loaded.split.is_empty());
        assert_eq!(loaded.rows_read, 0);
    }

    #[test]
    fn invalid_rows_are_rejected_with_reasons() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("labels.csv");
        let records: Vec<DatasetRecord> =
            (0..4).map(|i| synthetic(&format!("s{i}"), Pose::new(1500.0 + 300.0 * i as f64, 0.0, -3.0, 0.0, -3.0, 0.0))).collect();
        write_labels(&records, &path, DataFormat::Csv).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
        // Blank slant_distance (column 18) on row 2.
        let mut cells: Vec<String> = lines[3].split(',').map(str::to_string).collect();
        cells[18].clear();
        lines[3] = cells.join(",");
        std::fs::write(&path, lines.join("\n") + "\n").unwrap();
        let loaded = load_records(&path, DataFormat::Csv, SplitName::Train).unwrap();
        assert_eq!(loaded.rows_read, 4);
        assert_eq!(loaded.split.len(), 3);
        assert_eq!(loaded.rejections.len(), 1);
        assert_eq!(loaded.rejections[0].row, 2);
        assert_eq!(loaded.rejections[0].reason, "missing slant_distance for synthetic");
        assert_eq!(loaded.rejections[0].image_id.as_deref(), Some("s1"));
        assert_eq!(loaded.split.len() + loaded.rejections.len(), loaded.rows_read);
    }

    #[test]
    fn mostly_invalid_file_is_a_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("labels.csv");
        let mut records: Vec<DatasetRecord> =
            (0..3).map(|i| synthetic(&format!("s{i}"), Pose::new(2000.0, 0.0, -3.0, 0.0, -3.0, 0.0))).collect();
        for r in records.iter_mut().take(2) {
            r.slant_distance_m = None;
        }
        write_labels(&records, &path, DataFormat::Csv).unwrap();
        assert!(matches!(load_records(&path, DataFormat::Csv, SplitName::Train), Err(Error::Format { .. })));
        assert!(matches!(
            load_records(dir.path().join("missing.csv"), DataFormat::Csv, SplitName::Train),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn inconsistent_normalized_corner_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("labels.json");
        let records = vec![
            synthetic("a", Pose::new(2000.0, 0.0, -3.0, 0.0, -3.0, 0.0)),
            synthetic("b", Pose::new(2500.0, 0.0, -3.0, 0.0, -3.0, 0.0)),
            synthetic("c", Pose::new(3000.0, 0.0, -3.0, 0.0, -3.0, 0.0)),
        ];
        write_labels(&records, &path, DataFormat::Json).unwrap();
        let mut doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        doc["records"][1]["corners_normalized"][0][0] = serde_json::json!(0.9);
        std::fs::write(&path, doc.to_string()).unwrap();
        let loaded = load_records(&path, DataFormat::Json, SplitName::Train).unwrap();
        assert_eq!(loaded.split.len(), 2);
        assert!(loaded.rejections[0].reason.contains("normalized x1"));
    }

    #[test]
    fn split_disjointness() {
        let a = DatasetSplit::new(SplitName::Train, vec![synthetic("x", Pose::new(2000.0, 0.0, -3.0, 0.0, -3.0, 0.0))]);
        let b = DatasetSplit::new(SplitName::Test, vec![real("x"), real("y")]);
        match check_disjoint(&a, &b) {
            Err(Error::SplitIntegrity(ids)) => assert_eq!(ids, vec!["x".to_string()]),
            other => panic!("{other:?}"),
        }
        let c = DatasetSplit::new(SplitName::Test, vec![real("y")]);
        assert!(check_disjoint(&a, &c).is_ok());
    }

    fn georeferenced_runway() -> RunwayGeometry {
        RunwayGeometry::new("LFBO-14R", "LFBO", 3500.0, 45.0).with_georef(GeoRef {
            latitude_deg: 43.64,
            longitude_deg: 1.35,
            elevation_m: 151.0,
            heading_deg: 143.0,
        })
    }

    #[test]
    fn scenario_file_is_deterministic_and_ordered() {
        let dir = tempfile::tempdir().unwrap();
        let cone = ApproachCone::generic();
        let rw = georeferenced_runway();
        let traj = generate_trajectory(&cone, &Pose::new(5556.0, 0.0, -3.0, 0.0, -4.0, 0.0), 10, ScenarioKind::Nominal).unwrap();
        let a = dir.path().join("a.json");
        let b = dir.path().join("b.json");
        write_scenario(&traj, &rw, &a).unwrap();
        write_scenario(&traj, &rw, &b).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
        let frames = read_scenario(&a).unwrap();
        assert_eq!(frames.len(), 10);
        let georef = rw.georef.unwrap();
        let along: Vec<f64> = frames
            .iter()
            .map(|k| {
                let geo = crate::sampling::GeodeticPosition { latitude_deg: k.lat, longitude_deg: k.lon, altitude_m: k.alt_m };
                crate::sampling::from_geodetic(&geo, &georef)[0]
            })
            .collect();
        assert!(along.windows(2).all(|w| w[1] < w[0]));
        assert!((along[0] - 5556.0).abs() < 1e-6);
        assert!(frames.iter().all(|k| (k.yaw - 143.0).abs() < 1e-12));
    }

    #[test]
    fn scenario_near_aiming_point_matches_georef() {
        let cone = ApproachCone::generic();
        let rw = georeferenced_runway();
        let traj = generate_trajectory(&cone, &Pose::new(1000.0, 0.0, -3.0, 0.0, -3.0, 0.0), 5, ScenarioKind::Nominal).unwrap();
        let last = scenario_keyframes(&traj, &rw).unwrap()[4];
        let g = rw.georef.unwrap();
        // 148 m from the origin is well under 0.01 deg.
        assert!((last.lat - g.latitude_deg).abs() < 0.01 && (last.lon - g.longitude_deg).abs() < 0.01);
        let mut bare = rw.clone();
        bare.georef = None;
        assert!(matches!(write_scenario(&traj, &bare, "/nonexistent/x.json"), Err(Error::Config(_))));
    }

    #[test]
    fn pose_table_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("poses.csv");
        let poses = vec![Pose::new(2000.0, 0.1, -3.3, 1.0, -2.0, 3.0), Pose::new(148.16, -4.0, -2.2, -10.0, -8.0, 10.0)];
        write_poses(&poses, &path).unwrap();
        assert_eq!(read_poses(&path).unwrap(), poses);
    }

    #[test]
    fn runway_db_rejects_duplicates_and_invalid() {
        let rw = RunwayGeometry::new("A", "X", 3000.0, 45.0);
        assert!(RunwayDb::new([rw.clone(), rw.clone()]).is_err());
        assert!(RunwayDb::new([RunwayGeometry::new("B", "X", 200.0, 45.0)]).is_err());
        let db = RunwayDb::new([rw]).unwrap();
        assert!(db.require("A").is_ok());
        assert!(matches!(db.require("Z"), Err(Error::Config(_))));
    }
}
