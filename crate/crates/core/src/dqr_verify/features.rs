use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dataset_io::DatasetRecord;
use crate::geometry::{aspect_ratio, fill_ratio, BoundingBox};
use crate::odd_spec::ConeParameter;

/// Per-record quantity compared across splits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Feature {
    /// Corner centroid `u` divided by the image width.
    CenterX,
    /// Corner centroid `v` divided by the image height.
    CenterY,
    AspectRatio,
    FillRatio,
    /// Natural log of the label box area in px².
    BboxAreaLog,
    SlantDistance,
    TimeToLanding,
    Cone(ConeParameter),
}

impl Feature {
    pub const IMAGE: [Feature; 5] =
        [Feature::CenterX, Feature::CenterY, Feature::AspectRatio, Feature::FillRatio, Feature::BboxAreaLog];

    pub fn name(self) -> &'static str {
        match self {
            Feature::CenterX => "center_x",
            Feature::CenterY => "center_y",
            Feature::AspectRatio => "aspect_ratio",
            Feature::FillRatio => "fill_ratio",
            Feature::BboxAreaLog => "bbox_area_log",
            Feature::SlantDistance => "slant_distance",
            Feature::TimeToLanding => "time_to_landing",
            Feature::Cone(p) => p.name(),
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        let fixed = [
            Feature::CenterX,
            Feature::CenterY,
            Feature::AspectRatio,
            Feature::FillRatio,
            Feature::BboxAreaLog,
            Feature::SlantDistance,
            Feature::TimeToLanding,
        ];
        fixed
            .into_iter()
            .find(|f| f.name() == name)
            .or_else(|| ConeParameter::from_name(name).map(Feature::Cone))
    }

    /// Value for `record`, `None` when the record does not carry it.
    pub fn value(self, record: &DatasetRecord) -> Option<f64> {
        let label = &record.label;
        let corners_ok = label.corners.iter().all(|c| c.is_finite());
        let v = match self {
            Feature::CenterX if corners_ok => label.center().u / record.image_size.0 as f64,
            Feature::CenterY if corners_ok => label.center().v / record.image_size.1 as f64,
            Feature::AspectRatio => aspect_ratio(&label.bbox).ok()?,
            Feature::FillRatio if corners_ok => {
                let hull = BoundingBox::hull(&label.corners)?;
                fill_ratio(&label.corners, &hull).ok()?
            }
            Feature::BboxAreaLog if label.bbox.area() > 0.0 => label.bbox.area().ln(),
            Feature::SlantDistance => record.slant_distance_m?,
            Feature::TimeToLanding => record.time_to_landing_s?,
            Feature::Cone(p) => record.pose?.get(p),
            _ => return None,
        };
        v.is_finite().then_some(v)
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl From<Feature> for String {
    fn from(f: Feature) -> Self {
        f.name().to_string()
    }
}

impl TryFrom<String> for Feature {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        Feature::from_name(&s).ok_or_else(|| format!("unknown feature {s:?}"))
    }
}
