//! Runway frame, pinhole projection of runway corners and label shape metrics.
//!
//! Runway frame: origin at the Aiming Point, `+X` along the centerline toward
//! the approaching aircraft, `+Y` to the right as seen from the aircraft,
//! `+Z` up. The runway lies in the `z = 0` plane.
//!
//! Body frame (aerospace convention): `x` forward, `y` right, `z` down. At
//! zero attitude the nose points along world `-X`. Attitude is applied as
//! yaw about `z`, then pitch about `y`, then roll about `x`.
//!
//! Camera frame: `Z` along the boresight (body `x`), `X` right (body `y`),
//! `Y` down (body `z`). Pixels: `u` right, `v` down, square pixels.

use nalgebra::{Matrix3, Matrix4, Rotation3, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::odd_spec::Pose;

pub const DEFAULT_AIMING_POINT_OFFSET_M: f64 = 300.0;
pub const DEFAULT_CROP_PX: u32 = 300;

fn default_aiming_offset() -> f64 {
    DEFAULT_AIMING_POINT_OFFSET_M
}

fn default_crop() -> u32 {
    DEFAULT_CROP_PX
}

/// Geodetic anchor of a runway: Aiming Point position and true heading of
/// the landing direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoRef {
    pub latitude_deg: f64,
    pub longitude_deg: f64,
    pub elevation_m: f64,
    pub heading_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunwayGeometry {
    pub id: String,
    pub airport: String,
    pub length_m: f64,
    pub width_m: f64,
    #[serde(default = "default_aiming_offset")]
    pub aiming_point_offset_m: f64,
    #[serde(default)]
    pub georef: Option<GeoRef>,
}

impl RunwayGeometry {
    pub fn new(id: impl Into<String>, airport: impl Into<String>, length_m: f64, width_m: f64) -> Self {
        Self {
            id: id.into(),
            airport: airport.into(),
            length_m,
            width_m,
            aiming_point_offset_m: DEFAULT_AIMING_POINT_OFFSET_M,
            georef: None,
        }
    }

    pub fn with_georef(mut self, georef: GeoRef) -> Self {
        self.georef = Some(georef);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.length_m.is_finite()
            && self.width_m.is_finite()
            && self.length_m > self.aiming_point_offset_m
            && self.aiming_point_offset_m > 0.0
            && self.width_m > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "runway {}: need length > aiming point offset > 0 and width > 0 (length {}, offset {}, width {})",
                self.id, self.length_m, self.aiming_point_offset_m, self.width_m
            )))
        }
    }

    pub fn georef(&self) -> Result<&GeoRef> {
        self.georef
            .as_ref()
            .ok_or_else(|| Error::Config(format!("runway {} has no georeference", self.id)))
    }
}

/// Aircraft position in the runway frame plus attitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CartesianPose {
    pub x_m: f64,
    pub y_m: f64,
    pub z_m: f64,
    pub yaw_deg: f64,
    pub pitch_deg: f64,
    pub roll_deg: f64,
}

impl CartesianPose {
    pub fn position(&self) -> Vector3<f64> {
        Vector3::new(self.x_m, self.y_m, self.z_m)
    }

    pub fn is_finite(&self) -> bool {
        [self.x_m, self.y_m, self.z_m, self.yaw_deg, self.pitch_deg, self.roll_deg]
            .iter()
            .all(|v| v.is_finite())
    }
}

/// Cone parameters to runway-frame position. The lateral and vertical
/// offsets use the along-track distance as baseline.
pub fn to_cartesian(pose: &Pose) -> Result<CartesianPose> {
    if !pose.is_finite() {
        return Err(Error::InvalidInput(format!("non-finite pose field in {pose:?}")));
    }
    if pose.along_track_m <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "along-track distance must be positive, got {}",
            pose.along_track_m
        )));
    }
    if pose.lateral_path_deg.abs() >= 90.0 || pose.vertical_path_deg.abs() >= 90.0 {
        return Err(Error::Domain(format!(
            "path angles must be within (-90, 90) degrees, got lateral {} vertical {}",
            pose.lateral_path_deg, pose.vertical_path_deg
        )));
    }
    let d = pose.along_track_m;
    Ok(CartesianPose {
        x_m: d,
        y_m: d * pose.lateral_path_deg.to_radians().tan(),
        z_m: d * (-pose.vertical_path_deg).to_radians().tan(),
        yaw_deg: pose.yaw_deg,
        pitch_deg: pose.pitch_deg,
        roll_deg: pose.roll_deg,
    })
}

/// Inverse of [`to_cartesian`]. Requires `x_m > 0`.
pub fn to_pose(cpose: &CartesianPose) -> Result<Pose> {
    if !cpose.is_finite() || cpose.x_m <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "cartesian pose must be finite with x > 0, got {cpose:?}"
        )));
    }
    let d = cpose.x_m;
    Ok(Pose {
        along_track_m: d,
        lateral_path_deg: (cpose.y_m / d).atan().to_degrees(),
        vertical_path_deg: -(cpose.z_m / d).atan().to_degrees(),
        yaw_deg: cpose.yaw_deg,
        pitch_deg: cpose.pitch_deg,
        roll_deg: cpose.roll_deg,
    })
}

/// Runway corners in the runway frame, ordered near-left, near-right,
/// far-right, far-left.
pub fn runway_corners_world(rw: &RunwayGeometry) -> [Vector3<f64>; 4] {
    let near = rw.aiming_point_offset_m;
    let far = rw.aiming_point_offset_m - rw.length_m;
    let half = 0.5 * rw.width_m;
    [
        Vector3::new(near, -half, 0.0),
        Vector3::new(near, half, 0.0),
        Vector3::new(far, half, 0.0),
        Vector3::new(far, -half, 0.0),
    ]
}

/// Body-to-world rotation for the given attitude.
pub fn body_to_world(yaw_deg: f64, pitch_deg: f64, roll_deg: f64) -> Rotation3<f64> {
    // Body axes at zero attitude: forward = -X, right = +Y, down = -Z.
    let level = Rotation3::from_matrix_unchecked(Matrix3::from_diagonal(&Vector3::new(-1.0, 1.0, -1.0)));
    let yaw = Rotation3::from_axis_angle(&Vector3::z_axis(), yaw_deg.to_radians());
    let pitch = Rotation3::from_axis_angle(&Vector3::y_axis(), pitch_deg.to_radians());
    let roll = Rotation3::from_axis_angle(&Vector3::x_axis(), roll_deg.to_radians());
    level * yaw * pitch * roll
}

/// Camera-to-body axis permutation: camera X, Y, Z map to body y, z, x.
fn camera_to_body() -> Rotation3<f64> {
    Rotation3::from_matrix_unchecked(Matrix3::new(
        0.0, 0.0, 1.0, //
        1.0, 0.0, 0.0, //
        0.0, 1.0, 0.0,
    ))
}

/// Rotation taking world vectors into the camera frame.
pub fn world_to_camera_rotation(cpose: &CartesianPose) -> Rotation3<f64> {
    (body_to_world(cpose.yaw_deg, cpose.pitch_deg, cpose.roll_deg) * camera_to_body()).inverse()
}

/// 4x4 rigid transform mapping homogeneous runway-frame points into the
/// camera frame.
pub fn extrinsic_matrix(cpose: &CartesianPose) -> Matrix4<f64> {
    let rotation = world_to_camera_rotation(cpose);
    let translation = -(rotation * cpose.position());
    let mut m = Matrix4::identity();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(rotation.matrix());
    m.fixed_view_mut::<3, 1>(0, 3).copy_from(&translation);
    m
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    pub focal_px: f64,
    pub width_px: u32,
    pub height_px: u32,
    pub cx: f64,
    pub cy: f64,
    #[serde(default = "default_crop")]
    pub crop_top_px: u32,
    #[serde(default = "default_crop")]
    pub crop_bottom_px: u32,
}

impl CameraModel {
    /// Principal point at the image center, 300 px crop bands.
    pub fn centered(focal_px: f64, width_px: u32, height_px: u32) -> Self {
        Self {
            focal_px,
            width_px,
            height_px,
            cx: 0.5 * width_px as f64,
            cy: 0.5 * height_px as f64,
            crop_top_px: DEFAULT_CROP_PX,
            crop_bottom_px: DEFAULT_CROP_PX,
        }
    }

    pub fn with_crop(mut self, top: u32, bottom: u32) -> Self {
        self.crop_top_px = top;
        self.crop_bottom_px = bottom;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let w = self.width_px as f64;
        let h = self.height_px as f64;
        if !(self.focal_px.is_finite() && self.focal_px > 0.0) {
            return Err(Error::Config(format!("focal length must be positive, got {}", self.focal_px)));
        }
        if self.crop_top_px as u64 + self.crop_bottom_px as u64 >= self.height_px as u64 {
            return Err(Error::Config(format!(
                "crop bands {}+{} leave no image rows out of {}",
                self.crop_top_px, self.crop_bottom_px, self.height_px
            )));
        }
        if !(self.cx >= 0.0 && self.cx < w && self.cy >= 0.0 && self.cy < h) {
            return Err(Error::Config(format!(
                "principal point ({}, {}) outside {}x{} image",
                self.cx, self.cy, self.width_px, self.height_px
            )));
        }
        Ok(())
    }

    /// Usable rows after removing the crop bands: `[top, bottom)`.
    pub fn crop_rows(&self) -> (f64, f64) {
        (
            self.crop_top_px as f64,
            self.height_px as f64 - self.crop_bottom_px as f64,
        )
    }

    /// Whether a pixel lies in `[0, width) x [crop_top, height - crop_bottom)`.
    pub fn in_cropped_region(&self, p: &PixelPoint) -> bool {
        let (top, bottom) = self.crop_rows();
        p.u >= 0.0 && p.u < self.width_px as f64 && p.v >= top && p.v < bottom
    }
}

/// `[[f, 0, cx], [0, f, cy], [0, 0, 1]]`.
pub fn intrinsic_matrix(cam: &CameraModel) -> Matrix3<f64> {
    Matrix3::new(
        cam.focal_px, 0.0, cam.cx, //
        0.0, cam.focal_px, cam.cy, //
        0.0, 0.0, 1.0,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelPoint {
    pub u: f64,
    pub v: f64,
}

impl PixelPoint {
    pub const fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl BoundingBox {
    pub const fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Self {
        Self { x_min, y_min, x_max, y_max }
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width().max(0.0) * self.height().max(0.0)
    }

    pub fn center(&self) -> PixelPoint {
        PixelPoint::new(0.5 * (self.x_min + self.x_max), 0.5 * (self.y_min + self.y_max))
    }

    pub fn contains(&self, p: &PixelPoint) -> bool {
        p.u >= self.x_min && p.u <= self.x_max && p.v >= self.y_min && p.v <= self.y_max
    }

    /// Tight box around the finite points, `None` if there are none.
    pub fn hull<'a>(points: impl IntoIterator<Item = &'a PixelPoint>) -> Option<Self> {
        points
            .into_iter()
            .filter(|p| p.is_finite())
            .fold(None, |acc: Option<BoundingBox>, p| {
                Some(match acc {
                    None => BoundingBox::new(p.u, p.v, p.u, p.v),
                    Some(b) => BoundingBox::new(b.x_min.min(p.u), b.y_min.min(p.v), b.x_max.max(p.u), b.y_max.max(p.v)),
                })
            })
    }
}

/// Runway label for one image. Corners are ordered near-left, near-right,
/// far-right, far-left. A corner behind the camera is not projectable and
/// its coordinates are NaN.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImageLabel {
    pub corners: [PixelPoint; 4],
    pub bbox: BoundingBox,
    pub margin_px: f64,
    pub fully_visible: bool,
}

impl ImageLabel {
    pub fn projectable(&self) -> [bool; 4] {
        self.corners.map(|c| c.is_finite())
    }

    /// Centroid of the four corners.
    pub fn center(&self) -> PixelPoint {
        let (su, sv) = self.corners.iter().fold((0.0, 0.0), |(su, sv), c| (su + c.u, sv + c.v));
        PixelPoint::new(su / 4.0, sv / 4.0)
    }
}

/// Project a runway-frame point. Returns the pixel and the camera-frame
/// depth; the pixel is meaningless when the depth is not positive.
pub fn project_point(extrinsic: &Matrix4<f64>, intrinsic: &Matrix3<f64>, world: &Vector3<f64>) -> (PixelPoint, f64) {
    let cam = extrinsic * Vector4::new(world.x, world.y, world.z, 1.0);
    let image = intrinsic * cam.xyz();
    (PixelPoint::new(image.x / image.z, image.y / image.z), cam.z)
}

/// Label the runway as seen from `pose`.
pub fn project_runway(pose: &Pose, rw: &RunwayGeometry, cam: &CameraModel, margin_px: f64) -> Result<ImageLabel> {
    if !(margin_px >= 0.0 && margin_px.is_finite()) {
        return Err(Error::InvalidInput(format!("margin must be a finite non-negative value, got {margin_px}")));
    }
    let cpose = to_cartesian(pose)?;
    let extrinsic = extrinsic_matrix(&cpose);
    let intrinsic = intrinsic_matrix(cam);
    let mut fully_visible = true;
    let corners = runway_corners_world(rw).map(|world| {
        let (pixel, depth) = project_point(&extrinsic, &intrinsic, &world);
        if depth > 0.0 {
            fully_visible &= cam.in_cropped_region(&pixel);
            pixel
        } else {
            fully_visible = false;
            PixelPoint::new(f64::NAN, f64::NAN)
        }
    });
    Ok(ImageLabel {
        corners,
        bbox: bounding_box(&corners, margin_px, cam),
        margin_px,
        fully_visible,
    })
}

/// Hull of the finite corners grown by `margin_px` on every side and clamped
/// to the cropped image region. With no finite corner the whole cropped
/// region is returned.
pub fn bounding_box(corners: &[PixelPoint; 4], margin_px: f64, cam: &CameraModel) -> BoundingBox {
    let (top, bottom) = cam.crop_rows();
    let width = cam.width_px as f64;
    match BoundingBox::hull(corners) {
        None => BoundingBox::new(0.0, top, width, bottom),
        Some(b) => BoundingBox::new(
            (b.x_min - margin_px).clamp(0.0, width),
            (b.y_min - margin_px).clamp(top, bottom),
            (b.x_max + margin_px).clamp(0.0, width),
            (b.y_max + margin_px).clamp(top, bottom),
        ),
    }
}

/// Shoelace area of a polygon given in order.
pub fn polygon_area(points: &[PixelPoint]) -> f64 {
    let n = points.len();
    let twice: f64 = (0..n)
        .map(|i| {
            let a = points[i];
            let b = points[(i + 1) % n];
            a.u * b.v - b.u * a.v
        })
        .sum();
    0.5 * twice.abs()
}

fn orientation(a: &PixelPoint, b: &PixelPoint, c: &PixelPoint) -> f64 {
    (b.u - a.u) * (c.v - a.v) - (b.v - a.v) * (c.u - a.u)
}

fn segments_cross(a: &PixelPoint, b: &PixelPoint, c: &PixelPoint, d: &PixelPoint) -> bool {
    let d1 = orientation(c, d, a);
    let d2 = orientation(c, d, b);
    let d3 = orientation(a, b, c);
    let d4 = orientation(a, b, d);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

/// Whether the quadrilateral's opposite edges cross each other.
pub fn is_self_intersecting(corners: &[PixelPoint; 4]) -> bool {
    let [a, b, c, d] = corners;
    segments_cross(a, b, c, d) || segments_cross(b, c, d, a)
}

/// Area of the corner quadrilateral divided by the box area.
pub fn fill_ratio(corners: &[PixelPoint; 4], bbox: &BoundingBox) -> Result<f64> {
    if corners.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidLabel("non-finite corner".into()));
    }
    if is_self_intersecting(corners) {
        return Err(Error::InvalidLabel("self-intersecting corner quadrilateral".into()));
    }
    let box_area = bbox.width() * bbox.height();
    if !(bbox.width() > 0.0 && bbox.height() > 0.0) {
        return Err(Error::DegenerateBbox(format!("box {bbox:?} has no area")));
    }
    let area = polygon_area(corners);
    if area <= 0.0 {
        return Err(Error::InvalidLabel("corner quadrilateral has zero area".into()));
    }
    Ok(area / box_area)
}

/// Height over width.
pub fn aspect_ratio(bbox: &BoundingBox) -> Result<f64> {
    if !(bbox.width() > 0.0) {
        return Err(Error::DegenerateBbox(format!("box {bbox:?} has zero width")));
    }
    Ok(bbox.height() / bbox.width())
}

/// Distance from the camera to the Aiming Point.
pub fn slant_distance(cpose: &CartesianPose) -> f64 {
    cpose.position().norm()
}
