//! Pose sampling over the approach cone, operational-scenario trajectories
//! and flat-earth geodetic export.
//!
//! Random draws use a counter-based scheme: sample `i` reads from the
//! ChaCha8 stream `i` of the seed, so any index range can be produced
//! independently and in parallel with identical results.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CartesianPose, GeoRef};
use crate::odd_spec::{ApproachCone, ConeParameter, Pose};

pub const DEFAULT_FRAME_INTERVAL_S: f64 = 1.0;

// WGS-84
const SEMI_MAJOR_M: f64 = 6_378_137.0;
const ECCENTRICITY_SQ: f64 = 6.694_379_990_14e-3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SamplingStrategy {
    Uniform,
    /// Bins per cone parameter, in [`ConeParameter::ALL`] order.
    Stratified { bins: [usize; 6] },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingConfig {
    pub count: usize,
    pub seed: u64,
    pub strategy: SamplingStrategy,
}

impl SamplingConfig {
    pub fn uniform(count: usize, seed: u64) -> Self {
        Self { count, seed, strategy: SamplingStrategy::Uniform }
    }

    pub fn stratified(count: usize, seed: u64, bins: [usize; 6]) -> Self {
        Self { count, seed, strategy: SamplingStrategy::Stratified { bins } }
    }

    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::InvalidInput("sample count must be at least 1".into()));
        }
        if let SamplingStrategy::Stratified { bins } = &self.strategy {
            if bins.contains(&0) {
                return Err(Error::InvalidInput(format!("stratified bins must all be >= 1, got {bins:?}")));
            }
        }
        Ok(())
    }
}

/// Six uniform draws in `[0, 1)` for sample `index`.
fn unit_draws(seed: u64, index: u64) -> [f64; 6] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    std::array::from_fn(|_| rng.random::<f64>())
}

fn lerp(iv: crate::odd_spec::Interval, t: f64) -> f64 {
    // Exact at both ends and never outside [min, max].
    (iv.min + t * iv.width()).clamp(iv.min, iv.max)
}

/// Draw `cfg.count` poses from the cone.
///
/// Uniform: every parameter independently uniform over its interval.
/// Stratified: sample `i` falls in cell `i mod cells` (cells enumerated in
/// mixed radix over the parameters, along-track fastest) at a uniformly
/// jittered position inside the cell.
pub fn sample_cone(cone: &ApproachCone, cfg: &SamplingConfig) -> Result<Vec<Pose>> {
    cfg.validate()?;
    if !cone.violations().is_empty() {
        return Err(Error::InvalidInput(format!("invalid cone: {:?}", cone.violations())));
    }
    let poses = (0..cfg.count as u64)
        .into_par_iter()
        .map(|i| {
            let draws = unit_draws(cfg.seed, i);
            let mut pose = cone.center();
            match &cfg.strategy {
                SamplingStrategy::Uniform => {
                    for (k, p) in ConeParameter::ALL.into_iter().enumerate() {
                        pose.set(p, lerp(cone.interval(p), draws[k]));
                    }
                }
                SamplingStrategy::Stratified { bins } => {
                    let cells: u64 = bins.iter().map(|&b| b as u64).product();
                    let mut cell = i % cells;
                    for (k, p) in ConeParameter::ALL.into_iter().enumerate() {
                        let n = bins[k] as u64;
                        let slot = cell % n;
                        cell /= n;
                        let t = (slot as f64 + draws[k]) / n as f64;
                        pose.set(p, lerp(cone.interval(p), t));
                    }
                }
            }
            pose
        })
        .collect();
    Ok(poses)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScenarioKind {
    Nominal,
    /// Hold `crab_deg` of yaw until `decrab_start_m`, then taper linearly to
    /// zero at the cone's minimum along-track distance.
    CrabDecrab { crab_deg: f64, decrab_start_m: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub frames: Vec<Pose>,
    pub frame_interval_s: f64,
    pub kind: ScenarioKind,
}

/// Straight-in approach from `entry` down to the cone's minimum along-track
/// distance. Lateral path, vertical path and pitch are held at their entry
/// values; yaw follows `kind`; roll is held.
pub fn generate_trajectory(cone: &ApproachCone, entry: &Pose, frames: usize, kind: ScenarioKind) -> Result<Trajectory> {
    if frames < 2 {
        return Err(Error::InvalidInput(format!("a trajectory needs at least 2 frames, got {frames}")));
    }
    if !cone.contains(entry)? {
        let parameter = cone.violated_parameters(entry)[0];
        return Err(Error::Generation { frame: 0, parameter: parameter.name().into(), value: entry.get(parameter) });
    }
    let start = entry.along_track_m;
    let end = cone.along_track_m.min;
    if start <= end {
        return Err(Error::InvalidInput(format!(
            "entry along-track {start} m must exceed the cone minimum {end} m"
        )));
    }
    if let ScenarioKind::CrabDecrab { crab_deg, decrab_start_m } = kind {
        if !crab_deg.is_finite() || !(decrab_start_m > end) {
            return Err(Error::InvalidInput(format!(
                "crab {crab_deg} deg with de-crab start {decrab_start_m} m (must exceed {end} m)"
            )));
        }
    }
    let last = (frames - 1) as f64;
    let mut out = Vec::with_capacity(frames);
    for i in 0..frames {
        let d = if i == frames - 1 { end } else { start + (end - start) * i as f64 / last };
        let mut pose = *entry;
        pose.along_track_m = d;
        if let ScenarioKind::CrabDecrab { crab_deg, decrab_start_m } = kind {
            pose.yaw_deg = if d > decrab_start_m {
                crab_deg
            } else {
                crab_deg * (d - end) / (decrab_start_m - end)
            };
        }
        if let Some(&parameter) = cone.violated_parameters(&pose).first() {
            return Err(Error::Generation { frame: i, parameter: parameter.name().into(), value: pose.get(parameter) });
        }
        out.push(pose);
    }
    Ok(Trajectory { frames: out, frame_interval_s: DEFAULT_FRAME_INTERVAL_S, kind })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeodeticPosition {
    pub latitude_deg: f64,
    pub longitude_deg: f64,
    pub altitude_m: f64,
}

/// Meridian and prime-vertical radii of curvature at `latitude_deg`.
fn radii_of_curvature(latitude_deg: f64) -> (f64, f64) {
    let s = latitude_deg.to_radians().sin();
    let w = (1.0 - ECCENTRICITY_SQ * s * s).sqrt();
    let prime_vertical = SEMI_MAJOR_M / w;
    let meridian = SEMI_MAJOR_M * (1.0 - ECCENTRICITY_SQ) / (w * w * w);
    (meridian, prime_vertical)
}

/// Runway-frame offset to local east/north at the Aiming Point.
fn runway_to_east_north(georef: &GeoRef, x: f64, y: f64) -> (f64, f64) {
    // +X points back along the approach (heading + 180), +Y to heading + 90.
    let (s, c) = georef.heading_deg.to_radians().sin_cos();
    let east = -x * s + y * c;
    let north = -x * c - y * s;
    (east, north)
}

/// Flat-earth conversion about the Aiming Point.
pub fn to_geodetic(cpose: &CartesianPose, georef: Option<&GeoRef>) -> Result<GeodeticPosition> {
    let georef = georef.ok_or_else(|| Error::Config("runway has no georeference".into()))?;
    let (east, north) = runway_to_east_north(georef, cpose.x_m, cpose.y_m);
    let (meridian, prime_vertical) = radii_of_curvature(georef.latitude_deg);
    let lat0 = georef.latitude_deg.to_radians();
    Ok(GeodeticPosition {
        latitude_deg: georef.latitude_deg + (north / meridian).to_degrees(),
        longitude_deg: georef.longitude_deg + (east / (prime_vertical * lat0.cos())).to_degrees(),
        altitude_m: georef.elevation_m + cpose.z_m,
    })
}

/// Inverse of [`to_geodetic`]: runway-frame position `(x, y, z)`.
pub fn from_geodetic(position: &GeodeticPosition, georef: &GeoRef) -> [f64; 3] {
    let (meridian, prime_vertical) = radii_of_curvature(georef.latitude_deg);
    let lat0 = georef.latitude_deg.to_radians();
    let north = (position.latitude_deg - georef.latitude_deg).to_radians() * meridian;
    let east = (position.longitude_deg - georef.longitude_deg).to_radians() * prime_vertical * lat0.cos();
    let (s, c) = georef.heading_deg.to_radians().sin_cos();
    // Transpose of the rotation in runway_to_east_north.
    let x = -east * s - north * c;
    let y = east * c - north * s;
    [x, y, position.altitude_m - georef.elevation_m]
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;

    use super::*;
    use crate::geometry::to_cartesian;
    use crate::odd_spec::METERS_PER_NM;

    #[test]
    fn single_sample_is_deterministic() {
        let cone = ApproachCone::generic();
        let a = sample_cone(&cone, &SamplingConfig::uniform(1, 42)).unwrap();
        let b = sample_cone(&cone, &SamplingConfig::uniform(1, 42)).unwrap();
        assert_eq!(a, b);
        let c = sample_cone(&cone, &SamplingConfig::uniform(1, 43)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn prefix_is_independent_of_count() {
        let cone = ApproachCone::generic();
        let short = sample_cone(&cone, &SamplingConfig::uniform(10, 9)).unwrap();
        let long = sample_cone(&cone, &SamplingConfig::uniform(100, 9)).unwrap();
        assert_eq!(&long[..10], &short[..]);
    }

    #[test]
    fn uniform_extremes_approach_bounds() {
        // With n = 1e5 the expected gap between the extreme sample and the
        // bound is width / (n + 1), so 0.1% of the width is ~100 gaps.
        let cone = ApproachCone::generic();
        let poses = sample_cone(&cone, &SamplingConfig::uniform(100_000, 5)).unwrap();
        for p in ConeParameter::ALL {
            let iv = cone.interval(p);
            let (lo, hi) = poses
                .iter()
                .map(|x| x.get(p))
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
            assert!(lo >= iv.min && hi <= iv.max);
            assert!(lo - iv.min < 1e-3 * iv.width(), "{p}: min {lo}");
            assert!(iv.max - hi < 1e-3 * iv.width(), "{p}: max {hi}");
        }
    }

    #[test]
    fn stratified_fills_every_cell_once() {
        let cone = ApproachCone::generic();
        let poses = sample_cone(&cone, &SamplingConfig::stratified(8, 1, [2, 2, 2, 1, 1, 1])).unwrap();
        let mut cells: Vec<(bool, bool, bool)> = poses
            .iter()
            .map(|p| {
                (
                    p.along_track_m > cone.along_track_m.center(),
                    p.lateral_path_deg > cone.lateral_path_deg.center(),
                    p.vertical_path_deg > cone.vertical_path_deg.center(),
                )
            })
            .collect();
        cells.sort();
        cells.dedup();
        assert_eq!(cells.len(), 8);
        assert!(poses.iter().all(|p| cone.contains(p).unwrap()));
    }

    #[test]
    fn config_validation() {
        let cone = ApproachCone::generic();
        assert!(sample_cone(&cone, &SamplingConfig::uniform(0, 1)).is_err());
        assert!(sample_cone(&cone, &SamplingConfig::stratified(4, 1, [0, 1, 1, 1, 1, 1])).is_err());
    }

    #[test]
    fn nominal_trajectory_interpolates_to_cone_minimum() {
        let cone = ApproachCone::generic();
        let entry = Pose::new(5556.0, 0.0, -3.0, 0.0, -4.0, 0.0);
        let traj = generate_trajectory(&cone, &entry, 10, ScenarioKind::Nominal).unwrap();
        assert_eq!(traj.frames.len(), 10);
        assert_eq!(traj.frames[0].along_track_m, 5556.0);
        assert_eq!(traj.frames[9].along_track_m, 0.08 * METERS_PER_NM);
        let step = (148.16 - 5556.0) / 9.0;
        for (i, f) in traj.frames.iter().enumerate() {
            assert_abs_diff_eq!(f.along_track_m, 5556.0 + step * i as f64, epsilon = 1e-9);
            assert_eq!(f.vertical_path_deg, -3.0);
            assert_eq!(f.yaw_deg, 0.0);
        }
        assert!(traj.frames.windows(2).all(|w| w[1].along_track_m < w[0].along_track_m));
        assert_eq!(traj.frame_interval_s, 1.0);
    }

    #[test]
    fn crab_decrab_profile() {
        let cone = ApproachCone::generic();
        let entry = Pose::new(5556.0, 1.0, -3.0, 0.0, -4.0, 2.0);
        let kind = ScenarioKind::CrabDecrab { crab_deg: 8.0, decrab_start_m: 1000.0 };
        let traj = generate_trajectory(&cone, &entry, 25, kind).unwrap();
        let dmin = cone.along_track_m.min;
        for f in &traj.frames {
            if f.along_track_m > 1000.0 {
                assert_eq!(f.yaw_deg, 8.0);
            } else {
                assert_abs_diff_eq!(f.yaw_deg, 8.0 * (f.along_track_m - dmin) / (1000.0 - dmin), epsilon = 1e-12);
            }
        }
        assert_eq!(traj.frames.last().unwrap().yaw_deg, 0.0);
    }

    #[test]
    fn excessive_crab_fails_on_yaw() {
        let cone = ApproachCone::generic();
        let entry = Pose::new(5556.0, 0.0, -3.0, 0.0, -4.0, 0.0);
        let kind = ScenarioKind::CrabDecrab { crab_deg: 15.0, decrab_start_m: 1000.0 };
        match generate_trajectory(&cone, &entry, 10, kind) {
            Err(Error::Generation { frame, parameter, value }) => {
                assert_eq!(frame, 0);
                assert_eq!(parameter, "yaw");
                assert_eq!(value, 15.0);
            }
            other => panic!("expected generation error, got {other:?}"),
        }
    }

    #[test]
    fn trajectory_entry_outside_cone_fails() {
        let cone = ApproachCone::generic();
        let entry = Pose::new(6000.0, 0.0, -3.0, 0.0, -4.0, 0.0);
        assert!(matches!(
            generate_trajectory(&cone, &entry, 10, ScenarioKind::Nominal),
            Err(Error::Generation { frame: 0, .. })
        ));
        assert!(generate_trajectory(&cone, &cone.center(), 1, ScenarioKind::Nominal).is_err());
    }

    fn georef(lat: f64, heading: f64) -> GeoRef {
        GeoRef { latitude_deg: lat, longitude_deg: 1.37, elevation_m: 150.0, heading_deg: heading }
    }

    #[test]
    fn geodetic_origin_identity() {
        let g = georef(43.6, 143.0);
        let origin = CartesianPose { x_m: 0.0, y_m: 0.0, z_m: 0.0, yaw_deg: 0.0, pitch_deg: 0.0, roll_deg: 0.0 };
        let p = to_geodetic(&origin, Some(&g)).unwrap();
        assert_eq!((p.latitude_deg, p.longitude_deg, p.altitude_m), (43.6, 1.37, 150.0));
    }

    #[test]
    fn one_nautical_mile_south_is_one_arc_minute() {
        // At 45 deg the meridian radius is ~6 367 381 m, where 1852 m spans
        // 0.016665 deg against the nominal 1/60 deg.
        let g = georef(45.0, 0.0);
        let c = CartesianPose { x_m: 1852.0, y_m: 0.0, z_m: 0.0, yaw_deg: 0.0, pitch_deg: 0.0, roll_deg: 0.0 };
        let p = to_geodetic(&c, Some(&g)).unwrap();
        assert_abs_diff_eq!(p.latitude_deg - 45.0, -1.0 / 60.0, epsilon = 1e-5);
        assert_abs_diff_eq!(p.longitude_deg, 1.37, epsilon = 1e-12);
    }

    #[test]
    fn altitude_adds_elevation() {
        let g = georef(10.0, 90.0);
        let c = CartesianPose { x_m: 500.0, y_m: 20.0, z_m: 100.0, yaw_deg: 0.0, pitch_deg: 0.0, roll_deg: 0.0 };
        assert_eq!(to_geodetic(&c, Some(&g)).unwrap().altitude_m, 250.0);
        assert!(matches!(to_geodetic(&c, None), Err(Error::Config(_))));
    }

    #[test]
    fn heading_east_puts_approach_to_the_west() {
        let g = georef(0.0, 90.0);
        let c = to_cartesian(&Pose::new(1000.0, 0.0, -3.0, 0.0, 0.0, 0.0)).unwrap();
        let p = to_geodetic(&c, Some(&g)).unwrap();
        assert!(p.longitude_deg < g.longitude_deg);
        assert_abs_diff_eq!(p.latitude_deg, 0.0, epsilon = 1e-12);
        // Right of the centerline when landing east is south.
        let right = CartesianPose { y_m: 50.0, ..c };
        assert!(to_geodetic(&right, Some(&g)).unwrap().latitude_deg < 0.0);
    }

    #[test]
    fn geodetic_round_trip() {
        let g = georef(-33.9, 151.0);
        for (x, y, z) in [(148.16, -10.0, 7.0), (5556.0, 388.0, 369.0), (2000.0, 0.0, 100.0)] {
            let c = CartesianPose { x_m: x, y_m: y, z_m: z, yaw_deg: 0.0, pitch_deg: 0.0, roll_deg: 0.0 };
            let back = from_geodetic(&to_geodetic(&c, Some(&g)).unwrap(), &g);
            assert_abs_diff_eq!(back[0], x, epsilon = 1e-6);
            assert_abs_diff_eq!(back[1], y, epsilon = 1e-6);
            assert_abs_diff_eq!(back[2], z, epsilon = 1e-6);
        }
    }
}
