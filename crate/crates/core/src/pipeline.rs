//! Sampling → projection → labelled records.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset_io::{DatasetRecord, Source};
use crate::error::{Error, Result};
use crate::geometry::{project_runway, slant_distance, to_cartesian, CameraModel, RunwayGeometry};
use crate::odd_spec::{ApproachCone, Pose};
use crate::sampling::{sample_cone, SamplingConfig};

/// Label one synthetic image.
pub fn label_pose(
    image_id: String,
    pose: &Pose,
    rw: &RunwayGeometry,
    cam: &CameraModel,
    margin_px: f64,
) -> Result<DatasetRecord> {
    let label = project_runway(pose, rw, cam, margin_px)?;
    Ok(DatasetRecord {
        image_id,
        source: Source::Synthetic,
        airport_id: rw.airport.clone(),
        runway_id: rw.id.clone(),
        label,
        pose: Some(*pose),
        slant_distance_m: Some(slant_distance(&to_cartesian(pose)?)),
        time_to_landing_s: None,
        image_size: (cam.width_px, cam.height_px),
        concepts: Vec::new(),
        extra: Default::default(),
    })
}

/// Label `poses`, assigning runways round-robin by pose index. Image ids are
/// `{prefix}{index:06}`. With `require_visible` records whose runway is not
/// fully visible are dropped.
pub fn label_poses(
    poses: &[Pose],
    runways: &[&RunwayGeometry],
    cam: &CameraModel,
    margin_px: f64,
    require_visible: bool,
    prefix: &str,
) -> Result<Vec<DatasetRecord>> {
    if runways.is_empty() {
        return Err(Error::Config("no runway to label against".into()));
    }
    cam.validate()?;
    let labelled: Vec<DatasetRecord> = poses
        .par_iter()
        .enumerate()
        .map(|(i, pose)| label_pose(format!("{prefix}{i:06}"), pose, runways[i % runways.len()], cam, margin_px))
        .collect::<Result<_>>()?;
    Ok(labelled
        .into_iter()
        .filter(|r| !require_visible || r.label.fully_visible)
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisConfig {
    /// Number of fully visible records to produce.
    pub count: usize,
    pub seed: u64,
    pub margin_px: f64,
    pub id_prefix: String,
}

/// Sample the cone until `cfg.count` fully visible labels are collected.
///
/// Poses are drawn with the counter-based sampler, so the result is the
/// first `count` visible records of one fixed pose sequence.
pub fn synthesize(
    cone: &ApproachCone,
    runways: &[&RunwayGeometry],
    cam: &CameraModel,
    cfg: &SynthesisConfig,
) -> Result<Vec<DatasetRecord>> {
    if cfg.count == 0 {
        return Err(Error::InvalidInput("synthesis count must be at least 1".into()));
    }
    let mut draws = cfg.count + cfg.count / 2;
    loop {
        let poses = sample_cone(cone, &SamplingConfig::uniform(draws, cfg.seed))?;
        let mut records = label_poses(&poses, runways, cam, cfg.margin_px, true, &cfg.id_prefix)?;
        if records.len() >= cfg.count {
            records.truncate(cfg.count);
            return Ok(records);
        }
        if draws > 64 * cfg.count {
            return Err(Error::Config(format!(
                "only {} of {draws} sampled poses give a fully visible runway",
                records.len()
            )));
        }
        draws *= 2;
    }
}
