//! Executable Operational Design Domain for vision-based landing.
//!
//! - [`odd_spec`]: the approach cone, restrictions and refinement lineage
//! - [`geometry`]: runway frame, pinhole projection and label shape metrics
//! - [`sampling`]: cone sampling, approach trajectories, geodetic export
//! - [`dataset_io`]: label records, CSV/JSON ingestion and emission
//! - [`dqr_verify`]: data quality requirement checks and compliance reports
//! - [`pipeline`]: end-to-end synthetic dataset generation

pub mod dataset_io;
pub mod dqr_verify;
pub mod error;
pub mod geometry;
pub mod odd_spec;
pub mod pipeline;
pub mod sampling;

pub use error::{Error, Result};
pub use geometry::{BoundingBox, CameraModel, CartesianPose, GeoRef, ImageLabel, PixelPoint, RunwayGeometry};
pub use odd_spec::{ApproachCone, ConeParameter, OddSpec, Pose, Restriction};
