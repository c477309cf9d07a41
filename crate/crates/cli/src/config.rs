//! Run configuration file plus flag overrides.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use odd_forge::dataset_io::DataFormat;
use odd_forge::dqr_verify::{AccuracyConfig, CompletenessConfig, RepresentativenessConfig, VerifyConfig};
use odd_forge::{ApproachCone, CameraModel};
use serde::Deserialize;

/// Either a path to a JSON file or the value inline.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum FileOr<T> {
    Path(PathBuf),
    Inline(T),
}

/// DQR thresholds; every section is optional and falls back to defaults.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    #[serde(default)]
    pub completeness: Option<CompletenessConfig>,
    #[serde(default)]
    pub representativeness: Option<RepresentativenessConfig>,
    #[serde(default)]
    pub accuracy: Option<AccuracyConfig>,
}

/// Contents of a `--config` file. Relative paths resolve against the file's
/// directory.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub spec: Option<PathBuf>,
    pub runway_db: Option<PathBuf>,
    pub camera: Option<FileOr<CameraModel>>,
    pub thresholds: Option<FileOr<Thresholds>>,
    pub seed: Option<u64>,
    pub count: Option<usize>,
    pub margin_px: Option<f64>,
    pub require_visible: Option<bool>,
    pub out_dir: Option<PathBuf>,
    pub format: Option<FormatArg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for DataFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => DataFormat::Csv,
            FormatArg::Json => DataFormat::Json,
        }
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {what} {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("cannot parse {what} {}", path.display()))
}

fn require_file(path: &Path, what: &str) -> Result<()> {
    if !path.is_file() {
        bail!("{what} {} does not exist", path.display());
    }
    Ok(())
}

impl RunConfig {
    /// Load `path`, resolve its relative paths and check that every
    /// referenced file exists.
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg: RunConfig = read_json(path, "config file")?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        cfg.spec.as_mut().map(resolve);
        cfg.runway_db.as_mut().map(resolve);
        cfg.out_dir.as_mut().map(resolve);
        if let Some(FileOr::Path(p)) = cfg.camera.as_mut() {
            resolve(p);
        }
        if let Some(FileOr::Path(p)) = cfg.thresholds.as_mut() {
            resolve(p);
        }
        for (p, what) in [(&cfg.spec, "spec"), (&cfg.runway_db, "runway database")] {
            if let Some(p) = p {
                require_file(p, what)?;
            }
        }
        if let Some(FileOr::Path(p)) = &cfg.camera {
            require_file(p, "camera file")?;
        }
        if let Some(FileOr::Path(p)) = &cfg.thresholds {
            require_file(p, "thresholds file")?;
        }
        Ok(cfg)
    }

    pub fn load_opt(path: Option<&Path>) -> Result<Self> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }
}

/// First of `flag` and `config`, or an error naming the flag.
pub fn pick<T: Clone>(flag: Option<T>, config: Option<T>, name: &str) -> Result<T> {
    match flag.or(config) {
        Some(v) => Ok(v),
        None => bail!("missing --{name} (set it on the command line or in --config)"),
    }
}

pub fn camera(flag: Option<&Path>, config: Option<FileOr<CameraModel>>) -> Result<CameraModel> {
    let cam = match (flag, config) {
        (Some(p), _) => read_json(p, "camera file")?,
        (None, Some(FileOr::Path(p))) => read_json(&p, "camera file")?,
        (None, Some(FileOr::Inline(c))) => c,
        (None, None) => bail!("missing --camera (set it on the command line or in --config)"),
    };
    cam.validate()?;
    Ok(cam)
}

/// Assemble the verification config. Histogram ranges not given explicitly
/// follow the ODD's cone.
pub fn verify_config(
    flag: Option<&Path>,
    config: Option<FileOr<Thresholds>>,
    camera: CameraModel,
    cone: &ApproachCone,
) -> Result<VerifyConfig> {
    let thresholds = match (flag, config) {
        (Some(p), _) => read_json(p, "thresholds file")?,
        (None, Some(FileOr::Path(p))) => read_json(&p, "thresholds file")?,
        (None, Some(FileOr::Inline(t))) => t,
        (None, None) => Thresholds::default(),
    };
    let mut cfg = VerifyConfig::new(camera);
    if let Some(c) = thresholds.completeness {
        cfg.completeness = c;
    }
    let explicit_histograms = thresholds.representativeness.as_ref().is_some_and(|r| r.histograms != RepresentativenessConfig::default().histograms);
    if let Some(r) = thresholds.representativeness {
        cfg.representativeness = r;
    }
    if !explicit_histograms {
        cfg.representativeness.histograms = RepresentativenessConfig::default_histograms(cone);
    }
    if let Some(a) = thresholds.accuracy {
        cfg.accuracy = a;
    }
    cfg.validate()?;
    Ok(cfg)
}
