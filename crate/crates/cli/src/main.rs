mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use log::{info, warn};
use odd_forge::dataset_io::{load_records, read_poses, write_labels, write_poses, write_scenario, DataFormat, RunwayDb, SplitName};
use odd_forge::dqr_verify::{run_all, Verdict};
use odd_forge::pipeline::label_poses;
use odd_forge::sampling::{generate_trajectory, sample_cone, SamplingConfig, ScenarioKind};
use odd_forge::{ConeParameter, OddSpec, RunwayGeometry};

use config::{pick, FormatArg, RunConfig};

const THREADS_ENV: &str = "ODD_FORGE_THREADS";

/// Executable ODD toolkit: validate specs, sample the approach cone, label
/// runway corners, export scenarios and verify dataset quality.
///
/// Exit codes: 0 success or DQR pass, 1 violations or DQR fail,
/// 2 configuration or input error. Set ODD_FORGE_THREADS to cap parallelism.
#[derive(Parser, Debug)]
#[command(name = "odd-forge", version, about)]
struct Cli {
    /// JSON run configuration; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check an ODD specification and its refinement lineage.
    Validate {
        /// ODD specification JSON.
        #[arg(long)]
        spec: Option<PathBuf>,
    },
    /// Draw poses uniformly from the approach cone into `poses.csv`.
    Sample {
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Number of poses (at least 1).
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Stratify with this many bins per cone parameter instead of
        /// sampling uniformly.
        #[arg(long)]
        strata: Option<usize>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Project runway corners for each pose into `labels.csv` or `labels.json`.
    Label {
        /// Pose CSV as written by `sample`.
        #[arg(long)]
        poses: PathBuf,
        #[arg(long)]
        runway_db: Option<PathBuf>,
        /// Label every pose against this runway; by default runways are
        /// assigned round-robin across the database.
        #[arg(long)]
        runway_id: Option<String>,
        /// Camera model JSON.
        #[arg(long)]
        camera: Option<PathBuf>,
        /// Bounding-box margin in pixels.
        #[arg(long)]
        margin_px: Option<f64>,
        /// Drop records whose runway is not fully inside the cropped image.
        #[arg(long)]
        require_visible: bool,
        /// Prefix for generated image ids.
        #[arg(long, default_value = "syn-")]
        id_prefix: String,
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Generate an approach trajectory and export keyframes to `scenario.json`.
    Scenario {
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        runway_db: Option<PathBuf>,
        #[arg(long)]
        runway_id: String,
        #[arg(long, value_enum, default_value_t = KindArg::Nominal)]
        kind: KindArg,
        /// Crab angle held before de-crab, degrees.
        #[arg(long, default_value_t = 5.0)]
        crab_deg: f64,
        /// Along-track distance where de-crab starts, metres.
        #[arg(long, default_value_t = 600.0)]
        decrab_start_m: f64,
        #[arg(long, default_value_t = 10)]
        frames: usize,
        /// Entry along-track distance, metres; defaults to the cone maximum.
        #[arg(long)]
        entry_along_track_m: Option<f64>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Run the data quality checks and write `report.json` plus histogram CSVs.
    Verify {
        /// Training split (CSV or JSON, by extension unless --format is set).
        #[arg(long)]
        train: PathBuf,
        /// Test split.
        #[arg(long)]
        test: PathBuf,
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        runway_db: Option<PathBuf>,
        #[arg(long)]
        camera: Option<PathBuf>,
        /// Threshold overrides JSON with optional `completeness`,
        /// `representativeness` and `accuracy` sections.
        #[arg(long)]
        thresholds: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KindArg {
    Nominal,
    Crab,
}

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = value.parse().ok().filter(|&n| n > 0).with_context(|| format!("{THREADS_ENV} must be a positive integer, got {value:?}"))?;
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    Ok(())
}

fn load_spec(path: &Path) -> Result<OddSpec> {
    OddSpec::load(path).with_context(|| format!("cannot load spec {}", path.display()))
}

/// Spec that must be free of violations before use.
fn load_valid_spec(path: &Path) -> Result<OddSpec> {
    let spec = load_spec(path)?;
    let violations = spec.validate();
    if let Some(first) = violations.first() {
        bail!("spec {} is invalid ({} violations; first: {first})", path.display(), violations.len());
    }
    Ok(spec)
}

fn out_path(out_dir: &Path, name: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(out_dir).with_context(|| format!("cannot create {}", out_dir.display()))?;
    Ok(out_dir.join(name))
}

fn cmd_validate(cfg: RunConfig, spec: Option<PathBuf>) -> Result<ExitCode> {
    let path = pick(spec, cfg.spec, "spec")?;
    let spec = load_spec(&path)?;
    let violations = spec.validate();
    if violations.is_empty() {
        let restrictions = if spec.restrictions.is_empty() { "none".to_string() } else { spec.restrictions.join(", ") };
        println!("ok: ODD v{} ({} parameters; restrictions: {restrictions})", spec.version, spec.parameters.len());
        return Ok(ExitCode::SUCCESS);
    }
    for v in &violations {
        println!("violation: {v}");
    }
    println!("{} violation(s) in {}", violations.len(), path.display());
    Ok(ExitCode::from(1))
}

fn cmd_sample(
    cfg: RunConfig,
    spec: Option<PathBuf>,
    count: Option<usize>,
    seed: Option<u64>,
    strata: Option<usize>,
    out_dir: Option<PathBuf>,
) -> Result<ExitCode> {
    let spec = load_valid_spec(&pick(spec, cfg.spec, "spec")?)?;
    let count = pick(count, cfg.count, "count")?;
    if count == 0 {
        bail!("--count must be at least 1");
    }
    let seed = seed.or(cfg.seed).unwrap_or(0);
    let sampling = match strata {
        Some(b) => SamplingConfig::stratified(count, seed, [b; 6]),
        None => SamplingConfig::uniform(count, seed),
    };
    let poses = sample_cone(&spec.cone()?, &sampling)?;
    let path = out_path(&out_dir.or(cfg.out_dir).unwrap_or_else(|| ".".into()), "poses.csv")?;
    write_poses(&poses, &path)?;
    println!("wrote {} poses to {}", poses.len(), path.display());
    Ok(ExitCode::SUCCESS)
}

#[allow(clippy::too_many_arguments)]
fn cmd_label(
    cfg: RunConfig,
    poses: PathBuf,
    runway_db: Option<PathBuf>,
    runway_id: Option<String>,
    camera: Option<PathBuf>,
    margin_px: Option<f64>,
    require_visible: bool,
    id_prefix: String,
    format: Option<FormatArg>,
    out_dir: Option<PathBuf>,
) -> Result<ExitCode> {
    let db = RunwayDb::load(pick(runway_db, cfg.runway_db, "runway-db")?)?;
    let cam = config::camera(camera.as_deref(), cfg.camera)?;
    let runways: Vec<&RunwayGeometry> = match &runway_id {
        Some(id) => vec![db.require(id)?],
        None => db.iter().collect(),
    };
    let margin = margin_px.or(cfg.margin_px).unwrap_or(0.0);
    if !(margin >= 0.0 && margin.is_finite()) {
        bail!("--margin-px must be non-negative, got {margin}");
    }
    let require_visible = require_visible || cfg.require_visible.unwrap_or(false);
    let poses = read_poses(&poses).with_context(|| format!("cannot read poses {}", poses.display()))?;
    let all = label_poses(&poses, &runways, &cam, margin, false, &id_prefix)?;
    let hidden = all.iter().filter(|r| !r.label.fully_visible).count();
    let records: Vec<_> = all.into_iter().filter(|r| !require_visible || r.label.fully_visible).collect();
    let format: DataFormat = format.or(cfg.format).unwrap_or(FormatArg::Csv).into();
    let name = match format {
        DataFormat::Csv => "labels.csv",
        DataFormat::Json => "labels.json",
    };
    let path = out_path(&out_dir.or(cfg.out_dir).unwrap_or_else(|| ".".into()), name)?;
    write_labels(&records, &path, format)?;
    if hidden > 0 {
        let action = if require_visible { "dropped" } else { "flagged fully_visible=false" };
        warn!("{hidden} of {} poses do not show the whole runway ({action})", poses.len());
    }
    println!(
        "wrote {} labels to {} ({hidden} not fully visible{})",
        records.len(),
        path.display(),
        if require_visible { ", dropped" } else { "" }
    );
    Ok(ExitCode::SUCCESS)
}

#[allow(clippy::too_many_arguments)]
fn cmd_scenario(
    cfg: RunConfig,
    spec: Option<PathBuf>,
    runway_db: Option<PathBuf>,
    runway_id: String,
    kind: KindArg,
    crab_deg: f64,
    decrab_start_m: f64,
    frames: usize,
    entry_along_track_m: Option<f64>,
    out_dir: Option<PathBuf>,
) -> Result<ExitCode> {
    let spec = load_valid_spec(&pick(spec, cfg.spec, "spec")?)?;
    let db = RunwayDb::load(pick(runway_db, cfg.runway_db, "runway-db")?)?;
    let runway = db.require(&runway_id)?;
    runway.georef()?;
    let cone = spec.cone()?;
    let mut entry = cone.center();
    entry.set(ConeParameter::AlongTrack, entry_along_track_m.unwrap_or(cone.along_track_m.max));
    let kind = match kind {
        KindArg::Nominal => ScenarioKind::Nominal,
        KindArg::Crab => ScenarioKind::CrabDecrab { crab_deg, decrab_start_m },
    };
    let trajectory = generate_trajectory(&cone, &entry, frames, kind)?;
    let path = out_path(&out_dir.or(cfg.out_dir).unwrap_or_else(|| ".".into()), "scenario.json")?;
    write_scenario(&trajectory, runway, &path)?;
    println!("wrote {} keyframes to {}", trajectory.frames.len(), path.display());
    Ok(ExitCode::SUCCESS)
}

fn load_split(path: &Path, format: Option<FormatArg>, name: SplitName) -> Result<odd_forge::dataset_io::DatasetSplit> {
    let format = format.map(DataFormat::from).unwrap_or_else(|| DataFormat::from_path(path));
    let outcome = load_records(path, format, name).with_context(|| format!("cannot load {}", path.display()))?;
    for r in outcome.rejections.iter().take(10) {
        warn!("{}: row {} rejected: {}", path.display(), r.row, r.reason);
    }
    if !outcome.rejections.is_empty() {
        warn!("{}: {} of {} rows rejected", path.display(), outcome.rejections.len(), outcome.rows_read);
    }
    if outcome.split.is_empty() {
        bail!("{} contains no records", path.display());
    }
    info!("{}: {} records", path.display(), outcome.split.len());
    Ok(outcome.split)
}

#[allow(clippy::too_many_arguments)]
fn cmd_verify(
    cfg: RunConfig,
    train: PathBuf,
    test: PathBuf,
    spec: Option<PathBuf>,
    runway_db: Option<PathBuf>,
    camera: Option<PathBuf>,
    thresholds: Option<PathBuf>,
    format: Option<FormatArg>,
    out_dir: Option<PathBuf>,
) -> Result<ExitCode> {
    let spec = load_valid_spec(&pick(spec, cfg.spec, "spec")?)?;
    let db = RunwayDb::load(pick(runway_db, cfg.runway_db, "runway-db")?)?;
    let cam = config::camera(camera.as_deref(), cfg.camera)?;
    let verify = config::verify_config(thresholds.as_deref(), cfg.thresholds, cam, &spec.cone()?)?;
    let format = format.or(cfg.format);
    let splits = [load_split(&train, format, SplitName::Train)?, load_split(&test, format, SplitName::Test)?];
    let report = run_all(&splits, &spec, &db, &verify)?;
    let out_dir = out_dir.or(cfg.out_dir).unwrap_or_else(|| ".".into());
    report.write(&out_dir)?;
    for result in &report.results {
        let verdict = match result.verdict {
            Verdict::Pass => "pass",
            Verdict::Fail => "FAIL",
            Verdict::Advisory => "advisory",
        };
        let failing = result.failing_metrics();
        if failing.is_empty() {
            println!("{:<20} {verdict}", format!("{:?}", result.requirement).to_lowercase());
        } else {
            println!("{:<20} {verdict} ({})", format!("{:?}", result.requirement).to_lowercase(), failing.join(", "));
        }
    }
    println!("overall: {} (report in {})", if report.passed() { "pass" } else { "FAIL" }, out_dir.display());
    Ok(if report.passed() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn run(cli: Cli) -> Result<ExitCode> {
    configure_threads()?;
    let cfg = RunConfig::load_opt(cli.config.as_deref())?;
    match cli.command {
        Command::Validate { spec } => cmd_validate(cfg, spec),
        Command::Sample { spec, count, seed, strata, out_dir } => cmd_sample(cfg, spec, count, seed, strata, out_dir),
        Command::Label { poses, runway_db, runway_id, camera, margin_px, require_visible, id_prefix, format, out_dir } => {
            cmd_label(cfg, poses, runway_db, runway_id, camera, margin_px, require_visible, id_prefix, format, out_dir)
        }
        Command::Scenario { spec, runway_db, runway_id, kind, crab_deg, decrab_start_m, frames, entry_along_track_m, out_dir } => {
            cmd_scenario(cfg, spec, runway_db, runway_id, kind, crab_deg, decrab_start_m, frames, entry_along_track_m, out_dir)
        }
        Command::Verify { train, test, spec, runway_db, camera, thresholds, format, out_dir } => {
            cmd_verify(cfg, train, test, spec, runway_db, camera, thresholds, format, out_dir)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            // Trajectories leaving the cone are ODD violations, not input errors.
            let violation = err
                .chain()
                .any(|e| matches!(e.downcast_ref::<odd_forge::Error>(), Some(odd_forge::Error::Generation { .. })));
            ExitCode::from(if violation { 1 } else { 2 })
        }
    }
}
