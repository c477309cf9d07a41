#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use odd_forge::dataset_io::{load_records, write_labels, DataFormat, DatasetRecord, RunwayDb, SplitName};
use odd_forge::{CameraModel, GeoRef, OddSpec, RunwayGeometry};

pub const BIN: &str = env!("CARGO_BIN_EXE_odd-forge");

/// Twelve runways between 1800 m and 2800 m long, 45 m to 60 m wide.
pub fn runways() -> Vec<RunwayGeometry> {
    let dims = [
        (1800.0, 45.0),
        (2000.0, 45.0),
        (2100.0, 45.0),
        (2200.0, 50.0),
        (2400.0, 60.0),
        (2500.0, 60.0),
        (2600.0, 60.0),
        (2700.0, 60.0),
        (1900.0, 45.0),
        (2300.0, 50.0),
        (2800.0, 60.0),
        (2000.0, 50.0),
    ];
    dims.iter()
        .enumerate()
        .map(|(i, &(l, w))| {
            let rw = RunwayGeometry::new(format!("RW{i:02}"), format!("AP{i:02}"), l, w);
            if i == 0 {
                rw.with_georef(GeoRef { latitude_deg: 43.629, longitude_deg: 1.364, elevation_m: 152.0, heading_deg: 143.0 })
            } else {
                rw
            }
        })
        .collect()
}

/// 5 MP sensor, 2000 px focal length, 300 px crop bands.
pub fn camera() -> CameraModel {
    CameraModel::centered(2000.0, 2448, 2048).with_crop(300, 300)
}

pub struct Fixture {
    pub dir: tempfile::TempDir,
}

impl Fixture {
    pub fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        OddSpec::generic().save(dir.path().join("odd_v1.json")).unwrap();
        RunwayDb::new(runways()).unwrap().save(dir.path().join("runways.json")).unwrap();
        std::fs::write(dir.path().join("camera.json"), serde_json::to_string_pretty(&camera()).unwrap()).unwrap();
        Self { dir }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    pub fn run(&self, args: &[&str]) -> Output {
        Command::new(BIN).args(args).current_dir(self.dir.path()).output().expect("binary runs")
    }

    /// `sample` then `label --require-visible`; returns the loaded labels.
    pub fn generate(&self, count: usize, seed: u64, out: &str) -> Vec<DatasetRecord> {
        let seed = seed.to_string();
        let count = count.to_string();
        let o = self.run(&["sample", "--spec", "odd_v1.json", "--count", &count, "--seed", &seed, "--out-dir", out]);
        assert_success(&o);
        let poses = format!("{out}/poses.csv");
        let o = self.run(&[
            "label", "--poses", &poses, "--runway-db", "runways.json", "--camera", "camera.json", "--require-visible",
            "--out-dir", out,
        ]);
        assert_success(&o);
        load_records(self.path(out).join("labels.csv"), DataFormat::Csv, SplitName::Train).unwrap().split.records
    }
}

pub fn write_split(path: &Path, records: &[DatasetRecord]) {
    write_labels(records, path, DataFormat::from_path(path)).unwrap();
}

pub fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub fn assert_success(o: &Output) {
    assert_eq!(code(o), 0, "stdout:\n{}\nstderr:\n{}", stdout(o), stderr(o));
}
