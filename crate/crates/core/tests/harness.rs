use std::path::PathBuf;

use groundsense::harness::emit::{self, Format, TIMESERIES_HEADER};
use groundsense::harness::scenario::EventSpec;
use groundsense::harness::{self, RunLog};
use groundsense::Error;
use sha2::{Digest, Sha256};

fn preset_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("presets")
        .join(format!("{name}.toml"))
}

fn run(name: &str) -> RunLog {
    harness::run(&harness::preset(name).unwrap()).unwrap()
}

#[test]
fn preset_files_load_from_disk() {
    for name in harness::preset_names() {
        let s = harness::load_scenario(&preset_path(name)).unwrap();
        assert_eq!(s, harness::preset(name).unwrap());
    }
    let a = harness::load_scenario(&preset_path("static-a")).unwrap();
    assert!(matches!(a.events[..], [EventSpec::Damp { time_s, .. }] if time_s == 10.0));
    let b = harness::load_scenario(&preset_path("static-b")).unwrap();
    assert!(
        matches!(b.events[..], [EventSpec::Deposit { time_s, volume_ml, .. }] if time_s == 10.0 && volume_ml == 20.0)
    );
}

#[test]
fn invalid_fraction_file_names_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    let text = std::fs::read_to_string(preset_path("static-a"))
        .unwrap()
        .replace("water_fraction = 0.05", "water_fraction = 1.5");
    std::fs::write(&path, text).unwrap();
    match harness::load_scenario(&path) {
        Err(Error::Validation { field, .. }) => {
            assert!(field.ends_with("water_fraction"), "{field}")
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn missing_file_is_io_error_with_path() {
    let err = harness::load_scenario(std::path::Path::new("/nonexistent/x.toml")).unwrap_err();
    assert!(matches!(err, Error::Io { .. }));
    assert!(err.to_string().contains("/nonexistent/x.toml"));
}

#[test]
fn syntax_error_reports_position() {
    let err = harness::parse_scenario("name = \"x\"\nduration_s = = 3\n", "mem").unwrap_err();
    match err {
        Error::Parse { line, column, .. } => assert_eq!((line, column > 0), (2, true)),
        other => panic!("{other:?}"),
    }
}

#[test]
fn log_invariants_hold_for_all_presets() {
    for name in harness::preset_names() {
        let s = harness::preset(name).unwrap();
        let started = std::time::Instant::now();
        let log = harness::run(&s).unwrap();
        assert!(started.elapsed().as_secs_f64() < 60.0, "{name} too slow");
        let expected = s.duration_s * s.chirp.measurement_rate;
        assert!((log.records.len() as f64 - expected).abs() <= 1.0, "{name}");
        assert!(log.records.windows(2).all(|w| w[1].t > w[0].t), "{name}");
        assert!(log.trace.windows(2).all(|w| w[1].t > w[0].t), "{name}");
        assert_eq!(log.timing.len(), log.records.len());
        assert!(log.baseline.is_some());
    }
}

#[test]
fn dry_transit_stays_within_three_sigma() {
    let log = run("dynamic-dry");
    let amps: Vec<f64> = log.records.iter().map(|r| r.amplitude_db).collect();
    let m = amps.iter().sum::<f64>() / amps.len() as f64;
    let sd = (amps.iter().map(|a| (a - m).powi(2)).sum::<f64>() / (amps.len() - 1) as f64).sqrt();
    assert!(amps.iter().all(|a| (a - m).abs() <= 3.0 * sd));
    assert!(log.records.iter().all(|r| !r.hazard));
    assert!(log.goal_reached);
}

#[test]
fn post_event_amplitude_ordering() {
    // Samples aimed at terrain the wet preset wets; the same poses in every run.
    let wet = run("dynamic-wet");
    let zone: Vec<usize> = wet
        .records
        .iter()
        .enumerate()
        .filter(|(_, r)| {
            let (c, row) = wet
                .terrain
                .cell_of(r.ground_point.0, r.ground_point.1)
                .unwrap();
            wet.terrain.water_fraction(c, row) > 0.0
        })
        .map(|(i, _)| i)
        .collect();
    assert!(!zone.is_empty());
    let mean = |log: &RunLog| {
        zone.iter()
            .map(|&i| log.records[i].amplitude_db)
            .sum::<f64>()
            / zone.len() as f64
    };
    let (dry, damp) = (run("dynamic-dry"), run("dynamic-damp"));
    assert!(mean(&dry) < mean(&damp) && mean(&damp) < mean(&wet));
}

#[test]
fn runs_are_deterministic_and_seed_sensitive() {
    let s = harness::preset("dynamic-wet").unwrap();
    let (a, b) = (harness::run(&s).unwrap(), harness::run(&s).unwrap());
    assert_eq!(a.records, b.records);
    assert_eq!(a.trace, b.trace);
    assert_eq!(a.final_costmap, b.final_costmap);
    let mut other = s.clone();
    other.rng_seed += 1;
    assert_ne!(harness::run(&other).unwrap().records, a.records);
}

#[test]
fn hazard_appears_on_costmap() {
    let log = run("dynamic-wet");
    let hit = log.records.iter().find(|r| r.hazard).unwrap();
    let (c, r) = log
        .final_costmap
        .cell_of(hit.ground_point.0, hit.ground_point.1)
        .unwrap();
    assert_eq!(log.final_costmap.get(c, r), Some(255));
}

fn sha(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[test]
fn emit_empty_formats_writes_manifest_only() {
    let log = run("static-a");
    let dir = tempfile::tempdir().unwrap();
    let m = emit::emit(&log, dir.path(), &[]).unwrap();
    assert!(m.files.is_empty());
    let names: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    assert_eq!(names, vec![std::ffi::OsString::from("manifest.json")]);
}

#[test]
fn emit_csv_and_plots() {
    let log = run("navigate-avoid");
    let dir = tempfile::tempdir().unwrap();
    let m = emit::emit(&log, dir.path(), &[Format::Csv, Format::Plots]).unwrap();
    let ts = std::fs::read_to_string(dir.path().join("timeseries.csv")).unwrap();
    assert_eq!(ts.lines().next(), Some(TIMESERIES_HEADER));
    assert_eq!(ts.lines().count(), log.records.len() + 1);
    for name in [
        "path.csv",
        "pose.csv",
        "costmap_000.csv",
        "costmap_final.csv",
        "amplitude.png",
        "phase.png",
        "costmap.png",
    ] {
        assert!(m.files.iter().any(|f| f.name == name), "{name} missing");
    }
    let path = std::fs::read_to_string(dir.path().join("path.csv")).unwrap();
    assert_eq!(path.lines().next(), Some("index,x,y,cell_cost"));
    for f in &m.files {
        let bytes = std::fs::read(dir.path().join(&f.name)).unwrap();
        assert_eq!(sha(&bytes), f.sha256, "{}", f.name);
        assert_eq!(bytes.len() as u64, f.bytes);
    }
    let on_disk: emit::Manifest =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(on_disk, m);

    let again = tempfile::tempdir().unwrap();
    assert_eq!(
        emit::emit(&log, again.path(), &[Format::Csv, Format::Plots]).unwrap(),
        m
    );
}

#[test]
fn emit_reports_unwritable_path() {
    let log = run("static-a");
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, b"x").unwrap();
    let err = emit::emit(&log, &blocker.join("sub"), &[Format::Csv]).unwrap_err();
    assert!(err.to_string().contains("file"), "{err}");
}

#[test]
fn format_parsing() {
    assert_eq!("csv".parse::<Format>().unwrap(), Format::Csv);
    assert_eq!(" plots".parse::<Format>().unwrap(), Format::Plots);
    assert!("gif".parse::<Format>().is_err());
}
