//! Writes a run's artifacts and a checksummed manifest.

use std::fmt::Write as _;
use std::path::Path as FsPath;
use std::str::FromStr;

use image::codecs::png::PngEncoder;
use image::{ExtendedColorType, ImageEncoder};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::vehicle::pose_trace_csv;

use super::plot;
use super::sim::RunLog;

pub const TIMESERIES_HEADER: &str = "t_s,x_m,y_m,amp_db,phase_deg,score,hazard";
pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Format {
    Csv,
    Plots,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "csv" => Ok(Format::Csv),
            "plots" => Ok(Format::Plots),
            other => Err(Error::validation(
                "emit",
                format!("unknown format {other:?}; expected csv or plots"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub scenario: String,
    pub files: Vec<ManifestEntry>,
}

/// `x_m, y_m` are the sensor ground point; the chassis pose is in `pose.csv`.
pub fn timeseries_csv(log: &RunLog) -> String {
    let mut out = format!("{TIMESERIES_HEADER}\n");
    for r in &log.records {
        let _ = writeln!(
            out,
            "{:.3},{:.4},{:.4},{:.6},{:.6},{:.6},{}",
            r.t,
            r.ground_point.0,
            r.ground_point.1,
            r.amplitude_db,
            r.phase_deg,
            r.score,
            u8::from(r.hazard)
        );
    }
    out
}

pub fn timing_csv(log: &RunLog) -> String {
    let mut out = String::from("sample,analysis_ms\n");
    for (i, d) in log.timing.iter().enumerate() {
        let _ = writeln!(out, "{i},{:.4}", d.as_secs_f64() * 1e3);
    }
    out
}

fn png_bytes(
    path: &str,
    pixels: &[u8],
    w: u32,
    h: u32,
    color: ExtendedColorType,
) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    PngEncoder::new(&mut buf)
        .write_image(pixels, w, h, color)
        .map_err(|e| Error::Image {
            path: path.into(),
            message: e.to_string(),
        })?;
    Ok(buf)
}

fn render(log: &RunLog) -> Result<Vec<(String, Vec<u8>)>> {
    let t: Vec<f64> = log.records.iter().map(|r| r.t).collect();
    let marks: Vec<bool> = log.records.iter().map(|r| r.hazard).collect();
    let mut out = Vec::new();
    for (name, ys) in [
        (
            "amplitude.png",
            log.records
                .iter()
                .map(|r| r.amplitude_db)
                .collect::<Vec<_>>(),
        ),
        (
            "phase.png",
            log.records.iter().map(|r| r.phase_deg).collect(),
        ),
    ] {
        let img = plot::line_plot(&t, &ys, &marks);
        let (w, h) = img.dimensions();
        out.push((
            name.to_string(),
            png_bytes(name, img.as_raw(), w, h, ExtendedColorType::Rgb8)?,
        ));
    }
    let img = plot::costmap_image(&log.final_costmap);
    let (w, h) = img.dimensions();
    out.push((
        "costmap.png".to_string(),
        png_bytes("costmap.png", img.as_raw(), w, h, ExtendedColorType::L8)?,
    ));
    Ok(out)
}

fn artifacts(log: &RunLog, formats: &[Format]) -> Result<Vec<(String, Vec<u8>)>> {
    let mut files: Vec<(String, Vec<u8>)> = Vec::new();
    if formats.contains(&Format::Csv) {
        files.push(("timeseries.csv".into(), timeseries_csv(log).into_bytes()));
        for snap in &log.snapshots {
            files.push((
                format!("costmap_{:03}.csv", snap.sample),
                snap.layer.to_csv().into_bytes(),
            ));
        }
        files.push((
            "costmap_final.csv".into(),
            log.final_costmap.to_csv().into_bytes(),
        ));
        let path = match &log.path {
            Some(p) => p.to_csv(&log.final_costmap),
            None => "index,x,y,cell_cost\n".to_string(),
        };
        files.push(("path.csv".into(), path.into_bytes()));
        files.push(("pose.csv".into(), pose_trace_csv(&log.trace).into_bytes()));
        files.push(("terrain.csv".into(), log.terrain.to_csv().into_bytes()));
        files.push(("timing.csv".into(), timing_csv(log).into_bytes()));
        if let Some(spec) = &log.spectrum {
            files.push(("spectrum.csv".into(), spec.to_csv().into_bytes()));
        }
    }
    if formats.contains(&Format::Plots) {
        files.extend(render(log)?);
    }
    Ok(files)
}

fn write(dir: &FsPath, name: &str, bytes: &[u8]) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))
}

/// Writes the requested artifacts plus `manifest.json` into `out_dir`,
/// creating it if needed.
pub fn emit(log: &RunLog, out_dir: &FsPath, formats: &[Format]) -> Result<Manifest> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut manifest = Manifest {
        scenario: log.scenario.clone(),
        files: Vec::new(),
    };
    for (name, bytes) in artifacts(log, formats)? {
        write(out_dir, &name, &bytes)?;
        manifest.files.push(ManifestEntry {
            name,
            bytes: bytes.len() as u64,
            sha256: hex::encode(Sha256::digest(&bytes)),
        });
    }
    let json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::Configuration(format!("manifest serialisation: {e}")))?;
    write(out_dir, MANIFEST_NAME, format!("{json}\n").as_bytes())?;
    Ok(manifest)
}
