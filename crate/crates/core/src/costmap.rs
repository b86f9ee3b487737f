//! Moisture-hazard costmap: baseline calibration, hysteresis classification of
//! radar returns, inflation of point observations and layer combination.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmcw::RadarReturn;
use crate::scene::TerrainGrid;
use crate::wrap_deg;

pub const COST_FREE: u8 = 0;
pub const COST_LETHAL: u8 = 255;

const EDGE_EPS: f64 = 1e-9;

/// Gridded cost field; `None` marks a never-observed cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CostmapLayer {
    resolution: f64,
    width: f64,
    height: f64,
    cols: usize,
    rows: usize,
    cells: Vec<Option<u8>>,
}

impl CostmapLayer {
    pub fn new(width: f64, height: f64, resolution: f64) -> Result<Self> {
        Self::filled(width, height, resolution, None)
    }

    pub fn filled(width: f64, height: f64, resolution: f64, cost: Option<u8>) -> Result<Self> {
        for (name, v) in [
            ("width", width),
            ("height", height),
            ("resolution", resolution),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(name, format!("must be > 0, got {v}")));
            }
        }
        let along = |e: f64| ((e / resolution - EDGE_EPS).ceil() as usize).max(1);
        let (cols, rows) = (along(width), along(height));
        Ok(Self {
            resolution,
            width,
            height,
            cols,
            rows,
            cells: vec![cost; cols * rows],
        })
    }

    /// Unknown layer with the terrain grid's geometry.
    pub fn matching(grid: &TerrainGrid) -> Self {
        let (w, h) = grid.extent();
        Self::new(w, h, grid.resolution()).expect("terrain geometry is valid")
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn extent(&self) -> (f64, f64) {
        (self.width, self.height)
    }

    /// `(cols, rows)`.
    pub fn dims(&self) -> (usize, usize) {
        (self.cols, self.rows)
    }

    pub fn get(&self, col: usize, row: usize) -> Option<u8> {
        self.cells[row * self.cols + col]
    }

    pub fn set(&mut self, col: usize, row: usize, cost: Option<u8>) {
        self.cells[row * self.cols + col] = cost;
    }

    /// Cost with unknown read as `unknown_as`.
    pub fn cost_or(&self, col: usize, row: usize, unknown_as: u8) -> u8 {
        self.get(col, row).unwrap_or(unknown_as)
    }

    pub fn cells(&self) -> &[Option<u8>] {
        &self.cells
    }

    pub fn cell_of(&self, x: f64, y: f64) -> Result<(usize, usize)> {
        if !(x >= 0.0 && y >= 0.0 && x <= self.width && y <= self.height) {
            return Err(Error::OutOfBounds {
                x,
                y,
                width: self.width,
                height: self.height,
            });
        }
        let idx = |v: f64, n: usize| {
            let k = (v / self.resolution - EDGE_EPS).ceil() as i64 - 1;
            k.clamp(0, n as i64 - 1) as usize
        };
        Ok((idx(x, self.cols), idx(y, self.rows)))
    }

    pub fn cell_center(&self, col: usize, row: usize) -> (f64, f64) {
        (
            (col as f64 + 0.5) * self.resolution,
            (row as f64 + 0.5) * self.resolution,
        )
    }

    pub fn same_geometry(&self, other: &Self) -> bool {
        self.cols == other.cols
            && self.rows == other.rows
            && (self.resolution - other.resolution).abs() <= 1e-12 * self.resolution
    }

    /// Marks every cell overlapping the rectangle with `cost`.
    pub fn fill_rect(&mut self, x0: f64, y0: f64, x1: f64, y1: f64, cost: u8) -> Result<()> {
        let (c0, r0) = self.cell_of(x0, y0)?;
        let (c1, r1) = self.cell_of(x1, y1)?;
        for r in r0.min(r1)..=r0.max(r1) {
            for c in c0.min(c1)..=c0.max(c1) {
                self.set(c, r, Some(cost));
            }
        }
        Ok(())
    }

    /// Header line then row-major costs; unknown cells are written as `-1`.
    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# extent_x_m={:.6},extent_y_m={:.6},resolution_m={:.6},cols={},rows={}\n",
            self.width, self.height, self.resolution, self.cols, self.rows
        );
        for row in self.cells.chunks(self.cols) {
            let line: Vec<String> = row
                .iter()
                .map(|c| c.map_or_else(|| "-1".to_string(), |v| v.to_string()))
                .collect();
            let _ = writeln!(out, "{}", line.join(","));
        }
        out
    }
}

/// Dry reference statistics of the observables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Baseline {
    pub mean_amplitude_db: f64,
    pub mean_phase_deg: f64,
    pub amplitude_std: f64,
    pub phase_std: f64,
}

/// The two observables of one return.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub amplitude_db: f64,
    pub phase_deg: f64,
}

impl From<&RadarReturn> for Sample {
    fn from(r: &RadarReturn) -> Self {
        Self {
            amplitude_db: r.amplitude_db,
            phase_deg: r.phase_deg,
        }
    }
}

pub const MIN_CALIBRATION_SAMPLES: usize = 3;

/// Mean and sample standard deviation; phase uses the circular mean and the
/// spread of wrapped deviations about it.
pub fn calibrate(samples: &[Sample]) -> Result<Baseline> {
    if samples.len() < MIN_CALIBRATION_SAMPLES {
        return Err(Error::Calibration(format!(
            "need at least {MIN_CALIBRATION_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    let n = samples.len() as f64;
    let mean_amp = samples.iter().map(|s| s.amplitude_db).sum::<f64>() / n;
    let (sin, cos) = samples.iter().fold((0.0, 0.0), |(s, c), x| {
        let r = x.phase_deg.to_radians();
        (s + r.sin(), c + r.cos())
    });
    let mean_phase = wrap_deg(sin.atan2(cos).to_degrees());
    let amp_var = samples
        .iter()
        .map(|s| (s.amplitude_db - mean_amp).powi(2))
        .sum::<f64>()
        / (n - 1.0);
    let phase_var = samples
        .iter()
        .map(|s| wrap_deg(s.phase_deg - mean_phase).powi(2))
        .sum::<f64>()
        / (n - 1.0);
    Ok(Baseline {
        mean_amplitude_db: mean_amp,
        mean_phase_deg: mean_phase,
        amplitude_std: amp_var.sqrt(),
        phase_std: phase_var.sqrt(),
    })
}

/// Hysteresis and smoothing parameters of the moisture classifier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ThresholdPolicy {
    pub amp_enter_db: f64,
    pub amp_exit_db: f64,
    pub phase_enter_deg: f64,
    pub phase_exit_deg: f64,
    /// Scores at or above this are written to the costmap as lethal.
    pub lethal_score: f64,
    pub ema_alpha: f64,
}

impl Default for ThresholdPolicy {
    fn default() -> Self {
        Self {
            amp_enter_db: 2.0,
            amp_exit_db: 1.0,
            phase_enter_deg: 10.0,
            phase_exit_deg: 5.0,
            lethal_score: 1.0,
            ema_alpha: 0.5,
        }
    }
}

impl ThresholdPolicy {
    pub fn validate(&self) -> Result<()> {
        for (name, enter, exit) in [
            ("amp_enter_db", self.amp_enter_db, self.amp_exit_db),
            ("phase_enter_deg", self.phase_enter_deg, self.phase_exit_deg),
        ] {
            if !(enter.is_finite() && enter > 0.0) {
                return Err(Error::param(name, format!("must be > 0, got {enter}")));
            }
            if !(exit.is_finite() && exit >= 0.0 && exit <= enter) {
                return Err(Error::param(
                    name,
                    format!("exit threshold {exit} must lie in [0, {enter}]"),
                ));
            }
        }
        if !(self.ema_alpha > 0.0 && self.ema_alpha <= 1.0) {
            return Err(Error::param(
                "ema_alpha",
                format!("must lie in (0, 1], got {}", self.ema_alpha),
            ));
        }
        if !(self.lethal_score > 0.0 && self.lethal_score <= 1.0) {
            return Err(Error::param(
                "lethal_score",
                format!("must lie in (0, 1], got {}", self.lethal_score),
            ));
        }
        Ok(())
    }
}

/// Two-threshold latch: sets at `>= enter`, clears at `<= exit`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hysteresis {
    pub enter: f64,
    pub exit: f64,
}

impl Hysteresis {
    pub fn next(&self, active: bool, value: f64) -> bool {
        if active {
            value > self.exit
        } else {
            value >= self.enter
        }
    }
}

/// Smoothed deltas and latch state carried between returns.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ClassifierState {
    pub smoothed_amp_delta: Option<f64>,
    pub smoothed_phase_delta: Option<f64>,
    pub hazard: bool,
}

/// Score in `[0, 1]` plus the updated latch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classification {
    pub score: f64,
    pub state: ClassifierState,
}

impl Classification {
    /// Score as written to the costmap: latched or lethal-level scores become 1.
    pub fn cost_score(&self, policy: &ThresholdPolicy) -> f64 {
        if self.state.hazard || self.score >= policy.lethal_score {
            1.0
        } else {
            self.score
        }
    }
}

fn ema(prev: Option<f64>, x: f64, alpha: f64) -> f64 {
    match prev {
        Some(p) => alpha * x + (1.0 - alpha) * p,
        None => x,
    }
}

/// Scores a return against the dry baseline. Wetting raises amplitude, so only
/// positive amplitude deltas count; phase counts in either direction.
pub fn classify(
    sample: Sample,
    baseline: &Baseline,
    policy: &ThresholdPolicy,
    previous: &ClassifierState,
) -> Classification {
    let d_amp = sample.amplitude_db - baseline.mean_amplitude_db;
    let d_phase = wrap_deg(sample.phase_deg - baseline.mean_phase_deg);
    let amp = ema(previous.smoothed_amp_delta, d_amp, policy.ema_alpha);
    let phase = ema(previous.smoothed_phase_delta, d_phase, policy.ema_alpha);

    let amp_latch = Hysteresis {
        enter: policy.amp_enter_db,
        exit: policy.amp_exit_db,
    };
    let phase_latch = Hysteresis {
        enter: policy.phase_enter_deg,
        exit: policy.phase_exit_deg,
    };
    let hazard = if previous.hazard {
        amp_latch.next(true, amp) || phase_latch.next(true, phase.abs())
    } else {
        amp_latch.next(false, amp) || phase_latch.next(false, phase.abs())
    };
    let score = (amp / policy.amp_enter_db)
        .max(phase.abs() / policy.phase_enter_deg)
        .clamp(0.0, 1.0);
    Classification {
        score,
        state: ClassifierState {
            smoothed_amp_delta: Some(amp),
            smoothed_phase_delta: Some(phase),
            hazard,
        },
    }
}

/// Stamps an observation into the layer with linear decay out to the
/// inflation radius, merging by maximum.
pub fn update(
    layer: &mut CostmapLayer,
    ground_point: (f64, f64),
    score: f64,
    inflation_radius: f64,
) -> Result<()> {
    if !(inflation_radius.is_finite() && inflation_radius >= 0.0) {
        return Err(Error::param(
            "inflation_radius",
            format!("must be >= 0, got {inflation_radius}"),
        ));
    }
    if !(0.0..=1.0).contains(&score) {
        return Err(Error::param(
            "score",
            format!("must lie in [0, 1], got {score}"),
        ));
    }
    let (oc, or) = layer.cell_of(ground_point.0, ground_point.1)?;
    let peak = 255.0 * score;
    let res = layer.resolution;
    let reach = (inflation_radius / res).floor() as i64;
    let (cols, rows) = (layer.cols as i64, layer.rows as i64);
    for r in (or as i64 - reach).max(0)..=(or as i64 + reach).min(rows - 1) {
        for c in (oc as i64 - reach).max(0)..=(oc as i64 + reach).min(cols - 1) {
            let d = res * (((c - oc as i64).pow(2) + (r - or as i64).pow(2)) as f64).sqrt();
            if d > inflation_radius + EDGE_EPS {
                continue;
            }
            let cost = inflated_cost(peak, d, inflation_radius);
            let (c, r) = (c as usize, r as usize);
            match layer.get(c, r) {
                Some(cur) if cur >= cost => {}
                None if cost == 0 => {}
                _ => layer.set(c, r, Some(cost)),
            }
        }
    }
    Ok(())
}

fn inflated_cost(peak: f64, d: f64, radius: f64) -> u8 {
    if d <= 0.0 {
        return peak.round() as u8;
    }
    (peak * (1.0 - d / radius)).max(0.0).round() as u8
}

/// Element-wise maximum of two layers; unknown cells read as `unknown_as`.
pub fn combine(
    static_layer: &CostmapLayer,
    moisture: &CostmapLayer,
    unknown_as: u8,
) -> Result<CostmapLayer> {
    if !static_layer.same_geometry(moisture) {
        return Err(Error::Geometry(format!(
            "{}x{} @ {} m vs {}x{} @ {} m",
            static_layer.cols,
            static_layer.rows,
            static_layer.resolution,
            moisture.cols,
            moisture.rows,
            moisture.resolution
        )));
    }
    let cells = static_layer
        .cells
        .iter()
        .zip(&moisture.cells)
        .map(|(a, b)| Some(a.unwrap_or(unknown_as).max(b.unwrap_or(unknown_as))))
        .collect();
    Ok(CostmapLayer {
        cells,
        ..static_layer.clone()
    })
}
