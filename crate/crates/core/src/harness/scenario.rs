//! Scenario files: TOML with a fixed schema. Unknown keys are rejected and
//! every value is checked before a run starts.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::costmap::ThresholdPolicy;
use crate::dielectric::{BaseMaterial, ComplexPermittivity, MaterialState, Materials};
use crate::error::{Error, Result};
use crate::fmcw::{AntennaGeometry, ChirpConfig};
use crate::planner::PlannerConfig;
use crate::scene::Region;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub duration_s: f64,
    #[serde(default)]
    pub rng_seed: u64,
    /// Std of the additive complex Gaussian noise on the beat signal.
    #[serde(default)]
    pub noise_std: f64,
    pub grid: GridSpec,
    #[serde(default)]
    pub materials: Materials,
    #[serde(default)]
    pub chirp: ChirpConfig,
    #[serde(default)]
    pub antenna: AntennaGeometry,
    pub vehicle: VehicleSpec,
    #[serde(default)]
    pub calibration: CalibrationSpec,
    #[serde(default)]
    pub classifier: ThresholdPolicy,
    #[serde(default)]
    pub costmap: CostmapSpec,
    #[serde(default)]
    pub planner: PlannerConfig,
    #[serde(default)]
    pub events: Vec<EventSpec>,
    #[serde(default)]
    pub obstacles: Vec<ObstacleSpec>,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub width_m: f64,
    pub height_m: f64,
    pub resolution_m: f64,
    /// Substrate permittivity `[eps', eps'']`; dry concrete when absent.
    #[serde(default)]
    pub base_permittivity: Option<[f64; 2]>,
    #[serde(default)]
    pub water_fraction: f64,
    /// Depth over which a deposited film is averaged into a volume fraction.
    #[serde(default = "default_depth")]
    pub interaction_depth_m: f64,
}

fn default_depth() -> f64 {
    0.005
}

impl GridSpec {
    pub fn base_state(&self) -> MaterialState {
        let base = match self.base_permittivity {
            Some([re, im]) => BaseMaterial::Other(ComplexPermittivity {
                real_part: re,
                imag_part: im,
            }),
            None => BaseMaterial::DryConcrete,
        };
        MaterialState {
            base,
            water_fraction: self.water_fraction,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleSpec {
    pub x_m: f64,
    pub y_m: f64,
    #[serde(default)]
    pub heading_deg: f64,
    #[serde(default = "default_speed")]
    pub speed_mps: f64,
    #[serde(default = "default_lookahead")]
    pub lookahead_m: f64,
    /// Radius of the chassis disc checked against hazardous cells.
    #[serde(default = "default_footprint")]
    pub footprint_radius_m: f64,
    /// Destination; a stationary vehicle has none.
    #[serde(default)]
    pub goal: Option<[f64; 2]>,
    /// Replan around hazards when true; otherwise follow the initial plan.
    #[serde(default = "default_true")]
    pub replan: bool,
    #[serde(default = "default_turn_rate")]
    pub max_turn_rate: f64,
    #[serde(default = "default_control_rate")]
    pub control_rate_hz: f64,
    #[serde(default = "default_goal_tolerance")]
    pub goal_tolerance_m: f64,
}

fn default_speed() -> f64 {
    0.1
}
fn default_lookahead() -> f64 {
    0.5
}
fn default_footprint() -> f64 {
    0.2
}
fn default_true() -> bool {
    true
}
fn default_turn_rate() -> f64 {
    0.8
}
fn default_control_rate() -> f64 {
    10.0
}
fn default_goal_tolerance() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrationSpec {
    /// Leading returns averaged into the dry baseline.
    pub samples: usize,
    /// Keep the vehicle still until the baseline exists.
    pub hold_vehicle: bool,
}

impl Default for CalibrationSpec {
    fn default() -> Self {
        Self {
            samples: 5,
            hold_vehicle: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CostmapSpec {
    /// Costmap cell size; the terrain resolution when absent.
    pub resolution_m: Option<f64>,
    pub inflation_radius_m: f64,
    /// Cost assumed for never-observed cells when layers are combined.
    pub unknown_cost: u8,
}

impl Default for CostmapSpec {
    fn default() -> Self {
        Self {
            resolution_m: None,
            inflation_radius_m: 0.35,
            unknown_cost: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EventSpec {
    /// Wet cloth: cells in the region rise to at least `water_fraction`.
    Damp {
        time_s: f64,
        region: [f64; 4],
        water_fraction: f64,
    },
    /// Poured water spread over the region.
    Deposit {
        time_s: f64,
        region: [f64; 4],
        volume_ml: f64,
    },
}

impl EventSpec {
    pub fn time_s(&self) -> f64 {
        match self {
            EventSpec::Damp { time_s, .. } | EventSpec::Deposit { time_s, .. } => *time_s,
        }
    }

    pub fn region(&self) -> [f64; 4] {
        match self {
            EventSpec::Damp { region, .. } | EventSpec::Deposit { region, .. } => *region,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleSpec {
    pub region: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    /// Costmap snapshot every N samples; 0 keeps only the final map.
    pub snapshot_every: usize,
    /// Keep the first return's full spectrum for `spectrum.csv`.
    pub spectrum_dump: bool,
    /// Water fraction above which a cell counts as hazardous ground.
    pub hazard_level: f64,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            snapshot_every: 0,
            spectrum_dump: false,
            hazard_level: 0.1,
        }
    }
}

pub fn region_from(r: [f64; 4]) -> Result<Region> {
    Region::new(r[0], r[1], r[2], r[3])
}

/// Re-labels a module-level error against a scenario field.
fn in_field(prefix: &str, err: Error) -> Error {
    match err {
        Error::Parameter { name, reason } => Error::validation(format!("{prefix}.{name}"), reason),
        Error::Configuration(msg) => Error::validation(prefix.to_string(), msg),
        other => other,
    }
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::validation(field, format!("must be > 0, got {v}")))
    }
}

fn non_negative(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::validation(field, format!("must be >= 0, got {v}")))
    }
}

fn unit_interval(field: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::validation(
            field,
            format!("must lie in [0, 1], got {v}"),
        ))
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        positive("duration_s", self.duration_s)?;
        non_negative("noise_std", self.noise_std)?;

        let g = &self.grid;
        positive("grid.width_m", g.width_m)?;
        positive("grid.height_m", g.height_m)?;
        positive("grid.resolution_m", g.resolution_m)?;
        positive("grid.interaction_depth_m", g.interaction_depth_m)?;
        unit_interval("grid.water_fraction", g.water_fraction)?;
        g.base_state()
            .validate()
            .map_err(|e| in_field("grid.base_permittivity", e))?;
        let (w, h) = (g.width_m, g.height_m);
        let in_grid = |field: String, r: [f64; 4]| -> Result<()> {
            region_from(r).map_err(|e| in_field(&field, e))?;
            if r[0] < 0.0 || r[1] < 0.0 || r[2] > w || r[3] > h {
                return Err(Error::validation(
                    field,
                    format!("region {r:?} leaves the {w} x {h} m grid"),
                ));
            }
            Ok(())
        };

        self.materials
            .validate()
            .map_err(|e| in_field("materials", e))?;
        self.chirp.validate().map_err(|e| in_field("chirp", e))?;
        self.antenna
            .validate()
            .map_err(|e| in_field("antenna", e))?;
        self.classifier
            .validate()
            .map_err(|e| in_field("classifier", e))?;
        self.planner
            .validate()
            .map_err(|e| in_field("planner", e))?;

        let v = &self.vehicle;
        non_negative("vehicle.speed_mps", v.speed_mps)?;
        non_negative("vehicle.lookahead_m", v.lookahead_m)?;
        non_negative("vehicle.footprint_radius_m", v.footprint_radius_m)?;
        positive("vehicle.max_turn_rate", v.max_turn_rate)?;
        positive("vehicle.control_rate_hz", v.control_rate_hz)?;
        positive("vehicle.goal_tolerance_m", v.goal_tolerance_m)?;
        let inside = |x: f64, y: f64| x >= 0.0 && y >= 0.0 && x <= w && y <= h;
        if !inside(v.x_m, v.y_m) {
            return Err(Error::validation(
                "vehicle.x_m",
                format!("start ({}, {}) leaves the grid", v.x_m, v.y_m),
            ));
        }
        let gp = (
            v.x_m + v.lookahead_m * v.heading_deg.to_radians().cos(),
            v.y_m + v.lookahead_m * v.heading_deg.to_radians().sin(),
        );
        if !inside(gp.0, gp.1) {
            return Err(Error::validation(
                "vehicle.lookahead_m",
                format!(
                    "initial ground point ({:.3}, {:.3}) leaves the grid",
                    gp.0, gp.1
                ),
            ));
        }
        if let Some([gx, gy]) = v.goal {
            if !inside(gx, gy) {
                return Err(Error::validation(
                    "vehicle.goal",
                    format!("({gx}, {gy}) leaves the grid"),
                ));
            }
        }

        if self.calibration.samples < crate::costmap::MIN_CALIBRATION_SAMPLES {
            return Err(Error::validation(
                "calibration.samples",
                format!(
                    "must be >= {}, got {}",
                    crate::costmap::MIN_CALIBRATION_SAMPLES,
                    self.calibration.samples
                ),
            ));
        }
        let total = (self.duration_s * self.chirp.measurement_rate + 1e-9).floor() as usize;
        if total < self.calibration.samples {
            return Err(Error::validation(
                "duration_s",
                format!(
                    "yields {total} samples, fewer than the {} calibration samples",
                    self.calibration.samples
                ),
            ));
        }

        if let Some(res) = self.costmap.resolution_m {
            positive("costmap.resolution_m", res)?;
        }
        non_negative(
            "costmap.inflation_radius_m",
            self.costmap.inflation_radius_m,
        )?;
        unit_interval("output.hazard_level", self.output.hazard_level)?;

        for (i, ev) in self.events.iter().enumerate() {
            non_negative(&format!("events[{i}].time_s"), ev.time_s())?;
            in_grid(format!("events[{i}].region"), ev.region())?;
            match ev {
                EventSpec::Damp { water_fraction, .. } => {
                    unit_interval(&format!("events[{i}].water_fraction"), *water_fraction)?
                }
                EventSpec::Deposit { volume_ml, .. } => {
                    non_negative(&format!("events[{i}].volume_ml"), *volume_ml)?
                }
            }
        }
        for (i, ob) in self.obstacles.iter().enumerate() {
            in_grid(format!("obstacles[{i}].region"), ob.region)?;
        }
        Ok(())
    }

    /// Samples in a run: one per measurement period over the duration.
    pub fn sample_count(&self) -> usize {
        (self.duration_s * self.chirp.measurement_rate + 1e-9).floor() as usize
    }

    pub fn costmap_resolution(&self) -> f64 {
        self.costmap.resolution_m.unwrap_or(self.grid.resolution_m)
    }
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before
        .rfind('\n')
        .map_or(before.len(), |i| before.len() - i - 1)
        + 1;
    (line, column)
}

/// Parses and validates scenario text; `origin` names the source in errors.
pub fn parse_scenario(text: &str, origin: &str) -> Result<Scenario> {
    let scenario: Scenario = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((0, 0), |s| line_column(text, s.start));
        Error::Parse {
            path: origin.to_string(),
            line,
            column,
            message: e.message().to_string(),
        }
    })?;
    scenario.validate()?;
    Ok(scenario)
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_scenario(&text, &path.display().to_string())
}
