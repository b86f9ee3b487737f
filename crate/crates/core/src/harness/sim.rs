//! Fixed-timestep simulation at the measurement rate.
//!
//! Each sample: apply due events, measure at the sensor ground point,
//! classify, stamp the moisture layer, check the path and replan. The vehicle
//! then drives until the next sample; for the first `analysis_budget` seconds
//! of that interval it keeps executing the previous command.

use std::time::{Duration, Instant};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::costmap::{self, Baseline, ClassifierState, CostmapLayer, Sample, COST_LETHAL};
use crate::error::{Error, Result};
use crate::fmcw::{Radar, Spectrum};
use crate::planner::{self, Cell, Path};
use crate::scene::TerrainGrid;
use crate::vehicle::{self, Command, MountGeometry, PoseSample, VehicleState};
use crate::wrap_deg;

use super::scenario::{region_from, EventSpec, Scenario};

/// Minimum distance from the vehicle to the pursuit target point, m.
const CARROT_DISTANCE: f64 = 0.3;
/// Heading errors above this turn in place instead of driving, rad.
const TURN_IN_PLACE: f64 = 0.6;
/// Proportional gain for in-place turns, 1/s.
const TURN_GAIN: f64 = 2.0;
/// Path cells ahead of the last progress index searched for the nearest one.
const PROGRESS_WINDOW: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleRecord {
    pub t: f64,
    pub pose: VehicleState,
    pub ground_point: (f64, f64),
    pub amplitude_db: f64,
    /// Relative to the first return of the run.
    pub phase_deg: f64,
    pub score: f64,
    pub hazard: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub sample: usize,
    pub layer: CostmapLayer,
}

/// Chassis contact with hazardous ground over the whole trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SafetyReport {
    pub hazard_level: f64,
    /// Largest true water fraction under the footprint disc at any pose.
    pub max_water_under_footprint: f64,
    /// First traced pose whose footprint covered a cell above `hazard_level`.
    pub first_violation: Option<PoseSample>,
}

#[derive(Debug, Clone)]
pub struct RunLog {
    pub scenario: String,
    pub records: Vec<SampleRecord>,
    pub snapshots: Vec<Snapshot>,
    pub final_costmap: CostmapLayer,
    /// Last plan in force; `None` when no goal or the goal was cut off.
    pub path: Option<Path>,
    pub trace: Vec<PoseSample>,
    pub baseline: Option<Baseline>,
    pub terrain: TerrainGrid,
    pub safety: SafetyReport,
    pub spectrum: Option<Spectrum>,
    pub goal_reached: bool,
    pub replans: usize,
    /// Wall time of measure, classify, update and replan check per sample.
    /// Not part of the deterministic content.
    pub timing: Vec<Duration>,
}

/// Largest water fraction among terrain cells whose centres lie within
/// `radius` of `(x, y)`, including the cell containing the point.
pub fn footprint_max_water(terrain: &TerrainGrid, x: f64, y: f64, radius: f64) -> f64 {
    let res = terrain.resolution();
    let (cols, rows) = terrain.dims();
    let mut max = 0.0f64;
    if let Ok((c, r)) = terrain.cell_of(x, y) {
        max = terrain.water_fraction(c, r);
    }
    let c0 = ((x - radius) / res).floor().max(0.0) as usize;
    let r0 = ((y - radius) / res).floor().max(0.0) as usize;
    let c1 = (((x + radius) / res).ceil().max(0.0) as usize).min(cols);
    let r1 = (((y + radius) / res).ceil().max(0.0) as usize).min(rows);
    for r in r0..r1 {
        for c in c0..c1 {
            let (cx, cy) = terrain.cell_center(c, r);
            if (cx - x).powi(2) + (cy - y).powi(2) <= radius * radius {
                max = max.max(terrain.water_fraction(c, r));
            }
        }
    }
    max
}

fn build_terrain(s: &Scenario) -> Result<TerrainGrid> {
    TerrainGrid::new(
        s.grid.width_m,
        s.grid.height_m,
        s.grid.resolution_m,
        s.grid.base_state(),
    )
}

fn apply_event(terrain: &mut TerrainGrid, ev: &EventSpec, depth: f64) -> Result<()> {
    let region = region_from(ev.region())?;
    match ev {
        EventSpec::Damp { water_fraction, .. } => terrain.apply_damp(&region, *water_fraction),
        EventSpec::Deposit { volume_ml, .. } => terrain.deposit_water(&region, *volume_ml, depth),
    }
}

/// Follows a cell path with a pure-pursuit carrot at constant speed.
struct Follower {
    points: Vec<(f64, f64)>,
    progress: usize,
}

impl Follower {
    fn new(path: &Path, grid: &CostmapLayer, goal: (f64, f64)) -> Self {
        let mut points: Vec<_> = path
            .cells
            .iter()
            .map(|&(c, r)| grid.cell_center(c, r))
            .collect();
        if let Some(last) = points.last_mut() {
            *last = goal;
        }
        Self {
            points,
            progress: 0,
        }
    }

    fn command(&mut self, s: &VehicleState, speed: f64, max_turn: f64) -> Command {
        let d2 = |p: (f64, f64)| (p.0 - s.x).powi(2) + (p.1 - s.y).powi(2);
        let end = (self.progress + PROGRESS_WINDOW).min(self.points.len());
        let mut best = self.progress;
        for i in self.progress..end {
            if d2(self.points[i]) < d2(self.points[best]) {
                best = i;
            }
        }
        self.progress = best;
        let carrot = self.points[self.progress..]
            .iter()
            .copied()
            .find(|&p| d2(p) >= CARROT_DISTANCE * CARROT_DISTANCE)
            .unwrap_or(*self.points.last().expect("paths are non-empty"));
        let dist = d2(carrot).sqrt();
        if dist < 1e-9 {
            return Command::stop();
        }
        let err = (carrot.1 - s.y).atan2(carrot.0 - s.x) - s.heading;
        let err = crate::wrap_rad(err);
        if err.abs() > TURN_IN_PLACE {
            return Command::new(0.0, (TURN_GAIN * err).clamp(-max_turn, max_turn));
        }
        let w = 2.0 * speed * err.sin() / dist;
        Command::new(speed, w.clamp(-max_turn, max_turn))
    }
}

struct Navigator<'a> {
    scenario: &'a Scenario,
    goal: Option<(f64, f64)>,
    path: Option<Path>,
    follower: Option<Follower>,
    replans: usize,
}

impl<'a> Navigator<'a> {
    /// Plans from the vehicle's cell; the cell it occupies is treated as
    /// traversable so a vehicle already on a costly cell can leave it.
    fn replan(&mut self, master: &CostmapLayer, at: (f64, f64)) -> Result<()> {
        let Some(goal) = self.goal else {
            return Ok(());
        };
        let start: Cell = master.cell_of(at.0, at.1)?;
        let target: Cell = master.cell_of(goal.0, goal.1)?;
        let cfg = &self.scenario.planner;
        self.replans += 1;
        if master.cost_or(target.0, target.1, 0) >= cfg.lethal_cost {
            self.path = None;
            self.follower = None;
            return Ok(());
        }
        let mut grid = master.clone();
        grid.set(start.0, start.1, Some(0));
        self.path = planner::plan(&grid, start, target, cfg)?;
        self.follower = self.path.as_ref().map(|p| Follower::new(p, master, goal));
        Ok(())
    }

    fn progress(&self) -> usize {
        self.follower.as_ref().map_or(0, |f| f.progress)
    }

    fn command(&mut self, s: &VehicleState, reached: bool) -> Command {
        let v = &self.scenario.vehicle;
        match (&mut self.follower, reached) {
            (Some(f), false) => f.command(s, v.speed_mps, v.max_turn_rate),
            _ => Command::stop(),
        }
    }
}

pub fn run(scenario: &Scenario) -> Result<RunLog> {
    scenario.validate()?;
    let s = scenario;
    let radar = Radar::new(s.chirp, s.antenna, s.materials)?;
    let mount = MountGeometry {
        lookahead: s.vehicle.lookahead_m,
        standoff: s.antenna.standoff,
    };
    mount.validate()?;
    let mut terrain = build_terrain(s)?;
    let (w, h) = terrain.extent();
    let res = s.costmap_resolution();
    let mut static_layer = CostmapLayer::filled(w, h, res, Some(costmap::COST_FREE))?;
    for ob in &s.obstacles {
        let [x0, y0, x1, y1] = ob.region;
        static_layer.fill_rect(x0, y0, x1, y1, COST_LETHAL)?;
    }
    let mut moisture = CostmapLayer::filled(w, h, res, None)?;
    let mut master = costmap::combine(&static_layer, &moisture, s.costmap.unknown_cost)?;

    let n = s.sample_count();
    let dt = 1.0 / s.chirp.measurement_rate;
    let latency = s.chirp.analysis_budget.min(dt);
    let control_dt = 1.0 / s.vehicle.control_rate_hz;
    let mut seeds = ChaCha8Rng::seed_from_u64(s.rng_seed);

    let mut state = VehicleState::new(
        s.vehicle.x_m,
        s.vehicle.y_m,
        s.vehicle.heading_deg.to_radians(),
    );
    let mut nav = Navigator {
        scenario: s,
        goal: s.vehicle.goal.map(|[x, y]| (x, y)),
        path: None,
        follower: None,
        replans: 0,
    };
    nav.replan(&master, (state.x, state.y))?;

    let mut applied = vec![false; s.events.len()];
    let mut records = Vec::with_capacity(n);
    let mut snapshots = Vec::new();
    let mut trace = vec![PoseSample { t: 0.0, state }];
    let mut timing = Vec::with_capacity(n);
    let mut calibration: Vec<Sample> = Vec::new();
    let mut baseline: Option<Baseline> = None;
    let mut classifier = ClassifierState::default();
    let mut phase_ref: Option<f64> = None;
    let mut spectrum = None;
    let mut goal_reached = false;
    let mut last_cmd = Command::stop();
    let radius = s.vehicle.footprint_radius_m;
    let mut safety = SafetyReport {
        hazard_level: s.output.hazard_level,
        max_water_under_footprint: 0.0,
        first_violation: None,
    };
    let check_safety = |terrain: &TerrainGrid, p: PoseSample, safety: &mut SafetyReport| {
        let wmax = footprint_max_water(terrain, p.state.x, p.state.y, radius);
        safety.max_water_under_footprint = safety.max_water_under_footprint.max(wmax);
        if wmax > safety.hazard_level && safety.first_violation.is_none() {
            safety.first_violation = Some(p);
        }
    };

    for k in 0..n {
        let t = k as f64 * dt;
        for (i, ev) in s.events.iter().enumerate() {
            if !applied[i] && ev.time_s() <= t + 1e-9 {
                apply_event(&mut terrain, ev, s.grid.interaction_depth_m)?;
                applied[i] = true;
            }
        }
        check_safety(&terrain, PoseSample { t, state }, &mut safety);

        let started = Instant::now();
        let gp = vehicle::sensor_ground_point(&state, &mount);
        let ret = radar.measure(&terrain, gp, s.noise_std, seeds.next_u64(), t)?;
        let reference = *phase_ref.get_or_insert(ret.phase_deg);
        let sample = Sample {
            amplitude_db: ret.amplitude_db,
            phase_deg: wrap_deg(ret.phase_deg - reference),
        };
        let (score, hazard) = match &baseline {
            None => {
                calibration.push(sample);
                if calibration.len() == s.calibration.samples {
                    baseline = Some(costmap::calibrate(&calibration)?);
                }
                (0.0, false)
            }
            Some(b) => {
                let c = costmap::classify(sample, b, &s.classifier, &classifier);
                classifier = c.state;
                let cost = c.cost_score(&s.classifier);
                if cost > 0.0 {
                    costmap::update(&mut moisture, gp, cost, s.costmap.inflation_radius_m)?;
                }
                (c.score, c.state.hazard)
            }
        };
        master = costmap::combine(&static_layer, &moisture, s.costmap.unknown_cost)?;
        if s.vehicle.replan && !goal_reached {
            let stale = match &nav.path {
                Some(p) => {
                    planner::needs_replan(p, &master, s.planner.replan_threshold, nav.progress())
                }
                None => nav.goal.is_some(),
            };
            if stale {
                nav.replan(&master, (state.x, state.y))?;
            }
        }
        timing.push(started.elapsed());

        if spectrum.is_none() && s.output.spectrum_dump {
            spectrum = Some(ret.spectrum.clone());
        }
        records.push(SampleRecord {
            t,
            pose: state,
            ground_point: gp,
            amplitude_db: sample.amplitude_db,
            phase_deg: sample.phase_deg,
            score,
            hazard,
        });
        if s.output.snapshot_every > 0 && k % s.output.snapshot_every == 0 {
            snapshots.push(Snapshot {
                sample: k,
                layer: master.clone(),
            });
        }

        // Drive until the next sample.
        let hold = s.calibration.hold_vehicle && baseline.is_none();
        let mut tau = 0.0;
        while tau < dt - 1e-12 {
            let seg = if tau < latency {
                latency - tau
            } else {
                control_dt
            };
            let seg = seg.min(dt - tau);
            if let Some(goal) = nav.goal {
                let d = ((goal.0 - state.x).powi(2) + (goal.1 - state.y).powi(2)).sqrt();
                goal_reached |= d <= s.vehicle.goal_tolerance_m;
            }
            let cmd = if hold {
                Command::stop()
            } else if tau < latency {
                last_cmd
            } else {
                nav.command(&state, goal_reached)
            };
            last_cmd = cmd;
            state = vehicle::step(&state, cmd, seg)?;
            tau += seg;
            let p = PoseSample { t: t + tau, state };
            check_safety(&terrain, p, &mut safety);
            trace.push(p);
        }
    }
    if records.is_empty() {
        return Err(Error::Configuration("run produced no samples".into()));
    }
    Ok(RunLog {
        scenario: s.name.clone(),
        records,
        snapshots,
        final_costmap: master,
        path: nav.path,
        trace,
        baseline,
        terrain,
        safety,
        spectrum,
        goal_reached,
        replans: nav.replans,
        timing,
    })
}
