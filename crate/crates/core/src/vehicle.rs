//! Unicycle kinematics for the UGV and the sensor's ground aim point.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::wrap_rad;

/// Below this yaw rate the straight-line update is used.
const STRAIGHT_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub x: f64,
    pub y: f64,
    /// Radians on (-pi, pi].
    pub heading: f64,
    /// m/s, non-negative.
    pub speed: f64,
}

impl VehicleState {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Self {
            x,
            y,
            heading: wrap_rad(heading),
            speed: 0.0,
        }
    }
}

/// Velocity command.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Command {
    /// m/s
    pub linear: f64,
    /// rad/s
    pub angular: f64,
}

impl Command {
    pub fn new(linear: f64, angular: f64) -> Self {
        Self { linear, angular }
    }

    pub fn stop() -> Self {
        Self::default()
    }
}

/// Where the arm holds the antenna relative to the chassis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MountGeometry {
    /// Ground point ahead of the vehicle origin, m.
    pub lookahead: f64,
    /// Antenna tip height above the floor, m.
    pub standoff: f64,
}

impl Default for MountGeometry {
    fn default() -> Self {
        Self {
            lookahead: 0.5,
            standoff: 0.30,
        }
    }
}

impl MountGeometry {
    pub fn validate(&self) -> Result<()> {
        if !(self.lookahead.is_finite() && self.lookahead >= 0.0) {
            return Err(Error::param(
                "lookahead",
                format!("must be >= 0, got {}", self.lookahead),
            ));
        }
        if !(self.standoff.is_finite() && self.standoff > 0.0) {
            return Err(Error::param(
                "standoff",
                format!("must be > 0, got {}", self.standoff),
            ));
        }
        Ok(())
    }
}

/// Integrates a constant command for `dt` seconds, exactly along the arc.
pub fn step(state: &VehicleState, cmd: Command, dt: f64) -> Result<VehicleState> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::param("dt", format!("must be > 0, got {dt}")));
    }
    if !(cmd.linear.is_finite() && cmd.linear >= 0.0) {
        return Err(Error::param(
            "linear",
            format!("must be >= 0, got {}", cmd.linear),
        ));
    }
    let (v, w) = (cmd.linear, cmd.angular);
    let th = state.heading;
    let (x, y) = if w.abs() < STRAIGHT_EPS {
        (state.x + v * dt * th.cos(), state.y + v * dt * th.sin())
    } else {
        let r = v / w;
        let th1 = th + w * dt;
        (
            state.x + r * (th1.sin() - th.sin()),
            state.y - r * (th1.cos() - th.cos()),
        )
    };
    Ok(VehicleState {
        x,
        y,
        heading: wrap_rad(th + w * dt),
        speed: v,
    })
}

pub fn sensor_ground_point(state: &VehicleState, mount: &MountGeometry) -> (f64, f64) {
    (
        state.x + mount.lookahead * state.heading.cos(),
        state.y + mount.lookahead * state.heading.sin(),
    )
}

/// Timestamped pose as written to `pose.csv`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseSample {
    pub t: f64,
    pub state: VehicleState,
}

pub fn pose_trace_csv(trace: &[PoseSample]) -> String {
    let mut out = String::from("t,x,y,heading\n");
    for p in trace {
        let _ = writeln!(
            out,
            "{:.6},{:.6},{:.6},{:.6}",
            p.t, p.state.x, p.state.y, p.state.heading
        );
    }
    out
}
