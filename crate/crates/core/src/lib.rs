//! Simulation of K-band FMCW ground-moisture sensing on a mobile robot.
//!
//! The pipeline runs from surface physics to navigation:
//!
//! ```text
//! scene (terrain + water) -> dielectric (permittivity, reflection)
//!   -> fmcw (beat signal, range spectrum, amplitude/phase)
//!   -> costmap (baseline, hysteresis, inflation) -> planner (A*)
//!   -> vehicle (unicycle kinematics) -> harness (scenarios, logs, CLI)
//! ```
//!
//! Everything is deterministic given a scenario and its RNG seed.

pub mod costmap;
pub mod dielectric;
pub mod error;
pub mod fmcw;
pub mod harness;
pub mod planner;
pub mod scene;
pub mod vehicle;

pub use error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Wraps an angle in degrees onto (-180, 180].
pub fn wrap_deg(deg: f64) -> f64 {
    let mut d = deg % 360.0;
    if d <= -180.0 {
        d += 360.0;
    } else if d > 180.0 {
        d -= 360.0;
    }
    d
}

/// Wraps an angle in radians onto (-pi, pi].
pub fn wrap_rad(rad: f64) -> f64 {
    use std::f64::consts::PI;
    let tau = 2.0 * PI;
    let mut a = rad % tau;
    if a <= -PI {
        a += tau;
    } else if a > PI {
        a -= tau;
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_intervals() {
        assert_eq!(wrap_deg(180.0), 180.0);
        assert_eq!(wrap_deg(-180.0), 180.0);
        assert_eq!(wrap_deg(540.0), 180.0);
        assert!((wrap_deg(-190.0) - 170.0).abs() < 1e-12);
        assert_eq!(wrap_rad(std::f64::consts::PI), std::f64::consts::PI);
        assert_eq!(wrap_rad(-std::f64::consts::PI), std::f64::consts::PI);
        assert!((wrap_rad(3.0 * std::f64::consts::PI) - std::f64::consts::PI).abs() < 1e-12);
    }
}
