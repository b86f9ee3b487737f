//! Complex permittivity of wet and dry surfaces and their normal-incidence
//! reflection coefficient.
//!
//! Sign convention: permittivity is written `eps = eps' - j eps''` with the
//! loss `eps''` stored as a non-negative number. Internally it is handled as
//! the complex value `eps' - j eps''`, and `sqrt(eps)` is always the principal
//! square root. That yields a refractive index `n' - j kappa` with `n' > 0` and
//! `kappa >= 0` (non-negative extinction), so a lossy surface reflects with a
//! phase just below 180 degrees.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative permittivity `eps' - j eps''`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexPermittivity {
    pub real_part: f64,
    /// Loss term, non-negative.
    pub imag_part: f64,
}

impl ComplexPermittivity {
    pub fn new(real_part: f64, imag_part: f64) -> Result<Self> {
        let eps = Self {
            real_part,
            imag_part,
        };
        eps.validate()?;
        Ok(eps)
    }

    /// Lossless permittivity.
    pub fn real(real_part: f64) -> Result<Self> {
        Self::new(real_part, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.real_part.is_finite() && self.real_part >= 1.0) {
            return Err(Error::param(
                "real_part",
                format!("must be >= 1, got {}", self.real_part),
            ));
        }
        if !(self.imag_part.is_finite() && self.imag_part >= 0.0) {
            return Err(Error::param(
                "imag_part",
                format!("must be >= 0, got {}", self.imag_part),
            ));
        }
        Ok(())
    }

    /// The complex value `eps' - j eps''`.
    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.real_part, -self.imag_part)
    }

    fn from_complex(z: Complex64) -> Self {
        Self {
            real_part: z.re,
            imag_part: -z.im,
        }
    }

    /// Principal square root, i.e. the complex refractive index.
    pub fn refractive_index(self) -> Complex64 {
        self.to_complex().sqrt()
    }
}

/// Single-relaxation Debye parameters for a polar liquid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DebyeParams {
    pub eps_static: f64,
    pub eps_infinity: f64,
    /// Relaxation time in seconds.
    pub relaxation_time: f64,
}

impl DebyeParams {
    /// Pure water at 25 C.
    pub const WATER_25C: DebyeParams = DebyeParams {
        eps_static: 78.4,
        eps_infinity: 5.3,
        relaxation_time: 8.27e-12,
    };

    pub fn validate(&self) -> Result<()> {
        if !(self.eps_infinity.is_finite() && self.eps_infinity >= 1.0) {
            return Err(Error::param(
                "eps_infinity",
                format!("must be >= 1, got {}", self.eps_infinity),
            ));
        }
        if !(self.eps_static.is_finite() && self.eps_static > self.eps_infinity) {
            return Err(Error::param(
                "eps_static",
                format!(
                    "must exceed eps_infinity ({}), got {}",
                    self.eps_infinity, self.eps_static
                ),
            ));
        }
        if !(self.relaxation_time.is_finite() && self.relaxation_time > 0.0) {
            return Err(Error::param(
                "relaxation_time",
                format!("must be > 0, got {}", self.relaxation_time),
            ));
        }
        Ok(())
    }

    /// Frequency at which the loss peaks, `1 / (2 pi tau)`.
    pub fn relaxation_frequency(&self) -> f64 {
        1.0 / (2.0 * PI * self.relaxation_time)
    }
}

impl Default for DebyeParams {
    fn default() -> Self {
        Self::WATER_25C
    }
}

/// Debye permittivity `eps_inf + (eps_s - eps_inf) / (1 + j 2 pi f tau)`.
pub fn debye_permittivity(freq_hz: f64, params: &DebyeParams) -> Result<ComplexPermittivity> {
    if !(freq_hz.is_finite() && freq_hz > 0.0) {
        return Err(Error::param(
            "frequency",
            format!("must be > 0, got {freq_hz}"),
        ));
    }
    params.validate()?;
    let denom = Complex64::new(1.0, 2.0 * PI * freq_hz * params.relaxation_time);
    let eps = params.eps_infinity + (params.eps_static - params.eps_infinity) / denom;
    Ok(ComplexPermittivity::from_complex(eps))
}

/// CRIM volumetric mixing: `sqrt(eps_mix) = (1 - v) sqrt(eps_host) + v sqrt(eps_incl)`.
pub fn mix_permittivity(
    host: ComplexPermittivity,
    inclusion: ComplexPermittivity,
    fraction: f64,
) -> Result<ComplexPermittivity> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::param(
            "fraction",
            format!("must lie in [0, 1], got {fraction}"),
        ));
    }
    if fraction == 0.0 {
        return Ok(host);
    }
    if fraction == 1.0 {
        return Ok(inclusion);
    }
    let n = host.refractive_index() * (1.0 - fraction) + inclusion.refractive_index() * fraction;
    Ok(ComplexPermittivity::from_complex(n * n))
}

/// Normal-incidence reflection from air, `(1 - n) / (1 + n)`.
pub fn fresnel_reflection(eps: ComplexPermittivity) -> Complex64 {
    let n = eps.refractive_index();
    (1.0 - n) / (1.0 + n)
}

/// Surface substrate beneath any water.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseMaterial {
    DryConcrete,
    Other(ComplexPermittivity),
}

/// A surface patch: substrate plus volumetric water fraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialState {
    pub base: BaseMaterial,
    pub water_fraction: f64,
}

impl MaterialState {
    pub fn new(base: BaseMaterial, water_fraction: f64) -> Result<Self> {
        let state = Self {
            base,
            water_fraction,
        };
        state.validate()?;
        Ok(state)
    }

    pub fn dry_concrete() -> Self {
        Self {
            base: BaseMaterial::DryConcrete,
            water_fraction: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.water_fraction) {
            return Err(Error::param(
                "water_fraction",
                format!("must lie in [0, 1], got {}", self.water_fraction),
            ));
        }
        if let BaseMaterial::Other(eps) = self.base {
            eps.validate()?;
        }
        Ok(())
    }
}

/// Material constants used to evaluate a [`MaterialState`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Materials {
    /// Dry concrete at K-band, frequency independent over the sweep.
    pub dry_concrete: ComplexPermittivity,
    pub water: DebyeParams,
}

impl Default for Materials {
    fn default() -> Self {
        Self {
            dry_concrete: ComplexPermittivity {
                real_part: 4.5,
                imag_part: 0.3,
            },
            water: DebyeParams::WATER_25C,
        }
    }
}

impl Materials {
    pub fn validate(&self) -> Result<()> {
        self.dry_concrete.validate()?;
        self.water.validate()
    }

    pub fn base_permittivity(&self, base: BaseMaterial) -> ComplexPermittivity {
        match base {
            BaseMaterial::DryConcrete => self.dry_concrete,
            BaseMaterial::Other(eps) => eps,
        }
    }
}

/// Debye water mixed into the substrate, then reflected.
pub fn state_to_reflection(
    state: &MaterialState,
    freq_hz: f64,
    materials: &Materials,
) -> Result<Complex64> {
    state.validate()?;
    let water = debye_permittivity(freq_hz, &materials.water)?;
    let host = materials.base_permittivity(state.base);
    let mixed = mix_permittivity(host, water, state.water_fraction)?;
    Ok(fresnel_reflection(mixed))
}
