//! Circuit parameters and the unit convention.
//!
//! All energies are `E/h` in GHz with ħ = 1, so a transition energy `E₁₀`
//! is numerically the transition frequency `f₁₀` in GHz. Phases (`n_g`,
//! `phi_ext`) are dimensionless or in radians.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Marker documenting the energy convention: energies are `E/h` in GHz and
/// ħ = 1. There is nothing to configure; conversions to SI multiply by `h`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EnergyConvention;

impl EnergyConvention {
    /// Transition frequency in GHz for an energy difference in GHz.
    pub fn frequency(self, energy: f64) -> f64 {
        energy
    }
}

/// Capacitively shunted junction (transmon / Cooper-pair box).
///
/// `H = 4 E_C (n − n_g)² + E_j (1 − cos(φ − φ_ext))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransmonParams {
    pub e_c: f64,
    pub e_j: f64,
    #[serde(default)]
    pub n_g: f64,
    #[serde(default)]
    pub phi_ext: f64,
}

/// Junction shunted by a linear inductance.
///
/// `H = 4 E_C n² + ½ E_L φ² + E_j (1 − cos(φ − φ_ext))`, where `E_L = Φ₀²/L`
/// is the stored quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluxoniumParams {
    pub e_c: f64,
    pub e_l: f64,
    pub e_j: f64,
    #[serde(default)]
    pub phi_ext: f64,
}

/// Reduced two-dimensional 0-π circuit.
///
/// `H = E_Cφ n_φ² + E_Cθ n_θ² − 2 E_j cos θ cos(φ − φ_ext/2) + E_l φ²`.
/// The kinetic coefficients carry no factor of four.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZeroPiParams {
    pub e_c_phi: f64,
    pub e_c_theta: f64,
    pub e_j: f64,
    pub e_l: f64,
    #[serde(default)]
    pub phi_ext: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "circuit", rename_all = "lowercase")]
pub enum CircuitParams {
    Transmon(TransmonParams),
    Fluxonium(FluxoniumParams),
    #[serde(rename = "zeropi")]
    ZeroPi(ZeroPiParams),
}

/// Parameter validation and canonicalization.
///
/// `validate` is idempotent: validating an already canonical value returns
/// it unchanged.
pub trait Validate: Sized {
    fn validate(&self) -> Result<Self>;
}

fn finite(field: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite { field })
    }
}

fn positive(field: &'static str, value: f64) -> Result<f64> {
    finite(field, value)?;
    if value > 0.0 {
        Ok(value)
    } else {
        Err(Error::NonPositiveEnergy { field, value })
    }
}

fn non_negative(field: &'static str, value: f64) -> Result<f64> {
    finite(field, value)?;
    if value >= 0.0 {
        Ok(value)
    } else {
        Err(Error::NonPositiveEnergy { field, value })
    }
}

/// Representative of `x` in `[0, period)`.
pub fn wrap_periodic(x: f64, period: f64) -> f64 {
    let r = x.rem_euclid(period);
    // rem_euclid can round up to `period` for tiny negative inputs
    if r >= period {
        0.0
    } else {
        r
    }
}

impl Validate for TransmonParams {
    fn validate(&self) -> Result<Self> {
        Ok(TransmonParams {
            e_c: positive("e_c", self.e_c)?,
            e_j: non_negative("e_j", self.e_j)?,
            n_g: wrap_periodic(finite("n_g", self.n_g)?, 1.0),
            phi_ext: wrap_periodic(finite("phi_ext", self.phi_ext)?, TAU),
        })
    }
}

impl Validate for FluxoniumParams {
    fn validate(&self) -> Result<Self> {
        Ok(FluxoniumParams {
            e_c: positive("e_c", self.e_c)?,
            e_l: positive("e_l", self.e_l)?,
            e_j: non_negative("e_j", self.e_j)?,
            phi_ext: wrap_periodic(finite("phi_ext", self.phi_ext)?, TAU),
        })
    }
}

impl Validate for ZeroPiParams {
    fn validate(&self) -> Result<Self> {
        Ok(ZeroPiParams {
            e_c_phi: positive("e_c_phi", self.e_c_phi)?,
            e_c_theta: positive("e_c_theta", self.e_c_theta)?,
            e_j: non_negative("e_j", self.e_j)?,
            e_l: positive("e_l", self.e_l)?,
            phi_ext: wrap_periodic(finite("phi_ext", self.phi_ext)?, TAU),
        })
    }
}

impl Validate for CircuitParams {
    fn validate(&self) -> Result<Self> {
        Ok(match self {
            CircuitParams::Transmon(p) => CircuitParams::Transmon(p.validate()?),
            CircuitParams::Fluxonium(p) => CircuitParams::Fluxonium(p.validate()?),
            CircuitParams::ZeroPi(p) => CircuitParams::ZeroPi(p.validate()?),
        })
    }
}

impl CircuitParams {
    pub fn name(&self) -> &'static str {
        match self {
            CircuitParams::Transmon(_) => "transmon",
            CircuitParams::Fluxonium(_) => "fluxonium",
            CircuitParams::ZeroPi(_) => "zeropi",
        }
    }
}

/// Default fluxonium parameters for flux sweeps: deep enough wells
/// (`E_j/E_L = 16`) that the two lowest states sit in separate wells away
/// from `φ_ext = π`. These are a documented choice, not measured values.
pub const DEFAULT_FLUXONIUM: FluxoniumParams =
    FluxoniumParams { e_c: 1.0, e_l: 0.5, e_j: 8.0, phi_ext: std::f64::consts::PI };

/// 0-π parameters in the protected regime: the ground pair is split by
/// about 3.5e-4 of the gap to the next level and the two states occupy
/// opposite θ wells.
pub const PROTECTED_ZEROPI: ZeroPiParams =
    ZeroPiParams { e_c_phi: 60.0, e_c_theta: 0.02, e_j: 10.0, e_l: 0.02, phi_ext: 0.0 };
