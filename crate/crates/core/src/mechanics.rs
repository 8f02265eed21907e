//! Mechanical analogs of the circuits.
//!
//! Mappings use ħ = 1, so an inertia is `1/energy` (GHz⁻¹) and a stiffness
//! carries energy per length². To recover SI values, express energies in
//! joules (`E = h·f`) and multiply each inertia by ħ²; stiffnesses and
//! lengths need no change.
//!
//! | circuit   | electrical | mechanical          |
//! |-----------|------------|---------------------|
//! | transmon  | E_C        | 1/(2I)              |
//! |           | E_j        | ¼ k L²              |
//! | fluxonium | E_C        | 1/(2I)              |
//! |           | E_j        | ¼ k_j l²            |
//! |           | E_L        | k_L / 8             |
//! |           | φ_ext      | θ_offset            |
//! | 0-π       | E_Cφ, E_Cθ | 1/(8I_φ), 1/(8I_θ)  |
//! |           | E_l        | 2 k_L               |
//! |           | E_j        | ½ k_j L²            |
//! |           | φ_ext      | θ_offset            |

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{FluxoniumParams, TransmonParams, Validate, ZeroPiParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransmonMech {
    pub inertia_i: f64,
    pub k: f64,
    pub length_l: f64,
    /// Offset charge, carried through unchanged.
    #[serde(default)]
    pub n_g: f64,
    #[serde(default)]
    pub theta_offset: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluxoniumMech {
    pub inertia_i: f64,
    pub k_j: f64,
    pub k_l: f64,
    /// Half the pendulum length.
    pub half_length_l: f64,
    #[serde(default)]
    pub theta_offset: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZeroPiMech {
    pub inertia_i_phi: f64,
    pub inertia_i_theta: f64,
    pub k_j: f64,
    pub k_l: f64,
    pub length_l: f64,
    #[serde(default)]
    pub theta_offset: f64,
}

fn positive(field: &'static str, value: f64) -> Result<f64> {
    if !value.is_finite() {
        return Err(Error::NonFinite { field });
    }
    if value <= 0.0 {
        return Err(Error::NonPositiveInput { field, value });
    }
    Ok(value)
}

fn non_negative(field: &'static str, value: f64) -> Result<f64> {
    if !value.is_finite() {
        return Err(Error::NonFinite { field });
    }
    if value < 0.0 {
        return Err(Error::NonPositiveInput { field, value });
    }
    Ok(value)
}

fn finite(field: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite { field })
    }
}

pub fn transmon_e2m(p: &TransmonParams, length_l: f64) -> Result<TransmonMech> {
    p.validate()?;
    let l = positive("length_l", length_l)?;
    Ok(TransmonMech {
        inertia_i: 1.0 / (2.0 * p.e_c),
        k: 4.0 * p.e_j / (l * l),
        length_l: l,
        n_g: p.n_g,
        theta_offset: p.phi_ext,
    })
}

pub fn transmon_m2e(m: &TransmonMech) -> Result<TransmonParams> {
    let i = positive("inertia_i", m.inertia_i)?;
    let k = non_negative("k", m.k)?;
    let l = positive("length_l", m.length_l)?;
    Ok(TransmonParams {
        e_c: 1.0 / (2.0 * i),
        e_j: 0.25 * k * l * l,
        n_g: finite("n_g", m.n_g)?,
        phi_ext: finite("theta_offset", m.theta_offset)?,
    })
}

pub fn fluxonium_e2m(p: &FluxoniumParams, half_length_l: f64) -> Result<FluxoniumMech> {
    p.validate()?;
    let l = positive("half_length_l", half_length_l)?;
    Ok(FluxoniumMech {
        inertia_i: 1.0 / (2.0 * p.e_c),
        k_j: 4.0 * p.e_j / (l * l),
        k_l: 8.0 * p.e_l,
        half_length_l: l,
        theta_offset: p.phi_ext,
    })
}

pub fn fluxonium_m2e(m: &FluxoniumMech) -> Result<FluxoniumParams> {
    let i = positive("inertia_i", m.inertia_i)?;
    let k_j = non_negative("k_j", m.k_j)?;
    let k_l = positive("k_l", m.k_l)?;
    let l = positive("half_length_l", m.half_length_l)?;
    Ok(FluxoniumParams {
        e_c: 1.0 / (2.0 * i),
        e_l: k_l / 8.0,
        e_j: 0.25 * k_j * l * l,
        phi_ext: finite("theta_offset", m.theta_offset)?,
    })
}

pub fn zeropi_e2m(p: &ZeroPiParams, length_l: f64) -> Result<ZeroPiMech> {
    p.validate()?;
    let l = positive("length_l", length_l)?;
    Ok(ZeroPiMech {
        inertia_i_phi: 1.0 / (8.0 * p.e_c_phi),
        inertia_i_theta: 1.0 / (8.0 * p.e_c_theta),
        k_j: 2.0 * p.e_j / (l * l),
        k_l: 0.5 * p.e_l,
        length_l: l,
        theta_offset: p.phi_ext,
    })
}

pub fn zeropi_m2e(m: &ZeroPiMech) -> Result<ZeroPiParams> {
    let i_phi = positive("inertia_i_phi", m.inertia_i_phi)?;
    let i_theta = positive("inertia_i_theta", m.inertia_i_theta)?;
    let k_j = non_negative("k_j", m.k_j)?;
    let k_l = positive("k_l", m.k_l)?;
    let l = positive("length_l", m.length_l)?;
    Ok(ZeroPiParams {
        e_c_phi: 1.0 / (8.0 * i_phi),
        e_c_theta: 1.0 / (8.0 * i_theta),
        e_j: 0.5 * k_j * l * l,
        e_l: 2.0 * k_l,
        phi_ext: finite("theta_offset", m.theta_offset)?,
    })
}

/// One-degree-of-freedom mechanisms with a `(1 − cos θ)` potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MechanicalSystem {
    /// Point mass `m` on a rod of length `L` in gravity `g`.
    Pendulum { m: f64, g: f64, l: f64 },
    /// Rod of length `L` whose end drags a horizontally constrained spring.
    SliderSpring { k: f64, l: f64 },
}

impl MechanicalSystem {
    /// Potential energy, zero at θ = 0.
    pub fn potential(&self, theta: f64) -> f64 {
        let c = 1.0 - theta.cos();
        match *self {
            MechanicalSystem::Pendulum { m, g, l } => m * g * l * c,
            MechanicalSystem::SliderSpring { k, l } => 0.25 * k * l * l * c,
        }
    }
}

/// A root of `U′(θ) = E_L θ + E_j sin(θ − φ_ext)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Equilibrium {
    pub theta_star: f64,
    pub potential: f64,
    pub stable: bool,
}

fn flux_u(p: &FluxoniumParams, t: f64) -> f64 {
    0.5 * p.e_l * t * t + p.e_j * (1.0 - (t - p.phi_ext).cos())
}

fn flux_du(p: &FluxoniumParams, t: f64) -> f64 {
    p.e_l * t + p.e_j * (t - p.phi_ext).sin()
}

fn flux_d2u(p: &FluxoniumParams, t: f64) -> f64 {
    p.e_l + p.e_j * (t - p.phi_ext).cos()
}

const BRACKETS: usize = 2000;

/// Every equilibrium of the fluxonium mechanism in `[−window/2, window/2]`,
/// ascending in θ.
pub fn classical_equilibria(p: &FluxoniumParams, window: f64) -> Result<Vec<Equilibrium>> {
    let p = p.validate()?;
    if window.is_nan() || window < 2.0 * TAU {
        return Err(Error::RootFindingFailure(format!("search window {window} is narrower than 4π")));
    }
    let a = -0.5 * window;
    let step = window / BRACKETS as f64;
    let mut roots: Vec<f64> = Vec::new();
    let mut push = |t: f64| {
        if roots.last().is_none_or(|&r| (t - r).abs() > 1e-8) {
            roots.push(t);
        }
    };
    let mut lo = a;
    let mut f_lo = flux_du(&p, lo);
    for i in 1..=BRACKETS {
        let hi = a + i as f64 * step;
        let f_hi = flux_du(&p, hi);
        if f_lo == 0.0 {
            push(lo);
        } else if f_lo.signum() != f_hi.signum() && f_hi != 0.0 {
            push(bisect(&p, lo, hi, f_lo)?);
        }
        if i == BRACKETS && f_hi == 0.0 {
            push(hi);
        }
        lo = hi;
        f_lo = f_hi;
    }
    Ok(roots
        .into_iter()
        .map(|t| Equilibrium { theta_star: t, potential: flux_u(&p, t), stable: flux_d2u(&p, t) > 0.0 })
        .collect())
}

fn bisect(p: &FluxoniumParams, mut lo: f64, mut hi: f64, mut f_lo: f64) -> Result<f64> {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 1e-12 {
            return Ok(mid);
        }
        let f_mid = flux_du(p, mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::RootFindingFailure(format!("bisection stalled in [{lo}, {hi}]")))
}

/// Potential difference between the two lowest stable equilibria.
pub fn classical_splitting(p: &FluxoniumParams) -> Result<f64> {
    let mut stable: Vec<Equilibrium> = classical_equilibria(p, 4.0 * TAU)?.into_iter().filter(|e| e.stable).collect();
    if stable.len() < 2 {
        return Err(Error::SingleWell);
    }
    stable.sort_by(|a, b| a.potential.total_cmp(&b.potential));
    Ok(stable[1].potential - stable[0].potential)
}

/// `2π E_L |φ_ext − π|`, the splitting to first order in `E_L/E_j`.
pub fn first_order_splitting(p: &FluxoniumParams) -> f64 {
    TAU * p.e_l * (p.phi_ext - PI).abs()
}

/// Output of a spur-gear differential: the mean of the input rates.
pub fn differential_output(omega1: f64, omega2: f64) -> f64 {
    0.5 * (omega1 + omega2)
}

/// Largest difference between the product and sum forms of the 0-π
/// junction potential over `samples` points of a Kronecker lattice covering
/// θ ∈ [0, 2π), φ ∈ [−2π, 2π).
pub fn zeropi_potential_identity_check(p: &ZeroPiParams, samples: usize) -> f64 {
    let a1 = 2f64.sqrt() - 1.0;
    let a2 = 3f64.sqrt() - 1.0;
    let s = 0.5 * p.phi_ext;
    (0..samples.max(1))
        .map(|k| {
            let theta = TAU * (k as f64 * a1).fract();
            let phi = 2.0 * TAU * (k as f64 * a2).fract() - TAU;
            let product = -2.0 * p.e_j * theta.cos() * (phi - s).cos();
            let sum = -p.e_j * ((theta + phi - s).cos() + (theta - phi + s).cos());
            (product - sum).abs()
        })
        .fold(0.0, f64::max)
}
