use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Discretization of one or two circuit coordinates.
///
/// * `Charge`: states `|−n_max⟩ … |n_max⟩`, dimension `2·n_max + 1`.
/// * `BoundedGrid`: interior points `x_k = −x_max + (k+1)·h` with
///   `h = 2·x_max/(n_points+1)`; the Dirichlet endpoints are excluded.
/// * `PeriodicGrid`: points `2πk/n_points`; wrap-around couplings carry
///   the phase `e^{∓2πi·twist}`.
/// * `Product`: row-major over `(θ index, φ index)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BasisSpec {
    Charge { n_max: usize },
    BoundedGrid { x_max: f64, n_points: usize },
    PeriodicGrid { n_points: usize, twist: f64 },
    Product { theta: Box<BasisSpec>, phi: Box<BasisSpec> },
}

impl BasisSpec {
    pub fn charge(n_max: usize) -> Self {
        BasisSpec::Charge { n_max }
    }

    pub fn bounded(x_max: f64, n_points: usize) -> Self {
        BasisSpec::BoundedGrid { x_max, n_points }
    }

    pub fn periodic(n_points: usize, twist: f64) -> Self {
        BasisSpec::PeriodicGrid { n_points, twist }
    }

    pub fn product(theta: BasisSpec, phi: BasisSpec) -> Self {
        BasisSpec::Product { theta: Box::new(theta), phi: Box::new(phi) }
    }

    pub fn name(&self) -> &'static str {
        match self {
            BasisSpec::Charge { .. } => "charge",
            BasisSpec::BoundedGrid { .. } => "bounded_grid",
            BasisSpec::PeriodicGrid { .. } => "periodic_grid",
            BasisSpec::Product { .. } => "product",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            BasisSpec::Charge { n_max } => 2 * n_max + 1,
            BasisSpec::BoundedGrid { n_points, .. } | BasisSpec::PeriodicGrid { n_points, .. } => *n_points,
            BasisSpec::Product { theta, phi } => theta.dim() * phi.dim(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            BasisSpec::Charge { n_max } => {
                if *n_max < 1 {
                    return Err(Error::DimensionTooSmall { what: "n_max", got: *n_max, min: 1 });
                }
            }
            BasisSpec::BoundedGrid { x_max, n_points } => {
                if !x_max.is_finite() {
                    return Err(Error::NonFinite { field: "x_max" });
                }
                if *x_max <= 0.0 {
                    return Err(Error::NonPositiveInput { field: "x_max", value: *x_max });
                }
                if *n_points < 3 {
                    return Err(Error::DimensionTooSmall { what: "n_points", got: *n_points, min: 3 });
                }
            }
            BasisSpec::PeriodicGrid { n_points, twist } => {
                if !twist.is_finite() {
                    return Err(Error::NonFinite { field: "twist" });
                }
                if *n_points < 3 {
                    return Err(Error::DimensionTooSmall { what: "n_points", got: *n_points, min: 3 });
                }
            }
            BasisSpec::Product { theta, phi } => {
                if matches!(**theta, BasisSpec::Product { .. }) || matches!(**phi, BasisSpec::Product { .. }) {
                    return Err(Error::UnsupportedBasis { op: "nested product", basis: "product" });
                }
                theta.validate()?;
                phi.validate()?;
            }
        }
        Ok(())
    }

    pub fn is_grid(&self) -> bool {
        !matches!(self, BasisSpec::Charge { .. })
    }

    /// Grid spacing of a one-dimensional grid.
    pub fn spacing(&self) -> Option<f64> {
        match self {
            BasisSpec::BoundedGrid { x_max, n_points } => Some(2.0 * x_max / (*n_points as f64 + 1.0)),
            BasisSpec::PeriodicGrid { n_points, .. } => Some(TAU / *n_points as f64),
            _ => None,
        }
    }

    /// Quadrature weight attached to every basis point. States are
    /// normalized so that `Σ |ψ_k|² · weight = 1`.
    pub fn weight(&self) -> f64 {
        match self {
            BasisSpec::Charge { .. } => 1.0,
            BasisSpec::BoundedGrid { .. } | BasisSpec::PeriodicGrid { .. } => self.spacing().unwrap(),
            BasisSpec::Product { theta, phi } => theta.weight() * phi.weight(),
        }
    }

    /// Coordinates of a one-dimensional grid (charge numbers for `Charge`).
    pub fn coordinates(&self) -> Vec<f64> {
        match self {
            BasisSpec::Charge { n_max } => {
                let n = *n_max as i64;
                (-n..=n).map(|m| m as f64).collect()
            }
            BasisSpec::BoundedGrid { x_max, n_points } => {
                let h = self.spacing().unwrap();
                (0..*n_points).map(|k| -x_max + (k as f64 + 1.0) * h).collect()
            }
            BasisSpec::PeriodicGrid { n_points, .. } => {
                (0..*n_points).map(|k| TAU * k as f64 / *n_points as f64).collect()
            }
            BasisSpec::Product { .. } => Vec::new(),
        }
    }

    /// Index of the mirror image of point `k` under `x → −x`, for grids
    /// symmetric about the origin.
    pub(crate) fn reflect_index(&self, k: usize) -> Option<usize> {
        match self {
            BasisSpec::Charge { n_max } => Some(2 * n_max - k),
            BasisSpec::BoundedGrid { n_points, .. } => Some(n_points - 1 - k),
            BasisSpec::PeriodicGrid { n_points, .. } => Some((n_points - k) % n_points),
            BasisSpec::Product { .. } => None,
        }
    }
}

/// Angle wrapped into `(−π, π]`.
pub(crate) fn wrap_angle(x: f64) -> f64 {
    let mut y = x.rem_euclid(TAU);
    if y > PI {
        y -= TAU;
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimensions() {
        assert_eq!(BasisSpec::charge(2).dim(), 5);
        assert_eq!(BasisSpec::bounded(12.0, 800).dim(), 800);
        let p = BasisSpec::product(BasisSpec::periodic(96, 0.0), BasisSpec::bounded(10.0, 160));
        assert_eq!(p.dim(), 96 * 160);
        assert!((p.weight() - TAU / 96.0 * 20.0 / 161.0).abs() < 1e-15);
    }

    #[test]
    fn bounded_grid_is_symmetric_and_excludes_endpoints() {
        let b = BasisSpec::bounded(1.0, 3);
        let x = b.coordinates();
        assert_eq!(x.len(), 3);
        assert!((x[0] + 0.5).abs() < 1e-15 && x[1].abs() < 1e-15 && (x[2] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn validation_errors() {
        assert!(matches!(BasisSpec::charge(0).validate(), Err(Error::DimensionTooSmall { .. })));
        assert!(BasisSpec::bounded(-1.0, 10).validate().is_err());
        assert!(BasisSpec::periodic(2, 0.0).validate().is_err());
        assert!(BasisSpec::periodic(3, 0.0).validate().is_ok());
    }

    #[test]
    fn angle_wrapping() {
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(0.0), 0.0);
    }
}
