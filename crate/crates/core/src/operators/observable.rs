use std::f64::consts::TAU;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::{wrap_angle, BasisSpec, HermitianOperator};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Observable {
    /// Reduced flux φ (the φ factor of a product basis).
    Flux,
    /// Charge `n = −i∂_φ`; on a twisted grid this is `n − n_g` in the gauged frame.
    Charge,
    /// Angle θ, wrapped into `(−π, π]` (the θ factor of a product basis).
    Angle,
}

impl Observable {
    pub fn name(self) -> &'static str {
        match self {
            Observable::Flux => "flux",
            Observable::Charge => "charge",
            Observable::Angle => "angle",
        }
    }
}

fn diag(values: &[f64]) -> Vec<(usize, usize, C64)> {
    values.iter().enumerate().map(|(k, &v)| (k, k, C64::new(v, 0.0))).collect()
}

/// Central-difference `−i∂` on a one-dimensional grid, with the twisted
/// wrap for periodic grids.
fn derivative(basis: &BasisSpec) -> Vec<(usize, usize, C64)> {
    let n = basis.dim();
    let h = basis.spacing().unwrap();
    let up = C64::new(0.0, -0.5 / h);
    let mut t = Vec::with_capacity(2 * n);
    for k in 0..n - 1 {
        t.push((k, k + 1, up));
        t.push((k + 1, k, up.conj()));
    }
    if let BasisSpec::PeriodicGrid { twist, .. } = basis {
        let wrap = C64::from_polar(1.0, -TAU * twist);
        t.push((n - 1, 0, up * wrap));
        t.push((0, n - 1, (up * wrap).conj()));
    }
    t
}

/// Matrix of an observable in `basis`.
///
/// The flux is not single valued on the circle of charge states, so `Flux`
/// and `Angle` are rejected in the charge basis; `Angle` is also rejected on
/// a bounded grid, which has no angular coordinate.
pub fn observable_operator(basis: &BasisSpec, which: Observable) -> Result<HermitianOperator> {
    basis.validate()?;
    let unsupported = || Error::UnsupportedObservable { observable: which.name(), basis: basis.name() };
    let triplets = match (basis, which) {
        (BasisSpec::Charge { .. }, Observable::Charge) => diag(&basis.coordinates()),
        (BasisSpec::Charge { .. }, _) => return Err(unsupported()),
        (BasisSpec::BoundedGrid { .. }, Observable::Flux) => diag(&basis.coordinates()),
        (BasisSpec::BoundedGrid { .. }, Observable::Charge) => derivative(basis),
        (BasisSpec::BoundedGrid { .. }, Observable::Angle) => return Err(unsupported()),
        (BasisSpec::PeriodicGrid { .. }, Observable::Flux) => diag(&basis.coordinates()),
        (BasisSpec::PeriodicGrid { .. }, Observable::Charge) => derivative(basis),
        (BasisSpec::PeriodicGrid { .. }, Observable::Angle) => {
            let wrapped: Vec<f64> = basis.coordinates().into_iter().map(wrap_angle).collect();
            diag(&wrapped)
        }
        (BasisSpec::Product { theta, phi }, which) => {
            let n_phi = phi.dim();
            let n_theta = theta.dim();
            match which {
                Observable::Flux => {
                    let x = phi.coordinates();
                    (0..n_theta)
                        .flat_map(|i| x.iter().enumerate().map(move |(j, &v)| (i * n_phi + j, v)))
                        .map(|(k, v)| (k, k, C64::new(v, 0.0)))
                        .collect()
                }
                Observable::Angle => {
                    if !matches!(**theta, BasisSpec::PeriodicGrid { .. }) {
                        return Err(unsupported());
                    }
                    let th = theta.coordinates();
                    (0..n_theta * n_phi).map(|k| (k, k, C64::new(wrap_angle(th[k / n_phi]), 0.0))).collect()
                }
                Observable::Charge => {
                    let d = derivative(phi);
                    (0..n_theta)
                        .flat_map(|i| d.iter().map(move |&(r, c, v)| (i * n_phi + r, i * n_phi + c, v)))
                        .collect()
                }
            }
        }
    };
    Ok(HermitianOperator::from_triplets(basis.clone(), triplets))
}
