//! Physical quantities derived from spectra.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::eigensolve::{lowest_eigenpairs, richardson, Spectrum, DENSE_TOL};
use crate::error::{Error, Result};
use crate::operators::{
    observable_operator, transmon_charge_hamiltonian, transmon_twisted_grid_hamiltonian, wrap_angle, BasisSpec,
    HermitianOperator, Observable,
};
use crate::params::TransmonParams;

/// Summary of the qubit formed by the two lowest levels.
///
/// `disjointness` is the overlap-based measure of [`disjointness`]; matrix
/// elements are `None` when the observable does not exist in the basis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitReport {
    pub f10: f64,
    pub f21: Option<f64>,
    pub anharmonicity: Option<f64>,
    pub flux_mat_el: Option<f64>,
    pub charge_mat_el: Option<f64>,
    pub disjointness: Option<f64>,
}

impl QubitReport {
    /// `|f21 − f10| / f10`.
    pub fn relative_anharmonicity(&self) -> Option<f64> {
        self.anharmonicity.map(|a| a.abs() / self.f10)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
    None,
}

fn check_level(s: &Spectrum, i: usize, j: usize) -> Result<()> {
    let count = s.len();
    if i >= count || j >= count {
        return Err(Error::BadLevel { i, j, count });
    }
    Ok(())
}

/// `E_j − E_i` for `i < j`.
pub fn transition(s: &Spectrum, i: usize, j: usize) -> Result<f64> {
    check_level(s, i, j)?;
    if i >= j {
        return Err(Error::BadLevel { i, j, count: s.len() });
    }
    Ok(s.energies()[j] - s.energies()[i])
}

/// `|E_level(n_g = ½) − E_level(n_g = 0)|` in the charge basis.
pub fn charge_dispersion(p: &TransmonParams, level: usize, n_max: usize) -> Result<f64> {
    if level >= 2 * n_max {
        return Err(Error::BadLevel { i: level, j: level, count: 2 * n_max });
    }
    let at = |n_g: f64| -> Result<f64> {
        let q = TransmonParams { n_g, ..*p };
        let h = transmon_charge_hamiltonian(&q, n_max)?;
        Ok(lowest_eigenpairs(&h, level + 1, DENSE_TOL)?.energies()[level])
    };
    Ok((at(0.5)? - at(0.0)?).abs())
}

/// `|⟨ψ_i|A|ψ_j⟩|` in the basis inner product.
pub fn matrix_element(s: &Spectrum, a: &HermitianOperator, i: usize, j: usize) -> Result<f64> {
    if a.basis() != s.basis() {
        return Err(Error::BasisMismatch);
    }
    check_level(s, i, j)?;
    let av = a.apply_vec(s.state(j));
    let z: C64 = s.state(i).iter().zip(&av).map(|(x, y)| x.conj() * y).sum();
    Ok(z.norm() * s.basis().weight())
}

/// `1 − Σ |ψ_i| |ψ_j| w`, clamped to `[0, 1]`; exactly 0 for `i = j`.
pub fn disjointness(s: &Spectrum, i: usize, j: usize) -> Result<f64> {
    if !s.basis().is_grid() {
        return Err(Error::UnsupportedBasis { op: "disjointness", basis: s.basis().name() });
    }
    check_level(s, i, j)?;
    if i == j {
        return Ok(0.0);
    }
    let overlap: f64 = s.state(i).iter().zip(s.state(j)).map(|(a, b)| a.norm() * b.norm()).sum();
    Ok((1.0 - overlap * s.basis().weight()).clamp(0.0, 1.0))
}

fn reflection(basis: &BasisSpec) -> Option<Vec<usize>> {
    match basis {
        BasisSpec::Product { theta, phi } => {
            let n_phi = phi.dim();
            Some(
                (0..basis.dim())
                    .map(|k| {
                        let (a, b) = (k / n_phi, k % n_phi);
                        theta.reflect_index(a).unwrap() * n_phi + phi.reflect_index(b).unwrap()
                    })
                    .collect(),
            )
        }
        b => (0..b.dim()).map(|k| b.reflect_index(k)).collect(),
    }
}

/// Symmetry of a state under the reflection of its basis about the origin.
pub fn parity_classify(s: &Spectrum, level: usize) -> Parity {
    if level >= s.len() {
        return Parity::None;
    }
    let Some(map) = reflection(s.basis()) else {
        return Parity::None;
    };
    let psi = s.state(level);
    let w = s.basis().weight();
    let dist = |sign: f64| -> f64 {
        (psi.iter().zip(&map).map(|(x, &r)| (x - psi[r] * sign).norm_sqr()).sum::<f64>() * w).sqrt()
    };
    if dist(1.0) <= 1e-6 {
        Parity::Even
    } else if dist(-1.0) <= 1e-6 {
        Parity::Odd
    } else {
        Parity::None
    }
}

/// Probability with θ in `(−π/2, π/2]` and in `(π/2, 3π/2]` for a 0-π state.
pub fn theta_well_occupation(s: &Spectrum, level: usize) -> Result<(f64, f64)> {
    let BasisSpec::Product { theta, phi } = s.basis() else {
        return Err(Error::UnsupportedBasis { op: "theta_well_occupation", basis: s.basis().name() });
    };
    check_level(s, level, level)?;
    let th = theta.coordinates();
    let n_phi = phi.dim();
    let w = s.basis().weight();
    let half = std::f64::consts::FRAC_PI_2;
    let (mut near0, mut near_pi) = (0.0, 0.0);
    for (k, x) in s.state(level).iter().enumerate() {
        let a = wrap_angle(th[k / n_phi]);
        if a > -half && a <= half {
            near0 += x.norm_sqr() * w;
        } else {
            near_pi += x.norm_sqr() * w;
        }
    }
    Ok((near0, near_pi))
}

fn optional(r: Result<f64>) -> Result<Option<f64>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::UnsupportedObservable { .. } | Error::UnsupportedBasis { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Qubit summary of a spectrum with at least two levels.
pub fn qubit_report(s: &Spectrum) -> Result<QubitReport> {
    let f10 = transition(s, 0, 1)?;
    let f21 = if s.len() > 2 { Some(transition(s, 1, 2)?) } else { None };
    let element = |which| optional(observable_operator(s.basis(), which).and_then(|a| matrix_element(s, &a, 0, 1)));
    Ok(QubitReport {
        f10,
        f21,
        anharmonicity: f21.map(|f| f - f10),
        flux_mat_el: element(Observable::Flux)?,
        charge_mat_el: element(Observable::Charge)?,
        disjointness: optional(disjointness(s, 0, 1))?,
    })
}

/// Lowest `k` transmon levels from the twisted grid at `n_points` and
/// `2·n_points`, Richardson-extrapolated to remove the leading `h²` error of
/// the three-point stencil.
pub fn transmon_grid_levels(p: &TransmonParams, n_points: usize, k: usize) -> Result<Vec<f64>> {
    let coarse = lowest_eigenpairs(&transmon_twisted_grid_hamiltonian(p, n_points)?, k, DENSE_TOL)?;
    let fine = lowest_eigenpairs(&transmon_twisted_grid_hamiltonian(p, 2 * n_points)?, k, DENSE_TOL)?;
    Ok(richardson(coarse.energies(), fine.energies(), 2.0, 2))
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::eigensolve::lowest_eigenpairs_default;
    use crate::operators::{default_fluxonium_basis, fluxonium_hamiltonian};
    use crate::params::{FluxoniumParams, DEFAULT_FLUXONIUM};

    fn rotor() -> Spectrum {
        let p = TransmonParams { e_c: 1.0, e_j: 0.0, n_g: 0.0, phi_ext: 0.0 };
        lowest_eigenpairs_default(&transmon_charge_hamiltonian(&p, 2).unwrap(), 3).unwrap()
    }

    fn harmonic() -> Spectrum {
        let p = FluxoniumParams { e_c: 1.0, e_l: 1.0, e_j: 0.0, phi_ext: 0.0 };
        let h = fluxonium_hamiltonian(&p, &default_fluxonium_basis(&p)).unwrap();
        lowest_eigenpairs_default(&h, 3).unwrap()
    }

    fn fluxonium_at(phi_ext: f64) -> Spectrum {
        let p = FluxoniumParams { phi_ext, ..DEFAULT_FLUXONIUM };
        let h = fluxonium_hamiltonian(&p, &default_fluxonium_basis(&p)).unwrap();
        lowest_eigenpairs_default(&h, 4).unwrap()
    }

    #[test]
    fn rotor_transitions() {
        let s = rotor();
        assert!((transition(&s, 0, 1).unwrap() - 4.0).abs() < 1e-12);
        assert!(matches!(transition(&s, 1, 0), Err(Error::BadLevel { .. })));
        assert!(matches!(transition(&s, 0, 3), Err(Error::BadLevel { .. })));
        let sum = transition(&s, 0, 1).unwrap() + transition(&s, 1, 2).unwrap();
        assert_eq!(sum, transition(&s, 0, 2).unwrap());
    }

    #[test]
    fn harmonic_ladder_and_matrix_element() {
        let s = harmonic();
        let w = 8f64.sqrt();
        assert!((transition(&s, 0, 1).unwrap() - w).abs() <= 1e-4 * w);
        // oscillator with m = 1/(8E_C), ω = √(8E_C E_L)
        let m = 1.0 / 8.0;
        let expect = (1.0 / (2.0 * m * w)).sqrt();
        let phi = observable_operator(s.basis(), Observable::Flux).unwrap();
        let got = matrix_element(&s, &phi, 0, 1).unwrap();
        assert!((got - expect).abs() <= 1e-4 * expect, "{got} vs {expect}");
        let back = matrix_element(&s, &phi, 1, 0).unwrap();
        assert!((got - back).abs() <= 1e-12);
        assert_eq!(parity_classify(&s, 0), Parity::Even);
        assert_eq!(parity_classify(&s, 1), Parity::Odd);
    }

    #[test]
    fn identity_matrix_element_vanishes() {
        let s = harmonic();
        let n = s.basis().dim();
        let id =
            HermitianOperator::from_triplets(s.basis().clone(), (0..n).map(|k| (k, k, C64::new(1.0, 0.0))).collect());
        assert!(matrix_element(&s, &id, 0, 1).unwrap() < 1e-10);
        assert!((matrix_element(&s, &id, 1, 1).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn basis_mismatch() {
        let s = harmonic();
        let other = observable_operator(&BasisSpec::bounded(5.0, 50), Observable::Flux).unwrap();
        assert!(matches!(matrix_element(&s, &other, 0, 1), Err(Error::BasisMismatch)));
    }

    #[test]
    fn disjointness_definition() {
        let b = BasisSpec::bounded(1.0, 3);
        let h = b.weight().sqrt().recip();
        let one = C64::new(h, 0.0);
        let zero = C64::default();
        let s =
            Spectrum::from_parts(vec![0.0, 1.0], vec![vec![one, zero, zero], vec![zero, zero, one]], b, 0.0).unwrap();
        assert_eq!(disjointness(&s, 0, 1).unwrap(), 1.0);
        assert_eq!(disjointness(&s, 1, 1).unwrap(), 0.0);
        assert!(matches!(disjointness(&rotor(), 0, 1), Err(Error::UnsupportedBasis { .. })));
    }

    #[test]
    fn fluxonium_wells_and_degeneracy() {
        let off = fluxonium_at(0.75 * PI);
        let on = fluxonium_at(PI);
        let d_off = disjointness(&off, 0, 1).unwrap();
        let d_on = disjointness(&on, 0, 1).unwrap();
        assert!(d_off >= 0.9, "{d_off}");
        assert!(d_on < 0.5 * d_off, "{d_on}");
        assert!(transition(&on, 0, 1).unwrap() < 0.1 * transition(&on, 1, 2).unwrap());
        let mut pair = [parity_classify(&on, 0), parity_classify(&on, 1)];
        pair.sort_by_key(|p| *p as u8);
        assert_eq!(pair, [Parity::Even, Parity::Odd]);
        let r_off = qubit_report(&off).unwrap();
        let r_on = qubit_report(&on).unwrap();
        assert!(r_off.flux_mat_el.unwrap() < 0.1 * r_on.flux_mat_el.unwrap());
        assert!(r_on.f10 < r_off.f10);
    }

    #[test]
    fn transmon_report_has_no_flux_element() {
        let p = TransmonParams { e_c: 1.0, e_j: 20.0, n_g: 0.0, phi_ext: 0.0 };
        let s = lowest_eigenpairs_default(&transmon_charge_hamiltonian(&p, 30).unwrap(), 3).unwrap();
        let r = qubit_report(&s).unwrap();
        assert!(r.flux_mat_el.is_none() && r.disjointness.is_none());
        assert!(r.charge_mat_el.unwrap() > 0.0);
        assert!(r.anharmonicity.unwrap() < 0.0);
    }

    #[test]
    fn rotor_dispersion_is_one() {
        let p = TransmonParams { e_c: 1.0, e_j: 0.0, n_g: 0.0, phi_ext: 0.0 };
        assert!((charge_dispersion(&p, 0, 10).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(charge_dispersion(&p, 20, 10), Err(Error::BadLevel { .. })));
    }

    #[test]
    fn dispersion_extremes_bracket_sweep() {
        let p = TransmonParams { e_c: 1.0, e_j: 5.0, n_g: 0.0, phi_ext: 0.0 };
        let e: Vec<f64> = (0..11)
            .map(|i| {
                let q = TransmonParams { n_g: i as f64 / 10.0, ..p };
                let h = transmon_charge_hamiltonian(&q, 30).unwrap();
                lowest_eigenpairs_default(&h, 1).unwrap().energies()[0]
            })
            .collect();
        let (lo, hi) = e.iter().fold((f64::MAX, f64::MIN), |(a, b), &x| (a.min(x), b.max(x)));
        assert!(((hi - lo) - charge_dispersion(&p, 0, 30).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn dispersion_shrinks_with_ratio() {
        let d = |e_j: f64| charge_dispersion(&TransmonParams { e_c: 1.0, e_j, n_g: 0.0, phi_ext: 0.0 }, 0, 40).unwrap();
        let d50 = d(50.0);
        assert!(d(10.0) > d50);
        assert!(d50 <= 1e-4);
        // doubling the cutoff leaves the value unchanged
        let d80 = charge_dispersion(&TransmonParams { e_c: 1.0, e_j: 50.0, n_g: 0.0, phi_ext: 0.0 }, 0, 80).unwrap();
        assert!((d50 - d80).abs() < 1e-10);
    }

    #[test]
    fn anharmonicity_decreases_with_ratio() {
        let rel: Vec<f64> = [5.0, 10.0, 20.0, 50.0]
            .iter()
            .map(|&e_j| {
                let p = TransmonParams { e_c: 1.0, e_j, n_g: 0.0, phi_ext: 0.0 };
                let s = lowest_eigenpairs_default(&transmon_charge_hamiltonian(&p, 30).unwrap(), 3).unwrap();
                qubit_report(&s).unwrap().relative_anharmonicity().unwrap()
            })
            .collect();
        assert!(rel.windows(2).all(|w| w[1] < w[0]), "{rel:?}");
    }

    #[test]
    fn extrapolated_grid_matches_charge_basis() {
        let p = TransmonParams { e_c: 1.0, e_j: 10.0, n_g: 0.25, phi_ext: 0.0 };
        let grid = transmon_grid_levels(&p, 256, 4).unwrap();
        let charge = lowest_eigenpairs_default(&transmon_charge_hamiltonian(&p, 30).unwrap(), 4).unwrap();
        for (a, b) in grid.iter().zip(charge.energies()) {
            assert!((a - b).abs() <= 1e-6 * a.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn theta_occupation_examples() {
        let b = BasisSpec::product(BasisSpec::periodic(4, 0.0), BasisSpec::bounded(1.0, 3));
        let n = b.dim();
        let w = b.weight();
        let mut at0 = vec![C64::default(); n];
        at0[1] = C64::new(w.sqrt().recip(), 0.0);
        let mut both = vec![C64::default(); n];
        both[1] = C64::new((2.0 * w).sqrt().recip(), 0.0);
        both[2 * 3 + 1] = both[1];
        let s = Spectrum::from_parts(vec![0.0, 1.0], vec![at0, both], b, 0.0).unwrap();
        let (a, c) = theta_well_occupation(&s, 0).unwrap();
        assert!((a - 1.0).abs() < 1e-12 && c.abs() < 1e-12);
        let (a, c) = theta_well_occupation(&s, 1).unwrap();
        assert!((a - 0.5).abs() < 1e-12 && (c - 0.5).abs() < 1e-12);
        assert!(theta_well_occupation(&rotor(), 0).is_err());
    }
}
