use std::f64::consts::TAU;

use num_complex::Complex64 as C64;

use super::{BasisSpec, HermitianOperator};
use crate::error::{Error, Result};
use crate::params::{FluxoniumParams, TransmonParams, Validate, ZeroPiParams};

/// Margin (GHz) between the potential at a Dirichlet wall and the estimated
/// ground energy.
const WALL_MARGIN: f64 = 40.0;

/// Second-difference stencil `(side, −2, side)/h²`. `side` is exactly 1 for
/// every public assembly routine; the self-check perturbs it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Stencil {
    pub side: f64,
}

impl Stencil {
    pub const CENTRAL: Stencil = Stencil { side: 1.0 };
}

fn real(v: f64) -> C64 {
    C64::new(v, 0.0)
}

/// `E_j (1 − cos(φ − φ_ext))`.
pub fn transmon_potential(p: &TransmonParams, phi: f64) -> f64 {
    p.e_j * (1.0 - (phi - p.phi_ext).cos())
}

/// `½ E_L φ² + E_j (1 − cos(φ − φ_ext))`.
pub fn fluxonium_potential(p: &FluxoniumParams, phi: f64) -> f64 {
    0.5 * p.e_l * phi * phi + p.e_j * (1.0 - (phi - p.phi_ext).cos())
}

/// Product form `−2 E_j cos θ cos(φ − φ_ext/2) + E_l φ²`.
pub fn zeropi_potential(p: &ZeroPiParams, theta: f64, phi: f64) -> f64 {
    -2.0 * p.e_j * theta.cos() * (phi - 0.5 * p.phi_ext).cos() + p.e_l * phi * phi
}

/// Sum-of-cosines form `−E_j [cos(θ + φ − φ_ext/2) + cos(θ − φ + φ_ext/2)] + E_l φ²`.
pub fn zeropi_potential_sum_form(p: &ZeroPiParams, theta: f64, phi: f64) -> f64 {
    let shift = 0.5 * p.phi_ext;
    -p.e_j * ((theta + phi - shift).cos() + (theta - phi + shift).cos()) + p.e_l * phi * phi
}

/// `max(30, ⌈5 (E_j/E_C)^¼ + |n_g|⌉)`.
pub fn default_charge_cutoff(p: &TransmonParams) -> usize {
    let est = (5.0 * (p.e_j / p.e_c).powf(0.25) + p.n_g.abs()).ceil();
    30usize.max(est as usize)
}

/// Smallest `x_max` passing the fluxonium wall check.
pub fn fluxonium_min_x_max(p: &FluxoniumParams) -> f64 {
    let e0 = 0.5 * (8.0 * p.e_c * p.e_l).sqrt();
    (2.0 * (e0 + WALL_MARGIN) / p.e_l).sqrt()
}

/// Smallest φ half-width passing the 0-π wall check.
pub fn zeropi_min_x_max(p: &ZeroPiParams) -> f64 {
    let e0 = (p.e_c_phi * p.e_l).sqrt();
    ((e0 + WALL_MARGIN) / p.e_l).sqrt()
}

/// 800 interior points on `[−x_max, x_max]` with `x_max = max(12, wall check)`.
pub fn default_fluxonium_basis(p: &FluxoniumParams) -> BasisSpec {
    let x_max = 12.0f64.max(round_up(fluxonium_min_x_max(p)));
    BasisSpec::bounded(x_max, 800)
}

/// 96 θ points; φ half-width `max(10, wall check)` sampled no coarser than
/// the 160-point grid on `[−10, 10]`.
pub fn default_zeropi_basis(p: &ZeroPiParams) -> BasisSpec {
    let x_max = 10.0f64.max(round_up(zeropi_min_x_max(p)));
    let n_phi = ((161.0 * x_max / 10.0).ceil() as usize - 1).max(160);
    BasisSpec::product(BasisSpec::periodic(96, 0.0), BasisSpec::bounded(x_max, n_phi))
}

// Rounds up to 1e-3 so defaults are short decimals and clear the check.
fn round_up(x: f64) -> f64 {
    (x * 1000.0).ceil() / 1000.0
}

/// Transmon in the charge basis: diagonal `4E_C(m − n_g)² + E_j`, with
/// `−(E_j/2) e^{−iφ_ext}` on `(m+1, m)` and its conjugate on `(m, m+1)`.
pub fn transmon_charge_hamiltonian(p: &TransmonParams, n_max: usize) -> Result<HermitianOperator> {
    let p = p.validate()?;
    let basis = BasisSpec::charge(n_max);
    basis.validate()?;
    let dim = basis.dim();
    let hop = C64::from_polar(0.5 * p.e_j, -p.phi_ext) * -1.0;
    let mut t = Vec::with_capacity(3 * dim);
    for i in 0..dim {
        let m = i as f64 - n_max as f64;
        t.push((i, i, real(4.0 * p.e_c * (m - p.n_g).powi(2) + p.e_j)));
        if i + 1 < dim && p.e_j != 0.0 {
            t.push((i + 1, i, hop));
            t.push((i, i + 1, hop.conj()));
        }
    }
    Ok(HermitianOperator::from_triplets(basis, t))
}

/// Transmon after the gauge substitution `ψ(φ) = e^{i n_g φ} u(φ)`:
/// `−4E_C ∂²_φ + E_j(1 − cos(φ − φ_ext))` on a `2π`-periodic grid, with the
/// offset charge entering only through the twisted boundary
/// `u(φ + 2π) = e^{−2πi n_g} u(φ)`. In the half-angle variable `φ/2` the
/// kinetic term reads `−E_C ∂²`; the matrix is the same.
pub fn transmon_twisted_grid_hamiltonian(p: &TransmonParams, n_points: usize) -> Result<HermitianOperator> {
    transmon_twisted_grid_with(p, n_points, Stencil::CENTRAL)
}

pub(crate) fn transmon_twisted_grid_with(
    p: &TransmonParams,
    n_points: usize,
    stencil: Stencil,
) -> Result<HermitianOperator> {
    let p = p.validate()?;
    if n_points < 16 {
        return Err(Error::DimensionTooSmall { what: "n_points", got: n_points, min: 16 });
    }
    let basis = BasisSpec::periodic(n_points, p.n_g);
    let h = basis.spacing().unwrap();
    let kin = 4.0 * p.e_c / (h * h);
    let wrap = C64::from_polar(1.0, -TAU * p.n_g);
    let mut t = Vec::with_capacity(3 * n_points);
    for (k, phi) in basis.coordinates().into_iter().enumerate() {
        t.push((k, k, real(2.0 * kin + transmon_potential(&p, phi))));
        let off = real(-kin * stencil.side);
        if k + 1 < n_points {
            t.push((k, k + 1, off));
            t.push((k + 1, k, off));
        } else {
            // u_N = e^{−2πi n_g} u_0
            t.push((k, 0, off * wrap));
            t.push((0, k, off * wrap.conj()));
        }
    }
    Ok(HermitianOperator::from_triplets(basis, t))
}

/// Fluxonium on a Dirichlet grid: `−4E_C ∂²_φ + ½E_Lφ² + E_j(1 − cos(φ − φ_ext))`.
///
/// Fails with `DomainTooSmall` unless `½E_L·x_max² ≥ ½√(8E_C E_L) + 40`.
pub fn fluxonium_hamiltonian(p: &FluxoniumParams, basis: &BasisSpec) -> Result<HermitianOperator> {
    fluxonium_hamiltonian_with(p, basis, Stencil::CENTRAL)
}

pub(crate) fn fluxonium_hamiltonian_with(
    p: &FluxoniumParams,
    basis: &BasisSpec,
    stencil: Stencil,
) -> Result<HermitianOperator> {
    let p = p.validate()?;
    basis.validate()?;
    let BasisSpec::BoundedGrid { x_max, n_points } = *basis else {
        return Err(Error::UnsupportedBasis { op: "fluxonium_hamiltonian", basis: basis.name() });
    };
    let need = fluxonium_min_x_max(&p);
    if x_max < need {
        return Err(Error::DomainTooSmall(format!(
            "fluxonium x_max = {x_max} but the harmonic tail needs x_max >= {need:.4}"
        )));
    }
    let h = basis.spacing().unwrap();
    let kin = 4.0 * p.e_c / (h * h);
    let mut t = Vec::with_capacity(3 * n_points);
    for (k, phi) in basis.coordinates().into_iter().enumerate() {
        t.push((k, k, real(2.0 * kin + fluxonium_potential(&p, phi))));
        if k + 1 < n_points {
            let off = real(-kin * stencil.side);
            t.push((k, k + 1, off));
            t.push((k + 1, k, off));
        }
    }
    Ok(HermitianOperator::from_triplets(basis.clone(), t))
}

/// Reduced 0-π Hamiltonian on a θ-periodic × φ-Dirichlet product grid:
/// `−E_Cφ ∂²_φ − E_Cθ ∂²_θ − 2E_j cos θ cos(φ − φ_ext/2) + E_l φ²`.
///
/// Fails with `DomainTooSmall` unless `E_l·x_max² ≥ √(E_Cφ E_l) + 40`.
pub fn zeropi_hamiltonian(p: &ZeroPiParams, basis: &BasisSpec) -> Result<HermitianOperator> {
    let p = p.validate()?;
    basis.validate()?;
    let BasisSpec::Product { theta, phi } = basis else {
        return Err(Error::UnsupportedBasis { op: "zeropi_hamiltonian", basis: basis.name() });
    };
    let BasisSpec::PeriodicGrid { n_points: n_theta, twist } = **theta else {
        return Err(Error::UnsupportedBasis { op: "zeropi theta factor", basis: theta.name() });
    };
    if twist != 0.0 {
        return Err(Error::UnsupportedBasis { op: "twisted theta factor", basis: theta.name() });
    }
    let BasisSpec::BoundedGrid { x_max, n_points: n_phi } = **phi else {
        return Err(Error::UnsupportedBasis { op: "zeropi phi factor", basis: phi.name() });
    };
    let need = zeropi_min_x_max(&p);
    if x_max < need {
        return Err(Error::DomainTooSmall(format!("0-pi phi half-width {x_max} but the envelope needs >= {need:.4}")));
    }
    let h_theta = theta.spacing().unwrap();
    let h_phi = phi.spacing().unwrap();
    let kin_theta = p.e_c_theta / (h_theta * h_theta);
    let kin_phi = p.e_c_phi / (h_phi * h_phi);
    let thetas = theta.coordinates();
    let phis = phi.coordinates();
    let idx = |i: usize, j: usize| i * n_phi + j;
    let mut t = Vec::with_capacity(5 * n_theta * n_phi);
    for (i, &th) in thetas.iter().enumerate() {
        let i_next = (i + 1) % n_theta;
        for (j, &ph) in phis.iter().enumerate() {
            let v = 2.0 * kin_theta + 2.0 * kin_phi + zeropi_potential(&p, th, ph);
            t.push((idx(i, j), idx(i, j), real(v)));
            t.push((idx(i, j), idx(i_next, j), real(-kin_theta)));
            t.push((idx(i_next, j), idx(i, j), real(-kin_theta)));
            if j + 1 < n_phi {
                t.push((idx(i, j), idx(i, j + 1), real(-kin_phi)));
                t.push((idx(i, j + 1), idx(i, j), real(-kin_phi)));
            }
        }
    }
    Ok(HermitianOperator::from_triplets(basis.clone(), t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn rotor(n_g: f64) -> TransmonParams {
        TransmonParams { e_c: 1.0, e_j: 0.0, n_g, phi_ext: 0.0 }
    }

    #[test]
    fn free_rotor_diagonal() {
        let h = transmon_charge_hamiltonian(&rotor(0.0), 2).unwrap();
        let diag: Vec<f64> = (0..5).map(|i| h.get(i, i).re).collect();
        assert_eq!(diag, vec![16.0, 4.0, 0.0, 4.0, 16.0]);
        assert_eq!(h.max_abs(), 16.0);
        assert!(h.is_real());
    }

    #[test]
    fn charge_hamiltonian_offdiagonal_phase() {
        let p = TransmonParams { e_c: 1.0, e_j: 2.0, n_g: 0.0, phi_ext: 0.5 };
        let h = transmon_charge_hamiltonian(&p, 3).unwrap();
        let below = h.get(4, 3);
        assert!((below - C64::from_polar(-1.0, -0.5)).norm() < 1e-15);
        assert!((h.get(3, 4) - below.conj()).norm() < 1e-15);
        assert_eq!(h.get(3, 3).re, 2.0);
        assert_eq!(h.hermitian_defect(), 0.0);
    }

    #[test]
    fn charge_cutoff_errors() {
        assert!(matches!(transmon_charge_hamiltonian(&rotor(0.0), 0), Err(Error::DimensionTooSmall { .. })));
        assert!(matches!(transmon_twisted_grid_hamiltonian(&rotor(0.0), 15), Err(Error::DimensionTooSmall { .. })));
    }

    #[test]
    fn twisted_grid_is_hermitian() {
        let p = TransmonParams { e_c: 1.0, e_j: 10.0, n_g: 0.3, phi_ext: 1.0 };
        let h = transmon_twisted_grid_hamiltonian(&p, 64).unwrap();
        assert!(h.hermitian_defect() <= 1e-12 * h.max_abs());
        assert!(!h.is_real());
    }

    #[test]
    fn fluxonium_wall_check() {
        let p = FluxoniumParams { e_c: 1.0, e_l: 0.5, e_j: 8.0, phi_ext: PI };
        let err = fluxonium_hamiltonian(&p, &BasisSpec::bounded(12.0, 200)).unwrap_err();
        assert!(matches!(err, Error::DomainTooSmall(_)));
        let b = default_fluxonium_basis(&p);
        let BasisSpec::BoundedGrid { x_max, n_points } = b else { unreachable!() };
        assert_eq!(n_points, 800);
        assert!(x_max > 12.8 && x_max < 12.81);
        let h = fluxonium_hamiltonian(&p, &b).unwrap();
        assert!(h.is_real());
        assert_eq!(h.hermitian_defect(), 0.0);
        let p1 = FluxoniumParams { e_c: 1.0, e_l: 1.0, e_j: 0.0, phi_ext: 0.0 };
        assert_eq!(default_fluxonium_basis(&p1), BasisSpec::bounded(12.0, 800));
    }

    #[test]
    fn fluxonium_rejects_other_bases() {
        let p = FluxoniumParams { e_c: 1.0, e_l: 1.0, e_j: 0.0, phi_ext: 0.0 };
        assert!(matches!(fluxonium_hamiltonian(&p, &BasisSpec::charge(4)), Err(Error::UnsupportedBasis { .. })));
    }

    #[test]
    fn zeropi_potential_at_cosine_extremum() {
        let p = ZeroPiParams { e_c_phi: 1.0, e_c_theta: 1.0, e_j: 5.0, e_l: 0.3, phi_ext: 1.2 };
        let v = zeropi_potential(&p, 0.0, 0.6);
        assert!((v - (-10.0 + 0.3 * 0.36)).abs() < 1e-14);
    }

    #[test]
    fn zeropi_forms_agree_on_grid() {
        let p = crate::params::PROTECTED_ZEROPI;
        let b = BasisSpec::product(BasisSpec::periodic(32, 0.0), BasisSpec::bounded(50.0, 200));
        let BasisSpec::Product { theta, phi } = &b else { unreachable!() };
        for th in theta.coordinates() {
            for ph in phi.coordinates() {
                let a = zeropi_potential(&p, th, ph);
                let s = zeropi_potential_sum_form(&p, th, ph);
                assert!((a - s).abs() <= 1e-12, "{th} {ph}: {a} vs {s}");
            }
        }
    }

    #[test]
    fn zeropi_assembly_shape() {
        let p = ZeroPiParams { e_c_phi: 1.0, e_c_theta: 1.0, e_j: 1.0, e_l: 2.0, phi_ext: 0.0 };
        let b = BasisSpec::product(BasisSpec::periodic(8, 0.0), BasisSpec::bounded(6.0, 10));
        let h = zeropi_hamiltonian(&p, &b).unwrap();
        assert_eq!(h.dim(), 80);
        assert_eq!(h.hermitian_defect(), 0.0);
        // θ wrap couples the first and last θ rows
        let ht = (TAU / 8.0).powi(2);
        assert!((h.get(0, 7 * 10).re + 1.0 / ht).abs() < 1e-12);
        let small = BasisSpec::product(BasisSpec::periodic(8, 0.0), BasisSpec::bounded(2.0, 10));
        assert!(matches!(zeropi_hamiltonian(&p, &small), Err(Error::DomainTooSmall(_))));
        let twisted = BasisSpec::product(BasisSpec::periodic(8, 0.5), BasisSpec::bounded(6.0, 10));
        assert!(zeropi_hamiltonian(&p, &twisted).is_err());
    }

    #[test]
    fn default_zeropi_grid_for_protected_set() {
        let b = default_zeropi_basis(&crate::params::PROTECTED_ZEROPI);
        let BasisSpec::Product { theta, phi } = &b else { unreachable!() };
        assert_eq!(theta.dim(), 96);
        assert!(phi.spacing().unwrap() <= 20.0 / 161.0 + 1e-12);
    }
}
