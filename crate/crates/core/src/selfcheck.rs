//! Built-in invariant suite behind `qubitmech check`.

use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::eigensolve::{lowest_eigenpairs, richardson, solve, SolverPath, DENSE_TOL};
use crate::mechanics::{
    classical_splitting, first_order_splitting, fluxonium_e2m, fluxonium_m2e, transmon_e2m, transmon_m2e, zeropi_e2m,
    zeropi_m2e, zeropi_potential_identity_check,
};
use crate::operators::{
    default_fluxonium_basis, fluxonium_hamiltonian_with, transmon_charge_hamiltonian, transmon_twisted_grid_with,
    BasisSpec, Stencil,
};
use crate::params::{FluxoniumParams, TransmonParams, ZeroPiParams};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub checks: Vec<CheckResult>,
}

impl CheckReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            writeln!(s, "[{tag}] {:<24} {}", c.name, c.detail).unwrap();
        }
        let passed = self.checks.iter().filter(|c| c.passed).count();
        writeln!(s, "{passed}/{} checks passed", self.checks.len()).unwrap();
        s
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

fn check(name: &'static str, outcome: crate::Result<(bool, String)>) -> CheckResult {
    match outcome {
        Ok((passed, detail)) => CheckResult { name, passed, detail },
        Err(e) => CheckResult { name, passed: false, detail: format!("error: {e}") },
    }
}

/// Runs every check with the standard stencil.
pub fn run_checks() -> CheckReport {
    run_checks_with_stencil_side(Stencil::CENTRAL.side)
}

/// Runs the checks with a perturbed off-diagonal stencil weight; any value
/// other than 1 must make the grid checks fail.
#[doc(hidden)]
pub fn run_checks_with_stencil_side(side: f64) -> CheckReport {
    let stencil = Stencil { side };
    let checks = vec![
        check("rotor_limit", rotor_limit()),
        check("grid_rotor_limit", grid_rotor_limit(stencil)),
        check("harmonic_limit", harmonic_limit(stencil)),
        check("cross_basis", cross_basis(stencil)),
        check("dense_vs_iterative", dense_vs_iterative(stencil)),
        check("zeropi_identity", zeropi_identity()),
        check("mapping_round_trips", mapping_round_trips()),
        check("classical_statics", classical_statics()),
    ];
    CheckReport { checks }
}

fn rotor_limit() -> crate::Result<(bool, String)> {
    let p = TransmonParams { e_c: 1.0, e_j: 0.0, n_g: 0.0, phi_ext: 0.0 };
    let s = lowest_eigenpairs(&transmon_charge_hamiltonian(&p, 10)?, 5, DENSE_TOL)?;
    let err = s.energies().iter().zip([0.0, 4.0, 4.0, 16.0, 16.0]).map(|(a, b)| rel(*a, b)).fold(0.0, f64::max);
    Ok((err <= 1e-8, format!("max rel err {err:.3e} vs {{0,4,4,16,16}}")))
}

fn grid_rotor_limit(stencil: Stencil) -> crate::Result<(bool, String)> {
    // the three-point rotor on N points has eigenvalues 4E_C·(2 − 2cos(2πm/N))/h²
    let n = 64;
    let p = TransmonParams { e_c: 1.0, e_j: 0.0, n_g: 0.0, phi_ext: 0.0 };
    let s = lowest_eigenpairs(&transmon_twisted_grid_with(&p, n, stencil)?, 5, DENSE_TOL)?;
    let h = TAU / n as f64;
    let exact = [0, 1, 1, 2, 2].map(|m: i32| 4.0 * (2.0 - 2.0 * (TAU * m as f64 / n as f64).cos()) / (h * h));
    let err = s.energies().iter().zip(exact).map(|(a, b)| rel(*a, b)).fold(0.0, f64::max);
    Ok((err <= 1e-9, format!("max rel err {err:.3e} vs discrete rotor")))
}

fn harmonic_limit(stencil: Stencil) -> crate::Result<(bool, String)> {
    let p = FluxoniumParams { e_c: 1.0, e_l: 0.5, e_j: 0.0, phi_ext: 0.0 };
    let h = fluxonium_hamiltonian_with(&p, &default_fluxonium_basis(&p), stencil)?;
    let s = lowest_eigenpairs(&h, 4, DENSE_TOL)?;
    let w = (8.0 * p.e_c * p.e_l).sqrt();
    let err = s.energies().iter().enumerate().map(|(k, e)| rel(*e, w * (k as f64 + 0.5))).fold(0.0, f64::max);
    Ok((err <= 1e-4, format!("max rel err {err:.3e} vs oscillator ladder")))
}

fn cross_basis(stencil: Stencil) -> crate::Result<(bool, String)> {
    let p = TransmonParams { e_c: 1.0, e_j: 10.0, n_g: 0.25, phi_ext: 0.0 };
    let charge = lowest_eigenpairs(&transmon_charge_hamiltonian(&p, 30)?, 4, DENSE_TOL)?;
    let coarse = lowest_eigenpairs(&transmon_twisted_grid_with(&p, 256, stencil)?, 4, DENSE_TOL)?;
    let fine = lowest_eigenpairs(&transmon_twisted_grid_with(&p, 512, stencil)?, 4, DENSE_TOL)?;
    let grid = richardson(coarse.energies(), fine.energies(), 2.0, 2);
    let err = grid.iter().zip(charge.energies()).map(|(a, b)| rel(*a, *b)).fold(0.0, f64::max);
    Ok((err <= 1e-6, format!("max rel diff {err:.3e} charge vs extrapolated grid")))
}

fn dense_vs_iterative(stencil: Stencil) -> crate::Result<(bool, String)> {
    let p = FluxoniumParams { e_c: 1.0, e_l: 0.5, e_j: 8.0, phi_ext: 2.5 };
    let h = fluxonium_hamiltonian_with(&p, &BasisSpec::bounded(13.0, 500), stencil)?;
    let d = solve(&h, 4, 1e-10, SolverPath::Dense)?;
    let i = solve(&h, 4, 1e-8, SolverPath::Iterative)?;
    let err = d.energies().iter().zip(i.energies()).map(|(a, b)| rel(*a, *b)).fold(0.0, f64::max);
    Ok((err <= 1e-8, format!("max rel diff {err:.3e}")))
}

fn zeropi_identity() -> crate::Result<(bool, String)> {
    let p = ZeroPiParams { e_c_phi: 1.0, e_c_theta: 1.0, e_j: 5.0, e_l: 1.0, phi_ext: 0.7 };
    let dev = zeropi_potential_identity_check(&p, 1000);
    Ok((dev <= 1e-12 * p.e_j, format!("max deviation {dev:.3e} over 1000 samples")))
}

fn mapping_round_trips() -> crate::Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let mut draw = |lo: f64, hi: f64| lo + (hi - lo) * rng.random::<f64>();
        let (e_c, e_j, e_l, l, x) =
            (draw(0.05, 20.0), draw(0.1, 80.0), draw(0.05, 5.0), draw(0.1, 5.0), draw(0.0, TAU));
        let t = TransmonParams { e_c, e_j, n_g: x / TAU, phi_ext: x };
        let tb = transmon_m2e(&transmon_e2m(&t, l)?)?;
        let f = FluxoniumParams { e_c, e_l, e_j, phi_ext: x };
        let fb = fluxonium_m2e(&fluxonium_e2m(&f, l)?)?;
        let z = ZeroPiParams { e_c_phi: e_c, e_c_theta: e_l, e_j, e_l, phi_ext: x };
        let zb = zeropi_m2e(&zeropi_e2m(&z, l)?)?;
        for (a, b) in [
            (tb.e_c, e_c),
            (tb.e_j, e_j),
            (fb.e_c, e_c),
            (fb.e_l, e_l),
            (fb.e_j, e_j),
            (zb.e_c_phi, e_c),
            (zb.e_c_theta, e_l),
            (zb.e_j, e_j),
            (zb.e_l, e_l),
        ] {
            worst = worst.max((a - b).abs() / b.abs());
        }
    }
    Ok((worst <= 1e-12, format!("max rel err {worst:.3e} over 100 sets")))
}

fn classical_statics() -> crate::Result<(bool, String)> {
    let p = FluxoniumParams { e_c: 1.0, e_l: 0.5, e_j: 50.0, phi_ext: 0.75 * PI };
    let s = classical_splitting(&p)?;
    let first = first_order_splitting(&p);
    let err = (s - first).abs() / first;
    Ok((err <= 0.05, format!("splitting {s:.6} vs first order {first:.6} (rel {err:.3e})")))
}
