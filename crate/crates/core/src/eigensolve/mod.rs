//! Lowest eigenpairs of Hermitian operators.
//!
//! Small operators are diagonalized in full; larger ones go through a block
//! Lanczos iteration in shift-invert mode (see `lanczos`). Both paths end in
//! the same finalization, so callers see one accuracy and phase contract.

mod lanczos;
mod scalar;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::operators::{BasisSpec, HermitianOperator, DENSE_LIMIT};
use scalar::Scalar;

/// Default residual tolerance of the dense path.
pub const DENSE_TOL: f64 = 1e-10;
/// Default residual tolerance of the iterative path.
pub const ITERATIVE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolverPath {
    /// Dense up to [`DENSE_LIMIT`], iterative above.
    #[default]
    Auto,
    Dense,
    Iterative,
}

impl SolverPath {
    fn resolve(self, dim: usize) -> SolverPath {
        match self {
            SolverPath::Auto if dim <= DENSE_LIMIT => SolverPath::Dense,
            SolverPath::Auto => SolverPath::Iterative,
            p => p,
        }
    }

    /// Tolerance used when none is given.
    pub fn default_tol(self, dim: usize) -> f64 {
        match self.resolve(dim) {
            SolverPath::Dense => DENSE_TOL,
            _ => ITERATIVE_TOL,
        }
    }
}

/// Lowest part of a spectrum.
///
/// States are normalized in the basis inner product, `Σ|ψ_k|²·w = 1` with
/// `w` the quadrature weight of the basis (1 for charge states), so on a
/// grid they sample the wavefunction directly. `residual_bound` bounds
/// `‖Hψ − Eψ‖` in the same norm.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    energies: Vec<f64>,
    states: Vec<Vec<C64>>,
    basis: BasisSpec,
    residual_bound: f64,
}

impl Spectrum {
    /// Assembles a spectrum from precomputed parts; energies must be
    /// ascending and every state must have the basis dimension.
    pub fn from_parts(
        energies: Vec<f64>,
        states: Vec<Vec<C64>>,
        basis: BasisSpec,
        residual_bound: f64,
    ) -> Result<Self> {
        if energies.len() != states.len() {
            return Err(Error::Numerical(format!("{} energies for {} states", energies.len(), states.len())));
        }
        if energies.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Numerical("energies not ascending".into()));
        }
        if let Some(s) = states.iter().find(|s| s.len() != basis.dim()) {
            return Err(Error::Numerical(format!(
                "state of length {} in a basis of dimension {}",
                s.len(),
                basis.dim()
            )));
        }
        Ok(Spectrum { energies, states, basis, residual_bound })
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn states(&self) -> &[Vec<C64>] {
        &self.states
    }

    pub fn state(&self, i: usize) -> &[C64] {
        &self.states[i]
    }

    pub fn basis(&self) -> &BasisSpec {
        &self.basis
    }

    pub fn residual_bound(&self) -> f64 {
        self.residual_bound
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    /// `⟨ψ_i|ψ_j⟩` in the basis inner product.
    pub fn inner(&self, i: usize, j: usize) -> C64 {
        let w = self.basis.weight();
        self.states[i].iter().zip(&self.states[j]).map(|(a, b)| a.conj() * b).sum::<C64>() * w
    }
}

/// Lowest `k` eigenpairs of `h` with residuals at most `tol·(1 + max|E|)`.
pub fn lowest_eigenpairs(h: &HermitianOperator, k: usize, tol: f64) -> Result<Spectrum> {
    solve(h, k, tol, SolverPath::Auto)
}

/// [`lowest_eigenpairs`] with the default tolerance of the chosen path.
pub fn lowest_eigenpairs_default(h: &HermitianOperator, k: usize) -> Result<Spectrum> {
    solve(h, k, SolverPath::Auto.default_tol(h.dim()), SolverPath::Auto)
}

/// [`lowest_eigenpairs`] on an explicitly chosen path.
pub fn solve(h: &HermitianOperator, k: usize, tol: f64, path: SolverPath) -> Result<Spectrum> {
    let n = h.dim();
    if k < 1 || k > n {
        return Err(Error::BadK { k, dim: n });
    }
    if !tol.is_finite() || tol <= 0.0 {
        return Err(Error::NonPositiveInput { field: "tol", value: tol });
    }
    let dense_path = path.resolve(n) == SolverPath::Dense;
    let (energies, vectors) = match (dense_path, h.is_real()) {
        (true, true) => dense::<f64>(h, k)?,
        (true, false) => dense::<C64>(h, k)?,
        (false, true) => iterative::<f64>(h, k, tol)?,
        (false, false) => iterative::<C64>(h, k, tol)?,
    };
    match finalize(h, energies, vectors.clone(), tol) {
        // full diagonalization loses accuracy in proportion to ‖H‖; when that
        // exceeds the tolerance, inverse iteration recovers it
        Err(Error::NoConvergence { .. }) if dense_path => {
            let (energies, vectors) =
                if h.is_real() { polish::<f64>(h, &vectors)? } else { polish::<C64>(h, &vectors)? };
            finalize(h, energies, vectors, tol)
        }
        r => r,
    }
}

fn polish<T: Scalar>(h: &HermitianOperator, vectors: &[Vec<C64>]) -> Result<(Vec<f64>, Vec<Vec<C64>>)> {
    let start = vectors.iter().map(|v| v.iter().map(|&x| T::from_c64(x)).collect()).collect();
    let out = lanczos::polish::<T>(h, start, 2)?;
    let states = out.vectors.into_iter().map(|v| v.into_iter().map(|x| x.to_c64()).collect()).collect();
    Ok((out.energies, states))
}

fn dense<T: Scalar>(h: &HermitianOperator, k: usize) -> Result<(Vec<f64>, Vec<Vec<C64>>)> {
    let n = h.dim();
    let mut a = vec![T::default(); n * n];
    for (i, j, v) in h.triplets() {
        a[i + j * n] = T::from_c64(v);
    }
    let (values, vectors) = T::eigh(&a, n)?;
    let states = (0..k).map(|c| vectors[c * n..(c + 1) * n].iter().map(|x| x.to_c64()).collect()).collect();
    Ok((values[..k].to_vec(), states))
}

fn iterative<T: Scalar>(h: &HermitianOperator, k: usize, tol: f64) -> Result<(Vec<f64>, Vec<Vec<C64>>)> {
    let out = lanczos::lowest::<T>(h, k, tol)?;
    let states = out.vectors.into_iter().map(|v| v.into_iter().map(|x| x.to_c64()).collect()).collect();
    Ok((out.energies, states))
}

fn residual(h: &HermitianOperator, e: f64, v: &[C64]) -> f64 {
    let hv = h.apply_vec(v);
    hv.iter().zip(v).map(|(a, b)| (a - b * e).norm_sqr()).sum::<f64>().sqrt()
}

/// Orthonormalizes exact-degeneracy groups, checks residuals, rescales to
/// the basis inner product and fixes phases.
fn finalize(h: &HermitianOperator, energies: Vec<f64>, mut vecs: Vec<Vec<C64>>, tol: f64) -> Result<Spectrum> {
    let scale = 1.0 + energies.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    let mut start = 0;
    for i in 1..=energies.len() {
        if i == energies.len() || energies[i] - energies[i - 1] > 1e-9 * scale {
            for a in start..i {
                let (done, rest) = vecs.split_at_mut(a);
                let v = &mut rest[0];
                for _ in 0..2 {
                    for u in &done[start..a] {
                        let c: C64 = u.iter().zip(v.iter()).map(|(x, y)| x.conj() * y).sum();
                        for (vi, ui) in v.iter_mut().zip(u) {
                            *vi -= c * ui;
                        }
                    }
                }
                let nrm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
                for vi in v.iter_mut() {
                    *vi /= nrm;
                }
            }
            start = i;
        }
    }

    let mut bound = 0.0f64;
    for (e, v) in energies.iter().zip(&vecs) {
        bound = bound.max(residual(h, *e, v));
    }
    // recomputing Hv − Ev carries rounding of order ε·‖H‖
    let bound = bound * (1.0 + 1e-6) + 4.0 * f64::EPSILON * (h.norm_inf() + scale);
    if bound > tol * scale {
        return Err(Error::NoConvergence { restarts: 0, residual: bound });
    }

    let inv_sqrt_w = 1.0 / h.basis().weight().sqrt();
    for v in vecs.iter_mut() {
        fix_phase(v);
        for x in v.iter_mut() {
            *x *= inv_sqrt_w;
        }
    }
    Spectrum::from_parts(energies, vecs, h.basis().clone(), bound)
}

/// Rotates `v` so its largest entry (first one within 1e-8 of the largest
/// magnitude) is real and positive.
fn fix_phase(v: &mut [C64]) {
    let max = v.iter().fold(0.0f64, |m, x| m.max(x.norm()));
    if max == 0.0 {
        return;
    }
    let p = v.iter().position(|x| x.norm() >= (1.0 - 1e-8) * max).unwrap();
    let rot = v[p].conj() / v[p].norm();
    for x in v.iter_mut() {
        *x *= rot;
    }
    v[p] = C64::new(v[p].norm(), 0.0);
}

/// Partition of level indices into runs whose neighbouring gaps are at most
/// `rel_gap` times the spread of the spectrum.
pub fn degeneracy_groups(s: &Spectrum, rel_gap: f64) -> Vec<Vec<usize>> {
    group_levels(s.energies(), rel_gap)
}

pub(crate) fn group_levels(e: &[f64], rel_gap: f64) -> Vec<Vec<usize>> {
    if e.is_empty() {
        return Vec::new();
    }
    let spread = e[e.len() - 1] - e[0];
    let mut groups = vec![vec![0]];
    for i in 1..e.len() {
        if (e[i] - e[i - 1]).abs() <= rel_gap * spread {
            groups.last_mut().unwrap().push(i);
        } else {
            groups.push(vec![i]);
        }
    }
    groups
}

/// Richardson extrapolation of values computed at spacings `h` (coarse)
/// and `h/ratio` (fine) for a method whose error scales as `h^order`.
pub fn richardson(coarse: &[f64], fine: &[f64], ratio: f64, order: i32) -> Vec<f64> {
    let r = ratio.powi(order);
    coarse.iter().zip(fine).map(|(c, f)| (r * f - c) / (r - 1.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{
        default_zeropi_basis, fluxonium_hamiltonian, transmon_charge_hamiltonian, transmon_twisted_grid_hamiltonian,
        zeropi_hamiltonian, BasisSpec,
    };
    use crate::params::{FluxoniumParams, TransmonParams, PROTECTED_ZEROPI};

    fn diag_op(d: &[f64]) -> HermitianOperator {
        let t = d.iter().enumerate().map(|(i, &x)| (i, i, C64::new(x, 0.0))).collect();
        HermitianOperator::from_triplets(BasisSpec::charge((d.len() - 1) / 2), t)
    }

    fn check_contract(h: &HermitianOperator, s: &Spectrum) {
        let w = s.basis().weight();
        for i in 0..s.len() {
            for j in 0..s.len() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((s.inner(i, j) - expect).norm() <= 1e-8, "inner({i},{j})");
            }
            let v = s.state(i);
            let hv = h.apply_vec(v);
            let r = hv.iter().zip(v).map(|(a, b)| (a - b * s.energies()[i]).norm_sqr()).sum::<f64>() * w;
            assert!(r.sqrt() <= s.residual_bound());
            let max = v.iter().fold(0.0f64, |m, x| m.max(x.norm()));
            let p = v.iter().position(|x| x.norm() >= (1.0 - 1e-8) * max).unwrap();
            assert!(v[p].im == 0.0 && v[p].re > 0.0);
        }
    }

    #[test]
    fn diagonal_matrix_sorts_and_permutes() {
        let h = diag_op(&[3.0, 1.0, 2.0]);
        let s = lowest_eigenpairs(&h, 3, 1e-10).unwrap();
        assert_eq!(s.energies(), &[1.0, 2.0, 3.0]);
        for (level, idx) in [(0, 1), (1, 2), (2, 0)] {
            assert_eq!(s.state(level)[idx], C64::new(1.0, 0.0));
        }
        check_contract(&h, &s);
    }

    #[test]
    fn rotor_levels() {
        let p = TransmonParams { e_c: 1.0, e_j: 0.0, n_g: 0.0, phi_ext: 0.0 };
        let h = transmon_charge_hamiltonian(&p, 2).unwrap();
        let s = lowest_eigenpairs(&h, 3, 1e-10).unwrap();
        for (e, x) in s.energies().iter().zip([0.0, 4.0, 4.0]) {
            assert!((e - x).abs() < 1e-12);
        }
        check_contract(&h, &s);
    }

    #[test]
    fn bad_k_is_rejected() {
        let h = diag_op(&[1.0, 2.0, 3.0]);
        assert!(matches!(lowest_eigenpairs(&h, 0, 1e-10), Err(Error::BadK { .. })));
        assert!(matches!(lowest_eigenpairs(&h, 4, 1e-10), Err(Error::BadK { .. })));
    }

    #[test]
    fn dense_and_iterative_agree() {
        let t = TransmonParams { e_c: 1.0, e_j: 20.0, n_g: 0.3, phi_ext: 0.0 };
        let f = FluxoniumParams { e_c: 1.0, e_l: 0.5, e_j: 8.0, phi_ext: std::f64::consts::PI };
        let ops = [
            transmon_charge_hamiltonian(&t, 30).unwrap(),
            transmon_twisted_grid_hamiltonian(&t, 300).unwrap(),
            fluxonium_hamiltonian(&f, &BasisSpec::bounded(13.0, 600)).unwrap(),
        ];
        for h in &ops {
            let d = solve(h, 5, 1e-10, SolverPath::Dense).unwrap();
            let it = solve(h, 5, 1e-8, SolverPath::Iterative).unwrap();
            check_contract(h, &it);
            for (a, b) in d.energies().iter().zip(it.energies()) {
                assert!((a - b).abs() <= 1e-8 * a.abs().max(1.0), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn dense_meets_tolerance_on_stiff_grid() {
        // ‖H‖ ≈ 1e5 here, so the raw dense residual sits above 1e-10·(1+max|E|)
        let p = TransmonParams { e_c: 1.0, e_j: 1.0, n_g: 0.0, phi_ext: 0.0 };
        let h = transmon_twisted_grid_hamiltonian(&p, 512).unwrap();
        let s = lowest_eigenpairs(&h, 4, DENSE_TOL).unwrap();
        let scale = 1.0 + s.energies()[3].abs();
        assert!(s.residual_bound() <= DENSE_TOL * scale);
        let w = h.basis().weight().sqrt();
        for (k, e) in s.energies().iter().enumerate() {
            let v: Vec<C64> = s.state(k).iter().map(|x| x * w).collect();
            assert!(residual(&h, *e, &v) <= s.residual_bound());
        }
        let charge = lowest_eigenpairs(&transmon_charge_hamiltonian(&p, 30).unwrap(), 4, DENSE_TOL).unwrap();
        for (a, b) in s.energies().iter().zip(charge.energies()) {
            assert!((a - b).abs() < 1e-3 * b.abs().max(1.0));
        }
    }

    #[test]
    fn iterative_handles_exact_degeneracy() {
        let p = TransmonParams { e_c: 1.0, e_j: 0.0, n_g: 0.0, phi_ext: 0.0 };
        let h = transmon_charge_hamiltonian(&p, 20).unwrap();
        let s = solve(&h, 5, 1e-8, SolverPath::Iterative).unwrap();
        for (e, x) in s.energies().iter().zip([0.0, 4.0, 4.0, 16.0, 16.0]) {
            assert!((e - x).abs() < 1e-8, "{e} vs {x}");
        }
        check_contract(&h, &s);
    }

    #[test]
    fn repeated_solves_are_identical() {
        let f = FluxoniumParams { e_c: 1.0, e_l: 0.5, e_j: 8.0, phi_ext: 2.0 };
        let h = fluxonium_hamiltonian(&f, &BasisSpec::bounded(13.0, 400)).unwrap();
        for path in [SolverPath::Dense, SolverPath::Iterative] {
            let a = solve(&h, 4, 1e-8, path).unwrap();
            let b = solve(&h, 4, 1e-8, path).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn coarse_zeropi_dense_and_iterative_agree() {
        let x = crate::operators::zeropi_min_x_max(&PROTECTED_ZEROPI).max(10.0);
        let basis = BasisSpec::product(BasisSpec::periodic(32, 0.0), BasisSpec::bounded(x, 64));
        let h = zeropi_hamiltonian(&PROTECTED_ZEROPI, &basis).unwrap();
        let d = solve(&h, 4, 1e-10, SolverPath::Dense).unwrap();
        let it = solve(&h, 4, 1e-8, SolverPath::Iterative).unwrap();
        for (a, b) in d.energies().iter().zip(it.energies()) {
            assert!((a - b).abs() <= 1e-8 * a.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn full_zeropi_grid_uses_iterative_path() {
        let basis = default_zeropi_basis(&PROTECTED_ZEROPI);
        let h = zeropi_hamiltonian(&PROTECTED_ZEROPI, &basis).unwrap();
        assert!(!h.is_dense());
        let s = lowest_eigenpairs_default(&h, 4).unwrap();
        check_contract(&h, &s);
        assert!(s.energies()[1] - s.energies()[0] < 1e-2 * (s.energies()[2] - s.energies()[1]));
    }

    #[test]
    fn grouping() {
        assert_eq!(group_levels(&[0.0, 1e-6, 5.0], 1e-3), vec![vec![0, 1], vec![2]]);
        assert_eq!(group_levels(&[0.0, 4.0, 4.0, 16.0, 16.0], 1e-6), vec![vec![0], vec![1, 2], vec![3, 4]]);
    }

    #[test]
    fn richardson_removes_leading_error() {
        // f(h) = 1 + h², sampled at h and h/2
        let e = richardson(&[1.0 + 0.01], &[1.0 + 0.0025], 2.0, 2);
        assert!((e[0] - 1.0).abs() < 1e-15);
    }
}
