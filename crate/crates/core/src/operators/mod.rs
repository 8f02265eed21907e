//! Hamiltonian and observable matrices in explicit bases.

mod basis;
mod hamiltonians;
mod observable;

use faer::Mat;
use num_complex::Complex64 as C64;

pub(crate) use basis::wrap_angle;
pub use basis::BasisSpec;
pub use hamiltonians::{
    default_charge_cutoff, default_fluxonium_basis, default_zeropi_basis, fluxonium_hamiltonian, fluxonium_min_x_max,
    fluxonium_potential, transmon_charge_hamiltonian, transmon_potential, transmon_twisted_grid_hamiltonian,
    zeropi_hamiltonian, zeropi_min_x_max, zeropi_potential, zeropi_potential_sum_form,
};
pub(crate) use hamiltonians::{fluxonium_hamiltonian_with, transmon_twisted_grid_with, Stencil};
pub use observable::{observable_operator, Observable};

/// Operators up to this dimension are stored (and diagonalized) densely.
pub const DENSE_LIMIT: usize = 4096;

/// Compressed sparse row matrix with complex entries.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<C64>,
}

impl CsrMatrix {
    /// Builds an `n × n` matrix from `(row, col, value)` triplets; duplicate
    /// positions are summed.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, C64)>) -> Self {
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<C64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            assert!(r < n && c < n, "triplet ({r}, {c}) outside {n}x{n}");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix { n, row_ptr, col_idx, values }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()].iter().copied().zip(self.values[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.row(i).find(|&(c, _)| c == j).map(|(_, v)| v).unwrap_or_default()
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.n).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }
}

#[derive(Debug, Clone)]
pub enum Storage {
    Dense(Mat<C64>),
    Sparse(CsrMatrix),
}

/// Hermitian matrix tied to the basis it is expressed in.
#[derive(Debug, Clone)]
pub struct HermitianOperator {
    basis: BasisSpec,
    storage: Storage,
    real: bool,
}

impl HermitianOperator {
    /// Assembles an operator from triplets, choosing dense storage up to
    /// [`DENSE_LIMIT`].
    pub fn from_triplets(basis: BasisSpec, triplets: Vec<(usize, usize, C64)>) -> Self {
        let n = basis.dim();
        let real = triplets.iter().all(|(_, _, v)| v.im == 0.0);
        let csr = CsrMatrix::from_triplets(n, triplets);
        let storage = if n <= DENSE_LIMIT {
            let mut m = Mat::<C64>::zeros(n, n);
            for (i, j, v) in csr.triplets() {
                m[(i, j)] = v;
            }
            Storage::Dense(m)
        } else {
            Storage::Sparse(csr)
        };
        HermitianOperator { basis, storage, real }
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn basis(&self) -> &BasisSpec {
        &self.basis
    }

    pub fn storage(&self) -> &Storage {
        &self.storage
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.storage, Storage::Dense(_))
    }

    /// True when every stored entry has a zero imaginary part.
    pub fn is_real(&self) -> bool {
        self.real
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        match &self.storage {
            Storage::Dense(m) => m[(i, j)],
            Storage::Sparse(s) => s.get(i, j),
        }
    }

    /// `y = H x`.
    pub fn apply(&self, x: &[C64], y: &mut [C64]) {
        let n = self.dim();
        assert_eq!(x.len(), n);
        assert_eq!(y.len(), n);
        match &self.storage {
            Storage::Dense(m) => {
                for (i, yi) in y.iter_mut().enumerate() {
                    let mut acc = C64::default();
                    for (j, xj) in x.iter().enumerate() {
                        acc += m[(i, j)] * xj;
                    }
                    *yi = acc;
                }
            }
            Storage::Sparse(s) => {
                for (i, yi) in y.iter_mut().enumerate() {
                    *yi = s.row(i).map(|(j, v)| v * x[j]).sum();
                }
            }
        }
    }

    pub fn apply_vec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::default(); self.dim()];
        self.apply(x, &mut y);
        y
    }

    /// Nonzero entries as `(row, col, value)`.
    pub fn triplets(&self) -> Vec<(usize, usize, C64)> {
        match &self.storage {
            Storage::Dense(m) => {
                let n = self.dim();
                let mut out = Vec::new();
                for j in 0..n {
                    for i in 0..n {
                        let v = m[(i, j)];
                        if v != C64::default() {
                            out.push((i, j, v));
                        }
                    }
                }
                out
            }
            Storage::Sparse(s) => s.triplets().collect(),
        }
    }

    pub fn to_dense(&self) -> Mat<C64> {
        match &self.storage {
            Storage::Dense(m) => m.clone(),
            Storage::Sparse(s) => {
                let mut m = Mat::<C64>::zeros(self.dim(), self.dim());
                for (i, j, v) in s.triplets() {
                    m[(i, j)] = v;
                }
                m
            }
        }
    }

    /// `max|H|` over all entries.
    pub fn max_abs(&self) -> f64 {
        self.triplets().iter().map(|(_, _, v)| v.norm()).fold(0.0, f64::max)
    }

    /// Largest absolute row sum, `‖H‖∞`.
    pub fn norm_inf(&self) -> f64 {
        let mut rows = vec![0.0; self.dim()];
        for (i, _, v) in self.triplets() {
            rows[i] += v.norm();
        }
        rows.into_iter().fold(0.0, f64::max)
    }

    /// `max|H − H†|` over all entries.
    pub fn hermitian_defect(&self) -> f64 {
        match &self.storage {
            Storage::Dense(m) => {
                let n = self.dim();
                let mut worst = 0.0f64;
                for i in 0..n {
                    for j in 0..=i {
                        worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
                    }
                }
                worst
            }
            Storage::Sparse(s) => s.triplets().map(|(i, j, v)| (v - s.get(j, i).conj()).norm()).fold(0.0, f64::max),
        }
    }

    /// Lower bound on the spectrum from Gershgorin discs.
    pub fn gershgorin_lower_bound(&self) -> f64 {
        let n = self.dim();
        let mut diag = vec![0.0; n];
        let mut radius = vec![0.0; n];
        for (i, j, v) in self.triplets() {
            if i == j {
                diag[i] = v.re;
            } else {
                radius[i] += v.norm();
            }
        }
        diag.iter().zip(&radius).map(|(d, r)| d - r).fold(f64::INFINITY, f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csr_sums_duplicates_and_applies() {
        let t = vec![
            (0, 0, C64::new(1.0, 0.0)),
            (0, 1, C64::new(0.0, 1.0)),
            (1, 0, C64::new(0.0, -1.0)),
            (0, 0, C64::new(1.0, 0.0)),
            (1, 1, C64::new(3.0, 0.0)),
        ];
        let csr = CsrMatrix::from_triplets(2, t);
        assert_eq!(csr.nnz(), 4);
        assert_eq!(csr.get(0, 0), C64::new(2.0, 0.0));
        assert_eq!(csr.get(1, 0), C64::new(0.0, -1.0));
        assert_eq!(csr.get(1, 1), C64::new(3.0, 0.0));
    }

    #[test]
    fn dense_and_sparse_apply_agree() {
        let basis = BasisSpec::periodic(5, 0.2);
        let mut t = Vec::new();
        for i in 0..5 {
            t.push((i, i, C64::new(i as f64, 0.0)));
            let j = (i + 1) % 5;
            t.push((i, j, C64::new(0.5, 0.25)));
            t.push((j, i, C64::new(0.5, -0.25)));
        }
        let op = HermitianOperator::from_triplets(basis.clone(), t.clone());
        assert!(op.is_dense());
        assert!(!op.is_real());
        assert_eq!(op.hermitian_defect(), 0.0);
        let csr = CsrMatrix::from_triplets(5, t);
        let x: Vec<C64> = (0..5).map(|k| C64::new(k as f64, 1.0 - k as f64)).collect();
        let y = op.apply_vec(&x);
        for (i, yi) in y.iter().enumerate() {
            let expect: C64 = csr.row(i).map(|(j, v)| v * x[j]).sum();
            assert!((yi - expect).norm() < 1e-14);
        }
        assert!(op.gershgorin_lower_bound() <= 0.0 - 2.0 * C64::new(0.5, 0.25).norm() + 1e-15);
    }
}
