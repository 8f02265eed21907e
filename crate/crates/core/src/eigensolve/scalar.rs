use std::fmt::Debug;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::Llt;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Field the iterative solver runs in: `f64` for real symmetric operators,
/// `C64` otherwise.
pub(crate) trait Scalar:
    Copy
    + Send
    + Sync
    + Default
    + Debug
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + faer::traits::ComplexField
    + 'static
{
    fn from_c64(z: C64) -> Self;
    fn to_c64(self) -> C64;
    fn from_f64(x: f64) -> Self;
    fn conj(self) -> Self;
    fn abs2(self) -> f64;
    fn re(self) -> f64;
    fn im(self) -> f64;
    fn random(rng: &mut impl rand::Rng) -> Self;

    /// All eigenpairs of a Hermitian `m × m` matrix stored column-major,
    /// eigenvalues ascending, eigenvectors column-major.
    fn eigh(a: &[Self], m: usize) -> Result<(Vec<f64>, Vec<Self>)>;

    fn factor(n: usize, triplets: &[(usize, usize, Self)]) -> Result<Cholesky<Self>>;

    fn solve(factor: &Cholesky<Self>, rhs: &mut Mat<Self>);
}

/// Sparse Cholesky factor of a positive definite operator.
pub(crate) struct Cholesky<T: faer::traits::ComplexField> {
    llt: Llt<usize, T>,
}

pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::default(), |acc, (&x, &y)| acc + x.conj() * y)
}

pub(crate) fn norm<T: Scalar>(a: &[T]) -> f64 {
    a.iter().map(|x| x.abs2()).sum::<f64>().sqrt()
}

/// `y ← y − c·x`
pub(crate) fn axpy_sub<T: Scalar>(y: &mut [T], c: T, x: &[T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi -= c * xi;
    }
}

pub(crate) fn scale<T: Scalar>(y: &mut [T], s: f64) {
    let s = T::from_f64(s);
    for yi in y.iter_mut() {
        *yi *= s;
    }
}

macro_rules! linalg_impl {
    ($t:ty) => {
        fn eigh(a: &[Self], m: usize) -> Result<(Vec<f64>, Vec<Self>)> {
            let mat = Mat::<$t>::from_fn(m, m, |i, j| a[i + j * m]);
            let evd = mat
                .self_adjoint_eigen(Side::Lower)
                .map_err(|e| Error::Numerical(format!("eigendecomposition failed: {e:?}")))?;
            let s = evd.S().column_vector();
            let u = evd.U();
            let mut values = Vec::with_capacity(m);
            for i in 0..m {
                let v = s[i];
                if Scalar::im(v).abs() > 1e-10 * (1.0 + Scalar::re(v).abs()) {
                    return Err(Error::Numerical("complex eigenvalue of a Hermitian matrix".into()));
                }
                values.push(Scalar::re(v));
            }
            let mut vectors = Vec::with_capacity(m * m);
            for j in 0..m {
                for i in 0..m {
                    vectors.push(u[(i, j)]);
                }
            }
            Ok((values, vectors))
        }

        fn factor(n: usize, triplets: &[(usize, usize, Self)]) -> Result<Cholesky<Self>> {
            let entries: Vec<Triplet<usize, usize, $t>> =
                triplets.iter().filter(|(i, j, _)| i >= j).map(|&(row, col, val)| Triplet { row, col, val }).collect();
            let mat = SparseColMat::<usize, $t>::try_new_from_triplets(n, n, &entries)
                .map_err(|e| Error::Numerical(format!("sparse assembly failed: {e:?}")))?;
            let llt = mat
                .sp_cholesky(Side::Lower)
                .map_err(|e| Error::Numerical(format!("shifted operator is not positive definite: {e:?}")))?;
            Ok(Cholesky { llt })
        }

        fn solve(factor: &Cholesky<Self>, rhs: &mut Mat<Self>) {
            factor.llt.solve_in_place(rhs.as_mut());
        }
    };
}

impl Scalar for f64 {
    fn from_c64(z: C64) -> Self {
        z.re
    }
    fn to_c64(self) -> C64 {
        C64::new(self, 0.0)
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn conj(self) -> Self {
        self
    }
    fn abs2(self) -> f64 {
        self * self
    }
    fn re(self) -> f64 {
        self
    }
    fn im(self) -> f64 {
        0.0
    }
    fn random(rng: &mut impl rand::Rng) -> Self {
        rng.random::<f64>() - 0.5
    }
    linalg_impl!(f64);
}

impl Scalar for C64 {
    fn from_c64(z: C64) -> Self {
        z
    }
    fn to_c64(self) -> C64 {
        self
    }
    fn from_f64(x: f64) -> Self {
        C64::new(x, 0.0)
    }
    fn conj(self) -> Self {
        C64::conj(&self)
    }
    fn abs2(self) -> f64 {
        self.norm_sqr()
    }
    fn re(self) -> f64 {
        self.re
    }
    fn im(self) -> f64 {
        self.im
    }
    fn random(rng: &mut impl rand::Rng) -> Self {
        C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
    }
    linalg_impl!(C64);
}
