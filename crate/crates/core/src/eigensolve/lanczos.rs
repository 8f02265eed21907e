//! Block Lanczos in shift-invert mode with thick restarts.
//!
//! The Krylov space is built from `(H − σ)⁻¹` with σ below the spectrum, so
//! the wanted lowest levels become the dominant, well separated eigenvalues
//! of the iteration operator. A block size above the number of nearly
//! degenerate levels keeps near-degenerate pairs from being missed.

use faer::Mat;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::scalar::{axpy_sub, dot, norm, scale, Cholesky, Scalar};
use crate::error::{Error, Result};
use crate::operators::HermitianOperator;

const SEED: u64 = 0x7175_6269_746d;

/// Row-compressed copy of `H` in the working field.
struct Rows<T> {
    ptr: Vec<usize>,
    col: Vec<usize>,
    val: Vec<T>,
}

impl<T: Scalar> Rows<T> {
    fn new(n: usize, triplets: &[(usize, usize, T)]) -> Self {
        let mut sorted: Vec<_> = triplets.to_vec();
        sorted.sort_by_key(|&(i, j, _)| (i, j));
        let mut ptr = vec![0; n + 1];
        for &(i, _, _) in &sorted {
            ptr[i + 1] += 1;
        }
        for i in 0..n {
            ptr[i + 1] += ptr[i];
        }
        Rows { ptr, col: sorted.iter().map(|t| t.1).collect(), val: sorted.iter().map(|t| t.2).collect() }
    }

    fn apply(&self, x: &[T]) -> Vec<T> {
        (0..self.ptr.len() - 1)
            .map(|i| {
                let mut acc = T::default();
                for p in self.ptr[i]..self.ptr[i + 1] {
                    acc += self.val[p] * x[self.col[p]];
                }
                acc
            })
            .collect()
    }
}

pub(crate) struct Outcome<T> {
    pub energies: Vec<f64>,
    pub vectors: Vec<Vec<T>>,
}

/// Appends the candidates to the orthonormal set `basis`, dropping any that
/// are numerically dependent. At most `limit` vectors are added.
fn extend_orthonormal<T: Scalar>(basis: &mut Vec<Vec<T>>, candidates: Vec<Vec<T>>, limit: usize) -> usize {
    let mut added = 0;
    for mut c in candidates {
        if added == limit {
            break;
        }
        let before = norm(&c);
        if before == 0.0 {
            continue;
        }
        for _ in 0..2 {
            for v in basis.iter() {
                let coef = dot(v, &c);
                axpy_sub(&mut c, coef, v);
            }
        }
        let after = norm(&c);
        if after <= 1e-10 * before {
            continue;
        }
        scale(&mut c, 1.0 / after);
        basis.push(c);
        added += 1;
    }
    added
}

fn random_block<T: Scalar>(n: usize, b: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<T>> {
    (0..b).map(|_| (0..n).map(|_| T::random(rng)).collect()).collect()
}

fn apply_inverse<T: Scalar>(factor: &Cholesky<T>, block: &[Vec<T>]) -> Vec<Vec<T>> {
    let n = block[0].len();
    let mut rhs = Mat::<T>::from_fn(n, block.len(), |i, j| block[j][i]);
    T::solve(factor, &mut rhs);
    (0..block.len()).map(|j| (0..n).map(|i| rhs[(i, j)]).collect()).collect()
}

fn shifted_factor<T: Scalar>(h: &HermitianOperator, triplets: &[(usize, usize, T)]) -> Result<Cholesky<T>> {
    let lower = h.gershgorin_lower_bound();
    let sigma = lower - 1e-3 * lower.abs().max(1.0);
    let mut shifted = triplets.to_vec();
    shifted.extend((0..h.dim()).map(|i| (i, i, T::from_f64(-sigma))));
    T::factor(h.dim(), &merge(shifted))
}

/// Improves approximate lowest eigenvectors by `rounds` steps of block
/// inverse iteration below the spectrum, each followed by Rayleigh–Ritz.
pub(crate) fn polish<T: Scalar>(h: &HermitianOperator, vectors: Vec<Vec<T>>, rounds: usize) -> Result<Outcome<T>> {
    let triplets: Vec<(usize, usize, T)> = h.triplets().into_iter().map(|(i, j, v)| (i, j, T::from_c64(v))).collect();
    let rows = Rows::new(h.dim(), &triplets);
    let factor = shifted_factor(h, &triplets)?;
    let mut out = finish(&rows, vectors)?;
    for _ in 0..rounds {
        out = finish(&rows, apply_inverse(&factor, &out.vectors))?;
    }
    Ok(out)
}

/// Lowest `k` eigenpairs of `h`, accurate to `tol·(1 + max|E|)` in residual.
pub(crate) fn lowest<T: Scalar>(h: &HermitianOperator, k: usize, tol: f64) -> Result<Outcome<T>> {
    let n = h.dim();
    let triplets: Vec<(usize, usize, T)> = h.triplets().into_iter().map(|(i, j, v)| (i, j, T::from_c64(v))).collect();
    let rows = Rows::new(n, &triplets);

    let factor = shifted_factor(h, &triplets)?;

    let b = (k + 1).clamp(4, 16).min(n);
    let m_max = n.min((k + 8 * b).max(40));
    let keep = (k + b).max(m_max / 2).min(m_max.saturating_sub(b).max(k));
    let budget = 50 * k;

    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut v: Vec<Vec<T>> = Vec::with_capacity(m_max);
    let mut w: Vec<Vec<T>> = Vec::with_capacity(m_max);
    extend_orthonormal(&mut v, random_block(n, b, &mut rng), b);

    let mut worst = f64::INFINITY;
    for _ in 0..=budget {
        // grow the Krylov basis to m_max vectors
        loop {
            let pending = &v[w.len()..];
            if pending.is_empty() {
                if v.len() >= m_max {
                    break;
                }
                let room = m_max - v.len();
                extend_orthonormal(&mut v, random_block(n, b, &mut rng), room);
                continue;
            }
            let images = apply_inverse(&factor, pending);
            w.extend(images.iter().cloned());
            if v.len() >= m_max {
                break;
            }
            let room = m_max - v.len();
            extend_orthonormal(&mut v, images, room);
        }

        // Rayleigh–Ritz for the inverse operator
        let m = v.len();
        let mut t = vec![T::default(); m * m];
        for j in 0..m {
            for i in 0..=j {
                let a = dot(&v[i], &w[j]);
                let c = dot(&v[j], &w[i]).conj();
                let x = scale_half(a + c);
                t[i + j * m] = x;
                t[j + i * m] = x.conj();
            }
        }
        let (mu, s) = T::eigh(&t, m)?;
        // largest μ ↔ lowest E
        let order: Vec<usize> = (0..m).rev().collect();
        let take = keep.min(m);
        let mut y = Vec::with_capacity(take);
        let mut z = Vec::with_capacity(take);
        for &c in order.iter().take(take) {
            y.push(combine(&v, &s[c * m..(c + 1) * m]));
            z.push(combine(&w, &s[c * m..(c + 1) * m]));
        }

        worst = 0.0f64;
        let mut scale_e = 0.0f64;
        for yi in y.iter().take(k) {
            let hy = rows.apply(yi);
            let e = dot(yi, &hy).re();
            let mut r = hy;
            axpy_sub(&mut r, T::from_f64(e), yi);
            worst = worst.max(norm(&r));
            scale_e = scale_e.max(e.abs());
        }
        if worst <= 0.5 * tol * (1.0 + scale_e) || m == n {
            return finish(&rows, y.into_iter().take(k).collect());
        }

        let residuals: Vec<Vec<T>> = (0..b.min(take))
            .map(|i| {
                let mut r = z[i].clone();
                axpy_sub(&mut r, T::from_f64(mu[order[i]]), &y[i]);
                r
            })
            .collect();
        v = y;
        w = z;
        let room = m_max - v.len();
        extend_orthonormal(&mut v, residuals, room);
    }
    Err(Error::NoConvergence { restarts: budget, residual: worst })
}

fn scale_half<T: Scalar>(x: T) -> T {
    x * T::from_f64(0.5)
}

fn combine<T: Scalar>(basis: &[Vec<T>], coef: &[T]) -> Vec<T> {
    let n = basis[0].len();
    let mut out = vec![T::default(); n];
    for (b, &c) in basis.iter().zip(coef) {
        if c == T::default() {
            continue;
        }
        for (o, &x) in out.iter_mut().zip(b) {
            *o += c * x;
        }
    }
    out
}

fn merge<T: Scalar>(mut t: Vec<(usize, usize, T)>) -> Vec<(usize, usize, T)> {
    t.sort_by_key(|&(i, j, _)| (i, j));
    let mut out: Vec<(usize, usize, T)> = Vec::with_capacity(t.len());
    for (i, j, x) in t {
        match out.last_mut() {
            Some(last) if last.0 == i && last.1 == j => last.2 += x,
            _ => out.push((i, j, x)),
        }
    }
    out
}

/// Final Rayleigh–Ritz with `H` itself on the converged subspace.
fn finish<T: Scalar>(rows: &Rows<T>, y: Vec<Vec<T>>) -> Result<Outcome<T>> {
    let k = y.len();
    let mut q: Vec<Vec<T>> = Vec::with_capacity(k);
    extend_orthonormal(&mut q, y, k);
    if q.len() < k {
        return Err(Error::Numerical("Ritz vectors lost independence".into()));
    }
    let hq: Vec<Vec<T>> = q.iter().map(|x| rows.apply(x)).collect();
    let mut g = vec![T::default(); k * k];
    for j in 0..k {
        for i in 0..=j {
            let x = scale_half(dot(&q[i], &hq[j]) + dot(&q[j], &hq[i]).conj());
            g[i + j * k] = x;
            g[j + i * k] = x.conj();
        }
    }
    let (energies, s) = T::eigh(&g, k)?;
    let vectors = (0..k).map(|c| combine(&q, &s[c * k..(c + 1) * k])).collect();
    Ok(Outcome { energies, vectors })
}
