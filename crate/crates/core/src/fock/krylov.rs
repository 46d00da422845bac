//! Lanczos approximation of `exp(-iτA)v` for Hermitian sparse `A`.

use nalgebra::DMatrix;

use super::sparse::CsrMatrix;
use crate::error::{Error, Result};
use crate::C64;

#[derive(Clone, Copy, Debug)]
pub struct KrylovOptions {
    /// Largest Krylov dimension per restart.
    pub max_dim: usize,
    /// Error estimate allowed per substep, relative to `‖v‖`.
    pub tol: f64,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        Self {
            max_dim: 30,
            tol: 1e-13,
        }
    }
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

struct Lanczos {
    basis: Vec<Vec<C64>>,
    diag: Vec<f64>,
    off: Vec<f64>,
    /// `β_m`, the norm of the residual leaving the subspace (0 on breakdown).
    residual: f64,
}

fn lanczos(a: &CsrMatrix, v: &[C64], beta0: f64, max_dim: usize) -> Lanczos {
    let n = v.len();
    let max_dim = max_dim.min(n).max(1);
    let mut basis: Vec<Vec<C64>> = vec![v.iter().map(|x| x / beta0).collect()];
    let mut diag = Vec::with_capacity(max_dim);
    let mut off = Vec::with_capacity(max_dim);
    let mut w = vec![C64::new(0.0, 0.0); n];
    let scale = beta0.max(f64::MIN_POSITIVE);
    loop {
        let j = basis.len() - 1;
        a.mul_vec_into(&basis[j], &mut w);
        let alpha = dot(&basis[j], &w).re;
        diag.push(alpha);
        // full reorthogonalization, twice
        for _ in 0..2 {
            for b in &basis {
                let p = dot(b, &w);
                w.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
            }
        }
        let beta = norm(&w);
        if basis.len() == max_dim || beta <= 1e-14 * scale.max(alpha.abs()).max(1.0) {
            let residual = if beta <= 1e-14 * scale.max(alpha.abs()).max(1.0) {
                0.0
            } else {
                beta
            };
            return Lanczos {
                basis,
                diag,
                off,
                residual,
            };
        }
        off.push(beta);
        basis.push(w.iter().map(|x| x / beta).collect());
    }
}

/// `exp(-iτT)e₁` for the tridiagonal `T`.
fn tridiagonal_expm_e1(diag: &[f64], off: &[f64], tau: f64) -> Vec<C64> {
    let m = diag.len();
    let mut t = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = diag[i];
        if i + 1 < m {
            t[(i, i + 1)] = off[i];
            t[(i + 1, i)] = off[i];
        }
    }
    let eig = t.symmetric_eigen();
    let z = &eig.eigenvectors;
    (0..m)
        .map(|i| {
            (0..m)
                .map(|k| z[(i, k)] * z[(0, k)] * C64::from_polar(1.0, -tau * eig.eigenvalues[k]))
                .sum()
        })
        .collect()
}

/// `exp(-iτA)v` with adaptive substeps so every substep's error estimate stays below `tol`.
pub fn expm_multiply(a: &CsrMatrix, v: &[C64], tau: f64, opts: KrylovOptions) -> Result<Vec<C64>> {
    if a.nrows() != v.len() || a.ncols() != v.len() {
        return Err(Error::Dimension {
            expected: a.nrows(),
            got: v.len(),
        });
    }
    let mut w = v.to_vec();
    let mut remaining = tau;
    let mut step = tau;
    let min_step = tau.abs() * 1e-10;
    while remaining.abs() > 0.0 {
        let beta0 = norm(&w);
        if beta0 == 0.0 {
            return Ok(w);
        }
        let lz = lanczos(a, &w, beta0, opts.max_dim);
        let m = lz.diag.len();
        step = step.abs().min(remaining.abs()).copysign(remaining);
        let coeffs = loop {
            let c = tridiagonal_expm_e1(&lz.diag, &lz.off, step);
            let err = lz.residual * c[m - 1].norm();
            if err <= opts.tol || lz.residual == 0.0 {
                break c;
            }
            if step.abs() <= min_step {
                return Err(Error::Krylov { residual: err });
            }
            step *= 0.5;
        };
        let mut next = vec![C64::new(0.0, 0.0); w.len()];
        for (b, c) in lz.basis.iter().zip(&coeffs) {
            let s = c * beta0;
            next.iter_mut().zip(b).for_each(|(x, y)| *x += s * y);
        }
        w = next;
        remaining -= step;
        if remaining.abs() < 1e-15 * tau.abs() {
            break;
        }
        step *= 2.0;
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn diagonal_phases() {
        let d: Vec<C64> = (0..50).map(|i| C64::new(i as f64 * 0.7, 0.0)).collect();
        let a = CsrMatrix::diagonal(&d);
        let v: Vec<C64> = (0..50).map(|i| C64::new(1.0, i as f64).unscale(60.0)).collect();
        let out = expm_multiply(&a, &v, 1.3, KrylovOptions::default()).unwrap();
        for i in 0..50 {
            let exact = v[i] * C64::from_polar(1.0, -1.3 * d[i].re);
            assert!((out[i] - exact).norm() < 1e-12);
        }
    }

    #[test]
    fn matches_dense_exponential() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 40;
        let x = DMatrix::<C64>::from_fn(n, n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let h = (&x + x.adjoint()) * C64::new(0.5, 0.0);
        let rows = (0..n).map(|r| (0..n).map(|c| (c, h[(r, c)])).collect()).collect();
        let a = CsrMatrix::from_rows(n, n, rows);
        let v: Vec<C64> = (0..n).map(|i| C64::new((i as f64).sin(), 0.3)).collect();
        let out = expm_multiply(&a, &v, 2.0, KrylovOptions::default()).unwrap();
        let eig = h.symmetric_eigen();
        let ph = eig.eigenvalues.map(|e| C64::from_polar(1.0, -2.0 * e));
        let u = &eig.eigenvectors * DMatrix::from_diagonal(&ph) * eig.eigenvectors.adjoint();
        let exact = u * nalgebra::DVector::from_vec(v.clone());
        for i in 0..n {
            assert!((out[i] - exact[i]).norm() < 1e-10);
        }
        assert!((norm(&out) - norm(&v)).abs() < 1e-11);
    }
}
