//! Small dense linear-algebra helpers on `DMatrix<Complex64>`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest singular value.
pub fn spectral_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .singular_values()
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

/// Eigenvalues of the Hermitian part `(m + m†)/2`, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().cloned().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}

/// Entrywise complex conjugate.
pub fn conj(m: &CMatrix) -> CMatrix {
    m.map(|c| c.conj())
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().iter().sum()
}

pub fn hermitian_defect(m: &CMatrix) -> f64 {
    frobenius(&(m - m.adjoint()))
}

pub fn symmetric_defect(m: &CMatrix) -> f64 {
    frobenius(&(m - m.transpose()))
}

pub fn is_finite(m: &CMatrix) -> bool {
    m.iter().all(|c| c.re.is_finite() && c.im.is_finite())
}

/// `|v⟩⟨w|`
pub fn outer(v: &[C64], w: &[C64]) -> CMatrix {
    CMatrix::from_fn(v.len(), w.len(), |i, j| v[i] * w[j].conj())
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Real scalar as a complex number.
#[inline]
pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

pub const I: C64 = C64 { re: 0.0, im: 1.0 };
