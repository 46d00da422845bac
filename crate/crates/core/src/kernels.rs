//! Bogoliubov one-body generator `h(t)`, pairing kernel `K₂(t)` and the projector `Q(t)`.
//!
//! All matrices act on the weighted site basis, in which the coefficient vector of a
//! grid function is an orthonormal expansion. A kernel `k(x, y)` is stored as
//! `c_x k(x,y) c_y`-style entries with quadrature weights folded in, so Hilbert–Schmidt
//! norms are plain Frobenius norms.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::hartree::HartreeTrajectory;
use crate::interaction::{mean_field_potential, mu_pairing, PotentialGrid};
use crate::lattice::{GridFunction, Lattice};
use crate::linalg::{self, conj, frobenius, re, CMatrix, I};

const SYMMETRY_TOL: f64 = 1e-12;
const NORM_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct OneBodyOperator {
    lattice: Option<Lattice>,
    matrix: CMatrix,
    hermitian: bool,
}

impl OneBodyOperator {
    /// Wraps a matrix on the lattice's site basis.
    pub fn new(lattice: &Lattice, matrix: CMatrix, hermitian: bool) -> Result<Self> {
        check_square(&matrix, lattice.sites())?;
        Self::tagged(Some(lattice.clone()), matrix, hermitian)
    }

    /// An operator on an abstract `n`-mode space.
    pub fn from_matrix(matrix: CMatrix, hermitian: bool) -> Result<Self> {
        let n = matrix.nrows();
        check_square(&matrix, n)?;
        Self::tagged(None, matrix, hermitian)
    }

    fn tagged(lattice: Option<Lattice>, matrix: CMatrix, hermitian: bool) -> Result<Self> {
        if hermitian {
            let scale = frobenius(&matrix).max(1.0);
            if linalg::hermitian_defect(&matrix) > SYMMETRY_TOL * scale {
                return Err(Error::contract("operator tagged Hermitian is not Hermitian"));
            }
        }
        Ok(Self {
            lattice,
            matrix,
            hermitian,
        })
    }

    pub fn lattice(&self) -> Option<&Lattice> {
        self.lattice.as_ref()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn norm(&self) -> f64 {
        linalg::spectral_norm(&self.matrix)
    }
}

/// A symmetric two-variable kernel `k(x, y) = k(y, x)`, read as an operator `𝔥̄ → 𝔥`.
#[derive(Clone, Debug)]
pub struct PairKernel {
    lattice: Option<Lattice>,
    matrix: CMatrix,
}

impl PairKernel {
    pub fn new(lattice: &Lattice, matrix: CMatrix) -> Result<Self> {
        check_square(&matrix, lattice.sites())?;
        Self::checked(Some(lattice.clone()), matrix)
    }

    pub fn from_matrix(matrix: CMatrix) -> Result<Self> {
        let n = matrix.nrows();
        check_square(&matrix, n)?;
        Self::checked(None, matrix)
    }

    fn checked(lattice: Option<Lattice>, matrix: CMatrix) -> Result<Self> {
        let scale = frobenius(&matrix).max(1.0);
        if linalg::symmetric_defect(&matrix) > SYMMETRY_TOL * scale {
            return Err(Error::contract("pair kernel is not symmetric"));
        }
        Ok(Self { lattice, matrix })
    }

    pub fn lattice(&self) -> Option<&Lattice> {
        self.lattice.as_ref()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn hs_norm(&self) -> f64 {
        frobenius(&self.matrix)
    }

    pub fn norm(&self) -> f64 {
        linalg::spectral_norm(&self.matrix)
    }
}

fn check_square(m: &CMatrix, n: usize) -> Result<()> {
    if m.nrows() != n {
        return Err(Error::Dimension {
            expected: n,
            got: m.nrows(),
        });
    }
    if m.ncols() != n {
        return Err(Error::Dimension {
            expected: n,
            got: m.ncols(),
        });
    }
    Ok(())
}

fn check_normalized(u: &GridFunction) -> Result<()> {
    let n = u.norm();
    if (n - 1.0).abs() > NORM_TOL {
        return Err(Error::contract(format!("condensate norm {n} differs from 1")));
    }
    Ok(())
}

/// `Q = 1 - |u⟩⟨u|`; rejects `u` whose norm is not 1 within `1e-10`.
pub fn projector_q(u: &GridFunction) -> Result<OneBodyOperator> {
    check_normalized(u)?;
    Ok(projector_unchecked(u))
}

/// `Q` for `u / ‖u‖`.
pub fn projector_q_normalizing(u: &GridFunction) -> Result<OneBodyOperator> {
    if u.norm() == 0.0 {
        return Err(Error::contract("zero condensate"));
    }
    let mut v = u.clone();
    v.normalize();
    Ok(projector_unchecked(&v))
}

fn projector_unchecked(u: &GridFunction) -> OneBodyOperator {
    let c = u.coeffs();
    let m = c.len();
    let matrix = linalg::identity(m) - linalg::outer(c, c);
    OneBodyOperator {
        lattice: Some(u.lattice().clone()),
        matrix,
        hermitian: true,
    }
}

/// Matrix of `w_N(x_i - x_j)` (real symmetric).
pub fn interaction_matrix(wn: &PotentialGrid) -> CMatrix {
    let m = wn.lattice().sites();
    CMatrix::from_fn(m, m, |i, j| re(wn.between(i, j)))
}

/// `K̃₁(x, y) = u(x) w_N(x - y) ū(y)`.
pub fn k1_tilde(u: &GridFunction, wn: &PotentialGrid) -> Result<CMatrix> {
    wn.lattice().check(u.lattice())?;
    let c = u.coeffs();
    let m = c.len();
    Ok(CMatrix::from_fn(m, m, |i, j| {
        c[i] * wn.between(i, j) * c[j].conj()
    }))
}

/// `K̃₂(x, y) = u(x) w_N(x - y) u(y)`.
pub fn k2_tilde(u: &GridFunction, wn: &PotentialGrid) -> Result<CMatrix> {
    wn.lattice().check(u.lattice())?;
    let c = u.coeffs();
    let m = c.len();
    Ok(CMatrix::from_fn(m, m, |i, j| c[i] * wn.between(i, j) * c[j]))
}

/// `K₁ = Q K̃₁ Q`.
pub fn build_k1(u: &GridFunction, wn: &PotentialGrid) -> Result<OneBodyOperator> {
    let q = projector_q(u)?;
    build_k1_with(u, wn, &q)
}

fn build_k1_with(u: &GridFunction, wn: &PotentialGrid, q: &OneBodyOperator) -> Result<OneBodyOperator> {
    let k = k1_tilde(u, wn)?;
    let mut m = &q.matrix * k * &q.matrix;
    symmetrize_hermitian(&mut m);
    OneBodyOperator::new(u.lattice(), m, true)
}

/// `K₂ = Q K̃₂ Qᵀ`, an operator `𝔥̄ → 𝔥`.
pub fn build_k2(u: &GridFunction, wn: &PotentialGrid) -> Result<PairKernel> {
    let q = projector_q(u)?;
    build_k2_with(u, wn, &q)
}

fn build_k2_with(u: &GridFunction, wn: &PotentialGrid, q: &OneBodyOperator) -> Result<PairKernel> {
    let k = k2_tilde(u, wn)?;
    let mut m = &q.matrix * k * q.matrix.transpose();
    symmetrize(&mut m);
    PairKernel::new(u.lattice(), m)
}

/// `(h, h₁, h₂)` with `h = -Δ + w_N*|u|² - μ_N + K₁`, `h₁ = -Δ + 1` and `h₂ = h - h₁`.
pub fn build_h(
    u: &GridFunction,
    wn: &PotentialGrid,
) -> Result<(OneBodyOperator, OneBodyOperator, OneBodyOperator)> {
    let q = projector_q(u)?;
    let parts = HamiltonianParts::assemble(u, wn, &q)?;
    Ok((parts.h, parts.h1, parts.h2))
}

struct HamiltonianParts {
    h: OneBodyOperator,
    h1: OneBodyOperator,
    h2: OneBodyOperator,
    mu: f64,
    potential: Vec<f64>,
}

impl HamiltonianParts {
    fn assemble(u: &GridFunction, wn: &PotentialGrid, q: &OneBodyOperator) -> Result<Self> {
        let lat = u.lattice();
        let v = mean_field_potential(wn, u)?;
        let mu = 0.5 * mu_pairing(&v, u);
        let k1 = build_k1_with(u, wn, q)?;
        let m = lat.sites();

        let mut h2 = k1.matrix;
        for i in 0..m {
            h2[(i, i)] += re(v[i] - mu - 1.0);
        }
        symmetrize_hermitian(&mut h2);
        let h1 = h1_matrix(lat);
        let h = &h1 + &h2;
        Ok(Self {
            h: OneBodyOperator::new(lat, h, true)?,
            h1: OneBodyOperator::new(lat, h1, true)?,
            h2: OneBodyOperator::new(lat, h2, true)?,
            mu,
            potential: v,
        })
    }
}

/// `-Δ + 1`.
pub fn h1_matrix(lattice: &Lattice) -> CMatrix {
    let mut m = lattice.laplacian_matrix();
    for i in 0..lattice.sites() {
        m[(i, i)] += re(1.0);
    }
    symmetrize_hermitian(&mut m);
    m
}

fn symmetrize(m: &mut CMatrix) {
    let t = m.transpose();
    *m += t;
    *m *= re(0.5);
}

fn symmetrize_hermitian(m: &mut CMatrix) {
    let t = m.adjoint();
    *m += t;
    *m *= re(0.5);
}

/// `∂_t K̃₂` along the Hartree flow, using `i∂_t u = (-Δ + w_N*|u|² - μ_N) u`.
pub fn k2_tilde_time_derivative(u: &GridFunction, wn: &PotentialGrid) -> Result<CMatrix> {
    let du = hartree_velocity(u, wn)?;
    let c = u.coeffs();
    let d = du.coeffs();
    let m = c.len();
    Ok(CMatrix::from_fn(m, m, |i, j| {
        wn.between(i, j) * (d[i] * c[j] + c[i] * d[j])
    }))
}

/// `∂_t u = -i(-Δ + w_N*|u|² - μ_N) u`.
pub fn hartree_velocity(u: &GridFunction, wn: &PotentialGrid) -> Result<GridFunction> {
    let v = mean_field_potential(wn, u)?;
    let mu = 0.5 * mu_pairing(&v, u);
    let mut out = u.laplacian();
    for ((o, c), vi) in out.coeffs_mut().iter_mut().zip(u.coeffs()).zip(&v) {
        *o = -I * (*o + c * (vi - mu));
    }
    Ok(out)
}

/// Everything derived from the condensate at one instant.
#[derive(Clone, Debug)]
pub struct KernelSnapshot {
    pub t: f64,
    pub u: GridFunction,
    pub mu: f64,
    pub potential: Vec<f64>,
    pub q: OneBodyOperator,
    pub h: OneBodyOperator,
    pub h1: OneBodyOperator,
    pub h2: OneBodyOperator,
    pub k2: PairKernel,
    pub k2_tilde: CMatrix,
    pub dk2_tilde: CMatrix,
}

impl KernelSnapshot {
    /// Builds all kernels from `u` (normalized first).
    pub fn from_condensate(t: f64, u: &GridFunction, wn: &PotentialGrid) -> Result<Self> {
        let mut u = u.clone();
        u.normalize();
        let q = projector_q(&u)?;
        let parts = HamiltonianParts::assemble(&u, wn, &q)?;
        let k2 = build_k2_with(&u, wn, &q)?;
        Ok(Self {
            t,
            k2_tilde: k2_tilde(&u, wn)?,
            dk2_tilde: k2_tilde_time_derivative(&u, wn)?,
            mu: parts.mu,
            potential: parts.potential,
            h: parts.h,
            h1: parts.h1,
            h2: parts.h2,
            k2,
            q,
            u,
        })
    }
}

/// The pair `(h(t), K₂(t))` driving both the density-matrix equations and `ℍ(t)`.
#[derive(Clone, Debug)]
pub struct Generator {
    pub h: CMatrix,
    pub k2: CMatrix,
}

pub trait GeneratorProvider: Send + Sync {
    fn modes(&self) -> usize;
    fn generator(&self, t: f64) -> Result<Generator>;
}

/// A time-independent generator.
#[derive(Clone, Debug)]
pub struct StaticGenerator {
    pub h: CMatrix,
    pub k2: CMatrix,
}

impl StaticGenerator {
    pub fn new(h: CMatrix, k2: CMatrix) -> Result<Self> {
        check_square(&h, h.nrows())?;
        check_square(&k2, h.nrows())?;
        Ok(Self { h, k2 })
    }
}

impl GeneratorProvider for StaticGenerator {
    fn modes(&self) -> usize {
        self.h.nrows()
    }

    fn generator(&self, _t: f64) -> Result<Generator> {
        Ok(Generator {
            h: self.h.clone(),
            k2: self.k2.clone(),
        })
    }
}

/// Kernels rebuilt from a Hartree trajectory, linearly interpolated between samples.
#[derive(Clone, Debug)]
pub struct HartreeGenerator {
    trajectory: Arc<HartreeTrajectory>,
    wn: PotentialGrid,
}

impl HartreeGenerator {
    pub fn new(trajectory: Arc<HartreeTrajectory>, wn: PotentialGrid) -> Result<Self> {
        wn.lattice().check(&trajectory.lattice)?;
        Ok(Self { trajectory, wn })
    }

    pub fn trajectory(&self) -> &HartreeTrajectory {
        &self.trajectory
    }

    pub fn interaction(&self) -> &PotentialGrid {
        &self.wn
    }

    pub fn snapshot(&self, t: f64) -> Result<KernelSnapshot> {
        KernelSnapshot::from_condensate(t, &self.trajectory.u_at(t), &self.wn)
    }
}

impl GeneratorProvider for HartreeGenerator {
    fn modes(&self) -> usize {
        self.trajectory.lattice.sites()
    }

    fn generator(&self, t: f64) -> Result<Generator> {
        let s = self.snapshot(t)?;
        Ok(Generator {
            h: s.h.into_matrix(),
            k2: s.k2.into_matrix(),
        })
    }
}

/// `conj(Q)`, equal to `Qᵀ` for Hermitian `Q`.
pub fn conjugate(q: &OneBodyOperator) -> CMatrix {
    conj(&q.matrix)
}
