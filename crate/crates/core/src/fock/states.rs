use std::sync::Arc;

use rayon::prelude::*;

use super::basis::{apply_word, FockBasis, Ladder, Sector};
use super::krylov::{expm_multiply, KrylovOptions};
use super::operators::assemble_words;
use super::sparse::CsrMatrix;
use crate::error::{Error, Result};
use crate::lattice::GridFunction;
use crate::linalg::{self, CMatrix};
use crate::pair_dynamics::{quasi_free_defect, PairState};
use crate::C64;

#[derive(Clone, Debug)]
pub struct FockVector {
    basis: Arc<FockBasis>,
    coeffs: Vec<C64>,
}

impl FockVector {
    pub fn zeros(basis: &Arc<FockBasis>) -> Self {
        Self {
            basis: basis.clone(),
            coeffs: vec![C64::new(0.0, 0.0); basis.dim()],
        }
    }

    /// The vacuum; requires a basis containing the zero-particle state.
    pub fn vacuum(basis: &Arc<FockBasis>) -> Result<Self> {
        let mut v = Self::zeros(basis);
        let idx = basis
            .index_of(&vec![0u8; basis.modes()])
            .ok_or_else(|| Error::contract("basis has no vacuum"))?;
        v.coeffs[idx] = C64::new(1.0, 0.0);
        Ok(v)
    }

    pub fn from_coeffs(basis: &Arc<FockBasis>, coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() != basis.dim() {
            return Err(Error::Dimension {
                expected: basis.dim(),
                got: coeffs.len(),
            });
        }
        Ok(Self {
            basis: basis.clone(),
            coeffs,
        })
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [C64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<C64> {
        self.coeffs
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            self.coeffs.iter_mut().for_each(|c| *c /= n);
        }
    }

    pub fn scale(&mut self, s: C64) {
        self.coeffs.iter_mut().for_each(|c| *c *= s);
    }

    pub fn inner(&self, other: &FockVector) -> Result<C64> {
        if !self.basis.is_same(&other.basis) {
            return Err(Error::contract("vectors live on different bases"));
        }
        Ok(self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a.conj() * b).sum())
    }

    /// `self - other`, both on the same basis.
    pub fn sub(&self, other: &FockVector) -> Result<FockVector> {
        if !self.basis.is_same(&other.basis) {
            return Err(Error::contract("vectors live on different bases"));
        }
        Ok(Self {
            basis: self.basis.clone(),
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn apply(&self, op: &CsrMatrix) -> Result<FockVector> {
        if op.ncols() != self.basis.dim() || op.nrows() != self.basis.dim() {
            return Err(Error::Dimension {
                expected: self.basis.dim(),
                got: op.ncols(),
            });
        }
        Ok(Self {
            basis: self.basis.clone(),
            coeffs: op.mul_vec(&self.coeffs),
        })
    }

    /// `⟨self, A self⟩`.
    pub fn expectation(&self, op: &CsrMatrix) -> C64 {
        let av = op.mul_vec(&self.coeffs);
        self.coeffs.iter().zip(&av).map(|(a, b)| a.conj() * b).sum()
    }

    /// `‖P_n v‖²` for `n = 0..=max_particles`.
    pub fn sector_weights(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.basis.max_particles() + 1];
        for (i, c) in self.coeffs.iter().enumerate() {
            w[self.basis.particles(i)] += c.norm_sqr();
        }
        w
    }

    /// Weight in the two highest retained particle-number sectors.
    pub fn truncation_leak(&self) -> f64 {
        let top = self.basis.max_particles();
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(i, _)| self.basis.particles(*i) + 2 > top)
            .map(|(_, c)| c.norm_sqr())
            .sum()
    }

    /// Keeps only the components with at most `n` particles.
    pub fn truncated(&self, n: usize) -> FockVector {
        let mut out = self.clone();
        for (i, c) in out.coeffs.iter_mut().enumerate() {
            if self.basis.particles(i) > n {
                *c = C64::new(0.0, 0.0);
            }
        }
        out
    }

    /// Re-expresses the vector on `target`; components missing there are dropped.
    pub fn restricted_to(&self, target: &Arc<FockBasis>) -> Result<FockVector> {
        if target.modes() != self.basis.modes() {
            return Err(Error::Dimension {
                expected: target.modes(),
                got: self.basis.modes(),
            });
        }
        let mut out = FockVector::zeros(target);
        for (i, c) in self.coeffs.iter().enumerate() {
            if *c == C64::new(0.0, 0.0) {
                continue;
            }
            if let Some(j) = target.index_of(self.basis.occupation(i)) {
                out.coeffs[j] += c;
            }
        }
        Ok(out)
    }

    /// `word · self`, truncated to the basis.
    pub fn apply_word(&self, word: &[Ladder]) -> FockVector {
        let mut out = FockVector::zeros(&self.basis);
        let mut occ = vec![0u8; self.basis.modes()];
        for (i, c) in self.coeffs.iter().enumerate() {
            if *c == C64::new(0.0, 0.0) {
                continue;
            }
            occ.copy_from_slice(self.basis.occupation(i));
            let amp = apply_word(&mut occ, word);
            if amp != 0.0 {
                if let Some(j) = self.basis.index_of(&occ) {
                    out.coeffs[j] += c * amp;
                }
            }
        }
        out
    }

    /// `⟨self, word · self⟩`.
    pub fn word_expectation(&self, word: &[Ladder]) -> C64 {
        let w = self.apply_word(word);
        self.coeffs.iter().zip(&w.coeffs).map(|(a, b)| a.conj() * b).sum()
    }
}

/// `u^{⊗N}` in the occupation basis of a fixed or cutoff space.
pub fn product_state(u: &GridFunction, basis: &Arc<FockBasis>) -> Result<FockVector> {
    let c = u.coeffs();
    if c.len() != basis.modes() {
        return Err(Error::Dimension {
            expected: basis.modes(),
            got: c.len(),
        });
    }
    let n = basis.max_particles();
    let log_fact = |k: usize| (1..=k).map(|i| (i as f64).ln()).sum::<f64>();
    let ln_n = log_fact(n);
    let mut out = FockVector::zeros(basis);
    for i in 0..basis.dim() {
        if basis.particles(i) != n {
            continue;
        }
        let occ = basis.occupation(i);
        let mut amp = C64::new(1.0, 0.0);
        let mut lf = 0.0;
        for (m, &k) in occ.iter().enumerate() {
            amp *= c[m].powu(k as u32);
            lf += log_fact(k as usize);
        }
        out.coeffs[i] = amp * (0.5 * (ln_n - lf)).exp();
    }
    Ok(out)
}

/// `γ[m,n] = ⟨a*_n a_m⟩`, `α[m,n] = ⟨a_n a_m⟩`.
pub fn extract_density_matrices(phi: &FockVector) -> PairState {
    let b = &phi.basis;
    let modes = b.modes();
    let pairs: Vec<(usize, usize)> = (0..modes).flat_map(|m| (0..modes).map(move |n| (m, n))).collect();
    let values: Vec<(C64, C64)> = pairs
        .par_iter()
        .map(|&(m, n)| {
            let g = phi.word_expectation(&[Ladder::Create(n), Ladder::Annihilate(m)]);
            let a = phi.word_expectation(&[Ladder::Annihilate(n), Ladder::Annihilate(m)]);
            (g, a)
        })
        .collect();
    let mut gamma = CMatrix::zeros(modes, modes);
    let mut alpha = CMatrix::zeros(modes, modes);
    for (&(m, n), (g, a)) in pairs.iter().zip(values) {
        gamma[(m, n)] = g;
        alpha[(m, n)] = a;
    }
    PairState { gamma, alpha, t: 0.0 }
}

/// Takagi factors of a complex symmetric `α = Σ σ_k u_k u_kᵀ` with `σ_k > tol`.
pub fn takagi(alpha: &CMatrix, tol: f64) -> Vec<(f64, Vec<C64>)> {
    let m = alpha.nrows();
    let a = alpha.map(|c| c.re);
    let b = alpha.map(|c| c.im);
    let mut big = nalgebra::DMatrix::<f64>::zeros(2 * m, 2 * m);
    big.view_mut((0, 0), (m, m)).copy_from(&a);
    big.view_mut((0, m), (m, m)).copy_from(&b);
    big.view_mut((m, 0), (m, m)).copy_from(&b);
    big.view_mut((m, m), (m, m)).copy_from(&(-&a));
    let eig = big.symmetric_eigen();
    let mut out = Vec::new();
    for k in 0..2 * m {
        let s = eig.eigenvalues[k];
        if s > tol {
            let col = eig.eigenvectors.column(k);
            let u: Vec<C64> = (0..m).map(|i| C64::new(col[i], col[m + i])).collect();
            out.push((s, u));
        }
    }
    out
}

/// Squeezing matrix `λ = Σ r_k u_k u_kᵀ` with `sinh r_k cosh r_k = σ_k`.
pub fn squeezing_matrix(gamma: &CMatrix, alpha: &CMatrix) -> Result<CMatrix> {
    let st = PairState {
        gamma: gamma.clone(),
        alpha: alpha.clone(),
        t: 0.0,
    };
    let (y3, y4) = quasi_free_defect(&st);
    let scale = 1.0 + linalg::frobenius(gamma) + linalg::frobenius(alpha);
    if y3 + y4 > 1e-8 * scale {
        return Err(Error::contract(format!(
            "target pair is not quasi-free pure (defects {y3:.3e}, {y4:.3e})"
        )));
    }
    let m = alpha.nrows();
    let mut lambda = CMatrix::zeros(m, m);
    for (s, u) in takagi(alpha, 1e-13) {
        let r = 0.5 * (2.0 * s).asinh();
        lambda += CMatrix::from_fn(m, m, |i, j| u[i] * u[j]) * C64::new(r, 0.0);
    }
    Ok(lambda)
}

/// `exp(½Σ λ_mn a*_m a*_n - h.c.) Ω` on a cutoff space.
pub fn squeezed_vacuum(lambda: &CMatrix, basis: &Arc<FockBasis>) -> Result<FockVector> {
    if !matches!(basis.sector(), Sector::Cutoff(_)) {
        return Err(Error::contract("squeezed states need a cutoff space"));
    }
    let modes = basis.modes();
    let mut terms = Vec::new();
    for m in 0..modes {
        for n in 0..modes {
            let l = lambda[(m, n)];
            if l != C64::new(0.0, 0.0) {
                terms.push((l * 0.5, vec![Ladder::Create(m), Ladder::Create(n)]));
            }
        }
    }
    let c = assemble_words(basis, &terms);
    // exp(C - C†) = exp(-iX) with X = i(C - C†) Hermitian
    let i = C64::new(0.0, 1.0);
    let x = c.scale(i).add_scaled(&c.adjoint(), -i)?;
    let vac = FockVector::vacuum(basis)?;
    let coeffs = expm_multiply(&x, vac.coeffs(), 1.0, KrylovOptions::default())?;
    FockVector::from_coeffs(basis, coeffs)
}

#[derive(Clone, Debug)]
pub struct QuasiFreeBuild {
    pub state: FockVector,
    /// Weight in the top two particle sectors.
    pub leak: f64,
    /// Norm lost to the cutoff before renormalization.
    pub norm_defect: f64,
}

/// Quasi-free state with the given `(γ, α)`, normalized on the cutoff space.
pub fn build_quasi_free(gamma: &CMatrix, alpha: &CMatrix, basis: &Arc<FockBasis>) -> Result<QuasiFreeBuild> {
    if gamma.nrows() != basis.modes() {
        return Err(Error::Dimension {
            expected: basis.modes(),
            got: gamma.nrows(),
        });
    }
    let lambda = squeezing_matrix(gamma, alpha)?;
    let mut state = squeezed_vacuum(&lambda, basis)?;
    let norm_defect = (1.0 - state.norm()).abs();
    state.normalize();
    let leak = state.truncation_leak();
    Ok(QuasiFreeBuild {
        state,
        leak,
        norm_defect,
    })
}

/// All words of length `len` over `modes` modes.
pub fn all_words(modes: usize, len: usize) -> Vec<Vec<Ladder>> {
    let letters: Vec<Ladder> = (0..modes)
        .flat_map(|m| [Ladder::Create(m), Ladder::Annihilate(m)])
        .collect();
    let mut out: Vec<Vec<Ladder>> = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|w| {
                letters.iter().map(move |&l| {
                    let mut v = w.clone();
                    v.push(l);
                    v
                })
            })
            .collect();
    }
    out
}

/// Words of lengths 1 to 4 used by [`wick_defect`]; exhaustive for up to three modes.
pub fn default_words(modes: usize) -> Vec<Vec<Ladder>> {
    let m = modes.min(3);
    (1..=4).flat_map(|len| all_words(m, len)).collect()
}

/// `max_words |⟨word⟩ - pairing prediction|`; odd words are compared with 0.
pub fn wick_defect(phi: &FockVector, words: &[Vec<Ladder>]) -> f64 {
    words
        .par_iter()
        .map(|w| {
            let direct = phi.word_expectation(w);
            let predicted = match w.len() {
                2 => direct,
                4 => {
                    let e = |a: Ladder, b: Ladder| phi.word_expectation(&[a, b]);
                    e(w[0], w[1]) * e(w[2], w[3])
                        + e(w[0], w[2]) * e(w[1], w[3])
                        + e(w[0], w[3]) * e(w[1], w[2])
                }
                _ => C64::new(0.0, 0.0),
            };
            (direct - predicted).norm()
        })
        .reduce(|| 0.0, f64::max)
}

/// `⟨𝒩^ℓ⟩` by diagonal summation.
pub fn moment(phi: &FockVector, ell: u32) -> f64 {
    phi.coeffs
        .iter()
        .enumerate()
        .map(|(i, c)| c.norm_sqr() * (phi.basis.particles(i) as f64).powi(ell as i32))
        .sum()
}

/// `⟨𝒩(𝒩-1)…(𝒩-ℓ+1)⟩`.
pub fn factorial_moment(phi: &FockVector, ell: u32) -> f64 {
    phi.coeffs
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let n = phi.basis.particles(i) as f64;
            c.norm_sqr() * (0..ell).map(|k| n - k as f64).product::<f64>()
        })
        .sum()
}

/// `C_ℓ = |P(2ℓ)| · Σ_s |P(s, ℓ)|`: pairings of `2ℓ` points times compositions of `ℓ`.
pub fn moment_constant(ell: u32) -> f64 {
    let pairings: f64 = (1..=ell).map(|k| (2 * k - 1) as f64).product();
    let compositions = 2f64.powi(ell as i32 - 1);
    pairings * compositions
}

/// Checks `⟨𝒩(𝒩-1)…(𝒩-ℓ+1)⟩ ≤ C_ℓ(1 + ⟨𝒩⟩)^ℓ` and `⟨𝒩^ℓ⟩ ≤ C_ℓ(1 + ⟨𝒩⟩)^ℓ`.
pub fn moment_bound_check(phi: &FockVector, ell: u32) -> bool {
    let n = moment(phi, 1);
    let bound = moment_constant(ell) * (1.0 + n).powi(ell as i32);
    factorial_moment(phi, ell) <= bound && moment(phi, ell) <= bound
}

/// `⟨𝒩²⟩` of a quasi-free state from its density matrices.
pub fn wick_second_moment(pair: &PairState) -> f64 {
    let tr = linalg::trace(&pair.gamma).re;
    tr * tr + tr + linalg::frobenius(&pair.gamma).powi(2) + linalg::frobenius(&pair.alpha).powi(2)
}

/// Yields the (sparse, Hermitian) generator at time `t`.
pub trait FockGenerator: Sync {
    fn operator(&self, t: f64) -> Result<CsrMatrix>;
}

impl<F> FockGenerator for F
where
    F: Fn(f64) -> Result<CsrMatrix> + Sync,
{
    fn operator(&self, t: f64) -> Result<CsrMatrix> {
        self(t)
    }
}

/// A time-independent generator.
pub struct StaticFockGenerator(pub CsrMatrix);

impl FockGenerator for StaticFockGenerator {
    fn operator(&self, _t: f64) -> Result<CsrMatrix> {
        Ok(self.0.clone())
    }
}

#[derive(Clone, Debug)]
pub struct FockTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<FockVector>,
    /// Largest `|‖Φ(t)‖ - ‖Φ(0)‖|` over the samples.
    pub norm_drift: f64,
}

/// `Φ ← exp(-i dt H(t + dt/2)) Φ` from `t0` to `t_final`.
pub fn fock_evolve(
    phi0: &FockVector,
    generator: &dyn FockGenerator,
    t0: f64,
    t_final: f64,
    dt: f64,
    sample_every: usize,
) -> Result<FockTrajectory> {
    let span = t_final - t0;
    if !(span > 0.0) || !(dt > 0.0) {
        return Err(Error::config("time", "need t_final > t0 and dt > 0"));
    }
    let steps = crate::hartree::step_count(span, dt);
    let dt = span / steps as f64;
    let sample_every = sample_every.max(1);
    let n0 = phi0.norm();
    let mut phi = phi0.clone();
    let mut times = vec![t0];
    let mut states = vec![phi.clone()];
    let mut drift = 0.0f64;
    for step in 1..=steps {
        let tm = t0 + (step as f64 - 0.5) * dt;
        let h = generator.operator(tm)?;
        let next = expm_multiply(&h, phi.coeffs(), dt, KrylovOptions::default())?;
        phi = FockVector::from_coeffs(phi.basis(), next)?;
        if step % sample_every == 0 || step == steps {
            drift = drift.max((phi.norm() - n0).abs());
            times.push(t0 + step as f64 * dt);
            states.push(phi.clone());
        }
    }
    Ok(FockTrajectory {
        times,
        states,
        norm_drift: drift,
    })
}

#[cfg(test)]
mod tests {
    use super::super::basis::DEFAULT_MEMORY_CAP;
    use super::super::operators::{assemble_bogoliubov_h, build_fock_space};
    use super::*;
    use crate::linalg::re;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn space(modes: usize, cutoff: usize) -> Arc<FockBasis> {
        build_fock_space(modes, Sector::Cutoff(cutoff), DEFAULT_MEMORY_CAP).unwrap().0
    }

    fn single_mode_squeezed(r: f64, cutoff: usize) -> FockVector {
        let b = space(1, cutoff);
        let (s, c) = (r.sinh(), r.cosh());
        build_quasi_free(
            &CMatrix::from_element(1, 1, re(s * s)),
            &CMatrix::from_element(1, 1, re(s * c)),
            &b,
        )
        .unwrap()
        .state
    }

    #[test]
    fn vacuum_density_matrices() {
        let b = space(3, 4);
        let v = FockVector::vacuum(&b).unwrap();
        let p = extract_density_matrices(&v);
        assert_eq!(linalg::frobenius(&p.gamma) + linalg::frobenius(&p.alpha), 0.0);
        let mut one = FockVector::zeros(&b);
        one.coeffs_mut()[b.index_of(&[0, 1, 0]).unwrap()] = re(1.0);
        let p = extract_density_matrices(&one);
        let mut e = CMatrix::zeros(3, 3);
        e[(1, 1)] = re(1.0);
        assert_eq!(p.gamma, e);
        assert_eq!(linalg::frobenius(&p.alpha), 0.0);
    }

    #[test]
    fn squeezed_expansion_matches_textbook() {
        let r: f64 = 0.3;
        let v = single_mode_squeezed(r, 40);
        let b = v.basis().clone();
        let t = r.tanh();
        let mut expected: Vec<f64> = (0..=20)
            .map(|n| {
                let ratio: f64 = (1..=n).map(|k| ((2 * k - 1) as f64 / (2 * k) as f64).sqrt()).product();
                t.powi(n as i32) * ratio
            })
            .collect();
        let nrm = expected.iter().map(|x| x * x).sum::<f64>().sqrt();
        expected.iter_mut().for_each(|x| *x /= nrm);
        for (n, e) in expected.iter().enumerate() {
            let c = v.coeffs()[b.index_of(&[(2 * n) as u8]).unwrap()];
            assert!((c.norm() - e).abs() < 1e-12, "n={n}");
            if 2 * n + 1 <= 40 {
                assert!(v.coeffs()[b.index_of(&[(2 * n + 1) as u8]).unwrap()].norm() < 1e-14);
            }
        }
    }

    #[test]
    fn squeezed_density_matrices() {
        let r: f64 = 0.5;
        let v = single_mode_squeezed(r, 40);
        let p = extract_density_matrices(&v);
        assert!((p.gamma[(0, 0)].re - r.sinh().powi(2)).abs() < 1e-10);
        assert!((p.alpha[(0, 0)].norm() - r.sinh() * r.cosh()).abs() < 1e-10);
    }

    #[test]
    fn round_trip_multimode() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = 3;
        let x = CMatrix::from_fn(m, m, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let q = x.qr().q();
        let rs = [0.3, 0.15, 0.05];
        let mut g = CMatrix::zeros(m, m);
        let mut a = CMatrix::zeros(m, m);
        for k in 0..m {
            let u: Vec<C64> = q.column(k).iter().cloned().collect();
            let (s, c) = (f64::sinh(rs[k]), f64::cosh(rs[k]));
            g += linalg::outer(&u, &u) * re(s * s);
            let ubar: Vec<C64> = u.iter().map(|z| z.conj()).collect();
            a += linalg::outer(&u, &ubar) * re(s * c);
        }
        let b = space(m, 16);
        let built = build_quasi_free(&g, &a, &b).unwrap();
        let p = extract_density_matrices(&built.state);
        assert!(linalg::frobenius(&(p.gamma - &g)) < 1e-6);
        assert!(linalg::frobenius(&(p.alpha - &a)) < 1e-6);

        let bad = CMatrix::from_fn(m, m, |i, j| re(if i == j { 1.0 } else { 0.0 }));
        assert!(build_quasi_free(&bad, &CMatrix::zeros(m, m), &b).is_err());
        let vac = build_quasi_free(&CMatrix::zeros(m, m), &CMatrix::zeros(m, m), &b).unwrap();
        assert_eq!(vac.state.coeffs()[0], re(1.0));
    }

    #[test]
    fn wick_examples() {
        let b = space(2, 10);
        let words = default_words(2);
        assert!(wick_defect(&FockVector::vacuum(&b).unwrap(), &words) < 1e-15);
        let v = single_mode_squeezed(0.3, 40);
        assert!(wick_defect(&v, &default_words(1)) < 1e-8);
        let mut one = FockVector::zeros(&b);
        one.coeffs_mut()[b.index_of(&[1, 0]).unwrap()] = re(1.0);
        let w = vec![Ladder::Create(0), Ladder::Annihilate(0), Ladder::Create(0), Ladder::Annihilate(0)];
        let d = wick_defect(&one, &[w]);
        assert!((d - 2.0).abs() < 1e-14);
    }

    #[test]
    fn moments() {
        let b = space(2, 6);
        let v = FockVector::vacuum(&b).unwrap();
        for l in 1..=4 {
            assert_eq!(moment(&v, l), 0.0);
        }
        let s = single_mode_squeezed(0.5, 40);
        let p = extract_density_matrices(&s);
        assert!((moment(&s, 2) - wick_second_moment(&p)).abs() < 1e-8);
        for l in 2..=4 {
            assert!(moment_bound_check(&s, l));
        }
        assert_eq!(moment_constant(2), 6.0);
        assert_eq!(moment_constant(3), 60.0);
        assert_eq!(moment_constant(4), 840.0);
    }

    #[test]
    fn squeezing_evolution_from_vacuum() {
        let b = space(1, 40);
        let h = assemble_bogoliubov_h(&CMatrix::zeros(1, 1), &CMatrix::from_element(1, 1, re(1.0)), &b).unwrap();
        let vac = FockVector::vacuum(&b).unwrap();
        let traj = fock_evolve(&vac, &StaticFockGenerator(h), 0.0, 0.5, 0.01, 50).unwrap();
        let last = traj.states.last().unwrap();
        let n = extract_density_matrices(last).gamma[(0, 0)].re;
        assert!((n - 0.5f64.sinh().powi(2)).abs() < 1e-9, "{n}");
        assert!(traj.norm_drift < 1e-10);
    }

    #[test]
    fn diagonal_generator_phases() {
        let b = space(2, 3);
        let d: Vec<C64> = (0..b.dim()).map(|i| re(0.3 * i as f64)).collect();
        let h = CsrMatrix::diagonal(&d);
        let v0 = FockVector::from_coeffs(&b, vec![re(1.0 / (b.dim() as f64).sqrt()); b.dim()]).unwrap();
        let traj = fock_evolve(&v0, &StaticFockGenerator(h), 0.0, 1.0, 0.1, 10).unwrap();
        let last = traj.states.last().unwrap();
        for i in 0..b.dim() {
            let exact = v0.coeffs()[i] * C64::from_polar(1.0, -d[i].re);
            assert!((last.coeffs()[i] - exact).norm() < 1e-12);
        }
    }

    #[test]
    fn product_state_is_normalized() {
        let lat = crate::Lattice::new(1, 4, 4.0).unwrap();
        let u = GridFunction::gaussian_packet(&lat, 0.7, &[1.0]);
        let (b, _) = build_fock_space(4, Sector::Fixed(5), DEFAULT_MEMORY_CAP).unwrap();
        let p = product_state(&u, &b).unwrap();
        assert!((p.norm() - 1.0).abs() < 1e-13);
    }
}
