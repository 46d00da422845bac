//! The excitation map `U_N`: `N`-particle states to excitations orthogonal to the condensate.

use std::sync::Arc;

use super::basis::{FockBasis, Ladder, Sector};
use super::operators::assemble_words;
use super::sparse::CsrMatrix;
use super::states::FockVector;
use crate::error::{Error, Result};
use crate::lattice::GridFunction;
use crate::C64;

/// Allowed `‖a(u)φ‖ / ‖φ‖` for vectors handed to [`ExcitationMap::embed`].
pub const EXCITATION_TOLERANCE: f64 = 1e-8;

/// `U_N` for a fixed condensate `u` on the fixed-`N` sector and the cutoff-`N` space.
#[derive(Clone, Debug)]
pub struct ExcitationMap {
    n: usize,
    fixed: Arc<FockBasis>,
    cutoff: Arc<FockBasis>,
    a_u: CsrMatrix,
    a_u_dag: CsrMatrix,
    n_u: CsrMatrix,
}

impl ExcitationMap {
    /// Builds the map for `u` (normalized), `N` particles, on fresh bases.
    pub fn new(u: &GridFunction, n: usize, cap: usize) -> Result<Self> {
        let modes = u.coeffs().len();
        let fixed = Arc::new(FockBasis::new(modes, Sector::Fixed(n), cap)?);
        let cutoff = Arc::new(FockBasis::new(modes, Sector::Cutoff(n), cap)?);
        Self::with_bases(u, fixed, cutoff)
    }

    /// Builds the map on existing bases; the cutoff must equal the fixed particle number.
    pub fn with_bases(u: &GridFunction, fixed: Arc<FockBasis>, cutoff: Arc<FockBasis>) -> Result<Self> {
        let n = match (fixed.sector(), cutoff.sector()) {
            (Sector::Fixed(n), Sector::Cutoff(c)) if n == c => n,
            _ => return Err(Error::contract("need a fixed-N sector and the cutoff-N space")),
        };
        let c = u.coeffs();
        if c.len() != fixed.modes() || cutoff.modes() != fixed.modes() {
            return Err(Error::Dimension {
                expected: fixed.modes(),
                got: c.len(),
            });
        }
        if (u.norm() - 1.0).abs() > 1e-10 {
            return Err(Error::contract(format!("condensate norm {} is not 1", u.norm())));
        }
        let annihilate: Vec<(C64, Vec<Ladder>)> = c
            .iter()
            .enumerate()
            .filter(|(_, z)| z.norm() > 0.0)
            .map(|(m, z)| (z.conj(), vec![Ladder::Annihilate(m)]))
            .collect();
        let a_u = assemble_words(&cutoff, &annihilate);
        let a_u_dag = a_u.adjoint();
        let mut number = Vec::new();
        for (m, zm) in c.iter().enumerate() {
            for (k, zk) in c.iter().enumerate() {
                let coef = zm * zk.conj();
                if coef.norm() > 0.0 {
                    number.push((coef, vec![Ladder::Create(m), Ladder::Annihilate(k)]));
                }
            }
        }
        let n_u = assemble_words(&cutoff, &number);
        Ok(Self {
            n,
            fixed,
            cutoff,
            a_u,
            a_u_dag,
            n_u,
        })
    }

    pub fn particles(&self) -> usize {
        self.n
    }

    pub fn fixed_basis(&self) -> &Arc<FockBasis> {
        &self.fixed
    }

    pub fn cutoff_basis(&self) -> &Arc<FockBasis> {
        &self.cutoff
    }

    /// `a(u)` on the cutoff space.
    pub fn a_u(&self) -> &CsrMatrix {
        &self.a_u
    }

    /// `Γ(Q)`: the projection onto states without particles in `u`,
    /// evaluated as `Π_{k=1}^{N} (1 - 𝒩_u / k)` on the cutoff space.
    pub fn project_plus(&self, phi: &FockVector) -> Result<FockVector> {
        self.check_cutoff(phi)?;
        let mut v = phi.coeffs().to_vec();
        let mut tmp = vec![C64::new(0.0, 0.0); v.len()];
        for k in 1..=self.n {
            self.n_u.mul_vec_into(&v, &mut tmp);
            let s = 1.0 / k as f64;
            v.iter_mut().zip(&tmp).for_each(|(x, y)| *x -= y * s);
        }
        FockVector::from_coeffs(&self.cutoff, v)
    }

    /// `‖a(u)φ‖`.
    pub fn condensate_overlap(&self, phi: &FockVector) -> Result<f64> {
        self.check_cutoff(phi)?;
        Ok(self.a_u.mul_vec(phi.coeffs()).iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt())
    }

    /// `U_N Ψ = ⊕_n ψ_n` with `ψ_{N-p} = Γ(Q) a(u)^p Ψ / √(p!)`.
    pub fn decompose(&self, psi: &FockVector) -> Result<FockVector> {
        if !psi.basis().is_same(&self.fixed) {
            return Err(Error::contract("decompose expects a vector on the fixed-N sector"));
        }
        let mut layer = psi.restricted_to(&self.cutoff)?.into_coeffs();
        let mut acc = layer.clone();
        let mut tmp = vec![C64::new(0.0, 0.0); layer.len()];
        for p in 1..=self.n {
            self.a_u.mul_vec_into(&layer, &mut tmp);
            let s = 1.0 / (p as f64).sqrt();
            layer.iter_mut().zip(&tmp).for_each(|(x, y)| *x = y * s);
            acc.iter_mut().zip(&layer).for_each(|(x, y)| *x += y);
        }
        self.project_plus(&FockVector::from_coeffs(&self.cutoff, acc)?)
    }

    /// `U_N* ⊕_n ψ_n = Σ_n a*(u)^{N-n} / √((N-n)!) ψ_n`.
    pub fn embed(&self, phi: &FockVector) -> Result<FockVector> {
        self.check_cutoff(phi)?;
        let scale = phi.norm().max(1.0);
        let overlap = self.condensate_overlap(phi)?;
        if overlap > EXCITATION_TOLERANCE * scale {
            return Err(Error::contract(format!(
                "excitation vector has weight {overlap:.3e} along the condensate"
            )));
        }
        self.embed_unchecked(phi)
    }

    /// [`embed`](Self::embed) without the orthogonality check.
    pub fn embed_unchecked(&self, phi: &FockVector) -> Result<FockVector> {
        self.check_cutoff(phi)?;
        let b = &self.cutoff;
        let n = self.n;
        // 1/√((N-k)!) for k = 0..=N
        let inv_sqrt_fact: Vec<f64> = (0..=n)
            .map(|k| {
                let lf: f64 = (1..=(n - k)).map(|i| (i as f64).ln()).sum();
                (-0.5 * lf).exp()
            })
            .collect();
        let sector = |k: usize| -> Vec<C64> {
            phi.coeffs()
                .iter()
                .enumerate()
                .map(|(i, c)| if b.particles(i) == k { c * inv_sqrt_fact[k] } else { C64::new(0.0, 0.0) })
                .collect()
        };
        let mut s = sector(0);
        let mut tmp = vec![C64::new(0.0, 0.0); s.len()];
        for k in 1..=n {
            self.a_u_dag.mul_vec_into(&s, &mut tmp);
            let add = sector(k);
            s.iter_mut().zip(tmp.iter().zip(&add)).for_each(|(x, (y, z))| *x = y + z);
        }
        FockVector::from_coeffs(&self.cutoff, s)?.restricted_to(&self.fixed)
    }

    fn check_cutoff(&self, phi: &FockVector) -> Result<()> {
        if !phi.basis().is_same(&self.cutoff) {
            return Err(Error::contract("expected a vector on the cutoff-N space"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::super::basis::DEFAULT_MEMORY_CAP;
    use super::super::states::product_state;
    use super::*;
    use crate::lattice::Lattice;
    use crate::linalg::re;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn condensate(lat: &Lattice) -> GridFunction {
        let mut u = GridFunction::gaussian_packet(lat, 0.8, &[0.3]);
        for (i, c) in u.coeffs_mut().iter_mut().enumerate() {
            *c *= C64::from_polar(1.0, 0.4 * i as f64);
        }
        u.normalize();
        u
    }

    fn random_vector(b: &Arc<FockBasis>, rng: &mut ChaCha8Rng) -> FockVector {
        let c = (0..b.dim())
            .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let mut v = FockVector::from_coeffs(b, c).unwrap();
        v.normalize();
        v
    }

    #[test]
    fn pure_condensate_and_one_excitation() {
        let lat = Lattice::new(1, 4, 4.0).unwrap();
        let u = condensate(&lat);
        let map = ExcitationMap::new(&u, 5, DEFAULT_MEMORY_CAP).unwrap();
        let psi = product_state(&u, map.fixed_basis()).unwrap();
        let phi = map.decompose(&psi).unwrap();
        assert!((phi.coeffs()[0].norm() - 1.0).abs() < 1e-12);
        assert!(phi.truncated(0).sub(&phi).unwrap().norm() < 1e-12);

        // v ⊥ u, one excitation
        let mut v = GridFunction::plane_wave(&lat, &[1]);
        let ov = u.inner_product(&v).unwrap();
        for (a, b) in v.coeffs_mut().iter_mut().zip(u.coeffs()) {
            *a -= ov * b;
        }
        v.normalize();
        let mut one = FockVector::zeros(map.cutoff_basis());
        for m in 0..4 {
            let mut occ = vec![0u8; 4];
            occ[m] = 1;
            one.coeffs_mut()[map.cutoff_basis().index_of(&occ).unwrap()] = v.coeffs()[m];
        }
        let psi = map.embed(&one).unwrap();
        assert!((psi.norm() - 1.0).abs() < 1e-12);
        let back = map.decompose(&psi).unwrap();
        assert!(back.sub(&one).unwrap().norm() < 1e-12);

        assert!(map.embed(&FockVector::vacuum(map.cutoff_basis()).unwrap()).is_ok());
        let mut bad = FockVector::zeros(map.cutoff_basis());
        for m in 0..4 {
            let mut occ = vec![0u8; 4];
            occ[m] = 1;
            bad.coeffs_mut()[map.cutoff_basis().index_of(&occ).unwrap()] = u.coeffs()[m];
        }
        assert!(map.embed(&bad).is_err());
    }

    #[test]
    fn round_trips() {
        let lat = Lattice::new(1, 4, 4.0).unwrap();
        let u = condensate(&lat);
        let map = ExcitationMap::new(&u, 6, DEFAULT_MEMORY_CAP).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let psi = random_vector(map.fixed_basis(), &mut rng);
            let phi = map.decompose(&psi).unwrap();
            assert!((phi.norm() - 1.0).abs() < 1e-10);
            assert!(map.embed(&phi).unwrap().sub(&psi).unwrap().norm() < 1e-10);

            let raw = random_vector(map.cutoff_basis(), &mut rng);
            let mut phi = map.project_plus(&raw).unwrap();
            phi.normalize();
            let psi = map.embed(&phi).unwrap();
            assert!((psi.norm() - 1.0).abs() < 1e-10);
            assert!(map.decompose(&psi).unwrap().sub(&phi).unwrap().norm() < 1e-10);

            let raw2 = random_vector(map.cutoff_basis(), &mut rng);
            let phi2 = map.project_plus(&raw2).unwrap();
            let lhs = map.embed(&phi).unwrap().inner(&map.embed(&phi2).unwrap()).unwrap();
            assert!((lhs - phi.inner(&phi2).unwrap()).norm() < 1e-10);
        }
    }

    #[test]
    fn projector_is_idempotent() {
        let lat = Lattice::with_any_size(1, 3, 3.0).unwrap();
        let u = condensate(&lat);
        let map = ExcitationMap::new(&u, 8, DEFAULT_MEMORY_CAP).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let v = random_vector(map.cutoff_basis(), &mut rng);
        let p = map.project_plus(&v).unwrap();
        let pp = map.project_plus(&p).unwrap();
        assert!(pp.sub(&p).unwrap().norm() < 1e-10);
        assert!(map.condensate_overlap(&p).unwrap() < 1e-10);
        assert_eq!(map.project_plus(&FockVector::vacuum(map.cutoff_basis()).unwrap()).unwrap().coeffs()[0], re(1.0));
    }
}
