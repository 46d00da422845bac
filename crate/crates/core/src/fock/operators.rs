use std::sync::Arc;

use rayon::prelude::*;

use super::basis::{apply_word, FockBasis, Ladder, Sector};
use super::sparse::CsrMatrix;
use crate::error::{Error, Result};
use crate::interaction::PotentialGrid;
use crate::linalg::{self, CMatrix};
use crate::C64;

/// Per-mode annihilation matrices `a_i: basis → target`.
///
/// On a cutoff space the target is the space itself; on a fixed-`N` sector it is the
/// `N - 1` sector.
#[derive(Clone, Debug)]
pub struct LadderSet {
    basis: Arc<FockBasis>,
    target: Arc<FockBasis>,
    annihilators: Vec<CsrMatrix>,
}

impl LadderSet {
    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn target(&self) -> &Arc<FockBasis> {
        &self.target
    }

    pub fn a(&self, i: usize) -> &CsrMatrix {
        &self.annihilators[i]
    }

    /// `a*_i = (a_i)†`.
    pub fn a_dag(&self, i: usize) -> CsrMatrix {
        self.annihilators[i].adjoint()
    }

    /// `𝒩 = Σ a*_i a_i`, diagonal with the occupation totals.
    pub fn number_operator(&self) -> Result<CsrMatrix> {
        let d: Vec<C64> = (0..self.basis.dim())
            .map(|i| C64::new(self.basis.particles(i) as f64, 0.0))
            .collect();
        Ok(CsrMatrix::diagonal(&d))
    }
}

/// Basis and ladder operators of a sector.
pub fn build_fock_space(modes: usize, sector: Sector, cap: usize) -> Result<(Arc<FockBasis>, LadderSet)> {
    let basis = Arc::new(FockBasis::new(modes, sector, cap)?);
    let target = match sector {
        Sector::Cutoff(_) => basis.clone(),
        Sector::Fixed(0) => basis.clone(),
        Sector::Fixed(n) => Arc::new(FockBasis::new(modes, Sector::Fixed(n - 1), cap)?),
    };
    let annihilators = (0..modes)
        .map(|m| {
            let cols = (0..basis.dim())
                .map(|j| single_word(&basis, &target, j, &[Ladder::Annihilate(m)], C64::new(1.0, 0.0)))
                .collect();
            CsrMatrix::from_columns(target.dim(), basis.dim(), cols)
        })
        .collect();
    Ok((
        basis.clone(),
        LadderSet {
            basis,
            target,
            annihilators,
        },
    ))
}

fn single_word(from: &FockBasis, to: &FockBasis, col: usize, word: &[Ladder], coef: C64) -> Vec<(usize, C64)> {
    let mut occ = from.occupation(col).to_vec();
    let amp = apply_word(&mut occ, word);
    if amp == 0.0 {
        return Vec::new();
    }
    match to.index_of(&occ) {
        Some(r) => vec![(r, coef * amp)],
        None => Vec::new(),
    }
}

/// Assembles `Σ_terms coef · word` on `basis` by acting on every basis ket.
/// Results leaving the basis are discarded (truncation).
pub fn assemble_words(basis: &FockBasis, terms: &[(C64, Vec<Ladder>)]) -> CsrMatrix {
    let cols: Vec<Vec<(usize, C64)>> = (0..basis.dim())
        .into_par_iter()
        .map(|j| {
            let mut col = Vec::new();
            let mut occ = vec![0u8; basis.modes()];
            for (coef, word) in terms {
                occ.copy_from_slice(basis.occupation(j));
                let amp = apply_word(&mut occ, word);
                if amp != 0.0 {
                    if let Some(r) = basis.index_of(&occ) {
                        col.push((r, coef * amp));
                    }
                }
            }
            col
        })
        .collect();
    CsrMatrix::from_columns(basis.dim(), basis.dim(), cols)
}

fn check_modes(m: &CMatrix, basis: &FockBasis) -> Result<()> {
    if m.nrows() != basis.modes() || m.ncols() != basis.modes() {
        return Err(Error::Dimension {
            expected: basis.modes(),
            got: m.nrows(),
        });
    }
    Ok(())
}

/// `dΓ(H) = Σ H[m,n] a*_m a_n`.
pub fn assemble_dgamma(h: &CMatrix, basis: &FockBasis) -> Result<CsrMatrix> {
    check_modes(h, basis)?;
    let modes = basis.modes();
    let mut terms = Vec::new();
    for m in 0..modes {
        for n in 0..modes {
            let c = h[(m, n)];
            if c != C64::new(0.0, 0.0) {
                terms.push((c, vec![Ladder::Create(m), Ladder::Annihilate(n)]));
            }
        }
    }
    Ok(assemble_words(basis, &terms))
}

/// `(Σ K[m,n] a*_m a*_n, its adjoint)` on a cutoff space.
pub fn assemble_pair_ops(k: &CMatrix, basis: &FockBasis) -> Result<(CsrMatrix, CsrMatrix)> {
    check_modes(k, basis)?;
    if matches!(basis.sector(), Sector::Fixed(_)) {
        return Err(Error::contract("pair operators need a cutoff space"));
    }
    let scale = linalg::frobenius(k).max(1.0);
    if linalg::symmetric_defect(k) > 1e-12 * scale {
        return Err(Error::contract("pair kernel is not symmetric"));
    }
    let modes = basis.modes();
    let mut terms = Vec::new();
    for m in 0..modes {
        for n in 0..modes {
            let c = k[(m, n)];
            if c != C64::new(0.0, 0.0) {
                terms.push((c, vec![Ladder::Create(m), Ladder::Create(n)]));
            }
        }
    }
    let creation = assemble_words(basis, &terms);
    let annihilation = creation.adjoint();
    Ok((creation, annihilation))
}

/// `ℍ = dΓ(h) + ½(Σ K a*a* + h.c.)`.
pub fn assemble_bogoliubov_h(h: &CMatrix, k: &CMatrix, basis: &FockBasis) -> Result<CsrMatrix> {
    let dg = assemble_dgamma(h, basis)?;
    let (cr, an) = assemble_pair_ops(k, basis)?;
    let half = C64::new(0.5, 0.0);
    dg.add_scaled(&cr, half)?.add_scaled(&an, half)
}

/// `H_N = dΓ(-Δ) + (1/(2(N-1))) Σ_{x,y} w_N(x-y) a*_x a*_y a_y a_x` on the fixed-`N` sector.
pub fn assemble_hn(wn: &PotentialGrid, n: usize, basis: &FockBasis) -> Result<CsrMatrix> {
    if n < 2 {
        return Err(Error::config("scaling.N", "N must be >= 2"));
    }
    if basis.sector() != Sector::Fixed(n) {
        return Err(Error::contract(format!("H_N needs the fixed N = {n} sector")));
    }
    let lat = wn.lattice();
    let modes = basis.modes();
    if lat.sites() != modes {
        return Err(Error::Dimension {
            expected: modes,
            got: lat.sites(),
        });
    }
    let kinetic = assemble_dgamma(&lat.laplacian_matrix(), basis)?;
    let coupling = 1.0 / (2.0 * (n as f64 - 1.0));
    let diag: Vec<C64> = (0..basis.dim())
        .map(|s| {
            let occ = basis.occupation(s);
            let mut e = 0.0;
            for x in 0..modes {
                let nx = occ[x] as f64;
                if nx == 0.0 {
                    continue;
                }
                for y in 0..modes {
                    let ny = occ[y] as f64;
                    let pairs = if x == y { nx * (nx - 1.0) } else { nx * ny };
                    e += wn.between(x, y) * pairs;
                }
            }
            C64::new(coupling * e, 0.0)
        })
        .collect();
    kinetic.add_scaled(&CsrMatrix::diagonal(&diag), C64::new(1.0, 0.0))
}

#[cfg(test)]
mod tests {
    use super::super::basis::DEFAULT_MEMORY_CAP;
    use super::*;
    use crate::lattice::{GridFunction, Lattice};
    use crate::linalg::re;

    #[test]
    fn single_mode_ladder() {
        let (_, l) = build_fock_space(1, Sector::Cutoff(3), DEFAULT_MEMORY_CAP).unwrap();
        let a = l.a(0).to_dense();
        for k in 1..4 {
            assert!((a[(k - 1, k)].re - (k as f64).sqrt()).abs() < 1e-15);
        }
        assert_eq!(a.iter().filter(|v| v.norm() > 0.0).count(), 3);
    }

    #[test]
    fn ccr_away_from_cutoff() {
        let (b, l) = build_fock_space(3, Sector::Cutoff(5), DEFAULT_MEMORY_CAP).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let ad = l.a_dag(j);
                let c = l.a(i).matmul(&ad).unwrap().add_scaled(&ad.matmul(l.a(i)).unwrap(), re(-1.0)).unwrap();
                let c = c.to_dense();
                for s in 0..b.dim() {
                    for t in 0..b.dim() {
                        let expected = if i == j && s == t { 1.0 } else { 0.0 };
                        if b.particles(s) < 5 {
                            assert!((c[(s, t)] - re(expected)).norm() < 1e-14, "[a{i}, a*{j}] at ({s},{t})");
                        }
                    }
                }
            }
        }
        let c12 = l.a(0).matmul(&l.a_dag(1)).unwrap().add_scaled(&l.a_dag(1).matmul(l.a(0)).unwrap(), re(-1.0)).unwrap();
        for s in (0..b.dim()).filter(|&s| b.particles(s) < 5) {
            assert_eq!(c12.row(s).count(), 0);
        }
    }

    #[test]
    fn number_operator_and_dgamma() {
        let (b, l) = build_fock_space(3, Sector::Cutoff(4), DEFAULT_MEMORY_CAP).unwrap();
        let n = l.number_operator().unwrap();
        let dg = assemble_dgamma(&linalg::identity(3), &b).unwrap();
        assert_eq!(n, dg);
        let mut sum = CsrMatrix::zeros(b.dim(), b.dim());
        for i in 0..3 {
            sum = sum.add_scaled(&l.a_dag(i).matmul(l.a(i)).unwrap(), re(1.0)).unwrap();
        }
        assert!(sum.add_scaled(&n, re(-1.0)).unwrap().frobenius() < 1e-13);
        for s in 0..b.dim() {
            assert_eq!(n.get(s, s).re, b.particles(s) as f64);
        }
        let h = CMatrix::from_fn(3, 3, |i, j| C64::new((i + 2 * j) as f64, i as f64 - j as f64));
        let h = (&h + h.adjoint()) * re(0.5);
        let dg = assemble_dgamma(&h, &b).unwrap();
        assert!(dg.hermitian_defect() < 1e-14);
        let comm = dg.matmul(&n).unwrap().add_scaled(&n.matmul(&dg).unwrap(), re(-1.0)).unwrap();
        assert_eq!(comm.frobenius(), 0.0);

        // one-particle block reproduces h
        let one: Vec<usize> = (0..b.dim()).filter(|&s| b.particles(s) == 1).collect();
        for (a, &s) in one.iter().enumerate() {
            for (c, &t) in one.iter().enumerate() {
                let ms = b.occupation(s).iter().position(|&x| x == 1).unwrap();
                let mt = b.occupation(t).iter().position(|&x| x == 1).unwrap();
                let _ = (a, c);
                assert!((dg.get(s, t) - h[(ms, mt)]).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn pair_ops_examples() {
        let (b, _) = build_fock_space(1, Sector::Cutoff(6), DEFAULT_MEMORY_CAP).unwrap();
        let k = CMatrix::from_element(1, 1, re(0.7));
        let (cr, an) = assemble_pair_ops(&k, &b).unwrap();
        for n in 0..5 {
            let expected = 0.7 * (((n + 1) * (n + 2)) as f64).sqrt();
            assert!((cr.get(n + 2, n).re - expected).abs() < 1e-14);
        }
        assert_eq!(an, cr.adjoint());

        let (b, _) = build_fock_space(3, Sector::Cutoff(4), DEFAULT_MEMORY_CAP).unwrap();
        let k = CMatrix::from_fn(3, 3, |i, j| C64::new(0.1 * (i + j) as f64, 0.05 * (i * j) as f64));
        let (cr, an) = assemble_pair_ops(&k, &b).unwrap();
        let mut vac = vec![C64::new(0.0, 0.0); b.dim()];
        vac[0] = re(1.0);
        let out = an.mul_vec(&cr.mul_vec(&vac));
        assert!((out[0].re - 2.0 * linalg::frobenius(&k).powi(2)).abs() < 1e-14);

        let asym = CMatrix::from_fn(3, 3, |i, j| re(i as f64 - j as f64));
        assert!(assemble_pair_ops(&asym, &b).is_err());
        let (f, _) = build_fock_space(3, Sector::Fixed(2), DEFAULT_MEMORY_CAP).unwrap();
        assert!(assemble_pair_ops(&k, &f).is_err());
    }

    #[test]
    fn bogoliubov_h_examples() {
        let (b, l) = build_fock_space(2, Sector::Cutoff(6), DEFAULT_MEMORY_CAP).unwrap();
        let h = CMatrix::from_row_slice(2, 2, &[re(1.0), C64::new(0.2, 0.3), C64::new(0.2, -0.3), re(-0.5)]);
        let k = CMatrix::from_row_slice(2, 2, &[re(0.3), C64::new(0.1, 0.1), C64::new(0.1, 0.1), re(0.2)]);
        let hh = assemble_bogoliubov_h(&h, &k, &b).unwrap();
        assert!(hh.hermitian_defect() < 1e-14);
        assert_eq!(hh.get(0, 0), re(0.0));
        let n = l.number_operator().unwrap();
        let free = assemble_bogoliubov_h(&h, &CMatrix::zeros(2, 2), &b).unwrap();
        let comm = free.matmul(&n).unwrap().add_scaled(&n.matmul(&free).unwrap(), re(-1.0)).unwrap();
        assert_eq!(comm.frobenius(), 0.0);

        let (b1, _) = build_fock_space(1, Sector::Cutoff(6), DEFAULT_MEMORY_CAP).unwrap();
        let sq = assemble_bogoliubov_h(&CMatrix::zeros(1, 1), &CMatrix::from_element(1, 1, re(0.4)), &b1).unwrap();
        for n in 0..5 {
            let expected = 0.2 * (((n + 1) * (n + 2)) as f64).sqrt();
            assert!((sq.get(n + 2, n).re - expected).abs() < 1e-15);
            assert!((sq.get(n, n + 2).re - expected).abs() < 1e-15);
        }
    }

    fn two_site() -> (Lattice, PotentialGrid) {
        let lat = Lattice::new(1, 2, 4.0).unwrap();
        let w = crate::interaction::sample_w(
            &crate::interaction::Shape::CompactBump {
                amplitude: 1.0,
                radius: 1.9,
            },
            &lat,
            false,
        )
        .unwrap();
        (lat, w)
    }

    #[test]
    fn hn_two_particles_two_sites() {
        let (lat, w) = two_site();
        let (b, _) = build_fock_space(2, Sector::Fixed(2), DEFAULT_MEMORY_CAP).unwrap();
        let hn = assemble_hn(&w, 2, &b).unwrap().to_dense();
        // hand computation in the basis |0,2⟩, |1,1⟩, |2,0⟩
        let lap = lat.laplacian_matrix();
        let (d, o) = (lap[(0, 0)].re, lap[(0, 1)].re);
        let (w0, w1) = (w.between(0, 0), w.between(0, 1));
        let s2 = 2f64.sqrt();
        let expected = nalgebra::DMatrix::<f64>::from_row_slice(
            3,
            3,
            &[
                2.0 * d + w0, s2 * o, 0.0,
                s2 * o, 2.0 * d + w1, s2 * o,
                0.0, s2 * o, 2.0 * d + w0,
            ],
        );
        let dense_re = hn.map(|c| c.re);
        assert!((dense_re - &expected).norm() < 1e-13);
        let ev_a = linalg::hermitian_eigenvalues(&hn);
        let ev_b = linalg::hermitian_eigenvalues(&expected.map(re));
        for (x, y) in ev_a.iter().zip(&ev_b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn hn_free_ground_state() {
        let lat = Lattice::new(1, 4, 4.0).unwrap();
        let zero = PotentialGrid::zero(&lat);
        let (b, _) = build_fock_space(4, Sector::Fixed(3), DEFAULT_MEMORY_CAP).unwrap();
        let hn = assemble_hn(&zero, 3, &b).unwrap();
        let ev = linalg::hermitian_eigenvalues(&hn.to_dense());
        assert!(ev[0].abs() < 1e-12);
        let u = GridFunction::constant(&lat);
        let psi = super::super::states::product_state(&u, &b).unwrap();
        assert!(psi.expectation(&hn).norm() < 1e-12);
    }

    #[test]
    fn hn_product_state_energy() {
        use rand::{Rng, SeedableRng};
        let lat = Lattice::new(1, 4, 6.0).unwrap();
        let w = crate::interaction::sample_w(&crate::interaction::Shape::default(), &lat, false).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let c: Vec<C64> = (0..4).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let mut u = GridFunction::from_coeffs(&lat, c).unwrap();
        u.normalize();
        for n in [2usize, 3, 5] {
            let (b, _) = build_fock_space(4, Sector::Fixed(n), DEFAULT_MEMORY_CAP).unwrap();
            let psi = super::super::states::product_state(&u, &b).unwrap();
            let hn = assemble_hn(&w, n, &b).unwrap();
            let e = psi.expectation(&hn).re / n as f64;
            let eh = crate::hartree::hartree_energy(&u, &w).unwrap();
            assert!((e - eh).abs() < 1e-12, "N={n}: {e} vs {eh}");
        }
    }

    #[test]
    fn hn_commutes_with_number() {
        let lat = Lattice::new(1, 4, 6.0).unwrap();
        let w = crate::interaction::sample_w(&crate::interaction::Shape::default(), &lat, false).unwrap();
        let (b, _) = build_fock_space(4, Sector::Fixed(3), DEFAULT_MEMORY_CAP).unwrap();
        let hn = assemble_hn(&w, 3, &b).unwrap();
        assert!(hn.hermitian_defect() < 1e-13);
        assert!(assemble_hn(&w, 1, &b).is_err());
    }
}
