//! Property tests for the structural invariants of each module.

use std::sync::Arc;

use bogdyn::config::SimulationConfig;
use bogdyn::fock::{
    assemble_hn, build_fock_space, CsrMatrix, ExcitationMap, FockBasis, FockVector, Sector, DEFAULT_MEMORY_CAP,
};
use bogdyn::hartree::{hartree_evolve, hartree_evolve_with, Gauge};
use bogdyn::interaction::{mu_n, sample_w, scale_wn, Shape};
use bogdyn::kernels::{build_k1, build_k2, conjugate, projector_q, StaticGenerator};
use bogdyn::linalg::{frobenius, hermitian_eigenvalues, CMatrix};
use bogdyn::output::fmt_f64;
use bogdyn::pair_dynamics::{block_min_eigenvalue, pair_evolve, pair_step_report, PairState};
use bogdyn::{GridFunction, Lattice, C64};
use proptest::prelude::*;

fn complex_vec(len: usize) -> impl Strategy<Value = Vec<C64>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), len)
        .prop_map(|v| v.into_iter().map(|(a, b)| C64::new(a, b)).collect())
}

fn nonzero(len: usize) -> impl Strategy<Value = Vec<C64>> {
    complex_vec(len).prop_filter("nonzero", |v| v.iter().map(|c| c.norm_sqr()).sum::<f64>() > 1e-3)
}

fn grid(lat: &Lattice, c: Vec<C64>) -> GridFunction {
    GridFunction::from_coeffs(lat, c).unwrap()
}

fn normalized(lat: &Lattice, c: Vec<C64>) -> GridFunction {
    let mut u = grid(lat, c);
    u.normalize();
    u
}

fn hermitian(m: usize, c: &[C64]) -> CMatrix {
    let x = CMatrix::from_fn(m, m, |i, j| c[i * m + j]);
    (&x + x.adjoint()) * C64::new(0.5, 0.0)
}

fn symmetric(m: usize, c: &[C64]) -> CMatrix {
    let x = CMatrix::from_fn(m, m, |i, j| c[i * m + j]);
    (&x + x.transpose()) * C64::new(0.5, 0.0)
}

fn norm2(v: &[C64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn transform_is_unitary(c in complex_vec(64)) {
        let lat = Lattice::new(2, 8, 5.0).unwrap();
        let mut hat = c.clone();
        lat.forward(&mut hat);
        prop_assert!((norm2(&hat) - norm2(&c)).abs() <= 1e-12 * norm2(&c).max(1e-300));
        lat.inverse(&mut hat);
        for (a, b) in hat.iter().zip(&c) {
            prop_assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn laplacian_is_self_adjoint(f in complex_vec(32), g in complex_vec(32)) {
        let lat = Lattice::new(1, 32, 7.0).unwrap();
        let (f, g) = (grid(&lat, f), grid(&lat, g));
        let lhs = f.inner_product(&g.laplacian()).unwrap();
        let rhs = f.laplacian().inner_product(&g).unwrap();
        let scale = f.norm() * g.norm() * lat.max_k_squared();
        prop_assert!((lhs - rhs).norm() <= 1e-12 * scale.max(1.0));
    }

    #[test]
    fn convolution_is_linear_and_self_adjoint(
        f in complex_vec(16), g in complex_vec(16), half in prop::collection::vec(-1.0..1.0f64, 9), s in -2.0..2.0f64,
    ) {
        let lat = Lattice::new(1, 16, 4.0).unwrap();
        // even kernel from its values on 0..=8
        let kernel: Vec<f64> = (0..16).map(|i| half[i.min(16 - i)]).collect();
        let (f, g) = (grid(&lat, f), grid(&lat, g));
        let kf = lat.convolve(&kernel, &f).unwrap();
        let kg = lat.convolve(&kernel, &g).unwrap();
        let mut combo = f.clone();
        combo.coeffs_mut().iter_mut().zip(g.coeffs()).for_each(|(a, b)| *a += b * s);
        let kc = lat.convolve(&kernel, &combo).unwrap();
        for ((x, y), z) in kf.coeffs().iter().zip(kg.coeffs()).zip(kc.coeffs()) {
            prop_assert!((x + y * s - z).norm() < 1e-12);
        }
        let lhs = f.inner_product(&kg).unwrap();
        let rhs = kf.inner_product(&g).unwrap();
        prop_assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn scaled_interaction_keeps_its_integral(n in 2usize..200, beta in 0.0..0.3f64) {
        let lat = Lattice::new(1, 512, 16.0).unwrap();
        let w = sample_w(&Shape::default(), &lat, false).unwrap();
        let wn = scale_wn(&w, n, beta).unwrap();
        // compact bump (1 - r²)² on [-1, 1] integrates to 16/15
        let exact = 16.0 / 15.0;
        prop_assert!((wn.integral() - exact).abs() < 1e-3, "{} vs {}", wn.integral(), exact);
        prop_assert!((wn.l1_norm() - w.l1_norm()).abs() < 1e-3);
    }

    #[test]
    fn chemical_potential_ignores_global_phase(c in nonzero(16), theta in 0.0..6.3f64) {
        let lat = Lattice::new(1, 16, 6.0).unwrap();
        let w = sample_w(&Shape::default(), &lat, false).unwrap();
        let u = normalized(&lat, c);
        let mut v = u.clone();
        v.scale(C64::from_polar(1.0, theta));
        prop_assert!((mu_n(&w, &u).unwrap() - mu_n(&w, &v).unwrap()).abs() < 1e-13);
    }

    #[test]
    fn hartree_preserves_mass_and_gauge(c in nonzero(16)) {
        let lat = Lattice::new(1, 16, 8.0).unwrap();
        let w = sample_w(&Shape::default(), &lat, false).unwrap();
        let u0 = normalized(&lat, c);
        let with = hartree_evolve_with(&u0, &w, 0.1, 1e-3, 20, Gauge::MuN).unwrap();
        let without = hartree_evolve_with(&u0, &w, 0.1, 1e-3, 20, Gauge::None).unwrap();
        prop_assert!(with.max_mass_drift <= 1e-12);
        for (a, b) in with.samples.iter().zip(&without.samples) {
            let ph = C64::from_polar(1.0, a.phase);
            for (x, y) in a.u.coeffs().iter().zip(b.u.coeffs()) {
                prop_assert!((x - y * ph).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn kernels_respect_the_projector(c in nonzero(8)) {
        let lat = Lattice::new(1, 8, 4.0).unwrap();
        let w = sample_w(&Shape::default(), &lat, false).unwrap();
        let u = normalized(&lat, c);
        let q = projector_q(&u).unwrap();
        let k1 = build_k1(&u, &w).unwrap();
        let k2 = build_k2(&u, &w).unwrap();
        let k2m = k2.matrix();
        prop_assert!(frobenius(&(k2m - k2m.transpose())) < 1e-14);
        let qk1q = q.matrix() * k1.matrix() * q.matrix();
        prop_assert!(frobenius(&(qk1q - k1.matrix())) < 1e-12);
        let qk2q = q.matrix() * k2m * conjugate(&q);
        prop_assert!(frobenius(&(qk2q - k2m)) < 1e-12);
    }

    #[test]
    fn pair_steps_keep_structure(h in complex_vec(16), k in complex_vec(16), g in complex_vec(16), a in complex_vec(16)) {
        let m = 4;
        let gen = StaticGenerator::new(hermitian(m, &h), symmetric(m, &k)).unwrap();
        let st = PairState::new(hermitian(m, &g), symmetric(m, &a), 0.0).unwrap();
        let rep = pair_step_report(&st, &gen, 1e-3).unwrap();
        prop_assert!(rep.presym_drift <= 1e-11);
        let s = &rep.state;
        prop_assert_eq!(frobenius(&(&s.gamma - s.gamma.adjoint())), 0.0);
        prop_assert_eq!(frobenius(&(&s.alpha - s.alpha.transpose())), 0.0);
    }

    #[test]
    fn pairing_free_flow_is_isospectral(h in complex_vec(16), x in complex_vec(16)) {
        let m = 4;
        let xm = CMatrix::from_fn(m, m, |i, j| x[i * m + j]);
        let g0 = &xm * xm.adjoint();
        let gen = StaticGenerator::new(hermitian(m, &h), CMatrix::zeros(m, m)).unwrap();
        let traj = pair_evolve(&PairState::new(g0.clone(), CMatrix::zeros(m, m), 0.0).unwrap(), &gen, 1.0, 1e-3, 100).unwrap();
        let e0 = hermitian_eigenvalues(&g0);
        for s in &traj.samples {
            let e = hermitian_eigenvalues(&s.state.gamma);
            for (p, q) in e.iter().zip(&e0) {
                prop_assert!((p - q).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn admissible_data_stays_admissible(h in complex_vec(9), k in complex_vec(9)) {
        let m = 3;
        let gen = StaticGenerator::new(hermitian(m, &h), symmetric(m, &k)).unwrap();
        let traj = pair_evolve(&PairState::vacuum(m), &gen, 0.5, 1e-3, 50).unwrap();
        prop_assert!(!traj.admissibility_violated);
        for s in &traj.samples {
            prop_assert!(block_min_eigenvalue(&s.state) >= -1e-8);
        }
    }

    #[test]
    fn floats_round_trip_through_csv(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
        prop_assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn config_hash_survives_a_round_trip(n in 2usize..100, beta in 0.0..0.99f64, t in 0.01..5.0f64) {
        let text = serde_json::json!({
            "lattice": {"dim": 1, "points_per_dim": 16, "box_length": 8.0},
            "scaling": {"N": n, "beta": beta},
            "time": {"t_final": t}
        }).to_string();
        let cfg = SimulationConfig::from_json_str(&text).unwrap();
        let again = SimulationConfig::from_json_str(&cfg.resolved_json()).unwrap();
        prop_assert_eq!(cfg.hash(), again.hash());
    }
}

fn commutator(a: &CsrMatrix, b: &CsrMatrix) -> CsrMatrix {
    a.matmul(b).unwrap().add_scaled(&b.matmul(a).unwrap(), C64::new(-1.0, 0.0)).unwrap()
}

fn cutoff_space(modes: usize, cut: usize) -> (Arc<FockBasis>, bogdyn::fock::LadderSet) {
    build_fock_space(modes, Sector::Cutoff(cut), DEFAULT_MEMORY_CAP).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn ccr_hold_below_the_cutoff(i in 0usize..3, j in 0usize..3) {
        let (b, l) = cutoff_space(3, 5);
        let c = commutator(l.a(i), &l.a_dag(j));
        for r in 0..b.dim() {
            if b.particles(r) >= 5 {
                continue;
            }
            for col in 0..b.dim() {
                let expected = if i == j && r == col { 1.0 } else { 0.0 };
                prop_assert!((c.get(r, col) - C64::new(expected, 0.0)).norm() < 1e-13);
            }
        }
        let aa = commutator(l.a(i), l.a(j));
        prop_assert!(aa.frobenius() < 1e-13);
    }

    #[test]
    fn many_body_hamiltonian_lives_on_its_sector(amp in 0.1..3.0f64, n in 2usize..5) {
        let lat = Lattice::new(1, 4, 4.0).unwrap();
        let w = sample_w(&Shape::CompactBump { amplitude: amp, radius: 1.0 }, &lat, false).unwrap();
        let (b, l) = build_fock_space(4, Sector::Fixed(n), DEFAULT_MEMORY_CAP).unwrap();
        let hn = assemble_hn(&w, n, &b).unwrap();
        prop_assert!(hn.hermitian_defect() < 1e-12);
        prop_assert_eq!((hn.nrows(), hn.ncols()), (b.dim(), b.dim()));
        let num = l.number_operator().unwrap();
        let scaled = CsrMatrix::identity(b.dim()).scale(C64::new(n as f64, 0.0));
        prop_assert_eq!(num.add_scaled(&scaled, C64::new(-1.0, 0.0)).unwrap().frobenius(), 0.0);
        prop_assert_eq!(commutator(&hn, &num).frobenius(), 0.0);
    }

    #[test]
    fn excitation_map_is_unitary(c in nonzero(4), seed in complex_vec(210)) {
        let lat = Lattice::new(1, 4, 4.0).unwrap();
        let u = normalized(&lat, c);
        let map = ExcitationMap::new(&u, 6, DEFAULT_MEMORY_CAP).unwrap();
        let fixed = map.fixed_basis();
        prop_assume!(fixed.dim() <= seed.len());
        let mut psi = FockVector::from_coeffs(fixed, seed[..fixed.dim()].to_vec()).unwrap();
        prop_assume!(psi.norm() > 1e-3);
        psi.normalize();
        let phi = map.decompose(&psi).unwrap();
        prop_assert!((phi.norm() - 1.0).abs() < 1e-10);
        prop_assert!(map.embed(&phi).unwrap().sub(&psi).unwrap().norm() < 1e-10);
    }
}

#[test]
fn hartree_h2_norm_stays_bounded_on_default_scenario() {
    let lat = Lattice::new(1, 16, 16.0).unwrap();
    let w = sample_w(&Shape::default(), &lat, false).unwrap();
    let u0 = GridFunction::gaussian_packet(&lat, 2.5, &[1.0]);
    let traj = hartree_evolve(&u0, &w, 2.0, 1e-3, 100).unwrap();
    let h0 = u0.sobolev_norm(2.0);
    assert!(traj.samples.iter().all(|s| s.u.sobolev_norm(2.0) <= 10.0 * h0));
}
