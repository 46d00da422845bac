//! Norm approximation of the many-body dynamics and the residual of the Bogoliubov generator.

use std::sync::Arc;

use super::basis::{FockBasis, Sector};
use super::excitation::ExcitationMap;
use super::krylov::{expm_multiply, KrylovOptions};
use super::operators::{assemble_bogoliubov_h, assemble_hn};
use super::states::{build_quasi_free, fock_evolve, FockVector};
use crate::error::{Error, Result};
use crate::hartree::{hartree_evolve, hartree_step, step_count, HartreeState, HartreeTrajectory};
use crate::interaction::PotentialGrid;
use crate::kernels::{GeneratorProvider, HartreeGenerator, KernelSnapshot};
use crate::lattice::GridFunction;
use crate::pair_dynamics::PairState;
use crate::C64;

/// Weight along the condensate above which the excitation vector is flagged.
pub const LEAK_THRESHOLD: f64 = 1e-6;

/// Relative agreement required between the residuals at `δ` and `δ/2`.
pub const RICHARDSON_TOLERANCE: f64 = 0.05;

#[derive(Clone, Debug)]
pub struct NormApproxConfig {
    /// Initial condensate; normalized before use.
    pub u0: GridFunction,
    /// The scaled interaction `w_N` for this `N`.
    pub wn: PotentialGrid,
    pub n: usize,
    /// Density matrices of the quasi-free `Φ(0)`, orthogonal to `u0`.
    pub pair0: PairState,
    pub t_final: f64,
    pub dt: f64,
    /// Cutoff of the excitation space above `N`.
    pub extra_cutoff: usize,
    pub cap: usize,
}

#[derive(Clone, Debug)]
pub struct NormApproxOutcome {
    pub n: usize,
    pub t: f64,
    /// `‖U_N(t)Ψ_N(t) - Φ(t)‖`.
    pub error: f64,
    /// The same quantity at `t = 0`, i.e. the weight of `Φ(0)` above `N` particles.
    pub initial_error: f64,
    /// `⟨Φ(t), 𝒩_u Φ(t)⟩^{1/2}`, the weight of `Φ(t)` along the condensate.
    pub leak: f64,
    pub leak_flag: bool,
    /// Weight of `Φ(t)` in the two highest retained sectors.
    pub truncation_leak: f64,
    /// Dimensions of the fixed-`N` sector, the cutoff-`N` space and the space carrying `Φ`.
    pub dims: [usize; 3],
    pub u_t: GridFunction,
    pub phi_t: FockVector,
    pub hartree: Arc<HartreeTrajectory>,
}

/// Evolves `Ψ_N` under `H_N`, `u` under the Hartree flow and `Φ` under `ℍ(t)`, then compares.
pub fn norm_approx_run(cfg: &NormApproxConfig) -> Result<NormApproxOutcome> {
    if cfg.n < 2 {
        return Err(Error::config("scaling.N", "need N >= 2"));
    }
    if !(cfg.t_final > 0.0) {
        return Err(Error::config("time.t_final", "must be > 0"));
    }
    if !(cfg.dt > 0.0) {
        return Err(Error::config("time.dt", "must be > 0"));
    }
    let mut u0 = cfg.u0.clone();
    u0.normalize();
    let modes = u0.coeffs().len();
    let n = cfg.n;

    let steps = step_count(cfg.t_final, cfg.dt);
    let dt = cfg.t_final / steps as f64;
    let hartree = Arc::new(hartree_evolve(&u0, &cfg.wn, cfg.t_final, 0.5 * dt, 1)?);
    let generator = HartreeGenerator::new(hartree.clone(), cfg.wn.clone())?;

    let big = Arc::new(FockBasis::new(modes, Sector::Cutoff(n + cfg.extra_cutoff), cfg.cap)?);
    let map0 = ExcitationMap::new(&u0, n, cfg.cap)?;
    let phi0 = build_quasi_free(&cfg.pair0.gamma, &cfg.pair0.alpha, &big)?.state;
    let phi0_low = phi0.truncated(n).restricted_to(map0.cutoff_basis())?;
    let initial_error = phi0.sub(&phi0.truncated(n))?.norm();
    let psi0 = map0.embed(&phi0_low)?;

    let hn = assemble_hn(&cfg.wn, n, map0.fixed_basis())?;
    let psi_t = FockVector::from_coeffs(
        map0.fixed_basis(),
        expm_multiply(&hn, psi0.coeffs(), cfg.t_final, KrylovOptions::default())?,
    )?;

    let bogoliubov = |t: f64| {
        let g = generator.generator(t)?;
        assemble_bogoliubov_h(&g.h, &g.k2, &big)
    };
    let traj = fock_evolve(&phi0, &bogoliubov, 0.0, cfg.t_final, dt, steps)?;
    let phi_t = traj.states.last().cloned().ok_or_else(|| Error::contract("empty trajectory"))?;

    let mut u_t = hartree.u_at(cfg.t_final);
    u_t.normalize();
    let map_t = ExcitationMap::with_bases(&u_t, map0.fixed_basis().clone(), map0.cutoff_basis().clone())?;
    let excitations = map_t.decompose(&psi_t)?.restricted_to(&big)?;
    let error = excitations.sub(&phi_t)?.norm();

    let leak = condensate_weight(&u_t, &phi_t);
    Ok(NormApproxOutcome {
        n,
        t: cfg.t_final,
        error,
        initial_error,
        leak,
        leak_flag: leak > LEAK_THRESHOLD,
        truncation_leak: phi_t.truncation_leak(),
        dims: [map0.fixed_basis().dim(), map0.cutoff_basis().dim(), big.dim()],
        u_t,
        phi_t,
        hartree,
    })
}

/// `‖U_N(t)Ψ_N(t) - Φ(t)‖` for the configured scenario.
pub fn norm_approx_error(cfg: &NormApproxConfig) -> Result<f64> {
    Ok(norm_approx_run(cfg)?.error)
}

/// `⟨φ, 𝒩_u φ⟩^{1/2}` with `𝒩_u = a*(u)a(u)`.
pub fn condensate_weight(u: &GridFunction, phi: &FockVector) -> f64 {
    let c = u.coeffs();
    let b = phi.basis();
    let mut out = vec![C64::new(0.0, 0.0); phi.coeffs().len()];
    let mut occ = vec![0u8; b.modes()];
    for (i, z) in phi.coeffs().iter().enumerate() {
        if *z == C64::new(0.0, 0.0) {
            continue;
        }
        for (m, cm) in c.iter().enumerate() {
            occ.copy_from_slice(b.occupation(i));
            if occ[m] == 0 {
                continue;
            }
            let amp = (occ[m] as f64).sqrt();
            occ[m] -= 1;
            if let Some(j) = b.index_of(&occ) {
                out[j] += cm.conj() * amp * z;
            }
        }
    }
    out.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Measures `‖1^{≤N} Γ(Q) (G_N - ℍ(t)) φ‖` where
/// `G_N = U_N H_N U_N* + i(∂_t U_N)U_N*` with a central difference of step `δ`.
#[derive(Clone, Debug)]
pub struct ResidualProbe {
    map: ExcitationMap,
    map_plus: ExcitationMap,
    map_minus: ExcitationMap,
    hn: super::sparse::CsrMatrix,
    bogoliubov: super::sparse::CsrMatrix,
    delta: f64,
}

impl ResidualProbe {
    /// `u_t` is the condensate at time `t`; `u(t ± δ)` follow from one Strang step each way.
    pub fn new(u_t: &GridFunction, wn: &PotentialGrid, n: usize, delta: f64, cap: usize) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::config("oracle.delta", "must be > 0"));
        }
        let mut u = u_t.clone();
        u.normalize();
        let state = HartreeState::new(u.clone(), wn)?;
        let mut u_plus = hartree_step(&state, wn, delta)?.u;
        let mut u_minus = hartree_step(&state, wn, -delta)?.u;
        u_plus.normalize();
        u_minus.normalize();

        let map = ExcitationMap::new(&u, n, cap)?;
        let fixed = map.fixed_basis().clone();
        let cutoff = map.cutoff_basis().clone();
        let map_plus = ExcitationMap::with_bases(&u_plus, fixed.clone(), cutoff.clone())?;
        let map_minus = ExcitationMap::with_bases(&u_minus, fixed.clone(), cutoff.clone())?;
        let hn = assemble_hn(wn, n, &fixed)?;
        let snap = KernelSnapshot::from_condensate(0.0, &u, wn)?;
        let bogoliubov = assemble_bogoliubov_h(snap.h.matrix(), snap.k2.matrix(), &cutoff)?;
        Ok(Self {
            map,
            map_plus,
            map_minus,
            hn,
            bogoliubov,
            delta,
        })
    }

    pub fn map(&self) -> &ExcitationMap {
        &self.map
    }

    /// The residual on `φ` (on the cutoff-`N` space, orthogonal to the condensate).
    pub fn residual(&self, phi: &FockVector) -> Result<f64> {
        let psi = self.map.embed(phi)?;
        let conjugated = self.map.decompose(&psi.apply(&self.hn)?)?;
        let forward = self.map_plus.decompose(&psi)?;
        let backward = self.map_minus.decompose(&psi)?;
        let i_over = C64::new(0.0, 1.0 / (2.0 * self.delta));
        let mut g: Vec<C64> = conjugated
            .coeffs()
            .iter()
            .zip(forward.coeffs().iter().zip(backward.coeffs()))
            .map(|(c, (f, b))| c + i_over * (f - b))
            .collect();
        let hphi = self.bogoliubov.mul_vec(phi.coeffs());
        g.iter_mut().zip(&hphi).for_each(|(x, y)| *x -= y);
        let diff = FockVector::from_coeffs(self.map.cutoff_basis(), g)?;
        Ok(self.map.project_plus(&diff)?.norm())
    }
}

/// Residual of the Bogoliubov generator at condensate `u_t` on `φ`.
pub fn generator_residual(
    u_t: &GridFunction,
    wn: &PotentialGrid,
    n: usize,
    phi: &FockVector,
    delta: f64,
    cap: usize,
) -> Result<f64> {
    ResidualProbe::new(u_t, wn, n, delta, cap)?.residual(phi)
}

#[derive(Clone, Copy, Debug)]
pub struct ResidualReport {
    pub residual: f64,
    pub residual_half: f64,
    /// `|r(δ) - r(δ/2)| <= 5% · r(δ/2)`.
    pub converged: bool,
}

/// Residual at `δ` and `δ/2` with the convergence verdict.
pub fn generator_residual_checked(
    u_t: &GridFunction,
    wn: &PotentialGrid,
    n: usize,
    phi: &FockVector,
    delta: f64,
    cap: usize,
) -> Result<ResidualReport> {
    let residual = generator_residual(u_t, wn, n, phi, delta, cap)?;
    let residual_half = generator_residual(u_t, wn, n, phi, 0.5 * delta, cap)?;
    Ok(ResidualReport {
        residual,
        residual_half,
        converged: (residual - residual_half).abs() <= RICHARDSON_TOLERANCE * residual_half.abs(),
    })
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::super::basis::DEFAULT_MEMORY_CAP;
    use super::*;
    use crate::interaction::{sample_w, scale_wn, Shape};
    use crate::lattice::Lattice;

    fn setup(n: usize, interacting: bool) -> NormApproxConfig {
        let lat = Lattice::new(1, 4, 4.0).unwrap();
        let mut u0 = GridFunction::gaussian_packet(&lat, 0.9, &[0.2]);
        u0.normalize();
        let wn = if interacting {
            scale_wn(&sample_w(&Shape::default(), &lat, false).unwrap(), n, 0.0).unwrap()
        } else {
            PotentialGrid::zero(&lat)
        };
        NormApproxConfig {
            u0,
            wn,
            n,
            pair0: PairState::vacuum(4),
            t_final: 0.2,
            dt: 0.01,
            extra_cutoff: 4,
            cap: DEFAULT_MEMORY_CAP,
        }
    }

    #[test]
    fn free_dynamics_are_exact() {
        let out = norm_approx_run(&setup(4, false)).unwrap();
        assert!(out.error < 1e-9, "{}", out.error);
        assert_eq!(out.initial_error, 0.0);
        assert!(!out.leak_flag);
    }

    #[test]
    fn free_residual_is_finite_difference_only() {
        let cfg = setup(4, false);
        let out = norm_approx_run(&cfg).unwrap();
        let map = ExcitationMap::new(&out.u_t, 4, DEFAULT_MEMORY_CAP).unwrap();
        let mut phi = FockVector::zeros(map.cutoff_basis());
        for (i, c) in phi.coeffs_mut().iter_mut().enumerate() {
            *c = C64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos());
        }
        let mut phi = map.project_plus(&phi).unwrap();
        phi.normalize();
        let r = generator_residual(&out.u_t, &cfg.wn, 4, &phi, 1e-3, DEFAULT_MEMORY_CAP).unwrap();
        assert!(r < 1e-5, "{r}");
        let mut rotated = phi.clone();
        rotated.scale(C64::from_polar(1.0, 0.7));
        let r2 = generator_residual(&out.u_t, &cfg.wn, 4, &rotated, 1e-3, DEFAULT_MEMORY_CAP).unwrap();
        assert!((r - r2).abs() < 1e-12);
    }

    #[test]
    fn interacting_error_is_small_and_decreasing() {
        let e4 = norm_approx_error(&setup(4, true)).unwrap();
        let e8 = norm_approx_error(&setup(8, true)).unwrap();
        assert!(e8 < e4, "{e4} {e8}");
    }

    #[test]
    fn slope_of_power_law() {
        let x = [4.0, 8.0, 16.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(-0.5)).collect();
        assert!((log_log_slope(&x, &y) + 0.5).abs() < 1e-12);
    }
}
