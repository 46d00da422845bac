//! Linear equations for the density-matrix pair `(γ, α)` of the Bogoliubov state.
//!
//! Conventions: `γ[m,n] = ⟨a*_n a_m⟩` and `α[m,n] = ⟨a_n a_m⟩` in the weighted site basis.

use crate::error::{Error, Result};
use crate::kernels::{Generator, GeneratorProvider};
use crate::lattice::GridFunction;
use crate::linalg::{self, conj, frobenius, re, CMatrix, I};
use crate::C64;

/// Smallest admissible eigenvalue of `γ`.
pub const GAMMA_EIG_TOL: f64 = -1e-10;
/// Smallest admissible eigenvalue of the block matrix `Γ`.
pub const BLOCK_EIG_TOL: f64 = -1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct PairState {
    pub gamma: CMatrix,
    pub alpha: CMatrix,
    pub t: f64,
}

impl PairState {
    pub fn vacuum(modes: usize) -> Self {
        Self {
            gamma: CMatrix::zeros(modes, modes),
            alpha: CMatrix::zeros(modes, modes),
            t: 0.0,
        }
    }

    pub fn new(gamma: CMatrix, alpha: CMatrix, t: f64) -> Result<Self> {
        let m = gamma.nrows();
        for (r, c) in [gamma.shape(), alpha.shape()] {
            if r != m || c != m {
                return Err(Error::Dimension {
                    expected: m,
                    got: if r != m { r } else { c },
                });
            }
        }
        Ok(Self { gamma, alpha, t })
    }

    pub fn modes(&self) -> usize {
        self.gamma.nrows()
    }

    /// `(γ + γ†)/2` and `(α + αᵀ)/2`.
    pub fn symmetrize(&mut self) {
        let g = self.gamma.adjoint();
        self.gamma += g;
        self.gamma *= re(0.5);
        let a = self.alpha.transpose();
        self.alpha += a;
        self.alpha *= re(0.5);
    }

    /// `‖γ - γ†‖_F + ‖α - αᵀ‖_F`.
    pub fn structure_defect(&self) -> f64 {
        linalg::hermitian_defect(&self.gamma) + linalg::symmetric_defect(&self.alpha)
    }

    pub fn is_finite(&self) -> bool {
        linalg::is_finite(&self.gamma) && linalg::is_finite(&self.alpha)
    }
}

/// Right-hand side `(∂_t γ, ∂_t α)`.
pub fn pair_rhs(state: &PairState, h: &CMatrix, k: &CMatrix) -> Result<(CMatrix, CMatrix)> {
    let m = state.modes();
    for mat in [h, k] {
        if mat.shape() != (m, m) {
            return Err(Error::Dimension {
                expected: m,
                got: mat.nrows(),
            });
        }
    }
    let (g, a) = (&state.gamma, &state.alpha);
    let mi = -I;
    let dg = (h * g - g * h + k * conj(a) - a * conj(k)) * mi;
    let da = (h * a + a * h.transpose() + k + k * g.transpose() + g * k) * mi;
    Ok((dg, da))
}

/// Outcome of one RK4 step.
#[derive(Clone, Debug)]
pub struct StepReport {
    pub state: PairState,
    /// Structure defect before re-symmetrization.
    pub presym_drift: f64,
}

/// Classical RK4 followed by exact re-symmetrization.
pub fn pair_step(state: &PairState, provider: &dyn GeneratorProvider, dt: f64) -> Result<PairState> {
    Ok(pair_step_report(state, provider, dt)?.state)
}

pub fn pair_step_report(
    state: &PairState,
    provider: &dyn GeneratorProvider,
    dt: f64,
) -> Result<StepReport> {
    let t = state.t;
    let g0 = provider.generator(t)?;
    let gm = provider.generator(t + 0.5 * dt)?;
    let g1 = provider.generator(t + dt)?;
    rk4_with(state, [&g0, &gm, &g1], dt)
}

fn rk4_with(state: &PairState, gens: [&Generator; 3], dt: f64) -> Result<StepReport> {
    let [g0, gm, g1] = gens;
    let shifted = |dg: &CMatrix, da: &CMatrix, s: f64| PairState {
        gamma: &state.gamma + dg * re(s),
        alpha: &state.alpha + da * re(s),
        t: state.t,
    };
    let (k1g, k1a) = pair_rhs(state, &g0.h, &g0.k2)?;
    let (k2g, k2a) = pair_rhs(&shifted(&k1g, &k1a, 0.5 * dt), &gm.h, &gm.k2)?;
    let (k3g, k3a) = pair_rhs(&shifted(&k2g, &k2a, 0.5 * dt), &gm.h, &gm.k2)?;
    let (k4g, k4a) = pair_rhs(&shifted(&k3g, &k3a, dt), &g1.h, &g1.k2)?;
    let w = re(dt / 6.0);
    let gamma = &state.gamma + (k1g + (k2g + k3g) * re(2.0) + k4g) * w;
    let alpha = &state.alpha + (k1a + (k2a + k3a) * re(2.0) + k4a) * w;
    let mut next = PairState {
        gamma,
        alpha,
        t: state.t + dt,
    };
    if !next.is_finite() {
        return Err(Error::Blowup {
            time: next.t,
            message: "non-finite density matrices".into(),
        });
    }
    let presym_drift = next.structure_defect();
    next.symmetrize();
    Ok(StepReport {
        state: next,
        presym_drift,
    })
}

/// `(‖γ + γ² - αα*‖_F, ‖γα - αγᵀ‖_F)`; both vanish exactly for quasi-free pure states.
pub fn quasi_free_defect(state: &PairState) -> (f64, f64) {
    let (g, a) = (&state.gamma, &state.alpha);
    let y3 = g + g * g - a * conj(a);
    let y4 = g * a - a * g.transpose();
    (frobenius(&y3), frobenius(&y4))
}

/// `Tr γ`.
pub fn particle_expectation(state: &PairState) -> f64 {
    linalg::trace(&state.gamma).re
}

/// Smallest eigenvalue of `Γ = [[γ, α], [α*, 1 + γᵀ]]`.
pub fn block_min_eigenvalue(state: &PairState) -> f64 {
    let m = state.modes();
    let mut b = CMatrix::zeros(2 * m, 2 * m);
    b.view_mut((0, 0), (m, m)).copy_from(&state.gamma);
    b.view_mut((0, m), (m, m)).copy_from(&state.alpha);
    b.view_mut((m, 0), (m, m)).copy_from(&state.alpha.adjoint());
    b.view_mut((m, m), (m, m))
        .copy_from(&(linalg::identity(m) + state.gamma.transpose()));
    linalg::hermitian_eigenvalues(&b)[0]
}

pub fn gamma_min_eigenvalue(state: &PairState) -> f64 {
    if state.modes() == 0 {
        return 0.0;
    }
    linalg::hermitian_eigenvalues(&state.gamma)[0]
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairDiagnostics {
    pub t: f64,
    pub trace_gamma: f64,
    pub hs_gamma: f64,
    pub hs_alpha: f64,
    pub y3: f64,
    pub y4: f64,
    pub min_eig_gamma: f64,
    pub min_eig_block: f64,
    /// Largest pre-symmetrization drift over the steps since the previous sample.
    pub presym_drift: f64,
}

impl PairDiagnostics {
    pub fn of(state: &PairState, presym_drift: f64) -> Self {
        let (y3, y4) = quasi_free_defect(state);
        Self {
            t: state.t,
            trace_gamma: particle_expectation(state),
            hs_gamma: frobenius(&state.gamma),
            hs_alpha: frobenius(&state.alpha),
            y3,
            y4,
            min_eig_gamma: gamma_min_eigenvalue(state),
            min_eig_block: block_min_eigenvalue(state),
            presym_drift,
        }
    }

    /// `‖α‖²_HS + ‖γ‖²_HS`.
    pub fn hs_sum_sqr(&self) -> f64 {
        self.hs_alpha * self.hs_alpha + self.hs_gamma * self.hs_gamma
    }

    pub fn admissible(&self) -> bool {
        self.min_eig_gamma >= GAMMA_EIG_TOL && self.min_eig_block >= BLOCK_EIG_TOL
    }
}

#[derive(Clone, Debug)]
pub struct PairSample {
    pub state: PairState,
    pub diagnostics: PairDiagnostics,
}

#[derive(Clone, Debug)]
pub struct PairTrajectory {
    pub samples: Vec<PairSample>,
    pub dt: f64,
    /// Set when some sample violated the positivity checks.
    pub admissibility_violated: bool,
}

impl PairTrajectory {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.state.t).collect()
    }

    pub fn max_quasi_free_defect(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| s.diagnostics.y3 + s.diagnostics.y4)
            .fold(0.0, f64::max)
    }

    pub fn last(&self) -> &PairSample {
        self.samples.last().expect("trajectory has the initial sample")
    }
}

/// Integrates from `initial.t` to `t_final` with steps of at most `dt`.
pub fn pair_evolve(
    initial: &PairState,
    provider: &dyn GeneratorProvider,
    t_final: f64,
    dt: f64,
    sample_every: usize,
) -> Result<PairTrajectory> {
    if provider.modes() != initial.modes() {
        return Err(Error::Dimension {
            expected: provider.modes(),
            got: initial.modes(),
        });
    }
    let span = t_final - initial.t;
    if !(span > 0.0) {
        return Err(Error::config("time.t_final", "must exceed the initial time"));
    }
    if !(dt > 0.0) {
        return Err(Error::config("time.dt", "must be > 0"));
    }
    let steps = crate::hartree::step_count(span, dt);
    let dt = span / steps as f64;
    let sample_every = sample_every.max(1);

    let mut state = initial.clone();
    let first = PairDiagnostics::of(&state, state.structure_defect());
    let mut violated = !first.admissible();
    let mut samples = vec![PairSample {
        state: state.clone(),
        diagnostics: first,
    }];
    let t0 = initial.t;
    let mut drift = 0.0f64;
    let mut g0 = provider.generator(t0)?;
    for step in 1..=steps {
        let ta = t0 + (step - 1) as f64 * dt;
        let tb = t0 + step as f64 * dt;
        let gm = provider.generator(0.5 * (ta + tb))?;
        let g1 = provider.generator(tb)?;
        let report = rk4_with(&state, [&g0, &gm, &g1], tb - ta)?;
        state = report.state;
        state.t = tb;
        drift = drift.max(report.presym_drift);
        g0 = g1;
        if step % sample_every == 0 || step == steps {
            let d = PairDiagnostics::of(&state, drift);
            violated |= !d.admissible();
            samples.push(PairSample {
                state: state.clone(),
                diagnostics: d,
            });
            drift = 0.0;
        }
    }
    Ok(PairTrajectory {
        samples,
        dt,
        admissibility_violated: violated,
    })
}

/// Orthonormal modes spanning part of `{u}^⊥`: plane waves in the order
/// `0, 1, -1, 2, -2, ...` (first axis), projected and Gram–Schmidt orthonormalized.
pub fn orthogonal_modes(u: &GridFunction, count: usize) -> Result<Vec<Vec<C64>>> {
    let lat = u.lattice();
    let m = lat.sites();
    if count + 1 > m {
        return Err(Error::config(
            "initial.pair.r_list",
            format!("{count} squeezed modes do not fit in {} orthogonal directions", m - 1),
        ));
    }
    let mut basis: Vec<Vec<C64>> = vec![u.coeffs().to_vec()];
    let norm_u = u.norm();
    basis[0].iter_mut().for_each(|c| *c /= norm_u);
    let mut out = Vec::with_capacity(count);
    let mut mode = 0usize;
    while out.len() < count && mode < m {
        let mut v: Vec<C64> = unit_plane_wave_order(mode, m);
        lat.inverse(&mut v);
        for b in &basis {
            let p: C64 = b.iter().zip(&v).map(|(x, y)| x.conj() * y).sum();
            v.iter_mut().zip(b).for_each(|(y, x)| *y -= p * x);
        }
        let n = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if n > 1e-8 {
            v.iter_mut().for_each(|c| *c /= n);
            basis.push(v.clone());
            out.push(v);
        }
        mode += 1;
    }
    if out.len() < count {
        return Err(Error::contract("could not complete the orthogonal mode set"));
    }
    Ok(out)
}

fn unit_plane_wave_order(k: usize, m: usize) -> Vec<C64> {
    // Fourier index sequence 0, 1, m-1, 2, m-2, ...
    let idx = if k == 0 {
        0
    } else if k % 2 == 1 {
        k.div_ceil(2)
    } else {
        m - k / 2
    };
    let mut v = vec![C64::new(0.0, 0.0); m];
    v[idx % m] = C64::new(1.0, 0.0);
    v
}

/// Quasi-free pair with squeezing `r_k` in the modes of [`orthogonal_modes`]:
/// `γ = Σ sinh²r_k v_k v_k†`, `α = Σ sinh r_k cosh r_k v_k v_kᵀ`.
pub fn squeezed_pair(u: &GridFunction, r_list: &[f64]) -> Result<PairState> {
    let modes = orthogonal_modes(u, r_list.len())?;
    Ok(squeezed_pair_in(&modes, r_list, u.lattice().sites()))
}

/// Same as [`squeezed_pair`] for explicit orthonormal modes.
pub fn squeezed_pair_in(modes: &[Vec<C64>], r_list: &[f64], dim: usize) -> PairState {
    let mut s = PairState::vacuum(dim);
    for (v, &r) in modes.iter().zip(r_list) {
        let (sh, ch) = (r.sinh(), r.cosh());
        let vt: Vec<C64> = v.iter().map(|c| c.conj()).collect();
        s.gamma += linalg::outer(v, v) * re(sh * sh);
        s.alpha += linalg::outer(v, &vt) * re(sh * ch);
    }
    s.symmetrize();
    s
}
