//! Explicit a-priori envelopes for `‖α‖²_HS + ‖γ‖²_HS` and `⟨𝒩⟩`.

use crate::error::{Error, Result};
use crate::kernels::KernelSnapshot;
use crate::linalg::{self, frobenius, CMatrix};
use crate::pair_dynamics::{PairState, PairTrajectory};

/// Envelope values past this time reuse the unit-interval formulas.
pub const PROVEN_HORIZON: f64 = 1.0;

/// `ξ = 6(‖K₂‖ + ‖h₂‖)` in operator norm.
pub fn xi_of_t(h2: &CMatrix, k2: &CMatrix) -> f64 {
    6.0 * (linalg::spectral_norm(k2) + linalg::spectral_norm(h2))
}

/// `𝓛⁻¹ = (h₁ ⊗ 1 + 1 ⊗ h₁)⁻¹` acting on two-variable kernels, diagonalized once.
#[derive(Clone, Debug)]
pub struct InverseL {
    vectors: CMatrix,
    values: Vec<f64>,
}

impl InverseL {
    /// Requires `h₁` Hermitian and strictly positive.
    pub fn new(h1: &CMatrix) -> Result<Self> {
        let herm = (h1 + h1.adjoint()) * linalg::re(0.5);
        let eig = herm.symmetric_eigen();
        let values: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
        let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(min > 0.0) {
            return Err(Error::contract(format!(
                "h1 must be strictly positive, smallest eigenvalue {min}"
            )));
        }
        Ok(Self {
            vectors: eig.eigenvectors,
            values,
        })
    }

    /// `𝓛⁻¹k` expressed in the eigenbasis of `h₁` (so its Frobenius norm is the L² norm).
    pub fn apply_spectral(&self, k: &CMatrix) -> CMatrix {
        // h₁ k + k h₁ᵀ = V (D Y' + Y' D) Vᵀ with Y' = V† k conj(V)
        let v = &self.vectors;
        let mut y = v.adjoint() * k * linalg::conj(v);
        for a in 0..y.nrows() {
            for b in 0..y.ncols() {
                y[(a, b)] /= self.values[a] + self.values[b];
            }
        }
        y
    }

    /// `𝓛⁻¹k` in the original basis.
    pub fn apply(&self, k: &CMatrix) -> CMatrix {
        let y = self.apply_spectral(k);
        &self.vectors * y * self.vectors.transpose()
    }

    pub fn hs_norm(&self, k: &CMatrix) -> f64 {
        frobenius(&self.apply_spectral(k))
    }
}

/// Cumulative trapezoid integral of `f` on `times`.
pub fn cumulative_trapezoid(times: &[f64], f: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(times.len());
    let mut acc = 0.0;
    for i in 0..times.len() {
        if i > 0 {
            acc += 0.5 * (times[i] - times[i - 1]) * (f[i] + f[i - 1]);
        }
        out.push(acc);
    }
    out
}

fn check_grid(times: &[f64], series: &[&[f64]]) -> Result<()> {
    for s in series {
        if s.len() != times.len() {
            return Err(Error::Dimension {
                expected: times.len(),
                got: s.len(),
            });
        }
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::contract("time grid must be strictly increasing"));
    }
    Ok(())
}

/// `2‖α(0)‖²_HS + 2‖γ(0)‖²_HS`.
pub fn initial_term(gamma0: &CMatrix, alpha0: &CMatrix) -> f64 {
    2.0 * frobenius(alpha0).powi(2) + 2.0 * frobenius(gamma0).powi(2)
}

/// Per-sample norms feeding `Θ`.
#[derive(Clone, Debug, Default)]
pub struct ThetaInputs {
    /// `‖𝓛⁻¹k₁(t)‖_L²`.
    pub l_inv_k1: Vec<f64>,
    /// `‖k₂(t)‖_L²`.
    pub k2: Vec<f64>,
    /// `‖𝓛⁻¹∂_t k₁(t)‖_L²`.
    pub l_inv_dk1: Vec<f64>,
}

impl ThetaInputs {
    /// From kernel series with `k = k₁ + k₂`.
    pub fn from_series(
        k1_series: &[CMatrix],
        k2_series: &[CMatrix],
        dk1_series: &[CMatrix],
        h1: &CMatrix,
    ) -> Result<Self> {
        let l = InverseL::new(h1)?;
        Ok(Self {
            l_inv_k1: k1_series.iter().map(|k| l.hs_norm(k)).collect(),
            k2: k2_series.iter().map(frobenius).collect(),
            l_inv_dk1: dk1_series.iter().map(|k| l.hs_norm(k)).collect(),
        })
    }
}

/// `Θ(t) = 2‖α₀‖² + 2‖γ₀‖² + 2(‖𝓛⁻¹k₁(t)‖ + ‖𝓛⁻¹k₁(0)‖ + ∫₀ᵗ ‖k₂‖ + ‖𝓛⁻¹∂k₁‖)²`.
pub fn theta_series(times: &[f64], inputs: &ThetaInputs, initial: f64) -> Result<Vec<f64>> {
    check_grid(times, &[&inputs.l_inv_k1, &inputs.k2, &inputs.l_inv_dk1])?;
    if times.is_empty() {
        return Ok(Vec::new());
    }
    let integrand: Vec<f64> = inputs.k2.iter().zip(&inputs.l_inv_dk1).map(|(a, b)| a + b).collect();
    let integral = cumulative_trapezoid(times, &integrand);
    let at0 = inputs.l_inv_k1[0];
    Ok(times
        .iter()
        .enumerate()
        .map(|(i, _)| {
            let s = inputs.l_inv_k1[i] + at0 + integral[i];
            initial + 2.0 * s * s
        })
        .collect())
}

/// Series form of `Θ` from kernel series, as read off the definition.
pub fn theta_of_t(
    times: &[f64],
    k1_series: &[CMatrix],
    k2_series: &[CMatrix],
    dk1_series: &[CMatrix],
    gamma0: &CMatrix,
    alpha0: &CMatrix,
    h1: &CMatrix,
) -> Result<Vec<f64>> {
    let inputs = ThetaInputs::from_series(k1_series, k2_series, dk1_series, h1)?;
    theta_series(times, &inputs, initial_term(gamma0, alpha0))
}

/// `Θ(t) + ∫₀ᵗ exp(∫ₛᵗ ξ) ξ(s)Θ(s) ds` by the trapezoid rule on `times`.
pub fn gronwall_envelope(times: &[f64], theta: &[f64], xi: &[f64]) -> Result<Vec<f64>> {
    check_grid(times, &[theta, xi])?;
    let mut out = Vec::with_capacity(times.len());
    let mut integral = 0.0;
    for i in 0..times.len() {
        if i > 0 {
            let h = times[i] - times[i - 1];
            let growth = (0.5 * h * (xi[i] + xi[i - 1])).exp();
            integral = growth * integral
                + 0.5 * h * (growth * xi[i - 1] * theta[i - 1] + xi[i] * theta[i]);
        }
        out.push(theta[i] + integral);
    }
    Ok(out)
}

/// `Θ₁ = Θ - 2‖α₀‖² - 2‖γ₀‖² + 4(1 + n₀)²`.
pub fn theta1_series(theta: &[f64], initial: f64, n0: f64) -> Vec<f64> {
    let extra = 4.0 * (1.0 + n0) * (1.0 + n0);
    theta.iter().map(|t| t - initial + extra).collect()
}

/// Particle-number envelope: the Grönwall display applied to `Θ₁`.
///
/// `initial` is the `2‖α₀‖² + 2‖γ₀‖²` part contained in `theta`.
pub fn particle_envelope(
    times: &[f64],
    theta: &[f64],
    xi: &[f64],
    n0: f64,
    initial: f64,
) -> Result<Vec<f64>> {
    if !(n0 >= 0.0) {
        return Err(Error::contract("initial particle number must be >= 0"));
    }
    let theta1 = theta1_series(theta, initial, n0);
    gronwall_envelope(times, &theta1, xi)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnvelopeSeries {
    pub times: Vec<f64>,
    pub xi: Vec<f64>,
    pub theta: Vec<f64>,
    pub gronwall: Vec<f64>,
    pub theta1: Vec<f64>,
    pub particle_envelope: Vec<f64>,
    /// True per sample when `t` lies past [`PROVEN_HORIZON`].
    pub extrapolated: Vec<bool>,
}

impl EnvelopeSeries {
    /// Envelopes along kernel snapshots (aligned with a pair trajectory) from `(γ₀, α₀)`.
    pub fn from_snapshots(snapshots: &[KernelSnapshot], initial: &PairState) -> Result<Self> {
        let Some(first) = snapshots.first() else {
            return Err(Error::contract("no kernel snapshots"));
        };
        let times: Vec<f64> = snapshots.iter().map(|s| s.t).collect();
        let l = InverseL::new(first.h1.matrix())?;
        let mut inputs = ThetaInputs::default();
        let mut xi = Vec::with_capacity(times.len());
        for s in snapshots {
            inputs.l_inv_k1.push(l.hs_norm(&s.k2_tilde));
            inputs.k2.push(frobenius(&(s.k2.matrix() - &s.k2_tilde)));
            inputs.l_inv_dk1.push(l.hs_norm(&s.dk2_tilde));
            xi.push(xi_of_t(s.h2.matrix(), s.k2.matrix()));
        }
        let init = initial_term(&initial.gamma, &initial.alpha);
        let n0 = linalg::trace(&initial.gamma).re.max(0.0);
        Self::assemble(times, xi, &inputs, init, n0)
    }

    pub fn assemble(
        times: Vec<f64>,
        xi: Vec<f64>,
        inputs: &ThetaInputs,
        initial: f64,
        n0: f64,
    ) -> Result<Self> {
        let theta = theta_series(&times, inputs, initial)?;
        let gronwall = gronwall_envelope(&times, &theta, &xi)?;
        let theta1 = theta1_series(&theta, initial, n0);
        let particle_envelope = gronwall_envelope(&times, &theta1, &xi)?;
        let extrapolated = times.iter().map(|&t| t > PROVEN_HORIZON + 1e-12).collect();
        let out = Self {
            times,
            xi,
            theta,
            gronwall,
            theta1,
            particle_envelope,
            extrapolated,
        };
        if !out.is_valid() {
            return Err(Error::Blowup {
                time: out.times.last().copied().unwrap_or(0.0),
                message: "non-finite or negative envelope".into(),
            });
        }
        Ok(out)
    }

    fn is_valid(&self) -> bool {
        let all = [&self.xi, &self.theta, &self.gronwall, &self.theta1, &self.particle_envelope];
        all.iter().all(|s| s.iter().all(|v| v.is_finite() && *v >= 0.0))
            && self.gronwall.iter().zip(&self.theta).all(|(g, t)| g >= t)
    }

    pub fn max_particle_envelope(&self) -> f64 {
        self.particle_envelope.iter().cloned().fold(0.0, f64::max)
    }

    pub fn any_extrapolated(&self) -> bool {
        self.extrapolated.iter().any(|&e| e)
    }
}

/// Pointwise comparison of a pair trajectory with its envelopes.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvelopeCheck {
    pub hs_ok: bool,
    pub particle_ok: bool,
    /// `min_t (envelope - value)` for `‖α‖² + ‖γ‖²`.
    pub hs_margin: f64,
    /// `min_t (envelope - Tr γ)`.
    pub particle_margin: f64,
}

impl EnvelopeCheck {
    pub fn passed(&self) -> bool {
        self.hs_ok && self.particle_ok
    }
}

/// Strict inequalities at every sample; times must match.
pub fn check_envelopes(traj: &PairTrajectory, env: &EnvelopeSeries) -> Result<EnvelopeCheck> {
    if traj.samples.len() != env.times.len() {
        return Err(Error::Dimension {
            expected: env.times.len(),
            got: traj.samples.len(),
        });
    }
    let mut hs_margin = f64::INFINITY;
    let mut particle_margin = f64::INFINITY;
    for (i, s) in traj.samples.iter().enumerate() {
        if (s.state.t - env.times[i]).abs() > 1e-9 {
            return Err(Error::contract("envelope and trajectory grids differ"));
        }
        hs_margin = hs_margin.min(env.gronwall[i] - s.diagnostics.hs_sum_sqr());
        particle_margin = particle_margin.min(env.particle_envelope[i] - s.diagnostics.trace_gamma);
    }
    Ok(EnvelopeCheck {
        hs_ok: hs_margin > 0.0,
        particle_ok: particle_margin > 0.0,
        hs_margin,
        particle_margin,
    })
}

/// Report-only particle envelope driven by a supplied profile `s(t)` for `‖u(t)‖_∞`.
///
/// Uses `ξ = c₁ s²`, `‖𝓛⁻¹k₁‖ ≤ c₁ s^{2/3}`, `‖k₂‖ ≤ c₁ s²` and `‖𝓛⁻¹∂k₁‖ ≤ c₁ s^{2/3}`,
/// which turns the Grönwall display into logarithmic growth when `s(t) ~ (1+t)^{-3/2}`.
pub fn decay_profile_envelope(times: &[f64], sup_norm: &[f64], c1: f64, n0: f64) -> Result<Vec<f64>> {
    check_grid(times, &[sup_norm])?;
    if times.is_empty() {
        return Ok(Vec::new());
    }
    let xi: Vec<f64> = sup_norm.iter().map(|s| c1 * s * s).collect();
    let inputs = ThetaInputs {
        l_inv_k1: sup_norm.iter().map(|s| c1 * s.powf(2.0 / 3.0)).collect(),
        k2: sup_norm.iter().map(|s| c1 * s * s).collect(),
        l_inv_dk1: sup_norm.iter().map(|s| c1 * s.powf(2.0 / 3.0)).collect(),
    };
    let theta = theta_series(times, &inputs, 0.0)?;
    particle_envelope(times, &theta, &xi, n0, 0.0)
}
