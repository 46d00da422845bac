//! Split-step Fourier integrator for `i∂_t u = (-Δ + w_N * |u|² - μ_N) u`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::interaction::{mean_field_potential, mu_pairing, PotentialGrid};
use crate::lattice::{GridFunction, Lattice};
use crate::C64;

/// Whether the scalar gauge `μ_N(t)` is subtracted in the evolution.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Gauge {
    MuN,
    None,
}

#[derive(Clone, Debug)]
pub struct HartreeState {
    pub u: GridFunction,
    pub t: f64,
    /// `μ_N` at the current density.
    pub mu: f64,
    pub mass0: f64,
    pub energy0: f64,
    /// `∫₀ᵗ μ_N` accumulated with the integrator's own quadrature.
    pub phase: f64,
}

impl HartreeState {
    pub fn new(u: GridFunction, wn: &PotentialGrid) -> Result<Self> {
        let v = mean_field_potential(wn, &u)?;
        let mu = 0.5 * mu_pairing(&v, &u);
        let energy0 = hartree_energy(&u, wn)?;
        Ok(Self {
            mass0: u.norm_sqr(),
            u,
            t: 0.0,
            mu,
            energy0,
            phase: 0.0,
        })
    }
}

/// `⟨u, -Δu⟩ + ½⟨|u|², w_N * |u|²⟩`.
pub fn hartree_energy(u: &GridFunction, wn: &PotentialGrid) -> Result<f64> {
    let kinetic = u.inner_product(&u.laplacian())?.re;
    let v = mean_field_potential(wn, u)?;
    Ok(kinetic + 0.5 * mu_pairing(&v, u))
}

/// Largest step with `dt · max|k|² <= π/4`.
pub fn max_accurate_dt(lattice: &Lattice) -> f64 {
    let k2 = lattice.max_k_squared();
    if k2 > 0.0 {
        PI / (4.0 * k2)
    } else {
        f64::INFINITY
    }
}

/// One Strang step: half potential, full kinetic, half potential.
pub fn hartree_step(state: &HartreeState, wn: &PotentialGrid, dt: f64) -> Result<HartreeState> {
    hartree_step_with(state, wn, dt, Gauge::MuN)
}

pub fn hartree_step_with(
    state: &HartreeState,
    wn: &PotentialGrid,
    dt: f64,
    gauge: Gauge,
) -> Result<HartreeState> {
    let mut u = state.u.clone();
    let lat = u.lattice().clone();

    let mu_a = half_potential(&mut u, wn, dt, gauge)?;
    let k_phase = |k2: f64| C64::from_polar(1.0, -dt * k2);
    lat.apply_phase_multiplier(u.coeffs_mut(), k_phase);
    let mu_b = half_potential(&mut u, wn, dt, gauge)?;

    if u.coeffs().iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(Error::Blowup {
            time: state.t + dt,
            message: "non-finite Hartree field".into(),
        });
    }
    Ok(HartreeState {
        u,
        t: state.t + dt,
        mu: mu_b,
        mass0: state.mass0,
        energy0: state.energy0,
        phase: state.phase + 0.5 * dt * (mu_a + mu_b),
    })
}

// exp(-i dt/2 (V - μ)) in position space; returns the μ used
fn half_potential(u: &mut GridFunction, wn: &PotentialGrid, dt: f64, gauge: Gauge) -> Result<f64> {
    let v = mean_field_potential(wn, u)?;
    let mu = 0.5 * mu_pairing(&v, u);
    let shift = if gauge == Gauge::MuN { mu } else { 0.0 };
    for (c, vi) in u.coeffs_mut().iter_mut().zip(&v) {
        *c *= C64::from_polar(1.0, -0.5 * dt * (vi - shift));
    }
    Ok(mu)
}

#[derive(Clone, Debug)]
pub struct HartreeSample {
    pub t: f64,
    pub u: GridFunction,
    pub mu: f64,
    pub phase: f64,
}

#[derive(Clone, Debug)]
pub struct HartreeTrajectory {
    pub samples: Vec<HartreeSample>,
    pub dt: f64,
    pub lattice: Lattice,
    pub max_mass_drift: f64,
    pub max_energy_drift: f64,
    pub energy0: f64,
}

pub fn hartree_evolve(
    u0: &GridFunction,
    wn: &PotentialGrid,
    t_final: f64,
    dt: f64,
    sample_every: usize,
) -> Result<HartreeTrajectory> {
    hartree_evolve_with(u0, wn, t_final, dt, sample_every, Gauge::MuN)
}

pub fn hartree_evolve_with(
    u0: &GridFunction,
    wn: &PotentialGrid,
    t_final: f64,
    dt: f64,
    sample_every: usize,
    gauge: Gauge,
) -> Result<HartreeTrajectory> {
    if !(t_final > 0.0) {
        return Err(Error::config("time.t_final", "must be > 0"));
    }
    if !(dt > 0.0) {
        return Err(Error::config("time.dt", "must be > 0"));
    }
    let sample_every = sample_every.max(1);
    let steps = step_count(t_final, dt);
    let dt = t_final / steps as f64;

    let mut state = HartreeState::new(u0.clone(), wn)?;
    let sample = |s: &HartreeState| HartreeSample {
        t: s.t,
        u: s.u.clone(),
        mu: s.mu,
        phase: s.phase,
    };
    let mut samples = vec![sample(&state)];
    let (mut mass_drift, mut energy_drift) = (0.0f64, 0.0f64);
    for step in 1..=steps {
        state = hartree_step_with(&state, wn, dt, gauge)?;
        state.t = step as f64 * dt;
        if step % sample_every == 0 || step == steps {
            mass_drift = mass_drift.max((state.u.norm_sqr() - state.mass0).abs());
            let e = hartree_energy(&state.u, wn)?;
            energy_drift = energy_drift.max((e - state.energy0).abs());
            samples.push(sample(&state));
        }
    }
    Ok(HartreeTrajectory {
        samples,
        dt,
        lattice: u0.lattice().clone(),
        max_mass_drift: mass_drift,
        max_energy_drift: energy_drift,
        energy0: state.energy0,
    })
}

/// Number of equal steps covering `[0, t_final]` with step at most `dt` (up to rounding).
pub fn step_count(t_final: f64, dt: f64) -> usize {
    ((t_final / dt) - 1e-9).ceil().max(1.0) as usize
}

impl HartreeTrajectory {
    pub fn t_final(&self) -> f64 {
        self.samples.last().map(|s| s.t).unwrap_or(0.0)
    }

    /// Relative energy drift `max |E(t) - E(0)| / |E(0)|`.
    pub fn relative_energy_drift(&self) -> f64 {
        if self.energy0 == 0.0 {
            self.max_energy_drift
        } else {
            self.max_energy_drift / self.energy0.abs()
        }
    }

    /// Linear interpolation of the sampled field at time `t` (clamped to the range).
    pub fn u_at(&self, t: f64) -> GridFunction {
        let s = &self.samples;
        if t <= s[0].t {
            return s[0].u.clone();
        }
        if t >= s[s.len() - 1].t {
            return s[s.len() - 1].u.clone();
        }
        let k = s.partition_point(|x| x.t <= t);
        let (a, b) = (&s[k - 1], &s[k]);
        let lambda = (t - a.t) / (b.t - a.t);
        if lambda < 1e-12 {
            return a.u.clone();
        }
        if lambda > 1.0 - 1e-12 {
            return b.u.clone();
        }
        let coeffs = a
            .u
            .coeffs()
            .iter()
            .zip(b.u.coeffs())
            .map(|(x, y)| x * (1.0 - lambda) + y * lambda)
            .collect();
        GridFunction::from_coeffs(&self.lattice, coeffs).expect("same lattice")
    }
}
