//! The five configurable runs: Hartree, pair dynamics, oracle comparison,
//! norm-approximation scaling and envelope checks.

use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{check_envelopes, EnvelopeCheck, EnvelopeSeries};
use crate::config::SimulationConfig;
use crate::error::{Error, Result};
use crate::fock::approx::{generator_residual_checked, log_log_slope, norm_approx_run, NormApproxConfig};
use crate::fock::{
    assemble_bogoliubov_h, build_fock_space, extract_density_matrices, fock_evolve, ExcitationMap, FockVector,
    Sector,
};
use crate::hartree::{hartree_energy, hartree_evolve, HartreeTrajectory};
use crate::interaction::PotentialGrid;
use crate::kernels::{GeneratorProvider, HartreeGenerator, KernelSnapshot};
use crate::lattice::{GridFunction, Lattice};
use crate::linalg::frobenius;
use crate::output::{Cell, Table};
use crate::pair_dynamics::{pair_evolve, PairTrajectory};
use crate::C64;

pub const MASS_TOLERANCE: f64 = 1e-12;
pub const ENERGY_TOLERANCE: f64 = 1e-8;
pub const FREE_TOLERANCE: f64 = 1e-12;
pub const H2_GROWTH_LIMIT: f64 = 10.0;
pub const QUASI_FREE_TOLERANCE: f64 = 1e-8;
pub const ORACLE_TOLERANCE: f64 = 1e-4;

/// Environment variable capping the `norm-scaling` worker count.
pub const THREADS_ENV: &str = "BOGDYN_THREADS";

/// Tables for CSV export plus a JSON summary and the overall verdict.
#[derive(Clone, Debug)]
pub struct ScenarioOutput {
    pub name: &'static str,
    pub tables: Vec<(String, Table)>,
    pub summary: serde_json::Value,
    pub passed: bool,
}

struct Setup {
    lattice: Lattice,
    u0: GridFunction,
    wn: PotentialGrid,
    n: usize,
    dt: f64,
}

fn setup(cfg: &SimulationConfig) -> Result<Setup> {
    cfg.validate()?;
    let lattice = cfg.lattice()?;
    let n = cfg.n()?;
    Ok(Setup {
        u0: cfg.u0(&lattice),
        wn: cfg.potential(&lattice, n)?,
        dt: cfg.dt(&lattice),
        lattice,
        n,
    })
}

fn to_json<T: Serialize>(x: &T) -> Result<serde_json::Value> {
    Ok(serde_json::to_value(x)?)
}

#[derive(Clone, Debug, Serialize)]
pub struct HartreeReport {
    #[serde(rename = "N")]
    pub n: usize,
    pub dt: f64,
    pub steps: usize,
    pub mass_drift: f64,
    pub relative_energy_drift: f64,
    /// `max_t ‖u(t)‖_{H²} / ‖u(0)‖_{H²}`.
    pub h2_growth: f64,
    /// Distance to the Fourier-exact solution when `w_N = 0`.
    pub free_deviation: Option<f64>,
    pub passed: bool,
}

/// Evolves the condensate and reports its conservation laws.
pub fn run_hartree(cfg: &SimulationConfig) -> Result<ScenarioOutput> {
    let s = setup(cfg)?;
    let traj = hartree_evolve(&s.u0, &s.wn, cfg.time.t_final, s.dt, cfg.time.sample_every)?;
    let mut table = Table::new(&["t", "mass", "energy", "H1", "H2", "sup_norm"]);
    let h2_0 = s.u0.sobolev_norm(2.0);
    let mut h2_max = 0.0f64;
    let mut free_dev = 0.0f64;
    for smp in &traj.samples {
        let h2 = smp.u.sobolev_norm(2.0);
        h2_max = h2_max.max(h2);
        table.push(vec![
            smp.t.into(),
            smp.u.norm_sqr().into(),
            hartree_energy(&smp.u, &s.wn)?.into(),
            smp.u.sobolev_norm(1.0).into(),
            h2.into(),
            smp.u.sup_norm().into(),
        ]);
        if s.wn.is_zero() {
            let mut exact = s.u0.clone();
            s.lattice
                .apply_phase_multiplier(exact.coeffs_mut(), |k2| C64::from_polar(1.0, -k2 * smp.t));
            let dev = smp
                .u
                .coeffs()
                .iter()
                .zip(exact.coeffs())
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            free_dev = free_dev.max(dev);
        }
    }
    let free_deviation = s.wn.is_zero().then_some(free_dev);
    let h2_growth = h2_max / h2_0;
    let relative_energy_drift = traj.relative_energy_drift();
    let passed = traj.max_mass_drift <= MASS_TOLERANCE
        && relative_energy_drift <= ENERGY_TOLERANCE
        && h2_growth <= H2_GROWTH_LIMIT
        && free_deviation.map_or(true, |d| d <= FREE_TOLERANCE);
    let report = HartreeReport {
        n: s.n,
        dt: traj.dt,
        steps: (traj.t_final() / traj.dt).round() as usize,
        mass_drift: traj.max_mass_drift,
        relative_energy_drift,
        h2_growth,
        free_deviation,
        passed,
    };
    Ok(ScenarioOutput {
        name: "hartree",
        tables: vec![("hartree".into(), table)],
        summary: to_json(&report)?,
        passed,
    })
}

/// Hartree trajectory at half the pair step, so pair midpoints are exact samples.
pub fn hartree_for_pairs(u0: &GridFunction, wn: &PotentialGrid, t_final: f64, dt: f64) -> Result<Arc<HartreeTrajectory>> {
    Ok(Arc::new(hartree_evolve(u0, wn, t_final, 0.5 * dt, 1)?))
}

/// Pair trajectory plus envelopes on its sample grid.
pub struct PairRun {
    pub generator: HartreeGenerator,
    pub trajectory: PairTrajectory,
    pub envelopes: EnvelopeSeries,
    pub check: EnvelopeCheck,
}

pub fn pair_run(cfg: &SimulationConfig) -> Result<PairRun> {
    let s = setup(cfg)?;
    let pair0 = cfg.pair0(&s.u0)?;
    let hartree = hartree_for_pairs(&s.u0, &s.wn, cfg.time.t_final, s.dt)?;
    let generator = HartreeGenerator::new(hartree, s.wn.clone())?;
    let trajectory = pair_evolve(&pair0, &generator, cfg.time.t_final, s.dt, cfg.time.sample_every)?;
    let snapshots = trajectory
        .times()
        .iter()
        .map(|&t| generator.snapshot(t))
        .collect::<Result<Vec<KernelSnapshot>>>()?;
    let envelopes = EnvelopeSeries::from_snapshots(&snapshots, &pair0)?;
    let check = check_envelopes(&trajectory, &envelopes)?;
    Ok(PairRun {
        generator,
        trajectory,
        envelopes,
        check,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct PairReport {
    #[serde(rename = "N")]
    pub n: usize,
    pub dt: f64,
    pub max_quasi_free_defect: f64,
    pub admissibility_violated: bool,
    pub final_trace_gamma: f64,
    pub passed: bool,
}

/// Evolves `(γ, α)` and reports the quasi-free defect `y3 + y4`.
pub fn run_pair(cfg: &SimulationConfig) -> Result<ScenarioOutput> {
    let run = pair_run(cfg)?;
    let t = &run.trajectory;
    let mut table = Table::new(&[
        "t",
        "trace_gamma",
        "hs_gamma",
        "hs_alpha",
        "y3",
        "y4",
        "min_eig_gamma",
        "min_eig_Gamma",
        "gronwall_envelope",
        "particle_envelope",
        "extrapolated",
    ]);
    for (i, smp) in t.samples.iter().enumerate() {
        let d = &smp.diagnostics;
        table.push(vec![
            d.t.into(),
            d.trace_gamma.into(),
            d.hs_gamma.into(),
            d.hs_alpha.into(),
            d.y3.into(),
            d.y4.into(),
            d.min_eig_gamma.into(),
            d.min_eig_block.into(),
            run.envelopes.gronwall[i].into(),
            run.envelopes.particle_envelope[i].into(),
            run.envelopes.extrapolated[i].into(),
        ]);
    }
    let defect = t.max_quasi_free_defect();
    let passed = defect <= QUASI_FREE_TOLERANCE && !t.admissibility_violated;
    let report = PairReport {
        n: cfg.n()?,
        dt: t.dt,
        max_quasi_free_defect: defect,
        admissibility_violated: t.admissibility_violated,
        final_trace_gamma: t.last().diagnostics.trace_gamma,
        passed,
    };
    Ok(ScenarioOutput {
        name: "pair",
        tables: vec![("pair".into(), table)],
        summary: to_json(&report)?,
        passed,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleReport {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "N_max")]
    pub n_max: usize,
    pub dim: usize,
    /// `max_t ‖γ_pair - γ_oracle‖_F + ‖α_pair - α_oracle‖_F`.
    pub max_deviation: f64,
    /// Weight of the oracle state in its two highest sectors at the final time.
    pub truncation_leak: f64,
    pub max_norm_drift: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Oracle comparison as a plain number plus its per-sample deviations.
pub fn compare_oracle(cfg: &SimulationConfig) -> Result<(OracleReport, Table)> {
    let s = setup(cfg)?;
    let pair0 = cfg.pair0(&s.u0)?;
    let hartree = hartree_for_pairs(&s.u0, &s.wn, cfg.time.t_final, s.dt)?;
    let generator = HartreeGenerator::new(hartree, s.wn.clone())?;
    let every = cfg.time.sample_every;
    let pair = pair_evolve(&pair0, &generator, cfg.time.t_final, s.dt, every)?;

    let modes = s.lattice.sites();
    let (basis, _) = build_fock_space(modes, Sector::Cutoff(cfg.oracle.n_max), cfg.oracle.memory_cap)?;
    let phi0 = if pair0.gamma.iter().all(|z| z.norm() == 0.0) && pair0.alpha.iter().all(|z| z.norm() == 0.0) {
        FockVector::vacuum(&basis)?
    } else {
        crate::fock::build_quasi_free(&pair0.gamma, &pair0.alpha, &basis)?.state
    };
    let h = |t: f64| {
        let g = generator.generator(t)?;
        assemble_bogoliubov_h(&g.h, &g.k2, &basis)
    };
    let oracle = fock_evolve(&phi0, &h, 0.0, cfg.time.t_final, s.dt, every)?;

    let mut table = Table::new(&["t", "deviation_gamma", "deviation_alpha", "oracle_trace_gamma", "pair_trace_gamma"]);
    let mut max_dev = 0.0f64;
    for (smp, st) in pair.samples.iter().zip(&oracle.states) {
        let p = extract_density_matrices(st);
        let dg = frobenius(&(&p.gamma - &smp.state.gamma));
        let da = frobenius(&(&p.alpha - &smp.state.alpha));
        max_dev = max_dev.max(dg + da);
        table.push(vec![
            smp.state.t.into(),
            dg.into(),
            da.into(),
            crate::linalg::trace(&p.gamma).re.into(),
            smp.diagnostics.trace_gamma.into(),
        ]);
    }
    let report = OracleReport {
        n: s.n,
        n_max: cfg.oracle.n_max,
        dim: basis.dim(),
        max_deviation: max_dev,
        truncation_leak: oracle.states.last().map(|v| v.truncation_leak()).unwrap_or(0.0),
        max_norm_drift: oracle.norm_drift,
        tolerance: ORACLE_TOLERANCE,
        passed: max_dev <= ORACLE_TOLERANCE,
    };
    Ok((report, table))
}

pub fn run_compare_oracle(cfg: &SimulationConfig) -> Result<ScenarioOutput> {
    let (report, table) = compare_oracle(cfg)?;
    Ok(ScenarioOutput {
        name: "compare-oracle",
        tables: vec![("oracle".into(), table)],
        passed: report.passed,
        summary: to_json(&report)?,
    })
}

/// One row of the norm-scaling table.
#[derive(Clone, Debug, Serialize)]
pub struct NormScalingRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub beta: f64,
    pub t: f64,
    pub error: f64,
    pub residual: f64,
    pub residual_half_delta: f64,
    pub residual_converged: bool,
    pub leak: f64,
    pub leak_flag: bool,
    pub truncation_leak: f64,
    pub dims: [usize; 3],
    pub runtime_ms: u128,
}

#[derive(Clone, Debug, Serialize)]
pub struct NormScalingReport {
    pub rows: Vec<NormScalingRow>,
    /// Least-squares slope of `log error` against `log N`.
    pub slope: Option<f64>,
    pub residual_slope: Option<f64>,
    pub passed: bool,
}

/// Error and generator residual at one `N`.
pub fn norm_scaling_point(cfg: &SimulationConfig, n: usize) -> Result<NormScalingRow> {
    let start = Instant::now();
    let lattice = cfg.lattice()?;
    let u0 = cfg.u0(&lattice);
    let wn = cfg.potential(&lattice, n)?;
    let cap = cfg.oracle.memory_cap;
    let out = norm_approx_run(&NormApproxConfig {
        u0: u0.clone(),
        wn: wn.clone(),
        n,
        pair0: cfg.pair0(&u0)?,
        t_final: cfg.time.t_final,
        dt: cfg.dt(&lattice),
        extra_cutoff: cfg.oracle.extra_cutoff,
        cap,
    })?;
    // residual on the normalized excitation part of Φ(t) below N
    let map = ExcitationMap::new(&out.u_t, n, cap)?;
    let mut phi = map.project_plus(&out.phi_t.truncated(n).restricted_to(map.cutoff_basis())?)?;
    phi.normalize();
    let rep = generator_residual_checked(&out.u_t, &wn, n, &phi, cfg.oracle.delta, cap)?;
    Ok(NormScalingRow {
        n,
        beta: cfg.scaling.beta,
        t: out.t,
        error: out.error,
        residual: rep.residual,
        residual_half_delta: rep.residual_half,
        residual_converged: rep.converged,
        leak: out.leak,
        leak_flag: out.leak_flag,
        truncation_leak: out.truncation_leak,
        dims: out.dims,
        runtime_ms: start.elapsed().as_millis(),
    })
}

/// Worker count: `BOGDYN_THREADS` if set and positive, otherwise all cores.
pub fn sweep_threads(jobs: usize) -> usize {
    let cap = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&v| v > 0)
        .unwrap_or_else(rayon::current_num_threads);
    cap.min(jobs).max(1)
}

pub fn norm_scaling(cfg: &SimulationConfig) -> Result<NormScalingReport> {
    cfg.validate()?;
    let list = cfg.n_list()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(sweep_threads(list.len()))
        .build()
        .map_err(|e| Error::contract(e.to_string()))?;
    let rows = pool.install(|| {
        list.par_iter()
            .map(|&n| norm_scaling_point(cfg, n))
            .collect::<Result<Vec<_>>>()
    })?;
    let (slope, residual_slope) = if rows.len() >= 2 {
        let xs: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
        let es: Vec<f64> = rows.iter().map(|r| r.error).collect();
        let rs: Vec<f64> = rows.iter().map(|r| r.residual).collect();
        (Some(log_log_slope(&xs, &es)), Some(log_log_slope(&xs, &rs)))
    } else {
        (None, None)
    };
    let passed = slope.map_or(true, |s| s < 0.0) && rows.iter().all(|r| r.residual_converged);
    Ok(NormScalingReport {
        rows,
        slope,
        residual_slope,
        passed,
    })
}

pub fn run_norm_scaling(cfg: &SimulationConfig) -> Result<ScenarioOutput> {
    let report = norm_scaling(cfg)?;
    let mut table = Table::new(&[
        "N",
        "beta",
        "t",
        "error",
        "residual",
        "residual_half_delta",
        "leak",
        "truncation_leak",
        "dim_fixed",
        "dim_cutoff",
        "dim_excitation",
    ]);
    for r in &report.rows {
        table.push(vec![
            r.n.into(),
            r.beta.into(),
            r.t.into(),
            r.error.into(),
            r.residual.into(),
            r.residual_half_delta.into(),
            r.leak.into(),
            r.truncation_leak.into(),
            r.dims[0].into(),
            r.dims[1].into(),
            r.dims[2].into(),
        ]);
    }
    Ok(ScenarioOutput {
        name: "norm-scaling",
        tables: vec![("norm_scaling".into(), table)],
        passed: report.passed,
        summary: to_json(&report)?,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundsReport {
    #[serde(rename = "N")]
    pub n: usize,
    pub hs_envelope_ok: bool,
    pub particle_envelope_ok: bool,
    pub hs_margin: f64,
    pub particle_margin: f64,
    pub max_particle_envelope: f64,
    /// Samples past the horizon on which the bound is established.
    pub extrapolated: bool,
    pub passed: bool,
}

/// Envelopes against the pair trajectory, one verdict per inequality.
pub fn run_bounds_check(cfg: &SimulationConfig) -> Result<ScenarioOutput> {
    let run = pair_run(cfg)?;
    let env = &run.envelopes;
    let mut table = Table::new(&[
        "t",
        "hs_sum",
        "gronwall_envelope",
        "trace_gamma",
        "particle_envelope",
        "xi",
        "theta",
        "theta1",
        "extrapolated",
    ]);
    for (i, smp) in run.trajectory.samples.iter().enumerate() {
        table.push(vec![
            env.times[i].into(),
            smp.diagnostics.hs_sum_sqr().into(),
            env.gronwall[i].into(),
            smp.diagnostics.trace_gamma.into(),
            env.particle_envelope[i].into(),
            env.xi[i].into(),
            env.theta[i].into(),
            env.theta1[i].into(),
            Cell::Flag(env.extrapolated[i]),
        ]);
    }
    let report = BoundsReport {
        n: cfg.n()?,
        hs_envelope_ok: run.check.hs_ok,
        particle_envelope_ok: run.check.particle_ok,
        hs_margin: run.check.hs_margin,
        particle_margin: run.check.particle_margin,
        max_particle_envelope: env.max_particle_envelope(),
        extrapolated: env.any_extrapolated(),
        passed: run.check.passed(),
    };
    Ok(ScenarioOutput {
        name: "bounds-check",
        tables: vec![("bounds".into(), table)],
        passed: report.passed,
        summary: to_json(&report)?,
    })
}

/// Dispatches by subcommand name.
pub fn run_named(name: &str, cfg: &SimulationConfig) -> Result<ScenarioOutput> {
    match name {
        "hartree" => run_hartree(cfg),
        "pair" => run_pair(cfg),
        "compare-oracle" => run_compare_oracle(cfg),
        "norm-scaling" => run_norm_scaling(cfg),
        "bounds-check" => run_bounds_check(cfg),
        other => Err(Error::config("subcommand", format!("unknown scenario `{other}`"))),
    }
}
