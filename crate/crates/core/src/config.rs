//! JSON scenario configuration with field-path validation.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fock::DEFAULT_MEMORY_CAP;
use crate::hartree::max_accurate_dt;
use crate::interaction::{sample_w, scale_wn, PotentialGrid, Shape};
use crate::lattice::{GridFunction, Lattice};
use crate::pair_dynamics::{squeezed_pair, PairState};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub lattice: LatticeConfig,
    #[serde(default)]
    pub interaction: InteractionConfig,
    pub scaling: ScalingConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    pub time: TimeConfig,
    #[serde(default)]
    pub oracle: OracleConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    pub dim: usize,
    pub points_per_dim: usize,
    pub box_length: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InteractionConfig {
    /// `compact_bump`, `gaussian_truncated` or `custom_table`.
    pub shape: String,
    /// Shape parameters, e.g. `{"amplitude": 1.0, "radius": 1.0}`.
    #[serde(default)]
    pub params: serde_json::Map<String, serde_json::Value>,
    #[serde(default)]
    pub attractive: bool,
}

impl Default for InteractionConfig {
    fn default() -> Self {
        let mut params = serde_json::Map::new();
        params.insert("amplitude".into(), 1.0.into());
        params.insert("radius".into(), 1.0.into());
        Self {
            shape: "compact_bump".into(),
            params,
            attractive: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingConfig {
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(rename = "N_list", default, skip_serializing_if = "Option::is_none")]
    pub n_list: Option<Vec<usize>>,
    pub beta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum U0Spec {
    Constant,
    PlaneWave { k: Vec<i64> },
    GaussianPacket { width: f64, center: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PairSpec {
    Vacuum,
    Squeezed { r_list: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    pub u0: U0Spec,
    pub pair: PairSpec,
}

impl Default for InitialConfig {
    fn default() -> Self {
        Self {
            u0: U0Spec::Constant,
            pair: PairSpec::Vacuum,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub t_final: f64,
    /// Defaults to `min(1e-3, π/(4 max|k|²))`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default = "one")]
    pub sample_every: usize,
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    #[serde(rename = "N_max")]
    pub n_max: usize,
    pub memory_cap: usize,
    /// Particles retained above `N` in the excitation space of `norm-scaling`.
    #[serde(default = "default_extra_cutoff")]
    pub extra_cutoff: usize,
    /// Finite-difference step for the time derivative of the excitation map.
    #[serde(default = "default_delta")]
    pub delta: f64,
}

fn default_extra_cutoff() -> usize {
    6
}

fn default_delta() -> f64 {
    1e-3
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            n_max: 12,
            memory_cap: DEFAULT_MEMORY_CAP,
            extra_cutoff: default_extra_cutoff(),
            delta: default_delta(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: String,
    pub formats: Vec<String>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: "out".into(),
            formats: vec!["csv".into(), "json".into()],
        }
    }
}

impl SimulationConfig {
    /// Parses and validates.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::config(json_path(&e), e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    /// Canonical JSON of the resolved configuration (defaults filled in).
    pub fn resolved_json(&self) -> String {
        let mut resolved = self.clone();
        if resolved.time.dt.is_none() {
            resolved.time.dt = self.lattice().ok().map(|l| self.dt(&l));
        }
        serde_json::to_string(&resolved).expect("config serializes")
    }

    /// SHA-256 of [`resolved_json`](Self::resolved_json), hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.resolved_json().as_bytes()))
    }

    /// Checks every field before any computation starts.
    pub fn validate(&self) -> Result<()> {
        let lat = self.lattice()?;
        let d = self.lattice.dim;
        self.base_potential(&lat)?;

        let beta = self.scaling.beta;
        if !beta.is_finite() || !(0.0..1.0 / d as f64).contains(&beta) {
            return Err(Error::config(
                "scaling.beta",
                format!("beta = {beta} must lie in [0, 1/{d})"),
            ));
        }
        if let Some(n) = self.scaling.n {
            if n < 2 {
                return Err(Error::config("scaling.N", format!("N = {n} must be >= 2")));
            }
        }
        if let Some(list) = &self.scaling.n_list {
            if list.is_empty() {
                return Err(Error::config("scaling.N_list", "must not be empty"));
            }
            if let Some(i) = list.iter().position(|&n| n < 2) {
                return Err(Error::config(format!("scaling.N_list[{i}]"), "N must be >= 2"));
            }
        }
        if self.scaling.n.is_none() && self.scaling.n_list.is_none() {
            return Err(Error::config("scaling.N", "either N or N_list is required"));
        }

        match &self.initial.u0 {
            U0Spec::Constant => {}
            U0Spec::PlaneWave { k } => {
                if k.len() != d {
                    return Err(Error::config("initial.u0.k", format!("needs {d} components")));
                }
            }
            U0Spec::GaussianPacket { width, center } => {
                if !(*width > 0.0) || !width.is_finite() {
                    return Err(Error::config("initial.u0.width", "must be > 0"));
                }
                if center.len() != d || center.iter().any(|c| !c.is_finite()) {
                    return Err(Error::config("initial.u0.center", format!("needs {d} finite components")));
                }
            }
        }
        if let PairSpec::Squeezed { r_list } = &self.initial.pair {
            if let Some(i) = r_list.iter().position(|r| !(r.is_finite() && *r >= 0.0)) {
                return Err(Error::config(format!("initial.pair.r_list[{i}]"), "must be finite and >= 0"));
            }
            if r_list.len() >= lat.sites() {
                return Err(Error::config(
                    "initial.pair.r_list",
                    format!("at most {} modes are orthogonal to u0", lat.sites() - 1),
                ));
            }
        }

        let t = &self.time;
        if !(t.t_final > 0.0) || !t.t_final.is_finite() {
            return Err(Error::config("time.t_final", "must be positive and finite"));
        }
        if let Some(dt) = t.dt {
            if !(dt > 0.0) || !dt.is_finite() || dt > t.t_final {
                return Err(Error::config("time.dt", "must lie in (0, t_final]"));
            }
        }
        if t.sample_every == 0 {
            return Err(Error::config("time.sample_every", "must be >= 1"));
        }

        let o = &self.oracle;
        if o.n_max == 0 || o.n_max > u8::MAX as usize {
            return Err(Error::config("oracle.N_max", "must lie in 1..=255"));
        }
        if o.memory_cap == 0 {
            return Err(Error::config("oracle.memory_cap", "must be >= 1"));
        }
        if !(o.delta > 0.0) || !o.delta.is_finite() {
            return Err(Error::config("oracle.delta", "must be > 0"));
        }

        if let Some(f) = self.output.formats.iter().find(|f| !matches!(f.as_str(), "csv" | "json")) {
            return Err(Error::config("output.formats", format!("unknown format `{f}`")));
        }
        if self.output.directory.is_empty() {
            return Err(Error::config("output.directory", "must not be empty"));
        }
        Ok(())
    }

    pub fn lattice(&self) -> Result<Lattice> {
        let l = &self.lattice;
        if l.points_per_dim < 2 {
            return Err(Error::config("lattice.points_per_dim", "must be >= 2"));
        }
        Lattice::with_any_size(l.dim, l.points_per_dim, l.box_length)
    }

    pub fn shape(&self) -> Result<Shape> {
        let mut obj = self.interaction.params.clone();
        obj.insert("shape".into(), self.interaction.shape.clone().into());
        serde_json::from_value(serde_json::Value::Object(obj))
            .map_err(|e| Error::config("interaction.params", e.to_string()))
    }

    /// The unscaled `w` sampled on the lattice.
    pub fn base_potential(&self, lattice: &Lattice) -> Result<PotentialGrid> {
        sample_w(&self.shape()?, lattice, self.interaction.attractive)
    }

    /// `w_N` for the given particle number.
    pub fn potential(&self, lattice: &Lattice, n: usize) -> Result<PotentialGrid> {
        scale_wn(&self.base_potential(lattice)?, n, self.scaling.beta)
    }

    /// `N`, falling back to the first entry of `N_list`.
    pub fn n(&self) -> Result<usize> {
        self.scaling
            .n
            .or_else(|| self.scaling.n_list.as_ref().and_then(|l| l.first().copied()))
            .ok_or_else(|| Error::config("scaling.N", "either N or N_list is required"))
    }

    /// `N_list`, falling back to `[N]`.
    pub fn n_list(&self) -> Result<Vec<usize>> {
        match (&self.scaling.n_list, self.scaling.n) {
            (Some(l), _) => Ok(l.clone()),
            (None, Some(n)) => Ok(vec![n]),
            _ => Err(Error::config("scaling.N_list", "either N or N_list is required")),
        }
    }

    pub fn dt(&self, lattice: &Lattice) -> f64 {
        self.time.dt.unwrap_or_else(|| max_accurate_dt(lattice).min(1e-3))
    }

    /// The normalized initial condensate.
    pub fn u0(&self, lattice: &Lattice) -> GridFunction {
        let mut u = match &self.initial.u0 {
            U0Spec::Constant => GridFunction::constant(lattice),
            U0Spec::PlaneWave { k } => GridFunction::plane_wave(lattice, k),
            U0Spec::GaussianPacket { width, center } => GridFunction::gaussian_packet(lattice, *width, center),
        };
        u.normalize();
        u
    }

    /// `(γ₀, α₀)` of the initial quasi-free state, orthogonal to `u0`.
    pub fn pair0(&self, u0: &GridFunction) -> Result<PairState> {
        match &self.initial.pair {
            PairSpec::Vacuum => Ok(PairState::vacuum(u0.lattice().sites())),
            PairSpec::Squeezed { r_list } => squeezed_pair(u0, r_list),
        }
    }
}

// best-effort dotted path from a serde error message
fn json_path(e: &serde_json::Error) -> String {
    let msg = e.to_string();
    for key in ["lattice", "interaction", "scaling", "initial", "time", "oracle", "output"] {
        if msg.contains(&format!("`{key}`")) {
            return key.into();
        }
    }
    if let Some(start) = msg.find("field `") {
        let rest = &msg[start + 7..];
        if let Some(end) = rest.find('`') {
            return rest[..end].into();
        }
    }
    "config".into()
}
