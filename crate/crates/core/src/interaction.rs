//! Two-body potentials, their mean-field rescaling and the Hartree mean field.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{GridFunction, Lattice};
use crate::C64;

/// Radial profile of the unscaled interaction `w`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Shape {
    /// `A (1 - r²/r₀²)²` for `r <= r₀`, zero outside. C¹ with compact support.
    CompactBump { amplitude: f64, radius: f64 },
    /// `A (exp(-r²/2σ²) - exp(-r_c²/2σ²))` for `r < r_c`, zero outside.
    GaussianTruncated {
        amplitude: f64,
        width: f64,
        cutoff: f64,
    },
    /// Piecewise-linear radial table; zero beyond the last radius.
    CustomTable { radii: Vec<f64>, values: Vec<f64> },
}

impl Default for Shape {
    fn default() -> Self {
        Shape::CompactBump {
            amplitude: 1.0,
            radius: 1.0,
        }
    }
}

impl Shape {
    pub fn eval(&self, r: f64) -> f64 {
        match *self {
            Shape::CompactBump { amplitude, radius } => {
                if r <= radius {
                    let s = 1.0 - (r / radius).powi(2);
                    amplitude * s * s
                } else {
                    0.0
                }
            }
            Shape::GaussianTruncated {
                amplitude,
                width,
                cutoff,
            } => {
                if r < cutoff {
                    let g = |x: f64| (-x * x / (2.0 * width * width)).exp();
                    amplitude * (g(r) - g(cutoff))
                } else {
                    0.0
                }
            }
            Shape::CustomTable {
                ref radii,
                ref values,
            } => {
                if r > *radii.last().unwrap_or(&0.0) {
                    return 0.0;
                }
                let k = radii.partition_point(|&x| x < r);
                if k == 0 {
                    return values[0];
                }
                let (r0, r1) = (radii[k - 1], radii[k]);
                let (v0, v1) = (values[k - 1], values[k]);
                v0 + (v1 - v0) * (r - r0) / (r1 - r0)
            }
        }
    }

    /// Radius outside of which the profile vanishes.
    pub fn support_radius(&self) -> f64 {
        match self {
            Shape::CompactBump { radius, .. } => *radius,
            Shape::GaussianTruncated { cutoff, .. } => *cutoff,
            Shape::CustomTable { radii, .. } => radii.last().copied().unwrap_or(0.0),
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Shape::CompactBump { .. } => "compact_bump",
            Shape::GaussianTruncated { .. } => "gaussian_truncated",
            Shape::CustomTable { .. } => "custom_table",
        }
    }

    fn validate(&self, lattice: &Lattice, attractive: bool) -> Result<()> {
        let sign_ok = |a: f64| attractive || a > 0.0;
        match self {
            Shape::CompactBump { amplitude, radius } => {
                if !sign_ok(*amplitude) || *amplitude == 0.0 {
                    return Err(Error::config(
                        "interaction.params.amplitude",
                        "must be positive (set attractive = true for negative)",
                    ));
                }
                if !(*radius > 0.0) {
                    return Err(Error::config("interaction.params.radius", "must be > 0"));
                }
            }
            Shape::GaussianTruncated {
                amplitude,
                width,
                cutoff,
            } => {
                if !sign_ok(*amplitude) || *amplitude == 0.0 {
                    return Err(Error::config(
                        "interaction.params.amplitude",
                        "must be positive (set attractive = true for negative)",
                    ));
                }
                if !(*width > 0.0) || !(*cutoff > 0.0) {
                    return Err(Error::config(
                        "interaction.params",
                        "width and cutoff must be > 0",
                    ));
                }
            }
            Shape::CustomTable { radii, values } => {
                if radii.len() < 2 || radii.len() != values.len() {
                    return Err(Error::config(
                        "interaction.params",
                        "custom table needs >= 2 radii and matching values",
                    ));
                }
                if radii[0] != 0.0 || radii.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::config(
                        "interaction.params.radii",
                        "radii must start at 0 and increase strictly",
                    ));
                }
                if !attractive && values.iter().any(|&v| v < 0.0) {
                    return Err(Error::config(
                        "interaction.params.values",
                        "negative values require attractive = true",
                    ));
                }
                if !attractive && values.windows(2).any(|w| w[1] > w[0]) {
                    return Err(Error::config(
                        "interaction.params.values",
                        "profile must be non-increasing",
                    ));
                }
            }
        }
        let half = 0.5 * lattice.box_length();
        if self.support_radius() >= half {
            return Err(Error::config(
                "interaction.params",
                format!(
                    "support radius {} must be below half the box ({half})",
                    self.support_radius()
                ),
            ));
        }
        Ok(())
    }
}

/// A radial potential sampled at every lattice site (pointwise values).
#[derive(Clone, Debug)]
pub struct PotentialGrid {
    lattice: Lattice,
    values: Vec<f64>,
    shape: Shape,
    /// `N^β` applied to the argument (1 for the unscaled `w`).
    length_scale: f64,
    /// `N^{dβ}` applied to the values.
    amplitude_scale: f64,
    under_resolved: bool,
}

/// Samples `w` on the lattice using minimum-image distances.
pub fn sample_w(shape: &Shape, lattice: &Lattice, attractive: bool) -> Result<PotentialGrid> {
    shape.validate(lattice, attractive)?;
    Ok(PotentialGrid::build(lattice, shape.clone(), 1.0, 1.0))
}

/// Mean-field rescaling `w_N(x) = N^{dβ} w(N^β x)`.
pub fn scale_wn(w: &PotentialGrid, n: usize, beta: f64) -> Result<PotentialGrid> {
    if n < 2 {
        return Err(Error::config("scaling.N", format!("N = {n} must be >= 2")));
    }
    let d = w.lattice.dim() as f64;
    if !(0.0..1.0 / d).contains(&beta) {
        return Err(Error::config(
            "scaling.beta",
            format!("beta = {beta} must lie in [0, 1/{d})"),
        ));
    }
    let nf = n as f64;
    Ok(PotentialGrid::build(
        &w.lattice,
        w.shape.clone(),
        w.length_scale * nf.powf(beta),
        w.amplitude_scale * nf.powf(d * beta),
    ))
}

impl PotentialGrid {
    fn build(lattice: &Lattice, shape: Shape, length_scale: f64, amplitude_scale: f64) -> Self {
        let values = (0..lattice.sites())
            .map(|s| amplitude_scale * shape.eval(length_scale * lattice.min_image_distance(s)))
            .collect();
        let width = 2.0 * shape.support_radius() / length_scale;
        Self {
            lattice: lattice.clone(),
            values,
            shape,
            length_scale,
            amplitude_scale,
            under_resolved: width < 4.0 * lattice.spacing(),
        }
    }

    /// The zero potential.
    pub fn zero(lattice: &Lattice) -> Self {
        Self {
            lattice: lattice.clone(),
            values: vec![0.0; lattice.sites()],
            shape: Shape::CustomTable {
                radii: vec![0.0, 1e-300],
                values: vec![0.0, 0.0],
            },
            length_scale: 1.0,
            amplitude_scale: 1.0,
            under_resolved: false,
        }
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    /// True when the support is narrower than four lattice spacings.
    pub fn under_resolved(&self) -> bool {
        self.under_resolved
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// Lattice quadrature of `∫ w`.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.lattice.cell_volume()
    }

    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum::<f64>() * self.lattice.cell_volume()
    }

    pub fn l2_norm_sqr(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>() * self.lattice.cell_volume()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    /// `w(x_a - x_b)`.
    #[inline]
    pub fn between(&self, a: usize, b: usize) -> f64 {
        self.values[self.lattice.site_difference(a, b)]
    }
}

/// `w_N * |u|²` as pointwise values.
pub fn mean_field_potential(wn: &PotentialGrid, u: &GridFunction) -> Result<Vec<f64>> {
    wn.lattice.check(u.lattice())?;
    let lat = u.lattice();
    let w = lat.cell_volume().sqrt();
    let density: Vec<C64> = u.density().iter().map(|&r| C64::new(r * w, 0.0)).collect();
    let rho = GridFunction::from_coeffs(lat, density)?;
    let conv = lat.convolve(&wn.values, &rho)?;
    Ok(conv.values().iter().map(|c| c.re).collect())
}

/// `μ_N = ½ ∬ |u(x)|² w_N(x - y) |u(y)|²`.
pub fn mu_n(wn: &PotentialGrid, u: &GridFunction) -> Result<f64> {
    let v = mean_field_potential(wn, u)?;
    Ok(0.5 * mu_pairing(&v, u))
}

/// `⟨|u|², V⟩` for a pointwise potential `V`.
pub(crate) fn mu_pairing(v: &[f64], u: &GridFunction) -> f64 {
    u.coeffs().iter().zip(v).map(|(c, vi)| c.norm_sqr() * vi).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bump(a: f64, r: f64) -> Shape {
        Shape::CompactBump {
            amplitude: a,
            radius: r,
        }
    }

    #[test]
    fn compact_bump_examples() {
        let lat = Lattice::new(1, 64, 8.0).unwrap();
        let w = sample_w(&bump(1.0, 1.0), &lat, false).unwrap();
        assert_eq!(w.values()[0], 1.0);
        let s = bump(1.0, 1.0);
        assert_eq!(s.eval(1.0), 0.0);
        let h = 1e-6;
        assert!((s.eval(1.0 - h) / h).abs() < 1e-5);
        assert!(w.integral() > 0.0);
        assert!(w.values().iter().all(|&v| v >= 0.0));
        // exact ∫ (1-x²)² over [-1,1] = 16/15
        assert!((w.integral() - 16.0 / 15.0).abs() < 1e-3);
    }

    #[test]
    fn radial_and_decreasing() {
        let lat = Lattice::new(2, 16, 6.0).unwrap();
        let w = sample_w(&bump(2.0, 2.5), &lat, false).unwrap();
        let mut pairs: Vec<(f64, f64)> = (0..lat.sites())
            .map(|s| (lat.min_image_distance(s), w.values()[s]))
            .collect();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        for p in pairs.windows(2) {
            if (p[1].0 - p[0].0).abs() < 1e-12 {
                assert!((p[1].1 - p[0].1).abs() < 1e-12);
            } else {
                assert!(p[1].1 <= p[0].1 + 1e-15);
            }
        }
    }

    #[test]
    fn support_must_not_wrap() {
        let lat = Lattice::new(1, 8, 2.0).unwrap();
        assert!(sample_w(&bump(1.0, 1.0), &lat, false).is_err());
        assert!(sample_w(&bump(-1.0, 0.5), &lat, false).is_err());
        assert!(sample_w(&bump(-1.0, 0.5), &lat, true).is_ok());
    }

    #[test]
    fn scaling_examples() {
        let lat = Lattice::new(1, 256, 8.0).unwrap();
        let w = sample_w(&bump(1.0, 1.0), &lat, false).unwrap();
        let same = scale_wn(&w, 16, 0.0).unwrap();
        assert_eq!(same.values(), w.values());
        let wn = scale_wn(&w, 16, 0.5).unwrap();
        assert!((wn.values()[0] - 4.0).abs() < 1e-15);
        let ratio = wn.integral() / w.integral();
        assert!((0.99..=1.01).contains(&ratio), "ratio {ratio}");
        // L² scales as N^{dβ}
        let r2 = wn.l2_norm_sqr() / w.l2_norm_sqr();
        assert!((r2 / 4.0 - 1.0).abs() < 0.02, "{r2}");
        assert!(scale_wn(&w, 16, 1.0).is_err());
        assert!(scale_wn(&w, 16, -0.1).is_err());
        assert!(scale_wn(&w, 1, 0.1).is_err());
    }

    #[test]
    fn resolution_flag() {
        let lat = Lattice::new(1, 16, 8.0).unwrap();
        let w = sample_w(&bump(1.0, 1.0), &lat, false).unwrap();
        assert!(!w.under_resolved());
        let wn = scale_wn(&w, 64, 0.5).unwrap();
        assert!(wn.under_resolved());
    }

    #[test]
    fn mean_field_examples() {
        let lat = Lattice::new(1, 32, 6.0).unwrap();
        let w = sample_w(&bump(1.5, 1.2), &lat, false).unwrap();
        let u = GridFunction::constant(&lat);
        let v = mean_field_potential(&w, &u).unwrap();
        for vi in &v {
            assert!((vi - w.integral() / lat.volume()).abs() < 1e-13);
        }
        let mu = mu_n(&w, &u).unwrap();
        assert!((mu - w.integral() / (2.0 * lat.volume())).abs() < 1e-13);

        let zero = PotentialGrid::zero(&lat);
        let g = GridFunction::gaussian_packet(&lat, 0.7, &[2.0]);
        assert!(mean_field_potential(&zero, &g).unwrap().iter().all(|&x| x == 0.0));
        assert_eq!(mu_n(&zero, &g).unwrap(), 0.0);
        assert!(mean_field_potential(&w, &g).unwrap().iter().all(|&x| x >= -1e-15));
        assert!(mu_n(&w, &g).unwrap() >= 0.0);

        let mut rotated = g.clone();
        rotated.scale(C64::from_polar(1.0, 0.83));
        assert!((mu_n(&w, &rotated).unwrap() - mu_n(&w, &g).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn mu_matches_double_sum() {
        let lat = Lattice::new(1, 16, 4.0).unwrap();
        let w = sample_w(&bump(1.0, 1.3), &lat, false).unwrap();
        let u = GridFunction::gaussian_packet(&lat, 0.5, &[1.0]);
        let rho = u.density();
        let h = lat.cell_volume();
        let mut direct = 0.0;
        for i in 0..16 {
            for j in 0..16 {
                direct += 0.5 * rho[i] * w.between(i, j) * rho[j] * h * h;
            }
        }
        assert!((mu_n(&w, &u).unwrap() - direct).abs() < 1e-13);
    }
}
