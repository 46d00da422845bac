//! Periodic lattices, grid functions and their spectral operators.
//!
//! A [`GridFunction`] stores `f(x_j) * spacing^(dim/2)` at every site, so the
//! Euclidean inner product of coefficient vectors is the L² inner product of
//! the sampled functions. Every dense operator in the crate uses the same
//! weighted site basis.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

type C64 = Complex64;

/// A `dim`-dimensional periodic box of side `box_length` with
/// `points_per_dim` sites per axis.
#[derive(Clone)]
pub struct Lattice {
    dim: usize,
    points_per_dim: usize,
    box_length: f64,
    spacing: f64,
    wavenumbers: Arc<[f64]>,
    k_squared: Arc<[f64]>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Lattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Lattice")
            .field("dim", &self.dim)
            .field("points_per_dim", &self.points_per_dim)
            .field("box_length", &self.box_length)
            .field("spacing", &self.spacing)
            .finish()
    }
}

impl PartialEq for Lattice {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.points_per_dim == other.points_per_dim
            && self.box_length == other.box_length
    }
}

impl Lattice {
    /// Builds a lattice with a power-of-two number of points per axis.
    pub fn new(dim: usize, points_per_dim: usize, box_length: f64) -> Result<Self> {
        if points_per_dim < 2 || !points_per_dim.is_power_of_two() {
            return Err(Error::config(
                "lattice.points_per_dim",
                format!("{points_per_dim} is not a power of two >= 2"),
            ));
        }
        Self::with_any_size(dim, points_per_dim, box_length)
    }

    /// Like [`Lattice::new`] but accepts any `points_per_dim >= 1`.
    ///
    /// Used for the few-site geometries of the Fock-space oracle, where the
    /// number of sites is the number of modes and odd counts are useful.
    pub fn with_any_size(dim: usize, points_per_dim: usize, box_length: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::config("lattice.dim", format!("{dim} not in 1..=3")));
        }
        if points_per_dim == 0 {
            return Err(Error::config("lattice.points_per_dim", "must be positive"));
        }
        if !(box_length > 0.0) || !box_length.is_finite() {
            return Err(Error::config(
                "lattice.box_length",
                format!("{box_length} must be positive and finite"),
            ));
        }
        let n = points_per_dim;
        let dk = 2.0 * PI / box_length;
        let wavenumbers: Vec<f64> = (0..n).map(|j| dk * signed_frequency(j, n) as f64).collect();

        let sites = n.pow(dim as u32);
        let mut k_squared = vec![0.0; sites];
        for (site, k2) in k_squared.iter_mut().enumerate() {
            let idx = multi_index(site, n, dim);
            *k2 = idx[..dim].iter().map(|&i| wavenumbers[i] * wavenumbers[i]).sum();
        }

        let mut planner = FftPlanner::new();
        Ok(Self {
            dim,
            points_per_dim: n,
            box_length,
            spacing: box_length / n as f64,
            wavenumbers: wavenumbers.into(),
            k_squared: k_squared.into(),
            fft: planner.plan_fft_forward(n),
            ifft: planner.plan_fft_inverse(n),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_dim(&self) -> usize {
        self.points_per_dim
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Total number of sites `points_per_dim^dim`.
    pub fn sites(&self) -> usize {
        self.points_per_dim.pow(self.dim as u32)
    }

    pub fn volume(&self) -> f64 {
        self.box_length.powi(self.dim as i32)
    }

    /// Quadrature weight `spacing^dim` of one site.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dim as i32)
    }

    /// Per-axis wavenumbers in FFT order.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    /// `|k|²` for every Fourier mode, in the same flat order as the sites.
    pub fn k_squared(&self) -> &[f64] {
        &self.k_squared
    }

    pub fn max_k_squared(&self) -> f64 {
        self.k_squared.iter().cloned().fold(0.0, f64::max)
    }

    /// Integer frequency vector of flat mode index `mode`.
    pub fn frequencies(&self, mode: usize) -> Vec<i64> {
        let idx = multi_index(mode, self.points_per_dim, self.dim);
        idx[..self.dim]
            .iter()
            .map(|&i| signed_frequency(i, self.points_per_dim))
            .collect()
    }

    /// Flat mode index of an integer frequency vector (taken modulo the grid).
    pub fn mode_index(&self, freq: &[i64]) -> usize {
        let n = self.points_per_dim as i64;
        freq.iter()
            .fold(0usize, |acc, &f| acc * self.points_per_dim + f.rem_euclid(n) as usize)
    }

    /// Cartesian position of a site; sites sit at `j * spacing` along each axis.
    pub fn position(&self, site: usize) -> Vec<f64> {
        let idx = multi_index(site, self.points_per_dim, self.dim);
        idx[..self.dim].iter().map(|&i| i as f64 * self.spacing).collect()
    }

    /// Minimum-image displacement of a site from the origin.
    pub fn min_image(&self, site: usize) -> Vec<f64> {
        let idx = multi_index(site, self.points_per_dim, self.dim);
        let n = self.points_per_dim;
        idx[..self.dim]
            .iter()
            .map(|&i| {
                let j = if 2 * i > n { i as f64 - n as f64 } else { i as f64 };
                j * self.spacing
            })
            .collect()
    }

    pub fn min_image_distance(&self, site: usize) -> f64 {
        self.min_image(site).iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Site index of `a - b` on the torus.
    pub fn site_difference(&self, a: usize, b: usize) -> usize {
        let n = self.points_per_dim;
        let ia = multi_index(a, n, self.dim);
        let ib = multi_index(b, n, self.dim);
        (0..self.dim).fold(0, |acc, ax| acc * n + (ia[ax] + n - ib[ax]) % n)
    }

    /// Unitary discrete Fourier transform in place (site order -> mode order).
    pub fn forward(&self, data: &mut [C64]) {
        self.transform(data, &self.fft);
    }

    /// Inverse of [`Lattice::forward`].
    pub fn inverse(&self, data: &mut [C64]) {
        self.transform(data, &self.ifft);
    }

    fn transform(&self, data: &mut [C64], plan: &Arc<dyn Fft<f64>>) {
        assert_eq!(data.len(), self.sites());
        let n = self.points_per_dim;
        let scale = 1.0 / (n as f64).sqrt();
        let mut line = vec![C64::new(0.0, 0.0); n];
        for axis in 0..self.dim {
            let stride = n.pow((self.dim - 1 - axis) as u32);
            let outer = self.sites() / (n * stride);
            for o in 0..outer {
                for s in 0..stride {
                    let base = o * n * stride + s;
                    for (j, v) in line.iter_mut().enumerate() {
                        *v = data[base + j * stride];
                    }
                    plan.process(&mut line);
                    for (j, v) in line.iter().enumerate() {
                        data[base + j * stride] = v * scale;
                    }
                }
            }
        }
    }

    /// Circular convolution `(kernel * f)(x) = Σ_y kernel(x - y) f(y) spacing^dim`.
    ///
    /// `kernel` holds pointwise values (not weighted coefficients).
    pub fn convolve(&self, kernel: &[f64], f: &GridFunction) -> Result<GridFunction> {
        self.check(&f.lattice)?;
        if kernel.len() != self.sites() {
            return Err(Error::Dimension {
                expected: self.sites(),
                got: kernel.len(),
            });
        }
        let mut kh: Vec<C64> = kernel.iter().map(|&v| C64::new(v, 0.0)).collect();
        let mut fh = f.coeffs.clone();
        self.forward(&mut kh);
        self.forward(&mut fh);
        // unitary transforms: conv = sqrt(M) * IFFT(K̂ f̂)
        let scale = (self.sites() as f64).sqrt() * self.cell_volume();
        for (a, b) in fh.iter_mut().zip(&kh) {
            *a *= b * scale;
        }
        self.inverse(&mut fh);
        Ok(GridFunction {
            lattice: self.clone(),
            coeffs: fh,
        })
    }

    /// Dense matrix of `-Δ` in the weighted site basis (real symmetric).
    pub fn laplacian_matrix(&self) -> DMatrix<C64> {
        let m = self.sites();
        let mut out = DMatrix::zeros(m, m);
        let mut col = vec![C64::new(0.0, 0.0); m];
        for j in 0..m {
            col.iter_mut().for_each(|c| *c = C64::new(0.0, 0.0));
            col[j] = C64::new(1.0, 0.0);
            self.apply_multiplier(&mut col, |k2| k2);
            for i in 0..m {
                out[(i, j)] = col[i];
            }
        }
        out
    }

    /// Applies the Fourier multiplier `g(|k|²)` to weighted coefficients.
    pub fn apply_multiplier(&self, coeffs: &mut [C64], g: impl Fn(f64) -> f64) {
        self.forward(coeffs);
        for (c, &k2) in coeffs.iter_mut().zip(self.k_squared.iter()) {
            *c *= g(k2);
        }
        self.inverse(coeffs);
    }

    /// Applies the complex Fourier multiplier `g(|k|²)`.
    pub fn apply_phase_multiplier(&self, coeffs: &mut [C64], g: impl Fn(f64) -> C64) {
        self.forward(coeffs);
        for (c, &k2) in coeffs.iter_mut().zip(self.k_squared.iter()) {
            *c *= g(k2);
        }
        self.inverse(coeffs);
    }

    pub(crate) fn check(&self, other: &Lattice) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::LatticeMismatch(format!("{self:?} vs {other:?}")))
        }
    }
}

fn signed_frequency(j: usize, n: usize) -> i64 {
    if j > 0 && 2 * j >= n {
        j as i64 - n as i64
    } else {
        j as i64
    }
}

fn multi_index(site: usize, n: usize, dim: usize) -> [usize; 3] {
    let mut idx = [0usize; 3];
    let mut rest = site;
    for ax in (0..dim).rev() {
        idx[ax] = rest % n;
        rest /= n;
    }
    idx
}

/// Complex field sampled on a lattice, stored as weighted coefficients.
#[derive(Clone, Debug)]
pub struct GridFunction {
    lattice: Lattice,
    coeffs: Vec<C64>,
}

impl GridFunction {
    pub fn zeros(lattice: &Lattice) -> Self {
        Self {
            lattice: lattice.clone(),
            coeffs: vec![C64::new(0.0, 0.0); lattice.sites()],
        }
    }

    /// Wraps already-weighted coefficients.
    pub fn from_coeffs(lattice: &Lattice, coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() != lattice.sites() {
            return Err(Error::Dimension {
                expected: lattice.sites(),
                got: coeffs.len(),
            });
        }
        Ok(Self {
            lattice: lattice.clone(),
            coeffs,
        })
    }

    /// Samples a pointwise function `f(x)` at every site.
    pub fn sample(lattice: &Lattice, f: impl Fn(&[f64]) -> C64) -> Self {
        let w = lattice.cell_volume().sqrt();
        let coeffs = (0..lattice.sites())
            .map(|s| f(&lattice.position(s)) * w)
            .collect();
        Self {
            lattice: lattice.clone(),
            coeffs,
        }
    }

    /// Constant function with unit L² norm.
    pub fn constant(lattice: &Lattice) -> Self {
        let c = 1.0 / lattice.volume().sqrt();
        Self::sample(lattice, |_| C64::new(c, 0.0))
    }

    /// Normalized plane wave `exp(i k·x)/√V` with integer frequency vector `freq`.
    pub fn plane_wave(lattice: &Lattice, freq: &[i64]) -> Self {
        let dk = 2.0 * PI / lattice.box_length();
        let norm = 1.0 / lattice.volume().sqrt();
        Self::sample(lattice, |x| {
            let phase: f64 = x.iter().zip(freq).map(|(xi, &f)| xi * dk * f as f64).sum();
            C64::from_polar(norm, phase)
        })
    }

    /// Normalized periodized Gaussian packet.
    pub fn gaussian_packet(lattice: &Lattice, width: f64, center: &[f64]) -> Self {
        let l = lattice.box_length();
        let mut g = Self::sample(lattice, |x| {
            let r2: f64 = x
                .iter()
                .zip(center)
                .map(|(xi, ci)| {
                    let d = (xi - ci).rem_euclid(l);
                    let d = if d > l / 2.0 { d - l } else { d };
                    d * d
                })
                .sum();
            C64::new((-r2 / (2.0 * width * width)).exp(), 0.0)
        });
        g.normalize();
        g
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [C64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<C64> {
        self.coeffs
    }

    /// Pointwise values `f(x_j)`.
    pub fn values(&self) -> Vec<C64> {
        let w = 1.0 / self.lattice.cell_volume().sqrt();
        self.coeffs.iter().map(|c| c * w).collect()
    }

    /// Pointwise density `|f(x_j)|²`.
    pub fn density(&self) -> Vec<f64> {
        let w = 1.0 / self.lattice.cell_volume();
        self.coeffs.iter().map(|c| c.norm_sqr() * w).collect()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        let w = 1.0 / self.lattice.cell_volume().sqrt();
        self.coeffs.iter().map(|c| c.norm() * w).fold(0.0, f64::max)
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            self.coeffs.iter_mut().for_each(|c| *c /= n);
        }
    }

    pub fn scale(&mut self, s: C64) {
        self.coeffs.iter_mut().for_each(|c| *c *= s);
    }

    /// `⟨self, other⟩`, conjugate-linear in `self`.
    pub fn inner_product(&self, other: &GridFunction) -> Result<C64> {
        self.lattice.check(&other.lattice)?;
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// `-Δ f` through the Fourier multiplier `|k|²`.
    pub fn laplacian(&self) -> GridFunction {
        let mut out = self.clone();
        self.lattice.apply_multiplier(&mut out.coeffs, |k2| k2);
        out
    }

    /// `‖f‖_{H^s}` with multiplier `(1 + |k|²)^{s/2}`.
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        let mut hat = self.coeffs.clone();
        self.lattice.forward(&mut hat);
        hat.iter()
            .zip(self.lattice.k_squared())
            .map(|(c, &k2)| (1.0 + k2).powf(s) * c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Translation by one site along `axis` (periodic).
    pub fn shifted(&self, axis: usize) -> GridFunction {
        let lat = &self.lattice;
        let n = lat.points_per_dim();
        let mut coeffs = vec![C64::new(0.0, 0.0); lat.sites()];
        for (site, c) in coeffs.iter_mut().enumerate() {
            let mut idx = multi_index(site, n, lat.dim());
            idx[axis] = (idx[axis] + n - 1) % n;
            let src = (0..lat.dim()).fold(0, |acc, ax| acc * n + idx[ax]);
            *c = self.coeffs[src];
        }
        GridFunction {
            lattice: lat.clone(),
            coeffs,
        }
    }
}
