//! Coarse-grained chaotic wave functions.
//!
//! The overlaps `c_μ(α) = ⟨φ_α|ψ_μ⟩` between full eigenstates `ψ_μ` and
//! non-interacting eigenstates `φ_α` are binned by energy difference
//! `E_μ − E_α` into a density estimate of `Λ(E)/ω`, which is then fitted with a
//! one-parameter Lorentzian or Gaussian. Its Fourier transform is the decay
//! kernel `Ω(t)`.
//!
//! Bins are wide compared with the Lorentzian width at the spin-chain scale, so
//! the fit model is the exact bin average of the density rather than its value
//! at the bin centre.

use std::f64::consts::PI;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::exec;
use crate::tensorops::{Dense, SpectralDecomposition};
use crate::{Error, Result};

/// Overlap coefficients, row `μ` (full eigenstate), column `α` (basis state).
#[derive(Clone, Debug)]
pub struct OverlapMatrix {
    c: Dense,
    energies_full: Vec<f64>,
    energies_0: Vec<f64>,
}

impl OverlapMatrix {
    pub fn new(c: Dense, energies_full: Vec<f64>, energies_0: Vec<f64>) -> Result<Self> {
        if c.nrows() != energies_full.len() || c.ncols() != energies_0.len() {
            return Err(Error::arg("overlap shape does not match the energy lists"));
        }
        let ov = OverlapMatrix { c, energies_full, energies_0 };
        let defect = ov.row_norm_defect();
        if defect > 1e-10 {
            return Err(Error::validation(format!("overlap rows are not normalized: defect {defect:e}")));
        }
        Ok(ov)
    }

    pub fn dim(&self) -> usize {
        self.energies_full.len()
    }

    pub fn c(&self) -> &Dense {
        &self.c
    }

    #[inline]
    pub fn weight(&self, mu: usize, alpha: usize) -> f64 {
        match &self.c {
            Dense::Real(m) => m[(mu, alpha)] * m[(mu, alpha)],
            Dense::Complex(m) => m[(mu, alpha)].norm_sqr(),
        }
    }

    pub fn energies_full(&self) -> &[f64] {
        &self.energies_full
    }

    pub fn energies_0(&self) -> &[f64] {
        &self.energies_0
    }

    /// `max_μ |Σ_α |c_μ(α)|² − 1|`.
    pub fn row_norm_defect(&self) -> f64 {
        (0..self.c.nrows())
            .map(|mu| ((0..self.c.ncols()).map(|a| self.weight(mu, a)).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// `c = (V₀† V)ᵀ`, so that `c[μ, α] = ⟨φ_α|ψ_μ⟩`.
pub fn overlap_matrix(decomp_full: &SpectralDecomposition, decomp0: &SpectralDecomposition) -> Result<OverlapMatrix> {
    if decomp_full.dim() != decomp0.dim() {
        return Err(Error::arg(format!("dimension mismatch: {} vs {}", decomp_full.dim(), decomp0.dim())));
    }
    let c = decomp_full.vectors().adjoint().matmul(decomp0.vectors());
    // (V†V₀)[μ, α] = ⟨ψ_μ|φ_α⟩ = conj(c_μ(α)); weights are unaffected, phases conjugated back
    let c = match c {
        Dense::Complex(m) => Dense::Complex(Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)].conj())),
        real => real,
    };
    OverlapMatrix::new(c, decomp_full.energies().to_vec(), decomp0.energies().to_vec())
}

/// Binned estimate of the density `Λ(E)/ω` over `E = E_μ − E_α`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChaoticProfile {
    pub bin_centers: Vec<f64>,
    pub bin_values: Vec<f64>,
    pub bin_width: f64,
    /// Half-open range of full-spectrum indices that contributed.
    pub mu_window: (usize, usize),
    pub omega_mean: f64,
    /// Number of empty bins within three standard deviations of the centre.
    pub empty_central_bins: usize,
}

impl ChaoticProfile {
    /// `Σ values · width`.
    pub fn mass(&self) -> f64 {
        self.bin_values.iter().sum::<f64>() * self.bin_width
    }

    /// Second moment of the binned density.
    pub fn second_moment(&self) -> f64 {
        let m = self.mass();
        if m <= 0.0 {
            return 0.0;
        }
        self.bin_centers.iter().zip(&self.bin_values).map(|(e, v)| e * e * v).sum::<f64>() * self.bin_width / m
    }

    /// Exact bin averages of an analytic density on `n_bins` bins spanning
    /// `[-half_range, half_range]`.
    pub fn analytic(shape: Shape, rate: f64, half_range: f64, n_bins: usize) -> Result<Self> {
        if !(rate > 0.0 && half_range > 0.0) || n_bins == 0 {
            return Err(Error::arg("analytic profile needs positive rate, range and bin count"));
        }
        let bw = 2.0 * half_range / n_bins as f64;
        let centers: Vec<f64> = (0..n_bins).map(|k| -half_range + (k as f64 + 0.5) * bw).collect();
        let values = centers.iter().map(|&x| bin_average(shape, rate, x, bw)).collect();
        Ok(ChaoticProfile {
            bin_centers: centers,
            bin_values: values,
            bin_width: bw,
            mu_window: (0, 0),
            omega_mean: f64::NAN,
            empty_central_bins: 0,
        })
    }
}

/// Collects weighted energy differences from one or more overlap matrices
/// before binning, so the bin range can be chosen from the pooled data.
#[derive(Clone, Debug, Default)]
pub struct ProfileAccumulator {
    samples: Vec<(f64, f64)>,
    n_rows: usize,
    spacing_sum: f64,
    spacing_count: usize,
    window: Option<(usize, usize)>,
}

/// Central `fraction` of `0..dim`, at least one index.
pub fn central_window(dim: usize, fraction: f64) -> (usize, usize) {
    let n = ((fraction * dim as f64).round() as usize).clamp(1, dim);
    let start = (dim - n) / 2;
    (start, start + n)
}

impl ProfileAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, ov: &OverlapMatrix, window_fraction: f64) -> Result<()> {
        if !(window_fraction > 0.0 && window_fraction <= 1.0) {
            return Err(Error::arg(format!("window_fraction must be in (0, 1], got {window_fraction}")));
        }
        let (lo, hi) = central_window(ov.dim(), window_fraction);
        let e_full = ov.energies_full();
        let e0 = ov.energies_0();
        let rows = exec::map_indexed(hi - lo, |k| {
            let mu = lo + k;
            (0..e0.len()).map(|a| (e_full[mu] - e0[a], ov.weight(mu, a))).collect::<Vec<_>>()
        });
        for r in rows {
            self.samples.extend(r);
        }
        self.n_rows += hi - lo;
        self.window = Some((lo, hi));

        let (emin, emax) = (e_full[lo], e_full[hi - 1]);
        let inside: Vec<f64> = e0.iter().copied().filter(|&e| e >= emin && e <= emax).collect();
        if inside.len() >= 2 {
            self.spacing_sum += (inside[inside.len() - 1] - inside[0]) / (inside.len() - 1) as f64;
        } else {
            self.spacing_sum += (e0[e0.len() - 1] - e0[0]) / (e0.len().max(2) - 1) as f64;
        }
        self.spacing_count += 1;
        Ok(())
    }

    /// Appends another accumulator's samples after this one's.
    pub fn merge(&mut self, other: ProfileAccumulator) {
        self.samples.extend(other.samples);
        self.n_rows += other.n_rows;
        self.spacing_sum += other.spacing_sum;
        self.spacing_count += other.spacing_count;
        self.window = other.window.or(self.window);
    }

    /// Bins the pooled samples over `±` the weighted 99% quantile of `|E|`.
    pub fn finish(&self, n_bins: usize) -> Result<ChaoticProfile> {
        if n_bins < 8 {
            return Err(Error::arg(format!("n_bins must be at least 8, got {n_bins}")));
        }
        if self.n_rows == 0 {
            return Err(Error::arg("no overlap data accumulated"));
        }
        let omega_mean = self.spacing_sum / self.spacing_count as f64;
        let mut abs: Vec<(f64, f64)> = self.samples.iter().map(|&(e, w)| (e.abs(), w)).collect();
        abs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let total: f64 = abs.iter().map(|p| p.1).sum();
        let mut acc = 0.0;
        let mut q99 = abs.last().map_or(0.0, |p| p.0);
        for &(e, w) in &abs {
            acc += w;
            if acc >= 0.99 * total {
                q99 = e;
                break;
            }
        }
        // a profile narrower than the level spacing still gets a few spacings of range
        let half = q99.max(4.0 * omega_mean);
        if !(half > 0.0) {
            return Err(Error::Numeric("profile has zero energy range".into()));
        }
        let bw = 2.0 * half / n_bins as f64;
        let mut mass = vec![0.0; n_bins];
        for &(e, w) in &self.samples {
            if e.abs() > half {
                continue;
            }
            let k = (((e + half) / bw).floor() as usize).min(n_bins - 1);
            mass[k] += w;
        }
        let norm = self.n_rows as f64 * bw;
        let centers: Vec<f64> = (0..n_bins).map(|k| -half + (k as f64 + 0.5) * bw).collect();
        let values: Vec<f64> = mass.iter().map(|m| m / norm).collect();
        let mut profile = ChaoticProfile {
            bin_centers: centers,
            bin_values: values,
            bin_width: bw,
            mu_window: self.window.unwrap_or((0, 0)),
            omega_mean,
            empty_central_bins: 0,
        };
        let sigma = profile.second_moment().sqrt();
        profile.empty_central_bins = profile
            .bin_centers
            .iter()
            .zip(&profile.bin_values)
            .filter(|(e, v)| e.abs() <= 3.0 * sigma && **v == 0.0)
            .count();
        if profile.empty_central_bins > 0 {
            log::warn!(
                "{} empty bins within ±3σ (σ = {sigma:.4}) of the profile centre; consider fewer bins",
                profile.empty_central_bins
            );
        }
        Ok(profile)
    }
}

/// Single-system profile over the central `window_fraction` of full eigenstates.
pub fn lambda_profile(ov: &OverlapMatrix, window_fraction: f64, n_bins: usize) -> Result<ChaoticProfile> {
    let mut acc = ProfileAccumulator::new();
    acc.add(ov, window_fraction)?;
    acc.finish(n_bins)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Lorentzian,
    Gaussian,
}

impl Shape {
    pub fn name(self) -> &'static str {
        match self {
            Shape::Lorentzian => "lorentzian",
            Shape::Gaussian => "gaussian",
        }
    }
}

/// Point density: `(Γ/π)/(E² + Γ²)` or `(4πK)^{-1/2} e^{−E²/4K}`.
pub fn density(shape: Shape, rate: f64, e: f64) -> f64 {
    match shape {
        Shape::Lorentzian => rate / PI / (e * e + rate * rate),
        Shape::Gaussian => (-e * e / (4.0 * rate)).exp() / (4.0 * PI * rate).sqrt(),
    }
}

/// Mean of the density over `[x − bw/2, x + bw/2]`.
pub fn bin_average(shape: Shape, rate: f64, x: f64, bw: f64) -> f64 {
    let h = bw / 2.0;
    match shape {
        Shape::Lorentzian => (((x + h) / rate).atan() - ((x - h) / rate).atan()) / (PI * bw),
        Shape::Gaussian => {
            let s = 2.0 * rate.sqrt();
            0.5 * (libm::erf((x + h) / s) - libm::erf((x - h) / s)) / bw
        }
    }
}

fn bin_average_derivative(shape: Shape, rate: f64, x: f64, bw: f64) -> f64 {
    let h = bw / 2.0;
    match shape {
        Shape::Lorentzian => {
            let (a, b) = (x + h, x - h);
            (-a / (rate * rate + a * a) + b / (rate * rate + b * b)) / (PI * bw)
        }
        Shape::Gaussian => {
            let (a, b) = (x + h, x - h);
            let g = |u: f64| u * (-u * u / (4.0 * rate)).exp();
            -(g(a) - g(b)) / (4.0 * PI.sqrt() * rate.powf(1.5) * bw)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitOptions {
    /// Lorentzian fits ignore bins with `|E|` beyond this many initial widths.
    /// `None` fits the full range.
    pub lorentzian_truncation: Option<f64>,
    pub max_iterations: usize,
    pub step_tolerance: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { lorentzian_truncation: Some(5.0), max_iterations: 200, step_tolerance: 1e-8 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub shape: Shape,
    pub rate: f64,
    /// RMS misfit over the fitted bins, relative to the peak of the model.
    pub residual: f64,
    /// Variance of the fitted rate from the linearized model.
    pub covariance: f64,
    pub iterations: usize,
    pub initial_guess: f64,
    pub bins_used: usize,
}

/// Half width at half maximum by linear interpolation around the peak bin.
pub fn half_width(profile: &ChaoticProfile) -> Option<f64> {
    let v = &profile.bin_values;
    let x = &profile.bin_centers;
    let peak = (0..v.len()).max_by(|&a, &b| v[a].total_cmp(&v[b]))?;
    let half = v[peak] / 2.0;
    if half <= 0.0 {
        return None;
    }
    let crossing = |range: &mut dyn Iterator<Item = usize>| -> Option<f64> {
        let mut prev = peak;
        for k in range {
            if v[k] <= half {
                let t = (v[prev] - half) / (v[prev] - v[k]);
                return Some(x[prev] + t * (x[k] - x[prev]));
            }
            prev = k;
        }
        None
    };
    let right = crossing(&mut (peak + 1..v.len()));
    let left = crossing(&mut (0..peak).rev());
    let bw = profile.bin_width;
    // A peak confined to one bin still has a width of at most half a bin.
    let hw = match (left, right) {
        (Some(l), Some(r)) => (r - l) / 2.0,
        (Some(l), None) => x[peak] - l,
        (None, Some(r)) => r - x[peak],
        (None, None) => return None,
    };
    Some(hw.max(bw / 4.0))
}

pub fn fit_profile(profile: &ChaoticProfile, shape: Shape) -> Result<FitResult> {
    fit_profile_with(profile, shape, &FitOptions::default())
}

/// One-parameter Levenberg–Marquardt fit of the bin-averaged density.
///
/// Lorentzian residuals are relative, `(data − model)/model`, so the heavy
/// tails carry weight comparable to the core; Gaussian residuals are absolute
/// because the model underflows in the tails.
pub fn fit_profile_with(profile: &ChaoticProfile, shape: Shape, opts: &FitOptions) -> Result<FitResult> {
    if profile.bin_values.len() != profile.bin_centers.len() || profile.bin_values.is_empty() {
        return Err(Error::arg("profile centers and values differ in length"));
    }
    if profile.bin_values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) || !(profile.bin_width > 0.0) {
        return Err(Error::validation("profile has negative or non-finite bins"));
    }
    let initial = match shape {
        Shape::Lorentzian => half_width(profile),
        Shape::Gaussian => Some(profile.second_moment() / 2.0),
    }
    .filter(|g| *g > 0.0 && g.is_finite())
    .ok_or_else(|| Error::Numeric("profile has no usable width for an initial guess".into()))?;

    let cutoff = match (shape, opts.lorentzian_truncation) {
        (Shape::Lorentzian, Some(m)) => m * initial,
        _ => f64::INFINITY,
    };
    let bins: Vec<(f64, f64)> = profile
        .bin_centers
        .iter()
        .zip(&profile.bin_values)
        .filter(|(e, _)| e.abs() <= cutoff)
        .map(|(&e, &v)| (e, v))
        .collect();
    if bins.len() < 2 {
        return Err(Error::Numeric(format!("only {} bins inside the fit window", bins.len())));
    }
    let bw = profile.bin_width;
    let relative = shape == Shape::Lorentzian;

    let eval = |p: f64| -> (f64, Vec<f64>, Vec<f64>) {
        let mut cost = 0.0;
        let mut r = Vec::with_capacity(bins.len());
        let mut j = Vec::with_capacity(bins.len());
        for &(x, d) in &bins {
            let m = bin_average(shape, p, x, bw);
            let dm = bin_average_derivative(shape, p, x, bw);
            let (ri, ji) = if relative { ((d - m) / m, -d / (m * m) * dm) } else { (d - m, -dm) };
            cost += ri * ri;
            r.push(ri);
            j.push(ji);
        }
        (cost, r, j)
    };

    let mut p = initial;
    let (mut cost, mut r, mut jac) = eval(p);
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let mut converged = false;
    let mut last_rate = f64::NAN;
    while iterations < opts.max_iterations {
        iterations += 1;
        let g: f64 = jac.iter().zip(&r).map(|(a, b)| a * b).sum();
        let h: f64 = jac.iter().map(|a| a * a).sum();
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Numeric(format!("degenerate Jacobian at rate {p}")));
        }
        let step = -g / (h * (1.0 + lambda));
        last_rate = (step / p).abs();
        let trial = p + step;
        if trial > 0.0 && trial.is_finite() {
            let (c, rr, jj) = eval(trial);
            if c <= cost {
                p = trial;
                cost = c;
                r = rr;
                jac = jj;
                lambda = (lambda / 10.0).max(1e-12);
                if last_rate < opts.step_tolerance {
                    converged = true;
                    break;
                }
                continue;
            }
        }
        if last_rate < opts.step_tolerance {
            // the undamped step is already below tolerance; we sit at the minimum
            converged = true;
            break;
        }
        lambda *= 10.0;
        if lambda > 1e16 {
            break;
        }
    }
    let peak = bins.iter().map(|&(x, _)| bin_average(shape, p, x, bw)).fold(0.0, f64::max);
    let misfit = bins
        .iter()
        .map(|&(x, d)| ((d - bin_average(shape, p, x, bw)) / peak).powi(2))
        .sum::<f64>()
        / bins.len() as f64;
    if !converged {
        return Err(Error::NoConvergence { iterations, last_rate, residual: misfit.sqrt() });
    }
    let h: f64 = jac.iter().map(|a| a * a).sum();
    let dof = (bins.len() - 1).max(1) as f64;
    Ok(FitResult {
        shape,
        rate: p,
        residual: misfit.sqrt(),
        covariance: cost / dof / h,
        iterations,
        initial_guess: initial,
        bins_used: bins.len(),
    })
}

/// Where `Ω(t)` comes from.
#[derive(Clone, Copy, Debug)]
pub enum OmegaSource<'a> {
    Lorentzian(f64),
    Gaussian(f64),
    Numeric(&'a ChaoticProfile),
}

impl OmegaSource<'_> {
    pub fn label(&self) -> String {
        match self {
            OmegaSource::Lorentzian(g) => format!("lorentzian(gamma={g})"),
            OmegaSource::Gaussian(k) => format!("gaussian(k={k})"),
            OmegaSource::Numeric(_) => "numeric(profile)".to_string(),
        }
    }
}

/// `Ω(t) = ∫ (Λ(E)/ω) e^{−iEt} dE`; the numeric source uses the cosine sum.
pub fn omega_of_t(source: &OmegaSource<'_>, t: f64) -> f64 {
    match source {
        OmegaSource::Lorentzian(g) => (-g * t.abs()).exp(),
        OmegaSource::Gaussian(k) => (-k * t * t).exp(),
        OmegaSource::Numeric(p) => {
            p.bin_centers.iter().zip(&p.bin_values).map(|(e, v)| v * (e * t).cos()).sum::<f64>() * p.bin_width
        }
    }
}

pub fn omega_series(source: &OmegaSource<'_>, times: &[f64]) -> Vec<f64> {
    times.iter().map(|&t| omega_of_t(source, t)).collect()
}

/// Imaginary part of the transform, which vanishes for a symmetric profile.
pub fn omega_asymmetry(profile: &ChaoticProfile, t: f64) -> f64 {
    -profile.bin_centers.iter().zip(&profile.bin_values).map(|(e, v)| v * (e * t).sin()).sum::<f64>()
        * profile.bin_width
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensorops::{hermitian_eigendecomposition, pauli_x, pauli_z};
    use proptest::prelude::*;

    fn synthetic_overlap(shape: Shape, rate: f64, n: usize, omega: f64) -> OverlapMatrix {
        let e: Vec<f64> = (0..n).map(|k| (k as f64 - (n as f64 - 1.0) / 2.0) * omega).collect();
        let c = Mat::from_fn(n, n, |mu, a| (omega * density(shape, rate, e[mu] - e[a])).sqrt());
        let norms: Vec<f64> = (0..n).map(|mu| (0..n).map(|a| c[(mu, a)].powi(2)).sum::<f64>().sqrt()).collect();
        let c = Mat::from_fn(n, n, |mu, a| c[(mu, a)] / norms[mu]);
        OverlapMatrix::new(Dense::Real(c), e.clone(), e).unwrap()
    }

    #[test]
    fn overlap_identity_when_same_basis() {
        let d = hermitian_eigendecomposition(&pauli_x()).unwrap();
        let ov = overlap_matrix(&d, &d).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((ov.weight(i, j) - if i == j { 1.0 } else { 0.0 }).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn overlap_pauli_pair() {
        let full = hermitian_eigendecomposition(&pauli_x()).unwrap();
        let zero = hermitian_eigendecomposition(&pauli_z()).unwrap();
        let ov = overlap_matrix(&full, &zero).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((ov.weight(i, j) - 0.5).abs() < 1e-14);
            }
        }
        assert!(ov.row_norm_defect() < 1e-14);
    }

    #[test]
    fn profile_recovers_lorentzian() {
        let (gamma, omega) = (0.1, 0.002);
        let ov = synthetic_overlap(Shape::Lorentzian, gamma, 2000, omega);
        let p = lambda_profile(&ov, 0.2, 101).unwrap();
        let peak = density(Shape::Lorentzian, gamma, 0.0);
        let rms = (p
            .bin_centers
            .iter()
            .zip(&p.bin_values)
            .map(|(&x, &v)| ((v - bin_average(Shape::Lorentzian, gamma, x, p.bin_width)) / peak).powi(2))
            .sum::<f64>()
            / p.bin_values.len() as f64)
            .sqrt();
        assert!(rms < 0.03, "rms {rms}");
        assert!((p.mass() - 1.0).abs() < 0.02);
        assert!((p.omega_mean - omega).abs() < 1e-12);
        let fit = fit_profile(&p, Shape::Lorentzian).unwrap();
        assert!((fit.rate / gamma - 1.0).abs() < 0.05, "{fit:?}");
    }

    #[test]
    fn profile_of_identical_bases_is_a_spike() {
        let e: Vec<f64> = (0..50).map(|k| k as f64 * 0.1).collect();
        let ov = OverlapMatrix::new(Dense::Real(Mat::identity(50, 50)), e.clone(), e).unwrap();
        let p = lambda_profile(&ov, 0.5, 11).unwrap();
        let total: f64 = p.bin_values.iter().sum();
        assert_eq!(p.bin_values[5], total);
        assert!((p.mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn profile_argument_errors() {
        let ov = synthetic_overlap(Shape::Gaussian, 0.3, 20, 0.1);
        assert!(lambda_profile(&ov, 0.0, 20).is_err());
        assert!(lambda_profile(&ov, 1.5, 20).is_err());
        assert!(lambda_profile(&ov, 0.5, 7).is_err());
    }

    #[test]
    fn fit_is_fixed_point_on_model_data() {
        for (shape, rate) in [(Shape::Lorentzian, 0.1), (Shape::Gaussian, 0.31), (Shape::Lorentzian, 0.087)] {
            let p = ChaoticProfile::analytic(shape, rate, 3.0, 101).unwrap();
            let fit = fit_profile(&p, shape).unwrap();
            assert!((fit.rate - rate).abs() < 1e-6, "{shape:?}: {}", fit.rate);
            assert!(fit.residual < 1e-9);
        }
    }

    #[test]
    fn fit_without_truncation() {
        let p = ChaoticProfile::analytic(Shape::Lorentzian, 0.2, 4.0, 61).unwrap();
        let opts = FitOptions { lorentzian_truncation: None, ..FitOptions::default() };
        let fit = fit_profile_with(&p, Shape::Lorentzian, &opts).unwrap();
        assert!((fit.rate - 0.2).abs() < 1e-6);
        assert_eq!(fit.bins_used, 61);
    }

    #[test]
    fn fit_reports_nonconvergence() {
        let p = ChaoticProfile::analytic(Shape::Gaussian, 0.31, 3.0, 101).unwrap();
        let opts = FitOptions { max_iterations: 1, step_tolerance: 0.0, ..FitOptions::default() };
        match fit_profile_with(&p, Shape::Gaussian, &opts) {
            Err(Error::NoConvergence { iterations, .. }) => assert_eq!(iterations, 1),
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn half_width_of_lorentzian() {
        let p = ChaoticProfile::analytic(Shape::Lorentzian, 0.5, 10.0, 401).unwrap();
        assert!((half_width(&p).unwrap() - 0.5).abs() < 0.02);
    }

    #[test]
    fn analytic_omega_values() {
        assert_eq!(omega_of_t(&OmegaSource::Lorentzian(0.087), 0.0), 1.0);
        assert!((omega_of_t(&OmegaSource::Gaussian(0.31), 1.0) - 0.7334469562242892).abs() < 1e-15);
        assert_eq!(omega_of_t(&OmegaSource::Lorentzian(0.3), -2.0), omega_of_t(&OmegaSource::Lorentzian(0.3), 2.0));
    }

    #[test]
    fn numeric_omega_matches_closed_form() {
        let p = ChaoticProfile::analytic(Shape::Lorentzian, 0.1, 100.0, 40001).unwrap();
        let src = OmegaSource::Numeric(&p);
        assert!((omega_of_t(&src, 0.0) - 1.0).abs() < 0.02);
        for k in 0..=40 {
            let t = 0.5 * k as f64;
            let exact = (-0.1 * t).exp();
            let got = omega_of_t(&src, t);
            assert!(((got - exact) / exact).abs() < 0.02, "t={t}: {got} vs {exact}");
            assert!(omega_asymmetry(&p, t).abs() < 1e-9);
        }
    }

    proptest! {
        #[test]
        fn omega_symmetric_and_decreasing(rate in 0.01f64..2.0, t in 0.01f64..30.0) {
            for src in [OmegaSource::Lorentzian(rate), OmegaSource::Gaussian(rate)] {
                prop_assert_eq!(omega_of_t(&src, t), omega_of_t(&src, -t));
                prop_assert!(omega_of_t(&src, t * 1.1) < omega_of_t(&src, t) || omega_of_t(&src, t) == 0.0);
            }
            let p = ChaoticProfile::analytic(Shape::Gaussian, rate, 20.0 * rate.sqrt(), 201).unwrap();
            let src = OmegaSource::Numeric(&p);
            prop_assert!((omega_of_t(&src, t) - omega_of_t(&src, -t)).abs() < 1e-12);
        }

        #[test]
        fn bin_average_integrates_to_unity(rate in 0.05f64..1.0) {
            for shape in [Shape::Lorentzian, Shape::Gaussian] {
                let p = ChaoticProfile::analytic(shape, rate, 2000.0, 20001).unwrap();
                prop_assert!((p.mass() - 1.0).abs() < 1e-3);
            }
        }
    }
}
