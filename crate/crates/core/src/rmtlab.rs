//! Ensemble experiments on the Deutsch model.
//!
//! Realizations are independent: realization `r` of an experiment seeded with
//! `seed` uses the generator seed `realization_seed(seed, r)`, and per-
//! realization results are reduced in index order, so aggregates do not depend
//! on scheduling.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::chaoswf::{
    density, fit_profile_with, overlap_matrix, ChaoticProfile, FitOptions, FitResult, ProfileAccumulator, Shape,
};
use crate::exec;
use crate::models::{build_deutsch_model, RmtParams};
use crate::tensorops::{hermitian_eigendecomposition, Dense, SpectralDecomposition};
use crate::{Error, Result};

/// Mixes an experiment seed with a realization index (SplitMix64 finalizer).
pub fn realization_seed(seed: u64, realization: u64) -> u64 {
    let mut z = seed ^ realization.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub n_realizations: usize,
    pub mean: f64,
    /// Standard error of the mean; absent with fewer than two realizations.
    pub stderr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_realization: Option<Vec<f64>>,
}

impl EnsembleStats {
    /// Mean and standard error, accumulated in slice order.
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        let mut mean = 0.0;
        let mut m2 = 0.0;
        for (k, &x) in samples.iter().enumerate() {
            let delta = x - mean;
            mean += delta / (k + 1) as f64;
            m2 += delta * (x - mean);
        }
        let stderr = (n >= 2).then(|| (m2 / (n - 1) as f64 / n as f64).sqrt());
        EnsembleStats { n_realizations: n, mean, stderr, per_realization: None }
    }

    pub fn with_samples(mut self, samples: Vec<f64>) -> Self {
        self.per_realization = Some(samples);
        self
    }

    /// `stderr / |mean|`.
    pub fn relative_spread(&self) -> Option<f64> {
        self.stderr.map(|s| s / self.mean.abs())
    }

    /// `(mean − reference) / stderr`.
    pub fn z_score(&self, reference: f64) -> Option<f64> {
        let s = self.stderr?;
        let diff = self.mean - reference;
        Some(if s > 0.0 { diff / s } else if diff == 0.0 { 0.0 } else { f64::INFINITY.copysign(diff) })
    }
}

/// `Λ(μ, α)`, the ensemble variance of `c_μ(α)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaShape {
    /// `ωΓ/π / ((E_μ − E_α)² + Γ²)`
    Lorentzian { gamma: f64, omega: f64 },
    /// `ω (4πK)^{-1/2} e^{−(E_μ − E_α)²/4K}`
    Gaussian { k: f64, omega: f64 },
    /// Measured `Λ` as a function of the index lag `μ − α`, stored at
    /// position `μ − α + dim − 1`.
    Empirical { lag_profile: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct LambdaLookup {
    shape: LambdaShape,
    levels: Vec<f64>,
}

impl LambdaLookup {
    /// Analytic lookup on the given unperturbed levels (also used for `E_μ`).
    pub fn analytic(shape: LambdaShape, levels: Vec<f64>) -> Result<Self> {
        match &shape {
            LambdaShape::Lorentzian { gamma: r, omega } | LambdaShape::Gaussian { k: r, omega } => {
                if !(*r > 0.0 && *omega > 0.0) {
                    return Err(Error::arg("lookup rate and spacing must be positive"));
                }
            }
            LambdaShape::Empirical { .. } => return Err(Error::arg("use LambdaLookup::empirical for measured profiles")),
        }
        if levels.is_empty() {
            return Err(Error::arg("lookup needs at least one level"));
        }
        Ok(LambdaLookup { shape, levels })
    }

    pub fn empirical(lag_profile: Vec<f64>) -> Result<Self> {
        if lag_profile.len().is_multiple_of(2) || lag_profile.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::arg("lag profile must have odd length 2·dim − 1 and non-negative entries"));
        }
        let dim = lag_profile.len().div_ceil(2);
        Ok(LambdaLookup { shape: LambdaShape::Empirical { lag_profile }, levels: (0..dim).map(|k| k as f64).collect() })
    }

    pub fn dim(&self) -> usize {
        self.levels.len()
    }

    pub fn shape(&self) -> &LambdaShape {
        &self.shape
    }

    #[inline]
    pub fn value(&self, mu: usize, alpha: usize) -> f64 {
        let e = || self.levels[mu] - self.levels[alpha];
        match &self.shape {
            LambdaShape::Lorentzian { gamma, omega } => omega * density(Shape::Lorentzian, *gamma, e()),
            LambdaShape::Gaussian { k, omega } => omega * density(Shape::Gaussian, *k, e()),
            LambdaShape::Empirical { lag_profile } => lag_profile[mu + self.dim() - 1 - alpha],
        }
    }

    /// `Σ_α Λ(μ, α)`.
    pub fn normalization(&self, mu: usize) -> f64 {
        (0..self.dim()).map(|a| self.value(mu, a)).sum()
    }

    /// `Σ_γ Λ(μ, γ) Λ(ν, γ)` over the actual level grid.
    pub fn overlap_sum(&self, mu: usize, nu: usize) -> f64 {
        (0..self.dim()).map(|g| self.value(mu, g) * self.value(nu, g)).sum()
    }

    fn check(&self, indices: &[usize]) -> Result<()> {
        if let Some(bad) = indices.iter().find(|&&i| i >= self.dim()) {
            return Err(Error::arg(format!("index {bad} outside the lookup dimension {}", self.dim())));
        }
        Ok(())
    }

    /// `⟨c_μ(α) c_μ(β)⟩ = Λ(μ, α) δ_αβ`.
    fn pair(&self, mu: usize, a: usize, b: usize) -> f64 {
        if a == b {
            self.value(mu, a)
        } else {
            0.0
        }
    }

    /// Non-Gaussian part of `⟨c_μ(α)c_μ(β)c_ν(α′)c_ν(β′)⟩` for `μ ≠ ν`.
    fn kernel(&self, mu: usize, nu: usize, a: usize, b: usize, a2: usize, b2: usize) -> f64 {
        let deltas = (a == a2 && b == b2) as u8 + (a == b2 && b == a2) as u8;
        if deltas == 0 {
            return 0.0;
        }
        let num = (self.value(mu, a) * self.value(mu, b)) * (self.value(nu, a2) * self.value(nu, b2));
        -num / self.overlap_sum(mu, nu) * deltas as f64
    }
}

/// `⟨c_μ(α)c_μ(β)c_ν(α′)c_ν(β′)⟩`: Wick sum for `μ = ν`, Gaussian product plus
/// orthogonality correction otherwise.
pub fn eigenstate_corr4(lookup: &LambdaLookup, mu: usize, nu: usize, a: usize, b: usize, a2: usize, b2: usize) -> Result<f64> {
    lookup.check(&[mu, nu, a, b, a2, b2])?;
    if mu == nu {
        return Ok(lookup.pair(mu, a, b) * lookup.pair(mu, a2, b2)
            + lookup.pair(mu, a, a2) * lookup.pair(mu, b, b2)
            + lookup.pair(mu, a, b2) * lookup.pair(mu, b, a2));
    }
    Ok(lookup.pair(mu, a, b) * lookup.pair(nu, a2, b2) + lookup.kernel(mu, nu, a, b, a2, b2))
}

/// Index pattern of a six-point eigenstate correlation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "case")]
pub enum Corr6Index {
    /// `c_μ(α₀)c_μ(β₀) c_ν(α)c_ν(β)c_ν(α′)c_ν(β′)`
    TwoStates { mu: usize, nu: usize, idx: [usize; 6] },
    /// `c_μ(α₀)c_μ(β₀) c_ν(α)c_ν(β) c_ρ(α′)c_ρ(β′)`
    ThreeStates { mu: usize, nu: usize, rho: usize, idx: [usize; 6] },
}

impl Corr6Index {
    /// The state label of each of the six coefficients.
    pub fn states(&self) -> [usize; 6] {
        match *self {
            Corr6Index::TwoStates { mu, nu, .. } => [mu, mu, nu, nu, nu, nu],
            Corr6Index::ThreeStates { mu, nu, rho, .. } => [mu, mu, nu, nu, rho, rho],
        }
    }

    pub fn indices(&self) -> [usize; 6] {
        match *self {
            Corr6Index::TwoStates { idx, .. } | Corr6Index::ThreeStates { idx, .. } => idx,
        }
    }
}

pub fn eigenstate_corr6(lookup: &LambdaLookup, index: &Corr6Index) -> Result<f64> {
    match *index {
        Corr6Index::TwoStates { mu, nu, idx } => {
            if mu == nu {
                return Err(Error::arg("two-state pattern needs μ ≠ ν"));
            }
            lookup.check(&[mu, nu])?;
            lookup.check(&idx)?;
            let [a0, b0, a, b, a2, b2] = idx;
            let p = |x, y| lookup.pair(nu, x, y);
            let k = |x, y| lookup.kernel(mu, nu, a0, b0, x, y);
            let gaussian = lookup.pair(mu, a0, b0) * (p(a, b) * p(a2, b2) + p(a2, b) * p(a, b2) + p(a, a2) * p(b, b2));
            let corrections = p(a, b) * k(a2, b2)
                + p(a, a2) * k(b, b2)
                + p(a, b2) * k(b, a2)
                + p(b, a2) * k(a, b2)
                + p(b, b2) * k(a, a2)
                + p(a2, b2) * k(a, b);
            Ok(gaussian + corrections)
        }
        Corr6Index::ThreeStates { mu, nu, rho, idx } => {
            if mu == nu || nu == rho || mu == rho {
                return Err(Error::arg("three-state pattern needs distinct μ, ν, ρ"));
            }
            lookup.check(&[mu, nu, rho])?;
            lookup.check(&idx)?;
            let [a0, b0, a, b, a2, b2] = idx;
            let (pm, pn, pr) = (lookup.pair(mu, a0, b0), lookup.pair(nu, a, b), lookup.pair(rho, a2, b2));
            Ok(pm * pn * pr
                + pm * lookup.kernel(nu, rho, a, b, a2, b2)
                + pn * lookup.kernel(mu, rho, a0, b0, a2, b2)
                + pr * lookup.kernel(mu, nu, a0, b0, a, b))
        }
    }
}

/// Options shared by the ensemble experiments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleOptions {
    pub window_fraction: f64,
    pub n_bins: usize,
    pub fit: FitOptions,
}

impl Default for EnsembleOptions {
    fn default() -> Self {
        EnsembleOptions {
            window_fraction: 0.2,
            n_bins: 101,
            // the ensemble profile is smooth out to the tails, so fit all of it
            fit: FitOptions { lorentzian_truncation: None, ..FitOptions::default() },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LambdaExperiment {
    pub profile: ChaoticProfile,
    pub fit: FitResult,
    pub gamma_theory: f64,
    /// Lorentzian widths fitted to each realization separately.
    pub gamma_per_realization: EnsembleStats,
    /// Whether `ω < Γ < g`, the regime where the linewidth formula applies.
    pub perturbative: bool,
}

fn realization(params: &RmtParams, seed: u64, r: usize) -> Result<SpectralDecomposition> {
    let set = build_deutsch_model(params, realization_seed(seed, r as u64))?;
    hermitian_eigendecomposition(set.h_full())
}

fn diagonal_decomposition(levels: &[f64]) -> Result<SpectralDecomposition> {
    let n = levels.len();
    SpectralDecomposition::from_parts(levels.to_vec(), Dense::Real(faer::Mat::identity(n, n)))
}

/// Pooled `|c_μ(α)|²` profile over `n_real` realizations, its Lorentzian fit,
/// and the golden-rule width `πg²/(ωN)`.
pub fn ensemble_lambda_experiment(params: &RmtParams, n_real: usize, seed: u64, opts: &EnsembleOptions) -> Result<LambdaExperiment> {
    params.validate()?;
    if n_real == 0 {
        return Err(Error::arg("n_real must be at least 1"));
    }
    let gamma_theory = params.gamma_theory();
    let perturbative = params.omega < gamma_theory && gamma_theory < params.g;
    if !perturbative {
        log::warn!(
            "parameters outside ω < Γ < g (ω = {}, Γ = {gamma_theory:.4e}, g = {}); the Lorentzian width is not expected to hold",
            params.omega,
            params.g
        );
    }
    let d0 = diagonal_decomposition(&params.levels())?;
    let per = exec::map_indexed(n_real, |r| -> Result<(ProfileAccumulator, Option<f64>)> {
        let d = realization(params, seed, r)?;
        let ov = overlap_matrix(&d, &d0)?;
        let mut acc = ProfileAccumulator::new();
        acc.add(&ov, opts.window_fraction)?;
        let single = acc
            .finish(opts.n_bins)
            .and_then(|p| fit_profile_with(&p, Shape::Lorentzian, &opts.fit))
            .map(|f| f.rate)
            .ok();
        Ok((acc, single))
    });
    let mut pooled = ProfileAccumulator::new();
    let mut gammas = Vec::with_capacity(n_real);
    for item in per {
        let (acc, g) = item?;
        pooled.merge(acc);
        gammas.extend(g);
    }
    let profile = pooled.finish(opts.n_bins)?;
    let fit = fit_profile_with(&profile, Shape::Lorentzian, &opts.fit)?;
    Ok(LambdaExperiment {
        profile,
        fit,
        gamma_theory,
        gamma_per_realization: EnsembleStats::from_samples(&gammas).with_samples(gammas),
        perturbative,
    })
}

/// What `self_averaging_check` measures in each realization.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurvivalProbe {
    /// Time at which `|⟨φ|e^{−iHt}|φ⟩|²` is recorded for the mid-spectrum
    /// unperturbed state `φ`.
    pub time: f64,
}

/// Spread across realizations of the survival probability of a mid-spectrum
/// unperturbed state; it shrinks as the model approaches self-averaging.
pub fn self_averaging_check(params: &RmtParams, probe: &SurvivalProbe, n_real: usize, seed: u64) -> Result<EnsembleStats> {
    params.validate()?;
    if n_real == 0 {
        return Err(Error::arg("n_real must be at least 1"));
    }
    let alpha = params.dim / 2;
    let samples = exec::map_indexed(n_real, |r| -> Result<f64> {
        let d = realization(params, seed, r)?;
        let v = d.vectors();
        // ⟨φ_α|e^{−iHt}|φ_α⟩ = Σ_μ |c_μ(α)|² e^{−iE_μ t}
        let amp: crate::C64 = (0..params.dim)
            .map(|mu| crate::C64::from_polar(v.get(alpha, mu).norm_sqr(), -d.energies()[mu] * probe.time))
            .sum();
        Ok(amp.norm_sqr())
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    if n_real < 2 {
        log::warn!("a single realization gives no standard error");
    }
    Ok(EnsembleStats::from_samples(&samples).with_samples(samples))
}

/// Eigenvector samples for a fixed set of states across realizations.
#[derive(Clone, Debug)]
pub struct CoefficientSamples {
    dim: usize,
    states: Vec<usize>,
    /// `rows[r][s][α] = c_{states[s]}(α)` in realization `r`.
    rows: Vec<Vec<Vec<f64>>>,
    lag_sum: Vec<f64>,
    lag_count: usize,
}

impl CoefficientSamples {
    /// Diagonalizes `n_real` realizations and keeps the requested eigenvectors
    /// plus a lag profile of `c_μ(α)²` over the central window.
    pub fn collect(params: &RmtParams, states: &[usize], n_real: usize, seed: u64, window_fraction: f64) -> Result<Self> {
        params.validate()?;
        let dim = params.dim;
        if let Some(bad) = states.iter().find(|&&s| s >= dim) {
            return Err(Error::arg(format!("state {bad} outside dimension {dim}")));
        }
        if n_real < 2 {
            return Err(Error::arg("Monte Carlo comparisons need at least two realizations"));
        }
        let (lo, hi) = crate::chaoswf::central_window(dim, window_fraction);
        let per = exec::map_indexed(n_real, |r| -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
            let d = realization(params, seed, r)?;
            let v = d.vectors();
            let rows = states.iter().map(|&s| (0..dim).map(|a| v.get(a, s).re).collect()).collect();
            let mut lag = vec![0.0; 2 * dim - 1];
            for mu in lo..hi {
                for a in 0..dim {
                    lag[mu + dim - 1 - a] += v.get(a, mu).re.powi(2);
                }
            }
            Ok((rows, lag))
        });
        let mut rows = Vec::with_capacity(n_real);
        let mut lag_sum = vec![0.0; 2 * dim - 1];
        let mut lag_count = vec![0usize; 2 * dim - 1];
        for item in per {
            let (r, lag) = item?;
            rows.push(r);
            lag_sum.iter_mut().zip(&lag).for_each(|(s, x)| *s += x);
        }
        for mu in lo..hi {
            for a in 0..dim {
                lag_count[mu + dim - 1 - a] += n_real;
            }
        }
        let lag_sum = lag_sum.iter().zip(&lag_count).map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 }).collect();
        Ok(CoefficientSamples { dim, states: states.to_vec(), rows, lag_sum, lag_count: n_real })
    }

    pub fn n_realizations(&self) -> usize {
        self.rows.len()
    }

    /// Flips the sign of every stored eigenvector independently, as a gauge
    /// change; compared quantities must not move.
    pub fn with_random_signs(&self, seed: u64) -> Self {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut out = self.clone();
        for real in &mut out.rows {
            for row in real.iter_mut() {
                if rng.random::<bool>() {
                    row.iter_mut().for_each(|x| *x = -*x);
                }
            }
        }
        out
    }

    /// `Λ` measured as a function of the index lag, from the central window.
    pub fn lookup(&self) -> Result<LambdaLookup> {
        debug_assert!(self.lag_count > 0);
        LambdaLookup::empirical(self.lag_sum.clone())
    }

    fn slot(&self, state: usize) -> Result<usize> {
        self.states
            .iter()
            .position(|&s| s == state)
            .ok_or_else(|| Error::arg(format!("state {state} was not sampled")))
    }

    /// Ensemble average of `Π_k c_{states[k]}(indices[k])`.
    pub fn moment(&self, states: &[usize], indices: &[usize]) -> Result<EnsembleStats> {
        if states.len() != indices.len() {
            return Err(Error::arg("states and indices differ in length"));
        }
        if let Some(bad) = indices.iter().find(|&&i| i >= self.dim) {
            return Err(Error::arg(format!("index {bad} outside dimension {}", self.dim)));
        }
        let slots: Vec<usize> = states.iter().map(|&s| self.slot(s)).collect::<Result<_>>()?;
        let samples: Vec<f64> = self
            .rows
            .iter()
            .map(|real| slots.iter().zip(indices).map(|(&s, &i)| real[s][i]).product())
            .collect();
        Ok(EnsembleStats::from_samples(&samples))
    }
}

/// One closed-form value checked against its Monte Carlo estimate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorrelationCheck {
    pub label: String,
    pub states: Vec<usize>,
    pub indices: Vec<usize>,
    pub formula: f64,
    pub monte_carlo: EnsembleStats,
    pub z: f64,
}

impl CorrelationCheck {
    fn new(label: String, states: Vec<usize>, indices: Vec<usize>, formula: f64, mc: EnsembleStats) -> Self {
        let z = mc.z_score(formula).unwrap_or(f64::NAN);
        CorrelationCheck { label, states, indices, formula, monte_carlo: mc, z }
    }
}

pub fn check_corr4(samples: &CoefficientSamples, lookup: &LambdaLookup, mu: usize, nu: usize, idx: [usize; 4]) -> Result<CorrelationCheck> {
    let [a, b, a2, b2] = idx;
    let formula = eigenstate_corr4(lookup, mu, nu, a, b, a2, b2)?;
    let states = vec![mu, mu, nu, nu];
    let mc = samples.moment(&states, &idx)?;
    Ok(CorrelationCheck::new("corr4".into(), states, idx.to_vec(), formula, mc))
}

pub fn check_corr6(samples: &CoefficientSamples, lookup: &LambdaLookup, index: &Corr6Index) -> Result<CorrelationCheck> {
    let formula = eigenstate_corr6(lookup, index)?;
    let label = match index {
        Corr6Index::TwoStates { .. } => "corr6_two_states",
        Corr6Index::ThreeStates { .. } => "corr6_three_states",
    };
    let states = index.states().to_vec();
    let mc = samples.moment(&states, &index.indices())?;
    Ok(CorrelationCheck::new(label.into(), states, index.indices().to_vec(), formula, mc))
}

/// A battery of index tuples around the spectral centre of an `n`-level model:
/// five per correlation type, mixing coincident and distinct indices.
pub fn standard_tuples(dim: usize) -> (Vec<(usize, usize, [usize; 4])>, Vec<Corr6Index>) {
    let m = dim / 2;
    let (mu, nu, rho) = (m, m + 1, m - 1);
    let corr4 = vec![
        (mu, nu, [m, m, m + 1, m + 1]),
        (mu, nu, [m, m, m, m]),
        (mu, nu, [m, m + 1, m, m + 1]),
        (mu, nu, [m - 1, m - 1, m + 2, m + 2]),
        (mu, mu, [m, m, m + 1, m + 1]),
        (mu, mu, [m, m, m, m]),
        (mu, nu, [m, m + 1, m + 2, m + 3]),
    ];
    let two = |idx| Corr6Index::TwoStates { mu, nu, idx };
    let three = |idx| Corr6Index::ThreeStates { mu, nu, rho, idx };
    let corr6 = vec![
        two([m, m, m + 1, m + 1, m + 1, m + 1]),
        two([m, m, m, m, m + 1, m + 1]),
        two([m, m + 1, m, m + 1, m + 1, m + 1]),
        two([m - 1, m - 1, m, m, m + 2, m + 2]),
        two([m, m, m, m, m, m]),
        two([m, m + 1, m + 2, m + 2, m + 1, m]),
        three([m, m, m + 1, m + 1, m - 1, m - 1]),
        three([m, m, m, m, m, m]),
        three([m, m + 1, m, m + 1, m - 1, m - 1]),
        three([m, m, m + 1, m - 1, m + 1, m - 1]),
        three([m - 2, m - 2, m + 2, m + 2, m, m]),
        three([m, m + 1, m + 2, m + 3, m - 1, m - 2]),
    ];
    (corr4, corr6)
}

/// Runs `standard_tuples` against a fresh ensemble.
pub fn appendix_checks(params: &RmtParams, n_real: usize, seed: u64, window_fraction: f64) -> Result<Vec<CorrelationCheck>> {
    let m = params.dim / 2;
    let samples = CoefficientSamples::collect(params, &[m - 1, m, m + 1], n_real, seed, window_fraction)?;
    let lookup = samples.lookup()?;
    let (c4, c6) = standard_tuples(params.dim);
    let mut out = Vec::new();
    for (mu, nu, idx) in c4 {
        out.push(check_corr4(&samples, &lookup, mu, nu, idx)?);
    }
    for index in c6 {
        out.push(check_corr6(&samples, &lookup, &index)?);
    }
    Ok(out)
}

/// Per-label summary: how many checks ran and the largest `|z|`.
pub fn summarize(checks: &[CorrelationCheck]) -> BTreeMap<String, (usize, f64)> {
    let mut out: BTreeMap<String, (usize, f64)> = BTreeMap::new();
    for c in checks {
        let e = out.entry(c.label.clone()).or_insert((0, 0.0));
        e.0 += 1;
        e.1 = e.1.max(c.z.abs());
    }
    out
}
