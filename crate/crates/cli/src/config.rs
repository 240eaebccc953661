//! Run configuration, read from a TOML file. Unknown keys are errors.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use chaoscorr::chaoswf::{FitOptions, Shape};
use chaoscorr::models::{ChainParams, RmtParams};

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub initial_state: InitialStateConfig,
    /// Operator expressions such as `sigma_x(1)` or `sigma_x(1)*sigma_z(2)`.
    #[serde(default)]
    pub observables: Vec<String>,
    /// Defaults to a one-point series for every observable.
    #[serde(default)]
    pub correlators: Vec<CorrelatorConfig>,
    #[serde(default)]
    pub time_grid: TimeGrid,
    #[serde(default)]
    pub lambda_extraction: LambdaExtraction,
    #[serde(default)]
    pub compare: CompareConfig,
    #[serde(default)]
    pub rmt: RmtConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelConfig {
    Chain(ChainParams),
    Rmt(RmtParams),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateKind {
    H0Eigenstate,
    Neel,
    /// Random product states post-selected near the middle of the `H₀`
    /// spectrum, averaged over `n_bath_realizations`.
    RandomProduct,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialStateConfig {
    pub kind: StateKind,
    /// Rank in the ascending `H₀` spectrum, counted from `index_base`.
    pub index: usize,
    pub index_base: usize,
    pub n_bath_realizations: usize,
    /// Accept `|⟨H₀⟩ − E_mid| ≤ window · (E_max − E_min)`; `None` disables
    /// post-selection.
    pub window: Option<f64>,
}

impl Default for InitialStateConfig {
    fn default() -> Self {
        InitialStateConfig { kind: StateKind::H0Eigenstate, index: 2041, index_base: 1, n_bath_realizations: 50, window: Some(0.05) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelatorKindConfig {
    OnePoint,
    TwoPoint,
    /// `⟨A(t) B A(t) B⟩` from two observables.
    Otoc,
    /// `⟨A(t) B C(t) D⟩` from four observables.
    FourPoint,
    SquaredCommutator,
}

impl CorrelatorKindConfig {
    pub fn arity(self) -> usize {
        match self {
            CorrelatorKindConfig::OnePoint => 1,
            CorrelatorKindConfig::FourPoint => 4,
            _ => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CorrelatorKindConfig::OnePoint => "one_point",
            CorrelatorKindConfig::TwoPoint => "two_point",
            CorrelatorKindConfig::Otoc => "otoc",
            CorrelatorKindConfig::FourPoint => "four_point",
            CorrelatorKindConfig::SquaredCommutator => "squared_commutator",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelatorConfig {
    pub kind: CorrelatorKindConfig,
    pub observables: Vec<String>,
    /// Second time of a two-point function.
    #[serde(default)]
    pub t2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeGrid {
    pub t_max: f64,
    pub n_points: usize,
}

impl Default for TimeGrid {
    fn default() -> Self {
        TimeGrid { t_max: 40.0, n_points: 401 }
    }
}

impl TimeGrid {
    pub fn times(&self) -> Vec<f64> {
        let dt = self.t_max / (self.n_points - 1) as f64;
        (0..self.n_points).map(|k| k as f64 * dt).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LambdaExtraction {
    pub window_fraction: f64,
    pub n_bins: usize,
    pub fit_shapes: Vec<Shape>,
    pub fit: FitOptions,
}

impl Default for LambdaExtraction {
    fn default() -> Self {
        LambdaExtraction {
            window_fraction: 0.2,
            n_bins: 101,
            fit_shapes: vec![Shape::Lorentzian, Shape::Gaussian],
            fit: FitOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompareConfig {
    /// Time window `[start, end]` of the RMS deviations.
    pub rms_window: [f64; 2],
    /// Replace both kernels by `Ω ≡ 1`, so predictions equal the references.
    pub unit_omega: bool,
}

impl Default for CompareConfig {
    fn default() -> Self {
        CompareConfig { rms_window: [0.0, 30.0], unit_omega: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloConfig {
    pub dim: usize,
    pub realizations: usize,
    /// Ratio `Γ/ω` of the ensemble; `ω = 1/dim` and `g` follows.
    #[serde(default = "default_gamma_over_omega")]
    pub gamma_over_omega: f64,
}

fn default_gamma_over_omega() -> f64 {
    20.0
}

impl MonteCarloConfig {
    pub fn params(&self) -> RmtParams {
        let omega = 1.0 / self.dim as f64;
        let g = (self.gamma_over_omega * omega * omega * self.dim as f64 / std::f64::consts::PI).sqrt();
        RmtParams { dim: self.dim, omega, g }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RmtConfig {
    pub n_realizations: usize,
    pub window_fraction: f64,
    pub n_bins: usize,
    /// Largest accepted `|Γ_fit/Γ_theory − 1|`.
    pub gamma_tolerance: f64,
    pub z_threshold: f64,
    pub monte_carlo: Vec<MonteCarloConfig>,
}

impl Default for RmtConfig {
    fn default() -> Self {
        RmtConfig {
            n_realizations: 20,
            window_fraction: 0.2,
            n_bins: 101,
            gamma_tolerance: 0.15,
            z_threshold: 3.0,
            monte_carlo: vec![
                MonteCarloConfig { dim: 120, realizations: 10_000, gamma_over_omega: 20.0 },
                MonteCarloConfig { dim: 200, realizations: 5_000, gamma_over_omega: 20.0 },
            ],
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Usage(format!("invalid config: {e}")))?;
        cfg.check()?;
        Ok(cfg)
    }

    /// Structural checks that do not need any numerics.
    pub fn check(&self) -> Result<(), CliError> {
        let usage = |m: String| Err(CliError::Usage(m));
        if self.time_grid.n_points < 2 || !(self.time_grid.t_max > 0.0 && self.time_grid.t_max.is_finite()) {
            return usage("time_grid: n_points must be at least 2 and t_max positive".into());
        }
        let s = &self.initial_state;
        if s.index_base > 1 {
            return usage(format!("initial_state.index_base must be 0 or 1, got {}", s.index_base));
        }
        if s.index < s.index_base {
            return usage(format!("initial_state.index {} is below index_base {}", s.index, s.index_base));
        }
        if s.n_bath_realizations == 0 {
            return usage("initial_state.n_bath_realizations must be at least 1".into());
        }
        for (k, c) in self.correlators.iter().enumerate() {
            if c.observables.len() != c.kind.arity() {
                return usage(format!(
                    "correlators[{k}].observables: {} needs {} observables, got {}",
                    c.kind.name(),
                    c.kind.arity(),
                    c.observables.len()
                ));
            }
            for o in &c.observables {
                if !self.observables.contains(o) {
                    return usage(format!("correlators[{k}].observables: unknown observable `{o}` (not listed in `observables`)"));
                }
            }
        }
        let w = self.compare.rms_window;
        if !(w[0] <= w[1]) {
            return usage("compare.rms_window must be [start, end] with start ≤ end".into());
        }
        if self.rmt.n_realizations == 0 {
            return usage("rmt.n_realizations must be at least 1".into());
        }
        for (k, m) in self.rmt.monte_carlo.iter().enumerate() {
            if m.realizations < 2 || m.dim < 20 {
                return usage(format!("rmt.monte_carlo[{k}]: need dim ≥ 20 and at least 2 realizations"));
            }
        }
        Ok(())
    }

    /// Correlators to compute, with the one-point default.
    pub fn correlator_list(&self) -> Vec<CorrelatorConfig> {
        if !self.correlators.is_empty() {
            return self.correlators.clone();
        }
        self.observables
            .iter()
            .map(|o| CorrelatorConfig { kind: CorrelatorKindConfig::OnePoint, observables: vec![o.clone()], t2: 0.0 })
            .collect()
    }
}
