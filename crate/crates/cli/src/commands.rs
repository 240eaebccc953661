//! The four subcommands. Each one loads its model, writes its artifacts and
//! finishes with a manifest.

use std::path::PathBuf;

use serde::Serialize;
use serde_json::json;

use chaoscorr::chaoswf::{
    fit_profile_with, lambda_profile, omega_of_t, overlap_matrix, ChaoticProfile, FitResult, OmegaSource, Shape,
};
use chaoscorr::correlators::{
    diagonal_ensemble_average, four_point_series, one_point_series, squared_commutator_series, two_point_series,
    CorrelatorSeries, HamiltonianTag,
};
use chaoscorr::models::{
    build_spin_chain, mid_spectrum_product_state, neel_state, prepare_initial_state, ChainParams, HamiltonianSet,
    InitialStateSpec, RmtParams,
};
use chaoscorr::output::{comparison_table, profile_table, series_table, Table};
use chaoscorr::predictions::{
    predict_four_point, predict_one_point, predict_squared_commutator, predict_two_point, SquaredCommutatorReference,
};
use chaoscorr::rmtlab::{appendix_checks, ensemble_lambda_experiment, realization_seed, summarize, EnsembleOptions};
use chaoscorr::tensorops::{Operator, SpectralDecomposition, StateVector};

use crate::artifacts::{sha256_hex, unix_now, Artifacts};
use crate::cache::EigenCache;
use crate::config::{CorrelatorConfig, CorrelatorKindConfig, ModelConfig, RunConfig, StateKind};
use crate::error::CliError;
use crate::observables;

/// Everything a command needs besides the config file itself.
pub struct Context {
    pub cfg: RunConfig,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub cache: EigenCache,
    pub emit_plot_data: bool,
}

impl Context {
    /// Hash of the effective configuration, excluding where files go.
    pub fn config_hash(&self) -> String {
        let mut c = self.cfg.clone();
        c.seed = self.seed;
        c.output_dir = None;
        c.cache_dir = None;
        sha256_hex(serde_json::to_string(&c).expect("config serializes").as_bytes())
    }

    fn model_hash(&self) -> String {
        sha256_hex(serde_json::to_string(&self.cfg.model).expect("model serializes").as_bytes())
    }
}

struct Chain {
    params: ChainParams,
    set: HamiltonianSet,
}

impl Chain {
    fn d0(&self) -> &SpectralDecomposition {
        self.set.decomp0().expect("decompositions are set on load")
    }

    fn full(&self) -> &SpectralDecomposition {
        self.set.decomp_full().expect("decompositions are set on load")
    }
}

fn load_chain(ctx: &Context, command: &str) -> Result<Chain, CliError> {
    let ModelConfig::Chain(params) = &ctx.cfg.model else {
        return Err(CliError::Usage(format!("`{command}` needs model.kind = \"chain\"")));
    };
    let set = build_spin_chain(params)?;
    let key = ctx.model_hash();
    let d0 = ctx.cache.get_or_compute(&format!("{key}-h0"), set.h0()).map_err(|e| e.context("diagonalizing H0"))?;
    let full = ctx.cache.get_or_compute(&format!("{key}-full"), set.h_full()).map_err(|e| e.context("diagonalizing H"))?;
    set.set_decompositions(d0, full)?;
    Ok(Chain { params: params.clone(), set })
}

fn rmt_params(ctx: &Context, command: &str) -> Result<RmtParams, CliError> {
    match &ctx.cfg.model {
        ModelConfig::Rmt(p) => {
            p.validate()?;
            Ok(p.clone())
        }
        _ => Err(CliError::Usage(format!("`{command}` needs model.kind = \"rmt\""))),
    }
}

/// One state, or the post-selected random product states to average over.
fn initial_states(ctx: &Context, d0: &SpectralDecomposition, n_sites: usize) -> Result<Vec<StateVector>, CliError> {
    let s = &ctx.cfg.initial_state;
    Ok(match s.kind {
        StateKind::H0Eigenstate => {
            let index = s.index - s.index_base + 1;
            vec![prepare_initial_state(&InitialStateSpec::H0Eigenstate { index }, d0)?]
        }
        StateKind::Neel => vec![neel_state(n_sites)?],
        StateKind::RandomProduct => (0..s.n_bath_realizations)
            .map(|r| {
                let seed = realization_seed(ctx.seed, r as u64);
                match s.window {
                    Some(w) => mid_spectrum_product_state(d0, seed, w),
                    None => prepare_initial_state(&InitialStateSpec::RandomProduct { seed }, d0),
                }
            })
            .collect::<Result<_, _>>()?,
    })
}

fn stem(c: &CorrelatorConfig) -> String {
    let obs: Vec<String> = c.observables.iter().map(|o| observables::slug(o)).collect();
    format!("{}_{}", c.kind.name(), obs.join("_"))
}

fn operators(c: &CorrelatorConfig, n_sites: usize) -> Result<Vec<Operator>, CliError> {
    c.observables.iter().map(|o| observables::parse(o, n_sites)).collect()
}

fn exact_series(
    c: &CorrelatorConfig,
    ops: &[Operator],
    state: &StateVector,
    d: &SpectralDecomposition,
    times: &[f64],
) -> Result<CorrelatorSeries, CliError> {
    Ok(match c.kind {
        CorrelatorKindConfig::OnePoint => one_point_series(state, d, &ops[0], times)?,
        CorrelatorKindConfig::TwoPoint => two_point_series(state, d, &ops[0], &ops[1], times, c.t2)?,
        CorrelatorKindConfig::Otoc => four_point_series(state, d, [&ops[0], &ops[1], &ops[0], &ops[1]], times)?,
        CorrelatorKindConfig::FourPoint => four_point_series(state, d, [&ops[0], &ops[1], &ops[2], &ops[3]], times)?,
        CorrelatorKindConfig::SquaredCommutator => squared_commutator_series(state, d, &ops[0], &ops[1], times)?,
    })
}

fn tag(s: CorrelatorSeries, h: HamiltonianTag, c: &CorrelatorConfig) -> CorrelatorSeries {
    s.with_tag(h).with_observables(c.observables.iter().cloned())
}

fn describe(table: Table, ctx: &Context, params_hash: &str, n_states: usize) -> Table {
    let s = &ctx.cfg.initial_state;
    let state = match s.kind {
        StateKind::H0Eigenstate => format!("h0_eigenstate({} base {})", s.index, s.index_base),
        StateKind::Neel => "neel".into(),
        StateKind::RandomProduct => format!("random_product(window {:?})", s.window),
    };
    table.meta("params_hash", params_hash).meta("initial_state", state).meta("n_states", n_states).meta("seed", ctx.seed)
}

pub fn simulate(ctx: &Context) -> Result<(), CliError> {
    let started = unix_now();
    let chain = load_chain(ctx, "simulate")?;
    let n = chain.params.n_sites;
    for o in &ctx.cfg.observables {
        observables::parse(o, n)?;
    }
    let times = ctx.cfg.time_grid.times();
    let states = initial_states(ctx, chain.d0(), n)?;
    let params_hash = ctx.model_hash();
    let mut out = Artifacts::new(&ctx.output_dir, ctx.emit_plot_data)?;
    for c in ctx.cfg.correlator_list() {
        let ops = operators(&c, n)?;
        let mut full = Vec::with_capacity(states.len());
        let mut zero = Vec::with_capacity(states.len());
        for psi in &states {
            full.push(exact_series(&c, &ops, psi, chain.full(), &times)?);
            zero.push(exact_series(&c, &ops, psi, chain.d0(), &times)?);
        }
        let name = stem(&c);
        let full = tag(CorrelatorSeries::average(&full)?, HamiltonianTag::Full, &c);
        let zero = tag(CorrelatorSeries::average(&zero)?, HamiltonianTag::Noninteracting, &c);
        out.write_table(&format!("{name}.csv"), &describe(series_table(&full), ctx, &params_hash, states.len()))?;
        out.write_table(&format!("{name}_h0.csv"), &describe(series_table(&zero), ctx, &params_hash, states.len()))?;
        log::info!("wrote {name}");
    }
    out.finish("simulate", &ctx.config_hash(), ctx.seed, started)?;
    Ok(())
}

/// Which decay kernel a prediction uses.
#[derive(Clone, Copy)]
enum Kernel<'a> {
    Unit,
    Source(OmegaSource<'a>),
}

impl Kernel<'_> {
    fn at(&self, t: f64) -> f64 {
        match self {
            Kernel::Unit => 1.0,
            Kernel::Source(s) => omega_of_t(s, t),
        }
    }

    fn on(&self, times: &[f64], shift: f64) -> Vec<f64> {
        times.iter().map(|t| self.at((t - shift).abs())).collect()
    }
}

/// Profile, fits, and the largest deviation of an overlap row norm from one.
fn fit_chain(ctx: &Context, chain: &Chain) -> Result<(ChaoticProfile, Vec<FitResult>, f64), CliError> {
    let lx = &ctx.cfg.lambda_extraction;
    let ov = overlap_matrix(chain.full(), chain.d0())?;
    let defect = ov.row_norm_defect();
    let profile = lambda_profile(&ov, lx.window_fraction, lx.n_bins)?;
    let fits = lx
        .fit_shapes
        .iter()
        .map(|&s| fit_profile_with(&profile, s, &lx.fit).map_err(|e| CliError::from(e).context(&format!("{} fit", s.name()))))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((profile, fits, defect))
}

fn rate_of(fits: &[FitResult], shape: Shape) -> Option<f64> {
    fits.iter().find(|f| f.shape == shape).map(|f| f.rate)
}

fn rms(a: &[f64], b: &[f64], times: &[f64], window: [f64; 2]) -> f64 {
    let (mut sum, mut n) = (0.0, 0usize);
    for k in 0..times.len() {
        if times[k] >= window[0] && times[k] <= window[1] {
            sum += (a[k] - b[k]).powi(2);
            n += 1;
        }
    }
    if n == 0 {
        f64::NAN
    } else {
        (sum / n as f64).sqrt()
    }
}

/// Exact series, prediction per kernel, and diagnostic constants for one state.
fn compare_one(
    c: &CorrelatorConfig,
    ops: &[Operator],
    psi: &StateVector,
    chain: &Chain,
    times: &[f64],
    kernels: &[Kernel<'_>; 2],
) -> Result<(CorrelatorSeries, CorrelatorSeries, [CorrelatorSeries; 2], Vec<f64>), CliError> {
    let (full, d0) = (chain.full(), chain.d0());
    let de = |a: &Operator| diagonal_ensemble_average(psi, full, a);
    match c.kind {
        CorrelatorKindConfig::OnePoint => {
            let c1 = de(&ops[0])?;
            let exact = exact_series(c, ops, psi, full, times)?;
            let reference = exact_series(c, ops, psi, d0, times)?;
            let p = |k: &Kernel| predict_one_point(&reference, &k.on(times, 0.0), c1);
            Ok((exact, reference.clone(), [p(&kernels[0])?, p(&kernels[1])?], vec![c1]))
        }
        CorrelatorKindConfig::TwoPoint => {
            let c1 = de(&ops[0])?;
            let a2 = one_point_series(psi, full, &ops[1], &[c.t2])?.values[0];
            let exact = exact_series(c, ops, psi, full, times)?;
            let reference = exact_series(c, ops, psi, d0, times)?;
            let p = |k: &Kernel| predict_two_point(&reference, &k.on(times, c.t2), c1, a2);
            Ok((exact, reference.clone(), [p(&kernels[0])?, p(&kernels[1])?], vec![c1, a2.re]))
        }
        CorrelatorKindConfig::Otoc | CorrelatorKindConfig::FourPoint => {
            // the four-point envelope holds for observables with zero diagonal-ensemble value
            let consts = ops.iter().map(de).collect::<Result<Vec<f64>, _>>()?;
            let shifted: Vec<Operator> = ops.iter().zip(&consts).map(|(a, &c)| a.shifted(c)).collect();
            let exact = exact_series(c, &shifted, psi, full, times)?;
            let reference = exact_series(c, &shifted, psi, d0, times)?;
            let norms: Vec<(f64, f64)> = shifted.iter().map(|a| (0.0, a.max_abs())).collect();
            let p = |k: &Kernel| predict_four_point(&reference, &k.on(times, 0.0), &norms);
            Ok((exact, reference.clone(), [p(&kernels[0])?, p(&kernels[1])?], consts))
        }
        CorrelatorKindConfig::SquaredCommutator => {
            let exact = exact_series(c, ops, psi, full, times)?;
            let r = SquaredCommutatorReference::build(psi, full, d0, &ops[0], &ops[1], times)?;
            let p = |k: &Kernel| predict_squared_commutator(&r.inputs(), &k.on(times, 0.0));
            let reference = CorrelatorSeries::new(times.to_vec(), r.otoc.values.clone(), r.otoc.kind)?;
            Ok((exact, reference, [p(&kernels[0])?, p(&kernels[1])?], vec![r.a1_de, r.a2_de]))
        }
    }
}

#[derive(Serialize)]
struct CorrelatorMetrics {
    name: String,
    kind: &'static str,
    observables: Vec<String>,
    rms_re_lorentzian: f64,
    rms_re_gaussian: f64,
    rms_im_lorentzian: f64,
    rms_im_gaussian: f64,
    rms_re_reference: f64,
    /// Diagonal-ensemble constants, averaged over initial states.
    de_constants: Vec<f64>,
}

pub fn compare(ctx: &Context) -> Result<(), CliError> {
    let started = unix_now();
    let chain = load_chain(ctx, "compare")?;
    let n = chain.params.n_sites;
    let times = ctx.cfg.time_grid.times();
    let (profile, fits, defect) = fit_chain(ctx, &chain)?;
    let kernels = if ctx.cfg.compare.unit_omega {
        [Kernel::Unit, Kernel::Unit]
    } else {
        let missing = |s: Shape| CliError::Usage(format!("compare needs a {} fit in lambda_extraction.fit_shapes", s.name()));
        let g = rate_of(&fits, Shape::Lorentzian).ok_or_else(|| missing(Shape::Lorentzian))?;
        let k = rate_of(&fits, Shape::Gaussian).ok_or_else(|| missing(Shape::Gaussian))?;
        [Kernel::Source(OmegaSource::Lorentzian(g)), Kernel::Source(OmegaSource::Gaussian(k))]
    };
    let states = initial_states(ctx, chain.d0(), n)?;
    let params_hash = ctx.model_hash();
    let window = ctx.cfg.compare.rms_window;
    let mut out = Artifacts::new(&ctx.output_dir, ctx.emit_plot_data)?;
    out.write_table("profile.csv", &profile_table(&profile).meta("params_hash", &params_hash))?;

    let mut metrics = Vec::new();
    for c in ctx.cfg.correlator_list() {
        let ops = operators(&c, n)?;
        let (mut ex, mut rf, mut pl, mut pg) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        let mut consts = Vec::new();
        for psi in &states {
            let (e, r, [l, g], k) = compare_one(&c, &ops, psi, &chain, &times, &kernels)?;
            ex.push(e);
            rf.push(r);
            pl.push(l);
            pg.push(g);
            consts.push(k);
        }
        let exact = tag(CorrelatorSeries::average(&ex)?, HamiltonianTag::Full, &c);
        let reference = CorrelatorSeries::average(&rf)?;
        let lor = tag(CorrelatorSeries::average(&pl)?, HamiltonianTag::Prediction, &c);
        let gau = tag(CorrelatorSeries::average(&pg)?, HamiltonianTag::Prediction, &c);
        let name = stem(&c);
        let table = describe(comparison_table(&exact, &lor, &gau)?, ctx, &params_hash, states.len());
        let table = match kernels {
            [Kernel::Source(a), Kernel::Source(b)] => table.meta("omega_lorentzian", a.label()).meta("omega_gaussian", b.label()),
            _ => table.meta("omega_lorentzian", "unit").meta("omega_gaussian", "unit"),
        };
        out.write_table(&format!("compare_{name}.csv"), &table)?;
        let n_const = consts[0].len();
        let de_constants = (0..n_const).map(|j| consts.iter().map(|v| v[j]).sum::<f64>() / consts.len() as f64).collect();
        metrics.push(CorrelatorMetrics {
            name,
            kind: c.kind.name(),
            observables: c.observables.clone(),
            rms_re_lorentzian: rms(&exact.re(), &lor.re(), &times, window),
            rms_re_gaussian: rms(&exact.re(), &gau.re(), &times, window),
            rms_im_lorentzian: rms(&exact.im(), &lor.im(), &times, window),
            rms_im_gaussian: rms(&exact.im(), &gau.im(), &times, window),
            rms_re_reference: rms(&exact.re(), &reference.re(), &times, window),
            de_constants,
        });
    }
    let report = json!({
        "params_hash": params_hash,
        "rms_window": window,
        "unit_omega": ctx.cfg.compare.unit_omega,
        "fits": fits,
        "row_norm_defect": defect,
        "n_states": states.len(),
        "correlators": metrics,
    });
    out.write_json("metrics.json", &report)?;
    out.finish("compare", &ctx.config_hash(), ctx.seed, started)?;
    Ok(())
}

pub fn fit_lambda(ctx: &Context) -> Result<(), CliError> {
    let started = unix_now();
    let mut out = Artifacts::new(&ctx.output_dir, ctx.emit_plot_data)?;
    let params_hash = ctx.model_hash();
    match &ctx.cfg.model {
        ModelConfig::Chain(_) => {
            let chain = load_chain(ctx, "fit-lambda")?;
            let (profile, fits, defect) = fit_chain(ctx, &chain)?;
            out.write_table("profile.csv", &profile_table(&profile).meta("params_hash", &params_hash))?;
            out.write_json("lambda_fit.json", &json!({ "params_hash": params_hash, "fits": fits, "row_norm_defect": defect }))?;
        }
        ModelConfig::Rmt(p) => {
            let r = &ctx.cfg.rmt;
            let opts = EnsembleOptions { window_fraction: r.window_fraction, n_bins: r.n_bins, ..EnsembleOptions::default() };
            let exp = ensemble_lambda_experiment(p, r.n_realizations, ctx.seed, &opts)?;
            out.write_table("profile.csv", &profile_table(&exp.profile).meta("params_hash", &params_hash))?;
            out.write_json(
                "lambda_fit.json",
                &json!({
                    "params_hash": params_hash,
                    "fits": [exp.fit],
                    "gamma_theory": exp.gamma_theory,
                    "perturbative": exp.perturbative,
                    "n_realizations": r.n_realizations,
                }),
            )?;
        }
    }
    out.finish("fit-lambda", &ctx.config_hash(), ctx.seed, started)?;
    Ok(())
}

#[derive(Serialize)]
struct Quantity {
    label: String,
    states: Vec<usize>,
    indices: Vec<usize>,
    theory: f64,
    mean: f64,
    stderr: Option<f64>,
    z: f64,
}

pub fn rmt_verify(ctx: &Context) -> Result<(), CliError> {
    let started = unix_now();
    let p = rmt_params(ctx, "rmt-verify")?;
    let r = &ctx.cfg.rmt;
    let opts = EnsembleOptions { window_fraction: r.window_fraction, n_bins: r.n_bins, ..EnsembleOptions::default() };
    let exp = ensemble_lambda_experiment(&p, r.n_realizations, ctx.seed, &opts)?;
    let ratio = exp.fit.rate / exp.gamma_theory;
    let gamma_ok = (ratio - 1.0).abs() <= r.gamma_tolerance;
    let stats = &exp.gamma_per_realization;
    let gamma = json!({
        "fit": exp.fit.rate,
        "theory": exp.gamma_theory,
        "ratio": ratio,
        "tolerance": r.gamma_tolerance,
        "per_realization_mean": stats.mean,
        "per_realization_stderr": stats.stderr,
        "z": stats.z_score(exp.gamma_theory),
        "passed": gamma_ok,
    });

    let mut mc_reports = Vec::new();
    let mut worst = 0.0f64;
    for (k, m) in r.monte_carlo.iter().enumerate() {
        let mp = m.params();
        let checks = appendix_checks(&mp, m.realizations, realization_seed(ctx.seed, 1_000_000 + k as u64), r.window_fraction)?;
        let summary = summarize(&checks);
        worst = summary.values().map(|s| s.1).fold(worst, f64::max);
        let quantities: Vec<Quantity> = checks
            .into_iter()
            .map(|c| Quantity {
                label: c.label,
                states: c.states,
                indices: c.indices,
                theory: c.formula,
                mean: c.monte_carlo.mean,
                stderr: c.monte_carlo.stderr,
                z: c.z,
            })
            .collect();
        mc_reports.push(json!({
            "parameters": mp,
            "gamma_over_omega": m.gamma_over_omega,
            "n_realizations": m.realizations,
            "max_abs_z": summary,
            "quantities": quantities,
        }));
    }
    let z_ok = worst <= r.z_threshold;
    let mut out = Artifacts::new(&ctx.output_dir, ctx.emit_plot_data)?;
    out.write_table("profile.csv", &profile_table(&exp.profile).meta("params_hash", ctx.model_hash()))?;
    out.write_json(
        "rmt_report.json",
        &json!({
            "parameters": p,
            "n_realizations": r.n_realizations,
            "perturbative": exp.perturbative,
            "gamma": gamma,
            "monte_carlo": mc_reports,
            "max_abs_z": worst,
            "z_threshold": r.z_threshold,
            "passed": gamma_ok && z_ok,
        }),
    )?;
    out.finish("rmt-verify", &ctx.config_hash(), ctx.seed, started)?;
    if !gamma_ok {
        return Err(CliError::Acceptance(format!(
            "fitted Γ = {:.5} is {:.1}% from πg²/(ωN) = {:.5}",
            exp.fit.rate,
            100.0 * (ratio - 1.0),
            exp.gamma_theory
        )));
    }
    if !z_ok {
        return Err(CliError::Acceptance(format!("Monte Carlo comparison has |z| = {worst:.2} > {}", r.z_threshold)));
    }
    Ok(())
}
