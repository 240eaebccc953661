//! Analytic envelopes: correlators as polynomials in the decay kernel `Ω(t)`.
//!
//! Every prediction takes the non-interacting reference series `⟨·⟩_{H₀}`
//! on some time grid, the kernel `Ω` on the same grid, and a handful of
//! diagonal-ensemble constants. Nothing here touches the full dynamics.

use crate::chaoswf::{omega_of_t, OmegaSource};
use crate::correlators::{CorrelatorKind, CorrelatorSeries, EigenFrame, HamiltonianTag};
use crate::tensorops::{expectation, Operator, SpectralDecomposition, StateVector};
use crate::{Error, Result, C64};

fn check_grid(reference: &CorrelatorSeries, omega: &[f64]) -> Result<()> {
    if reference.len() != omega.len() {
        return Err(Error::arg(format!(
            "reference has {} points but Ω has {}",
            reference.len(),
            omega.len()
        )));
    }
    Ok(())
}

fn prediction(reference: &CorrelatorSeries, values: Vec<C64>, kind: CorrelatorKind) -> CorrelatorSeries {
    CorrelatorSeries {
        times: reference.times.clone(),
        values,
        kind,
        hamiltonian_tag: HamiltonianTag::Prediction,
        observable_tags: reference.observable_tags.clone(),
    }
}

/// `(ref(t) − c)Ω²(t) + c`: the one-point form with `c = (A₁)_DE` and the
/// two-point form with `c = (A₁)_DE⟨A₂(0)⟩`.
fn relax_towards(reference: &CorrelatorSeries, omega: &[f64], c: C64, kind: CorrelatorKind) -> Result<CorrelatorSeries> {
    check_grid(reference, omega)?;
    let values = reference.values.iter().zip(omega).map(|(r, w)| r + (r - c) * (w * w - 1.0)).collect();
    Ok(prediction(reference, values, kind))
}

/// `⟨A₁(t)⟩ = (⟨A₁(t)⟩_{H₀} − (A₁)_DE)Ω²(t) + (A₁)_DE`.
pub fn predict_one_point(reference: &CorrelatorSeries, omega: &[f64], a1_de: f64) -> Result<CorrelatorSeries> {
    relax_towards(reference, omega, C64::new(a1_de, 0.0), CorrelatorKind::OnePoint)
}

/// `⟨A₁(t)A₂(0)⟩ = (ref(t) − (A₁)_DE⟨A₂(0)⟩)Ω²(t) + (A₁)_DE⟨A₂(0)⟩`.
///
/// The constant is real for Hermitian observables, so the imaginary part is
/// the reference's imaginary part times `Ω²`.
pub fn predict_two_point(reference: &CorrelatorSeries, omega: &[f64], a1_de: f64, a2_initial: C64) -> Result<CorrelatorSeries> {
    relax_towards(reference, omega, a2_initial * a1_de, CorrelatorKind::TwoPoint)
}

/// `⟨A₁(t₁)A₂(t₂)⟩` with `Ω` evaluated at `|t₁ − t₂|`.
///
/// `reference` is the non-interacting series from the shifted state
/// `e^{−iHt₂}ψ` on the grid of `t₁` values, and `a2_at_t2 = ⟨A₂(t₂)⟩`.
pub fn predict_two_time(
    reference: &CorrelatorSeries,
    source: &OmegaSource<'_>,
    t2: f64,
    a1_de: f64,
    a2_at_t2: C64,
) -> Result<CorrelatorSeries> {
    let omega: Vec<f64> = reference.times.iter().map(|t| omega_of_t(source, (t - t2).abs())).collect();
    predict_two_point(reference, &omega, a1_de, a2_at_t2)
}

/// Relative size of a diagonal-ensemble average above which an observable
/// does not count as shifted.
pub const ZERO_DE_TOLERANCE: f64 = 1e-8;

/// `⟨A₁(t)A₂A₃(t)A₄⟩ = ⟨…⟩_{H₀} Ω⁴(t)` for observables with zero
/// diagonal-ensemble average.
///
/// `observables` lists `((A)_DE, ‖A‖)` for each of the four operators.
pub fn predict_four_point(reference: &CorrelatorSeries, omega: &[f64], observables: &[(f64, f64)]) -> Result<CorrelatorSeries> {
    check_grid(reference, omega)?;
    for (k, &(de, norm)) in observables.iter().enumerate() {
        if de.abs() > ZERO_DE_TOLERANCE * norm {
            return Err(Error::validation(format!(
                "observable {} has diagonal-ensemble average {de:e}; shift it to A - (A)_DE first",
                k + 1
            )));
        }
    }
    let values = reference.values.iter().zip(omega).map(|(r, w)| r * w.powi(4)).collect();
    Ok(prediction(reference, values, reference.kind))
}

/// Reference series and constants for the squared commutator of shifted
/// observables `A⁰ = A − (A)_DE`. All series are `⟨·⟩_{H₀}` on one grid.
#[derive(Clone, Debug)]
pub struct SquaredCommutatorInputs<'a> {
    /// `⟨A₁⁰(t) A₂⁰ A₁⁰(t) A₂⁰⟩_{H₀}`
    pub otoc: &'a CorrelatorSeries,
    /// `⟨A₁⁰(t) (A₂⁰)² A₁⁰(t)⟩_{H₀}`
    pub inner_square: &'a CorrelatorSeries,
    /// `⟨A₂⁰ (A₁⁰(t))² A₂⁰⟩_{H₀}`
    pub outer_square: &'a CorrelatorSeries,
    /// `⟨(A₁⁰(t))²⟩_{H₀}`
    pub a1_square: &'a CorrelatorSeries,
    /// `((A₁⁰)²)_DE`
    pub a1_square_de: f64,
    /// `((A₂⁰)²)_DE`
    pub a2_square_de: f64,
    /// `⟨(A₂⁰)²⟩` in the initial state
    pub a2_square_initial: f64,
}

/// Coefficients of `C̃(t) = c₄(t)Ω⁴ + c₂(t)Ω² + c₀`.
#[derive(Clone, Debug, PartialEq)]
pub struct CommutatorPolynomial {
    pub quartic: Vec<f64>,
    pub quadratic: Vec<f64>,
    pub constant: f64,
}

impl SquaredCommutatorInputs<'_> {
    /// The `(A₂⁰)²` inside `A₁⁰(t)(A₂⁰)²A₁⁰(t)` splits into its diagonal-ensemble
    /// value and a zero-average remainder; only the remainder decays as `Ω⁴`,
    /// which is what makes the polynomial equal the exact value at `t = 0`.
    pub fn polynomial(&self) -> Result<CommutatorPolynomial> {
        let n = self.otoc.len();
        for s in [self.inner_square, self.outer_square, self.a1_square] {
            if s.len() != n || s.times != self.otoc.times {
                return Err(Error::arg("squared-commutator reference series must share one time grid"));
            }
        }
        let (a1, a2, a2i) = (self.a1_square_de, self.a2_square_de, self.a2_square_initial);
        let mut quartic = Vec::with_capacity(n);
        let mut quadratic = Vec::with_capacity(n);
        for k in 0..n {
            let f = self.otoc.values[k].re;
            let i = self.inner_square.values[k].re;
            let d = self.outer_square.values[k].re;
            let s = self.a1_square.values[k].re;
            quartic.push(-2.0 * f + i - s * a2);
            quadratic.push(d + s * a2 - a1 * a2i - a1 * a2);
        }
        Ok(CommutatorPolynomial { quartic, quadratic, constant: a1 * a2i + a1 * a2 })
    }
}

/// Owned reference data for [`SquaredCommutatorInputs`], with both observables
/// shifted by their diagonal-ensemble values under the full Hamiltonian.
#[derive(Clone, Debug, PartialEq)]
pub struct SquaredCommutatorReference {
    pub otoc: CorrelatorSeries,
    pub inner_square: CorrelatorSeries,
    pub outer_square: CorrelatorSeries,
    pub a1_square: CorrelatorSeries,
    pub a1_de: f64,
    pub a2_de: f64,
    pub a1_square_de: f64,
    pub a2_square_de: f64,
    pub a2_square_initial: f64,
}

impl SquaredCommutatorReference {
    pub fn build(
        state: &StateVector,
        full: &SpectralDecomposition,
        zero: &SpectralDecomposition,
        a1: &Operator,
        a2: &Operator,
        times: &[f64],
    ) -> Result<Self> {
        let f = EigenFrame::new(full, state)?;
        let (r1, r2) = (f.rotate(a1)?, f.rotate(a2)?);
        let (a1_de, a2_de) = (f.diagonal_average(&r1).re, f.diagonal_average(&r2).re);
        let a1_square_de = f.diagonal_average_of_square(&r1.shifted(a1_de)).re;
        let a2_square_de = f.diagonal_average_of_square(&r2.shifted(a2_de)).re;
        let (s1, s2) = (a1.shifted(a1_de), a2.shifted(a2_de));
        let a2_square_initial = expectation(state, &(&s2 * &s2))?.re;

        let z = EigenFrame::new(zero, state)?;
        let parts = z.squared_commutator_parts(&z.rotate(&s1)?, &z.rotate(&s2)?, times)?;
        let mk = |v: Vec<C64>| -> Result<CorrelatorSeries> {
            Ok(CorrelatorSeries::new(times.to_vec(), v, CorrelatorKind::FourPoint)?.with_tag(HamiltonianTag::Noninteracting))
        };
        Ok(SquaredCommutatorReference {
            otoc: mk(parts.iter().map(|p| p.f).collect())?,
            inner_square: mk(parts.iter().map(|p| C64::new(p.i, 0.0)).collect())?,
            outer_square: mk(parts.iter().map(|p| C64::new(p.d, 0.0)).collect())?,
            a1_square: mk(parts.iter().map(|p| C64::new(p.s, 0.0)).collect())?,
            a1_de,
            a2_de,
            a1_square_de,
            a2_square_de,
            a2_square_initial,
        })
    }

    pub fn inputs(&self) -> SquaredCommutatorInputs<'_> {
        SquaredCommutatorInputs {
            otoc: &self.otoc,
            inner_square: &self.inner_square,
            outer_square: &self.outer_square,
            a1_square: &self.a1_square,
            a1_square_de: self.a1_square_de,
            a2_square_de: self.a2_square_de,
            a2_square_initial: self.a2_square_initial,
        }
    }
}

pub fn predict_squared_commutator(inputs: &SquaredCommutatorInputs<'_>, omega: &[f64]) -> Result<CorrelatorSeries> {
    check_grid(inputs.otoc, omega)?;
    let p = inputs.polynomial()?;
    let values = omega
        .iter()
        .enumerate()
        .map(|(k, w)| {
            let w2 = w * w;
            C64::new(p.quartic[k] * w2 * w2 + p.quadratic[k] * w2 + p.constant, 0.0)
        })
        .collect();
    Ok(prediction(inputs.otoc, values, CorrelatorKind::SquaredCommutator))
}

/// Which power of `Ω` an envelope is expected to follow.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RateModel {
    /// `d/dt log Ωⁿ = −nΓ`
    Lorentzian { gamma: f64, n: u32 },
    /// `d/dt log Ωⁿ = −2nKt`
    Gaussian { k: f64, n: u32 },
}

/// Largest deviation of the central-difference log-derivative of
/// `|values − constant|` from the regression law, over interior grid points.
pub fn regression_residual(series: &CorrelatorSeries, constant: C64, model: RateModel) -> Result<f64> {
    let t = &series.times;
    if t.len() < 3 {
        return Err(Error::arg("regression residual needs at least three grid points"));
    }
    let env: Vec<f64> = series.values.iter().map(|v| (v - constant).re).collect();
    // below this the envelope is rounding noise on the constant
    let scale = series.values.iter().map(|v| v.norm()).fold(constant.norm(), f64::max);
    let floor = 1e-6 * scale;
    let resolved: Vec<bool> = env.iter().map(|e| e.abs() > floor).collect();
    let Some(first) = resolved.iter().position(|&r| r) else {
        return Err(Error::Domain("envelope vanishes on the whole grid".into()));
    };
    let sign = env[first].signum();
    let mut bad: Option<(f64, f64)> = None;
    for k in 0..env.len() {
        if resolved[k] && env[k] * sign < 0.0 {
            bad = Some(match bad {
                None => (t[k], t[k]),
                Some((a, _)) => (a, t[k]),
            });
        }
    }
    if let Some((a, b)) = bad {
        return Err(Error::Domain(format!("envelope is not of one sign on t in [{a}, {b}]")));
    }
    let mut worst = 0.0f64;
    for k in 1..env.len() - 1 {
        if !(resolved[k - 1] && resolved[k + 1]) {
            continue;
        }
        let slope = ((env[k + 1] * sign).ln() - (env[k - 1] * sign).ln()) / (t[k + 1] - t[k - 1]);
        let law = match model {
            RateModel::Lorentzian { gamma, n } => -(n as f64) * gamma * t[k].signum(),
            RateModel::Gaussian { k: kk, n } => -2.0 * n as f64 * kk * t[k],
        };
        worst = worst.max((slope - law).abs());
    }
    Ok(worst)
}
