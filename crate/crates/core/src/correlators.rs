//! Exact correlation functions evaluated in the energy eigenbasis.
//!
//! With `b = V†ψ`, `Ã = V†AV` and `P(t) = diag(e^{−iE t})`, the Heisenberg
//! operator is `A(t) = P(t)† Ã P(t)`. Time points are processed in chunks: the
//! vectors for all times in a chunk form the columns of one block, so every
//! operator application is a single matrix–block product. Chunks are
//! independent and results are assembled in time order, so parallel and
//! sequential evaluation give identical series.

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::exec;
use crate::tensorops::{Dense, Operator, SpectralDecomposition, StateVector};
use crate::{Error, Result, C64};

const CHUNK: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelatorKind {
    OnePoint,
    TwoPoint,
    FourPoint,
    Otoc,
    SquaredCommutator,
}

impl CorrelatorKind {
    pub fn name(self) -> &'static str {
        match self {
            CorrelatorKind::OnePoint => "one_point",
            CorrelatorKind::TwoPoint => "two_point",
            CorrelatorKind::FourPoint => "four_point",
            CorrelatorKind::Otoc => "otoc",
            CorrelatorKind::SquaredCommutator => "squared_commutator",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HamiltonianTag {
    Full,
    Noninteracting,
    Prediction,
}

impl HamiltonianTag {
    pub fn name(self) -> &'static str {
        match self {
            HamiltonianTag::Full => "full",
            HamiltonianTag::Noninteracting => "noninteracting",
            HamiltonianTag::Prediction => "prediction",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorSeries {
    pub times: Vec<f64>,
    pub values: Vec<C64>,
    pub kind: CorrelatorKind,
    pub hamiltonian_tag: HamiltonianTag,
    pub observable_tags: Vec<String>,
}

impl CorrelatorSeries {
    pub fn new(times: Vec<f64>, values: Vec<C64>, kind: CorrelatorKind) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::arg(format!("{} times but {} values", times.len(), values.len())));
        }
        Ok(CorrelatorSeries { times, values, kind, hamiltonian_tag: HamiltonianTag::Full, observable_tags: Vec::new() })
    }

    pub fn with_tag(mut self, tag: HamiltonianTag) -> Self {
        self.hamiltonian_tag = tag;
        self
    }

    pub fn with_observables<S: Into<String>>(mut self, names: impl IntoIterator<Item = S>) -> Self {
        self.observable_tags = names.into_iter().map(Into::into).collect();
        self
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn re(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn im(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.im).collect()
    }

    /// Pointwise mean of series sharing one time grid and kind.
    pub fn average(series: &[CorrelatorSeries]) -> Result<CorrelatorSeries> {
        let first = series.first().ok_or_else(|| Error::arg("cannot average zero series"))?;
        if series.iter().any(|s| s.times != first.times || s.kind != first.kind) {
            return Err(Error::arg("averaged series must share time grid and kind"));
        }
        let n = series.len() as f64;
        let values = (0..first.len())
            .map(|k| series.iter().map(|s| s.values[k]).sum::<C64>() / n)
            .collect();
        Ok(CorrelatorSeries { values, ..first.clone() })
    }
}

/// An initial state expressed in an eigenbasis: `b_μ = ⟨ψ_μ|ψ⟩`.
#[derive(Clone, Debug)]
pub struct EigenFrame<'a> {
    decomp: &'a SpectralDecomposition,
    b: Vec<C64>,
}

/// An operator expressed in the eigenbasis of a frame, `Ã = V†AV`.
#[derive(Clone, Debug)]
pub struct FrameOperator {
    m: Dense,
    hermitian: bool,
}

impl FrameOperator {
    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &Dense {
        &self.m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.m.get(i, j)
    }

    /// `Ã − c·1`, the same shift as on the original operator.
    pub fn shifted(&self, c: f64) -> FrameOperator {
        let mut m = self.m.clone();
        m.shift_diagonal(-c);
        FrameOperator { m, hermitian: self.hermitian }
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }
}

impl<'a> EigenFrame<'a> {
    pub fn new(decomp: &'a SpectralDecomposition, state: &StateVector) -> Result<Self> {
        Ok(EigenFrame { decomp, b: decomp.coefficients(state)? })
    }

    /// Frame for `e^{−iHs}ψ`.
    pub fn evolved(&self, s: f64) -> EigenFrame<'a> {
        let b = self.b.iter().zip(self.energies()).map(|(c, &e)| c * C64::from_polar(1.0, -e * s)).collect();
        EigenFrame { decomp: self.decomp, b }
    }

    pub fn energies(&self) -> &[f64] {
        self.decomp.energies()
    }

    pub fn coefficients(&self) -> &[C64] {
        &self.b
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn rotate(&self, op: &Operator) -> Result<FrameOperator> {
        let hermitian = op.is_hermitian(1e-10 * op.max_abs().max(1.0));
        let m = self.decomp.to_eigenbasis(op)?.into_dense();
        Ok(FrameOperator { m, hermitian })
    }

    fn check(&self, ops: &[&FrameOperator]) -> Result<()> {
        for op in ops {
            if op.dim() != self.dim() {
                return Err(Error::arg(format!("operator dim {} does not match frame dim {}", op.dim(), self.dim())));
            }
        }
        Ok(())
    }

    /// `Σ_μ |b_μ|² Ã_μμ`.
    pub fn diagonal_average(&self, op: &FrameOperator) -> C64 {
        self.b.iter().enumerate().map(|(m, c)| op.get(m, m) * c.norm_sqr()).sum()
    }

    /// `Σ_μ |b_μ|² (Ã²)_μμ`.
    pub fn diagonal_average_of_square(&self, op: &FrameOperator) -> C64 {
        let n = self.dim();
        let rows = exec::map_indexed(n, |m| {
            let w = self.b[m].norm_sqr();
            if w == 0.0 {
                return C64::new(0.0, 0.0);
            }
            (0..n).map(|k| op.get(m, k) * op.get(k, m)).sum::<C64>() * w
        });
        rows.into_iter().sum()
    }

    /// `⟨ψ|A|ψ⟩`, time independent.
    pub fn static_expectation(&self, op: &FrameOperator) -> C64 {
        let ab = op.m.apply(&self.b);
        crate::tensorops::inner(&self.b, &ab)
    }

    /// `⟨A(t)⟩` for every time.
    pub fn one_point(&self, a: &FrameOperator, times: &[f64]) -> Result<Vec<C64>> {
        self.check(&[a])?;
        Ok(self.chunked(times, |ts| {
            let x = self.phased(&self.b, ts, -1.0);
            let y = a.m.apply_block(x.as_ref());
            column_dots(&x, &y)
        }))
    }

    /// `⟨A1(t) A2⟩` for every time.
    pub fn two_point(&self, a1: &FrameOperator, a2: &FrameOperator, times: &[f64]) -> Result<Vec<C64>> {
        self.check(&[a1, a2])?;
        let u = a2.m.apply(&self.b);
        Ok(self.chunked(times, |ts| {
            let x0 = self.phased(&self.b, ts, -1.0);
            let x = self.phased(&u, ts, -1.0);
            let y = a1.m.apply_block(x.as_ref());
            column_dots(&x0, &y)
        }))
    }

    /// `⟨A1(t) A2 A3(t) A4⟩` for every time.
    pub fn four_point(
        &self,
        a1: &FrameOperator,
        a2: &FrameOperator,
        a3: &FrameOperator,
        a4: &FrameOperator,
        times: &[f64],
    ) -> Result<Vec<C64>> {
        self.check(&[a1, a2, a3, a4])?;
        let u = a4.m.apply(&self.b);
        let e = self.energies();
        Ok(self.chunked(times, |ts| {
            let x1 = self.phased(&u, ts, -1.0);
            let mut y = a3.m.apply_block(x1.as_ref());
            apply_phases(&mut y, e, ts, 1.0);
            let mut y = a2.m.apply_block(y.as_ref());
            apply_phases(&mut y, e, ts, -1.0);
            let y = a1.m.apply_block(y.as_ref());
            let x0 = self.phased(&self.b, ts, -1.0);
            column_dots(&x0, &y)
        }))
    }

    /// The norms behind the squared commutator, for Hermitian `A1`, `A2`.
    pub fn squared_commutator_parts(&self, a1: &FrameOperator, a2: &FrameOperator, times: &[f64]) -> Result<Vec<CommutatorParts>> {
        self.check(&[a1, a2])?;
        if !(a1.hermitian && a2.hermitian) {
            return Err(Error::validation("squared commutator requires Hermitian observables"));
        }
        let u = a2.m.apply(&self.b);
        let e = self.energies();
        Ok(self.chunked(times, |ts| {
            // v1 = P A1 P u is A1(t) A2 ψ up to the unitary P†
            let v1 = a1.m.apply_block(self.phased(&u, ts, -1.0).as_ref());
            let mut z = a1.m.apply_block(self.phased(&self.b, ts, -1.0).as_ref());
            let s = column_norms(&z);
            apply_phases(&mut z, e, ts, 1.0);
            let v2 = a2.m.apply_block(z.as_ref());
            let mut v1 = v1;
            apply_phases(&mut v1, e, ts, 1.0);
            let d = column_norms(&v1);
            let i = column_norms(&v2);
            let f = column_dots(&v2, &v1);
            (0..ts.len()).map(|k| CommutatorParts { d: d[k], i: i[k], f: f[k], s: s[k] }).collect()
        }))
    }

    fn chunked<T: Send>(&self, times: &[f64], f: impl Fn(&[f64]) -> Vec<T> + Sync + Send) -> Vec<T> {
        let ranges = exec::chunks(times.len(), CHUNK);
        exec::map_indexed(ranges.len(), |c| f(&times[ranges[c].clone()])).into_iter().flatten().collect()
    }

    /// Block with columns `e^{sign·iE t_k} ∘ v`.
    fn phased(&self, v: &[C64], ts: &[f64], sign: f64) -> Mat<C64> {
        let e = self.energies();
        Mat::from_fn(v.len(), ts.len(), |i, k| v[i] * C64::from_polar(1.0, sign * e[i] * ts[k]))
    }
}

/// `D = ⟨A2 A1(t)² A2⟩`, `I = ⟨A1(t) A2² A1(t)⟩`, `F = ⟨A1(t) A2 A1(t) A2⟩`,
/// `S = ⟨A1(t)²⟩`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CommutatorParts {
    pub d: f64,
    pub i: f64,
    pub f: C64,
    pub s: f64,
}

impl CommutatorParts {
    pub fn squared_commutator(&self) -> f64 {
        self.d + self.i - 2.0 * self.f.re
    }
}

fn apply_phases(x: &mut Mat<C64>, e: &[f64], ts: &[f64], sign: f64) {
    for (k, &t) in ts.iter().enumerate() {
        for (i, &ei) in e.iter().enumerate() {
            x[(i, k)] *= C64::from_polar(1.0, sign * ei * t);
        }
    }
}

/// `x[:,k]† y[:,k]` for each column.
fn column_dots(x: &Mat<C64>, y: &Mat<C64>) -> Vec<C64> {
    (0..x.ncols()).map(|k| (0..x.nrows()).map(|i| x[(i, k)].conj() * y[(i, k)]).sum()).collect()
}

fn column_norms(x: &Mat<C64>) -> Vec<f64> {
    (0..x.ncols()).map(|k| (0..x.nrows()).map(|i| x[(i, k)].norm_sqr()).sum()).collect()
}

pub fn one_point_series(state: &StateVector, decomp: &SpectralDecomposition, a: &Operator, times: &[f64]) -> Result<CorrelatorSeries> {
    let frame = EigenFrame::new(decomp, state)?;
    let values = frame.one_point(&frame.rotate(a)?, times)?;
    CorrelatorSeries::new(times.to_vec(), values, CorrelatorKind::OnePoint)
}

/// `⟨A1(t_k) A2(t2)⟩`, via the shifted state `e^{−iH t2}ψ` and the lag `t_k − t2`.
pub fn two_point_series(
    state: &StateVector,
    decomp: &SpectralDecomposition,
    a1: &Operator,
    a2: &Operator,
    times: &[f64],
    t2: f64,
) -> Result<CorrelatorSeries> {
    let frame = EigenFrame::new(decomp, state)?.evolved(t2);
    let lags: Vec<f64> = times.iter().map(|t| t - t2).collect();
    let r1 = frame.rotate(a1)?;
    let values = if same_operator(a1, a2) {
        frame.two_point(&r1, &r1, &lags)?
    } else {
        frame.two_point(&r1, &frame.rotate(a2)?, &lags)?
    };
    CorrelatorSeries::new(times.to_vec(), values, CorrelatorKind::TwoPoint)
}

pub fn four_point_series(
    state: &StateVector,
    decomp: &SpectralDecomposition,
    ops: [&Operator; 4],
    times: &[f64],
) -> Result<CorrelatorSeries> {
    let frame = EigenFrame::new(decomp, state)?;
    // each rotation is two dense products, so repeated operators share one
    let mut r: Vec<FrameOperator> = Vec::with_capacity(4);
    let mut slot = [0usize; 4];
    for k in 0..4 {
        slot[k] = match (0..k).find(|&j| same_operator(ops[j], ops[k])) {
            Some(j) => slot[j],
            None => {
                r.push(frame.rotate(ops[k])?);
                r.len() - 1
            }
        };
    }
    let values = frame.four_point(&r[slot[0]], &r[slot[1]], &r[slot[2]], &r[slot[3]], times)?;
    let otoc = slot[0] == slot[2] && slot[1] == slot[3];
    let kind = if otoc { CorrelatorKind::Otoc } else { CorrelatorKind::FourPoint };
    CorrelatorSeries::new(times.to_vec(), values, kind)
}

fn same_operator(a: &Operator, b: &Operator) -> bool {
    std::ptr::eq(a, b) || (a.dim() == b.dim() && a.max_diff(b) == 0.0)
}

/// `C̃(t) = D(t) + I(t) − 2 Re F(t)`.
pub fn squared_commutator_series(
    state: &StateVector,
    decomp: &SpectralDecomposition,
    a1: &Operator,
    a2: &Operator,
    times: &[f64],
) -> Result<CorrelatorSeries> {
    let frame = EigenFrame::new(decomp, state)?;
    let parts = frame.squared_commutator_parts(&frame.rotate(a1)?, &frame.rotate(a2)?, times)?;
    let values = parts.iter().map(|p| C64::new(p.squared_commutator(), 0.0)).collect();
    CorrelatorSeries::new(times.to_vec(), values, CorrelatorKind::SquaredCommutator)
}

/// `Σ_μ |b_μ|² ⟨ψ_μ|A|ψ_μ⟩`.
pub fn diagonal_ensemble_average(state: &StateVector, decomp: &SpectralDecomposition, a: &Operator) -> Result<f64> {
    if a.dim() != decomp.dim() {
        return Err(Error::arg(format!("operator dim {} does not match decomposition dim {}", a.dim(), decomp.dim())));
    }
    let b = decomp.coefficients(state)?;
    let v = decomp.vectors();
    let av = a.dense().matmul(v);
    let n = decomp.dim();
    let diag = exec::map_indexed(n, |m| (0..n).map(|i| v.get(i, m).conj() * av.get(i, m)).sum::<C64>());
    let total: C64 = diag.iter().zip(&b).map(|(d, c)| d * c.norm_sqr()).sum();
    Ok(total.re)
}
