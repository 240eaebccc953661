//! Dense operator algebra on spin-chain and random-matrix Hilbert spaces.
//!
//! Basis ordering: site 1 is the most significant bit of the basis index, and
//! a bit value of 0 is spin up. With `n` sites, basis index `b` has the spin of
//! site `k` stored in bit `n - k` of `b`.
//!
//! Matrices whose entries are all real are stored as real matrices. The spin
//! chain and the Deutsch model are real symmetric, and keeping them real
//! halves memory and quarters the cost of the dense products at dimension
//! 4096. Mixed products promote to complex.

use std::ops::{Add, Mul, Sub};

use faer::{Mat, MatRef, Side};

use crate::{Error, Result, C64};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Dense square-or-rectangular matrix with real or complex storage.
#[derive(Clone, Debug, PartialEq)]
pub enum Dense {
    Real(Mat<f64>),
    Complex(Mat<C64>),
}

impl Dense {
    pub fn nrows(&self) -> usize {
        match self {
            Dense::Real(m) => m.nrows(),
            Dense::Complex(m) => m.nrows(),
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            Dense::Real(m) => m.ncols(),
            Dense::Complex(m) => m.ncols(),
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        match self {
            Dense::Real(m) => C64::new(m[(i, j)], 0.0),
            Dense::Complex(m) => m[(i, j)],
        }
    }

    pub fn is_real(&self) -> bool {
        matches!(self, Dense::Real(_))
    }

    pub fn to_complex(&self) -> Mat<C64> {
        match self {
            Dense::Real(m) => Mat::from_fn(m.nrows(), m.ncols(), |i, j| C64::new(m[(i, j)], 0.0)),
            Dense::Complex(m) => m.clone(),
        }
    }

    /// Drops the imaginary part when it is exactly zero everywhere.
    pub fn compact(self) -> Dense {
        match self {
            Dense::Complex(m) => {
                let all_real = (0..m.ncols()).all(|j| (0..m.nrows()).all(|i| m[(i, j)].im == 0.0));
                if all_real {
                    Dense::Real(Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)].re))
                } else {
                    Dense::Complex(m)
                }
            }
            real => real,
        }
    }

    pub fn max_abs(&self) -> f64 {
        match self {
            Dense::Real(m) => fold_max(m.nrows(), m.ncols(), |i, j| m[(i, j)].abs()),
            Dense::Complex(m) => fold_max(m.nrows(), m.ncols(), |i, j| m[(i, j)].norm()),
        }
    }

    pub fn adjoint(&self) -> Dense {
        match self {
            Dense::Real(m) => Dense::Real(m.transpose().to_owned()),
            Dense::Complex(m) => Dense::Complex(m.adjoint().to_owned()),
        }
    }

    pub fn matmul(&self, rhs: &Dense) -> Dense {
        assert_eq!(self.ncols(), rhs.nrows(), "inner dimensions differ");
        match (self, rhs) {
            (Dense::Real(a), Dense::Real(b)) => Dense::Real(a * b),
            (Dense::Complex(a), Dense::Complex(b)) => Dense::Complex(a * b),
            (Dense::Real(a), Dense::Complex(b)) => Dense::Complex(real_times_complex(a.as_ref(), b.as_ref())),
            (Dense::Complex(a), Dense::Real(b)) => {
                // (B^T A^T)^T keeps the real factor on the left.
                let at = a.transpose().to_owned();
                let bt = b.transpose().to_owned();
                Dense::Complex(real_times_complex(bt.as_ref(), at.as_ref()).transpose().to_owned())
            }
        }
    }

    /// Product of this matrix with a block of complex column vectors.
    pub fn apply_block(&self, x: MatRef<'_, C64>) -> Mat<C64> {
        match self {
            Dense::Real(a) => real_times_complex(a.as_ref(), x),
            Dense::Complex(a) => a * x,
        }
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        let x = MatRef::from_column_major_slice(v, v.len(), 1);
        let y = self.apply_block(x);
        (0..y.nrows()).map(|i| y[(i, 0)]).collect()
    }

    fn zip_with(&self, rhs: &Dense, re: impl Fn(f64, f64) -> f64, cx: impl Fn(C64, C64) -> C64) -> Dense {
        assert_eq!((self.nrows(), self.ncols()), (rhs.nrows(), rhs.ncols()), "shapes differ");
        match (self, rhs) {
            (Dense::Real(a), Dense::Real(b)) => Dense::Real(Mat::from_fn(a.nrows(), a.ncols(), |i, j| re(a[(i, j)], b[(i, j)]))),
            _ => Dense::Complex(Mat::from_fn(self.nrows(), self.ncols(), |i, j| cx(self.get(i, j), rhs.get(i, j)))),
        }
    }

    pub fn scaled(&self, s: f64) -> Dense {
        match self {
            Dense::Real(m) => Dense::Real(Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * s)),
            Dense::Complex(m) => Dense::Complex(Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * s)),
        }
    }

    /// Adds `shift` to every diagonal element.
    pub fn shift_diagonal(&mut self, shift: f64) {
        let n = self.nrows().min(self.ncols());
        match self {
            Dense::Real(m) => (0..n).for_each(|i| m[(i, i)] += shift),
            Dense::Complex(m) => (0..n).for_each(|i| m[(i, i)] += shift),
        }
    }
}

fn fold_max(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> f64 {
    let mut best = 0.0f64;
    for j in 0..cols {
        for i in 0..rows {
            best = best.max(f(i, j));
        }
    }
    best
}

/// Real matrix times complex block, done as one real product on `[Re X | Im X]`.
pub(crate) fn real_times_complex(a: MatRef<'_, f64>, x: MatRef<'_, C64>) -> Mat<C64> {
    let (n, m) = (x.nrows(), x.ncols());
    let split = Mat::<f64>::from_fn(n, 2 * m, |i, j| if j < m { x[(i, j)].re } else { x[(i, j - m)].im });
    let y = a * &split;
    Mat::from_fn(a.nrows(), m, |i, j| C64::new(y[(i, j)], y[(i, j + m)]))
}

/// A dense square operator. Energies are in units where ħ = 1.
#[derive(Clone, Debug)]
pub struct Operator {
    m: Dense,
}

impl Operator {
    pub fn from_dense(m: Dense) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::arg(format!("operator must be square and non-empty, got {}x{}", m.nrows(), m.ncols())));
        }
        Ok(Operator { m })
    }

    pub fn from_real(m: Mat<f64>) -> Result<Self> {
        Self::from_dense(Dense::Real(m))
    }

    pub fn from_complex(m: Mat<C64>) -> Result<Self> {
        Self::from_dense(Dense::Complex(m))
    }

    /// Builds a complex operator element by element.
    pub fn from_fn(dim: usize, f: impl Fn(usize, usize) -> C64) -> Self {
        Operator { m: Dense::Complex(Mat::from_fn(dim, dim, f)).compact() }
    }

    pub fn from_real_fn(dim: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        Operator { m: Dense::Real(Mat::from_fn(dim, dim, f)) }
    }

    pub fn zeros(dim: usize) -> Self {
        Operator { m: Dense::Real(Mat::zeros(dim, dim)) }
    }

    pub fn identity(dim: usize) -> Self {
        Operator { m: Dense::Real(Mat::identity(dim, dim)) }
    }

    pub fn diagonal(values: &[f64]) -> Self {
        Self::from_real_fn(values.len(), |i, j| if i == j { values[i] } else { 0.0 })
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.m.get(i, j)
    }

    pub fn dense(&self) -> &Dense {
        &self.m
    }

    pub fn into_dense(self) -> Dense {
        self.m
    }

    pub fn is_real(&self) -> bool {
        self.m.is_real()
    }

    pub fn max_abs(&self) -> f64 {
        self.m.max_abs()
    }

    /// `max |M - M†|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for j in 0..n {
            for i in 0..=j {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    pub fn adjoint(&self) -> Operator {
        Operator { m: self.m.adjoint() }
    }

    pub fn scale(&self, s: f64) -> Operator {
        Operator { m: self.m.scaled(s) }
    }

    /// `self - shift · 1`.
    pub fn shifted(&self, shift: f64) -> Operator {
        let mut m = self.m.clone();
        m.shift_diagonal(-shift);
        Operator { m }
    }

    pub fn commutator(&self, other: &Operator) -> Operator {
        &(self * other) - &(other * self)
    }

    /// Largest elementwise distance to `other`.
    pub fn max_diff(&self, other: &Operator) -> f64 {
        assert_eq!(self.dim(), other.dim());
        let n = self.dim();
        fold_max(n, n, |i, j| (self.get(i, j) - other.get(i, j)).norm())
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim()).map(|i| self.get(i, i)).sum()
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        self.m.apply(v)
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        Operator { m: self.m.zip_with(&rhs.m, |a, b| a + b, |a, b| a + b) }
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        Operator { m: self.m.zip_with(&rhs.m, |a, b| a - b, |a, b| a - b) }
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        Operator { m: self.m.matmul(&rhs.m) }
    }
}

pub fn pauli_x() -> Operator {
    Operator::from_real_fn(2, |i, j| if i != j { 1.0 } else { 0.0 })
}

pub fn pauli_y() -> Operator {
    Operator::from_fn(2, |i, j| match (i, j) {
        (0, 1) => C64::new(0.0, -1.0),
        (1, 0) => C64::new(0.0, 1.0),
        _ => ZERO,
    })
}

pub fn pauli_z() -> Operator {
    Operator::diagonal(&[1.0, -1.0])
}

/// `σ⁺ = (σx + iσy)/2 = |↑⟩⟨↓|`.
pub fn sigma_plus() -> Operator {
    Operator::from_real_fn(2, |i, j| if (i, j) == (0, 1) { 1.0 } else { 0.0 })
}

/// `σ⁻ = |↓⟩⟨↑|`.
pub fn sigma_minus() -> Operator {
    Operator::from_real_fn(2, |i, j| if (i, j) == (1, 0) { 1.0 } else { 0.0 })
}

/// `|↑⟩⟨↑|`.
pub fn projector_up() -> Operator {
    Operator::diagonal(&[1.0, 0.0])
}

/// Tensor product with `base` at `site` (1-based) and identity elsewhere.
pub fn embed_site_operator(base: &Operator, site: usize, n_sites: usize) -> Result<Operator> {
    embed_product(&[(base, site)], n_sites)
}

/// Tensor product of single-site operators on distinct sites, identity on the
/// remaining sites. Built directly in the product basis without forming
/// intermediate Kronecker products.
pub fn embed_product(factors: &[(&Operator, usize)], n_sites: usize) -> Result<Operator> {
    if n_sites == 0 || n_sites > 30 {
        return Err(Error::arg(format!("n_sites must be in 1..=30, got {n_sites}")));
    }
    for (k, (base, site)) in factors.iter().enumerate() {
        if base.dim() != 2 {
            return Err(Error::arg(format!("site operator must be 2x2, got {}x{}", base.dim(), base.dim())));
        }
        if *site < 1 || *site > n_sites {
            return Err(Error::arg(format!("site {site} outside 1..={n_sites}")));
        }
        if factors[..k].iter().any(|(_, s)| s == site) {
            return Err(Error::arg(format!("site {site} appears twice in product")));
        }
    }
    let dim = 1usize << n_sites;
    let all_real = factors.iter().all(|(b, _)| b.is_real());
    let mut out = if all_real {
        Dense::Real(Mat::zeros(dim, dim))
    } else {
        Dense::Complex(Mat::zeros(dim, dim))
    };
    accumulate_product(&mut out, factors, n_sites, 1.0);
    Ok(Operator { m: out })
}

/// `out += coeff · ⊗ factors`, enumerating only the nonzero pattern.
pub(crate) fn accumulate_product(out: &mut Dense, factors: &[(&Operator, usize)], n_sites: usize, coeff: f64) {
    let dim = 1usize << n_sites;
    let shifts: Vec<usize> = factors.iter().map(|(_, s)| n_sites - s).collect();
    let support_mask: usize = shifts.iter().map(|s| 1usize << s).sum();
    let k = factors.len();
    for row in 0..dim {
        let rest = row & !support_mask;
        for pattern in 0..(1usize << k) {
            let mut col = rest;
            let mut value = C64::new(coeff, 0.0);
            for (f, ((base, _), shift)) in factors.iter().zip(&shifts).enumerate() {
                let bit_out = (row >> shift) & 1;
                let bit_in = (pattern >> f) & 1;
                col |= bit_in << shift;
                value *= base.get(bit_out, bit_in);
            }
            if value == ZERO {
                continue;
            }
            match out {
                Dense::Real(m) => m[(row, col)] += value.re,
                Dense::Complex(m) => m[(row, col)] += value,
            }
        }
    }
}

/// Eigenvalues in ascending order with orthonormal eigenvectors as columns.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    energies: Vec<f64>,
    vectors: Dense,
}

impl SpectralDecomposition {
    /// Assembles a decomposition from stored parts, checking shapes and order.
    pub fn from_parts(energies: Vec<f64>, vectors: Dense) -> Result<Self> {
        let n = energies.len();
        if vectors.nrows() != n || vectors.ncols() != n {
            return Err(Error::arg("eigenvector matrix does not match the number of energies"));
        }
        if energies.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::validation("energies are not sorted ascending"));
        }
        Ok(SpectralDecomposition { energies, vectors })
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn vectors(&self) -> &Dense {
        &self.vectors
    }

    /// Column `k` as a state vector.
    pub fn eigenvector(&self, k: usize) -> Vec<C64> {
        (0..self.dim()).map(|i| self.vectors.get(i, k)).collect()
    }

    /// `V† A V`, the operator expressed in this eigenbasis.
    pub fn to_eigenbasis(&self, op: &Operator) -> Result<Operator> {
        self.check_dim(op.dim())?;
        let av = op.m.matmul(&self.vectors);
        Ok(Operator { m: self.vectors.adjoint().matmul(&av) })
    }

    /// `V A V†`, back from eigenbasis to the original basis.
    pub fn from_eigenbasis(&self, op: &Operator) -> Result<Operator> {
        self.check_dim(op.dim())?;
        let av = op.m.matmul(&self.vectors.adjoint());
        Ok(Operator { m: self.vectors.matmul(&av) })
    }

    /// `b = V† ψ`.
    pub fn coefficients(&self, state: &StateVector) -> Result<Vec<C64>> {
        self.check_dim(state.dim())?;
        Ok(self.vectors.adjoint().apply(state.amplitudes()))
    }

    /// `ψ = V b`.
    pub fn synthesize(&self, coefficients: &[C64]) -> Result<StateVector> {
        self.check_dim(coefficients.len())?;
        StateVector::new(self.vectors.apply(coefficients))
    }

    pub fn reconstruct(&self) -> Operator {
        let scaled = match &self.vectors {
            Dense::Real(v) => Dense::Real(Mat::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)] * self.energies[j])),
            Dense::Complex(v) => Dense::Complex(Mat::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)] * self.energies[j])),
        };
        Operator { m: scaled.matmul(&self.vectors.adjoint()) }
    }

    /// `max |V†V - 1|`.
    pub fn unitarity_defect(&self) -> f64 {
        let g = self.vectors.adjoint().matmul(&self.vectors);
        let n = self.dim();
        fold_max(n, n, |i, j| (g.get(i, j) - if i == j { ONE } else { ZERO }).norm())
    }

    pub(crate) fn check_dim(&self, dim: usize) -> Result<()> {
        if dim != self.dim() {
            return Err(Error::arg(format!("dimension mismatch: decomposition has {}, got {dim}", self.dim())));
        }
        Ok(())
    }
}

const HERMITIAN_TOL: f64 = 1e-10;

/// Full eigendecomposition of a Hermitian operator.
///
/// Output is a pure function of the input: each eigenvector is scaled so its
/// largest-magnitude component is real and positive, and eigenvectors inside a
/// numerically degenerate cluster are ordered lexicographically.
pub fn hermitian_eigendecomposition(op: &Operator) -> Result<SpectralDecomposition> {
    let scale = op.max_abs().max(1.0);
    let defect = op.hermiticity_defect();
    if defect > HERMITIAN_TOL * scale {
        return Err(Error::validation(format!("operator is not Hermitian: max|M - M†| = {defect:e}")));
    }
    let (energies, mut vectors) = match &op.m {
        Dense::Real(m) => {
            let evd = m
                .self_adjoint_eigen(Side::Lower)
                .map_err(|e| Error::Numeric(format!("symmetric eigensolver failed on {}x{} input: {e:?}", m.nrows(), m.ncols())))?;
            let s = evd.S().column_vector();
            let e: Vec<f64> = (0..m.nrows()).map(|i| s[i]).collect();
            (e, Dense::Real(evd.U().to_owned()))
        }
        Dense::Complex(m) => {
            let evd = m
                .self_adjoint_eigen(Side::Lower)
                .map_err(|e| Error::Numeric(format!("Hermitian eigensolver failed on {}x{} input: {e:?}", m.nrows(), m.ncols())))?;
            let s = evd.S().column_vector();
            let e: Vec<f64> = (0..m.nrows()).map(|i| s[i].re).collect();
            (e, Dense::Complex(evd.U().to_owned()))
        }
    };
    if energies.iter().any(|e| !e.is_finite()) {
        return Err(Error::Numeric("eigensolver produced non-finite eigenvalues".into()));
    }
    fix_phases(&mut vectors);
    let order = canonical_order(&energies, &vectors, scale);
    let energies: Vec<f64> = order.iter().map(|&k| energies[k]).collect();
    let vectors = permute_columns(&vectors, &order);
    Ok(SpectralDecomposition { energies, vectors })
}

fn fix_phases(vectors: &mut Dense) {
    let n = vectors.nrows();
    for j in 0..vectors.ncols() {
        let peak = (0..n).map(|i| vectors.get(i, j).norm()).fold(0.0, f64::max);
        let Some(pivot) = (0..n).find(|&i| vectors.get(i, j).norm() >= peak * (1.0 - 1e-9)) else {
            continue;
        };
        match vectors {
            Dense::Real(v) => {
                if v[(pivot, j)] < 0.0 {
                    (0..n).for_each(|i| v[(i, j)] = -v[(i, j)]);
                }
            }
            Dense::Complex(v) => {
                let p = v[(pivot, j)];
                let phase = p.conj() / p.norm();
                (0..n).for_each(|i| v[(i, j)] *= phase);
                v[(pivot, j)] = C64::new(v[(pivot, j)].re, 0.0);
            }
        }
    }
}

fn canonical_order(energies: &[f64], vectors: &Dense, scale: f64) -> Vec<usize> {
    let n = energies.len();
    let tol = 1e-10 * scale;
    let mut order: Vec<usize> = (0..n).collect();
    let key = |k: usize| -> Vec<(i64, i64)> {
        (0..n)
            .map(|i| {
                let z = vectors.get(i, k);
                ((z.re * 1e8).round() as i64, (z.im * 1e8).round() as i64)
            })
            .collect()
    };
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && energies[end] - energies[end - 1] <= tol {
            end += 1;
        }
        if end - start > 1 {
            let mut cluster: Vec<(Vec<(i64, i64)>, usize)> = (start..end).map(|k| (key(k), k)).collect();
            cluster.sort();
            for (slot, (_, k)) in cluster.into_iter().enumerate() {
                order[start + slot] = k;
            }
        }
        start = end;
    }
    order
}

fn permute_columns(vectors: &Dense, order: &[usize]) -> Dense {
    if order.iter().enumerate().all(|(i, &k)| i == k) {
        return vectors.clone();
    }
    match vectors {
        Dense::Real(v) => Dense::Real(Mat::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, order[j])])),
        Dense::Complex(v) => Dense::Complex(Mat::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, order[j])])),
    }
}

/// `e^{iHt} A e^{-iHt}` evaluated through the eigenbasis of `H`.
pub fn heisenberg_operator(decomp: &SpectralDecomposition, op: &Operator, t: f64) -> Result<Operator> {
    let rotated = decomp.to_eigenbasis(op)?;
    let e = decomp.energies();
    let phases: Vec<C64> = e.iter().map(|&x| C64::from_polar(1.0, x * t)).collect();
    let n = decomp.dim();
    let evolved = Operator::from_complex(Mat::from_fn(n, n, |i, j| phases[i] * rotated.get(i, j) * phases[j].conj()))?;
    decomp.from_eigenbasis(&evolved)
}

/// A normalized pure state.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<C64>,
}

impl StateVector {
    /// Wraps amplitudes that are already normalized to within 1e-12.
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::arg("state vector must be non-empty"));
        }
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::validation(format!("state norm is {norm}, expected 1")));
        }
        Ok(StateVector { amplitudes })
    }

    /// Rescales arbitrary nonzero amplitudes to unit norm.
    pub fn normalized(mut amplitudes: Vec<C64>) -> Result<Self> {
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::arg("cannot normalize a zero or non-finite vector"));
        }
        amplitudes.iter_mut().for_each(|a| *a /= norm);
        Ok(StateVector { amplitudes })
    }

    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::arg(format!("basis index {index} outside dimension {dim}")));
        }
        let mut a = vec![ZERO; dim];
        a[index] = ONE;
        Ok(StateVector { amplitudes: a })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// `⟨ψ|A|ψ⟩`.
pub fn expectation(state: &StateVector, op: &Operator) -> Result<C64> {
    if state.dim() != op.dim() {
        return Err(Error::arg(format!("dimension mismatch: state {} vs operator {}", state.dim(), op.dim())));
    }
    let av = op.apply(state.amplitudes());
    Ok(inner(state.amplitudes(), &av))
}

/// `⟨u|v⟩`, conjugating the left argument.
pub fn inner(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn kron(a: &Operator, b: &Operator) -> Operator {
        let (n, m) = (a.dim(), b.dim());
        Operator::from_fn(n * m, |i, j| a.get(i / m, j / m) * b.get(i % m, j % m))
    }

    fn random_hermitian(n: usize, seed: u64) -> Operator {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let raw: Vec<C64> = (0..n * n).map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
        Operator::from_fn(n, |i, j| (raw[i * n + j] + raw[j * n + i].conj()) * 0.5)
    }

    #[test]
    fn embed_single_site() {
        let z = embed_site_operator(&pauli_z(), 1, 1).unwrap();
        assert_eq!(z.max_diff(&Operator::diagonal(&[1.0, -1.0])), 0.0);
        let z = embed_site_operator(&pauli_z(), 1, 2).unwrap();
        assert_eq!(z.max_diff(&Operator::diagonal(&[1.0, 1.0, -1.0, -1.0])), 0.0);
    }

    #[test]
    fn embed_matches_kron() {
        let x2 = embed_site_operator(&pauli_x(), 2, 2).unwrap();
        assert_eq!(x2.max_diff(&kron(&Operator::identity(2), &pauli_x())), 0.0);
        let y = embed_site_operator(&pauli_y(), 2, 3).unwrap();
        let expect = kron(&kron(&Operator::identity(2), &pauli_y()), &Operator::identity(2));
        assert_eq!(y.max_diff(&expect), 0.0);
        let pm = embed_product(&[(&sigma_plus(), 1), (&sigma_minus(), 3)], 3).unwrap();
        let expect = kron(&kron(&sigma_plus(), &Operator::identity(2)), &sigma_minus());
        assert_eq!(pm.max_diff(&expect), 0.0);
    }

    #[test]
    fn embed_rejects_bad_input() {
        assert!(matches!(embed_site_operator(&pauli_x(), 0, 3), Err(Error::Argument(_))));
        assert!(matches!(embed_site_operator(&pauli_x(), 4, 3), Err(Error::Argument(_))));
        assert!(matches!(embed_site_operator(&Operator::identity(3), 1, 3), Err(Error::Argument(_))));
        assert!(embed_product(&[(&pauli_x(), 2), (&pauli_z(), 2)], 3).is_err());
    }

    #[test]
    fn disjoint_sites_commute() {
        for (i, j) in [(1, 2), (1, 3), (2, 3)] {
            let a = embed_site_operator(&pauli_x(), i, 3).unwrap();
            let b = embed_site_operator(&pauli_y(), j, 3).unwrap();
            assert_eq!(a.commutator(&b).max_abs(), 0.0);
        }
    }

    #[test]
    fn sigma_pm_convention() {
        let x = pauli_x();
        let y = pauli_y();
        let plus = Operator::from_fn(2, |i, j| (x.get(i, j) + C64::i() * y.get(i, j)) * 0.5);
        assert_eq!(plus.max_diff(&sigma_plus()), 0.0);
        assert_eq!(sigma_plus().adjoint().max_diff(&sigma_minus()), 0.0);
    }

    #[test]
    fn eig_of_diagonal() {
        let d = hermitian_eigendecomposition(&Operator::diagonal(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(d.energies(), &[1.0, 2.0, 3.0]);
        let expected_cols = [1usize, 2, 0];
        for (k, &row) in expected_cols.iter().enumerate() {
            for i in 0..3 {
                let want = if i == row { 1.0 } else { 0.0 };
                assert!((d.vectors().get(i, k).re - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn eig_of_pauli_x() {
        let d = hermitian_eigendecomposition(&pauli_x()).unwrap();
        assert!((d.energies()[0] + 1.0).abs() < 1e-14 && (d.energies()[1] - 1.0).abs() < 1e-14);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        // first index of maximal magnitude made positive
        let v0 = d.eigenvector(0);
        let v1 = d.eigenvector(1);
        assert!((v0[0].re - s).abs() < 1e-12 && (v0[1].re + s).abs() < 1e-12);
        assert!((v1[0].re - s).abs() < 1e-12 && (v1[1].re - s).abs() < 1e-12);
    }

    #[test]
    fn eig_reconstructs_random_hermitian() {
        let m = random_hermitian(8, 7);
        let d = hermitian_eigendecomposition(&m).unwrap();
        assert!(d.reconstruct().max_diff(&m) <= 1e-9 * m.max_abs());
        assert!(d.unitarity_defect() <= 1e-10);
        assert!(d.energies().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn eig_is_pure() {
        let m = random_hermitian(12, 3);
        let a = hermitian_eigendecomposition(&m).unwrap();
        let b = hermitian_eigendecomposition(&m).unwrap();
        assert_eq!(a.energies(), b.energies());
        for i in 0..12 {
            for j in 0..12 {
                assert_eq!(a.vectors().get(i, j), b.vectors().get(i, j));
            }
        }
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let m = Operator::from_real_fn(2, |i, j| if (i, j) == (0, 1) { 1.0 } else { 0.0 });
        assert!(matches!(hermitian_eigendecomposition(&m), Err(Error::Validation(_))));
    }

    #[test]
    fn degenerate_clusters_are_ordered() {
        // identity on a 2d subspace: any basis is valid, the order must be canonical
        let m = Operator::diagonal(&[2.0, 1.0, 2.0, 0.5]);
        let d = hermitian_eigendecomposition(&m).unwrap();
        assert_eq!(d.energies(), &[0.5, 1.0, 2.0, 2.0]);
        let key = |k: usize| (0..4).map(|i| (d.vectors().get(i, k).re * 1e8).round() as i64).collect::<Vec<_>>();
        assert!(key(2) <= key(3));
    }

    #[test]
    fn heisenberg_identity_and_conserved() {
        let h = random_hermitian(6, 11);
        let d = hermitian_eigendecomposition(&h).unwrap();
        let a = random_hermitian(6, 12);
        assert!(heisenberg_operator(&d, &a, 0.0).unwrap().max_diff(&a) <= 1e-12);
        assert!(heisenberg_operator(&d, &h, 3.7).unwrap().max_diff(&h) <= 1e-10);
        let at = heisenberg_operator(&d, &a, 1.3).unwrap();
        assert!(at.hermiticity_defect() <= 1e-10);
    }

    fn three_spin_chain() -> Operator {
        let n = 3;
        let x = |s| embed_site_operator(&pauli_x(), s, n).unwrap();
        let zz = |a, b| embed_product(&[(&pauli_z(), a), (&pauli_z(), b)], n).unwrap();
        &(&(&x(1) + &x(2).scale(0.6)) + &x(3).scale(0.9)) + &(&zz(1, 2) + &zz(2, 3).scale(0.4))
    }

    #[test]
    fn heisenberg_preserves_spectrum() {
        let h = three_spin_chain();
        let d = hermitian_eigendecomposition(&h).unwrap();
        let a = &embed_site_operator(&pauli_z(), 1, 3).unwrap() + &embed_site_operator(&pauli_y(), 3, 3).unwrap().scale(0.5);
        let before = hermitian_eigendecomposition(&a).unwrap();
        for t in [0.3, 2.0, 17.5] {
            let after = hermitian_eigendecomposition(&heisenberg_operator(&d, &a, t).unwrap()).unwrap();
            for (x, y) in before.energies().iter().zip(after.energies()) {
                assert!((x - y).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn heisenberg_group_property() {
        let h = three_spin_chain();
        let d = hermitian_eigendecomposition(&h).unwrap();
        let a = embed_product(&[(&pauli_x(), 1), (&pauli_z(), 2)], 3).unwrap();
        let (t1, t2) = (0.8, 2.3);
        let two_steps = heisenberg_operator(&d, &heisenberg_operator(&d, &a, t1).unwrap(), t2).unwrap();
        let one_step = heisenberg_operator(&d, &a, t1 + t2).unwrap();
        assert!(two_steps.max_diff(&one_step) <= 1e-10);
        let back = heisenberg_operator(&d, &heisenberg_operator(&d, &a, t1).unwrap(), -t1).unwrap();
        assert!(back.max_diff(&a) <= 1e-10);
    }

    #[test]
    fn heisenberg_matches_bch_taylor() {
        // two-spin chain, short time: A(t) ≈ A + it[H,A] - t²/2 [H,[H,A]] - i t³/6 [H,[H,[H,A]]] + t⁴/24 [H,[H,[H,[H,A]]]]
        let n = 2;
        let h = &(&embed_site_operator(&pauli_x(), 1, n).unwrap() + &embed_site_operator(&pauli_z(), 2, n).unwrap().scale(0.7))
            + &embed_product(&[(&pauli_z(), 1), (&pauli_z(), 2)], n).unwrap().scale(0.3);
        let a = embed_site_operator(&pauli_z(), 1, n).unwrap();
        let t = 1e-3;
        let c1 = h.commutator(&a);
        let c2 = h.commutator(&c1);
        let c3 = h.commutator(&c2);
        let c4 = h.commutator(&c3);
        let i = C64::i();
        let taylor = Operator::from_fn(4, |r, c| {
            a.get(r, c) + i * t * c1.get(r, c) - t * t / 2.0 * c2.get(r, c) - i * t.powi(3) / 6.0 * c3.get(r, c)
                + t.powi(4) / 24.0 * c4.get(r, c)
        });
        let d = hermitian_eigendecomposition(&h).unwrap();
        let exact = heisenberg_operator(&d, &a, t).unwrap();
        assert!(exact.max_diff(&taylor) <= 1e-10);
    }

    #[test]
    fn expectation_small_cases() {
        let up = StateVector::basis(2, 0).unwrap();
        assert!((expectation(&up, &pauli_z()).unwrap() - ONE).norm() < 1e-15);
        let plus = StateVector::normalized(vec![ONE, ONE]).unwrap();
        assert!((expectation(&plus, &pauli_x()).unwrap() - ONE).norm() < 1e-15);
        assert!(expectation(&plus, &Operator::identity(3)).is_err());
    }

    #[test]
    fn expectation_matches_double_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let amps: Vec<C64> = (0..16).map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
        let psi = StateVector::normalized(amps).unwrap();
        let m = random_hermitian(16, 6);
        let c = psi.amplitudes();
        let mut oracle = ZERO;
        for i in 0..16 {
            for j in 0..16 {
                oracle += c[i].conj() * m.get(i, j) * c[j];
            }
        }
        let got = expectation(&psi, &m).unwrap();
        assert!((got - oracle).norm() < 1e-13);
        assert!(got.im.abs() < 1e-12);
    }

    #[test]
    fn state_vector_validation() {
        assert!(StateVector::new(vec![ONE, ONE]).is_err());
        assert!(StateVector::normalized(vec![ZERO, ZERO]).is_err());
        assert!(StateVector::basis(4, 4).is_err());
    }
}
