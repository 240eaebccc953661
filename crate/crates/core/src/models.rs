//! Hamiltonians and initial states: the system-bath spin chain, the Deutsch
//! random-matrix model, and the product/eigenstate initial conditions.

use std::f64::consts::TAU;
use std::sync::OnceLock;

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::tensorops::{
    accumulate_product, hermitian_eigendecomposition, pauli_x, pauli_z, sigma_minus, sigma_plus, Dense, Operator,
    SpectralDecomposition, StateVector,
};
use crate::{Error, Result, C64};

/// One spin (site 1) coupled to a transverse-field XY bath at two bath sites.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChainParams {
    pub n_sites: usize,
    pub bz_s: f64,
    pub bx_s: f64,
    pub bx_b: f64,
    pub jx_b: f64,
    pub jz_i: f64,
    pub jx_i: f64,
    pub r1: usize,
    pub r2: usize,
}

impl Default for ChainParams {
    fn default() -> Self {
        Self::weak_coupling()
    }
}

impl ChainParams {
    /// 12 spins, `Jx_i = 0.1`: Lorentzian regime.
    pub fn weak_coupling() -> Self {
        ChainParams { n_sites: 12, bz_s: 0.4, bx_s: 0.4, bx_b: 0.3, jx_b: 0.7, jz_i: 0.2, jx_i: 0.1, r1: 5, r2: 10 }
    }

    /// Same chain with `Jx_i = 0.8`: Gaussian regime.
    pub fn strong_coupling() -> Self {
        ChainParams { jx_i: 0.8, ..Self::weak_coupling() }
    }

    pub fn dim(&self) -> usize {
        1 << self.n_sites
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_sites;
        if !(3..=14).contains(&n) {
            return Err(Error::arg(format!("n_sites must be in 3..=14, got {n}")));
        }
        for (name, r) in [("r1", self.r1), ("r2", self.r2)] {
            if r <= 1 || r > n {
                return Err(Error::arg(format!("{name} = {r} must be a bath site in 2..={n}")));
            }
        }
        if self.r1 == self.r2 {
            return Err(Error::arg("r1 and r2 must differ"));
        }
        let fields = [self.bz_s, self.bx_s, self.bx_b, self.jx_b, self.jz_i, self.jx_i];
        if fields.iter().any(|v| !v.is_finite()) {
            return Err(Error::arg("chain couplings must be finite"));
        }
        Ok(())
    }
}

/// Equally spaced `H₀` plus a GOE perturbation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RmtParams {
    pub dim: usize,
    pub omega: f64,
    pub g: f64,
}

impl RmtParams {
    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(Error::arg(format!("dim must be at least 2, got {}", self.dim)));
        }
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return Err(Error::arg(format!("omega must be positive, got {}", self.omega)));
        }
        if !(self.g > 0.0 && self.g.is_finite()) {
            return Err(Error::arg(format!("g must be positive, got {}", self.g)));
        }
        Ok(())
    }

    /// Golden-rule linewidth `πg²/(ωN)`.
    pub fn gamma_theory(&self) -> f64 {
        std::f64::consts::PI * self.g * self.g / (self.omega * self.dim as f64)
    }

    /// Unperturbed levels `(α − (N+1)/2)·ω` for α = 1..N.
    pub fn levels(&self) -> Vec<f64> {
        let mid = (self.dim as f64 + 1.0) / 2.0;
        (1..=self.dim).map(|a| (a as f64 - mid) * self.omega).collect()
    }
}

/// Non-interacting and full Hamiltonians with lazily computed spectra.
#[derive(Debug)]
pub struct HamiltonianSet {
    h0: Operator,
    h_full: Operator,
    decomp0: OnceLock<SpectralDecomposition>,
    decomp_full: OnceLock<SpectralDecomposition>,
}

impl HamiltonianSet {
    pub fn new(h0: Operator, h_full: Operator) -> Result<Self> {
        if h0.dim() != h_full.dim() {
            return Err(Error::arg(format!("h0 has dim {} but h_full has dim {}", h0.dim(), h_full.dim())));
        }
        Ok(HamiltonianSet { h0, h_full, decomp0: OnceLock::new(), decomp_full: OnceLock::new() })
    }

    pub fn dim(&self) -> usize {
        self.h0.dim()
    }

    pub fn h0(&self) -> &Operator {
        &self.h0
    }

    pub fn h_full(&self) -> &Operator {
        &self.h_full
    }

    pub fn decomp0(&self) -> Result<&SpectralDecomposition> {
        lazy_decomp(&self.decomp0, &self.h0)
    }

    pub fn decomp_full(&self) -> Result<&SpectralDecomposition> {
        lazy_decomp(&self.decomp_full, &self.h_full)
    }

    /// Installs precomputed spectra, e.g. read back from a cache.
    pub fn set_decompositions(&self, decomp0: SpectralDecomposition, decomp_full: SpectralDecomposition) -> Result<()> {
        if decomp0.dim() != self.dim() || decomp_full.dim() != self.dim() {
            return Err(Error::arg("cached decomposition has the wrong dimension"));
        }
        let _ = self.decomp0.set(decomp0);
        let _ = self.decomp_full.set(decomp_full);
        Ok(())
    }
}

fn lazy_decomp<'a>(cell: &'a OnceLock<SpectralDecomposition>, h: &Operator) -> Result<&'a SpectralDecomposition> {
    if let Some(d) = cell.get() {
        return Ok(d);
    }
    let d = hermitian_eigendecomposition(h)?;
    Ok(cell.get_or_init(|| d))
}

/// `H₀ = H_s + H_b` and `H = H₀ + H_sb`.
pub fn build_spin_chain(p: &ChainParams) -> Result<HamiltonianSet> {
    p.validate()?;
    let n = p.n_sites;
    let (x, z, up, dn) = (pauli_x(), pauli_z(), sigma_plus(), sigma_minus());
    let dim = p.dim();

    let mut h0 = Dense::Real(Mat::zeros(dim, dim));
    accumulate_product(&mut h0, &[(&z, 1)], n, p.bz_s);
    accumulate_product(&mut h0, &[(&x, 1)], n, p.bx_s);
    for site in 2..=n {
        accumulate_product(&mut h0, &[(&x, site)], n, p.bx_b);
    }
    for site in 2..n {
        accumulate_product(&mut h0, &[(&up, site), (&dn, site + 1)], n, p.jx_b);
        accumulate_product(&mut h0, &[(&dn, site), (&up, site + 1)], n, p.jx_b);
    }

    let mut h = h0.clone();
    for r in [p.r1, p.r2] {
        accumulate_product(&mut h, &[(&z, 1), (&z, r)], n, p.jz_i);
        accumulate_product(&mut h, &[(&up, 1), (&dn, r)], n, p.jx_i);
        accumulate_product(&mut h, &[(&dn, 1), (&up, r)], n, p.jx_i);
    }
    HamiltonianSet::new(Operator::from_dense(h0)?, Operator::from_dense(h)?)
}

/// `H₀ = diag(E_α)` plus a GOE sample with `⟨h_ii²⟩ = 2g²/N`, `⟨h_ij²⟩ = g²/N`.
pub fn build_deutsch_model(p: &RmtParams, seed: u64) -> Result<HamiltonianSet> {
    p.validate()?;
    let levels = p.levels();
    let h_i = goe_sample(p.dim, p.g, &mut ChaCha8Rng::seed_from_u64(seed));
    let h0 = Operator::diagonal(&levels);
    let full = Operator::from_real_fn(p.dim, |i, j| h_i[(i, j)] + if i == j { levels[i] } else { 0.0 });
    HamiltonianSet::new(h0, full)
}

/// Symmetric GOE matrix, upper triangle drawn row by row.
pub fn goe_sample<R: Rng + ?Sized>(n: usize, g: f64, rng: &mut R) -> Mat<f64> {
    let off = g / (n as f64).sqrt();
    let diag = off * std::f64::consts::SQRT_2;
    let mut m = Mat::<f64>::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let z: f64 = rng.sample(StandardNormal);
            let v = z * if i == j { diag } else { off };
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialStateSpec {
    /// 1-based rank in the ascending spectrum of `H₀`.
    H0Eigenstate { index: usize },
    Neel,
    RandomProduct { seed: u64 },
}

impl Default for InitialStateSpec {
    fn default() -> Self {
        InitialStateSpec::H0Eigenstate { index: 2041 }
    }
}

pub fn prepare_initial_state(spec: &InitialStateSpec, decomp0: &SpectralDecomposition) -> Result<StateVector> {
    let dim = decomp0.dim();
    match spec {
        InitialStateSpec::H0Eigenstate { index } => {
            if *index < 1 || *index > dim {
                return Err(Error::arg(format!("eigenstate index {index} outside 1..={dim}")));
            }
            StateVector::new(decomp0.eigenvector(index - 1))
        }
        InitialStateSpec::Neel => neel_state(sites_of(dim)?),
        InitialStateSpec::RandomProduct { seed } => {
            random_product_state(sites_of(dim)?, &mut ChaCha8Rng::seed_from_u64(*seed))
        }
    }
}

fn sites_of(dim: usize) -> Result<usize> {
    if !dim.is_power_of_two() || dim < 2 {
        return Err(Error::arg(format!("product states need a power-of-two dimension, got {dim}")));
    }
    Ok(dim.trailing_zeros() as usize)
}

/// `|↑↓↑↓…⟩`: odd sites up, even sites down.
pub fn neel_state(n_sites: usize) -> Result<StateVector> {
    let index: usize = (2..=n_sites).step_by(2).map(|k| 1usize << (n_sites - k)).sum();
    StateVector::basis(1 << n_sites, index)
}

/// `⊗ᵢ (cos θᵢ|↑⟩ + sin θᵢ|↓⟩)` with θᵢ uniform on `[0, 2π)`, site 1 drawn first.
pub fn random_product_state<R: Rng + ?Sized>(n_sites: usize, rng: &mut R) -> Result<StateVector> {
    if n_sites == 0 || n_sites > 30 {
        return Err(Error::arg(format!("n_sites must be in 1..=30, got {n_sites}")));
    }
    let factors: Vec<(f64, f64)> = (0..n_sites)
        .map(|_| {
            let theta = rng.random::<f64>() * TAU;
            (theta.cos(), theta.sin())
        })
        .collect();
    let dim = 1usize << n_sites;
    let amps = (0..dim)
        .map(|b| {
            let amp: f64 = factors
                .iter()
                .enumerate()
                .map(|(k, &(c, s))| if (b >> (n_sites - 1 - k)) & 1 == 0 { c } else { s })
                .product();
            C64::new(amp, 0.0)
        })
        .collect();
    // cos² + sin² = 1 per site, so only rounding needs absorbing
    StateVector::normalized(amps)
}

/// Random product state whose `⟨H₀⟩` lies within `window · (E_max − E_min)` of
/// the spectral midpoint. Draws successive angle sets from one seeded stream.
pub fn mid_spectrum_product_state(decomp0: &SpectralDecomposition, seed: u64, window: f64) -> Result<StateVector> {
    if !(window > 0.0) {
        return Err(Error::arg(format!("rejection window must be positive, got {window}")));
    }
    let n_sites = sites_of(decomp0.dim())?;
    let e = decomp0.energies();
    let (lo, hi) = (e[0], e[e.len() - 1]);
    let (mid, width) = ((lo + hi) / 2.0, hi - lo);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    const MAX_ATTEMPTS: usize = 100_000;
    for _ in 0..MAX_ATTEMPTS {
        let psi = random_product_state(n_sites, &mut rng)?;
        let b = decomp0.coefficients(&psi)?;
        let energy: f64 = b.iter().zip(e).map(|(c, &x)| c.norm_sqr() * x).sum();
        if (energy - mid).abs() <= window * width {
            return Ok(psi);
        }
    }
    Err(Error::Numeric(format!("no product state with ⟨H₀⟩ in the window after {MAX_ATTEMPTS} draws (window = {window})")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensorops::{embed_product, embed_site_operator};
    use rand::RngCore;

    fn small_params() -> ChainParams {
        ChainParams { n_sites: 4, bz_s: 0.31, bx_s: 0.47, bx_b: 0.23, jx_b: 0.61, jz_i: 0.19, jx_i: 0.37, r1: 2, r2: 4 }
    }

    /// Independent construction from embedded operators and explicit products.
    fn chain_oracle(p: &ChainParams) -> (Operator, Operator) {
        let n = p.n_sites;
        let e = |op: &Operator, s: usize| embed_site_operator(op, s, n).unwrap();
        let (x, z, up, dn) = (pauli_x(), pauli_z(), sigma_plus(), sigma_minus());
        let mut h0 = &e(&z, 1).scale(p.bz_s) + &e(&x, 1).scale(p.bx_s);
        for s in 2..=n {
            h0 = &h0 + &e(&x, s).scale(p.bx_b);
        }
        for s in 2..n {
            let hop = &(&e(&up, s) * &e(&dn, s + 1)) + &(&e(&dn, s) * &e(&up, s + 1));
            h0 = &h0 + &hop.scale(p.jx_b);
        }
        let mut h = h0.clone();
        for r in [p.r1, p.r2] {
            h = &h + &(&e(&z, 1) * &e(&z, r)).scale(p.jz_i);
            let hop = &(&e(&up, 1) * &e(&dn, r)) + &(&e(&dn, 1) * &e(&up, r));
            h = &h + &hop.scale(p.jx_i);
        }
        (h0, h)
    }

    #[test]
    fn chain_matches_elementwise_oracle() {
        let p = small_params();
        let set = build_spin_chain(&p).unwrap();
        let (h0, h) = chain_oracle(&p);
        assert!(set.h0().max_diff(&h0) <= 1e-15);
        assert!(set.h_full().max_diff(&h) <= 1e-15);
        assert!(set.h_full().is_hermitian(1e-12));
    }

    #[test]
    fn decoupled_single_spin() {
        let p = ChainParams { n_sites: 3, bz_s: 0.4, bx_s: 0.4, bx_b: 0.0, jx_b: 0.0, jz_i: 0.0, jx_i: 0.0, r1: 2, r2: 3 };
        let set = build_spin_chain(&p).unwrap();
        assert_eq!(set.h0().max_diff(set.h_full()), 0.0);
        let e = set.decomp_full().unwrap().energies().to_vec();
        let w = 0.32f64.sqrt();
        for (k, v) in e.iter().enumerate() {
            let want = if k < 4 { -w } else { w };
            assert!((v - want).abs() < 1e-12);
        }
    }

    #[test]
    fn interaction_switch_off() {
        let p = ChainParams { jx_i: 0.0, jz_i: 0.0, ..small_params() };
        let set = build_spin_chain(&p).unwrap();
        assert_eq!(set.h0().max_diff(set.h_full()), 0.0);
    }

    #[test]
    fn total_sz_not_conserved() {
        let p = ChainParams { n_sites: 6, r1: 3, r2: 5, ..ChainParams::weak_coupling() };
        let set = build_spin_chain(&p).unwrap();
        let mut sz = Operator::zeros(64);
        for s in 1..=6 {
            sz = &sz + &embed_site_operator(&pauli_z(), s, 6).unwrap();
        }
        assert!(set.h_full().commutator(&sz).max_abs() > 0.1);
    }

    #[test]
    fn chain_hopping_is_xy_exchange() {
        // σ⁺σ⁻ + σ⁻σ⁺ = (σxσx + σyσy)/2 on a pair
        let up_dn = &embed_product(&[(&sigma_plus(), 1), (&sigma_minus(), 2)], 2).unwrap()
            + &embed_product(&[(&sigma_minus(), 1), (&sigma_plus(), 2)], 2).unwrap();
        let y = crate::tensorops::pauli_y();
        let xy = &embed_product(&[(&pauli_x(), 1), (&pauli_x(), 2)], 2).unwrap()
            + &embed_product(&[(&y, 1), (&y, 2)], 2).unwrap();
        assert!(up_dn.max_diff(&xy.scale(0.5)) < 1e-15);
    }

    #[test]
    fn chain_validation() {
        let bad = [
            ChainParams { n_sites: 2, ..small_params() },
            ChainParams { r1: 1, ..small_params() },
            ChainParams { r2: 5, ..small_params() },
            ChainParams { r1: 3, r2: 3, ..small_params() },
        ];
        for p in bad {
            assert!(matches!(build_spin_chain(&p), Err(Error::Argument(_))), "{p:?}");
        }
    }

    #[test]
    fn deutsch_levels_and_symmetry() {
        let p = RmtParams { dim: 5, omega: 0.5, g: 0.3 };
        assert_eq!(p.levels(), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        let set = build_deutsch_model(&p, 9).unwrap();
        let h = set.h_full();
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(h.get(i, j), h.get(j, i));
            }
        }
        let again = build_deutsch_model(&p, 9).unwrap();
        assert_eq!(again.h_full().max_diff(h), 0.0);
        assert!(build_deutsch_model(&p, 10).unwrap().h_full().max_diff(h) > 0.0);
    }

    #[test]
    fn deutsch_offdiagonal_variance() {
        let n = 1000;
        let m = goe_sample(n, 1.0, &mut ChaCha8Rng::seed_from_u64(1));
        let (mut s1, mut s2, mut count) = (0.0, 0.0, 0.0);
        let (mut d1, mut dcount) = (0.0, 0.0);
        for i in 0..n {
            d1 += m[(i, i)].powi(2);
            dcount += 1.0;
            for j in i + 1..n {
                let v = m[(i, j)].powi(2);
                s1 += v;
                s2 += v * v;
                count += 1.0;
            }
        }
        let mean = s1 / count;
        let stderr = ((s2 / count - mean * mean) / count).sqrt();
        assert!((mean - 1e-3).abs() < 5.0 * stderr, "mean {mean} stderr {stderr}");
        // diagonal: 2/N with 1000 samples, stderr = 2/N·√(2/1000)
        assert!((d1 / dcount - 2e-3).abs() < 5.0 * 2e-3 * (2.0f64 / 1000.0).sqrt());
    }

    #[test]
    fn deutsch_element_means_vanish() {
        let samples = 10_000;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut sum = [[0.0f64; 3]; 3];
        let mut sq = [[0.0f64; 3]; 3];
        for _ in 0..samples {
            let m = goe_sample(3, 1.0, &mut rng);
            for i in 0..3 {
                for j in 0..3 {
                    sum[i][j] += m[(i, j)];
                    sq[i][j] += m[(i, j)].powi(2);
                }
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                let mean = sum[i][j] / samples as f64;
                let sd = (sq[i][j] / samples as f64 - mean * mean).sqrt();
                assert!(mean.abs() < 5.0 * sd / (samples as f64).sqrt());
            }
        }
    }

    #[test]
    fn deutsch_zero_coupling_limit() {
        let p = RmtParams { dim: 6, omega: 1.0, g: 1e-300 };
        let set = build_deutsch_model(&p, 0).unwrap();
        assert!(set.h_full().max_diff(set.h0()) < 1e-250);
        assert!(build_deutsch_model(&RmtParams { g: 0.0, ..p.clone() }, 0).is_err());
    }

    #[test]
    fn gamma_theory_value() {
        let p = RmtParams { dim: 400, omega: 0.01, g: 0.1 };
        assert!((p.gamma_theory() - std::f64::consts::PI / 400.0).abs() < 1e-15);
    }

    #[test]
    fn neel_two_sites() {
        // |↑↓⟩: site 2 down sets the least significant bit
        assert_eq!(neel_state(2).unwrap(), StateVector::basis(4, 1).unwrap());
        assert_eq!(neel_state(4).unwrap(), StateVector::basis(16, 0b0101).unwrap());
    }

    struct Zeros;
    impl RngCore for Zeros {
        fn next_u32(&mut self) -> u32 {
            0
        }
        fn next_u64(&mut self) -> u64 {
            0
        }
        fn fill_bytes(&mut self, dst: &mut [u8]) {
            dst.fill(0)
        }
    }

    #[test]
    fn random_product_with_zero_angles_is_all_up() {
        let psi = random_product_state(3, &mut Zeros).unwrap();
        assert_eq!(psi, StateVector::basis(8, 0).unwrap());
    }

    #[test]
    fn random_product_is_a_product() {
        let psi = random_product_state(3, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert!((psi.norm() - 1.0).abs() < 1e-12);
        // reshape to 2 x 4 (site 1 vs rest): rank one
        let a = psi.amplitudes();
        for j in 0..4 {
            for k in 0..4 {
                assert!((a[j] * a[4 + k] - a[4 + j] * a[k]).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn prepare_states() {
        let set = build_spin_chain(&small_params()).unwrap();
        let d0 = set.decomp0().unwrap();
        let s = prepare_initial_state(&InitialStateSpec::H0Eigenstate { index: 1 }, d0).unwrap();
        assert_eq!(s.amplitudes(), d0.eigenvector(0).as_slice());
        assert!(prepare_initial_state(&InitialStateSpec::H0Eigenstate { index: 0 }, d0).is_err());
        assert!(prepare_initial_state(&InitialStateSpec::H0Eigenstate { index: 17 }, d0).is_err());
        let spec = InitialStateSpec::RandomProduct { seed: 8 };
        assert_eq!(prepare_initial_state(&spec, d0).unwrap(), prepare_initial_state(&spec, d0).unwrap());
        let neel = prepare_initial_state(&InitialStateSpec::Neel, d0).unwrap();
        assert_eq!(neel, neel_state(4).unwrap());
    }

    #[test]
    fn mid_spectrum_rejection() {
        let set = build_spin_chain(&small_params()).unwrap();
        let d0 = set.decomp0().unwrap();
        let e = d0.energies();
        let (mid, width) = ((e[0] + e[15]) / 2.0, e[15] - e[0]);
        let psi = mid_spectrum_product_state(d0, 21, 0.05).unwrap();
        let h0e = crate::tensorops::expectation(&psi, set.h0()).unwrap().re;
        assert!((h0e - mid).abs() <= 0.05 * width);
        assert_eq!(psi, mid_spectrum_product_state(d0, 21, 0.05).unwrap());
    }
}
