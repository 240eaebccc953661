use chaoscorr::chaoswf::{fit_profile, lambda_profile, omega_series, overlap_matrix, OmegaSource, Shape};
use chaoscorr::correlators::{diagonal_ensemble_average, four_point_series, one_point_series, CorrelatorSeries};
use chaoscorr::exec;
use chaoscorr::models::{neel_state, prepare_initial_state, ChainParams, InitialStateSpec, RmtParams};
use chaoscorr::output::{series_table, Table};
use chaoscorr::predictions::{predict_four_point, predict_one_point};
use chaoscorr::rmtlab::{ensemble_lambda_experiment, EnsembleOptions};
use chaoscorr::tensorops::{embed_site_operator, expectation, pauli_x, pauli_z};

fn chain() -> chaoscorr::models::HamiltonianSet {
    let p = ChainParams { n_sites: 8, r1: 4, r2: 7, ..ChainParams::weak_coupling() };
    chaoscorr::models::build_spin_chain(&p).unwrap()
}

#[test]
fn chain_profile_and_envelopes() {
    let set = chain();
    let (d0, full) = (set.decomp0().unwrap(), set.decomp_full().unwrap());
    let ov = overlap_matrix(full, d0).unwrap();
    assert!(ov.row_norm_defect() < 1e-10);
    let profile = lambda_profile(&ov, 0.2, 41).unwrap();
    let fit = fit_profile(&profile, Shape::Lorentzian).unwrap();
    assert!(fit.rate > 0.0 && fit.rate.is_finite());

    let psi = prepare_initial_state(&InitialStateSpec::H0Eigenstate { index: 129 }, d0).unwrap();
    let x = embed_site_operator(&pauli_x(), 1, 8).unwrap();
    let times: Vec<f64> = (0..61).map(|k| 0.5 * k as f64).collect();
    let exact = one_point_series(&psi, full, &x, &times).unwrap();
    let reference = one_point_series(&psi, d0, &x, &times).unwrap();
    let de = diagonal_ensemble_average(&psi, full, &x).unwrap();
    let omega = omega_series(&OmegaSource::Lorentzian(fit.rate), &times);
    let pred = predict_one_point(&reference, &omega, de).unwrap();
    // every series starts from the static expectation
    let static_x = expectation(&psi, &x).unwrap();
    for s in [&exact, &reference, &pred] {
        assert!((s.values[0] - static_x).norm() < 1e-10);
    }
    let unit = predict_one_point(&reference, &vec![1.0; times.len()], de).unwrap();
    assert_eq!(unit.values, reference.values);
}

#[test]
fn otoc_envelope_starts_exact() {
    let set = chain();
    let (d0, full) = (set.decomp0().unwrap(), set.decomp_full().unwrap());
    let psi = neel_state(8).unwrap();
    let x = embed_site_operator(&pauli_x(), 1, 8).unwrap();
    let z = embed_site_operator(&pauli_z(), 1, 8).unwrap();
    let shift = |a: &chaoscorr::tensorops::Operator| {
        let c = diagonal_ensemble_average(&psi, full, a).unwrap();
        (a.shifted(c), c)
    };
    let ((xs, _), (zs, _)) = (shift(&x), shift(&z));
    let times: Vec<f64> = (0..21).map(|k| k as f64).collect();
    let exact = four_point_series(&psi, full, [&xs, &zs, &xs, &zs], &times).unwrap();
    let reference = four_point_series(&psi, d0, [&xs, &zs, &xs, &zs], &times).unwrap();
    let norms = [(0.0, xs.max_abs()), (0.0, zs.max_abs()), (0.0, xs.max_abs()), (0.0, zs.max_abs())];
    let pred = predict_four_point(&reference, &omega_series(&OmegaSource::Gaussian(0.1), &times), &norms).unwrap();
    assert!((exact.values[0] - pred.values[0]).norm() < 1e-10);
    assert!(pred.values[20].norm() < 1e-10 * pred.values[0].norm().max(1.0) + 1e-10);
}

#[test]
fn series_survive_csv_round_trip() {
    let set = chain();
    let psi = neel_state(8).unwrap();
    let z = embed_site_operator(&pauli_z(), 3, 8).unwrap();
    let times: Vec<f64> = (0..50).map(|k| 0.37 * k as f64).collect();
    let s = one_point_series(&psi, set.decomp_full().unwrap(), &z, &times).unwrap();
    let back = Table::parse(&series_table(&s).render()).unwrap();
    assert_eq!(back.column("time").unwrap(), s.times);
    assert_eq!(back.column("re").unwrap(), s.re());
    assert_eq!(back.column("im").unwrap(), s.im());
    let avg = CorrelatorSeries::average(std::slice::from_ref(&s)).unwrap();
    assert_eq!(avg.values, s.values);
}

#[test]
fn deutsch_ensemble_is_reproducible() {
    let p = RmtParams { dim: 160, omega: 1.0 / 160.0, g: (20.0 / (std::f64::consts::PI * 160.0)).sqrt() };
    let opts = EnsembleOptions::default();
    let a = ensemble_lambda_experiment(&p, 6, 31, &opts).unwrap();
    let b = exec::sequential(|| ensemble_lambda_experiment(&p, 6, 31, &opts).unwrap());
    assert_eq!(a.fit.rate.to_bits(), b.fit.rate.to_bits());
    assert_eq!(a.gamma_per_realization.mean.to_bits(), b.gamma_per_realization.mean.to_bits());
    assert_eq!(a.profile.bin_values, b.profile.bin_values);
    // Γ/ω = 20 is well inside the perturbative regime
    assert!(a.perturbative);
    assert!((a.fit.rate / a.gamma_theory - 1.0).abs() < 0.3, "ratio {}", a.fit.rate / a.gamma_theory);
}
