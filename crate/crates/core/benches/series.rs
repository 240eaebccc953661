use criterion::{criterion_group, criterion_main, Criterion};

use chaoscorr::correlators::four_point_series;
use chaoscorr::exec;
use chaoscorr::models::{build_spin_chain, neel_state, ChainParams, RmtParams};
use chaoscorr::rmtlab::{ensemble_lambda_experiment, EnsembleOptions};
use chaoscorr::tensorops::{embed_site_operator, pauli_x, pauli_z};

fn otoc(c: &mut Criterion) {
    let p = ChainParams { n_sites: 8, ..ChainParams::weak_coupling() };
    let set = build_spin_chain(&p).unwrap();
    let d = set.decomp_full().unwrap();
    let psi = neel_state(8).unwrap();
    let x = embed_site_operator(&pauli_x(), 1, 8).unwrap();
    let z = embed_site_operator(&pauli_z(), 1, 8).unwrap();
    let times: Vec<f64> = (0..256).map(|k| k as f64 * 0.1).collect();

    let mut g = c.benchmark_group("otoc_8_spins_256_times");
    g.sample_size(10);
    g.bench_function("parallel", |b| b.iter(|| four_point_series(&psi, d, [&x, &z, &x, &z], &times).unwrap()));
    g.bench_function("sequential", |b| {
        b.iter(|| exec::sequential(|| four_point_series(&psi, d, [&x, &z, &x, &z], &times).unwrap()))
    });
    g.finish();
}

fn ensemble(c: &mut Criterion) {
    let p = RmtParams { dim: 120, omega: 0.01, g: 0.1 };
    let opts = EnsembleOptions::default();

    let mut g = c.benchmark_group("deutsch_n120_16_realizations");
    g.sample_size(10);
    g.bench_function("parallel", |b| b.iter(|| ensemble_lambda_experiment(&p, 16, 1, &opts).unwrap()));
    g.bench_function("sequential", |b| {
        b.iter(|| exec::sequential(|| ensemble_lambda_experiment(&p, 16, 1, &opts).unwrap()))
    });
    g.finish();
}

criterion_group!(benches, otoc, ensemble);
criterion_main!(benches);
