use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use latfb_core::allpass::lattice_to_lccde;
use latfb_core::feedback::{encode_update, AdaptiveTrackerState, ClipPolicy};
use latfb_core::lattice::{
    frequency_response_grid, lccde_to_lattice, random_stable_params, t_matrix,
};
use latfb_core::matcore::{random_contraction, random_gaussian, svd};
use latfb_core::snip::{snip_design, SnipOptions};

fn probe_omegas(n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| -std::f64::consts::PI + (k as f64 + 0.5) * std::f64::consts::TAU / n as f64)
        .collect()
}

fn bench_t_matrix(c: &mut Criterion) {
    let mut g = ChaCha12Rng::seed_from_u64(1);
    let mut group = c.benchmark_group("t_matrix");
    for m in [2usize, 4, 8, 15] {
        let k = random_contraction(m, 0.95, &mut g);
        group.bench_with_input(BenchmarkId::from_parameter(m), &k, |b, k| {
            b.iter(|| t_matrix(k).unwrap())
        });
    }
    group.finish();
}

fn bench_svd(c: &mut Criterion) {
    let mut g = ChaCha12Rng::seed_from_u64(2);
    let mut group = c.benchmark_group("svd");
    for m in [4usize, 8, 15] {
        let a = random_gaussian(m, m, &mut g);
        group.bench_with_input(BenchmarkId::from_parameter(m), &a, |b, a| {
            b.iter(|| svd(a).unwrap())
        });
    }
    group.finish();
}

fn bench_lattice_response(c: &mut Criterion) {
    let mut g = ChaCha12Rng::seed_from_u64(3);
    let params = random_stable_params(4, 5, 0.9, &mut g);
    let omegas = probe_omegas(512);
    c.bench_function("frequency_response_grid m4 M5 512pts", |b| {
        b.iter(|| frequency_response_grid(&params, &omegas).unwrap())
    });
}

fn bench_conversions(c: &mut Criterion) {
    let mut g = ChaCha12Rng::seed_from_u64(4);
    let params = random_stable_params(3, 5, 0.85, &mut g);
    let filter = lattice_to_lccde(&params).unwrap();
    c.bench_function("lattice_to_lccde m3 M5", |b| {
        b.iter(|| lattice_to_lccde(&params).unwrap())
    });
    c.bench_function("lccde_to_lattice m3 M5", |b| {
        b.iter(|| lccde_to_lattice(&filter).unwrap())
    });
}

fn bench_snip(c: &mut Criterion) {
    let mut g = ChaCha12Rng::seed_from_u64(5);
    let truth = random_stable_params(2, 3, 0.5, &mut g);
    let nodes: Vec<(f64, latfb_core::CMat)> = [-2.0, -0.4, 1.3, 2.8]
        .iter()
        .map(|&w| (w, latfb_core::lattice::frequency_response(&truth, w).unwrap()))
        .collect();
    let opts = SnipOptions { tol: 1e-3, ..Default::default() };
    c.bench_function("snip_design m2 order3 4nodes", |b| {
        b.iter(|| snip_design(&nodes, 3, &opts).unwrap())
    });
}

fn bench_feedback(c: &mut Criterion) {
    let mut g = ChaCha12Rng::seed_from_u64(6);
    let truth = random_contraction(8, 0.8, &mut g);
    c.bench_function("encode_update m8", |b| {
        let mut st = AdaptiveTrackerState::new(
            random_contraction(8, 0.5, &mut g),
            0.05,
            1.5,
            ClipPolicy::Spectral { margin: 1e-3 },
        )
        .unwrap();
        b.iter(|| encode_update(&truth, &mut st).unwrap())
    });
}

criterion_group!(
    benches,
    bench_t_matrix,
    bench_svd,
    bench_lattice_response,
    bench_conversions,
    bench_snip,
    bench_feedback
);
criterion_main!(benches);
