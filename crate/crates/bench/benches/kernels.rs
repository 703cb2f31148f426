use criterion::{criterion_group, criterion_main, Criterion};
use isac_core::experiment::{run_trial, ScenarioConfig};
use isac_core::jaece::decompose;
use isac_core::numerics::{hermitian_evd, svd};
use isac_core::ranging::{estimate_range, ml_range_baseline, range_matrix};
use isac_core::{Complex64, ComplexMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
}

fn kernels(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let h = random(64, 1024, &mut rng);
    let r = h.gram().scaled(1.0 / 1024.0);
    c.bench_function("hermitian_evd 64x64", |b| b.iter(|| hermitian_evd(&r).unwrap()));
    let small = random(16, 48, &mut rng);
    c.bench_function("svd 16x48", |b| b.iter(|| svd(&small).unwrap()));
    c.bench_function("decompose 64x1024", |b| b.iter(|| decompose(&h).unwrap()));

    let row: Vec<Complex64> = (0..64 * 16)
        .map(|i| Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * 0.2 * (i % 64) as f64))
        .collect();
    let hr = range_matrix(&row, 64, 16, 480e3).unwrap();
    c.bench_function("range MUSIC 64x16", |b| b.iter(|| estimate_range(&hr).unwrap()));
    c.bench_function("range ML 64x16", |b| b.iter(|| ml_range_baseline(&hr).unwrap()));
}

fn pipeline(c: &mut Criterion) {
    let cfg = ScenarioConfig::default();
    let point = cfg.points()[2];
    let mut group = c.benchmark_group("pipeline");
    group.sample_size(20);
    group.bench_function("run_trial desk 10 dB M_s=16", |b| b.iter(|| run_trial(&cfg, &point, 0).unwrap()));
    group.finish();
}

criterion_group!(benches, kernels, pipeline);
criterion_main!(benches);
