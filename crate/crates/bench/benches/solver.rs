use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use raman_core::{
    make_double_blob, run_trial, to_time, DoubleBlobSpec, GridSpec, SimConfig, TrialSeed,
};

fn pump() -> raman_core::ComplexEnvelope {
    let grid = GridSpec::new(1024, 0.01, 0.0).unwrap();
    let spec = DoubleBlobSpec {
        blob_width: 0.5,
        separation: 3.3,
        phase_offset: 0.0,
        amplitude_ratio: 1.0,
    };
    to_time(&make_double_blob(&spec, &grid).unwrap()).unwrap()
}

fn bench_trial(c: &mut Criterion) {
    let pump = pump();
    let cfg = SimConfig::default();
    let seed = TrialSeed::draw(cfg.rng_seed, 0, cfg.noise_sigma);
    let mut group = c.benchmark_group("trial");
    for n_x in [64usize, 128, 256] {
        let mut cfg = cfg.clone();
        cfg.grid.n_x = n_x;
        group.bench_with_input(BenchmarkId::from_parameter(n_x), &cfg, |b, cfg| {
            b.iter(|| run_trial(&pump, &seed, cfg).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_trial);
criterion_main!(benches);
