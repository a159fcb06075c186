use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use raman_core::{husimi, make_double_blob, to_time, wigner, DoubleBlobSpec, GridSpec};

fn bench_tf(c: &mut Criterion) {
    let spec = DoubleBlobSpec {
        blob_width: 0.5,
        separation: 3.3,
        phase_offset: 0.0,
        amplitude_ratio: 1.0,
    };
    let mut group = c.benchmark_group("tf");
    group.sample_size(20);
    for n in [512usize, 1024] {
        let grid = GridSpec::new(n, 0.01, 0.0).unwrap();
        let pump = to_time(&make_double_blob(&spec, &grid).unwrap()).unwrap();
        group.bench_with_input(BenchmarkId::new("wigner", n), &pump, |b, p| {
            b.iter(|| wigner(p).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("husimi", n), &pump, |b, p| {
            b.iter(|| husimi(p, 0.15).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_tf);
criterion_main!(benches);
