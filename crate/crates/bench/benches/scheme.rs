use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use mbo_bench::{disk, voronoi};
use mbo_core::energetics::approximate_energy;
use mbo_core::fields::Convolver;
use mbo_core::{threshold_step, SchemeConfig, SurfaceTensionMatrix};

fn convolution(c: &mut Criterion) {
    let mut group = c.benchmark_group("convolution");
    for n in [128usize, 256, 512] {
        let chi = disk(n);
        let conv = Convolver::new(*chi.grid(), 4e-4).unwrap();
        let f = chi.indicator_values(1);
        group.bench_with_input(BenchmarkId::from_parameter(n), &f, |b, f| {
            b.iter(|| conv.convolve(black_box(f)).unwrap())
        });
    }
    group.finish();
}

fn step(c: &mut Criterion) {
    let mut group = c.benchmark_group("threshold_step");
    group.sample_size(20);
    for phases in [2usize, 8] {
        let chi = if phases == 2 { disk(256) } else { voronoi(256, phases) };
        let sigma = SurfaceTensionMatrix::equal(phases).unwrap();
        let cfg = SchemeConfig::with_steps(*chi.grid(), sigma, 4e-4, 1).unwrap();
        group.bench_with_input(BenchmarkId::new("256", phases), &chi, |b, chi| {
            b.iter(|| threshold_step(black_box(chi), &cfg).unwrap())
        });
    }
    group.finish();
}

fn energy(c: &mut Criterion) {
    let chi = voronoi(256, 8);
    let sigma = SurfaceTensionMatrix::equal(8).unwrap();
    c.bench_function("approximate_energy/256/8", |b| {
        b.iter(|| approximate_energy(black_box(&chi), 4e-4, &sigma).unwrap())
    });
}

criterion_group!(benches, convolution, step, energy);
criterion_main!(benches);
