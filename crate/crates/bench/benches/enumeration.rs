use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use spinbath_bench::uniform_bath;
use spinbath_core::{enumerate_spectrum, Binning, WalkEnumerator};

fn enumerate(c: &mut Criterion) {
    let mut group = c.benchmark_group("walk enumeration");
    group.sample_size(10);
    for n in [12usize, 16, 20] {
        let env = uniform_bath(n, 3);
        group.bench_with_input(BenchmarkId::new("spectrum", n), &env, |b, env| {
            b.iter(|| enumerate_spectrum(env, false).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("merged", n), &env, |b, env| {
            b.iter(|| enumerate_spectrum(env, true).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("streamed moments", n), &env, |b, env| {
            b.iter(|| WalkEnumerator::new(env, 24).unwrap().moments())
        });
    }
    let env = uniform_bath(24, 4);
    group.bench_function("streamed histogram/24", |b| {
        b.iter(|| {
            WalkEnumerator::new(&env, 24)
                .unwrap()
                .histogram(Binning::FreedmanDiaconis)
                .unwrap()
        })
    });
    group.finish();
}

criterion_group!(benches, enumerate);
criterion_main!(benches);
