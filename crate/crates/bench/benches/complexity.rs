use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use evotrend_bench::synthetic_recording;
use evotrend_core::complexity::{
    analyze_recording, build_trace, complexity_approx, complexity_exact, CovarianceModel,
};
use evotrend_core::rng::{keyed_stream, Purpose};
use evotrend_core::{ComplexitySettings, NeuronFilter};

fn model(n: usize) -> CovarianceModel {
    let rec = synthetic_recording(400, n, n as u64);
    let mut rng = keyed_stream(1, Purpose::Jitter, 0);
    CovarianceModel::from_trace(&build_trace(&rec, NeuronFilter::Processing, 1e-6, None, &mut rng))
}

fn measures(c: &mut Criterion) {
    let mut g = c.benchmark_group("measure");
    for n in [4, 8, 12] {
        let m = model(n);
        g.bench_with_input(BenchmarkId::new("exact", n), &m, |b, m| b.iter(|| complexity_exact(m, 16)));
    }
    for n in [8, 32, 64, 128] {
        let m = model(n);
        g.bench_with_input(BenchmarkId::new("approx", n), &m, |b, m| b.iter(|| complexity_approx(m)));
    }
    g.finish();
}

fn lifetimes(c: &mut Criterion) {
    let settings = ComplexitySettings::default();
    let mut g = c.benchmark_group("lifetime");
    g.sample_size(20);
    for (t, n) in [(200, 20), (1000, 40), (1000, 120)] {
        let rec = synthetic_recording(t, n, 7);
        g.bench_with_input(BenchmarkId::from_parameter(format!("{t}x{n}")), &rec, |b, rec| {
            b.iter(|| analyze_recording(rec, &settings, &mut keyed_stream(1, Purpose::Jitter, rec.agent_id)))
        });
    }
    g.finish();
}

criterion_group!(benches, measures, lifetimes);
criterion_main!(benches);
