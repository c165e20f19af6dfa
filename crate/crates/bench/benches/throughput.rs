use criterion::{criterion_group, criterion_main, BatchSize, Criterion, Throughput};
use ppmlab::analytics::{expected_disruptions_exact, expected_location_exact};
use ppmlab::harness::{simulate, substream};
use ppmlab::oracles::enumerate_orderings;
use ppmlab::policy::{StreamEvaluator, StreamTrace, TraceMode};
use ppmlab::AttackModel;
use ppmlab_bench::{campaign, reference_model, reference_policies};
use rand::SeedableRng;

fn sampling(c: &mut Criterion) {
    let sampler = reference_model().sampler();
    let mut rng = bench_rng();
    let mut group = c.benchmark_group("sampler");
    group.throughput(Throughput::Elements(1));
    group.bench_function("draw", |b| b.iter(|| sampler.sample(&mut rng)));
    group.finish();
}

fn bench_rng() -> impl rand::Rng {
    rand::rngs::StdRng::seed_from_u64(7)
}

fn stream_evaluation(c: &mut Criterion) {
    let model = reference_model();
    let sampler = model.sampler();
    let evaluator = StreamEvaluator::new(&model, &reference_policies(&model)).unwrap();
    let mut trace = StreamTrace::default();
    let mut it = 0u64;
    c.bench_function("iteration/all_policies_full_trace", |b| {
        b.iter_batched(
            || {
                it += 1;
                substream(42, 0, it)
            },
            |mut rng| {
                evaluator.evaluate_into(
                    sampler.stream(&mut rng),
                    TraceMode::FullCollection,
                    &mut trace,
                )
            },
            BatchSize::SmallInput,
        )
    });
}

fn campaign_block(c: &mut Criterion) {
    let config = campaign(4096);
    let mut group = c.benchmark_group("campaign");
    group.sample_size(10);
    group.throughput(Throughput::Elements(config.iterations));
    group.bench_function("4096_iterations", |b| b.iter(|| simulate(&config).unwrap()));
    group.finish();
}

fn analytics(c: &mut Criterion) {
    let model = AttackModel::with_reciprocal_probability(1000).unwrap();
    c.bench_function("analytics/location_curve_n1000", |b| {
        b.iter(|| {
            (1..=1000)
                .map(|i| expected_location_exact(&model, i).unwrap())
                .sum::<f64>()
        })
    });
    c.bench_function("analytics/disruption_curve_n1000", |b| {
        b.iter(|| {
            (1..=1000)
                .map(|i| expected_disruptions_exact(&model, i).unwrap())
                .sum::<f64>()
        })
    });
    let small = AttackModel::new(7, 1.0 / 7.0).unwrap();
    c.bench_function("oracle/enumerate_n7", |b| {
        b.iter(|| enumerate_orderings(&small).unwrap())
    });
}

criterion_group!(
    benches,
    sampling,
    stream_evaluation,
    campaign_block,
    analytics
);
criterion_main!(benches);
