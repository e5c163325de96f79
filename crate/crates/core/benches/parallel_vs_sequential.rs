use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use flexserve::oracle::SmallInstanceBounds;
use flexserve::verify::{adequacy_suite, AdequacyPredicates};
use flexserve::{
    estimate_v_with, profit_with, subgradient_with, DecisionPoint, EnergyVector, Execution,
    MarketModel, Portfolio, ScenarioGenerator, Service,
};

const STRATEGIES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn scenario_evaluation(c: &mut Criterion) {
    let horizon = 24;
    let scenarios = ScenarioGenerator::default()
        .generate(horizon, 2000, 42)
        .unwrap();
    let services = (0..40)
        .map(|i| Service::new(6 + i % 12, 1 + i % 3))
        .collect();
    let portfolio = Portfolio::new(horizon, services).unwrap();
    let y = EnergyVector::new(vec![3; horizon]).unwrap();

    let mm = MarketModel::new(
        horizon,
        (1..=horizon).map(|t| 2.0 * t as f64).collect(),
        1.5,
        4.0,
    )
    .unwrap();
    let point = DecisionPoint::new(
        (0..horizon).map(|t| 20.0 - 0.5 * t as f64).collect(),
        vec![2.5; horizon],
    )
    .unwrap();

    let mut group = c.benchmark_group("scenarios");
    for (name, exec) in STRATEGIES {
        group.bench_with_input(BenchmarkId::new("estimate_v", name), &exec, |b, &exec| {
            b.iter(|| estimate_v_with(black_box(&portfolio), &y, &scenarios, 4.0, exec).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("profit", name), &exec, |b, &exec| {
            b.iter(|| profit_with(&mm, black_box(&point), &scenarios, exec).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("subgradient", name), &exec, |b, &exec| {
            b.iter(|| subgradient_with(&mm, black_box(&point), &scenarios, exec).unwrap())
        });
    }
    group.finish();
}

fn oracle_sweep(c: &mut Criterion) {
    let bounds = SmallInstanceBounds::new(3, 3, 3, 3).unwrap();
    let mut group = c.benchmark_group("oracle");
    group.sample_size(10);
    for (name, exec) in STRATEGIES {
        group.bench_with_input(
            BenchmarkId::new("adequacy_suite", name),
            &exec,
            |b, &exec| {
                b.iter(|| adequacy_suite(&bounds, AdequacyPredicates::default(), exec).unwrap())
            },
        );
    }
    group.finish();
}

criterion_group!(benches, scenario_evaluation, oracle_sweep);
criterion_main!(benches);
