use criterion::{criterion_group, criterion_main, BatchSize, Criterion, Throughput};
use crossex_bench::{cross_env, market, records, MINUTE_NS};
use crossex_core::capture::{resample, venues_of};
use crossex_core::eval::{ExecPolicy, Twap};
use crossex_core::ppo::{ExecTraining, Trainer};
use crossex_core::signals::{compute_features, FeatureParams};
use crossex_core::{PpoConfig, GRID_NS};
use std::hint::black_box;

fn bench_resample(c: &mut Criterion) {
    let recs = records(MINUTE_NS);
    let venues = venues_of(&recs);
    let mut g = c.benchmark_group("capture");
    g.throughput(Throughput::Elements(recs.len() as u64));
    g.bench_function("resample_1min", |b| b.iter(|| resample(black_box(&recs), &venues, GRID_NS).unwrap()));
    g.finish();
}

fn bench_features(c: &mut Criterion) {
    let m = market(MINUTE_NS);
    let params = FeatureParams::default();
    let mut g = c.benchmark_group("signals");
    g.throughput(Throughput::Elements(m.table.len() as u64));
    g.bench_function("features_1min", |b| b.iter(|| compute_features(black_box(&m.table), &params)));
    g.finish();
}

fn bench_env(c: &mut Criterion) {
    let env = cross_env(2 * MINUTE_NS);
    let start = env.data().nth_start(env.spec().episode_steps(), 0).expect("one episode fits");
    let spec = env.spec().clone();
    let mut g = c.benchmark_group("execenv");
    g.throughput(Throughput::Elements(env.spec().decisions as u64));
    g.bench_function("twap_episode", |b| b.iter(|| env.run(black_box(start), |st| Twap.act(st, &spec)).unwrap()));
    g.finish();
}

fn bench_ppo(c: &mut Criterion) {
    let env = cross_env(2 * MINUTE_NS);
    let cfg = PpoConfig::default();
    let training = || ExecTraining { env: env.clone(), exploring_starts: cfg.exploring_starts };
    let trainer = Trainer::new(training(), cfg.clone()).unwrap();
    let mut g = c.benchmark_group("ppo");
    g.sample_size(10);
    g.bench_function("collect_2048", |b| b.iter(|| trainer.collect().unwrap()));
    let rollout = trainer.collect().unwrap();
    g.bench_function("update_2048", |b| {
        b.iter_batched(
            || Trainer::new(training(), cfg.clone()).unwrap(),
            |mut t| t.update(&rollout).unwrap(),
            BatchSize::LargeInput,
        )
    });
    g.finish();
}

criterion_group!(benches, bench_resample, bench_features, bench_env, bench_ppo);
criterion_main!(benches);
