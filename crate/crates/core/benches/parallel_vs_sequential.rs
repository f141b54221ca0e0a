use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use distsig::dist::{run_corpus, BoundsConfig};
use distsig::exec::Execution;
use distsig::gnn::{run_seeds, sbm_dataset, AnalysisContext, SbmFeatures, SplitSpec, TrainConfig};

const MODES: [(&str, Execution); 2] =
    [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn bounds_corpus(c: &mut Criterion) {
    let cfg = BoundsConfig { trials: 64, ..Default::default() };
    let mut group = c.benchmark_group("bounds_corpus");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| black_box(run_corpus(&cfg, exec).unwrap().violation_count))
        });
    }
    group.finish();
}

fn seed_sweep(c: &mut Criterion) {
    let ds = sbm_dataset(200, 4, 0.1, 0.01, SbmFeatures::Gaussian, 0).unwrap();
    let ctx = AnalysisContext::new(&ds.graph).unwrap();
    let spec = SplitSpec::labelled(200, 4, 5);
    let cfg = TrainConfig { epochs: 50, ..Default::default() };
    let seeds: Vec<u64> = (0..8).collect();
    let mut group = c.benchmark_group("sbm_seed_sweep");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| black_box(run_seeds(&ds, &ctx, &cfg, spec, &seeds, exec).unwrap().len()))
        });
    }
    group.finish();
}

criterion_group!(benches, bounds_corpus, seed_sweep);
criterion_main!(benches);
