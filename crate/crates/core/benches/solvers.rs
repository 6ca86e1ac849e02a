// SPDX-License-Identifier: MIT OR Apache-2.0

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fpseg::oracle::{enumerate_constrained_with, OracleModel};
use fpseg::synthetic::{noisy_steps, planted_peaks};
use fpseg::{
    gfpop_solve_batch, gpdpa_solve, gpdpa_solve_batch, preset_graph, ConstraintSchedule, Execution, LossFamily,
    Preset, WeightedSequence,
};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn batch(count: usize, n: usize) -> Vec<WeightedSequence> {
    (0..count as u64)
        .map(|seed| WeightedSequence::unit(&planted_peaks(n, 8, 2.0, 12.0, seed)).unwrap())
        .collect()
}

fn segment_budget_batch(c: &mut Criterion) {
    let mut group = c.benchmark_group("updown_budget_batch");
    group.sample_size(10);
    let data = batch(16, 2_000);
    for (name, exec) in MODES {
        group.bench_function(name, |b| {
            b.iter(|| gpdpa_solve_batch(&data, 9, &ConstraintSchedule::UpDown, LossFamily::Poisson, exec))
        });
    }
    group.finish();
}

fn penalized_batch(c: &mut Criterion) {
    let mut group = c.benchmark_group("updown_penalized_batch");
    group.sample_size(10);
    let data = batch(16, 5_000);
    let graph = preset_graph(Preset::UpDown, &[20.0, 20.0]).unwrap();
    for (name, exec) in MODES {
        group.bench_function(name, |b| b.iter(|| gfpop_solve_batch(&data, &graph, LossFamily::Poisson, exec)));
    }
    group.finish();
}

fn oracle_enumeration(c: &mut Criterion) {
    let mut group = c.benchmark_group("oracle_enumeration");
    group.sample_size(10);
    let data = WeightedSequence::unit(&noisy_steps(10, 3, 2.0, 0.5, 7)).unwrap();
    let schedule = ConstraintSchedule::ReducedIsotonic;
    for (name, exec) in MODES {
        group.bench_function(name, |b| {
            b.iter(|| {
                enumerate_constrained_with(&data, OracleModel::Schedule { k: 4, schedule: &schedule }, LossFamily::Square, 256, exec)
                    .unwrap()
            })
        });
    }
    group.finish();
}

fn single_solve_scaling(c: &mut Criterion) {
    let mut group = c.benchmark_group("updown_budget_by_n");
    group.sample_size(10);
    for n in [1_000, 4_000, 16_000] {
        let data = WeightedSequence::unit(&planted_peaks(n, 8, 2.0, 12.0, 1)).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &data, |b, data| {
            b.iter(|| gpdpa_solve(data, 19, &ConstraintSchedule::UpDown, LossFamily::Poisson).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, segment_budget_batch, penalized_batch, oracle_enumeration, single_solve_scaling);
criterion_main!(benches);
