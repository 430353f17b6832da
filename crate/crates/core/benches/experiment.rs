//! Sequential vs data-parallel evaluation of experiment cells on the bundled fixture.
//!
//! Run with `cargo bench -p caresim`; build with `--no-default-features` to see
//! the parallel variants fall back to sequential.

use std::hint::black_box;
use std::path::Path;

use caresim::config::LoadedConfig;
use caresim::indicators::{walkability_grid, GridSpec};
use caresim::scenarios::run_experiment;
use caresim::Execution;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn fixture() -> LoadedConfig {
    let path =
        Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/mountain-town/experiment.json");
    LoadedConfig::load(&path).expect("fixture config")
}

fn experiment(c: &mut Criterion) {
    let cfg = fixture();
    let mut exp = cfg.experiment.clone();
    exp.replicates = 8;
    let inputs = cfg.inputs();

    let mut group = c.benchmark_group("experiment_8x2");
    group.sample_size(10);
    let strategies = [
        ("sequential", Execution::Sequential),
        ("threads_2", Execution::Threads(2)),
        ("threads_4", Execution::Threads(4)),
        ("parallel", Execution::Parallel),
    ];
    for (name, execution) in strategies {
        group.bench_with_input(
            BenchmarkId::from_parameter(name),
            &execution,
            |b, &execution| b.iter(|| run_experiment(black_box(&inputs), &exp, execution).unwrap()),
        );
    }
    group.finish();
}

fn grid(c: &mut Criterion) {
    let cfg = fixture();
    let spec = GridSpec::covering(&cfg.net, cfg.config.grid.cell_size);
    c.bench_function("walkability_grid", |b| {
        b.iter(|| walkability_grid(black_box(&cfg.net), &spec, &cfg.indicators).unwrap())
    });
}

criterion_group!(benches, experiment, grid);
criterion_main!(benches);
