use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use num_complex::Complex64 as C64;
use std::hint::black_box;

use scjc::dopa::{dopa_amplitude, BoundaryData, DopaOptions};
use scjc::exact::{full_propagator_element, JcState};
use scjc::model::{CanonicalCoherentState, ModelParams, SpinCoherentState};
use scjc::par::{map, Execution};

fn exact_grid(c: &mut Criterion) {
    let state = JcState::Coherent {
        field: CanonicalCoherentState::from_amplitude(C64::new(2.0, 1.0)),
        spin: SpinCoherentState::new(0.7, 0.2).unwrap(),
    };
    let points: Vec<(f64, f64)> = (0..64).map(|k| (0.05 + 0.015 * k as f64, 0.1 * (k % 7) as f64)).collect();
    let mut group = c.benchmark_group("exact_series");
    for exec in [Execution::Sequential, Execution::Parallel] {
        group.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &exec, |b, &exec| {
            b.iter(|| {
                map(&points, exec, |&(l, d)| {
                    let p = ModelParams::new(l, d).unwrap();
                    (0..50)
                        .map(|k| full_propagator_element(&state, &state, 0.4 * k as f64, &p, 60).unwrap().value)
                        .sum::<C64>()
                })
            })
        });
    }
    group.finish();
}

fn dopa_grid(c: &mut Criterion) {
    let bd = BoundaryData::new(C64::new(0.4, 0.1), C64::new(0.3, -0.2), C64::new(0.35, 0.2), C64::new(0.25, 0.3), 4.0)
        .unwrap();
    let couplings: Vec<f64> = (0..16).map(|k| 0.05 + 0.025 * k as f64).collect();
    let opts = DopaOptions::default();
    let mut group = c.benchmark_group("dopa_amplitudes");
    group.sample_size(10);
    for exec in [Execution::Sequential, Execution::Parallel] {
        group.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &exec, |b, &exec| {
            b.iter(|| {
                map(&couplings, exec, |&l| {
                    let p = ModelParams::new(l, 0.1).unwrap();
                    dopa_amplitude(black_box(&bd), &p, &opts).unwrap().1.element.value
                })
            })
        });
    }
    group.finish();
}

criterion_group!(benches, exact_grid, dopa_grid);
criterion_main!(benches);
