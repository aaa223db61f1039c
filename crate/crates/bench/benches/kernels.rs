use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use lrvqe_core::ansatz::apply_circuit;
use lrvqe_core::exact::{diagonalize_sector, Parity};
use lrvqe_core::seed::rng_from_seed;
use lrvqe_core::squeezing::SpinOperators;
use lrvqe_core::vqe::{gradient_parameter_shift, value_and_gradient};
use lrvqe_core::{build_hamiltonian, CircuitSpec, CompiledOperator, EnergyPenalty, ModelParams, ParameterVector, StateVector};

fn model(n: usize) -> ModelParams {
    ModelParams::new(n, 1.0, 0.5, 0.425 * std::f64::consts::PI).unwrap()
}

fn circuits(c: &mut Criterion) {
    let mut rng = rng_from_seed(1);
    for n in [10, 12] {
        let spec = CircuitSpec::parse("332211", n, 1.0).unwrap();
        let params = ParameterVector::random(&spec, 0.3, &mut rng).unwrap();
        let zero = StateVector::zero_state(n).unwrap();
        c.bench_function(&format!("apply_circuit/332211/N={n}"), |b| {
            b.iter(|| apply_circuit(&spec, black_box(&params), &zero).unwrap())
        });
    }
}

fn gradients(c: &mut Criterion) {
    let mut rng = rng_from_seed(2);
    let n = 10;
    let spec = CircuitSpec::parse("332211", n, 1.0).unwrap();
    let params = ParameterVector::random(&spec, 0.3, &mut rng).unwrap();
    let zero = StateVector::zero_state(n).unwrap();
    let obj = EnergyPenalty::for_model(&model(n)).unwrap();
    c.bench_function("gradient/adjoint/N=10", |b| b.iter(|| value_and_gradient(&obj, &spec, black_box(&params), &zero).unwrap()));
    let mut group = c.benchmark_group("gradient/parameter_shift");
    group.sample_size(10);
    group.bench_function("N=10", |b| b.iter(|| gradient_parameter_shift(&obj, &spec, black_box(&params), &zero).unwrap()));
    group.finish();
}

fn expectations(c: &mut Criterion) {
    let mut rng = rng_from_seed(3);
    for n in [10, 14] {
        let h = CompiledOperator::new(&build_hamiltonian(&model(n)).unwrap()).unwrap();
        let psi = StateVector::random(n, &mut rng).unwrap();
        c.bench_function(&format!("expectation/hamiltonian/N={n}"), |b| b.iter(|| h.expectation(black_box(psi.amplitudes()))));
        let spins = SpinOperators::new(n).unwrap();
        c.bench_function(&format!("spin_moments/N={n}"), |b| b.iter(|| spins.moments(black_box(&psi)).unwrap()));
    }
}

fn diagonalization(c: &mut Criterion) {
    let mut group = c.benchmark_group("diagonalize_sector");
    group.sample_size(10);
    for n in [8, 10, 12] {
        let h = build_hamiltonian(&model(n)).unwrap();
        group.bench_function(format!("N={n}"), |b| b.iter(|| diagonalize_sector(black_box(&h), Parity::Even).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, circuits, gradients, expectations, diagonalization);
criterion_main!(benches);
