use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use qmc_core::oracle::{expectation, simulate};
use qmc_core::par::map_indexed_seq;
use qmc_core::rounding::{build_circuit, compute_gammas, derive_seed, sample_assignment, EdgeParameters};
use qmc_core::sdp::{solve_graph, SolverConfig, VectorSolution};
use qmc_core::{generate, Graph};

struct Instance {
    graph: Graph,
    vs: VectorSolution,
    params: EdgeParameters,
}

fn instance(spec: &str, seed: u64) -> Instance {
    let graph = generate(&spec.parse().unwrap(), seed).unwrap();
    let (_, vs) = solve_graph(&graph, &SolverConfig::default()).unwrap();
    let gammas = compute_gammas(&vs, &graph, 1e-5).unwrap();
    let params = EdgeParameters::from_gammas(gammas, qmc_core::rounding::DEFAULT_ALPHA0);
    Instance { graph, vs, params }
}

fn sample_energy(inst: &Instance, k: usize) -> f64 {
    let assign = sample_assignment(&inst.vs, derive_seed(7, k as u64));
    let psi = simulate(&build_circuit(&assign, &inst.params, &inst.graph).unwrap(), 16).unwrap();
    expectation(&psi, &inst.graph)
}

fn rounding(c: &mut Criterion) {
    let inst = instance("erdos_renyi:8,0.4", 1);
    let mut group = c.benchmark_group("monte_carlo_energy");
    for rounds in [100usize, 1000] {
        group.bench_with_input(BenchmarkId::new("sequential", rounds), &rounds, |b, &r| {
            b.iter(|| black_box(map_indexed_seq(r, |k| sample_energy(&inst, k))))
        });
        #[cfg(feature = "parallel")]
        group.bench_with_input(BenchmarkId::new("parallel", rounds), &rounds, |b, &r| {
            b.iter(|| black_box(qmc_core::par::map_indexed_par(r, |k| sample_energy(&inst, k))))
        });
    }
    group.finish();
}

fn hyperplane(c: &mut Criterion) {
    let inst = instance("complete:10", 0);
    let mut group = c.benchmark_group("hyperplane_sampling");
    let rounds = 20_000;
    group.bench_function("sequential", |b| {
        b.iter(|| black_box(map_indexed_seq(rounds, |k| sample_assignment(&inst.vs, k as u64).bits)))
    });
    #[cfg(feature = "parallel")]
    group.bench_function("parallel", |b| {
        b.iter(|| black_box(qmc_core::par::map_indexed_par(rounds, |k| sample_assignment(&inst.vs, k as u64).bits)))
    });
    group.finish();
}

criterion_group!(benches, rounding, hyperplane);
criterion_main!(benches);
