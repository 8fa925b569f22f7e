use std::time::Duration;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ordce::milp::{solve_bnb, solve_lp, SolverParams};
use ordce::synth::ModelKind;
use ordce::{brute_force, build_milo, compute_interaction_matrix, extract, greedy, SearchBudget};
use ordce_bench::{demo_instances, knapsack, linear_instance, small_instance, transport};

fn lp(c: &mut Criterion) {
    let mut g = c.benchmark_group("lp");
    for n in [10, 20] {
        let m = transport(7, n);
        g.bench_with_input(BenchmarkId::new("transport", n), &m, |b, m| b.iter(|| solve_lp(m).unwrap()));
    }
    for n in [30, 60] {
        let m = knapsack(7, n, 5, false);
        g.bench_with_input(BenchmarkId::new("knapsack_relaxation", n), &m, |b, m| b.iter(|| solve_lp(m).unwrap()));
    }
    g.finish();
}

fn bnb(c: &mut Criterion) {
    let mut g = c.benchmark_group("bnb");
    g.sample_size(20);
    for n in [15, 25] {
        let m = knapsack(11, n, 3, true);
        g.bench_with_input(BenchmarkId::new("knapsack", n), &m, |b, m| {
            b.iter(|| solve_bnb(m, &SolverParams::default()).unwrap())
        });
    }
    g.finish();
}

fn ordce_extract(c: &mut Criterion) {
    let mut g = c.benchmark_group("extract");
    g.sample_size(10).measurement_time(Duration::from_secs(20));
    for d in [5, 10, 15] {
        let p = linear_instance(1, d);
        g.bench_with_input(BenchmarkId::new("linear", d), &p, |b, p| b.iter(|| extract(p).unwrap()));
    }
    let demo = demo_instances(5);
    g.bench_function("demo_corpus_5", |b| {
        b.iter(|| demo.iter().map(|p| extract(p).unwrap().objective).sum::<f64>())
    });
    g.bench_function("greedy_demo_corpus_5", |b| {
        b.iter(|| demo.iter().map(|p| greedy(p, true).unwrap().action.cost_total).sum::<f64>())
    });
    let p = linear_instance(1, 15);
    g.bench_function("build_milo_15", |b| b.iter(|| build_milo(&p).unwrap()));
    g.finish();
}

fn oracle(c: &mut Criterion) {
    let mut g = c.benchmark_group("oracle");
    g.sample_size(10);
    for (name, kind) in [("linear", ModelKind::Linear), ("forest", ModelKind::Forest), ("relu", ModelKind::Relu)] {
        let p = small_instance(0, kind);
        g.bench_function(BenchmarkId::new("brute_force", name), |b| {
            b.iter(|| brute_force(&p, &SearchBudget::default()).unwrap())
        });
        g.bench_function(BenchmarkId::new("extract", name), |b| b.iter(|| extract(&p).unwrap()));
    }
    g.finish();
}

fn interaction(c: &mut Criterion) {
    let d = 60;
    let mut adj = vec![vec![0.0; d]; d];
    for (i, row) in adj.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate().skip(i + 1) {
            if (i * 7 + j * 3) % 5 == 0 {
                *v = 0.1 * ((i + j) % 7) as f64 - 0.3;
            }
        }
    }
    c.bench_function("interaction_matrix_60", |b| b.iter(|| compute_interaction_matrix(&adj).unwrap()));
}

criterion_group!(benches, lp, bnb, ordce_extract, oracle, interaction);
criterion_main!(benches);
