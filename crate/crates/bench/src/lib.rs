//! Instance generators shared by the benchmarks.

use ordce::milp::{MilpModel, Relation};
use ordce::synth::{self, ModelKind, SynthConfig};
use ordce::{CostKind, OrdceProblem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Multi-dimensional knapsack: maximise value (as a minimisation of its
/// negative) subject to `rows` capacity constraints at half the total
/// weight. Variables are binary, or in `[0, 1]` when `integer` is false.
pub fn knapsack(seed: u64, n: usize, rows: usize, integer: bool) -> MilpModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = MilpModel::new("knap");
    let x: Vec<_> = (0..n).map(|j| m.add_var(format!("x{j}"), 0.0, 1.0, integer)).collect();
    for &v in &x {
        m.set_objective(v, -(rng.gen_range(1..=40) as f64));
    }
    for r in 0..rows {
        let w: Vec<f64> = (0..n).map(|_| rng.gen_range(1..=30) as f64).collect();
        let cap = (0.5 * w.iter().sum::<f64>()).floor();
        m.add_constraint(format!("cap{r}"), x.iter().copied().zip(w), Relation::Le, cap);
    }
    m
}

/// Balanced transportation LP with `n` sources and `n` sinks.
pub fn transport(seed: u64, n: usize) -> MilpModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = MilpModel::new("transp");
    let supply: Vec<f64> = (0..n).map(|_| rng.gen_range(5..=20) as f64).collect();
    let total: f64 = supply.iter().sum();
    let mut demand: Vec<f64> = (0..n).map(|_| (total / n as f64).floor()).collect();
    demand[0] += total - demand.iter().sum::<f64>();
    let mut flow = vec![Vec::with_capacity(n); n];
    for (i, row) in flow.iter_mut().enumerate() {
        for j in 0..n {
            let v = m.add_var(format!("f{i}_{j}"), 0.0, total, false);
            m.set_objective(v, rng.gen_range(1..=25) as f64);
            row.push(v);
        }
    }
    for i in 0..n {
        m.add_constraint(format!("s{i}"), flow[i].iter().map(|&v| (v, 1.0)), Relation::Eq, supply[i]);
    }
    for j in 0..n {
        m.add_constraint(format!("d{j}"), flow.iter().map(|r| (r[j], 1.0)), Relation::Eq, demand[j]);
    }
    m
}

/// Linear-model instance with `d` features, 6 candidates each and `K = 4`.
pub fn linear_instance(seed: u64, d: usize) -> OrdceProblem {
    synth::linear_problem(seed, d, 6, 4.min(d)).expect("generator parameters are valid")
}

/// Small mixed instance of the given model family, suitable for the
/// brute-force oracle.
pub fn small_instance(seed: u64, kind: ModelKind) -> OrdceProblem {
    synth::random_problem(seed, &SynthConfig { kind, ..SynthConfig::default() }).expect("generator parameters are valid")
}

/// First `count` rejected rows of the synthetic credit sample.
pub fn demo_instances(count: usize) -> Vec<OrdceProblem> {
    ordce::demo::corpus(11, 400, 6, count, CostKind::Tlps)
        .expect("demo corpus builds")
        .into_iter()
        .map(|(_, p)| p)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ordce::milp::{solve_bnb, solve_lp, LpStatus, SolveStatus, SolverParams};

    #[test]
    fn generators_are_deterministic_and_solvable() {
        let a = knapsack(3, 12, 2, true);
        assert_eq!(a.objective, knapsack(3, 12, 2, true).objective);
        assert_eq!(solve_bnb(&a, &SolverParams::default()).unwrap().status, SolveStatus::Optimal);
        assert_eq!(solve_lp(&knapsack(3, 12, 2, false)).unwrap().status, LpStatus::Optimal);
        assert_eq!(solve_lp(&transport(1, 6)).unwrap().status, LpStatus::Optimal);
        let p = linear_instance(1, 8);
        assert_eq!(p.dim(), 8);
        p.validate().unwrap();
        assert_eq!(demo_instances(3).len(), 3);
        for kind in [ModelKind::Linear, ModelKind::Forest, ModelKind::Relu] {
            let p = small_instance(0, kind);
            let e = ordce::extract(&p).unwrap();
            let o = ordce::brute_force(&p, &ordce::SearchBudget::default()).unwrap();
            assert!((e.objective - o.cost_total).abs() <= 1e-6);
        }
    }
}
