use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ordce::milp::{solve_bnb, solve_lp, to_mps_string, LpStatus, MilpModel, Relation, SolveStatus, SolverParams};

fn random_model(seed: u64, n: usize, rows: usize, integer_share: f64) -> MilpModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = MilpModel::new("rand");
    let vars: Vec<_> = (0..n)
        .map(|j| {
            let lo = rng.gen_range(-3..=0) as f64;
            let hi = lo + rng.gen_range(1..=4) as f64;
            m.add_var(format!("x{j}"), lo, hi, rng.gen_bool(integer_share))
        })
        .collect();
    for &v in &vars {
        m.set_objective(v, rng.gen_range(-4.0..4.0));
    }
    for r in 0..rows {
        let terms: Vec<_> = vars.iter().map(|&v| (v, (rng.gen_range(-3.0..3.0f64) * 4.0).round() / 4.0)).collect();
        let rel = [Relation::Le, Relation::Ge, Relation::Eq][rng.gen_range(0..3)];
        let rhs = (rng.gen_range(-4.0..4.0f64) * 2.0).round() / 2.0;
        m.add_constraint(format!("r{r}"), terms, rel, rhs);
    }
    m
}

/// Solves the square system `a x = b` by Gaussian elimination; `None` when
/// singular.
fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[p][c].abs() < 1e-9 {
            return None;
        }
        a.swap(c, p);
        b.swap(c, p);
        for r in 0..n {
            if r != c {
                let f = a[r][c] / a[c][c];
                for k in c..n {
                    a[r][k] -= f * a[c][k];
                }
                b[r] -= f * b[c];
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

/// LP optimum by enumerating every basic solution: each choice of `n`
/// active hyperplanes among rows and bounds.
fn vertex_oracle(m: &MilpModel) -> Option<f64> {
    let n = m.num_vars();
    let mut planes: Vec<(Vec<f64>, f64)> = Vec::new();
    for c in &m.constraints {
        let mut row = vec![0.0; n];
        for &(v, a) in &c.terms {
            row[v.0] += a;
        }
        planes.push((row, c.rhs));
    }
    for (j, v) in m.variables.iter().enumerate() {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        planes.push((e.clone(), v.lower));
        planes.push((e, v.upper));
    }
    let mut best: Option<f64> = None;
    let mut pick = vec![0usize; n];
    fn rec(
        start: usize,
        depth: usize,
        pick: &mut Vec<usize>,
        planes: &[(Vec<f64>, f64)],
        m: &MilpModel,
        best: &mut Option<f64>,
    ) {
        let n = pick.len();
        if depth == n {
            let a = pick.iter().map(|&i| planes[i].0.clone()).collect();
            let b = pick.iter().map(|&i| planes[i].1).collect();
            if let Some(x) = solve_square(a, b) {
                if m.violations(&x).0 <= 1e-8 {
                    let z = m.objective_value(&x);
                    if best.is_none_or(|v| z < v) {
                        *best = Some(z);
                    }
                }
            }
            return;
        }
        for i in start..planes.len() {
            pick[depth] = i;
            rec(i + 1, depth + 1, pick, planes, m, best);
        }
    }
    rec(0, 0, &mut pick, &planes, m, &mut best);
    best
}

/// Integer optimum of a model with few integer points and continuous
/// columns absent.
fn enumerate_integers(m: &MilpModel) -> Option<f64> {
    let n = m.num_vars();
    let mut x: Vec<f64> = m.variables.iter().map(|v| v.lower).collect();
    let mut best: Option<f64> = None;
    loop {
        if m.violations(&x).0 <= 1e-9 {
            let z = m.objective_value(&x);
            if best.is_none_or(|v| z < v) {
                best = Some(z);
            }
        }
        let mut j = 0;
        loop {
            if j == n {
                return best;
            }
            if x[j] + 1.0 <= m.variables[j].upper {
                x[j] += 1.0;
                break;
            }
            x[j] = m.variables[j].lower;
            j += 1;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn lp_matches_vertex_enumeration(seed in any::<u64>(), n in 1usize..4, rows in 0usize..4) {
        let m = random_model(seed, n, rows, 0.0);
        let lp = solve_lp(&m).unwrap();
        match vertex_oracle(&m) {
            Some(z) => {
                prop_assert_eq!(lp.status, LpStatus::Optimal);
                prop_assert!((lp.objective - z).abs() <= 1e-7 * (1.0 + z.abs()), "lp {} oracle {}", lp.objective, z);
                prop_assert!(m.violations(&lp.x).0 <= 1e-7);
            }
            None => prop_assert_eq!(lp.status, LpStatus::Infeasible),
        }
    }

    #[test]
    fn bnb_matches_enumeration(seed in any::<u64>(), n in 1usize..6, rows in 1usize..4) {
        let m = random_model(seed, n, rows, 1.0);
        let r = solve_bnb(&m, &SolverParams::default()).unwrap();
        match enumerate_integers(&m) {
            Some(z) => {
                prop_assert_eq!(r.status, SolveStatus::Optimal);
                prop_assert!((r.objective - z).abs() <= 1e-7 * (1.0 + z.abs()), "bnb {} enum {}", r.objective, z);
            }
            None => prop_assert_eq!(r.status, SolveStatus::Infeasible),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn incumbent_is_feasible_and_deterministic(seed in any::<u64>(), n in 2usize..10, rows in 1usize..6) {
        let m = random_model(seed, n, rows, 0.6);
        let p = SolverParams { record_trace: true, ..SolverParams::default() };
        let a = solve_bnb(&m, &p).unwrap();
        let b = solve_bnb(&m, &p).unwrap();
        prop_assert_eq!(a.status, b.status);
        prop_assert_eq!(a.objective.to_bits(), b.objective.to_bits());
        prop_assert_eq!(&a.solution, &b.solution);
        prop_assert_eq!(a.nodes, b.nodes);
        if let Some(x) = &a.solution {
            let (row, int) = m.violations(x);
            prop_assert!(row <= 1e-6 && int <= 1e-6);
            prop_assert!((m.objective_value(x) - a.objective).abs() <= 1e-9);
            prop_assert!(a.best_bound <= a.objective + 1e-9);
        }
        let threaded = solve_bnb(&m, &SolverParams { threads: 3, ..SolverParams::default() }).unwrap();
        prop_assert_eq!(threaded.status, a.status);
        if a.solution.is_some() {
            prop_assert!((threaded.objective - a.objective).abs() <= 1e-6 * (1.0 + a.objective.abs()));
        }
    }

    #[test]
    fn mps_export_is_stable(seed in any::<u64>(), n in 1usize..8, rows in 0usize..5) {
        let m = random_model(seed, n, rows, 0.5);
        let first = to_mps_string(&m).unwrap();
        prop_assert_eq!(&first, &to_mps_string(&m.clone()).unwrap());
        prop_assert!(first.starts_with("NAME"));
        prop_assert!(first.trim_end().ends_with("ENDATA"));
    }
}
