//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::HashMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ordce::baselines::{brute_force, greedy, SearchBudget};
use ordce::cost_model::{actual_perturbations, ordering_cost, CostKind, DistanceCost, ScalingFactors};
use ordce::demo;
use ordce::feature_space::{support, ActionSet};
use ordce::interaction::{compute_interaction_matrix, InteractionMatrix};
use ordce::milp::{solve_bnb, to_mps_string, MilpModel, NodeOutcome, NodeRecord, Relation, SolveStatus, SolverParams};
use ordce::ordce::{build_milo, extract, sweep_gamma, OrdceProblem};
use ordce::partial_order::{linear_extensions, reduce_to_partial_order};
use ordce::synth::{self, ModelKind, SynthConfig};
use ordce::{AdditiveClassifier, Error};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn demo_m() -> InteractionMatrix {
    compute_interaction_matrix(&demo::adjacency()).unwrap()
}

fn criterion_1() -> Outcome {
    let m = demo_m();
    let s = ScalingFactors::unit(5);
    let a = [0.0, 0.0, 4.0, 1.0, 3.0];
    let sigma = [3, 2, 4];
    let sigma_o = [4, 3, 2];
    let d = actual_perturbations(&a, &sigma, &m).map_err(|e| e.to_string())?;
    let d_o = actual_perturbations(&a, &sigma_o, &m).map_err(|e| e.to_string())?;
    ensure!(d == vec![1.0, 0.0, 3.5], "delta for (4,3,5) is {d:?}");
    ensure!(d_o == vec![3.0, 1.0, 0.0], "delta for (5,4,3) is {d_o:?}");
    let c = ordering_cost(&a, &sigma, &m, &s).map_err(|e| e.to_string())?;
    let c_o = ordering_cost(&a, &sigma_o, &m, &s).map_err(|e| e.to_string())?;
    ensure!(c == 4.5 && c_o == 4.0, "ordering costs {c} and {c_o}");
    Ok(format!("delta {d:?} vs {d_o:?}, C_ord {c} vs {c_o}"))
}

/// Five features with the demo interaction; only Income (3) may rise by 6
/// and JobSkill (2) by 1.
fn example_two(c2: f64, c3: f64) -> OrdceProblem {
    let x = vec![0.0; 5];
    let lists = vec![vec![0.0], vec![0.0, 1.0], vec![0.0, 6.0], vec![0.0], vec![0.0]];
    let costs = vec![vec![0.0], vec![0.0, c2], vec![0.0, c3], vec![0.0], vec![0.0]];
    let clf = AdditiveClassifier::linear(vec![0.0, 0.0, 1.0, 0.0, 0.0], 6.0).unwrap();
    OrdceProblem::new(
        clf,
        x,
        ActionSet::new(lists).unwrap(),
        demo_m(),
        DistanceCost::new(CostKind::Table, costs).unwrap(),
        ScalingFactors::unit(5),
    )
    .with_k(2)
}

fn criterion_2() -> Outcome {
    let m = demo_m();
    let s = ScalingFactors::unit(5);
    let a = [0.0, 0.0, 6.0, 0.0, 0.0];
    let a_o = [0.0, 1.0, 6.0, 0.0, 0.0];
    let ord = ordering_cost(&a, &[2], &m, &s).map_err(|e| e.to_string())?;
    let ord_o = ordering_cost(&a_o, &[1, 2], &m, &s).map_err(|e| e.to_string())?;
    ensure!(ord == 6.0 && ord_o == 1.0, "ordering costs {ord}, {ord_o}");
    let mut checked = 0;
    for &(c2, c3) in &[(0.5, 1.0), (1.0, 0.3), (2.5, 2.0), (0.1, 4.0)] {
        let threshold = c2 / (6.0 * s.get(2) - s.get(1));
        ensure!((threshold - c2 / 5.0).abs() <= 1e-12, "threshold {threshold}");
        for j in 0..=40 {
            let gamma = threshold * j as f64 / 20.0;
            let plain = c3 + gamma * ord;
            let ordered = c2 + c3 + gamma * ord_o;
            let diff = plain - ordered;
            if gamma < threshold - 1e-9 {
                ensure!(diff < 0.0, "gamma {gamma}: plain action should win, diff {diff}");
            } else if gamma > threshold + 1e-9 {
                ensure!(diff > 0.0, "gamma {gamma}: ordered action should win, diff {diff}");
            } else {
                ensure!(diff.abs() <= 1e-9, "crossing at gamma {gamma} has diff {diff}");
            }
            checked += 1;
        }
        let p = example_two(c2, c3);
        let sweep = sweep_gamma(&p, &[0.9 * threshold, 1.1 * threshold]).map_err(|e| e.to_string())?;
        let below = sweep[0].result.as_ref().map_err(|e| e.to_string())?;
        let above = sweep[1].result.as_ref().map_err(|e| e.to_string())?;
        ensure!(
            below.action.action == a && below.action.order == vec![2],
            "solver below threshold returned {:?} {:?}",
            below.action.action,
            below.action.order
        );
        ensure!(
            above.action.action == a_o && above.action.order == vec![1, 2],
            "solver above threshold returned {:?} {:?}",
            above.action.action,
            above.action.order
        );
    }
    Ok(format!("{checked} grid points over 4 cost pairs, solver flips across c_2/5"))
}

fn criterion_3() -> Outcome {
    let m = demo_m();
    let expected = vec![
        vec![1.0, 1.0, 6.0, 0.0, 0.0],
        vec![0.0, 1.0, 6.0, 0.0, 0.0],
        vec![0.0, 0.0, 1.0, 0.0, 0.0],
        vec![0.0, 0.0, 4.0, 1.0, -0.5],
        vec![0.0, 0.0, 0.0, 0.0, 1.0],
    ];
    ensure!(m.rows() == expected.as_slice(), "M = {:?}", m.rows());
    Ok("5x5 matrix matches entry for entry".into())
}

struct OracleRun {
    problem: OrdceProblem,
    ordce: Option<f64>,
}

fn random_instance(seed: u64) -> OrdceProblem {
    let kinds = [ModelKind::Linear, ModelKind::Forest, ModelKind::Relu];
    let cfg = SynthConfig {
        kind: kinds[seed as usize % 3],
        ..SynthConfig::default()
    };
    synth::random_problem(seed, &cfg).expect("generator output is valid")
}

fn criterion_4(runs: &mut Vec<OracleRun>) -> Outcome {
    let budget = SearchBudget::default();
    let mut feasible = 0;
    let mut infeasible = 0;
    // consecutive seeds until 200 instances have an action to compare
    for seed in 0..1000u64 {
        if feasible >= 200 {
            break;
        }
        let p = random_instance(seed);
        let oracle = brute_force(&p, &budget);
        let solved = extract(&p);
        match (oracle, solved) {
            (Ok(o), Ok(e)) => {
                ensure!(e.status == SolveStatus::Optimal, "seed {seed}: status {:?}", e.status);
                ensure!(
                    (o.cost_total - e.objective).abs() <= 1e-6,
                    "seed {seed}: oracle {} vs extract {}",
                    o.cost_total,
                    e.objective
                );
                let pred = p.classifier.predict(&p.shifted(&e.action.action)).map_err(|e| e.to_string())?;
                ensure!(pred == 1, "seed {seed}: action is not valid");
                ensure!(support(&e.action.action).len() <= p.k, "seed {seed}: support exceeds K");
                runs.push(OracleRun {
                    problem: p,
                    ordce: Some(e.action.cost_total),
                });
                feasible += 1;
            }
            (Err(Error::NoFeasibleAction), Err(Error::NoFeasibleAction)) => {
                runs.push(OracleRun { problem: p, ordce: None });
                infeasible += 1;
            }
            (o, e) => {
                return Err(format!(
                    "seed {seed}: oracle {:?} vs extract {:?}",
                    o.map(|a| a.cost_total),
                    e.map(|x| x.objective)
                ))
            }
        }
    }
    ensure!(feasible >= 200, "only {feasible} feasible instances");
    Ok(format!("{feasible} feasible and {infeasible} infeasible instances agree with the oracle"))
}

fn demo_corpus() -> Vec<OrdceProblem> {
    demo::corpus(11, 400, 6, 50, CostKind::Tlps)
        .expect("demo corpus builds")
        .into_iter()
        .map(|(_, p)| p)
        .collect()
}

fn criterion_5(runs: &[OracleRun], demo_problems: &[OrdceProblem]) -> Outcome {
    ensure!(demo_problems.len() == 50, "demo corpus has {} instances", demo_problems.len());
    let mut pairs: Vec<(&OrdceProblem, f64)> = runs.iter().filter_map(|r| r.ordce.map(|c| (&r.problem, c))).collect();
    let mut demo_costs = Vec::new();
    for p in demo_problems {
        let e = extract(p).map_err(|e| format!("demo extraction failed: {e}"))?;
        demo_costs.push(e.action.cost_total);
    }
    pairs.extend(demo_problems.iter().zip(demo_costs));
    let mut strict = 0;
    for (i, (p, ours)) in pairs.iter().enumerate() {
        let g = greedy(p, true).map_err(|e| format!("instance {i}: greedy failed: {e}"))?;
        let theirs = g.action.cost_total;
        ensure!(*ours <= theirs + 1e-6, "instance {i}: OrdCE {ours} > greedy {theirs}");
        if *ours < theirs - 1e-6 {
            strict += 1;
        }
    }
    ensure!(strict >= 1, "no instance where OrdCE beats greedy strictly");
    Ok(format!("{} instances, OrdCE strictly better on {strict}", pairs.len()))
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut extensions = 0;
    for case in 0..100 {
        let d = rng.gen_range(2..=8);
        let m = synth::random_interaction(&mut rng, d, 0.3);
        let size = rng.gen_range(1..=d.min(6));
        let mut features: Vec<usize> = (0..d).collect();
        for i in 0..d {
            let j = rng.gen_range(i..d);
            features.swap(i, j);
        }
        let sigma: Vec<usize> = features[..size].to_vec();
        let mut a = vec![0.0; d];
        for &f in &sigma {
            let mut v: f64 = (rng.gen_range(-3.0f64..3.0) * 100.0).round() / 100.0;
            if v == 0.0 {
                v = 1.0;
            }
            a[f] = v;
        }
        let s = ScalingFactors::new((0..d).map(|_| rng.gen_range(0.5..2.0)).collect()).unwrap();
        let base = ordering_cost(&a, &sigma, &m, &s).map_err(|e| e.to_string())?;
        let dag = reduce_to_partial_order(&sigma, &m, 0.0);
        let exts = linear_extensions(&dag, 1000).map_err(|e| e.to_string())?;
        ensure!(exts.contains(&sigma), "case {case}: original order is not an extension");
        for ext in &exts {
            let c = ordering_cost(&a, ext, &m, &s).map_err(|e| e.to_string())?;
            ensure!(c == base, "case {case}: order {ext:?} costs {c}, original {sigma:?} costs {base}");
        }
        extensions += exts.len();
    }
    // features 1..6 as indices 0..5; 5 is unperturbed
    let mut rows = vec![vec![0.0; 6]; 6];
    for (i, row) in rows.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for (i, j) in [(2, 0), (2, 1), (3, 0), (3, 5), (0, 1), (0, 5)] {
        rows[i][j] = 0.5;
    }
    let m = InteractionMatrix::from_rows(rows).map_err(|e| e.to_string())?;
    let dag = reduce_to_partial_order(&[2, 3, 0, 1, 5], &m, 0.0);
    let mut edges = dag.edges.clone();
    edges.sort_unstable();
    let expected = vec![(0, 1), (0, 5), (2, 0), (3, 0)];
    ensure!(edges == expected, "reduced edges {edges:?}");
    Ok(format!("100 random cases, {extensions} extensions all cost-equal; reconstruction edges match"))
}

fn criterion_7() -> Outcome {
    let p = synth::linear_problem(1, 15, 8, 4)
        .map_err(|e| e.to_string())?
        .with_solver(SolverParams {
            time_limit: 300.0,
            threads: 1,
            ..SolverParams::default()
        });
    let milo = build_milo(&p).map_err(|e| e.to_string())?;
    let start = Instant::now();
    let r = solve_bnb(&milo.model, &p.solver).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    ensure!(r.status == SolveStatus::Optimal, "status {:?} after {secs:.1}s", r.status);
    ensure!(r.gap() <= 1e-6, "gap {}", r.gap());
    ensure!(secs <= 300.0, "took {secs:.1}s");
    let e = extract(&p).map_err(|e| e.to_string())?;
    ensure!((e.objective - r.objective).abs() <= 1e-9, "repeat solve differs");
    Ok(format!(
        "D=15 I=8 K=4: optimal {:.6}, gap {:.1e}, {} nodes, {secs:.1}s",
        r.objective,
        r.gap(),
        r.nodes
    ))
}

fn random_binary_model(rng: &mut impl Rng, n: usize) -> MilpModel {
    let mut m = MilpModel::new("enum");
    let xs: Vec<_> = (0..n).map(|i| m.add_binary(format!("x{i}"))).collect();
    for &x in &xs {
        m.set_objective(x, rng.gen_range(-5..=5) as f64);
    }
    for r in 0..rng.gen_range(1..=4) {
        let mut terms = Vec::new();
        for &x in &xs {
            if rng.gen_bool(0.6) {
                terms.push((x, rng.gen_range(-4..=6) as f64));
            }
        }
        let total: f64 = terms.iter().map(|t| t.1.abs()).sum();
        let rhs = (rng.gen_range(-0.3..0.6) * total).round() + 0.5 * rng.gen_range(0..2) as f64;
        let rel = [Relation::Le, Relation::Ge, Relation::Eq][rng.gen_range(0..3)];
        let rhs = if rel == Relation::Eq { rhs.round() } else { rhs };
        m.add_constraint(format!("r{r}"), terms, rel, rhs);
    }
    m
}

/// `(lower, upper)` of every variable at a trace node.
fn node_box(model: &MilpModel, records: &HashMap<usize, &NodeRecord>, id: usize) -> (Vec<f64>, Vec<f64>) {
    let mut lo: Vec<f64> = model.variables.iter().map(|v| v.lower).collect();
    let mut hi: Vec<f64> = model.variables.iter().map(|v| v.upper).collect();
    let mut cur = Some(id);
    while let Some(c) = cur {
        let r = records[&c];
        if let Some(b) = r.branch {
            if b.upper {
                hi[b.var] = hi[b.var].min(b.value);
            } else {
                lo[b.var] = lo[b.var].max(b.value);
            }
        }
        cur = r.parent;
    }
    (lo, hi)
}

fn feasible(model: &MilpModel, x: &[f64]) -> bool {
    let (row, _) = model.violations(x);
    row <= 1e-9
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let traced = SolverParams {
        record_trace: true,
        ..SolverParams::default()
    };
    let mut models = 0;
    let mut nodes_checked = 0;
    for case in 0..60 {
        let n = rng.gen_range(4..=20);
        let model = random_binary_model(&mut rng, n);
        let points: Vec<Vec<f64>> = (0u32..1 << n)
            .map(|bits| (0..n).map(|j| ((bits >> j) & 1) as f64).collect::<Vec<f64>>())
            .filter(|x| feasible(&model, x))
            .collect();
        let best = points.iter().map(|x| model.objective_value(x)).fold(f64::INFINITY, f64::min);
        let r = solve_bnb(&model, &traced).map_err(|e| e.to_string())?;
        if best.is_finite() {
            ensure!(r.status == SolveStatus::Optimal, "case {case}: status {:?}", r.status);
            ensure!((r.objective - best).abs() <= 1e-9, "case {case}: bnb {} vs enumeration {best}", r.objective);
        } else {
            ensure!(r.status == SolveStatus::Infeasible, "case {case}: expected infeasible, got {:?}", r.status);
        }
        let records: HashMap<usize, &NodeRecord> = r.trace.iter().map(|t| (t.id, t)).collect();
        for t in &r.trace {
            let Some(lp) = t.lp_value else { continue };
            let (lo, hi) = node_box(&model, &records, t.id);
            let inside = points
                .iter()
                .filter(|x| (0..n).all(|j| x[j] >= lo[j] && x[j] <= hi[j]))
                .map(|x| model.objective_value(x))
                .fold(f64::INFINITY, f64::min);
            ensure!(lp <= inside + 1e-7, "case {case} node {}: LP {lp} above subtree optimum {inside}", t.id);
            nodes_checked += 1;
        }
        models += 1;
    }
    // OrdCE models: every node whose region holds the optimum has LP <= optimum
    let mut ordce_nodes = 0;
    for seed in 0..30u64 {
        let p = synth::random_problem(seed, &SynthConfig::default()).map_err(|e| e.to_string())?;
        let milo = build_milo(&p).map_err(|e| e.to_string())?;
        let r = solve_bnb(&milo.model, &traced).map_err(|e| e.to_string())?;
        let Some(x) = r.solution.as_ref() else { continue };
        let records: HashMap<usize, &NodeRecord> = r.trace.iter().map(|t| (t.id, t)).collect();
        for t in &r.trace {
            let (lo, hi) = node_box(&milo.model, &records, t.id);
            let holds = (0..x.len()).all(|j| x[j] >= lo[j] - 1e-9 && x[j] <= hi[j] + 1e-9);
            if let (true, Some(lp)) = (holds, t.lp_value) {
                ensure!(lp <= r.objective + 1e-7, "seed {seed} node {}: LP {lp} above optimum {}", t.id, r.objective);
                ordce_nodes += 1;
            }
            if t.outcome == NodeOutcome::Unexplored {
                return Err(format!("seed {seed}: open nodes remain after optimal termination"));
            }
        }
    }
    for (_, p) in demo::corpus(3, 200, 6, 3, CostKind::Tlps).map_err(|e| e.to_string())? {
        let first = to_mps_string(&build_milo(&p).map_err(|e| e.to_string())?.model).map_err(|e| e.to_string())?;
        let second = to_mps_string(&build_milo(&p).map_err(|e| e.to_string())?.model).map_err(|e| e.to_string())?;
        ensure!(first.as_bytes() == second.as_bytes(), "MPS export differs between runs");
    }
    Ok(format!(
        "{models} binary models match enumeration, {nodes_checked} node bounds sound, {ordce_nodes} OrdCE path nodes sound, MPS deterministic"
    ))
}

fn criterion_9(demo_problems: &[OrdceProblem]) -> Outcome {
    let gammas = [0.0, 0.25, 0.5, 1.0, 2.0];
    let mut dist = vec![0.0; gammas.len()];
    let mut ord = vec![0.0; gammas.len()];
    for (i, p) in demo_problems.iter().enumerate() {
        let sweep = sweep_gamma(p, &gammas).map_err(|e| e.to_string())?;
        for (j, point) in sweep.iter().enumerate() {
            let e = point.result.as_ref().map_err(|e| format!("instance {i}, gamma {}: {e}", point.gamma))?;
            dist[j] += e.action.cost_dist;
            ord[j] += e.action.cost_ord;
        }
    }
    let n = demo_problems.len() as f64;
    let dist: Vec<f64> = dist.iter().map(|v| v / n).collect();
    let ord: Vec<f64> = ord.iter().map(|v| v / n).collect();
    for j in 1..gammas.len() {
        ensure!(ord[j] <= ord[j - 1] + 1e-6, "mean C_ord rises between gamma {} and {}: {ord:?}", gammas[j - 1], gammas[j]);
        ensure!(dist[j] >= dist[j - 1] - 1e-6, "mean C_dist falls between gamma {} and {}: {dist:?}", gammas[j - 1], gammas[j]);
    }
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(" ");
    Ok(format!("mean C_dist [{}], mean C_ord [{}]", fmt(&dist), fmt(&ord)))
}

fn run(id: usize, name: &str, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panic".into());
        Err(format!("panicked: {msg}"))
    });
    let secs = start.elapsed().as_secs_f64();
    match outcome {
        Ok(detail) => {
            println!("criterion {id} ({name}): PASS [{secs:.2}s] {detail}");
            true
        }
        Err(detail) => {
            println!("criterion {id} ({name}): FAIL [{secs:.2}s] {detail}");
            false
        }
    }
}

fn main() {
    let mut ok = true;
    ok &= run(1, "worked ordering cost", criterion_1);
    ok &= run(2, "gamma threshold", criterion_2);
    ok &= run(3, "interaction matrix", criterion_3);
    let mut runs = Vec::new();
    ok &= run(4, "oracle equivalence", || criterion_4(&mut runs));
    let demo_problems = demo_corpus();
    ok &= run(5, "greedy dominance", || criterion_5(&runs, &demo_problems));
    ok &= run(6, "partial order cost preservation", criterion_6);
    ok &= run(7, "D=15 scale envelope", criterion_7);
    ok &= run(8, "milp engine suite", criterion_8);
    ok &= run(9, "gamma sweep monotonicity", || criterion_9(&demo_problems));
    if !ok {
        std::process::exit(1);
    }
}
