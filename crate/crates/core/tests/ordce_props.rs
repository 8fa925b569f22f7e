use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ordce::baselines::{brute_force, greedy, greedy_order, SearchBudget};
use ordce::cost_model::{actual_perturbations, ordering_cost, CostKind, DistanceCost, ScalingFactors};
use ordce::feature_space::{support, ActionSet};
use ordce::interaction::InteractionMatrix;
use ordce::ordce::{compute_bounds, extract, OrdceProblem};
use ordce::partial_order::{linear_extensions, reduce_to_partial_order};
use ordce::synth::{self, ModelKind, SynthConfig};
use ordce::{AdditiveClassifier, Error};

fn problem(seed: u64, kind: usize) -> OrdceProblem {
    let kind = [ModelKind::Linear, ModelKind::Forest, ModelKind::Relu][kind];
    synth::random_problem(seed, &SynthConfig { kind, ..SynthConfig::default() }).unwrap()
}

/// Relabels features: new index `p[d]` holds old feature `d`.
fn relabel(prob: &OrdceProblem, p: &[usize]) -> OrdceProblem {
    let d = p.len();
    let mut inv = vec![0; d];
    for (old, &new) in p.iter().enumerate() {
        inv[new] = old;
    }
    let w = prob.classifier.weights();
    let clf = AdditiveClassifier::linear(inv.iter().map(|&o| w[o]).collect(), prob.classifier.intercept()).unwrap();
    let x = inv.iter().map(|&o| prob.instance[o]).collect();
    let actions = ActionSet::new(inv.iter().map(|&o| prob.actions.candidates(o).to_vec()).collect()).unwrap();
    let cost = DistanceCost::new(CostKind::Table, inv.iter().map(|&o| prob.cost.rows()[o].clone()).collect()).unwrap();
    let rows = (0..d).map(|i| (0..d).map(|j| prob.interaction.get(inv[i], inv[j])).collect()).collect();
    let scaling = ScalingFactors::new(inv.iter().map(|&o| prob.scaling.get(o)).collect()).unwrap();
    OrdceProblem::new(clf, x, actions, InteractionMatrix::from_rows(rows).unwrap(), cost, scaling)
        .with_k(prob.k)
        .with_gamma(prob.gamma)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn extract_matches_oracle(seed in any::<u64>(), kind in 0usize..3) {
        let p = problem(seed, kind);
        match (extract(&p), brute_force(&p, &SearchBudget::default())) {
            (Ok(e), Ok(o)) => {
                prop_assert!((e.objective - o.cost_total).abs() <= 1e-6);
                prop_assert_eq!(p.classifier.predict(&p.shifted(&e.action.action)).unwrap(), 1);
                prop_assert!(support(&e.action.action).len() <= p.k);
                let round_trip = e.action.cost_dist + p.gamma * e.action.cost_ord;
                prop_assert!((e.objective - round_trip).abs() <= 1e-5);
            }
            (Err(Error::NoFeasibleAction), Err(Error::NoFeasibleAction)) => {}
            (a, b) => prop_assert!(false, "extract {:?} vs oracle {:?}", a.map(|e| e.objective), b.map(|o| o.cost_total)),
        }
    }

    #[test]
    fn plain_and_strengthened_formulations_agree(seed in any::<u64>(), kind in 0usize..3) {
        let p = problem(seed, kind);
        let strong = extract(&p);
        let plain = extract(&p.clone().with_strengthening(false));
        match (strong, plain) {
            (Ok(a), Ok(b)) => prop_assert!((a.objective - b.objective).abs() <= 1e-6),
            (Err(Error::NoFeasibleAction), Err(Error::NoFeasibleAction)) => {}
            (a, b) => prop_assert!(false, "{:?} vs {:?}", a.map(|e| e.objective), b.map(|e| e.objective)),
        }
    }

    #[test]
    fn ordce_never_loses_to_greedy(seed in any::<u64>(), kind in 0usize..3) {
        let p = problem(seed, kind);
        if let (Ok(e), Ok(g)) = (extract(&p), greedy(&p, true)) {
            prop_assert!(e.action.cost_total <= g.action.cost_total + 1e-6);
            let mut order = g.action.order.clone();
            order.sort_unstable();
            prop_assert_eq!(order, support(&g.first_stage.action.action));
        }
    }

    #[test]
    fn oracle_ignores_feature_labels(seed in any::<u64>(), shuffle in any::<u64>()) {
        let p = problem(seed, 0);
        let mut perm: Vec<usize> = (0..p.dim()).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(shuffle));
        let q = relabel(&p, &perm);
        match (brute_force(&p, &SearchBudget::default()), brute_force(&q, &SearchBudget::default())) {
            (Ok(a), Ok(b)) => prop_assert!((a.cost_total - b.cost_total).abs() <= 1e-9),
            (Err(Error::NoFeasibleAction), Err(Error::NoFeasibleAction)) => {}
            (a, b) => prop_assert!(false, "{:?} vs {:?}", a.map(|o| o.cost_total), b.map(|o| o.cost_total)),
        }
    }

    #[test]
    fn step_bounds_hold_for_sampled_actions(seed in any::<u64>()) {
        let p = problem(seed, 0);
        let bounds = compute_bounds(&p.actions, &p.interaction, p.k);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        for _ in 0..50 {
            let mut feats: Vec<usize> = (0..p.dim()).filter(|&d| p.actions.len(d) > 1).collect();
            feats.shuffle(&mut rng);
            feats.truncate(rng.gen_range(0..=p.k.min(feats.len())));
            let mut a = vec![0.0; p.dim()];
            for &d in &feats {
                a[d] = p.actions.candidates(d)[rng.gen_range(1..p.actions.len(d))];
            }
            let delta = actual_perturbations(&a, &feats, &p.interaction).unwrap();
            for (k, &d) in feats.iter().enumerate() {
                prop_assert!(delta[k] >= bounds.lower[k][d] - 1e-9 && delta[k] <= bounds.upper[k][d] + 1e-9,
                    "step {k} feature {d}: {} outside [{}, {}]", delta[k], bounds.lower[k][d], bounds.upper[k][d]);
            }
        }
    }

    #[test]
    fn greedy_order_is_a_permutation_of_support(seed in any::<u64>(), d in 1usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = synth::random_interaction(&mut rng, d, 0.5);
        let a: Vec<f64> = (0..d).map(|_| if rng.gen_bool(0.4) { 0.0 } else { rng.gen_range(-2.0..2.0) }).collect();
        let s = ScalingFactors::new((0..d).map(|_| rng.gen_range(0.5..2.0)).collect()).unwrap();
        for scaled in [true, false] {
            let mut g = greedy_order(&a, &m, &s, scaled);
            g.sort_unstable();
            prop_assert_eq!(g, support(&a));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn extensions_share_ordering_cost(seed in any::<u64>(), d in 1usize..9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = synth::random_interaction(&mut rng, d, 0.35);
        let mut sigma: Vec<usize> = (0..d).collect();
        sigma.shuffle(&mut rng);
        sigma.truncate(rng.gen_range(1..=d.min(6)));
        let mut a = vec![0.0; d];
        for &j in &sigma {
            a[j] = rng.gen_range(0.1..3.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        }
        let s = ScalingFactors::new((0..d).map(|_| rng.gen_range(0.5..2.0)).collect()).unwrap();
        let base = ordering_cost(&a, &sigma, &m, &s).unwrap();
        let dag = reduce_to_partial_order(&sigma, &m, 0.0);
        for &(u, v) in &dag.edges {
            prop_assert!(m.get(u, v) != 0.0 || m.get(v, u) != 0.0);
        }
        // reducing any extension again gives the same DAG
        let exts = linear_extensions(&dag, 1000).unwrap();
        for ext in &exts {
            prop_assert_eq!(ordering_cost(&a, ext, &m, &s).unwrap(), base);
            let again = reduce_to_partial_order(ext, &m, 0.0);
            prop_assert_eq!(&again.edges, &dag.edges);
        }
    }
}

#[test]
fn one_hot_groups_hold_exactly_one() {
    let mut checked = 0;
    for seed in 0..40u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // features 0..3 encode one category, 3 and 4 are continuous
        let hot = rng.gen_range(0..3);
        let mut x = vec![0.0; 5];
        x[hot] = 1.0;
        x[3] = rng.gen_range(0.0..1.0);
        x[4] = rng.gen_range(0.0..1.0);
        let mut lists: Vec<Vec<f64>> = (0..3).map(|d| vec![0.0, if d == hot { -1.0 } else { 1.0 }]).collect();
        lists.push(vec![0.0, 0.5, -0.5]);
        lists.push(vec![0.0, 0.25, 0.75]);
        let costs = lists.iter().map(|c| c.iter().map(|v: &f64| v.abs() + 0.1 * (*v != 0.0) as i32 as f64).collect()).collect();
        let w: Vec<f64> = (0..5).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let score: f64 = w.iter().zip(&x).map(|(a, b)| a * b).sum();
        let clf = AdditiveClassifier::linear(w, score + rng.gen_range(0.1..1.5)).unwrap();
        let m = synth::random_interaction(&mut rng, 5, 0.3);
        let p = OrdceProblem::new(
            clf,
            x.clone(),
            ActionSet::new(lists).unwrap(),
            m,
            DistanceCost::new(CostKind::Table, costs).unwrap(),
            ScalingFactors::unit(5),
        )
        .with_k(3)
        .with_one_hot(vec![vec![0, 1, 2]]);
        match (extract(&p), brute_force(&p, &SearchBudget::default())) {
            (Ok(e), Ok(o)) => {
                let ones: f64 = (0..3).map(|d| x[d] + e.action.action[d]).sum();
                assert_eq!(ones, 1.0, "seed {seed}");
                assert!((0..3).all(|d| x[d] + e.action.action[d] == 0.0 || x[d] + e.action.action[d] == 1.0));
                assert!((e.objective - o.cost_total).abs() <= 1e-6, "seed {seed}");
                checked += 1;
            }
            (Err(Error::NoFeasibleAction), Err(Error::NoFeasibleAction)) => {}
            (a, b) => panic!("seed {seed}: {:?} vs {:?}", a.map(|e| e.objective), b.map(|o| o.cost_total)),
        }
    }
    assert!(checked >= 10, "only {checked} feasible one-hot instances");
}
