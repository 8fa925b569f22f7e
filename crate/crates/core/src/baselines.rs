//! Greedy ordering baseline and an exhaustive oracle for small problems.

use std::cmp::Ordering;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost_model::{OrderedAction, ScalingFactors};
use crate::error::{Error, Result};
use crate::feature_space::support;
use crate::interaction::InteractionMatrix;
use crate::ordce::{extract, Extraction, OrdceProblem};

/// Greedy order of the perturbed features of `a`: at each step take the
/// feature whose remaining change `|a_d - pushed_d|` is smallest, weighted
/// by `s_d` when `scaled` is set. Ties go to the smallest index.
pub fn greedy_order(a: &[f64], m: &InteractionMatrix, s: &ScalingFactors, scaled: bool) -> Vec<usize> {
    let mut remaining = support(a);
    let mut pushed = vec![0.0; a.len()];
    let mut order = Vec::with_capacity(remaining.len());
    while !remaining.is_empty() {
        let weight = |d: usize| if scaled { s.get(d) } else { 1.0 };
        let (pos, &pick) = remaining
            .iter()
            .enumerate()
            .min_by(|(_, &i), (_, &j)| {
                let ci = weight(i) * (a[i] - pushed[i]).abs();
                let cj = weight(j) * (a[j] - pushed[j]).abs();
                ci.total_cmp(&cj).then(i.cmp(&j))
            })
            .expect("non-empty");
        let delta = a[pick] - pushed[pick];
        for (d, p) in pushed.iter_mut().enumerate() {
            if d != pick {
                *p += m.get(pick, d) * delta;
            }
        }
        order.push(pick);
        remaining.remove(pos);
    }
    order
}

/// Result of the two-stage greedy pipeline.
#[derive(Debug, Clone)]
pub struct GreedyResult {
    pub action: OrderedAction,
    /// The distance-only extraction that supplied the perturbation vector.
    pub first_stage: Extraction,
}

/// Optimises the distance cost alone (`gamma = 0`), then orders the
/// resulting features greedily and prices the pair with the problem's gamma.
pub fn greedy(problem: &OrdceProblem, scaled: bool) -> Result<GreedyResult> {
    let first_stage = extract(&problem.clone().with_gamma(0.0))?;
    let a = first_stage.action.action.clone();
    let sigma = greedy_order(&a, &problem.interaction, &problem.scaling, scaled);
    let action = problem.evaluate(&a, &sigma)?;
    Ok(GreedyResult { action, first_stage })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchBudget {
    /// Upper limit on enumerated (action, order) pairs.
    pub max_candidates: u128,
    /// Wall-clock limit in seconds.
    pub time_limit: f64,
}

impl Default for SearchBudget {
    fn default() -> Self {
        Self {
            max_candidates: 50_000_000,
            time_limit: 300.0,
        }
    }
}

/// Number of (action, order) pairs with at most `k` perturbed features:
/// `sum_S |S|! prod_{d in S} (I_d - 1)`.
pub fn enumeration_size(sizes: &[usize], k: usize) -> u128 {
    let mut e = vec![0u128; k + 1];
    e[0] = 1;
    for &n in sizes {
        let w = n.saturating_sub(1) as u128;
        for j in (1..=k).rev() {
            e[j] = e[j].saturating_add(e[j - 1].saturating_mul(w));
        }
    }
    let mut total = 0u128;
    let mut fact = 1u128;
    for (j, v) in e.iter().enumerate() {
        if j > 0 {
            fact = fact.saturating_mul(j as u128);
        }
        total = total.saturating_add(v.saturating_mul(fact));
    }
    total
}

fn combinations(n: usize, r: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if cur.len() == r {
        out.push(cur.clone());
        return;
    }
    for i in start..n {
        if n - i < r - cur.len() {
            break;
        }
        cur.push(i);
        combinations(n, r, i + 1, cur, out);
        cur.pop();
    }
}

/// Next permutation in lexicographic order; `false` after the last one.
fn next_permutation(p: &mut [usize]) -> bool {
    if p.len() < 2 {
        return false;
    }
    let mut i = p.len() - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = p.len() - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

#[derive(Debug, Clone)]
struct Best {
    cost: f64,
    indices: Vec<usize>,
    order: Vec<usize>,
}

impl Best {
    fn better_than(&self, other: &Best) -> bool {
        match self.cost.total_cmp(&other.cost) {
            Ordering::Less => true,
            Ordering::Greater => false,
            Ordering::Equal => (&self.indices, &self.order) < (&other.indices, &other.order),
        }
    }
}

fn pick(a: Option<Best>, b: Option<Best>) -> Option<Best> {
    match (a, b) {
        (Some(x), Some(y)) => Some(if y.better_than(&x) { y } else { x }),
        (x, None) => x,
        (None, y) => y,
    }
}

/// Exhaustive search over every valid action with at most `K` perturbed
/// features and every order of them. Refuses up front when the search
/// space exceeds the budget and aborts on the time limit; it never returns
/// a truncated answer.
pub fn brute_force(problem: &OrdceProblem, budget: &SearchBudget) -> Result<OrderedAction> {
    problem.validate()?;
    let d_n = problem.dim();
    let sizes: Vec<usize> = (0..d_n).map(|d| problem.actions.len(d)).collect();
    let needed = enumeration_size(&sizes, problem.k);
    if needed > budget.max_candidates {
        return Err(Error::BudgetExceeded {
            needed,
            limit: budget.max_candidates,
        });
    }
    let start = Instant::now();
    let mut supports = Vec::new();
    for r in 0..=problem.k {
        combinations(d_n, r, 0, &mut Vec::new(), &mut supports);
    }
    let results: Vec<Result<Option<Best>>> = supports
        .par_iter()
        .map(|supp| search_support(problem, supp, budget, start))
        .collect();
    let mut best = None;
    for r in results {
        best = pick(best, r?);
    }
    let best = best.ok_or(Error::NoFeasibleAction)?;
    let a = problem.actions.action(&best.indices);
    problem.evaluate(&a, &best.order)
}

fn search_support(problem: &OrdceProblem, supp: &[usize], budget: &SearchBudget, start: Instant) -> Result<Option<Best>> {
    let d_n = problem.dim();
    let mut indices = vec![0usize; d_n];
    for &d in supp {
        if problem.actions.len(d) < 2 {
            return Ok(None);
        }
        indices[d] = 1;
    }
    let mut best: Option<Best> = None;
    let mut steps = 0u64;
    loop {
        steps += 1;
        if steps.is_multiple_of(4096) && start.elapsed().as_secs_f64() > budget.time_limit {
            return Err(Error::Timeout);
        }
        let a = problem.actions.action(&indices);
        if problem.one_hot_ok(&a) && problem.classifier.predict(&problem.shifted(&a))? == 1 {
            let dist = problem.cost.of_indices(&indices);
            let mut order = supp.to_vec();
            loop {
                let ord = crate::cost_model::ordering_cost(&a, &order, &problem.interaction, &problem.scaling)?;
                let cand = Best {
                    cost: dist + problem.gamma * ord,
                    indices: indices.clone(),
                    order: order.clone(),
                };
                if best.as_ref().is_none_or(|b| cand.better_than(b)) {
                    best = Some(cand);
                }
                if !next_permutation(&mut order) {
                    break;
                }
            }
        }
        // odometer over non-null candidates of the support
        let mut pos = supp.len();
        loop {
            if pos == 0 {
                return Ok(best);
            }
            pos -= 1;
            let d = supp[pos];
            if indices[d] + 1 < problem.actions.len(d) {
                indices[d] += 1;
                break;
            }
            indices[d] = 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::AdditiveClassifier;
    use crate::cost_model::{ordering_cost, CostKind, DistanceCost};
    use crate::feature_space::ActionSet;
    use crate::interaction::compute_interaction_matrix;

    fn demo_m() -> InteractionMatrix {
        let mut b = vec![vec![0.0; 5]; 5];
        b[0][1] = 1.0;
        b[1][2] = 6.0;
        b[3][2] = 4.0;
        b[3][4] = -0.5;
        compute_interaction_matrix(&b).unwrap()
    }

    #[test]
    fn greedy_on_example_one() {
        let m = demo_m();
        let s = ScalingFactors::unit(5);
        let a = [0.0, 0.0, 4.0, 1.0, 3.0];
        let g = greedy_order(&a, &m, &s, true);
        assert_eq!(g, vec![3, 2, 4]);
        assert_eq!(ordering_cost(&a, &g, &m, &s).unwrap(), 4.5);
        let mut best = f64::INFINITY;
        let mut p = vec![2, 3, 4];
        loop {
            best = best.min(ordering_cost(&a, &p, &m, &s).unwrap());
            if !next_permutation(&mut p) {
                break;
            }
        }
        assert_eq!(best, 4.0);
    }

    #[test]
    fn greedy_without_interaction_sorts_by_magnitude() {
        let m = InteractionMatrix::identity(3);
        let s = ScalingFactors::new(vec![1.0, 2.0, 1.0]).unwrap();
        assert_eq!(greedy_order(&[3.0, 1.0, -0.5], &m, &s, true), vec![2, 1, 0]);
        assert_eq!(greedy_order(&[3.0, 1.0, -0.5], &m, &s, false), vec![2, 1, 0]);
        assert_eq!(greedy_order(&[3.0, 1.5, -0.5], &m, &s, true), vec![2, 0, 1]);
        assert_eq!(greedy_order(&[0.0, 2.0, 0.0], &m, &s, true), vec![1]);
        assert!(greedy_order(&[0.0; 3], &m, &s, true).is_empty());
    }

    #[test]
    fn counts() {
        assert_eq!(enumeration_size(&[2, 2], 2), 1 + 2 + 2);
        assert_eq!(enumeration_size(&[3, 3, 3], 2), 1 + 6 + 3 * 4 * 2);
    }

    #[test]
    fn brute_force_single_feature() {
        let clf = AdditiveClassifier::linear(vec![1.0], 0.5).unwrap();
        let actions = ActionSet::new(vec![vec![0.0, 1.0]]).unwrap();
        let cost = DistanceCost::new(CostKind::Table, vec![vec![0.0, 1.0]]).unwrap();
        let p = OrdceProblem::new(
            clf,
            vec![0.0],
            actions,
            InteractionMatrix::identity(1),
            cost,
            ScalingFactors::unit(1),
        );
        let r = brute_force(&p, &SearchBudget::default()).unwrap();
        assert_eq!(r.action, vec![1.0]);
        assert_eq!(r.order, vec![0]);
    }

    #[test]
    fn brute_force_refuses_and_reports_infeasible() {
        let clf = AdditiveClassifier::linear(vec![1.0, 1.0], 50.0).unwrap();
        let actions = ActionSet::new(vec![vec![0.0, 1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        let cost = DistanceCost::new(CostKind::Table, vec![vec![0.0, 1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        let p = OrdceProblem::new(
            clf,
            vec![0.0, 0.0],
            actions,
            InteractionMatrix::identity(2),
            cost,
            ScalingFactors::unit(2),
        )
        .with_k(2);
        assert!(matches!(brute_force(&p, &SearchBudget::default()), Err(Error::NoFeasibleAction)));
        let tiny = SearchBudget {
            max_candidates: 3,
            time_limit: 10.0,
        };
        assert!(matches!(brute_force(&p, &tiny), Err(Error::BudgetExceeded { needed: 8, limit: 3 })));
    }
}
