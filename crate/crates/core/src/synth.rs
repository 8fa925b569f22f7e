//! Seeded random problem instances for tests and benchmarks.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::classifiers::{AdditiveClassifier, DecisionTree, ReluLayer, TreeNode};
use crate::cost_model::{CostKind, DistanceCost, ScalingFactors};
use crate::error::Result;
use crate::feature_space::ActionSet;
use crate::interaction::{compute_interaction_matrix, InteractionMatrix};
use crate::ordce::OrdceProblem;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Linear,
    Forest,
    Relu,
}

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub dim: (usize, usize),
    /// Candidates per feature, counting 0.
    pub candidates: (usize, usize),
    pub k: (usize, usize),
    pub edge_probability: f64,
    pub kind: ModelKind,
    pub trees: usize,
    pub neurons: usize,
    pub gamma: (f64, f64),
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            dim: (2, 6),
            candidates: (2, 4),
            k: (1, 3),
            edge_probability: 0.4,
            kind: ModelKind::Linear,
            trees: 2,
            neurons: 3,
            gamma: (0.0, 2.0),
        }
    }
}

fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

/// Random DAG over `d` nodes (random topological labelling) and its
/// interaction matrix.
pub fn random_interaction(rng: &mut impl Rng, d: usize, p: f64) -> InteractionMatrix {
    let mut perm: Vec<usize> = (0..d).collect();
    perm.shuffle(rng);
    let mut b = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in i + 1..d {
            if rng.gen_bool(p) {
                let mut w = round2(rng.gen_range(-1.5..1.5));
                if w == 0.0 {
                    w = 0.5;
                }
                b[perm[i]][perm[j]] = w;
            }
        }
    }
    compute_interaction_matrix(&b).expect("random graph is acyclic by construction")
}

fn random_candidates(rng: &mut impl Rng, count: usize) -> Vec<f64> {
    let mut out = vec![0.0];
    while out.len() < count {
        let v = round2(rng.gen_range(-1.0..1.0));
        if !out.contains(&v) {
            out.push(v);
        }
    }
    out
}

fn random_tree(rng: &mut impl Rng, x: &[f64], actions: &[Vec<f64>], depth: usize) -> TreeNode {
    if depth == 0 {
        return TreeNode::leaf(if rng.gen_bool(0.5) { 1.0 } else { -1.0 });
    }
    let d = rng.gen_range(0..x.len());
    let mut values: Vec<f64> = actions[d].iter().map(|a| x[d] + a).collect();
    values.sort_by(f64::total_cmp);
    let threshold = if values.len() > 1 {
        let i = rng.gen_range(0..values.len() - 1);
        0.5 * (values[i] + values[i + 1])
    } else {
        values[0]
    };
    TreeNode::split(
        d,
        threshold,
        random_tree(rng, x, actions, depth - 1),
        random_tree(rng, x, actions, depth - 1),
    )
}

/// Seeded random problem whose instance is classified `-1`. Linear
/// instances are feasible within `K` steps unless no candidate raises the
/// score; tree and ReLU instances may be infeasible.
pub fn random_problem(seed: u64, cfg: &SynthConfig) -> Result<OrdceProblem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = rng.gen_range(cfg.dim.0..=cfg.dim.1);
    let k = rng.gen_range(cfg.k.0..=cfg.k.1.min(d));
    let x: Vec<f64> = (0..d).map(|_| round2(rng.gen_range(0.0..1.0))).collect();
    let lists: Vec<Vec<f64>> = (0..d)
        .map(|_| {
            let n = rng.gen_range(cfg.candidates.0..=cfg.candidates.1);
            random_candidates(&mut rng, n)
        })
        .collect();
    let m = random_interaction(&mut rng, d, cfg.edge_probability);
    let weights: Vec<f64> = (0..d).map(|_| round2(rng.gen_range(0.5..2.0))).collect();
    let costs = lists
        .iter()
        .zip(&weights)
        .map(|(c, w)| c.iter().map(|a| a.abs() * w).collect())
        .collect();
    let cost = DistanceCost::new(CostKind::Table, costs)?;
    let scaling = ScalingFactors::new((0..d).map(|_| round2(rng.gen_range(0.5..2.0))).collect())?;
    let gamma = round2(rng.gen_range(cfg.gamma.0..=cfg.gamma.1));

    let classifier = match cfg.kind {
        ModelKind::Linear => {
            let w: Vec<f64> = (0..d)
                .map(|_| {
                    let v = round2(rng.gen_range(-1.0..1.0));
                    if v == 0.0 {
                        0.25
                    } else {
                        v
                    }
                })
                .collect();
            let base: f64 = w.iter().zip(&x).map(|(a, b)| a * b).sum();
            let mut gains: Vec<f64> = (0..d)
                .map(|j| lists[j].iter().map(|a| w[j] * a).fold(0.0, f64::max))
                .collect();
            gains.sort_by(|a, b| b.total_cmp(a));
            let mut reach: f64 = gains.iter().take(k).sum();
            if reach <= 0.0 {
                reach = 0.0;
            }
            let frac = rng.gen_range(0.1..0.9);
            let b = if reach > 0.0 { base + frac * reach } else { base + 0.1 };
            AdditiveClassifier::linear(w, b)?
        }
        ModelKind::Forest => {
            let trees: Vec<DecisionTree> = (0..cfg.trees)
                .map(|_| DecisionTree::new(random_tree(&mut rng, &x, &lists, 2), d))
                .collect::<Result<_>>()?;
            let w: Vec<f64> = (0..cfg.trees).map(|_| round2(rng.gen_range(0.5..1.5))).collect();
            let h: Vec<f64> = trees.iter().map(|t| t.evaluate(&x)).collect();
            let base: f64 = w.iter().zip(&h).map(|(a, b)| a * b).sum();
            let wmin = w.iter().copied().fold(f64::INFINITY, f64::min);
            AdditiveClassifier::tree_ensemble(trees, w, base + 0.5 * wmin, d)?
        }
        ModelKind::Relu => {
            let layer = ReluLayer {
                weights: (0..cfg.neurons)
                    .map(|_| (0..d).map(|_| round2(rng.gen_range(-1.0..1.0))).collect())
                    .collect(),
                biases: (0..cfg.neurons).map(|_| round2(rng.gen_range(-0.5..0.5))).collect(),
            };
            let w: Vec<f64> = (0..cfg.neurons).map(|_| round2(rng.gen_range(-1.0..1.0))).collect();
            let h: Vec<f64> = (0..cfg.neurons).map(|t| layer.pre_activation(t, &x).max(0.0)).collect();
            let base: f64 = w.iter().zip(&h).map(|(a, b)| a * b).sum();
            let margin = round2(rng.gen_range(0.05..0.5));
            AdditiveClassifier::relu_network(layer, w, base + margin)?
        }
    };
    Ok(OrdceProblem::new(classifier, x, ActionSet::new(lists)?, m, cost, scaling)
        .with_k(k)
        .with_gamma(gamma))
}

/// Linear instance of fixed shape with evenly spaced candidate grids.
pub fn linear_problem(seed: u64, d: usize, candidates: usize, k: usize) -> Result<OrdceProblem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x: Vec<f64> = (0..d).map(|_| round2(rng.gen_range(0.0..1.0))).collect();
    let lists: Vec<Vec<f64>> = x
        .iter()
        .map(|&xv| {
            // evenly spaced over [-xv, 1 - xv], 0 first
            let mut out = vec![0.0];
            for j in 0..candidates - 1 {
                let v = -xv + (j as f64) / ((candidates - 2).max(1) as f64);
                let v = round2(v);
                if !out.contains(&v) {
                    out.push(v);
                }
            }
            out
        })
        .collect();
    let m = random_interaction(&mut rng, d, 2.0 / d as f64);
    let weights: Vec<f64> = (0..d).map(|_| round2(rng.gen_range(0.5..2.0))).collect();
    let costs = lists
        .iter()
        .zip(&weights)
        .map(|(c, w)| c.iter().map(|a| a.abs() * w).collect())
        .collect();
    let cost = DistanceCost::new(CostKind::Table, costs)?;
    let w: Vec<f64> = (0..d).map(|_| round2(rng.gen_range(-1.0..1.0))).map(|v| if v == 0.0 { 0.25 } else { v }).collect();
    let base: f64 = w.iter().zip(&x).map(|(a, b)| a * b).sum();
    let mut gains: Vec<f64> = (0..d)
        .map(|j| lists[j].iter().map(|a| w[j] * a).fold(0.0, f64::max))
        .collect();
    gains.sort_by(|a, b| b.total_cmp(a));
    let reach: f64 = gains.iter().take(k).sum();
    let clf = AdditiveClassifier::linear(w, base + 0.5 * reach)?;
    Ok(OrdceProblem::new(clf, x, ActionSet::new(lists)?, m, cost, ScalingFactors::unit(d))
        .with_k(k)
        .with_gamma(1.0))
}
