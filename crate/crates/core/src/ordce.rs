//! The mixed-integer formulation for ordered actions, its solution and
//! decoding.

use serde::{Deserialize, Serialize};

use crate::classifiers::{AdditiveClassifier, Variant};
use crate::cost_model::{DistanceCost, OrderedAction, ScalingFactors};
use crate::error::{Error, Result};
use crate::feature_space::ActionSet;
use crate::interaction::InteractionMatrix;
use crate::milp::{solve_bnb, MilpModel, Relation, SolveResult, SolveStatus, SolverParams, VarId};

pub const DEFAULT_GAMMA: f64 = 1.0;
pub const DEFAULT_K: usize = 4;
const ROUND_TRIP_TOL: f64 = 1e-5;

/// Everything needed to search for a cost-optimal ordered action.
#[derive(Debug, Clone)]
pub struct OrdceProblem {
    pub classifier: AdditiveClassifier,
    pub instance: Vec<f64>,
    pub actions: ActionSet,
    pub interaction: InteractionMatrix,
    pub cost: DistanceCost,
    pub scaling: ScalingFactors,
    pub gamma: f64,
    /// Maximum number of perturbed features.
    pub k: usize,
    /// Disjoint sets of binary features of which exactly one must end at 1.
    pub one_hot: Vec<Vec<usize>>,
    /// Adds rows that are redundant on integer points but tighten the LP
    /// relaxation (see [`build_milo`]).
    pub strengthen: bool,
    pub solver: SolverParams,
}

impl OrdceProblem {
    /// Problem with `gamma = 1`, `K = min(4, D)`, no one-hot groups and
    /// default solver settings.
    pub fn new(
        classifier: AdditiveClassifier,
        instance: Vec<f64>,
        actions: ActionSet,
        interaction: InteractionMatrix,
        cost: DistanceCost,
        scaling: ScalingFactors,
    ) -> Self {
        let k = DEFAULT_K.min(instance.len()).max(1);
        Self {
            classifier,
            instance,
            actions,
            interaction,
            cost,
            scaling,
            gamma: DEFAULT_GAMMA,
            k,
            one_hot: Vec::new(),
            strengthen: true,
            solver: SolverParams::default(),
        }
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = k;
        self
    }

    pub fn with_one_hot(mut self, groups: Vec<Vec<usize>>) -> Self {
        self.one_hot = groups;
        self
    }

    pub fn with_strengthening(mut self, on: bool) -> Self {
        self.strengthen = on;
        self
    }

    pub fn with_solver(mut self, solver: SolverParams) -> Self {
        self.solver = solver;
        self
    }

    pub fn dim(&self) -> usize {
        self.instance.len()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        let mismatch = |got: usize| Error::DimensionMismatch { expected: d, got };
        if d == 0 {
            return Err(Error::InvalidInput("empty instance".into()));
        }
        if self.actions.dim() != d {
            return Err(mismatch(self.actions.dim()));
        }
        if self.interaction.dim() != d {
            return Err(mismatch(self.interaction.dim()));
        }
        if self.scaling.dim() != d {
            return Err(mismatch(self.scaling.dim()));
        }
        if self.classifier.n_features() != d {
            return Err(mismatch(self.classifier.n_features()));
        }
        self.cost.check_shape(&self.actions)?;
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidInput(format!("gamma must be finite and non-negative, got {}", self.gamma)));
        }
        if self.k < 1 || self.k > d {
            return Err(Error::InvalidInput(format!("K must lie in [1, {d}], got {}", self.k)));
        }
        let mut seen = vec![false; d];
        for g in &self.one_hot {
            if g.is_empty() {
                return Err(Error::InvalidInput("empty one-hot group".into()));
            }
            for &f in g {
                if f >= d {
                    return Err(mismatch(f + 1));
                }
                if seen[f] {
                    return Err(Error::InvalidInput(format!("feature {f} appears in two one-hot groups")));
                }
                seen[f] = true;
            }
        }
        if self.classifier.predict(&self.instance)? != -1 {
            return Err(Error::InvalidInput("instance already receives the desired prediction".into()));
        }
        Ok(())
    }

    /// Evaluates an ordered action under this problem's costs.
    pub fn evaluate(&self, a: &[f64], sigma: &[usize]) -> Result<OrderedAction> {
        OrderedAction::evaluate(a, sigma, &self.actions, &self.cost, &self.interaction, &self.scaling, self.gamma)
    }

    /// `x + a`.
    pub fn shifted(&self, a: &[f64]) -> Vec<f64> {
        self.instance.iter().zip(a).map(|(x, v)| x + v).collect()
    }

    /// Whether `x + a` satisfies every one-hot group.
    pub fn one_hot_ok(&self, a: &[f64]) -> bool {
        self.one_hot
            .iter()
            .all(|g| g.iter().map(|&d| self.instance[d] + a[d]).sum::<f64>() == 1.0)
    }
}

/// Bounds `L[k][d] <= delta_{k,d} <= U[k][d]` on the actual perturbation
/// at step `k` (0-based).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepBounds {
    pub lower: Vec<Vec<f64>>,
    pub upper: Vec<Vec<f64>>,
}

/// First-step bounds are the extremes of each candidate list; each later
/// step widens them by the largest single push any other feature can exert.
pub fn compute_bounds(actions: &ActionSet, m: &InteractionMatrix, k: usize) -> StepBounds {
    let d = actions.dim();
    let mut lower = vec![(0..d).map(|j| actions.min(j)).collect::<Vec<f64>>()];
    let mut upper = vec![(0..d).map(|j| actions.max(j)).collect::<Vec<f64>>()];
    for step in 1..k {
        let (pl, pu) = (&lower[step - 1], &upper[step - 1]);
        let mut nl = Vec::with_capacity(d);
        let mut nu = Vec::with_capacity(d);
        for j in 0..d {
            let mut hi_push = 0.0f64;
            let mut lo_push = 0.0f64;
            let mut any = false;
            for i in (0..d).filter(|&i| i != j) {
                let mij = m.get(i, j);
                let (p, q) = (mij * pl[i], mij * pu[i]);
                if any {
                    hi_push = hi_push.max(p.max(q));
                    lo_push = lo_push.min(p.min(q));
                } else {
                    hi_push = p.max(q);
                    lo_push = p.min(q);
                    any = true;
                }
            }
            nl.push(pl[j] - hi_push);
            nu.push(pu[j] - lo_push);
        }
        lower.push(nl);
        upper.push(nu);
    }
    StepBounds { lower, upper }
}

/// Column handles of the built model, grouped by variable family.
#[derive(Debug, Clone, Default)]
pub struct MiloLayout {
    /// `pi[d][i]`: candidate `i` chosen for feature `d`.
    pub select: Vec<Vec<VarId>>,
    /// `pi[k][d][i]`: candidate `i` of feature `d` applied at step `k`;
    /// `None` for the null candidate.
    pub step_select: Vec<Vec<Vec<Option<VarId>>>>,
    /// `sigma[k][d]`: feature `d` is changed at step `k`.
    pub active: Vec<Vec<VarId>>,
    pub delta: Vec<Vec<VarId>>,
    /// Accumulated push of earlier steps on each feature.
    pub push: Vec<Vec<VarId>>,
    /// `zeta[k] >= |sum_d s_d delta[k][d]|`.
    pub magnitude: Vec<VarId>,
    /// Strengthening only: `eta[k-1][d] = eps[k][d] * sigma[k][d]` for
    /// steps `k >= 1`.
    pub product: Vec<Vec<VarId>>,
    /// Strengthening only: `zeta[k][d] >= s_d |delta[k][d]|`.
    pub feature_magnitude: Vec<Vec<VarId>>,
    /// Base-learner outputs.
    pub learner: Vec<VarId>,
    /// Leaf indicators per tree.
    pub leaf: Vec<Vec<VarId>>,
    /// ReLU on/off indicators.
    pub relu_on: Vec<VarId>,
    /// Negative parts of ReLU pre-activations.
    pub relu_neg: Vec<VarId>,
}

impl MiloLayout {
    pub fn num_selection_binaries(&self) -> usize {
        self.select.iter().map(Vec::len).sum::<usize>()
            + self
                .step_select
                .iter()
                .flatten()
                .map(|v| v.iter().filter(|x| x.is_some()).count())
                .sum::<usize>()
    }
}

#[derive(Debug, Clone)]
pub struct OrdceMilo {
    pub model: MilpModel,
    pub layout: MiloLayout,
    pub bounds: StepBounds,
}

/// Builds the mixed-integer program whose optimum is a cost-optimal ordered
/// action with at most `K` steps.
pub fn build_milo(problem: &OrdceProblem) -> Result<OrdceMilo> {
    problem.validate()?;
    let p = problem;
    let d_n = p.dim();
    let k_n = p.k;
    let acts = &p.actions;
    let x = &p.instance;
    let m = &p.interaction;
    let bounds = compute_bounds(acts, m, k_n);
    let (lo, hi) = (&bounds.lower, &bounds.upper);

    let mut model = MilpModel::new("ordce");
    let mut layout = MiloLayout::default();

    for d in 0..d_n {
        layout.select.push(
            (0..acts.len(d))
                .map(|i| model.add_binary(format!("pi_{d}_{i}")))
                .collect(),
        );
    }
    for k in 0..k_n {
        let per_k = (0..d_n)
            .map(|d| {
                (0..acts.len(d))
                    .map(|i| (i > 0).then(|| model.add_binary(format!("pik_{k}_{d}_{i}"))))
                    .collect()
            })
            .collect();
        layout.step_select.push(per_k);
    }
    for k in 0..k_n {
        let row = (0..d_n)
            .map(|d| {
                let upper = if acts.len(d) > 1 { 1.0 } else { 0.0 };
                model.add_var(format!("sigma_{k}_{d}"), 0.0, upper, true)
            })
            .collect();
        layout.active.push(row);
    }
    for k in 0..k_n {
        let row = (0..d_n)
            .map(|d| model.add_continuous(format!("delta_{k}_{d}"), lo[k][d].min(0.0), hi[k][d].max(0.0)))
            .collect();
        layout.delta.push(row);
    }
    for k in 0..k_n {
        let row = (0..d_n)
            .map(|d| {
                let (elo, ehi) = if k == 0 {
                    (0.0, 0.0)
                } else {
                    (hi[0][d] - hi[k][d], lo[0][d] - lo[k][d])
                };
                model.add_continuous(format!("eps_{k}_{d}"), elo, ehi)
            })
            .collect();
        layout.push.push(row);
    }
    for k in 0..k_n {
        let cap = (0..d_n)
            .map(|d| p.scaling.get(d) * lo[k][d].abs().max(hi[k][d].abs()))
            .fold(0.0, f64::max);
        layout.magnitude.push(model.add_continuous(format!("zeta_{k}"), 0.0, cap));
    }

    // exactly one candidate per feature
    for d in 0..d_n {
        model.add_constraint(
            format!("one_{d}"),
            layout.select[d].iter().map(|&v| (v, 1.0)),
            Relation::Eq,
            1.0,
        );
    }
    // a chosen non-null candidate is applied at exactly one step
    for d in 0..d_n {
        for i in 1..acts.len(d) {
            let mut terms = vec![(layout.select[d][i], 1.0)];
            terms.extend((0..k_n).map(|k| (layout.step_select[k][d][i].unwrap(), -1.0)));
            model.add_constraint(format!("couple_{d}_{i}"), terms, Relation::Eq, 0.0);
        }
    }
    // feature d is active at step k iff one of its non-null candidates is applied then
    for k in 0..k_n {
        for d in 0..d_n {
            let mut terms = vec![(layout.active[k][d], 1.0)];
            terms.extend(layout.step_select[k][d].iter().flatten().map(|&v| (v, -1.0)));
            model.add_constraint(format!("act_{k}_{d}"), terms, Relation::Eq, 0.0);
        }
    }
    for d in 0..d_n {
        model.add_constraint(
            format!("once_{d}"),
            (0..k_n).map(|k| (layout.active[k][d], 1.0)),
            Relation::Le,
            1.0,
        );
    }
    for k in 0..k_n {
        model.add_constraint(
            format!("step_{k}"),
            layout.active[k].iter().map(|&v| (v, 1.0)),
            Relation::Le,
            1.0,
        );
    }
    for k in 0..k_n.saturating_sub(1) {
        let mut terms: Vec<(VarId, f64)> = layout.active[k].iter().map(|&v| (v, 1.0)).collect();
        terms.extend(layout.active[k + 1].iter().map(|&v| (v, -1.0)));
        model.add_constraint(format!("sym_{k}"), terms, Relation::Ge, 0.0);
    }

    if !p.strengthen {
        // delta[k][d] equals the applied candidate minus the accumulated push
        // when feature d is active at step k, and 0 otherwise
        for k in 0..k_n {
            for d in 0..d_n {
                let (l, u) = (lo[k][d], hi[k][d]);
                let base = || {
                    let mut t = vec![(layout.delta[k][d], 1.0), (layout.push[k][d], 1.0)];
                    for (i, v) in layout.step_select[k][d].iter().enumerate() {
                        if let Some(v) = v {
                            t.push((*v, -acts.candidates(d)[i]));
                        }
                    }
                    t
                };
                let mut t = base();
                t.push((layout.active[k][d], -u));
                model.add_constraint(format!("dlo_{k}_{d}"), t, Relation::Ge, -u);
                let mut t = base();
                t.push((layout.active[k][d], -l));
                model.add_constraint(format!("dhi_{k}_{d}"), t, Relation::Le, -l);
                model.add_constraint(
                    format!("dbl_{k}_{d}"),
                    [(layout.delta[k][d], 1.0), (layout.active[k][d], -l)],
                    Relation::Ge,
                    0.0,
                );
                model.add_constraint(
                    format!("dbu_{k}_{d}"),
                    [(layout.delta[k][d], 1.0), (layout.active[k][d], -u)],
                    Relation::Le,
                    0.0,
                );
            }
        }
    }
    for k in 1..k_n {
        for d in 0..d_n {
            let mut terms = vec![(layout.push[k][d], 1.0)];
            for l in 0..k {
                for e in (0..d_n).filter(|&e| e != d) {
                    let med = m.get(e, d);
                    if med != 0.0 {
                        terms.push((layout.delta[l][e], -med));
                    }
                }
            }
            model.add_constraint(format!("push_{k}_{d}"), terms, Relation::Eq, 0.0);
        }
    }
    if !p.strengthen {
        for k in 0..k_n {
            let scaled: Vec<(VarId, f64)> = (0..d_n).map(|d| (layout.delta[k][d], p.scaling.get(d))).collect();
            let mut t = vec![(layout.magnitude[k], 1.0)];
            t.extend(scaled.iter().map(|&(v, s)| (v, -s)));
            model.add_constraint(format!("zpos_{k}"), t, Relation::Ge, 0.0);
            let mut t = vec![(layout.magnitude[k], 1.0)];
            t.extend(scaled.iter().copied());
            model.add_constraint(format!("zneg_{k}"), t, Relation::Ge, 0.0);
        }
    }
    if p.strengthen {
        add_strengthening(p, &bounds, &mut model, &mut layout);
    }

    add_classifier_rows(p, &mut model, &mut layout)?;

    for (g, group) in p.one_hot.iter().enumerate() {
        let mut terms = Vec::new();
        for &d in group {
            for (i, &a) in acts.candidates(d).iter().enumerate() {
                terms.push((layout.select[d][i], x[d] + a));
            }
        }
        model.add_constraint(format!("onehot_{g}"), terms, Relation::Eq, 1.0);
    }

    for k in 0..k_n {
        for d in 0..d_n {
            for (i, v) in layout.step_select[k][d].iter().enumerate() {
                if let Some(v) = v {
                    model.set_objective(*v, p.cost.get(d, i));
                }
            }
        }
        model.set_objective(layout.magnitude[k], p.gamma);
    }

    Ok(OrdceMilo { model, layout, bounds })
}

/// Replaces the big-M rows on `delta` and the aggregate magnitude rows.
/// Writing `delta` as the applied candidate minus the product
/// `eps * sigma`, linearised by its McCormick envelope, keeps the candidate
/// term exact under fractional `sigma` and implies the big-M rows. The
/// per-feature magnitudes stop fractional steps from cancelling inside
/// `|sum_d s_d delta|`; with one active feature per step both magnitudes
/// coincide.
fn add_strengthening(p: &OrdceProblem, bounds: &StepBounds, model: &mut MilpModel, layout: &mut MiloLayout) {
    let acts = &p.actions;
    let d_n = p.dim();
    let (lo, hi) = (&bounds.lower, &bounds.upper);
    for k in 0..p.k {
        let mut products = Vec::new();
        for d in 0..d_n {
            let mut t = vec![(layout.delta[k][d], 1.0)];
            for (i, v) in layout.step_select[k][d].iter().enumerate() {
                if let Some(v) = v {
                    t.push((*v, -acts.candidates(d)[i]));
                }
            }
            if k > 0 {
                let eps = layout.push[k][d];
                let sigma = layout.active[k][d];
                let (elo, ehi) = (hi[0][d] - hi[k][d], lo[0][d] - lo[k][d]);
                let eta = model.add_continuous(format!("eta_{k}_{d}"), elo.min(0.0), ehi.max(0.0));
                products.push(eta);
                t.push((eta, 1.0));
                model.add_constraint(format!("mcl_{k}_{d}"), [(eta, 1.0), (sigma, -elo)], Relation::Ge, 0.0);
                model.add_constraint(format!("mcu_{k}_{d}"), [(eta, 1.0), (sigma, -ehi)], Relation::Le, 0.0);
                model.add_constraint(
                    format!("mcx_{k}_{d}"),
                    [(eta, 1.0), (eps, -1.0), (sigma, -ehi)],
                    Relation::Ge,
                    -ehi,
                );
                model.add_constraint(
                    format!("mcy_{k}_{d}"),
                    [(eta, 1.0), (eps, -1.0), (sigma, -elo)],
                    Relation::Le,
                    -elo,
                );
            }
            model.add_constraint(format!("lin_{k}_{d}"), t, Relation::Eq, 0.0);
        }
        if k > 0 {
            layout.product.push(products);
        }
        let mut per_feature = Vec::with_capacity(d_n);
        for d in 0..d_n {
            let s = p.scaling.get(d);
            let z = model.add_continuous(format!("zeta_{k}_{d}"), 0.0, s * lo[k][d].abs().max(hi[k][d].abs()));
            model.add_constraint(format!("zdp_{k}_{d}"), [(z, 1.0), (layout.delta[k][d], -s)], Relation::Ge, 0.0);
            model.add_constraint(format!("zdn_{k}_{d}"), [(z, 1.0), (layout.delta[k][d], s)], Relation::Ge, 0.0);
            per_feature.push(z);
        }
        let mut t = vec![(layout.magnitude[k], 1.0)];
        t.extend(per_feature.iter().map(|&z| (z, -1.0)));
        model.add_constraint(format!("zsum_{k}"), t, Relation::Ge, 0.0);
        layout.feature_magnitude.push(per_feature);
    }
    // the change a feature's candidate asks for is its own actual
    // perturbation plus pushes from the others
    let m = &p.interaction;
    for d in 0..d_n {
        if acts.len(d) < 2 {
            continue;
        }
        let mut spent = Vec::new();
        for e in 0..d_n {
            let w = if e == d { 1.0 } else { m.get(e, d).abs() };
            if w == 0.0 {
                continue;
            }
            let s = p.scaling.get(e);
            for k in 0..p.k {
                spent.push((layout.feature_magnitude[k][e], w / s));
            }
        }
        for (name, sign) in [("reach_pos", 1.0), ("reach_neg", -1.0)] {
            let mut t = spent.clone();
            for (i, &a) in acts.candidates(d).iter().enumerate() {
                if a != 0.0 {
                    t.push((layout.select[d][i], -sign * a));
                }
            }
            model.add_constraint(format!("{name}_{d}"), t, Relation::Ge, 0.0);
        }
    }
}

fn add_classifier_rows(p: &OrdceProblem, model: &mut MilpModel, layout: &mut MiloLayout) -> Result<()> {
    let acts = &p.actions;
    let x = &p.instance;
    let d_n = p.dim();
    let clf = &p.classifier;
    match clf.variant() {
        Variant::Linear => {
            for d in 0..d_n {
                let xi = model.add_continuous(format!("xi_{d}"), x[d] + acts.min(d), x[d] + acts.max(d));
                layout.learner.push(xi);
                let mut t = vec![(xi, 1.0)];
                for (i, &a) in acts.candidates(d).iter().enumerate() {
                    t.push((layout.select[d][i], -a));
                }
                model.add_constraint(format!("lm_{d}"), t, Relation::Eq, x[d]);
            }
        }
        Variant::TreeEnsemble(trees) => {
            for (t, tree) in trees.iter().enumerate() {
                let xi = model.add_continuous(format!("xi_{t}"), -1.0, 1.0);
                layout.learner.push(xi);
                let leaves: Vec<VarId> = (0..tree.regions().len())
                    .map(|l| model.add_binary(format!("phi_{t}_{l}")))
                    .collect();
                model.add_constraint(format!("leaf_{t}"), leaves.iter().map(|&v| (v, 1.0)), Relation::Eq, 1.0);
                for (l, region) in tree.regions().iter().enumerate() {
                    let mut terms = vec![(leaves[l], d_n as f64)];
                    for d in 0..d_n {
                        for (i, &a) in acts.candidates(d).iter().enumerate() {
                            if region.contains_coord(d, x[d] + a) {
                                terms.push((layout.select[d][i], -1.0));
                            }
                        }
                    }
                    model.add_constraint(format!("logic_{t}_{l}"), terms, Relation::Le, 0.0);
                }
                let mut terms = vec![(xi, 1.0)];
                terms.extend(tree.regions().iter().zip(&leaves).map(|(r, &v)| (v, -r.label)));
                model.add_constraint(format!("tree_{t}"), terms, Relation::Eq, 0.0);
                layout.leaf.push(leaves);
            }
        }
        Variant::Relu(layer) => {
            for t in 0..layer.weights.len() {
                let w = &layer.weights[t];
                let f = layer.pre_activation(t, x);
                let top = f + (0..d_n).map(|d| (w[d] * acts.min(d)).max(w[d] * acts.max(d))).sum::<f64>();
                let bottom = f + (0..d_n).map(|d| (w[d] * acts.min(d)).min(w[d] * acts.max(d))).sum::<f64>();
                let h = top.max(0.0);
                let h_bar = (-bottom).max(0.0);
                let xi = model.add_continuous(format!("xi_{t}"), 0.0, h);
                let nu = model.add_binary(format!("nu_{t}"));
                let neg = model.add_continuous(format!("xibar_{t}"), 0.0, h_bar);
                layout.learner.push(xi);
                layout.relu_on.push(nu);
                layout.relu_neg.push(neg);
                model.add_constraint(format!("on_{t}"), [(xi, 1.0), (nu, -h)], Relation::Le, 0.0);
                model.add_constraint(format!("off_{t}"), [(neg, 1.0), (nu, h_bar)], Relation::Le, h_bar);
                let mut terms = vec![(xi, 1.0), (neg, -1.0)];
                for d in 0..d_n {
                    if w[d] == 0.0 {
                        continue;
                    }
                    for (i, &a) in acts.candidates(d).iter().enumerate() {
                        terms.push((layout.select[d][i], -w[d] * a));
                    }
                }
                model.add_constraint(format!("mlp_{t}"), terms, Relation::Eq, f);
            }
        }
    }
    model.add_constraint(
        "valid",
        layout.learner.iter().zip(clf.weights()).map(|(&v, &w)| (v, w)),
        Relation::Ge,
        clf.intercept(),
    );
    Ok(())
}

/// Outcome of one solver run together with the decoded ordered action.
#[derive(Debug, Clone)]
pub struct Extraction {
    pub action: OrderedAction,
    pub status: SolveStatus,
    pub objective: f64,
    pub best_bound: f64,
    pub nodes: usize,
    pub wall_time: f64,
}

/// Reads `(a, sigma)` off an integral solution.
pub fn decode(problem: &OrdceProblem, milo: &OrdceMilo, x: &[f64]) -> Result<(Vec<f64>, Vec<usize>)> {
    let layout = &milo.layout;
    let mut indices = Vec::with_capacity(problem.dim());
    for (d, vars) in layout.select.iter().enumerate() {
        let i = vars
            .iter()
            .position(|v| x[v.0] > 0.5)
            .ok_or_else(|| Error::Solver(format!("no candidate selected for feature {d}")))?;
        indices.push(i);
    }
    let a = problem.actions.action(&indices);
    let mut sigma = Vec::new();
    for row in &layout.active {
        let on: Vec<usize> = row.iter().enumerate().filter(|(_, v)| x[v.0] > 0.5).map(|(d, _)| d).collect();
        match on.as_slice() {
            [] => {}
            [d] => sigma.push(*d),
            _ => return Err(Error::Solver("several features active in one step".into())),
        }
    }
    Ok((a, sigma))
}

fn finish(problem: &OrdceProblem, milo: &OrdceMilo, result: SolveResult) -> Result<Extraction> {
    let x = match result.status {
        SolveStatus::Infeasible => return Err(Error::NoFeasibleAction),
        SolveStatus::TimeLimitNoIncumbent => return Err(Error::Timeout),
        SolveStatus::Optimal | SolveStatus::TimeLimitWithIncumbent => {
            result.solution.as_ref().expect("incumbent present")
        }
    };
    let (a, sigma) = decode(problem, milo, x)?;
    let action = problem
        .evaluate(&a, &sigma)
        .map_err(|e| Error::Solver(format!("decoded action is inconsistent: {e}")))?;
    if problem.classifier.predict(&problem.shifted(&a))? != 1 {
        return Err(Error::Solver("decoded action does not reach the desired class".into()));
    }
    if (action.cost_total - result.objective).abs() > ROUND_TRIP_TOL * result.objective.abs().max(1.0) {
        return Err(Error::Solver(format!(
            "recomputed cost {} differs from solver objective {}",
            action.cost_total, result.objective
        )));
    }
    Ok(Extraction {
        action,
        status: result.status,
        objective: result.objective,
        best_bound: result.best_bound,
        nodes: result.nodes,
        wall_time: result.wall_time,
    })
}

/// Builds, solves and decodes the problem. Costs of the returned action are
/// recomputed from `(a, sigma)`, not read from solver columns.
pub fn extract(problem: &OrdceProblem) -> Result<Extraction> {
    let milo = build_milo(problem)?;
    let result = solve_bnb(&milo.model, &problem.solver)?;
    finish(problem, &milo, result)
}

#[derive(Debug)]
pub struct SweepPoint {
    pub gamma: f64,
    pub result: Result<Extraction>,
}

/// One extraction per `gamma`; failures are reported per point.
pub fn sweep_gamma(problem: &OrdceProblem, gammas: &[f64]) -> Result<Vec<SweepPoint>> {
    if gammas.iter().any(|g| !(*g >= 0.0 && g.is_finite())) {
        return Err(Error::InvalidInput("gamma values must be finite and non-negative".into()));
    }
    if gammas.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidInput("gamma values must be ascending".into()));
    }
    Ok(gammas
        .iter()
        .map(|&gamma| SweepPoint {
            gamma,
            result: extract(&problem.clone().with_gamma(gamma)),
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverSummary {
    pub status: SolveStatus,
    pub nodes: usize,
    /// Wall-clock seconds; left out of reproducible outputs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<f64>,
    pub best_bound: f64,
}

/// Serializable description of an ordered action with feature names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultDocument {
    pub method: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance: Option<usize>,
    /// `(feature, perturbation)` for every perturbed feature.
    pub action: Vec<(String, f64)>,
    pub order: Vec<String>,
    pub deltas: Vec<f64>,
    pub cost_dist: f64,
    pub cost_ord: f64,
    pub cost_total: f64,
    pub gamma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partial_order: Option<Vec<(String, String)>>,
}

impl ResultDocument {
    pub fn new(method: &str, names: &[String], action: &OrderedAction) -> Self {
        Self {
            method: method.to_string(),
            instance: None,
            action: action
                .action
                .iter()
                .enumerate()
                .filter(|(_, &v)| v != 0.0)
                .map(|(d, &v)| (names[d].clone(), v))
                .collect(),
            order: action.order.iter().map(|&d| names[d].clone()).collect(),
            deltas: action.deltas.clone(),
            cost_dist: action.cost_dist,
            cost_ord: action.cost_ord,
            cost_total: action.cost_total,
            gamma: action.gamma,
            solver: None,
            partial_order: None,
        }
    }

    pub fn with_solver(mut self, e: &Extraction) -> Self {
        self.solver = Some(SolverSummary {
            status: e.status,
            nodes: e.nodes,
            time: Some(e.wall_time),
            best_bound: e.best_bound,
        });
        self
    }

    /// Drops the wall-clock time so the document is reproducible.
    pub fn without_timing(mut self) -> Self {
        if let Some(s) = &mut self.solver {
            s.time = None;
        }
        self
    }
}
