//! Best-first branch-and-bound over LP relaxations.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::model::{MilpModel, SparseModel};
use super::propagate::propagate;
use super::simplex::{BasisState, Factor, LpSolution, LpStatus, WarmLp, WarmStart};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverParams {
    /// Wall-clock budget in seconds.
    pub time_limit: f64,
    /// Relative optimality gap (floored at an absolute scale of 1).
    pub gap_tol: f64,
    pub int_tol: f64,
    /// Number of open nodes evaluated concurrently; 1 runs single-threaded.
    pub threads: usize,
    /// Keep a per-node record of the search.
    #[serde(default)]
    pub record_trace: bool,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            time_limit: 300.0,
            gap_tol: 1e-6,
            int_tol: 1e-6,
            threads: 1,
            record_trace: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    TimeLimitWithIncumbent,
    TimeLimitNoIncumbent,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchDecision {
    pub var: usize,
    /// `true` imposes `x <= value`, `false` imposes `x >= value`.
    pub upper: bool,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeOutcome {
    Infeasible,
    PrunedByBound,
    Integral,
    Branched,
    Unexplored,
}

#[derive(Debug, Clone)]
pub struct NodeRecord {
    pub id: usize,
    pub parent: Option<usize>,
    pub branch: Option<BranchDecision>,
    pub lp_value: Option<f64>,
    pub outcome: NodeOutcome,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub solution: Option<Vec<f64>>,
    pub objective: f64,
    pub best_bound: f64,
    pub root_bound: f64,
    pub nodes: usize,
    pub lp_iterations: usize,
    pub wall_time: f64,
    pub trace: Vec<NodeRecord>,
}

impl SolveResult {
    pub fn gap(&self) -> f64 {
        if self.solution.is_none() {
            return f64::INFINITY;
        }
        (self.objective - self.best_bound).max(0.0) / self.objective.abs().max(1.0)
    }
}

struct Branch {
    decision: BranchDecision,
    parent: Option<Arc<Branch>>,
}

struct OpenNode {
    id: usize,
    bound: f64,
    path: Option<Arc<Branch>>,
    /// Final basis of the parent relaxation.
    warm: Option<Arc<BasisState>>,
}

/// Inverses of the most recently branched nodes, keyed by node id. A child
/// starts from its parent's inverse when present and otherwise from the
/// nearest stored one.
struct FactorCache {
    capacity: usize,
    entries: VecDeque<(usize, Arc<Factor>)>,
}

impl FactorCache {
    fn new(rows: usize) -> Self {
        let bytes = (rows * rows).max(1) * std::mem::size_of::<f64>();
        Self {
            capacity: (CACHE_BYTES / bytes).clamp(1, 16),
            entries: VecDeque::new(),
        }
    }

    fn lookup(&self, parent: Option<usize>, target: Option<&BasisState>) -> Option<Arc<Factor>> {
        let target = target?;
        if let Some(hit) = self.entries.iter().find(|(k, _)| Some(*k) == parent) {
            return Some(hit.1.clone());
        }
        self.entries
            .iter()
            .rev()
            .min_by_key(|(_, f)| f.distance(target))
            .map(|(_, f)| f.clone())
    }

    fn insert(&mut self, id: usize, factor: Factor) {
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back((id, Arc::new(factor)));
    }
}

const CACHE_BYTES: usize = 64 << 20;

impl PartialEq for OpenNode {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for OpenNode {}
impl PartialOrd for OpenNode {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for OpenNode {
    // BinaryHeap is a max-heap: the smallest bound, then the smallest id, wins.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.id.cmp(&self.id))
    }
}

enum Evaluation {
    Infeasible,
    Solved(LpSolution, Option<Factor>),
}

fn node_bounds(root_lo: &[f64], root_hi: &[f64], path: &Option<Arc<Branch>>) -> (Vec<f64>, Vec<f64>) {
    let mut lo = root_lo.to_vec();
    let mut hi = root_hi.to_vec();
    let mut cur = path.as_ref();
    while let Some(b) = cur {
        let d = b.decision;
        if d.upper {
            hi[d.var] = hi[d.var].min(d.value);
        } else {
            lo[d.var] = lo[d.var].max(d.value);
        }
        cur = b.parent.as_ref();
    }
    (lo, hi)
}

struct Context<'a> {
    sparse: &'a SparseModel,
    lp: &'a WarmLp,
    root_lo: &'a [f64],
    root_hi: &'a [f64],
}

fn evaluate(ctx: &Context<'_>, node: &OpenNode, factor: Option<&Factor>) -> Result<Evaluation> {
    let (mut lo, mut hi) = node_bounds(ctx.root_lo, ctx.root_hi, &node.path);
    if lo.iter().zip(&hi).any(|(l, h)| l > h) || !propagate(ctx.sparse, &mut lo, &mut hi) {
        return Ok(Evaluation::Infeasible);
    }
    let start = match (&node.warm, factor) {
        (Some(state), Some(f)) => WarmStart::Near(state, f),
        (Some(state), None) => WarmStart::Basis(state),
        (None, _) => WarmStart::Cold,
    };
    let (lp, snapshot) = ctx.lp.solve(&lo, &hi, start);
    match lp.status {
        LpStatus::Optimal => Ok(Evaluation::Solved(lp, snapshot)),
        LpStatus::Infeasible => Ok(Evaluation::Infeasible),
        LpStatus::Unbounded => Err(Error::Solver("LP relaxation unbounded despite finite bounds".into())),
        LpStatus::IterationLimit => Err(Error::Solver("simplex iteration limit reached".into())),
    }
}

fn most_fractional(sparse: &SparseModel, x: &[f64], int_tol: f64) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64, f64)> = None;
    for (j, &v) in x.iter().enumerate() {
        if !sparse.integer[j] {
            continue;
        }
        let frac = v - v.floor();
        let dist = frac.min(1.0 - frac);
        if dist <= int_tol {
            continue;
        }
        if best.is_none_or(|(_, _, d)| dist > d) {
            best = Some((j, v, dist));
        }
    }
    best.map(|(j, v, _)| (j, v))
}

fn lexicographically_smaller(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Less => return true,
            Ordering::Greater => return false,
            Ordering::Equal => {}
        }
    }
    false
}

/// Solves `model` to optimality (within `gap_tol`) or until the time limit.
///
/// Nodes are taken best-bound first, ties by creation order; the branching
/// variable is the most fractional integer column (ties by smallest index)
/// and the down child is created first. Up to `threads` nodes are evaluated
/// per round; results are merged in pop order so the outcome does not depend
/// on scheduling.
pub fn solve_bnb(model: &MilpModel, params: &SolverParams) -> Result<SolveResult> {
    model.validate()?;
    if params.time_limit <= 0.0 || !params.gap_tol.is_finite() || params.gap_tol < 0.0 {
        return Err(Error::InvalidInput("time limit must be positive and gap tolerance non-negative".into()));
    }
    let start = Instant::now();
    let sparse = SparseModel::from_model(model);
    let mut root_lo: Vec<f64> = model.variables.iter().map(|v| v.lower).collect();
    let mut root_hi: Vec<f64> = model.variables.iter().map(|v| v.upper).collect();
    for j in 0..sparse.n {
        if sparse.integer[j] {
            root_lo[j] = (root_lo[j] - params.int_tol).ceil();
            root_hi[j] = (root_hi[j] + params.int_tol).floor();
        }
    }
    let threads = params.threads.max(1);
    let pool = if threads > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| Error::Solver(e.to_string()))?,
        )
    } else {
        None
    };

    let warm_lp = WarmLp::new(&sparse);
    let ctx = Context {
        sparse: &sparse,
        lp: &warm_lp,
        root_lo: &root_lo,
        root_hi: &root_hi,
    };
    let mut cache = FactorCache::new(warm_lp.rows());
    let mut heap = BinaryHeap::new();
    heap.push(OpenNode {
        id: 0,
        bound: f64::NEG_INFINITY,
        path: None,
        warm: None,
    });
    let mut next_id = 1usize;
    let mut incumbent: Option<(Vec<f64>, f64)> = None;
    let mut pruned_bound = f64::INFINITY;
    let mut root_bound = f64::NEG_INFINITY;
    let mut nodes = 0usize;
    let mut lp_iterations = 0usize;
    let mut trace: Vec<NodeRecord> = Vec::new();
    let mut parent_of: Vec<Option<usize>> = Vec::new();
    let mut timed_out = false;

    let tolerance = |inc: f64| params.gap_tol * inc.abs().max(1.0);

    loop {
        if heap.is_empty() {
            break;
        }
        if start.elapsed().as_secs_f64() >= params.time_limit {
            timed_out = true;
            break;
        }
        let mut batch = Vec::with_capacity(threads);
        while batch.len() < threads {
            let Some(node) = heap.pop() else { break };
            if let Some((_, inc)) = &incumbent {
                if node.bound >= inc - tolerance(*inc) {
                    pruned_bound = pruned_bound.min(node.bound);
                    if params.record_trace {
                        trace.push(NodeRecord {
                            id: node.id,
                            parent: parent_of.get(node.id).copied().flatten(),
                            branch: node.path.as_ref().map(|b| b.decision),
                            lp_value: None,
                            outcome: NodeOutcome::PrunedByBound,
                        });
                    }
                    continue;
                }
            }
            batch.push(node);
        }
        if batch.is_empty() {
            continue;
        }
        let factors: Vec<Option<Arc<Factor>>> = batch
            .iter()
            .map(|n| cache.lookup(parent_of.get(n.id).copied().flatten(), n.warm.as_deref()))
            .collect();
        let evals: Vec<Result<Evaluation>> = match &pool {
            Some(pool) => pool.install(|| {
                use rayon::prelude::*;
                batch
                    .par_iter()
                    .zip(&factors)
                    .map(|(n, f)| evaluate(&ctx, n, f.as_deref()))
                    .collect()
            }),
            None => batch
                .iter()
                .zip(&factors)
                .map(|(n, f)| evaluate(&ctx, n, f.as_deref()))
                .collect(),
        };
        for (node, eval) in batch.into_iter().zip(evals) {
            nodes += 1;
            let eval = eval?;
            let mut record = NodeRecord {
                id: node.id,
                parent: parent_of.get(node.id).copied().flatten(),
                branch: node.path.as_ref().map(|b| b.decision),
                lp_value: None,
                outcome: NodeOutcome::Infeasible,
            };
            if let Evaluation::Solved(lp, snapshot) = eval {
                lp_iterations += lp.iterations;
                let value = lp.objective + model.objective_offset;
                record.lp_value = Some(value);
                if node.id == 0 {
                    root_bound = value;
                }
                let bound_ok = match &incumbent {
                    Some((_, inc)) => value < inc - tolerance(*inc),
                    None => true,
                };
                if !bound_ok {
                    pruned_bound = pruned_bound.min(value);
                    record.outcome = NodeOutcome::PrunedByBound;
                } else if let Some((var, v)) = most_fractional(&sparse, &lp.x, params.int_tol) {
                    record.outcome = NodeOutcome::Branched;
                    let warm = snapshot.map(|f| {
                        let state = f.state.clone();
                        cache.insert(node.id, f);
                        state
                    });
                    for (upper, value_bound) in [(true, v.floor()), (false, v.ceil())] {
                        let child = OpenNode {
                            id: next_id,
                            bound: value,
                            path: Some(Arc::new(Branch {
                                decision: BranchDecision {
                                    var,
                                    upper,
                                    value: value_bound,
                                },
                                parent: node.path.clone(),
                            })),
                            warm: warm.clone(),
                        };
                        if parent_of.len() <= next_id {
                            parent_of.resize(next_id + 1, None);
                        }
                        parent_of[next_id] = Some(node.id);
                        next_id += 1;
                        heap.push(child);
                    }
                } else {
                    record.outcome = NodeOutcome::Integral;
                    let mut x = lp.x;
                    for j in 0..sparse.n {
                        if sparse.integer[j] {
                            x[j] = x[j].round();
                        }
                    }
                    let obj = model.objective_value(&x);
                    let replace = match &incumbent {
                        None => true,
                        Some((ix, iobj)) => {
                            obj < iobj - 1e-9 || ((obj - iobj).abs() <= 1e-9 && lexicographically_smaller(&x, ix))
                        }
                    };
                    if replace {
                        incumbent = Some((x, obj));
                    }
                }
            }
            if params.record_trace {
                trace.push(record);
            }
        }
    }

    let open_bound = heap.iter().map(|n| n.bound).fold(f64::INFINITY, f64::min);
    if params.record_trace {
        for n in heap.iter() {
            trace.push(NodeRecord {
                id: n.id,
                parent: parent_of.get(n.id).copied().flatten(),
                branch: n.path.as_ref().map(|b| b.decision),
                lp_value: None,
                outcome: NodeOutcome::Unexplored,
            });
        }
        trace.sort_by_key(|r| r.id);
    }
    let wall_time = start.elapsed().as_secs_f64();
    let (status, solution, objective, best_bound) = match incumbent {
        Some((x, obj)) => {
            let bound = obj.min(pruned_bound).min(open_bound);
            let status = if timed_out && !heap.is_empty() {
                SolveStatus::TimeLimitWithIncumbent
            } else {
                SolveStatus::Optimal
            };
            (status, Some(x), obj, bound)
        }
        None => {
            if timed_out && !heap.is_empty() {
                (SolveStatus::TimeLimitNoIncumbent, None, f64::INFINITY, open_bound)
            } else {
                (SolveStatus::Infeasible, None, f64::INFINITY, f64::INFINITY)
            }
        }
    };
    Ok(SolveResult {
        status,
        solution,
        objective,
        best_bound,
        root_bound,
        nodes,
        lp_iterations,
        wall_time,
        trace,
    })
}
