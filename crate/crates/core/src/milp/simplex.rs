//! Bounded-variable primal simplex over a dense explicit basis inverse.
//!
//! Every row `r` gets a logical variable `s_r` so that `A x + s = 0` with
//! `s_r ∈ [-row_hi, -row_lo]`. Nonbasic variables may sit anywhere inside
//! their bounds (they start at the point of their box closest to zero), which
//! lets the solver restart from the slack basis without losing progress.
//! Phase 1 minimises the sum of bound violations of the basic variables,
//! stepping only up to the first breakpoint of that piecewise-linear function.

use std::sync::Arc;

use super::model::{MilpModel, SparseModel};
use crate::error::Result;

pub const FEAS_TOL: f64 = 1e-7;
const DUAL_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const HARRIS_TOL: f64 = 1e-9;
const MOVE_TOL: f64 = 1e-12;
const REINVERT_EVERY: usize = 120;
const DEGENERATE_BEFORE_BLAND: usize = 60;
const NONBASIC: usize = usize::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective: f64,
    pub x: Vec<f64>,
    pub iterations: usize,
}

/// Solves the LP relaxation of `model` (integrality dropped).
pub fn solve_lp(model: &MilpModel) -> Result<LpSolution> {
    model.validate()?;
    let sparse = SparseModel::from_model(model);
    let lo: Vec<f64> = model.variables.iter().map(|v| v.lower).collect();
    let hi: Vec<f64> = model.variables.iter().map(|v| v.upper).collect();
    let mut sol = solve_relaxation(&sparse, &lo, &hi);
    sol.objective += model.objective_offset;
    Ok(sol)
}

/// Dense-enough LP with only the columns that are not fixed and the rows that
/// are not trivially redundant.
struct ReducedLp {
    n: usize,
    m: usize,
    col_start: Vec<usize>,
    col_row: Vec<usize>,
    col_val: Vec<f64>,
    col_lo: Vec<f64>,
    col_hi: Vec<f64>,
    cost: Vec<f64>,
    row_lo: Vec<f64>,
    row_hi: Vec<f64>,
}

/// Solves the relaxation under the column bounds `lo`/`hi`. Fixed columns are
/// substituted out and rows whose activity range already fits their bounds
/// are dropped before the simplex runs.
pub(crate) fn solve_relaxation(sparse: &SparseModel, lo: &[f64], hi: &[f64]) -> LpSolution {
    let n = sparse.n;
    let mut x_full: Vec<f64> = (0..n).map(|j| lo[j]).collect();
    let mut keep_col = vec![usize::MAX; n];
    let mut col_map = Vec::new();
    for j in 0..n {
        if hi[j] - lo[j] > MOVE_TOL {
            keep_col[j] = col_map.len();
            col_map.push(j);
        }
    }
    let fixed_obj: f64 = (0..n)
        .filter(|&j| keep_col[j] == usize::MAX)
        .map(|j| sparse.cost[j] * x_full[j])
        .sum();

    let mut row_map = Vec::new();
    let mut row_lo = Vec::new();
    let mut row_hi = Vec::new();
    for r in 0..sparse.m {
        let mut fixed = 0.0;
        let mut min_act = 0.0;
        let mut max_act = 0.0;
        let mut free_terms = 0;
        for (j, a) in sparse.row(r) {
            if keep_col[j] == usize::MAX {
                fixed += a * x_full[j];
            } else {
                free_terms += 1;
                if a > 0.0 {
                    min_act += a * lo[j];
                    max_act += a * hi[j];
                } else {
                    min_act += a * hi[j];
                    max_act += a * lo[j];
                }
            }
        }
        let rlo = sparse.row_lo[r] - fixed;
        let rhi = sparse.row_hi[r] - fixed;
        let tol = FEAS_TOL * (1.0 + rlo.abs().min(rhi.abs()).min(1e6));
        if min_act > rhi + tol || max_act < rlo - tol {
            return LpSolution {
                status: LpStatus::Infeasible,
                objective: f64::INFINITY,
                x: x_full,
                iterations: 0,
            };
        }
        if free_terms == 0 || (min_act >= rlo - 1e-12 && max_act <= rhi + 1e-12) {
            continue;
        }
        row_map.push(r);
        row_lo.push(rlo);
        row_hi.push(rhi);
    }
    let mut row_index = vec![usize::MAX; sparse.m];
    for (i, &r) in row_map.iter().enumerate() {
        row_index[r] = i;
    }

    let mut col_start = Vec::with_capacity(col_map.len() + 1);
    let mut col_row = Vec::new();
    let mut col_val = Vec::new();
    col_start.push(0);
    for &j in &col_map {
        for (r, a) in sparse.col(j) {
            if row_index[r] != usize::MAX {
                col_row.push(row_index[r]);
                col_val.push(a);
            }
        }
        col_start.push(col_row.len());
    }
    let reduced = ReducedLp {
        n: col_map.len(),
        m: row_map.len(),
        col_start,
        col_row,
        col_val,
        col_lo: col_map.iter().map(|&j| lo[j]).collect(),
        col_hi: col_map.iter().map(|&j| hi[j]).collect(),
        cost: col_map.iter().map(|&j| sparse.cost[j]).collect(),
        row_lo,
        row_hi,
    };

    let raw = {
        let mut s = Simplex::new(&reduced);
        s.run()
    };
    for (k, &j) in col_map.iter().enumerate() {
        x_full[j] = raw.x[k];
    }
    LpSolution {
        status: raw.status,
        objective: raw.objective + fixed_obj,
        x: x_full,
        iterations: raw.iterations,
    }
}

/// Basis of a solved relaxation over the unreduced model, compact enough to
/// keep one per open node.
#[derive(Debug, Clone)]
pub(crate) struct BasisState {
    basis: Vec<u32>,
    /// Nonbasic placement: 0 at lower, 1 at upper, 2 at the point of the box
    /// closest to zero.
    place: Vec<u8>,
}

/// An inverse kept from an earlier solve.
pub(crate) struct Factor {
    pub state: Arc<BasisState>,
    binv: Vec<f64>,
    /// Pivots applied since the inverse was last rebuilt from scratch.
    age: usize,
}

impl Factor {
    /// Number of basic variables of `target` missing from this basis.
    pub(crate) fn distance(&self, target: &BasisState) -> usize {
        let mut member = vec![false; target.place.len()];
        for &b in &self.state.basis {
            member[b as usize] = true;
        }
        target.basis.iter().filter(|&&b| !member[b as usize]).count()
    }
}

pub(crate) enum WarmStart<'a> {
    Cold,
    Basis(&'a BasisState),
    /// Reaches the target basis by pivoting from a stored inverse, falling
    /// back to refactorisation when the two are far apart.
    Near(&'a BasisState, &'a Factor),
}

/// Basis changes beyond which refactorising is cheaper than pivoting.
const MAX_BASIS_MOVES: usize = 80;

/// Relaxation solver over the full constraint matrix so that a basis from
/// one node stays valid at its children, whose bounds differ.
pub(crate) struct WarmLp {
    lp: ReducedLp,
}

impl WarmLp {
    pub(crate) fn new(sparse: &SparseModel) -> Self {
        Self {
            lp: ReducedLp {
                n: sparse.n,
                m: sparse.m,
                col_start: sparse.col_start.clone(),
                col_row: sparse.col_row.clone(),
                col_val: sparse.col_val.clone(),
                col_lo: vec![0.0; sparse.n],
                col_hi: vec![0.0; sparse.n],
                cost: sparse.cost.clone(),
                row_lo: sparse.row_lo.clone(),
                row_hi: sparse.row_hi.clone(),
            },
        }
    }

    pub(crate) fn rows(&self) -> usize {
        self.lp.m
    }

    /// Solves under column bounds `lo`/`hi`. The final basis and inverse are
    /// returned for optimal solves.
    pub(crate) fn solve(&self, lo: &[f64], hi: &[f64], start: WarmStart<'_>) -> (LpSolution, Option<Factor>) {
        let n = self.lp.n;
        let mut s = match &start {
            WarmStart::Near(_, f) => Simplex::with_inverse(&self.lp, f.binv.clone()),
            _ => Simplex::new(&self.lp),
        };
        s.lo[..n].copy_from_slice(lo);
        s.hi[..n].copy_from_slice(hi);
        match start {
            WarmStart::Cold => {
                for j in 0..n {
                    s.x[j] = 0.0f64.clamp(lo[j], hi[j]);
                }
                s.recompute_basic_values();
            }
            WarmStart::Basis(state) => {
                s.install(state);
                s.reinvert();
            }
            WarmStart::Near(target, factor) => {
                if !s.move_to(target, factor) {
                    s.install(target);
                    s.reinvert();
                }
            }
        }
        let raw = s.run();
        let snapshot = (raw.status == LpStatus::Optimal).then(|| Factor {
            state: Arc::new(s.snapshot()),
            age: s.since_reinvert,
            binv: std::mem::take(&mut s.binv),
        });
        (
            LpSolution {
                status: raw.status,
                objective: raw.objective,
                x: raw.x,
                iterations: raw.iterations,
            },
            snapshot,
        )
    }
}

struct Simplex<'a> {
    lp: &'a ReducedLp,
    n: usize,
    m: usize,
    lo: Vec<f64>,
    hi: Vec<f64>,
    x: Vec<f64>,
    basis: Vec<usize>,
    pos: Vec<usize>,
    /// Column-major: `binv[c * m + p]` is entry (p, c) of B^-1.
    binv: Vec<f64>,
    since_reinvert: usize,
    // scratch
    y: Vec<f64>,
    alpha: Vec<f64>,
    alpha_nz: Vec<usize>,
    cb: Vec<f64>,
}

struct RawSolution {
    status: LpStatus,
    objective: f64,
    x: Vec<f64>,
    iterations: usize,
}

struct Pivot {
    position: usize,
    to_upper: bool,
}

impl<'a> Simplex<'a> {
    fn new(lp: &'a ReducedLp) -> Self {
        Self::with_inverse(lp, Vec::new())
    }

    /// `binv` is taken as the inverse of the slack basis when empty and is
    /// otherwise overwritten by the caller.
    fn with_inverse(lp: &'a ReducedLp, mut binv: Vec<f64>) -> Self {
        let n = lp.n;
        let m = lp.m;
        let mut lo = lp.col_lo.clone();
        let mut hi = lp.col_hi.clone();
        for r in 0..m {
            lo.push(-lp.row_hi[r]);
            hi.push(-lp.row_lo[r]);
        }
        let mut x = vec![0.0; n + m];
        for j in 0..n {
            x[j] = 0.0f64.clamp(lo[j], hi[j]);
        }
        let basis: Vec<usize> = (n..n + m).collect();
        let mut pos = vec![NONBASIC; n + m];
        for (p, &b) in basis.iter().enumerate() {
            pos[b] = p;
        }
        let fresh = binv.is_empty();
        if fresh {
            binv = vec![0.0; m * m];
            for p in 0..m {
                binv[p * m + p] = 1.0;
            }
        }
        let mut s = Self {
            lp,
            n,
            m,
            lo,
            hi,
            x,
            basis,
            pos,
            binv,
            since_reinvert: 0,
            y: vec![0.0; m],
            alpha: vec![0.0; m],
            alpha_nz: Vec::with_capacity(m),
            cb: vec![0.0; m],
        };
        if fresh {
            s.recompute_basic_values();
        }
        s
    }

    fn install(&mut self, state: &BasisState) {
        self.pos.iter_mut().for_each(|p| *p = NONBASIC);
        for (p, &b) in state.basis.iter().enumerate() {
            self.basis[p] = b as usize;
            self.pos[b as usize] = p;
        }
        self.place_nonbasic(state);
    }

    fn place_nonbasic(&mut self, state: &BasisState) {
        for j in 0..self.n + self.m {
            if self.pos[j] == NONBASIC {
                self.x[j] = match state.place[j] {
                    0 => self.lo[j],
                    1 => self.hi[j],
                    _ => 0.0f64.clamp(self.lo[j], self.hi[j]),
                };
            }
        }
    }

    /// Starts from `factor` and pivots the basic variables of `target` in.
    /// Returns false when that needs too many pivots or hits a tiny pivot.
    fn move_to(&mut self, target: &BasisState, factor: &Factor) -> bool {
        let n_all = self.n + self.m;
        let mut wanted = vec![false; n_all];
        for &b in &target.basis {
            wanted[b as usize] = true;
        }
        let mut present = vec![false; n_all];
        for &b in &factor.state.basis {
            present[b as usize] = true;
        }
        let entering: Vec<usize> = (0..n_all).filter(|&j| wanted[j] && !present[j]).collect();
        if entering.len() > MAX_BASIS_MOVES || factor.age + entering.len() >= REINVERT_EVERY {
            return false;
        }
        self.pos.iter_mut().for_each(|p| *p = NONBASIC);
        for (p, &b) in factor.state.basis.iter().enumerate() {
            self.basis[p] = b as usize;
            self.pos[b as usize] = p;
        }
        self.since_reinvert = factor.age;
        for q in entering {
            self.compute_alpha(q);
            let mut best: Option<(usize, f64)> = None;
            for &p in &self.alpha_nz {
                let a = self.alpha[p].abs();
                if !wanted[self.basis[p]] && best.is_none_or(|(_, v)| a > v) {
                    best = Some((p, a));
                }
            }
            match best {
                Some((p, a)) if a > 1e-7 => self.pivot(q, &Pivot { position: p, to_upper: false }),
                _ => return false,
            }
        }
        self.place_nonbasic(target);
        self.recompute_basic_values();
        true
    }

    fn snapshot(&self) -> BasisState {
        let place = (0..self.n + self.m)
            .map(|j| {
                if self.pos[j] != NONBASIC {
                    2
                } else if self.x[j] == self.lo[j] {
                    0
                } else if self.x[j] == self.hi[j] {
                    1
                } else {
                    2
                }
            })
            .collect();
        BasisState {
            basis: self.basis.iter().map(|&b| b as u32).collect(),
            place,
        }
    }

    fn column(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (a, b) = if j < self.n {
            (self.lp.col_start[j], self.lp.col_start[j + 1])
        } else {
            (0, 0)
        };
        let logical = if j >= self.n { Some((j - self.n, 1.0)) } else { None };
        (a..b)
            .map(move |i| (self.lp.col_row[i], self.lp.col_val[i]))
            .chain(logical)
    }

    fn recompute_basic_values(&mut self) {
        let m = self.m;
        let mut v = vec![0.0; m];
        for j in 0..self.n + m {
            if self.pos[j] != NONBASIC || self.x[j] == 0.0 {
                continue;
            }
            let xj = self.x[j];
            for (r, a) in self.column(j) {
                v[r] -= a * xj;
            }
        }
        let mut xb = vec![0.0; m];
        for (c, &vc) in v.iter().enumerate() {
            if vc == 0.0 {
                continue;
            }
            let col = &self.binv[c * m..(c + 1) * m];
            for p in 0..m {
                xb[p] += col[p] * vc;
            }
        }
        for p in 0..m {
            self.x[self.basis[p]] = xb[p];
        }
    }

    /// Rebuilds B^-1 from scratch, exploiting that logical columns are unit
    /// vectors. Falls back to the slack basis when the basis is singular.
    fn reinvert(&mut self) {
        self.since_reinvert = 0;
        let m = self.m;
        let n = self.n;
        let mut row_covered = vec![false; m];
        let mut structural: Vec<(usize, usize)> = Vec::new();
        for (p, &b) in self.basis.iter().enumerate() {
            if b >= n {
                row_covered[b - n] = true;
            } else {
                structural.push((p, b));
            }
        }
        let free_rows: Vec<usize> = (0..m).filter(|&r| !row_covered[r]).collect();
        let k = structural.len();
        let ok = free_rows.len() == k && {
            let mut row_slot = vec![usize::MAX; m];
            for (a, &r) in free_rows.iter().enumerate() {
                row_slot[r] = a;
            }
            // g is k x k row-major: g[a*k + b] = A[free_rows[a], structural[b]]
            let mut g = vec![0.0; k * k];
            for (b, &(_, j)) in structural.iter().enumerate() {
                for (r, v) in self.column(j) {
                    if row_slot[r] != usize::MAX {
                        g[row_slot[r] * k + b] = v;
                    }
                }
            }
            match invert_dense(&mut g, k) {
                Some(ginv) => {
                    // ginv maps v_free -> z_structural: z_b = sum_a ginv[b*k+a] v_a
                    self.binv.iter_mut().for_each(|e| *e = 0.0);
                    for (b, &(p, _)) in structural.iter().enumerate() {
                        for (a, &r) in free_rows.iter().enumerate() {
                            self.binv[r * m + p] = ginv[b * k + a];
                        }
                    }
                    for p in 0..m {
                        let bvar = self.basis[p];
                        if bvar >= n {
                            self.binv[(bvar - n) * m + p] = 1.0;
                        }
                    }
                    for &(ps, j) in &structural {
                        let covered: Vec<(usize, f64)> =
                            self.column(j).filter(|&(r, _)| row_covered[r]).collect();
                        for (r, arj) in covered {
                            let p = self.pos[n + r];
                            for &c in &free_rows {
                                let val = self.binv[c * m + ps];
                                if val != 0.0 {
                                    self.binv[c * m + p] -= arj * val;
                                }
                            }
                        }
                    }
                    true
                }
                None => false,
            }
        };
        if !ok {
            self.reset_to_slack_basis();
        }
        self.recompute_basic_values();
    }

    fn reset_to_slack_basis(&mut self) {
        let m = self.m;
        for p in 0..m {
            let b = self.basis[p];
            self.pos[b] = NONBASIC;
            if b < self.n {
                self.x[b] = self.x[b].clamp(self.lo[b], self.hi[b]);
            }
        }
        for p in 0..m {
            self.basis[p] = self.n + p;
            self.pos[self.n + p] = p;
        }
        self.binv.iter_mut().for_each(|e| *e = 0.0);
        for p in 0..m {
            self.binv[p * m + p] = 1.0;
        }
    }

    fn primal_infeasibility(&self) -> f64 {
        self.basis
            .iter()
            .map(|&b| (self.lo[b] - self.x[b]).max(self.x[b] - self.hi[b]).max(0.0))
            .sum()
    }

    fn is_phase_one(&self) -> bool {
        self.basis
            .iter()
            .any(|&b| self.x[b] < self.lo[b] - FEAS_TOL || self.x[b] > self.hi[b] + FEAS_TOL)
    }

    fn cost(&self, j: usize) -> f64 {
        if j < self.n {
            self.lp.cost[j]
        } else {
            0.0
        }
    }

    fn compute_duals(&mut self, phase_one: bool) {
        let m = self.m;
        for p in 0..m {
            let b = self.basis[p];
            self.cb[p] = if phase_one {
                if self.x[b] < self.lo[b] - FEAS_TOL {
                    -1.0
                } else if self.x[b] > self.hi[b] + FEAS_TOL {
                    1.0
                } else {
                    0.0
                }
            } else {
                self.cost(b)
            };
        }
        let nz: Vec<usize> = (0..m).filter(|&p| self.cb[p] != 0.0).collect();
        for c in 0..m {
            let col = &self.binv[c * m..(c + 1) * m];
            self.y[c] = nz.iter().map(|&p| self.cb[p] * col[p]).sum();
        }
    }

    fn reduced_cost(&self, j: usize, phase_one: bool) -> f64 {
        let c = if phase_one { 0.0 } else { self.cost(j) };
        c - self.column(j).map(|(r, a)| self.y[r] * a).sum::<f64>()
    }

    /// Returns (entering var, direction, reduced cost) or None at optimality.
    fn price(&self, phase_one: bool, bland: bool) -> Option<(usize, f64, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..self.n + self.m {
            if self.pos[j] != NONBASIC {
                continue;
            }
            let can_up = self.hi[j] - self.x[j] > MOVE_TOL;
            let can_down = self.x[j] - self.lo[j] > MOVE_TOL;
            if !can_up && !can_down {
                continue;
            }
            let d = self.reduced_cost(j, phase_one);
            let dir = if d < -DUAL_TOL && can_up {
                1.0
            } else if d > DUAL_TOL && can_down {
                -1.0
            } else {
                continue;
            };
            if bland {
                return Some((j, dir, d));
            }
            if best.is_none_or(|(_, _, s)| d.abs() > s.abs()) {
                best = Some((j, dir, d));
            }
        }
        best
    }

    fn compute_alpha(&mut self, q: usize) {
        let m = self.m;
        self.alpha.iter_mut().for_each(|a| *a = 0.0);
        let entries: Vec<(usize, f64)> = self.column(q).collect();
        for (r, a) in entries {
            let col = &self.binv[r * m..(r + 1) * m];
            for p in 0..m {
                self.alpha[p] += a * col[p];
            }
        }
        self.alpha_nz.clear();
        for p in 0..m {
            if self.alpha[p].abs() > 1e-13 {
                self.alpha_nz.push(p);
            } else {
                self.alpha[p] = 0.0;
            }
        }
    }

    /// Distance and target bound for basic position `p` moving at `rate`.
    fn breakpoint(&self, p: usize, rate: f64, slack: f64) -> Option<(f64, bool)> {
        let b = self.basis[p];
        let xb = self.x[b];
        if rate < 0.0 {
            if xb > self.hi[b] + FEAS_TOL {
                Some(((xb - self.hi[b] + slack) / -rate, true))
            } else if xb >= self.lo[b] - FEAS_TOL && self.lo[b].is_finite() {
                Some((((xb - self.lo[b]).max(0.0) + slack) / -rate, false))
            } else {
                None
            }
        } else if xb < self.lo[b] - FEAS_TOL {
            Some(((self.lo[b] - xb + slack) / rate, false))
        } else if xb <= self.hi[b] + FEAS_TOL && self.hi[b].is_finite() {
            Some((((self.hi[b] - xb).max(0.0) + slack) / rate, true))
        } else {
            None
        }
    }

    /// Harris two-pass ratio test. Returns step length and leaving pivot
    /// (None for a bound flip of the entering variable).
    fn ratio_test(&self, q: usize, dir: f64, bland: bool) -> Option<(f64, Option<Pivot>)> {
        let entering_room = if dir > 0.0 {
            self.hi[q] - self.x[q]
        } else {
            self.x[q] - self.lo[q]
        };
        let mut relaxed = f64::INFINITY;
        for &p in &self.alpha_nz {
            let a = self.alpha[p];
            if a.abs() <= PIVOT_TOL {
                continue;
            }
            let rate = -a * dir;
            if let Some((t, _)) = self.breakpoint(p, rate, HARRIS_TOL) {
                relaxed = relaxed.min(t);
            }
        }
        if relaxed.is_infinite() && entering_room.is_infinite() {
            return None;
        }
        if entering_room <= relaxed {
            return Some((entering_room, None));
        }
        let mut chosen: Option<(usize, f64, bool, f64)> = None;
        for &p in &self.alpha_nz {
            let a = self.alpha[p];
            if a.abs() <= PIVOT_TOL {
                continue;
            }
            let rate = -a * dir;
            if let Some((t, to_upper)) = self.breakpoint(p, rate, 0.0) {
                if t > relaxed {
                    continue;
                }
                let better = match chosen {
                    None => true,
                    Some((cp, _, _, ca)) => {
                        if bland {
                            self.basis[p] < self.basis[cp]
                        } else {
                            a.abs() > ca
                        }
                    }
                };
                if better {
                    chosen = Some((p, t, to_upper, a.abs()));
                }
            }
        }
        let (p, t, to_upper, _) = chosen?;
        Some((t.max(0.0), Some(Pivot { position: p, to_upper })))
    }

    fn pivot(&mut self, q: usize, leave: &Pivot) {
        let m = self.m;
        let r = leave.position;
        let old = self.basis[r];
        self.x[old] = if leave.to_upper { self.hi[old] } else { self.lo[old] };
        self.pos[old] = NONBASIC;
        self.basis[r] = q;
        self.pos[q] = r;
        let pivot = self.alpha[r];
        let nz: Vec<(usize, f64)> = self
            .alpha_nz
            .iter()
            .filter(|&&p| p != r)
            .map(|&p| (p, self.alpha[p]))
            .collect();
        for c in 0..m {
            let col = &mut self.binv[c * m..(c + 1) * m];
            let v = col[r];
            if v == 0.0 {
                continue;
            }
            let v = v / pivot;
            col[r] = v;
            for &(p, a) in &nz {
                col[p] -= a * v;
            }
        }
        self.since_reinvert += 1;
    }

    fn max_residual(&self) -> f64 {
        let mut res = vec![0.0; self.m];
        for j in 0..self.n {
            let xj = self.x[j];
            if xj == 0.0 {
                continue;
            }
            for (r, a) in self.column(j) {
                res[r] += a * xj;
            }
        }
        (0..self.m)
            .map(|r| (res[r] + self.x[self.n + r]).abs())
            .fold(0.0, f64::max)
    }

    fn finish(&self, status: LpStatus, iterations: usize) -> RawSolution {
        let x: Vec<f64> = (0..self.n)
            .map(|j| self.x[j].clamp(self.lo[j], self.hi[j]))
            .collect();
        let objective = match status {
            LpStatus::Optimal => x.iter().zip(&self.lp.cost).map(|(a, b)| a * b).sum(),
            LpStatus::Infeasible => f64::INFINITY,
            LpStatus::Unbounded => f64::NEG_INFINITY,
            LpStatus::IterationLimit => f64::NAN,
        };
        RawSolution {
            status,
            objective,
            x,
            iterations,
        }
    }

    fn run(&mut self) -> RawSolution {
        if self.m == 0 {
            // Box-constrained: each column sits at its cheaper bound.
            for j in 0..self.n {
                let c = self.lp.cost[j];
                self.x[j] = if c > 0.0 {
                    self.lo[j]
                } else if c < 0.0 {
                    self.hi[j]
                } else {
                    self.x[j]
                };
            }
            return self.finish(LpStatus::Optimal, 0);
        }
        let max_iter = 50 * (self.n + self.m) + 1000;
        let mut degenerate_run = 0usize;
        let mut bland = false;
        let mut verifications = 0;
        let mut iter = 0;
        // phase-2 duals are updated in place after each pivot
        let mut duals_valid = false;
        while iter < max_iter {
            iter += 1;
            if self.since_reinvert >= REINVERT_EVERY {
                self.reinvert();
                duals_valid = false;
            }
            let phase_one = self.is_phase_one();
            if phase_one || !duals_valid {
                self.compute_duals(phase_one);
                duals_valid = !phase_one;
            }
            let Some((q, dir, dq)) = self.price(phase_one, bland) else {
                // Confirm on a fresh factorisation before declaring the result.
                if verifications < 3 && self.max_residual() > 1e-9 {
                    verifications += 1;
                    self.reinvert();
                    duals_valid = false;
                    continue;
                }
                if phase_one && self.primal_infeasibility() > FEAS_TOL {
                    return self.finish(LpStatus::Infeasible, iter);
                }
                return self.finish(LpStatus::Optimal, iter);
            };
            self.compute_alpha(q);
            let Some((t, leave)) = self.ratio_test(q, dir, bland) else {
                if phase_one {
                    // Cannot happen in exact arithmetic; refactor and retry.
                    if verifications < 3 {
                        verifications += 1;
                        self.reinvert();
                        duals_valid = false;
                        continue;
                    }
                    return self.finish(LpStatus::IterationLimit, iter);
                }
                return self.finish(LpStatus::Unbounded, iter);
            };
            if t.is_finite() && t > 0.0 {
                self.x[q] += dir * t;
                for &p in &self.alpha_nz {
                    let b = self.basis[p];
                    self.x[b] -= self.alpha[p] * dir * t;
                }
            }
            match leave {
                None => {
                    self.x[q] = if dir > 0.0 { self.hi[q] } else { self.lo[q] };
                }
                Some(pv) => {
                    if duals_valid {
                        let m = self.m;
                        let r = pv.position;
                        let theta = dq / self.alpha[r];
                        for c in 0..m {
                            let v = self.binv[c * m + r];
                            if v != 0.0 {
                                self.y[c] += theta * v;
                            }
                        }
                    }
                    self.pivot(q, &pv);
                }
            }
            if t <= MOVE_TOL {
                degenerate_run += 1;
                if degenerate_run > DEGENERATE_BEFORE_BLAND {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
                bland = false;
            }
        }
        self.finish(LpStatus::IterationLimit, iter)
    }
}

/// Gauss-Jordan inversion of a row-major k x k matrix. Column and row
/// singletons are pivoted first, which creates no fill; the remaining bump
/// uses partial pivoting.
fn invert_dense(a: &mut [f64], k: usize) -> Option<Vec<f64>> {
    const SINGULAR: f64 = 1e-11;
    let mut e = vec![0.0; k * k];
    for i in 0..k {
        e[i * k + i] = 1.0;
    }
    let mut row_done = vec![false; k];
    let mut col_done = vec![false; k];
    let mut row_count = vec![0usize; k];
    let mut col_count = vec![0usize; k];
    for r in 0..k {
        for c in 0..k {
            if a[r * k + c] != 0.0 {
                row_count[r] += 1;
                col_count[c] += 1;
            }
        }
    }
    // pivot_row[c] = row whose final content is row c of the inverse
    let mut pivot_row = vec![usize::MAX; k];
    let mut a_nz = Vec::with_capacity(k);
    let mut e_nz = Vec::with_capacity(k);

    let mut eliminate = |a: &mut [f64],
                         e: &mut [f64],
                         r: usize,
                         c: usize,
                         rows: Option<&[bool]>,
                         row_done: &mut [bool],
                         col_done: &mut [bool],
                         row_count: &mut [usize],
                         col_count: &mut [usize]| {
        let d = a[r * k + c];
        a_nz.clear();
        a_nz.extend((0..k).filter(|&j| j != c && a[r * k + j] != 0.0));
        e_nz.clear();
        e_nz.extend((0..k).filter(|&j| e[r * k + j] != 0.0));
        a[r * k + c] = 1.0;
        for &j in &a_nz {
            a[r * k + j] /= d;
        }
        for &j in &e_nz {
            e[r * k + j] /= d;
        }
        for i in 0..k {
            if i == r || rows.is_some_and(|t| !t[i]) {
                continue;
            }
            let f = a[i * k + c];
            if f == 0.0 {
                continue;
            }
            a[i * k + c] = 0.0;
            if !row_done[i] {
                row_count[i] -= 1;
            }
            for &j in &a_nz {
                let before = a[i * k + j];
                let after = before - f * a[r * k + j];
                a[i * k + j] = after;
                if !row_done[i] && !col_done[j] && (before == 0.0) != (after == 0.0) {
                    if after == 0.0 {
                        row_count[i] -= 1;
                        col_count[j] -= 1;
                    } else {
                        row_count[i] += 1;
                        col_count[j] += 1;
                    }
                }
            }
            for &j in &e_nz {
                e[i * k + j] -= f * e[r * k + j];
            }
        }
        for &j in &a_nz {
            if !col_done[j] {
                col_count[j] -= 1;
            }
        }
        row_done[r] = true;
        col_done[c] = true;
    };

    let mut remaining = k;
    loop {
        let mut progressed = false;
        for c in 0..k {
            if col_done[c] || col_count[c] != 1 {
                continue;
            }
            let r = (0..k).find(|&r| !row_done[r] && a[r * k + c] != 0.0)?;
            if a[r * k + c].abs() < SINGULAR {
                continue;
            }
            eliminate(a, &mut e, r, c, None, &mut row_done, &mut col_done, &mut row_count, &mut col_count);
            pivot_row[c] = r;
            remaining -= 1;
            progressed = true;
        }
        for r in 0..k {
            if row_done[r] || row_count[r] != 1 {
                continue;
            }
            let c = (0..k).find(|&c| !col_done[c] && a[r * k + c] != 0.0)?;
            if a[r * k + c].abs() < SINGULAR {
                continue;
            }
            eliminate(a, &mut e, r, c, None, &mut row_done, &mut col_done, &mut row_count, &mut col_count);
            pivot_row[c] = r;
            remaining -= 1;
            progressed = true;
        }
        if !progressed {
            break;
        }
    }
    if remaining > 0 {
        // eliminate within the bump only, then clear the finished rows
        let in_bump: Vec<bool> = row_done.iter().map(|d| !d).collect();
        let bump_cols: Vec<usize> = (0..k).filter(|&c| !col_done[c]).collect();
        for &c in &bump_cols {
            if col_done[c] {
                continue;
            }
            let mut best: Option<(usize, f64)> = None;
            for r in 0..k {
                let v = a[r * k + c].abs();
                if !row_done[r] && best.is_none_or(|(_, b)| v > b) {
                    best = Some((r, v));
                }
            }
            let (r, v) = best?;
            if v < SINGULAR {
                return None;
            }
            eliminate(a, &mut e, r, c, Some(&in_bump), &mut row_done, &mut col_done, &mut row_count, &mut col_count);
            pivot_row[c] = r;
        }
        let patterns: Vec<Vec<usize>> = bump_cols
            .iter()
            .map(|&c| {
                let r = pivot_row[c];
                (0..k).filter(|&j| e[r * k + j] != 0.0).collect()
            })
            .collect();
        for i in (0..k).filter(|&i| !in_bump[i]) {
            for (&c, pattern) in bump_cols.iter().zip(&patterns) {
                let f = a[i * k + c];
                if f == 0.0 {
                    continue;
                }
                a[i * k + c] = 0.0;
                let r = pivot_row[c];
                for &j in pattern {
                    e[i * k + j] -= f * e[r * k + j];
                }
            }
        }
    }
    let mut inv = vec![0.0; k * k];
    for c in 0..k {
        let r = pivot_row[c];
        inv[c * k..(c + 1) * k].copy_from_slice(&e[r * k..(r + 1) * k]);
    }
    Some(inv)
}
