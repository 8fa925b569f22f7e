use crate::error::{Error, Result};

/// Index of a variable inside a [`MilpModel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub integer: bool,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(VarId, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    /// Row activity bounds `[lo, hi]` implied by the relation.
    pub fn row_bounds(&self) -> (f64, f64) {
        match self.relation {
            Relation::Le => (f64::NEG_INFINITY, self.rhs),
            Relation::Eq => (self.rhs, self.rhs),
            Relation::Ge => (self.rhs, f64::INFINITY),
        }
    }

    pub fn activity(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, c)| c * x[v.0]).sum()
    }
}

/// A mixed-integer linear program in minimization form.
///
/// Every variable carries finite bounds; the branch-and-bound engine and the
/// bound propagation rely on that.
#[derive(Debug, Clone, Default)]
pub struct MilpModel {
    pub name: String,
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    pub objective: Vec<f64>,
    pub objective_offset: f64,
}

impl MilpModel {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ..Self::default()
        }
    }

    pub fn add_var(&mut self, name: impl Into<String>, lower: f64, upper: f64, integer: bool) -> VarId {
        self.variables.push(Variable {
            name: name.into(),
            lower,
            upper,
            integer,
        });
        self.objective.push(0.0);
        VarId(self.variables.len() - 1)
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> VarId {
        self.add_var(name, 0.0, 1.0, true)
    }

    pub fn add_continuous(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> VarId {
        self.add_var(name, lower, upper, false)
    }

    /// Adds a row; duplicate variable references are merged and zero
    /// coefficients dropped.
    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: impl IntoIterator<Item = (VarId, f64)>,
        relation: Relation,
        rhs: f64,
    ) -> usize {
        let mut merged: Vec<(VarId, f64)> = Vec::new();
        for (v, c) in terms {
            match merged.iter_mut().find(|(w, _)| *w == v) {
                Some(slot) => slot.1 += c,
                None => merged.push((v, c)),
            }
        }
        merged.retain(|&(_, c)| c != 0.0);
        self.constraints.push(Constraint {
            name: name.into(),
            terms: merged,
            relation,
            rhs,
        });
        self.constraints.len() - 1
    }

    pub fn set_objective(&mut self, var: VarId, coeff: f64) {
        self.objective[var.0] = coeff;
    }

    pub fn add_objective(&mut self, var: VarId, coeff: f64) {
        self.objective[var.0] += coeff;
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn num_integer(&self) -> usize {
        self.variables.iter().filter(|v| v.integer).count()
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective_offset + self.objective.iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
    }

    /// Checks the structural invariants: finite ordered bounds, in-range
    /// column indices, finite coefficients.
    pub fn validate(&self) -> Result<()> {
        if self.objective.len() != self.variables.len() {
            return Err(Error::InvalidModel("objective length differs from variable count".into()));
        }
        for v in &self.variables {
            if !v.lower.is_finite() || !v.upper.is_finite() {
                return Err(Error::InvalidModel(format!("variable {} has an infinite bound", v.name)));
            }
            if v.lower > v.upper {
                return Err(Error::InvalidModel(format!(
                    "variable {} has lower bound {} above upper bound {}",
                    v.name, v.lower, v.upper
                )));
            }
        }
        for c in &self.constraints {
            if !c.rhs.is_finite() {
                return Err(Error::InvalidModel(format!("row {} has a non-finite right-hand side", c.name)));
            }
            for &(v, a) in &c.terms {
                if v.0 >= self.variables.len() {
                    return Err(Error::InvalidModel(format!("row {} references unknown column {}", c.name, v.0)));
                }
                if !a.is_finite() {
                    return Err(Error::InvalidModel(format!("row {} has a non-finite coefficient", c.name)));
                }
            }
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidModel("non-finite objective coefficient".into()));
        }
        Ok(())
    }

    /// Largest row violation and integrality violation of `x`.
    pub fn violations(&self, x: &[f64]) -> (f64, f64) {
        let mut row = 0.0f64;
        for c in &self.constraints {
            let act = c.activity(x);
            let (lo, hi) = c.row_bounds();
            row = row.max(lo - act).max(act - hi);
        }
        for (v, &val) in self.variables.iter().zip(x) {
            row = row.max(v.lower - val).max(val - v.upper);
        }
        let int = self
            .variables
            .iter()
            .zip(x)
            .filter(|(v, _)| v.integer)
            .map(|(_, &val)| (val - val.round()).abs())
            .fold(0.0, f64::max);
        (row, int)
    }
}

/// Column-compressed copy of the constraint matrix, shared by the LP solver
/// and the propagator.
#[derive(Debug, Clone)]
pub(crate) struct SparseModel {
    pub n: usize,
    pub m: usize,
    pub col_start: Vec<usize>,
    pub col_row: Vec<usize>,
    pub col_val: Vec<f64>,
    pub row_start: Vec<usize>,
    pub row_col: Vec<usize>,
    pub row_val: Vec<f64>,
    pub row_lo: Vec<f64>,
    pub row_hi: Vec<f64>,
    pub cost: Vec<f64>,
    pub integer: Vec<bool>,
}

impl SparseModel {
    pub fn from_model(model: &MilpModel) -> Self {
        let n = model.num_vars();
        let m = model.num_constraints();
        let mut row_start = Vec::with_capacity(m + 1);
        let mut row_col = Vec::new();
        let mut row_val = Vec::new();
        let mut row_lo = Vec::with_capacity(m);
        let mut row_hi = Vec::with_capacity(m);
        let mut counts = vec![0usize; n];
        row_start.push(0);
        for c in &model.constraints {
            for &(v, a) in &c.terms {
                row_col.push(v.0);
                row_val.push(a);
                counts[v.0] += 1;
            }
            row_start.push(row_col.len());
            let (lo, hi) = c.row_bounds();
            row_lo.push(lo);
            row_hi.push(hi);
        }
        let mut col_start = vec![0usize; n + 1];
        for j in 0..n {
            col_start[j + 1] = col_start[j] + counts[j];
        }
        let mut fill = col_start.clone();
        let mut col_row = vec![0usize; row_col.len()];
        let mut col_val = vec![0.0; row_col.len()];
        for r in 0..m {
            for idx in row_start[r]..row_start[r + 1] {
                let j = row_col[idx];
                col_row[fill[j]] = r;
                col_val[fill[j]] = row_val[idx];
                fill[j] += 1;
            }
        }
        Self {
            n,
            m,
            col_start,
            col_row,
            col_val,
            row_start,
            row_col,
            row_val,
            row_lo,
            row_hi,
            cost: model.objective.clone(),
            integer: model.variables.iter().map(|v| v.integer).collect(),
        }
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.row_start[r]..self.row_start[r + 1]).map(move |i| (self.row_col[i], self.row_val[i]))
    }

    pub fn col(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.col_start[j]..self.col_start[j + 1]).map(move |i| (self.col_row[i], self.col_val[i]))
    }
}
