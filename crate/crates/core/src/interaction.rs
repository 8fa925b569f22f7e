//! Causal adjacency matrices and the interaction matrix `M = I + B + B^2 + ...`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const IDENTITY_TOL: f64 = 1e-9;

/// Dense `D x D` matrix where entry `(i, j)` is the total effect of a unit
/// change of feature `i` on feature `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionMatrix {
    rows: Vec<Vec<f64>>,
}

impl InteractionMatrix {
    pub fn identity(dim: usize) -> Self {
        let mut rows = vec![vec![0.0; dim]; dim];
        for (d, row) in rows.iter_mut().enumerate() {
            row[d] = 1.0;
        }
        Self { rows }
    }

    /// Wraps a matrix supplied directly (e.g. by domain experts). Only the
    /// unit diagonal is checked.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        check_square(&rows)?;
        for (d, row) in rows.iter().enumerate() {
            if (row[d] - 1.0).abs() > IDENTITY_TOL {
                return Err(Error::InvalidInput(format!(
                    "interaction matrix diagonal entry {d} is {}, expected 1",
                    row[d]
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput("interaction matrix has a non-finite entry".into()));
            }
        }
        Ok(Self { rows })
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i][j]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }
}

fn check_square(rows: &[Vec<f64>]) -> Result<()> {
    let n = rows.len();
    for row in rows {
        if row.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: row.len(),
            });
        }
    }
    Ok(())
}

/// Topological order of the digraph `{(i, j) | B[i][j] != 0}` by Kahn's
/// algorithm, always taking the smallest ready index. Fails with a cycle
/// witness when the graph is cyclic.
pub fn validate_dag(b: &[Vec<f64>]) -> Result<Vec<usize>> {
    check_square(b)?;
    let n = b.len();
    let mut indegree = vec![0usize; n];
    for row in b {
        for (j, &w) in row.iter().enumerate() {
            if w != 0.0 {
                indegree[j] += 1;
            }
        }
    }
    let mut ready: BTreeSet<usize> = (0..n).filter(|&j| indegree[j] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(i) = ready.pop_first() {
        order.push(i);
        for (j, &w) in b[i].iter().enumerate() {
            if w != 0.0 {
                indegree[j] -= 1;
                if indegree[j] == 0 {
                    ready.insert(j);
                }
            }
        }
    }
    if order.len() == n {
        return Ok(order);
    }
    // Every leftover node has a leftover predecessor; walking predecessors
    // must revisit a node.
    let left: Vec<bool> = (0..n).map(|j| indegree[j] > 0).collect();
    let start = (0..n).find(|&j| left[j]).expect("cycle implies a leftover node");
    let mut seen = vec![usize::MAX; n];
    let mut walk = Vec::new();
    let mut cur = start;
    while seen[cur] == usize::MAX {
        seen[cur] = walk.len();
        walk.push(cur);
        cur = (0..n)
            .find(|&i| left[i] && b[i][cur] != 0.0)
            .expect("leftover node has a leftover predecessor");
    }
    let mut cycle: Vec<usize> = walk[seen[cur]..].to_vec();
    cycle.reverse();
    let lo = cycle.iter().enumerate().min_by_key(|(_, &v)| v).map(|(p, _)| p).unwrap_or(0);
    cycle.rotate_left(lo);
    Err(Error::Cycle(cycle))
}

fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i][k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..n {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

/// `M = I + sum_{k=1}^{D-1} B^k`, stopping as soon as a power vanishes.
pub fn compute_interaction_matrix(b: &[Vec<f64>]) -> Result<InteractionMatrix> {
    validate_dag(b)?;
    let n = b.len();
    let mut m = InteractionMatrix::identity(n).rows;
    let mut power: Vec<Vec<f64>> = b.to_vec();
    for _ in 1..n.max(1) {
        if power.iter().all(|r| r.iter().all(|&v| v == 0.0)) {
            break;
        }
        for i in 0..n {
            for j in 0..n {
                m[i][j] += power[i][j];
            }
        }
        power = matmul(&power, b);
    }
    Ok(InteractionMatrix { rows: m })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Edge {
    pub from: String,
    pub to: String,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixKind {
    Adjacency,
    Interaction,
}

/// On-disk interaction description: either a weighted edge list or a dense
/// matrix tagged as adjacency or interaction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InteractionFile {
    pub features: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub edges: Vec<Edge>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix_is: Option<MatrixKind>,
}

impl InteractionFile {
    pub fn from_edges(features: Vec<String>, edges: Vec<Edge>) -> Self {
        Self {
            features,
            edges,
            matrix: None,
            matrix_is: None,
        }
    }

    /// Resolves the document against `feature_names`, reordering rows and
    /// columns to match, and returns the interaction matrix.
    pub fn resolve(&self, feature_names: &[String]) -> Result<InteractionMatrix> {
        let d = feature_names.len();
        let mut position = vec![usize::MAX; self.features.len()];
        for (p, name) in self.features.iter().enumerate() {
            position[p] = feature_names
                .iter()
                .position(|f| f == name)
                .ok_or_else(|| Error::Schema(format!("interaction file names unknown feature {name}")))?;
        }
        let index = |name: &str| -> Result<usize> {
            feature_names
                .iter()
                .position(|f| f == name)
                .ok_or_else(|| Error::Schema(format!("edge references unknown feature {name}")))
        };
        match (&self.matrix, self.edges.is_empty()) {
            (Some(_), false) => Err(Error::Schema("give either edges or a matrix, not both".into())),
            (Some(raw), true) => {
                if raw.len() != self.features.len() {
                    return Err(Error::DimensionMismatch {
                        expected: self.features.len(),
                        got: raw.len(),
                    });
                }
                check_square(raw)?;
                let kind = self.matrix_is.unwrap_or(MatrixKind::Adjacency);
                let mut full = match kind {
                    MatrixKind::Adjacency => vec![vec![0.0; d]; d],
                    MatrixKind::Interaction => InteractionMatrix::identity(d).rows,
                };
                for (p, row) in raw.iter().enumerate() {
                    for (q, &v) in row.iter().enumerate() {
                        full[position[p]][position[q]] = v;
                    }
                }
                match kind {
                    MatrixKind::Adjacency => compute_interaction_matrix(&full),
                    MatrixKind::Interaction => InteractionMatrix::from_rows(full),
                }
            }
            (None, _) => {
                let mut b = vec![vec![0.0; d]; d];
                for e in &self.edges {
                    if !e.weight.is_finite() {
                        return Err(Error::Schema(format!("edge {} -> {} has a non-finite weight", e.from, e.to)));
                    }
                    let (i, j) = (index(&e.from)?, index(&e.to)?);
                    if i == j {
                        return Err(Error::Cycle(vec![i]));
                    }
                    b[i][j] += e.weight;
                }
                compute_interaction_matrix(&b)
            }
        }
    }
}

pub fn load_interaction(json: &str, feature_names: &[String]) -> Result<InteractionMatrix> {
    let doc: InteractionFile = serde_json::from_str(json)?;
    doc.resolve(feature_names)
}
