//! Distance costs, scaling factors and the ordering cost of an ordered action.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feature_space::{support, ActionSet, DatasetStats};
use crate::interaction::InteractionMatrix;

const CDF_CLIP: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostKind {
    Tlps,
    Mad,
    Table,
}

/// Per-feature, per-candidate cost constants `c[d][i]`, aligned with an
/// [`ActionSet`]. The null candidate costs 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceCost {
    pub kind: CostKind,
    costs: Vec<Vec<f64>>,
}

impl DistanceCost {
    pub fn new(kind: CostKind, costs: Vec<Vec<f64>>) -> Result<Self> {
        for (d, row) in costs.iter().enumerate() {
            if row.first() != Some(&0.0) {
                return Err(Error::InvalidInput(format!("null candidate of feature {d} must cost 0")));
            }
            if row.iter().any(|c| !c.is_finite() || *c < 0.0) {
                return Err(Error::InvalidInput(format!("feature {d} has a negative or non-finite cost")));
            }
        }
        Ok(Self { kind, costs })
    }

    pub fn get(&self, d: usize, i: usize) -> f64 {
        self.costs[d][i]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.costs
    }

    pub fn check_shape(&self, actions: &ActionSet) -> Result<()> {
        if self.costs.len() != actions.dim() {
            return Err(Error::DimensionMismatch {
                expected: actions.dim(),
                got: self.costs.len(),
            });
        }
        for d in 0..actions.dim() {
            if self.costs[d].len() != actions.len(d) {
                return Err(Error::DimensionMismatch {
                    expected: actions.len(d),
                    got: self.costs[d].len(),
                });
            }
        }
        Ok(())
    }

    /// `C_dist` of the action with the given candidate indices.
    pub fn of_indices(&self, indices: &[usize]) -> f64 {
        indices.iter().enumerate().map(|(d, &i)| self.costs[d][i]).sum()
    }
}

fn clip(q: f64) -> f64 {
    q.clamp(CDF_CLIP, 1.0 - CDF_CLIP)
}

/// Total-log percentile shift: `|log((1 - Q(x + a)) / (1 - Q(x)))|` with the
/// empirical CDF `Q` clipped to `[0.01, 0.99]`.
pub fn tlps_cost(actions: &ActionSet, x: &[f64], stats: &DatasetStats) -> Result<DistanceCost> {
    check_dims(actions.dim(), x.len())?;
    check_dims(actions.dim(), stats.dim())?;
    let costs = (0..actions.dim())
        .map(|d| {
            let f = &stats.features[d];
            let base = 1.0 - clip(f.cdf(x[d]));
            actions
                .candidates(d)
                .iter()
                .map(|&a| {
                    if a == 0.0 {
                        0.0
                    } else {
                        ((1.0 - clip(f.cdf(x[d] + a))) / base).ln().abs()
                    }
                })
                .collect()
        })
        .collect();
    DistanceCost::new(CostKind::Tlps, costs)
}

/// `|a| / MAD`, falling back to the standard deviation and then to 1 when
/// the spread is zero.
pub fn mad_cost(actions: &ActionSet, stats: &DatasetStats) -> Result<DistanceCost> {
    check_dims(actions.dim(), stats.dim())?;
    let costs = (0..actions.dim())
        .map(|d| {
            let f = &stats.features[d];
            let scale = if f.mad > 0.0 {
                f.mad
            } else if f.std > 0.0 {
                f.std
            } else {
                1.0
            };
            actions.candidates(d).iter().map(|a| a.abs() / scale).collect()
        })
        .collect();
    DistanceCost::new(CostKind::Mad, costs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostEntry {
    pub feature: String,
    /// Perturbation amount the entry prices.
    pub value: f64,
    pub cost: f64,
}

/// User-supplied cost table keyed by (feature, perturbation).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CostTable {
    #[serde(default)]
    pub entries: Vec<CostEntry>,
    #[serde(default)]
    pub default: Option<f64>,
}

const TABLE_MATCH_TOL: f64 = 1e-9;

pub fn table_cost(actions: &ActionSet, feature_names: &[String], table: &CostTable) -> Result<DistanceCost> {
    check_dims(actions.dim(), feature_names.len())?;
    for e in &table.entries {
        if !feature_names.contains(&e.feature) {
            return Err(Error::Schema(format!("cost table names unknown feature {}", e.feature)));
        }
    }
    let mut costs = Vec::with_capacity(actions.dim());
    for (d, name) in feature_names.iter().enumerate() {
        let mut row = Vec::with_capacity(actions.len(d));
        for &a in actions.candidates(d) {
            if a == 0.0 {
                row.push(0.0);
                continue;
            }
            let hit = table
                .entries
                .iter()
                .find(|e| e.feature == *name && (e.value - a).abs() <= TABLE_MATCH_TOL * a.abs().max(1.0));
            match (hit, table.default) {
                (Some(e), _) => row.push(e.cost),
                (None, Some(c)) => row.push(c),
                (None, None) => {
                    return Err(Error::Schema(format!(
                        "cost table has no entry for feature {name}, perturbation {a}, and no default"
                    )))
                }
            }
        }
        costs.push(row);
    }
    DistanceCost::new(CostKind::Table, costs)
}

fn check_dims(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// Positive per-feature weights applied to actual perturbations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFactors(Vec<f64>);

impl ScalingFactors {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|s| !s.is_finite() || *s <= 0.0) {
            return Err(Error::InvalidInput("scaling factors must be finite and positive".into()));
        }
        Ok(Self(values))
    }

    pub fn unit(dim: usize) -> Self {
        Self(vec![1.0; dim])
    }

    pub fn get(&self, d: usize) -> f64 {
        self.0[d]
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

/// `s_d = 1 / std_d`, or 1 where the standard deviation is zero.
pub fn default_scaling(stats: &DatasetStats) -> ScalingFactors {
    ScalingFactors(
        stats
            .features
            .iter()
            .map(|f| if f.std > 0.0 { 1.0 / f.std } else { 1.0 })
            .collect(),
    )
}

fn check_order(a: &[f64], sigma: &[usize]) -> Result<()> {
    let supp = support(a);
    let mut sorted = sigma.to_vec();
    sorted.sort_unstable();
    if sorted != supp {
        return Err(Error::InvalidInput(format!(
            "order {sigma:?} is not a permutation of the perturbed features {supp:?}"
        )));
    }
    Ok(())
}

/// Actual perturbations `Delta_k = a[sigma_k] - sum_{l<k} M[sigma_l][sigma_k] Delta_l`.
///
/// The inner sum is accumulated in ascending feature order so the result is
/// bit-identical for any two orders that agree on which interacting features
/// come first.
pub fn actual_perturbations(a: &[f64], sigma: &[usize], m: &InteractionMatrix) -> Result<Vec<f64>> {
    check_dims(m.dim(), a.len())?;
    check_order(a, sigma)?;
    let mut done: Vec<Option<f64>> = vec![None; a.len()];
    let mut deltas = Vec::with_capacity(sigma.len());
    for &j in sigma {
        let mut pushed = 0.0;
        for (i, di) in done.iter().enumerate() {
            if let Some(di) = di {
                let mij = m.get(i, j);
                if mij != 0.0 {
                    pushed += mij * di;
                }
            }
        }
        let delta = a[j] - pushed;
        done[j] = Some(delta);
        deltas.push(delta);
    }
    Ok(deltas)
}

fn scaled_sum(sigma: &[usize], deltas: &[f64], s: &ScalingFactors) -> f64 {
    let mut terms: Vec<(usize, f64)> = sigma.iter().copied().zip(deltas.iter().copied()).collect();
    terms.sort_unstable_by_key(|t| t.0);
    terms.iter().map(|&(d, delta)| s.get(d) * delta.abs()).sum()
}

/// `C_ord = sum_k s[sigma_k] |Delta_k|`, summed in ascending feature order.
pub fn ordering_cost(a: &[f64], sigma: &[usize], m: &InteractionMatrix, s: &ScalingFactors) -> Result<f64> {
    check_dims(m.dim(), s.dim())?;
    let deltas = actual_perturbations(a, sigma, m)?;
    Ok(scaled_sum(sigma, &deltas, s))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub dist: f64,
    pub ord: f64,
    pub total: f64,
}

/// `(C_dist, C_ord, C_dist + gamma C_ord)` of an ordered action.
pub fn total_cost(
    a: &[f64],
    sigma: &[usize],
    actions: &ActionSet,
    cost: &DistanceCost,
    m: &InteractionMatrix,
    s: &ScalingFactors,
    gamma: f64,
) -> Result<CostBreakdown> {
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidInput(format!("gamma must be finite and non-negative, got {gamma}")));
    }
    cost.check_shape(actions)?;
    let indices = actions.indices_of(a)?;
    let dist = cost.of_indices(&indices);
    let ord = ordering_cost(a, sigma, m, s)?;
    Ok(CostBreakdown {
        dist,
        ord,
        total: dist + gamma * ord,
    })
}

/// A perturbation vector with an execution order and its cost breakdown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderedAction {
    pub action: Vec<f64>,
    pub order: Vec<usize>,
    pub deltas: Vec<f64>,
    pub cost_dist: f64,
    pub cost_ord: f64,
    pub cost_total: f64,
    pub gamma: f64,
}

impl OrderedAction {
    /// Recomputes every derived field from `(a, sigma)`.
    pub fn evaluate(
        a: &[f64],
        sigma: &[usize],
        actions: &ActionSet,
        cost: &DistanceCost,
        m: &InteractionMatrix,
        s: &ScalingFactors,
        gamma: f64,
    ) -> Result<Self> {
        let breakdown = total_cost(a, sigma, actions, cost, m, s, gamma)?;
        Ok(Self {
            action: a.to_vec(),
            order: sigma.to_vec(),
            deltas: actual_perturbations(a, sigma, m)?,
            cost_dist: breakdown.dist,
            cost_ord: breakdown.ord,
            cost_total: breakdown.total,
            gamma,
        })
    }
}
