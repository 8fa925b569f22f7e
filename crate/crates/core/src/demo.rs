//! Synthetic five-feature credit dataset drawn from a linear structural
//! model with uniform noise, plus a gradient-descent logistic regression.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::classifiers::AdditiveClassifier;
use crate::cost_model::{default_scaling, mad_cost, tlps_cost, CostKind};
use crate::error::{Error, Result};
use crate::feature_space::{build_action_set, DatasetStats, FeatureSpace, FeatureSpec, FeatureStats};
use crate::interaction::{compute_interaction_matrix, Edge, InteractionFile};
use crate::ordce::OrdceProblem;

pub const FEATURES: [&str; 5] = ["Education", "JobSkill", "Income", "WorkPerDay", "HealthStatus"];

/// Weighted causal edges `(from, to, weight)` between feature indices.
pub const EDGES: [(usize, usize, f64); 4] = [(0, 1, 1.0), (1, 2, 6.0), (3, 2, 4.0), (3, 4, -0.5)];

const LABEL_COLUMN: &str = "label";

pub fn feature_names() -> Vec<String> {
    FEATURES.iter().map(|s| s.to_string()).collect()
}

pub fn adjacency() -> Vec<Vec<f64>> {
    let mut b = vec![vec![0.0; FEATURES.len()]; FEATURES.len()];
    for (i, j, w) in EDGES {
        b[i][j] = w;
    }
    b
}

pub fn interaction_file() -> InteractionFile {
    InteractionFile::from_edges(
        feature_names(),
        EDGES
            .iter()
            .map(|&(i, j, w)| Edge {
                from: FEATURES[i].to_string(),
                to: FEATURES[j].to_string(),
                weight: w,
            })
            .collect(),
    )
}

#[derive(Debug, Clone)]
pub struct DemoData {
    pub space: FeatureSpace,
    pub rows: Vec<Vec<f64>>,
    /// `+1` or `-1`.
    pub labels: Vec<f64>,
}

impl DemoData {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = feature_names();
        header.push(LABEL_COLUMN.to_string());
        w.write_record(&header)?;
        for (row, label) in self.rows.iter().zip(&self.labels) {
            let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            rec.push(label.to_string());
            w.write_record(&rec)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

fn round_out(v: f64, down: bool) -> f64 {
    if down {
        (v * 10.0).floor() / 10.0
    } else {
        (v * 10.0).ceil() / 10.0
    }
}

/// Samples `n` individuals. Each feature is the weighted sum of its causal
/// parents plus independent `U[-1, 1]` noise; the label is `+1` iff the
/// standardised Income plus standardised HealthStatus is positive.
/// Feature bounds are the sample range rounded outward to one decimal.
pub fn generate(seed: u64, n: usize, grid_size: usize) -> Result<DemoData> {
    if n == 0 {
        return Err(Error::InvalidInput("demo needs at least one sample".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = adjacency();
    let order = crate::interaction::validate_dag(&b)?;
    let d = FEATURES.len();
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        let noise: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let mut x = vec![0.0; d];
        for &j in &order {
            x[j] = (0..d).map(|i| b[i][j] * x[i]).sum::<f64>() + noise[j];
        }
        rows.push(x);
    }
    let stats: Vec<FeatureStats> = (0..d)
        .map(|j| FeatureStats::from_values(&rows.iter().map(|r| r[j]).collect::<Vec<_>>()))
        .collect::<Result<_>>()?;
    let z = |j: usize, v: f64| {
        let s = &stats[j];
        if s.std > 0.0 {
            (v - s.mean) / s.std
        } else {
            0.0
        }
    };
    let labels = rows
        .iter()
        .map(|r| if z(2, r[2]) + z(4, r[4]) > 0.0 { 1.0 } else { -1.0 })
        .collect();
    let specs = (0..d)
        .map(|j| {
            let s = &stats[j];
            FeatureSpec::continuous(
                FEATURES[j],
                round_out(s.sorted[0], true),
                round_out(s.sorted[s.sorted.len() - 1], false),
                grid_size,
            )
        })
        .collect();
    Ok(DemoData {
        space: FeatureSpace::new(specs)?,
        rows,
        labels,
    })
}

/// Logistic regression on standardised inputs by full-batch gradient
/// descent, mapped back to raw feature units.
pub fn train_logistic(rows: &[Vec<f64>], labels: &[f64], iterations: usize, learning_rate: f64) -> Result<AdditiveClassifier> {
    if rows.is_empty() {
        return Err(Error::NoInstances);
    }
    if rows.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: rows.len(),
            got: labels.len(),
        });
    }
    let d = rows[0].len();
    let n = rows.len() as f64;
    let stats: Vec<FeatureStats> = (0..d)
        .map(|j| FeatureStats::from_values(&rows.iter().map(|r| r[j]).collect::<Vec<_>>()))
        .collect::<Result<_>>()?;
    let scale: Vec<f64> = stats.iter().map(|s| if s.std > 0.0 { s.std } else { 1.0 }).collect();
    let z: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| (0..d).map(|j| (r[j] - stats[j].mean) / scale[j]).collect())
        .collect();
    let y: Vec<f64> = labels.iter().map(|&l| if l > 0.0 { 1.0 } else { 0.0 }).collect();
    let mut beta = vec![0.0; d];
    let mut beta0 = 0.0;
    for _ in 0..iterations {
        let mut grad = vec![0.0; d];
        let mut grad0 = 0.0;
        for (zi, &yi) in z.iter().zip(&y) {
            let t = beta0 + beta.iter().zip(zi).map(|(b, v)| b * v).sum::<f64>();
            let err = 1.0 / (1.0 + (-t).exp()) - yi;
            grad0 += err;
            for j in 0..d {
                grad[j] += err * zi[j];
            }
        }
        beta0 -= learning_rate * grad0 / n;
        for j in 0..d {
            beta[j] -= learning_rate * grad[j] / n;
        }
    }
    let weights: Vec<f64> = (0..d).map(|j| beta[j] / scale[j]).collect();
    let offset = beta0 - (0..d).map(|j| weights[j] * stats[j].mean).sum::<f64>();
    AdditiveClassifier::linear(weights, -offset)
}

pub fn accuracy(clf: &AdditiveClassifier, rows: &[Vec<f64>], labels: &[f64]) -> Result<f64> {
    let mut hits = 0usize;
    for (r, &l) in rows.iter().zip(labels) {
        if f64::from(clf.predict(r)?) == l {
            hits += 1;
        }
    }
    Ok(hits as f64 / rows.len().max(1) as f64)
}

/// Problems for the first `count` sampled individuals that the trained
/// model rejects, each paired with its row index. Costs are TLPS or MAD
/// from the sample statistics, scaling is inverse standard deviation.
pub fn corpus(seed: u64, n: usize, grid_size: usize, count: usize, cost: CostKind) -> Result<Vec<(usize, OrdceProblem)>> {
    let data = generate(seed, n, grid_size)?;
    let clf = train_logistic(&data.rows, &data.labels, 500, 0.5)?;
    let stats = DatasetStats::from_rows(&data.rows)?;
    let m = compute_interaction_matrix(&adjacency())?;
    let scaling = default_scaling(&stats);
    let mut out = Vec::new();
    for (i, x) in data.rows.iter().enumerate() {
        if out.len() == count {
            break;
        }
        if clf.predict(x)? != -1 {
            continue;
        }
        let actions = build_action_set(&data.space, x)?;
        let dist = match cost {
            CostKind::Mad => mad_cost(&actions, &stats)?,
            _ => tlps_cost(&actions, x, &stats)?,
        };
        let p = OrdceProblem::new(clf.clone(), x.clone(), actions, m.clone(), dist, scaling.clone());
        out.push((i, p));
    }
    Ok(out)
}
