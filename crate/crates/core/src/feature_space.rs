//! Feature metadata, dataset ingestion and finite per-feature action grids.

use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ZERO_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Continuous,
    Integer,
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Actionability {
    #[default]
    Free,
    IncreaseOnly,
    DecreaseOnly,
    Fixed,
}

fn default_grid() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    pub kind: FeatureKind,
    pub lower: f64,
    pub upper: f64,
    #[serde(default)]
    pub actionability: Actionability,
    /// Number of candidate perturbations to generate, counting 0.
    #[serde(default = "default_grid")]
    pub grid_size: usize,
}

impl FeatureSpec {
    pub fn continuous(name: impl Into<String>, lower: f64, upper: f64, grid_size: usize) -> Self {
        Self {
            name: name.into(),
            kind: FeatureKind::Continuous,
            lower,
            upper,
            actionability: Actionability::Free,
            grid_size,
        }
    }

    pub fn integer(name: impl Into<String>, lower: f64, upper: f64, grid_size: usize) -> Self {
        Self {
            kind: FeatureKind::Integer,
            ..Self::continuous(name, lower, upper, grid_size)
        }
    }

    pub fn binary(name: impl Into<String>) -> Self {
        Self {
            kind: FeatureKind::Binary,
            ..Self::continuous(name, 0.0, 1.0, 2)
        }
    }

    pub fn with_actionability(mut self, actionability: Actionability) -> Self {
        self.actionability = actionability;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.lower.is_finite() || !self.upper.is_finite() || self.lower > self.upper {
            return Err(Error::Schema(format!(
                "feature {} needs finite bounds with lower <= upper",
                self.name
            )));
        }
        if self.kind == FeatureKind::Binary && (self.lower != 0.0 || self.upper != 1.0) {
            return Err(Error::Schema(format!("binary feature {} must have bounds [0, 1]", self.name)));
        }
        if self.grid_size == 0 {
            return Err(Error::Schema(format!("feature {} has grid_size 0", self.name)));
        }
        Ok(())
    }

    fn check_value(&self, v: f64) -> std::result::Result<(), String> {
        if !v.is_finite() {
            return Err("value is not finite".into());
        }
        if v < self.lower || v > self.upper {
            return Err(format!("value {v} outside [{}, {}]", self.lower, self.upper));
        }
        if self.kind != FeatureKind::Continuous && v.fract() != 0.0 {
            return Err(format!("value {v} is not integral"));
        }
        Ok(())
    }
}

/// Validated list of feature specifications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpace {
    features: Vec<FeatureSpec>,
}

impl FeatureSpace {
    pub fn new(features: Vec<FeatureSpec>) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::Schema("no features declared".into()));
        }
        for (i, f) in features.iter().enumerate() {
            f.validate()?;
            if features[..i].iter().any(|g| g.name == f.name) {
                return Err(Error::Schema(format!("duplicate feature name {}", f.name)));
            }
        }
        Ok(Self { features })
    }

    pub fn dim(&self) -> usize {
        self.features.len()
    }

    pub fn features(&self) -> &[FeatureSpec] {
        &self.features
    }

    pub fn feature(&self, d: usize) -> &FeatureSpec {
        &self.features[d]
    }

    pub fn names(&self) -> Vec<String> {
        self.features.iter().map(|f| f.name.clone()).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    pub fn check_instance(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        for (f, &v) in self.features.iter().zip(x) {
            f.check_value(v)
                .map_err(|m| Error::InvalidInput(format!("feature {}: {m}", f.name)))?;
        }
        Ok(())
    }
}

/// Median of an ascending slice; even lengths average the two middle values.
pub fn median_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureStats {
    /// Sample values in ascending order.
    pub sorted: Vec<f64>,
    pub median: f64,
    pub mad: f64,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

impl FeatureStats {
    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::NoInstances);
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let median = median_sorted(&sorted);
        let mut dev: Vec<f64> = sorted.iter().map(|v| (v - median).abs()).collect();
        dev.sort_by(f64::total_cmp);
        let mad = median_sorted(&dev);
        let n = sorted.len() as f64;
        let mean = sorted.iter().sum::<f64>() / n;
        let var = sorted.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Ok(Self {
            sorted,
            median,
            mad,
            mean,
            std: var.sqrt(),
        })
    }

    /// Empirical CDF with linear interpolation between distinct sample
    /// values. Tied values share the average rank of their block; ranks are
    /// normalised by `n - 1`. Outside the sample range the CDF is flat.
    pub fn cdf(&self, v: f64) -> f64 {
        let s = &self.sorted;
        let n = s.len();
        if n == 1 {
            return 0.5;
        }
        let rank_of_block = |start: usize, end: usize| -> f64 { 0.5 * (start + end - 1) as f64 / (n - 1) as f64 };
        let block_end = |start: usize| -> usize {
            let mut e = start + 1;
            while e < n && s[e] == s[start] {
                e += 1;
            }
            e
        };
        if v <= s[0] {
            return rank_of_block(0, block_end(0));
        }
        if v >= s[n - 1] {
            let mut start = n - 1;
            while start > 0 && s[start - 1] == s[n - 1] {
                start -= 1;
            }
            return rank_of_block(start, n);
        }
        // first index with s[i] > v
        let upper = s.partition_point(|&u| u <= v);
        let hi_start = upper;
        let hi_end = block_end(hi_start);
        let mut lo_start = upper - 1;
        while lo_start > 0 && s[lo_start - 1] == s[upper - 1] {
            lo_start -= 1;
        }
        let (x0, q0) = (s[lo_start], rank_of_block(lo_start, upper));
        let (x1, q1) = (s[hi_start], rank_of_block(hi_start, hi_end));
        if v == x0 {
            return q0;
        }
        q0 + (q1 - q0) * (v - x0) / (x1 - x0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub features: Vec<FeatureStats>,
}

impl DatasetStats {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let first = rows.first().ok_or(Error::NoInstances)?;
        let d = first.len();
        let mut features = Vec::with_capacity(d);
        for j in 0..d {
            let column: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            features.push(FeatureStats::from_values(&column)?);
        }
        Ok(Self { features })
    }

    pub fn dim(&self) -> usize {
        self.features.len()
    }

    pub fn std(&self) -> Vec<f64> {
        self.features.iter().map(|f| f.std).collect()
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub instances: Vec<Vec<f64>>,
    pub labels: Option<Vec<f64>>,
    pub label_column: Option<String>,
    pub stats: DatasetStats,
}

/// Reads a headed CSV file. Every feature must appear as a column; at most
/// one further column is allowed and is read as the label.
pub fn load_dataset<R: Read>(source: R, space: &FeatureSpace) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(source);
    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let mut column_of = Vec::with_capacity(space.dim());
    for f in space.features() {
        let c = headers.iter().position(|h| *h == f.name).ok_or_else(|| Error::Parse {
            row: 1,
            column: f.name.clone(),
            message: "missing column".into(),
        })?;
        column_of.push(c);
    }
    let extra: Vec<usize> = (0..headers.len()).filter(|c| !column_of.contains(c)).collect();
    if extra.len() > 1 {
        return Err(Error::Schema(format!(
            "expected at most one label column besides the features, found {}",
            extra.iter().map(|&c| headers[c].as_str()).collect::<Vec<_>>().join(", ")
        )));
    }
    let label_col = extra.first().copied();

    let parse = |record: &csv::StringRecord, c: usize, row: usize| -> Result<f64> {
        let cell = record.get(c).ok_or_else(|| Error::Parse {
            row,
            column: headers[c].clone(),
            message: "missing cell".into(),
        })?;
        cell.trim().parse::<f64>().map_err(|_| Error::Parse {
            row,
            column: headers[c].clone(),
            message: format!("not a number: {cell:?}"),
        })
    };

    let mut instances = Vec::new();
    let mut labels = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let row = idx + 2;
        let record = record?;
        let mut x = Vec::with_capacity(space.dim());
        for (f, &c) in space.features().iter().zip(&column_of) {
            let v = parse(&record, c, row)?;
            f.check_value(v).map_err(|message| Error::Parse {
                row,
                column: f.name.clone(),
                message,
            })?;
            x.push(v);
        }
        if let Some(c) = label_col {
            labels.push(parse(&record, c, row)?);
        }
        instances.push(x);
    }
    if instances.is_empty() {
        return Err(Error::NoInstances);
    }
    let stats = DatasetStats::from_rows(&instances)?;
    Ok(Dataset {
        instances,
        labels: label_col.map(|_| labels),
        label_column: label_col.map(|c| headers[c].clone()),
        stats,
    })
}

/// Finite candidate perturbations per feature; index 0 always holds 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionSet {
    candidates: Vec<Vec<f64>>,
}

impl ActionSet {
    /// Wraps explicit candidate lists. Each list must start with 0, hold
    /// finite values and contain no duplicates.
    pub fn new(candidates: Vec<Vec<f64>>) -> Result<Self> {
        for (d, list) in candidates.iter().enumerate() {
            if list.first() != Some(&0.0) {
                return Err(Error::InvalidInput(format!("candidates for feature {d} must start with 0")));
            }
            for (i, v) in list.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::InvalidInput(format!("feature {d} has a non-finite candidate")));
                }
                if list[..i].contains(v) {
                    return Err(Error::InvalidInput(format!("feature {d} lists candidate {v} twice")));
                }
            }
        }
        Ok(Self { candidates })
    }

    pub fn dim(&self) -> usize {
        self.candidates.len()
    }

    pub fn candidates(&self, d: usize) -> &[f64] {
        &self.candidates[d]
    }

    pub fn len(&self, d: usize) -> usize {
        self.candidates[d].len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn all(&self) -> &[Vec<f64>] {
        &self.candidates
    }

    pub fn min(&self, d: usize) -> f64 {
        self.candidates[d].iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self, d: usize) -> f64 {
        self.candidates[d].iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Index of `value` among the candidates of feature `d`.
    pub fn index_of(&self, d: usize, value: f64) -> Option<usize> {
        self.candidates[d].iter().position(|&v| v == value)
    }

    /// Candidate indices of a perturbation vector, failing if some entry is
    /// not a candidate.
    pub fn indices_of(&self, a: &[f64]) -> Result<Vec<usize>> {
        if a.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: a.len(),
            });
        }
        a.iter()
            .enumerate()
            .map(|(d, &v)| {
                self.index_of(d, v)
                    .ok_or_else(|| Error::InvalidInput(format!("{v} is not a candidate for feature {d}")))
            })
            .collect()
    }

    /// Perturbation vector for the given candidate indices.
    pub fn action(&self, indices: &[usize]) -> Vec<f64> {
        indices.iter().enumerate().map(|(d, &i)| self.candidates[d][i]).collect()
    }
}

fn push_unique(out: &mut Vec<f64>, v: f64) {
    let v = if v.abs() <= ZERO_TOL { 0.0 } else { v };
    if !out.iter().any(|&u| (u - v).abs() <= ZERO_TOL) {
        out.push(v);
    }
}

/// Candidate grid of one feature for current value `x`.
///
/// The feasible perturbation interval is `[lower - x, upper - x]`, clipped to
/// the half-line allowed by the actionability. Continuous features take
/// `grid_size - 1` evenly spaced points over that interval plus 0; integer
/// features round those points to integers; binary features may flip.
/// The result holds 0 first and the remaining values ascending.
pub fn feature_grid(spec: &FeatureSpec, x: f64) -> Vec<f64> {
    let (mut lo, mut hi) = (spec.lower - x, spec.upper - x);
    match spec.actionability {
        Actionability::Free => {}
        Actionability::IncreaseOnly => lo = 0.0,
        Actionability::DecreaseOnly => hi = 0.0,
        Actionability::Fixed => return vec![0.0],
    }
    lo = lo.min(0.0);
    hi = hi.max(0.0);
    let mut out = vec![0.0];
    match spec.kind {
        FeatureKind::Binary => {
            let flip = 1.0 - 2.0 * x;
            if flip >= lo && flip <= hi {
                push_unique(&mut out, flip);
            }
        }
        FeatureKind::Continuous | FeatureKind::Integer => {
            let points = spec.grid_size.saturating_sub(1);
            if points > 0 && hi > lo {
                let raw: Vec<f64> = if points == 1 {
                    vec![if hi >= -lo { hi } else { lo }]
                } else {
                    let step = (hi - lo) / (points - 1) as f64;
                    (0..points)
                        .map(|j| if j == points - 1 { hi } else { lo + step * j as f64 })
                        .collect()
                };
                for p in raw {
                    let p = if spec.kind == FeatureKind::Integer {
                        ((x + p).round() - x).clamp(lo, hi)
                    } else {
                        p
                    };
                    push_unique(&mut out, p);
                }
            }
        }
    }
    out[1..].sort_by(f64::total_cmp);
    out
}

/// Builds the action set of instance `x` from the feature specifications.
pub fn build_action_set(space: &FeatureSpace, x: &[f64]) -> Result<ActionSet> {
    space.check_instance(x)?;
    let candidates = space
        .features()
        .iter()
        .zip(x)
        .map(|(f, &v)| feature_grid(f, v))
        .collect();
    ActionSet::new(candidates)
}

/// Indices of the features an action changes.
pub fn support(a: &[f64]) -> Vec<usize> {
    a.iter()
        .enumerate()
        .filter(|(_, &v)| v != 0.0)
        .map(|(d, _)| d)
        .collect()
}
