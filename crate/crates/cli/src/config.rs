//! Run configuration read from TOML, with command-line overrides applied on
//! top. Relative paths resolve against the directory of the config file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ordce::{CostKind, FeatureSpec, SolverParams};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Ordce,
    Greedy,
    Brute,
}

impl Method {
    pub fn tag(self) -> &'static str {
        match self {
            Method::Ordce => "ordce",
            Method::Greedy => "greedy",
            Method::Brute => "brute",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingChoice {
    #[default]
    InverseStd,
    Unit,
    Table,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_time_limit")]
    pub time_limit: f64,
    #[serde(default = "default_gap")]
    pub gap: f64,
    #[serde(default = "one")]
    pub threads: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            time_limit: default_time_limit(),
            gap: default_gap(),
            threads: 1,
        }
    }
}

impl SolverConfig {
    pub fn params(&self) -> SolverParams {
        SolverParams {
            time_limit: self.time_limit,
            gap_tol: self.gap,
            threads: self.threads,
            ..SolverParams::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: PathBuf,
    pub model: PathBuf,
    pub interaction: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost_table: Option<PathBuf>,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default = "default_cost")]
    pub cost: CostKind,
    #[serde(default)]
    pub scaling: ScalingChoice,
    /// Per-feature scaling factors by name, used when `scaling = "table"`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub scaling_table: BTreeMap<String, f64>,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub one_hot: Vec<Vec<String>>,
    #[serde(default)]
    pub method: Method,
    /// Rank greedy steps by scaled magnitudes.
    #[serde(default = "yes")]
    pub greedy_scaled: bool,
    #[serde(default)]
    pub export_mps: bool,
    /// Interaction entries with magnitude at or below this count as absent
    /// when reducing an order to a partial order.
    #[serde(default)]
    pub partial_order_threshold: f64,
    #[serde(default)]
    pub seed: u64,
    /// Explicit dataset rows (0-based) to explain.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instances: Option<Vec<usize>>,
    /// Seeded random subset of the rejected rows when there are more.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_instances: Option<usize>,
    /// Instances solved concurrently.
    #[serde(default = "one")]
    pub workers: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub gammas: Vec<f64>,
    #[serde(default)]
    pub solver: SolverConfig,
    pub features: Vec<FeatureSpec>,
}

fn default_time_limit() -> f64 {
    300.0
}
fn default_gap() -> f64 {
    1e-6
}
fn one() -> usize {
    1
}
fn yes() -> bool {
    true
}
fn default_output() -> PathBuf {
    PathBuf::from("results")
}
fn default_cost() -> CostKind {
    CostKind::Tlps
}
fn default_gamma() -> f64 {
    1.0
}
fn default_k() -> usize {
    4
}

/// Values given on the command line; `None` keeps the config value.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Overrides {
    /// Weight of the ordering cost.
    #[arg(long, allow_negative_numbers = true)]
    pub gamma: Option<f64>,
    /// Maximum number of perturbed features.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, value_enum)]
    pub cost: Option<CostArg>,
    /// Solver time limit per instance in seconds [config default: 300].
    #[arg(long, allow_negative_numbers = true)]
    pub time_limit: Option<f64>,
    /// Seed for drawing instances when `max_instances` applies.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    /// Also write each instance's model as MPS.
    #[arg(long)]
    pub export_mps: bool,
    /// Solver threads per instance.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Instances solved concurrently.
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub max_instances: Option<usize>,
    /// Output directory, relative to the working directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum CostArg {
    Tlps,
    Mad,
    Table,
}

impl From<CostArg> for CostKind {
    fn from(c: CostArg) -> Self {
        match c {
            CostArg::Tlps => CostKind::Tlps,
            CostArg::Mad => CostKind::Mad,
            CostArg::Table => CostKind::Table,
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Reads `path`, resolves relative paths against its directory, applies
    /// `overrides` and validates the result.
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve_paths(base);
        cfg.apply(overrides);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        join(&mut self.dataset);
        join(&mut self.model);
        join(&mut self.interaction);
        join(&mut self.output);
        if let Some(p) = &mut self.cost_table {
            join(p);
        }
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(g) = o.gamma {
            self.gamma = g;
        }
        if let Some(k) = o.k {
            self.k = k;
        }
        if let Some(c) = o.cost {
            self.cost = c.into();
        }
        if let Some(t) = o.time_limit {
            self.solver.time_limit = t;
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(m) = o.method {
            self.method = m;
        }
        if o.export_mps {
            self.export_mps = true;
        }
        if let Some(t) = o.threads {
            self.solver.threads = t;
        }
        if let Some(w) = o.workers {
            self.workers = w;
        }
        if let Some(n) = o.max_instances {
            self.max_instances = Some(n);
        }
        if let Some(p) = &o.out {
            self.output = p.clone();
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return bad(format!("gamma must be finite and >= 0, got {}", self.gamma));
        }
        if self.k < 1 {
            return bad("k must be at least 1".into());
        }
        if !(self.solver.time_limit > 0.0) {
            return bad(format!("time limit must be positive, got {}", self.solver.time_limit));
        }
        if !(self.solver.gap >= 0.0) {
            return bad(format!("gap must be non-negative, got {}", self.solver.gap));
        }
        if self.solver.threads < 1 || self.workers < 1 {
            return bad("threads and workers must be at least 1".into());
        }
        if self.max_instances == Some(0) {
            return bad("max_instances must be at least 1".into());
        }
        if !(self.partial_order_threshold >= 0.0) {
            return bad("partial_order_threshold must be non-negative".into());
        }
        if self.cost == CostKind::Table && self.cost_table.is_none() {
            return bad("cost = \"table\" needs a cost_table path".into());
        }
        if self.scaling == ScalingChoice::Table && self.scaling_table.is_empty() {
            return bad("scaling = \"table\" needs a [scaling_table]".into());
        }
        if self.features.is_empty() {
            return bad("no features declared".into());
        }
        check_gammas(&self.gammas)
    }
}

pub fn check_gammas(gammas: &[f64]) -> Result<(), CliError> {
    if gammas.iter().any(|g| !(*g >= 0.0 && g.is_finite())) {
        return Err(CliError::Config("gamma values must be finite and >= 0".into()));
    }
    if gammas.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::Config("gamma list must be strictly ascending".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
dataset = "d.csv"
model = "m.json"
interaction = "g.json"

[[features]]
name = "a"
kind = "continuous"
lower = 0.0
upper = 1.0
"#;

    #[test]
    fn defaults_fill_in() {
        let c = RunConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.gamma, 1.0);
        assert_eq!(c.k, 4);
        assert_eq!(c.cost, CostKind::Tlps);
        assert_eq!(c.scaling, ScalingChoice::InverseStd);
        assert_eq!(c.solver.time_limit, 300.0);
        assert_eq!(c.method, Method::Ordce);
        assert_eq!(c.features[0].grid_size, 10);
        c.validate().unwrap();
    }

    #[test]
    fn paths_resolve_against_config_dir() {
        let mut c = RunConfig::parse(MINIMAL).unwrap();
        c.cost_table = Some("/abs/t.json".into());
        c.resolve_paths(Path::new("/tmp/run"));
        assert_eq!(c.dataset, PathBuf::from("/tmp/run/d.csv"));
        assert_eq!(c.output, PathBuf::from("/tmp/run/results"));
        assert_eq!(c.cost_table, Some(PathBuf::from("/abs/t.json")));
    }

    #[test]
    fn overrides_win() {
        let mut c = RunConfig::parse(MINIMAL).unwrap();
        c.apply(&Overrides {
            gamma: Some(0.5),
            k: Some(2),
            cost: Some(CostArg::Mad),
            time_limit: Some(10.0),
            method: Some(Method::Greedy),
            export_mps: true,
            threads: Some(2),
            ..Overrides::default()
        });
        assert_eq!((c.gamma, c.k, c.cost, c.method), (0.5, 2, CostKind::Mad, Method::Greedy));
        assert_eq!((c.solver.time_limit, c.solver.threads), (10.0, 2));
        assert!(c.export_mps);
    }

    #[test]
    fn invalid_values_are_config_errors() {
        for patch in ["gamma = -1.0", "k = 0", "cost = \"table\"", "gammas = [1.0, 0.5]", "max_instances = 0"] {
            let c = RunConfig::parse(&format!("{patch}\n{MINIMAL}")).unwrap();
            assert!(matches!(c.validate(), Err(CliError::Config(_))), "{patch}");
        }
        let mut c = RunConfig::parse(MINIMAL).unwrap();
        c.solver.time_limit = 0.0;
        assert!(c.validate().is_err());
        assert!(RunConfig::parse("dataset = 1").is_err());
        assert!(RunConfig::parse(&format!("typo = 1\n{MINIMAL}")).is_err());
    }
}
