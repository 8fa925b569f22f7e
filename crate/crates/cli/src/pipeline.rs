//! Loading the configured inputs and turning dataset rows into problems.

use std::fs;
use std::path::Path;

use ordce::cost_model::table_cost;
use ordce::{
    build_action_set, default_scaling, load_dataset, load_interaction, load_model, mad_cost, tlps_cost,
    AdditiveClassifier, CostKind, CostTable, Dataset, FeatureSpace, InteractionMatrix, OrdceProblem,
    ScalingFactors,
};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{RunConfig, ScalingChoice};
use crate::error::CliError;

/// Everything read from disk for one run.
#[derive(Debug, Clone)]
pub struct Inputs {
    pub space: FeatureSpace,
    pub names: Vec<String>,
    pub dataset: Dataset,
    pub classifier: AdditiveClassifier,
    pub interaction: InteractionMatrix,
    pub scaling: ScalingFactors,
    pub cost_table: Option<CostTable>,
    pub one_hot: Vec<Vec<usize>>,
}

fn read(path: &Path, what: &str) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {what} {}: {e}", path.display())))
}

fn invalid<'a>(what: &'a str, path: &'a Path) -> impl FnOnce(ordce::Error) -> CliError + 'a {
    move |e| CliError::Config(format!("{what} {}: {e}", path.display()))
}

impl Inputs {
    pub fn load(cfg: &RunConfig) -> Result<Self, CliError> {
        let space = FeatureSpace::new(cfg.features.clone()).map_err(|e| CliError::Config(format!("features: {e}")))?;
        let names = space.names();
        let d = space.dim();
        let file = fs::File::open(&cfg.dataset)
            .map_err(|e| CliError::Config(format!("cannot read dataset {}: {e}", cfg.dataset.display())))?;
        let dataset = load_dataset(std::io::BufReader::new(file), &space).map_err(invalid("dataset", &cfg.dataset))?;
        let classifier = load_model(&read(&cfg.model, "model")?, d).map_err(invalid("model", &cfg.model))?;
        let interaction = load_interaction(&read(&cfg.interaction, "interaction file")?, &names)
            .map_err(invalid("interaction file", &cfg.interaction))?;
        let scaling = match cfg.scaling {
            ScalingChoice::InverseStd => default_scaling(&dataset.stats),
            ScalingChoice::Unit => ScalingFactors::unit(d),
            ScalingChoice::Table => {
                for k in cfg.scaling_table.keys() {
                    if !names.contains(k) {
                        return Err(CliError::Config(format!("scaling_table names unknown feature {k}")));
                    }
                }
                let values = names
                    .iter()
                    .map(|n| {
                        cfg.scaling_table
                            .get(n)
                            .copied()
                            .ok_or_else(|| CliError::Config(format!("scaling_table has no entry for {n}")))
                    })
                    .collect::<Result<_, _>>()?;
                ScalingFactors::new(values).map_err(|e| CliError::Config(format!("scaling_table: {e}")))?
            }
        };
        let cost_table = match (&cfg.cost_table, cfg.cost) {
            (Some(p), CostKind::Table) => Some(
                serde_json::from_str(&read(p, "cost table")?)
                    .map_err(|e| CliError::Config(format!("cost table {}: {e}", p.display())))?,
            ),
            _ => None,
        };
        let mut one_hot = Vec::with_capacity(cfg.one_hot.len());
        for group in &cfg.one_hot {
            let idx = group
                .iter()
                .map(|n| {
                    space
                        .index_of(n)
                        .ok_or_else(|| CliError::Config(format!("one-hot group names unknown feature {n}")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            one_hot.push(idx);
        }
        Ok(Self {
            space,
            names,
            dataset,
            classifier,
            interaction,
            scaling,
            cost_table,
            one_hot,
        })
    }

    /// Rows to explain: the configured list, or every row the classifier
    /// rejects, thinned to `max_instances` by a seeded draw. Sorted.
    pub fn select(&self, cfg: &RunConfig) -> Result<Vec<usize>, CliError> {
        let n = self.dataset.instances.len();
        let mut rows = match &cfg.instances {
            Some(list) => {
                if let Some(&r) = list.iter().find(|&&r| r >= n) {
                    return Err(CliError::Config(format!("instance {r} out of range, dataset has {n} rows")));
                }
                let mut list = list.clone();
                list.sort_unstable();
                list.dedup();
                list
            }
            None => {
                let mut rejected = Vec::new();
                for (i, x) in self.dataset.instances.iter().enumerate() {
                    let p = self.classifier.predict(x).map_err(|e| CliError::Config(format!("model: {e}")))?;
                    if p == -1 {
                        rejected.push(i);
                    }
                }
                rejected
            }
        };
        if let Some(m) = cfg.max_instances {
            if rows.len() > m {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                let mut keep: Vec<usize> = sample(&mut rng, rows.len(), m).into_iter().map(|i| rows[i]).collect();
                keep.sort_unstable();
                rows = keep;
            }
        }
        Ok(rows)
    }

    /// Problem for dataset row `row` under `cfg`. `K` is capped at the
    /// feature count.
    pub fn problem(&self, cfg: &RunConfig, row: usize) -> ordce::Result<OrdceProblem> {
        let x = self.dataset.instances[row].clone();
        let actions = build_action_set(&self.space, &x)?;
        let cost = match cfg.cost {
            CostKind::Tlps => tlps_cost(&actions, &x, &self.dataset.stats)?,
            CostKind::Mad => mad_cost(&actions, &self.dataset.stats)?,
            CostKind::Table => table_cost(
                &actions,
                &self.names,
                self.cost_table.as_ref().expect("cost table loaded for cost = table"),
            )?,
        };
        let k = cfg.k.min(self.space.dim());
        Ok(OrdceProblem::new(
            self.classifier.clone(),
            x,
            actions,
            self.interaction.clone(),
            cost,
            self.scaling.clone(),
        )
        .with_gamma(cfg.gamma)
        .with_k(k)
        .with_one_hot(self.one_hot.clone())
        .with_solver(cfg.solver.params()))
    }
}
