use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use ordce::classifiers::model_to_json;
use ordce::milp::to_mps_string;
use ordce::{
    brute_force, build_milo, demo, extract, greedy, reduce_to_partial_order, Error, Extraction, OrderedAction,
    OrdceProblem, ResultDocument, SearchBudget,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Method, RunConfig, SolverConfig};
use crate::error::CliError;
use crate::pipeline::Inputs;
use crate::report::{self, mean_std, ComparisonReport, MeanStd, Row};

pub const DEMO_CONFIG: &str = "ordce.toml";

/// Files written by [`cmd_demo`].
#[derive(Debug, Clone)]
pub struct DemoOutput {
    pub config: PathBuf,
    pub accuracy: f64,
    pub rejected: usize,
}

/// Writes the synthetic credit dataset, its causal DAG, a logistic model fit
/// on it and a config tying them together into `out_dir`.
pub fn cmd_demo(seed: u64, n_samples: usize, grid_size: usize, out_dir: &Path) -> Result<DemoOutput, CliError> {
    if n_samples == 0 {
        return Err(CliError::Config("demo needs at least one sample".into()));
    }
    if grid_size < 2 {
        return Err(CliError::Config("grid size must be at least 2".into()));
    }
    let data = demo::generate(seed, n_samples, grid_size).map_err(anyhow::Error::from)?;
    let clf = demo::train_logistic(&data.rows, &data.labels, 500, 0.5).map_err(anyhow::Error::from)?;
    let accuracy = demo::accuracy(&clf, &data.rows, &data.labels).map_err(anyhow::Error::from)?;
    let mut rejected = 0;
    for x in &data.rows {
        if clf.predict(x).map_err(anyhow::Error::from)? == -1 {
            rejected += 1;
        }
    }

    std::fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let csv = data.to_csv().map_err(anyhow::Error::from)?;
    report::write_atomic(&out_dir.join("demo.csv"), csv.as_bytes())?;
    report::write_json(&out_dir.join("dag.json"), &demo::interaction_file())?;
    let mut model = model_to_json(&clf);
    model.push('\n');
    report::write_atomic(&out_dir.join("model.json"), model.as_bytes())?;

    let cfg = RunConfig {
        dataset: "demo.csv".into(),
        model: "model.json".into(),
        interaction: "dag.json".into(),
        cost_table: None,
        output: "results".into(),
        cost: ordce::CostKind::Tlps,
        scaling: Default::default(),
        scaling_table: Default::default(),
        gamma: 1.0,
        k: 4,
        one_hot: Vec::new(),
        method: Method::Ordce,
        greedy_scaled: true,
        export_mps: false,
        partial_order_threshold: 0.0,
        seed,
        instances: None,
        max_instances: Some(10),
        workers: 1,
        gammas: vec![0.0, 0.25, 0.5, 1.0, 2.0],
        solver: SolverConfig::default(),
        features: data.space.features().to_vec(),
    };
    let text = toml::to_string(&cfg).context("serializing demo config")?;
    let config = out_dir.join(DEMO_CONFIG);
    report::write_atomic(&config, text.as_bytes())?;
    Ok(DemoOutput { config, accuracy, rejected })
}

/// Outcome of one method on one instance.
pub struct Solved {
    pub action: OrderedAction,
    pub extraction: Option<Extraction>,
}

pub fn run_method(problem: &OrdceProblem, method: Method, cfg: &RunConfig) -> ordce::Result<Solved> {
    match method {
        Method::Ordce => extract(problem).map(|e| Solved {
            action: e.action.clone(),
            extraction: Some(e),
        }),
        Method::Greedy => greedy(problem, cfg.greedy_scaled).map(|g| Solved {
            action: g.action,
            extraction: Some(g.first_stage),
        }),
        Method::Brute => {
            let budget = SearchBudget {
                time_limit: cfg.solver.time_limit,
                ..SearchBudget::default()
            };
            brute_force(problem, &budget).map(|action| Solved { action, extraction: None })
        }
    }
}

fn failure_status(e: &Error) -> &'static str {
    match e {
        Error::NoFeasibleAction => "infeasible",
        Error::Timeout => "timeout",
        Error::BudgetExceeded { .. } => "budget_exceeded",
        _ => "error",
    }
}

fn solved_status(s: &Solved) -> String {
    match &s.extraction {
        Some(e) => serde_json::to_value(e.status)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_else(|| format!("{:?}", e.status)),
        None => "optimal".to_string(),
    }
}

struct InstanceRun {
    row: Row,
    doc: Option<ResultDocument>,
}

fn run_instance(inputs: &Inputs, cfg: &RunConfig, instance: usize, method: Method) -> InstanceRun {
    let start = Instant::now();
    let outcome = inputs.problem(cfg, instance).and_then(|p| run_method(&p, method, cfg));
    let wall_time = start.elapsed().as_secs_f64();
    match outcome {
        Ok(s) => {
            let mut doc = ResultDocument::new(method.tag(), &inputs.names, &s.action);
            if let Some(e) = &s.extraction {
                doc = doc.with_solver(e).without_timing();
            }
            doc.instance = Some(instance);
            let dag = reduce_to_partial_order(&s.action.order, &inputs.interaction, cfg.partial_order_threshold);
            doc.partial_order = Some(
                dag.edges
                    .iter()
                    .map(|&(u, v)| (inputs.names[u].clone(), inputs.names[v].clone()))
                    .collect(),
            );
            InstanceRun {
                row: Row {
                    instance,
                    method: method.tag().into(),
                    status: solved_status(&s),
                    cost_dist: Some(s.action.cost_dist),
                    cost_ord: Some(s.action.cost_ord),
                    cost_total: Some(s.action.cost_total),
                    wall_time: Some(wall_time),
                    error: None,
                },
                doc: Some(doc),
            }
        }
        Err(e) => InstanceRun {
            row: Row {
                instance,
                method: method.tag().into(),
                status: failure_status(&e).into(),
                cost_dist: None,
                cost_ord: None,
                cost_total: None,
                wall_time: Some(wall_time),
                error: Some(e.to_string()),
            },
            doc: None,
        },
    }
}

fn pool(workers: usize) -> anyhow::Result<rayon::ThreadPool> {
    Ok(rayon::ThreadPoolBuilder::new().num_threads(workers).build()?)
}

/// Maps `f` over `items` on `workers` threads, keeping input order.
fn par_map<T: Sync, R: Send>(workers: usize, items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> anyhow::Result<Vec<R>> {
    if workers == 1 {
        return Ok(items.iter().map(f).collect());
    }
    Ok(pool(workers)?.install(|| items.par_iter().map(&f).collect()))
}

fn instance_stem(instance: usize) -> String {
    format!("instance_{instance:05}")
}

fn write_mps(inputs: &Inputs, cfg: &RunConfig, instance: usize, dir: &Path) -> anyhow::Result<()> {
    let problem = inputs.problem(cfg, instance)?;
    let milo = build_milo(&problem)?;
    let text = to_mps_string(&milo.model)?;
    report::write_atomic(&dir.join(format!("{}.mps", instance_stem(instance))), text.as_bytes())?;
    Ok(())
}

fn no_timing(rows: &[Row]) -> Vec<Row> {
    rows.iter()
        .map(|r| Row {
            wall_time: None,
            ..r.clone()
        })
        .collect()
}

fn timing_log(rows: &[Row]) -> String {
    let mut out = String::from("instance,method,wall_time\n");
    for r in rows {
        out.push_str(&format!("{},{},{}\n", r.instance, r.method, r.wall_time.unwrap_or(f64::NAN)));
    }
    out
}

#[derive(Debug, Clone, Serialize)]
struct FailureDocument<'a> {
    method: &'a str,
    instance: usize,
    status: &'a str,
    error: &'a str,
}

/// Written by `extract`: reproducible per-instance rows and their means.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct Summary {
    pub method: String,
    pub gamma: f64,
    pub k: usize,
    pub selected: usize,
    pub solved: usize,
    pub failed: usize,
    pub rows: Vec<Row>,
    pub cost_total: Option<MeanStd>,
    pub cost_ord: Option<MeanStd>,
    pub cost_dist: Option<MeanStd>,
}

fn load_run(cfg: &RunConfig) -> Result<(Inputs, Vec<usize>), CliError> {
    let inputs = Inputs::load(cfg)?;
    let rows = inputs.select(cfg)?;
    if rows.is_empty() {
        return Err(CliError::Config("no instance to explain: the model accepts every row".into()));
    }
    Ok((inputs, rows))
}

/// Solves every selected instance with the configured method and writes
/// one result document each, plus `summary.json`, `summary.csv` and
/// `timing.csv`.
pub fn cmd_extract(cfg: &RunConfig) -> Result<Summary, CliError> {
    let (inputs, instances) = load_run(cfg)?;
    let out = &cfg.output;
    let docs_dir = out.join("instances");
    std::fs::create_dir_all(&docs_dir).with_context(|| format!("creating {}", docs_dir.display()))?;
    let runs = par_map(cfg.workers, &instances, |&i| -> anyhow::Result<Row> {
        let run = run_instance(&inputs, cfg, i, cfg.method);
        let path = docs_dir.join(format!("{}.json", instance_stem(i)));
        match &run.doc {
            Some(doc) => report::write_json(&path, doc)?,
            None => report::write_json(
                &path,
                &FailureDocument {
                    method: cfg.method.tag(),
                    instance: i,
                    status: &run.row.status,
                    error: run.row.error.as_deref().unwrap_or(""),
                },
            )?,
        }
        if cfg.export_mps {
            if let Err(e) = write_mps(&inputs, cfg, i, &docs_dir) {
                eprintln!("instance {i}: no MPS file: {e}");
            }
        }
        Ok(run.row)
    })?;
    let timed: Vec<Row> = runs.into_iter().collect::<anyhow::Result<_>>()?;
    for r in &timed {
        match r.cost_total {
            Some(c) => println!("instance {}: {} cost {c:.6}", r.instance, r.status),
            None => println!("instance {}: {} ({})", r.instance, r.status, r.error.as_deref().unwrap_or("")),
        }
    }
    report::write_atomic(&out.join("timing.csv"), timing_log(&timed).as_bytes())?;

    let rows = no_timing(&timed);
    let agg = report::aggregate(&rows, cfg.method.tag());
    let summary = Summary {
        method: cfg.method.tag().into(),
        gamma: cfg.gamma,
        k: cfg.k,
        selected: rows.len(),
        solved: agg.solved,
        failed: agg.excluded,
        cost_total: agg.cost_total,
        cost_ord: agg.cost_ord,
        cost_dist: agg.cost_dist,
        rows,
    };
    report::write_json(&out.join("summary.json"), &summary)?;
    report::write_atomic(&out.join("summary.csv"), report::rows_to_csv(&summary.rows)?.as_bytes())?;
    println!("{} of {} instances solved; results in {}", summary.solved, summary.selected, out.display());
    if summary.solved == 0 {
        return Err(CliError::AllFailed(summary.selected));
    }
    Ok(summary)
}

/// Runs OrdCE and greedy on the same instances and writes
/// `comparison.json` and `comparison.csv`.
pub fn cmd_compare(cfg: &RunConfig) -> Result<ComparisonReport, CliError> {
    let (inputs, instances) = load_run(cfg)?;
    let methods = [Method::Ordce, Method::Greedy];
    let pairs = par_map(cfg.workers, &instances, |&i| {
        methods.map(|m| run_instance(&inputs, cfg, i, m).row)
    })?;
    let rows: Vec<Row> = pairs.into_iter().flatten().collect();
    let solved = rows.iter().filter(|r| r.solved()).count();
    let report = ComparisonReport::new(cfg.gamma, cfg.k, rows, &methods.map(Method::tag));
    report::write_json(&cfg.output.join("comparison.json"), &report)?;
    report::write_atomic(&cfg.output.join("comparison.csv"), report::rows_to_csv(&report.rows)?.as_bytes())?;
    print!("{}", report.table());
    if solved == 0 {
        return Err(CliError::AllFailed(instances.len()));
    }
    Ok(report)
}

/// Per-gamma means over the corpus.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub gamma: f64,
    pub solved: usize,
    pub failed: usize,
    pub mean_cost_dist: Option<f64>,
    pub mean_cost_ord: Option<f64>,
    pub mean_cost_total: Option<f64>,
}

/// Extracts every instance at each gamma. Writes `sweep.csv` (one line per
/// gamma) and `sweep_instances.csv` (one line per instance and gamma).
pub fn cmd_sweep(cfg: &RunConfig, gammas: &[f64]) -> Result<Vec<SweepRow>, CliError> {
    if gammas.is_empty() {
        return Err(CliError::Config("empty gamma list".into()));
    }
    crate::config::check_gammas(gammas)?;
    let (inputs, instances) = load_run(cfg)?;
    let per_instance = par_map(cfg.workers, &instances, |&i| {
        gammas
            .iter()
            .map(|&g| {
                let mut c = cfg.clone();
                c.gamma = g;
                let mut row = run_instance(&inputs, &c, i, Method::Ordce).row;
                row.wall_time = None;
                row
            })
            .collect::<Vec<Row>>()
    })?;

    let mut detail = csv::Writer::from_writer(Vec::new());
    detail.write_record(["instance", "gamma", "status", "cost_dist", "cost_ord", "cost_total"]).map_err(anyhow::Error::from)?;
    let cell = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
    for (rows, &i) in per_instance.iter().zip(&instances) {
        for (r, g) in rows.iter().zip(gammas) {
            detail
                .write_record([i.to_string(), g.to_string(), r.status.clone(), cell(r.cost_dist), cell(r.cost_ord), cell(r.cost_total)])
                .map_err(anyhow::Error::from)?;
        }
    }

    let mut table = Vec::with_capacity(gammas.len());
    for (k, &gamma) in gammas.iter().enumerate() {
        let col: Vec<&Row> = per_instance.iter().map(|rows| &rows[k]).filter(|r| r.solved()).collect();
        let mean = |f: fn(&Row) -> Option<f64>| mean_std(&col.iter().filter_map(|r| f(r)).collect::<Vec<_>>()).map(|m| m.mean);
        table.push(SweepRow {
            gamma,
            solved: col.len(),
            failed: instances.len() - col.len(),
            mean_cost_dist: mean(|r| r.cost_dist),
            mean_cost_ord: mean(|r| r.cost_ord),
            mean_cost_total: mean(|r| r.cost_total),
        });
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &table {
        w.serialize(r).map_err(anyhow::Error::from)?;
    }
    let sweep = w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?;
    report::write_atomic(&cfg.output.join("sweep.csv"), &sweep)?;
    let detail = detail.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?;
    report::write_atomic(&cfg.output.join("sweep_instances.csv"), &detail)?;
    print!("{}", String::from_utf8_lossy(&sweep));
    if table.iter().all(|r| r.solved == 0) {
        return Err(CliError::AllFailed(instances.len()));
    }
    Ok(table)
}

/// Writes the optimisation model of every selected instance in MPS format
/// without solving it. Returns the files written.
pub fn cmd_export_mps(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let (inputs, instances) = load_run(cfg)?;
    let dir = cfg.output.join("mps");
    let mut written = Vec::new();
    for &i in &instances {
        match write_mps(&inputs, cfg, i, &dir) {
            Ok(()) => written.push(dir.join(format!("{}.mps", instance_stem(i)))),
            Err(e) => eprintln!("instance {i}: {e}"),
        }
    }
    println!("wrote {} MPS files to {}", written.len(), dir.display());
    if written.is_empty() {
        return Err(CliError::AllFailed(instances.len()));
    }
    Ok(written)
}
