//! Per-instance rows, aggregates and file output.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

/// One method run on one instance. Costs are absent unless an action was
/// found.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub instance: usize,
    pub method: String,
    pub status: String,
    pub cost_dist: Option<f64>,
    pub cost_ord: Option<f64>,
    pub cost_total: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Row {
    pub fn solved(&self) -> bool {
        self.cost_total.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

/// Mean and standard deviation, summed in input order so the figures can
/// be recomputed bit for bit from the emitted rows. `None` on empty input.
pub fn mean_std(values: &[f64]) -> Option<MeanStd> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Some(MeanStd { mean, std: var.sqrt() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub method: String,
    pub solved: usize,
    /// Rows without an action (infeasible, timed out or failed).
    pub excluded: usize,
    pub cost_total: Option<MeanStd>,
    pub cost_ord: Option<MeanStd>,
    pub cost_dist: Option<MeanStd>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time: Option<MeanStd>,
}

/// Aggregates the rows tagged `method`; rows without an action only count
/// towards `excluded`.
pub fn aggregate(rows: &[Row], method: &str) -> Aggregate {
    let mine: Vec<&Row> = rows.iter().filter(|r| r.method == method).collect();
    let solved: Vec<&Row> = mine.iter().copied().filter(|r| r.solved()).collect();
    let col = |f: fn(&Row) -> Option<f64>| mean_std(&solved.iter().filter_map(|r| f(r)).collect::<Vec<_>>());
    let wall_time = if solved.iter().all(|r| r.wall_time.is_some()) { col(|r| r.wall_time) } else { None };
    Aggregate {
        method: method.to_string(),
        solved: solved.len(),
        excluded: mine.len() - solved.len(),
        cost_total: col(|r| r.cost_total),
        cost_ord: col(|r| r.cost_ord),
        cost_dist: col(|r| r.cost_dist),
        wall_time,
    }
}

/// OrdCE against greedy on the same instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub gamma: f64,
    pub k: usize,
    pub rows: Vec<Row>,
    pub aggregates: Vec<Aggregate>,
}

impl ComparisonReport {
    pub fn new(gamma: f64, k: usize, rows: Vec<Row>, methods: &[&str]) -> Self {
        let aggregates = methods.iter().map(|m| aggregate(&rows, m)).collect();
        Self { gamma, k, rows, aggregates }
    }

    /// Text table with mean ± std per method.
    pub fn table(&self) -> String {
        let fmt = |m: Option<MeanStd>, digits: usize| match m {
            Some(m) => format!("{:.digits$} ± {:.digits$}", m.mean, m.std),
            None => "-".to_string(),
        };
        let mut out = format!(
            "{:<8} {:>20} {:>20} {:>20} {:>20} {:>7} {:>9}\n",
            "method", "C_OrdCE", "C_ord", "C_dist", "time [s]", "solved", "excluded"
        );
        for a in &self.aggregates {
            out.push_str(&format!(
                "{:<8} {:>20} {:>20} {:>20} {:>20} {:>7} {:>9}\n",
                a.method,
                fmt(a.cost_total, 3),
                fmt(a.cost_ord, 3),
                fmt(a.cost_dist, 3),
                fmt(a.wall_time, 3),
                a.solved,
                a.excluded
            ));
        }
        out
    }
}

pub fn rows_to_csv(rows: &[Row]) -> anyhow::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["instance", "method", "status", "cost_dist", "cost_ord", "cost_total", "wall_time"])?;
    let cell = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
    for r in rows {
        w.write_record([
            r.instance.to_string(),
            r.method.clone(),
            r.status.clone(),
            cell(r.cost_dist),
            cell(r.cost_ord),
            cell(r.cost_total),
            cell(r.wall_time),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

/// Writes through a temporary sibling and renames, so readers never see a
/// partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp"));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(instance: usize, method: &str, total: Option<f64>) -> Row {
        Row {
            instance,
            method: method.into(),
            status: if total.is_some() { "optimal" } else { "infeasible" }.into(),
            cost_dist: total.map(|t| t / 2.0),
            cost_ord: total.map(|t| t / 2.0),
            cost_total: total,
            wall_time: Some(0.25),
            error: None,
        }
    }

    #[test]
    fn single_row_aggregate_equals_row() {
        let a = aggregate(&[row(3, "ordce", Some(1.7))], "ordce");
        assert_eq!(a.cost_total, Some(MeanStd { mean: 1.7, std: 0.0 }));
        assert_eq!(a.cost_dist.unwrap().mean, 0.85);
        assert_eq!((a.solved, a.excluded), (1, 0));
    }

    #[test]
    fn infeasible_rows_are_excluded_and_counted() {
        let rows = vec![row(0, "ordce", Some(1.0)), row(1, "ordce", None), row(2, "ordce", Some(3.0)), row(0, "greedy", Some(9.0))];
        let a = aggregate(&rows, "ordce");
        assert_eq!((a.solved, a.excluded), (2, 1));
        assert_eq!(a.cost_total, Some(MeanStd { mean: 2.0, std: 1.0 }));
        let none = aggregate(&rows[1..2], "ordce");
        assert_eq!(none.cost_total, None);
    }

    #[test]
    fn csv_has_one_line_per_row() {
        let text = rows_to_csv(&[row(0, "ordce", Some(1.5)), row(1, "ordce", None)]).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[1], "0,ordce,optimal,0.75,0.75,1.5,0.25");
        assert_eq!(lines[2], "1,ordce,infeasible,,,,0.25");
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/x.json");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }
}
