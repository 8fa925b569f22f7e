//! Fixed-format MPS export.

use std::fmt::Write as _;
use std::io::Write;

use super::model::{MilpModel, Relation};
use crate::error::Result;

const FIELD_WIDTH: usize = 12;

/// Shortest decimal rendering of `v` that fits a 12-character MPS field.
pub fn format_number(v: f64) -> String {
    let v = if v == 0.0 { 0.0 } else { v };
    let plain = format!("{v}");
    if plain.len() <= FIELD_WIDTH {
        return plain;
    }
    let sci = format!("{v:e}");
    if sci.len() <= FIELD_WIDTH {
        return sci;
    }
    let mut candidates = Vec::new();
    for precision in 0..=FIELD_WIDTH {
        candidates.push(format!("{v:.precision$}"));
        candidates.push(format!("{v:.precision$e}"));
    }
    candidates
        .into_iter()
        .filter(|s| s.len() <= FIELD_WIDTH)
        .filter_map(|s| s.parse::<f64>().ok().map(|p| ((p - v).abs(), s)))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.len().cmp(&b.1.len())))
        .map(|(_, s)| s)
        .unwrap_or_else(|| format!("{v:.0e}"))
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_graphic() { c } else { '_' })
        .collect()
}

fn line(out: &mut String, f1: &str, f2: &str, f3: &str, f4: &str) {
    let l = format!(" {f1:<2} {f2:<8}  {f3:<8}  {f4:>12}");
    out.push_str(l.trim_end());
    out.push('\n');
}

fn column_name(j: usize) -> String {
    format!("X{:07}", j + 1)
}

fn row_name(i: usize) -> String {
    format!("R{:07}", i + 1)
}

/// Renders `model` as fixed-format MPS text.
///
/// Columns and rows get generated 8-character names; a comment block after
/// the header maps them back to the model's own names. Integer columns are
/// bracketed by `MARKER` lines and every column gets explicit lower and
/// upper bounds. The output is byte-identical across runs.
pub fn to_mps_string(model: &MilpModel) -> Result<String> {
    model.validate()?;
    let mut out = String::new();
    let title: String = sanitize(&model.name).chars().take(8).collect();
    writeln!(out, "NAME          {}", if title.is_empty() { "MODEL" } else { &title }).unwrap();
    for (j, v) in model.variables.iter().enumerate() {
        writeln!(out, "* {} {}", column_name(j), sanitize(&v.name)).unwrap();
    }
    for (i, c) in model.constraints.iter().enumerate() {
        writeln!(out, "* {} {}", row_name(i), sanitize(&c.name)).unwrap();
    }

    out.push_str("ROWS\n");
    line(&mut out, "N", "COST", "", "");
    for (i, c) in model.constraints.iter().enumerate() {
        let kind = match c.relation {
            Relation::Le => "L",
            Relation::Eq => "E",
            Relation::Ge => "G",
        };
        line(&mut out, kind, &row_name(i), "", "");
    }

    let mut entries: Vec<Vec<(usize, f64)>> = vec![Vec::new(); model.num_vars()];
    for (i, c) in model.constraints.iter().enumerate() {
        for &(v, a) in &c.terms {
            entries[v.0].push((i, a));
        }
    }

    out.push_str("COLUMNS\n");
    let mut in_integer = false;
    let mut markers = 0usize;
    for (j, v) in model.variables.iter().enumerate() {
        if v.integer != in_integer {
            markers += 1;
            let tag = if v.integer { "'INTORG'" } else { "'INTEND'" };
            let l = format!("    {:<8}  {:<8}                 {}", format!("M{markers:07}"), "'MARKER'", tag);
            out.push_str(&l);
            out.push('\n');
            in_integer = v.integer;
        }
        let name = column_name(j);
        let cost = model.objective[j];
        if cost != 0.0 || entries[j].is_empty() {
            line(&mut out, "", &name, "COST", &format_number(cost));
        }
        for &(i, a) in &entries[j] {
            line(&mut out, "", &name, &row_name(i), &format_number(a));
        }
    }
    if in_integer {
        markers += 1;
        let l = format!("    {:<8}  {:<8}                 {}", format!("M{markers:07}"), "'MARKER'", "'INTEND'");
        out.push_str(&l);
        out.push('\n');
    }

    out.push_str("RHS\n");
    if model.objective_offset != 0.0 {
        line(&mut out, "", "RHS", "COST", &format_number(-model.objective_offset));
    }
    for (i, c) in model.constraints.iter().enumerate() {
        if c.rhs != 0.0 {
            line(&mut out, "", "RHS", &row_name(i), &format_number(c.rhs));
        }
    }

    out.push_str("BOUNDS\n");
    for (j, v) in model.variables.iter().enumerate() {
        let name = column_name(j);
        line(&mut out, "LO", "BND", &name, &format_number(v.lower));
        line(&mut out, "UP", "BND", &name, &format_number(v.upper));
    }
    out.push_str("ENDATA\n");
    Ok(out)
}

pub fn write_mps<W: Write>(model: &MilpModel, mut writer: W) -> Result<()> {
    writer.write_all(to_mps_string(model)?.as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_fit_the_field() {
        assert_eq!(format_number(1.0), "1");
        assert_eq!(format_number(-0.0), "0");
        assert_eq!(format_number(0.5), "0.5");
        assert_eq!(format_number(1e-20), "1e-20");
        let s = format_number(std::f64::consts::PI);
        assert!(s.len() <= 12);
        assert!((s.parse::<f64>().unwrap() - std::f64::consts::PI).abs() < 1e-9);
        let s = format_number(-123456.789012345e-30);
        assert!(s.len() <= 12, "{s}");
    }

    #[test]
    fn sections_and_markers() {
        let mut m = MilpModel::new("demo");
        let x = m.add_binary("x");
        let y = m.add_continuous("y", -1.0, 2.5);
        m.set_objective(x, 2.0);
        m.add_constraint("cap", [(x, 1.0), (y, -0.5)], Relation::Le, 1.0);
        let s = to_mps_string(&m).unwrap();
        let order: Vec<usize> = ["NAME", "ROWS", "COLUMNS", "RHS", "BOUNDS", "ENDATA"]
            .iter()
            .map(|k| s.find(k).unwrap())
            .collect();
        assert!(order.windows(2).all(|w| w[0] < w[1]));
        assert!(s.contains("'INTORG'"));
        assert!(s.contains("'INTEND'"));
        assert!(s.contains(" LO BND       X0000002            -1"));
        assert!(s.contains(" UP BND       X0000002           2.5"));
        assert_eq!(s, to_mps_string(&m).unwrap());
    }
}
