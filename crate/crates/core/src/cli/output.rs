//! CSV emission. Every float is written with 17 significant digits.

use std::fmt::Write as _;
use std::path::Path;

use crate::bands::DensityBand;
use crate::bcd::{SolverReport, WeightMatrix};
use crate::grid::Grid;
use crate::Result;

/// Exact decimal rendering; non-finite values become `inf`, `-inf`, `nan`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x:.16e}")
    }
}

/// Inverse of [`fmt_f64`].
pub fn parse_f64(s: &str) -> Option<f64> {
    match s.trim() {
        "inf" | "+inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        "nan" => Some(f64::NAN),
        t => t.parse().ok(),
    }
}

fn join(cells: impl IntoIterator<Item = String>) -> String {
    cells.into_iter().collect::<Vec<_>>().join(",")
}

pub fn densities_csv(a: &WeightMatrix, bands: &[DensityBand], grid: &Grid) -> String {
    let n = a.rows();
    let mut header = vec!["omega".to_string()];
    header.extend((1..=n).map(|i| format!("q_{i}")));
    for i in 1..=n {
        header.push(format!("lower_{i}"));
        header.push(format!("upper_{i}"));
    }
    let mut out = join(header) + "\n";
    for (k, &omega) in grid.points().iter().enumerate() {
        let mut row = vec![fmt_f64(omega)];
        row.extend((0..n).map(|i| fmt_f64(a.get(i, k))));
        for b in bands {
            row.push(fmt_f64(b.lower[k]));
            row.push(fmt_f64(b.upper[k]));
        }
        let _ = writeln!(out, "{}", join(row));
    }
    out
}

/// `log(q_i / q_N)` for every `i < N`.
pub fn llr_csv(a: &WeightMatrix, grid: &Grid) -> String {
    let n = a.rows();
    let mut header = vec!["omega".to_string()];
    header.extend((1..n).map(|i| format!("llr_{i}")));
    let mut out = join(header) + "\n";
    for (k, &omega) in grid.points().iter().enumerate() {
        let reference = a.get(n - 1, k);
        let mut row = vec![fmt_f64(omega)];
        row.extend((0..n - 1).map(|i| fmt_f64((a.get(i, k) / reference).ln())));
        let _ = writeln!(out, "{}", join(row));
    }
    out
}

pub fn trace_csv(report: &SolverReport) -> String {
    let n = report.c.len();
    let mut header = vec!["iteration".to_string(), "selected_n".to_string()];
    header.extend((1..=n).map(|i| format!("c_{i}")));
    header.extend((1..=n).map(|i| format!("residual_{i}")));
    header.push("gap".into());
    let mut out = join(header) + "\n";
    for t in &report.trace {
        let mut row = vec![t.iteration.to_string(), t.selected.map(|s| (s + 1).to_string()).unwrap_or_default()];
        row.extend(t.c.iter().map(|&x| fmt_f64(x)));
        row.extend(t.residuals.iter().map(|&x| fmt_f64(x)));
        row.push(fmt_f64(t.gap));
        let _ = writeln!(out, "{}", join(row));
    }
    out
}

/// Reads the `q_n` columns of a densities file.
pub fn read_densities(path: &Path) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap_or_default().split(',').collect();
    let q_cols: Vec<usize> = header.iter().enumerate().filter(|(_, h)| h.starts_with("q_")).map(|(i, _)| i).collect();
    let mut omega = Vec::new();
    let mut rows = vec![Vec::new(); q_cols.len()];
    for (line_no, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        let cell = |i: usize| {
            cells.get(i).and_then(|s| parse_f64(s)).ok_or_else(|| {
                crate::Error::Config(format!("{}: bad value in row {} column {}", path.display(), line_no + 2, i + 1))
            })
        };
        omega.push(cell(0)?);
        for (r, &c) in q_cols.iter().enumerate() {
            rows[r].push(cell(c)?);
        }
    }
    Ok((omega, rows))
}
