//! Text renderings of networks and diagnostics: adjacency CSV, Graphviz DOT,
//! CUSUM paths and the lag-selection table.

use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::diagnostics::CusumReport;
use crate::error::{Error, Result};
use crate::granger::WeightedAdjacency;
use crate::varx::LagTable;

/// Two-decimal weight, with exact zeros written as `0`.
pub fn format_weight(w: f64) -> String {
    if w == 0.0 {
        "0".to_string()
    } else {
        format!("{w:.2}")
    }
}

/// Square CSV with the corner cell `TARGET<-SOURCE`, then one column per
/// source country and one row per target country.
pub fn adjacency_csv(adj: &WeightedAdjacency) -> String {
    let mut out = format!("{}<-{}", adj.role.target_kind(), adj.role.source_kind());
    for l in &adj.labels {
        out.push(',');
        out.push_str(l);
    }
    out.push('\n');
    for (i, l) in adj.labels.iter().enumerate() {
        out.push_str(l);
        for j in 0..adj.labels.len() {
            out.push(',');
            out.push_str(&format_weight(adj.matrix[(i, j)]));
        }
        out.push('\n');
    }
    out
}

/// Reads back a file written by [`adjacency_csv`].
pub fn parse_adjacency_csv(text: &str) -> Result<(Vec<String>, DMatrix<f64>)> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::Model("empty adjacency file".into()))?;
    let labels: Vec<String> = header.split(',').skip(1).map(|s| s.trim().to_string()).collect();
    let n = labels.len();
    let mut m = DMatrix::zeros(n, n);
    let mut rows = 0;
    for (i, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if i >= n || cells.len() != n + 1 || cells[0] != labels[i] {
            return Err(Error::Model(format!("adjacency row {} is malformed", i + 2)));
        }
        for j in 0..n {
            m[(i, j)] = cells[j + 1]
                .parse()
                .map_err(|_| Error::Model(format!("bad weight {:?} in row {}", cells[j + 1], i + 2)))?;
        }
        rows += 1;
    }
    if rows != n {
        return Err(Error::Model(format!("adjacency has {rows} rows for {n} columns")));
    }
    Ok((labels, m))
}

/// One directed graph per role. Edges point from source to target; positive
/// weights are blue, negative red.
pub fn adjacency_dot(adj: &WeightedAdjacency) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph {} {{", adj.role.slug());
    let _ = writeln!(
        out,
        "  label=\"{}: {} -> {}\";",
        adj.role.slug(),
        adj.role.source_kind(),
        adj.role.target_kind()
    );
    out.push_str("  node [shape=circle];\n");
    for l in &adj.labels {
        let _ = writeln!(out, "  \"{l}\";");
    }
    let n = adj.labels.len();
    for i in 0..n {
        for j in 0..n {
            let w = adj.matrix[(i, j)];
            if w == 0.0 {
                continue;
            }
            let color = if w > 0.0 { "blue" } else { "red" };
            let _ = writeln!(
                out,
                "  \"{}\" -> \"{}\" [color={color}, label=\"{w:.2}\"];",
                adj.labels[j], adj.labels[i]
            );
        }
    }
    out.push_str("}\n");
    out
}

/// Columns: step, then one CUSUM path per country.
pub fn cusum_csv(report: &CusumReport, labels: &[String]) -> String {
    let mut out = String::from("step");
    for l in labels {
        out.push(',');
        out.push_str(l);
    }
    out.push('\n');
    let len = report.equations.first().map_or(0, |e| e.path.len());
    for m in 0..len {
        let _ = write!(out, "{}", m + 1);
        for eq in &report.equations {
            let _ = write!(out, ",{}", eq.path[m]);
        }
        out.push('\n');
    }
    out
}

pub fn lag_table_csv(table: &LagTable) -> String {
    let mut out = String::from("p,aic_gdp,aic_cpi,aic_total,bic_gdp,bic_cpi,bic_total\n");
    for r in &table.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.p,
            r.aic_gdp,
            r.aic_cpi,
            r.aic_gdp + r.aic_cpi,
            r.bic_gdp,
            r.bic_cpi,
            r.bic_gdp + r.bic_cpi
        );
    }
    out
}
