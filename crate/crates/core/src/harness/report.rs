//! Cell tables, classification tables and figure data on disk.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::cell::{CellResult, CellStart, Method};
use super::scan::{QClass, StationarityReport, Thresholds};
use crate::error::{Error, Result};

pub const CELLS_FILE: &str = "cells.csv";
pub const CELLS_HEADER: &str = "k,n,kaiser,method,start_type,q,replications,mean_c,se_c,mean_v,se_v,mean_rmse,se_rmse";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Congruence,
    Criterion,
    Rmse,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Congruence, Metric::Criterion, Metric::Rmse];

    pub fn short_name(&self) -> &'static str {
        match self {
            Metric::Congruence => "c",
            Metric::Criterion => "v",
            Metric::Rmse => "rmse",
        }
    }

    fn of(&self, cell: &CellResult) -> (f64, f64) {
        match self {
            Metric::Congruence => (cell.mean_c, cell.se_c),
            Metric::Criterion => (cell.mean_v, cell.se_v),
            Metric::Rmse => (cell.mean_rmse, cell.se_rmse),
        }
    }
}

pub fn write_cells(cells: &[CellResult], path: &Path) -> Result<()> {
    if cells.is_empty() {
        return Err(Error::invalid("refusing to write an empty cell table"));
    }
    let mut w = csv::Writer::from_path(path)?;
    for c in cells {
        w.serialize(c)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_cells(path: &Path) -> Result<Vec<CellResult>> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.iter().collect::<Vec<_>>().join(",");
    if header != CELLS_HEADER {
        return Err(Error::invalid(format!("{}: unexpected header {header:?}", path.display())));
    }
    let cells = r.deserialize().collect::<std::result::Result<Vec<CellResult>, _>>()?;
    if cells.is_empty() {
        return Err(Error::invalid(format!("{}: no cells", path.display())));
    }
    Ok(cells)
}

fn figure_x(cell: &CellResult) -> String {
    match (cell.method, cell.start_type) {
        (Method::Pairwise, _) => "pairwise".to_string(),
        (Method::Gpr, CellStart::Identity) => "identity".to_string(),
        _ => cell.q.to_string(),
    }
}

fn figure_order(cell: &CellResult) -> (u8, usize) {
    match (cell.method, cell.start_type) {
        (Method::Gpr, CellStart::Identity) => (0, 0),
        (Method::Gpr, _) => (1, cell.q),
        (Method::Pairwise, _) => (2, 0),
    }
}

pub fn figure_file_name(metric: Metric, k: usize) -> String {
    format!("figure_{}_k{k}.csv", metric.short_name())
}

/// One file per (metric, k): rows are x positions (identity, each q,
/// pairwise) crossed with the n × kaiser series.
pub fn write_figures(cells: &[CellResult], dir: &Path) -> Result<Vec<PathBuf>> {
    let mut ks: Vec<usize> = cells.iter().map(|c| c.k).collect();
    ks.sort_unstable();
    ks.dedup();
    let mut written = Vec::new();
    for metric in Metric::ALL {
        for &k in &ks {
            let mut rows: Vec<&CellResult> = cells.iter().filter(|c| c.k == k).collect();
            rows.sort_by_key(|c| (c.n, c.kaiser, figure_order(c)));
            let path = dir.join(figure_file_name(metric, k));
            let mut w = csv::Writer::from_path(&path)?;
            w.write_record(["x", "n", "kaiser", "mean", "se"])?;
            for c in rows {
                let (mean, se) = metric.of(c);
                w.write_record([figure_x(c), c.n.to_string(), c.kaiser.to_string(), mean.to_string(), se.to_string()])?;
            }
            w.flush()?;
            written.push(path);
        }
    }
    Ok(written)
}

fn class_csv(report: &StationarityReport, pick: impl Fn(&super::scan::ConditionClasses) -> Option<QClass>, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["k", "n", "kaiser", "min_q"])?;
    for row in &report.rows {
        if let Some(class) = pick(row) {
            w.write_record([row.key.k.to_string(), row.key.n.to_string(), row.key.kaiser.to_string(), class.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Aligned table with one row per k and one column per (n, kaiser).
pub fn class_text(report: &StationarityReport, title: &str, pick: impl Fn(&super::scan::ConditionClasses) -> Option<QClass>) -> String {
    let mut cols: Vec<(usize, bool)> = report.rows.iter().map(|r| (r.key.n, r.key.kaiser)).collect();
    cols.sort_unstable();
    cols.dedup();
    let mut ks: Vec<usize> = report.rows.iter().map(|r| r.key.k).collect();
    ks.sort_unstable();
    ks.dedup();

    let width = 14;
    let mut out = String::new();
    writeln!(out, "{title}").unwrap();
    write!(out, "{:>4}", "k").unwrap();
    for (n, kaiser) in &cols {
        let label = format!("n={n} {}", if *kaiser { "kaiser" } else { "raw" });
        write!(out, "{label:>width$}").unwrap();
    }
    out.push('\n');
    for k in ks {
        write!(out, "{k:>4}").unwrap();
        for &(n, kaiser) in &cols {
            let entry = report.get(k, n, kaiser).and_then(&pick).map(|c| c.to_string()).unwrap_or_else(|| "-".to_string());
            write!(out, "{entry:>width$}").unwrap();
        }
        out.push('\n');
    }
    out
}

/// Files produced by [`emit_reports`].
#[derive(Debug, Clone)]
pub struct ReportFiles {
    pub cells: PathBuf,
    pub tables: Vec<PathBuf>,
    pub figures: Vec<PathBuf>,
}

/// Writes tables and figure data derived from `cells`. The cell table itself
/// is written only when `write_cell_table` is set, so `report` can rebuild
/// everything else from an existing one.
pub fn emit_reports(cells: &[CellResult], dir: &Path, write_cell_table: bool) -> Result<(StationarityReport, ReportFiles)> {
    if cells.is_empty() {
        return Err(Error::invalid("refusing to write reports for an empty result set"));
    }
    fs::create_dir_all(dir)?;
    let cells_path = dir.join(CELLS_FILE);
    if write_cell_table {
        write_cells(cells, &cells_path)?;
    }
    let report = StationarityReport::build(cells, &Thresholds::default())?;
    let stat = |r: &super::scan::ConditionClasses| Some(r.stationary);
    let bench = |r: &super::scan::ConditionClasses| r.benchmark;

    let mut tables = Vec::new();
    for (stem, title, pick) in [
        ("table1_stationarity", "Minimum random starts for stationary mean c and v", &stat as &dyn Fn(&_) -> _),
        ("table2_benchmark", "Minimum random starts to match pairwise Varimax", &bench as &dyn Fn(&_) -> _),
    ] {
        let csv_path = dir.join(format!("{stem}.csv"));
        class_csv(&report, pick, &csv_path)?;
        let txt_path = dir.join(format!("{stem}.txt"));
        fs::write(&txt_path, class_text(&report, title, pick))?;
        tables.push(csv_path);
        tables.push(txt_path);
    }
    let figures = write_figures(cells, dir)?;
    Ok((report, ReportFiles { cells: cells_path, tables, figures }))
}
