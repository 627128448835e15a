//! Stationarity and benchmark classification of q series.

use std::fmt;

use super::cell::{CellResult, CellStart, ConditionKey, Method};
use crate::error::{Error, Result};

/// A classified number of random starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QClass {
    /// The smallest qualifying schedule value.
    Min(usize),
    /// No schedule value qualified; the payload is the reference q.
    GreaterThan(usize),
}

impl QClass {
    /// Position in an ordering where every `GreaterThan(q)` ranks above `Min(q)`.
    pub fn rank(&self, schedule: &[usize]) -> Option<usize> {
        match *self {
            QClass::Min(q) => schedule.iter().position(|&s| s == q),
            QClass::GreaterThan(_) => Some(schedule.len()),
        }
    }
}

impl fmt::Display for QClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QClass::Min(q) => write!(f, "{q}"),
            QClass::GreaterThan(q) => write!(f, "> {q}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub delta_c: f64,
    pub delta_v: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { delta_c: 0.001, delta_v: 0.0001 }
    }
}

impl Thresholds {
    fn close(&self, a: &CellResult, b: &CellResult) -> bool {
        (a.mean_c - b.mean_c).abs() <= self.delta_c && (a.mean_v - b.mean_v).abs() <= self.delta_v
    }
}

fn check_series(cells: &[CellResult]) -> Result<ConditionKey> {
    let first = cells.first().ok_or_else(|| Error::invalid("empty q series"))?;
    let key = first.condition().key;
    for (i, c) in cells.iter().enumerate() {
        if c.condition().key != key || c.method != Method::Gpr || c.start_type != CellStart::Random {
            return Err(Error::invalid(format!("cell {i} is not a random-start GPR cell of {key:?}")));
        }
        if i > 0 && c.q <= cells[i - 1].q {
            return Err(Error::invalid("q series must be strictly increasing"));
        }
    }
    Ok(key)
}

/// First q whose mean c and mean v both stay within the thresholds at the
/// next schedule point. With no qualifying pair the result is
/// `GreaterThan` the lower q of the final pair.
pub fn stationarity_scan(cells: &[CellResult], thresholds: &Thresholds) -> Result<QClass> {
    check_series(cells)?;
    if cells.len() < 2 {
        return Err(Error::invalid("stationarity needs at least two q points"));
    }
    Ok(cells
        .windows(2)
        .find(|w| thresholds.close(&w[0], &w[1]))
        .map(|w| QClass::Min(w[0].q))
        .unwrap_or(QClass::GreaterThan(cells[cells.len() - 2].q)))
}

/// First q at which GPR matches the pairwise benchmark on both means.
pub fn benchmark_scan(gpr_cells: &[CellResult], pairwise: &CellResult, thresholds: &Thresholds) -> Result<QClass> {
    let key = check_series(gpr_cells)?;
    if pairwise.method != Method::Pairwise || pairwise.condition().key != key {
        return Err(Error::invalid(format!("benchmark cell does not belong to {key:?}")));
    }
    if pairwise.replications != gpr_cells[0].replications {
        return Err(Error::invalid("benchmark and GPR cells differ in replications"));
    }
    Ok(gpr_cells
        .iter()
        .find(|c| thresholds.close(c, pairwise))
        .map(|c| QClass::Min(c.q))
        .unwrap_or(QClass::GreaterThan(gpr_cells[gpr_cells.len() - 1].q)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionClasses {
    pub key: ConditionKey,
    pub stationary: QClass,
    pub benchmark: Option<QClass>,
}

/// Both classifications for every (k, n, kaiser) with a random-start series.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StationarityReport {
    pub rows: Vec<ConditionClasses>,
}

impl StationarityReport {
    pub fn build(cells: &[CellResult], thresholds: &Thresholds) -> Result<Self> {
        let mut keys: Vec<ConditionKey> = cells.iter().map(|c| c.condition().key).collect();
        keys.sort();
        keys.dedup();
        let mut rows = Vec::new();
        for key in keys {
            let mut series: Vec<CellResult> = cells
                .iter()
                .filter(|c| c.condition().key == key && c.method == Method::Gpr && c.start_type == CellStart::Random)
                .cloned()
                .collect();
            if series.len() < 2 {
                continue;
            }
            series.sort_by_key(|c| c.q);
            let stationary = stationarity_scan(&series, thresholds)?;
            let benchmark = cells
                .iter()
                .find(|c| c.condition().key == key && c.method == Method::Pairwise)
                .map(|p| benchmark_scan(&series, p, thresholds))
                .transpose()?;
            rows.push(ConditionClasses { key, stationary, benchmark });
        }
        Ok(Self { rows })
    }

    pub fn get(&self, k: usize, n: usize, kaiser: bool) -> Option<&ConditionClasses> {
        self.rows.iter().find(|r| r.key == ConditionKey { k, n, kaiser })
    }
}
