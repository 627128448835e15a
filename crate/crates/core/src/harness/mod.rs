//! The simulation grid: populations, per-condition cells, classification
//! tables and report files.

pub mod cell;
pub mod config;
pub mod report;
pub mod scan;

pub use cell::{run_cell, run_condition, CellResult, CellStart, Condition, ConditionKey, Method, RepMetrics};
pub use config::{StartType, StudyConfig};
pub use report::{emit_reports, read_cells, write_cells, Metric, ReportFiles, CELLS_FILE, CELLS_HEADER};
pub use scan::{benchmark_scan, stationarity_scan, QClass, StationarityReport, Thresholds};

use crate::error::Result;
use crate::popgen::{cached_population, generate_population, PopulationModel, PopulationSpec};
use crate::rng::{derive_seed, tag};

/// Population used for samples of size `n` with `k` components.
pub fn population_spec(config: &StudyConfig, k: usize, n: usize) -> PopulationSpec {
    let cases = config.population_cases(n);
    let seed = derive_seed(config.base_seed, &[tag("pop"), k as u64, cases as u64]);
    PopulationSpec::new(k, config.main_loading, cases, seed)
}

pub fn study_population(config: &StudyConfig, k: usize, n: usize) -> Result<PopulationModel> {
    let spec = population_spec(config, k, n);
    match &config.population_cache_dir {
        Some(dir) => cached_population(&spec, dir),
        None => generate_population(&spec),
    }
}

/// Runs every condition of the grid, calling `progress` after each
/// (k, n, kaiser) block. Cells come out ordered by k, n, kaiser.
pub fn run_study_with(config: &StudyConfig, mut progress: impl FnMut(&ConditionKey, &[CellResult])) -> Result<Vec<CellResult>> {
    config.validate()?;
    let mut cells = Vec::new();
    for &k in &config.k_list {
        // At desk scale all n share one population per k.
        let mut current: Option<(usize, PopulationModel)> = None;
        for &n in &config.n_list {
            let cases = config.population_cases(n);
            if current.as_ref().map(|(c, _)| *c) != Some(cases) {
                current = Some((cases, study_population(config, k, n)?));
            }
            let pop = &current.as_ref().unwrap().1;
            for &kaiser in &config.kaiser_list {
                let key = ConditionKey { k, n, kaiser };
                let block = run_condition(&key, pop, config)?;
                progress(&key, &block);
                cells.extend(block);
            }
        }
    }
    Ok(cells)
}

pub fn run_study(config: &StudyConfig) -> Result<Vec<CellResult>> {
    run_study_with(config, |_, _| {})
}
