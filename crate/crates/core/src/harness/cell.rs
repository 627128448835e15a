//! Per-condition simulation: sample, extract, rotate, compare, aggregate.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::StudyConfig;
use crate::error::{Error, Result};
use crate::matrix::{LoadingMatrix, TransformationMatrix};
use crate::metrics::{match_components, mean_congruence, rmse_loadings};
use crate::multistart::{multi_start_prefixes, multi_start_rotate, StartSpec};
use crate::normalization::{kaiser_denormalize, kaiser_normalize};
use crate::pairwise::{pairwise_varimax, PairwiseParams};
use crate::pca::{correlation_matrix, pca_loadings};
use crate::popgen::{draw_sample, PopulationModel};
use crate::rng::{derive_seed, stream, tag};
use crate::rotation::{gpr_rotate, varimax_criterion};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Gpr,
    Pairwise,
}

/// Start type column of the cell table. Pairwise cells use `None`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellStart {
    Identity,
    Random,
    None,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Gpr => "gpr",
            Method::Pairwise => "pairwise",
        })
    }
}

/// The sample-level part of a condition: everything except the rotation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConditionKey {
    pub k: usize,
    pub n: usize,
    pub kaiser: bool,
}

/// One cell of the grid. `q` is 0 for identity and pairwise cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Condition {
    pub key: ConditionKey,
    pub method: Method,
    pub start: CellStart,
    pub q: usize,
}

impl Condition {
    pub fn identity(key: ConditionKey) -> Self {
        Self { key, method: Method::Gpr, start: CellStart::Identity, q: 0 }
    }

    pub fn random(key: ConditionKey, q: usize) -> Self {
        Self { key, method: Method::Gpr, start: CellStart::Random, q }
    }

    pub fn pairwise(key: ConditionKey) -> Self {
        Self { key, method: Method::Pairwise, start: CellStart::None, q: 0 }
    }

    fn validate(&self) -> Result<()> {
        let ok = matches!(
            (self.method, self.start, self.q),
            (Method::Gpr, CellStart::Identity, 0) | (Method::Pairwise, CellStart::None, 0)
        ) || (self.method == Method::Gpr && self.start == CellStart::Random && self.q >= 1);
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("inconsistent condition {self:?}")))
        }
    }
}

/// Aggregated statistics of one cell. Field order is the CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub k: usize,
    pub n: usize,
    pub kaiser: bool,
    pub method: Method,
    pub start_type: CellStart,
    pub q: usize,
    pub replications: usize,
    pub mean_c: f64,
    pub se_c: f64,
    pub mean_v: f64,
    pub se_v: f64,
    pub mean_rmse: f64,
    pub se_rmse: f64,
}

impl CellResult {
    pub fn condition(&self) -> Condition {
        Condition {
            key: ConditionKey { k: self.k, n: self.n, kaiser: self.kaiser },
            method: self.method,
            start: self.start_type,
            q: self.q,
        }
    }
}

/// Statistics of one rotated sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RepMetrics {
    pub c: f64,
    pub v: f64,
    pub rmse: f64,
}

/// Mean and `sd / sqrt(n)` with the `n - 1` standard deviation.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

pub fn aggregate(condition: &Condition, reps: &[RepMetrics]) -> Result<CellResult> {
    if reps.len() < 2 {
        return Err(Error::invalid("a cell needs at least two replications"));
    }
    let pick = |f: fn(&RepMetrics) -> f64| reps.iter().map(f).collect::<Vec<_>>();
    let (mean_c, se_c) = mean_and_se(&pick(|r| r.c));
    let (mean_v, se_v) = mean_and_se(&pick(|r| r.v));
    let (mean_rmse, se_rmse) = mean_and_se(&pick(|r| r.rmse));
    Ok(CellResult {
        k: condition.key.k,
        n: condition.key.n,
        kaiser: condition.key.kaiser,
        method: condition.method,
        start_type: condition.start,
        q: condition.q,
        replications: reps.len(),
        mean_c,
        se_c,
        mean_v,
        se_v,
        mean_rmse,
        se_rmse,
    })
}

/// Seed of the sample drawn for replication `r`. Independent of Kaiser
/// normalization, method and start count, so all of those are paired.
pub fn sample_seed(config: &StudyConfig, k: usize, n: usize, r: usize) -> u64 {
    derive_seed(config.base_seed, &[tag("sample"), k as u64, n as u64, r as u64])
}

/// Seed of the random start stream for replication `r`.
pub fn start_seed(config: &StudyConfig, k: usize, n: usize, r: usize) -> u64 {
    derive_seed(config.base_seed, &[tag("starts"), k as u64, n as u64, r as u64])
}

/// Unrotated (and, if requested, Kaiser-normalized) sample loadings.
pub struct PreparedSample {
    pub loadings: LoadingMatrix,
    scales: Option<crate::normalization::RowScales>,
}

pub fn prepare_sample(key: &ConditionKey, pop: &PopulationModel, config: &StudyConfig, r: usize) -> Result<PreparedSample> {
    if pop.spec.k != key.k {
        return Err(Error::invalid(format!("population has k = {} but the condition has k = {}", pop.spec.k, key.k)));
    }
    let sample = draw_sample(pop, key.n, &mut stream(sample_seed(config, key.k, key.n, r)))?;
    let a = pca_loadings(&correlation_matrix(&sample)?, key.k)?;
    if key.kaiser {
        let (an, h) = kaiser_normalize(&a)?;
        Ok(PreparedSample { loadings: an, scales: Some(h) })
    } else {
        Ok(PreparedSample { loadings: a, scales: None })
    }
}

impl PreparedSample {
    /// Scores rotated loadings against the population. All three statistics
    /// use loadings on the original scale.
    pub fn score(&self, rotated: &LoadingMatrix, pop: &PopulationModel) -> Result<RepMetrics> {
        let lambda = match &self.scales {
            Some(h) => kaiser_denormalize(rotated, h)?,
            None => rotated.clone(),
        };
        let matching = match_components(&lambda, &pop.pop_component_loadings)?;
        Ok(RepMetrics {
            c: mean_congruence(&matching),
            v: varimax_criterion(&lambda),
            rmse: rmse_loadings(&lambda, &pop.pop_component_loadings, &matching)?,
        })
    }
}

fn pairwise_params(config: &StudyConfig) -> PairwiseParams {
    // Normalization, when requested, is already applied by `prepare_sample`.
    PairwiseParams { max_cycles: config.pairwise_max_cycles, kaiser_normalize: false, ..PairwiseParams::default() }
}

fn run_replication(condition: &Condition, pop: &PopulationModel, config: &StudyConfig, r: usize) -> Result<RepMetrics> {
    let key = &condition.key;
    let prepared = prepare_sample(key, pop, config, r)?;
    let a = &prepared.loadings;
    let params = config.gpr_params();
    let rotated = match (condition.method, condition.start) {
        (Method::Pairwise, _) => pairwise_varimax(a, &pairwise_params(config))?.lambda,
        (Method::Gpr, CellStart::Identity) => gpr_rotate(a, &TransformationMatrix::identity(key.k), &params)?.lambda,
        (Method::Gpr, _) => {
            let mut rng = stream(start_seed(config, key.k, key.n, r));
            multi_start_rotate(a, StartSpec::random(condition.q), &params, &mut rng)?.best.lambda
        }
    };
    prepared.score(&rotated, pop)
}

/// Runs every replication of a single cell.
pub fn run_cell(condition: &Condition, pop: &PopulationModel, config: &StudyConfig) -> Result<CellResult> {
    condition.validate()?;
    let reps = (0..config.replications)
        .into_par_iter()
        .map(|r| run_replication(condition, pop, config, r))
        .collect::<Result<Vec<_>>>()?;
    aggregate(condition, &reps)
}

/// All rotations of one replication: identity start, each nested best-of-q,
/// and the pairwise benchmark.
#[derive(Debug, Clone)]
struct SweepRep {
    identity: Option<RepMetrics>,
    random: Vec<RepMetrics>,
    pairwise: RepMetrics,
}

fn sweep_replication(key: &ConditionKey, pop: &PopulationModel, config: &StudyConfig, r: usize) -> Result<SweepRep> {
    use super::config::StartType;
    let prepared = prepare_sample(key, pop, config, r)?;
    let a = &prepared.loadings;
    let params = config.gpr_params();

    let identity = if config.has_start(StartType::Identity) {
        let sol = gpr_rotate(a, &TransformationMatrix::identity(key.k), &params)?;
        Some(prepared.score(&sol.lambda, pop)?)
    } else {
        None
    };
    let random = if config.has_start(StartType::Random) {
        let mut rng = stream(start_seed(config, key.k, key.n, r));
        multi_start_prefixes(a, &config.q_schedule, &params, &mut rng)?
            .iter()
            .map(|res| prepared.score(&res.best.lambda, pop))
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    let pw = pairwise_varimax(a, &pairwise_params(config))?;
    let pairwise = prepared.score(&pw.lambda, pop)?;
    Ok(SweepRep { identity, random, pairwise })
}

/// Every cell of one (k, n, kaiser) condition from a single pass over the
/// replications. Random-start cells share one nested start set per
/// replication, so each equals the corresponding [`run_cell`] result.
///
/// Output order: identity (if configured), random cells by ascending q (if
/// configured), pairwise.
pub fn run_condition(key: &ConditionKey, pop: &PopulationModel, config: &StudyConfig) -> Result<Vec<CellResult>> {
    let reps = (0..config.replications)
        .into_par_iter()
        .map(|r| sweep_replication(key, pop, config, r))
        .collect::<Result<Vec<_>>>()?;

    let mut cells = Vec::new();
    if reps[0].identity.is_some() {
        let values: Vec<RepMetrics> = reps.iter().map(|r| r.identity.unwrap()).collect();
        cells.push(aggregate(&Condition::identity(*key), &values)?);
    }
    if !reps[0].random.is_empty() {
        for (i, &q) in config.q_schedule.iter().enumerate() {
            let values: Vec<RepMetrics> = reps.iter().map(|r| r.random[i]).collect();
            cells.push(aggregate(&Condition::random(*key, q), &values)?);
        }
    }
    let values: Vec<RepMetrics> = reps.iter().map(|r| r.pairwise).collect();
    cells.push(aggregate(&Condition::pairwise(*key), &values)?);
    Ok(cells)
}
