use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multistart::StartKind;
use crate::rotation::GprParams;

/// Start types listed in a config file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StartType {
    Identity,
    Random,
}

impl From<StartType> for StartKind {
    fn from(s: StartType) -> Self {
        match s {
            StartType::Identity => StartKind::Identity,
            StartType::Random => StartKind::Random,
        }
    }
}

/// GPR settings as they appear in a config file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GprSettings {
    pub alpha0: f64,
    pub max_iter: usize,
    pub grad_tol: f64,
    pub max_halvings: usize,
}

impl Default for GprSettings {
    fn default() -> Self {
        let p = GprParams::default();
        Self { alpha0: p.alpha0, max_iter: p.max_iter, grad_tol: p.grad_tol, max_halvings: p.max_halvings }
    }
}

impl From<GprSettings> for GprParams {
    fn from(s: GprSettings) -> Self {
        GprParams { alpha0: s.alpha0, max_iter: s.max_iter, grad_tol: s.grad_tol, max_halvings: s.max_halvings }
    }
}

/// Everything that determines a simulation run. The whole study is a pure
/// function of this value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    pub k_list: Vec<usize>,
    pub n_list: Vec<usize>,
    pub kaiser_list: Vec<bool>,
    pub start_types: Vec<StartType>,
    pub q_schedule: Vec<usize>,
    pub replications: usize,
    pub base_seed: u64,
    pub main_loading: f64,
    /// Cases per population at desk scale.
    pub population_size: usize,
    /// 1,000 replications and populations of 1,000·n cases.
    pub full_scale: bool,
    pub pairwise_max_cycles: usize,
    pub gpr: GprSettings,
    pub output_dir: Option<PathBuf>,
    pub population_cache_dir: Option<PathBuf>,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            k_list: vec![3, 6, 9, 12],
            n_list: vec![100, 300],
            kaiser_list: vec![false, true],
            start_types: vec![StartType::Identity, StartType::Random],
            q_schedule: vec![1, 10, 50, 100, 500, 1000],
            replications: 100,
            base_seed: 20_180_913,
            main_loading: 0.5,
            population_size: 50_000,
            full_scale: false,
            pairwise_max_cycles: 250,
            gpr: GprSettings::default(),
            output_dir: None,
            population_cache_dir: None,
        }
    }
}

pub const FULL_SCALE_REPLICATIONS: usize = 1000;

impl StudyConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: StudyConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn with_full_scale(mut self) -> Self {
        self.full_scale = true;
        self.replications = FULL_SCALE_REPLICATIONS;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        if self.k_list.is_empty() || self.k_list.contains(&0) {
            return bad("k_list must be non-empty with positive entries");
        }
        if self.n_list.is_empty() || self.n_list.iter().any(|&n| n < 2) {
            return bad("n_list must be non-empty with entries >= 2");
        }
        if self.kaiser_list.is_empty() {
            return bad("kaiser_list must be non-empty");
        }
        if self.start_types.is_empty() {
            return bad("start_types must be non-empty");
        }
        if self.q_schedule.is_empty() || self.q_schedule[0] == 0 || self.q_schedule.windows(2).any(|w| w[1] <= w[0]) {
            return bad("q_schedule must be strictly increasing and start at 1 or more");
        }
        if self.replications < 2 {
            return bad("replications must be at least 2");
        }
        if !(self.main_loading > 0.0 && self.main_loading < 1.0) {
            return bad("main_loading must lie in (0, 1)");
        }
        if self.pairwise_max_cycles == 0 {
            return bad("pairwise_max_cycles must be at least 1");
        }
        GprParams::from(self.gpr).validate().map_err(|e| Error::Config(e.to_string()))?;
        for &n in &self.n_list {
            for &k in &self.k_list {
                let cases = self.population_cases(n);
                if cases < n || cases < 7 * k {
                    return Err(Error::Config(format!("population of {cases} cases is too small for n = {n}, k = {k}")));
                }
            }
        }
        Ok(())
    }

    /// Population size used for samples of size `n`.
    pub fn population_cases(&self, n: usize) -> usize {
        if self.full_scale {
            1000 * n
        } else {
            self.population_size
        }
    }

    pub fn gpr_params(&self) -> GprParams {
        self.gpr.into()
    }

    pub fn has_start(&self, s: StartType) -> bool {
        self.start_types.contains(&s)
    }
}
