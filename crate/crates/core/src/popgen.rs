//! Finite populations with perfect orthogonal simple structure and sampling
//! from them.
//!
//! Generation follows the common factor model `Z = F·A' + U·D'`: every
//! common factor has loading `a` on its own block of six variables and every
//! variable has one error factor with loading `d = sqrt(1 - a²)`. The factor
//! scores are the standardized principal component scores of a normal draw,
//! so common and error factors are exactly uncorrelated in the finite
//! population and every variable has unit variance.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::matrix::LoadingMatrix;
use crate::pairwise::{pairwise_varimax, PairwiseParams};
use crate::pca::{correlation_matrix, full_component_scores, pca_with_eigenvalues, DataMatrix};
use crate::rng::{derive_seed, stream, tag};

/// Variables per component.
pub const VARIABLES_PER_COMPONENT: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PopulationSpec {
    pub k: usize,
    pub m: usize,
    pub main_loading: f64,
    pub cases: usize,
    pub seed: u64,
}

impl PopulationSpec {
    pub fn new(k: usize, main_loading: f64, cases: usize, seed: u64) -> Self {
        Self { k, m: VARIABLES_PER_COMPONENT * k, main_loading, cases, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::invalid("population needs k >= 1"));
        }
        if self.m != VARIABLES_PER_COMPONENT * self.k {
            return Err(Error::invalid(format!("population needs m = 6k, got m = {} for k = {}", self.m, self.k)));
        }
        if !(self.main_loading > 0.0 && self.main_loading < 1.0) {
            return Err(Error::invalid(format!("main loading must lie in (0, 1), got {}", self.main_loading)));
        }
        if self.cases < self.m + self.k {
            return Err(Error::InsufficientCases { needed: self.m + self.k, got: self.cases });
        }
        Ok(())
    }

    pub fn error_loading(&self) -> f64 {
        (1.0 - self.main_loading * self.main_loading).sqrt()
    }

    /// Stable identifier used to name cache files.
    pub fn cache_key(&self) -> u64 {
        derive_seed(
            self.seed,
            &[tag("popspec"), self.k as u64, self.m as u64, self.main_loading.to_bits(), self.cases as u64],
        )
    }
}

#[derive(Debug, Clone)]
pub struct PopulationModel {
    pub spec: PopulationSpec,
    /// m×k, `a` on each component's six-variable block.
    pub factor_pattern: DMatrix<f64>,
    pub error_loading: f64,
    pub data: DataMatrix,
    /// Varimax-rotated (Kaiser-normalized pairwise) population PCA loadings.
    pub pop_component_loadings: LoadingMatrix,
    /// All eigenvalues of the population correlation matrix, descending.
    pub eigenvalues: Vec<f64>,
}

impl PopulationModel {
    /// Mean absolute value of the dominant loading of every variable.
    pub fn main_component_loading(&self) -> f64 {
        let l = self.pop_component_loadings.as_matrix();
        let sum: f64 = l.row_iter().map(|r| r.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))).sum();
        sum / l.nrows() as f64
    }

    /// Communality each variable has under the generating factor model.
    pub fn model_communality(&self) -> f64 {
        self.spec.main_loading * self.spec.main_loading
    }
}

fn factor_pattern(spec: &PopulationSpec) -> DMatrix<f64> {
    DMatrix::from_fn(spec.m, spec.k, |i, j| {
        if i / VARIABLES_PER_COMPONENT == j {
            spec.main_loading
        } else {
            0.0
        }
    })
}

/// Builds the finite population described by `spec`.
pub fn generate_population(spec: &PopulationSpec) -> Result<PopulationModel> {
    spec.validate()?;
    let mut rng = stream(derive_seed(spec.seed, &[tag("popgen")]));
    let width = spec.k + spec.m;
    let raw = DMatrix::<f64>::from_fn(spec.cases, width, |_, _| rng.sample(StandardNormal));
    let scores = full_component_scores(&raw)?;
    drop(raw);

    let pattern = factor_pattern(spec);
    let d = spec.error_loading();
    let common = scores.columns(0, spec.k);
    let unique = scores.columns(spec.k, spec.m);
    let z = common * pattern.transpose() + unique * d;

    let data = DataMatrix::from_trusted(z);
    let (pop_component_loadings, eigenvalues) = population_components(&data, spec.k)?;
    Ok(PopulationModel {
        spec: *spec,
        factor_pattern: pattern,
        error_loading: d,
        data,
        pop_component_loadings,
        eigenvalues,
    })
}

fn population_components(data: &DataMatrix, k: usize) -> Result<(LoadingMatrix, Vec<f64>)> {
    let r = correlation_matrix(data)?;
    let (unrotated, eigenvalues) = pca_with_eigenvalues(&r, k)?;
    let params = PairwiseParams { kaiser_normalize: true, ..PairwiseParams::default() };
    let rotated = pairwise_varimax(&unrotated, &params)?;
    Ok((rotated.lambda, eigenvalues))
}

/// Recomputes a factor loading from a component loading:
/// `a = a*·sqrt(1 - (1 - h²)/λ*)`, with `h²` the factor-model communality and
/// `λ*` the component's eigenvalue.
pub fn back_check_factor_loading(a_star: f64, h2: f64, lambda_star: f64) -> Result<f64> {
    if !(lambda_star > 0.0) {
        return Err(Error::Domain(format!("eigenvalue must be positive, got {lambda_star}")));
    }
    if !(0.0..=1.0).contains(&h2) {
        return Err(Error::Domain(format!("communality must lie in [0, 1], got {h2}")));
    }
    let arg = 1.0 - (1.0 - h2) / lambda_star;
    if arg < 0.0 {
        return Err(Error::Domain(format!("negative square root argument {arg}")));
    }
    Ok(a_star * arg.sqrt())
}

/// Draws `n` distinct cases from the population.
pub fn draw_sample<R: Rng + ?Sized>(pop: &PopulationModel, n: usize, rng: &mut R) -> Result<DataMatrix> {
    let total = pop.data.ncases();
    if n < 2 || n > total {
        return Err(Error::invalid(format!("sample size {n} outside [2, {total}]")));
    }
    let rows = index::sample(rng, total, n);
    let src = pop.data.as_matrix();
    let mut out = DMatrix::zeros(n, src.ncols());
    for (dst, row) in rows.iter().enumerate() {
        out.set_row(dst, &src.row(row));
    }
    Ok(DataMatrix::from_trusted(out))
}

const CACHE_MAGIC: &[u8; 8] = b"GPRVPOP1";

/// File name under which a population is cached.
pub fn cache_file_name(spec: &PopulationSpec) -> String {
    format!("population_{:016x}.bin", spec.cache_key())
}

/// Writes the spec fields followed by the row-major data, little endian.
pub fn save_population(pop: &PopulationModel, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let s = &pop.spec;
    w.write_all(CACHE_MAGIC)?;
    for word in [s.k as u64, s.m as u64, s.main_loading.to_bits(), s.cases as u64, s.seed] {
        w.write_all(&word.to_le_bytes())?;
    }
    let data = pop.data.as_matrix();
    for row in data.row_iter() {
        for x in row.iter() {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

/// Reads a cached population and checks it was generated from `spec`.
pub fn load_population(path: &Path, spec: &PopulationSpec) -> Result<PopulationModel> {
    spec.validate()?;
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != CACHE_MAGIC {
        return Err(Error::invalid(format!("{} is not a population cache", path.display())));
    }
    let header = [read_u64(&mut r)?, read_u64(&mut r)?, read_u64(&mut r)?, read_u64(&mut r)?, read_u64(&mut r)?];
    let expected = [spec.k as u64, spec.m as u64, spec.main_loading.to_bits(), spec.cases as u64, spec.seed];
    if header != expected {
        return Err(Error::invalid(format!("{} was generated from a different spec", path.display())));
    }
    let mut values = Vec::with_capacity(spec.cases * spec.m);
    let mut buf = [0u8; 8];
    for _ in 0..spec.cases * spec.m {
        r.read_exact(&mut buf)?;
        values.push(f64::from_le_bytes(buf));
    }
    let data = DataMatrix::from_trusted(DMatrix::from_row_slice(spec.cases, spec.m, &values));
    let (pop_component_loadings, eigenvalues) = population_components(&data, spec.k)?;
    Ok(PopulationModel {
        spec: *spec,
        factor_pattern: factor_pattern(spec),
        error_loading: spec.error_loading(),
        data,
        pop_component_loadings,
        eigenvalues,
    })
}

/// Loads the population from `dir` if cached there, otherwise generates and
/// caches it.
pub fn cached_population(spec: &PopulationSpec, dir: &Path) -> Result<PopulationModel> {
    let path: PathBuf = dir.join(cache_file_name(spec));
    if path.exists() {
        return load_population(&path, spec);
    }
    let pop = generate_population(spec)?;
    std::fs::create_dir_all(dir)?;
    save_population(&pop, &path)?;
    Ok(pop)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pca::standardize;

    fn small(k: usize) -> PopulationModel {
        generate_population(&PopulationSpec::new(k, 0.5, 5_000, 17)).unwrap()
    }

    #[test]
    fn factor_scores_and_variances_are_exact() {
        let spec = PopulationSpec::new(2, 0.5, 400, 3);
        let mut rng = stream(derive_seed(spec.seed, &[tag("popgen")]));
        let raw = DMatrix::<f64>::from_fn(spec.cases, 14, |_, _| rng.sample(StandardNormal));
        let scores = full_component_scores(&raw).unwrap();
        let n1 = (spec.cases - 1) as f64;
        let corr = scores.tr_mul(&scores) / n1;
        assert!((corr - DMatrix::<f64>::identity(14, 14)).abs().max() < 1e-10);

        let pop = generate_population(&spec).unwrap();
        let z = pop.data.as_matrix();
        for c in z.column_iter() {
            let mean = c.mean();
            let var = c.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n1;
            assert!((var - 1.0).abs() < 1e-10, "{var}");
        }
        // Standardizing is then a no-op up to rounding.
        assert!((standardize(z).unwrap() - z).abs().max() < 1e-10);
    }

    #[test]
    fn population_structure() {
        let pop = small(3);
        let ev = &pop.eigenvalues;
        assert!(ev[2] > 1.0 && ev[3] < 1.0, "{ev:?}");
        for col in pop.pop_component_loadings.as_matrix().column_iter() {
            let mut mags: Vec<f64> = col.iter().map(|x| x.abs()).collect();
            mags.sort_by(|a, b| b.partial_cmp(a).unwrap());
            assert!(mags[..6].iter().all(|&x| x >= 0.55), "{mags:?}");
            assert!(mags[6..].iter().all(|&x| x <= 0.1), "{mags:?}");
        }
    }

    #[test]
    fn back_check_readings() {
        // Ideal population: block correlation a² = .25, λ* = 1 + 5·.25.
        let lambda_star = 2.25;
        let a_star = (lambda_star / 6.0_f64).sqrt();
        let h2 = 0.25;
        let square_on_component = back_check_factor_loading(a_star, h2, lambda_star).unwrap();
        let root_of_product = (a_star * (1.0 - (1.0 - h2) / lambda_star)).sqrt();
        assert!((square_on_component - 0.5).abs() < 1e-12);
        assert!((root_of_product - 0.5).abs() > 0.1);

        assert_eq!(back_check_factor_loading(0.61, 1.0, 2.0).unwrap(), 0.61);
        assert!(matches!(back_check_factor_loading(0.6, 0.0, 0.5), Err(Error::Domain(_))));
        assert!(back_check_factor_loading(0.6, 0.5, 0.0).is_err());
    }

    #[test]
    fn spec_validation() {
        assert!(matches!(
            generate_population(&PopulationSpec::new(3, 0.5, 20, 1)),
            Err(Error::InsufficientCases { needed: 21, got: 20 })
        ));
        assert!(generate_population(&PopulationSpec::new(3, 1.0, 100, 1)).is_err());
        let mut bad = PopulationSpec::new(3, 0.5, 100, 1);
        bad.m = 17;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn sampling_is_deterministic_and_without_replacement() {
        let pop = small(1);
        let a = draw_sample(&pop, 50, &mut stream(1)).unwrap();
        let b = draw_sample(&pop, 50, &mut stream(1)).unwrap();
        assert_eq!(a, b);
        let idx = index::sample(&mut stream(1), pop.data.ncases(), 50).into_vec();
        let mut sorted = idx.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), idx.len());
        assert!(draw_sample(&pop, pop.data.ncases() + 1, &mut stream(1)).is_err());
        assert!(draw_sample(&pop, 1, &mut stream(1)).is_err());
    }

    #[test]
    fn full_sample_is_a_row_permutation() {
        let pop = generate_population(&PopulationSpec::new(1, 0.5, 40, 2)).unwrap();
        let s = draw_sample(&pop, 40, &mut stream(9)).unwrap();
        let key = |m: &DMatrix<f64>| {
            let mut rows: Vec<Vec<u64>> = m.row_iter().map(|r| r.iter().map(|x| x.to_bits()).collect()).collect();
            rows.sort();
            rows
        };
        assert_eq!(key(s.as_matrix()), key(pop.data.as_matrix()));
    }

    #[test]
    fn cache_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let spec = PopulationSpec::new(1, 0.5, 300, 4);
        let pop = cached_population(&spec, dir.path()).unwrap();
        let again = cached_population(&spec, dir.path()).unwrap();
        assert_eq!(pop.data, again.data);
        assert_eq!(pop.pop_component_loadings, again.pop_component_loadings);
        let other = PopulationSpec::new(1, 0.5, 300, 5);
        assert!(load_population(&dir.path().join(cache_file_name(&spec)), &other).is_err());
    }
}
