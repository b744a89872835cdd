//! Experiment driver: batches of seeded problems solved under each penalty
//! configuration, reduced to medians.
//!
//! Sample `i` of a batch uses seed `base_seed + i` for every dimension and every
//! penalty configuration, so configurations are compared on identical problems.
//! Results never depend on the worker count.

mod output;
mod sweep;
mod trace;

pub use output::{write_predictions, write_records, write_summary, write_sweep, write_trace};
pub use sweep::{default_alpha_grid, default_sigma_grid, sweep_alpha, sweep_sigma, SweepPoint};
pub use trace::{convergence_trace, corner_problem, TracePoint};

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::optimizer::{bfgs_minimize, OptimOptions};
use crate::penalty::{constrained_objective, Combinator, PenaltyError, PenaltyFamily};
use crate::problems::{make_problem, BenchmarkProblem, GeneratorOptions, ProblemError, ProblemFamily};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Penalty(#[from] PenaltyError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// The four penalty set-ups compared in the benchmarks.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PenaltyConfig {
    #[serde(rename = "alg-norm")]
    AlgebraicNorm,
    #[serde(rename = "alg-sum")]
    AlgebraicSum,
    #[serde(rename = "cb")]
    CourantBeltramiSum,
    #[serde(rename = "softplus-norm")]
    SoftplusNorm,
}

impl PenaltyConfig {
    pub const ALL: [PenaltyConfig; 4] =
        [Self::AlgebraicNorm, Self::AlgebraicSum, Self::CourantBeltramiSum, Self::SoftplusNorm];

    pub fn family(self) -> PenaltyFamily {
        match self {
            Self::AlgebraicNorm | Self::AlgebraicSum => PenaltyFamily::Algebraic,
            Self::CourantBeltramiSum => PenaltyFamily::CourantBeltrami,
            Self::SoftplusNorm => PenaltyFamily::Softplus,
        }
    }

    pub fn combinator(self) -> Combinator {
        match self {
            Self::AlgebraicSum | Self::CourantBeltramiSum => Combinator::Sum,
            Self::AlgebraicNorm | Self::SoftplusNorm => Combinator::EuclideanNorm,
        }
    }

    pub fn default_sigma(self) -> f64 {
        match self {
            Self::CourantBeltramiSum => 1e4,
            _ => 15.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::AlgebraicNorm => "alg-norm",
            Self::AlgebraicSum => "alg-sum",
            Self::CourantBeltramiSum => "cb",
            Self::SoftplusNorm => "softplus-norm",
        }
    }

    /// Column prefix in summary files.
    fn column(self) -> &'static str {
        match self {
            Self::AlgebraicNorm => "alg_norm",
            Self::AlgebraicSum => "alg_sum",
            Self::CourantBeltramiSum => "cb",
            Self::SoftplusNorm => "softplus_norm",
        }
    }
}

impl fmt::Display for PenaltyConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PenaltyConfig {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown penalty config `{s}` (expected alg-norm, alg-sum, cb or softplus-norm)"))
    }
}

/// Penalty weight used for a sample.
#[derive(Copy, Clone, Debug, PartialEq)]
pub enum SigmaChoice {
    /// 15 for the smooth families, 1e4 for Courant-Beltrami.
    Default,
    Fixed(f64),
    /// Twice the sampled objective-gradient magnitude.
    TwiceGradient,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub problem_family: ProblemFamily,
    pub dimensions: Vec<usize>,
    pub penalty_configs: Vec<PenaltyConfig>,
    pub sigma: SigmaChoice,
    pub alpha: f64,
    pub samples: usize,
    pub base_seed: u64,
    pub optimizer: OptimOptions<f64>,
    pub generator: GeneratorOptions,
    pub workers: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            problem_family: ProblemFamily::ShearedHyperplanes,
            dimensions: vec![2, 3, 5, 8, 12, 20, 32, 50],
            penalty_configs: PenaltyConfig::ALL.to_vec(),
            sigma: SigmaChoice::Default,
            alpha: 3e-5,
            samples: 500,
            base_seed: 0,
            optimizer: OptimOptions::default(),
            generator: GeneratorOptions::default(),
            workers: 1,
        }
    }
}

impl ExperimentConfig {
    pub fn sigma_for(&self, config: PenaltyConfig, gradient_magnitude: f64) -> f64 {
        match self.sigma {
            SigmaChoice::Default => config.default_sigma(),
            SigmaChoice::Fixed(s) => s,
            SigmaChoice::TwiceGradient => 2.0 * gradient_magnitude,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.dimensions.iter().any(|&d| d < 2) {
            return bad(format!("dimensions must be at least 2, got {:?}", self.dimensions));
        }
        if self.penalty_configs.is_empty() {
            return bad("no penalty configuration selected".into());
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad(format!("alpha must be positive, got {}", self.alpha));
        }
        if let SigmaChoice::Fixed(s) = self.sigma {
            if !(s > 0.0 && s.is_finite()) {
                return bad(format!("sigma must be positive, got {s}"));
            }
        }
        if self.workers == 0 {
            return bad("workers must be at least 1".into());
        }
        Ok(())
    }
}

/// Outcome of one (problem, penalty configuration) run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub seed: u64,
    pub dim: usize,
    pub config: PenaltyConfig,
    pub grad: f64,
    pub err: f64,
    pub iters: usize,
    pub converged: bool,
}

/// Builds the penalised objective for `penalty`, minimises it from the problem's
/// start point and measures `||U_opt - U_true||`.
pub fn run_sample(
    problem: &BenchmarkProblem<f64>,
    penalty: PenaltyConfig,
    config: &ExperimentConfig,
) -> Result<ExperimentRecord, HarnessError> {
    let sigma = config.sigma_for(penalty, problem.gradient_magnitude);
    let cp = problem.constrained(penalty.family(), config.alpha, sigma, penalty.combinator())?;
    let eval = constrained_objective(&cp)?;
    let (point, iters, converged) = match bfgs_minimize(eval, &problem.start, &config.optimizer) {
        Ok(r) => (r.point, r.iterations, r.converged),
        Err(_) => (problem.start.clone(), 0, false),
    };
    Ok(ExperimentRecord {
        seed: problem.seed,
        dim: problem.dim,
        config: penalty,
        grad: problem.gradient_magnitude,
        err: problem.solution_error(&point),
        iters,
        converged,
    })
}

/// Runs `job` for every index, in order, on `workers` threads.
pub(crate) fn parallel_map<R, F>(count: usize, workers: usize, job: F) -> Result<Vec<R>, HarnessError>
where
    R: Send,
    F: Fn(usize) -> Result<R, HarnessError> + Sync + Send,
{
    if workers <= 1 {
        return (0..count).map(job).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    pool.install(|| (0..count).into_par_iter().map(job).collect())
}

/// All records of a batch, ordered by dimension, sample, then configuration.
pub fn run_records(config: &ExperimentConfig) -> Result<Vec<ExperimentRecord>, HarnessError> {
    config.validate()?;
    let jobs: Vec<(usize, u64)> = config
        .dimensions
        .iter()
        .flat_map(|&d| (0..config.samples as u64).map(move |i| (d, i)))
        .collect();
    let per_job = parallel_map(jobs.len(), config.workers, |j| {
        let (dim, i) = jobs[j];
        let seed = config.base_seed.wrapping_add(i);
        let problem = make_problem::<f64>(config.problem_family, dim, seed, &config.generator)?;
        config.penalty_configs.iter().map(|&pc| run_sample(&problem, pc, config)).collect::<Result<Vec<_>, _>>()
    })?;
    Ok(per_job.into_iter().flatten().collect())
}

/// Median with the mean of the two middle values for even counts; `NaN` when empty.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryCell {
    pub config: PenaltyConfig,
    pub median_err: f64,
    pub median_iters: f64,
    /// Runs that stopped without meeting the gradient tolerance. They are still
    /// included in both medians.
    pub failed: usize,
    pub samples: usize,
}

impl SummaryCell {
    pub fn from_records<'a>(config: PenaltyConfig, records: impl IntoIterator<Item = &'a ExperimentRecord>) -> Self {
        let (mut errs, mut iters, mut failed) = (Vec::new(), Vec::new(), 0);
        for r in records {
            errs.push(r.err);
            iters.push(r.iters as f64);
            failed += usize::from(!r.converged);
        }
        Self { config, median_err: median(&errs), median_iters: median(&iters), failed, samples: errs.len() }
    }
}

/// Table row: per-configuration medians at one dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub problem: ProblemFamily,
    pub dim: usize,
    pub cells: Vec<SummaryCell>,
}

impl SummaryRow {
    pub fn cell(&self, config: PenaltyConfig) -> Option<&SummaryCell> {
        self.cells.iter().find(|c| c.config == config)
    }
}

/// Medians per (dimension, configuration). Order of `records` is irrelevant.
pub fn summarize(
    problem: ProblemFamily,
    dimensions: &[usize],
    configs: &[PenaltyConfig],
    records: &[ExperimentRecord],
) -> Vec<SummaryRow> {
    dimensions
        .iter()
        .filter(|&&d| records.iter().any(|r| r.dim == d))
        .map(|&dim| SummaryRow {
            problem,
            dim,
            cells: configs
                .iter()
                .map(|&pc| SummaryCell::from_records(pc, records.iter().filter(|r| r.dim == dim && r.config == pc)))
                .collect(),
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteOutput {
    pub records: Vec<ExperimentRecord>,
    pub summary: Vec<SummaryRow>,
}

pub fn run_suite(config: &ExperimentConfig) -> Result<SuiteOutput, HarnessError> {
    let records = run_records(config)?;
    let summary = summarize(config.problem_family, &config.dimensions, &config.penalty_configs, &records);
    Ok(SuiteOutput { records, summary })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn medians() {
        assert!(median(&[]).is_nan());
        assert_eq!(median(&[3.0]), 3.0);
        assert_eq!(median(&[4.0, 1.0, 3.0]), 3.0);
        assert_eq!(median(&[122.0, 123.0, 1.0, 500.0]), 122.5);
    }

    #[test]
    fn config_names() {
        for c in PenaltyConfig::ALL {
            assert_eq!(c.name().parse::<PenaltyConfig>().unwrap(), c);
        }
        assert!("huber".parse::<PenaltyConfig>().is_err());
        assert_eq!(PenaltyConfig::CourantBeltramiSum.default_sigma(), 1e4);
        assert_eq!(PenaltyConfig::SoftplusNorm.default_sigma(), 15.0);
    }

    #[test]
    fn sigma_choice() {
        let mut c = ExperimentConfig::default();
        assert_eq!(c.sigma_for(PenaltyConfig::AlgebraicSum, 2.0), 15.0);
        c.sigma = SigmaChoice::TwiceGradient;
        assert_eq!(c.sigma_for(PenaltyConfig::AlgebraicSum, 2.0), 4.0);
        c.sigma = SigmaChoice::Fixed(7.0);
        assert_eq!(c.sigma_for(PenaltyConfig::CourantBeltramiSum, 2.0), 7.0);
    }

    #[test]
    fn invalid_configs() {
        let base = ExperimentConfig::default();
        let cases = [
            ExperimentConfig { dimensions: vec![1], ..base.clone() },
            ExperimentConfig { penalty_configs: vec![], ..base.clone() },
            ExperimentConfig { alpha: 0.0, ..base.clone() },
            ExperimentConfig { sigma: SigmaChoice::Fixed(-1.0), ..base.clone() },
            ExperimentConfig { workers: 0, ..base.clone() },
        ];
        for c in cases {
            assert!(matches!(run_suite(&c), Err(HarnessError::Config(_))), "{c:?}");
        }
    }

    #[test]
    fn zero_samples() {
        let c = ExperimentConfig { samples: 0, ..ExperimentConfig::default() };
        let out = run_suite(&c).unwrap();
        assert!(out.records.is_empty());
        assert!(out.summary.is_empty());
    }

    #[test]
    fn summary_ignores_record_order() {
        let c = ExperimentConfig {
            problem_family: ProblemFamily::Hypersphere,
            dimensions: vec![2, 3],
            samples: 5,
            ..ExperimentConfig::default()
        };
        let mut records = run_records(&c).unwrap();
        let a = summarize(c.problem_family, &c.dimensions, &c.penalty_configs, &records);
        records.reverse();
        records.swap(1, 7);
        let b = summarize(c.problem_family, &c.dimensions, &c.penalty_configs, &records);
        assert_eq!(a, b);
        assert_eq!(a[0].cell(PenaltyConfig::SoftplusNorm).unwrap().samples, 5);
    }
}
