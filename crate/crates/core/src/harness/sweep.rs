use serde::Serialize;

use super::{run_records, ExperimentConfig, HarnessError, PenaltyConfig, SigmaChoice, SummaryCell};

/// Median outcome of one configuration at one swept parameter value.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepPoint {
    pub param: f64,
    pub dim: usize,
    pub config: PenaltyConfig,
    pub median_err: f64,
    pub median_iters: f64,
    pub failed: usize,
    pub samples: usize,
}

fn log_grid(lo_exp: i32, hi_exp: i32) -> Vec<f64> {
    (lo_exp..=hi_exp).map(|e| 10f64.powi(e)).collect()
}

/// `10, 100, ..., 1e7`.
pub fn default_sigma_grid() -> Vec<f64> {
    log_grid(1, 7)
}

/// `1e-7, 1e-6, ..., 0.1`.
pub fn default_alpha_grid() -> Vec<f64> {
    log_grid(-7, -1)
}

fn sweep(
    base: &ExperimentConfig,
    values: &[f64],
    configs: &[PenaltyConfig],
    apply: impl Fn(&mut ExperimentConfig, f64),
) -> Result<Vec<SweepPoint>, HarnessError> {
    let mut points = Vec::new();
    for &v in values {
        let mut cfg = base.clone();
        cfg.penalty_configs = configs.to_vec();
        apply(&mut cfg, v);
        let records = run_records(&cfg)?;
        for &dim in &cfg.dimensions {
            for &pc in configs {
                let cell = SummaryCell::from_records(pc, records.iter().filter(|r| r.dim == dim && r.config == pc));
                points.push(SweepPoint {
                    param: v,
                    dim,
                    config: pc,
                    median_err: cell.median_err,
                    median_iters: cell.median_iters,
                    failed: cell.failed,
                    samples: cell.samples,
                });
            }
        }
    }
    Ok(points)
}

/// Median error against a fixed sigma applied to every selected configuration.
pub fn sweep_sigma(config: &ExperimentConfig, sigma_values: &[f64]) -> Result<Vec<SweepPoint>, HarnessError> {
    if let Some(bad) = sigma_values.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
        return Err(HarnessError::Config(format!("sigma values must be positive, got {bad}")));
    }
    sweep(config, sigma_values, &config.penalty_configs, |c, s| c.sigma = SigmaChoice::Fixed(s))
}

/// Median error against alpha. Courant-Beltrami has no alpha and is skipped.
pub fn sweep_alpha(config: &ExperimentConfig, alpha_values: &[f64]) -> Result<Vec<SweepPoint>, HarnessError> {
    let configs: Vec<PenaltyConfig> = config
        .penalty_configs
        .iter()
        .copied()
        .filter(|c| c.family().is_smooth())
        .collect();
    if configs.is_empty() {
        return Err(HarnessError::Config("alpha sweep needs at least one smooth penalty configuration".into()));
    }
    if let Some(bad) = alpha_values.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
        return Err(HarnessError::Config(format!("alpha values must be positive, got {bad}")));
    }
    sweep(config, alpha_values, &configs, |c, a| c.alpha = a)
}
