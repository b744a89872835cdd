use serde::Serialize;

use super::{HarnessError, PenaltyConfig};
use crate::optimizer::{bfgs_minimize_observed, OptimOptions};
use crate::penalty::{constrained_objective, ConstrainedProblem, Constraint, ConstraintKind, PenaltySpec};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TracePoint {
    pub iter: usize,
    pub u1: f64,
    pub u2: f64,
    pub objective: f64,
}

/// `O(U) = 0.2 U1 + 0.2 U2` subject to `U1 > 0` and `U2 > U1`; optimum at the origin.
pub fn corner_problem(config: PenaltyConfig, alpha: f64, sigma: f64) -> Result<ConstrainedProblem<f64>, HarnessError> {
    let spec = PenaltySpec::new(config.family(), ConstraintKind::GreaterThan, alpha, sigma)?;
    let constraints = vec![
        Constraint::new(|u: &[f64]| u[0], 0.0, spec),
        Constraint::new(|u: &[f64]| u[1] - u[0], 0.0, spec),
    ];
    Ok(ConstrainedProblem::linear(vec![0.2, 0.2], constraints, config.combinator()).with_optimum(vec![0.0, 0.0]))
}

/// Every accepted iterate of BFGS on [`corner_problem`], starting at `start`.
pub fn convergence_trace(
    config: PenaltyConfig,
    alpha: f64,
    sigma: f64,
    start: [f64; 2],
    opts: &OptimOptions<f64>,
) -> Result<Vec<TracePoint>, HarnessError> {
    let problem = corner_problem(config, alpha, sigma)?;
    let eval = constrained_objective(&problem)?;
    let mut path = Vec::new();
    bfgs_minimize_observed(eval, &start, opts, |it| {
        path.push(TracePoint { iter: it.iteration, u1: it.point[0], u2: it.point[1], objective: it.objective })
    })
    .map_err(|e| HarnessError::Config(e.to_string()))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_starts_at_start_and_decreases() {
        let path =
            convergence_trace(PenaltyConfig::AlgebraicNorm, 0.1, 1.0, [1.0, 2.0], &OptimOptions::default()).unwrap();
        assert_eq!((path[0].u1, path[0].u2), (1.0, 2.0));
        assert!(path.windows(2).all(|w| w[1].objective <= w[0].objective));
        assert!(path.windows(2).all(|w| w[1].iter == w[0].iter + 1));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(convergence_trace(PenaltyConfig::SoftplusNorm, 0.0, 1.0, [1.0, 2.0], &OptimOptions::default()).is_err());
        assert!(corner_problem(PenaltyConfig::CourantBeltramiSum, 0.1, -1.0).is_err());
    }
}
