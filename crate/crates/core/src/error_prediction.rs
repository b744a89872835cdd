//! Predicted solution error of a single active constraint.
//!
//! Near the optimum an active constraint balances the local objective gradient
//! `grad` against the scaled penalty slope. The converged offset `x*` of the
//! constraint error is the stationary point of the one-dimensional model
//!
//! * `LessThan`, `Equality`: `sigma * g(x) - grad * x`
//! * `GreaterThan`: `sigma * g(x) + grad * x`
//!
//! [`predicted_error`] gives `|x*|` in closed form and [`stationarity_oracle`] finds
//! the signed `x*` by bisection on the model's derivative.

use crate::penalty::{derivative_unchecked, ConstraintKind, PenaltyFamily};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PredictionError {
    #[error("constraint ineffective: gradient {grad} is not below sigma {sigma}")]
    Ineffective { grad: f64, sigma: f64 },
    #[error("prediction unbounded at zero gradient for an inequality constraint")]
    Unbounded,
    #[error("no error model for the {0} family")]
    UnsupportedFamily(PenaltyFamily),
    #[error("invalid {name}: {value}")]
    InvalidParameter { name: &'static str, value: f64 },
}

/// One-constraint error model query.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct ErrorQuery<T> {
    pub family: PenaltyFamily,
    pub kind: ConstraintKind,
    /// Local objective-gradient magnitude along the constraint normal.
    pub grad: T,
    pub sigma: T,
    /// Ignored for Courant-Beltrami.
    pub alpha: T,
}

impl<T: Scalar> ErrorQuery<T> {
    pub fn new(family: PenaltyFamily, kind: ConstraintKind, grad: T, sigma: T, alpha: T) -> Self {
        Self { family, kind, grad, sigma, alpha }
    }

    fn validate(&self) -> Result<(), PredictionError> {
        let invalid = |name, value: T| PredictionError::InvalidParameter {
            name,
            value: value.to_f64_lossy(),
        };
        if self.family == PenaltyFamily::Linear {
            return Err(PredictionError::UnsupportedFamily(self.family));
        }
        if !(self.grad >= T::zero() && self.grad.is_finite()) {
            return Err(invalid("grad", self.grad));
        }
        if !(self.sigma > T::zero() && self.sigma.is_finite()) {
            return Err(invalid("sigma", self.sigma));
        }
        if self.family.is_smooth() && !(self.alpha > T::zero() && self.alpha.is_finite()) {
            return Err(invalid("alpha", self.alpha));
        }
        Ok(())
    }

    fn ineffective(&self) -> PredictionError {
        PredictionError::Ineffective {
            grad: self.grad.to_f64_lossy(),
            sigma: self.sigma.to_f64_lossy(),
        }
    }
}

/// Closed-form `|x*|`.
///
/// * Courant-Beltrami: `grad / (2 sigma)`
/// * algebraic `<`/`>`: `|alpha sqrt(1 / (grad (sigma - grad))) (sigma - 2 grad)|`
/// * algebraic `=`: `|2 grad alpha sqrt(1 / ((sigma - grad)(grad + sigma)))|`
/// * softplus `<`/`>`: `|alpha log2(grad / (sigma - grad))|`
/// * softplus `=`: `|alpha log2((grad + sigma) / (sigma - grad))|`
pub fn predicted_error<T: Scalar>(q: &ErrorQuery<T>) -> Result<T, PredictionError> {
    q.validate()?;
    let ErrorQuery { family, kind, grad, sigma, alpha } = *q;
    let two = T::lit(2.0);
    if family == PenaltyFamily::CourantBeltrami {
        return Ok((grad / (two * sigma)).abs());
    }
    if grad >= sigma {
        return Err(q.ineffective());
    }
    if kind.is_inequality() && grad == T::zero() {
        return Err(PredictionError::Unbounded);
    }
    let err = match (family, kind.is_inequality()) {
        (PenaltyFamily::Algebraic, true) => {
            alpha * (T::one() / (grad * (sigma - grad))).sqrt() * (sigma - two * grad)
        }
        (PenaltyFamily::Algebraic, false) => {
            two * grad * alpha * (T::one() / ((sigma - grad) * (grad + sigma))).sqrt()
        }
        (_, true) => alpha * (grad / (sigma - grad)).log2(),
        (_, false) => alpha * ((grad + sigma) / (sigma - grad)).log2(),
    };
    Ok(err.abs())
}

const ORACLE_TOLERANCE: f64 = 1e-12;
const ORACLE_MAX_BISECTIONS: usize = 200;
const ORACLE_MAX_EXPANSIONS: usize = 200;

/// Signed minimiser `x*` of the one-constraint model, located numerically.
///
/// The model derivative is monotone for every supported family, so the root is
/// bracketed by doubling an interval around zero and refined by bisection to an
/// absolute width of `1e-12` (at most 200 halvings).
pub fn stationarity_oracle<T: Scalar>(q: &ErrorQuery<T>) -> Result<T, PredictionError> {
    q.validate()?;
    let ErrorQuery { family, kind, grad, sigma, alpha } = *q;
    let slope = |x: T| {
        let dg = sigma * derivative_unchecked(x, family, kind, alpha);
        match kind {
            ConstraintKind::GreaterThan => dg + grad,
            _ => dg - grad,
        }
    };

    let zero = T::zero();
    let mut width = if family.is_smooth() { alpha } else { T::one() };
    width = width.max(grad / sigma).max(T::min_positive_value());
    let mut found = false;
    for _ in 0..ORACLE_MAX_EXPANSIONS {
        if slope(-width) < zero && slope(width) > zero {
            found = true;
            break;
        }
        width *= T::lit(2.0);
        if !width.is_finite() {
            break;
        }
    }
    if !found {
        return Err(q.ineffective());
    }

    let tol = T::lit(ORACLE_TOLERANCE);
    let (mut lo, mut hi) = (-width, width);
    for _ in 0..ORACLE_MAX_BISECTIONS {
        if hi - lo <= tol {
            break;
        }
        let mid = lo + (hi - lo) / T::lit(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        let s = slope(mid);
        if s < zero {
            lo = mid;
        } else if s > zero {
            hi = mid;
        } else {
            return Ok(mid);
        }
    }
    Ok(lo + (hi - lo) / T::lit(2.0))
}

/// One row of a prediction grid.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct PredictionRow {
    pub family: String,
    pub kind: String,
    pub ratio: f64,
    pub alpha: f64,
    pub sigma: f64,
    pub grad: f64,
    pub predicted: f64,
    pub oracle: f64,
}

/// Tabulates [`predicted_error`] and [`stationarity_oracle`] for every family and
/// kind over `grad = ratio * sigma`.
pub fn prediction_grid(sigma: f64, alphas: &[f64], ratios: &[f64]) -> Vec<PredictionRow> {
    let mut rows = Vec::new();
    for family in [PenaltyFamily::CourantBeltrami, PenaltyFamily::Algebraic, PenaltyFamily::Softplus] {
        for kind in ConstraintKind::ALL {
            for &alpha in alphas {
                for &ratio in ratios {
                    let grad = ratio * sigma;
                    let q = ErrorQuery::new(family, kind, grad, sigma, alpha);
                    rows.push(PredictionRow {
                        family: family.to_string(),
                        kind: format!("{kind:?}"),
                        ratio,
                        alpha,
                        sigma,
                        grad,
                        predicted: predicted_error(&q).unwrap_or(f64::NAN),
                        oracle: stationarity_oracle(&q).unwrap_or(f64::NAN),
                    });
                }
            }
        }
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ConstraintKind::*;
    use PenaltyFamily::*;

    fn q(family: PenaltyFamily, kind: ConstraintKind, grad: f64, sigma: f64, alpha: f64) -> ErrorQuery<f64> {
        ErrorQuery::new(family, kind, grad, sigma, alpha)
    }

    #[test]
    fn zero_error_at_twice_gradient() {
        for alpha in [1e-5, 0.1, 2.0] {
            for kind in [LessThan, GreaterThan] {
                assert_eq!(predicted_error(&q(Softplus, kind, 1.5, 3.0, alpha)).unwrap(), 0.0);
                assert_eq!(predicted_error(&q(Algebraic, kind, 1.5, 3.0, alpha)).unwrap(), 0.0);
                let x = stationarity_oracle(&q(Softplus, kind, 1.5, 3.0, alpha)).unwrap();
                assert!(x.abs() < 1e-12, "{x}");
            }
        }
    }

    #[test]
    fn courant_beltrami_examples() {
        assert_relative_eq!(
            predicted_error(&q(CourantBeltrami, LessThan, 0.2, 1e4, 1.0)).unwrap(),
            1e-5,
            max_relative = 1e-15
        );
        let x = stationarity_oracle(&q(CourantBeltrami, LessThan, 1.0, 1.0, 1.0)).unwrap();
        assert_relative_eq!(x, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn softplus_equality_example() {
        // 3e-5 * log2(16 / 14)
        let expected = 3e-5 * (16.0f64 / 14.0).log2();
        let p = predicted_error(&q(Softplus, Equality, 1.0, 15.0, 3e-5)).unwrap();
        assert_relative_eq!(p, expected, max_relative = 1e-14);
        assert_relative_eq!(p, 5.78e-6, max_relative = 1e-3);
        let x = stationarity_oracle(&q(Softplus, Equality, 1.0, 15.0, 3e-5)).unwrap();
        assert!((x.abs() - p).abs() <= 1e-10f64.max(1e-6 * p));
    }

    #[test]
    fn errors() {
        assert_eq!(
            predicted_error(&q(Softplus, LessThan, 2.0, 2.0, 0.1)),
            Err(PredictionError::Ineffective { grad: 2.0, sigma: 2.0 })
        );
        assert!(matches!(
            stationarity_oracle(&q(Algebraic, LessThan, 3.0, 2.0, 0.1)),
            Err(PredictionError::Ineffective { .. })
        ));
        assert!(matches!(
            stationarity_oracle(&q(Softplus, Equality, 2.0, 2.0, 0.1)),
            Err(PredictionError::Ineffective { .. })
        ));
        assert_eq!(predicted_error(&q(Softplus, LessThan, 0.0, 2.0, 0.1)), Err(PredictionError::Unbounded));
        assert_eq!(predicted_error(&q(Softplus, Equality, 0.0, 2.0, 0.1)), Ok(0.0));
        assert_eq!(
            predicted_error(&q(Linear, LessThan, 1.0, 2.0, 0.1)),
            Err(PredictionError::UnsupportedFamily(Linear))
        );
        assert!(matches!(
            predicted_error(&q(Softplus, LessThan, 1.0, 2.0, 0.0)),
            Err(PredictionError::InvalidParameter { name: "alpha", .. })
        ));
        // C-B keeps working for any positive gradient
        assert!(predicted_error(&q(CourantBeltrami, LessThan, 5.0, 1.0, 0.0)).is_ok());
    }

    #[test]
    fn oracle_sides() {
        // Weak gradient: the minimiser sits on the feasible side.
        let x = stationarity_oracle(&q(Algebraic, LessThan, 1.0, 15.0, 1e-3)).unwrap();
        assert!(x < 0.0);
        let x = stationarity_oracle(&q(Algebraic, LessThan, 10.0, 15.0, 1e-3)).unwrap();
        assert!(x > 0.0);
        let x = stationarity_oracle(&q(Softplus, GreaterThan, 10.0, 15.0, 1e-3)).unwrap();
        assert!(x < 0.0);
        let x = stationarity_oracle(&q(CourantBeltrami, LessThan, 1.0, 15.0, 1e-3)).unwrap();
        assert!(x > 0.0);
    }

    #[test]
    fn linear_in_alpha() {
        for family in [Algebraic, Softplus] {
            for kind in ConstraintKind::ALL {
                let base = predicted_error(&q(family, kind, 3.0, 15.0, 1e-4)).unwrap();
                let scaled = predicted_error(&q(family, kind, 3.0, 15.0, 7e-4)).unwrap();
                assert_relative_eq!(scaled, 7.0 * base, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn courant_beltrami_scaling() {
        let a = predicted_error(&q(CourantBeltrami, LessThan, 1.0, 10.0, 1e-3)).unwrap();
        let b = predicted_error(&q(CourantBeltrami, LessThan, 1.0, 10.0, 0.5)).unwrap();
        let c = predicted_error(&q(CourantBeltrami, LessThan, 1.0, 40.0, 1e-3)).unwrap();
        assert_eq!(a, b);
        assert_relative_eq!(a, 4.0 * c, max_relative = 1e-15);
    }

    #[test]
    fn divergence_at_extremes() {
        let sigma = 1.0;
        let alpha = 1.0;
        let mid_sp = predicted_error(&q(Softplus, LessThan, 0.3, sigma, alpha)).unwrap();
        let mid_alg = predicted_error(&q(Algebraic, LessThan, 0.3, sigma, alpha)).unwrap();
        for ratio in [0.01, 0.99] {
            let sp = predicted_error(&q(Softplus, LessThan, ratio, sigma, alpha)).unwrap();
            let alg = predicted_error(&q(Algebraic, LessThan, ratio, sigma, alpha)).unwrap();
            assert!(sp > mid_sp && alg > mid_alg);
            // log growth stays well below the square-root blow-up
            assert!(sp < alg, "ratio {ratio}: softplus {sp} algebraic {alg}");
            let x_alg = stationarity_oracle(&q(Algebraic, LessThan, ratio, sigma, alpha)).unwrap();
            assert_eq!(x_alg > 0.0, ratio > 0.5);
        }
    }

    #[test]
    fn grid_rows() {
        let rows = prediction_grid(15.0, &[1e-3], &[0.25, 0.5]);
        assert_eq!(rows.len(), 3 * 3 * 2);
        for r in rows {
            assert!((r.predicted - r.oracle.abs()).abs() <= 1e-10f64.max(1e-6 * r.predicted));
        }
    }

    #[test]
    fn f32_oracle() {
        let q32 = ErrorQuery::<f32>::new(Softplus, LessThan, 3.0, 15.0, 1e-2);
        let p = predicted_error(&q32).unwrap();
        let x = stationarity_oracle(&q32).unwrap();
        assert!((p - x.abs()).abs() < 1e-5 * p.max(1.0));
    }
}
