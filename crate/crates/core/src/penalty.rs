//! Penalty functions and their combination into a constrained objective.
//!
//! Every penalty `g(x)` here is a function of the signed constraint error
//! `x = v(U) - v_target`. The functions are returned unscaled; the weight `sigma`
//! is applied when several penalties are combined.
//!
//! | family            | `<` (LessThan)              | `=` (Equality)            | `>` (GreaterThan)            |
//! |-------------------|-----------------------------|---------------------------|------------------------------|
//! | linear            | `max(0, x)`                 | `abs(x)`                  | `max(0, -x)`                 |
//! | Courant-Beltrami  | `max(0, x)^2`               | `x^2`                     | `max(0, -x)^2`               |
//! | algebraic         | `(sqrt(4a^2 + x^2) + x)/2`  | `sqrt(4a^2 + x^2)`        | `(sqrt(4a^2 + x^2) - x)/2`   |
//! | softplus          | `a log2(1 + 2^(x/a))`       | `2a log2(1 + 2^(x/a)) - x`| `a log2(1 + 2^(-x/a))`       |
//!
//! The derivative of each smooth penalty is a sigmoid saturating at the
//! `(beta_minus, beta_plus)` pair of its [`ConstraintKind`].

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::scalar::{dot, Scalar};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PenaltyError {
    #[error("hardness alpha must be positive and finite, got {0}")]
    NonPositiveAlpha(f64),
    #[error("penalty weight sigma must be positive and finite, got {0}")]
    NonPositiveSigma(f64),
    #[error("sigmoid is only defined for the algebraic and softplus families, not {0}")]
    NotSmooth(PenaltyFamily),
}

/// Direction of a scalar constraint `v(U) ? v_target`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConstraintKind {
    LessThan,
    Equality,
    GreaterThan,
}

impl ConstraintKind {
    pub const ALL: [ConstraintKind; 3] = [Self::LessThan, Self::Equality, Self::GreaterThan];

    /// Saturation values `(beta_minus, beta_plus)` of the kind's sigmoid.
    pub fn saturation<T: Scalar>(self) -> (T, T) {
        match self {
            Self::LessThan => (T::zero(), T::one()),
            Self::Equality => (-T::one(), T::one()),
            Self::GreaterThan => (-T::one(), T::zero()),
        }
    }

    pub fn is_inequality(self) -> bool {
        self != Self::Equality
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PenaltyFamily {
    Linear,
    CourantBeltrami,
    Algebraic,
    Softplus,
}

impl PenaltyFamily {
    /// Families parametrised by the hardness `alpha`.
    pub fn is_smooth(self) -> bool {
        matches!(self, Self::Algebraic | Self::Softplus)
    }
}

impl fmt::Display for PenaltyFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Self::Linear => "linear",
            Self::CourantBeltrami => "courant-beltrami",
            Self::Algebraic => "algebraic",
            Self::Softplus => "softplus",
        };
        f.write_str(name)
    }
}

/// Penalty configuration of one constraint.
///
/// `alpha` is ignored by the linear and Courant-Beltrami families.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct PenaltySpec<T> {
    pub family: PenaltyFamily,
    pub kind: ConstraintKind,
    pub alpha: T,
    pub sigma: T,
}

impl<T: Scalar> PenaltySpec<T> {
    pub fn new(
        family: PenaltyFamily,
        kind: ConstraintKind,
        alpha: T,
        sigma: T,
    ) -> Result<Self, PenaltyError> {
        let spec = Self { family, kind, alpha, sigma };
        spec.validate()?;
        Ok(spec)
    }

    pub fn linear(kind: ConstraintKind, sigma: T) -> Result<Self, PenaltyError> {
        Self::new(PenaltyFamily::Linear, kind, T::one(), sigma)
    }

    pub fn courant_beltrami(kind: ConstraintKind, sigma: T) -> Result<Self, PenaltyError> {
        Self::new(PenaltyFamily::CourantBeltrami, kind, T::one(), sigma)
    }

    pub fn algebraic(kind: ConstraintKind, alpha: T, sigma: T) -> Result<Self, PenaltyError> {
        Self::new(PenaltyFamily::Algebraic, kind, alpha, sigma)
    }

    pub fn softplus(kind: ConstraintKind, alpha: T, sigma: T) -> Result<Self, PenaltyError> {
        Self::new(PenaltyFamily::Softplus, kind, alpha, sigma)
    }

    pub fn validate(&self) -> Result<(), PenaltyError> {
        if self.family.is_smooth() {
            check_alpha(self.alpha)?;
        }
        if !(self.sigma > T::zero() && self.sigma.is_finite()) {
            return Err(PenaltyError::NonPositiveSigma(self.sigma.to_f64_lossy()));
        }
        Ok(())
    }
}

fn check_alpha<T: Scalar>(alpha: T) -> Result<(), PenaltyError> {
    if alpha > T::zero() && alpha.is_finite() {
        Ok(())
    } else {
        Err(PenaltyError::NonPositiveAlpha(alpha.to_f64_lossy()))
    }
}

/// Sigmoid whose integral is the smooth penalty of `family`.
///
/// Softplus uses the base-2 logistic `(b+ - b-) / (1 + 2^(-x/alpha)) + b-`; algebraic
/// uses `x (b+ - b-) / (2 sqrt(4 alpha^2 + x^2)) + (b- + b+) / 2`.
pub fn sigmoid<T: Scalar>(
    x: T,
    alpha: T,
    kind: ConstraintKind,
    family: PenaltyFamily,
) -> Result<T, PenaltyError> {
    if !family.is_smooth() {
        return Err(PenaltyError::NotSmooth(family));
    }
    check_alpha(alpha)?;
    Ok(sigmoid_unchecked(x, alpha, kind, family))
}

/// Unscaled penalty `g(x, alpha)`.
pub fn penalty<T: Scalar>(x: T, spec: &PenaltySpec<T>) -> Result<T, PenaltyError> {
    if spec.family.is_smooth() {
        check_alpha(spec.alpha)?;
    }
    Ok(penalty_unchecked(x, spec.family, spec.kind, spec.alpha))
}

/// Exact derivative `dg/dx`. At the kink of the linear family the kind's sigmoid
/// midpoint is returned.
pub fn penalty_derivative<T: Scalar>(x: T, spec: &PenaltySpec<T>) -> Result<T, PenaltyError> {
    if spec.family.is_smooth() {
        check_alpha(spec.alpha)?;
    }
    Ok(derivative_unchecked(x, spec.family, spec.kind, spec.alpha))
}

#[inline]
pub(crate) fn sigmoid_unchecked<T: Scalar>(
    x: T,
    alpha: T,
    kind: ConstraintKind,
    family: PenaltyFamily,
) -> T {
    match family {
        PenaltyFamily::Softplus => logistic(x, alpha, kind),
        _ => algebraic_sigmoid(x, alpha, kind),
    }
}

#[inline]
pub(crate) fn penalty_unchecked<T: Scalar>(
    x: T,
    family: PenaltyFamily,
    kind: ConstraintKind,
    alpha: T,
) -> T {
    use ConstraintKind::*;
    let zero = T::zero();
    match family {
        PenaltyFamily::Linear => match kind {
            LessThan => x.max(zero),
            Equality => x.abs(),
            GreaterThan => (-x).max(zero),
        },
        PenaltyFamily::CourantBeltrami => {
            let m = match kind {
                LessThan => x.max(zero),
                Equality => x,
                GreaterThan => (-x).max(zero),
            };
            m * m
        }
        PenaltyFamily::Algebraic => algebraic_penalty(x, alpha, kind),
        PenaltyFamily::Softplus => softplus_penalty(x, alpha, kind),
    }
}

#[inline]
pub(crate) fn derivative_unchecked<T: Scalar>(
    x: T,
    family: PenaltyFamily,
    kind: ConstraintKind,
    alpha: T,
) -> T {
    use ConstraintKind::*;
    let zero = T::zero();
    let two = T::lit(2.0);
    match family {
        PenaltyFamily::Linear => {
            let (lo, hi) = kind.saturation::<T>();
            if x > zero {
                hi
            } else if x < zero {
                lo
            } else {
                (lo + hi) / two
            }
        }
        PenaltyFamily::CourantBeltrami => match kind {
            LessThan => two * x.max(zero),
            Equality => two * x,
            GreaterThan => -two * (-x).max(zero),
        },
        _ => sigmoid_unchecked(x, alpha, kind, family),
    }
}

#[inline]
fn mask<T: Scalar>() -> T {
    T::lit(T::SOFTPLUS_MASK)
}

fn logistic<T: Scalar>(x: T, alpha: T, kind: ConstraintKind) -> T {
    let (lo, hi) = kind.saturation::<T>();
    let t = x / alpha;
    let m = mask::<T>();
    if t > m {
        hi
    } else if t < -m {
        lo
    } else {
        (hi - lo) / (T::one() + (-t).exp2()) + lo
    }
}

/// `alpha * log2(1 + 2^t)` for `|t|` within the mask.
#[inline]
fn softplus_base2<T: Scalar>(t: T, alpha: T) -> T {
    alpha * t.exp2().ln_1p() * T::LOG2_E()
}

fn softplus_penalty<T: Scalar>(x: T, alpha: T, kind: ConstraintKind) -> T {
    let t = x / alpha;
    let m = mask::<T>();
    if t.abs() > m || !t.is_finite() {
        return penalty_unchecked(x, PenaltyFamily::Linear, kind, alpha);
    }
    match kind {
        ConstraintKind::LessThan => softplus_base2(t, alpha),
        ConstraintKind::Equality => T::lit(2.0) * softplus_base2(t, alpha) - x,
        ConstraintKind::GreaterThan => softplus_base2(-t, alpha),
    }
}

fn algebraic_penalty<T: Scalar>(x: T, alpha: T, kind: ConstraintKind) -> T {
    let two = T::lit(2.0);
    let h = (two * alpha).hypot(x);
    let a2 = two * alpha * alpha;
    match kind {
        // (h + x) / 2, rationalised on the side where h and x nearly cancel.
        ConstraintKind::LessThan => {
            if x < T::zero() {
                a2 / (h - x)
            } else {
                h / two + x / two
            }
        }
        ConstraintKind::Equality => h,
        ConstraintKind::GreaterThan => {
            if x > T::zero() {
                a2 / (h + x)
            } else {
                h / two - x / two
            }
        }
    }
}

fn algebraic_sigmoid<T: Scalar>(x: T, alpha: T, kind: ConstraintKind) -> T {
    let two = T::lit(2.0);
    let h = (two * alpha).hypot(x);
    if !h.is_finite() {
        let (lo, hi) = kind.saturation::<T>();
        return if x > T::zero() { hi } else { lo };
    }
    let a2 = two * alpha * alpha;
    match kind {
        ConstraintKind::LessThan => {
            if x < T::zero() {
                a2 / (h * (h - x))
            } else {
                (T::one() + x / h) / two
            }
        }
        ConstraintKind::Equality => x / h,
        ConstraintKind::GreaterThan => {
            if x > T::zero() {
                -a2 / (h * (h + x))
            } else {
                (x / h - T::one()) / two
            }
        }
    }
}

/// How weighted penalties of several constraints are merged.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Combinator {
    /// `sum(sigma_i * g_i)`
    Sum,
    /// `sqrt(sum((sigma_i * g_i)^2))`
    EuclideanNorm,
}

/// Running accumulator for [`combine`].
#[derive(Clone, Copy, Debug)]
pub(crate) struct Accumulator<T> {
    combinator: Combinator,
    acc: T,
    scale: T,
}

impl<T: Scalar> Accumulator<T> {
    pub(crate) fn new(combinator: Combinator) -> Self {
        Self { combinator, acc: T::zero(), scale: T::zero() }
    }

    #[inline]
    pub(crate) fn push(&mut self, weighted: T) {
        match self.combinator {
            Combinator::Sum => self.acc += weighted,
            // Scaled sum of squares, as in LAPACK's dnrm2.
            Combinator::EuclideanNorm => {
                let a = weighted.abs();
                if a == T::zero() {
                    return;
                }
                if a > self.scale {
                    let r = self.scale / a;
                    self.acc = T::one() + self.acc * r * r;
                    self.scale = a;
                } else {
                    let r = a / self.scale;
                    self.acc += r * r;
                }
            }
        }
    }

    #[inline]
    pub(crate) fn finish(self) -> T {
        match self.combinator {
            Combinator::Sum => self.acc,
            Combinator::EuclideanNorm => self.scale * self.acc.sqrt(),
        }
    }
}

/// Combines `(g_i, sigma_i)` pairs. An empty list gives zero.
pub fn combine<T: Scalar>(values: &[(T, T)], combinator: Combinator) -> T {
    let mut acc = Accumulator::new(combinator);
    for &(g, sigma) in values {
        acc.push(sigma * g);
    }
    acc.finish()
}

/// Shared scalar function of the decision vector.
pub type ScalarFn<T> = Arc<dyn Fn(&[T]) -> T + Send + Sync>;

/// Scalar constraint `v(U) ? target` with its penalty configuration.
#[derive(Clone)]
pub struct Constraint<T> {
    pub value_fn: ScalarFn<T>,
    pub target: T,
    pub spec: PenaltySpec<T>,
}

impl<T: Scalar> Constraint<T> {
    pub fn new<F>(value_fn: F, target: T, spec: PenaltySpec<T>) -> Self
    where
        F: Fn(&[T]) -> T + Send + Sync + 'static,
    {
        Self { value_fn: Arc::new(value_fn), target, spec }
    }

    /// Linear constraint `normal . U ? target`.
    pub fn linear(normal: Vec<T>, target: T, spec: PenaltySpec<T>) -> Self {
        Self::new(move |u: &[T]| dot(&normal, u), target, spec)
    }

    /// Constraint error `x = v(U) - v_target`.
    #[inline]
    pub fn error(&self, u: &[T]) -> T {
        (self.value_fn)(u) - self.target
    }

    /// Unweighted penalty at `u`.
    #[inline]
    pub fn penalty(&self, u: &[T]) -> T {
        let s = &self.spec;
        penalty_unchecked(self.error(u), s.family, s.kind, s.alpha)
    }
}

impl<T: fmt::Debug> fmt::Debug for Constraint<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Constraint")
            .field("target", &self.target)
            .field("spec", &self.spec)
            .finish_non_exhaustive()
    }
}

/// Objective plus penalised constraints.
#[derive(Clone)]
pub struct ConstrainedProblem<T> {
    pub objective: ScalarFn<T>,
    /// Gradient `c` when the objective is `c . U`.
    pub gradient_vector: Option<Vec<T>>,
    pub constraints: Vec<Constraint<T>>,
    pub combinator: Combinator,
    pub analytic_optimum: Option<Vec<T>>,
}

impl<T: Scalar> ConstrainedProblem<T> {
    pub fn new<F>(objective: F, constraints: Vec<Constraint<T>>, combinator: Combinator) -> Self
    where
        F: Fn(&[T]) -> T + Send + Sync + 'static,
    {
        Self {
            objective: Arc::new(objective),
            gradient_vector: None,
            constraints,
            combinator,
            analytic_optimum: None,
        }
    }

    /// Problem with linear objective `c . U`.
    pub fn linear(c: Vec<T>, constraints: Vec<Constraint<T>>, combinator: Combinator) -> Self {
        let grad = c.clone();
        let mut p = Self::new(move |u: &[T]| dot(&c, u), constraints, combinator);
        p.gradient_vector = Some(grad);
        p
    }

    pub fn with_optimum(mut self, optimum: Vec<T>) -> Self {
        self.analytic_optimum = Some(optimum);
        self
    }

    pub fn validate(&self) -> Result<(), PenaltyError> {
        self.constraints.iter().try_for_each(|c| c.spec.validate())
    }

    /// Combined penalty `P(U)`.
    pub fn penalty(&self, u: &[T]) -> T {
        let mut acc = Accumulator::new(self.combinator);
        for c in &self.constraints {
            acc.push(c.spec.sigma * c.penalty(u));
        }
        acc.finish()
    }

    /// `O(U) + P(U)`.
    #[inline]
    pub fn evaluate(&self, u: &[T]) -> T {
        (self.objective)(u) + self.penalty(u)
    }
}

impl<T: fmt::Debug> fmt::Debug for ConstrainedProblem<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConstrainedProblem")
            .field("gradient_vector", &self.gradient_vector)
            .field("constraints", &self.constraints)
            .field("combinator", &self.combinator)
            .field("analytic_optimum", &self.analytic_optimum)
            .finish_non_exhaustive()
    }
}

/// Validates every penalty spec once and returns the evaluator `U -> O(U) + P(U)`.
pub fn constrained_objective<T: Scalar>(
    problem: &ConstrainedProblem<T>,
) -> Result<impl Fn(&[T]) -> T + Send + Sync + '_, PenaltyError> {
    problem.validate()?;
    Ok(move |u: &[T]| problem.evaluate(u))
}
