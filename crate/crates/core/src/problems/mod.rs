//! Seeded benchmark problems with analytically known optima.
//!
//! Two families share the same random linear objective `c . U`:
//!
//! * sheared hyperplanes: the hypercube `[-1, 1]^n` mapped through `floor(n/2)`
//!   random unit-determinant shears. The optimum is the image of the cube vertex
//!   opposing the pulled-back gradient, with exactly `n` active faces.
//! * hypersphere: the single constraint `||U|| - r <= 0`, optimum `-r c / ||c||`.
//!
//! Everything is a pure function of `(n, seed)` and the [`GeneratorOptions`].

mod file;
mod hyperplanes;
mod lp_oracle;

pub use file::{parse_problem_file, write_problem_file};
pub use hyperplanes::{LinearConstraintSet, Shear};
pub use lp_oracle::lp_vertex_oracle;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::penalty::{
    Combinator, ConstrainedProblem, Constraint, ConstraintKind, PenaltyError, PenaltyFamily, PenaltySpec,
};
use crate::rng::{stream, SplitMix64};
use crate::scalar::{norm2, Scalar};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProblemError {
    #[error("dimension must be at least {min}, got {got}")]
    Dimension { min: usize, got: usize },
    #[error("vertex enumeration supports at most {max} dimensions, got {got}")]
    TooLarge { max: usize, got: usize },
    #[error("gradient has {got} entries, expected {expected}")]
    GradientLength { expected: usize, got: usize },
    #[error("no feasible vertex found")]
    NoFeasibleVertex,
    #[error("problem file line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProblemFamily {
    ShearedHyperplanes,
    Hypersphere,
}

impl ProblemFamily {
    pub fn name(self) -> &'static str {
        match self {
            Self::ShearedHyperplanes => "hyperplanes",
            Self::Hypersphere => "hypersphere",
        }
    }
}

impl fmt::Display for ProblemFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProblemFamily {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "hyperplanes" => Ok(Self::ShearedHyperplanes),
            "hypersphere" => Ok(Self::Hypersphere),
            other => Err(format!("unknown problem family `{other}` (expected hyperplanes or hypersphere)")),
        }
    }
}

/// How `||c||` is drawn from `gradient_range`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GradientDistribution {
    Uniform,
    LogUniform,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorOptions {
    pub gradient_range: (f64, f64),
    pub gradient_distribution: GradientDistribution,
    /// Start points are uniform on `[-w, w]^n`.
    pub start_half_width: f64,
    /// Shear factors are uniform on `[-s, s]`.
    pub shear_range: f64,
    pub radius: f64,
}

impl Default for GeneratorOptions {
    fn default() -> Self {
        Self {
            gradient_range: (1e-2, 5.0),
            gradient_distribution: GradientDistribution::Uniform,
            start_half_width: 2.0,
            shear_range: 0.5,
            radius: 1.0,
        }
    }
}

/// Random objective gradient and start point.
#[derive(Clone, Debug, PartialEq)]
pub struct ObjectiveSample<T> {
    pub gradient: Vec<T>,
    pub magnitude: T,
    pub start: Vec<T>,
}

pub fn sample_objective<T: Scalar>(n: usize, seed: u64) -> ObjectiveSample<T> {
    sample_objective_with(n, seed, &GeneratorOptions::default())
}

/// Direction uniform on the sphere (normalised Gaussians), magnitude from the
/// configured distribution, start point uniform in the box.
pub fn sample_objective_with<T: Scalar>(n: usize, seed: u64, opts: &GeneratorOptions) -> ObjectiveSample<T> {
    let mut rng = SplitMix64::with_stream(seed, stream::OBJECTIVE);
    let (lo, hi) = opts.gradient_range;
    let magnitude = match opts.gradient_distribution {
        GradientDistribution::Uniform => rng.uniform(lo, hi),
        GradientDistribution::LogUniform => rng.uniform(lo.ln(), hi.ln()).exp(),
    }
    .clamp(lo, hi);
    let mut dir: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
    let len = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
    if len > 0.0 {
        dir.iter_mut().for_each(|v| *v /= len);
    } else if let Some(first) = dir.first_mut() {
        *first = 1.0;
    }
    let w = opts.start_half_width;
    let start = (0..n).map(|_| T::lit(rng.uniform(-w, w))).collect();
    ObjectiveSample {
        gradient: dir.iter().map(|&d| T::lit(d * magnitude)).collect(),
        magnitude: T::lit(magnitude),
        start,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Geometry<T> {
    Hyperplanes(LinearConstraintSet<T>),
    Hypersphere { radius: T },
}

/// Generated problem instance, independent of the penalty configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkProblem<T> {
    pub family: ProblemFamily,
    pub dim: usize,
    pub seed: u64,
    pub geometry: Geometry<T>,
    /// Objective gradient `c`.
    pub gradient: Vec<T>,
    pub gradient_magnitude: T,
    pub start: Vec<T>,
    pub u_true: Vec<T>,
}

impl<T: Scalar> BenchmarkProblem<T> {
    /// Penalised problem with every constraint using the same family and weights.
    pub fn constrained(
        &self,
        family: PenaltyFamily,
        alpha: T,
        sigma: T,
        combinator: Combinator,
    ) -> Result<ConstrainedProblem<T>, PenaltyError> {
        let spec = PenaltySpec::new(family, ConstraintKind::LessThan, alpha, sigma)?;
        let constraints = match &self.geometry {
            Geometry::Hyperplanes(set) => set
                .normals
                .iter()
                .zip(&set.offsets)
                .map(|(a, &b)| Constraint::linear(a.clone(), b, spec))
                .collect(),
            Geometry::Hypersphere { radius } => {
                vec![Constraint::new(|u: &[T]| norm2(u), *radius, spec)]
            }
        };
        Ok(ConstrainedProblem::linear(self.gradient.clone(), constraints, combinator)
            .with_optimum(self.u_true.clone()))
    }

    /// `||u - U_true||`.
    pub fn solution_error(&self, u: &[T]) -> T {
        let diff: Vec<T> = u.iter().zip(&self.u_true).map(|(&a, &b)| a - b).collect();
        norm2(&diff)
    }

    /// Constraint values `v_i(u) - target_i`, feasible when non-positive.
    pub fn constraint_errors(&self, u: &[T]) -> Vec<T> {
        match &self.geometry {
            Geometry::Hyperplanes(set) => set.errors(u),
            Geometry::Hypersphere { radius } => vec![norm2(u) - *radius],
        }
    }

    pub fn active_count(&self, u: &[T], tol: T) -> usize {
        self.constraint_errors(u).iter().filter(|e| e.abs() <= tol).count()
    }
}

fn check_dim(n: usize) -> Result<(), ProblemError> {
    if n < 2 {
        Err(ProblemError::Dimension { min: 2, got: n })
    } else {
        Ok(())
    }
}

pub fn make_sheared_hyperplanes<T: Scalar>(n: usize, seed: u64) -> Result<BenchmarkProblem<T>, ProblemError> {
    make_sheared_hyperplanes_with(n, seed, &GeneratorOptions::default())
}

pub fn make_sheared_hyperplanes_with<T: Scalar>(
    n: usize,
    seed: u64,
    opts: &GeneratorOptions,
) -> Result<BenchmarkProblem<T>, ProblemError> {
    check_dim(n)?;
    let mut rng = SplitMix64::with_stream(seed, stream::SHEAR);
    let shears = (0..n / 2).map(|_| Shear::random(n, opts.shear_range, &mut rng)).collect();
    let set = LinearConstraintSet::sheared_hypercube(n, shears);
    let obj = sample_objective_with::<T>(n, seed, opts);
    let u_true = set.cube_optimum(&obj.gradient)?;
    Ok(BenchmarkProblem {
        family: ProblemFamily::ShearedHyperplanes,
        dim: n,
        seed,
        geometry: Geometry::Hyperplanes(set),
        gradient: obj.gradient,
        gradient_magnitude: obj.magnitude,
        start: obj.start,
        u_true,
    })
}

pub fn make_hypersphere<T: Scalar>(n: usize, seed: u64) -> Result<BenchmarkProblem<T>, ProblemError> {
    make_hypersphere_with(n, seed, &GeneratorOptions::default())
}

pub fn make_hypersphere_with<T: Scalar>(
    n: usize,
    seed: u64,
    opts: &GeneratorOptions,
) -> Result<BenchmarkProblem<T>, ProblemError> {
    check_dim(n)?;
    let obj = sample_objective_with::<T>(n, seed, opts);
    let radius = T::lit(opts.radius);
    let u_true = sphere_optimum(&obj.gradient, radius);
    Ok(BenchmarkProblem {
        family: ProblemFamily::Hypersphere,
        dim: n,
        seed,
        geometry: Geometry::Hypersphere { radius },
        gradient: obj.gradient,
        gradient_magnitude: obj.magnitude,
        start: obj.start,
        u_true,
    })
}

/// `-r c / ||c||`.
pub fn sphere_optimum<T: Scalar>(c: &[T], radius: T) -> Vec<T> {
    let len = norm2(c);
    c.iter().map(|&ci| -radius * ci / len).collect()
}

pub fn make_problem<T: Scalar>(
    family: ProblemFamily,
    n: usize,
    seed: u64,
    opts: &GeneratorOptions,
) -> Result<BenchmarkProblem<T>, ProblemError> {
    match family {
        ProblemFamily::ShearedHyperplanes => make_sheared_hyperplanes_with(n, seed, opts),
        ProblemFamily::Hypersphere => make_hypersphere_with(n, seed, opts),
    }
}
