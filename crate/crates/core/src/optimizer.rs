//! Quasi-Newton minimisation with finite-difference gradients.
//!
//! [`bfgs_minimize`] keeps a dense inverse-Hessian approximation, starts it at the
//! identity and moves along `-H g` with a strong-Wolfe line search (bracketing
//! followed by cubic/quadratic interpolation zoom). Gradients are always central
//! differences with a fixed interval, so every gradient costs `2n` evaluations.

use crate::scalar::{dot, max_abs, norm2, Scalar};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OptimError {
    #[error("start point is empty")]
    EmptyStart,
    #[error("objective is not finite at the start point ({value})")]
    NonFiniteStart { value: f64 },
    #[error("objective not finite while differencing coordinate {coordinate} ({value})")]
    NonFiniteGradient { coordinate: usize, value: f64 },
    #[error("invalid option {name}: {value}")]
    InvalidOption { name: &'static str, value: f64 },
}

/// Strong-Wolfe line search parameters.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct WolfeParams<T> {
    pub sufficient_decrease: T,
    pub curvature: T,
    /// Objective evaluations allowed per line search before it is declared failed.
    pub max_trials: usize,
}

impl<T: Scalar> Default for WolfeParams<T> {
    fn default() -> Self {
        Self { sufficient_decrease: T::lit(1e-4), curvature: T::lit(0.9), max_trials: 40 }
    }
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct OptimOptions<T> {
    /// Central-difference interval.
    pub grad_interval: T,
    /// Stop when the max-norm of the gradient is at or below this.
    pub grad_tolerance: T,
    pub max_iterations: usize,
    pub line_search: WolfeParams<T>,
}

impl<T: Scalar> Default for OptimOptions<T> {
    fn default() -> Self {
        Self {
            grad_interval: T::lit(1e-6),
            grad_tolerance: T::lit(1e-5),
            max_iterations: 20_000,
            line_search: WolfeParams::default(),
        }
    }
}

impl<T: Scalar> OptimOptions<T> {
    fn validate(&self) -> Result<(), OptimError> {
        let positive = |name, v: T| {
            if v > T::zero() && v.is_finite() {
                Ok(())
            } else {
                Err(OptimError::InvalidOption { name, value: v.to_f64_lossy() })
            }
        };
        positive("grad_interval", self.grad_interval)?;
        positive("grad_tolerance", self.grad_tolerance)?;
        let ls = &self.line_search;
        if !(ls.sufficient_decrease > T::zero()
            && ls.sufficient_decrease < ls.curvature
            && ls.curvature < T::one())
        {
            return Err(OptimError::InvalidOption {
                name: "line_search",
                value: ls.curvature.to_f64_lossy(),
            });
        }
        Ok(())
    }
}

/// Why the iteration stopped.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Termination {
    GradientTolerance,
    MaxIterations,
    LineSearchFailed,
    NonFiniteGradient,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimResult<T> {
    pub point: Vec<T>,
    /// Accepted BFGS steps.
    pub iterations: usize,
    pub converged: bool,
    pub final_objective: T,
    /// Max-norm of the last gradient.
    pub gradient_norm: T,
    pub evaluations: usize,
    pub termination: Termination,
}

/// State reported to an observer after the start point and after every accepted step.
#[derive(Debug)]
pub struct Iterate<'a, T> {
    pub iteration: usize,
    pub point: &'a [T],
    pub objective: T,
    pub gradient: &'a [T],
}

/// Central-difference gradient `(f(x + h e_i) - f(x - h e_i)) / 2h`.
pub fn central_gradient<T, F>(f: &F, x: &[T], h: T) -> Result<Vec<T>, OptimError>
where
    T: Scalar,
    F: Fn(&[T]) -> T + ?Sized,
{
    let mut out = vec![T::zero(); x.len()];
    let mut scratch = x.to_vec();
    central_gradient_into(f, &mut scratch, h, &mut out)?;
    Ok(out)
}

/// In-place variant; `x` is restored before returning.
fn central_gradient_into<T, F>(f: &F, x: &mut [T], h: T, out: &mut [T]) -> Result<(), OptimError>
where
    T: Scalar,
    F: Fn(&[T]) -> T + ?Sized,
{
    let two_h = T::lit(2.0) * h;
    for i in 0..x.len() {
        let xi = x[i];
        x[i] = xi + h;
        let fp = f(x);
        x[i] = xi - h;
        let fm = f(x);
        x[i] = xi;
        let d = (fp - fm) / two_h;
        if !d.is_finite() {
            let value = if fp.is_finite() { fm } else { fp };
            return Err(OptimError::NonFiniteGradient { coordinate: i, value: value.to_f64_lossy() });
        }
        out[i] = d;
    }
    Ok(())
}

/// Counts evaluations and owns the scratch buffers.
struct Objective<'f, T, F: ?Sized> {
    f: &'f F,
    h: T,
    evaluations: usize,
    scratch: Vec<T>,
}

impl<'f, T: Scalar, F: Fn(&[T]) -> T + ?Sized> Objective<'f, T, F> {
    fn value(&mut self, x: &[T]) -> T {
        self.evaluations += 1;
        let v = (self.f)(x);
        if v.is_nan() {
            T::infinity()
        } else {
            v
        }
    }

    fn gradient(&mut self, x: &[T], out: &mut [T]) -> Result<(), OptimError> {
        self.scratch.clear();
        self.scratch.extend_from_slice(x);
        self.evaluations += 2 * x.len();
        central_gradient_into(self.f, &mut self.scratch, self.h, out)
    }
}

/// Accepted line-search point.
struct Step<T> {
    alpha: T,
    value: T,
    point: Vec<T>,
    gradient: Vec<T>,
}

struct LineSearch<'a, 'f, T, F: ?Sized> {
    obj: &'a mut Objective<'f, T, F>,
    x: &'a [T],
    p: &'a [T],
    phi0: T,
    dphi0: T,
    params: WolfeParams<T>,
    trials: usize,
    point: Vec<T>,
    gradient: Vec<T>,
}

impl<'a, 'f, T: Scalar, F: Fn(&[T]) -> T + ?Sized> LineSearch<'a, 'f, T, F> {
    fn phi(&mut self, alpha: T) -> Option<T> {
        if self.trials >= self.params.max_trials {
            return None;
        }
        self.trials += 1;
        for ((y, &xi), &pi) in self.point.iter_mut().zip(self.x).zip(self.p) {
            *y = xi + alpha * pi;
        }
        Some(self.obj.value(&self.point))
    }

    /// Directional derivative at the point of the last `phi` call.
    fn dphi(&mut self) -> Option<T> {
        let point = std::mem::take(&mut self.point);
        let ok = self.obj.gradient(&point, &mut self.gradient).is_ok();
        self.point = point;
        ok.then(|| dot(&self.gradient, self.p))
    }

    fn accept(&self, alpha: T, value: T) -> Step<T> {
        Step { alpha, value, point: self.point.clone(), gradient: self.gradient.clone() }
    }

    fn armijo_fails(&self, alpha: T, value: T) -> bool {
        value > self.phi0 + self.params.sufficient_decrease * alpha * self.dphi0
    }

    fn curvature_holds(&self, d: T) -> bool {
        d.abs() <= -self.params.curvature * self.dphi0
    }

    fn search(mut self, alpha_init: T) -> Option<Step<T>> {
        let mut a0 = T::zero();
        let mut phi_a0 = self.phi0;
        let mut dphi_a0 = self.dphi0;
        let mut a1 = alpha_init;
        let mut phi_a1 = self.phi(a1)?;
        let mut first = true;
        loop {
            if a1 == T::zero() || !a1.is_finite() {
                return None;
            }
            if self.armijo_fails(a1, phi_a1) || (!first && phi_a1 >= phi_a0) {
                return self.zoom(a0, a1, phi_a0, phi_a1, dphi_a0);
            }
            let dphi_a1 = match self.dphi() {
                Some(d) => d,
                // Finite value but the gradient overflowed: step is too long.
                None => return self.zoom(a0, a1, phi_a0, T::infinity(), dphi_a0),
            };
            if self.curvature_holds(dphi_a1) {
                return Some(self.accept(a1, phi_a1));
            }
            if dphi_a1 >= T::zero() {
                return self.zoom(a1, a0, phi_a1, phi_a0, dphi_a1);
            }
            a0 = a1;
            phi_a0 = phi_a1;
            dphi_a0 = dphi_a1;
            a1 *= T::lit(2.0);
            phi_a1 = self.phi(a1)?;
            first = false;
        }
    }

    fn zoom(
        &mut self,
        mut a_lo: T,
        mut a_hi: T,
        mut phi_lo: T,
        mut phi_hi: T,
        mut dphi_lo: T,
    ) -> Option<Step<T>> {
        let cubic_margin = T::lit(0.2);
        let quad_margin = T::lit(0.1);
        let mut a_rec = T::zero();
        let mut phi_rec = self.phi0;
        let mut i = 0;
        loop {
            let dalpha = a_hi - a_lo;
            let (a, b) = if dalpha < T::zero() { (a_hi, a_lo) } else { (a_lo, a_hi) };
            let width = dalpha.abs();
            let inside = |aj: T, margin: T| aj.is_finite() && aj <= b - margin * width && aj >= a + margin * width;

            let mut aj = if i > 0 {
                cubic_min(a_lo, phi_lo, dphi_lo, a_hi, phi_hi, a_rec, phi_rec)
            } else {
                None
            };
            if !aj.is_some_and(|v| inside(v, cubic_margin)) {
                aj = quad_min(a_lo, phi_lo, dphi_lo, a_hi, phi_hi);
                if !aj.is_some_and(|v| inside(v, quad_margin)) {
                    aj = Some(a_lo + dalpha / T::lit(2.0));
                }
            }
            let aj = aj.unwrap();
            if aj == a_lo || aj == a_hi {
                return None;
            }
            let phi_j = self.phi(aj)?;
            if self.armijo_fails(aj, phi_j) || phi_j >= phi_lo {
                phi_rec = phi_hi;
                a_rec = a_hi;
                a_hi = aj;
                phi_hi = phi_j;
            } else {
                let Some(dphi_j) = self.dphi() else {
                    phi_rec = phi_hi;
                    a_rec = a_hi;
                    a_hi = aj;
                    phi_hi = T::infinity();
                    i += 1;
                    continue;
                };
                if self.curvature_holds(dphi_j) {
                    return Some(self.accept(aj, phi_j));
                }
                if dphi_j * (a_hi - a_lo) >= T::zero() {
                    phi_rec = phi_hi;
                    a_rec = a_hi;
                    a_hi = a_lo;
                    phi_hi = phi_lo;
                } else {
                    phi_rec = phi_lo;
                    a_rec = a_lo;
                }
                a_lo = aj;
                phi_lo = phi_j;
                dphi_lo = dphi_j;
            }
            i += 1;
        }
    }
}

/// Minimiser of the cubic through `(a, fa)` with slope `fpa`, `(b, fb)` and `(c, fc)`.
fn cubic_min<T: Scalar>(a: T, fa: T, fpa: T, b: T, fb: T, c: T, fc: T) -> Option<T> {
    let db = b - a;
    let dc = c - a;
    let denom = (db * dc) * (db * dc) * (db - dc);
    let r1 = fb - fa - fpa * db;
    let r2 = fc - fa - fpa * dc;
    let ca = (dc * dc * r1 - db * db * r2) / denom;
    let cb = (-dc * dc * dc * r1 + db * db * db * r2) / denom;
    let radical = cb * cb - T::lit(3.0) * ca * fpa;
    let xmin = a + (-cb + radical.sqrt()) / (T::lit(3.0) * ca);
    xmin.is_finite().then_some(xmin)
}

/// Minimiser of the quadratic through `(a, fa)` with slope `fpa` and `(b, fb)`.
fn quad_min<T: Scalar>(a: T, fa: T, fpa: T, b: T, fb: T) -> Option<T> {
    let db = b - a;
    let curv = (fb - fa - fpa * db) / (db * db);
    let xmin = a - fpa / (T::lit(2.0) * curv);
    xmin.is_finite().then_some(xmin)
}

/// Runs BFGS from `x0`.
///
/// Fails only when the start point itself is unusable; every later problem ends
/// the iteration with `converged == false` and the last accepted point.
pub fn bfgs_minimize<T, F>(f: F, x0: &[T], opts: &OptimOptions<T>) -> Result<OptimResult<T>, OptimError>
where
    T: Scalar,
    F: Fn(&[T]) -> T,
{
    bfgs_minimize_observed(f, x0, opts, |_| {})
}

/// [`bfgs_minimize`] calling `observer` at the start point and after every accepted step.
pub fn bfgs_minimize_observed<T, F, O>(
    f: F,
    x0: &[T],
    opts: &OptimOptions<T>,
    mut observer: O,
) -> Result<OptimResult<T>, OptimError>
where
    T: Scalar,
    F: Fn(&[T]) -> T,
    O: FnMut(&Iterate<'_, T>),
{
    opts.validate()?;
    let n = x0.len();
    if n == 0 {
        return Err(OptimError::EmptyStart);
    }
    let mut obj = Objective { f: &f, h: opts.grad_interval, evaluations: 0, scratch: Vec::with_capacity(n) };

    let mut x = x0.to_vec();
    let mut fx = obj.value(&x);
    if !fx.is_finite() {
        return Err(OptimError::NonFiniteStart { value: fx.to_f64_lossy() });
    }
    let mut g = vec![T::zero(); n];
    obj.gradient(&x, &mut g)?;
    observer(&Iterate { iteration: 0, point: &x, objective: fx, gradient: &g });

    let mut h_inv = identity::<T>(n);
    let mut f_prev = fx + norm2(&g) / T::lit(2.0);
    let mut gnorm = max_abs(&g);
    let mut k = 0;
    let mut p = vec![T::zero(); n];
    let mut hy = vec![T::zero(); n];
    let mut termination = Termination::MaxIterations;

    while k < opts.max_iterations {
        if gnorm <= opts.grad_tolerance {
            termination = Termination::GradientTolerance;
            break;
        }
        mat_vec(&h_inv, &g, &mut p);
        p.iter_mut().for_each(|v| *v = -*v);
        let mut dphi0 = dot(&g, &p);
        if dphi0.is_nan() || dphi0 >= T::zero() {
            // Lost positive definiteness to rounding; restart from steepest descent.
            h_inv = identity(n);
            p.iter_mut().zip(&g).for_each(|(pi, &gi)| *pi = -gi);
            dphi0 = dot(&g, &p);
        }

        let mut alpha_init = T::one();
        if dphi0 != T::zero() {
            let guess = T::lit(1.01) * T::lit(2.0) * (fx - f_prev) / dphi0;
            if guess > T::zero() {
                alpha_init = guess.min(T::one());
            }
        }

        let ls = LineSearch {
            obj: &mut obj,
            x: &x,
            p: &p,
            phi0: fx,
            dphi0,
            params: opts.line_search,
            trials: 0,
            point: vec![T::zero(); n],
            gradient: vec![T::zero(); n],
        };
        let Some(step) = ls.search(alpha_init) else {
            termination = Termination::LineSearchFailed;
            break;
        };

        // s = x_new - x, y = g_new - g
        let s: Vec<T> = p.iter().map(|&pi| step.alpha * pi).collect();
        let y: Vec<T> = step.gradient.iter().zip(&g).map(|(&a, &b)| a - b).collect();
        f_prev = fx;
        x = step.point;
        fx = step.value;
        g = step.gradient;
        k += 1;
        gnorm = max_abs(&g);
        observer(&Iterate { iteration: k, point: &x, objective: fx, gradient: &g });
        if !gnorm.is_finite() {
            termination = Termination::NonFiniteGradient;
            break;
        }
        if gnorm <= opts.grad_tolerance {
            termination = Termination::GradientTolerance;
            break;
        }

        let ys = dot(&y, &s);
        if ys > T::lit(1e-10) * norm2(&y) * norm2(&s) {
            bfgs_update(&mut h_inv, &s, &y, ys, &mut hy);
        }
    }

    Ok(OptimResult {
        point: x,
        iterations: k,
        converged: termination == Termination::GradientTolerance,
        final_objective: fx,
        gradient_norm: gnorm,
        evaluations: obj.evaluations,
        termination,
    })
}

fn identity<T: Scalar>(n: usize) -> Vec<T> {
    let mut m = vec![T::zero(); n * n];
    for i in 0..n {
        m[i * n + i] = T::one();
    }
    m
}

fn mat_vec<T: Scalar>(m: &[T], v: &[T], out: &mut [T]) {
    let n = v.len();
    for (i, o) in out.iter_mut().enumerate() {
        *o = dot(&m[i * n..(i + 1) * n], v);
    }
}

/// `H <- (I - r s y^T) H (I - r y s^T) + r s s^T` with `r = 1 / y.s`, expanded as
/// `H - r (s (Hy)^T + (Hy) s^T) + (r^2 y.Hy + r) s s^T`.
fn bfgs_update<T: Scalar>(h: &mut [T], s: &[T], y: &[T], ys: T, hy: &mut [T]) {
    let n = s.len();
    mat_vec(h, y, hy);
    let r = T::one() / ys;
    let yhy = dot(y, hy);
    let coef = r * r * yhy + r;
    for i in 0..n {
        let row = &mut h[i * n..(i + 1) * n];
        for j in 0..n {
            row[j] += coef * s[i] * s[j] - r * (s[i] * hy[j] + hy[i] * s[j]);
        }
    }
}
