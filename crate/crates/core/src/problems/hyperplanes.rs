use super::ProblemError;
use crate::rng::SplitMix64;
use crate::scalar::{dot, Scalar};

/// Identity matrix with the single off-diagonal entry `(row, col) = factor`.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Shear<T> {
    pub row: usize,
    pub col: usize,
    pub factor: T,
}

impl<T: Scalar> Shear<T> {
    /// Ordered pair `row != col` uniform over the `n (n - 1)` choices, factor
    /// uniform on `[-range, range]`.
    pub fn random(n: usize, range: f64, rng: &mut SplitMix64) -> Self {
        let k = rng.below((n * (n - 1)) as u64) as usize;
        let row = k / (n - 1);
        let mut col = k % (n - 1);
        if col >= row {
            col += 1;
        }
        let factor = T::lit(rng.uniform(-range, range));
        Self { row, col, factor }
    }
}

/// Linear constraints `A U <= b` with the shear history that produced them.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearConstraintSet<T> {
    /// Rows of `A`.
    pub normals: Vec<Vec<T>>,
    pub offsets: Vec<T>,
    pub shear_log: Vec<Shear<T>>,
    /// Point-space map `T = S_k ... S_1`.
    pub transform: Vec<Vec<T>>,
}

fn identity<T: Scalar>(n: usize) -> Vec<Vec<T>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { T::one() } else { T::zero() }).collect())
        .collect()
}

impl<T: Scalar> LinearConstraintSet<T> {
    /// `[-1, 1]^n`: rows `+e_i` then `-e_i`, all offsets one.
    pub fn hypercube(n: usize) -> Self {
        Self::sheared_hypercube(n, Vec::new())
    }

    /// Image of the hypercube under the shears applied in order.
    ///
    /// In sheared coordinates `U = T u`, so the cube rows become `A T^-1`. The
    /// inverse of each shear negates its factor, giving
    /// `T^-1 = S_1^-1 ... S_k^-1` without a general inversion.
    pub fn sheared_hypercube(n: usize, shears: Vec<Shear<T>>) -> Self {
        let mut t = identity::<T>(n);
        let mut t_inv = identity::<T>(n);
        for s in &shears {
            // T <- S T: row `row` gains factor * row `col`.
            let src = t[s.col].clone();
            for (dst, v) in t[s.row].iter_mut().zip(src) {
                *dst += s.factor * v;
            }
            // T^-1 <- T^-1 S^-1: column `col` loses factor * column `row`.
            for r in t_inv.iter_mut() {
                let v = r[s.row];
                r[s.col] -= s.factor * v;
            }
        }
        let mut normals = Vec::with_capacity(2 * n);
        normals.extend(t_inv.iter().cloned());
        normals.extend(t_inv.iter().map(|r| r.iter().map(|&v| -v).collect()));
        Self { normals, offsets: vec![T::one(); 2 * n], shear_log: shears, transform: t }
    }

    pub fn dim(&self) -> usize {
        self.transform.len()
    }

    /// `A_i . u - b_i` for every row.
    pub fn errors(&self, u: &[T]) -> Vec<T> {
        self.normals.iter().zip(&self.offsets).map(|(a, &b)| dot(a, u) - b).collect()
    }

    pub fn is_feasible(&self, u: &[T], tol: T) -> bool {
        self.errors(u).iter().all(|&e| e <= tol)
    }

    pub fn tight_rows(&self, u: &[T], tol: T) -> Vec<usize> {
        self.errors(u)
            .iter()
            .enumerate()
            .filter_map(|(i, e)| (e.abs() <= tol).then_some(i))
            .collect()
    }

    /// Minimiser of `c . U` over the sheared cube: `T u*` with
    /// `u* = -sign(T^T c)`, zero components resolved to `-1`.
    pub fn cube_optimum(&self, c: &[T]) -> Result<Vec<T>, ProblemError> {
        let n = self.dim();
        if c.len() != n {
            return Err(ProblemError::GradientLength { expected: n, got: c.len() });
        }
        let pulled: Vec<T> = (0..n).map(|j| (0..n).map(|i| self.transform[i][j] * c[i]).sum()).collect();
        let vertex: Vec<T> = pulled.iter().map(|&v| if v > T::zero() { -T::one() } else if v < T::zero() { T::one() } else { -T::one() }).collect();
        Ok(self.transform.iter().map(|row| dot(row, &vertex)).collect())
    }
}
