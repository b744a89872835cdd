use itertools::Itertools;

use super::{LinearConstraintSet, ProblemError};
use crate::scalar::{dot, Scalar};

const MAX_ENUMERATION_DIM: usize = 6;

/// Brute-force LP over a bounded polytope: solve every `n`-subset of active rows,
/// keep the feasible vertices and return the one minimising `c . U`.
///
/// Subsets are visited in lexicographic order and only a strictly better vertex
/// replaces the incumbent, so ties go to the lowest row indices.
pub fn lp_vertex_oracle<T: Scalar>(set: &LinearConstraintSet<T>, c: &[T]) -> Result<Vec<T>, ProblemError> {
    let n = c.len();
    if n > MAX_ENUMERATION_DIM {
        return Err(ProblemError::TooLarge { max: MAX_ENUMERATION_DIM, got: n });
    }
    if set.normals.first().is_some_and(|r| r.len() != n) {
        return Err(ProblemError::GradientLength { expected: set.normals[0].len(), got: n });
    }
    let feas_tol = T::lit(1e-9);
    let tie_tol = T::lit(1e-12);
    let mut best: Option<(T, Vec<T>)> = None;
    for rows in (0..set.normals.len()).combinations(n) {
        let a: Vec<Vec<T>> = rows.iter().map(|&i| set.normals[i].clone()).collect();
        let b: Vec<T> = rows.iter().map(|&i| set.offsets[i]).collect();
        let Some(u) = solve(a, b) else { continue };
        let feasible = set
            .normals
            .iter()
            .zip(&set.offsets)
            .all(|(row, &off)| dot(row, &u) - off <= feas_tol * (T::one() + off.abs()));
        if !feasible {
            continue;
        }
        let value = dot(c, &u);
        let better = match &best {
            None => true,
            Some((bv, _)) => value < *bv - tie_tol * (T::one() + bv.abs()),
        };
        if better {
            best = Some((value, u));
        }
    }
    best.map(|(_, u)| u).ok_or(ProblemError::NoFeasibleVertex)
}

/// Gaussian elimination with partial pivoting; `None` when numerically singular.
fn solve<T: Scalar>(mut a: Vec<Vec<T>>, mut b: Vec<T>) -> Option<Vec<T>> {
    let n = b.len();
    let scale = a.iter().flatten().fold(T::zero(), |m, v| m.max(v.abs()));
    let eps = T::lit(1e-12) * scale.max(T::one());
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i][k].abs().partial_cmp(&a[j][k].abs()).unwrap())?;
        if a[p][k].abs() <= eps {
            return None;
        }
        a.swap(p, k);
        b.swap(p, k);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            if f == T::zero() {
                continue;
            }
            let (top, rest) = a.split_at_mut(i);
            for (dst, &v) in rest[0][k..].iter_mut().zip(&top[k][k..]) {
                *dst -= f * v;
            }
            let v = b[k];
            b[i] -= f * v;
        }
    }
    let mut x = vec![T::zero(); n];
    for k in (0..n).rev() {
        let s: T = (k + 1..n).map(|j| a[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }
    Some(x)
}
