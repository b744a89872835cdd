//! Plain-text problem files for audit and replay.
//!
//! ```text
//! # softplus-penalty benchmark problem
//! format 1
//! family hyperplanes            # or hypersphere
//! dim 2
//! seed 42
//! gradient_magnitude 1.37
//! c 0.81 -1.1
//! x0 -0.3 1.9
//! u_true -1 1.25
//! shear 0 1 0.25                # hyperplanes only, one line per shear, in order
//! row 1 -0.25 1                 # hyperplanes only: A_i entries then b_i
//! radius 1                      # hypersphere only
//! ```
//!
//! Blank lines and `#` comments are ignored. Numbers use the shortest decimal
//! representation that parses back to the same value.

use std::fmt::Write as _;

use super::{BenchmarkProblem, Geometry, LinearConstraintSet, ProblemError, ProblemFamily, Shear};
use crate::scalar::Scalar;

fn join<T: Scalar>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

pub fn write_problem_file<T: Scalar>(p: &BenchmarkProblem<T>) -> String {
    let mut out = String::new();
    out.push_str("# softplus-penalty benchmark problem\n");
    out.push_str("format 1\n");
    let _ = writeln!(out, "family {}", p.family.name());
    let _ = writeln!(out, "dim {}", p.dim);
    let _ = writeln!(out, "seed {}", p.seed);
    let _ = writeln!(out, "gradient_magnitude {}", p.gradient_magnitude);
    let _ = writeln!(out, "c {}", join(&p.gradient));
    let _ = writeln!(out, "x0 {}", join(&p.start));
    let _ = writeln!(out, "u_true {}", join(&p.u_true));
    match &p.geometry {
        Geometry::Hyperplanes(set) => {
            for s in &set.shear_log {
                let _ = writeln!(out, "shear {} {} {}", s.row, s.col, s.factor);
            }
            for (a, b) in set.normals.iter().zip(&set.offsets) {
                let _ = writeln!(out, "row {} {}", join(a), b);
            }
        }
        Geometry::Hypersphere { radius } => {
            let _ = writeln!(out, "radius {radius}");
        }
    }
    out
}

struct Cursor {
    line: usize,
}

impl Cursor {
    fn err(&self, message: impl Into<String>) -> ProblemError {
        ProblemError::Parse { line: self.line, message: message.into() }
    }

    fn num<V: std::str::FromStr>(&self, tok: &str) -> Result<V, ProblemError> {
        tok.parse().map_err(|_| self.err(format!("cannot parse `{tok}`")))
    }

    fn nums<V: std::str::FromStr>(&self, toks: &[&str]) -> Result<Vec<V>, ProblemError> {
        toks.iter().map(|t| self.num(t)).collect()
    }
}

/// Parses a file produced by [`write_problem_file`]. The constraint rows are taken
/// as written; the point-space transform is rebuilt from the shear lines.
pub fn parse_problem_file<T: Scalar>(text: &str) -> Result<BenchmarkProblem<T>, ProblemError> {
    let mut cur = Cursor { line: 0 };
    let mut family = None;
    let mut dim = None;
    let mut seed = None;
    let mut magnitude = None;
    let (mut c, mut x0, mut u_true) = (None, None, None);
    let mut shears = Vec::new();
    let mut rows: Vec<(Vec<T>, T)> = Vec::new();
    let mut radius = None;

    for (i, raw) in text.lines().enumerate() {
        cur.line = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        let (key, rest) = (toks[0], &toks[1..]);
        let single = || rest.first().copied().ok_or_else(|| cur.err(format!("`{key}` needs a value")));
        match key {
            "format" => {
                if single()? != "1" {
                    return Err(cur.err("unsupported format version"));
                }
            }
            "family" => family = Some(single()?.parse::<ProblemFamily>().map_err(|e| cur.err(e))?),
            "dim" => dim = Some(cur.num::<usize>(single()?)?),
            "seed" => seed = Some(cur.num::<u64>(single()?)?),
            "gradient_magnitude" => magnitude = Some(cur.num::<T>(single()?)?),
            "c" => c = Some(cur.nums::<T>(rest)?),
            "x0" => x0 = Some(cur.nums::<T>(rest)?),
            "u_true" => u_true = Some(cur.nums::<T>(rest)?),
            "radius" => radius = Some(cur.num::<T>(single()?)?),
            "shear" => {
                if rest.len() != 3 {
                    return Err(cur.err("shear needs row, col and factor"));
                }
                shears.push(Shear {
                    row: cur.num(rest[0])?,
                    col: cur.num(rest[1])?,
                    factor: cur.num(rest[2])?,
                });
            }
            "row" => {
                let mut v = cur.nums::<T>(rest)?;
                let b = v.pop().ok_or_else(|| cur.err("empty row"))?;
                rows.push((v, b));
            }
            other => return Err(cur.err(format!("unknown key `{other}`"))),
        }
    }

    cur.line = 0;
    let missing = |what: &str| ProblemError::Parse { line: 0, message: format!("missing `{what}`") };
    let family = family.ok_or_else(|| missing("family"))?;
    let dim = dim.ok_or_else(|| missing("dim"))?;
    let vectors = [("c", &c), ("x0", &x0), ("u_true", &u_true)];
    for (name, v) in vectors {
        match v {
            Some(v) if v.len() == dim => {}
            Some(_) => return Err(cur.err(format!("`{name}` length differs from dim {dim}"))),
            None => return Err(missing(name)),
        }
    }
    if shears.iter().any(|s| s.row >= dim || s.col >= dim || s.row == s.col) {
        return Err(cur.err("shear index out of range"));
    }
    let geometry = match family {
        ProblemFamily::ShearedHyperplanes => {
            if rows.is_empty() || rows.iter().any(|(a, _)| a.len() != dim) {
                return Err(cur.err(format!("constraint rows must have {dim} entries plus an offset")));
            }
            let mut set = LinearConstraintSet::sheared_hypercube(dim, shears);
            let (normals, offsets) = rows.into_iter().unzip();
            set.normals = normals;
            set.offsets = offsets;
            Geometry::Hyperplanes(set)
        }
        ProblemFamily::Hypersphere => Geometry::Hypersphere { radius: radius.ok_or_else(|| missing("radius"))? },
    };
    Ok(BenchmarkProblem {
        family,
        dim,
        seed: seed.ok_or_else(|| missing("seed"))?,
        geometry,
        gradient: c.unwrap(),
        gradient_magnitude: magnitude.ok_or_else(|| missing("gradient_magnitude"))?,
        start: x0.unwrap(),
        u_true: u_true.unwrap(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{make_hypersphere, make_sheared_hyperplanes};
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn round_trip(n in 2usize..9, seed in any::<u64>(), sphere in any::<bool>()) {
            let p = if sphere {
                make_hypersphere::<f64>(n, seed).unwrap()
            } else {
                make_sheared_hyperplanes::<f64>(n, seed).unwrap()
            };
            let text = write_problem_file(&p);
            let back = parse_problem_file::<f64>(&text).unwrap();
            prop_assert_eq!(back, p);
        }
    }

    #[test]
    fn reports_bad_lines() {
        let p = make_hypersphere::<f64>(2, 1).unwrap();
        let text = write_problem_file(&p).replace("dim 2", "dim two");
        assert!(matches!(parse_problem_file::<f64>(&text), Err(ProblemError::Parse { line: 4, .. })));
        let text = write_problem_file(&p).replace("radius 1\n", "");
        assert!(parse_problem_file::<f64>(&text).is_err());
        assert!(parse_problem_file::<f64>("format 2\n").is_err());
        assert!(parse_problem_file::<f64>("bogus 1\n").is_err());
    }

    #[test]
    fn comments_ignored() {
        let p = make_sheared_hyperplanes::<f64>(3, 5).unwrap();
        let text = write_problem_file(&p).replace("format 1", "format 1   # version\n\n# note");
        assert_eq!(parse_problem_file::<f64>(&text).unwrap(), p);
    }
}
