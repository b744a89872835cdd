use softplus_penalty::harness::{
    convergence_trace, run_records, run_sample, run_suite, sweep_alpha, write_records, write_summary,
    ExperimentConfig, PenaltyConfig, SigmaChoice,
};
use softplus_penalty::problems::{
    make_problem, parse_problem_file, write_problem_file, Geometry, GeneratorOptions, ProblemFamily,
};
use softplus_penalty::{bfgs_minimize, constrained_objective, OptimOptions, PenaltyFamily};

fn sphere(dims: Vec<usize>, samples: usize) -> ExperimentConfig {
    ExperimentConfig { problem_family: ProblemFamily::Hypersphere, dimensions: dims, samples, ..Default::default() }
}

fn csv_bytes(config: &ExperimentConfig) -> (Vec<u8>, Vec<u8>) {
    let out = run_suite(config).unwrap();
    let (mut rec, mut sum) = (Vec::new(), Vec::new());
    write_records(&mut rec, &out.records).unwrap();
    write_summary(&mut sum, &out.summary).unwrap();
    (rec, sum)
}

#[test]
fn single_constraint_norm_equals_sum() {
    let c = ExperimentConfig {
        penalty_configs: vec![PenaltyConfig::AlgebraicNorm, PenaltyConfig::AlgebraicSum],
        ..sphere(vec![2], 10)
    };
    let records = run_records(&c).unwrap();
    for pair in records.chunks(2) {
        assert_eq!(pair[0].seed, pair[1].seed);
        assert_eq!((pair[0].err, pair[0].iters), (pair[1].err, pair[1].iters));
    }
}

#[test]
fn configs_share_problems() {
    let c = ExperimentConfig { dimensions: vec![3], samples: 4, ..ExperimentConfig::default() };
    let records = run_records(&c).unwrap();
    assert_eq!(records.len(), 4 * PenaltyConfig::ALL.len());
    for group in records.chunks(PenaltyConfig::ALL.len()) {
        assert!(group.iter().all(|r| r.seed == group[0].seed && r.grad == group[0].grad));
        let configs: Vec<_> = group.iter().map(|r| r.config).collect();
        assert_eq!(configs, PenaltyConfig::ALL);
    }
}

#[test]
fn reproducible_bytes() {
    let c = sphere(vec![2, 5], 6);
    assert_eq!(csv_bytes(&c), csv_bytes(&c));
    let other = ExperimentConfig { base_seed: 99, ..c.clone() };
    assert_ne!(csv_bytes(&c).0, csv_bytes(&other).0);
}

#[test]
fn worker_count_does_not_change_results() {
    let c = ExperimentConfig { dimensions: vec![2, 4], samples: 5, ..ExperimentConfig::default() };
    let parallel = ExperimentConfig { workers: 3, ..c.clone() };
    assert_eq!(csv_bytes(&c), csv_bytes(&parallel));
}

#[test]
fn records_are_sane() {
    let c = ExperimentConfig { dimensions: vec![2, 3], samples: 5, ..ExperimentConfig::default() };
    for r in run_records(&c).unwrap() {
        assert!(r.err >= 0.0 && r.err.is_finite());
        assert!(r.grad >= 1e-2 && r.grad <= 5.0);
    }
}

/// C-B on a 2-D corner: each active row `a_i . U <= 1` is overshot by
/// `lambda_i / (2 sigma)`, with `A_act^T lambda = -c`.
#[test]
fn courant_beltrami_displacement_matches_prediction() {
    let sigma = 1e4;
    for seed in 0..10 {
        let p = make_problem::<f64>(ProblemFamily::ShearedHyperplanes, 2, seed, &GeneratorOptions::default()).unwrap();
        let Geometry::Hyperplanes(set) = &p.geometry else { unreachable!() };
        let cp = p.constrained(PenaltyFamily::CourantBeltrami, 1.0, sigma, PenaltyConfig::CourantBeltramiSum.combinator()).unwrap();
        let r = bfgs_minimize(constrained_objective(&cp).unwrap(), &p.start, &OptimOptions::default()).unwrap();

        let act = set.tight_rows(&p.u_true, 1e-9);
        assert_eq!(act.len(), 2);
        let (a, b) = (&set.normals[act[0]], &set.normals[act[1]]);
        let det = a[0] * b[1] - a[1] * b[0];
        // Solve A_act^T lambda = -c.
        let l0 = (-p.gradient[0] * b[1] + p.gradient[1] * b[0]) / det;
        let l1 = (-a[0] * p.gradient[1] + a[1] * p.gradient[0]) / det;
        assert!(l0 > 0.0 && l1 > 0.0);

        let errors = set.errors(&r.point);
        for (row, lambda) in [(act[0], l0), (act[1], l1)] {
            let predicted = lambda / (2.0 * sigma);
            assert!(
                (errors[row] - predicted).abs() <= 0.05 * predicted + 1e-7,
                "seed {seed}: row {row} violation {} vs {predicted}",
                errors[row]
            );
        }
    }
}

#[test]
fn zero_samples_is_empty() {
    let out = run_suite(&ExperimentConfig { samples: 0, ..Default::default() }).unwrap();
    assert!(out.records.is_empty() && out.summary.is_empty());
}

#[test]
fn replayed_problem_gives_same_record() {
    let c = ExperimentConfig::default();
    for family in [ProblemFamily::ShearedHyperplanes, ProblemFamily::Hypersphere] {
        let p = make_problem::<f64>(family, 4, 17, &c.generator).unwrap();
        let back = parse_problem_file::<f64>(&write_problem_file(&p)).unwrap();
        for pc in PenaltyConfig::ALL {
            assert_eq!(run_sample(&p, pc, &c).unwrap(), run_sample(&back, pc, &c).unwrap());
        }
    }
}

#[test]
fn doubling_alpha_doubles_error() {
    let c = ExperimentConfig { dimensions: vec![12], samples: 20, ..Default::default() };
    let pts = sweep_alpha(&c, &[1e-4, 2e-4]).unwrap();
    for pc in [PenaltyConfig::AlgebraicNorm, PenaltyConfig::AlgebraicSum, PenaltyConfig::SoftplusNorm] {
        let m: Vec<f64> = pts.iter().filter(|p| p.config == pc).map(|p| p.median_err).collect();
        let ratio = m[1] / m[0];
        assert!((ratio - 2.0).abs() <= 0.5, "{pc}: ratio {ratio}");
    }
}

#[test]
fn twice_gradient_sigma_removes_sphere_error() {
    let c = ExperimentConfig {
        sigma: SigmaChoice::TwiceGradient,
        penalty_configs: vec![PenaltyConfig::AlgebraicNorm, PenaltyConfig::SoftplusNorm],
        ..sphere(vec![3], 10)
    };
    let default = ExperimentConfig { sigma: SigmaChoice::Default, ..c.clone() };
    let tuned = run_suite(&c).unwrap().summary;
    let base = run_suite(&default).unwrap().summary;
    for pc in &c.penalty_configs {
        let t = tuned[0].cell(*pc).unwrap().median_err;
        let b = base[0].cell(*pc).unwrap().median_err;
        assert!(t < b / 10.0, "{pc}: {t} vs {b}");
    }
}

mod trace {
    use super::*;

    fn end(config: PenaltyConfig, sigma: f64) -> (f64, f64) {
        let path = convergence_trace(config, 0.1, sigma, [1.0, 2.0], &OptimOptions::default()).unwrap();
        let last = path.last().unwrap();
        (last.u1, last.u2)
    }

    #[test]
    fn norm_configs_reach_the_corner() {
        for pc in [PenaltyConfig::AlgebraicNorm, PenaltyConfig::SoftplusNorm] {
            let (u1, u2) = end(pc, 0.85);
            assert!(u1.hypot(u2) < 0.05, "{pc}: ({u1}, {u2})");
        }
    }

    #[test]
    fn algebraic_norm_descends_monotonically() {
        let path = convergence_trace(PenaltyConfig::AlgebraicNorm, 0.1, 0.85, [1.0, 2.0], &OptimOptions::default()).unwrap();
        assert!(path.windows(2).all(|w| w[1].objective <= w[0].objective));
        assert!(path.len() > 2);
    }

    #[test]
    fn algebraic_sum_overshoots_constraints() {
        let path = convergence_trace(PenaltyConfig::AlgebraicSum, 0.1, 0.6, [1.0, 2.0], &OptimOptions::default()).unwrap();
        assert!(path.iter().any(|p| p.u1 < 0.0 || p.u2 < p.u1));
    }

    #[test]
    fn courant_beltrami_lands_outside_by_predicted_amount() {
        let sigma = 10.0;
        let (u1, u2) = end(PenaltyConfig::CourantBeltramiSum, sigma);
        // U1 > 0 carries both objective components, U2 > U1 only one.
        assert!((u1 + 0.4 / (2.0 * sigma)).abs() < 1e-6, "{u1}");
        assert!((u2 - u1 + 0.2 / (2.0 * sigma)).abs() < 1e-6, "{u2}");
    }
}
