use std::path::Path;
use std::process::{Command, Output};

fn spbench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spbench")).args(args).output().expect("spawn spbench")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn bench_writes_records_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let rec = dir.path().join("records.csv");
    let sum = dir.path().join("summary.csv");
    let o = spbench(&[
        "bench", "--problem", "hypersphere", "--dims", "2,3", "--samples", "4", "--seed", "5",
        "--out", rec.to_str().unwrap(), "--summary", sum.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let records = read(&rec);
    let mut lines = records.lines();
    assert_eq!(lines.next(), Some("seed,dim,config,grad,err,iters,converged"));
    assert_eq!(lines.count(), 2 * 4 * 4);
    let summary = read(&sum);
    assert!(summary.starts_with("problem,dim,alg_norm_err,alg_norm_iters,alg_norm_failed,alg_sum_err"));
    assert_eq!(summary.lines().count(), 3);
}

#[test]
fn bench_output_independent_of_workers() {
    let args = ["bench", "--dims", "2,3", "--samples", "3", "--config", "alg-norm,cb"];
    let one = spbench(&args);
    let many = spbench(&[&args[..], &["--workers", "2"]].concat());
    assert!(one.status.success() && many.status.success());
    assert_eq!(one.stdout, many.stdout);
    assert_eq!(stdout(&one).lines().count(), 1 + 2 * 3 * 2);
}

#[test]
fn configuration_errors_exit_nonzero() {
    let bad: &[&[&str]] = &[
        &["bench", "--alpha", "0"],
        &["bench", "--dims", "1"],
        &["bench", "--config", "huber"],
        &["bench", "--sigma", "-3"],
        &["bench", "--sigma", "lots"],
        &["bench", "--workers", "0"],
        &["bench", "--problem", "torus"],
        &["sweep-alpha", "--config", "cb", "--dims", "2", "--samples", "1"],
        &["sweep-sigma", "--sigmas", "0", "--dims", "2", "--samples", "1"],
        &["predict", "--ratios", "1.5"],
        &["trace", "--sigma", "0"],
        &["trace", "--sigma", "1", "--start", "1,2,3"],
        &["problem", "--dim", "1"],
    ];
    for args in bad {
        let o = spbench(args);
        assert!(!o.status.success(), "{args:?} succeeded");
    }
}

#[test]
fn zero_samples_succeeds() {
    let o = spbench(&["bench", "--samples", "0"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "seed,dim,config,grad,err,iters,converged\n");
}

#[test]
fn sweeps() {
    let o = spbench(&["sweep-sigma", "--dims", "3", "--samples", "2", "--sigmas", "10,100", "--config", "softplus-norm"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("param,dim,config,median_err,median_iters,failed,samples\n"));
    assert_eq!(text.lines().count(), 3);

    let o = spbench(&["sweep-alpha", "--dims", "3", "--samples", "2", "--alphas", "1e-4,1e-3"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 1 + 2 * 3);
    assert!(!text.contains(",cb,"));
}

#[test]
fn trace_and_predict() {
    let o = spbench(&["trace", "--config", "softplus-norm", "--sigma", "0.85", "--alpha", "0.1", "--start", "1,2"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("iter,u1,u2,objective\n0,1.0,2.0,"));

    let o = spbench(&["predict", "--sigma", "15", "--alphas", "3e-5"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("family,kind,ratio,alpha,sigma,grad,predicted,oracle\n"));
    assert_eq!(text.lines().count(), 1 + 3 * 3 * 19);
}

#[test]
fn problem_file_replay_matches_batch() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("p.txt");
    let o = spbench(&["problem", "--problem", "hyperplanes", "--dim", "3", "--seed", "2", "--out", file.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(read(&file).contains("family hyperplanes"));

    let replay = spbench(&["bench", "--replay", file.to_str().unwrap()]);
    let batch = spbench(&["bench", "--dims", "3", "--samples", "1", "--seed", "2"]);
    assert!(replay.status.success() && batch.status.success());
    assert_eq!(replay.stdout, batch.stdout);

    let missing = spbench(&["bench", "--replay", dir.path().join("nope.txt").to_str().unwrap()]);
    assert!(!missing.status.success());
}
