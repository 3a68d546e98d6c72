//! End-to-end checks of the binary: exit-status contract, emitted files,
//! determinism of outputs.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use stein_shrink::matrix_io::{parse_matrix, write_matrix};
use stein_shrink::report::PrialReport;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stein-shrink"))
        .args(args)
        .output()
        .expect("binary launches")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

fn stderr_text(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout_text(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// A small data matrix with a fixed seed, written in the input format.
fn sample_input(path: &Path, p: usize, n: usize, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Array2::<f64>::zeros((p, n));
    for v in x.iter_mut() {
        *v = StandardNormal.sample(&mut rng);
    }
    fs::write(path, write_matrix(&x.view())).unwrap();
}

#[test]
fn bench_writes_parseable_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "bench",
        "--structure",
        "identity",
        "--p",
        "8",
        "--n",
        "10",
        "--r",
        "4",
        "--alphas",
        "1,2",
        "--reps",
        "4",
        "--seed",
        "7",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr_text(&out));

    let csv = fs::read_to_string(dir.path().join("prial.csv")).unwrap();
    let report = PrialReport::from_csv(&csv).expect("emitted CSV parses");
    assert_eq!(report.rows().len(), 2);
    for row in report.rows() {
        assert_eq!((row.p, row.n, row.r), (8, 10, 4));
        assert_eq!(row.replications, 4);
        assert_eq!(row.seed, 7);
        assert!(row.se_percent >= 0.0);
    }
    let md = fs::read_to_string(dir.path().join("prial.md")).unwrap();
    assert!(md.contains('±'), "markdown lists value ± se");
}

#[test]
fn bench_rejects_rank_above_dimension() {
    let out = run(&[
        "bench", "--p", "30", "--n", "50", "--r", "40", "--reps", "2",
    ]);
    assert_eq!(code(&out), 2);
    assert!(stderr_text(&out).contains("rank"), "{}", stderr_text(&out));
}

#[test]
fn bench_requires_dimensions_or_preset() {
    let out = run(&["bench"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn bench_preset_conflicts_with_explicit_dimensions() {
    let out = run(&["bench", "--preset", "table1", "--p", "5"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn preset_covers_the_full_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "bench",
        "--preset",
        "table1",
        "--reps",
        "2",
        "--seed",
        "1",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr_text(&out));

    let csv = fs::read_to_string(dir.path().join("prial.csv")).unwrap();
    let report = PrialReport::from_csv(&csv).unwrap();
    assert_eq!(report.rows().len(), 100, "20 settings x 5 exponents");
    let mut settings: Vec<_> = report
        .rows()
        .iter()
        .map(|row| (row.structure, row.p, row.n, row.r))
        .collect();
    settings.sort_by_key(|&(kind, p, n, r)| (format!("{kind}"), p, n, r));
    settings.dedup();
    assert_eq!(settings.len(), 20);
}

#[test]
fn estimate_is_deterministic_and_symmetric() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("x.csv");
    sample_input(&input, 5, 12, 99);

    let mut outputs = Vec::new();
    for name in ["a.csv", "b.csv"] {
        let out_path = dir.path().join(name);
        let out = run(&[
            "estimate",
            "--input",
            input.to_str().unwrap(),
            "--r",
            "3",
            "--alpha",
            "2",
            "--out",
            out_path.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0, "stderr: {}", stderr_text(&out));
        outputs.push(fs::read(&out_path).unwrap());
    }
    assert_eq!(outputs[0], outputs[1], "same input, same bytes");

    let sigma_hat = parse_matrix(std::str::from_utf8(&outputs[0]).unwrap()).unwrap();
    assert_eq!(sigma_hat.dim(), (5, 5));
    for i in 0..5 {
        for j in 0..5 {
            assert_eq!(sigma_hat[[i, j]].to_bits(), sigma_hat[[j, i]].to_bits());
        }
        assert!(sigma_hat[[i, i]] >= 0.0);
    }
}

#[test]
fn estimate_rejects_rank_above_dimension() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("x.csv");
    sample_input(&input, 4, 9, 11);
    let out = run(&["estimate", "--input", input.to_str().unwrap(), "--r", "9"]);
    assert_eq!(code(&out), 2);
    assert!(stderr_text(&out).contains("rank"), "{}", stderr_text(&out));
}

#[test]
fn estimate_names_the_first_bad_row() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("ragged.csv");
    fs::write(&input, "1,2\n3\n").unwrap();
    let out = run(&["estimate", "--input", input.to_str().unwrap(), "--r", "1"]);
    assert_eq!(code(&out), 1);
    let err = stderr_text(&out);
    assert!(err.contains("row 2"), "{err}");
    assert!(err.contains("ragged.csv"), "{err}");
}

#[test]
fn estimate_cross_checks_sample_count() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("x.csv");
    sample_input(&input, 5, 12, 4);
    let out = run(&[
        "estimate",
        "--input",
        input.to_str().unwrap(),
        "--r",
        "3",
        "--n",
        "7",
    ]);
    assert_eq!(code(&out), 2);
    assert!(
        stderr_text(&out).contains("12 columns"),
        "{}",
        stderr_text(&out)
    );
}

#[test]
fn verify_labels_exponent_domains() {
    let out = run(&[
        "verify", "--n", "12", "--r", "8", "--alphas", "0.5,2", "--trials", "8", "--seed", "3",
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr_text(&out));
    let text = stdout_text(&out);
    assert!(text.contains("informational"), "{text}");
    assert!(text.contains("asserted"), "{text}");
}

#[test]
fn verify_scalar_case_needs_explicit_mass() {
    let out = run(&["verify", "--n", "5", "--r", "1", "--trials", "4"]);
    assert_eq!(code(&out), 2);
    assert!(stderr_text(&out).contains("--bs"), "{}", stderr_text(&out));

    let out = run(&[
        "verify", "--n", "5", "--r", "1", "--trials", "4", "--bs", "0.5",
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr_text(&out));
}

#[test]
fn worker_env_must_be_a_positive_integer() {
    let out = Command::new(env!("CARGO_BIN_EXE_stein-shrink"))
        .args(["bench", "--p", "4", "--n", "6", "--r", "2", "--reps", "2"])
        .env("STEIN_SHRINK_THREADS", "zero")
        .output()
        .expect("binary launches");
    assert_eq!(code(&out), 2);
    assert!(
        stderr_text(&out).contains("STEIN_SHRINK_THREADS"),
        "{}",
        stderr_text(&out)
    );
}
