//! Command-line front end: run the PRIAL benchmark, estimate a covariance
//! from a data file, or probe the dominance-proof inequalities numerically.
//!
//! Exit status: 0 on success, 2 for usage errors (bad flags or invalid
//! configuration), 1 for runtime failures (unreadable data, numerical
//! degeneracy, I/O).

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_distr::{Distribution, LogNormal};

use stein_shrink::bench::{run_table, ExperimentConfig};
use stein_shrink::estimators::{
    dominance_bound, haff_estimate, oi_estimate, optimal_constant, psi_haff, ShrinkageRule,
};
use stein_shrink::linalg::{data_eigensystem, SymMatrix};
use stein_shrink::matrix_io::{parse_alphas, parse_matrix, write_matrix, AlphaParseError};
use stein_shrink::model::{CovarianceSpec, Dimensions, Structure};
use stein_shrink::verify::{diagnose, ProofDiagnostics, INEQUALITY_SLACK};

#[derive(Parser)]
#[command(
    name = "stein-shrink",
    version,
    about = "Eigenvalue shrinkage for singular covariance estimation under Stein loss"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo benchmark: PRIAL of eigenvalue shrinkage over the optimal
    /// constant multiple of S, written as prial.csv and prial.md
    Bench(BenchArgs),
    /// One-shot estimate: read a data matrix, write the shrunk covariance
    Estimate(EstimateArgs),
    /// Numerically probe the inequalities behind the dominance guarantee
    Verify(VerifyArgs),
}

/// Comma-separated list of positive reals, as one flag value.
#[derive(Debug, Clone)]
struct NumberList(Vec<f64>);

impl FromStr for NumberList {
    type Err = AlphaParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_alphas(s).map(NumberList)
    }
}

impl fmt::Display for NumberList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|v| v.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StructureArg {
    /// Identity on the first r coordinates
    Identity,
    /// Autoregressive correlation truncated to rank r
    Ar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Preset {
    /// Both structures crossed with (p,n) in {(30,50),(50,30),(150,30)} and
    /// three or four ranks per shape
    Table1,
}

#[derive(Args)]
struct BenchArgs {
    /// Population covariance structure
    #[arg(long, value_enum, default_value_t = StructureArg::Identity, conflicts_with = "preset")]
    structure: StructureArg,
    /// Autoregressive coefficient (also applies to the preset's AR half)
    #[arg(long, default_value_t = 0.9)]
    rho: f64,
    /// Number of variables
    #[arg(long, required_unless_present = "preset", conflicts_with = "preset")]
    p: Option<usize>,
    /// Number of observations
    #[arg(long, required_unless_present = "preset", conflicts_with = "preset")]
    n: Option<usize>,
    /// Rank of the population covariance
    #[arg(long, required_unless_present = "preset", conflicts_with = "preset")]
    r: Option<usize>,
    /// Shrinkage exponents, comma separated
    #[arg(long, default_value = "1,2,3,4,5")]
    alphas: NumberList,
    /// Total shrinkage mass (default: the critical mass per setting)
    #[arg(long)]
    b: Option<f64>,
    /// Monte Carlo replications per setting
    #[arg(long, default_value_t = 1000)]
    reps: usize,
    /// Master seed; replication k uses stream k of this seed
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Relative eigenvalue threshold for rank decisions
    #[arg(long)]
    tol: Option<f64>,
    /// Directory for prial.csv and prial.md
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Run a predefined grid instead of a single setting
    #[arg(long, value_enum)]
    preset: Option<Preset>,
}

#[derive(Args)]
struct EstimateArgs {
    /// Data matrix file: rows are variables, columns are observations
    #[arg(long)]
    input: PathBuf,
    /// Assumed rank of the population covariance
    #[arg(long)]
    r: usize,
    /// Expected number of observations; checked against the file
    #[arg(long)]
    n: Option<usize>,
    /// Shrinkage exponent
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Total shrinkage mass (default: the critical mass)
    #[arg(long)]
    b: Option<f64>,
    /// Relative eigenvalue threshold for rank decisions
    #[arg(long)]
    tol: Option<f64>,
    /// Output file for the estimated covariance matrix
    #[arg(long, default_value = "sigma_hat.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    /// Number of variables (defaults to r; only min(n,r) and max(n,r) matter)
    #[arg(long)]
    p: Option<usize>,
    /// Number of observations
    #[arg(long)]
    n: usize,
    /// Rank of the population covariance
    #[arg(long)]
    r: usize,
    /// Shrinkage exponents, comma separated
    #[arg(long, default_value = "1,2,3,4,5")]
    alphas: NumberList,
    /// Shrinkage masses, comma separated (default: the critical mass)
    #[arg(long)]
    bs: Option<NumberList>,
    /// Random spectra per (alpha, mass) combination
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Seed for the random spectra
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

/// Classified failures: usage errors exit 2, runtime errors exit 1.
enum AppError {
    Usage(String),
    Runtime(String),
}

fn usage<E: fmt::Display>(e: E) -> AppError {
    AppError::Usage(e.to_string())
}

fn runtime<E: fmt::Display>(e: E) -> AppError {
    AppError::Runtime(e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Bench(args) => cmd_bench(args),
        Command::Estimate(args) => cmd_estimate(args),
        Command::Verify(args) => cmd_verify(args),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(AppError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(AppError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

/// Honors STEIN_SHRINK_THREADS as a cap on the worker pool. Results never
/// depend on it; only wall time does.
fn configure_threads() -> Result<(), AppError> {
    let Some(raw) = std::env::var_os("STEIN_SHRINK_THREADS") else {
        return Ok(());
    };
    let text = raw.to_string_lossy();
    let count: usize = text.trim().parse().map_err(|_| {
        usage(format!(
            "STEIN_SHRINK_THREADS must be a positive integer, got {text:?}"
        ))
    })?;
    if count == 0 {
        return Err(usage("STEIN_SHRINK_THREADS must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(count)
        .build_global()
        .map_err(runtime)
}

fn structure_of(arg: StructureArg, rho: f64) -> Structure {
    match arg {
        StructureArg::Identity => Structure::Identity,
        StructureArg::Ar => Structure::Ar { rho },
    }
}

fn build_config(
    structure: Structure,
    p: usize,
    n: usize,
    r: usize,
    args: &BenchArgs,
) -> Result<ExperimentConfig, AppError> {
    let spec = CovarianceSpec::new(structure, p, r).map_err(usage)?;
    let mut config = ExperimentConfig::new(spec, n, args.alphas.0.clone(), args.reps, args.seed)
        .map_err(usage)?;
    if let Some(tol) = args.tol {
        config = config.with_tol(tol).map_err(usage)?;
    }
    if let Some(b) = args.b {
        config = config.with_shrinkage_mass(b).map_err(usage)?;
    }
    Ok(config)
}

fn preset_configs(args: &BenchArgs) -> Result<Vec<ExperimentConfig>, AppError> {
    let blocks: [(usize, usize, &[usize]); 3] = [
        (30, 50, &[10, 20, 30]),
        (50, 30, &[20, 40, 50]),
        (150, 30, &[20, 40, 60, 150]),
    ];
    let mut configs = Vec::new();
    for structure in [Structure::Identity, Structure::Ar { rho: args.rho }] {
        for &(p, n, ranks) in &blocks {
            for &r in ranks {
                configs.push(build_config(structure, p, n, r, args)?);
            }
        }
    }
    Ok(configs)
}

/// Writes `content` to `path`, deleting any partial file on failure.
fn write_file(path: &Path, content: &str) -> Result<(), AppError> {
    std::fs::write(path, content).map_err(|e| {
        let _ = std::fs::remove_file(path);
        runtime(format!("cannot write {}: {e}", path.display()))
    })
}

fn cmd_bench(args: BenchArgs) -> Result<(), AppError> {
    let configs = match args.preset {
        Some(Preset::Table1) => preset_configs(&args)?,
        None => {
            let (p, n, r) = (
                args.p.expect("required by clap"),
                args.n.expect("required by clap"),
                args.r.expect("required by clap"),
            );
            vec![build_config(
                structure_of(args.structure, args.rho),
                p,
                n,
                r,
                &args,
            )?]
        }
    };
    let report = run_table(&configs).map_err(runtime)?;
    std::fs::create_dir_all(&args.out)
        .map_err(|e| runtime(format!("cannot create {}: {e}", args.out.display())))?;
    let csv_path = args.out.join("prial.csv");
    let md_path = args.out.join("prial.md");
    write_file(&csv_path, &report.to_csv())?;
    if let Err(e) = write_file(&md_path, &report.to_markdown()) {
        let _ = std::fs::remove_file(&csv_path);
        return Err(e);
    }
    println!(
        "wrote {} rows to {} and {}",
        report.rows().len(),
        csv_path.display(),
        md_path.display()
    );
    Ok(())
}

fn cmd_estimate(args: EstimateArgs) -> Result<(), AppError> {
    let text = std::fs::read_to_string(&args.input)
        .map_err(|e| runtime(format!("cannot read {}: {e}", args.input.display())))?;
    let x = parse_matrix(&text).map_err(|e| runtime(format!("{}: {e}", args.input.display())))?;
    let p = x.nrows();
    let n = x.ncols();
    if let Some(expected) = args.n {
        if expected != n {
            return Err(usage(format!(
                "--n {expected} does not match the file's {n} columns"
            )));
        }
    }
    let dims = Dimensions::new(p, n, args.r).map_err(usage)?;
    let b = match args.b {
        Some(b) => b,
        None => {
            let b = dominance_bound(&dims);
            if b <= 0.0 {
                return Err(usage(
                    "the critical shrinkage mass is zero when min(n, r) = 1; pass --b",
                ));
            }
            b
        }
    };
    let rule = ShrinkageRule::new(args.alpha, b).map_err(usage)?;

    let estimate = match args.tol {
        // The default-tolerance path is the packaged composition.
        None => {
            let product = x.dot(&x.t());
            let s = SymMatrix::new((&product + &product.t()) / 2.0).map_err(runtime)?;
            haff_estimate(&s, &dims, &rule).map_err(runtime)?
        }
        // An explicit tolerance threads through the same pipeline pieces,
        // with the eigensystem taken straight from the data matrix.
        Some(tol) => {
            if !(tol.is_finite() && tol > 0.0 && tol < 1.0) {
                return Err(usage(format!(
                    "--tol must lie strictly between 0 and 1, got {tol}"
                )));
            }
            let sys = data_eigensystem(&x.view(), dims.q(), tol).map_err(runtime)?;
            let psi = psi_haff(sys.values(), &rule).map_err(runtime)?;
            oi_estimate(&sys, &psi, optimal_constant(&dims)).map_err(runtime)?
        }
    };
    let rendered = write_matrix(&estimate.to_matrix().as_array().view());
    write_file(&args.out, &rendered)?;
    println!(
        "estimated a rank-{} covariance for p={p}, n={n}; wrote {}",
        dims.q(),
        args.out.display()
    );
    Ok(())
}

struct ComboSummary {
    alpha: f64,
    b: f64,
    asserted: bool,
    majorization_failures: usize,
    trace_failures: usize,
    min_log_gap: f64,
    risk_bound: f64,
}

fn cmd_verify(args: VerifyArgs) -> Result<(), AppError> {
    let p = args.p.unwrap_or(args.r);
    let dims = Dimensions::new(p, args.n, args.r).map_err(usage)?;
    let q = dims.q();
    let b_o = dominance_bound(&dims);
    let masses: Vec<f64> = match &args.bs {
        Some(list) => list.0.clone(),
        None => {
            if b_o <= 0.0 {
                return Err(usage(
                    "the critical shrinkage mass is zero when min(n, r) = 1; pass --bs",
                ));
            }
            vec![b_o]
        }
    };
    if args.trials == 0 {
        return Err(usage("--trials must be at least 1"));
    }

    println!(
        "dims: p={} n={} r={} (q={q}, m={}), critical mass b_o={b_o:.6}",
        dims.p(),
        dims.n(),
        dims.r(),
        dims.m()
    );

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(args.seed);
    let spectra: Vec<ndarray::Array1<f64>> = (0..args.trials)
        .map(|_| random_spectrum(q, &mut rng))
        .collect();

    let mut any_asserted_failure = false;
    let mut summaries = Vec::new();
    for &alpha in &args.alphas.0 {
        for &b in &masses {
            let rule = ShrinkageRule::new(alpha, b).map_err(usage)?;
            let asserted = alpha >= 1.0 && b <= b_o * (1.0 + 1e-12) && b_o > 0.0;
            let mut summary = ComboSummary {
                alpha,
                b,
                asserted,
                majorization_failures: 0,
                trace_failures: 0,
                min_log_gap: f64::INFINITY,
                risk_bound: f64::NAN,
            };
            for spectrum in &spectra {
                let diag: ProofDiagnostics = diagnose(spectrum, &rule, &dims).map_err(runtime)?;
                if !diag.majorization_ok {
                    summary.majorization_failures += 1;
                }
                if !diag.trace_submult_ok {
                    summary.trace_failures += 1;
                }
                summary.min_log_gap = summary.min_log_gap.min(diag.log_bound_gap);
                summary.risk_bound = diag.risk_diff_bound;
            }
            let combo_ok = summary.majorization_failures == 0
                && summary.trace_failures == 0
                && summary.min_log_gap >= -INEQUALITY_SLACK;
            if asserted && !combo_ok {
                any_asserted_failure = true;
            }
            summaries.push(summary);
        }
    }

    println!("alpha      b  domain        majorization      trace   min-log-gap  risk-bound");
    for s in &summaries {
        println!(
            "{:>5} {:>6.3}  {:<12} {:>6}/{} ok {:>6}/{} ok  {:>12.3e} {:>11.3e}",
            s.alpha,
            s.b,
            if s.asserted {
                "asserted"
            } else {
                "informational"
            },
            args.trials - s.majorization_failures,
            args.trials,
            args.trials - s.trace_failures,
            args.trials,
            s.min_log_gap,
            s.risk_bound
        );
    }

    if any_asserted_failure {
        Err(runtime(
            "an inequality failed inside its guaranteed domain (alpha >= 1, 0 < b <= b_o)",
        ))
    } else {
        println!("all asserted inequalities hold");
        Ok(())
    }
}

/// Strictly descending positive spectrum with log-normal spread.
fn random_spectrum<R: rand::Rng + ?Sized>(len: usize, rng: &mut R) -> ndarray::Array1<f64> {
    let dist = LogNormal::new(0.0, 1.0).expect("valid parameters");
    loop {
        let mut values: Vec<f64> = (0..len).map(|_| dist.sample(rng)).collect();
        values.sort_by(|a, b| b.total_cmp(a));
        if len == 1 || values.windows(2).all(|w| w[0] > w[1]) {
            return ndarray::Array1::from_vec(values);
        }
    }
}
