//! Monte Carlo risk estimation and PRIAL tables.
//!
//! Replication `k` of a run draws its data from an RNG stream derived from
//! `(master_seed, k)`, and results are reduced in replication order, so a
//! run's output is bit-identical for any worker count. Within a setting,
//! every estimator prices the same per-replication dataset (common random
//! numbers); the pairing is recorded as a digest of the raw data and checked
//! when samples are combined into a PRIAL.

use ndarray::{Array1, Array2};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::{dominance_bound, optimal_constant, psi_haff, ShrinkageRule};
use crate::linalg::{data_eigensystem, default_rank_tol};
use crate::loss::LossEvaluator;
use crate::model::{
    build_sigma, factorize, replication_rng, sample_data, CovarianceSpec, Dimensions,
};
use crate::report::{PrialReport, PrialRow};

/// FNV-1a over the matrix entries' IEEE bit patterns, in storage order.
/// Identifies a dataset for pairing checks.
fn digest_data(x: &Array2<f64>) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &v in x.iter() {
        for byte in v.to_bits().to_le_bytes() {
            h ^= u64::from(byte);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

/// One Monte Carlo experiment: a population covariance recipe, a sample
/// size, the shrinkage exponents to sweep, and the run bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    spec: CovarianceSpec,
    n: usize,
    alphas: Vec<f64>,
    /// Total shrinkage mass; `None` means the critical mass for the
    /// configured dimensions.
    b: Option<f64>,
    replications: usize,
    master_seed: u64,
    tol: f64,
}

impl ExperimentConfig {
    /// `alphas` must be nonempty, finite and positive; `replications >= 2`
    /// so standard errors exist. The rank tolerance defaults to
    /// `default_rank_tol(max(p, n))` and the shrinkage mass to the critical
    /// one; see `with_tol` / `with_shrinkage_mass`.
    pub fn new(
        spec: CovarianceSpec,
        n: usize,
        alphas: Vec<f64>,
        replications: usize,
        master_seed: u64,
    ) -> Result<Self> {
        // Validates n and the (p, n, r) combination.
        let dims = Dimensions::new(spec.p(), n, spec.r())?;
        if alphas.is_empty() {
            return Err(Error::InvalidParameter {
                what: "alphas",
                value: 0.0,
                reason: "at least one shrinkage exponent is required",
            });
        }
        for &alpha in &alphas {
            if !(alpha.is_finite() && alpha > 0.0) {
                return Err(Error::InvalidParameter {
                    what: "alpha",
                    value: alpha,
                    reason: "exponents must be finite and strictly positive",
                });
            }
        }
        if replications < 2 {
            return Err(Error::InvalidParameter {
                what: "replications",
                value: replications as f64,
                reason: "at least two replications are needed for a standard error",
            });
        }
        let tol = default_rank_tol(dims.p().max(dims.n()));
        Ok(Self {
            spec,
            n,
            alphas,
            b: None,
            replications,
            master_seed,
            tol,
        })
    }

    /// Overrides the rank-decision tolerance (relative to the largest
    /// eigenvalue).
    pub fn with_tol(mut self, tol: f64) -> Result<Self> {
        if !(tol.is_finite() && tol > 0.0 && tol < 1.0) {
            return Err(Error::InvalidParameter {
                what: "tol",
                value: tol,
                reason: "tolerance must lie strictly between 0 and 1",
            });
        }
        self.tol = tol;
        Ok(self)
    }

    /// Overrides the total shrinkage mass shared by all exponents.
    pub fn with_shrinkage_mass(mut self, b: f64) -> Result<Self> {
        if !(b.is_finite() && b > 0.0) {
            return Err(Error::InvalidParameter {
                what: "b",
                value: b,
                reason: "shrinkage mass must be finite and strictly positive",
            });
        }
        self.b = Some(b);
        Ok(self)
    }

    pub fn spec(&self) -> &CovarianceSpec {
        &self.spec
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn replications(&self) -> usize {
        self.replications
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn dims(&self) -> Dimensions {
        Dimensions::new(self.spec.p(), self.n, self.spec.r()).expect("validated at construction")
    }

    /// The shrinkage mass in force: the explicit override, or the critical
    /// mass for these dimensions. Zero (only possible at q = 1 with no
    /// override) admits no shrinkage rule.
    pub fn effective_mass(&self) -> f64 {
        self.b.unwrap_or_else(|| dominance_bound(&self.dims()))
    }
}

/// Estimator to price in a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Estimator {
    /// `a * S`.
    Natural { a: f64 },
    /// `S / max(n, r)` — the best constant multiple of `S`.
    Optimal,
    /// Eigenvalue shrinkage at the optimal scale.
    Haff { rule: ShrinkageRule },
}

/// Mean loss with its Monte Carlo standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskEstimate {
    pub mean_loss: f64,
    pub std_error: f64,
    pub replications: usize,
}

/// Per-replication losses of one estimator, tagged with the digest of each
/// replication's dataset so paired comparisons can prove they shared data.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskSample {
    losses: Vec<f64>,
    digests: Vec<u64>,
}

impl RiskSample {
    fn from_parts(losses: Vec<f64>, digests: Vec<u64>) -> Self {
        debug_assert_eq!(losses.len(), digests.len());
        debug_assert!(losses.len() >= 2);
        Self { losses, digests }
    }

    pub fn len(&self) -> usize {
        self.losses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.losses.is_empty()
    }

    pub fn losses(&self) -> &[f64] {
        &self.losses
    }

    pub fn digests(&self) -> &[u64] {
        &self.digests
    }

    /// Mean and standard error (sample SD over the square root of the
    /// count), accumulated in replication order.
    pub fn estimate(&self) -> RiskEstimate {
        let n = self.losses.len() as f64;
        let mean_loss = self.losses.iter().sum::<f64>() / n;
        let ss: f64 = self
            .losses
            .iter()
            .map(|&v| (v - mean_loss) * (v - mean_loss))
            .sum();
        let std_error = (ss / (n - 1.0)).sqrt() / n.sqrt();
        RiskEstimate {
            mean_loss,
            std_error,
            replications: self.losses.len(),
        }
    }
}

/// PRIAL with its delta-method standard error, in percent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrialEstimate {
    pub percent: f64,
    pub se_percent: f64,
}

/// Percentage reduction in average loss of `alternative` over `reference`:
/// `100 (mean_ref - mean_alt) / mean_ref`.
///
/// Both samples must price the same datasets (equal digests, replication by
/// replication). The standard error comes from the delta method on the
/// paired losses: with `theta = mean_alt / mean_ref`, it is
/// `100 * sd(alt_k - theta * ref_k) / (mean_ref * sqrt(N))`.
/// A sample compared against itself yields exactly zero with zero error.
pub fn prial(reference: &RiskSample, alternative: &RiskSample) -> Result<PrialEstimate> {
    if reference.len() != alternative.len() {
        return Err(Error::DimensionMismatch {
            what: "replication count",
            expected: reference.len(),
            actual: alternative.len(),
        });
    }
    for (k, (rd, ad)) in reference
        .digests
        .iter()
        .zip(alternative.digests.iter())
        .enumerate()
    {
        if rd != ad {
            return Err(Error::UnpairedSamples { replication: k });
        }
    }
    let n = reference.len() as f64;
    let mean_ref = reference.losses.iter().sum::<f64>() / n;
    let mean_alt = alternative.losses.iter().sum::<f64>() / n;
    if mean_ref.is_nan() || mean_ref <= 0.0 {
        return Err(Error::NonPositiveReferenceRisk { value: mean_ref });
    }
    let theta = mean_alt / mean_ref;
    let percent = 100.0 * (1.0 - theta);
    let residual = |k: usize| alternative.losses[k] - theta * reference.losses[k];
    let res_mean = (0..reference.len()).map(residual).sum::<f64>() / n;
    let ss: f64 = (0..reference.len())
        .map(|k| {
            let d = residual(k) - res_mean;
            d * d
        })
        .sum();
    let se_percent = 100.0 * (ss / (n - 1.0)).sqrt() / (mean_ref * n.sqrt());
    Ok(PrialEstimate {
        percent,
        se_percent,
    })
}

enum Prepared {
    Constant { a: f64 },
    Weighted { a: f64, rule: ShrinkageRule },
}

fn prepare(estimator: &Estimator, dims: &Dimensions) -> Result<Prepared> {
    match *estimator {
        Estimator::Natural { a } => {
            if !(a.is_finite() && a > 0.0) {
                return Err(Error::InvalidParameter {
                    what: "a",
                    value: a,
                    reason: "scale must be finite and strictly positive",
                });
            }
            Ok(Prepared::Constant { a })
        }
        Estimator::Optimal => Ok(Prepared::Constant {
            a: optimal_constant(dims),
        }),
        Estimator::Haff { rule } => Ok(Prepared::Weighted {
            a: optimal_constant(dims),
            rule,
        }),
    }
}

/// Shared engine: losses of every prepared estimator on every replication's
/// dataset. Returns the per-replication digests and one loss column per
/// estimator.
fn run_replications(
    config: &ExperimentConfig,
    estimators: &[Estimator],
) -> Result<(Vec<u64>, Vec<Vec<f64>>)> {
    let dims = config.dims();
    let sigma = build_sigma(config.spec());
    let factor = factorize(&sigma, dims.r(), config.tol())?;
    let evaluator = LossEvaluator::new(&sigma, dims.r(), config.tol())?;
    let prepared: Vec<Prepared> = estimators
        .iter()
        .map(|e| prepare(e, &dims))
        .collect::<Result<_>>()?;

    let outcomes: Vec<Result<(u64, Vec<f64>)>> = (0..config.replications())
        .into_par_iter()
        .map(|k| {
            one_replication(k, &factor, &evaluator, &dims, &prepared, config).map_err(|e| {
                Error::Replication {
                    index: k,
                    source: Box::new(e),
                }
            })
        })
        .collect();

    let mut digests = Vec::with_capacity(config.replications());
    let mut columns = vec![Vec::with_capacity(config.replications()); estimators.len()];
    // Sequential, in-order reduction: the first failing replication wins and
    // accumulation order never depends on scheduling.
    for outcome in outcomes {
        let (digest, losses) = outcome?;
        digests.push(digest);
        for (column, loss) in columns.iter_mut().zip(losses) {
            column.push(loss);
        }
    }
    Ok((digests, columns))
}

fn one_replication(
    k: usize,
    factor: &crate::model::FactorMatrix,
    evaluator: &LossEvaluator,
    dims: &Dimensions,
    prepared: &[Prepared],
    config: &ExperimentConfig,
) -> Result<(u64, Vec<f64>)> {
    let mut rng = replication_rng(config.master_seed(), k as u64);
    let x = sample_data(factor, dims.n(), &mut rng);
    let digest = digest_data(&x);
    let sys = data_eigensystem(&x.view(), dims.q(), config.tol())?;
    let basis_loss = evaluator.with_basis(sys.basis())?;
    let mut losses = Vec::with_capacity(prepared.len());
    for prep in prepared {
        let value = match prep {
            Prepared::Constant { a } => basis_loss.loss(*a, sys.values())?.value,
            Prepared::Weighted { a, rule } => {
                let psi = psi_haff(sys.values(), rule)?;
                let diag = Array1::from_iter(
                    sys.values()
                        .iter()
                        .zip(psi.iter())
                        .map(|(&l, &w)| l * (1.0 + w)),
                );
                basis_loss.loss(*a, &diag)?.value
            }
        };
        losses.push(value);
    }
    Ok((digest, losses))
}

/// Per-replication losses of one estimator under `config`.
pub fn risk_sample(config: &ExperimentConfig, estimator: &Estimator) -> Result<RiskSample> {
    let (digests, mut columns) = run_replications(config, std::slice::from_ref(estimator))?;
    Ok(RiskSample::from_parts(
        columns.pop().expect("one estimator in, one column out"),
        digests,
    ))
}

/// Mean loss of one estimator under `config`.
pub fn estimate_risk(config: &ExperimentConfig, estimator: &Estimator) -> Result<RiskEstimate> {
    Ok(risk_sample(config, estimator)?.estimate())
}

/// One priced exponent within a setting.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaRun {
    pub alpha: f64,
    pub sample: RiskSample,
    pub prial: PrialEstimate,
}

/// A full setting: the reference estimator and every shrinkage exponent,
/// all priced on the same replications.
#[derive(Debug, Clone, PartialEq)]
pub struct SettingRun {
    pub config: ExperimentConfig,
    pub reference: RiskSample,
    pub alternatives: Vec<AlphaRun>,
}

impl SettingRun {
    /// Report rows, one per exponent.
    pub fn rows(&self) -> Vec<PrialRow> {
        self.alternatives
            .iter()
            .map(|run| PrialRow {
                structure: self.config.spec().kind(),
                p: self.config.spec().p(),
                n: self.config.n(),
                r: self.config.spec().r(),
                alpha: run.alpha,
                prial_percent: run.prial.percent,
                se_percent: run.prial.se_percent,
                replications: self.config.replications(),
                seed: self.config.master_seed(),
            })
            .collect()
    }
}

/// Runs one setting: the optimal constant multiple of `S` as reference,
/// plus one shrinkage estimator per configured exponent, paired on the same
/// datasets.
pub fn run_setting(config: &ExperimentConfig) -> Result<SettingRun> {
    let b = config.effective_mass();
    if b.is_nan() || b <= 0.0 {
        return Err(Error::InvalidParameter {
            what: "b",
            value: b,
            reason: "critical shrinkage mass is zero here (q = 1); pass an explicit mass",
        });
    }
    let mut estimators = vec![Estimator::Optimal];
    for &alpha in config.alphas() {
        estimators.push(Estimator::Haff {
            rule: ShrinkageRule::new(alpha, b)?,
        });
    }
    let (digests, mut columns) = run_replications(config, &estimators)?;
    let mut samples: Vec<RiskSample> = columns
        .drain(..)
        .map(|losses| RiskSample::from_parts(losses, digests.clone()))
        .collect();
    let reference = samples.remove(0);
    let alternatives = config
        .alphas()
        .iter()
        .zip(samples)
        .map(|(&alpha, sample)| {
            let prial = prial(&reference, &sample)?;
            Ok(AlphaRun {
                alpha,
                sample,
                prial,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SettingRun {
        config: config.clone(),
        reference,
        alternatives,
    })
}

/// Runs every setting and collects all rows into one report.
pub fn run_table(configs: &[ExperimentConfig]) -> Result<PrialReport> {
    let mut rows = Vec::new();
    for config in configs {
        rows.extend(run_setting(config)?.rows());
    }
    PrialReport::new(rows)
}
