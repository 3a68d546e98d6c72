//! Stein's entropy loss for rank-deficient truths and estimates:
//! `L = tr(Sigma^+ Sigma_hat) - ln|positive spectrum of Sigma^+ Sigma_hat| - q`.
//!
//! The positive spectrum of the `p x p` product is never computed directly.
//! With an estimate `a * H D H^T` it equals the spectrum of the symmetric
//! `q x q` surrogate `a * D^{1/2} (H^T Sigma^+ H) D^{1/2}`, which is what the
//! evaluator diagonalizes.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::estimators::{oi_estimate, EstimatorOutput};
use crate::linalg::{positive_count, sym_eig, EigenSystem, SymMatrix};
use crate::model::Dimensions;

/// One evaluated loss, split into its terms: `value = trace_term -
/// logdet_term - q` with `q` the estimate's rank.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossValue {
    pub value: f64,
    pub trace_term: f64,
    pub logdet_term: f64,
}

/// Loss machinery for a fixed truth: factors `Sigma^+ = C C^T` once so that
/// repeated evaluations only touch `q x q` problems.
#[derive(Debug, Clone)]
pub struct LossEvaluator {
    /// `p x r` with `C C^T = Sigma^+`.
    pinv_factor: Array2<f64>,
    dim: usize,
    tol: f64,
}

impl LossEvaluator {
    /// Requires `sigma` PSD with numerical rank exactly `r` (relative to
    /// `tol * lambda_max`).
    pub fn new(sigma: &SymMatrix, r: usize, tol: f64) -> Result<Self> {
        if r == 0 || r > sigma.dim() {
            return Err(Error::InvalidParameter {
                what: "r",
                value: r as f64,
                reason: "rank must satisfy 1 <= r <= p",
            });
        }
        let eig = sym_eig(sigma);
        let scale = eig.values()[0].max(0.0);
        let min = eig.values()[sigma.dim() - 1];
        if min < -tol * scale {
            return Err(Error::NotPositiveSemiDefinite { eigenvalue: min });
        }
        let observed = positive_count(eig.values(), tol);
        if observed != r {
            return Err(Error::RankMismatch {
                expected: r,
                observed,
            });
        }
        let mut pinv_factor = eig.vectors().slice(ndarray::s![.., ..r]).to_owned();
        for (mut col, &v) in pinv_factor
            .columns_mut()
            .into_iter()
            .zip(eig.values().iter())
        {
            let inv_root = 1.0 / v.sqrt();
            col.mapv_inplace(|x| x * inv_root);
        }
        Ok(Self {
            pinv_factor,
            dim: sigma.dim(),
            tol,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Pins the estimate's basis: computes `G = H^T Sigma^+ H` once, after
    /// which any diagonal riding on that basis is a `q x q` evaluation.
    pub fn with_basis(&self, basis: &Array2<f64>) -> Result<BasisLoss> {
        if basis.nrows() != self.dim {
            return Err(Error::DimensionMismatch {
                what: "basis rows",
                expected: self.dim,
                actual: basis.nrows(),
            });
        }
        let w = self.pinv_factor.t().dot(basis);
        let q = basis.ncols();
        let mut gram = Array2::<f64>::zeros((q, q));
        for i in 0..q {
            for j in 0..=i {
                let acc = w.column(i).dot(&w.column(j));
                gram[[i, j]] = acc;
                gram[[j, i]] = acc;
            }
        }
        Ok(BasisLoss {
            gram,
            tol: self.tol,
        })
    }

    /// Loss of a factored estimate against this truth.
    pub fn loss(&self, estimate: &EstimatorOutput) -> Result<LossValue> {
        if estimate.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                what: "estimate dimension",
                expected: self.dim,
                actual: estimate.dim(),
            });
        }
        self.with_basis(estimate.basis())?
            .loss(estimate.scale(), estimate.diag())
    }
}

/// `G = H^T Sigma^+ H` for a fixed basis `H`, ready to price any diagonal.
#[derive(Debug, Clone)]
pub struct BasisLoss {
    gram: Array2<f64>,
    tol: f64,
}

impl BasisLoss {
    /// Loss of `scale * H diag(diag) H^T`. The surrogate
    /// `scale * D^{1/2} G D^{1/2}` must have `q` positive eigenvalues above
    /// tolerance — fewer means the estimate leaks outside the truth's range
    /// and the loss is undefined.
    pub fn loss(&self, scale: f64, diag: &Array1<f64>) -> Result<LossValue> {
        let q = self.gram.nrows();
        if diag.len() != q {
            return Err(Error::DimensionMismatch {
                what: "diagonal length",
                expected: q,
                actual: diag.len(),
            });
        }
        let roots: Vec<f64> = diag.iter().map(|&d| d.sqrt()).collect();
        let mut surrogate = Array2::<f64>::zeros((q, q));
        for i in 0..q {
            for j in 0..=i {
                let v = scale * roots[i] * roots[j] * self.gram[[i, j]];
                surrogate[[i, j]] = v;
                surrogate[[j, i]] = v;
            }
        }
        let eig = sym_eig(&SymMatrix::from_parts_unchecked(surrogate));
        let positive = positive_count(eig.values(), self.tol);
        if positive < q {
            return Err(Error::DegenerateConfiguration {
                positive,
                required: q,
            });
        }
        let trace_term: f64 = eig.values().iter().sum();
        let logdet_term: f64 = eig.values().iter().map(|&v| v.ln()).sum();
        Ok(LossValue {
            value: trace_term - logdet_term - q as f64,
            trace_term,
            logdet_term,
        })
    }
}

/// Stein loss of an estimate against a truth of rank `dims.r()` whose
/// estimate rank must be `dims.q()`.
pub fn stein_loss(
    estimate: &EstimatorOutput,
    sigma: &SymMatrix,
    dims: &Dimensions,
    tol: f64,
) -> Result<LossValue> {
    if sigma.dim() != dims.p() {
        return Err(Error::DimensionMismatch {
            what: "sigma dimension",
            expected: dims.p(),
            actual: sigma.dim(),
        });
    }
    if estimate.rank() != dims.q() {
        return Err(Error::DimensionMismatch {
            what: "estimate rank",
            expected: dims.q(),
            actual: estimate.rank(),
        });
    }
    LossEvaluator::new(sigma, dims.r(), tol)?.loss(estimate)
}

/// Consistency gap between the two log-determinant routes for an invariant
/// estimate `a * H L (I + diag(psi)) H^T`:
/// the surrogate's `ln|spectrum|` versus
/// `q ln a + ln|L^{1/2} (H^T Sigma^+ H) L^{1/2}| + sum ln(1 + psi_i)`.
///
/// Returns the absolute difference; they agree up to roundoff whenever the
/// configuration is nondegenerate.
pub fn logdet_factorization_check(
    eigen: &EigenSystem,
    psi: &Array1<f64>,
    a: f64,
    sigma: &SymMatrix,
    r: usize,
    tol: f64,
) -> Result<f64> {
    let estimate = oi_estimate(eigen, psi, a)?;
    let evaluator = LossEvaluator::new(sigma, r, tol)?;
    let direct = evaluator.loss(&estimate)?.logdet_term;

    let basis_loss = evaluator.with_basis(eigen.basis())?;
    let q = eigen.rank();
    // ln|L^{1/2} G L^{1/2}| through the same q x q machinery with unit scale
    // and no shrinkage: its logdet term is exactly that determinant.
    let inner = basis_loss.loss(1.0, eigen.values())?.logdet_term;
    let ln_phi: f64 = psi.iter().map(|&v| v.ln_1p()).sum();
    let factored = q as f64 * a.ln() + inner + ln_phi;
    Ok((direct - factored).abs())
}
