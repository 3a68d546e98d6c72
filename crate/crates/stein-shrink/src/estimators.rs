//! Eigenvalue-shrinkage estimators of a (possibly singular) covariance.
//!
//! Everything here acts on the rank-`q` eigensystem `S = H L H^T`: the
//! natural family `a * S`, its risk-optimal scaling `a = 1/m`, and the
//! orthogonally invariant family `a * H L (I + Psi(L)) H^T` with the
//! inverse-power weights `Psi` that move mass toward the small sample
//! eigenvalues.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::linalg::{
    default_rank_tol, positive_count, spectral_reconstruct, sym_eig, truncate_to_rank, EigenSystem,
    SymMatrix,
};
use crate::model::Dimensions;

/// Parameters of the inverse-power shrinkage weights: exponent `alpha` and
/// total mass `b` (both strictly positive).
///
/// Risk dominance over the optimal constant multiple is guaranteed for
/// `alpha >= 1` and `0 < b <= dominance_bound(dims)`; smaller exponents in
/// `(0, 1)` are accepted and often competitive, but carry no guarantee.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShrinkageRule {
    alpha: f64,
    b: f64,
}

impl ShrinkageRule {
    pub fn new(alpha: f64, b: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidParameter {
                what: "alpha",
                value: alpha,
                reason: "exponent must be finite and strictly positive",
            });
        }
        if !(b.is_finite() && b > 0.0) {
            return Err(Error::InvalidParameter {
                what: "b",
                value: b,
                reason: "shrinkage mass must be finite and strictly positive",
            });
        }
        Ok(Self { alpha, b })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn b(&self) -> f64 {
        self.b
    }
}

/// The scaling `a_o = 1/m`, `m = max(n, r)`, that minimizes the risk of
/// `a * S` among constants.
pub fn optimal_constant(dims: &Dimensions) -> f64 {
    1.0 / dims.m() as f64
}

/// Largest shrinkage mass with a dominance guarantee:
/// `b_o = 2(q - 1) / (m - q + 1)`.
///
/// For `q = 1` this returns `0`: with a single positive sample eigenvalue no
/// positive mass is guaranteed to improve on the optimal constant multiple.
pub fn dominance_bound(dims: &Dimensions) -> f64 {
    let q = dims.q();
    let m = dims.m();
    if q <= 1 {
        0.0
    } else {
        2.0 * (q - 1) as f64 / (m - q + 1) as f64
    }
}

/// Inverse-power weights `psi_i = b * l_i^{-alpha} / sum_j l_j^{-alpha}`.
///
/// Computed from the ratios `(l_min / l_i)^alpha <= 1`, which keeps the
/// powers from overflowing however wide the spectrum; the weights sum to `b`
/// by construction.
pub fn psi_haff(values: &Array1<f64>, rule: &ShrinkageRule) -> Result<Array1<f64>> {
    for (index, &value) in values.iter().enumerate() {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::NonPositiveEigenvalue { index, value });
        }
    }
    let l_min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let powers: Array1<f64> = values.mapv(|l| (l_min / l).powf(rule.alpha));
    let total: f64 = powers.sum();
    Ok(powers.mapv(|t| rule.b * t / total))
}

/// An estimate in factored form `scale * basis * diag(diag) * basis^T`.
///
/// `basis` has orthonormal columns and `diag` is strictly positive, so the
/// estimate is PSD with rank exactly `diag.len()`. The diagonal is aligned
/// with the basis columns and is not required to be sorted: shrinkage can
/// reorder the spectrum.
#[derive(Debug, Clone)]
pub struct EstimatorOutput {
    scale: f64,
    basis: Array2<f64>,
    diag: Array1<f64>,
}

/// Per-entry tolerance for the orthonormality of a user-supplied basis.
const BASIS_ORTHONORMALITY_TOLERANCE: f64 = 1e-10;

impl EstimatorOutput {
    /// Builds an estimate from explicit pieces, validating positivity and the
    /// orthonormality of `basis` (per entry, within `1e-10`).
    pub fn new(scale: f64, basis: Array2<f64>, diag: Array1<f64>) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidParameter {
                what: "scale",
                value: scale,
                reason: "scaling must be finite and strictly positive",
            });
        }
        if basis.ncols() != diag.len() {
            return Err(Error::DimensionMismatch {
                what: "diagonal length",
                expected: basis.ncols(),
                actual: diag.len(),
            });
        }
        if diag.is_empty() || basis.nrows() < basis.ncols() {
            return Err(Error::InvalidParameter {
                what: "rank",
                value: diag.len() as f64,
                reason: "rank must satisfy 1 <= q <= dim",
            });
        }
        for (index, &value) in diag.iter().enumerate() {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::NonPositiveEigenvalue { index, value });
            }
        }
        let gram = basis.t().dot(&basis);
        for ((i, j), &v) in gram.indexed_iter() {
            let expected = if i == j { 1.0 } else { 0.0 };
            if (v - expected).abs() > BASIS_ORTHONORMALITY_TOLERANCE {
                return Err(Error::InvalidParameter {
                    what: "basis",
                    value: v,
                    reason: "columns must be orthonormal",
                });
            }
        }
        Ok(Self { scale, basis, diag })
    }

    fn from_parts(scale: f64, basis: Array2<f64>, diag: Array1<f64>) -> Self {
        debug_assert!(scale > 0.0 && diag.iter().all(|&d| d > 0.0));
        Self { scale, basis, diag }
    }

    /// Extracts the factored form of a PSD matrix whose numerical rank must
    /// be exactly `q`.
    pub fn from_matrix(matrix: &SymMatrix, q: usize, tol: f64) -> Result<Self> {
        let eig = sym_eig(matrix);
        let scale = eig.values()[0].max(0.0);
        let min = eig.values()[matrix.dim() - 1];
        if min < -tol * scale {
            return Err(Error::NotPositiveSemiDefinite { eigenvalue: min });
        }
        let observed = positive_count(eig.values(), tol);
        if observed != q {
            return Err(Error::RankMismatch {
                expected: q,
                observed,
            });
        }
        let sys = truncate_to_rank(&eig, q, tol)?;
        Ok(Self::from_parts(
            1.0,
            sys.basis().clone(),
            sys.values().clone(),
        ))
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    /// Rank of the estimate.
    pub fn rank(&self) -> usize {
        self.diag.len()
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn basis(&self) -> &Array2<f64> {
        &self.basis
    }

    /// Inner diagonal, before the global scaling.
    pub fn diag(&self) -> &Array1<f64> {
        &self.diag
    }

    /// The nonzero eigenvalues `scale * diag`, aligned with the basis
    /// columns (not sorted).
    pub fn eigenvalues(&self) -> Array1<f64> {
        self.diag.mapv(|d| self.scale * d)
    }

    /// Materializes the `dim x dim` matrix.
    pub fn to_matrix(&self) -> SymMatrix {
        let scaled: Vec<f64> = self.diag.iter().map(|d| self.scale * d).collect();
        spectral_reconstruct(self.basis.view(), &scaled)
    }
}

/// The natural family `a * S`. The output keeps every eigenvalue of `S`
/// above the default rank threshold.
pub fn natural_estimate(s: &SymMatrix, a: f64) -> Result<EstimatorOutput> {
    if !(a.is_finite() && a > 0.0) {
        return Err(Error::InvalidParameter {
            what: "a",
            value: a,
            reason: "scaling must be finite and strictly positive",
        });
    }
    let tol = default_rank_tol(s.dim());
    let eig = sym_eig(s);
    let scale = eig.values()[0].max(0.0);
    let min = eig.values()[s.dim() - 1];
    if min < -tol * scale {
        return Err(Error::NotPositiveSemiDefinite { eigenvalue: min });
    }
    let observed = positive_count(eig.values(), tol);
    if observed == 0 {
        return Err(Error::RankMismatch {
            expected: 1,
            observed: 0,
        });
    }
    let sys = truncate_to_rank(&eig, observed, tol)?;
    Ok(EstimatorOutput::from_parts(
        a,
        sys.basis().clone(),
        sys.values().clone(),
    ))
}

/// Orthogonally invariant estimate `a * H L (I + diag(psi)) H^T` built from
/// an eigensystem and explicit weights.
pub fn oi_estimate(eigen: &EigenSystem, psi: &Array1<f64>, a: f64) -> Result<EstimatorOutput> {
    if !(a.is_finite() && a > 0.0) {
        return Err(Error::InvalidParameter {
            what: "a",
            value: a,
            reason: "scaling must be finite and strictly positive",
        });
    }
    if psi.len() != eigen.rank() {
        return Err(Error::DimensionMismatch {
            what: "psi length",
            expected: eigen.rank(),
            actual: psi.len(),
        });
    }
    let mut diag = Array1::<f64>::zeros(eigen.rank());
    for (i, (&l, &psi_i)) in eigen.values().iter().zip(psi.iter()).enumerate() {
        let phi = 1.0 + psi_i;
        if !(phi.is_finite() && phi > 0.0) {
            return Err(Error::InvalidParameter {
                what: "psi",
                value: psi_i,
                reason: "1 + psi must stay finite and strictly positive",
            });
        }
        diag[i] = l * phi;
    }
    Ok(EstimatorOutput::from_parts(a, eigen.basis().clone(), diag))
}

/// The full pipeline on a sample covariance: decompose `S`, keep the top
/// `q = min(n, r)` eigenpairs, apply the inverse-power weights with total
/// mass `rule.b`, and scale by the optimal constant `1/m`.
pub fn haff_estimate(
    s: &SymMatrix,
    dims: &Dimensions,
    rule: &ShrinkageRule,
) -> Result<EstimatorOutput> {
    if s.dim() != dims.p() {
        return Err(Error::DimensionMismatch {
            what: "sample covariance dimension",
            expected: dims.p(),
            actual: s.dim(),
        });
    }
    let tol = default_rank_tol(dims.p());
    let eig = sym_eig(s);
    let scale = eig.values()[0].max(0.0);
    let min = eig.values()[s.dim() - 1];
    if min < -tol * scale {
        return Err(Error::NotPositiveSemiDefinite { eigenvalue: min });
    }
    let sys = truncate_to_rank(&eig, dims.q(), tol)?;
    let psi = psi_haff(sys.values(), rule)?;
    oi_estimate(&sys, &psi, optimal_constant(dims))
}
