//! The data-generating model: a possibly rank-deficient covariance built from
//! a named structure, its factor `B` with `B B^T = Sigma`, and Gaussian draws
//! `X = B Z` whose unnormalized sample covariance `S = X X^T` the estimators
//! consume.
//!
//! Randomness is organized as one master seed plus one counter-mode stream per
//! replication, so replication `k` produces the same data no matter how many
//! workers run or in which order they finish.

use ndarray::{Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{positive_count, spectral_reconstruct, sym_eig, SymMatrix};

/// Covariance structure of the truth, before rank truncation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Structure {
    /// `diag(1, ..., 1, 0, ..., 0)` with `r` ones.
    Identity,
    /// Autoregressive profile `sigma_ij = rho^|i-j|`, truncated to rank `r`
    /// by zeroing the `p - r` smallest eigenvalues.
    Ar { rho: f64 },
}

impl Structure {
    pub fn kind(&self) -> StructureKind {
        match self {
            Structure::Identity => StructureKind::Identity,
            Structure::Ar { .. } => StructureKind::Ar,
        }
    }
}

/// Structure label without parameters; the form that report rows carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StructureKind {
    Identity,
    Ar,
}

impl std::fmt::Display for StructureKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StructureKind::Identity => "identity",
            StructureKind::Ar => "ar",
        })
    }
}

impl std::str::FromStr for StructureKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "identity" => Ok(StructureKind::Identity),
            "ar" => Ok(StructureKind::Ar),
            other => Err(format!(
                "unknown structure {other:?} (expected \"identity\" or \"ar\")"
            )),
        }
    }
}

/// A validated description of the population covariance: structure plus
/// ambient dimension `p` and rank `r <= p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceSpec {
    structure: Structure,
    p: usize,
    r: usize,
}

impl CovarianceSpec {
    pub fn new(structure: Structure, p: usize, r: usize) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidParameter {
                what: "p",
                value: p as f64,
                reason: "dimension must be at least 1",
            });
        }
        if r == 0 || r > p {
            return Err(Error::InvalidParameter {
                what: "r",
                value: r as f64,
                reason: "rank must satisfy 1 <= r <= p",
            });
        }
        if let Structure::Ar { rho } = structure {
            if !(rho > 0.0 && rho < 1.0) || !rho.is_finite() {
                return Err(Error::InvalidParameter {
                    what: "rho",
                    value: rho,
                    reason: "autoregression coefficient must lie in (0, 1)",
                });
            }
        }
        Ok(Self { structure, p, r })
    }

    pub fn structure(&self) -> Structure {
        self.structure
    }

    pub fn kind(&self) -> StructureKind {
        self.structure.kind()
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn r(&self) -> usize {
        self.r
    }
}

/// Problem dimensions. `q = min(n, r)` is the almost-sure rank of `S`;
/// `m = max(n, r)` drives the optimal scaling constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dimensions {
    p: usize,
    n: usize,
    r: usize,
}

impl Dimensions {
    pub fn new(p: usize, n: usize, r: usize) -> Result<Self> {
        if p == 0 || n == 0 || r == 0 {
            return Err(Error::InvalidParameter {
                what: "dimensions",
                value: 0.0,
                reason: "p, n, r must all be at least 1",
            });
        }
        if r > p {
            return Err(Error::InvalidParameter {
                what: "r",
                value: r as f64,
                reason: "rank must satisfy r <= p",
            });
        }
        Ok(Self { p, n, r })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn q(&self) -> usize {
        self.n.min(self.r)
    }

    pub fn m(&self) -> usize {
        self.n.max(self.r)
    }
}

/// Builds the population covariance for a spec. Identity: ones then zeros on
/// the diagonal. Ar: the rho-power matrix, eigendecomposed with the `p - r`
/// smallest eigenvalues zeroed (when `r = p` nothing is dropped and the
/// formula matrix is returned as is).
pub fn build_sigma(spec: &CovarianceSpec) -> SymMatrix {
    match spec.structure {
        Structure::Identity => {
            let diag: Vec<f64> = (0..spec.p)
                .map(|i| if i < spec.r { 1.0 } else { 0.0 })
                .collect();
            SymMatrix::from_diagonal(&diag)
        }
        Structure::Ar { rho } => {
            let mut full = Array2::<f64>::zeros((spec.p, spec.p));
            for i in 0..spec.p {
                for j in 0..=i {
                    let v = rho.powi((i - j) as i32);
                    full[[i, j]] = v;
                    full[[j, i]] = v;
                }
            }
            let full = SymMatrix::from_parts_unchecked(full);
            if spec.r == spec.p {
                return full;
            }
            let eig = sym_eig(&full);
            spectral_reconstruct(
                eig.vectors().slice(ndarray::s![.., ..spec.r]),
                &eig.values().as_slice().unwrap()[..spec.r],
            )
        }
    }
}

/// A factor `B` (p x r) with `B B^T = Sigma`.
#[derive(Debug, Clone)]
pub struct FactorMatrix {
    entries: Array2<f64>,
}

impl FactorMatrix {
    pub fn p(&self) -> usize {
        self.entries.nrows()
    }

    pub fn r(&self) -> usize {
        self.entries.ncols()
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.entries
    }
}

/// Spectral factorization `B = U_r diag(sqrt(lambda))` of a PSD matrix whose
/// numerical rank must be exactly `r`.
pub fn factorize(sigma: &SymMatrix, r: usize, tol: f64) -> Result<FactorMatrix> {
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
    let mut entries = eig.vectors().slice(ndarray::s![.., ..r]).to_owned();
    for (mut col, &v) in entries.columns_mut().into_iter().zip(eig.values().iter()) {
        let root = v.sqrt();
        col.mapv_inplace(|x| x * root);
    }
    Ok(FactorMatrix { entries })
}

/// Draws `X = B Z` with `Z` an `r x n` matrix of iid standard normals, filled
/// in row-major order so a given RNG state always yields the same data.
pub fn sample_data<R: Rng + ?Sized>(b: &FactorMatrix, n: usize, rng: &mut R) -> Array2<f64> {
    assert!(n > 0, "sample size must be positive");
    let r = b.r();
    let mut z = Array2::<f64>::zeros((r, n));
    for i in 0..r {
        for j in 0..n {
            z[[i, j]] = rng.sample(StandardNormal);
        }
    }
    b.as_array().dot(&z)
}

/// Unnormalized sample covariance `S = X X^T` (no division by `n`).
pub fn sample_cov(x: &ArrayView2<'_, f64>) -> SymMatrix {
    let prod = x.dot(&x.t());
    let sym = (&prod + &prod.t()) / 2.0;
    SymMatrix::from_parts_unchecked(sym)
}

/// The RNG for one replication: ChaCha8 keyed by the master seed with the
/// replication index as the stream counter, so streams are mutually
/// independent and replication `k` is reproducible in isolation.
pub fn replication_rng(master_seed: u64, replication: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(replication);
    rng
}
