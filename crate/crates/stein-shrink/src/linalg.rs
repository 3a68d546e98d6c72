//! Symmetric matrices, their spectral decompositions, and the handful of
//! rank-aware operations the estimators are built from.
//!
//! The eigensolver is a Householder tridiagonalization followed by the
//! implicit-shift QL iteration (EISPACK lineage). Eigenvalues are always
//! returned in descending order; eigenvectors are orthonormal columns.

use ndarray::{Array1, Array2, ArrayView2};

use crate::error::{Error, Result};

/// Per-entry relative tolerance used to admit a matrix as symmetric:
/// `|a_ij - a_ji| <= SYMMETRY_TOLERANCE * (1 + |a_ij|)`.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// Default relative threshold for numerical-rank decisions: `dim * eps`.
/// Eigenvalues at or below `tol * lambda_max` count as zero.
pub fn default_rank_tol(dim: usize) -> f64 {
    dim as f64 * f64::EPSILON
}

/// A square real matrix certified symmetric at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    data: Array2<f64>,
}

impl SymMatrix {
    /// Validates squareness, finiteness, and per-entry symmetry within
    /// [`SYMMETRY_TOLERANCE`]. The symmetry error names the worst entry pair.
    pub fn new(data: Array2<f64>) -> Result<Self> {
        let (rows, cols) = data.dim();
        if rows != cols {
            return Err(Error::NotSquare { rows, cols });
        }
        if rows == 0 {
            return Err(Error::InvalidParameter {
                what: "dim",
                value: 0.0,
                reason: "matrix must be nonempty",
            });
        }
        for ((i, j), &x) in data.indexed_iter() {
            if !x.is_finite() {
                return Err(Error::NotFinite { row: i, col: j });
            }
        }
        let mut worst: Option<(usize, usize, f64)> = None;
        for i in 0..rows {
            for j in (i + 1)..cols {
                let gap = (data[[j, i]] - data[[i, j]]).abs()
                    - SYMMETRY_TOLERANCE * (1.0 + data[[i, j]].abs());
                if gap > 0.0 && worst.is_none_or(|(.., w)| gap > w) {
                    worst = Some((i, j, gap));
                }
            }
        }
        if let Some((i, j, _)) = worst {
            return Err(Error::NotSymmetric {
                row: j,
                col: i,
                lower: data[[j, i]],
                upper: data[[i, j]],
            });
        }
        Ok(Self { data })
    }

    /// Wraps a matrix that is symmetric by construction (exact lower/upper
    /// mirror). Callers must fill both triangles from the same computation.
    pub(crate) fn from_parts_unchecked(data: Array2<f64>) -> Self {
        debug_assert!(data.nrows() == data.ncols() && data.nrows() > 0);
        debug_assert!(data
            .indexed_iter()
            .all(|((i, j), &x)| x.to_bits() == data[[j, i]].to_bits()));
        Self { data }
    }

    pub fn identity(dim: usize) -> Self {
        assert!(dim > 0, "dimension must be positive");
        Self {
            data: Array2::eye(dim),
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        assert!(!diag.is_empty(), "dimension must be positive");
        Self {
            data: Array2::from_diag(&Array1::from(diag.to_vec())),
        }
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn into_array(self) -> Array2<f64> {
        self.data
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// Full spectral decomposition of a [`SymMatrix`]: `A = V diag(values) V^T`
/// with orthonormal `V` and eigenvalues in descending order.
#[derive(Debug, Clone)]
pub struct SymEigen {
    vectors: Array2<f64>,
    values: Array1<f64>,
}

impl SymEigen {
    /// `dim x dim`; column `k` pairs with `values()[k]`.
    pub fn vectors(&self) -> &Array2<f64> {
        &self.vectors
    }

    /// Descending, length `dim`.
    pub fn values(&self) -> &Array1<f64> {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// A rank-`q` spectral factorization `H diag(values) H^T`: `H` is `dim x q`
/// with orthonormal columns and `values` are strictly positive, descending.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    basis: Array2<f64>,
    values: Array1<f64>,
}

impl EigenSystem {
    pub(crate) fn from_parts(basis: Array2<f64>, values: Array1<f64>) -> Self {
        debug_assert_eq!(basis.ncols(), values.len());
        debug_assert!(values.iter().all(|&v| v > 0.0));
        debug_assert!(values.windows(2).into_iter().all(|w| w[0] >= w[1]));
        Self { basis, values }
    }

    /// Ambient dimension (rows of the basis).
    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    /// Number of retained eigenpairs.
    pub fn rank(&self) -> usize {
        self.values.len()
    }

    pub fn basis(&self) -> &Array2<f64> {
        &self.basis
    }

    pub fn values(&self) -> &Array1<f64> {
        &self.values
    }

    /// `H diag(values) H^T`, filled symmetrically.
    pub fn reconstruct(&self) -> SymMatrix {
        spectral_reconstruct(self.basis.view(), self.values.as_slice().unwrap())
    }
}

/// `sum_k values[k] * basis[:,k] basis[:,k]^T`, computed on the lower triangle
/// and mirrored so the result is exactly symmetric.
pub fn spectral_reconstruct(basis: ArrayView2<'_, f64>, values: &[f64]) -> SymMatrix {
    let p = basis.nrows();
    let mut out = Array2::<f64>::zeros((p, p));
    for i in 0..p {
        for j in 0..=i {
            let mut acc = 0.0;
            for (k, &v) in values.iter().enumerate() {
                acc += v * basis[[i, k]] * basis[[j, k]];
            }
            out[[i, j]] = acc;
            out[[j, i]] = acc;
        }
    }
    SymMatrix::from_parts_unchecked(out)
}

/// Full eigendecomposition, eigenvalues descending.
pub fn sym_eig(a: &SymMatrix) -> SymEigen {
    let n = a.dim();
    let mut v = a.as_array().clone();
    let mut d = vec![0.0_f64; n];
    let mut e = vec![0.0_f64; n];
    tridiagonalize(&mut v, &mut d, &mut e);
    tridiag_ql(&mut d, &mut e, &mut v);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[j].total_cmp(&d[i]));
    let values = Array1::from_iter(order.iter().map(|&k| d[k]));
    let mut vectors = Array2::<f64>::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        vectors.column_mut(dst).assign(&v.column(src));
    }
    SymEigen { vectors, values }
}

/// Keeps the top `q` eigenpairs of a decomposition, requiring at least `q`
/// eigenvalues strictly above `tol * lambda_max`.
pub fn truncate_to_rank(eig: &SymEigen, q: usize, tol: f64) -> Result<EigenSystem> {
    let dim = eig.dim();
    if q == 0 || q > dim {
        return Err(Error::InvalidParameter {
            what: "q",
            value: q as f64,
            reason: "rank must satisfy 1 <= q <= dim",
        });
    }
    let observed = positive_count(eig.values(), tol);
    if observed < q {
        return Err(Error::RankMismatch {
            expected: q,
            observed,
        });
    }
    let basis = eig.vectors().slice(ndarray::s![.., ..q]).to_owned();
    let values = eig.values().slice(ndarray::s![..q]).to_owned();
    Ok(EigenSystem::from_parts(basis, values))
}

/// Number of eigenvalues strictly above `tol * lambda_max` (descending input).
pub(crate) fn positive_count(values: &Array1<f64>, tol: f64) -> usize {
    let scale = values[0].max(0.0);
    values
        .iter()
        .take_while(|&&v| v > tol * scale && v > 0.0)
        .count()
}

/// Moore-Penrose pseudoinverse of a positive semidefinite matrix: eigenvalues
/// above `tol * lambda_max` are inverted, the rest are zeroed. Eigenvalues
/// below `-tol * lambda_max` are rejected as not PSD.
pub fn pinv(a: &SymMatrix, tol: f64) -> Result<SymMatrix> {
    let eig = sym_eig(a);
    let scale = eig.values()[0].max(0.0);
    let min = eig.values()[eig.dim() - 1];
    if min < -tol * scale {
        return Err(Error::NotPositiveSemiDefinite { eigenvalue: min });
    }
    let inverted: Vec<f64> = eig
        .values()
        .iter()
        .map(|&v| if v > tol * scale { 1.0 / v } else { 0.0 })
        .collect();
    Ok(spectral_reconstruct(eig.vectors().view(), &inverted))
}

/// Log-determinant restricted to the top `q` eigenvalues:
/// `sum_{i<q} ln lambda_i`. Errors if fewer than `q` eigenvalues clear
/// `tol * lambda_max`.
pub fn posdet_log(a: &SymMatrix, q: usize, tol: f64) -> Result<f64> {
    if q == 0 || q > a.dim() {
        return Err(Error::InvalidParameter {
            what: "q",
            value: q as f64,
            reason: "rank must satisfy 1 <= q <= dim",
        });
    }
    let eig = sym_eig(a);
    let observed = positive_count(eig.values(), tol);
    if observed < q {
        return Err(Error::RankMismatch {
            expected: q,
            observed,
        });
    }
    Ok(eig.values().iter().take(q).map(|&v| v.ln()).sum())
}

/// Rank-`q` eigensystem of `X X^T` computed through the Gram matrix `X^T X`
/// (they share their nonzero spectrum; `H = X V diag(values)^{-1/2}`).
///
/// Equivalent to `truncate_to_rank(&sym_eig(&(X X^T)), q, tol)` but only ever
/// decomposes an `n x n` matrix, which is what makes wide data cheap.
pub fn data_eigensystem(x: &ArrayView2<'_, f64>, q: usize, tol: f64) -> Result<EigenSystem> {
    let n = x.ncols();
    if n == 0 || x.nrows() == 0 {
        return Err(Error::InvalidParameter {
            what: "data",
            value: 0.0,
            reason: "matrix must be nonempty",
        });
    }
    let mut gram = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let acc = x.column(i).dot(&x.column(j));
            gram[[i, j]] = acc;
            gram[[j, i]] = acc;
        }
    }
    let truncated = truncate_to_rank(&sym_eig(&SymMatrix::from_parts_unchecked(gram)), q, tol)?;
    let mut scaled = truncated.basis().clone();
    for (mut col, &v) in scaled.columns_mut().into_iter().zip(truncated.values()) {
        col.mapv_inplace(|x| x / v.sqrt());
    }
    let basis = x.dot(&scaled);
    Ok(EigenSystem::from_parts(basis, truncated.values().clone()))
}

const MAX_QL_ITERATIONS: usize = 64;

// Householder reduction to tridiagonal form with accumulated transformations
// (EISPACK tred2). On return `v` holds the accumulated orthogonal matrix,
// `d` the diagonal and `e[1..]` the subdiagonal.
fn tridiagonalize(v: &mut Array2<f64>, d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    for j in 0..n {
        d[j] = v[[n - 1, j]];
    }

    for i in (1..n).rev() {
        // Scale to avoid under/overflow.
        let mut scale = 0.0;
        let mut h = 0.0;
        for item in d.iter().take(i) {
            scale += item.abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[[i - 1, j]];
                v[[i, j]] = 0.0;
                v[[j, i]] = 0.0;
            }
        } else {
            // Generate the Householder vector.
            for v in d.iter_mut().take(i) {
                *v /= scale;
                h += *v * *v;
            }
            let f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for item in e.iter_mut().take(i) {
                *item = 0.0;
            }

            // Apply the similarity transformation to the remaining columns.
            for j in 0..i {
                let f = d[j];
                v[[j, i]] = f;
                let mut g = e[j] + v[[j, j]] * f;
                for k in (j + 1)..i {
                    g += v[[k, j]] * d[k];
                    e[k] += v[[k, j]] * f;
                }
                e[j] = g;
            }
            let mut f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                let f = d[j];
                let g = e[j];
                for k in j..i {
                    v[[k, j]] -= f * e[k] + g * d[k];
                }
                d[j] = v[[i - 1, j]];
                v[[i, j]] = 0.0;
            }
        }
        d[i] = h;
    }

    // Accumulate the transformations.
    for i in 0..n.saturating_sub(1) {
        v[[n - 1, i]] = v[[i, i]];
        v[[i, i]] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[[k, i + 1]] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[[k, i + 1]] * v[[k, j]];
                }
                for k in 0..=i {
                    v[[k, j]] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[[k, i + 1]] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[[n - 1, j]];
        v[[n - 1, j]] = 0.0;
    }
    v[[n - 1, n - 1]] = 1.0;
    e[0] = 0.0;
}

// Implicit-shift QL iteration on a symmetric tridiagonal matrix (EISPACK
// tql2), accumulating rotations into `v`. Convergence for finite input takes
// a handful of sweeps; the iteration cap only guards against stalls.
fn tridiag_ql(d: &mut [f64], e: &mut [f64], v: &mut Array2<f64>) {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0_f64;
    let mut tst1 = 0.0_f64;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        // e[n-1] is zero, so the scan always stops before n.
        while e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;

                // Wilkinson's implicit shift.
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for item in d.iter_mut().take(n).skip(l + 2) {
                    *item -= h;
                }
                f += h;

                // One implicit QL sweep.
                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);

                    for k in 0..n {
                        h = v[[k, i + 1]];
                        v[[k, i + 1]] = s * v[[k, i]] + c * h;
                        v[[k, i]] = c * v[[k, i]] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;

                if e[l].abs() <= eps * tst1 || iter >= MAX_QL_ITERATIONS {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
}
