//! Numerical checks of the inequalities behind the dominance guarantee.
//!
//! These are diagnostics, not proofs: each check evaluates one step of the
//! risk-difference argument on a concrete spectrum and reports whether the
//! inequality holds there (up to an explicit slack for roundoff).

use ndarray::Array1;

use crate::error::{Error, Result};
use crate::estimators::{optimal_constant, psi_haff, ShrinkageRule};
use crate::model::Dimensions;

/// Additive slack for the divided-difference bounds.
pub const INEQUALITY_SLACK: f64 = 1e-10;
/// Relative slack for the squared-trace comparison.
pub const SUBMULT_SLACK: f64 = 1e-12;

fn validated_spectrum(values: &Array1<f64>) -> Result<()> {
    if values.is_empty() {
        return Err(Error::DimensionMismatch {
            what: "spectrum length",
            expected: 1,
            actual: 0,
        });
    }
    for (i, &v) in values.iter().enumerate() {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::NonPositiveEigenvalue { index: i, value: v });
        }
    }
    for (i, w) in values.windows(2).into_iter().enumerate() {
        if w[0] == w[1] {
            return Err(Error::TiedEigenvalues { index: i });
        }
        if w[0] < w[1] {
            return Err(Error::InvalidParameter {
                what: "spectrum",
                value: w[1],
                reason: "eigenvalues must be sorted in descending order",
            });
        }
    }
    Ok(())
}

/// Divided-difference bounds on the shrunk spectrum `d_i = l_i (1 + psi_i)`:
/// for each position `i` (0-based),
/// `sum_{j > i} (d_i - d_j) / (l_i - l_j) <= q - 1 - i`.
///
/// Requires a strictly descending positive spectrum; exact ties make the
/// quotients undefined and are rejected. Returns one flag per position
/// (the last is vacuously true).
pub fn check_majorization(values: &Array1<f64>, rule: &ShrinkageRule) -> Result<Vec<bool>> {
    validated_spectrum(values)?;
    let psi = psi_haff(values, rule)?;
    let q = values.len();
    let scaled: Vec<f64> = values
        .iter()
        .zip(psi.iter())
        .map(|(&l, &p)| l * (1.0 + p))
        .collect();
    let mut flags = Vec::with_capacity(q);
    for i in 0..q {
        let mut sum = 0.0;
        for j in (i + 1)..q {
            sum += (scaled[i] - scaled[j]) / (values[i] - values[j]);
        }
        flags.push(sum <= (q - 1 - i) as f64 + INEQUALITY_SLACK);
    }
    Ok(flags)
}

/// Squared-sum bound for the inverse-power weights `t_i = l_i^{-alpha}`:
/// `sum t_i^2 <= (sum t_i)^2`. Computed scale-free through the ratios
/// `(l_min / l_i)^alpha` so extreme spectra cannot overflow.
pub fn check_trace_submult(values: &Array1<f64>, alpha: f64) -> Result<bool> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::InvalidParameter {
            what: "alpha",
            value: alpha,
            reason: "exponent must be finite and strictly positive",
        });
    }
    if values.is_empty() {
        return Err(Error::DimensionMismatch {
            what: "spectrum length",
            expected: 1,
            actual: 0,
        });
    }
    let mut min = f64::INFINITY;
    for (i, &v) in values.iter().enumerate() {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::NonPositiveEigenvalue { index: i, value: v });
        }
        min = min.min(v);
    }
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for &v in values.iter() {
        let t = (min / v).powf(alpha);
        sum += t;
        sum_sq += t * t;
    }
    Ok(sum_sq <= sum * sum * (1.0 + SUBMULT_SLACK))
}

/// Gap in the log-volume bound `sum ln(1 + psi_i) >= 2b / (2 + b)`.
/// Returns the (signed) gap; the bound holds when it is `>= -INEQUALITY_SLACK`.
pub fn check_log_bound(values: &Array1<f64>, rule: &ShrinkageRule) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::DimensionMismatch {
            what: "spectrum length",
            expected: 1,
            actual: 0,
        });
    }
    let psi = psi_haff(values, rule)?;
    let lhs: f64 = psi.iter().map(|&v| v.ln_1p()).sum();
    let b = rule.b();
    Ok(lhs - 2.0 * b / (2.0 + b))
}

/// Closed-form upper bound on the risk difference (shrunk minus reference)
/// at total mass `b`: `b * ((m - q + 1) / m - 2 / (2 + b))`.
///
/// Zero exactly at the critical mass `2 (q - 1) / (m - q + 1)`, negative
/// below it, positive above it.
pub fn risk_diff_upper_bound(dims: &Dimensions, b: f64) -> Result<f64> {
    if !(b.is_finite() && b > 0.0) {
        return Err(Error::InvalidParameter {
            what: "b",
            value: b,
            reason: "shrinkage mass must be finite and strictly positive",
        });
    }
    let a = optimal_constant(dims);
    let slope = a * (dims.m() - dims.q() + 1) as f64;
    Ok(b * (slope - 2.0 / (2.0 + b)))
}

/// Every inequality check evaluated on one spectrum / rule / dimension triple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProofDiagnostics {
    pub majorization_ok: bool,
    pub trace_submult_ok: bool,
    pub log_bound_gap: f64,
    pub risk_diff_bound: f64,
}

impl ProofDiagnostics {
    /// True when all inequality checks pass, i.e. the dominance argument's
    /// steps all hold on this input.
    pub fn all_hold(&self) -> bool {
        self.majorization_ok && self.trace_submult_ok && self.log_bound_gap >= -INEQUALITY_SLACK
    }
}

pub fn diagnose(
    values: &Array1<f64>,
    rule: &ShrinkageRule,
    dims: &Dimensions,
) -> Result<ProofDiagnostics> {
    let majorization = check_majorization(values, rule)?;
    Ok(ProofDiagnostics {
        majorization_ok: majorization.iter().all(|&ok| ok),
        trace_submult_ok: check_trace_submult(values, rule.alpha())?,
        log_bound_gap: check_log_bound(values, rule)?,
        risk_diff_bound: risk_diff_upper_bound(dims, rule.b())?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::dominance_bound;
    use approx::assert_relative_eq;
    use ndarray::array;

    #[test]
    fn majorization_on_two_point_spectrum() {
        // l = (2, 1), alpha = 1: tr(L^-1) = 3/2, so d = (2 + 2/3, 1 + 2/3)
        // and the single nontrivial quotient is (8/3 - 5/3) / (2 - 1) = 1,
        // landing exactly on the bound q - 1 = 1. At alpha = 1 the quotient
        // is 1 for every pair, so the bound is tight for all b.
        let rule = ShrinkageRule::new(1.0, 1.0).unwrap();
        let flags = check_majorization(&array![2.0, 1.0], &rule).unwrap();
        assert_eq!(flags, vec![true, true]);
        let heavy = ShrinkageRule::new(1.0, 250.0).unwrap();
        let flags = check_majorization(&array![5.0, 2.0, 1.0], &heavy).unwrap();
        assert_eq!(flags, vec![true, true, true]);
    }

    #[test]
    fn majorization_fails_for_tiny_exponent() {
        // alpha << 1 pushes mass toward the big eigenvalue and the divided
        // difference blows through the bound.
        let rule = ShrinkageRule::new(0.01, 10.0).unwrap();
        let flags = check_majorization(&array![2.0, 1.0], &rule).unwrap();
        assert!(!flags[0]);
        assert!(flags[1]);
    }

    #[test]
    fn majorization_rejects_ties_and_disorder() {
        let rule = ShrinkageRule::new(1.0, 1.0).unwrap();
        assert_eq!(
            check_majorization(&array![2.0, 2.0, 1.0], &rule).unwrap_err(),
            Error::TiedEigenvalues { index: 0 }
        );
        assert!(matches!(
            check_majorization(&array![1.0, 2.0], &rule),
            Err(Error::InvalidParameter { .. })
        ));
        assert!(matches!(
            check_majorization(&array![2.0, 0.0], &rule),
            Err(Error::NonPositiveEigenvalue { .. })
        ));
    }

    #[test]
    fn trace_submult_holds_across_scales() {
        assert!(check_trace_submult(&array![2.0, 1.0], 1.0).unwrap());
        assert!(check_trace_submult(&array![1e200, 1.0, 1e-100], 7.5).unwrap());
        // Single eigenvalue: equality.
        assert!(check_trace_submult(&array![3.0], 2.0).unwrap());
        assert!(matches!(
            check_trace_submult(&array![1.0], 0.0),
            Err(Error::InvalidParameter { .. })
        ));
    }

    #[test]
    fn log_bound_gap_on_flat_spectrum() {
        // Equal eigenvalues, alpha = 1, b = 2: psi = (1, 1), so the gap is
        // 2 ln 2 - 2*2/(2+2) = 2 ln 2 - 1.
        let rule = ShrinkageRule::new(1.0, 2.0).unwrap();
        let gap = check_log_bound(&array![1.0, 1.0], &rule).unwrap();
        assert_relative_eq!(gap, 2.0 * 2.0_f64.ln() - 1.0, max_relative = 1e-12);
        assert!(gap >= -INEQUALITY_SLACK);
    }

    #[test]
    fn risk_bound_vanishes_at_critical_mass() {
        for (p, n, r) in [(30, 50, 10), (50, 30, 20), (150, 30, 150), (150, 30, 60)] {
            let dims = Dimensions::new(p, n, r).unwrap();
            let b_o = dominance_bound(&dims);
            assert!(b_o > 0.0);
            let at = risk_diff_upper_bound(&dims, b_o).unwrap();
            assert!(at.abs() <= 1e-12, "bound at critical mass: {at:e}");
            assert!(risk_diff_upper_bound(&dims, 0.5 * b_o).unwrap() < 0.0);
            assert!(risk_diff_upper_bound(&dims, 2.0 * b_o).unwrap() > 0.0);
        }
    }

    #[test]
    fn no_mass_helps_when_q_is_one() {
        let dims = Dimensions::new(5, 1, 3).unwrap();
        assert_eq!(dominance_bound(&dims), 0.0);
        for b in [0.1, 1.0, 10.0] {
            assert!(risk_diff_upper_bound(&dims, b).unwrap() > 0.0);
        }
    }

    #[test]
    fn diagnose_aggregates_all_checks() {
        let dims = Dimensions::new(30, 50, 10).unwrap();
        let rule = ShrinkageRule::new(2.0, dominance_bound(&dims)).unwrap();
        let spectrum = array![9.0, 5.5, 3.2, 2.1, 1.4, 0.9, 0.55, 0.3, 0.17, 0.08];
        let diag = diagnose(&spectrum, &rule, &dims).unwrap();
        assert!(diag.majorization_ok);
        assert!(diag.trace_submult_ok);
        assert!(diag.log_bound_gap >= -INEQUALITY_SLACK);
        assert!(diag.risk_diff_bound.abs() <= 1e-12);
        assert!(diag.all_hold());
    }
}
