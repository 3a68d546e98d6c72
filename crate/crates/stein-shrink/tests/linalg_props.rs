mod common;

use common::{frobenius, max_abs_diff, random_psd_with_spectrum, random_spectrum, rng};
use ndarray::{Array1, Array2};
use proptest::prelude::*;
use stein_shrink::linalg::{
    data_eigensystem, default_rank_tol, pinv, sym_eig, truncate_to_rank, SymMatrix,
};

fn symmetrize(m: Array2<f64>) -> SymMatrix {
    let s = &m + &m.t();
    SymMatrix::new(s).expect("A + A^T is symmetric")
}

fn reconstruction_error(m: &SymMatrix) -> (f64, f64, f64) {
    let eig = sym_eig(m);
    let v = eig.vectors();
    let mut recon = Array2::zeros((m.dim(), m.dim()));
    for (k, &lambda) in eig.values().iter().enumerate() {
        let col = v.column(k);
        for i in 0..m.dim() {
            for j in 0..m.dim() {
                recon[[i, j]] += lambda * col[i] * col[j];
            }
        }
    }
    let scale = frobenius(m.as_array()).max(1.0);
    let rec_err = max_abs_diff(&recon, m.as_array()) / scale;
    let gram = v.t().dot(v);
    let mut orth_err = 0.0f64;
    for i in 0..m.dim() {
        for j in 0..m.dim() {
            let target = if i == j { 1.0 } else { 0.0 };
            orth_err = orth_err.max((gram[[i, j]] - target).abs());
        }
    }
    let mut order_err = 0.0f64;
    for w in eig.values().windows(2) {
        order_err = order_err.max(w[1] - w[0]);
    }
    (rec_err, orth_err, order_err)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eigendecomposition_reconstructs_any_symmetric_matrix(
        dim in 1usize..14,
        seed in any::<u64>(),
    ) {
        let mut r = rng(seed);
        let m = symmetrize(common::standard_normal_matrix(dim, dim, &mut r));
        let (rec, orth, order) = reconstruction_error(&m);
        prop_assert!(rec <= 1e-12, "reconstruction error {rec:e}");
        prop_assert!(orth <= 1e-12, "orthogonality error {orth:e}");
        prop_assert!(order <= 0.0, "values not descending by {order:e}");
    }

    #[test]
    fn pseudo_inverse_satisfies_penrose_conditions(
        p in 2usize..12,
        seed in any::<u64>(),
    ) {
        let mut r = rng(seed);
        let rank = 1 + (seed as usize) % p;
        let spectrum = random_spectrum(rank, &mut r);
        let sigma = random_psd_with_spectrum(p, &spectrum, &mut r);
        let tol = default_rank_tol(p);
        let inv = pinv(&sigma, tol).unwrap();
        let a = sigma.as_array();
        let g = inv.as_array();
        let scale = frobenius(a).max(1.0);
        let aga = a.dot(g).dot(a);
        let gag = g.dot(a).dot(g);
        prop_assert!(max_abs_diff(&aga, a) / scale <= 1e-8);
        prop_assert!(max_abs_diff(&gag, g) * scale <= 1e-8 * scale.max(frobenius(g)));
        // Products are symmetric (conditions three and four).
        let ag = a.dot(g);
        let ga = g.dot(a);
        prop_assert!(max_abs_diff(&ag, &ag.t().to_owned()) <= 1e-8);
        prop_assert!(max_abs_diff(&ga, &ga.t().to_owned()) <= 1e-8);
    }

    #[test]
    fn truncation_recovers_a_planted_rank(
        p in 2usize..12,
        seed in any::<u64>(),
    ) {
        let mut r = rng(seed);
        let rank = 1 + (seed as usize) % p;
        let spectrum = random_spectrum(rank, &mut r);
        let sigma = random_psd_with_spectrum(p, &spectrum, &mut r);
        let sys = truncate_to_rank(&sym_eig(&sigma), rank, default_rank_tol(p)).unwrap();
        prop_assert_eq!(sys.rank(), rank);
        let recon = sys.reconstruct();
        let scale = frobenius(sigma.as_array()).max(1.0);
        prop_assert!(max_abs_diff(recon.as_array(), sigma.as_array()) / scale <= 1e-10);
    }

    #[test]
    fn gram_route_matches_direct_eigensystem(
        p in 1usize..10,
        n in 1usize..10,
        seed in any::<u64>(),
    ) {
        let mut r = rng(seed);
        let x = common::standard_normal_matrix(p, n, &mut r);
        let q = p.min(n);
        let tol = default_rank_tol(p.max(n));
        let via_gram = data_eigensystem(&x.view(), q, tol).unwrap();
        let product = x.dot(&x.t());
        let s = SymMatrix::new((&product + &product.t()) / 2.0).unwrap();
        let direct = truncate_to_rank(&sym_eig(&s), q, tol).unwrap();
        let scale = frobenius(s.as_array()).max(1.0);
        for (a, b) in via_gram.values().iter().zip(direct.values().iter()) {
            prop_assert!((a - b).abs() / scale <= 1e-10);
        }
        prop_assert!(
            max_abs_diff(via_gram.reconstruct().as_array(), direct.reconstruct().as_array())
                / scale
                <= 1e-8
        );
    }
}

#[test]
fn repeated_eigenvalues_still_reconstruct() {
    let mut r = rng(17);
    for (p, multiplicities) in [
        (6usize, vec![(4.0, 3usize), (1.0, 3)]),
        (8, vec![(5.0, 4), (2.0, 2), (0.5, 2)]),
        (5, vec![(3.0, 5)]),
    ] {
        let mut values = Vec::new();
        for &(v, count) in multiplicities.iter() {
            values.extend(std::iter::repeat_n(v, count));
        }
        let spectrum = Array1::from_vec(values);
        let sigma = random_psd_with_spectrum(p, &spectrum, &mut r);
        let (rec, orth, order) = reconstruction_error(&sigma);
        assert!(rec <= 1e-12, "reconstruction error {rec:e} at p={p}");
        assert!(orth <= 1e-12, "orthogonality error {orth:e} at p={p}");
        assert!(order <= 0.0);
    }
}

#[test]
fn large_seeded_matrix_diagonalizes_accurately() {
    let mut r = rng(2024);
    let dim = 200;
    let m = symmetrize(common::standard_normal_matrix(dim, dim, &mut r));
    let (rec, orth, order) = reconstruction_error(&m);
    assert!(rec <= 1e-11, "reconstruction error {rec:e}");
    assert!(orth <= 1e-11, "orthogonality error {orth:e}");
    assert!(order <= 0.0);
}

#[test]
fn wide_and_tall_data_share_the_gram_spectrum() {
    // The nonzero spectrum of X X^T equals that of X^T X for both p > n and
    // p < n; the eigensystem must deliver it regardless of which side is
    // smaller.
    let mut r = rng(99);
    for (p, n) in [(40usize, 7usize), (7, 40)] {
        let x = common::standard_normal_matrix(p, n, &mut r);
        let q = p.min(n);
        let sys = data_eigensystem(&x.view(), q, default_rank_tol(p.max(n))).unwrap();
        assert_eq!(sys.rank(), q);
        let gram_small = if p <= n { x.dot(&x.t()) } else { x.t().dot(&x) };
        let trace: f64 = (0..q).map(|i| gram_small[[i, i]]).sum();
        let spectral_sum: f64 = sys.values().iter().sum();
        assert!((trace - spectral_sum).abs() / trace.abs().max(1.0) <= 1e-10);
        // Semi-orthogonal basis.
        let gram = sys.basis().t().dot(sys.basis());
        for i in 0..q {
            for j in 0..q {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((gram[[i, j]] - target).abs() <= 1e-10);
            }
        }
    }
}
