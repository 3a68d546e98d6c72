//! Shared generators for the integration suites.
#![allow(dead_code)]

use ndarray::{Array1, Array2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, StandardNormal};

use stein_shrink::linalg::{spectral_reconstruct, SymMatrix};
use stein_shrink::model::Dimensions;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn standard_normal_matrix<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    rng: &mut R,
) -> Array2<f64> {
    let mut m = Array2::zeros((rows, cols));
    for v in m.iter_mut() {
        *v = StandardNormal.sample(rng);
    }
    m
}

/// Haar-ish random orthogonal matrix: Gram–Schmidt with a second
/// re-orthogonalization pass for numerical orthogonality near 1e-14.
pub fn random_orthogonal<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Array2<f64> {
    let mut q = standard_normal_matrix(dim, dim, rng);
    for _pass in 0..2 {
        for j in 0..dim {
            for i in 0..j {
                let proj = q.column(i).dot(&q.column(j));
                let prev = q.column(i).to_owned();
                q.column_mut(j).zip_mut_with(&prev, |x, &p| *x -= proj * p);
            }
            let norm = q.column(j).dot(&q.column(j)).sqrt();
            assert!(norm > 1e-8, "degenerate random basis");
            q.column_mut(j).mapv_inplace(|x| x / norm);
        }
    }
    q
}

/// Strictly descending positive spectrum with log-normal spread.
pub fn random_spectrum<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Array1<f64> {
    let dist = LogNormal::new(0.0, 1.0).expect("valid parameters");
    loop {
        let mut values: Vec<f64> = (0..len).map(|_| dist.sample(rng)).collect();
        values.sort_by(|a, b| b.total_cmp(a));
        if values.windows(2).all(|w| w[0] > w[1]) || len == 1 {
            return Array1::from_vec(values);
        }
    }
}

/// Random PSD matrix of exact rank `r` with the given positive spectrum on a
/// random eigenbasis.
pub fn random_psd_with_spectrum<R: Rng + ?Sized>(
    p: usize,
    spectrum: &Array1<f64>,
    rng: &mut R,
) -> SymMatrix {
    let q = random_orthogonal(p, rng);
    let r = spectrum.len();
    let basis = q.slice(ndarray::s![.., ..r]);
    spectral_reconstruct(basis, spectrum.as_slice().expect("contiguous"))
}

/// One dimension triple per ordering of (n, r, p):
/// n < r = p, r = p <= n, r < p <= n, r <= n < p, n < r < p.
pub fn five_case_dims<R: Rng + ?Sized>(case: usize, rng: &mut R) -> Dimensions {
    let d = |p, n, r| Dimensions::new(p, n, r).expect("valid dims");
    match case % 5 {
        0 => {
            // n < r = p
            let p = rng.random_range(3..=9);
            let n = rng.random_range(1..p);
            d(p, n, p)
        }
        1 => {
            // r = p <= n
            let p = rng.random_range(2..=8);
            let n = rng.random_range(p..=p + 6);
            d(p, n, p)
        }
        2 => {
            // r < p <= n
            let p = rng.random_range(3..=8);
            let r = rng.random_range(1..p);
            let n = rng.random_range(p..=p + 6);
            d(p, n, r)
        }
        3 => {
            // r <= n < p
            let p = rng.random_range(4..=10);
            let n = rng.random_range(1..p);
            let r = rng.random_range(1..=n);
            d(p, n, r)
        }
        _ => {
            // n < r < p
            let p = rng.random_range(4..=10);
            let r = rng.random_range(2..p);
            let n = rng.random_range(1..r);
            d(p, n, r)
        }
    }
}

pub fn frobenius(m: &Array2<f64>) -> f64 {
    m.iter().map(|&v| v * v).sum::<f64>().sqrt()
}

pub fn max_abs_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(&x, &y)| (x - y).abs())
        .fold(0.0, f64::max)
}
