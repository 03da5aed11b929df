//! Independent reference implementations. Everything here is written from
//! the definitions with dense matrices and plain loops, sharing no code with
//! the library beyond its data types.
#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use ndarray::Array2;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub type C = Complex64;

pub fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

pub fn gaussian(rng: &mut ChaCha8Rng) -> C {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    c(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<C> {
    (0..n).map(|_| gaussian(rng)).collect()
}

pub fn random_array(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<C> {
    Array2::from_shape_fn((rows, cols), |_| gaussian(rng))
}

pub fn random_bits(rng: &mut ChaCha8Rng, n: usize) -> Vec<bool> {
    (0..n).map(|_| rng.random()).collect()
}

/// Unitary DFT matrix `F[k, n] = e^{-j2πkn/P}/√P`, phases reduced exactly
/// modulo `P` before the trigonometric call.
pub fn dft_matrix(p: usize) -> DMatrix<C> {
    let s = 1.0 / (p as f64).sqrt();
    DMatrix::from_fn(p, p, |k, n| {
        let m = (k * n) % p;
        C::from_polar(s, -2.0 * PI * m as f64 / p as f64)
    })
}

/// First `l` columns of [`dft_matrix`].
pub fn dft_leading(p: usize, l: usize) -> DMatrix<C> {
    dft_matrix(p).columns(0, l).into_owned()
}

/// Circulant matrix whose first column is `x`: `C[i, j] = x[(i − j) mod P]`.
pub fn circulant(x: &[C]) -> DMatrix<C> {
    let p = x.len();
    DMatrix::from_fn(p, p, |i, j| x[(i + p - j) % p])
}

/// `y[n] = Σ_l h[l]·x[(n − l) mod P]`.
pub fn circular_convolution(x: &[C], h: &[C]) -> Vec<C> {
    let p = x.len();
    (0..p)
        .map(|n| (0..h.len()).map(|l| h[l] * x[(n + p * h.len() - l) % p]).sum())
        .collect()
}

pub fn to_na(a: &Array2<C>) -> DMatrix<C> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

pub fn from_na(m: &DMatrix<C>) -> Array2<C> {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

pub fn rel_fro(a: &DMatrix<C>, b: &DMatrix<C>) -> f64 {
    (a - b).norm() / b.norm()
}

/// `(A^H A + μI)^{-1} A^H Y` by LU on the explicit normal equations.
pub fn ridge_oracle(a: &DMatrix<C>, y: &DMatrix<C>, mu: f64) -> DMatrix<C> {
    let ah = a.adjoint();
    let gram = &ah * a + DMatrix::<C>::identity(a.ncols(), a.ncols()) * c(mu, 0.0);
    gram.lu().solve(&(ah * y)).expect("oracle system is nonsingular")
}

/// Dominant left singular vector from a full SVD.
pub fn top_singular_oracle(y: &DMatrix<C>) -> DVector<C> {
    let svd = y.clone().svd(true, false);
    let u = svd.u.expect("u requested");
    let (best, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    u.column(best).into_owned()
}

/// `|⟨u, v⟩| / (‖u‖‖v‖)`.
pub fn alignment(u: &[C], v: &[C]) -> f64 {
    let dot: C = u.iter().zip(v).map(|(a, b)| a.conj() * b).sum();
    let nu: f64 = u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let nv: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    dot.norm() / (nu * nv)
}
