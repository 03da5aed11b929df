//! DFT operators, dominant singular vectors and the regularized
//! least-squares solve used by the blind receiver.
//!
//! The DFT is the unitary one, `F[k, n] = e^{−j2πkn/P}/√P`. With that
//! convention the frequency-domain received matrix satisfies
//! `Yf = diag(Λx)·F_L·H_L` exactly, where `Λx` is the *unnormalized* DFT of the
//! frame and `H_L` holds the raw channel taps.

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use thiserror::Error;

pub type CMatrix = Array2<Complex64>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix is identically zero")]
    ZeroMatrix,
    #[error("power iteration did not converge in {iterations} iterations (last step {step:.3e})")]
    NotConverged { iterations: usize, step: f64 },
    #[error("normal equations are singular (pivot {pivot} of {size})")]
    Singular { pivot: usize, size: usize },
    #[error("dimension mismatch: {0}")]
    Shape(String),
    #[error("regularization must be finite and non-negative, got {0}")]
    Regularization(f64),
}

/// Unitary DFT of a fixed length, backed by a planned FFT.
#[derive(Clone)]
pub struct Dft {
    len: usize,
    norm: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Dft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Dft").field("len", &self.len).finish()
    }
}

impl Dft {
    pub fn new(len: usize) -> Self {
        assert!(len > 0, "DFT length must be positive");
        let mut planner = FftPlanner::new();
        Self {
            len,
            norm: 1.0 / (len as f64).sqrt(),
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn forward(&self, buf: &mut [Complex64]) {
        assert_eq!(buf.len(), self.len);
        self.forward.process(buf);
        buf.iter_mut().for_each(|z| *z *= self.norm);
    }

    pub fn inverse(&self, buf: &mut [Complex64]) {
        assert_eq!(buf.len(), self.len);
        self.inverse.process(buf);
        buf.iter_mut().for_each(|z| *z *= self.norm);
    }

    /// DFT without the `1/√P` factor.
    pub fn forward_unnormalized(&self, buf: &mut [Complex64]) {
        assert_eq!(buf.len(), self.len);
        self.forward.process(buf);
    }

    fn map_columns(&self, m: ArrayView2<Complex64>, inverse: bool) -> CMatrix {
        assert_eq!(m.nrows(), self.len);
        let mut out = CMatrix::zeros(m.raw_dim());
        let mut buf = vec![Complex64::new(0.0, 0.0); self.len];
        for (src, mut dst) in m.axis_iter(Axis(1)).zip(out.axis_iter_mut(Axis(1))) {
            buf.iter_mut().zip(src.iter()).for_each(|(b, s)| *b = *s);
            if inverse {
                self.inverse(&mut buf);
            } else {
                self.forward(&mut buf);
            }
            dst.iter_mut().zip(buf.iter()).for_each(|(d, b)| *d = *b);
        }
        out
    }

    /// Unitary DFT applied to every column.
    pub fn forward_columns(&self, m: ArrayView2<Complex64>) -> CMatrix {
        self.map_columns(m, false)
    }

    pub fn inverse_columns(&self, m: ArrayView2<Complex64>) -> CMatrix {
        self.map_columns(m, true)
    }

    /// The first `cols` columns of the unitary DFT matrix (`F_L`).
    pub fn leading_columns(&self, cols: usize) -> CMatrix {
        dft_columns(self.len, &(0..self.len).collect::<Vec<_>>(), cols)
    }
}

/// Rows `rows` of the first `cols` columns of the unitary `len`-point DFT
/// matrix. Phases are reduced modulo `len` before the trigonometric call.
pub fn dft_columns(len: usize, rows: &[usize], cols: usize) -> CMatrix {
    let norm = 1.0 / (len as f64).sqrt();
    CMatrix::from_shape_fn((rows.len(), cols), |(i, l)| {
        let k = ((rows[i] as u128 * l as u128) % len as u128) as f64;
        Complex64::from_polar(norm, -2.0 * PI * k / len as f64)
    })
}

/// Eigenvalues of the circulant matrix whose first column is `x`, i.e. the
/// unnormalized DFT of `x`, so that `C_x = F·diag(Λx)·F^H` with `F` unitary.
pub fn circulant_eigenvalues(x: &[Complex64]) -> Vec<Complex64> {
    let mut out = x.to_vec();
    if out.is_empty() {
        return out;
    }
    Dft::new(out.len()).forward_unnormalized(&mut out);
    out
}

pub fn frobenius_norm<'a, I>(values: I) -> f64
where
    I: IntoIterator<Item = &'a Complex64>,
{
    values.into_iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn conj_transpose(m: ArrayView2<Complex64>) -> CMatrix {
    m.t().mapv(|z| z.conj())
}

#[derive(Debug, Clone)]
pub struct PowerIteration {
    pub vector: Array1<Complex64>,
    /// Estimate of the largest singular value.
    pub sigma: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Norm of the last update `‖u_k − u_{k−1}‖`.
    pub step: f64,
}

/// Power iteration on `Y·Y^H`, started from the normalized first column of
/// `y` (or `e₁` if that column is zero). Stops once successive unit iterates
/// differ by at most `tol` in 2-norm.
///
/// Non-convergence is reported through [`PowerIteration::converged`]; the
/// last iterate is still a usable approximation.
pub fn power_iteration(
    y: ArrayView2<Complex64>,
    tol: f64,
    max_iter: usize,
) -> Result<PowerIteration, LinalgError> {
    let rows = y.nrows();
    if rows == 0 || y.ncols() == 0 || y.iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
        return Err(LinalgError::ZeroMatrix);
    }
    let mut u: Array1<Complex64> = y.column(0).to_owned();
    let n0 = frobenius_norm(u.iter());
    if n0 > 0.0 {
        u.mapv_inplace(|z| z / n0);
    } else {
        u.fill(Complex64::new(0.0, 0.0));
        u[0] = Complex64::new(1.0, 0.0);
    }
    let yh = conj_transpose(y);
    let mut sigma = 0.0;
    let mut step = f64::INFINITY;
    for iter in 1..=max_iter.max(1) {
        let v = yh.dot(&u);
        let mut next = y.dot(&v);
        let n = frobenius_norm(next.iter());
        if n == 0.0 {
            // Start vector orthogonal to the row space; restart on the
            // column with the largest energy.
            let best = y
                .axis_iter(Axis(1))
                .enumerate()
                .map(|(i, c)| (i, frobenius_norm(c.iter())))
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .map(|(i, _)| i)
                .unwrap_or(0);
            let c = y.column(best);
            let cn = frobenius_norm(c.iter());
            u = c.mapv(|z| z / cn);
            continue;
        }
        next.mapv_inplace(|z| z / n);
        sigma = n.sqrt();
        step = frobenius_norm((&next - &u).iter());
        u = next;
        if step <= tol {
            return Ok(PowerIteration {
                vector: u,
                sigma,
                iterations: iter,
                converged: true,
                step,
            });
        }
    }
    Ok(PowerIteration {
        vector: u,
        sigma,
        iterations: max_iter,
        converged: false,
        step,
    })
}

/// Unit left singular vector for the largest singular value of `y`, up to a
/// unit-modulus factor.
pub fn top_left_singular_vector(
    y: ArrayView2<Complex64>,
    tol: f64,
    max_iter: usize,
) -> Result<Array1<Complex64>, LinalgError> {
    let res = power_iteration(y, tol, max_iter)?;
    if res.converged {
        Ok(res.vector)
    } else {
        Err(LinalgError::NotConverged {
            iterations: res.iterations,
            step: res.step,
        })
    }
}

/// Solves `(A^H A + μI) X = B` for Hermitian positive (semi)definite
/// `A^H A` via Cholesky. `gram` is overwritten with its factor.
fn cholesky_solve(gram: &mut CMatrix, rhs: &mut CMatrix) -> Result<(), LinalgError> {
    let n = gram.nrows();
    let max_diag = (0..n).map(|i| gram[[i, i]].re.abs()).fold(0.0, f64::max);
    let floor = max_diag * n as f64 * f64::EPSILON;
    // Lower-triangular factor in place: G = L L^H.
    for j in 0..n {
        let mut d = gram[[j, j]].re;
        for k in 0..j {
            d -= gram[[j, k]].norm_sqr();
        }
        if !(d > floor) {
            return Err(LinalgError::Singular { pivot: j, size: n });
        }
        let d = d.sqrt();
        gram[[j, j]] = Complex64::new(d, 0.0);
        for i in (j + 1)..n {
            let mut s = gram[[i, j]];
            for k in 0..j {
                s -= gram[[i, k]] * gram[[j, k]].conj();
            }
            gram[[i, j]] = s / d;
        }
    }
    for mut col in rhs.axis_iter_mut(Axis(1)) {
        // L z = b
        for i in 0..n {
            let mut s = col[i];
            for k in 0..i {
                s -= gram[[i, k]] * col[k];
            }
            col[i] = s / gram[[i, i]].re;
        }
        // L^H x = z
        for i in (0..n).rev() {
            let mut s = col[i];
            for k in (i + 1)..n {
                s -= gram[[k, i]].conj() * col[k];
            }
            col[i] = s / gram[[i, i]].re;
        }
    }
    Ok(())
}

/// Minimizer of `‖Y − A·X‖²_F + μ‖X‖²_F`, computed from the small
/// `cols(A) × cols(A)` normal-equation system.
pub fn regularized_ls(
    a: ArrayView2<Complex64>,
    y: ArrayView2<Complex64>,
    mu: f64,
) -> Result<CMatrix, LinalgError> {
    if a.nrows() != y.nrows() {
        return Err(LinalgError::Shape(format!(
            "A has {} rows but Y has {}",
            a.nrows(),
            y.nrows()
        )));
    }
    if !(mu >= 0.0) || !mu.is_finite() {
        return Err(LinalgError::Regularization(mu));
    }
    let ah = conj_transpose(a);
    let mut gram = ah.dot(&a);
    for i in 0..gram.nrows() {
        gram[[i, i]] += mu;
    }
    let mut x = ah.dot(&y);
    cholesky_solve(&mut gram, &mut x)?;
    Ok(x)
}
