//! Per-bin maximal ratio combining across receive antennas.

use ndarray::{Array1, ArrayView2, Zip};
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("channel estimate vanishes on every antenna at bin {bin}")]
pub struct DegenerateBin {
    pub bin: usize,
}

/// `X̂(p) = Σ_r Y(p,r)·H*(p,r) / Σ_r |H(p,r)|²` for every row `p`.
pub fn combine(
    y: ArrayView2<Complex64>,
    h: ArrayView2<Complex64>,
) -> Result<Array1<Complex64>, DegenerateBin> {
    assert_eq!(y.dim(), h.dim(), "MRC operands must share a shape");
    let mut out = Array1::zeros(y.nrows());
    for (bin, ((yr, hr), o)) in y.rows().into_iter().zip(h.rows()).zip(out.iter_mut()).enumerate() {
        let mut num = Complex64::new(0.0, 0.0);
        let mut den = 0.0;
        Zip::from(&yr).and(&hr).for_each(|y, h| {
            num += y * h.conj();
            den += h.norm_sqr();
        });
        if !(den > f64::MIN_POSITIVE) {
            return Err(DegenerateBin { bin });
        }
        *o = num / den;
    }
    Ok(out)
}

/// `‖Y − diag(λ)·H‖_F / ‖Y‖_F`.
pub fn relative_residual(
    y: ArrayView2<Complex64>,
    lambda: &Array1<Complex64>,
    h: ArrayView2<Complex64>,
) -> f64 {
    let mut err = 0.0;
    let mut total = 0.0;
    for ((yr, hr), l) in y.rows().into_iter().zip(h.rows()).zip(lambda.iter()) {
        Zip::from(&yr).and(&hr).for_each(|y, h| {
            err += (y - l * h).norm_sqr();
            total += y.norm_sqr();
        });
    }
    if total == 0.0 {
        return if err == 0.0 { 0.0 } else { f64::INFINITY };
    }
    (err / total).sqrt()
}
