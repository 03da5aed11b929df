//! Frequency-selective Rayleigh channels and AWGN.
//!
//! One transmit antenna, `Nr` receive antennas. Each antenna sees an `L`-tap
//! impulse response with independent circularly-symmetric Gaussian taps whose
//! variances follow a power-delay profile summing to one, so the average
//! channel energy per antenna is one. With a unit-energy constellation the
//! SNR is then `−10·log10(σ²)`.

use ndarray::{Array2, Axis};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::linalg::{CMatrix, Dft};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error("power-delay profile needs at least one tap")]
    Empty,
    #[error("tap power {power} at index {index} is negative or not finite")]
    InvalidPower { index: usize, power: f64 },
    #[error("tap powers must be non-increasing (index {index})")]
    Increasing { index: usize },
    #[error("tap powers sum to zero")]
    ZeroEnergy,
    #[error("decay ratio must lie in (0, 1], got {0}")]
    Ratio(f64),
    #[error("need at least one receive antenna")]
    NoAntennas,
    #[error("{taps} taps do not fit in a frame of {len}")]
    TooManyTaps { taps: usize, len: usize },
}

/// Per-tap average powers, normalized to unit sum and non-increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerDelayProfile {
    powers: Vec<f64>,
}

impl PowerDelayProfile {
    /// Normalizes `powers` to unit sum.
    pub fn new(powers: Vec<f64>) -> Result<Self, ChannelError> {
        if powers.is_empty() {
            return Err(ChannelError::Empty);
        }
        for (index, &power) in powers.iter().enumerate() {
            if !(power >= 0.0) || !power.is_finite() {
                return Err(ChannelError::InvalidPower { index, power });
            }
            if index > 0 && power > powers[index - 1] {
                return Err(ChannelError::Increasing { index });
            }
        }
        let total: f64 = powers.iter().sum();
        if total <= 0.0 {
            return Err(ChannelError::ZeroEnergy);
        }
        Ok(Self {
            powers: powers.into_iter().map(|p| p / total).collect(),
        })
    }

    /// `p[l] ∝ ratio^l`.
    pub fn geometric(taps: usize, ratio: f64) -> Result<Self, ChannelError> {
        if !(ratio > 0.0 && ratio <= 1.0) {
            return Err(ChannelError::Ratio(ratio));
        }
        Self::new((0..taps).map(|l| ratio.powi(l as i32)).collect())
    }

    pub fn taps(&self) -> usize {
        self.powers.len()
    }

    pub fn powers(&self) -> &[f64] {
        &self.powers
    }
}

/// Complex Gaussian sample with variance `var` (`var/2` per dimension).
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, var: f64) -> Complex64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// `L × Nr`; column `r` is the impulse response seen by antenna `r`.
    pub taps: CMatrix,
}

impl ChannelRealization {
    pub fn new(taps: CMatrix) -> Self {
        Self { taps }
    }

    pub fn antennas(&self) -> usize {
        self.taps.ncols()
    }

    pub fn len(&self) -> usize {
        self.taps.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    /// Per-bin response `H_f[p, r] = Σ_l h[l, r]·e^{−j2πpl/P}` (unnormalized DFT
    /// of the zero-padded taps).
    pub fn frequency_response(&self, len: usize) -> Result<CMatrix, ChannelError> {
        if self.len() > len {
            return Err(ChannelError::TooManyTaps {
                taps: self.len(),
                len,
            });
        }
        let dft = Dft::new(len);
        let mut out = CMatrix::zeros((len, self.antennas()));
        let mut buf = vec![Complex64::new(0.0, 0.0); len];
        for (taps, mut dst) in self.taps.axis_iter(Axis(1)).zip(out.axis_iter_mut(Axis(1))) {
            buf.fill(Complex64::new(0.0, 0.0));
            buf.iter_mut().zip(taps.iter()).for_each(|(b, t)| *b = *t);
            dft.forward_unnormalized(&mut buf);
            dst.iter_mut().zip(&buf).for_each(|(d, b)| *d = *b);
        }
        Ok(out)
    }
}

pub fn draw_channel<R: Rng + ?Sized>(
    pdp: &PowerDelayProfile,
    antennas: usize,
    rng: &mut R,
) -> Result<ChannelRealization, ChannelError> {
    if antennas == 0 {
        return Err(ChannelError::NoAntennas);
    }
    let mut taps = CMatrix::zeros((pdp.taps(), antennas));
    // Row-major draw order: tap by tap, antenna by antenna.
    for (l, mut row) in taps.axis_iter_mut(Axis(0)).enumerate() {
        let p = pdp.powers()[l];
        for h in row.iter_mut() {
            *h = if p > 0.0 {
                complex_gaussian(rng, p)
            } else {
                Complex64::new(0.0, 0.0)
            };
        }
    }
    Ok(ChannelRealization { taps })
}

/// Noise variance per complex sample for a given SNR in dB.
pub fn noise_variance(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

/// `P × Nr` matrix of i.i.d. `CN(0, var)` samples, drawn row by row.
pub fn draw_noise<R: Rng + ?Sized>(len: usize, antennas: usize, var: f64, rng: &mut R) -> CMatrix {
    if var == 0.0 {
        return CMatrix::zeros((len, antennas));
    }
    let mut w = CMatrix::zeros((len, antennas));
    w.iter_mut().for_each(|z| *z = complex_gaussian(rng, var));
    w
}

/// Noiseless received samples: column `r` is the `P`-point circular
/// convolution of `x` with antenna `r`'s taps.
pub fn convolve(x: &[Complex64], ch: &ChannelRealization) -> Result<CMatrix, ChannelError> {
    let len = x.len();
    let hf = ch.frequency_response(len)?;
    let dft = Dft::new(len);
    let mut xf = x.to_vec();
    dft.forward_unnormalized(&mut xf);
    let mut out: Array2<Complex64> = CMatrix::zeros((len, ch.antennas()));
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    for (h, mut dst) in hf.axis_iter(Axis(1)).zip(out.axis_iter_mut(Axis(1))) {
        buf.iter_mut()
            .zip(xf.iter().zip(h.iter()))
            .for_each(|(b, (a, h))| *b = a * h);
        // Unitary inverse applied to the unnormalized product: rescale by 1/√P.
        dft.inverse(&mut buf);
        let s = 1.0 / (len as f64).sqrt();
        dst.iter_mut().zip(&buf).for_each(|(d, b)| *d = b * s);
    }
    Ok(out)
}

/// `Y = h ⊛ x + W` for every antenna.
pub fn apply_channel<R: Rng + ?Sized>(
    x: &[Complex64],
    ch: &ChannelRealization,
    noise_var: f64,
    rng: &mut R,
) -> Result<CMatrix, ChannelError> {
    let clean = convolve(x, ch)?;
    Ok(clean + draw_noise(x.len(), ch.antennas(), noise_var, rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn pdp_validation() {
        assert_eq!(PowerDelayProfile::new(vec![]), Err(ChannelError::Empty));
        assert_eq!(
            PowerDelayProfile::new(vec![0.5, 0.6]),
            Err(ChannelError::Increasing { index: 1 })
        );
        assert_eq!(PowerDelayProfile::new(vec![0.0, 0.0]), Err(ChannelError::ZeroEnergy));
        assert!(matches!(
            PowerDelayProfile::new(vec![1.0, f64::NAN]),
            Err(ChannelError::InvalidPower { index: 1, .. })
        ));
        assert_eq!(PowerDelayProfile::geometric(3, 0.0), Err(ChannelError::Ratio(0.0)));
    }

    #[test]
    fn geometric_profile_sums_to_one_and_decreases() {
        let pdp = PowerDelayProfile::geometric(9, 0.5).unwrap();
        let total: f64 = pdp.powers().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(pdp.powers().windows(2).all(|w| w[0] >= w[1]));
        assert!((pdp.powers()[0] / pdp.powers()[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn single_tap_unit_mean_energy() {
        let pdp = PowerDelayProfile::new(vec![1.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let n = 100_000;
        let mean = (0..n)
            .map(|_| draw_channel(&pdp, 1, &mut rng).unwrap().taps[[0, 0]].norm_sqr())
            .sum::<f64>()
            / n as f64;
        assert!((mean - 1.0).abs() < 0.02, "{mean}");
    }

    #[test]
    fn seeded_draws_repeat() {
        let pdp = PowerDelayProfile::geometric(4, 0.5).unwrap();
        let a = draw_channel(&pdp, 8, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = draw_channel(&pdp, 8, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_power_taps_are_zero() {
        let pdp = PowerDelayProfile::new(vec![1.0, 0.0, 0.0]).unwrap();
        let ch = draw_channel(&pdp, 5, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        for r in 0..5 {
            assert_eq!(ch.taps[[1, r]], c(0.0, 0.0));
            assert_eq!(ch.taps[[2, r]], c(0.0, 0.0));
        }
        assert_eq!(draw_channel(&pdp, 0, &mut ChaCha8Rng::seed_from_u64(1)), Err(ChannelError::NoAntennas));
    }

    #[test]
    fn identity_channel_passes_frame() {
        let ch = ChannelRealization::new(CMatrix::from_elem((1, 1), c(1.0, 0.0)));
        let x: Vec<_> = (0..16).map(|i| c(i as f64, 1.0 - i as f64)).collect();
        let y = apply_channel(&x, &ch, 0.0, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        for (a, b) in y.column(0).iter().zip(&x) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn impulse_reads_out_taps() {
        let (a, b) = (c(0.3, -0.2), c(-1.1, 0.4));
        let mut taps = CMatrix::zeros((2, 1));
        taps[[0, 0]] = a;
        taps[[1, 0]] = b;
        let ch = ChannelRealization::new(taps);
        let x = [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)];
        let y = convolve(&x, &ch).unwrap();
        let want = [a, b, c(0.0, 0.0), c(0.0, 0.0)];
        for (g, w) in y.column(0).iter().zip(&want) {
            assert!((g - w).norm() < 1e-15);
        }
    }

    #[test]
    fn noise_variance_calibrated() {
        let ch = ChannelRealization::new(CMatrix::from_elem((1, 4), c(1.0, 0.0)));
        let x = vec![c(0.0, 0.0); 25_000];
        let var = noise_variance(3.0);
        let y = apply_channel(&x, &ch, var, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let est = y.iter().map(|z| z.norm_sqr()).sum::<f64>() / y.len() as f64;
        assert!((est / var - 1.0).abs() < 0.02, "{est} vs {var}");
    }

    #[test]
    fn too_many_taps_rejected() {
        let ch = ChannelRealization::new(CMatrix::zeros((5, 1)));
        assert_eq!(
            convolve(&[c(1.0, 0.0); 4], &ch),
            Err(ChannelError::TooManyTaps { taps: 5, len: 4 })
        );
    }
}
