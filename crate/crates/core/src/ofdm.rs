//! Pilot-aided MRC-OFDM reference receiver.
//!
//! A fixed fraction of subcarriers carries known corner symbols on a
//! (near-)equidistant grid. Least-squares channel values at the pilot bins are
//! interpolated to every bin with a truncated tap-domain fit, then each data
//! bin is combined across antennas with MRC and sliced.
//!
//! The transmit signal goes through the same circular channel model as the
//! single-carrier frames, which stands in for CP-OFDM with a long enough
//! cyclic prefix.

use ndarray::{ArrayView2, Axis};
use num_complex::Complex64;
use thiserror::Error;

use crate::constellation::{Constellation, ConstellationError, HardDecisions, Quadrant};
use crate::linalg::{self, dft_columns, CMatrix, Dft, LinalgError};
use crate::mrc::{self, DegenerateBin};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OfdmError {
    #[error(transparent)]
    Constellation(#[from] ConstellationError),
    #[error("pilot fraction must lie in (0, 1), got {0}")]
    PilotFraction(f64),
    #[error("{pilots} pilots cannot resolve {taps} taps")]
    TooFewPilots { pilots: usize, taps: usize },
    #[error("{len} subcarriers leave no room for data next to {pilots} pilots")]
    NoDataBins { len: usize, pilots: usize },
    #[error("interpolation needs at least one tap")]
    ZeroTaps,
    #[error("payload has {got} bits, symbol needs {want}")]
    PayloadLength { got: usize, want: usize },
    #[error("received block has {got} rows, expected {want}")]
    Shape { got: usize, want: usize },
    #[error(transparent)]
    DegenerateBin(#[from] DegenerateBin),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OfdmPilotConfig {
    len: usize,
    pilot_fraction: f64,
    pilots: Vec<usize>,
    data: Vec<usize>,
    taps: usize,
    constellation: Constellation,
}

impl OfdmPilotConfig {
    /// `⌈fraction·len⌉` pilots at `⌊k·len/n⌋`, which is exactly equidistant
    /// whenever the pilot count divides `len`. `taps` is the tap count kept
    /// by the interpolator.
    pub fn new(len: usize, order: usize, pilot_fraction: f64, taps: usize) -> Result<Self, OfdmError> {
        let constellation = Constellation::new(order)?;
        if !(pilot_fraction > 0.0 && pilot_fraction < 1.0) {
            return Err(OfdmError::PilotFraction(pilot_fraction));
        }
        if taps == 0 {
            return Err(OfdmError::ZeroTaps);
        }
        // Shave a few ulps so e.g. 0.1·10 does not round up to 2.
        let count = ((pilot_fraction * len as f64) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        if count >= len {
            return Err(OfdmError::NoDataBins { len, pilots: count });
        }
        if count < taps {
            return Err(OfdmError::TooFewPilots {
                pilots: count,
                taps,
            });
        }
        let pilots: Vec<usize> = (0..count).map(|k| k * len / count).collect();
        let mut is_pilot = vec![false; len];
        pilots.iter().for_each(|&p| is_pilot[p] = true);
        let data = (0..len).filter(|&p| !is_pilot[p]).collect();
        Ok(Self {
            len,
            pilot_fraction,
            pilots,
            data,
            taps,
            constellation,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn pilot_fraction(&self) -> f64 {
        self.pilot_fraction
    }

    pub fn pilots(&self) -> &[usize] {
        &self.pilots
    }

    pub fn data(&self) -> &[usize] {
        &self.data
    }

    pub fn taps(&self) -> usize {
        self.taps
    }

    pub fn constellation(&self) -> &Constellation {
        &self.constellation
    }

    pub fn pilot_symbol(&self) -> Complex64 {
        self.constellation.corner(Quadrant::First)
    }

    pub fn payload_bits(&self) -> usize {
        self.data.len() * self.constellation.bits_per_symbol()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OfdmSymbol {
    /// Subcarrier values `X_f`.
    pub freq: Vec<Complex64>,
    /// Unitary inverse DFT of `freq`.
    pub time: Vec<Complex64>,
    pub payload_bits: Vec<bool>,
}

pub fn transmit(cfg: &OfdmPilotConfig, payload_bits: Vec<bool>) -> Result<OfdmSymbol, OfdmError> {
    if payload_bits.len() != cfg.payload_bits() {
        return Err(OfdmError::PayloadLength {
            got: payload_bits.len(),
            want: cfg.payload_bits(),
        });
    }
    let data = cfg.constellation.modulate(&payload_bits)?;
    let mut freq = vec![Complex64::new(0.0, 0.0); cfg.len];
    for &p in &cfg.pilots {
        freq[p] = cfg.pilot_symbol();
    }
    for (&p, s) in cfg.data.iter().zip(data) {
        freq[p] = s;
    }
    let mut time = freq.clone();
    Dft::new(cfg.len).inverse(&mut time);
    Ok(OfdmSymbol {
        freq,
        time,
        payload_bits,
    })
}

/// Fits `taps` tap coefficients to the per-pilot channel values (one column
/// per antenna) and evaluates the fit on every bin. On an exactly
/// equidistant grid this is inverse-DFT, truncate, forward-DFT.
pub fn interpolate(cfg: &OfdmPilotConfig, at_pilots: ArrayView2<Complex64>) -> Result<CMatrix, OfdmError> {
    let basis = dft_columns(cfg.len, &cfg.pilots, cfg.taps);
    let fit = linalg::regularized_ls(basis.view(), at_pilots, 0.0)?;
    Ok(Dft::new(cfg.len).leading_columns(cfg.taps).dot(&fit))
}

#[derive(Debug, Clone)]
pub struct OfdmDecision {
    /// MRC output on every subcarrier.
    pub combined: Vec<Complex64>,
    /// Hard decisions on the data subcarriers, in data-bin order.
    pub decisions: HardDecisions,
    /// Interpolated per-bin channel, `P × Nr`.
    pub response: CMatrix,
}

impl OfdmDecision {
    /// `‖Yf − diag(X̂)·Ĥ‖_F / ‖Yf‖_F` of this receiver's own fit.
    pub fn residual(&self, yf: ArrayView2<Complex64>) -> f64 {
        let x = ndarray::Array1::from(self.combined.clone());
        mrc::relative_residual(yf, &x, self.response.view())
    }
}

/// LS pilot estimates, interpolation, per-bin MRC and slicing.
pub fn receive(cfg: &OfdmPilotConfig, yf: ArrayView2<Complex64>) -> Result<OfdmDecision, OfdmError> {
    if yf.nrows() != cfg.len {
        return Err(OfdmError::Shape {
            got: yf.nrows(),
            want: cfg.len,
        });
    }
    let pilot = cfg.pilot_symbol();
    let at_pilots = yf.select(Axis(0), &cfg.pilots).mapv(|z| z / pilot);
    let response = interpolate(cfg, at_pilots.view())?;
    let combined = mrc::combine(yf, response.view())?.to_vec();
    let data: Vec<Complex64> = cfg.data.iter().map(|&p| combined[p]).collect();
    let decisions = cfg.constellation.demodulate(&data);
    Ok(OfdmDecision {
        combined,
        decisions,
        response,
    })
}
