//! Zero-padded single-pilot frame layout.
//!
//! A frame of `P` symbols carries `L−1` leading zeros, the pilot, `N−1`
//! payload symbols and `L−1` trailing zeros, with `P = N + 2(L−1)`. The zero
//! guards make the linear channel convolution coincide with the circular one
//! inside the frame.

use std::ops::Range;

use num_complex::Complex64;
use thiserror::Error;

use crate::constellation::{Constellation, ConstellationError, Quadrant};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FrameError {
    #[error(transparent)]
    Constellation(#[from] ConstellationError),
    #[error("channel taps must be at least 1")]
    ZeroTaps,
    #[error("frame length {len} leaves fewer than 2 non-zero symbols for {taps} taps")]
    TooShort { len: usize, taps: usize },
    #[error("payload has {got} bits, frame needs {want}")]
    PayloadLength { got: usize, want: usize },
    #[error("expected {want} time-domain samples, got {got}")]
    SampleCount { got: usize, want: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameConfig {
    len: usize,
    taps: usize,
    constellation: Constellation,
}

impl FrameConfig {
    /// `len` is the frame length `P`, `taps` the guard-defining channel
    /// length `L`, `order` the QAM order.
    pub fn new(len: usize, taps: usize, order: usize) -> Result<Self, FrameError> {
        let constellation = Constellation::new(order)?;
        if taps == 0 {
            return Err(FrameError::ZeroTaps);
        }
        if len < 2 * (taps - 1) + 2 {
            return Err(FrameError::TooShort { len, taps });
        }
        Ok(Self {
            len,
            taps,
            constellation,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn taps(&self) -> usize {
        self.taps
    }

    pub fn constellation(&self) -> &Constellation {
        &self.constellation
    }

    /// Non-zero symbols per frame, pilot included.
    pub fn symbols(&self) -> usize {
        self.len - 2 * (self.taps - 1)
    }

    pub fn pilot_index(&self) -> usize {
        self.taps - 1
    }

    pub fn pilot_value(&self) -> Complex64 {
        self.constellation.corner(Quadrant::First)
    }

    /// Positions of the `N−1` payload symbols.
    pub fn data_range(&self) -> Range<usize> {
        let start = self.pilot_index() + 1;
        start..start + self.symbols() - 1
    }

    pub fn payload_bits(&self) -> usize {
        (self.symbols() - 1) * self.constellation.bits_per_symbol()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub symbols: Vec<Complex64>,
    pub payload_bits: Vec<bool>,
}

impl Frame {
    pub fn build(cfg: &FrameConfig, payload_bits: Vec<bool>) -> Result<Self, FrameError> {
        if payload_bits.len() != cfg.payload_bits() {
            return Err(FrameError::PayloadLength {
                got: payload_bits.len(),
                want: cfg.payload_bits(),
            });
        }
        let data = cfg.constellation().modulate(&payload_bits)?;
        let mut symbols = vec![Complex64::new(0.0, 0.0); cfg.len()];
        symbols[cfg.pilot_index()] = cfg.pilot_value();
        symbols[cfg.data_range()].copy_from_slice(&data);
        Ok(Self {
            symbols,
            payload_bits,
        })
    }

    /// Draws a uniformly random payload and builds the frame.
    pub fn random<R: rand::Rng + ?Sized>(cfg: &FrameConfig, rng: &mut R) -> Self {
        let bits = (0..cfg.payload_bits()).map(|_| rng.random()).collect();
        Self::build(cfg, bits).expect("payload length matches by construction")
    }

    pub fn payload(&self, cfg: &FrameConfig) -> &[Complex64] {
        &self.symbols[cfg.data_range()]
    }
}

/// Payload-position samples of a time-domain estimate.
pub fn extract_data<'a>(
    cfg: &FrameConfig,
    samples: &'a [Complex64],
) -> Result<&'a [Complex64], FrameError> {
    if samples.len() != cfg.len() {
        return Err(FrameError::SampleCount {
            got: samples.len(),
            want: cfg.len(),
        });
    }
    Ok(&samples[cfg.data_range()])
}
