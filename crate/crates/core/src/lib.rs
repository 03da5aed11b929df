//! Near-pilotless blind receiver for single-input multiple-output
//! single-carrier frequency-domain equalization (SC-FDE).
//!
//! The receiver jointly estimates the transmitted block and the multipath
//! channel from one received frame by alternating between a regularized
//! least-squares channel fit and per-bin maximal ratio combining. A single
//! pilot symbol resolves the remaining complex scale, and two refinements
//! (centroid adjustment and QAM-to-QPSK residue correction) clean up what the
//! noisy pilot leaves behind. A pilot-aided MRC-OFDM receiver serves as the
//! reference, and [`sim`] drives both through Monte-Carlo BER sweeps.

pub mod blind;
pub mod channel;
pub mod constellation;
pub mod frame;
pub mod linalg;
pub mod mrc;
pub mod ofdm;
pub mod sim;

pub use num_complex::Complex64;
