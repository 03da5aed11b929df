//! One Monte-Carlo frame, end to end.

use ndarray::ArrayView2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::blind::{self, BlindConfig, Correction};
use crate::channel::{self, PowerDelayProfile};
use crate::frame::{Frame, FrameConfig};
use crate::linalg::{CMatrix, Dft};
use crate::ofdm::{self, OfdmPilotConfig};

use super::config::{ConfigError, ReceiverKind, SimulationConfig};

/// Everything about a trial that depends only on the configuration and `P`,
/// built once per sweep point.
#[derive(Debug, Clone)]
pub struct TrialSetup {
    pub seq_len: usize,
    pub antennas: usize,
    pub seed: u64,
    pub receivers: Vec<ReceiverKind>,
    pub frame: FrameConfig,
    pub ofdm: Option<OfdmPilotConfig>,
    pub blind: BlindConfig,
    pub pdp: PowerDelayProfile,
    dft: Dft,
}

impl TrialSetup {
    pub fn new(cfg: &SimulationConfig, seq_len: usize) -> Result<Self, ConfigError> {
        let invalid = |e: &dyn std::fmt::Display| ConfigError::Invalid(e.to_string());
        let frame = cfg.frame_config(seq_len).map_err(|e| invalid(&e))?;
        let ofdm = if cfg.receivers.contains(&ReceiverKind::MrcOfdm) {
            Some(cfg.ofdm_config(seq_len).map_err(|e| invalid(&e))?)
        } else {
            None
        };
        let blind = cfg.blind_config(Correction::Pilot);
        blind.validate().map_err(|e| invalid(&e))?;
        let pdp = PowerDelayProfile::geometric(cfg.taps, cfg.pdp_ratio).map_err(|e| invalid(&e))?;
        Ok(Self {
            seq_len,
            antennas: cfg.antennas,
            seed: cfg.seed,
            receivers: cfg.receivers.clone(),
            frame,
            ofdm,
            blind,
            pdp,
            dft: Dft::new(seq_len),
        })
    }

    fn has_blind(&self) -> bool {
        self.receivers.iter().any(|r| r.correction().is_some())
    }
}

/// Independent random stream for one trial: the master seed picks the key,
/// the trial index picks the stream.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// FNV-1a over the bit patterns of every entry, row-major.
pub fn checksum(m: ArrayView2<Complex64>) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for z in m.iter() {
        for part in [z.re.to_bits(), z.im.to_bits()] {
            for b in part.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        }
    }
    h
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Decoded {
        bits: u64,
        bit_errors: u64,
        /// Alternating-minimization iterations (0 for the OFDM baseline).
        iterations: u64,
        /// Relative residual of the receiver's final fit to its input.
        final_residual: f64,
    },
    Failed {
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverOutcome {
    pub receiver: ReceiverKind,
    /// Checksum of the frequency-domain block this receiver was given.
    pub input_checksum: u64,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub seq_len: usize,
    pub snr_db: f64,
    pub trial: u64,
    pub channel_checksum: u64,
    /// Checksum of the unit-variance noise before SNR scaling.
    pub noise_checksum: u64,
    pub outcomes: Vec<ReceiverOutcome>,
    /// Per-iteration blind residuals; empty when no blind receiver ran or the
    /// estimate failed.
    pub residuals: Vec<f64>,
}

fn count_errors(decided: &[bool], sent: &[bool]) -> u64 {
    decided.iter().zip(sent).filter(|(a, b)| a != b).count() as u64
}

fn random_bits(n: usize, rng: &mut ChaCha8Rng) -> Vec<bool> {
    (0..n).map(|_| rng.random()).collect()
}

/// The single-carrier frame and its frequency-domain received block, drawn
/// exactly as [`run_trial`] draws them.
pub fn single_carrier_block(setup: &TrialSetup, snr_db: f64, trial: u64) -> (Frame, CMatrix) {
    let mut rng = trial_rng(setup.seed, trial);
    let ch = channel::draw_channel(&setup.pdp, setup.antennas, &mut rng)
        .expect("validated channel parameters");
    let noise = channel::draw_noise(setup.seq_len, setup.antennas, 1.0, &mut rng)
        .mapv(|z| z * channel::noise_variance(snr_db).sqrt());
    let bits = random_bits(setup.frame.payload_bits(), &mut rng);
    let frame = Frame::build(&setup.frame, bits).expect("payload sized from config");
    let y = channel::convolve(&frame.symbols, &ch).expect("validated channel") + &noise;
    let yf = setup.dft.forward_columns(y.view());
    (frame, yf)
}

/// Runs every configured receiver on one frame.
///
/// Draw order is fixed: channel taps, unit-variance noise, single-carrier
/// payload, OFDM payload. Channel and noise therefore do not depend on the
/// SNR, the receiver set or `P`'s payload size, and the noise is shared
/// between the single-carrier and OFDM links.
pub fn run_trial(setup: &TrialSetup, snr_db: f64, trial: u64) -> TrialRecord {
    let mut rng = trial_rng(setup.seed, trial);
    let p = setup.seq_len;
    let ch = channel::draw_channel(&setup.pdp, setup.antennas, &mut rng)
        .expect("validated channel parameters");
    let unit_noise = channel::draw_noise(p, setup.antennas, 1.0, &mut rng);
    let sc_bits = random_bits(setup.frame.payload_bits(), &mut rng);
    let ofdm_bits = setup
        .ofdm
        .as_ref()
        .map(|o| random_bits(o.payload_bits(), &mut rng));

    let noise = unit_noise.mapv(|z| z * channel::noise_variance(snr_db).sqrt());
    let mut record = TrialRecord {
        seq_len: p,
        snr_db,
        trial,
        channel_checksum: checksum(ch.taps.view()),
        noise_checksum: checksum(unit_noise.view()),
        outcomes: Vec::with_capacity(setup.receivers.len()),
        residuals: Vec::new(),
    };

    let mut blind_outcomes = Vec::new();
    if setup.has_blind() {
        let frame = Frame::build(&setup.frame, sc_bits).expect("payload sized from config");
        let y = channel::convolve(&frame.symbols, &ch).expect("validated channel") + &noise;
        let yf = setup.dft.forward_columns(y.view());
        let input_checksum = checksum(yf.view());
        let estimate = blind::alternating_minimization(yf.view(), &setup.blind);
        if let Ok(est) = &estimate {
            record.residuals = est.residuals.clone();
        }
        for &kind in &setup.receivers {
            let Some(mode) = kind.correction() else { continue };
            let outcome = match &estimate {
                Err(e) => Outcome::Failed {
                    reason: e.to_string(),
                },
                Ok(est) => {
                    let raw = blind::to_time_domain(est.lambda.as_slice().expect("contiguous"));
                    match blind::correct(&raw, &setup.frame, mode) {
                        Err(e) => Outcome::Failed {
                            reason: e.to_string(),
                        },
                        Ok(t) => {
                            let d = setup
                                .frame
                                .constellation()
                                .demodulate(&t.corrected[setup.frame.data_range()]);
                            Outcome::Decoded {
                                bits: d.bits.len() as u64,
                                bit_errors: count_errors(&d.bits, &frame.payload_bits),
                                iterations: est.iterations as u64,
                                final_residual: est.final_residual(),
                            }
                        }
                    }
                }
            };
            blind_outcomes.push((kind, ReceiverOutcome {
                receiver: kind,
                input_checksum,
                outcome,
            }));
        }
    }

    let mut ofdm_outcome = None;
    if let (Some(cfg), Some(bits)) = (&setup.ofdm, ofdm_bits) {
        let sym = ofdm::transmit(cfg, bits).expect("payload sized from config");
        let y = channel::convolve(&sym.time, &ch).expect("validated channel") + &noise;
        let yf: CMatrix = setup.dft.forward_columns(y.view());
        let outcome = match ofdm::receive(cfg, yf.view()) {
            Err(e) => Outcome::Failed {
                reason: e.to_string(),
            },
            Ok(dec) => Outcome::Decoded {
                bits: dec.decisions.bits.len() as u64,
                bit_errors: count_errors(&dec.decisions.bits, &sym.payload_bits),
                iterations: 0,
                final_residual: dec.residual(yf.view()),
            },
        };
        ofdm_outcome = Some(ReceiverOutcome {
            receiver: ReceiverKind::MrcOfdm,
            input_checksum: checksum(yf.view()),
            outcome,
        });
    }

    for &kind in &setup.receivers {
        let next = if kind == ReceiverKind::MrcOfdm {
            ofdm_outcome.take()
        } else {
            blind_outcomes
                .iter()
                .position(|(k, _)| *k == kind)
                .map(|i| blind_outcomes.swap_remove(i).1)
        };
        record.outcomes.extend(next);
    }
    record
}
