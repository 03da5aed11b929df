//! Blind joint data/channel estimation by alternating minimization, and the
//! scale corrections that turn its output into constellation symbols.
//!
//! The received frequency-domain block obeys `Yf ≈ diag(Λ)·F_L·H`. The
//! factorization is only identifiable up to a complex scale `α`
//! (`(αΛ, H/α)` reconstructs `Yf` identically), so after returning to the time
//! domain the estimate is `√P·α·x`. The pilot fixes `α` from one sample;
//! [`centroids_adjust`] and [`qq_correct`] refine it from the data cloud.

use ndarray::{Array1, ArrayView2, Axis};
use num_complex::Complex64;
use thiserror::Error;

use crate::constellation::{Constellation, Quadrant};
use crate::frame::FrameConfig;
use crate::linalg::{self, CMatrix, Dft, LinalgError};
use crate::mrc::{self, DegenerateBin};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReceiverError {
    #[error("invalid receiver configuration: {0}")]
    Config(String),
    #[error("frame of {len} samples is too short for {taps} estimated taps")]
    TooShort { len: usize, taps: usize },
    #[error("received block has {got} rows, expected {want}")]
    Shape { got: usize, want: usize },
    #[error(transparent)]
    DegenerateBin(#[from] DegenerateBin),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("pilot sample is zero, scale cannot be resolved")]
    PilotAnnihilated,
    #[error("no energy at payload positions")]
    NoPayloadEnergy,
}

/// Which scale correction produces the final symbol estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Correction {
    /// Divide by the pilot-derived scale only.
    Pilot,
    /// Pilot de-rotation followed by QAM-to-QPSK residue correction.
    PilotQq,
    /// Centroid adjustment on the raw estimate; the pilot only picks the
    /// quadrant.
    CentroidAdjust,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlindConfig {
    /// Assumed channel length `L_est`.
    pub taps: usize,
    /// Ridge weight of the channel step.
    pub mu: f64,
    /// Stop once the relative reconstruction residual drops below this.
    pub tolerance: f64,
    pub max_iter: usize,
    pub correction: Correction,
    pub init_tolerance: f64,
    pub init_max_iter: usize,
}

impl BlindConfig {
    pub fn new(taps: usize) -> Self {
        Self {
            taps,
            mu: 0.5,
            tolerance: 1e-4,
            max_iter: 100,
            correction: Correction::PilotQq,
            init_tolerance: 1e-9,
            init_max_iter: 500,
        }
    }

    /// Checks the operating-range invariants (`0 < μ < 1` among them).
    pub fn validate(&self) -> Result<(), ReceiverError> {
        if self.taps == 0 {
            return Err(ReceiverError::Config("taps must be at least 1".into()));
        }
        if !(self.mu > 0.0 && self.mu < 1.0) {
            return Err(ReceiverError::Config(format!(
                "mu must lie in (0, 1), got {}",
                self.mu
            )));
        }
        if !(self.tolerance > 0.0) {
            return Err(ReceiverError::Config(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.max_iter == 0 {
            return Err(ReceiverError::Config("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    IterationLimit,
}

#[derive(Debug, Clone)]
pub struct ReceiverEstimate {
    /// Diagonal of `Λ̂` (frequency domain, length `P`).
    pub lambda: Array1<Complex64>,
    /// Tap-domain channel `Ĥ_t`, `L_est × Nr`.
    pub taps: CMatrix,
    /// Per-bin channel `Ĥ_n = F_L·Ĥ_t`, `P × Nr`.
    pub response: CMatrix,
    pub iterations: usize,
    /// Relative residual after each MRC update.
    pub residuals: Vec<f64>,
    /// Relative residual after each channel update, before the MRC update.
    pub pre_mrc_residuals: Vec<f64>,
    pub termination: Termination,
    pub init_converged: bool,
}

impl ReceiverEstimate {
    pub fn final_residual(&self) -> f64 {
        self.residuals.last().copied().unwrap_or(f64::INFINITY)
    }

    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }
}

/// Row-scales `F_L` by `λ`: `A = diag(λ)·F_L`.
fn scaled_basis(lambda: &Array1<Complex64>, fl: &CMatrix) -> CMatrix {
    let mut a = fl.clone();
    for (mut row, l) in a.axis_iter_mut(Axis(0)).zip(lambda.iter()) {
        row.mapv_inplace(|z| z * l);
    }
    a
}

/// Alternates a ridge-regularized channel fit with per-bin MRC, starting
/// from the dominant left singular vector of `yf`.
pub fn alternating_minimization(
    yf: ArrayView2<Complex64>,
    cfg: &BlindConfig,
) -> Result<ReceiverEstimate, ReceiverError> {
    let (len, antennas) = yf.dim();
    if cfg.taps == 0 || antennas == 0 {
        return Err(ReceiverError::Config(
            "need at least one tap and one antenna".into(),
        ));
    }
    if len <= 2 * cfg.taps {
        return Err(ReceiverError::TooShort {
            len,
            taps: cfg.taps,
        });
    }
    if !(cfg.tolerance > 0.0) || cfg.max_iter == 0 {
        return Err(ReceiverError::Config(
            "tolerance must be positive and max_iter at least 1".into(),
        ));
    }

    let init = linalg::power_iteration(yf, cfg.init_tolerance, cfg.init_max_iter)?;
    let mut lambda = init.vector;
    let fl = Dft::new(len).leading_columns(cfg.taps);

    let mut residuals = Vec::new();
    let mut pre_mrc_residuals = Vec::new();
    let mut termination = Termination::IterationLimit;
    let mut taps = CMatrix::zeros((cfg.taps, antennas));
    let mut response = CMatrix::zeros((len, antennas));
    for _ in 0..cfg.max_iter {
        let a = scaled_basis(&lambda, &fl);
        taps = linalg::regularized_ls(a.view(), yf, cfg.mu)?;
        response = fl.dot(&taps);
        pre_mrc_residuals.push(mrc::relative_residual(yf, &lambda, response.view()));
        lambda = mrc::combine(yf, response.view())?;
        let r = mrc::relative_residual(yf, &lambda, response.view());
        residuals.push(r);
        if r < cfg.tolerance {
            termination = Termination::Converged;
            break;
        }
    }
    Ok(ReceiverEstimate {
        lambda,
        taps,
        response,
        iterations: residuals.len(),
        residuals,
        pre_mrc_residuals,
        termination,
        init_converged: init.converged,
    })
}

/// Inverse unitary DFT of the per-bin estimate. For `λ = Λx` this is `√P·x`.
pub fn to_time_domain(lambda: &[Complex64]) -> Vec<Complex64> {
    let mut out = lambda.to_vec();
    if !out.is_empty() {
        Dft::new(out.len()).inverse(&mut out);
    }
    out
}

/// A scale-corrected time-domain estimate: `corrected[n] = raw[n] / alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeEstimate {
    pub alpha: Complex64,
    pub corrected: Vec<Complex64>,
}

impl TimeEstimate {
    fn from_scale(raw: &[Complex64], alpha: Complex64) -> Self {
        Self {
            alpha,
            corrected: raw.iter().map(|z| z / alpha).collect(),
        }
    }
}

fn check_len(x: &[Complex64], cfg: &FrameConfig) -> Result<(), ReceiverError> {
    if x.len() != cfg.len() {
        return Err(ReceiverError::Shape {
            got: x.len(),
            want: cfg.len(),
        });
    }
    Ok(())
}

/// `α̂ = x̂[l_p] / pilot`, applied to the whole block.
pub fn pilot_derotate(x_hat: &[Complex64], cfg: &FrameConfig) -> Result<TimeEstimate, ReceiverError> {
    check_len(x_hat, cfg)?;
    let sample = x_hat[cfg.pilot_index()];
    if sample == Complex64::new(0.0, 0.0) {
        return Err(ReceiverError::PilotAnnihilated);
    }
    Ok(TimeEstimate::from_scale(x_hat, sample / cfg.pilot_value()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CentroidAdjustment {
    pub estimate: TimeEstimate,
    /// Quadrant whose corner the centroid cluster was mapped onto.
    pub quadrant: Quadrant,
    /// Number of payload samples averaged into the centroid.
    pub cluster: usize,
}

/// Centroid adjustment on the raw (not pilot-corrected) time-domain estimate.
///
/// The strongest payload sample is mapped onto the first-quadrant corner,
/// the samples deciding to that corner are averaged into a centroid, and the
/// four `π/2` rotations of the centroid-to-corner scale are tried against the
/// pilot. Centroid and candidates live in the max-normalized coordinates; the
/// returned scale is the composite one so `corrected = x_hat / alpha`.
pub fn centroids_adjust(
    x_hat: &[Complex64],
    cfg: &FrameConfig,
) -> Result<CentroidAdjustment, ReceiverError> {
    check_len(x_hat, cfg)?;
    let c = cfg.constellation();
    let data = &x_hat[cfg.data_range()];
    let (imax, peak) = data
        .iter()
        .enumerate()
        .fold((0, Complex64::new(0.0, 0.0)), |best, (i, z)| {
            if z.norm_sqr() > best.1.norm_sqr() {
                (i, *z)
            } else {
                best
            }
        });
    if peak == Complex64::new(0.0, 0.0) {
        return Err(ReceiverError::NoPayloadEnergy);
    }
    let alpha_mid = peak / c.corner(Quadrant::First);
    let mid: Vec<Complex64> = data.iter().map(|z| z / alpha_mid).collect();
    // The peak sample itself always belongs to its own decision cluster.
    let target = c.decide(mid[imax]);
    let (sum, cluster) = mid
        .iter()
        .filter(|z| c.decide(**z) == target)
        .fold((Complex64::new(0.0, 0.0), 0usize), |(s, n), z| (s + z, n + 1));
    let centroid = sum / cluster as f64;

    let pilot_mid = x_hat[cfg.pilot_index()] / alpha_mid;
    let (quadrant, alpha_ca) = Quadrant::ALL
        .iter()
        .map(|&q| (q, centroid / c.corner(q)))
        .min_by(|a, b| {
            let da = (pilot_mid / a.1 - cfg.pilot_value()).norm_sqr();
            let db = (pilot_mid / b.1 - cfg.pilot_value()).norm_sqr();
            da.total_cmp(&db)
        })
        .expect("four candidates");
    Ok(CentroidAdjustment {
        estimate: TimeEstimate::from_scale(x_hat, alpha_mid * alpha_ca),
        quadrant,
        cluster,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct QqCorrection {
    /// Residual scale `α_QQ` (output = input / `α_QQ`).
    pub alpha: Complex64,
    pub corrected: Vec<Complex64>,
    /// Payload samples per quadrant.
    pub counts: [usize; 4],
}

/// Residual scale of a pilot-corrected block: the mean over populated
/// quadrants of (received quadrant mean / ideal quadrant centroid).
pub fn qq_scale(x_derot: &[Complex64], cfg: &FrameConfig) -> Result<(Complex64, [usize; 4]), ReceiverError> {
    check_len(x_derot, cfg)?;
    let c: &Constellation = cfg.constellation();
    let mut sums = [Complex64::new(0.0, 0.0); 4];
    let mut counts = [0usize; 4];
    for z in &x_derot[cfg.data_range()] {
        let q = Quadrant::of(*z).index();
        sums[q] += z;
        counts[q] += 1;
    }
    let mut total = Complex64::new(0.0, 0.0);
    let mut used = 0usize;
    for q in Quadrant::ALL {
        let n = counts[q.index()];
        if n > 0 {
            total += sums[q.index()] / n as f64 / c.quadrant_centroid(q);
            used += 1;
        }
    }
    // FrameConfig guarantees at least one payload sample.
    debug_assert!(used > 0);
    Ok((total / used as f64, counts))
}

pub fn qq_correct(x_derot: &[Complex64], cfg: &FrameConfig) -> Result<QqCorrection, ReceiverError> {
    let (alpha, counts) = qq_scale(x_derot, cfg)?;
    Ok(QqCorrection {
        alpha,
        corrected: x_derot.iter().map(|z| z / alpha).collect(),
        counts,
    })
}

/// Applies `mode` to the raw time-domain estimate.
pub fn correct(
    x_hat: &[Complex64],
    cfg: &FrameConfig,
    mode: Correction,
) -> Result<TimeEstimate, ReceiverError> {
    match mode {
        Correction::Pilot => pilot_derotate(x_hat, cfg),
        Correction::PilotQq => {
            let pilot = pilot_derotate(x_hat, cfg)?;
            let (alpha_qq, _) = qq_scale(&pilot.corrected, cfg)?;
            Ok(TimeEstimate::from_scale(x_hat, pilot.alpha * alpha_qq))
        }
        Correction::CentroidAdjust => Ok(centroids_adjust(x_hat, cfg)?.estimate),
    }
}

/// Full blind chain for one frame: estimate, return to the time domain,
/// correct the scale.
#[derive(Debug, Clone)]
pub struct BlindReceiver {
    pub frame: FrameConfig,
    pub config: BlindConfig,
}

#[derive(Debug, Clone)]
pub struct BlindOutput {
    pub estimate: ReceiverEstimate,
    /// Time-domain block before any scale correction.
    pub raw: Vec<Complex64>,
}

impl BlindReceiver {
    pub fn new(frame: FrameConfig, config: BlindConfig) -> Result<Self, ReceiverError> {
        config.validate()?;
        if frame.len() <= 2 * config.taps {
            return Err(ReceiverError::TooShort {
                len: frame.len(),
                taps: config.taps,
            });
        }
        Ok(Self { frame, config })
    }

    pub fn estimate(&self, yf: ArrayView2<Complex64>) -> Result<BlindOutput, ReceiverError> {
        if yf.nrows() != self.frame.len() {
            return Err(ReceiverError::Shape {
                got: yf.nrows(),
                want: self.frame.len(),
            });
        }
        let estimate = alternating_minimization(yf, &self.config)?;
        let raw = to_time_domain(estimate.lambda.as_slice().expect("contiguous"));
        Ok(BlindOutput { estimate, raw })
    }

    pub fn decode(&self, yf: ArrayView2<Complex64>) -> Result<(BlindOutput, TimeEstimate), ReceiverError> {
        let out = self.estimate(yf)?;
        let t = correct(&out.raw, &self.frame, self.config.correction)?;
        Ok((out, t))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{self, ChannelRealization, PowerDelayProfile};
    use crate::frame::Frame;
    use crate::linalg::{circulant_eigenvalues, frobenius_norm};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Frame whose payload cycles through every constellation point equally
    /// often (`repeats` times each).
    fn uniform_frame(order: usize, taps: usize, repeats: usize) -> (FrameConfig, Frame) {
        let len = order * repeats + 1 + 2 * (taps - 1);
        let cfg = FrameConfig::new(len, taps, order).unwrap();
        let con = cfg.constellation().clone();
        let bits: Vec<bool> = (0..order * repeats)
            .flat_map(|i| con.bits_of(i % order).collect::<Vec<_>>())
            .collect();
        let f = Frame::build(&cfg, bits).unwrap();
        (cfg, f)
    }

    fn scaled(x: &[Complex64], a: Complex64) -> Vec<Complex64> {
        x.iter().map(|z| z * a).collect()
    }

    fn max_err(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn config_validation() {
        let mut cfg = BlindConfig::new(3);
        assert!(cfg.validate().is_ok());
        cfg.mu = 1.0;
        assert!(cfg.validate().is_err());
        cfg.mu = 0.5;
        cfg.taps = 0;
        assert!(cfg.validate().is_err());
        cfg.taps = 2;
        cfg.tolerance = 0.0;
        assert!(cfg.validate().is_err());
        cfg.tolerance = 1e-4;
        cfg.max_iter = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn rejects_short_blocks() {
        let y = CMatrix::from_elem((6, 2), c(1.0, 0.0));
        assert_eq!(
            alternating_minimization(y.view(), &BlindConfig::new(3)).unwrap_err(),
            ReceiverError::TooShort { len: 6, taps: 3 }
        );
    }

    #[test]
    fn flat_channel_noiseless() {
        let cfg = FrameConfig::new(32, 1, 16).unwrap();
        let f = Frame::random(&cfg, &mut ChaCha8Rng::seed_from_u64(5));
        let ch = ChannelRealization::new(CMatrix::from_elem((1, 4), c(1.0, 0.0)));
        let y = channel::convolve(&f.symbols, &ch).unwrap();
        let yf = Dft::new(32).forward_columns(y.view());
        let est = alternating_minimization(yf.view(), &BlindConfig::new(1)).unwrap();
        assert!(est.converged());
        assert!(est.final_residual() < 1e-6);
        let x_hat = to_time_domain(est.lambda.as_slice().unwrap());
        let ip: Complex64 = x_hat.iter().zip(&f.symbols).map(|(a, b)| a.conj() * b).sum();
        let cos = ip.norm() / (frobenius_norm(x_hat.iter()) * frobenius_norm(f.symbols.iter()));
        assert!(cos > 0.999, "{cos}");
    }

    #[test]
    fn response_matches_tap_estimate() {
        let cfg = FrameConfig::new(64, 3, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let f = Frame::random(&cfg, &mut rng);
        let pdp = PowerDelayProfile::geometric(3, 0.5).unwrap();
        let ch = channel::draw_channel(&pdp, 6, &mut rng).unwrap();
        let y = channel::apply_channel(&f.symbols, &ch, 0.01, &mut rng).unwrap();
        let yf = Dft::new(64).forward_columns(y.view());
        let mut bc = BlindConfig::new(3);
        bc.max_iter = 7;
        let est = alternating_minimization(yf.view(), &bc).unwrap();
        let fl = Dft::new(64).leading_columns(3);
        assert!(frobenius_norm((&est.response - &fl.dot(&est.taps)).iter()) < 1e-10);
        assert_eq!(est.iterations, est.residuals.len());
        assert!(est.residuals.iter().all(|r| r.is_finite() && *r >= 0.0));
        assert_eq!(est.termination, Termination::IterationLimit);
        assert_eq!(est.iterations, 7);
    }

    #[test]
    fn true_channel_single_mrc_pass_recovers_spectrum() {
        let cfg = FrameConfig::new(64, 4, 64).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let f = Frame::random(&cfg, &mut rng);
        let pdp = PowerDelayProfile::geometric(4, 0.5).unwrap();
        let ch = channel::draw_channel(&pdp, 8, &mut rng).unwrap();
        let yf = Dft::new(64).forward_columns(channel::convolve(&f.symbols, &ch).unwrap().view());
        let hn = Dft::new(64).leading_columns(4).dot(&ch.taps);
        let lambda = mrc::combine(yf.view(), hn.view()).unwrap();
        let want = circulant_eigenvalues(&f.symbols);
        let scale = frobenius_norm(want.iter());
        assert!(max_err(lambda.as_slice().unwrap(), &want) < 1e-12 * scale);
    }

    #[test]
    fn time_domain_of_circulant_spectrum_is_scaled_frame() {
        let cfg = FrameConfig::new(16, 2, 16).unwrap();
        let f = Frame::random(&cfg, &mut ChaCha8Rng::seed_from_u64(1));
        let x = to_time_domain(&circulant_eigenvalues(&f.symbols));
        assert!(max_err(&x, &scaled(&f.symbols, c(4.0, 0.0))) < 1e-12);
        assert!(to_time_domain(&[c(0.0, 0.0); 8]).iter().all(|z| z.norm() == 0.0));
        let v: Vec<_> = (0..8).map(|i| c(i as f64, 0.5)).collect();
        let t = to_time_domain(&v);
        assert!((frobenius_norm(t.iter()) - frobenius_norm(v.iter())).abs() < 1e-12);
    }

    #[test]
    fn pilot_derotation_removes_pure_scale() {
        let cfg = FrameConfig::new(32, 3, 64).unwrap();
        let f = Frame::random(&cfg, &mut ChaCha8Rng::seed_from_u64(3));
        let a = Complex64::from_polar(2.0, 0.3);
        let t = pilot_derotate(&scaled(&f.symbols, a), &cfg).unwrap();
        assert!((t.alpha - a).norm() < 1e-14);
        assert!(max_err(&t.corrected, &f.symbols) < 1e-14);
        assert!((t.corrected[cfg.pilot_index()] - cfg.pilot_value()).norm() < 1e-15);

        let t = pilot_derotate(&f.symbols, &cfg).unwrap();
        assert_eq!(t.alpha, c(1.0, 0.0));
        assert_eq!(t.corrected, f.symbols);
    }

    #[test]
    fn pilot_noise_becomes_residual_scale() {
        let cfg = FrameConfig::new(32, 3, 16).unwrap();
        let f = Frame::random(&cfg, &mut ChaCha8Rng::seed_from_u64(4));
        let a = Complex64::from_polar(1.5, -0.8);
        let e = c(0.02, -0.03);
        let mut x = scaled(&f.symbols, a);
        x[cfg.pilot_index()] += e;
        let t = pilot_derotate(&x, &cfg).unwrap();
        // Hand division: α̂ = α + e/pilot, residual factor α/α̂ on data.
        let want_alpha = a + e / cfg.pilot_value();
        assert!((t.alpha - want_alpha).norm() < 1e-15);
        let k = cfg.data_range().start;
        assert!((t.corrected[k] - f.symbols[k] * a / want_alpha).norm() < 1e-14);
    }

    #[test]
    fn annihilated_pilot_errors() {
        let cfg = FrameConfig::new(16, 2, 4).unwrap();
        let x = vec![c(1.0, 1.0); 16];
        let mut z = x.clone();
        z[cfg.pilot_index()] = c(0.0, 0.0);
        assert_eq!(pilot_derotate(&z, &cfg), Err(ReceiverError::PilotAnnihilated));
        assert!(matches!(
            pilot_derotate(&x[..15], &cfg),
            Err(ReceiverError::Shape { got: 15, want: 16 })
        ));
    }

    #[test]
    fn ca_keeps_aligned_frame() {
        let (cfg, f) = uniform_frame(64, 4, 2);
        let out = centroids_adjust(&f.symbols, &cfg).unwrap();
        assert_eq!(out.quadrant, Quadrant::First);
        assert!(max_err(&out.estimate.corrected, &f.symbols) < 1e-9);
        assert_eq!(out.cluster, 2);
    }

    #[test]
    fn ca_resolves_quarter_turns_and_scale() {
        let (cfg, f) = uniform_frame(64, 3, 1);
        let con = cfg.constellation();
        for k in 0..4 {
            let a = Complex64::from_polar(2.0, 0.1) * Quadrant::ALL[k].rotation();
            let out = centroids_adjust(&scaled(&f.symbols, a), &cfg).unwrap();
            assert!(max_err(&out.estimate.corrected, &f.symbols) < 1e-6);
            let got = con.demodulate(&out.estimate.corrected[cfg.data_range()]);
            assert_eq!(got.points, f.payload(&cfg));
        }
        let rotated = scaled(&f.symbols, c(0.0, 1.0));
        let out = centroids_adjust(&rotated, &cfg).unwrap();
        assert!(max_err(&out.estimate.corrected, &f.symbols) < 1e-6);
    }

    #[test]
    fn ca_composite_scale_is_exact_division() {
        let (cfg, f) = uniform_frame(16, 2, 3);
        let x = scaled(&f.symbols, Complex64::from_polar(0.7, 2.0));
        let out = centroids_adjust(&x, &cfg).unwrap().estimate;
        for (o, r) in out.corrected.iter().zip(&x) {
            assert_eq!(*o, r / out.alpha);
        }
    }

    #[test]
    fn ca_needs_payload_energy() {
        let cfg = FrameConfig::new(16, 2, 4).unwrap();
        let mut x = vec![c(0.0, 0.0); 16];
        x[cfg.pilot_index()] = c(1.0, 1.0);
        assert_eq!(centroids_adjust(&x, &cfg), Err(ReceiverError::NoPayloadEnergy));
    }

    #[test]
    fn qq_clean_frame_is_fixed_point() {
        let (cfg, f) = uniform_frame(64, 5, 1);
        let out = qq_correct(&f.symbols, &cfg).unwrap();
        assert!((out.alpha - c(1.0, 0.0)).norm() < 1e-12);
        assert_eq!(out.counts, [16; 4]);
    }

    #[test]
    fn qq_estimates_rotation_and_scale() {
        let (cfg, f) = uniform_frame(64, 3, 2);
        for a in [Complex64::from_polar(1.0, 0.05), c(1.1, 0.0)] {
            let out = qq_correct(&scaled(&f.symbols, a), &cfg).unwrap();
            assert!((out.alpha - a).norm() < 1e-9, "{} vs {}", out.alpha, a);
            assert!(max_err(&out.corrected, &f.symbols) < 1e-9);
        }
    }

    #[test]
    fn qq_tolerates_rotations_below_quarter_pi() {
        let (cfg, f) = uniform_frame(16, 2, 2);
        // 16-QAM points sit at least atan(1/3) from an axis.
        for theta in [-0.3, -0.1, 0.2, 0.3] {
            let out = qq_correct(&scaled(&f.symbols, Complex64::from_polar(1.0, theta)), &cfg).unwrap();
            assert!(max_err(&out.corrected, &f.symbols) < 1e-6);
        }
    }

    #[test]
    fn qq_empty_quadrants() {
        let cfg = FrameConfig::new(8, 1, 4).unwrap();
        let con = cfg.constellation();
        let mut x = vec![con.corner(Quadrant::First); 8];
        x[3] = con.corner(Quadrant::Third) * 1.2;
        let out = qq_correct(&x, &cfg).unwrap();
        assert_eq!(out.counts, [6, 0, 1, 0]);
        assert!((out.alpha - c(1.1, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn correction_modes_compose_scales() {
        let (cfg, f) = uniform_frame(16, 2, 2);
        let a = Complex64::from_polar(3.0, 1.0);
        let x = scaled(&f.symbols, a);
        for mode in [Correction::Pilot, Correction::PilotQq, Correction::CentroidAdjust] {
            let t = correct(&x, &cfg, mode).unwrap();
            assert!((t.alpha - a).norm() < 1e-9, "{mode:?}");
            for (o, r) in t.corrected.iter().zip(&x) {
                assert_eq!(*o, r / t.alpha);
            }
        }
    }
}
