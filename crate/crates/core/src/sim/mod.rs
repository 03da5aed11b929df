//! Monte-Carlo harness: BER sweeps over SNR and receiver variants, residual
//! traces over `P`, and the CSV files they produce.
//!
//! Every trial draws from its own ChaCha stream keyed by the master seed and
//! the trial index, so results do not depend on the worker count or on the
//! order in which trials finish.

pub mod config;
pub mod report;
pub mod trial;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use thiserror::Error;

use crate::blind;

pub use config::{ConfigError, Preset, ReceiverKind, SimulationConfig};
pub use report::{BerPoint, DumpRow, ReportError, ResidualTrace};
pub use trial::{run_trial, Outcome, TrialRecord, TrialSetup};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("thread pool: {0}")]
    Pool(String),
}

impl SimError {
    fn io(path: &Path) -> impl FnOnce(std::io::Error) -> SimError + '_ {
        move |source| SimError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

fn pool(workers: usize) -> Result<rayon::ThreadPool, SimError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| SimError::Pool(e.to_string()))
}

fn run_point(
    pool: &rayon::ThreadPool,
    setup: &TrialSetup,
    cfg: &SimulationConfig,
    snr_db: f64,
) -> Vec<TrialRecord> {
    let first = cfg.trial_offset;
    let last = first + cfg.frames as u64;
    // Indexed parallel collect keeps trial order.
    pool.install(|| {
        (first..last)
            .into_par_iter()
            .map(|t| run_trial(setup, snr_db, t))
            .collect()
    })
}

/// Lines written as `# ` comments above every CSV: artifact version, the
/// result-determining settings and, per `P`, the payload bits per sample of
/// each link (the OFDM link spends subcarriers on pilots).
pub fn metadata(cfg: &SimulationConfig) -> Vec<String> {
    let mut lines = vec![format!(
        "{} {}",
        env!("CARGO_PKG_NAME"),
        env!("CARGO_PKG_VERSION")
    )];
    lines.extend(cfg.echo().into_iter().map(|(k, v)| format!("{k} = {v}")));
    for &p in &cfg.seq_lens {
        let mut line = format!("spectral-efficiency P={p}");
        if cfg.receivers.iter().any(|r| r.correction().is_some()) {
            if let Ok(f) = cfg.frame_config(p) {
                line += &format!(" blind={}", f.payload_bits() as f64 / p as f64);
            }
        }
        if cfg.receivers.contains(&ReceiverKind::MrcOfdm) {
            if let Ok(o) = cfg.ofdm_config(p) {
                line += &format!(" mrc_ofdm={}", o.payload_bits() as f64 / p as f64);
            }
        }
        lines.push(line + " bits/sample");
    }
    lines
}

/// Runs the full sweep, handing every trial to `on_trial` in deterministic
/// order, and returns one point per `(P, SNR, receiver)`.
pub fn sweep_with<F>(cfg: &SimulationConfig, mut on_trial: F) -> Result<Vec<BerPoint>, SimError>
where
    F: FnMut(&TrialRecord) -> Result<(), SimError>,
{
    cfg.validate()?;
    let pool = pool(cfg.workers)?;
    let mut points = Vec::new();
    for &p in &cfg.seq_lens {
        let setup = TrialSetup::new(cfg, p)?;
        for &snr in &cfg.snr_db {
            let records = run_point(&pool, &setup, cfg, snr);
            for r in &records {
                on_trial(r)?;
            }
            for &kind in &cfg.receivers {
                points.push(report::aggregate(cfg, p, snr, kind, &records));
            }
        }
    }
    Ok(points)
}

pub fn sweep(cfg: &SimulationConfig) -> Result<Vec<BerPoint>, SimError> {
    sweep_with(cfg, |_| Ok(()))
}

/// Runs the sweep and writes the BER table to `cfg.out` (or `stdout` when
/// unset) and the trial dump to `cfg.dump_trials` when set.
pub fn sweep_to_files(cfg: &SimulationConfig, stdout: &mut dyn Write) -> Result<Vec<BerPoint>, SimError> {
    cfg.validate()?;
    let mut dump = match &cfg.dump_trials {
        Some(path) => {
            let f = File::create(path).map_err(SimError::io(path))?;
            Some((path, report::DumpWriter::new(BufWriter::new(f))?))
        }
        None => None,
    };
    let points = sweep_with(cfg, |r| {
        if let Some((_, w)) = dump.as_mut() {
            for row in report::dump_rows(r) {
                w.write(&row)?;
            }
        }
        Ok(())
    })?;
    if let Some((path, w)) = dump {
        w.finish()?.flush().map_err(SimError::io(path))?;
    }
    let meta = metadata(cfg);
    match &cfg.out {
        Some(path) => {
            let mut f = BufWriter::new(File::create(path).map_err(SimError::io(path))?);
            report::write_ber_csv(&mut f, &meta, &points)?;
            f.flush().map_err(SimError::io(path))?;
        }
        None => report::write_ber_csv(stdout, &meta, &points)?,
    }
    Ok(points)
}

/// Carry-forward mean of per-frame residual sequences: frames that stopped
/// early keep contributing their last value.
pub fn mean_trace<'a, I>(traces: I) -> (u64, Vec<f64>)
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let traces: Vec<&[f64]> = traces.into_iter().filter(|t| !t.is_empty()).collect();
    let longest = traces.iter().map(|t| t.len()).max().unwrap_or(0);
    let mean = (0..longest)
        .map(|k| {
            let sum: f64 = traces.iter().map(|t| t[k.min(t.len() - 1)]).sum();
            sum / traces.len() as f64
        })
        .collect();
    (traces.len() as u64, mean)
}

/// Per-iteration normalized reconstruction error of the blind estimate, one
/// trace per sequence length. The error is measured on the frequency-domain
/// block, which equals its time-domain counterpart under the unitary DFT.
pub fn residual_trace(cfg: &SimulationConfig, snr_db: f64) -> Result<Vec<ResidualTrace>, SimError> {
    cfg.validate()?;
    if !cfg.receivers.iter().any(|r| r.correction().is_some()) {
        return Err(ConfigError::Invalid("trace needs a blind receiver".into()).into());
    }
    let blind_only = SimulationConfig {
        receivers: vec![ReceiverKind::BlindPilot],
        ..cfg.clone()
    };
    let pool = pool(cfg.workers)?;
    let mut out = Vec::new();
    for &p in &cfg.seq_lens {
        let setup = TrialSetup::new(&blind_only, p)?;
        let records = run_point(&pool, &setup, &blind_only, snr_db);
        let (frames, mean_error) = mean_trace(records.iter().map(|r| r.residuals.as_slice()));
        out.push(ResidualTrace {
            seq_len: p,
            snr_db,
            frames,
            mean_error,
        });
    }
    Ok(out)
}

/// Mean wall time of one alternating-minimization iteration at length `p`,
/// single-threaded. Runs of two different lengths are differenced so the
/// one-off initialization cost drops out.
pub fn mean_iteration_time(
    cfg: &SimulationConfig,
    p: usize,
    snr_db: f64,
    frames: usize,
) -> Result<Duration, SimError> {
    let setup = TrialSetup::new(cfg, p)?;
    let (short, long) = (2usize, 12usize);
    let run = |iters: usize, yf: &crate::linalg::CMatrix| -> Duration {
        let bc = blind::BlindConfig {
            max_iter: iters,
            tolerance: f64::MIN_POSITIVE,
            ..setup.blind.clone()
        };
        let t = Instant::now();
        let est = blind::alternating_minimization(yf.view(), &bc);
        let dt = t.elapsed();
        std::hint::black_box(est.ok());
        dt
    };
    let mut diff = Duration::ZERO;
    for t in 0..frames.max(1) as u64 {
        let (_, yf) = trial::single_carrier_block(&setup, snr_db, cfg.trial_offset + t);
        // Warm the allocator and caches before measuring.
        run(short, &yf);
        let a = run(short, &yf);
        let b = run(long, &yf);
        diff += b.saturating_sub(a);
    }
    Ok(diff / ((long - short) * frames.max(1)) as u32)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> SimulationConfig {
        SimulationConfig {
            seq_lens: vec![64],
            taps: 3,
            taps_est: 3,
            antennas: 8,
            order: 16,
            snr_db: vec![10.0, 20.0],
            frames: 6,
            max_iter: 20,
            workers: 2,
            ..SimulationConfig::default()
        }
    }

    #[test]
    fn one_row_per_point() {
        let cfg = SimulationConfig {
            snr_db: vec![10.0],
            frames: 1,
            receivers: vec![ReceiverKind::BlindQq],
            ..tiny()
        };
        let pts = sweep(&cfg).unwrap();
        assert_eq!(pts.len(), 1);
        assert_eq!(pts[0].frames, 1);
    }

    #[test]
    fn rows_follow_config_order() {
        let pts = sweep(&tiny()).unwrap();
        let keys: Vec<(f64, ReceiverKind)> = pts.iter().map(|p| (p.snr_db, p.receiver)).collect();
        let want: Vec<_> = [10.0, 20.0]
            .iter()
            .flat_map(|&s| ReceiverKind::ALL.iter().map(move |&r| (s, r)))
            .collect();
        assert_eq!(keys, want);
        for p in &pts {
            assert_eq!(p.ber(), p.bit_errors as f64 / p.bits_total as f64);
        }
    }

    #[test]
    fn mean_trace_carries_forward() {
        let a = [0.5, 0.1];
        let b = [0.3];
        let (n, m) = mean_trace([&a[..], &b[..], &[][..]]);
        assert_eq!(n, 2);
        assert_eq!(m, vec![0.4, 0.2]);
    }

    #[test]
    fn trace_ends_at_reported_residual() {
        let cfg = tiny();
        let traces = residual_trace(&cfg, 10.0).unwrap();
        let pts = sweep(&SimulationConfig {
            snr_db: vec![10.0],
            receivers: vec![ReceiverKind::BlindPilot],
            ..cfg
        })
        .unwrap();
        let last = *traces[0].mean_error.last().unwrap();
        assert!((last - pts[0].mean_final_residual).abs() < 1e-12);
        assert!(traces[0].mean_error.iter().all(|e| e.is_finite() && *e >= 0.0));
    }

    #[test]
    fn trace_requires_blind_receiver() {
        let cfg = SimulationConfig {
            receivers: vec![ReceiverKind::MrcOfdm],
            ..tiny()
        };
        assert!(matches!(residual_trace(&cfg, 5.0), Err(SimError::Config(_))));
    }

    #[test]
    fn metadata_lists_efficiency() {
        let meta = metadata(&tiny());
        let line = meta.iter().find(|l| l.starts_with("spectral-efficiency")).unwrap();
        // 64-sample frame, 3 taps: 60 symbols less the pilot, 4 bits each.
        assert!(line.contains(&format!("blind={}", 59.0 * 4.0 / 64.0)), "{line}");
        // 7 pilots leave 57 data bins.
        assert!(line.contains(&format!("mrc_ofdm={}", 57.0 * 4.0 / 64.0)), "{line}");
    }
}
