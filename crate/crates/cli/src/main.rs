use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use scfde_blind::sim::{self, config, report, ConfigError, SimError, SimulationConfig};

#[derive(Parser)]
#[command(name = "scfde-sim", version, args_override_self = true, about = "BER sweeps and residual traces for the blind SC-FDE receiver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// BER against SNR for each receiver; one CSV row per (P, SNR, receiver).
    Sweep(Options),
    /// Mean normalized reconstruction error after every iteration, per P.
    Trace(Options),
}

#[derive(Args)]
struct Options {
    /// Flat `key = value` file; command-line flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = ["fig5", "fig7"])]
    preset: Option<String>,
    /// SNR points in dB: `a,b,c` or `start:step:stop`.
    #[arg(long, allow_hyphen_values = true)]
    snr: Option<String>,
    #[arg(long)]
    frames: Option<String>,
    #[arg(long)]
    nr: Option<String>,
    #[arg(long)]
    taps: Option<String>,
    #[arg(long)]
    taps_est: Option<String>,
    #[arg(long)]
    mod_order: Option<String>,
    /// Comma-separated frame lengths (powers of two).
    #[arg(long)]
    seq_len: Option<String>,
    /// Any of blind_pilot, blind_ca, blind_qq, mrc_ofdm.
    #[arg(long)]
    receivers: Option<String>,
    #[arg(long)]
    mu: Option<String>,
    #[arg(long)]
    eps: Option<String>,
    #[arg(long)]
    max_iter: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Worker threads (0 = all cores). Does not change results.
    #[arg(long)]
    workers: Option<String>,
    /// Successive tap power ratio of the delay profile.
    #[arg(long)]
    pdp_ratio: Option<String>,
    #[arg(long)]
    pilot_fraction: Option<String>,
    /// Index of the first trial, for splitting a run.
    #[arg(long)]
    trial_offset: Option<String>,
    /// Output CSV (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-trial dump for re-aggregation (sweep only).
    #[arg(long)]
    dump_trials: Option<PathBuf>,
}

impl Options {
    fn pairs(&self) -> Vec<(String, String)> {
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        [
            ("preset", self.preset.clone()),
            ("snr", self.snr.clone()),
            ("frames", self.frames.clone()),
            ("nr", self.nr.clone()),
            ("taps", self.taps.clone()),
            ("taps-est", self.taps_est.clone()),
            ("mod-order", self.mod_order.clone()),
            ("seq-len", self.seq_len.clone()),
            ("receivers", self.receivers.clone()),
            ("mu", self.mu.clone()),
            ("eps", self.eps.clone()),
            ("max-iter", self.max_iter.clone()),
            ("seed", self.seed.clone()),
            ("workers", self.workers.clone()),
            ("pdp-ratio", self.pdp_ratio.clone()),
            ("pilot-fraction", self.pilot_fraction.clone()),
            ("trial-offset", self.trial_offset.clone()),
            ("out", path(&self.out)),
            ("dump-trials", path(&self.dump_trials)),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.map(|v| (k.to_string(), v)))
        .collect()
    }

    fn resolve(&self) -> Result<SimulationConfig, SimError> {
        let file = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|source| SimError::Io {
                    path: path.clone(),
                    source,
                })?;
                config::parse_config_text(&text)?
            }
            None => Vec::new(),
        };
        Ok(SimulationConfig::resolve(&file, &self.pairs())?)
    }
}

const EXIT_CONFIG: u8 = 2;
const EXIT_IO: u8 = 3;
const EXIT_ALL_FAILED: u8 = 4;

fn exit_code(e: &SimError) -> u8 {
    match e {
        SimError::Config(_) => EXIT_CONFIG,
        SimError::Io { .. } | SimError::Report(_) | SimError::Pool(_) => EXIT_IO,
    }
}

fn run(cli: Cli) -> Result<u8, SimError> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Sweep(opts) => {
            let cfg = opts.resolve()?;
            let points = sim::sweep_to_files(&cfg, &mut out)?;
            for p in points.iter().filter(|p| p.all_failed()) {
                eprintln!(
                    "every frame failed: {} at {} dB, P = {}",
                    p.receiver, p.snr_db, p.seq_len
                );
            }
            Ok(if points.iter().any(|p| p.all_failed()) {
                EXIT_ALL_FAILED
            } else {
                0
            })
        }
        Command::Trace(opts) => {
            if opts.dump_trials.is_some() {
                return Err(ConfigError::Invalid("--dump-trials applies to sweep only".into()).into());
            }
            let cfg = opts.resolve()?;
            let mut traces = Vec::new();
            for &snr in &cfg.snr_db {
                traces.extend(sim::residual_trace(&cfg, snr)?);
            }
            let meta = sim::metadata(&cfg);
            let io_err = |path: &PathBuf| {
                let path = path.clone();
                move |source| SimError::Io { path, source }
            };
            match &cfg.out {
                Some(path) => {
                    let f = fs::File::create(path).map_err(io_err(path))?;
                    let mut w = BufWriter::new(f);
                    report::write_trace_csv(&mut w, &meta, &traces)?;
                    w.flush().map_err(io_err(path))?;
                }
                None => report::write_trace_csv(&mut out, &meta, &traces)?,
            }
            Ok(if traces.iter().any(|t| t.frames == 0) {
                EXIT_ALL_FAILED
            } else {
                0
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("scfde-sim: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
