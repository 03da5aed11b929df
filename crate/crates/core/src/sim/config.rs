//! Experiment configuration: defaults, presets, the flat `key = value` file
//! format and the list syntaxes shared with the command line.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use thiserror::Error;

use crate::blind::{BlindConfig, Correction};
use crate::channel::PowerDelayProfile;
use crate::constellation::Constellation;
use crate::frame::FrameConfig;
use crate::ofdm::OfdmPilotConfig;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: key `{key}` given twice")]
    Duplicate { line: usize, key: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("invalid value for `{key}`: {reason}")]
    Value { key: String, reason: String },
    #[error("unknown receiver `{0}` (expected blind_pilot, blind_ca, blind_qq or mrc_ofdm)")]
    UnknownReceiver(String),
    #[error("unknown preset `{0}` (expected fig5 or fig7)")]
    UnknownPreset(String),
    #[error("{0}")]
    Invalid(String),
}

fn value_err(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Value {
        key: key.to_string(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ReceiverKind {
    BlindPilot,
    BlindCa,
    BlindQq,
    MrcOfdm,
}

impl ReceiverKind {
    pub const ALL: [ReceiverKind; 4] = [
        ReceiverKind::BlindPilot,
        ReceiverKind::BlindCa,
        ReceiverKind::BlindQq,
        ReceiverKind::MrcOfdm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ReceiverKind::BlindPilot => "blind_pilot",
            ReceiverKind::BlindCa => "blind_ca",
            ReceiverKind::BlindQq => "blind_qq",
            ReceiverKind::MrcOfdm => "mrc_ofdm",
        }
    }

    /// Scale correction for the blind variants, `None` for the OFDM baseline.
    pub fn correction(self) -> Option<Correction> {
        match self {
            ReceiverKind::BlindPilot => Some(Correction::Pilot),
            ReceiverKind::BlindCa => Some(Correction::CentroidAdjust),
            ReceiverKind::BlindQq => Some(Correction::PilotQq),
            ReceiverKind::MrcOfdm => None,
        }
    }
}

impl fmt::Display for ReceiverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ReceiverKind {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ReceiverKind::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| ConfigError::UnknownReceiver(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// BER against SNR: `P = 1024`, `Nr = 64`, `L = 9`, 64-QAM.
    Fig5,
    /// Residual decay against `P ∈ {256, 512, 1024}`: `Nr = 64`, `L = 5`.
    Fig7,
}

impl FromStr for Preset {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fig5" => Ok(Preset::Fig5),
            "fig7" => Ok(Preset::Fig7),
            _ => Err(ConfigError::UnknownPreset(s.to_string())),
        }
    }
}

/// Parses `a,b,c` or an inclusive range `start:step:stop`.
pub fn parse_snr_list(s: &str) -> Result<Vec<f64>, ConfigError> {
    let s = s.trim();
    let parse = |t: &str| -> Result<f64, ConfigError> {
        let v: f64 = t
            .trim()
            .parse()
            .map_err(|_| value_err("snr", format!("`{}` is not a number", t.trim())))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(value_err("snr", "values must be finite"))
        }
    };
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(value_err("snr", "range must be start:step:stop"));
        }
        let (start, step, stop) = (parse(parts[0])?, parse(parts[1])?, parse(parts[2])?);
        if !(step > 0.0) {
            return Err(value_err("snr", "range step must be positive"));
        }
        if stop < start {
            return Err(value_err("snr", "range stop is below start"));
        }
        let count = ((stop - start) / step + 1e-9).floor();
        if count >= 10_000.0 {
            return Err(value_err("snr", "range has too many points"));
        }
        // Computed from the index rather than accumulated to avoid drift.
        return Ok((0..=count as usize).map(|k| start + k as f64 * step).collect());
    }
    let out = s.split(',').map(parse).collect::<Result<Vec<_>, _>>()?;
    if out.is_empty() {
        return Err(value_err("snr", "empty list"));
    }
    Ok(out)
}

/// Parses a comma-separated receiver list, keeping first occurrences only.
pub fn parse_receivers(s: &str) -> Result<Vec<ReceiverKind>, ConfigError> {
    let mut out = Vec::new();
    for name in s.split(',') {
        let r: ReceiverKind = name.trim().parse()?;
        if !out.contains(&r) {
            out.push(r);
        }
    }
    Ok(out)
}

/// Parses a comma-separated list of sequence lengths.
pub fn parse_len_list(s: &str) -> Result<Vec<usize>, ConfigError> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| value_err("seq-len", format!("`{}` is not a length", t.trim())))
        })
        .collect()
}

/// Reads the flat `key = value` format. `#` starts a comment; blank lines are
/// skipped; underscores in keys are accepted in place of hyphens.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut pairs: Vec<(String, String)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or(ConfigError::Syntax { line: i + 1 })?;
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        if key.is_empty() || value.is_empty() {
            return Err(ConfigError::Syntax { line: i + 1 });
        }
        if !KEYS.contains(&key.as_str()) {
            return Err(ConfigError::UnknownKey(key));
        }
        if pairs.iter().any(|(k, _)| *k == key) {
            return Err(ConfigError::Duplicate { line: i + 1, key });
        }
        pairs.push((key, value.to_string()));
    }
    Ok(pairs)
}

/// Every key accepted by [`SimulationConfig::set`] and the config file.
pub const KEYS: &[&str] = &[
    "preset",
    "seq-len",
    "snr",
    "frames",
    "nr",
    "taps",
    "taps-est",
    "mod-order",
    "receivers",
    "mu",
    "eps",
    "max-iter",
    "seed",
    "workers",
    "out",
    "dump-trials",
    "pdp-ratio",
    "pilot-fraction",
    "trial-offset",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    /// Frame lengths `P`; every sweep and trace runs once per entry.
    pub seq_lens: Vec<usize>,
    /// True channel length.
    pub taps: usize,
    /// Channel length assumed by both receivers.
    pub taps_est: usize,
    pub antennas: usize,
    pub order: usize,
    pub snr_db: Vec<f64>,
    pub frames: usize,
    pub seed: u64,
    /// Index of the first trial; lets a run be split across invocations.
    pub trial_offset: u64,
    pub receivers: Vec<ReceiverKind>,
    pub mu: f64,
    pub tolerance: f64,
    pub max_iter: usize,
    /// Successive tap power ratio of the geometric delay profile.
    pub pdp_ratio: f64,
    pub pilot_fraction: f64,
    /// Worker threads; 0 uses every core. Never affects results.
    pub workers: usize,
    pub out: Option<PathBuf>,
    pub dump_trials: Option<PathBuf>,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            seq_lens: vec![1024],
            taps: 9,
            taps_est: 9,
            antennas: 64,
            order: 64,
            snr_db: vec![7.0],
            frames: 100,
            seed: 1,
            trial_offset: 0,
            receivers: ReceiverKind::ALL.to_vec(),
            mu: 0.5,
            tolerance: 1e-4,
            max_iter: 100,
            pdp_ratio: 0.5,
            pilot_fraction: 0.1,
            workers: 0,
            out: None,
            dump_trials: None,
        }
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value
        .trim()
        .parse()
        .map_err(|_| value_err(key, format!("cannot parse `{value}`")))
}

impl SimulationConfig {
    pub fn preset(preset: Preset) -> Self {
        let base = Self::default();
        match preset {
            Preset::Fig5 => Self {
                snr_db: (0..=10).map(|k| 2.0 * k as f64).collect(),
                ..base
            },
            Preset::Fig7 => Self {
                seq_lens: vec![256, 512, 1024],
                taps: 5,
                taps_est: 5,
                receivers: vec![ReceiverKind::BlindQq],
                ..base
            },
        }
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let key = key.replace('_', "-");
        match key.as_str() {
            "preset" => {
                return Err(ConfigError::Invalid(
                    "preset must be applied before other keys".into(),
                ))
            }
            "seq-len" => self.seq_lens = parse_len_list(value)?,
            "snr" => self.snr_db = parse_snr_list(value)?,
            "frames" => self.frames = parse_num(&key, value)?,
            "nr" => self.antennas = parse_num(&key, value)?,
            "taps" => self.taps = parse_num(&key, value)?,
            "taps-est" => self.taps_est = parse_num(&key, value)?,
            "mod-order" => self.order = parse_num(&key, value)?,
            "receivers" => self.receivers = parse_receivers(value)?,
            "mu" => self.mu = parse_num(&key, value)?,
            "eps" => self.tolerance = parse_num(&key, value)?,
            "max-iter" => self.max_iter = parse_num(&key, value)?,
            "seed" => self.seed = parse_num(&key, value)?,
            "workers" => self.workers = parse_num(&key, value)?,
            "out" => self.out = Some(PathBuf::from(value.trim())),
            "dump-trials" => self.dump_trials = Some(PathBuf::from(value.trim())),
            "pdp-ratio" => self.pdp_ratio = parse_num(&key, value)?,
            "pilot-fraction" => self.pilot_fraction = parse_num(&key, value)?,
            "trial-offset" => self.trial_offset = parse_num(&key, value)?,
            _ => return Err(ConfigError::UnknownKey(key)),
        }
        Ok(())
    }

    /// Layers defaults, the preset, file settings and command-line settings,
    /// in that order of increasing precedence. A `preset` on the command line
    /// wins over one in the file.
    pub fn resolve(
        file: &[(String, String)],
        cli: &[(String, String)],
    ) -> Result<Self, ConfigError> {
        let is_preset = |k: &String| k.replace('_', "-") == "preset";
        let preset = cli.iter().chain(file).find(|(k, _)| is_preset(k)).map(|(_, v)| v);
        let mut cfg = match preset {
            Some(p) => Self::preset(p.trim().parse()?),
            None => Self::default(),
        };
        for (k, v) in file.iter().chain(cli).filter(|(k, _)| !is_preset(k)) {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |msg: String| Err(ConfigError::Invalid(msg));
        if self.frames == 0 {
            return bad("frames must be at least 1".into());
        }
        if self.seq_lens.is_empty() || self.snr_db.is_empty() || self.receivers.is_empty() {
            return bad("seq-len, snr and receivers must be non-empty".into());
        }
        if self.antennas == 0 {
            return bad("nr must be at least 1".into());
        }
        if self.taps == 0 || self.taps_est == 0 {
            return bad("taps and taps-est must be at least 1".into());
        }
        if self.trial_offset.checked_add(self.frames as u64).is_none() {
            return bad("trial-offset + frames overflows".into());
        }
        Constellation::new(self.order).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        PowerDelayProfile::geometric(self.taps, self.pdp_ratio)
            .map_err(|e| ConfigError::Invalid(format!("pdp-ratio: {e}")))?;
        let mut blind = self.blind_config(Correction::Pilot);
        blind.taps = self.taps_est;
        blind.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        for &p in &self.seq_lens {
            if !p.is_power_of_two() {
                return bad(format!("sequence length {p} is not a power of two"));
            }
            if self.taps > p {
                return bad(format!("channel longer than the frame at P = {p}"));
            }
            self.frame_config(p)
                .map_err(|e| ConfigError::Invalid(e.to_string()))?;
            if p <= 2 * self.taps_est {
                return bad(format!("P = {p} too short for {} estimated taps", self.taps_est));
            }
            if self.receivers.contains(&ReceiverKind::MrcOfdm) {
                self.ofdm_config(p)
                    .map_err(|e| ConfigError::Invalid(e.to_string()))?;
            }
        }
        Ok(())
    }

    /// Frame layout at length `p`; the zero guards follow the assumed tap
    /// count, which is all the receiver knows.
    pub fn frame_config(&self, p: usize) -> Result<FrameConfig, crate::frame::FrameError> {
        FrameConfig::new(p, self.taps_est, self.order)
    }

    pub fn ofdm_config(&self, p: usize) -> Result<OfdmPilotConfig, crate::ofdm::OfdmError> {
        OfdmPilotConfig::new(p, self.order, self.pilot_fraction, self.taps_est)
    }

    pub fn blind_config(&self, correction: Correction) -> BlindConfig {
        BlindConfig {
            mu: self.mu,
            tolerance: self.tolerance,
            max_iter: self.max_iter,
            correction,
            ..BlindConfig::new(self.taps_est)
        }
    }

    pub fn pdp(&self) -> PowerDelayProfile {
        PowerDelayProfile::geometric(self.taps, self.pdp_ratio).expect("validated ratio")
    }

    /// The settings that determine results, as `key = value` lines. Paths and
    /// the worker count are left out so output does not depend on them.
    pub fn echo(&self) -> Vec<(String, String)> {
        let join = |v: Vec<String>| v.join(",");
        vec![
            ("seq-len".into(), join(self.seq_lens.iter().map(|p| p.to_string()).collect())),
            ("snr".into(), join(self.snr_db.iter().map(|s| s.to_string()).collect())),
            ("frames".into(), self.frames.to_string()),
            ("nr".into(), self.antennas.to_string()),
            ("taps".into(), self.taps.to_string()),
            ("taps-est".into(), self.taps_est.to_string()),
            ("mod-order".into(), self.order.to_string()),
            ("receivers".into(), join(self.receivers.iter().map(|r| r.name().to_string()).collect())),
            ("mu".into(), self.mu.to_string()),
            ("eps".into(), self.tolerance.to_string()),
            ("max-iter".into(), self.max_iter.to_string()),
            ("seed".into(), self.seed.to_string()),
            ("pdp-ratio".into(), self.pdp_ratio.to_string()),
            ("pilot-fraction".into(), self.pilot_fraction.to_string()),
            ("trial-offset".into(), self.trial_offset.to_string()),
        ]
    }
}
