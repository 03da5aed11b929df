//! BER aggregation and the CSV formats: the per-point BER table, the raw
//! per-trial dump and the residual trace.

use std::io::{Read, Write};

use thiserror::Error;

use super::config::{ReceiverKind, SimulationConfig};
use super::trial::{Outcome, TrialRecord};

/// Header of the BER table. Bit-exact; readers reject anything else.
pub const BER_HEADER: &str = "snr_db,receiver,P,Nr,L,L_est,M,frames,frames_failed,bits_total,bit_errors,ber,mean_iterations,mean_final_residual";

pub const DUMP_HEADER: &str = "P,snr_db,trial,receiver,status,bits,bit_errors,iterations,final_residual,input_checksum,channel_checksum,noise_checksum,detail";

pub const TRACE_HEADER: &str = "P,snr_db,iteration,frames,mean_normalized_error";

#[derive(Debug, Error)]
pub enum ReportError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("unexpected header `{0}`")]
    Header(String),
    #[error("record {record}: {reason}")]
    Field { record: usize, reason: String },
    #[error("cannot merge points with different {0}")]
    Mismatch(&'static str),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BerPoint {
    pub snr_db: f64,
    pub receiver: ReceiverKind,
    pub seq_len: usize,
    pub antennas: usize,
    pub taps: usize,
    pub taps_est: usize,
    pub order: usize,
    pub frames: u64,
    pub frames_failed: u64,
    pub bits_total: u64,
    pub bit_errors: u64,
    /// Over decoded frames; NaN when every frame failed.
    pub mean_iterations: f64,
    pub mean_final_residual: f64,
}

impl BerPoint {
    /// `bit_errors / bits_total`, NaN when nothing was decoded.
    pub fn ber(&self) -> f64 {
        if self.bits_total == 0 {
            f64::NAN
        } else {
            self.bit_errors as f64 / self.bits_total as f64
        }
    }

    pub fn decoded(&self) -> u64 {
        self.frames - self.frames_failed
    }

    pub fn all_failed(&self) -> bool {
        self.frames_failed == self.frames
    }

    fn key_matches(&self, other: &BerPoint) -> Result<(), ReportError> {
        if self.receiver != other.receiver {
            return Err(ReportError::Mismatch("receiver"));
        }
        if self.snr_db.to_bits() != other.snr_db.to_bits() {
            return Err(ReportError::Mismatch("snr_db"));
        }
        if (self.seq_len, self.antennas, self.taps, self.taps_est, self.order)
            != (other.seq_len, other.antennas, other.taps, other.taps_est, other.order)
        {
            return Err(ReportError::Mismatch("system parameters"));
        }
        Ok(())
    }

    /// Combines two disjoint sets of frames for the same point. Counts add
    /// exactly; means are re-weighted by decoded frames.
    pub fn merge(&self, other: &BerPoint) -> Result<BerPoint, ReportError> {
        self.key_matches(other)?;
        let (na, nb) = (self.decoded() as f64, other.decoded() as f64);
        let weighted = |a: f64, b: f64| match (na > 0.0, nb > 0.0) {
            (true, true) => (a * na + b * nb) / (na + nb),
            (true, false) => a,
            (false, true) => b,
            (false, false) => f64::NAN,
        };
        Ok(BerPoint {
            frames: self.frames + other.frames,
            frames_failed: self.frames_failed + other.frames_failed,
            bits_total: self.bits_total + other.bits_total,
            bit_errors: self.bit_errors + other.bit_errors,
            mean_iterations: weighted(self.mean_iterations, other.mean_iterations),
            mean_final_residual: weighted(self.mean_final_residual, other.mean_final_residual),
            ..self.clone()
        })
    }
}

/// Merges two BER tables row by row; both must list the same points in the
/// same order.
pub fn merge_tables(a: &[BerPoint], b: &[BerPoint]) -> Result<Vec<BerPoint>, ReportError> {
    if a.len() != b.len() {
        return Err(ReportError::Mismatch("row count"));
    }
    a.iter().zip(b).map(|(x, y)| x.merge(y)).collect()
}

/// Sums one receiver's outcomes over `records`, in slice order.
pub fn aggregate(
    cfg: &SimulationConfig,
    seq_len: usize,
    snr_db: f64,
    receiver: ReceiverKind,
    records: &[TrialRecord],
) -> BerPoint {
    let mut point = BerPoint {
        snr_db,
        receiver,
        seq_len,
        antennas: cfg.antennas,
        taps: cfg.taps,
        taps_est: cfg.taps_est,
        order: cfg.order,
        frames: 0,
        frames_failed: 0,
        bits_total: 0,
        bit_errors: 0,
        mean_iterations: f64::NAN,
        mean_final_residual: f64::NAN,
    };
    let mut iterations = 0u64;
    let mut residual = 0.0;
    for o in records
        .iter()
        .flat_map(|r| r.outcomes.iter())
        .filter(|o| o.receiver == receiver)
    {
        point.frames += 1;
        match &o.outcome {
            Outcome::Failed { .. } => point.frames_failed += 1,
            Outcome::Decoded {
                bits,
                bit_errors,
                iterations: it,
                final_residual,
            } => {
                point.bits_total += bits;
                point.bit_errors += bit_errors;
                iterations += it;
                residual += final_residual;
            }
        }
    }
    let n = point.decoded();
    if n > 0 {
        point.mean_iterations = iterations as f64 / n as f64;
        point.mean_final_residual = residual / n as f64;
    }
    point
}

fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        v.to_string()
    }
}

fn parse_f64(s: &str) -> Option<f64> {
    if s == "nan" {
        Some(f64::NAN)
    } else {
        s.parse().ok()
    }
}

/// Writes the BER table: `# ` metadata lines, the header, one row per point.
pub fn write_ber_csv<W: Write>(
    mut out: W,
    metadata: &[String],
    points: &[BerPoint],
) -> Result<(), ReportError> {
    for line in metadata {
        writeln!(out, "# {line}")?;
    }
    writeln!(out, "{BER_HEADER}")?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    for p in points {
        w.write_record([
            fmt_f64(p.snr_db),
            p.receiver.name().to_string(),
            p.seq_len.to_string(),
            p.antennas.to_string(),
            p.taps.to_string(),
            p.taps_est.to_string(),
            p.order.to_string(),
            p.frames.to_string(),
            p.frames_failed.to_string(),
            p.bits_total.to_string(),
            p.bit_errors.to_string(),
            fmt_f64(p.ber()),
            fmt_f64(p.mean_iterations),
            fmt_f64(p.mean_final_residual),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .has_headers(true)
        .from_reader(input)
}

fn check_header<R: Read>(r: &mut csv::Reader<R>, want: &str) -> Result<(), ReportError> {
    let got = r.headers()?.iter().collect::<Vec<_>>().join(",");
    if got != want {
        return Err(ReportError::Header(got));
    }
    Ok(())
}

fn field<'a>(rec: &'a csv::StringRecord, i: usize, n: usize) -> Result<&'a str, ReportError> {
    rec.get(i).ok_or(ReportError::Field {
        record: n,
        reason: format!("missing column {i}"),
    })
}

fn parsed<T: std::str::FromStr>(
    rec: &csv::StringRecord,
    i: usize,
    n: usize,
) -> Result<T, ReportError> {
    let s = field(rec, i, n)?;
    s.parse().map_err(|_| ReportError::Field {
        record: n,
        reason: format!("cannot parse `{s}` in column {i}"),
    })
}

fn parsed_f64(rec: &csv::StringRecord, i: usize, n: usize) -> Result<f64, ReportError> {
    let s = field(rec, i, n)?;
    parse_f64(s).ok_or(ReportError::Field {
        record: n,
        reason: format!("cannot parse `{s}` in column {i}"),
    })
}

/// Reads a table written by [`write_ber_csv`]. The `ber` column is checked
/// against the counts.
pub fn read_ber_csv<R: Read>(input: R) -> Result<Vec<BerPoint>, ReportError> {
    let mut r = reader(input);
    check_header(&mut r, BER_HEADER)?;
    let mut out = Vec::new();
    for (n, rec) in r.records().enumerate() {
        let rec = rec?;
        let receiver: ReceiverKind = field(&rec, 1, n)?.parse().map_err(|e: super::ConfigError| {
            ReportError::Field {
                record: n,
                reason: e.to_string(),
            }
        })?;
        let p = BerPoint {
            snr_db: parsed_f64(&rec, 0, n)?,
            receiver,
            seq_len: parsed(&rec, 2, n)?,
            antennas: parsed(&rec, 3, n)?,
            taps: parsed(&rec, 4, n)?,
            taps_est: parsed(&rec, 5, n)?,
            order: parsed(&rec, 6, n)?,
            frames: parsed(&rec, 7, n)?,
            frames_failed: parsed(&rec, 8, n)?,
            bits_total: parsed(&rec, 9, n)?,
            bit_errors: parsed(&rec, 10, n)?,
            mean_iterations: parsed_f64(&rec, 12, n)?,
            mean_final_residual: parsed_f64(&rec, 13, n)?,
        };
        let ber = parsed_f64(&rec, 11, n)?;
        let consistent = p.frames_failed <= p.frames
            && p.bit_errors <= p.bits_total
            && (ber.to_bits() == p.ber().to_bits() || (ber.is_nan() && p.ber().is_nan()));
        if !consistent {
            return Err(ReportError::Field {
                record: n,
                reason: "counts are inconsistent".into(),
            });
        }
        out.push(p);
    }
    Ok(out)
}

/// One line of the per-trial dump.
#[derive(Debug, Clone, PartialEq)]
pub struct DumpRow {
    pub seq_len: usize,
    pub snr_db: f64,
    pub trial: u64,
    pub receiver: ReceiverKind,
    pub outcome: Outcome,
    pub input_checksum: u64,
    pub channel_checksum: u64,
    pub noise_checksum: u64,
}

pub fn dump_rows(record: &TrialRecord) -> impl Iterator<Item = DumpRow> + '_ {
    record.outcomes.iter().map(|o| DumpRow {
        seq_len: record.seq_len,
        snr_db: record.snr_db,
        trial: record.trial,
        receiver: o.receiver,
        outcome: o.outcome.clone(),
        input_checksum: o.input_checksum,
        channel_checksum: record.channel_checksum,
        noise_checksum: record.noise_checksum,
    })
}

pub struct DumpWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> DumpWriter<W> {
    pub fn new(mut out: W) -> Result<Self, ReportError> {
        writeln!(out, "{DUMP_HEADER}")?;
        Ok(Self {
            inner: csv::WriterBuilder::new().has_headers(false).from_writer(out),
        })
    }

    pub fn write(&mut self, row: &DumpRow) -> Result<(), ReportError> {
        let hex = |v: u64| format!("{v:016x}");
        let (status, bits, errors, iterations, residual, detail) = match &row.outcome {
            Outcome::Decoded {
                bits,
                bit_errors,
                iterations,
                final_residual,
            } => (
                "ok",
                bits.to_string(),
                bit_errors.to_string(),
                iterations.to_string(),
                fmt_f64(*final_residual),
                String::new(),
            ),
            Outcome::Failed { reason } => (
                "failed",
                "0".into(),
                "0".into(),
                "0".into(),
                "nan".into(),
                reason.clone(),
            ),
        };
        self.inner.write_record([
            row.seq_len.to_string(),
            fmt_f64(row.snr_db),
            row.trial.to_string(),
            row.receiver.name().to_string(),
            status.to_string(),
            bits,
            errors,
            iterations,
            residual,
            hex(row.input_checksum),
            hex(row.channel_checksum),
            hex(row.noise_checksum),
            detail,
        ])?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W, ReportError> {
        self.inner.flush()?;
        self.inner
            .into_inner()
            .map_err(|e| ReportError::Io(std::io::Error::other(e.to_string())))
    }
}

pub fn read_dump<R: Read>(input: R) -> Result<Vec<DumpRow>, ReportError> {
    let mut r = reader(input);
    check_header(&mut r, DUMP_HEADER)?;
    let mut out = Vec::new();
    for (n, rec) in r.records().enumerate() {
        let rec = rec?;
        let bad = |reason: String| ReportError::Field { record: n, reason };
        let hex = |i: usize| -> Result<u64, ReportError> {
            let s = field(&rec, i, n)?;
            u64::from_str_radix(s, 16).map_err(|_| bad(format!("bad checksum `{s}`")))
        };
        let receiver: ReceiverKind = field(&rec, 3, n)?
            .parse()
            .map_err(|e: super::ConfigError| bad(e.to_string()))?;
        let outcome = match field(&rec, 4, n)? {
            "ok" => Outcome::Decoded {
                bits: parsed(&rec, 5, n)?,
                bit_errors: parsed(&rec, 6, n)?,
                iterations: parsed(&rec, 7, n)?,
                final_residual: parsed_f64(&rec, 8, n)?,
            },
            "failed" => Outcome::Failed {
                reason: field(&rec, 12, n)?.to_string(),
            },
            s => return Err(bad(format!("unknown status `{s}`"))),
        };
        out.push(DumpRow {
            seq_len: parsed(&rec, 0, n)?,
            snr_db: parsed_f64(&rec, 1, n)?,
            trial: parsed(&rec, 2, n)?,
            receiver,
            outcome,
            input_checksum: hex(9)?,
            channel_checksum: hex(10)?,
            noise_checksum: hex(11)?,
        });
    }
    Ok(out)
}

/// Mean normalized reconstruction error after each iteration, for one `P`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualTrace {
    pub seq_len: usize,
    pub snr_db: f64,
    /// Frames whose estimate succeeded and entered the mean.
    pub frames: u64,
    /// Entry `k` is the mean after iteration `k + 1`. Frames that stopped
    /// earlier contribute their last value.
    pub mean_error: Vec<f64>,
}

pub fn write_trace_csv<W: Write>(
    mut out: W,
    metadata: &[String],
    traces: &[ResidualTrace],
) -> Result<(), ReportError> {
    for line in metadata {
        writeln!(out, "# {line}")?;
    }
    writeln!(out, "{TRACE_HEADER}")?;
    for t in traces {
        for (k, e) in t.mean_error.iter().enumerate() {
            writeln!(
                out,
                "{},{},{},{},{}",
                t.seq_len,
                fmt_f64(t.snr_db),
                k + 1,
                t.frames,
                fmt_f64(*e)
            )?;
        }
    }
    Ok(())
}
