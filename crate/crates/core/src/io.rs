//! Text formats: transmission traces, mode spectra and tuning curves as CSV.
//!
//! Every file starts with a `# wgm-<kind> v1` line. Traces carry their
//! metadata as further `# key=value` lines before the column header. Numbers
//! are written in the shortest form that parses back to the same value, so a
//! write/parse cycle is bit-exact.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::error::WgmError;
use crate::mode::{ModeId, ModeLine, Polarization};
use crate::scalar::Real;
use crate::spectroscopy::{TraceMetadata, TransmissionTrace};
use crate::tuning::TuningPoint;

pub const TRACE_MAGIC: &str = "# wgm-trace v1";
pub const SPECTRUM_MAGIC: &str = "# wgm-spectrum v1";
pub const TUNING_MAGIC: &str = "# wgm-tuning v1";

pub const TRACE_COLUMNS: [&str; 2] = ["frequency_THz", "transmission"];
pub const SPECTRUM_COLUMNS: [&str; 7] = ["q", "l", "m", "pol", "frequency_THz", "Q", "depth"];
pub const TUNING_COLUMNS: [&str; 3] = ["voltage_V", "shift_TE_GHz", "shift_TM_GHz"];

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Model(#[from] WgmError),
}

fn syntax(line: usize, reason: impl Into<String>) -> FormatError {
    FormatError::Syntax { line, reason: reason.into() }
}

/// Splits off the leading `#` lines; returns them (without `#`, trimmed) and
/// the line number at which the table starts.
fn split_preamble(text: &str, magic: &str) -> Result<(Vec<(usize, String)>, usize), FormatError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, first)) if first.trim() == magic => {}
        Some((_, first)) => {
            return Err(syntax(1, format!("expected `{magic}`, found `{}`", first.trim())));
        }
        None => return Err(syntax(1, "empty input")),
    }
    let mut comments = Vec::new();
    let mut start = text.lines().count();
    for (i, line) in lines {
        let t = line.trim();
        if let Some(rest) = t.strip_prefix('#') {
            comments.push((i + 1, rest.trim().to_string()));
        } else if t.is_empty() {
            continue;
        } else {
            start = i;
            break;
        }
    }
    Ok((comments, start))
}

/// Reads the table that follows the preamble, checking the header row.
fn read_table(text: &str, start: usize, columns: &[&str]) -> Result<Vec<(usize, csv::StringRecord)>, FormatError> {
    let body: String = text.lines().skip(start).flat_map(|l| [l, "\n"]).collect();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(body.as_bytes());
    let header = rdr.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != columns {
        return Err(syntax(
            start + 1,
            format!("expected columns `{}`, found `{}`", columns.join(","), header.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize) + start;
        rows.push((line, rec));
    }
    Ok(rows)
}

fn field<V: std::str::FromStr>(rec: &csv::StringRecord, i: usize, line: usize, name: &str) -> Result<V, FormatError> {
    let raw = rec.get(i).ok_or_else(|| syntax(line, format!("missing column {name}")))?;
    raw.parse()
        .map_err(|_| syntax(line, format!("cannot parse {name} from `{raw}`")))
}

fn writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new())
}

fn finish(preamble: String, w: csv::Writer<Vec<u8>>) -> String {
    let body = w.into_inner().map(String::from_utf8);
    match body {
        Ok(Ok(b)) => preamble + &b,
        // writing to a Vec cannot fail and all fields are UTF-8
        _ => unreachable!("in-memory CSV writer failed"),
    }
}

/// Trace as `# wgm-trace v1` CSV.
pub fn write_trace<T: Real>(trace: &TransmissionTrace<T>) -> String {
    let m = &trace.metadata;
    let mut pre = format!("{TRACE_MAGIC}\n# voltage={}\n# delta_t={}\n# seed={}\n", m.voltage, m.delta_t, m.seed);
    for (k, v) in &m.extra {
        pre.push_str(&format!("# {k}={v}\n"));
    }
    let mut w = writer();
    w.write_record(TRACE_COLUMNS).expect("in-memory write");
    for (f, t) in trace.frequencies.iter().zip(&trace.transmission) {
        w.write_record([f.to_string(), t.to_string()]).expect("in-memory write");
    }
    finish(pre, w)
}

/// Parses a `# wgm-trace v1` CSV. Unknown metadata keys go to `extra`; a
/// missing voltage, temperature or seed defaults to zero.
pub fn parse_trace<T: Real>(text: &str) -> Result<TransmissionTrace<T>, FormatError> {
    let (comments, start) = split_preamble(text, TRACE_MAGIC)?;
    let mut meta = TraceMetadata { voltage: T::zero(), delta_t: T::zero(), seed: 0, extra: BTreeMap::new() };
    for (line, c) in comments {
        let Some((k, v)) = c.split_once('=') else {
            continue;
        };
        let (k, v) = (k.trim(), v.trim());
        let bad = |what: &str| syntax(line, format!("cannot parse {what} from `{v}`"));
        match k {
            "voltage" => meta.voltage = v.parse().map_err(|_| bad("voltage"))?,
            "delta_t" => meta.delta_t = v.parse().map_err(|_| bad("delta_t"))?,
            "seed" => meta.seed = v.parse().map_err(|_| bad("seed"))?,
            _ => {
                meta.extra.insert(k.to_string(), v.to_string());
            }
        }
    }
    let rows = read_table(text, start, &TRACE_COLUMNS)?;
    let mut frequencies = Vec::with_capacity(rows.len());
    let mut transmission = Vec::with_capacity(rows.len());
    for (line, rec) in &rows {
        frequencies.push(field::<T>(rec, 0, *line, "frequency_THz")?);
        transmission.push(field::<T>(rec, 1, *line, "transmission")?);
    }
    let trace = TransmissionTrace { frequencies, transmission, metadata: meta };
    trace.validate()?;
    Ok(trace)
}

/// Mode lines as `# wgm-spectrum v1` CSV.
pub fn write_spectrum<T: Real>(lines: &[ModeLine<T>]) -> String {
    let mut w = writer();
    w.write_record(SPECTRUM_COLUMNS).expect("in-memory write");
    for line in lines {
        let id = line.mode;
        w.write_record([
            id.q.to_string(),
            id.l.to_string(),
            id.m.to_string(),
            id.pol.to_string(),
            line.frequency.to_string(),
            line.loaded_q.to_string(),
            line.depth.to_string(),
        ])
        .expect("in-memory write");
    }
    finish(format!("{SPECTRUM_MAGIC}\n"), w)
}

pub fn parse_spectrum<T: Real>(text: &str) -> Result<Vec<ModeLine<T>>, FormatError> {
    let (_, start) = split_preamble(text, SPECTRUM_MAGIC)?;
    read_table(text, start, &SPECTRUM_COLUMNS)?
        .iter()
        .map(|(line, rec)| {
            let mode = ModeId {
                q: field(rec, 0, *line, "q")?,
                l: field(rec, 1, *line, "l")?,
                m: field(rec, 2, *line, "m")?,
                pol: field::<Polarization>(rec, 3, *line, "pol")?,
            };
            let out = ModeLine {
                mode,
                frequency: field(rec, 4, *line, "frequency_THz")?,
                loaded_q: field(rec, 5, *line, "Q")?,
                depth: field(rec, 6, *line, "depth")?,
            };
            out.validate().map_err(|e| syntax(*line, e.to_string()))?;
            Ok(out)
        })
        .collect()
}

/// Tuning curve as `# wgm-tuning v1` CSV (V, GHz, GHz).
pub fn write_tuning_curve<T: Real>(points: &[TuningPoint<T>]) -> String {
    let mut w = writer();
    w.write_record(TUNING_COLUMNS).expect("in-memory write");
    for p in points {
        w.write_record([p.voltage.to_string(), p.shift_te.to_string(), p.shift_tm.to_string()])
            .expect("in-memory write");
    }
    finish(format!("{TUNING_MAGIC}\n"), w)
}

pub fn parse_tuning_curve<T: Real>(text: &str) -> Result<Vec<TuningPoint<T>>, FormatError> {
    let (_, start) = split_preamble(text, TUNING_MAGIC)?;
    read_table(text, start, &TUNING_COLUMNS)?
        .iter()
        .map(|(line, rec)| {
            Ok(TuningPoint {
                voltage: field(rec, 0, *line, "voltage_V")?,
                shift_te: field(rec, 1, *line, "shift_TE_GHz")?,
                shift_tm: field(rec, 2, *line, "shift_TM_GHz")?,
            })
        })
        .collect()
}
