//! Versioned text format for photon streams.
//!
//! ```text
//! atomtrace-stream 1
//! {"duration_ns":524000000,"event_count":3,"config":{…},"truth":[…]}
//! 1032 n
//! 88211 17
//! 90004 u
//! ```
//!
//! Line 1 is the magic word and format version. Line 2 is a single-line JSON
//! header: duration, declared event count, the simulation config echo and the
//! per-atom truth record (`null` when absent, e.g. for measured data). Each
//! following line is one event: timestamp in integer nanoseconds and its
//! origin (`n` noise, `u` unlabeled, or the atom id).

use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use thiserror::Error;

use crate::sim::{AtomTruth, EventStream, Origin, PhotonEvent, SimError, SimulationConfig, StreamMetadata};

pub const MAGIC: &str = "atomtrace-stream";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum StreamFileError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a stream file (missing `{MAGIC}` header)")]
    BadMagic,
    #[error("unsupported stream format version {found} (expected {FORMAT_VERSION})")]
    Version { found: String },
    #[error("malformed header: {0}")]
    Header(#[from] serde_json::Error),
    #[error("truncated body: header declares {expected} events, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("body has more events than the {expected} declared")]
    TrailingData { expected: usize },
    #[error("line {line}: timestamp {timestamp_ns} is earlier than the previous event")]
    Unsorted { line: usize, timestamp_ns: u64 },
    #[error("line {line}: {reason}")]
    BadRecord { line: usize, reason: String },
    #[error(transparent)]
    Invalid(#[from] SimError),
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    duration_ns: u64,
    event_count: usize,
    config: Option<SimulationConfig>,
    truth: Option<Vec<AtomTruth>>,
}

fn origin_code(o: Origin) -> String {
    match o {
        Origin::Noise => "n".into(),
        Origin::Unlabeled => "u".into(),
        Origin::Atom(id) => id.to_string(),
    }
}

fn parse_origin(s: &str) -> Option<Origin> {
    match s {
        "n" => Some(Origin::Noise),
        "u" => Some(Origin::Unlabeled),
        _ => s.parse().ok().map(Origin::Atom),
    }
}

pub fn write_stream_to<W: Write>(stream: &EventStream, out: W) -> Result<(), StreamFileError> {
    let mut out = BufWriter::new(out);
    writeln!(out, "{MAGIC} {FORMAT_VERSION}")?;
    let header = Header {
        duration_ns: stream.duration_ns(),
        event_count: stream.len(),
        config: stream.metadata().config.clone(),
        truth: stream.metadata().truth.clone(),
    };
    serde_json::to_writer(&mut out, &header)?;
    writeln!(out)?;
    for e in stream.events() {
        writeln!(out, "{} {}", e.timestamp_ns, origin_code(e.origin))?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_stream_from<R: BufRead>(input: R) -> Result<EventStream, StreamFileError> {
    let mut lines = input.lines();
    let first = lines.next().transpose()?.ok_or(StreamFileError::BadMagic)?;
    let mut parts = first.split_whitespace();
    if parts.next() != Some(MAGIC) {
        return Err(StreamFileError::BadMagic);
    }
    let version = parts.next().unwrap_or("");
    if version != FORMAT_VERSION.to_string() {
        return Err(StreamFileError::Version { found: version.to_string() });
    }
    let header_line = lines.next().transpose()?.ok_or(StreamFileError::Truncated { expected: 0, found: 0 })?;
    let header: Header = serde_json::from_str(&header_line)?;

    let mut events = Vec::with_capacity(header.event_count);
    let mut last = 0u64;
    for (i, line) in lines.enumerate() {
        let line = line?;
        let lineno = i + 3;
        if line.trim().is_empty() {
            continue;
        }
        if events.len() == header.event_count {
            return Err(StreamFileError::TrailingData { expected: header.event_count });
        }
        let mut f = line.split_whitespace();
        let (Some(ts), Some(org), None) = (f.next(), f.next(), f.next()) else {
            return Err(StreamFileError::BadRecord {
                line: lineno,
                reason: "expected `<timestamp_ns> <origin>`".into(),
            });
        };
        let timestamp_ns: u64 = ts
            .parse()
            .map_err(|_| StreamFileError::BadRecord { line: lineno, reason: format!("bad timestamp `{ts}`") })?;
        let origin = parse_origin(org)
            .ok_or_else(|| StreamFileError::BadRecord { line: lineno, reason: format!("bad origin `{org}`") })?;
        if timestamp_ns < last {
            return Err(StreamFileError::Unsorted { line: lineno, timestamp_ns });
        }
        last = timestamp_ns;
        events.push(PhotonEvent { timestamp_ns, origin });
    }
    if events.len() != header.event_count {
        return Err(StreamFileError::Truncated { expected: header.event_count, found: events.len() });
    }
    Ok(EventStream::new(events, header.duration_ns, StreamMetadata { config: header.config, truth: header.truth })?)
}

pub fn write_stream(stream: &EventStream, path: impl AsRef<Path>) -> Result<(), StreamFileError> {
    write_stream_to(stream, File::create(path)?)
}

pub fn read_stream(path: impl AsRef<Path>) -> Result<EventStream, StreamFileError> {
    read_stream_from(BufReader::new(File::open(path)?))
}

/// Reads a bare list of timestamps in seconds, one per line (`#` comments
/// allowed), as an unlabeled stream. The duration defaults to the last event.
pub fn read_timestamps_text<R: BufRead>(input: R, duration: Option<f64>) -> Result<EventStream, StreamFileError> {
    let mut ts = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let s = line.trim();
        if s.is_empty() || s.starts_with('#') {
            continue;
        }
        let t: f64 =
            s.parse().map_err(|_| StreamFileError::BadRecord { line: i + 1, reason: format!("bad time `{s}`") })?;
        ts.push(crate::units::secs_to_ns(t));
    }
    let end = duration.map(crate::units::secs_to_ns).unwrap_or_else(|| ts.iter().copied().max().unwrap_or(0));
    Ok(EventStream::from_timestamps(ts, end)?)
}
