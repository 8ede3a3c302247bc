//! CSV traces with the header `cycle,src,dst,message`.

use std::collections::BTreeSet;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{read_file, write_file, IoError, Result};

pub const TRACE_HEADER: [&str; 4] = ["cycle", "src", "dst", "message"];

/// One traced message: the cycle it occurred in, the IP pair it travelled
/// between, and its name.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TraceEvent {
    pub cycle: u64,
    pub src: String,
    pub dst: String,
    pub message: String,
}

/// Parse a trace. Cycles must be non-decreasing; equal cycles keep file
/// order. When `known` is given every message must belong to it.
pub fn parse_trace_reader<R: Read>(reader: R, known: Option<&BTreeSet<String>>) -> Result<Vec<TraceEvent>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut events: Vec<TraceEvent> = Vec::new();
    let mut saw_header = false;
    let mut record = csv::ByteRecord::new();
    loop {
        let more = rdr.read_byte_record(&mut record).map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            IoError::Syntax {
                line,
                column: 1,
                message: e.to_string(),
            }
        })?;
        if !more {
            break;
        }
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        let fields: Vec<&str> = record
            .iter()
            .enumerate()
            .map(|(i, f)| {
                std::str::from_utf8(f).map_err(|_| IoError::Syntax {
                    line,
                    column: i + 1,
                    message: "field is not valid UTF-8".into(),
                })
            })
            .collect::<Result<_>>()?;
        if !saw_header {
            if fields != TRACE_HEADER {
                return Err(IoError::Syntax {
                    line,
                    column: 1,
                    message: format!("expected header `{}`", TRACE_HEADER.join(",")),
                });
            }
            saw_header = true;
            continue;
        }
        let [cycle, src, dst, message] = fields[..] else {
            return Err(IoError::Syntax {
                line,
                column: fields.len().min(4) + 1,
                message: format!("expected 4 fields, found {}", fields.len()),
            });
        };
        let cycle: u64 = cycle.parse().map_err(|_| IoError::Syntax {
            line,
            column: 1,
            message: format!("cycle must be a non-negative integer, got `{cycle}`"),
        })?;
        for (column, value) in [(2, src), (3, dst), (4, message)] {
            if value.is_empty() {
                return Err(IoError::Syntax {
                    line,
                    column,
                    message: "empty field".into(),
                });
            }
        }
        if let Some(prev) = events.last() {
            if cycle < prev.cycle {
                return Err(IoError::NonMonotoneCycle {
                    line,
                    cycle,
                    previous: prev.cycle,
                });
            }
        }
        if known.is_some_and(|k| !k.contains(message)) {
            return Err(IoError::UnknownMessage {
                line,
                name: message.to_string(),
            });
        }
        events.push(TraceEvent {
            cycle,
            src: src.to_string(),
            dst: dst.to_string(),
            message: message.to_string(),
        });
    }
    Ok(events)
}

pub fn parse_trace_file(path: impl AsRef<Path>, known: Option<&BTreeSet<String>>) -> Result<Vec<TraceEvent>> {
    let bytes = read_file(path.as_ref())?;
    parse_trace_reader(bytes.as_slice(), known)
}

pub fn render_trace(events: &[TraceEvent]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TRACE_HEADER)?;
    for e in events {
        w.write_record([e.cycle.to_string().as_str(), &e.src, &e.dst, &e.message])?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| IoError::Csv(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv output of UTF-8 fields"))
}

pub fn write_trace_file(events: &[TraceEvent], path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), render_trace(events)?.as_bytes())
}
