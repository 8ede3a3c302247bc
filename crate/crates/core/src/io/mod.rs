//! File formats: flow specifications, usage scenarios, CSV traces and the
//! JSON/CSV reports every command emits.

mod flowfile;
mod report;
mod trace;

use std::path::PathBuf;

use thiserror::Error;

use crate::flow::FlowError;
use crate::selection::SelectionError;

pub use flowfile::{parse_flow_file, parse_flow_str, parse_scenario_file, parse_scenario_str, ScenarioSpec};
pub use report::{
    format_sig6, parse_report, read_report, render_report, write_report, CsvTable, Report, ReportFormat,
};
pub use trace::{parse_trace_file, parse_trace_reader, render_trace, write_trace_file, TraceEvent};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}: unknown state `{name}`")]
    UnknownState { line: usize, name: String },
    #[error("line {line}: unknown message `{name}`")]
    UnknownMessage { line: usize, name: String },
    #[error("line {line}: message `{name}` declared twice")]
    DuplicateMessageName { line: usize, name: String },
    #[error("line {line}: cycle {cycle} precedes the previous cycle {previous}")]
    NonMonotoneCycle { line: usize, cycle: u64, previous: u64 },
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Selection(#[from] SelectionError),
    #[error("malformed report: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = IoError> = std::result::Result<T, E>;

fn read_file(path: &std::path::Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|source| IoError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_file(path: &std::path::Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|source| IoError::Io {
        path: path.to_path_buf(),
        source,
    })
}
