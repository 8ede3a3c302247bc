//! The `flowtrace` command line. Kept in the library so tests can drive it
//! without spawning a process.
//!
//! Exit codes: 0 success, 1 other failure, 2 parse error, 3 infeasible
//! request, 4 interleaving state cap exceeded, 5 too few aggregates.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagnosis::{
    agreement, diagnose, diagnose_sweep, DiagnosisConfig, DiagnosisError, DiagnosisReport, DEFAULT_GRANULARITY,
    DEFAULT_K,
};
use crate::features::{engineer, index_events, raw_feature_table, FeatureError, FeatureRow};
use crate::flow::{FlowError, IndexedMessage, DEFAULT_STATE_CAP};
use crate::io::{
    format_sig6, parse_flow_file, parse_scenario_file, parse_trace_file, read_report, render_report, write_trace_file,
    CsvTable, IoError, Report, ReportFormat,
};
use crate::outlier::{evaluate, DetectorKind, Metrics, OutlierError};
use crate::selection::{consistent_path_count, select_and_pack, IndexMatching, SelectionError};
use crate::synth::{generate_trace, inject, InjectionSpec, Labels, SynthError};

pub const STATE_CAP_ENV: &str = "FLOWTRACE_STATE_CAP";

#[derive(Debug, Parser)]
#[command(name = "flowtrace", version, about = "Trace message selection and anomaly diagnosis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Output {
    /// Output file; `-` writes to stdout.
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
    #[arg(long, default_value = "json", value_parser = parse_format)]
    pub format: ReportFormat,
}

fn parse_format(s: &str) -> Result<ReportFormat, String> {
    s.parse()
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a flow file or scenario and summarize it.
    Validate {
        /// A `.flow` file, or a scenario file listing flows.
        input: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Choose the trace-buffer messages for a scenario.
    Select {
        scenario: PathBuf,
        /// Overrides the scenario's buffer width.
        #[arg(long)]
        buffer_width: Option<u32>,
        /// Observed indexed messages (`1:ReqE,1:GntE`) to localize.
        #[arg(long, value_delimiter = ',')]
        observe: Vec<String>,
        /// Match observed instance indices literally instead of up to renaming.
        #[arg(long)]
        exact_indices: bool,
        #[command(flatten)]
        output: Output,
    },
    /// Score message aggregates of a trace and flag anomalous windows.
    Diagnose {
        trace: PathBuf,
        #[command(flatten)]
        params: DiagnoseParams,
        /// Also run every k up to this value and emit one report per k.
        #[arg(long)]
        k_max: Option<usize>,
        #[command(flatten)]
        output: Output,
    },
    /// Compare a diagnosis report against ground-truth labels.
    Eval {
        report: PathBuf,
        labels: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Generate a synthetic trace, optionally with injected anomalies.
    Gen {
        scenario: PathBuf,
        #[arg(long, default_value_t = 1_000_000)]
        length: u64,
        #[arg(long, default_value_t = 100)]
        gap: u64,
        /// `BUG:MSG1,MSG2,...:RATE`, rate in occurrences per 10^5 cycles.
        #[arg(long)]
        inject: Vec<String>,
        #[arg(long, default_value_t = DEFAULT_GRANULARITY)]
        granularity: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Where to write the labels JSON when injecting.
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long, default_value = "-")]
        out: PathBuf,
    },
    /// Emit engineered (or raw) feature tables for plotting.
    Features {
        trace: PathBuf,
        #[arg(long, default_value_t = DEFAULT_K)]
        k: usize,
        #[arg(long, default_value_t = DEFAULT_GRANULARITY)]
        granularity: u64,
        /// Emit raw (cycle range, IP pair, message) rows with this bucket size.
        #[arg(long)]
        raw: Option<u64>,
        #[arg(long, default_value = "-")]
        out: PathBuf,
        #[arg(long, default_value = "csv", value_parser = parse_format)]
        format: ReportFormat,
    },
    /// Group flagged windows by how many detectors agree on them.
    Agreement {
        /// A trace CSV, or a diagnosis report JSON.
        input: PathBuf,
        #[command(flatten)]
        params: DiagnoseParams,
        #[command(flatten)]
        output: Output,
    },
}

#[derive(Debug, Args)]
pub struct DiagnoseParams {
    #[arg(long, default_value_t = DEFAULT_K)]
    pub k: usize,
    #[arg(long, default_value_t = DEFAULT_GRANULARITY)]
    pub granularity: u64,
    #[arg(long, default_value_t = 0.1)]
    pub contamination: f64,
    #[arg(long, value_delimiter = ',', value_parser = parse_detector)]
    pub detectors: Vec<DetectorKind>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn parse_detector(s: &str) -> Result<DetectorKind, String> {
    s.parse()
}

impl DiagnoseParams {
    fn config(&self) -> DiagnosisConfig {
        DiagnosisConfig {
            k: self.k,
            granularity: self.granularity,
            detectors: if self.detectors.is_empty() {
                DetectorKind::ALL.to_vec()
            } else {
                self.detectors.clone()
            },
            contamination: self.contamination,
            seed: self.seed,
            ..Default::default()
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Selection(#[from] SelectionError),
    #[error(transparent)]
    Diagnosis(#[from] DiagnosisError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Outlier(#[from] OutlierError),
    #[error("{0}")]
    Usage(String),
    #[error("writing output: {0}")]
    Write(#[from] std::io::Error),
}

fn flow_exit(e: &FlowError) -> i32 {
    match e {
        FlowError::StateCapExceeded { .. } => 4,
        FlowError::Overflow => 1,
        _ => 2,
    }
}

fn selection_exit(e: &SelectionError) -> i32 {
    match e {
        SelectionError::Flow(f) => flow_exit(f),
        SelectionError::NoFeasibleCombination { .. } | SelectionError::ZeroWidth => 3,
        SelectionError::ConflictingWidth { .. } => 2,
        _ => 1,
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(e) => match e {
                IoError::Io { .. } => 1,
                IoError::Flow(f) => flow_exit(f),
                IoError::Selection(s) => selection_exit(s),
                _ => 2,
            },
            CliError::Selection(e) => selection_exit(e),
            CliError::Diagnosis(DiagnosisError::TooFewAggregates { .. }) => 5,
            CliError::Synth(SynthError::InfeasibleRate { .. }) => 3,
            _ => 1,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowSummary {
    pub name: String,
    pub states: usize,
    pub edges: usize,
    pub messages: Vec<String>,
    pub topological_order: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterleavingSummary {
    pub instances: usize,
    pub states: usize,
    pub edges: usize,
    pub paths: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub flows: Vec<FlowSummary>,
    pub interleaving: Option<InterleavingSummary>,
}

impl Report for ValidationReport {
    fn csv_table(&self) -> CsvTable {
        let mut t = CsvTable::new(["flow", "states", "edges", "messages"]);
        for f in &self.flows {
            t.push(vec![
                f.name.clone(),
                f.states.to_string(),
                f.edges.to_string(),
                f.messages.join(";"),
            ]);
        }
        t
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PackedReport {
    pub name: String,
    pub parent: String,
    pub width: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Localization {
    pub observed: Vec<String>,
    pub exact_indices: bool,
    pub consistent_paths: u64,
    pub total_paths: u64,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub buffer_width: u32,
    pub combination: Vec<String>,
    pub packed: Vec<PackedReport>,
    pub mi_gain: f64,
    pub fcov: f64,
    pub utilization: f64,
    pub used_bits: u32,
    pub interleaved_states: usize,
    pub localization: Option<Localization>,
}

impl Report for SelectionReport {
    fn csv_table(&self) -> CsvTable {
        let mut t = CsvTable::new(["combination", "packed", "mi_gain", "fcov", "utilization", "used_bits"]);
        t.push(vec![
            self.combination.join(";"),
            self.packed.iter().map(|p| p.name.as_str()).collect::<Vec<_>>().join(";"),
            format_sig6(self.mi_gain),
            format_sig6(self.fcov),
            format_sig6(self.utilization),
            self.used_bits.to_string(),
        ]);
        t
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureTable {
    pub k: usize,
    pub g: u64,
    pub rows: Vec<FeatureRow>,
}

impl Report for FeatureTable {
    fn csv_table(&self) -> CsvTable {
        let mut t = CsvTable::new(["window", "entropy", "mean_ldist"]);
        for r in &self.rows {
            t.push(vec![r.window_index.to_string(), format_sig6(r.entropy), format_sig6(r.mean_ldist)]);
        }
        t
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawTable {
    pub bucket: u64,
    /// Dictionaries for the integer-coded columns.
    pub ip_pairs: Vec<String>,
    pub messages: Vec<String>,
    /// `[cycle_range, ip_pair, message]` per event.
    pub rows: Vec<[u64; 3]>,
}

impl Report for RawTable {
    fn csv_table(&self) -> CsvTable {
        let mut t = CsvTable::new(["cycle_range", "ip_pair", "message"]);
        for r in &self.rows {
            t.push(r.iter().map(u64::to_string).collect());
        }
        t
    }
}

fn state_cap() -> Result<usize> {
    match std::env::var(STATE_CAP_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .ok()
            .filter(|&c: &usize| c > 0)
            .ok_or_else(|| CliError::Usage(format!("{STATE_CAP_ENV} must be a positive integer, got `{v}`"))),
        Err(_) => Ok(DEFAULT_STATE_CAP),
    }
}

fn is_scenario(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "scenario")
}

fn emit(out: &Path, text: &str, stdout: &mut dyn Write) -> Result<()> {
    if out == Path::new("-") {
        stdout.write_all(text.as_bytes())?;
    } else {
        std::fs::write(out, text).map_err(|source| IoError::Io {
            path: out.to_path_buf(),
            source,
        })?;
    }
    Ok(())
}

fn emit_report<R: Report>(report: &R, output: &Output, stdout: &mut dyn Write) -> Result<()> {
    emit(&output.out, &render_report(report, output.format)?, stdout)
}

/// Parse `3:ReqE` or `cache:3:ReqE`; the flow may be omitted when exactly
/// one flow declares the message.
fn parse_observed(text: &str, flows: &BTreeMap<String, Vec<String>>) -> Result<IndexedMessage> {
    let bad = || CliError::Usage(format!("cannot parse observed message `{text}`"));
    let parts: Vec<&str> = text.split(':').collect();
    let (flow, index, message) = match parts[..] {
        [i, m] => {
            let owners: Vec<&String> = flows.iter().filter(|(_, ms)| ms.iter().any(|x| x == m)).map(|(f, _)| f).collect();
            match owners[..] {
                [f] => (f.clone(), i, m),
                _ => return Err(CliError::Usage(format!("message `{m}` is unknown or ambiguous; use flow:index:message"))),
            }
        }
        [f, i, m] => (f.to_string(), i, m),
        _ => return Err(bad()),
    };
    let index: u32 = index.parse().map_err(|_| bad())?;
    Ok(IndexedMessage::new(flow, index, message))
}

fn paths_u64(n: u128) -> Result<u64> {
    u64::try_from(n).map_err(|_| CliError::Selection(SelectionError::Flow(FlowError::Overflow)))
}

fn cmd_validate(input: &Path, output: &Output, stdout: &mut dyn Write) -> Result<()> {
    let summarize = |f: &crate::flow::Flow| FlowSummary {
        name: f.name().to_string(),
        states: f.state_count(),
        edges: f.edges().len(),
        messages: f.messages().iter().map(|m| m.name.clone()).collect(),
        topological_order: f.topological_order().iter().map(|&s| f.state_name(s).to_string()).collect(),
    };
    let report = if is_scenario(input) {
        let scenario = parse_scenario_file(input)?;
        let ifl = scenario.interleave(state_cap()?)?;
        ValidationReport {
            flows: scenario.flows.iter().map(|f| summarize(&f.flow)).collect(),
            interleaving: Some(InterleavingSummary {
                instances: ifl.components().len(),
                states: ifl.state_count(),
                edges: ifl.edges().len(),
                paths: paths_u64(ifl.count_paths().map_err(SelectionError::from)?)?,
            }),
        }
    } else {
        ValidationReport {
            flows: vec![summarize(&parse_flow_file(input)?)],
            interleaving: None,
        }
    };
    emit_report(&report, output, stdout)
}

fn cmd_select(
    path: &Path,
    buffer_width: Option<u32>,
    observe: &[String],
    exact: bool,
    output: &Output,
    stdout: &mut dyn Write,
) -> Result<()> {
    let mut scenario = parse_scenario_file(path)?;
    if let Some(w) = buffer_width {
        scenario.buffer_width = w;
    }
    let ifl = scenario.interleave(state_cap()?)?;
    let messages = scenario.messages()?;
    let result = select_and_pack(&ifl, &messages, scenario.buffer_width)?;
    let localization = if observe.is_empty() {
        None
    } else {
        let flows: BTreeMap<String, Vec<String>> = scenario
            .flows
            .iter()
            .map(|f| (f.flow.name().to_string(), f.flow.messages().iter().map(|m| m.name.clone()).collect()))
            .collect();
        let observed = observe
            .iter()
            .map(|o| parse_observed(o, &flows))
            .collect::<Result<Vec<_>>>()?;
        let matching = if exact {
            IndexMatching::Exact
        } else {
            IndexMatching::UpToRenaming
        };
        let consistent = paths_u64(consistent_path_count(&ifl, &result.combination, &observed, matching)?)?;
        let total = paths_u64(ifl.count_paths().map_err(SelectionError::from)?)?;
        Some(Localization {
            observed: observed.iter().map(ToString::to_string).collect(),
            exact_indices: exact,
            consistent_paths: consistent,
            total_paths: total,
            fraction: if total == 0 { 0.0 } else { consistent as f64 / total as f64 },
        })
    };
    let report = SelectionReport {
        buffer_width: scenario.buffer_width,
        combination: result.combination.messages().to_vec(),
        packed: result
            .packed
            .iter()
            .map(|p| PackedReport {
                name: p.name.clone(),
                parent: p.parent.clone(),
                width: p.width,
            })
            .collect(),
        mi_gain: result.mi_gain,
        fcov: result.fcov,
        utilization: result.utilization,
        used_bits: result.used_bits(),
        interleaved_states: ifl.state_count(),
        localization,
    };
    emit_report(&report, output, stdout)
}

fn parse_injection(text: &str) -> Result<InjectionSpec> {
    let bad = || CliError::Usage(format!("expected BUG:MSG1,MSG2:RATE, got `{text}`"));
    let mut parts = text.splitn(3, ':');
    let (Some(bug), Some(seq), Some(rate)) = (parts.next(), parts.next(), parts.next()) else {
        return Err(bad());
    };
    let rate: f64 = rate.parse().map_err(|_| bad())?;
    let sequence: Vec<&str> = seq.split(',').filter(|s| !s.is_empty()).collect();
    Ok(InjectionSpec::new(bug, sequence, rate))
}

#[allow(clippy::too_many_arguments)]
fn cmd_gen(
    scenario: &Path,
    length: u64,
    gap: u64,
    injections: &[String],
    granularity: u64,
    seed: u64,
    labels: Option<&Path>,
    out: &Path,
    stdout: &mut dyn Write,
) -> Result<()> {
    let scenario = parse_scenario_file(scenario)?;
    let ifl = scenario.interleave(state_cap()?)?;
    let trace = generate_trace(&ifl, length, gap, seed)?;
    let specs = injections.iter().map(|s| parse_injection(s)).collect::<Result<Vec<_>>>()?;
    let (events, label_map) = if specs.is_empty() {
        (trace, Labels::default())
    } else {
        // Injection positions draw from a stream distinct from the walk.
        let lt = inject(&trace, &specs, granularity, seed.wrapping_add(1))?;
        (lt.events, lt.labels)
    };
    if out == Path::new("-") {
        stdout.write_all(crate::io::render_trace(&events)?.as_bytes())?;
    } else {
        write_trace_file(&events, out)?;
    }
    if let Some(path) = labels {
        std::fs::write(path, render_report(&label_map, ReportFormat::Json)?).map_err(|source| IoError::Io {
            path: path.to_path_buf(),
            source,
        })?;
    }
    Ok(())
}

fn cmd_eval(report: &Path, labels: &Path, output: &Output, stdout: &mut dyn Write) -> Result<()> {
    let report: DiagnosisReport = read_report(report)?;
    let labels: Labels = read_report(labels)?;
    let positives: Vec<bool> = report.windows.iter().map(|&w| labels.is_positive(w)).collect();
    let flagged: BTreeSet<usize> = report.flagged.iter().filter_map(|&w| report.position(w)).collect();
    let metrics: Metrics = evaluate(&flagged, &positives)?;
    emit_report(&metrics, output, stdout)
}

fn cmd_features(
    trace: &Path,
    k: usize,
    granularity: u64,
    raw: Option<u64>,
    output: &Output,
    stdout: &mut dyn Write,
) -> Result<()> {
    let events = parse_trace_file(trace, None)?;
    match raw {
        Some(bucket) => {
            let index = index_events(&events);
            let rows = raw_feature_table(&index, bucket)?
                .into_iter()
                .map(|r| [r.cycle_range, r.ip_pair as u64, r.message as u64])
                .collect();
            let table = RawTable {
                bucket,
                ip_pairs: index.pairs.iter().map(|(s, d)| format!("{s}->{d}")).collect(),
                messages: index.messages.clone(),
                rows,
            };
            emit_report(&table, output, stdout)
        }
        None => {
            let engineered = engineer(&events, k, granularity)?;
            let table = FeatureTable {
                k,
                g: granularity,
                rows: engineered.rows,
            };
            emit_report(&table, output, stdout)
        }
    }
}

fn cmd_agreement(input: &Path, params: &DiagnoseParams, output: &Output, stdout: &mut dyn Write) -> Result<()> {
    let report: DiagnosisReport = if input.extension().is_some_and(|e| e == "json") {
        read_report(input)?
    } else {
        diagnose(&parse_trace_file(input, None)?, &params.config())?
    };
    emit_report(&agreement(&report)?, output, stdout)
}

pub fn execute(cli: Cli, stdout: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Validate { input, output } => cmd_validate(&input, &output, stdout),
        Command::Select {
            scenario,
            buffer_width,
            observe,
            exact_indices,
            output,
        } => cmd_select(&scenario, buffer_width, &observe, exact_indices, &output, stdout),
        Command::Diagnose {
            trace,
            params,
            k_max,
            output,
        } => {
            let events = parse_trace_file(&trace, None)?;
            let cfg = params.config();
            match k_max {
                Some(k_max) => emit_report(&diagnose_sweep(&events, &cfg, k_max)?, &output, stdout),
                None => emit_report(&diagnose(&events, &cfg)?, &output, stdout),
            }
        }
        Command::Eval { report, labels, output } => cmd_eval(&report, &labels, &output, stdout),
        Command::Gen {
            scenario,
            length,
            gap,
            inject,
            granularity,
            seed,
            labels,
            out,
        } => cmd_gen(&scenario, length, gap, &inject, granularity, seed, labels.as_deref(), &out, stdout),
        Command::Features {
            trace,
            k,
            granularity,
            raw,
            out,
            format,
        } => cmd_features(&trace, k, granularity, raw, &Output { out, format }, stdout),
        Command::Agreement { input, params, output } => cmd_agreement(&input, &params, &output, stdout),
    }
}

/// Parse arguments, run, and report errors on stderr. Returns the process
/// exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match execute(cli, &mut lock) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
