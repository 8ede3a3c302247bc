//! Trace-buffer message selection over interleaved protocol flows, and
//! outlier-based diagnosis of the traces those messages produce.
//!
//! The pipeline has two halves:
//!
//! * [`flow`] and [`selection`] model protocol flows as DAGs, build their
//!   interleavings, and pick the message combination that best fits a trace
//!   buffer of a given bit width.
//! * [`features`], [`outlier`] and [`diagnosis`] turn a recorded trace into
//!   per-window entropy and edit-distance features, score the windows with
//!   several unsupervised detectors, and flag the most anomalous ones.
//!
//! [`synth`] generates labeled synthetic traces for closed-loop checks and
//! [`io`] holds the file formats.

pub mod cli;
pub mod diagnosis;
pub mod features;
pub mod flow;
pub mod io;
pub mod outlier;
pub mod selection;
pub mod synth;
