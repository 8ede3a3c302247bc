//! Generate a trace, splice in three anomalous message sequences, diagnose
//! it, and score the diagnosis against the injected ground truth.

use std::collections::BTreeSet;

use flowtrace::diagnosis::{diagnose, DiagnosisConfig};
use flowtrace::io::parse_scenario_file;
use flowtrace::outlier::evaluate;
use flowtrace::synth::{generate_trace, inject, InjectionSpec};

fn main() {
    let scenario = parse_scenario_file(concat!(env!("CARGO_MANIFEST_DIR"), "/data/toy.scenario")).unwrap();
    let ifl = scenario.interleave(1_000_000).unwrap();
    // One occurrence of each bug over 3 * 10^6 cycles.
    let bugs = [
        InjectionSpec::new("b1", ["Ack", "Ack", "GntE", "Ack"], 1.0 / 30.0),
        InjectionSpec::new("b2", ["GntE", "GntE", "ReqE", "ReqE", "Ack"], 1.0 / 30.0),
        InjectionSpec::new("b3", ["ReqE", "Ack", "GntE", "GntE"], 1.0 / 30.0),
    ];

    for seed in 0..5 {
        let trace = generate_trace(&ifl, 3_000_000, 2_000, seed).unwrap();
        let labeled = inject(&trace, &bugs, 100_000, seed + 1_000).unwrap();
        let report = diagnose(&labeled.events, &DiagnosisConfig { seed, ..Default::default() }).unwrap();

        let positives: Vec<bool> = report.windows.iter().map(|&w| labeled.labels.is_positive(w)).collect();
        let flagged: BTreeSet<usize> = report.flagged.iter().filter_map(|&w| report.position(w)).collect();
        let m = evaluate(&flagged, &positives).unwrap();
        println!(
            "seed {seed}: flagged {:?}, injected {:?}, precision {:.2}",
            report.flagged,
            labeled.labels.0.keys().collect::<Vec<_>>(),
            m.precision.unwrap_or(0.0)
        );
        assert!(m.tp >= 2);
    }
}
