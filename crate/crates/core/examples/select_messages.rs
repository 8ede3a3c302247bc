//! Pick trace-buffer messages for two concurrent cache requests.

use flowtrace::io::parse_scenario_file;
use flowtrace::selection::{enumerate_combinations, flow_spec_coverage, mutual_information_gain, select_and_pack};

fn main() {
    let scenario = parse_scenario_file(concat!(env!("CARGO_MANIFEST_DIR"), "/data/toy.scenario")).unwrap();
    let ifl = scenario.interleave(1_000_000).unwrap();
    let messages = scenario.messages().unwrap();

    let combos = enumerate_combinations(&messages, scenario.buffer_width).unwrap();
    for c in &combos {
        println!(
            "{:<18} MI {:.4} nats  FCov {:.4}",
            c.messages().join(","),
            mutual_information_gain(&ifl, c).unwrap(),
            flow_spec_coverage(&ifl, c).unwrap()
        );
    }
    assert_eq!(combos.len(), 6);

    let best = select_and_pack(&ifl, &messages, scenario.buffer_width).unwrap();
    println!("selected {:?}, utilization {}", best.combination.messages(), best.utilization);
    assert_eq!(best.combination.messages(), ["GntE", "ReqE"]);
    assert!((best.mi_gain - 1.073).abs() < 1e-3);
    assert!((best.fcov - 11.0 / 15.0).abs() < 1e-12);
}
