//! How far do three observed messages narrow down the execution?

use flowtrace::flow::IndexedMessage;
use flowtrace::io::parse_scenario_file;
use flowtrace::selection::{consistent_path_count, path_localization, select_messages, IndexMatching};

fn main() {
    let scenario = parse_scenario_file(concat!(env!("CARGO_MANIFEST_DIR"), "/data/toy.scenario")).unwrap();
    let ifl = scenario.interleave(1_000_000).unwrap();
    let selected = select_messages(&ifl, &scenario.messages().unwrap(), 2).unwrap();

    let observed = [
        IndexedMessage::new("cache", 1, "ReqE"),
        IndexedMessage::new("cache", 1, "GntE"),
        IndexedMessage::new("cache", 2, "ReqE"),
    ];
    let combo = &selected.combination;
    let renamed = consistent_path_count(&ifl, combo, &observed, IndexMatching::UpToRenaming).unwrap();
    let exact = consistent_path_count(&ifl, combo, &observed, IndexMatching::Exact).unwrap();
    println!("{renamed} of {} paths consistent ({exact} with literal indices)", ifl.count_paths().unwrap());
    assert_eq!((renamed, exact), (2, 1));

    let fraction = path_localization(&ifl, combo, &observed, IndexMatching::default()).unwrap();
    assert!((fraction - 1.0 / 3.0).abs() < 1e-12);
}
