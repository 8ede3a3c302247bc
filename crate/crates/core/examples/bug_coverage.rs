//! Bug coverage of each message and the importance derived from it.

use std::collections::{BTreeMap, BTreeSet};

use flowtrace::synth::{bug_coverage, message_importance};

fn main() {
    // 14 bugs: m1 is touched by three of them, m8 by one, m3 by four.
    let mut affected: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for (bug, msgs) in [
        ("b1", &["m1", "m3"][..]),
        ("b2", &["m1"]),
        ("b3", &["m1", "m3"]),
        ("b4", &["m3"]),
        ("b5", &["m3", "m8"]),
    ] {
        affected.insert(bug.into(), msgs.iter().map(|m| m.to_string()).collect());
    }
    let universe: Vec<String> = ["m1", "m3", "m8", "m9"].map(String::from).to_vec();
    let coverage = bug_coverage(&affected, 14, &universe).unwrap();
    for (m, c) in &coverage {
        match message_importance(*c) {
            Ok(imp) => println!("{m}: coverage {c:.2}, importance {imp:.2}"),
            Err(_) => println!("{m}: unaffected"),
        }
    }
    assert!((message_importance(0.21).unwrap() - 4.76).abs() < 0.01);
    assert_eq!(coverage["m9"], 0.0);
}
