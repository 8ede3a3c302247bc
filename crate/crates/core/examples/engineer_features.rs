//! Entropy and mean edit distance of the two aggregates of a six-message
//! trace with k = 2 and g = 100.

use flowtrace::features::{engineer, levenshtein};
use flowtrace::io::parse_trace_file;

fn main() {
    let events = parse_trace_file(concat!(env!("CARGO_MANIFEST_DIR"), "/data/fig7.csv"), None).unwrap();
    let t = engineer(&events, 2, 100).unwrap();
    for (agg, row) in t.aggregates.iter().zip(&t.rows) {
        let seqs: Vec<String> = agg.sequences.iter().map(|s| t.index.decode(&s.symbols).concat()).collect();
        println!("window {}: {:?} -> ({:.4}, {:.4})", row.window_index, seqs, row.entropy, row.mean_ldist);
    }
    assert!((t.rows[0].entropy - 0.9182).abs() < 1e-4);
    assert!((t.rows[1].entropy - 3f64.log2()).abs() < 1e-12);

    assert_eq!(levenshtein(b"aba", b"bab"), 2);
    assert_eq!(levenshtein(b"aba", b"cdc"), 3);
    assert_eq!(levenshtein(b"ab", b"ac"), 1);
}
