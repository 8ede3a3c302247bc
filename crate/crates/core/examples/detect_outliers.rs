//! Six detectors and the comprehensive score on a cluster with planted
//! outliers.

use flowtrace::outlier::{comprehensive_score, normalize_scores, rank_and_flag, DetectorConfig, DetectorKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut rows: Vec<Vec<f64>> = (0..95)
        .map(|_| vec![rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5])
        .collect();
    rows.extend([[6.0, 6.0], [-6.0, 5.0], [7.0, -6.0], [-5.0, -7.0], [0.0, 9.0]].map(Vec::from));
    let planted = 95..100;

    let mut normalized = Vec::new();
    for kind in DetectorKind::ALL {
        let scores = DetectorConfig::new(kind, 7).score(&rows).unwrap().scores;
        let flagged = rank_and_flag(&scores, 0.1).unwrap().flagged;
        let caught = flagged.iter().filter(|i| planted.contains(*i)).count();
        println!("{kind:<12} caught {caught}/5 in the top 10%");
        assert_eq!(caught, 5);
        if matches!(kind, DetectorKind::IForest | DetectorKind::Ocsvm | DetectorKind::KnnMean) {
            normalized.push(normalize_scores(&scores));
        }
    }
    let combined = comprehensive_score(&normalized[0], &normalized[2], &normalized[1]).unwrap();
    let top = rank_and_flag(&combined, 0.05).unwrap().flagged;
    assert!(top.iter().all(|i| planted.contains(i)));
}
