//! Distance-based detectors: k-nearest-neighbour distance and the local
//! outlier factor.

use super::{check_rows, euclidean, OutlierError, Result};

/// Guards the reachability density when a point's neighbours all coincide
/// with it.
const DENSITY_EPS: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KnnMode {
    /// Distance to the k-th nearest neighbour.
    Largest,
    /// Mean distance to the k nearest neighbours.
    Mean,
}

fn distance_matrix(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = rows.len();
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let v = euclidean(&rows[i], &rows[j]);
            d[i][j] = v;
            d[j][i] = v;
        }
    }
    d
}

/// Distances from `i` to every other row with the `k` smallest moved to the
/// front (unordered).
fn nearest(dist: &[Vec<f64>], i: usize, k: usize) -> Vec<f64> {
    let mut others: Vec<f64> = dist[i]
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, &v)| v)
        .collect();
    others.select_nth_unstable_by(k - 1, f64::total_cmp);
    others
}

fn check_k(n: usize, k: usize) -> Result<()> {
    if k == 0 || k >= n {
        return Err(OutlierError::KTooLarge { k, n });
    }
    Ok(())
}

pub fn score_knn(rows: &[Vec<f64>], k: usize, mode: KnnMode) -> Result<Vec<f64>> {
    check_rows(rows, 2)?;
    check_k(rows.len(), k)?;
    let dist = distance_matrix(rows);
    Ok((0..rows.len())
        .map(|i| {
            let near = nearest(&dist, i, k);
            match mode {
                KnnMode::Largest => near[k - 1],
                KnnMode::Mean => near[..k].iter().sum::<f64>() / k as f64,
            }
        })
        .collect())
}

/// Local outlier factor with tie-inclusive k-distance neighbourhoods.
pub fn score_lof(rows: &[Vec<f64>], k: usize) -> Result<Vec<f64>> {
    check_rows(rows, 2)?;
    let n = rows.len();
    check_k(n, k)?;
    let dist = distance_matrix(rows);
    let k_distance: Vec<f64> = (0..n).map(|i| nearest(&dist, i, k)[k - 1]).collect();
    let neighborhoods: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j != i && dist[i][j] <= k_distance[i])
                .collect()
        })
        .collect();
    let lrd: Vec<f64> = (0..n)
        .map(|i| {
            let hood = &neighborhoods[i];
            let reach: f64 = hood.iter().map(|&o| k_distance[o].max(dist[i][o])).sum();
            1.0 / (reach / hood.len() as f64 + DENSITY_EPS)
        })
        .collect();
    Ok((0..n)
        .map(|i| {
            let hood = &neighborhoods[i];
            hood.iter().map(|&o| lrd[o]).sum::<f64>() / hood.len() as f64 / lrd[i]
        })
        .collect())
}
