//! Principal-component reconstruction score: the squared length of each
//! standardized row in whitened component space.

use nalgebra::{DMatrix, SymmetricEigen};

use super::{check_rows, standardize, Result, ScoreSet, ScoreWarning};

/// Eigenvalues below this fraction of the largest are treated as zero.
const RELATIVE_EIGEN_FLOOR: f64 = 1e-12;

pub fn score_pca(rows: &[Vec<f64>]) -> Result<ScoreSet> {
    check_rows(rows, 2)?;
    let z = standardize(rows);
    let n = z.len();
    let d = z[0].len();
    if d == 0 {
        return Ok(ScoreSet {
            scores: vec![0.0; n],
            warning: Some(ScoreWarning::DegenerateData),
        });
    }
    let x = DMatrix::from_fn(n, d, |i, j| z[i][j]);
    let cov = x.transpose() * &x / n as f64;
    let eig = SymmetricEigen::new(cov);
    let max = eig.eigenvalues.max();
    let kept: Vec<usize> = (0..d)
        .filter(|&j| eig.eigenvalues[j] > RELATIVE_EIGEN_FLOOR * max)
        .collect();
    let proj = &x * &eig.eigenvectors;
    let scores = (0..n)
        .map(|i| {
            kept.iter()
                .map(|&j| proj[(i, j)].powi(2) / eig.eigenvalues[j])
                .sum()
        })
        .collect();
    Ok(ScoreSet {
        scores,
        warning: None,
    })
}
