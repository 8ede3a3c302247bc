//! One-class SVM with an RBF kernel, trained by SMO on the ν-formulation
//!
//! min ½ αᵀQα  subject to  0 ≤ αᵢ ≤ 1,  Σαᵢ = νl.

use super::{check_rows, standardize, OutlierError, Result, ScoreSet, ScoreWarning};

const TOLERANCE: f64 = 1e-4;
const MAX_ITERATIONS: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub struct OcsvmModel {
    pub alpha: Vec<f64>,
    pub rho: f64,
    pub gamma: f64,
    /// Standardized training rows the model was fitted on.
    pub rows: Vec<Vec<f64>>,
    pub iterations: usize,
    pub converged: bool,
}

impl OcsvmModel {
    pub fn kernel(&self, a: &[f64], b: &[f64]) -> f64 {
        rbf(self.gamma, a, b)
    }

    /// Signed distance to the boundary; negative outside the support.
    pub fn decision(&self, x: &[f64]) -> f64 {
        self.alpha
            .iter()
            .zip(&self.rows)
            .filter(|(&a, _)| a > 0.0)
            .map(|(&a, r)| a * self.kernel(r, x))
            .sum::<f64>()
            - self.rho
    }
}

fn rbf(gamma: f64, a: &[f64], b: &[f64]) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * d2).exp()
}

/// Fit on already-standardized rows. `gamma` defaults to `1 / (2 d)`, the
/// scale-aware choice for unit-variance columns.
pub fn fit_ocsvm(rows: &[Vec<f64>], nu: f64, gamma: Option<f64>) -> Result<OcsvmModel> {
    let d = check_rows(rows, 2)?;
    if !(nu > 0.0 && nu <= 1.0) {
        return Err(OutlierError::InvalidParameter(format!("nu {nu} outside (0, 1]")));
    }
    let gamma = gamma.unwrap_or(1.0 / (2.0 * d.max(1) as f64));
    if gamma.is_nan() || gamma <= 0.0 {
        return Err(OutlierError::InvalidParameter(format!("gamma {gamma} must be positive")));
    }
    let l = rows.len();
    let q: Vec<Vec<f64>> = (0..l)
        .map(|i| (0..l).map(|j| rbf(gamma, &rows[i], &rows[j])).collect())
        .collect();

    let total = nu * l as f64;
    let full = (total.floor() as usize).min(l);
    let mut alpha = vec![0.0; l];
    alpha[..full].iter_mut().for_each(|a| *a = 1.0);
    if full < l {
        alpha[full] = total - full as f64;
    }
    let mut grad: Vec<f64> = (0..l)
        .map(|i| (0..l).map(|j| q[i][j] * alpha[j]).sum())
        .collect();

    let mut iterations = 0;
    let mut converged = false;
    while iterations < MAX_ITERATIONS {
        // Maximal violating pair: raise the smallest gradient that can still
        // grow, lower the largest that can still shrink.
        let up = (0..l)
            .filter(|&i| alpha[i] < 1.0)
            .min_by(|&a, &b| grad[a].total_cmp(&grad[b]));
        let low = (0..l)
            .filter(|&j| alpha[j] > 0.0)
            .max_by(|&a, &b| grad[a].total_cmp(&grad[b]));
        let (Some(i), Some(j)) = (up, low) else {
            converged = true;
            break;
        };
        let gap = grad[j] - grad[i];
        if gap < TOLERANCE {
            converged = true;
            break;
        }
        let eta = (q[i][i] + q[j][j] - 2.0 * q[i][j]).max(1e-12);
        let step = (gap / eta).min(1.0 - alpha[i]).min(alpha[j]);
        alpha[i] += step;
        alpha[j] -= step;
        if alpha[i] > 1.0 - 1e-15 {
            alpha[i] = 1.0;
        }
        if alpha[j] < 1e-15 {
            alpha[j] = 0.0;
        }
        for k in 0..l {
            grad[k] += step * (q[k][i] - q[k][j]);
        }
        iterations += 1;
    }

    // Recompute the gradient to shed accumulated rounding before solving
    // for the offset.
    let grad: Vec<f64> = (0..l)
        .map(|i| (0..l).map(|j| q[i][j] * alpha[j]).sum())
        .collect();
    let rho = offset(&alpha, &grad);
    Ok(OcsvmModel {
        alpha,
        rho,
        gamma,
        rows: rows.to_vec(),
        iterations,
        converged,
    })
}

/// Mean gradient over free multipliers, else the midpoint of the feasible
/// interval (lower bound when the interval is unbounded above).
fn offset(alpha: &[f64], grad: &[f64]) -> f64 {
    let mut free_sum = 0.0;
    let mut free = 0usize;
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    for (&a, &g) in alpha.iter().zip(grad) {
        if a >= 1.0 {
            lb = lb.max(g);
        } else if a <= 0.0 {
            ub = ub.min(g);
        } else {
            free_sum += g;
            free += 1;
        }
    }
    if free > 0 {
        free_sum / free as f64
    } else if ub.is_finite() && lb.is_finite() {
        (ub + lb) / 2.0
    } else if lb.is_finite() {
        lb
    } else {
        ub
    }
}

/// Standardize, fit, and score every training row by `-decision`.
pub fn score_ocsvm(rows: &[Vec<f64>], nu: f64, gamma: Option<f64>) -> Result<ScoreSet> {
    check_rows(rows, 2)?;
    let z = standardize(rows);
    if z[0].is_empty() {
        return Ok(ScoreSet {
            scores: vec![0.0; rows.len()],
            warning: Some(ScoreWarning::DegenerateData),
        });
    }
    let model = fit_ocsvm(&z, nu, gamma)?;
    let scores = z.iter().map(|x| -model.decision(x)).collect();
    Ok(ScoreSet {
        scores,
        warning: (!model.converged).then_some(ScoreWarning::NonConvergence {
            iterations: model.iterations,
        }),
    })
}
