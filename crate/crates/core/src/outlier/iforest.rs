//! Isolation forest.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_rows, OutlierError, Result, ScoreSet, ScoreWarning};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Expected path length of an unsuccessful BST search among `n` points.
pub fn average_path_length(n: usize) -> f64 {
    match n {
        0 | 1 => 0.0,
        2 => 1.0,
        _ => {
            let m = (n - 1) as f64;
            2.0 * (m.ln() + EULER_GAMMA) - 2.0 * m / n as f64
        }
    }
}

enum Node {
    Leaf { size: usize },
    Split { attr: usize, value: f64, left: usize, right: usize },
}

struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn grow(rows: &[Vec<f64>], sample: &mut [usize], limit: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut tree = Tree { nodes: Vec::new() };
        tree.build(rows, sample, 0, limit, rng);
        tree
    }

    fn build(&mut self, rows: &[Vec<f64>], idx: &mut [usize], depth: usize, limit: usize, rng: &mut ChaCha8Rng) -> usize {
        let id = self.nodes.len();
        if depth >= limit || idx.len() <= 1 {
            self.nodes.push(Node::Leaf { size: idx.len() });
            return id;
        }
        let d = rows[idx[0]].len();
        let ranges: Vec<(usize, f64, f64)> = (0..d)
            .filter_map(|j| {
                let (lo, hi) = idx.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                    (lo.min(rows[i][j]), hi.max(rows[i][j]))
                });
                (hi > lo).then_some((j, lo, hi))
            })
            .collect();
        if ranges.is_empty() {
            self.nodes.push(Node::Leaf { size: idx.len() });
            return id;
        }
        let (attr, lo, hi) = ranges[rng.random_range(0..ranges.len())];
        let value = lo + rng.random::<f64>() * (hi - lo);
        let mut mid = 0;
        for i in 0..idx.len() {
            if rows[idx[i]][attr] < value {
                idx.swap(i, mid);
                mid += 1;
            }
        }
        self.nodes.push(Node::Leaf { size: 0 });
        let (l, r) = idx.split_at_mut(mid);
        let left = self.build(rows, l, depth + 1, limit, rng);
        let right = self.build(rows, r, depth + 1, limit, rng);
        self.nodes[id] = Node::Split { attr, value, left, right };
        id
    }

    fn path_length(&self, x: &[f64]) -> f64 {
        let mut node = 0;
        let mut depth = 0.0;
        loop {
            match self.nodes[node] {
                Node::Leaf { size } => return depth + average_path_length(size),
                Node::Split { attr, value, left, right } => {
                    node = if x[attr] < value { left } else { right };
                    depth += 1.0;
                }
            }
        }
    }
}

/// Score rows with `trees` isolation trees, each grown on a subsample of
/// `min(subsample, n)` rows. Tree `t` draws from its own ChaCha stream `t`
/// under `seed`, so results do not depend on evaluation order.
pub fn score_iforest(rows: &[Vec<f64>], trees: usize, subsample: usize, seed: u64) -> Result<ScoreSet> {
    check_rows(rows, 2)?;
    if trees == 0 || subsample < 2 {
        return Err(OutlierError::InvalidParameter(
            "isolation forest needs trees >= 1 and subsample >= 2".into(),
        ));
    }
    let n = rows.len();
    let psi = subsample.min(n);
    let limit = (psi as f64).log2().ceil() as usize;
    let mut total = vec![0.0; n];
    for t in 0..trees {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(t as u64);
        let mut picked = sample(&mut rng, n, psi).into_vec();
        let tree = Tree::grow(rows, &mut picked, limit, &mut rng);
        for (acc, row) in total.iter_mut().zip(rows) {
            *acc += tree.path_length(row);
        }
    }
    let c = average_path_length(psi);
    let scores = total
        .into_iter()
        .map(|h| 2f64.powf(-(h / trees as f64) / c))
        .collect();
    let degenerate = rows.iter().all(|r| r == &rows[0]);
    Ok(ScoreSet {
        scores,
        warning: degenerate.then_some(ScoreWarning::DegenerateData),
    })
}
