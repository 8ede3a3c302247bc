#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use flowtrace::flow::{index_flow, interleave, validate_flow, Flow, FlowSpec, InterleavedFlow, MessageDef};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

pub fn cache_flow() -> Arc<Flow> {
    let spec = FlowSpec::new("cache")
        .states(["Init", "Wait", "GntW", "Done"])
        .initial("Init")
        .stop("Done")
        .atomic("GntW")
        .message(MessageDef::new("ReqE", 1))
        .message(MessageDef::new("GntE", 1))
        .message(MessageDef::new("Ack", 1))
        .edge("Init", "ReqE", "Wait")
        .edge("Wait", "GntE", "GntW")
        .edge("GntW", "Ack", "Done");
    Arc::new(validate_flow(spec).unwrap())
}

pub fn toy() -> InterleavedFlow {
    let f = cache_flow();
    interleave(vec![index_flow(f.clone(), 1).unwrap(), index_flow(f, 2).unwrap()], 1_000_000).unwrap()
}

/// One or two random flows with up to three instances in total.
pub fn scenario_of_size(seed: u64, max_states: usize, density: f64) -> InterleavedFlow {
    let mut r = rng(seed);
    let flows = r.random_range(1..=2);
    let mut indexed = Vec::new();
    for f in 0..flows {
        let n = r.random_range(3..=max_states);
        let spec = random_flow(&mut r, &format!("f{f}"), n, density, 3);
        let flow = Arc::new(validate_flow(spec).expect("generator builds valid flows"));
        let copies = if flows == 1 { r.random_range(1..=3) } else { r.random_range(1..=2) };
        for i in 1..=copies {
            indexed.push(index_flow(flow.clone(), i).unwrap());
        }
    }
    interleave(indexed, 100_000).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random valid flow: states `s0..s{n-1}` in topological order with a
/// spine `s_i -> s_{i+1}` plus random forward edges, stop at the end and
/// possibly at a few other places, atomic states sprinkled elsewhere.
pub fn random_flow(rng: &mut ChaCha8Rng, name: &str, n: usize, density: f64, messages: usize) -> FlowSpec {
    let states: Vec<String> = (0..n).map(|i| format!("s{i}")).collect();
    let mut spec = FlowSpec::new(name).states(states.clone()).initial("s0");
    for m in 0..messages {
        spec = spec.message(MessageDef::new(format!("m{m}"), rng.random_range(1..=3)));
    }
    let mut stops = vec![n - 1];
    for i in 1..n - 1 {
        if rng.random_bool(0.15) {
            stops.push(i);
        }
    }
    for &s in &stops {
        spec = spec.stop(states[s].clone());
    }
    for (i, s) in states.iter().enumerate().take(n - 1).skip(1) {
        if !stops.contains(&i) && rng.random_bool(0.2) {
            spec = spec.atomic(s.clone());
        }
    }
    for i in 0..n - 1 {
        for j in i + 1..n {
            if j == i + 1 || rng.random_bool(density) {
                let m = format!("m{}", rng.random_range(0..messages));
                spec = spec.edge(states[i].clone(), m, states[j].clone());
            }
        }
    }
    spec
}

/// `inliers` standard-normal 2-D points followed by `outliers` points at
/// radius `radius` in evenly spread directions.
pub fn planted(seed: u64, inliers: usize, outliers: usize, radius: f64) -> Vec<Vec<f64>> {
    let mut rng = rng(seed);
    let mut rows: Vec<Vec<f64>> = (0..inliers)
        .map(|_| vec![StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)])
        .collect();
    let phase: f64 = rng.random::<f64>() * std::f64::consts::TAU;
    for i in 0..outliers {
        let a = phase + i as f64 * std::f64::consts::TAU / outliers as f64;
        rows.push(vec![radius * a.cos(), radius * a.sin()]);
    }
    rows
}

pub fn top_decile_hits(scores: &[f64], planted: std::ops::Range<usize>) -> usize {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let top = (scores.len() as f64 * 0.1).ceil() as usize;
    order[..top].iter().filter(|i| planted.contains(i)).count()
}

pub fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut r = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0;
        for &o in &order[i..=j] {
            r[o] = avg;
        }
        i = j + 1;
    }
    r
}

pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

pub fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Naive k-NN distances: full sort per point.
pub fn naive_knn(rows: &[Vec<f64>], k: usize) -> Vec<Vec<f64>> {
    rows.iter()
        .enumerate()
        .map(|(i, p)| {
            let mut d: Vec<f64> = rows
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, q)| euclid(p, q))
                .collect();
            d.sort_by(f64::total_cmp);
            d.truncate(k);
            d
        })
        .collect()
}

/// Textbook LOF, O(n^2) per quantity, recomputing everything from scratch.
pub fn naive_lof(rows: &[Vec<f64>], k: usize) -> Vec<f64> {
    let n = rows.len();
    let kdist: Vec<f64> = naive_knn(rows, k).iter().map(|d| d[k - 1]).collect();
    let hood = |i: usize| -> Vec<usize> {
        (0..n)
            .filter(|&j| j != i && euclid(&rows[i], &rows[j]) <= kdist[i])
            .collect()
    };
    let lrd = |i: usize| -> f64 {
        let h = hood(i);
        let s: f64 = h.iter().map(|&o| kdist[o].max(euclid(&rows[i], &rows[o]))).sum();
        1.0 / (s / h.len() as f64 + 1e-10)
    };
    let lrds: Vec<f64> = (0..n).map(lrd).collect();
    (0..n)
        .map(|i| {
            let h = hood(i);
            h.iter().map(|&o| lrds[o] / lrds[i]).sum::<f64>() / h.len() as f64
        })
        .collect()
}

/// Edit distance by direct exponential recursion.
pub fn naive_levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    match (a.split_last(), b.split_last()) {
        (None, _) => b.len(),
        (_, None) => a.len(),
        (Some((x, ra)), Some((y, rb))) => {
            let sub = naive_levenshtein(ra, rb) + usize::from(x != y);
            let del = naive_levenshtein(ra, b) + 1;
            let ins = naive_levenshtein(a, rb) + 1;
            sub.min(del).min(ins)
        }
    }
}

/// Count initial-to-stop paths of an interleaving by explicit DFS.
pub fn dfs_paths(ifl: &InterleavedFlow) -> u128 {
    fn go(ifl: &InterleavedFlow, s: usize) -> u128 {
        let here = u128::from(ifl.is_stop(s));
        here + ifl.outgoing(s).iter().map(|e| go(ifl, e.dst)).sum::<u128>()
    }
    ifl.initial_states().iter().map(|&s| go(ifl, s)).sum()
}
