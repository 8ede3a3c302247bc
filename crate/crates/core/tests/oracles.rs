//! Cross-checks of library results against slow, independent computations.

mod common;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use common::*;
use flowtrace::diagnosis::{diagnose, diagnose_sweep, DiagnosisConfig};
use flowtrace::features::{aggregate_entropy, aggregate_mean_ldist, engineer, levenshtein};
use flowtrace::flow::{index_flow, interleave, validate_flow, Flow, FlowSpec, IndexedMessage, InterleavedFlow, MessageDef};
use flowtrace::io::TraceEvent;
use flowtrace::outlier::{
    comprehensive_score, detector_agreement, fit_ocsvm, normalize_scores, rank_and_flag, score_knn, score_lof,
    score_pca, KnnMode,
};
use flowtrace::selection::{
    consistent_path_count, enumerate_combinations, flow_spec_coverage, mutual_information_gain, IndexMatching,
    MessageCombination,
};
use flowtrace::synth::{generate_walks, inject, InjectionSpec};
use rand::seq::SliceRandom;
use rand::Rng;

fn random_scenario(seed: u64) -> InterleavedFlow {
    scenario_of_size(seed, 6, 0.3)
}

fn all_messages(ifl: &InterleavedFlow) -> Vec<MessageDef> {
    ifl.base_messages().into_iter().cloned().collect()
}

/// I(X;Y) summed over each tracked label y, by a literal double loop over
/// edges: p(y) = n(y)/|E|, p(x|y) = n(y→x)/n(y), term p(y)p(x|y)ln(p(x|y)|S|).
fn brute_mi(ifl: &InterleavedFlow, combo: &MessageCombination) -> f64 {
    let e = ifl.edges();
    let s = ifl.state_count() as f64;
    let mut labels = BTreeSet::new();
    for name in combo.messages() {
        labels.extend(ifl.instances_of(name));
    }
    let mut mi = 0.0;
    for y in labels {
        let n_y = e.iter().filter(|x| x.label == y).count() as f64;
        if n_y == 0.0 {
            continue;
        }
        let p_y = n_y / e.len() as f64;
        for x in 0..ifl.state_count() {
            let n_yx = e.iter().filter(|q| q.label == y && q.dst == x).count() as f64;
            if n_yx > 0.0 {
                let p = n_yx / n_y;
                mi += p_y * p * (p * s).ln();
            }
        }
    }
    mi
}

#[test]
fn mutual_information_matches_brute_force() {
    let mut checked = 0;
    for seed in 0..25 {
        let ifl = if seed == 0 { toy() } else { random_scenario(seed) };
        let msgs = all_messages(&ifl);
        for combo in enumerate_combinations(&msgs, 6).unwrap() {
            let got = mutual_information_gain(&ifl, &combo).unwrap();
            let want = brute_mi(&ifl, &combo);
            assert!((got - want).abs() < 1e-9, "seed {seed} {:?}: {got} vs {want}", combo.messages());
            checked += 1;
        }
    }
    assert!(checked > 50);
}

#[test]
fn coverage_matches_destination_count() {
    for seed in 0..25 {
        let ifl = if seed == 0 { toy() } else { random_scenario(seed) };
        for combo in enumerate_combinations(&all_messages(&ifl), 6).unwrap() {
            let dsts: BTreeSet<usize> = ifl
                .edges()
                .iter()
                .filter(|e| combo.contains(&ifl.resolve(e.label).message))
                .map(|e| e.dst)
                .collect();
            let want = dsts.len() as f64 / ifl.state_count() as f64;
            assert_eq!(flow_spec_coverage(&ifl, &combo).unwrap(), want);
        }
    }
}

/// Paths counted by memoized recursion over component-state tuples, built
/// straight from the per-flow transition relations.
fn tuple_paths(flows: &[&Flow]) -> u128 {
    fn go(flows: &[&Flow], t: &[usize], memo: &mut HashMap<Vec<usize>, u128>) -> u128 {
        if let Some(&c) = memo.get(t) {
            return c;
        }
        let mut c = u128::from(t.iter().zip(flows).all(|(&s, f)| f.is_stop(s)));
        for (j, f) in flows.iter().enumerate() {
            let blocked = (0..flows.len()).any(|i| i != j && flows[i].is_atomic(t[i]));
            if blocked {
                continue;
            }
            for e in f.edges().iter().filter(|e| e.src == t[j]) {
                let mut next = t.to_vec();
                next[j] = e.dst;
                c += go(flows, &next, memo);
            }
        }
        memo.insert(t.to_vec(), c);
        c
    }
    let mut starts: Vec<Vec<usize>> = vec![vec![]];
    for f in flows {
        starts = starts
            .into_iter()
            .flat_map(|p| {
                f.initial_states().iter().map(move |&s| {
                    let mut q = p.clone();
                    q.push(s);
                    q
                })
            })
            .collect();
    }
    let mut memo = HashMap::new();
    starts
        .iter()
        .filter(|t| t.iter().zip(flows).filter(|(&s, f)| f.is_atomic(s)).count() <= 1)
        .map(|t| go(flows, t, &mut memo))
        .sum()
}

#[test]
fn path_counts_match_tuple_recursion_and_dfs() {
    let mut checked = 0;
    for seed in 100.. {
        if checked == 10 {
            break;
        }
        let ifl = scenario_of_size(seed, 4, 0.2);
        let flows: Vec<&Flow> = ifl.components().iter().map(|c| c.flow()).collect();
        let got = ifl.count_paths().unwrap();
        // Keep the DFS affordable.
        if got > 10_000 {
            continue;
        }
        checked += 1;
        assert_eq!(got, tuple_paths(&flows), "seed {seed}");
        assert_eq!(got, dfs_paths(&ifl), "seed {seed}");
        let (traces, truncated) = ifl.enumerate_traces(20_000).unwrap();
        assert!(!truncated);
        assert_eq!(traces.len() as u128, got);
    }
    assert_eq!(toy().count_paths().unwrap(), 6);
}

#[test]
fn single_flow_paths_match_dfs() {
    for seed in 0..10 {
        let mut r = rng(seed);
        let n = r.random_range(4..=10);
        let flow = validate_flow(random_flow(&mut r, "f", n, 0.35, 4)).unwrap();
        fn dfs(f: &Flow, s: usize) -> u128 {
            u128::from(f.is_stop(s)) + f.edges().iter().filter(|e| e.src == s).map(|e| dfs(f, e.dst)).sum::<u128>()
        }
        let want: u128 = flow.initial_states().iter().map(|&s| dfs(&flow, s)).sum();
        let ifl = interleave(vec![index_flow(Arc::new(flow), 1).unwrap()], 1000).unwrap();
        assert_eq!(ifl.count_paths().unwrap(), want);
    }
}

/// Random specs with arbitrary edges; predicted valid iff acyclic, no stop
/// state is atomic, everything is reachable from an initial state and
/// everything reaches a stop state.
#[test]
fn validation_matches_structural_oracle() {
    let (mut ok, mut bad) = (0, 0);
    for seed in 0..400 {
        let mut r = rng(seed);
        let n = r.random_range(1..=6);
        let names: Vec<String> = (0..n).map(|i| format!("q{i}")).collect();
        let mut spec = FlowSpec::new("r").states(names.clone()).message(MessageDef::new("m", 1));
        let mut init = vec![false; n];
        let mut stop = vec![false; n];
        let mut atomic = vec![false; n];
        init[0] = true;
        for i in 0..n {
            init[i] |= r.random_bool(0.1);
            stop[i] = r.random_bool(0.3) || i == n - 1;
            atomic[i] = r.random_bool(0.1);
        }
        let mut adj = vec![vec![false; n]; n];
        for i in 0..n {
            for j in 0..n {
                // Mostly forward edges so that a fair share of specs are valid.
                let p = if j == i + 1 { 0.9 } else if j > i { 0.3 } else { 0.03 };
                if r.random_bool(p) {
                    adj[i][j] = true;
                    spec = spec.edge(names[i].clone(), "m", names[j].clone());
                }
            }
        }
        for i in 0..n {
            if init[i] {
                spec = spec.initial(names[i].clone());
            }
            if stop[i] {
                spec = spec.stop(names[i].clone());
            }
            if atomic[i] {
                spec = spec.atomic(names[i].clone());
            }
        }
        let reach = |from: usize| {
            let mut seen = vec![false; n];
            let mut stack: Vec<usize> = (0..n).filter(|&j| adj[from][j]).collect();
            while let Some(s) = stack.pop() {
                if !seen[s] {
                    seen[s] = true;
                    stack.extend((0..n).filter(|&j| adj[s][j]));
                }
            }
            seen
        };
        let reach_all: Vec<Vec<bool>> = (0..n).map(reach).collect();
        let acyclic = (0..n).all(|s| !reach_all[s][s]);
        let overlap = (0..n).any(|s| stop[s] && atomic[s]);
        let reachable = (0..n).all(|s| init[s] || (0..n).any(|i| init[i] && reach_all[i][s]));
        let live = (0..n).all(|s| stop[s] || (0..n).any(|t| stop[t] && reach_all[s][t]));
        let expect = acyclic && !overlap && reachable && live;
        let got = validate_flow(spec);
        assert_eq!(got.is_ok(), expect, "seed {seed}: {got:?}");
        if expect {
            ok += 1;
        } else {
            bad += 1;
        }
    }
    assert!(ok > 40 && bad > 40, "unbalanced sample: {ok} valid, {bad} invalid");
}

/// Does the tracked restriction of `trace` start with some injective
/// per-flow renaming of `observed`?
fn prefix_matches(trace: &[IndexedMessage], tracked: &BTreeSet<&str>, observed: &[IndexedMessage], rename: bool) -> bool {
    let visible: Vec<&IndexedMessage> = trace.iter().filter(|m| tracked.contains(m.message.as_str())).collect();
    if visible.len() < observed.len() {
        return false;
    }
    let mut fwd: BTreeMap<(&str, u32), u32> = BTreeMap::new();
    let mut back: BTreeMap<(&str, u32), u32> = BTreeMap::new();
    for (o, v) in observed.iter().zip(&visible) {
        if o.flow != v.flow || o.message != v.message {
            return false;
        }
        if !rename {
            if o.index != v.index {
                return false;
            }
            continue;
        }
        if *fwd.entry((&o.flow, o.index)).or_insert(v.index) != v.index {
            return false;
        }
        if *back.entry((&v.flow, v.index)).or_insert(o.index) != o.index {
            return false;
        }
    }
    true
}

#[test]
fn localization_matches_path_enumeration() {
    let ifl = toy();
    let obs = |s: &[(u32, &str)]| -> Vec<IndexedMessage> {
        s.iter().map(|&(i, m)| IndexedMessage::new("cache", i, m)).collect()
    };
    let msgs = all_messages(&ifl);
    let (traces, _) = ifl.enumerate_traces(1000).unwrap();
    let cases = [
        obs(&[(1, "ReqE"), (1, "GntE"), (2, "ReqE")]),
        obs(&[(2, "ReqE")]),
        obs(&[(1, "ReqE"), (2, "ReqE")]),
        obs(&[(1, "ReqE"), (2, "ReqE"), (2, "GntE")]),
        obs(&[]),
    ];
    for combo in enumerate_combinations(&msgs, 3).unwrap() {
        let tracked: BTreeSet<&str> = combo.messages().iter().map(String::as_str).collect();
        for observed in &cases {
            if observed.iter().any(|m| !tracked.contains(m.message.as_str())) {
                continue;
            }
            for (matching, rename) in [(IndexMatching::Exact, false), (IndexMatching::UpToRenaming, true)] {
                let want = traces.iter().filter(|t| prefix_matches(t, &tracked, observed, rename)).count() as u128;
                let got = consistent_path_count(&ifl, &combo, observed, matching).unwrap();
                assert_eq!(got, want, "{:?} {observed:?} {matching:?}", combo.messages());
            }
        }
    }
}

#[test]
fn levenshtein_matches_recursion() {
    let mut r = rng(7);
    for _ in 0..2000 {
        let la = r.random_range(0..=6);
        let lb = r.random_range(0..=6);
        let a: Vec<u8> = (0..la).map(|_| r.random_range(0..3)).collect();
        let b: Vec<u8> = (0..lb).map(|_| r.random_range(0..3)).collect();
        assert_eq!(levenshtein(&a, &b), naive_levenshtein(&a, &b), "{a:?} {b:?}");
    }
}

fn random_rows(seed: u64) -> Vec<Vec<f64>> {
    let mut r = rng(seed);
    let n = r.random_range(5..=300);
    let d = r.random_range(1..=4);
    // Coarse grid values produce plenty of exact distance ties.
    let grid = r.random_bool(0.5);
    (0..n)
        .map(|_| {
            (0..d)
                .map(|_| {
                    if grid {
                        f64::from(r.random_range(0..6))
                    } else {
                        r.random::<f64>() * 10.0
                    }
                })
                .collect()
        })
        .collect()
}

#[test]
fn knn_and_lof_match_naive() {
    for seed in 0..20 {
        let rows = random_rows(seed);
        let n = rows.len();
        let k = rng(seed + 99).random_range(1..n.min(12));
        let naive = naive_knn(&rows, k);
        let largest = score_knn(&rows, k, KnnMode::Largest).unwrap();
        let mean = score_knn(&rows, k, KnnMode::Mean).unwrap();
        let lof = score_lof(&rows, k).unwrap();
        let want_lof = naive_lof(&rows, k);
        for i in 0..n {
            assert!((largest[i] - naive[i][k - 1]).abs() < 1e-9);
            let m = naive[i].iter().sum::<f64>() / k as f64;
            assert!((mean[i] - m).abs() < 1e-9);
            let tol = 1e-9 * want_lof[i].abs().max(1.0);
            assert!((lof[i] - want_lof[i]).abs() < tol, "seed {seed} row {i}: {} vs {}", lof[i], want_lof[i]);
        }
    }
}

/// Gauss-Jordan inverse with partial pivoting.
fn invert(mut a: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let d = a.len();
    let mut inv: Vec<Vec<f64>> = (0..d).map(|i| (0..d).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    for c in 0..d {
        let p = (c..d).max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs())).unwrap();
        a.swap(c, p);
        inv.swap(c, p);
        let piv = a[c][c];
        for j in 0..d {
            a[c][j] /= piv;
            inv[c][j] /= piv;
        }
        for r in 0..d {
            if r != c {
                let f = a[r][c];
                for j in 0..d {
                    a[r][j] -= f * a[c][j];
                    inv[r][j] -= f * inv[c][j];
                }
            }
        }
    }
    inv
}

#[test]
fn pca_orders_like_mahalanobis() {
    for seed in 0..10 {
        let mut r = rng(seed);
        let n = 120;
        // Correlated 3-D Gaussian-ish data.
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let (a, b, c): (f64, f64, f64) = (r.random(), r.random(), r.random());
                vec![a + b, 2.0 * a - c, b + c]
            })
            .collect();
        let d = 3;
        let mean: Vec<f64> = (0..d).map(|j| rows.iter().map(|x| x[j]).sum::<f64>() / n as f64).collect();
        let cov: Vec<Vec<f64>> = (0..d)
            .map(|a| {
                (0..d)
                    .map(|b| rows.iter().map(|x| (x[a] - mean[a]) * (x[b] - mean[b])).sum::<f64>() / (n - 1) as f64)
                    .collect()
            })
            .collect();
        let inv = invert(cov);
        let maha: Vec<f64> = rows
            .iter()
            .map(|x| {
                let c: Vec<f64> = (0..d).map(|j| x[j] - mean[j]).collect();
                (0..d).map(|a| (0..d).map(|b| c[a] * inv[a][b] * c[b]).sum::<f64>()).sum()
            })
            .collect();
        let pca = score_pca(&rows).unwrap().scores;
        let rho = spearman(&pca, &maha);
        assert!(rho > 0.9, "seed {seed}: spearman {rho}");
    }
}

#[test]
fn ocsvm_satisfies_kkt() {
    for seed in 0..5 {
        let rows = planted(seed, 27, 3, 6.0);
        let nu = 0.2;
        let m = fit_ocsvm(&rows, nu, None).unwrap();
        assert!(m.converged);
        let sum: f64 = m.alpha.iter().sum();
        assert!((sum - nu * rows.len() as f64).abs() < 1e-9);
        for (a, x) in m.alpha.iter().zip(&rows) {
            assert!((-1e-12..=1.0 + 1e-12).contains(a));
            let f = m.decision(x);
            if *a < 1e-12 {
                assert!(f >= -1e-3, "free-zero point inside margin: {f}");
            } else if *a > 1.0 - 1e-12 {
                assert!(f <= 1e-3, "bound point outside margin: {f}");
            } else {
                assert!(f.abs() <= 1e-3, "support vector off boundary: {f}");
            }
        }
    }
}

#[test]
fn normalization_and_ensemble_match_direct_formulas() {
    let mut r = rng(3);
    for _ in 0..50 {
        let n = r.random_range(3..40);
        let s: Vec<f64> = (0..n).map(|_| r.random::<f64>() * 100.0 - 50.0).collect();
        let (a, b) = (r.random::<f64>() * 5.0 + 0.1, r.random::<f64>() * 10.0 - 5.0);
        let moved: Vec<f64> = s.iter().map(|x| a * x + b).collect();
        let (ns, nm) = (normalize_scores(&s), normalize_scores(&moved));
        for (x, y) in ns.iter().zip(&nm) {
            assert!((x - y).abs() < 1e-9);
        }
        let lo = s.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for (x, y) in s.iter().zip(&ns) {
            assert!(((x - lo) / (hi - lo) - y).abs() < 1e-12);
        }

        let t: Vec<f64> = (0..n).map(|_| r.random()).collect();
        let u: Vec<f64> = (0..n).map(|_| r.random()).collect();
        let c = comprehensive_score(&ns, &t, &u).unwrap();
        for i in 0..n {
            assert!((c[i] - (ns[i] + t[i] + u[i]) / 3.0).abs() < 1e-12);
        }

        let cont = r.random_range(0.01..0.5);
        let ranking = rank_and_flag(&c, cont).unwrap();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&x, &y| c[y].partial_cmp(&c[x]).unwrap().then(x.cmp(&y)));
        assert_eq!(ranking.ranked, order);
        let m = (cont * n as f64 - 1e-9).ceil() as usize;
        assert_eq!(ranking.flagged, order[..m].iter().copied().collect::<BTreeSet<_>>());
    }
    assert_eq!(normalize_scores(&[2.0, 2.0]), vec![0.5, 0.5]);
}

#[test]
fn agreement_matches_counting() {
    let mut r = rng(11);
    for _ in 0..50 {
        let n = 30;
        let sets: BTreeMap<usize, BTreeSet<usize>> = (0..r.random_range(2..6))
            .map(|d| (d, (0..n).filter(|_| r.random_bool(0.2)).collect()))
            .collect();
        let got = detector_agreement(&sets).unwrap();
        let mut want: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
        for i in 0..n {
            let c = sets.values().filter(|s| s.contains(&i)).count();
            if c > 0 {
                want.entry(c).or_default().insert(i);
            }
        }
        assert_eq!(got, want);
    }
}

fn toy_trace(seed: u64, cycles: u64) -> Vec<TraceEvent> {
    generate_walks(&toy(), cycles, 50, seed).unwrap().events
}

#[test]
fn injection_splices_whole_sequences_and_keeps_originals() {
    for seed in 0..5 {
        let base = toy_trace(seed, 200_000);
        let specs = [
            InjectionSpec::new("b1", ["Ack", "Ack", "Ack"], 3.0),
            InjectionSpec::new("b2", ["GntE", "ReqE"], 2.0),
        ];
        let out = inject(&base, &specs, 10_000, seed).unwrap();
        let added: usize = out.splices.iter().map(|s| if s.bug_id == "b1" { 3 } else { 2 }).sum();
        assert_eq!(out.events.len(), base.len() + added);
        let spliced: BTreeSet<usize> = out
            .splices
            .iter()
            .flat_map(|s| s.position..s.position + if s.bug_id == "b1" { 3 } else { 2 })
            .collect();
        let kept: Vec<&TraceEvent> = (0..out.events.len()).filter(|i| !spliced.contains(i)).map(|i| &out.events[i]).collect();
        assert_eq!(kept, base.iter().collect::<Vec<_>>());
        for s in &out.splices {
            let seq = &specs.iter().find(|x| x.bug_id == s.bug_id).unwrap().sequence;
            let got: Vec<&str> = out.events[s.position..s.position + seq.len()].iter().map(|e| e.message.as_str()).collect();
            assert_eq!(got, seq.iter().map(String::as_str).collect::<Vec<_>>());
            assert!(out.labels.0[&(s.cycle / 10_000)].contains(&s.bug_id));
        }
        assert!(out.events.windows(2).all(|w| w[0].cycle <= w[1].cycle));
        let expect = (3.0f64 * base.last().unwrap().cycle as f64 / 1e5 + 3.0 / 1e5).round() as usize;
        assert_eq!(out.splices.iter().filter(|s| s.bug_id == "b1").count(), expect);
    }
}

#[test]
fn generated_walks_follow_each_instance_flow() {
    let ifl = toy();
    for seed in 0..5 {
        let g = generate_walks(&ifl, 50_000, 20, seed).unwrap();
        assert_eq!(g.events.len(), g.labels.len());
        let mut bounds = g.walk_starts.clone();
        bounds.push(g.events.len());
        for w in bounds.windows(2) {
            // Replay each component on its own flow.
            let mut at: Vec<usize> = ifl.components().iter().map(|c| c.flow().initial_states()[0]).collect();
            for &l in &g.labels[w[0]..w[1]] {
                let f = ifl.components()[l.component].flow();
                let e = f
                    .edges()
                    .iter()
                    .find(|e| e.src == at[l.component] && e.message == l.message)
                    .expect("walk takes an edge of its own flow");
                at[l.component] = e.dst;
                let atomics = at.iter().enumerate().filter(|&(i, &s)| ifl.components()[i].flow().is_atomic(s)).count();
                assert!(atomics <= 1);
            }
        }
        for (e, l) in g.events.iter().zip(&g.labels) {
            assert_eq!(e.message, ifl.resolve(*l).message);
        }
    }
}

#[test]
fn feature_rows_match_recount() {
    let events = toy_trace(4, 300_000);
    let (k, g) = (3, 20_000);
    let t = engineer(&events, k, g).unwrap();
    let mut buckets: BTreeMap<u64, Vec<Vec<&str>>> = BTreeMap::new();
    for w in events.windows(k) {
        let seq: Vec<&str> = w.iter().map(|e| e.message.as_str()).collect();
        for b in w[0].cycle / g..=w[k - 1].cycle / g {
            buckets.entry(b).or_default().push(seq.clone());
        }
    }
    assert_eq!(t.rows.len(), buckets.len());
    for (row, (w, seqs)) in t.rows.iter().zip(&buckets) {
        assert_eq!(row.window_index, *w);
        let mut counts: BTreeMap<&Vec<&str>, f64> = BTreeMap::new();
        for s in seqs {
            *counts.entry(s).or_default() += 1.0;
        }
        let n = seqs.len() as f64;
        let h: f64 = -counts.values().map(|c| c / n * (c / n).log2()).sum::<f64>();
        assert!((row.entropy - h).abs() < 1e-9);
        let mut tot = 0usize;
        for i in 0..seqs.len() {
            for j in i + 1..seqs.len() {
                tot += naive_levenshtein(&seqs[i], &seqs[j]);
            }
        }
        let pairs = seqs.len() * (seqs.len() - 1) / 2;
        let ld = if pairs == 0 { 0.0 } else { tot as f64 / pairs as f64 };
        assert!((row.mean_ldist - ld).abs() < 1e-9);
    }
    for a in &t.aggregates {
        assert!(aggregate_entropy(a) <= (a.len() as f64).log2() + 1e-12);
        assert!(aggregate_mean_ldist(a) <= k as f64);
    }
}

#[test]
fn sweep_sequence_counts_match_recount() {
    let events = toy_trace(9, 600_000);
    let cfg = DiagnosisConfig::default();
    let sweep = diagnose_sweep(&events, &cfg, 5).unwrap();
    assert_eq!(sweep.0.len(), 3);
    for rep in &sweep.0 {
        let total: usize = rep.sequence_counts.iter().sum();
        let spans: usize = events
            .windows(rep.k)
            .map(|w| (w[rep.k - 1].cycle / rep.g - w[0].cycle / rep.g + 1) as usize)
            .sum();
        assert_eq!(total, spans);
        let single = diagnose(&events, &DiagnosisConfig { k: rep.k, ..cfg.clone() }).unwrap();
        assert_eq!(&single, rep);
    }
}

#[test]
fn shuffled_row_order_permutes_neighbor_scores() {
    let rows = random_rows(5);
    let mut perm: Vec<usize> = (0..rows.len()).collect();
    perm.shuffle(&mut rng(1));
    let shuffled: Vec<Vec<f64>> = perm.iter().map(|&i| rows[i].clone()).collect();
    let a = score_lof(&rows, 4).unwrap();
    let b = score_lof(&shuffled, 4).unwrap();
    for (j, &i) in perm.iter().enumerate() {
        assert!((a[i] - b[j]).abs() < 1e-9);
    }
}
