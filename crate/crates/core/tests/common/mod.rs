//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

pub mod qa;

use std::collections::{BTreeMap, BTreeSet};

use eventcause::discovery::{Cpdag, GraphScore};
use eventcause::CausalGraph;

pub type Pair = (usize, usize);

fn acyclic(n: usize, edges: &[Pair]) -> bool {
    // repeatedly strip sinks
    let mut alive = vec![true; n];
    for _ in 0..n {
        let Some(v) = (0..n).find(|&v| alive[v] && !edges.iter().any(|&(a, b)| a == v && alive[b])) else {
            return false;
        };
        alive[v] = false;
    }
    true
}

fn v_structures(n: usize, edges: &[Pair]) -> BTreeSet<(usize, usize, usize)> {
    let has = |a: usize, b: usize| edges.contains(&(a, b));
    let mut out = BTreeSet::new();
    for c in 0..n {
        for a in 0..n {
            for b in a + 1..n {
                if a != c && b != c && has(a, c) && has(b, c) && !has(a, b) && !has(b, a) {
                    out.insert((a, c, b));
                }
            }
        }
    }
    out
}

type Pattern = (BTreeSet<Pair>, BTreeSet<Pair>);

/// Directed and undirected edges of the equivalence class of every acyclic
/// orientation of `skel`, found by grouping all orientations by their
/// v-structures and keeping the orientations common to a whole class.
fn skeleton_classes(n: usize, skel: &[Pair]) -> Vec<(Vec<Pair>, Pattern)> {
    type VStructures = BTreeSet<(usize, usize, usize)>;
    let mut classes: BTreeMap<VStructures, Vec<Vec<Pair>>> = BTreeMap::new();
    for orient in 0u32..1 << skel.len() {
        let edges: Vec<Pair> = skel
            .iter()
            .enumerate()
            .map(|(k, &(a, b))| if orient >> k & 1 == 1 { (b, a) } else { (a, b) })
            .collect();
        if acyclic(n, &edges) {
            classes.entry(v_structures(n, &edges)).or_default().push(edges);
        }
    }
    let mut out = Vec::new();
    for members in classes.values() {
        let common: BTreeSet<Pair> = members[0]
            .iter()
            .copied()
            .filter(|e| members.iter().all(|m| m.contains(e)))
            .collect();
        let undirected: BTreeSet<Pair> = skel
            .iter()
            .map(|&(a, b)| (a.min(b), a.max(b)))
            .filter(|&(a, b)| !common.contains(&(a, b)) && !common.contains(&(b, a)))
            .collect();
        for m in members {
            out.push((m.clone(), (common.clone(), undirected.clone())));
        }
    }
    out
}

/// Every DAG on `n` nodes with its equivalence-class pattern.
pub fn all_dags_with_patterns(n: usize) -> Vec<(Vec<Pair>, Pattern)> {
    let pairs: Vec<Pair> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    (0u32..1 << pairs.len())
        .flat_map(|mask| {
            let skel: Vec<Pair> = pairs
                .iter()
                .enumerate()
                .filter(|(k, _)| mask >> k & 1 == 1)
                .map(|(_, &p)| p)
                .collect();
            skeleton_classes(n, &skel)
        })
        .collect()
}

/// Pattern of one DAG.
pub fn pattern_of(g: &CausalGraph) -> Pattern {
    let edges: BTreeSet<Pair> = g.edges().collect();
    let skel: Vec<Pair> = edges.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
    skeleton_classes(g.node_count(), &skel)
        .into_iter()
        .find(|(m, _)| m.iter().copied().collect::<BTreeSet<_>>() == edges)
        .expect("the DAG is one of its own orientations")
        .1
}

pub fn graph(n: usize, edges: &[Pair]) -> CausalGraph {
    let mut g = CausalGraph::with_indexed_nodes(n);
    for &(a, b) in edges {
        g.add_edge(a, b).unwrap();
    }
    g
}

/// Missing plus extra plus wrongly marked adjacencies, with edges compared
/// by node name. Precision counts every predicted edge.
pub fn score_oracle(pred: &Cpdag, truth: &CausalGraph) -> GraphScore {
    let name = |ids: &[eventcause::ClusterId], i: usize| ids[i].as_str().to_owned();
    let pn = pred.nodes();
    let directed: BTreeSet<(String, String)> = pred
        .directed()
        .iter()
        .map(|&(a, b)| (name(pn, a), name(pn, b)))
        .collect();
    let undirected: BTreeSet<BTreeSet<String>> = pred
        .undirected()
        .iter()
        .map(|&(a, b)| BTreeSet::from([name(pn, a), name(pn, b)]))
        .collect();
    let truth_edges: BTreeSet<(String, String)> = truth
        .edge_ids()
        .map(|(a, b)| (a.as_str().to_owned(), b.as_str().to_owned()))
        .collect();
    let skel = |d: &BTreeSet<(String, String)>| -> BTreeSet<BTreeSet<String>> {
        d.iter().map(|(a, b)| BTreeSet::from([a.clone(), b.clone()])).collect()
    };
    let pred_skel: BTreeSet<_> = skel(&directed).union(&undirected).cloned().collect();
    let true_skel = skel(&truth_edges);
    let missing = true_skel.difference(&pred_skel).count();
    let extra = pred_skel.difference(&true_skel).count();
    let wrong_mark = truth_edges
        .iter()
        .filter(|(a, b)| {
            pred_skel.contains(&BTreeSet::from([a.clone(), b.clone()])) && !directed.contains(&(a.clone(), b.clone()))
        })
        .count();
    let tp = truth_edges.intersection(&directed).count() as f64;
    let precision = if pred_skel.is_empty() {
        0.0
    } else {
        tp / pred_skel.len() as f64
    };
    let recall = if truth_edges.is_empty() {
        0.0
    } else {
        tp / truth_edges.len() as f64
    };
    let f1 = if tp == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    GraphScore {
        shd: missing + extra + wrong_mark,
        precision,
        recall,
        f1,
    }
}

pub fn cpdag_sets(c: &Cpdag) -> Pattern {
    (c.directed().clone(), c.undirected().clone())
}

/// Pair-counting ARI over every unordered pair of items.
pub fn ari_oracle(p: &[u8], t: &[u8]) -> f64 {
    let n = p.len();
    let (mut a, mut b, mut c, mut d) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        for j in i + 1..n {
            match (p[i] == p[j], t[i] == t[j]) {
                (true, true) => a += 1.0,
                (true, false) => b += 1.0,
                (false, true) => c += 1.0,
                (false, false) => d += 1.0,
            }
        }
    }
    let pairs = a + b + c + d;
    let cross = (a + b) * (a + c) + (c + d) * (b + d);
    if pairs * pairs == cross {
        return 1.0;
    }
    (pairs * (a + d) - cross) / (pairs * pairs - cross)
}

fn blocks(l: &[u8]) -> Vec<BTreeSet<usize>> {
    let mut m: BTreeMap<u8, BTreeSet<usize>> = BTreeMap::new();
    for (i, &x) in l.iter().enumerate() {
        m.entry(x).or_default().insert(i);
    }
    m.into_values().collect()
}

/// NMI (arithmetic mean) from explicit block intersections.
pub fn nmi_oracle(p: &[u8], t: &[u8]) -> f64 {
    let n = p.len() as f64;
    let (bp, bt) = (blocks(p), blocks(t));
    let h = |bs: &[BTreeSet<usize>]| -> f64 {
        bs.iter()
            .map(|b| {
                let q = b.len() as f64 / n;
                -q * q.ln()
            })
            .sum()
    };
    let (hp, ht) = (h(&bp), h(&bt));
    if hp == 0.0 && ht == 0.0 {
        return 1.0;
    }
    let mut mi = 0.0;
    for u in &bp {
        for v in &bt {
            let k = u.intersection(v).count() as f64;
            if k > 0.0 {
                mi += k / n * (n * k / (u.len() as f64 * v.len() as f64)).ln();
            }
        }
    }
    (mi / (0.5 * (hp + ht))).clamp(0.0, 1.0)
}

/// Alpha as 1 - Do/De with both disagreements counted pair by pair.
pub fn alpha_oracle(units: &[Vec<Option<u8>>]) -> Option<f64> {
    let pairable: Vec<Vec<u8>> = units
        .iter()
        .map(|u| u.iter().flatten().copied().collect::<Vec<_>>())
        .filter(|v| v.len() >= 2)
        .collect();
    let all: Vec<u8> = pairable.iter().flatten().copied().collect();
    let n = all.len() as f64;
    if n < 2.0 {
        return None;
    }
    let mut d_o = 0.0;
    for u in &pairable {
        let m = u.len() as f64;
        for i in 0..u.len() {
            for j in 0..u.len() {
                if i != j && u[i] != u[j] {
                    d_o += 1.0 / (m - 1.0);
                }
            }
        }
    }
    d_o /= n;
    let mut d_e = 0.0;
    for i in 0..all.len() {
        for j in 0..all.len() {
            if i != j && all[i] != all[j] {
                d_e += 1.0;
            }
        }
    }
    d_e /= n * (n - 1.0);
    Some(if d_e == 0.0 { 1.0 } else { 1.0 - d_o / d_e })
}
