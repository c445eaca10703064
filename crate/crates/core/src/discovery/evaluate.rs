use serde::{Deserialize, Serialize};

use super::cpdag::Cpdag;
use crate::error::{Error, Result};
use crate::graph::CausalGraph;

/// How a predicted undirected edge is credited against a true directed one.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeCredit {
    /// Only exact directed matches are true positives.
    #[default]
    ExactDirected,
    /// An undirected edge over a true adjacency counts 0.5.
    HalfUndirected,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphScore {
    pub shd: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum PairState {
    None,
    Forward,
    Backward,
    Undirected,
}

/// Structural Hamming distance and edge precision/recall against a true DAG.
/// Every node pair whose state differs (missing, extra, reversed, or
/// undirected versus directed) costs one.
pub fn evaluate_graph(pred: &Cpdag, truth: &CausalGraph, credit: EdgeCredit) -> Result<GraphScore> {
    let n = truth.node_count();
    let mut map = Vec::with_capacity(pred.nodes().len());
    for id in pred.nodes() {
        map.push(
            truth
                .node_index(id)
                .map_err(|_| Error::Invalid(format!("node `{id}` is not in the true graph")))?,
        );
    }
    if pred.nodes().len() != n {
        return Err(Error::Invalid(
            "predicted and true graphs have different node sets".into(),
        ));
    }
    let mut state = vec![PairState::None; n * n];
    for &(a, b) in pred.directed() {
        let (a, b) = (map[a], map[b]);
        state[a.min(b) * n + a.max(b)] = if a < b { PairState::Forward } else { PairState::Backward };
    }
    for &(a, b) in pred.undirected() {
        let (a, b) = (map[a], map[b]);
        state[a.min(b) * n + a.max(b)] = PairState::Undirected;
    }

    let mut shd = 0;
    let mut tp = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let want = match (truth.has_edge(i, j), truth.has_edge(j, i)) {
                (true, false) => PairState::Forward,
                (false, true) => PairState::Backward,
                (false, false) => PairState::None,
                (true, true) => return Err(Error::Invalid("true graph has a 2-cycle".into())),
            };
            let got = state[i * n + j];
            if got != want {
                shd += 1;
            }
            if want != PairState::None {
                if got == want {
                    tp += 1.0;
                } else if got == PairState::Undirected && credit == EdgeCredit::HalfUndirected {
                    tp += 0.5;
                }
            }
        }
    }
    let n_pred = pred.edge_count() as f64;
    let n_true = truth.edge_count() as f64;
    let precision = if n_pred > 0.0 { tp / n_pred } else { 0.0 };
    let recall = if n_true > 0.0 { tp / n_true } else { 0.0 };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(GraphScore {
        shd,
        precision,
        recall,
        f1,
    })
}

/// Scores `pred` against the equivalence-class pattern `truth`: an edge is
/// a true positive when both graphs mark that pair the same way, directed
/// or undirected. Unlike [`evaluate_graph`] this does not penalize edges
/// that no method could orient.
pub fn evaluate_cpdag(pred: &Cpdag, truth: &Cpdag) -> Result<GraphScore> {
    let n = truth.nodes().len();
    if pred.nodes().len() != n {
        return Err(Error::Invalid(
            "predicted and true graphs have different node sets".into(),
        ));
    }
    let index: std::collections::HashMap<_, _> = truth.nodes().iter().enumerate().map(|(i, id)| (id, i)).collect();
    let mut map = Vec::with_capacity(n);
    for id in pred.nodes() {
        map.push(
            *index
                .get(id)
                .ok_or_else(|| Error::Invalid(format!("node `{id}` is not in the true graph")))?,
        );
    }
    let states = |c: &Cpdag, map: &dyn Fn(usize) -> usize| {
        let mut st = vec![PairState::None; n * n];
        for &(a, b) in c.directed() {
            let (a, b) = (map(a), map(b));
            st[a.min(b) * n + a.max(b)] = if a < b { PairState::Forward } else { PairState::Backward };
        }
        for &(a, b) in c.undirected() {
            let (a, b) = (map(a), map(b));
            st[a.min(b) * n + a.max(b)] = PairState::Undirected;
        }
        st
    };
    let got = states(pred, &|i| map[i]);
    let want = states(truth, &|i| i);
    let mut shd = 0;
    let mut tp = 0.0;
    for (g, w) in got.iter().zip(&want) {
        if g != w {
            shd += 1;
        } else if *w != PairState::None {
            tp += 1.0;
        }
    }
    let n_pred = pred.edge_count() as f64;
    let n_true = truth.edge_count() as f64;
    let precision = if n_pred > 0.0 { tp / n_pred } else { 0.0 };
    let recall = if n_true > 0.0 { tp / n_true } else { 0.0 };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(GraphScore {
        shd,
        precision,
        recall,
        f1,
    })
}
