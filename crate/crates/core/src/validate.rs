//! Mechanical checks of the quality criteria on clustering and graph
//! artifacts. Criteria 2 and 4 need human judgment and are only listed.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::clustering::ClusterSet;
use crate::corpus::MentionCausalSet;
use crate::graph::CausalGraph;
use crate::ids::MentionId;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Violation {
    pub criterion: u8,
    pub subject: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "criterion {}\t{}\t{}", self.criterion, self.subject, self.message)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    /// Criteria left to reviewers.
    pub human_judgment: Vec<u8>,
    /// Findings that break no criterion but deserve a look.
    pub notes: Vec<String>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn criteria_violated(&self) -> BTreeSet<u8> {
        self.violations.iter().map(|v| v.criterion).collect()
    }
}

/// Criterion 1: every cluster carries exactly one non-empty topic and
/// every mention sits in at most one cluster (or the outlier set); with
/// `universe`, every mention is placed. Criterion 3: every graph node has
/// an incident edge. Criterion 5: each mention relation across clusters
/// appears as a cluster edge, none falls inside a cluster, and no pair of
/// clusters is linked both ways.
pub fn validate(
    cs: &ClusterSet,
    g: &CausalGraph,
    causal: Option<&MentionCausalSet>,
    universe: Option<&BTreeSet<MentionId>>,
) -> ValidationReport {
    let mut v = Vec::new();
    let mut push = |criterion: u8, subject: &dyn fmt::Display, message: String| {
        v.push(Violation {
            criterion,
            subject: subject.to_string(),
            message,
        })
    };

    for c in &cs.clusters {
        if c.topic.as_deref().is_none_or(|t| t.trim().is_empty()) {
            push(1, &c.cluster_id, "cluster has no topic".into());
        }
        if c.members.is_empty() {
            push(1, &c.cluster_id, "cluster has no members".into());
        }
    }
    let mut seen = BTreeSet::new();
    for m in cs.clusters.iter().flat_map(|c| &c.members).chain(&cs.outliers) {
        if !seen.insert(m) {
            push(1, m, "mention placed more than once".into());
        }
    }
    if let Some(u) = universe {
        for m in u.iter().filter(|m| !seen.contains(m)) {
            push(1, m, "mention not placed".into());
        }
        for m in seen.iter().filter(|m| !u.contains(**m)) {
            push(1, m, "unknown mention".into());
        }
    }

    let cluster_ids: BTreeSet<_> = cs.clusters.iter().map(|c| &c.cluster_id).collect();
    for n in g.nodes() {
        if !cluster_ids.contains(n) {
            push(5, n, "graph node is not a cluster".into());
        }
    }
    for c in &cs.clusters {
        match g.node_index(&c.cluster_id) {
            Ok(i) if !g.parents(i).is_empty() || !g.children(i).is_empty() => {}
            Ok(_) => push(3, &c.cluster_id, "cluster has no causal edge".into()),
            Err(_) => push(3, &c.cluster_id, "cluster missing from the graph".into()),
        }
    }

    if let Some(causal) = causal {
        let assign = cs.assignment();
        let mut intra = BTreeSet::new();
        let mut missing = BTreeSet::new();
        for (a, b) in causal.pairs() {
            let (Some(&i), Some(&j)) = (assign.get(a), assign.get(b)) else {
                continue;
            };
            let (ci, cj) = (&cs.clusters[i].cluster_id, &cs.clusters[j].cluster_id);
            if i == j {
                intra.insert(ci);
                continue;
            }
            let present = matches!((g.node_index(ci), g.node_index(cj)), (Ok(x), Ok(y)) if g.has_edge(x, y));
            if !present {
                missing.insert((ci, cj));
            }
        }
        for c in intra {
            push(5, c, "mention relation inside the cluster".into());
        }
        for (a, b) in missing {
            push(5, &format!("{a}->{b}"), "mention relation not lifted".into());
        }
    }
    for (a, b) in g.edge_ids() {
        if a < b && g.has_edge(g.node_index(b).expect("node"), g.node_index(a).expect("node")) {
            push(5, &format!("{a}<->{b}"), "clusters cause each other".into());
        }
    }

    let mut notes = Vec::new();
    if !g.is_acyclic() {
        notes.push("graph has a directed cycle".to_owned());
    }
    v.sort();
    ValidationReport {
        violations: v,
        human_judgment: vec![2, 4],
        notes,
    }
}
