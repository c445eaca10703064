use std::collections::BTreeSet;

use super::items::{CgHint, Direction};
use crate::clustering::ClusterSet;
use crate::graph::CausalGraph;
use crate::lemma::normalize_mention;

/// Minimum score for a non-exact topic match.
pub const HINT_THRESHOLD: f64 = 0.7;

/// Similarity between free-text abstractions, in [0, 1].
pub trait TextSimilarity {
    fn score(&self, a: &str, b: &str) -> f64;
}

/// Dice coefficient over the sets of normalized tokens.
#[derive(Clone, Copy, Debug, Default)]
pub struct TokenDice;

fn tokens(s: &str) -> BTreeSet<String> {
    normalize_mention(s)
        .map(|n| {
            n.split_whitespace()
                .map(|t| t.trim_matches(|c: char| !c.is_alphanumeric()).to_owned())
                .filter(|t| !t.is_empty())
                .collect()
        })
        .unwrap_or_default()
}

impl TextSimilarity for TokenDice {
    fn score(&self, a: &str, b: &str) -> f64 {
        let (ta, tb) = (tokens(a), tokens(b));
        if ta.is_empty() || tb.is_empty() {
            return 0.0;
        }
        2.0 * ta.intersection(&tb).count() as f64 / (ta.len() + tb.len()) as f64
    }
}

/// Maps `target` to a cluster topic and returns one graph neighbor of that
/// cluster in `direction`. Exact normalized matches win outright; otherwise
/// the best score at or above [`HINT_THRESHOLD`]. Ties go to the smaller
/// cluster id, and so does the choice among several neighbors.
pub fn retrieve_cg_hint(
    target: &str,
    direction: Direction,
    cs: &ClusterSet,
    g: &CausalGraph,
    scorer: &dyn TextSimilarity,
) -> Option<CgHint> {
    let norm = normalize_mention(target).ok()?;
    let mut topics: Vec<_> = cs
        .clusters
        .iter()
        .filter_map(|c| c.topic.as_deref().map(|t| (&c.cluster_id, t)))
        .collect();
    topics.sort_by(|a, b| a.0.cmp(b.0));

    let exact = topics
        .iter()
        .find(|(_, t)| normalize_mention(t).is_ok_and(|n| n == norm));
    let chosen = exact.copied().or_else(|| {
        let mut best: Option<(f64, _)> = None;
        for &(id, t) in &topics {
            let s = scorer.score(target, t);
            if s >= HINT_THRESHOLD && best.is_none_or(|(b, _)| s > b) {
                best = Some((s, (id, t)));
            }
        }
        best.map(|(_, c)| c)
    })?;

    let (id, topic) = chosen;
    let node = g.node_index(id).ok()?;
    let neighbours = match direction {
        Direction::Cause => g.parents(node),
        Direction::Effect => g.children(node),
    };
    let related = neighbours.into_iter().map(|n| &g.nodes()[n]).min()?;
    let related_topic = cs.get(related)?.topic.clone()?;
    Some(CgHint {
        source: id.clone(),
        source_topic: topic.to_owned(),
        related: related.clone(),
        related_topic,
        direction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::Cluster;
    use crate::ids::ClusterId;

    fn cset(topics: &[(&str, &str)]) -> ClusterSet {
        ClusterSet {
            seed: 0,
            clusters: topics
                .iter()
                .map(|(id, t)| Cluster {
                    cluster_id: ClusterId::new(*id),
                    topic: Some((*t).to_owned()),
                    members: BTreeSet::new(),
                })
                .collect(),
            outliers: BTreeSet::new(),
        }
    }

    #[test]
    fn exact_match_returns_the_edge() {
        let cs = cset(&[("c1", "rain falls"), ("c2", "ground gets wet")]);
        let ids: Vec<ClusterId> = cs.clusters.iter().map(|c| c.cluster_id.clone()).collect();
        let g = CausalGraph::from_edges(ids, [("c1", "c2")]).unwrap();
        let h = retrieve_cg_hint("Ground gets wet", Direction::Cause, &cs, &g, &TokenDice).unwrap();
        assert_eq!(h.related_topic, "rain falls");
        assert_eq!(h.source.as_str(), "c2");
        assert!(retrieve_cg_hint("ground gets wet", Direction::Effect, &cs, &g, &TokenDice).is_none());
    }

    #[test]
    fn no_match_is_none() {
        let cs = cset(&[("c1", "rain falls"), ("c2", "ground gets wet")]);
        let ids: Vec<ClusterId> = cs.clusters.iter().map(|c| c.cluster_id.clone()).collect();
        let g = CausalGraph::from_edges(ids, [("c1", "c2")]).unwrap();
        assert!(retrieve_cg_hint("stock market crash", Direction::Cause, &cs, &g, &TokenDice).is_none());
    }

    #[test]
    fn tie_goes_to_smaller_cluster_id() {
        // Both topics score 0.8 against the target.
        let cs = cset(&[("b", "dog barks loudly"), ("a", "dog barks softly"), ("z", "cat wakes")]);
        let ids: Vec<ClusterId> = cs.clusters.iter().map(|c| c.cluster_id.clone()).collect();
        let g = CausalGraph::from_edges(ids, [("a", "z"), ("b", "z")]).unwrap();
        let target = "dog barks";
        assert_eq!(TokenDice.score(target, "dog barks loudly"), 0.8);
        let h = retrieve_cg_hint(target, Direction::Effect, &cs, &g, &TokenDice).unwrap();
        assert_eq!(h.source.as_str(), "a");
    }
}
