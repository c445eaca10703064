use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::task::SubGroup;
use crate::error::{Error, Result};
use crate::ids::MentionId;

/// One annotator's sub-clustering of a cluster.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subclustering {
    pub groups: Vec<SubGroup>,
    #[serde(default)]
    pub outliers: BTreeSet<MentionId>,
}

impl Subclustering {
    pub fn members(&self) -> BTreeSet<&MentionId> {
        self.groups
            .iter()
            .flat_map(|g| &g.members)
            .chain(&self.outliers)
            .collect()
    }

    fn group_of(&self, m: &MentionId) -> Option<&SubGroup> {
        self.groups.iter().find(|g| g.members.contains(m))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnifiedGroup {
    pub members: BTreeSet<MentionId>,
    pub topic: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Unified {
    pub groups: Vec<UnifiedGroup>,
    pub outliers: BTreeSet<MentionId>,
}

/// Per-batch seed so each batch can be replayed on its own.
pub fn batch_seed(seed: u64, batch: usize) -> u64 {
    seed ^ (batch as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Merges two sub-clusterings. A random unprocessed event becomes a
/// centroid and takes every unprocessed event that both annotators grouped
/// with it. A centroid left alone becomes an outlier.
pub fn unify_subclusterings(r1: &Subclustering, r2: &Subclustering, seed: u64) -> Result<Unified> {
    let members = r1.members();
    if members != r2.members() {
        return Err(Error::Invalid("sub-clusterings cover different members".into()));
    }
    let mut remaining: Vec<MentionId> = members.into_iter().cloned().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Unified::default();
    while !remaining.is_empty() {
        let centroid = remaining[rng.gen_range(0..remaining.len())].clone();
        let (g1, g2) = (r1.group_of(&centroid), r2.group_of(&centroid));
        let group: BTreeSet<MentionId> = match (g1, g2) {
            (Some(a), Some(b)) => remaining
                .iter()
                .filter(|m| **m == centroid || (a.members.contains(*m) && b.members.contains(*m)))
                .cloned()
                .collect(),
            _ => BTreeSet::from([centroid.clone()]),
        };
        remaining.retain(|m| !group.contains(m));
        if group.len() < 2 {
            out.outliers.insert(centroid);
            continue;
        }
        let (a, b) = (g1.expect("grouped"), g2.expect("grouped"));
        out.groups.push(UnifiedGroup {
            members: group,
            topic: format!("TOPIC : {} / {}", a.topic, b.topic),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sc(groups: &[(&[&str], &str)], outliers: &[&str]) -> Subclustering {
        Subclustering {
            groups: groups
                .iter()
                .map(|(ms, t)| SubGroup {
                    members: ms.iter().map(|m| MentionId::from(*m)).collect(),
                    topic: (*t).to_owned(),
                })
                .collect(),
            outliers: outliers.iter().map(|m| MentionId::from(*m)).collect(),
        }
    }

    fn ids(ms: &[&str]) -> BTreeSet<MentionId> {
        ms.iter().map(|m| MentionId::from(*m)).collect()
    }

    #[test]
    fn agreement_is_identity() {
        let r = sc(&[(&["a", "b"], "x"), (&["c", "d"], "y")], &[]);
        let u = unify_subclusterings(&r, &r, 3).unwrap();
        let mut groups: Vec<_> = u.groups.iter().map(|g| (g.members.clone(), g.topic.clone())).collect();
        groups.sort();
        assert_eq!(
            groups,
            [
                (ids(&["a", "b"]), "TOPIC : x / x".to_owned()),
                (ids(&["c", "d"]), "TOPIC : y / y".to_owned())
            ]
        );
        assert!(u.outliers.is_empty());
    }

    #[test]
    fn partial_agreement() {
        let r1 = sc(&[(&["a", "b", "c"], "t1")], &[]);
        let r2 = sc(&[(&["a", "b"], "t2"), (&["c"], "t3")], &[]);
        // any centroid choice yields the same result here
        for seed in 0..10 {
            let u = unify_subclusterings(&r1, &r2, seed).unwrap();
            assert_eq!(u.groups.len(), 1);
            assert_eq!(u.groups[0].members, ids(&["a", "b"]));
            assert_eq!(u.groups[0].topic, "TOPIC : t1 / t2");
            assert_eq!(u.outliers, ids(&["c"]));
        }
    }

    #[test]
    fn outlier_and_mismatch() {
        let r1 = sc(&[(&["a", "b"], "t")], &[]);
        let r2 = sc(&[], &["a", "b"]);
        let u = unify_subclusterings(&r1, &r2, 0).unwrap();
        assert!(u.groups.is_empty());
        assert_eq!(u.outliers, ids(&["a", "b"]));
        assert!(unify_subclusterings(&r1, &sc(&[(&["a"], "t")], &[]), 0).is_err());
    }
}
