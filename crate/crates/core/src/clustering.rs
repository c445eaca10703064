//! Phase-1 abstraction extraction.
//!
//! Mentions are grouped by a pivot-based correlation clustering seeded with
//! annotated cause/effect pairs, small incoherent clusters are pruned, and
//! clusters are split until they are causally consistent:
//!
//! 1. no two members of a cluster are annotated as cause and effect, and
//! 2. between any two clusters annotations point in at most one direction.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{MentionCausalSet, StoryCollection};
use crate::error::{Error, Result};
use crate::ids::{ClusterId, MentionId};
use crate::lemma::normalize_mention;
use crate::similarity::SimilarityMatrix;

pub const DEFAULT_THRESHOLD: f64 = 0.70;
pub const DEFAULT_MIN_SIZE: usize = 10;
pub const DEFAULT_SIM_FLOOR: f64 = 0.50;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cluster {
    pub cluster_id: ClusterId,
    #[serde(default)]
    pub topic: Option<String>,
    pub members: BTreeSet<MentionId>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterSet {
    pub seed: u64,
    pub clusters: Vec<Cluster>,
    #[serde(default)]
    pub outliers: BTreeSet<MentionId>,
}

impl ClusterSet {
    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    /// Mention → index into `clusters`. Outliers are absent.
    pub fn assignment(&self) -> HashMap<&MentionId, usize> {
        let mut out = HashMap::new();
        for (i, c) in self.clusters.iter().enumerate() {
            for m in &c.members {
                out.insert(m, i);
            }
        }
        out
    }

    pub fn position(&self, id: &ClusterId) -> Option<usize> {
        self.clusters.iter().position(|c| &c.cluster_id == id)
    }

    pub fn get(&self, id: &ClusterId) -> Option<&Cluster> {
        self.clusters.iter().find(|c| &c.cluster_id == id)
    }

    /// Every mention appears exactly once across clusters and outliers, and
    /// the union equals `universe`. Cluster ids are unique and no cluster is empty.
    pub fn check_partition(&self, universe: &BTreeSet<MentionId>) -> Result<()> {
        let mut seen: HashSet<&MentionId> = HashSet::new();
        let mut ids: HashSet<&ClusterId> = HashSet::new();
        for c in &self.clusters {
            if !ids.insert(&c.cluster_id) {
                return Err(Error::DuplicateId {
                    kind: "cluster",
                    id: c.cluster_id.to_string(),
                });
            }
            if c.members.is_empty() {
                return Err(Error::Invalid(format!("cluster `{}` is empty", c.cluster_id)));
            }
        }
        for m in self
            .clusters
            .iter()
            .flat_map(|c| c.members.iter())
            .chain(self.outliers.iter())
        {
            if !seen.insert(m) {
                return Err(Error::Invalid(format!("mention `{m}` assigned twice")));
            }
            if !universe.contains(m) {
                return Err(Error::unknown("mention", m));
            }
        }
        if let Some(missing) = universe.iter().find(|m| !seen.contains(m)) {
            return Err(Error::Invalid(format!("mention `{missing}` is unassigned")));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("cluster set serializes");
        s.push('\n');
        s
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(f);
        w.write_all(self.to_json().as_bytes())
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_reader(BufReader::new(f)).map_err(|e| Error::parse(e.line(), e.to_string()))
    }

    fn fresh_id(&self, base: &ClusterId, taken: &mut HashSet<ClusterId>) -> ClusterId {
        let mut k = 1;
        loop {
            let id = ClusterId::new(format!("{base}.{k}"));
            if !taken.contains(&id) {
                taken.insert(id.clone());
                return id;
            }
            k += 1;
        }
    }
}

/// Pivot-based correlation clustering.
///
/// Each round draws a random annotated cause/effect pair among the still
/// unassigned mentions and uses both events as pivots (a single random pivot
/// once no such pair is left). Every unassigned mention whose similarity to a
/// pivot reaches `threshold` joins that pivot; a mention above the threshold
/// for both joins the more similar pivot, ties going to the smaller pivot id.
/// Pivots that attract nobody become outliers.
pub fn pivot_cluster(
    mentions: &BTreeSet<MentionId>,
    s: &SimilarityMatrix,
    causal: &MentionCausalSet,
    seed: u64,
    threshold: f64,
) -> Result<ClusterSet> {
    if mentions.is_empty() {
        return Err(Error::Empty("mention set"));
    }
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::Invalid(format!("threshold {threshold} not in (0, 1)")));
    }
    let mut index = Vec::with_capacity(mentions.len());
    for m in mentions {
        index.push(s.index_of(m).ok_or_else(|| Error::unknown("mention", m))?);
    }
    let pos: HashMap<&MentionId, usize> = mentions.iter().enumerate().map(|(i, m)| (m, i)).collect();
    let ids: Vec<&MentionId> = mentions.iter().collect();

    let mut pairs: Vec<(usize, usize)> = causal
        .pairs()
        .filter_map(|(c, e)| Some((*pos.get(c)?, *pos.get(e)?)))
        .collect();
    let mut unassigned: BTreeSet<usize> = (0..ids.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = ClusterSet {
        seed,
        ..Default::default()
    };

    while !unassigned.is_empty() {
        pairs.retain(|(c, e)| unassigned.contains(c) && unassigned.contains(e));
        let pivots: Vec<usize> = if pairs.is_empty() {
            let k = rng.gen_range(0..unassigned.len());
            vec![*unassigned.iter().nth(k).expect("index in range")]
        } else {
            let (c, e) = pairs[rng.gen_range(0..pairs.len())];
            vec![c, e]
        };
        for p in &pivots {
            unassigned.remove(p);
        }
        let mut groups: Vec<Vec<usize>> = pivots.iter().map(|&p| vec![p]).collect();
        let mut taken = Vec::new();
        for &m in &unassigned {
            let mut best: Option<(usize, f64)> = None;
            for (k, &p) in pivots.iter().enumerate() {
                let sim = s.at(index[p], index[m]);
                if sim < threshold {
                    continue;
                }
                best = match best {
                    None => Some((k, sim)),
                    Some((bk, bs)) => {
                        if sim > bs || (sim == bs && ids[p] < ids[pivots[bk]]) {
                            Some((k, sim))
                        } else {
                            Some((bk, bs))
                        }
                    }
                };
            }
            if let Some((k, _)) = best {
                groups[k].push(m);
                taken.push(m);
            }
        }
        for m in taken {
            unassigned.remove(&m);
        }
        for g in groups {
            if g.len() == 1 {
                out.outliers.insert(ids[g[0]].clone());
            } else {
                out.clusters.push(Cluster {
                    cluster_id: ClusterId::numbered(out.clusters.len()),
                    topic: None,
                    members: g.into_iter().map(|i| ids[i].clone()).collect(),
                });
            }
        }
    }
    Ok(out)
}

fn max_pairwise(members: &BTreeSet<MentionId>, s: &SimilarityMatrix) -> Result<f64> {
    let idx: Vec<usize> = members
        .iter()
        .map(|m| s.index_of(m).ok_or_else(|| Error::unknown("mention", m)))
        .collect::<Result<_>>()?;
    let mut best = 0.0f64;
    for (a, &i) in idx.iter().enumerate() {
        for &j in &idx[a + 1..] {
            best = best.max(s.at(i, j));
        }
    }
    Ok(best)
}

/// Drops clusters that are both small (`< min_size`) and incoherent (maximum
/// pairwise similarity `< sim_floor`); their members become outliers.
pub fn prune_clusters(cs: ClusterSet, s: &SimilarityMatrix, min_size: usize, sim_floor: f64) -> Result<ClusterSet> {
    let mut out = ClusterSet {
        seed: cs.seed,
        clusters: Vec::with_capacity(cs.clusters.len()),
        outliers: cs.outliers,
    };
    for c in cs.clusters {
        if c.members.len() < min_size && max_pairwise(&c.members, s)? < sim_floor {
            out.outliers.extend(c.members);
        } else {
            out.clusters.push(c);
        }
    }
    Ok(out)
}

/// Splits a member list into groups with no annotated pair inside a group.
/// Members are placed first-fit in iteration order.
fn split_intra(members: &BTreeSet<MentionId>, causal: &MentionCausalSet) -> Vec<BTreeSet<MentionId>> {
    let mut parts: Vec<BTreeSet<MentionId>> = Vec::new();
    for m in members {
        match parts.iter_mut().find(|p| p.iter().all(|x| !causal.linked(x, m))) {
            Some(p) => {
                p.insert(m.clone());
            }
            None => parts.push(BTreeSet::from([m.clone()])),
        }
    }
    parts
}

/// Inter-cluster annotated links keyed by `(cause cluster, effect cluster)`.
fn cluster_links<'a>(
    assign: &HashMap<&MentionId, usize>,
    causal: &'a MentionCausalSet,
) -> BTreeMap<(usize, usize), Vec<(&'a MentionId, &'a MentionId)>> {
    let mut links: BTreeMap<(usize, usize), Vec<_>> = BTreeMap::new();
    for (c, e) in causal.pairs() {
        if let (Some(&i), Some(&j)) = (assign.get(c), assign.get(e)) {
            if i != j {
                links.entry((i, j)).or_default().push((c, e));
            }
        }
    }
    links
}

/// Splits clusters until both consistency conditions hold.
///
/// Intra-cluster violations are removed by first-fit splitting in member
/// order. For each bidirectional cluster pair (taken in index order) the
/// smallest of the four role sets (members of either cluster that are
/// effects of, or causes of, the other) that can be moved out on its own is
/// split into a new cluster; ties prefer the lower-index cluster and the
/// "effects" role. When neither cluster has a separable role set both are
/// split into singletons.
pub fn enforce_causal_consistency(cs: ClusterSet, causal: &MentionCausalSet) -> ClusterSet {
    let mut taken: HashSet<ClusterId> = cs.clusters.iter().map(|c| c.cluster_id.clone()).collect();
    let mut out = ClusterSet {
        seed: cs.seed,
        clusters: Vec::with_capacity(cs.clusters.len()),
        outliers: cs.outliers.clone(),
    };
    for c in &cs.clusters {
        let mut parts = split_intra(&c.members, causal).into_iter();
        let first = parts.next().expect("non-empty cluster");
        out.clusters.push(Cluster {
            cluster_id: c.cluster_id.clone(),
            topic: c.topic.clone(),
            members: first,
        });
        for p in parts {
            let id = cs.fresh_id(&c.cluster_id, &mut taken);
            out.clusters.push(Cluster {
                cluster_id: id,
                topic: c.topic.clone(),
                members: p,
            });
        }
    }

    loop {
        let assign = out.assignment();
        let links = cluster_links(&assign, causal);
        let Some((&(i, j), forward)) = links.iter().find(|(&(i, j), _)| i < j && links.contains_key(&(j, i))) else {
            break;
        };
        let backward = &links[&(j, i)];
        // i → j through `forward`, j → i through `backward`
        let i_out: BTreeSet<MentionId> = forward.iter().map(|(c, _)| (*c).clone()).collect();
        let j_in: BTreeSet<MentionId> = forward.iter().map(|(_, e)| (*e).clone()).collect();
        let j_out: BTreeSet<MentionId> = backward.iter().map(|(c, _)| (*c).clone()).collect();
        let i_in: BTreeSet<MentionId> = backward.iter().map(|(_, e)| (*e).clone()).collect();
        drop(assign);

        let options = [
            (i, &i_in, &i_out),
            (i, &i_out, &i_in),
            (j, &j_in, &j_out),
            (j, &j_out, &j_in),
        ];
        let choice = options
            .iter()
            .filter(|(_, set, other)| set.is_disjoint(other))
            .min_by_key(|(_, set, _)| set.len());
        match choice {
            Some(&(k, set, _)) => {
                let set = set.clone();
                let base = out.clusters[k].cluster_id.clone();
                out.clusters[k].members.retain(|m| !set.contains(m));
                let id = out.fresh_id(&base, &mut taken);
                let topic = out.clusters[k].topic.clone();
                out.clusters.push(Cluster {
                    cluster_id: id,
                    topic,
                    members: set,
                });
            }
            None => {
                for k in [i, j] {
                    let members = std::mem::take(&mut out.clusters[k].members);
                    let base = out.clusters[k].cluster_id.clone();
                    let topic = out.clusters[k].topic.clone();
                    let mut it = members.into_iter();
                    out.clusters[k].members.insert(it.next().expect("non-empty"));
                    for m in it {
                        let id = out.fresh_id(&base, &mut taken);
                        out.clusters.push(Cluster {
                            cluster_id: id,
                            topic: topic.clone(),
                            members: BTreeSet::from([m]),
                        });
                    }
                }
            }
        }
    }
    out
}

/// Checks both consistency conditions, returning the first violation found.
pub fn consistency_violation(cs: &ClusterSet, causal: &MentionCausalSet) -> Option<String> {
    let assign = cs.assignment();
    for (c, e) in causal.pairs() {
        if let (Some(i), Some(j)) = (assign.get(c), assign.get(e)) {
            if i == j {
                return Some(format!(
                    "cluster `{}` contains causally related `{c}` and `{e}`",
                    cs.clusters[*i].cluster_id
                ));
            }
        }
    }
    let links = cluster_links(&assign, causal);
    links
        .keys()
        .find(|&&(i, j)| i < j && links.contains_key(&(j, i)))
        .map(|&(i, j)| {
            format!(
                "clusters `{}` and `{}` cause each other",
                cs.clusters[i].cluster_id, cs.clusters[j].cluster_id
            )
        })
}

/// Clusters into which outlier `o` can be inserted without breaking either
/// consistency condition.
pub fn candidate_clusters_for_outlier(
    o: &MentionId,
    cs: &ClusterSet,
    causal: &MentionCausalSet,
) -> Result<Vec<ClusterId>> {
    if !cs.outliers.contains(o) {
        return Err(Error::unknown("outlier", o));
    }
    let assign = cs.assignment();
    let links = cluster_links(&assign, causal);
    let existing: HashSet<(usize, usize)> = links.keys().copied().collect();
    let o_effects: BTreeSet<usize> = causal.effects_of(o).filter_map(|e| assign.get(e).copied()).collect();
    let o_causes: BTreeSet<usize> = causal.causes_of(o).filter_map(|c| assign.get(c).copied()).collect();

    let mut out = Vec::new();
    for (c, cluster) in cs.clusters.iter().enumerate() {
        if o_effects.contains(&c) || o_causes.contains(&c) {
            continue;
        }
        let bidirectional = (0..cs.clusters.len()).filter(|&d| d != c).any(|d| {
            let forward = existing.contains(&(c, d)) || o_effects.contains(&d);
            let backward = existing.contains(&(d, c)) || o_causes.contains(&d);
            forward && backward
        });
        if !bidirectional {
            out.push(cluster.cluster_id.clone());
        }
    }
    Ok(out)
}

/// Moves clusters without any inter-cluster annotation into the outliers.
pub fn drop_isolated_clusters(cs: ClusterSet, causal: &MentionCausalSet) -> ClusterSet {
    let assign = cs.assignment();
    let mut connected = vec![false; cs.clusters.len()];
    for ((i, j), _) in cluster_links(&assign, causal) {
        connected[i] = true;
        connected[j] = true;
    }
    drop(assign);
    let mut out = ClusterSet {
        seed: cs.seed,
        clusters: Vec::new(),
        outliers: cs.outliers,
    };
    for (c, keep) in cs.clusters.into_iter().zip(connected) {
        if keep {
            out.clusters.push(c);
        } else {
            out.outliers.extend(c.members);
        }
    }
    out
}

/// Labels every cluster with the normalized generalization of its medoid
/// (the member with the highest mean similarity to the others; ties go to the
/// smaller mention id).
pub fn assign_topics(mut cs: ClusterSet, col: &StoryCollection, s: &SimilarityMatrix) -> Result<ClusterSet> {
    for c in &mut cs.clusters {
        let mut best: Option<(&MentionId, f64)> = None;
        for m in &c.members {
            let im = s.index_of(m).ok_or_else(|| Error::unknown("mention", m))?;
            let mut sum = 0.0;
            for x in c.members.iter().filter(|x| *x != m) {
                let ix = s.index_of(x).ok_or_else(|| Error::unknown("mention", x))?;
                sum += s.at(im, ix);
            }
            let mean = if c.members.len() > 1 {
                sum / (c.members.len() - 1) as f64
            } else {
                1.0
            };
            if best.is_none_or(|(_, b)| mean > b) {
                best = Some((m, mean));
            }
        }
        let (medoid, _) = best.expect("non-empty cluster");
        let mention = col
            .mentions
            .get(medoid)
            .ok_or_else(|| Error::unknown("mention", medoid))?;
        c.topic = Some(normalize_mention(mention.generalized_text())?);
    }
    Ok(cs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(names: &[&str]) -> BTreeSet<MentionId> {
        names.iter().map(|s| MentionId::from(*s)).collect()
    }

    fn causal(pairs: &[(&str, &str)]) -> MentionCausalSet {
        pairs
            .iter()
            .map(|(c, e)| (MentionId::from(*c), MentionId::from(*e)))
            .collect()
    }

    fn matrix(names: &[&str], entries: &[(&str, &str, f64)]) -> SimilarityMatrix {
        let lookup: HashMap<(String, String), f64> = entries
            .iter()
            .flat_map(|(a, b, v)| {
                [
                    ((a.to_string(), b.to_string()), *v),
                    ((b.to_string(), a.to_string()), *v),
                ]
            })
            .collect();
        SimilarityMatrix::from_fn(names.iter().map(|s| MentionId::from(*s)).collect(), |a, b| {
            lookup.get(&(a.to_string(), b.to_string())).copied().unwrap_or(0.0)
        })
        .unwrap()
    }

    fn cluster(id: &str, members: &[&str]) -> Cluster {
        Cluster {
            cluster_id: id.into(),
            topic: None,
            members: set(members),
        }
    }

    fn member_sets(cs: &ClusterSet) -> BTreeSet<BTreeSet<MentionId>> {
        cs.clusters.iter().map(|c| c.members.clone()).collect()
    }

    /// Minimum-disagreement correlation clustering by enumerating all set
    /// partitions (edges with S >= threshold are positive).
    fn brute_force_correlation(names: &[&str], s: &SimilarityMatrix, threshold: f64) -> Vec<Vec<usize>> {
        fn partitions(n: usize) -> Vec<Vec<usize>> {
            // restricted growth strings
            let mut out = Vec::new();
            let mut cur = vec![0usize; n];
            fn rec(i: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
                if i == cur.len() {
                    out.push(cur.clone());
                    return;
                }
                for b in 0..=max + 1 {
                    cur[i] = b;
                    rec(i + 1, max.max(b), cur, out);
                }
            }
            if n > 0 {
                rec(1, 0, &mut cur, &mut out);
            }
            out
        }
        let n = names.len();
        let mut best = Vec::new();
        let mut best_cost = usize::MAX;
        for p in partitions(n) {
            let mut cost = 0;
            for i in 0..n {
                for j in i + 1..n {
                    let positive = s.at(i, j) >= threshold;
                    if positive != (p[i] == p[j]) {
                        cost += 1;
                    }
                }
            }
            if cost < best_cost {
                best_cost = cost;
                best = vec![p];
            } else if cost == best_cost {
                best.push(p);
            }
        }
        best
    }

    #[test]
    fn pivot_on_four_mentions_matches_brute_force() {
        let names = ["a", "b", "c", "d"];
        let s = matrix(&names, &[("a", "b", 0.9), ("c", "d", 0.8)]);
        let cz = causal(&[("a", "c")]);
        let cs = pivot_cluster(&set(&names), &s, &cz, 3, DEFAULT_THRESHOLD).unwrap();
        assert_eq!(member_sets(&cs), BTreeSet::from([set(&["a", "b"]), set(&["c", "d"])]));
        assert!(cs.outliers.is_empty());

        let optimal = brute_force_correlation(&names, &s, DEFAULT_THRESHOLD);
        assert_eq!(optimal.len(), 1);
        let groups: BTreeSet<BTreeSet<MentionId>> = (0..2)
            .map(|g| {
                names
                    .iter()
                    .zip(&optimal[0])
                    .filter(|(_, &b)| b == g)
                    .map(|(n, _)| MentionId::from(*n))
                    .collect()
            })
            .collect();
        assert_eq!(groups, member_sets(&cs));
    }

    #[test]
    fn below_threshold_everything_is_outlier() {
        let names = ["a", "b", "c"];
        let s = matrix(&names, &[("a", "b", 0.69), ("b", "c", 0.5)]);
        let cs = pivot_cluster(&set(&names), &s, &causal(&[("a", "b")]), 1, 0.7).unwrap();
        assert!(cs.clusters.is_empty());
        assert_eq!(cs.outliers, set(&names));
    }

    #[test]
    fn pivot_is_deterministic_per_seed() {
        let names = ["a", "b", "c", "d", "e", "f"];
        let s = matrix(
            &names,
            &[
                ("a", "b", 0.9),
                ("a", "c", 0.75),
                ("d", "e", 0.8),
                ("e", "f", 0.9),
                ("c", "f", 0.95),
            ],
        );
        let cz = causal(&[("a", "d")]);
        for seed in 0..5 {
            let x = pivot_cluster(&set(&names), &s, &cz, seed, 0.7).unwrap();
            let y = pivot_cluster(&set(&names), &s, &cz, seed, 0.7).unwrap();
            assert_eq!(x, y);
            x.check_partition(&set(&names)).unwrap();
        }
    }

    #[test]
    fn tie_goes_to_higher_similarity_then_smaller_pivot() {
        let names = ["p", "q", "m", "n"];
        let s = matrix(
            &names,
            &[("p", "m", 0.8), ("q", "m", 0.9), ("p", "n", 0.75), ("q", "n", 0.75)],
        );
        let cs = pivot_cluster(&set(&names), &s, &causal(&[("q", "p")]), 0, 0.7).unwrap();
        assert_eq!(member_sets(&cs), BTreeSet::from([set(&["q", "m"]), set(&["p", "n"])]));
    }

    #[test]
    fn pivot_rejects_bad_input() {
        let s = matrix(&["a"], &[]);
        assert!(pivot_cluster(&BTreeSet::new(), &s, &causal(&[]), 0, 0.7).is_err());
        assert!(pivot_cluster(&set(&["a"]), &s, &causal(&[]), 0, 1.0).is_err());
        assert!(pivot_cluster(&set(&["zz"]), &s, &causal(&[]), 0, 0.7).is_err());
    }

    #[test]
    fn prune_requires_both_conditions() {
        let small_incoherent = ["a", "b", "c"];
        let small_coherent = ["d", "e", "f"];
        let big: Vec<String> = (0..12).map(|i| format!("g{i:02}")).collect();
        let mut names: Vec<&str> = small_incoherent.to_vec();
        names.extend(small_coherent);
        names.extend(big.iter().map(String::as_str));
        let s = matrix(
            &names,
            &[("a", "b", 0.4), ("a", "c", 0.2), ("d", "e", 0.9), ("g00", "g01", 0.1)],
        );
        let cs = ClusterSet {
            seed: 0,
            clusters: vec![
                cluster("A", &small_incoherent),
                cluster("B", &small_coherent),
                cluster("C", &big.iter().map(String::as_str).collect::<Vec<_>>()),
            ],
            outliers: BTreeSet::new(),
        };
        let pruned = prune_clusters(cs, &s, DEFAULT_MIN_SIZE, DEFAULT_SIM_FLOOR).unwrap();
        let ids: Vec<&str> = pruned.clusters.iter().map(|c| c.cluster_id.as_str()).collect();
        assert_eq!(ids, ["B", "C"]);
        assert_eq!(pruned.outliers, set(&small_incoherent));
    }

    #[test]
    fn intra_cluster_pair_is_split() {
        let cs = ClusterSet {
            seed: 0,
            clusters: vec![cluster("A", &["a", "b"])],
            outliers: BTreeSet::new(),
        };
        let out = enforce_causal_consistency(cs, &causal(&[("a", "b")]));
        assert_eq!(member_sets(&out), BTreeSet::from([set(&["a"]), set(&["b"])]));
    }

    /// Fewest clusters over all refinements of `cs` that satisfy both conditions.
    fn brute_force_min_split(cs: &ClusterSet, cz: &MentionCausalSet) -> usize {
        fn refinements(members: &[MentionId]) -> Vec<Vec<BTreeSet<MentionId>>> {
            let n = members.len();
            let mut out = Vec::new();
            let mut cur = vec![0usize; n];
            fn rec(
                i: usize,
                max: usize,
                cur: &mut Vec<usize>,
                members: &[MentionId],
                out: &mut Vec<Vec<BTreeSet<MentionId>>>,
            ) {
                if i == cur.len() {
                    let mut groups = vec![BTreeSet::new(); max + 1];
                    for (m, &b) in members.iter().zip(cur.iter()) {
                        groups[b].insert(m.clone());
                    }
                    out.push(groups);
                    return;
                }
                for b in 0..=max + 1 {
                    cur[i] = b;
                    rec(i + 1, max.max(b), cur, members, out);
                }
            }
            rec(1, 0, &mut cur, members, &mut out);
            out
        }
        let per_cluster: Vec<Vec<Vec<BTreeSet<MentionId>>>> = cs
            .clusters
            .iter()
            .map(|c| refinements(&c.members.iter().cloned().collect::<Vec<_>>()))
            .collect();
        let mut best = usize::MAX;
        let mut choice = vec![0usize; per_cluster.len()];
        loop {
            let clusters: Vec<Cluster> = choice
                .iter()
                .enumerate()
                .flat_map(|(k, &r)| per_cluster[k][r].clone())
                .enumerate()
                .map(|(i, members)| Cluster {
                    cluster_id: ClusterId::numbered(i),
                    topic: None,
                    members,
                })
                .collect();
            let candidate = ClusterSet {
                seed: 0,
                clusters,
                outliers: BTreeSet::new(),
            };
            if consistency_violation(&candidate, cz).is_none() {
                best = best.min(candidate.clusters.len());
            }
            let mut k = 0;
            loop {
                if k == choice.len() {
                    return best;
                }
                choice[k] += 1;
                if choice[k] < per_cluster[k].len() {
                    break;
                }
                choice[k] = 0;
                k += 1;
            }
        }
    }

    #[test]
    fn bidirectional_pair_split_is_minimal() {
        let cs = ClusterSet {
            seed: 0,
            clusters: vec![cluster("A", &["a1", "a2"]), cluster("B", &["b1", "b2"])],
            outliers: BTreeSet::new(),
        };
        let cz = causal(&[("a1", "b1"), ("b2", "a2")]);
        assert!(consistency_violation(&cs, &cz).is_some());
        let minimal = brute_force_min_split(&cs, &cz);
        assert_eq!(minimal, 3);
        let out = enforce_causal_consistency(cs, &cz);
        assert_eq!(consistency_violation(&out, &cz), None);
        assert_eq!(out.clusters.len(), minimal);
        out.check_partition(&set(&["a1", "a2", "b1", "b2"])).unwrap();
    }

    #[test]
    fn dual_role_members_fall_back_to_singletons() {
        // a causes b, b' causes a, b causes a'
        let cs = ClusterSet {
            seed: 0,
            clusters: vec![cluster("A", &["a", "a2"]), cluster("B", &["b", "b2"])],
            outliers: BTreeSet::new(),
        };
        let cz = causal(&[("a", "b"), ("b2", "a"), ("b", "a2")]);
        let out = enforce_causal_consistency(cs, &cz);
        assert_eq!(consistency_violation(&out, &cz), None);
        out.check_partition(&set(&["a", "a2", "b", "b2"])).unwrap();
    }

    #[test]
    fn consistent_input_is_fixed_point() {
        let cs = ClusterSet {
            seed: 9,
            clusters: vec![cluster("A", &["a1", "a2"]), cluster("B", &["b1", "b2"])],
            outliers: set(&["o"]),
        };
        let cz = causal(&[("a1", "b1"), ("a2", "b2")]);
        assert_eq!(enforce_causal_consistency(cs.clone(), &cz), cs);
    }

    #[test]
    fn outlier_candidates() {
        let cs = ClusterSet {
            seed: 0,
            clusters: vec![
                cluster("C1", &["c1", "c1b"]),
                cluster("C2", &["c2"]),
                cluster("C3", &["c3"]),
            ],
            outliers: set(&["o", "free"]),
        };
        // C1 → C2 already; o causes a member of C1
        let cz = causal(&[("c1b", "c2"), ("o", "c1")]);
        let got = candidate_clusters_for_outlier(&"o".into(), &cs, &cz).unwrap();
        // C1 excluded: o is linked to c1. C2 excluded: C2 ∪ {o} → C1 while C1 → C2.
        assert_eq!(got, vec![ClusterId::from("C3")]);

        let all = candidate_clusters_for_outlier(&"free".into(), &cs, &cz).unwrap();
        assert_eq!(all.len(), 3);

        assert!(candidate_clusters_for_outlier(&"c1".into(), &cs, &cz).is_err());
    }

    /// Enumerates insertions directly and checks with `consistency_violation`.
    #[test]
    fn outlier_candidates_match_direct_insertion() {
        let cs = ClusterSet {
            seed: 0,
            clusters: vec![
                cluster("C1", &["a", "b"]),
                cluster("C2", &["c"]),
                cluster("C3", &["d", "e"]),
            ],
            outliers: set(&["o"]),
        };
        let cz = causal(&[("a", "c"), ("c", "d"), ("o", "a"), ("e", "o")]);
        let got = candidate_clusters_for_outlier(&"o".into(), &cs, &cz).unwrap();
        let mut expected = Vec::new();
        for k in 0..cs.clusters.len() {
            let mut trial = cs.clone();
            trial.outliers.remove(&MentionId::from("o"));
            trial.clusters[k].members.insert("o".into());
            if consistency_violation(&trial, &cz).is_none() {
                expected.push(trial.clusters[k].cluster_id.clone());
            }
        }
        assert_eq!(got, expected);
    }

    #[test]
    fn isolated_clusters_become_outliers() {
        let cs = ClusterSet {
            seed: 0,
            clusters: vec![cluster("A", &["a"]), cluster("B", &["b"]), cluster("Z", &["z"])],
            outliers: BTreeSet::new(),
        };
        let out = drop_isolated_clusters(cs, &causal(&[("a", "b")]));
        assert_eq!(out.clusters.len(), 2);
        assert_eq!(out.outliers, set(&["z"]));
    }
}
