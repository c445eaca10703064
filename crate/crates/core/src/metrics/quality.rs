use std::collections::BTreeSet;

use crate::clustering::ClusterSet;
use crate::corpus::MentionCausalSet;
use crate::error::{Error, Result};
use crate::ids::MentionId;
use crate::similarity::SimilarityMatrix;

/// `counts[i][j]` is the number of mentions of cluster `i` annotated as
/// causing at least one mention of cluster `j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InterClusterCountMatrix {
    counts: Vec<Vec<u64>>,
}

impl InterClusterCountMatrix {
    pub fn from_counts(counts: Vec<Vec<u64>>) -> Result<Self> {
        let k = counts.len();
        if counts.iter().any(|row| row.len() != k) {
            return Err(Error::Invalid("count matrix must be square".into()));
        }
        Ok(Self { counts })
    }

    pub fn from_clusters(cs: &ClusterSet, causal: &MentionCausalSet) -> Self {
        let k = cs.clusters.len();
        let assign = cs.assignment();
        let mut causing: Vec<Vec<BTreeSet<&MentionId>>> = vec![vec![BTreeSet::new(); k]; k];
        for (c, e) in causal.pairs() {
            if let (Some(&i), Some(&j)) = (assign.get(c), assign.get(e)) {
                causing[i][j].insert(c);
            }
        }
        Self {
            counts: causing
                .into_iter()
                .map(|row| row.into_iter().map(|s| s.len() as u64).collect())
                .collect(),
        }
    }

    pub fn k(&self) -> usize {
        self.counts.len()
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.counts[i][j]
    }

    pub fn rows(&self) -> &[Vec<u64>] {
        &self.counts
    }
}

/// Mean over clusters of `A[i][i] / (2 |C_i|)`.
pub fn self_loop_ratio(cs: &ClusterSet, a: &InterClusterCountMatrix) -> Result<f64> {
    let k = cs.clusters.len();
    if k == 0 {
        return Err(Error::Empty("cluster set"));
    }
    if a.k() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            actual: a.k(),
        });
    }
    let sum: f64 = cs
        .clusters
        .iter()
        .enumerate()
        .map(|(i, c)| a.get(i, i) as f64 / (2.0 * c.members.len() as f64))
        .sum();
    Ok(sum / k as f64)
}

/// Mean over unordered cluster pairs of `min(A_ij, A_ji) / max(A_ij, A_ji)`,
/// with `0/0 = 0`.
pub fn bidirectional_ratio(a: &InterClusterCountMatrix) -> Result<f64> {
    let k = a.k();
    if k < 2 {
        return Err(Error::Invalid(format!("bidirectional ratio needs k >= 2, got {k}")));
    }
    let mut sum = 0.0;
    for i in 0..k {
        for j in i + 1..k {
            let (x, y) = (a.get(i, j), a.get(j, i));
            let hi = x.max(y);
            if hi > 0 {
                sum += x.min(y) as f64 / hi as f64;
            }
        }
    }
    Ok(2.0 * sum / (k * k - k) as f64)
}

/// Per-instance silhouette on similarities: `(a - b) / (1 - min(a, b))`,
/// zero when the denominator vanishes.
pub fn silhouette_term(a: f64, b: f64) -> f64 {
    let denom = 1.0 - a.min(b);
    if denom <= 0.0 {
        0.0
    } else {
        (a - b) / denom
    }
}

/// Silhouette over all clustered mentions, where `a_x` is the mean
/// similarity to the rest of its own cluster and `b_x` the highest mean
/// similarity to another cluster. Members of singleton clusters count as 0.
pub fn silhouette(cs: &ClusterSet, s: &SimilarityMatrix) -> Result<f64> {
    if cs.clusters.len() < 2 {
        return Err(Error::Invalid("silhouette needs at least two clusters".into()));
    }
    if cs.clusters.iter().all(|c| c.members.len() < 2) {
        return Err(Error::Invalid(
            "silhouette undefined for singleton-only clustering".into(),
        ));
    }
    let idx: Vec<Vec<usize>> = cs
        .clusters
        .iter()
        .map(|c| {
            c.members
                .iter()
                .map(|m| s.index_of(m).ok_or_else(|| Error::unknown("mention", m)))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let mut total = 0.0;
    let mut count = 0usize;
    for (ci, members) in idx.iter().enumerate() {
        for &x in members {
            count += 1;
            if members.len() < 2 {
                continue;
            }
            let a = members.iter().filter(|&&y| y != x).map(|&y| s.at(x, y)).sum::<f64>() / (members.len() - 1) as f64;
            let b = idx
                .iter()
                .enumerate()
                .filter(|(cj, _)| *cj != ci)
                .map(|(_, other)| other.iter().map(|&y| s.at(x, y)).sum::<f64>() / other.len() as f64)
                .fold(f64::NEG_INFINITY, f64::max);
            total += silhouette_term(a, b);
        }
    }
    Ok(total / count as f64)
}

/// Mean within-cluster pairwise similarity, averaged over clusters with at
/// least two members.
pub fn homogeneity(cs: &ClusterSet, s: &SimilarityMatrix) -> Result<f64> {
    let mut sum = 0.0;
    let mut k = 0usize;
    for c in cs.clusters.iter().filter(|c| c.members.len() >= 2) {
        let idx: Vec<usize> = c
            .members
            .iter()
            .map(|m| s.index_of(m).ok_or_else(|| Error::unknown("mention", m)))
            .collect::<Result<_>>()?;
        let mut pair_sum = 0.0;
        for (a, &i) in idx.iter().enumerate() {
            for &j in &idx[a + 1..] {
                pair_sum += s.at(i, j);
            }
        }
        let n = idx.len() as f64;
        sum += pair_sum / (n * (n - 1.0) / 2.0);
        k += 1;
    }
    if k == 0 {
        return Err(Error::Invalid(
            "homogeneity needs a cluster with two or more members".into(),
        ));
    }
    Ok(sum / k as f64)
}
