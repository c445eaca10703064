use std::collections::HashMap;
use std::hash::Hash;

use crate::error::{Error, Result};

struct Contingency {
    n: usize,
    cells: HashMap<(usize, usize), usize>,
    rows: Vec<usize>,
    cols: Vec<usize>,
}

fn dense_labels<L: Eq + Hash>(labels: &[L]) -> (Vec<usize>, usize) {
    let mut ids: HashMap<&L, usize> = HashMap::new();
    let dense = labels
        .iter()
        .map(|l| {
            let next = ids.len();
            *ids.entry(l).or_insert(next)
        })
        .collect();
    (dense, ids.len())
}

fn contingency<L: Eq + Hash, M: Eq + Hash>(pred: &[L], truth: &[M]) -> Result<Contingency> {
    if pred.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            actual: pred.len(),
        });
    }
    let (p, kp) = dense_labels(pred);
    let (t, kt) = dense_labels(truth);
    let mut cells = HashMap::new();
    let mut rows = vec![0; kp];
    let mut cols = vec![0; kt];
    for (&i, &j) in p.iter().zip(&t) {
        *cells.entry((i, j)).or_insert(0) += 1;
        rows[i] += 1;
        cols[j] += 1;
    }
    Ok(Contingency {
        n: pred.len(),
        cells,
        rows,
        cols,
    })
}

fn comb2(n: usize) -> f64 {
    let n = n as f64;
    n * (n - 1.0) / 2.0
}

/// Adjusted Rand index from the pair-counting contingency table. Returns 1
/// for the degenerate case where the index cannot exceed its expectation.
pub fn adjusted_rand_index<L: Eq + Hash, M: Eq + Hash>(pred: &[L], truth: &[M]) -> Result<f64> {
    let c = contingency(pred, truth)?;
    let index: f64 = c.cells.values().map(|&v| comb2(v)).sum();
    let a: f64 = c.rows.iter().map(|&v| comb2(v)).sum();
    let b: f64 = c.cols.iter().map(|&v| comb2(v)).sum();
    let total = comb2(c.n);
    if total == 0.0 {
        return Ok(1.0);
    }
    let expected = a * b / total;
    let max = 0.5 * (a + b);
    if max == expected {
        return Ok(1.0);
    }
    Ok((index - expected) / (max - expected))
}

fn entropy(counts: &[usize], n: f64) -> f64 {
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Mutual information normalized by the arithmetic mean of the two
/// entropies. Two single-cluster labelings score 1.
pub fn normalized_mutual_information<L: Eq + Hash, M: Eq + Hash>(pred: &[L], truth: &[M]) -> Result<f64> {
    let c = contingency(pred, truth)?;
    if c.n == 0 {
        return Err(Error::Empty("labeling"));
    }
    let n = c.n as f64;
    let hp = entropy(&c.rows, n);
    let ht = entropy(&c.cols, n);
    if hp == 0.0 && ht == 0.0 {
        return Ok(1.0);
    }
    let mi: f64 = c
        .cells
        .iter()
        .map(|(&(i, j), &v)| {
            let pij = v as f64 / n;
            pij * (v as f64 * n / (c.rows[i] as f64 * c.cols[j] as f64)).ln()
        })
        .sum();
    let denom = 0.5 * (hp + ht);
    Ok((mi.max(0.0) / denom).min(1.0))
}

/// Replaces each predicted cluster by the most frequent true label among its
/// members (ties go to the smaller label).
pub fn majority_relabel<L: Eq + Hash, M: Ord + Clone>(pred: &[L], truth: &[M]) -> Result<Vec<M>> {
    if pred.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            actual: pred.len(),
        });
    }
    let mut votes: HashMap<&L, std::collections::BTreeMap<&M, usize>> = HashMap::new();
    for (p, t) in pred.iter().zip(truth) {
        *votes.entry(p).or_default().entry(t).or_insert(0) += 1;
    }
    let winner: HashMap<&L, &M> = votes
        .into_iter()
        .map(|(p, counts)| {
            let best = counts
                .iter()
                .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
                .map(|(m, _)| *m)
                .expect("non-empty vote");
            (p, best)
        })
        .collect();
    Ok(pred.iter().map(|p| winner[p].clone()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ari_cases() {
        let truth = [0, 0, 1, 1, 2];
        assert_eq!(adjusted_rand_index(&truth, &truth).unwrap(), 1.0);
        let relabeled = ["b", "b", "a", "a", "z"];
        assert!((adjusted_rand_index(&relabeled, &truth).unwrap() - 1.0).abs() < 1e-12);
        let ari = adjusted_rand_index(&[0, 1, 0, 1], &[0, 0, 1, 1]).unwrap();
        assert!((ari + 0.5).abs() < 1e-12);
        assert!(adjusted_rand_index(&[0, 1], &[0]).is_err());
    }

    #[test]
    fn nmi_cases() {
        let truth = [0, 0, 1, 1];
        assert!((normalized_mutual_information(&truth, &truth).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(normalized_mutual_information(&[7, 7, 7, 7], &truth).unwrap(), 0.0);
        let nmi = normalized_mutual_information(&[0, 0, 0, 1], &truth).unwrap();
        assert!((nmi - 0.343_711_018_485_450_8).abs() < 1e-12);
        assert_eq!(normalized_mutual_information(&[1, 1], &[2, 2]).unwrap(), 1.0);
    }

    #[test]
    fn majority_mapping() {
        let pred = ["p", "p", "p", "q"];
        let truth = ["A", "A", "B", "B"];
        assert_eq!(majority_relabel(&pred, &truth).unwrap(), ["A", "A", "A", "B"]);
        assert_eq!(majority_relabel(&["p", "p"], &["B", "A"]).unwrap(), ["A", "A"]);
    }
}
