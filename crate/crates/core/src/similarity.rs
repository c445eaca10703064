//! Pairwise semantic similarity between event mentions.
//!
//! `S(x, y) = 0.5 * (max(cos(x, y), 0) + p_paraphrase(x, y))`, forced to zero
//! for any pair annotated as cause and effect.

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rayon::prelude::*;

use crate::corpus::MentionCausalSet;
use crate::error::{Error, Result};
use crate::ids::MentionId;

/// Dense sentence embeddings keyed by mention.
#[derive(Clone, Debug, Default)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: HashMap<MentionId, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Invalid("embedding dimension must be positive".into()));
        }
        Ok(Self {
            dim,
            vectors: HashMap::new(),
        })
    }

    pub fn insert(&mut self, id: MentionId, v: Vec<f64>) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: v.len(),
            });
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Invalid(format!("non-finite embedding for `{id}`")));
        }
        self.vectors.insert(id, v);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, id: &MentionId) -> Option<&[f64]> {
        self.vectors.get(id).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Parses `d=<dim>` followed by `mention_id<TAB>f1 f2 ... fd` lines.
    pub fn from_reader(reader: impl BufRead) -> Result<Self> {
        let mut table: Option<Self> = None;
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let line = line.map_err(|e| Error::parse(line_no, e.to_string()))?;
            let line = line.trim_end();
            if line.is_empty() {
                continue;
            }
            match table.as_mut() {
                None => {
                    let dim = line
                        .strip_prefix("d=")
                        .and_then(|d| d.trim().parse::<usize>().ok())
                        .ok_or_else(|| Error::parse(line_no, "expected header `d=<dim>`"))?;
                    table = Some(Self::new(dim).map_err(|e| Error::parse(line_no, e.to_string()))?);
                }
                Some(t) => {
                    let (id, rest) = line
                        .split_once('\t')
                        .ok_or_else(|| Error::parse(line_no, "expected `id<TAB>values`"))?;
                    let v = rest
                        .split_whitespace()
                        .map(str::parse::<f64>)
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .map_err(|e| Error::parse(line_no, e.to_string()))?;
                    let id = MentionId::from(id);
                    if t.vectors.contains_key(&id) {
                        return Err(Error::DuplicateId {
                            kind: "embedding",
                            id: id.to_string(),
                        });
                    }
                    t.insert(id, v).map_err(|e| Error::parse(line_no, e.to_string()))?;
                }
            }
        }
        table.ok_or(Error::Empty("embedding file"))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(BufReader::new(f))
    }
}

/// Paraphrase probabilities over unordered mention pairs.
#[derive(Clone, Debug, Default)]
pub struct ParaphraseTable {
    scores: HashMap<(MentionId, MentionId), f64>,
    default: Option<f64>,
}

fn unordered(a: &MentionId, b: &MentionId) -> (MentionId, MentionId) {
    if a <= b {
        (a.clone(), b.clone())
    } else {
        (b.clone(), a.clone())
    }
}

impl ParaphraseTable {
    /// Empty table where absent pairs score `default` (`None` makes them an error).
    pub fn with_default(default: Option<f64>) -> Result<Self> {
        if let Some(d) = default {
            check_probability(d)?;
        }
        Ok(Self {
            scores: HashMap::new(),
            default,
        })
    }

    pub fn insert(&mut self, a: &MentionId, b: &MentionId, p: f64) -> Result<()> {
        check_probability(p)?;
        self.scores.insert(unordered(a, b), p);
        Ok(())
    }

    pub fn get(&self, a: &MentionId, b: &MentionId) -> Option<f64> {
        self.scores.get(&unordered(a, b)).copied().or(self.default)
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// Parses `id_a<TAB>id_b<TAB>prob` lines.
    pub fn from_reader(reader: impl BufRead, default: Option<f64>) -> Result<Self> {
        let mut t = Self::with_default(default)?;
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let line = line.map_err(|e| Error::parse(line_no, e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split('\t');
            let (Some(a), Some(b), Some(p), None) = (parts.next(), parts.next(), parts.next(), parts.next()) else {
                return Err(Error::parse(line_no, "expected `id_a<TAB>id_b<TAB>prob`"));
            };
            let p: f64 = p
                .trim()
                .parse()
                .map_err(|e: std::num::ParseFloatError| Error::parse(line_no, e.to_string()))?;
            t.insert(&a.into(), &b.into(), p)
                .map_err(|e| Error::parse(line_no, e.to_string()))?;
        }
        Ok(t)
    }

    pub fn load(path: impl AsRef<Path>, default: Option<f64>) -> Result<Self> {
        let path = path.as_ref();
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(BufReader::new(f), default)
    }
}

fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::Invalid(format!("probability {p} outside [0, 1]")))
    }
}

pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok((dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0))
}

fn combine(cos: f64, phr: f64) -> f64 {
    (0.5 * (cos.max(0.0) + phr)).clamp(0.0, 1.0)
}

/// Similarity of two distinct mentions.
pub fn combined_similarity(
    x: &MentionId,
    y: &MentionId,
    emb: &EmbeddingTable,
    phr: &ParaphraseTable,
    causal: &MentionCausalSet,
) -> Result<f64> {
    if x == y {
        return Err(Error::Invalid(format!("similarity of `{x}` with itself")));
    }
    if causal.linked(x, y) {
        return Ok(0.0);
    }
    let ex = emb.get(x).ok_or_else(|| Error::unknown("embedding", x))?;
    let ey = emb.get(y).ok_or_else(|| Error::unknown("embedding", y))?;
    let p = phr
        .get(x, y)
        .ok_or_else(|| Error::unknown("paraphrase pair", format!("{x}/{y}")))?;
    Ok(combine(cosine(ex, ey)?, p))
}

/// Symmetric similarity matrix with unit diagonal, stored as a packed upper
/// triangle.
#[derive(Clone, Debug)]
pub struct SimilarityMatrix {
    ids: Vec<MentionId>,
    index: HashMap<MentionId, usize>,
    upper: Vec<f64>,
}

impl SimilarityMatrix {
    fn offset(n: usize, i: usize, j: usize) -> usize {
        debug_assert!(i < j && j < n);
        i * (2 * n - i - 1) / 2 + (j - i - 1)
    }

    fn with_ids(ids: Vec<MentionId>) -> Result<(Vec<MentionId>, HashMap<MentionId, usize>)> {
        let mut index = HashMap::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            if index.insert(id.clone(), i).is_some() {
                return Err(Error::DuplicateId {
                    kind: "mention",
                    id: id.to_string(),
                });
            }
        }
        Ok((ids, index))
    }

    /// Builds the matrix from a pair function evaluated on `i < j`.
    pub fn from_fn(ids: Vec<MentionId>, f: impl Fn(&MentionId, &MentionId) -> f64 + Sync) -> Result<Self> {
        Self::try_from_fn(ids, |a, b| Ok(f(a, b)))
    }

    fn try_from_fn(ids: Vec<MentionId>, f: impl Fn(&MentionId, &MentionId) -> Result<f64> + Sync) -> Result<Self> {
        let (ids, index) = Self::with_ids(ids)?;
        let n = ids.len();
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| {
                ((i + 1)..n)
                    .map(|j| {
                        let s = f(&ids[i], &ids[j])?;
                        if !(0.0..=1.0).contains(&s) {
                            return Err(Error::Invalid(format!(
                                "similarity {s} for `{}`/`{}` outside [0, 1]",
                                ids[i], ids[j]
                            )));
                        }
                        Ok(s)
                    })
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            ids,
            index,
            upper: rows.concat(),
        })
    }

    /// Combined similarity over all pairs of `ids`.
    pub fn build(
        ids: Vec<MentionId>,
        emb: &EmbeddingTable,
        phr: &ParaphraseTable,
        causal: &MentionCausalSet,
    ) -> Result<Self> {
        let mut unit: HashMap<&MentionId, Vec<f64>> = HashMap::with_capacity(ids.len());
        for id in &ids {
            let v = emb.get(id).ok_or_else(|| Error::unknown("embedding", id))?;
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                return Err(Error::ZeroNorm);
            }
            unit.insert(id, v.iter().map(|x| x / norm).collect());
        }
        let unit = &unit;
        Self::try_from_fn(ids.clone(), |x, y| {
            if causal.linked(x, y) {
                return Ok(0.0);
            }
            let cos: f64 = unit[x].iter().zip(&unit[y]).map(|(a, b)| a * b).sum();
            let p = phr
                .get(x, y)
                .ok_or_else(|| Error::unknown("paraphrase pair", format!("{x}/{y}")))?;
            Ok(combine(cos.clamp(-1.0, 1.0), p))
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[MentionId] {
        &self.ids
    }

    pub fn index_of(&self, id: &MentionId) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn contains(&self, id: &MentionId) -> bool {
        self.index.contains_key(id)
    }

    /// Entry by row/column index.
    pub fn at(&self, i: usize, j: usize) -> f64 {
        use std::cmp::Ordering::*;
        match i.cmp(&j) {
            Equal => 1.0,
            Less => self.upper[Self::offset(self.ids.len(), i, j)],
            Greater => self.upper[Self::offset(self.ids.len(), j, i)],
        }
    }

    /// Entry by mention id.
    pub fn get(&self, x: &MentionId, y: &MentionId) -> Result<f64> {
        let i = self.index_of(x).ok_or_else(|| Error::unknown("mention", x))?;
        let j = self.index_of(y).ok_or_else(|| Error::unknown("mention", y))?;
        Ok(self.at(i, j))
    }
}

/// Mean similarity between `y` and the members of `cluster`, leaving out
/// `y` itself when it is a member.
pub fn event_cluster_similarity(y: &MentionId, cluster: &BTreeSet<MentionId>, s: &SimilarityMatrix) -> Result<f64> {
    let iy = s.index_of(y).ok_or_else(|| Error::unknown("mention", y))?;
    let mut sum = 0.0;
    let mut n = 0usize;
    for x in cluster.iter().filter(|x| *x != y) {
        let ix = s.index_of(x).ok_or_else(|| Error::unknown("mention", x))?;
        sum += s.at(ix, iy);
        n += 1;
    }
    if n == 0 {
        return Err(Error::Empty("cluster"));
    }
    Ok(sum / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(names: &[&str]) -> Vec<MentionId> {
        names.iter().map(|s| MentionId::from(*s)).collect()
    }

    #[test]
    fn cosine_cases() {
        assert!((cosine(&[0.3, -2.0, 5.0], &[0.3, -2.0, 5.0]).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert!((cosine(&[1.0, 2.0], &[2.0, 4.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(cosine(&[0.0, 0.0], &[1.0, 0.0]), Err(Error::ZeroNorm)));
        assert!(cosine(&[1.0], &[1.0, 0.0]).is_err());
    }

    fn tables() -> (EmbeddingTable, ParaphraseTable, MentionCausalSet) {
        let emb = EmbeddingTable::from_reader("d=2\nx\t1 0\ny\t0.6 0.8\nz\t-1 0\n".as_bytes()).unwrap();
        let phr = ParaphraseTable::from_reader("x\ty\t0.8\n".as_bytes(), Some(0.0)).unwrap();
        let mut causal = MentionCausalSet::new();
        causal.insert("y".into(), "z".into(), None).unwrap();
        (emb, phr, causal)
    }

    #[test]
    fn combined_similarity_averages() {
        let (emb, phr, causal) = tables();
        // cos(x, y) = 0.6, p = 0.8
        let s = combined_similarity(&"x".into(), &"y".into(), &emb, &phr, &causal).unwrap();
        assert!((s - 0.7).abs() < 1e-12);
    }

    #[test]
    fn causal_pair_is_zero() {
        let (emb, phr, causal) = tables();
        for (a, b) in [("y", "z"), ("z", "y")] {
            let s = combined_similarity(&a.into(), &b.into(), &emb, &phr, &causal).unwrap();
            assert_eq!(s, 0.0);
        }
    }

    #[test]
    fn negative_cosine_clamped() {
        let (emb, phr, causal) = tables();
        let s = combined_similarity(&"x".into(), &"z".into(), &emb, &phr, &causal).unwrap();
        assert_eq!(s, 0.0);
    }

    #[test]
    fn upper_bound() {
        let emb = EmbeddingTable::from_reader("d=1\na\t2\nb\t3\n".as_bytes()).unwrap();
        let phr = ParaphraseTable::from_reader("a\tb\t1\n".as_bytes(), None).unwrap();
        let s = combined_similarity(&"a".into(), &"b".into(), &emb, &phr, &MentionCausalSet::new()).unwrap();
        assert_eq!(s, 1.0);
    }

    #[test]
    fn missing_paraphrase_without_default() {
        let emb = EmbeddingTable::from_reader("d=1\na\t2\nb\t3\n".as_bytes()).unwrap();
        let phr = ParaphraseTable::with_default(None).unwrap();
        assert!(combined_similarity(&"a".into(), &"b".into(), &emb, &phr, &MentionCausalSet::new()).is_err());
    }

    #[test]
    fn matrix_matches_pairwise() {
        let (emb, phr, causal) = tables();
        let m = SimilarityMatrix::build(ids(&["x", "y", "z"]), &emb, &phr, &causal).unwrap();
        for a in m.ids() {
            for b in m.ids() {
                let v = m.get(a, b).unwrap();
                if a == b {
                    assert_eq!(v, 1.0);
                } else {
                    let direct = combined_similarity(a, b, &emb, &phr, &causal).unwrap();
                    assert!((v - direct).abs() < 1e-12);
                    assert_eq!(v, m.get(b, a).unwrap());
                }
            }
        }
    }

    #[test]
    fn embedding_file_errors() {
        assert!(EmbeddingTable::from_reader("x\t1 2\n".as_bytes()).is_err());
        assert!(EmbeddingTable::from_reader("d=2\nx\t1\n".as_bytes()).is_err());
        assert!(EmbeddingTable::from_reader("d=1\nx\t1\nx\t2\n".as_bytes()).is_err());
        assert!(ParaphraseTable::from_reader("a\tb\t1.5\n".as_bytes(), None).is_err());
    }

    #[test]
    fn event_cluster_similarity_cases() {
        let m = SimilarityMatrix::from_fn(ids(&["y", "x1", "x2"]), |a, b| match (a.as_str(), b.as_str()) {
            ("y", "x1") => 0.4,
            ("y", "x2") => 0.6,
            _ => 0.1,
        })
        .unwrap();
        let y = MentionId::from("y");
        let one: BTreeSet<MentionId> = ids(&["x1"]).into_iter().collect();
        let two: BTreeSet<MentionId> = ids(&["x1", "x2"]).into_iter().collect();
        assert!((event_cluster_similarity(&y, &one, &m).unwrap() - 0.4).abs() < 1e-12);
        assert!((event_cluster_similarity(&y, &two, &m).unwrap() - 0.5).abs() < 1e-12);
        assert!(event_cluster_similarity(&y, &BTreeSet::new(), &m).is_err());
        // y's own entry is left out
        let with_self: BTreeSet<MentionId> = ids(&["y", "x1", "x2"]).into_iter().collect();
        assert!((event_cluster_similarity(&y, &with_self, &m).unwrap() - 0.5).abs() < 1e-12);
        let only_self: BTreeSet<MentionId> = ids(&["y"]).into_iter().collect();
        assert!(event_cluster_similarity(&y, &only_self, &m).is_err());
    }
}
