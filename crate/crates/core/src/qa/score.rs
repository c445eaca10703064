use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::items::DiscoveryItem;
use crate::annotation::CausalLabel;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QaScore {
    pub accuracy: f64,
    pub weighted_f1: f64,
}

fn f1(tp: f64, fp: f64, fn_: f64) -> f64 {
    let denom = 2.0 * tp + fp + fn_;
    if denom == 0.0 {
        0.0
    } else {
        2.0 * tp / denom
    }
}

/// Accuracy counts a question correct when any predicted index is gold.
/// Weighted F1 treats each choice index as a binary label across questions
/// and weights its F1 by how many questions have it as gold.
pub fn score_qa(
    preds: &BTreeMap<String, BTreeSet<usize>>,
    gold: &BTreeMap<String, BTreeSet<usize>>,
) -> Result<QaScore> {
    if gold.is_empty() {
        return Err(Error::Empty("gold answers"));
    }
    if preds.len() != gold.len() || preds.keys().zip(gold.keys()).any(|(a, b)| a != b) {
        return Err(Error::Invalid("predictions and gold cover different questions".into()));
    }
    let hits = gold.iter().filter(|(q, g)| !preds[*q].is_disjoint(g)).count();
    let labels: BTreeSet<usize> = gold.values().chain(preds.values()).flatten().copied().collect();
    let mut weighted = 0.0;
    let mut support_total = 0.0;
    for l in labels {
        let (mut tp, mut fp, mut fn_, mut support) = (0.0, 0.0, 0.0, 0.0);
        for (q, g) in gold {
            let (in_gold, in_pred) = (g.contains(&l), preds[q].contains(&l));
            support += f64::from(u8::from(in_gold));
            match (in_gold, in_pred) {
                (true, true) => tp += 1.0,
                (false, true) => fp += 1.0,
                (true, false) => fn_ += 1.0,
                (false, false) => {}
            }
        }
        weighted += support * f1(tp, fp, fn_);
        support_total += support;
    }
    Ok(QaScore {
        accuracy: hits as f64 / gold.len() as f64,
        weighted_f1: if support_total > 0.0 {
            weighted / support_total
        } else {
            0.0
        },
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    /// `(label, precision, recall, f1, support)` per class.
    pub per_class: Vec<(CausalLabel, f64, f64, f64, usize)>,
}

/// Unweighted mean of per-class scores over the three labels. A ratio with
/// a zero denominator is 0.
pub fn classification_report(preds: &[CausalLabel], gold: &[CausalLabel]) -> Result<ClassReport> {
    let preds: Vec<Option<CausalLabel>> = preds.iter().copied().map(Some).collect();
    classification_report_with_failures(&preds, gold)
}

/// As [`classification_report`], where `None` is an unparsed answer: it
/// misses its gold class and is predicted as no class.
pub fn classification_report_with_failures(preds: &[Option<CausalLabel>], gold: &[CausalLabel]) -> Result<ClassReport> {
    if gold.is_empty() {
        return Err(Error::Empty("gold labels"));
    }
    if preds.len() != gold.len() {
        return Err(Error::DimensionMismatch {
            expected: gold.len(),
            actual: preds.len(),
        });
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let mut per_class = Vec::new();
    for l in CausalLabel::ALL {
        let tp = preds
            .iter()
            .zip(gold)
            .filter(|(p, g)| **p == Some(l) && **g == l)
            .count();
        let predicted = preds.iter().filter(|p| **p == Some(l)).count();
        let support = gold.iter().filter(|g| **g == l).count();
        let (p, r) = (ratio(tp, predicted), ratio(tp, support));
        let f = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
        per_class.push((l, p, r, f, support));
    }
    let mean = |k: fn(&(CausalLabel, f64, f64, f64, usize)) -> f64| per_class.iter().map(k).sum::<f64>() / 3.0;
    Ok(ClassReport {
        macro_precision: mean(|c| c.1),
        macro_recall: mean(|c| c.2),
        macro_f1: mean(|c| c.3),
        per_class,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Baseline {
    Random,
    Majority,
}

/// Uniform random labels (seeded) or the most frequent label of
/// `reference`, ties broken in label order.
pub fn baseline_predict(
    kind: Baseline,
    items: &[DiscoveryItem],
    seed: u64,
    reference: &[CausalLabel],
) -> Result<Vec<CausalLabel>> {
    if items.is_empty() {
        return Err(Error::Empty("discovery items"));
    }
    match kind {
        Baseline::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Ok(items.iter().map(|_| CausalLabel::ALL[rng.gen_range(0..3)]).collect())
        }
        Baseline::Majority => {
            if reference.is_empty() {
                return Err(Error::Precondition("majority baseline needs reference labels".into()));
            }
            let mut counts = [0usize; 3];
            for l in reference {
                counts[CausalLabel::ALL.iter().position(|x| x == l).expect("known label")] += 1;
            }
            let best = (0..3).fold(0, |b, i| if counts[i] > counts[b] { i } else { b });
            Ok(vec![CausalLabel::ALL[best]; items.len()])
        }
    }
}

/// `metric<TAB>value` lines.
pub fn write_report(rows: &[(String, String)], mut w: impl Write) -> std::io::Result<()> {
    for (k, v) in rows {
        writeln!(w, "{k}\t{v}")?;
    }
    Ok(())
}
