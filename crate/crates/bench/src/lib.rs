//! Fixtures shared by the benchmarks.

use std::collections::BTreeSet;

use eventcause::annotation::{CausalLabel, ReliabilityData};
use eventcause::discovery::{random_dag, BernoulliScm, BinaryDataset};
use eventcause::synth::{synthetic_corpus, SynthCorpus, SynthParams};
use eventcause::{CausalGraph, MentionId, SimilarityMatrix};

pub fn corpus(stories: usize) -> SynthCorpus {
    let p = SynthParams {
        stories,
        types: 12,
        ..SynthParams::default()
    };
    synthetic_corpus(&p, 1).expect("valid synthetic parameters")
}

pub fn similarity(c: &SynthCorpus) -> (BTreeSet<MentionId>, SimilarityMatrix) {
    let ids = c.collection.mention_ids();
    let s = SimilarityMatrix::build(ids.clone(), &c.embeddings, &c.paraphrases, &c.collection.causal)
        .expect("embeddings cover every mention");
    (ids.into_iter().collect(), s)
}

pub fn dag(n: usize) -> CausalGraph {
    random_dag(n, 3.0 / n as f64, 5)
}

pub fn samples(n_vars: usize, rows: usize) -> BinaryDataset {
    BernoulliScm::random(dag(n_vars), 9)
        .and_then(|m| m.sample(rows, 11))
        .expect("random DAG is acyclic")
}

/// Three raters who mostly agree, with a few missing values.
pub fn ratings(units: usize) -> ReliabilityData<CausalLabel> {
    let all = CausalLabel::ALL;
    let rows = (0..units)
        .map(|u| {
            (0..3)
                .map(|r| match (u * 7 + r * 3) % 11 {
                    0 => None,
                    1 => Some(all[(u + 1) % 3]),
                    _ => Some(all[u % 3]),
                })
                .collect()
        })
        .collect();
    ReliabilityData::new(rows)
}
