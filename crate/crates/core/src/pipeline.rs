//! Phase 1 end to end: similarity, clustering, consistency repair, topics,
//! graph lifting and the co-occurrence matrix.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::clustering::{
    assign_topics, drop_isolated_clusters, enforce_causal_consistency, pivot_cluster, prune_clusters, ClusterSet,
};
use crate::corpus::StoryCollection;
use crate::error::Result;
use crate::graph::{
    build_cooccurrence, lift_relations, CausalGraph, CooccurrenceMatrix, CooccurrenceMode, LiftWarning,
};
use crate::similarity::{EmbeddingTable, ParaphraseTable, SimilarityMatrix};

pub const DEFAULT_THRESHOLD: f64 = 0.70;
pub const DEFAULT_MIN_SIZE: usize = 10;
pub const DEFAULT_SIM_FLOOR: f64 = 0.50;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineParams {
    pub seed: u64,
    pub threshold: f64,
    pub min_size: usize,
    pub sim_floor: f64,
    pub cooccurrence: CooccurrenceMode,
}

impl Default for PipelineParams {
    fn default() -> Self {
        Self {
            seed: 0,
            threshold: DEFAULT_THRESHOLD,
            min_size: DEFAULT_MIN_SIZE,
            sim_floor: DEFAULT_SIM_FLOOR,
            cooccurrence: CooccurrenceMode::Count,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PipelineOutput {
    pub clusters: ClusterSet,
    pub graph: CausalGraph,
    pub cooccurrence: CooccurrenceMatrix,
    pub warnings: Vec<LiftWarning>,
}

pub fn run_phase1(
    col: &StoryCollection,
    emb: &EmbeddingTable,
    phr: &ParaphraseTable,
    params: &PipelineParams,
) -> Result<PipelineOutput> {
    let ids = col.mention_ids();
    let s = SimilarityMatrix::build(ids.clone(), emb, phr, &col.causal)?;
    let universe: BTreeSet<_> = ids.into_iter().collect();
    let cs = pivot_cluster(&universe, &s, &col.causal, params.seed, params.threshold)?;
    let cs = prune_clusters(cs, &s, params.min_size, params.sim_floor)?;
    let cs = enforce_causal_consistency(cs, &col.causal);
    let cs = drop_isolated_clusters(cs, &col.causal);
    let cs = assign_topics(cs, col, &s)?;
    let (graph, warnings) = lift_relations(&cs, &col.causal);
    let cooccurrence = build_cooccurrence(col, &cs, params.cooccurrence)?;
    Ok(PipelineOutput {
        clusters: cs,
        graph,
        cooccurrence,
        warnings,
    })
}
