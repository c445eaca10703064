//! Input loaders that digest every file they read.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};

use eventcause::{
    CausalGraph, ClusterId, ClusterSet, CooccurrenceMatrix, EmbeddingTable, ParaphraseTable, StoryCollection,
};

use crate::manifest::Ctx;

const PHR_DEFAULT_WITHOUT_FILE: f64 = 0.5;

fn ctx_err(path: &Path) -> impl Fn() -> String + '_ {
    move || format!("loading {}", path.display())
}

pub fn corpus(ctx: &mut Ctx, path: &Path) -> Result<StoryCollection> {
    let bytes = ctx.read(path)?;
    StoryCollection::from_reader(&bytes[..]).with_context(ctx_err(path))
}

pub fn clusters(ctx: &mut Ctx, path: &Path) -> Result<ClusterSet> {
    let bytes = ctx.read(path)?;
    serde_json::from_slice(&bytes).with_context(ctx_err(path))
}

/// Edge list over `nodes` first, so isolated clusters survive.
pub fn graph(ctx: &mut Ctx, path: &Path, nodes: Option<&[ClusterId]>) -> Result<CausalGraph> {
    let bytes = ctx.read(path)?;
    CausalGraph::read_edge_list(&bytes[..], nodes).with_context(ctx_err(path))
}

pub fn cluster_ids(cs: &ClusterSet) -> Vec<ClusterId> {
    cs.clusters.iter().map(|c| c.cluster_id.clone()).collect()
}

pub fn cooccurrence(ctx: &mut Ctx, path: &Path) -> Result<CooccurrenceMatrix> {
    let bytes = ctx.read(path)?;
    CooccurrenceMatrix::read_csv(&bytes[..]).with_context(ctx_err(path))
}

pub fn embeddings(ctx: &mut Ctx, path: &Path) -> Result<EmbeddingTable> {
    let bytes = ctx.read(path)?;
    EmbeddingTable::from_reader(&bytes[..]).with_context(ctx_err(path))
}

/// Without a file every pair scores `default` (0.5 unless given).
pub fn paraphrases(ctx: &mut Ctx, path: Option<&Path>, default: Option<f64>) -> Result<ParaphraseTable> {
    match path {
        None => Ok(ParaphraseTable::with_default(Some(
            default.unwrap_or(PHR_DEFAULT_WITHOUT_FILE),
        ))?),
        Some(p) => {
            let bytes = ctx.read(p)?;
            ParaphraseTable::from_reader(&bytes[..], default).with_context(ctx_err(p))
        }
    }
}

/// `key<TAB>value` lines; blank lines and `#` comments skipped.
pub fn tsv_map(ctx: &mut Ctx, path: &Path) -> Result<BTreeMap<String, String>> {
    let text = ctx.read_string(path)?;
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('\t') else {
            bail!("{}:{}: expected `key<TAB>value`", path.display(), i + 1);
        };
        if out.insert(k.to_owned(), v.to_owned()).is_some() {
            bail!("{}:{}: duplicate key `{k}`", path.display(), i + 1);
        }
    }
    Ok(out)
}
