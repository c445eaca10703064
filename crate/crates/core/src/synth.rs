//! Synthetic corpora with planted event types, for tests and benchmarks.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::corpus::{EventMention, MentionCausalSet, Story, StoryCollection};
use crate::error::{Error, Result};
use crate::ids::{MentionId, StoryId};
use crate::similarity::{EmbeddingTable, ParaphraseTable};

#[derive(Clone, Debug)]
pub struct SynthParams {
    /// Number of latent event types.
    pub types: usize,
    pub stories: usize,
    /// Annotated cause/effect pairs per story.
    pub pairs_per_story: usize,
    /// Edge probability of the latent type DAG.
    pub edge_prob: f64,
    /// Chance that a story annotates a latent edge backwards.
    pub reverse_prob: f64,
    pub dim: usize,
    /// Embedding noise relative to the unit type vector.
    pub noise: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            types: 8,
            stories: 30,
            pairs_per_story: 2,
            edge_prob: 0.4,
            reverse_prob: 0.05,
            dim: 16,
            noise: 0.15,
        }
    }
}

/// A corpus together with the similarity inputs for it and the latent type
/// of every mention.
#[derive(Clone, Debug)]
pub struct SynthCorpus {
    pub collection: StoryCollection,
    pub embeddings: EmbeddingTable,
    pub paraphrases: ParaphraseTable,
    pub types: BTreeMap<MentionId, usize>,
}

fn unit(v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

/// Each story annotates `pairs_per_story` edges of a random type DAG, one
/// mention per sentence. Mentions of a type share a generalization and
/// embed near a common vector; paraphrase scores are high within a type.
pub fn synthetic_corpus(p: &SynthParams, seed: u64) -> Result<SynthCorpus> {
    if p.types < 2 || p.stories == 0 || p.pairs_per_story == 0 || p.dim == 0 {
        return Err(Error::Invalid(
            "synthetic corpus needs 2+ types, stories, pairs and dim".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for a in 0..p.types {
        for b in a + 1..p.types {
            if rng.gen_bool(p.edge_prob.clamp(0.0, 1.0)) {
                edges.push((a, b));
            }
        }
    }
    if edges.is_empty() {
        edges.push((0, 1));
    }
    let centres: Vec<Vec<f64>> = (0..p.types)
        .map(|_| unit((0..p.dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()))
        .collect();

    let mut col = StoryCollection::default();
    let mut embeddings = EmbeddingTable::new(p.dim)?;
    let mut types = BTreeMap::new();
    let mut causal = MentionCausalSet::new();
    for s in 0..p.stories {
        let story_id = StoryId::new(format!("s{s:04}"));
        let mut sentences = Vec::new();
        for k in 0..p.pairs_per_story {
            let &(mut a, mut b) = edges.choose(&mut rng).expect("non-empty");
            if rng.gen_bool(p.reverse_prob.clamp(0.0, 1.0)) {
                std::mem::swap(&mut a, &mut b);
            }
            let mut pair = Vec::new();
            for t in [a, b] {
                let idx = sentences.len();
                let mid = MentionId::new(format!("s{s:04}-m{idx}"));
                let text = format!("character {k} does thing {t} way {}", rng.gen_range(0..3));
                sentences.push(format!("{text}."));
                col.mentions.insert(
                    mid.clone(),
                    EventMention {
                        mention_id: mid.clone(),
                        story_id: story_id.clone(),
                        sentence_index: idx,
                        text,
                        generalization: Some(format!("someone does thing {t}")),
                        abstraction_hint: None,
                    },
                );
                let v = centres[t]
                    .iter()
                    .map(|c| c + p.noise * rng.sample::<f64, _>(StandardNormal))
                    .collect();
                embeddings.insert(mid.clone(), v)?;
                types.insert(mid.clone(), t);
                pair.push(mid);
            }
            causal.insert(pair[0].clone(), pair[1].clone(), None)?;
        }
        col.stories.insert(
            story_id.clone(),
            Story {
                story_id,
                sentences,
                source: None,
            },
        );
    }
    col.causal = causal;

    let mut paraphrases = ParaphraseTable::with_default(None)?;
    let ids: Vec<&MentionId> = types.keys().collect();
    for (i, x) in ids.iter().enumerate() {
        for y in &ids[i + 1..] {
            let same = types[*x] == types[*y];
            let base = if same { 0.9 } else { 0.1 };
            let score: f64 = base + rng.gen_range(-0.08..0.08);
            paraphrases.insert(x, y, score.clamp(0.0, 1.0))?;
        }
    }
    Ok(SynthCorpus {
        collection: col,
        embeddings,
        paraphrases,
        types,
    })
}
