use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::annotation::CausalLabel;
use crate::corpus::StoryCollection;
use crate::error::{Error, Result};
use crate::graph::{CausalGraph, CooccurrenceMatrix};
use crate::ids::{ClusterId, StoryId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuestionKind {
    /// The target is the mention as written.
    Specific,
    /// The target is the mention's generalization.
    Abstract,
}

/// What the question asks for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Cause,
    Effect,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Cause => "cause",
            Direction::Effect => "effect",
        }
    }
}

/// Graph knowledge attached to a question: `related` is a `direction` of
/// `source`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CgHint {
    pub source: ClusterId,
    pub source_topic: String,
    pub related: ClusterId,
    pub related_topic: String,
    pub direction: Direction,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaItem {
    pub question_id: String,
    pub story_id: StoryId,
    pub story_text: String,
    pub question_kind: QuestionKind,
    pub direction: Direction,
    pub target: String,
    pub choices: Vec<String>,
    pub gold: BTreeSet<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cg_hint: Option<CgHint>,
}

impl QaItem {
    pub fn validate(&self) -> Result<()> {
        if self.choices.len() < 2 {
            return Err(Error::Invalid(format!(
                "`{}` needs at least two choices",
                self.question_id
            )));
        }
        if self.gold.is_empty() || self.gold.iter().any(|&g| g >= self.choices.len()) {
            return Err(Error::Invalid(format!(
                "`{}` has gold outside its choices",
                self.question_id
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscoveryItem {
    pub pair_id: String,
    pub event_a: String,
    pub event_b: String,
    pub gold: CausalLabel,
}

/// One cause question and one effect question per annotated target. Pairs
/// sharing a target and direction merge into one question with several
/// gold answers. `extras` adds expert answers by question id; with
/// `paraphrases` the story text is replaced but the choices stay original.
pub fn build_qa(
    col: &StoryCollection,
    kind: QuestionKind,
    paraphrases: Option<&BTreeMap<StoryId, String>>,
    extras: Option<&BTreeMap<String, BTreeSet<usize>>>,
) -> Result<Vec<QaItem>> {
    let mut grouped: BTreeMap<(StoryId, String, Direction), BTreeSet<usize>> = BTreeMap::new();
    for (c, e) in col.causal.pairs() {
        let (cm, em) = (&col.mentions[c], &col.mentions[e]);
        if cm.story_id != em.story_id {
            log::warn!("pair `{c}` -> `{e}` spans two stories; skipped");
            continue;
        }
        grouped
            .entry((em.story_id.clone(), e.to_string(), Direction::Cause))
            .or_default()
            .insert(cm.sentence_index);
        grouped
            .entry((cm.story_id.clone(), c.to_string(), Direction::Effect))
            .or_default()
            .insert(em.sentence_index);
    }
    let mut items = Vec::with_capacity(grouped.len());
    for ((story_id, target_id, direction), mut gold) in grouped {
        let story = &col.stories[&story_id];
        let mention = &col.mentions[target_id.as_str()];
        let question_id = format!("{story_id}:{target_id}:{}", direction.as_str());
        if let Some(extra) = extras.and_then(|x| x.get(&question_id)) {
            gold.extend(extra);
        }
        let target = match kind {
            QuestionKind::Specific => mention.text.clone(),
            QuestionKind::Abstract => mention.generalized_text().to_owned(),
        };
        let story_text = match paraphrases.and_then(|p| p.get(&story_id)) {
            Some(p) => p.clone(),
            None => story.sentences.join(" "),
        };
        let item = QaItem {
            question_id,
            story_id,
            story_text,
            question_kind: kind,
            direction,
            target,
            choices: story.sentences.clone(),
            gold,
            cg_hint: None,
        };
        item.validate()?;
        items.push(item);
    }
    Ok(items)
}

fn topic_of<'a>(topics: &'a BTreeMap<ClusterId, String>, id: &ClusterId) -> Result<&'a str> {
    topics
        .get(id)
        .map(String::as_str)
        .ok_or_else(|| Error::Precondition(format!("cluster `{id}` has no topic")))
}

/// Positive pairs from graph edges; each pair is presented in a random
/// order so both directed labels occur.
pub fn discovery_items(g: &CausalGraph, topics: &BTreeMap<ClusterId, String>, seed: u64) -> Result<Vec<DiscoveryItem>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    g.edge_ids()
        .enumerate()
        .map(|(i, (a, b))| {
            let (ta, tb) = (topic_of(topics, a)?, topic_of(topics, b)?);
            let swap = rng.gen_bool(0.5);
            Ok(DiscoveryItem {
                pair_id: format!("pos-{i:05}"),
                event_a: if swap { tb } else { ta }.to_owned(),
                event_b: if swap { ta } else { tb }.to_owned(),
                gold: if swap {
                    CausalLabel::BCausesA
                } else {
                    CausalLabel::ACausesB
                },
            })
        })
        .collect()
}

/// Uniformly sampled unordered node pairs with no edge either way and, when
/// `cooccur` is given, no story mentioning both.
pub fn generate_negatives(
    g: &CausalGraph,
    topics: &BTreeMap<ClusterId, String>,
    count: usize,
    seed: u64,
    cooccur: Option<&CooccurrenceMatrix>,
) -> Result<Vec<DiscoveryItem>> {
    let n = g.node_count();
    if n < 2 {
        return Err(Error::Invalid("negative sampling needs at least two nodes".into()));
    }
    let together: BTreeSet<(usize, usize)> = match cooccur {
        None => BTreeSet::new(),
        Some(m) => {
            let cols: Vec<Option<usize>> = g.nodes().iter().map(|id| m.column(id)).collect();
            let mut set = BTreeSet::new();
            for row in &m.values {
                let present: Vec<usize> = (0..n).filter(|&i| cols[i].is_some_and(|j| row[j] > 0)).collect();
                for (k, &i) in present.iter().enumerate() {
                    for &j in &present[k + 1..] {
                        set.insert((i, j));
                    }
                }
            }
            set
        }
    };
    let candidates: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .filter(|&(i, j)| !g.adjacent(i, j) && !together.contains(&(i, j)))
        .collect();
    if candidates.len() < count {
        return Err(Error::Precondition(format!(
            "{count} negatives requested, only {} non-adjacent pairs exist",
            candidates.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    candidates
        .choose_multiple(&mut rng, count)
        .enumerate()
        .map(|(k, &(i, j))| {
            Ok(DiscoveryItem {
                pair_id: format!("neg-{k:05}"),
                event_a: topic_of(topics, &g.nodes()[i])?.to_owned(),
                event_b: topic_of(topics, &g.nodes()[j])?.to_owned(),
                gold: CausalLabel::None,
            })
        })
        .collect()
}

pub fn write_jsonl<T: Serialize>(items: &[T], mut w: impl Write) -> Result<()> {
    for item in items {
        let line = serde_json::to_string(item).map_err(|e| Error::Invalid(e.to_string()))?;
        writeln!(w, "{line}").map_err(|e| Error::io("<output>", e))?;
    }
    Ok(())
}

pub fn read_jsonl<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<Vec<T>> {
    let path = path.as_ref();
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::parse(i + 1, e.to_string()))?);
    }
    Ok(out)
}
