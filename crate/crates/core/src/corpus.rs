//! Stories, event mentions and mention-level causal annotations.
//!
//! The on-disk format is one JSON record per line:
//!
//! ```text
//! {"story_id": "s1", "sentences": ["..."],
//!  "mentions": [{"mention_id": "m1", "sentence_index": 0, "text": "...", "generalization": "..."}],
//!  "relations": [{"cause": "m1", "effect": "m2", "dimension": 1}]}
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ids::{MentionId, StoryId};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Story {
    pub story_id: StoryId,
    pub sentences: Vec<String>,
    pub source: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EventMention {
    pub mention_id: MentionId,
    pub story_id: StoryId,
    pub sentence_index: usize,
    pub text: String,
    pub generalization: Option<String>,
    pub abstraction_hint: Option<String>,
}

impl EventMention {
    /// The concept-level rewrite when available, the surface text otherwise.
    pub fn generalized_text(&self) -> &str {
        self.generalization.as_deref().unwrap_or(&self.text)
    }
}

/// Direction of an annotated relation as seen from the first argument.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Causes,
    CausedBy,
    None,
}

/// Annotated cause → effect pairs between mentions, stored once in the
/// canonical direction.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MentionCausalSet {
    pairs: BTreeMap<(MentionId, MentionId), Option<u32>>,
    effects: BTreeMap<MentionId, BTreeSet<MentionId>>,
    causes: BTreeMap<MentionId, BTreeSet<MentionId>>,
}

impl MentionCausalSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `cause → effect`. Self pairs and pairs whose reverse is already
    /// annotated are rejected; re-adding an existing pair is a no-op.
    pub fn insert(&mut self, cause: MentionId, effect: MentionId, dimension: Option<u32>) -> Result<()> {
        if cause == effect {
            return Err(Error::Invalid(format!("mention `{cause}` annotated as its own cause")));
        }
        if self.contains(&effect, &cause) {
            return Err(Error::Invalid(format!(
                "reciprocal annotation between `{cause}` and `{effect}`"
            )));
        }
        self.effects.entry(cause.clone()).or_default().insert(effect.clone());
        self.causes.entry(effect.clone()).or_default().insert(cause.clone());
        self.pairs.entry((cause, effect)).or_insert(dimension);
        Ok(())
    }

    pub fn contains(&self, cause: &MentionId, effect: &MentionId) -> bool {
        self.effects.get(cause).is_some_and(|e| e.contains(effect))
    }

    /// True when the two mentions are annotated in either direction.
    pub fn linked(&self, x: &MentionId, y: &MentionId) -> bool {
        self.contains(x, y) || self.contains(y, x)
    }

    pub fn relation(&self, x: &MentionId, y: &MentionId) -> Relation {
        if self.contains(x, y) {
            Relation::Causes
        } else if self.contains(y, x) {
            Relation::CausedBy
        } else {
            Relation::None
        }
    }

    pub fn effects_of(&self, m: &MentionId) -> impl Iterator<Item = &MentionId> {
        self.effects.get(m).into_iter().flatten()
    }

    pub fn causes_of(&self, m: &MentionId) -> impl Iterator<Item = &MentionId> {
        self.causes.get(m).into_iter().flatten()
    }

    /// Pairs in `(cause, effect)` order, sorted.
    pub fn pairs(&self) -> impl Iterator<Item = (&MentionId, &MentionId)> {
        self.pairs.keys().map(|(c, e)| (c, e))
    }

    pub fn dimension(&self, cause: &MentionId, effect: &MentionId) -> Option<u32> {
        self.pairs.get(&(cause.clone(), effect.clone())).copied().flatten()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

impl FromIterator<(MentionId, MentionId)> for MentionCausalSet {
    /// Builds a set, silently skipping self pairs and reciprocal duplicates.
    fn from_iter<I: IntoIterator<Item = (MentionId, MentionId)>>(iter: I) -> Self {
        let mut set = Self::new();
        for (c, e) in iter {
            let _ = set.insert(c, e, None);
        }
        set
    }
}

/// A validated corpus. Immutable after loading.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StoryCollection {
    pub stories: BTreeMap<StoryId, Story>,
    pub mentions: BTreeMap<MentionId, EventMention>,
    pub causal: MentionCausalSet,
}

#[derive(Debug, Serialize, Deserialize)]
struct StoryRecord {
    story_id: StoryId,
    sentences: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    source: Option<String>,
    #[serde(default)]
    mentions: Vec<MentionRecord>,
    #[serde(default)]
    relations: Vec<RelationRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
struct MentionRecord {
    mention_id: MentionId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    story_id: Option<StoryId>,
    sentence_index: usize,
    text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    generalization: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    abstraction_hint: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RelationRecord {
    cause: MentionId,
    effect: MentionId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dimension: Option<u32>,
}

impl StoryCollection {
    pub fn from_reader(reader: impl BufRead) -> Result<Self> {
        let mut records = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let line = line.map_err(|e| Error::parse(line_no, e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: StoryRecord = serde_json::from_str(&line).map_err(|e| Error::parse(line_no, e.to_string()))?;
            records.push((line_no, rec));
        }
        Self::from_records(records)
    }

    fn from_records(records: Vec<(usize, StoryRecord)>) -> Result<Self> {
        let mut col = StoryCollection::default();
        for (line_no, rec) in &records {
            if rec.sentences.is_empty() {
                return Err(Error::parse(
                    *line_no,
                    format!("story `{}` has no sentences", rec.story_id),
                ));
            }
            if col.stories.contains_key(&rec.story_id) {
                return Err(Error::DuplicateId {
                    kind: "story",
                    id: rec.story_id.to_string(),
                });
            }
            col.stories.insert(
                rec.story_id.clone(),
                Story {
                    story_id: rec.story_id.clone(),
                    sentences: rec.sentences.clone(),
                    source: rec.source.clone(),
                },
            );
        }
        for (line_no, rec) in &records {
            for m in &rec.mentions {
                let story_id = m.story_id.clone().unwrap_or_else(|| rec.story_id.clone());
                let story = col
                    .stories
                    .get(&story_id)
                    .ok_or_else(|| Error::unknown("story", &story_id))?;
                if m.sentence_index >= story.sentences.len() {
                    return Err(Error::parse(
                        *line_no,
                        format!(
                            "mention `{}` sentence_index {} out of range for story `{}`",
                            m.mention_id, m.sentence_index, story_id
                        ),
                    ));
                }
                if m.generalization.as_deref().is_some_and(|g| g.trim().is_empty()) {
                    return Err(Error::parse(
                        *line_no,
                        format!("mention `{}` has an empty generalization", m.mention_id),
                    ));
                }
                if col.mentions.contains_key(&m.mention_id) {
                    return Err(Error::DuplicateId {
                        kind: "mention",
                        id: m.mention_id.to_string(),
                    });
                }
                col.mentions.insert(
                    m.mention_id.clone(),
                    EventMention {
                        mention_id: m.mention_id.clone(),
                        story_id,
                        sentence_index: m.sentence_index,
                        text: m.text.clone(),
                        generalization: m.generalization.clone(),
                        abstraction_hint: m.abstraction_hint.clone(),
                    },
                );
            }
        }
        for (line_no, rec) in records {
            for r in rec.relations {
                for id in [&r.cause, &r.effect] {
                    if !col.mentions.contains_key(id) {
                        return Err(Error::unknown("mention", id));
                    }
                }
                col.causal
                    .insert(r.cause, r.effect, r.dimension)
                    .map_err(|e| Error::parse(line_no, e.to_string()))?;
            }
        }
        Ok(col)
    }

    /// Writes the collection in the same line format `load_stories` reads.
    /// Relations are emitted with the story of their cause mention.
    pub fn write_jsonl(&self, mut w: impl Write) -> std::io::Result<()> {
        let mut mentions_by_story: BTreeMap<&StoryId, Vec<&EventMention>> = BTreeMap::new();
        for m in self.mentions.values() {
            mentions_by_story.entry(&m.story_id).or_default().push(m);
        }
        let mut relations_by_story: BTreeMap<&StoryId, Vec<RelationRecord>> = BTreeMap::new();
        for (c, e) in self.causal.pairs() {
            let story = &self.mentions[c].story_id;
            relations_by_story.entry(story).or_default().push(RelationRecord {
                cause: c.clone(),
                effect: e.clone(),
                dimension: self.causal.dimension(c, e),
            });
        }
        for story in self.stories.values() {
            let rec = StoryRecord {
                story_id: story.story_id.clone(),
                sentences: story.sentences.clone(),
                source: story.source.clone(),
                mentions: mentions_by_story
                    .remove(&story.story_id)
                    .unwrap_or_default()
                    .into_iter()
                    .map(|m| MentionRecord {
                        mention_id: m.mention_id.clone(),
                        story_id: None,
                        sentence_index: m.sentence_index,
                        text: m.text.clone(),
                        generalization: m.generalization.clone(),
                        abstraction_hint: m.abstraction_hint.clone(),
                    })
                    .collect(),
                relations: relations_by_story.remove(&story.story_id).unwrap_or_default(),
            };
            serde_json::to_writer(&mut w, &rec)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(f);
        self.write_jsonl(&mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Annotated relation between two mentions; both must exist.
    pub fn mention_relation(&self, x: &MentionId, y: &MentionId) -> Result<Relation> {
        for id in [x, y] {
            if !self.mentions.contains_key(id) {
                return Err(Error::unknown("mention", id));
            }
        }
        Ok(self.causal.relation(x, y))
    }

    pub fn mention_ids(&self) -> Vec<MentionId> {
        self.mentions.keys().cloned().collect()
    }

    /// Mentions of each story, in mention-id order.
    pub fn mentions_by_story(&self) -> BTreeMap<&StoryId, Vec<&EventMention>> {
        let mut out: BTreeMap<&StoryId, Vec<&EventMention>> = BTreeMap::new();
        for m in self.mentions.values() {
            out.entry(&m.story_id).or_default().push(m);
        }
        out
    }
}

/// Reads and validates a line-delimited corpus file.
pub fn load_stories(path: impl AsRef<Path>) -> Result<StoryCollection> {
    let path = path.as_ref();
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    StoryCollection::from_reader(BufReader::new(f))
}
