use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::vote::{CausalLabel, VoteOutcome};
use crate::clustering::{candidate_clusters_for_outlier, ClusterSet};
use crate::corpus::{MentionCausalSet, StoryCollection};
use crate::error::{Error, Result};
use crate::ids::{ClusterId, MentionId, StoryId};
use crate::lemma::normalize_mention;

pub const DEFAULT_BATCH_SIZE: usize = 60;
pub const DEFAULT_ANNOTATORS_PER_TASK: usize = 2;
pub const DEFAULT_ANNOTATORS_PER_PAIR: usize = 3;
/// Upper bound on story contexts attached to one re-evaluation task.
pub const MAX_CONTEXTS: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Subcluster,
    Topic,
    CausalPair,
    TopicMatch,
    ReevalWithContext,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskStatus {
    Open,
    Done,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemberView {
    pub mention_id: MentionId,
    pub text: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicRef {
    pub cluster_id: ClusterId,
    pub topic: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoryContext {
    pub story_id: StoryId,
    pub sentences: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TaskPayload {
    Subcluster {
        cluster_id: ClusterId,
        members: Vec<MemberView>,
    },
    Topic {
        cluster_id: ClusterId,
        members: Vec<MemberView>,
        candidates: Vec<String>,
    },
    CausalPair {
        a: TopicRef,
        b: TopicRef,
    },
    TopicMatch {
        mention: MemberView,
        candidates: Vec<TopicRef>,
    },
    ReevalWithContext {
        a: TopicRef,
        b: TopicRef,
        contexts: Vec<StoryContext>,
        /// No story mentions both clusters; contexts come from each side.
        flagged: bool,
        origin: String,
    },
}

impl TaskPayload {
    pub fn kind(&self) -> TaskKind {
        match self {
            TaskPayload::Subcluster { .. } => TaskKind::Subcluster,
            TaskPayload::Topic { .. } => TaskKind::Topic,
            TaskPayload::CausalPair { .. } => TaskKind::CausalPair,
            TaskPayload::TopicMatch { .. } => TaskKind::TopicMatch,
            TaskPayload::ReevalWithContext { .. } => TaskKind::ReevalWithContext,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationTask {
    pub task_id: String,
    pub batch: usize,
    pub payload: TaskPayload,
    pub assigned_to: Vec<String>,
    pub status: TaskStatus,
}

impl AnnotationTask {
    pub fn kind(&self) -> TaskKind {
        self.payload.kind()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubGroup {
    pub members: BTreeSet<MentionId>,
    pub topic: String,
}

/// A validated answer, tagged by task kind.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Answer {
    Subcluster {
        groups: Vec<SubGroup>,
        #[serde(default)]
        outliers: BTreeSet<MentionId>,
    },
    Topic {
        /// `None` marks the sub-cluster as outliers.
        topic: Option<String>,
    },
    CausalPair {
        label: CausalLabel,
    },
    TopicMatch {
        /// `None` when no candidate topic fits.
        cluster_id: Option<ClusterId>,
    },
    ReevalWithContext {
        label: CausalLabel,
    },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SubclusterBody {
    groups: Vec<SubGroup>,
    #[serde(default)]
    outliers: BTreeSet<MentionId>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TopicBody {
    #[serde(default)]
    topic: Option<String>,
    #[serde(default)]
    outlier: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LabelBody {
    label: CausalLabel,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MatchBody {
    cluster_id: Option<ClusterId>,
}

fn body<T: serde::de::DeserializeOwned>(v: &serde_json::Value) -> Result<T> {
    serde_json::from_value(v.clone()).map_err(|e| Error::Schema(e.to_string()))
}

fn member_set(members: &[MemberView]) -> BTreeSet<&MentionId> {
    members.iter().map(|m| &m.mention_id).collect()
}

impl Answer {
    /// Parses an untagged answer body against the task it answers.
    pub fn parse(task: &AnnotationTask, v: &serde_json::Value) -> Result<Self> {
        let answer = match &task.payload {
            TaskPayload::Subcluster { members, .. } => {
                let b: SubclusterBody = body(v)?;
                let expected = member_set(members);
                let mut seen = BTreeSet::new();
                for m in b.groups.iter().flat_map(|g| &g.members).chain(&b.outliers) {
                    if !seen.insert(m) {
                        return Err(Error::Schema(format!("`{m}` placed twice")));
                    }
                }
                if seen != expected {
                    return Err(Error::Schema(
                        "groups and outliers must cover the members exactly".into(),
                    ));
                }
                if b.groups
                    .iter()
                    .any(|g| g.members.is_empty() || g.topic.trim().is_empty())
                {
                    return Err(Error::Schema("every group needs members and a topic".into()));
                }
                Answer::Subcluster {
                    groups: b.groups,
                    outliers: b.outliers,
                }
            }
            TaskPayload::Topic { .. } => {
                let b: TopicBody = body(v)?;
                match (b.topic, b.outlier) {
                    (Some(t), false) if !t.trim().is_empty() => Answer::Topic { topic: Some(t) },
                    (None, true) => Answer::Topic { topic: None },
                    _ => return Err(Error::Schema("give either a non-empty topic or outlier: true".into())),
                }
            }
            TaskPayload::CausalPair { .. } => Answer::CausalPair {
                label: body::<LabelBody>(v)?.label,
            },
            TaskPayload::ReevalWithContext { .. } => Answer::ReevalWithContext {
                label: body::<LabelBody>(v)?.label,
            },
            TaskPayload::TopicMatch { candidates, .. } => {
                let b: MatchBody = body(v)?;
                if let Some(c) = &b.cluster_id {
                    if !candidates.iter().any(|t| &t.cluster_id == c) {
                        return Err(Error::Schema(format!("`{c}` is not a candidate cluster")));
                    }
                }
                Answer::TopicMatch {
                    cluster_id: b.cluster_id,
                }
            }
        };
        Ok(answer)
    }

    pub fn label(&self) -> Option<CausalLabel> {
        match self {
            Answer::CausalPair { label } | Answer::ReevalWithContext { label } => Some(*label),
            _ => None,
        }
    }
}

fn member_views(col: &StoryCollection, members: &BTreeSet<MentionId>) -> Result<Vec<MemberView>> {
    members
        .iter()
        .map(|m| {
            let mention = col.mentions.get(m).ok_or_else(|| Error::unknown("mention", m))?;
            Ok(MemberView {
                mention_id: m.clone(),
                text: normalize_mention(mention.generalized_text())?,
            })
        })
        .collect()
}

fn assignees(annotators: &[String], per_task: usize, slot: usize) -> Result<Vec<String>> {
    if annotators.is_empty() {
        return Err(Error::Precondition("no annotators registered".into()));
    }
    if per_task == 0 || annotators.len() < per_task {
        return Err(Error::Precondition(format!(
            "{per_task} annotators per task requested, {} registered",
            annotators.len()
        )));
    }
    Ok((0..per_task)
        .map(|i| annotators[(slot * per_task + i) % annotators.len()].clone())
        .collect())
}

/// One sub-clustering task per cluster. Clusters are batched in order and
/// each batch goes to `annotators_per_task` annotators, rotating through
/// the registry.
pub fn generate_tasks(
    cs: &ClusterSet,
    col: &StoryCollection,
    annotators: &[String],
    batch_size: usize,
    annotators_per_task: usize,
) -> Result<Vec<AnnotationTask>> {
    if cs.clusters.is_empty() {
        return Err(Error::Empty("cluster set"));
    }
    if batch_size == 0 {
        return Err(Error::Invalid("batch size must be positive".into()));
    }
    let mut tasks = Vec::with_capacity(cs.clusters.len());
    for (b, chunk) in cs.clusters.chunks(batch_size).enumerate() {
        let who = assignees(annotators, annotators_per_task, b)?;
        for c in chunk {
            tasks.push(AnnotationTask {
                task_id: format!("sub-{b:03}-{}", c.cluster_id),
                batch: b,
                payload: TaskPayload::Subcluster {
                    cluster_id: c.cluster_id.clone(),
                    members: member_views(col, &c.members)?,
                },
                assigned_to: who.clone(),
                status: TaskStatus::Open,
            });
        }
    }
    Ok(tasks)
}

/// Topic alignment: one task per unified sub-cluster carrying both
/// annotators' topics, for a single reviewer.
pub fn topic_alignment_tasks(
    groups: &[(ClusterId, BTreeSet<MentionId>, Vec<String>)],
    col: &StoryCollection,
    reviewer: &str,
) -> Result<Vec<AnnotationTask>> {
    groups
        .iter()
        .enumerate()
        .map(|(i, (id, members, candidates))| {
            Ok(AnnotationTask {
                task_id: format!("topic-{i:05}"),
                batch: 0,
                payload: TaskPayload::Topic {
                    cluster_id: id.clone(),
                    members: member_views(col, members)?,
                    candidates: candidates.clone(),
                },
                assigned_to: vec![reviewer.to_owned()],
                status: TaskStatus::Open,
            })
        })
        .collect()
}

fn topic_ref(cs: &ClusterSet, id: &ClusterId) -> Result<TopicRef> {
    let c = cs.get(id).ok_or_else(|| Error::unknown("cluster", id))?;
    let topic = c
        .topic
        .clone()
        .ok_or_else(|| Error::Precondition(format!("cluster `{id}` has no topic")))?;
    Ok(TopicRef {
        cluster_id: id.clone(),
        topic,
    })
}

/// Topic matching: each outlier is offered only the clusters it can join
/// without breaking causal consistency.
pub fn topic_match_tasks(
    cs: &ClusterSet,
    col: &StoryCollection,
    causal: &MentionCausalSet,
    reviewer: &str,
) -> Result<Vec<AnnotationTask>> {
    let mut tasks = Vec::new();
    for (i, o) in cs.outliers.iter().enumerate() {
        let candidates = candidate_clusters_for_outlier(o, cs, causal)?
            .iter()
            .map(|id| topic_ref(cs, id))
            .collect::<Result<Vec<_>>>()?;
        let mention = member_views(col, &BTreeSet::from([o.clone()]))?.remove(0);
        tasks.push(AnnotationTask {
            task_id: format!("match-{i:05}"),
            batch: 0,
            payload: TaskPayload::TopicMatch { mention, candidates },
            assigned_to: vec![reviewer.to_owned()],
            status: TaskStatus::Open,
        });
    }
    Ok(tasks)
}

/// Three-way causal judgments over candidate cluster pairs, one batch per
/// `batch_size` pairs.
pub fn causal_pair_tasks(
    cs: &ClusterSet,
    pairs: &[(ClusterId, ClusterId)],
    annotators: &[String],
    batch_size: usize,
    annotators_per_pair: usize,
) -> Result<Vec<AnnotationTask>> {
    if batch_size == 0 {
        return Err(Error::Invalid("batch size must be positive".into()));
    }
    let mut seen = BTreeSet::new();
    let mut tasks = Vec::with_capacity(pairs.len());
    for (i, (a, b)) in pairs.iter().enumerate() {
        if a == b {
            return Err(Error::Invalid(format!("pair `{a}`/`{b}` repeats a cluster")));
        }
        if !seen.insert((a.min(b), a.max(b))) {
            return Err(Error::DuplicateId {
                kind: "cluster pair",
                id: format!("{a}/{b}"),
            });
        }
        let batch = i / batch_size;
        tasks.push(AnnotationTask {
            task_id: format!("pair-{i:05}"),
            batch,
            payload: TaskPayload::CausalPair {
                a: topic_ref(cs, a)?,
                b: topic_ref(cs, b)?,
            },
            assigned_to: assignees(annotators, annotators_per_pair, batch)?,
            status: TaskStatus::Open,
        });
    }
    Ok(tasks)
}

/// Stories per cluster plus story text, enough to attach contexts to
/// re-evaluation tasks without the full corpus.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextIndex {
    pub stories_by_cluster: BTreeMap<ClusterId, BTreeSet<StoryId>>,
    pub sentences: BTreeMap<StoryId, Vec<String>>,
}

impl ContextIndex {
    pub fn new(col: &StoryCollection, cs: &ClusterSet) -> Self {
        let mut stories_by_cluster: BTreeMap<ClusterId, BTreeSet<StoryId>> = BTreeMap::new();
        for c in &cs.clusters {
            let stories = c
                .members
                .iter()
                .filter_map(|m| col.mentions.get(m))
                .map(|m| m.story_id.clone())
                .collect();
            stories_by_cluster.insert(c.cluster_id.clone(), stories);
        }
        let used: BTreeSet<&StoryId> = stories_by_cluster.values().flatten().collect();
        let sentences = col
            .stories
            .iter()
            .filter(|(id, _)| used.contains(id))
            .map(|(id, s)| (id.clone(), s.sentences.clone()))
            .collect();
        Self {
            stories_by_cluster,
            sentences,
        }
    }

    fn context(&self, id: &StoryId) -> StoryContext {
        StoryContext {
            story_id: id.clone(),
            sentences: self.sentences.get(id).cloned().unwrap_or_default(),
        }
    }
}

/// A re-evaluation task for an escalated pair, carrying stories that
/// mention both clusters. Without such a story the first story of each
/// cluster is used and the task is flagged.
pub fn requeue_with_context(
    pair_task: &AnnotationTask,
    outcome: VoteOutcome,
    index: &ContextIndex,
    task_id: String,
) -> Result<AnnotationTask> {
    let TaskPayload::CausalPair { a, b } = &pair_task.payload else {
        return Err(Error::Precondition(format!(
            "`{}` is not a causal pair task",
            pair_task.task_id
        )));
    };
    if outcome != VoteOutcome::Escalate {
        return Err(Error::Precondition(format!(
            "`{}` was not escalated",
            pair_task.task_id
        )));
    }
    let empty = BTreeSet::new();
    let sa = index.stories_by_cluster.get(&a.cluster_id).unwrap_or(&empty);
    let sb = index.stories_by_cluster.get(&b.cluster_id).unwrap_or(&empty);
    let shared: Vec<&StoryId> = sa.intersection(sb).take(MAX_CONTEXTS).collect();
    let (contexts, flagged) = if shared.is_empty() {
        let nearest: BTreeSet<&StoryId> = sa.iter().next().into_iter().chain(sb.iter().next()).collect();
        (nearest.into_iter().map(|s| index.context(s)).collect::<Vec<_>>(), true)
    } else {
        (shared.into_iter().map(|s| index.context(s)).collect(), false)
    };
    if contexts.is_empty() {
        return Err(Error::Precondition(format!(
            "no story mentions `{}` or `{}`",
            a.cluster_id, b.cluster_id
        )));
    }
    Ok(AnnotationTask {
        task_id,
        batch: pair_task.batch,
        payload: TaskPayload::ReevalWithContext {
            a: a.clone(),
            b: b.clone(),
            contexts,
            flagged,
            origin: pair_task.task_id.clone(),
        },
        assigned_to: pair_task.assigned_to.clone(),
        status: TaskStatus::Open,
    })
}
