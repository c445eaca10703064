//! Append-only task and answer log. The in-memory state is a fold over the
//! log, so a restarted service replays to the same state.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::alpha::{krippendorff_alpha, ReliabilityData};
use super::task::{requeue_with_context, AnnotationTask, Answer, ContextIndex, TaskKind, TaskPayload, TaskStatus};
use super::vote::{majority_vote, CausalLabel, VoteOutcome};
use crate::error::{Error, Result};
use crate::ids::ClusterId;

const LOG_FILE: &str = "events.jsonl";
const CONTEXT_FILE: &str = "contexts.json";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub task_id: String,
    pub annotator_id: String,
    pub answer: Answer,
    /// Logical clock; strictly increasing across the log.
    pub timestamp: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
enum LogEntry {
    Task(AnnotationTask),
    Record(AnnotationRecord),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchProgress {
    pub kind: TaskKind,
    pub batch: usize,
    pub tasks: usize,
    pub tasks_done: usize,
    pub assignments: usize,
    pub assignments_done: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Escalation {
    pub task_id: String,
    pub reeval_task_id: Option<String>,
    pub flagged: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairDecision {
    pub task_id: String,
    pub a: ClusterId,
    pub b: ClusterId,
    /// `None` while votes are missing or the re-evaluation also split.
    pub label: Option<CausalLabel>,
    pub reevaluated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    /// First-pass causal labels; `None` until two annotators overlap.
    pub alpha: Option<f64>,
    pub units: usize,
    pub escalations: Vec<Escalation>,
    pub decisions: Vec<PairDecision>,
}

#[derive(Debug, Default)]
pub struct AnnotationStore {
    dir: Option<PathBuf>,
    order: Vec<String>,
    tasks: BTreeMap<String, AnnotationTask>,
    records: BTreeMap<String, BTreeMap<String, AnnotationRecord>>,
    clock: u64,
    contexts: Option<ContextIndex>,
    reeval_of: BTreeMap<String, String>,
}

impl AnnotationStore {
    pub fn in_memory(contexts: Option<ContextIndex>) -> Self {
        Self {
            contexts,
            ..Self::default()
        }
    }

    /// Opens (or creates) a state directory and replays its log.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut store = Self {
            dir: Some(dir.to_path_buf()),
            ..Self::default()
        };
        let ctx_path = dir.join(CONTEXT_FILE);
        if ctx_path.exists() {
            let text = fs::read_to_string(&ctx_path).map_err(|e| Error::io(&ctx_path, e))?;
            store.contexts =
                Some(serde_json::from_str(&text).map_err(|e| Error::Invalid(format!("{}: {e}", ctx_path.display())))?);
        }
        let log_path = dir.join(LOG_FILE);
        if log_path.exists() {
            let f = File::open(&log_path).map_err(|e| Error::io(&log_path, e))?;
            for (i, line) in BufReader::new(f).lines().enumerate() {
                let line = line.map_err(|e| Error::io(&log_path, e))?;
                if line.trim().is_empty() {
                    continue;
                }
                let entry: LogEntry = serde_json::from_str(&line).map_err(|e| Error::parse(i + 1, e.to_string()))?;
                match entry {
                    LogEntry::Task(t) => store.insert_task(t)?,
                    LogEntry::Record(r) => store.insert_record(r)?,
                }
            }
        }
        let pending: Vec<String> = store.order.clone();
        for id in pending {
            store.escalate_if_needed(&id)?;
        }
        Ok(store)
    }

    pub fn contexts(&self) -> Option<&ContextIndex> {
        self.contexts.as_ref()
    }

    /// Stores the context index next to the log.
    pub fn set_contexts(&mut self, index: ContextIndex) -> Result<()> {
        if let Some(dir) = &self.dir {
            let path = dir.join(CONTEXT_FILE);
            let text = serde_json::to_string(&index).map_err(|e| Error::Invalid(e.to_string()))?;
            fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        }
        self.contexts = Some(index);
        Ok(())
    }

    fn append(&self, entry: &LogEntry) -> Result<()> {
        let Some(dir) = &self.dir else {
            return Ok(());
        };
        let path = dir.join(LOG_FILE);
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| Error::io(&path, e))?;
        let line = serde_json::to_string(entry).map_err(|e| Error::Invalid(e.to_string()))?;
        writeln!(f, "{line}")
            .and_then(|_| f.sync_data())
            .map_err(|e| Error::io(&path, e))
    }

    fn insert_task(&mut self, mut t: AnnotationTask) -> Result<()> {
        if self.tasks.contains_key(&t.task_id) {
            return Err(Error::DuplicateId {
                kind: "task",
                id: t.task_id,
            });
        }
        if let TaskPayload::ReevalWithContext { origin, .. } = &t.payload {
            self.reeval_of.insert(origin.clone(), t.task_id.clone());
        }
        t.status = TaskStatus::Open;
        self.order.push(t.task_id.clone());
        self.tasks.insert(t.task_id.clone(), t);
        Ok(())
    }

    fn insert_record(&mut self, r: AnnotationRecord) -> Result<()> {
        let task = self
            .tasks
            .get_mut(&r.task_id)
            .ok_or_else(|| Error::unknown("task", &r.task_id))?;
        self.clock = self.clock.max(r.timestamp);
        let slot = self.records.entry(r.task_id.clone()).or_default();
        match slot.get(&r.annotator_id) {
            Some(old) if old.timestamp > r.timestamp => {}
            _ => {
                slot.insert(r.annotator_id.clone(), r);
            }
        }
        if task.assigned_to.iter().all(|a| slot.contains_key(a)) {
            task.status = TaskStatus::Done;
        }
        Ok(())
    }

    pub fn add_tasks(&mut self, tasks: Vec<AnnotationTask>) -> Result<()> {
        let mut ids = BTreeSet::new();
        for t in &tasks {
            if self.tasks.contains_key(&t.task_id) || !ids.insert(&t.task_id) {
                return Err(Error::DuplicateId {
                    kind: "task",
                    id: t.task_id.clone(),
                });
            }
        }
        for t in tasks {
            self.append(&LogEntry::Task(t.clone()))?;
            self.insert_task(t)?;
        }
        Ok(())
    }

    /// Validates and stores an answer. A later answer by the same
    /// annotator replaces the earlier one.
    pub fn submit(
        &mut self,
        task_id: &str,
        annotator_id: &str,
        answer: &serde_json::Value,
    ) -> Result<AnnotationRecord> {
        let task = self.tasks.get(task_id).ok_or_else(|| Error::unknown("task", task_id))?;
        if !task.assigned_to.iter().any(|a| a == annotator_id) {
            return Err(Error::Precondition(format!(
                "`{annotator_id}` is not assigned to `{task_id}`"
            )));
        }
        let answer = Answer::parse(task, answer)?;
        self.clock += 1;
        let record = AnnotationRecord {
            task_id: task_id.to_owned(),
            annotator_id: annotator_id.to_owned(),
            answer,
            timestamp: self.clock,
        };
        self.append(&LogEntry::Record(record.clone()))?;
        self.insert_record(record.clone())?;
        self.escalate_if_needed(task_id)?;
        Ok(record)
    }

    fn first_pass_vote(&self, task: &AnnotationTask) -> Option<VoteOutcome> {
        let labels = self.complete_labels(task)?;
        majority_vote(&labels).ok()
    }

    fn complete_labels(&self, task: &AnnotationTask) -> Option<Vec<CausalLabel>> {
        let recs = self.records.get(&task.task_id)?;
        task.assigned_to
            .iter()
            .map(|a| recs.get(a).and_then(|r| r.answer.label()))
            .collect()
    }

    fn escalate_if_needed(&mut self, task_id: &str) -> Result<()> {
        let Some(task) = self.tasks.get(task_id) else {
            return Ok(());
        };
        if task.kind() != TaskKind::CausalPair || self.reeval_of.contains_key(task_id) {
            return Ok(());
        }
        if self.first_pass_vote(task) != Some(VoteOutcome::Escalate) {
            return Ok(());
        }
        let Some(index) = &self.contexts else {
            return Ok(());
        };
        let reeval = requeue_with_context(task, VoteOutcome::Escalate, index, format!("reeval-{task_id}"))?;
        self.add_tasks(vec![reeval])
    }

    pub fn task(&self, id: &str) -> Option<&AnnotationTask> {
        self.tasks.get(id)
    }

    /// Tasks in creation order. With an annotator, only their tasks, and
    /// `Open` means that annotator has not answered yet.
    pub fn tasks_for(&self, annotator: Option<&str>, status: Option<TaskStatus>) -> Vec<&AnnotationTask> {
        self.order
            .iter()
            .map(|id| &self.tasks[id])
            .filter(|t| match annotator {
                None => status.is_none_or(|s| t.status == s),
                Some(a) => {
                    if !t.assigned_to.iter().any(|x| x == a) {
                        return false;
                    }
                    let answered = self.records.get(&t.task_id).is_some_and(|r| r.contains_key(a));
                    match status {
                        None => true,
                        Some(TaskStatus::Open) => !answered,
                        Some(TaskStatus::Done) => answered,
                    }
                }
            })
            .collect()
    }

    pub fn records(&self, task_id: &str) -> Vec<&AnnotationRecord> {
        self.records
            .get(task_id)
            .map(|r| r.values().collect())
            .unwrap_or_default()
    }

    pub fn progress(&self) -> Vec<BatchProgress> {
        let mut by: BTreeMap<(TaskKind, usize), BatchProgress> = BTreeMap::new();
        for t in self.tasks.values() {
            let p = by.entry((t.kind(), t.batch)).or_insert(BatchProgress {
                kind: t.kind(),
                batch: t.batch,
                tasks: 0,
                tasks_done: 0,
                assignments: 0,
                assignments_done: 0,
            });
            p.tasks += 1;
            p.tasks_done += usize::from(t.status == TaskStatus::Done);
            p.assignments += t.assigned_to.len();
            let recs = self.records.get(&t.task_id);
            p.assignments_done += t
                .assigned_to
                .iter()
                .filter(|a| recs.is_some_and(|r| r.contains_key(*a)))
                .count();
        }
        by.into_values().collect()
    }

    pub fn agreement(&self) -> AgreementReport {
        let pair_tasks: Vec<&AnnotationTask> = self
            .order
            .iter()
            .map(|id| &self.tasks[id])
            .filter(|t| t.kind() == TaskKind::CausalPair)
            .collect();
        let raters: Vec<&String> = pair_tasks
            .iter()
            .flat_map(|t| &t.assigned_to)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let units: Vec<Vec<Option<CausalLabel>>> = pair_tasks
            .iter()
            .map(|t| {
                let recs = self.records.get(&t.task_id);
                raters
                    .iter()
                    .map(|a| recs.and_then(|r| r.get(*a)).and_then(|r| r.answer.label()))
                    .collect()
            })
            .collect();
        let data = ReliabilityData::new(units);
        let alpha = krippendorff_alpha(&data).ok();
        let units = data.units.iter().filter(|u| u.iter().flatten().count() >= 2).count();

        let mut escalations = Vec::new();
        let mut decisions = Vec::new();
        for t in pair_tasks {
            let TaskPayload::CausalPair { a, b } = &t.payload else {
                continue;
            };
            let vote = self.first_pass_vote(t);
            let mut decision = PairDecision {
                task_id: t.task_id.clone(),
                a: a.cluster_id.clone(),
                b: b.cluster_id.clone(),
                label: None,
                reevaluated: false,
            };
            match vote {
                Some(VoteOutcome::Decided(l)) => decision.label = Some(l),
                Some(VoteOutcome::Escalate) => {
                    let reeval = self.reeval_of.get(&t.task_id).map(|id| &self.tasks[id]);
                    escalations.push(Escalation {
                        task_id: t.task_id.clone(),
                        reeval_task_id: reeval.map(|r| r.task_id.clone()),
                        flagged: matches!(
                            reeval.map(|r| &r.payload),
                            Some(TaskPayload::ReevalWithContext { flagged: true, .. })
                        ),
                    });
                    if let Some(r) = reeval {
                        decision.reevaluated = true;
                        if let Some(Ok(VoteOutcome::Decided(l))) =
                            self.complete_labels(r).map(|labels| majority_vote(&labels))
                        {
                            decision.label = Some(l);
                        }
                    }
                }
                None => {}
            }
            decisions.push(decision);
        }
        AgreementReport {
            alpha,
            units,
            escalations,
            decisions,
        }
    }
}
