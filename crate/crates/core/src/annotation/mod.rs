//! Annotation tasks, answer aggregation and agreement.

mod alpha;
mod store;
mod task;
mod unify;
mod vote;

pub use alpha::{krippendorff_alpha, ReliabilityData};
pub use store::{AgreementReport, AnnotationRecord, AnnotationStore, BatchProgress, Escalation, PairDecision};
pub use task::{
    causal_pair_tasks, generate_tasks, requeue_with_context, topic_alignment_tasks, topic_match_tasks, AnnotationTask,
    Answer, ContextIndex, MemberView, StoryContext, SubGroup, TaskKind, TaskPayload, TaskStatus, TopicRef,
    DEFAULT_ANNOTATORS_PER_PAIR, DEFAULT_ANNOTATORS_PER_TASK, DEFAULT_BATCH_SIZE, MAX_CONTEXTS,
};
pub use unify::{batch_seed, unify_subclusterings, Subclustering, Unified, UnifiedGroup};
pub use vote::{majority_vote, CausalLabel, VoteOutcome};
