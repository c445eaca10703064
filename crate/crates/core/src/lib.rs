//! Event abstraction, causal graph construction and abstract causal
//! discovery over story corpora.

pub mod annotation;
pub mod clustering;
pub mod corpus;
pub mod discovery;
pub mod error;
pub mod graph;
pub mod ids;
pub mod lemma;
pub mod metrics;
pub mod pipeline;
pub mod qa;
pub mod similarity;
pub mod synth;
pub mod validate;

pub use clustering::{Cluster, ClusterSet};
pub use corpus::{EventMention, MentionCausalSet, Relation, Story, StoryCollection};
pub use error::{Error, Result};
pub use graph::{CausalGraph, CooccurrenceMatrix, CooccurrenceMode};
pub use ids::{ClusterId, MentionId, StoryId};
pub use similarity::{EmbeddingTable, ParaphraseTable, SimilarityMatrix};
