//! Partition and text quality metrics.

mod bleu;
mod partition;
mod quality;

pub use bleu::{bleu, tokenize};
pub use partition::{adjusted_rand_index, majority_relabel, normalized_mutual_information};
pub use quality::{
    bidirectional_ratio, homogeneity, self_loop_ratio, silhouette, silhouette_term, InterClusterCountMatrix,
};
