//! Multiple-choice causal QA and pairwise causal discovery with language
//! models: item construction, prompts, answer parsing and scoring.

mod hint;
mod items;
mod model;
mod prompt;
mod score;

pub use hint::{retrieve_cg_hint, TextSimilarity, TokenDice, HINT_THRESHOLD};
pub use items::{
    build_qa, discovery_items, generate_negatives, read_jsonl, write_jsonl, CgHint, Direction, DiscoveryItem, QaItem,
    QuestionKind,
};
pub use model::{run_discovery, run_qa, LanguageModel, MockModel, Outcome};
pub use prompt::{parse_answer, render_prompt, AnswerKind, Parsed, PromptItem, Template};
pub use score::{
    baseline_predict, classification_report, classification_report_with_failures, score_qa, write_report, Baseline,
    ClassReport, QaScore,
};
