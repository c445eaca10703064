//! Fixed QA and discovery items with golden renders and canned outputs.

use std::collections::{BTreeSet, HashMap};

use eventcause::annotation::CausalLabel;
use eventcause::qa::{CgHint, Direction, DiscoveryItem, MockModel, QaItem, QuestionKind, Template};
use eventcause::ClusterId;

pub fn qa_item(kind: QuestionKind, with_hint: bool) -> QaItem {
    QaItem {
        question_id: format!("s1:m3:cause:{kind:?}"),
        story_id: "s1".into(),
        story_text: "Tom was hungry. He made a sandwich. He ate it.".into(),
        question_kind: kind,
        direction: Direction::Cause,
        target: match kind {
            QuestionKind::Specific => "He ate it".into(),
            QuestionKind::Abstract => "a person eat something".into(),
        },
        choices: vec![
            "Tom was hungry.".into(),
            "He made a sandwich.".into(),
            "He ate it.".into(),
        ],
        gold: BTreeSet::from([0, 1]),
        cg_hint: with_hint.then(|| CgHint {
            source: ClusterId::new("c_eat"),
            source_topic: "a person eat something".into(),
            related: ClusterId::new("c_hungry"),
            related_topic: "a person be hungry".into(),
            direction: Direction::Cause,
        }),
    }
}

pub fn discovery_item() -> DiscoveryItem {
    DiscoveryItem {
        pair_id: "pos-00000".into(),
        event_a: "a person be hungry".into(),
        event_b: "a person eat something".into(),
        gold: CausalLabel::ACausesB,
    }
}

/// `(golden file, template, kind, with_cg)`; kind `None` is the pairwise
/// item and the mention prompt is handled separately.
pub const CASES: [(&str, Template, Option<QuestionKind>, bool); 6] = [
    ("pairwise", Template::Pairwise, None, false),
    (
        "specific_cot",
        Template::SpecificCot,
        Some(QuestionKind::Specific),
        false,
    ),
    (
        "specific_cot_cg",
        Template::SpecificCot,
        Some(QuestionKind::Specific),
        true,
    ),
    (
        "abstract_cot",
        Template::AbstractCot,
        Some(QuestionKind::Abstract),
        false,
    ),
    (
        "abstract_cot_cg",
        Template::AbstractCot,
        Some(QuestionKind::Abstract),
        true,
    ),
    (
        "abstract_bilevel_cg",
        Template::AbstractBilevel,
        Some(QuestionKind::Abstract),
        true,
    ),
];

pub fn golden(name: &str) -> String {
    let path = format!("{}/tests/golden/{name}.txt", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"))
}

/// Model outputs in the shapes the prompts ask for, including chatter
/// before the marker and a corrected earlier answer.
pub const CANNED_QA: [&str; 4] = [
    "Tom was hungry, so he made food.\nThe correct answer(s): 0, 1",
    "Step 1: find the eating.\nthe correct answer(s): [0, 1]",
    "The correct answer(s): 2\nWait, that is wrong.\nThe correct answer(s):\n0 and 1",
    "THE CORRECT ANSWER(S): 0,1.",
];

pub const CANNED_PAIRWISE: [&str; 3] = [
    "Hunger leads to eating. <answer>A</answer>",
    "<answer>B</answer> no, reconsider: <answer>A</answer>",
    "<answer> A </answer>",
];

pub fn mock_for(prompts: &[String], responses: &[&str]) -> MockModel {
    let table: HashMap<String, String> = prompts
        .iter()
        .zip(responses.iter().cycle())
        .map(|(p, r)| (p.clone(), (*r).to_owned()))
        .collect();
    MockModel::new(table, None).unwrap()
}
