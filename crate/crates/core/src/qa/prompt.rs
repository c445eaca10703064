use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::items::{CgHint, DiscoveryItem, QaItem, QuestionKind};
use crate::annotation::CausalLabel;
use crate::error::{Error, Result};

const PAIRWISE: &str = include_str!("../../templates/pairwise.txt");
const SPECIFIC_COT: &str = include_str!("../../templates/specific_cot.txt");
const ABSTRACT_COT: &str = include_str!("../../templates/abstract_cot.txt");
const ABSTRACT_BILEVEL: &str = include_str!("../../templates/abstract_bilevel.txt");
const ABSTRACTION_3STEP: &str = include_str!("../../templates/abstraction_3step.txt");

const ANSWER_MARKER: &str = "the correct answer(s):";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Template {
    Pairwise,
    SpecificCot,
    AbstractCot,
    AbstractBilevel,
    Abstraction3step,
}

impl Template {
    pub const ALL: [Template; 5] = [
        Template::Pairwise,
        Template::SpecificCot,
        Template::AbstractCot,
        Template::AbstractBilevel,
        Template::Abstraction3step,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Template::Pairwise => "pairwise",
            Template::SpecificCot => "specific_cot",
            Template::AbstractCot => "abstract_cot",
            Template::AbstractBilevel => "abstract_bilevel",
            Template::Abstraction3step => "abstraction_3step",
        }
    }

    fn text(self) -> &'static str {
        match self {
            Template::Pairwise => PAIRWISE,
            Template::SpecificCot => SPECIFIC_COT,
            Template::AbstractCot => ABSTRACT_COT,
            Template::AbstractBilevel => ABSTRACT_BILEVEL,
            Template::Abstraction3step => ABSTRACTION_3STEP,
        }
    }
}

impl std::str::FromStr for Template {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Template::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown template `{s}`")))
    }
}

#[derive(Clone, Copy, Debug)]
pub enum PromptItem<'a> {
    Qa(&'a QaItem),
    Discovery(&'a DiscoveryItem),
    /// A raw event mention to generalize.
    Mention(&'a str),
}

fn hint_line(h: &CgHint) -> String {
    format!(
        "This information can help answer the question: A possible {} of the event {} is {}.\n",
        h.direction.as_str(),
        h.source_topic,
        h.related_topic
    )
}

/// Single pass, so braces inside filled values are left alone.
fn fill(template: &str, fields: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len() + 256);
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let field = after.find('}').and_then(|close| {
            fields
                .iter()
                .find(|(k, _)| *k == &after[..close])
                .map(|(_, v)| (close, v))
        });
        match field {
            Some((close, v)) => {
                out.push_str(v);
                rest = &after[close + 1..];
            }
            None => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}

/// Fills `template` for `item`. The graph hint line is included only with
/// `with_cg`, which requires the item to carry one.
pub fn render_prompt(item: PromptItem<'_>, template: Template, with_cg: bool) -> Result<String> {
    let mismatch = || Error::Invalid(format!("template `{}` does not fit this item", template.name()));
    match (item, template) {
        (PromptItem::Discovery(d), Template::Pairwise) => {
            if with_cg {
                return Err(Error::Invalid("pairwise prompts take no graph hint".into()));
            }
            Ok(fill(
                template.text(),
                &[("event_a", &d.event_a), ("event_b", &d.event_b)],
            ))
        }
        (PromptItem::Mention(m), Template::Abstraction3step) => {
            if with_cg {
                return Err(Error::Invalid("abstraction prompts take no graph hint".into()));
            }
            Ok(fill(template.text(), &[("mention", m.trim().trim_end_matches('.'))]))
        }
        (PromptItem::Qa(q), Template::SpecificCot | Template::AbstractCot | Template::AbstractBilevel) => {
            let want = if template == Template::SpecificCot {
                QuestionKind::Specific
            } else {
                QuestionKind::Abstract
            };
            if q.question_kind != want {
                return Err(mismatch());
            }
            let hint = match (with_cg, &q.cg_hint) {
                (false, _) => String::new(),
                (true, Some(h)) => hint_line(h),
                (true, None) => {
                    return Err(Error::Invalid(format!("`{}` has no graph hint", q.question_id)));
                }
            };
            let choices: Vec<String> = q.choices.iter().enumerate().map(|(i, c)| format!("{i}. {c}")).collect();
            Ok(fill(
                template.text(),
                &[
                    ("story", &q.story_text),
                    ("direction", q.direction.as_str()),
                    ("target", &q.target),
                    ("choices", &choices.join("\n")),
                    ("hint", &hint),
                ],
            ))
        }
        _ => Err(mismatch()),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerKind {
    Pairwise,
    MultiChoice,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parsed {
    Relation(CausalLabel),
    Indices(BTreeSet<usize>),
    Failure,
}

impl Parsed {
    /// Indices for scoring; a failure is an empty prediction.
    pub fn indices(&self) -> BTreeSet<usize> {
        match self {
            Parsed::Indices(s) => s.clone(),
            _ => BTreeSet::new(),
        }
    }
}

fn last_answer_tag(text: &str) -> Option<CausalLabel> {
    let mut found = None;
    let mut rest = text;
    while let Some(start) = rest.find("<answer>") {
        rest = &rest[start + "<answer>".len()..];
        let Some(end) = rest.find("</answer>") else { break };
        match rest[..end].trim() {
            "A" => found = Some(CausalLabel::ACausesB),
            "B" => found = Some(CausalLabel::BCausesA),
            "C" => found = Some(CausalLabel::None),
            _ => {}
        }
        rest = &rest[end..];
    }
    found
}

fn final_indices(text: &str) -> Option<BTreeSet<usize>> {
    let lower = text.to_lowercase();
    // lowercasing can change byte offsets outside ASCII, so search the
    // lowered text and slice it rather than the original
    let at = lower.rfind(ANSWER_MARKER)? + ANSWER_MARKER.len();
    let tail = &lower[at..];
    let line = tail.split('\n').map(str::trim).find(|l| !l.is_empty()).unwrap_or("");
    let set: BTreeSet<usize> = line
        .split(|c: char| !c.is_ascii_digit())
        .filter(|t| !t.is_empty())
        .filter_map(|t| t.parse().ok())
        .collect();
    (!set.is_empty()).then_some(set)
}

/// Pairwise: the last well-formed `<answer>A|B|C</answer>`. Multiple
/// choice: the integers on the first non-empty line after the final
/// "The correct answer(s):" marker.
pub fn parse_answer(text: &str, kind: AnswerKind) -> Parsed {
    match kind {
        AnswerKind::Pairwise => last_answer_tag(text).map_or(Parsed::Failure, Parsed::Relation),
        AnswerKind::MultiChoice => final_indices(text).map_or(Parsed::Failure, Parsed::Indices),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qa::items::Direction;

    fn item(kind: QuestionKind) -> QaItem {
        QaItem {
            question_id: "q".into(),
            story_id: "s".into(),
            story_text: "Tom was hungry. He ate bread.".into(),
            question_kind: kind,
            direction: Direction::Cause,
            target: "a person eat something".into(),
            choices: vec!["Tom was hungry.".into(), "He ate bread.".into()],
            gold: BTreeSet::from([0]),
            cg_hint: None,
        }
    }

    #[test]
    fn pairwise_prompt() {
        let d = DiscoveryItem {
            pair_id: "p".into(),
            event_a: "a person be hungry".into(),
            event_b: "a person eat".into(),
            gold: CausalLabel::ACausesB,
        };
        let p = render_prompt(PromptItem::Discovery(&d), Template::Pairwise, false).unwrap();
        assert!(p.contains("<answer>A or B or C</answer>"));
        assert!(p.starts_with("Given the two events:\nevent_a: a person be hungry\n"));
        assert!(render_prompt(PromptItem::Discovery(&d), Template::SpecificCot, false).is_err());
    }

    #[test]
    fn hint_toggle() {
        let mut q = item(QuestionKind::Abstract);
        let plain = render_prompt(PromptItem::Qa(&q), Template::AbstractCot, false).unwrap();
        assert!(!plain.contains("This information"));
        assert!(render_prompt(PromptItem::Qa(&q), Template::AbstractCot, true).is_err());
        q.cg_hint = Some(CgHint {
            source: "C1".into(),
            source_topic: "a person eat something".into(),
            related: "C2".into(),
            related_topic: "a person be hungry".into(),
            direction: Direction::Cause,
        });
        let hinted = render_prompt(PromptItem::Qa(&q), Template::AbstractCot, true).unwrap();
        assert!(hinted.contains(
            "This information can help answer the question: A possible cause of the event a person eat something is a person be hungry.\n"
        ));
        assert!(render_prompt(PromptItem::Qa(&q), Template::SpecificCot, false).is_err());
    }

    #[test]
    fn parsing() {
        assert_eq!(
            parse_answer("...<answer>B</answer>", AnswerKind::Pairwise),
            Parsed::Relation(CausalLabel::BCausesA)
        );
        assert_eq!(
            parse_answer("<answer>A</answer> no wait <answer> C </answer>", AnswerKind::Pairwise),
            Parsed::Relation(CausalLabel::None)
        );
        assert_eq!(
            parse_answer("<answer>A or B or C</answer>", AnswerKind::Pairwise),
            Parsed::Failure
        );
        assert_eq!(
            parse_answer("The correct answer(s): 0, 2", AnswerKind::MultiChoice),
            Parsed::Indices(BTreeSet::from([0, 2]))
        );
        assert_eq!(
            parse_answer(
                "the correct answer(s): 1\nlater... The correct answer(s):\n 4, 1",
                AnswerKind::MultiChoice
            ),
            Parsed::Indices(BTreeSet::from([1, 4]))
        );
        assert_eq!(parse_answer("no idea", AnswerKind::MultiChoice), Parsed::Failure);
        assert_eq!(parse_answer("no idea", AnswerKind::Pairwise), Parsed::Failure);
    }
}
