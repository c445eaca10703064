use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::items::{DiscoveryItem, QaItem};
use super::prompt::{parse_answer, render_prompt, AnswerKind, Parsed, PromptItem, Template};
use crate::error::{Error, Result};

/// Text completion backend. Implementations must be safe to call from
/// several threads.
pub trait LanguageModel: Sync {
    fn complete(&self, prompt: &str) -> Result<String>;
}

/// Canned responses keyed by the exact prompt.
#[derive(Clone, Debug, Default)]
pub struct MockModel {
    responses: HashMap<String, String>,
    default: Option<String>,
}

#[derive(Deserialize)]
struct MockLine {
    prompt: String,
    response: String,
}

impl MockModel {
    pub fn new(responses: HashMap<String, String>, default: Option<String>) -> Result<Self> {
        if responses.is_empty() && default.is_none() {
            return Err(Error::Precondition("mock model needs a response table".into()));
        }
        Ok(Self { responses, default })
    }

    /// One `{"prompt": ..., "response": ...}` object per line.
    pub fn from_reader(reader: impl BufRead, default: Option<String>) -> Result<Self> {
        let mut responses = HashMap::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io("<mock table>", e))?;
            if line.trim().is_empty() {
                continue;
            }
            let m: MockLine = serde_json::from_str(&line).map_err(|e| Error::parse(i + 1, e.to_string()))?;
            responses.insert(m.prompt, m.response);
        }
        Self::new(responses, default)
    }

    pub fn load(path: impl AsRef<Path>, default: Option<String>) -> Result<Self> {
        let path = path.as_ref();
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(BufReader::new(f), default)
    }
}

impl LanguageModel for MockModel {
    fn complete(&self, prompt: &str) -> Result<String> {
        self.responses
            .get(prompt)
            .or(self.default.as_ref())
            .cloned()
            .ok_or_else(|| Error::Model("no canned response for prompt".into()))
    }
}

/// Result of one model call. A failed call is kept as a parse failure
/// with the error text, so it scores as an empty prediction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outcome {
    pub item_id: String,
    pub prompt: String,
    pub response: Option<String>,
    pub parsed: Parsed,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

fn run(
    prompts: Vec<(String, String)>,
    model: &dyn LanguageModel,
    kind: AnswerKind,
    limit: usize,
) -> Result<Vec<Outcome>> {
    let call = |(item_id, prompt): (String, String)| match model.complete(&prompt) {
        Ok(text) => Outcome {
            item_id,
            parsed: parse_answer(&text, kind),
            prompt,
            response: Some(text),
            error: None,
        },
        Err(e) => Outcome {
            item_id,
            prompt,
            response: None,
            parsed: Parsed::Failure,
            error: Some(e.to_string()),
        },
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(limit.max(1))
        .build()
        .map_err(|e| Error::Model(e.to_string()))?;
    // indexed collect keeps input order
    Ok(pool.install(|| prompts.into_par_iter().map(call).collect()))
}

/// Renders every item, then queries `model` with at most `limit` calls in
/// flight. Outcomes come back in item order.
pub fn run_qa(
    items: &[QaItem],
    model: &dyn LanguageModel,
    template: Template,
    with_cg: bool,
    limit: usize,
) -> Result<Vec<Outcome>> {
    let prompts = items
        .iter()
        .map(|q| {
            Ok((
                q.question_id.clone(),
                render_prompt(PromptItem::Qa(q), template, with_cg)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    run(prompts, model, AnswerKind::MultiChoice, limit)
}

pub fn run_discovery(items: &[DiscoveryItem], model: &dyn LanguageModel, limit: usize) -> Result<Vec<Outcome>> {
    let prompts = items
        .iter()
        .map(|d| {
            Ok((
                d.pair_id.clone(),
                render_prompt(PromptItem::Discovery(d), Template::Pairwise, false)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    run(prompts, model, AnswerKind::Pairwise, limit)
}
