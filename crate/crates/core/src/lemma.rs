//! Table-driven lemmatization of short event sentences.

use std::collections::HashMap;
use std::sync::OnceLock;

use crate::error::{Error, Result};

static TABLE_SRC: &str = include_str!("../data/lemmas.tsv");

fn table() -> &'static HashMap<&'static str, &'static str> {
    static TABLE: OnceLock<HashMap<&'static str, &'static str>> = OnceLock::new();
    TABLE.get_or_init(|| {
        TABLE_SRC
            .lines()
            .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
            .filter_map(|l| l.split_once('\t'))
            .collect()
    })
}

/// Base form of a single lowercase word, or the word itself when unknown.
pub fn lemma(word: &str) -> &str {
    table().get(word).copied().unwrap_or(word)
}

/// Lowercases, collapses whitespace and replaces each token with its base
/// form. Punctuation glued to a token is preserved around the lemma.
///
/// `normalize_mention(normalize_mention(t)) == normalize_mention(t)` holds
/// because no base form in the table is itself a surface form.
pub fn normalize_mention(text: &str) -> Result<String> {
    if text.trim().is_empty() {
        return Err(Error::Empty("mention text"));
    }
    let lower = text.to_lowercase();
    let mut out = String::with_capacity(lower.len());
    for token in lower.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        let start = token.char_indices().find(|(_, c)| c.is_alphanumeric()).map(|(i, _)| i);
        match start {
            None => out.push_str(token),
            Some(start) => {
                let end = token
                    .char_indices()
                    .rev()
                    .find(|(_, c)| c.is_alphanumeric())
                    .map(|(i, c)| i + c.len_utf8())
                    .unwrap_or(token.len());
                out.push_str(&token[..start]);
                out.push_str(lemma(&token[start..end]));
                out.push_str(&token[end..]);
            }
        }
    }
    Ok(out)
}
