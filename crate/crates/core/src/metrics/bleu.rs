use std::collections::HashMap;

use crate::error::{Error, Result};

const MAX_ORDER: usize = 4;

/// Whitespace tokenization; case is preserved.
pub fn tokenize(text: &str) -> Vec<&str> {
    text.split_whitespace().collect()
}

fn ngrams<'a>(tokens: &[&'a str], n: usize) -> HashMap<Vec<&'a str>, usize> {
    let mut out = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *out.entry(w.to_vec()).or_insert(0) += 1;
        }
    }
    out
}

/// Sentence BLEU with uniform weights up to 4-grams and the standard
/// brevity penalty. Precisions of order 2 and above are add-one smoothed
/// (numerator and denominator); unigram precision is not smoothed, so no
/// unigram overlap gives 0.
pub fn bleu(candidate: &str, references: &[&str]) -> Result<f64> {
    let cand = tokenize(candidate);
    if cand.is_empty() {
        return Err(Error::Empty("BLEU candidate"));
    }
    let refs: Vec<Vec<&str>> = references.iter().map(|r| tokenize(r)).collect();
    if refs.is_empty() || refs.iter().all(Vec::is_empty) {
        return Err(Error::Empty("BLEU references"));
    }

    let mut log_sum = 0.0;
    for n in 1..=MAX_ORDER {
        let counts = ngrams(&cand, n);
        let mut max_ref: HashMap<Vec<&str>, usize> = HashMap::new();
        for r in &refs {
            for (g, c) in ngrams(r, n) {
                let e = max_ref.entry(g).or_insert(0);
                *e = (*e).max(c);
            }
        }
        let matched: usize = counts
            .iter()
            .map(|(g, &c)| c.min(max_ref.get(g).copied().unwrap_or(0)))
            .sum();
        let total: usize = counts.values().sum();
        let p = if n == 1 {
            if matched == 0 {
                return Ok(0.0);
            }
            matched as f64 / total as f64
        } else {
            (matched + 1) as f64 / (total + 1) as f64
        };
        log_sum += p.ln() / MAX_ORDER as f64;
    }

    let c = cand.len();
    // closest reference length, shorter on ties
    let r = refs
        .iter()
        .map(Vec::len)
        .min_by_key(|&len| (len.abs_diff(c), len))
        .expect("non-empty references");
    let bp = if c > r { 1.0 } else { (1.0 - r as f64 / c as f64).exp() };
    Ok(bp * log_sum.exp())
}
