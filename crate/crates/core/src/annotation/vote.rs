use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Three-way judgment on an ordered pair `(a, b)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CausalLabel {
    ACausesB,
    BCausesA,
    None,
}

impl CausalLabel {
    pub const ALL: [CausalLabel; 3] = [CausalLabel::ACausesB, CausalLabel::BCausesA, CausalLabel::None];

    pub fn as_str(self) -> &'static str {
        match self {
            CausalLabel::ACausesB => "a_causes_b",
            CausalLabel::BCausesA => "b_causes_a",
            CausalLabel::None => "none",
        }
    }
}

impl fmt::Display for CausalLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for CausalLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CausalLabel::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown causal label `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VoteOutcome {
    Decided(CausalLabel),
    Escalate,
}

/// Strict majority, else escalation. With three votes the only way to miss
/// a majority is three distinct labels.
pub fn majority_vote(labels: &[CausalLabel]) -> Result<VoteOutcome> {
    if labels.is_empty() {
        return Err(Error::Empty("vote"));
    }
    if labels.len() < 3 {
        return Err(Error::Precondition(format!(
            "majority vote needs 3 labels, got {}",
            labels.len()
        )));
    }
    let mut counts: BTreeMap<CausalLabel, usize> = BTreeMap::new();
    for &l in labels {
        *counts.entry(l).or_default() += 1;
    }
    Ok(counts
        .into_iter()
        .find(|&(_, c)| 2 * c > labels.len())
        .map_or(VoteOutcome::Escalate, |(l, _)| VoteOutcome::Decided(l)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use CausalLabel::*;

    #[test]
    fn votes() {
        assert_eq!(
            majority_vote(&[ACausesB, ACausesB, None]).unwrap(),
            VoteOutcome::Decided(ACausesB)
        );
        assert_eq!(
            majority_vote(&[ACausesB, BCausesA, None]).unwrap(),
            VoteOutcome::Escalate
        );
        assert_eq!(majority_vote(&[None, None, None]).unwrap(), VoteOutcome::Decided(None));
        assert!(majority_vote(&[]).is_err());
        assert!(majority_vote(&[None, None]).is_err());
    }

    #[test]
    fn label_text() {
        for l in CausalLabel::ALL {
            assert_eq!(l.as_str().parse::<CausalLabel>().unwrap(), l);
            assert_eq!(serde_json::to_string(&l).unwrap(), format!("\"{l}\""));
        }
    }
}
