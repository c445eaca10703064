use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Units × raters matrix of nominal values; `None` is a missing rating.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReliabilityData<L> {
    pub units: Vec<Vec<Option<L>>>,
}

impl<L: Ord + Clone> ReliabilityData<L> {
    pub fn new(units: Vec<Vec<Option<L>>>) -> Self {
        Self { units }
    }

    /// Number of values in units rated at least twice.
    pub fn pairable_values(&self) -> usize {
        self.units
            .iter()
            .map(|u| u.iter().flatten().count())
            .filter(|&m| m >= 2)
            .sum()
    }
}

/// Nominal Krippendorff's α from the coincidence matrix. Units with fewer
/// than two values are ignored. When every pairable value falls in one
/// category there is no expected disagreement and α is 1.
pub fn krippendorff_alpha<L: Ord + Clone>(r: &ReliabilityData<L>) -> Result<f64> {
    let mut coincidence: BTreeMap<(L, L), f64> = BTreeMap::new();
    for unit in &r.units {
        let values: Vec<&L> = unit.iter().flatten().collect();
        let m = values.len();
        if m < 2 {
            continue;
        }
        let w = 1.0 / (m - 1) as f64;
        for (i, &c) in values.iter().enumerate() {
            for (j, &k) in values.iter().enumerate() {
                if i != j {
                    *coincidence.entry((c.clone(), k.clone())).or_default() += w;
                }
            }
        }
    }
    let mut marginals: BTreeMap<&L, f64> = BTreeMap::new();
    let mut observed = 0.0;
    for ((c, k), &o) in &coincidence {
        *marginals.entry(c).or_default() += o;
        if c != k {
            observed += o;
        }
    }
    let n: f64 = marginals.values().sum();
    if n < 2.0 {
        return Err(Error::Empty("pairable values"));
    }
    let sum_sq: f64 = marginals.values().map(|v| v * v).sum();
    let expected = n * n - sum_sq;
    if expected == 0.0 {
        return Ok(1.0);
    }
    Ok(1.0 - (n - 1.0) * observed / expected)
}
