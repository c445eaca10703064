use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::CooccurrenceMatrix;
use crate::ids::ClusterId;

/// Observed counts `[x][y]` within one conditioning stratum.
pub type Table2x2 = [[u64; 2]; 2];

/// Column-major binary samples.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryDataset {
    columns: Vec<ClusterId>,
    values: Vec<Vec<u8>>,
    rows: usize,
}

impl BinaryDataset {
    pub fn from_columns(columns: Vec<ClusterId>, values: Vec<Vec<u8>>) -> Result<Self> {
        if columns.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: columns.len(),
                actual: values.len(),
            });
        }
        let rows = values.first().map_or(0, Vec::len);
        for col in &values {
            if col.len() != rows {
                return Err(Error::DimensionMismatch {
                    expected: rows,
                    actual: col.len(),
                });
            }
            if col.iter().any(|&v| v > 1) {
                return Err(Error::Invalid("binary dataset values must be 0 or 1".into()));
            }
        }
        Ok(Self { columns, values, rows })
    }

    pub fn from_rows(columns: Vec<ClusterId>, rows: &[Vec<u8>]) -> Result<Self> {
        let mut values = vec![Vec::with_capacity(rows.len()); columns.len()];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != columns.len() {
                return Err(Error::parse(i + 1, format!("expected {} values", columns.len())));
            }
            for (col, &v) in values.iter_mut().zip(row) {
                col.push(v);
            }
        }
        Self::from_columns(columns, values)
    }

    /// Indicator of a non-zero count, column order kept.
    pub fn from_cooccurrence(m: &CooccurrenceMatrix) -> Self {
        let values = (0..m.clusters.len())
            .map(|j| m.values.iter().map(|row| u8::from(row[j] > 0)).collect())
            .collect();
        Self {
            columns: m.clusters.clone(),
            values,
            rows: m.values.len(),
        }
    }

    pub fn columns(&self) -> &[ClusterId] {
        &self.columns
    }

    pub fn n_vars(&self) -> usize {
        self.columns.len()
    }

    pub fn n_rows(&self) -> usize {
        self.rows
    }

    pub fn column(&self, j: usize) -> &[u8] {
        &self.values[j]
    }

    pub fn is_constant(&self, j: usize) -> bool {
        let c = &self.values[j];
        c.iter().all(|&v| v == c[0])
    }

    /// Mean of column `j`.
    pub fn mean(&self, j: usize) -> f64 {
        if self.rows == 0 {
            return 0.0;
        }
        self.values[j].iter().map(|&v| f64::from(v)).sum::<f64>() / self.rows as f64
    }
}

/// One 2×2 table per assignment of `s`; bit `k` of the stratum index is the
/// value of `s[k]`. Empty strata are kept as zero tables.
pub fn contingency_table(d: &BinaryDataset, x: usize, y: usize, s: &[usize]) -> Result<Vec<Table2x2>> {
    let p = d.n_vars();
    for &v in [x, y].iter().chain(s) {
        if v >= p {
            return Err(Error::unknown("variable", v));
        }
    }
    if x == y || s.contains(&x) || s.contains(&y) {
        return Err(Error::Invalid("x, y and the conditioning set must be disjoint".into()));
    }
    if s.len() > 20 {
        return Err(Error::Invalid("conditioning set too large".into()));
    }
    let mut tables = vec![[[0u64; 2]; 2]; 1 << s.len()];
    let (cx, cy) = (d.column(x), d.column(y));
    let cs: Vec<&[u8]> = s.iter().map(|&v| d.column(v)).collect();
    for r in 0..d.n_rows() {
        let mut k = 0usize;
        for (bit, col) in cs.iter().enumerate() {
            k |= usize::from(col[r]) << bit;
        }
        tables[k][usize::from(cx[r])][usize::from(cy[r])] += 1;
    }
    Ok(tables)
}
