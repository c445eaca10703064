use serde::{Deserialize, Serialize};

use super::data::Table2x2;
use crate::error::{Error, Result};

pub const DEFAULT_ALPHA: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CiTestKind {
    Chi2,
    G2,
}

impl std::str::FromStr for CiTestKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chi2" => Ok(CiTestKind::Chi2),
            "g2" => Ok(CiTestKind::G2),
            other => Err(Error::Invalid(format!("unknown test `{other}` (chi2 or g2)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CiResult {
    pub statistic: f64,
    pub df: u32,
    pub p_value: f64,
    pub independent: bool,
}

/// Stratified χ² or G² test of `x ⫫ y | S`. A stratum with an empty row
/// or column has no expected count for some cell; it is skipped and adds
/// no degrees of freedom.
pub fn ci_test(tables: &[Table2x2], kind: CiTestKind, alpha: f64) -> Result<CiResult> {
    if tables.iter().flatten().flatten().all(|&c| c == 0) {
        return Err(Error::Empty("contingency table"));
    }
    let mut statistic = 0.0;
    let mut df = 0u32;
    for t in tables {
        let rows = [t[0][0] + t[0][1], t[1][0] + t[1][1]];
        let cols = [t[0][0] + t[1][0], t[0][1] + t[1][1]];
        if rows.contains(&0) || cols.contains(&0) {
            continue;
        }
        let n = (rows[0] + rows[1]) as f64;
        df += 1;
        for i in 0..2 {
            for j in 0..2 {
                let o = t[i][j] as f64;
                let e = rows[i] as f64 * cols[j] as f64 / n;
                statistic += match kind {
                    CiTestKind::Chi2 => (o - e) * (o - e) / e,
                    CiTestKind::G2 if o > 0.0 => 2.0 * o * (o / e).ln(),
                    CiTestKind::G2 => 0.0,
                };
            }
        }
    }
    // G² terms can sum to a tiny negative value under rounding.
    let statistic = statistic.max(0.0);
    let p_value = if df == 0 { 1.0 } else { chi_square_sf(statistic, df)? };
    Ok(CiResult {
        statistic,
        df,
        p_value,
        independent: p_value > alpha,
    })
}

/// Upper tail of the chi-square distribution, `Q(df/2, x/2)`.
pub fn chi_square_sf(statistic: f64, df: u32) -> Result<f64> {
    // also rejects NaN
    if statistic.is_nan() || statistic < 0.0 {
        return Err(Error::Invalid(format!(
            "chi-square statistic must be >= 0, got {statistic}"
        )));
    }
    if df == 0 {
        return Err(Error::Invalid("chi-square df must be >= 1".into()));
    }
    if statistic == 0.0 {
        return Ok(1.0);
    }
    Ok(upper_regularized_gamma(f64::from(df) / 2.0, statistic / 2.0).clamp(0.0, 1.0))
}

/// ln Γ(a) for `a` a positive multiple of 1/2, summed exactly from the
/// recurrence so no approximation error enters the tail.
fn ln_gamma_half(a: f64) -> f64 {
    let twice = (2.0 * a).round() as u64;
    if twice.is_multiple_of(2) {
        (1..twice / 2).map(|i| (i as f64).ln()).sum()
    } else {
        let base = 0.5 * std::f64::consts::PI.ln();
        base + (0..twice / 2).map(|i| (i as f64 + 0.5).ln()).sum::<f64>()
    }
}

fn upper_regularized_gamma(a: f64, x: f64) -> f64 {
    let log_prefix = a * x.ln() - x - ln_gamma_half(a);
    if x < a + 1.0 {
        // series for P(a, x)
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut ap = a;
        for _ in 0..10_000 {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * 1e-17 {
                break;
            }
        }
        1.0 - sum * log_prefix.exp()
    } else {
        // modified Lentz continued fraction for Q(a, x)
        const TINY: f64 = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / TINY;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..10_000 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < TINY {
                d = TINY;
            }
            c = b + an / c;
            if c.abs() < TINY {
                c = TINY;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                break;
            }
        }
        log_prefix.exp() * h
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn golden_tails() {
        // reference values from an independent incomplete-gamma implementation
        let cases = [
            (3.841, 1, 0.050013683763956804),
            (20.0, 1, 7.744216431044088e-06),
            (100.0, 200, 0.9999999996799934),
            (250.0, 200, 0.009379131668826098),
            (0.5, 3, 0.9188914116546758),
            (1e-3, 1, 0.9747728793699604),
            (40.0, 7, 1.258790387371308e-06),
            (7.5, 4, 0.11170929281604328),
        ];
        for (x, k, want) in cases {
            let got = chi_square_sf(x, k).unwrap();
            assert!(rel(got, want) < 1e-10, "sf({x}, {k}) = {got}, want {want}");
        }
        assert_eq!(chi_square_sf(0.0, 5).unwrap(), 1.0);
        assert!(chi_square_sf(-1.0, 1).is_err());
        assert!(chi_square_sf(1.0, 0).is_err());
    }

    #[test]
    fn tail_agrees_with_statrs() {
        use statrs::distribution::{ChiSquared, ContinuousCDF};
        for k in [1u32, 2, 3, 5, 10, 50, 120, 200] {
            let dist = ChiSquared::new(f64::from(k)).unwrap();
            for x in [0.01, 0.5, 1.0, 3.0, 10.0, 50.0, 150.0, 260.0] {
                let want = dist.sf(x);
                if want < 1e-250 {
                    continue;
                }
                let got = chi_square_sf(x, k).unwrap();
                assert!(rel(got, want) < 1e-8, "sf({x}, {k}) = {got}, statrs {want}");
            }
        }
    }

    #[test]
    fn golden_tests() {
        let t = [[[30, 10], [10, 30]]];
        let r = ci_test(&t, CiTestKind::Chi2, DEFAULT_ALPHA).unwrap();
        assert!((r.statistic - 20.0).abs() < 1e-9);
        assert_eq!(r.df, 1);
        assert!(rel(r.p_value, 7.744216431044088e-06) < 1e-9);
        assert!(!r.independent);

        let g = ci_test(&t, CiTestKind::G2, DEFAULT_ALPHA).unwrap();
        assert!((g.statistic - 20.929925750581912).abs() < 1e-9);
        assert!(!g.independent);

        let flat = ci_test(&[[[20, 20], [20, 20]]], CiTestKind::Chi2, DEFAULT_ALPHA).unwrap();
        assert_eq!(flat.statistic, 0.0);
        assert_eq!(flat.p_value, 1.0);
        assert!(flat.independent);
    }

    #[test]
    fn degenerate_strata() {
        assert!(ci_test(&[[[0, 0], [0, 0]]], CiTestKind::G2, 0.01).is_err());
        // second stratum has an empty row; only the first contributes
        let t = [[[30, 10], [10, 30]], [[5, 5], [0, 0]]];
        let r = ci_test(&t, CiTestKind::Chi2, 0.01).unwrap();
        assert_eq!(r.df, 1);
        assert!((r.statistic - 20.0).abs() < 1e-9);
        let r = ci_test(&[[[5, 5], [0, 0]]], CiTestKind::Chi2, 0.01).unwrap();
        assert_eq!((r.df, r.p_value, r.independent), (0, 1.0, true));
    }
}
