use serde::{Deserialize, Serialize};

use super::SubgroupTable;
use crate::error::{Error, Result};
use crate::stats::{chi2_inv_sf, chi2_sf, ChiSquareParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DangerTerm {
    pub pattern: u32,
    pub expected_baseline: f64,
    pub expected_focus: f64,
    pub contribution: f64,
}

/// Chi-square danger of reweighting a focus cohort towards the baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DangerScore {
    /// Raw chi-square statistic over the `k` non-empty subgroups.
    pub d_k: f64,
    pub k: usize,
    pub breakdown: Vec<DangerTerm>,
    /// Score standardized to one degree of freedom.
    pub d: f64,
    pub normalized: f64,
    /// `normalized > 1`.
    pub over_threshold: bool,
    pub used_approximation: bool,
    /// Only one non-empty subgroup: there is nothing to test, `d` is 0.
    pub degenerate: bool,
    /// Computational limit on `d_k` for this `k`.
    pub limit_k: Option<f64>,
    pub params: ChiSquareParams,
}

/// Chi-square statistic of the 2 x k table of baseline/focus subgroup sizes.
/// Subgroups empty in both cohorts are skipped.
pub fn danger_raw(table: &SubgroupTable) -> Result<(f64, Vec<DangerTerm>)> {
    let b = table.baseline_total as f64;
    let f = table.focus_total as f64;
    if table.baseline_total == 0 {
        return Err(Error::EmptyBaseline);
    }
    if table.focus_total == 0 {
        return Err(Error::EmptyFocus);
    }
    let mut d_k = 0.0;
    let mut terms = Vec::with_capacity(table.k);
    for r in table.rows.iter().filter(|r| r.size() > 0) {
        let s = r.size() as f64;
        let eb = s * b / (b + f);
        let ef = s * f / (b + f);
        let contribution = (r.baseline as f64 - eb).powi(2) / eb + (r.focus as f64 - ef).powi(2) / ef;
        d_k += contribution;
        terms.push(DangerTerm { pattern: r.pattern, expected_baseline: eb, expected_focus: ef, contribution });
    }
    Ok((d_k, terms))
}

/// Maps `d_k` (chi-square with `k - 1` degrees of freedom) onto the
/// one-degree-of-freedom scale with equal tail probability. Above the
/// computational limit the mapping is continued linearly.
///
/// Tail probabilities go through the survival function so that scores near
/// the limit keep their precision.
pub fn danger_standardize(d_k: f64, k: usize, params: ChiSquareParams) -> Result<DangerScore> {
    params.validate()?;
    if !(d_k.is_finite() && d_k >= 0.0) {
        return Err(Error::InvalidInput(format!("raw danger score must be finite and >= 0, got {d_k}")));
    }
    let mut score = DangerScore {
        d_k,
        k,
        breakdown: Vec::new(),
        d: 0.0,
        normalized: 0.0,
        over_threshold: false,
        used_approximation: false,
        degenerate: false,
        limit_k: None,
        params,
    };
    match k {
        0 => return Err(Error::DangerUndefined("no non-empty subgroups".into())),
        1 => {
            score.degenerate = true;
            return Ok(score);
        }
        _ => {}
    }
    let df = (k - 1) as u32;
    let l = params.limit;
    let limit_k = if df == 1 { l } else { chi2_inv_sf(chi2_sf(l, 1)?, df)? };
    score.limit_k = Some(limit_k);

    let to_one_df = |x: f64| -> Result<f64> {
        if df == 1 {
            Ok(x)
        } else {
            chi2_inv_sf(chi2_sf(x, df)?, 1)
        }
    };

    if d_k <= limit_k {
        score.d = to_one_df(d_k)?;
    } else {
        let eps = params.epsilon;
        let below = to_one_df((limit_k - eps).max(0.0))?;
        let slope = (l - below) / eps;
        score.d = slope * (d_k - limit_k) + l;
        score.used_approximation = true;
    }
    score.normalized = score.d / params.warning_threshold;
    score.over_threshold = score.normalized > 1.0;
    Ok(score)
}

/// Raw statistic plus standardization for a subgroup table.
pub fn assess_danger(table: &SubgroupTable, params: ChiSquareParams) -> Result<DangerScore> {
    let (d_k, breakdown) = danger_raw(table)?;
    let mut score = danger_standardize(d_k, table.k, params)?;
    score.breakdown = breakdown;
    Ok(score)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(b: &[usize], f: &[usize]) -> SubgroupTable {
        SubgroupTable::from_counts(b, f).unwrap()
    }

    #[test]
    fn reference_row_one() {
        let s = assess_danger(&table(&[100, 200, 300, 400], &[0, 200, 300, 400]), ChiSquareParams::default()).unwrap();
        assert!((s.d_k - 95.0).abs() < 0.5);
        assert!((s.d - 85.59).abs() < 1.0);
        assert!(s.used_approximation);
        assert!((s.normalized - 1.71).abs() < 0.02);
        assert!(s.over_threshold);
        assert_eq!(s.k, 4);
    }

    #[test]
    fn reference_row_two() {
        let s = assess_danger(&table(&[100, 200, 300, 400], &[0, 2, 3, 4]), ChiSquareParams::default()).unwrap();
        assert!((s.d_k - 0.999).abs() < 0.01);
        assert!((s.d - 0.063).abs() < 0.005);
        assert!(!s.used_approximation);
    }

    #[test]
    fn proportional_focus_scores_zero() {
        let s = assess_danger(&table(&[10, 20, 30], &[5, 10, 15]), ChiSquareParams::default()).unwrap();
        assert!(s.d_k.abs() < 1e-9);
        assert!(s.d.abs() < 1e-9);
    }

    #[test]
    fn one_df_is_identity_below_limit() {
        for d_k in [0.0, 0.3, 3.84, 17.0, 50.0] {
            let s = danger_standardize(d_k, 2, ChiSquareParams::default()).unwrap();
            assert_eq!(s.d, d_k);
            assert!(!s.used_approximation);
        }
    }

    #[test]
    fn degenerate_and_invalid_k() {
        let s = danger_standardize(0.0, 1, ChiSquareParams::default()).unwrap();
        assert!(s.degenerate && s.d == 0.0);
        assert!(danger_standardize(1.0, 0, ChiSquareParams::default()).is_err());
        let s = assess_danger(&table(&[10, 0], &[4, 0]), ChiSquareParams::default()).unwrap();
        assert!(s.degenerate);
    }

    #[test]
    fn empty_rows_skipped_in_breakdown() {
        let s = assess_danger(&table(&[10, 0, 5, 0], &[3, 0, 4, 0]), ChiSquareParams::default()).unwrap();
        assert_eq!(s.breakdown.len(), 2);
        let sum: f64 = s.breakdown.iter().map(|t| t.contribution).sum();
        assert!((sum - s.d_k).abs() < 1e-12);
    }

    #[test]
    fn continuity_at_limit() {
        let params = ChiSquareParams::default();
        for k in [3, 4, 6, 9] {
            let below = danger_standardize(0.0, k, params).unwrap();
            let lk = below.limit_k.unwrap();
            let a = danger_standardize(lk, k, params).unwrap();
            let b = danger_standardize(lk + 1e-9, k, params).unwrap();
            assert!((a.d - params.limit).abs() < 1e-6, "k={k} d={}", a.d);
            assert!((a.d - b.d).abs() < 1e-6);
        }
    }
}
