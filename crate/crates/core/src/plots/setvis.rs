use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reweight::{DangerScore, SubgroupTable};

/// Headline numbers of a danger score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DangerFlag {
    pub d_k: f64,
    pub d: f64,
    pub normalized: f64,
    pub over_threshold: bool,
    pub degenerate: bool,
    pub used_approximation: bool,
}

impl From<&DangerScore> for DangerFlag {
    fn from(s: &DangerScore) -> Self {
        DangerFlag {
            d_k: s.d_k,
            d: s.d,
            normalized: s.normalized,
            over_threshold: s.over_threshold,
            degenerate: s.degenerate,
            used_approximation: s.used_approximation,
        }
    }
}

/// One non-baseline cohort: its subgroup table against the baseline and,
/// when defined, its danger score.
#[derive(Debug, Clone)]
pub struct CohortSubgroups<'a> {
    pub cohort: String,
    pub table: &'a SubgroupTable,
    pub danger: std::result::Result<&'a DangerScore, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetVisColumn {
    pub code: String,
    /// Share of members in the subgroups having this dimension, per cohort
    /// (baseline first).
    pub prevalence: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetVisRow {
    pub pattern: u32,
    pub present: Vec<bool>,
    /// Member counts per cohort, baseline first.
    pub counts: Vec<usize>,
    pub mean_size: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetVisCohort {
    pub cohort: String,
    pub danger: Option<DangerFlag>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub danger_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetVisModel {
    pub dimensions: Vec<String>,
    pub baseline: String,
    pub cohorts: Vec<SetVisCohort>,
    pub columns: Vec<SetVisColumn>,
    pub rows: Vec<SetVisRow>,
}

/// UpSet-style view of the reweight subgroups, smallest subgroups on top.
pub fn set_vis(baseline: &str, cohorts: &[CohortSubgroups<'_>]) -> Result<SetVisModel> {
    let Some(first) = cohorts.first() else {
        return Err(Error::InvalidInput("set view needs at least one cohort".into()));
    };
    let dims = &first.table.dimensions;
    if cohorts.iter().any(|c| &c.table.dimensions != dims || c.table.rows.len() != first.table.rows.len()) {
        return Err(Error::InvalidInput("subgroup tables do not share reweight dimensions".into()));
    }

    let mut rows: Vec<SetVisRow> = first
        .table
        .rows
        .iter()
        .enumerate()
        .map(|(r, row)| {
            let mut counts = vec![row.baseline];
            counts.extend(cohorts.iter().map(|c| c.table.rows[r].focus));
            let mean_size = counts.iter().sum::<usize>() as f64 / counts.len() as f64;
            SetVisRow { pattern: row.pattern, present: (0..dims.len()).map(|j| row.pattern >> j & 1 == 1).collect(), counts, mean_size }
        })
        .collect();
    rows.sort_by(|a, b| a.mean_size.total_cmp(&b.mean_size).then(a.pattern.cmp(&b.pattern)));

    let n_series = cohorts.len() + 1;
    let columns = dims
        .iter()
        .enumerate()
        .map(|(j, code)| {
            let prevalence = (0..n_series)
                .map(|s| {
                    let total: usize = rows.iter().map(|r| r.counts[s]).sum();
                    let with: usize = rows.iter().filter(|r| r.present[j]).map(|r| r.counts[s]).sum();
                    if total == 0 {
                        0.0
                    } else {
                        with as f64 / total as f64
                    }
                })
                .collect();
            SetVisColumn { code: code.clone(), prevalence }
        })
        .collect();

    let cohorts = cohorts
        .iter()
        .map(|c| match &c.danger {
            Ok(s) => SetVisCohort { cohort: c.cohort.clone(), danger: Some(DangerFlag::from(*s)), danger_error: None },
            Err(e) => SetVisCohort { cohort: c.cohort.clone(), danger: None, danger_error: Some(e.clone()) },
        })
        .collect();
    Ok(SetVisModel { dimensions: dims.clone(), baseline: baseline.to_string(), cohorts, columns, rows })
}
