use serde::{Deserialize, Serialize};

use super::ReweightConfig;
use crate::cohort::{Dataset, EntitySet, EntityWeights};
use crate::error::{Error, Result};

/// One presence/absence pattern over the reweight dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubgroupRow {
    /// Bit `j` is set when the subgroup has reweight dimension `j`.
    pub pattern: u32,
    pub baseline: usize,
    pub focus: usize,
    pub weight: Option<f64>,
    pub weight_interp: Option<f64>,
}

impl SubgroupRow {
    pub fn size(&self) -> usize {
        self.baseline + self.focus
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightRegime {
    /// Every non-empty subgroup has focus members: proportions are matched directly.
    ProportionMatch,
    /// Some non-empty subgroup lacks focus members: proportions are matched over
    /// the covered subgroups and the weighted total is renormalised to `F`.
    Renormalized,
}

/// Subgroup counts for a baseline/focus pair, one row per pattern (all `2^n`
/// rows, including empty ones).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubgroupTable {
    pub dimensions: Vec<String>,
    pub rows: Vec<SubgroupRow>,
    pub baseline_total: usize,
    pub focus_total: usize,
    /// Number of rows with at least one member in either cohort.
    pub k: usize,
    pub regime: Option<WeightRegime>,
}

impl SubgroupTable {
    /// A table straight from counts; row `i` gets pattern `i`.
    pub fn from_counts(baseline: &[usize], focus: &[usize]) -> Result<Self> {
        if baseline.len() != focus.len() || baseline.is_empty() {
            return Err(Error::InvalidInput(format!(
                "subgroup count vectors must be non-empty and equal length ({} vs {})",
                baseline.len(),
                focus.len()
            )));
        }
        let rows: Vec<SubgroupRow> = baseline
            .iter()
            .zip(focus)
            .enumerate()
            .map(|(i, (&b, &f))| SubgroupRow { pattern: i as u32, baseline: b, focus: f, weight: None, weight_interp: None })
            .collect();
        Ok(Self::with_rows(Vec::new(), rows))
    }

    fn with_rows(dimensions: Vec<String>, rows: Vec<SubgroupRow>) -> Self {
        let baseline_total = rows.iter().map(|r| r.baseline).sum();
        let focus_total = rows.iter().map(|r| r.focus).sum();
        let k = rows.iter().filter(|r| r.size() > 0).count();
        SubgroupTable { dimensions, rows, baseline_total, focus_total, k, regime: None }
    }

    pub fn weight_for(&self, pattern: u32) -> Option<&SubgroupRow> {
        self.rows.iter().find(|r| r.pattern == pattern)
    }
}

/// Assigns every baseline and focus member to the pattern of reweight
/// dimensions it has, and counts.
pub fn partition_subgroups(ds: &Dataset, baseline: &EntitySet, focus: &EntitySet, config: &ReweightConfig) -> Result<SubgroupTable> {
    let dims = config.resolve(ds.forest())?;
    let n_patterns = 1usize << dims.len();
    let mut b = vec![0usize; n_patterns];
    let mut f = vec![0usize; n_patterns];
    for i in baseline.iter() {
        b[pattern_of(ds, &dims, i) as usize] += 1;
    }
    for i in focus.iter() {
        f[pattern_of(ds, &dims, i) as usize] += 1;
    }
    let rows = (0..n_patterns)
        .map(|p| SubgroupRow { pattern: p as u32, baseline: b[p], focus: f[p], weight: None, weight_interp: None })
        .collect();
    Ok(SubgroupTable::with_rows(config.dimensions.clone(), rows))
}

fn pattern_of(ds: &Dataset, dims: &[crate::cohort::DimId], entity: usize) -> u32 {
    dims.iter().enumerate().fold(0u32, |acc, (j, d)| if ds.has(entity, *d) { acc | (1 << j) } else { acc })
}

/// Fills `weight` for every row with focus members.
///
/// `w_i = B_i F / (F_i B)` when every non-empty subgroup has focus members;
/// otherwise the baseline total in the denominator is replaced by the
/// baseline mass of the subgroups that do, so the weighted focus still sums to `F`.
pub fn compute_weights(table: &mut SubgroupTable) -> Result<()> {
    if table.baseline_total == 0 {
        return Err(Error::EmptyBaseline);
    }
    if table.focus_total == 0 {
        return Err(Error::EmptyFocus);
    }
    let uncovered = table.rows.iter().any(|r| r.size() > 0 && r.focus == 0);
    let (regime, denominator) = if uncovered {
        let covered: usize = table.rows.iter().filter(|r| r.focus > 0).map(|r| r.baseline).sum();
        (WeightRegime::Renormalized, covered as f64)
    } else {
        (WeightRegime::ProportionMatch, table.baseline_total as f64)
    };
    if denominator == 0.0 {
        return Err(Error::DangerUndefined("baseline and focus share no non-empty subgroup".into()));
    }
    let focus_total = table.focus_total as f64;
    for r in &mut table.rows {
        r.weight = (r.focus > 0).then(|| r.baseline as f64 * focus_total / (r.focus as f64 * denominator));
        r.weight_interp = None;
    }
    table.regime = Some(regime);
    Ok(())
}

/// `w_interp = 1 + C (w - 1)` per row.
pub fn interpolate_weights(table: &mut SubgroupTable, coefficient: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&coefficient) {
        return Err(Error::InvalidConfig(format!("coefficient {coefficient} outside [0, 1]")));
    }
    if table.regime.is_none() {
        return Err(Error::InvalidInput("weights have not been computed".into()));
    }
    for r in &mut table.rows {
        r.weight_interp = r.weight.map(|w| match coefficient {
            0.0 => 1.0,
            1.0 => w,
            c => 1.0 + c * (w - 1.0),
        });
    }
    Ok(())
}

/// Dense per-entity weights for the focus members of `table`.
pub fn entity_weights(ds: &Dataset, table: &SubgroupTable, config: &ReweightConfig, focus: &EntitySet) -> Result<EntityWeights> {
    let dims = config.resolve(ds.forest())?;
    let n = ds.len();
    let mut w = EntityWeights { interpolated: vec![1.0; n], full: vec![1.0; n], coefficient: config.coefficient };
    for i in focus.iter() {
        let row = &table.rows[pattern_of(ds, &dims, i) as usize];
        let (Some(full), Some(interp)) = (row.weight, row.weight_interp) else {
            return Err(Error::InvalidInput(format!("subgroup {} has no weight", row.pattern)));
        };
        w.full[i] = full;
        w.interpolated[i] = interp;
    }
    Ok(w)
}
