use serde::{Deserialize, Serialize};

use super::dataset::{AttributeColumn, Dataset};
use super::entity_set::EntitySet;
use super::forest::{DimId, DimensionKind};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::stats::{
    generalized_mean, hellinger_binary, hellinger_weights, interp_correlation, pearson_from_moments, BinaryMoments, PowerMeanConfig,
};

/// Equal-width bins used to discretise numeric attributes before comparing them.
pub const NUMERIC_BINS: usize = 10;

/// Per-entity weights for a reweighted cohort, indexed by dataset entity index.
///
/// `interpolated` drives prevalences and distances; correlations are computed
/// with the `full` weights and then blended linearly by `coefficient`.
#[derive(Debug, Clone, PartialEq)]
pub struct EntityWeights {
    pub interpolated: Vec<f64>,
    pub full: Vec<f64>,
    pub coefficient: f64,
}

impl EntityWeights {
    pub fn uniform(n: usize) -> Self {
        EntityWeights { interpolated: vec![1.0; n], full: vec![1.0; n], coefficient: 0.0 }
    }

    fn validate(&self, members: &EntitySet) -> Result<()> {
        if self.interpolated.len() != members.capacity() || self.full.len() != members.capacity() {
            return Err(Error::InvalidInput("weight vector length does not match the dataset".into()));
        }
        if !(0.0..=1.0).contains(&self.coefficient) {
            return Err(Error::InvalidInput(format!("coefficient {} outside [0, 1]", self.coefficient)));
        }
        for i in members.iter() {
            let (a, b) = (self.interpolated[i], self.full[i]);
            if !(a.is_finite() && a >= 0.0 && b.is_finite() && b >= 0.0) {
                return Err(Error::InvalidInput(format!("entity {i} has weight {a}/{b}")));
            }
        }
        Ok(())
    }
}

/// Statistics of one dimension for a target cohort against the baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionStat {
    pub code: String,
    pub kind: DimensionKind,
    pub count_baseline: usize,
    pub count_focus: usize,
    pub prevalence_baseline: Option<f64>,
    pub prevalence_focus: Option<f64>,
    pub prevalence_focus_weighted: Option<f64>,
    pub distance_unweighted: Option<f64>,
    pub distance_weighted: Option<f64>,
    pub corr_baseline: Option<f64>,
    pub corr_focus: Option<f64>,
    pub corr_focus_weighted: Option<f64>,
}

/// Rows indexed by [`DimId`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionStats {
    pub rows: Vec<DimensionStat>,
}

impl DimensionStats {
    pub fn get(&self, d: DimId) -> &DimensionStat {
        &self.rows[d.index()]
    }

    pub fn distances(&self, weighted: bool) -> Vec<f64> {
        self.rows.iter().filter_map(|r| if weighted { r.distance_weighted } else { r.distance_unweighted }).collect()
    }
}

/// Baseline-side values that do not depend on the target or its weights.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineSummary {
    pub count: Vec<usize>,
    pub prevalence: Vec<Option<f64>>,
    pub correlation: Vec<Option<f64>>,
}

pub fn baseline_summary(ds: &Dataset, baseline: &EntitySet, exec: Execution) -> BaselineSummary {
    let size = baseline.len();
    let outcome = ds.outcome();
    let o = baseline.intersection_len(outcome) as f64;
    let rows = exec.map_range(ds.forest().len(), |i| {
        let d = DimId(i as u32);
        let present = baseline.intersection_len(ds.presence(d));
        if size == 0 {
            return (present, None, None);
        }
        let vo = baseline.iter_and(ds.presence(d)).filter(|&e| outcome.contains(e)).count() as f64;
        let m = BinaryMoments { total: size as f64, v: present as f64, o, vo };
        (present, Some(present as f64 / size as f64), pearson_from_moments(&m))
    });
    let mut s = BaselineSummary { count: Vec::with_capacity(rows.len()), prevalence: Vec::new(), correlation: Vec::new() };
    for (c, p, r) in rows {
        s.count.push(c);
        s.prevalence.push(p);
        s.correlation.push(r);
    }
    s
}

/// Statistics of every dimension for `target` against `baseline`.
///
/// Without weights the weighted fields repeat the unweighted ones.
pub fn compute_dimension_stats(
    ds: &Dataset,
    baseline: &EntitySet,
    target: &EntitySet,
    weights: Option<&EntityWeights>,
    exec: Execution,
) -> Result<DimensionStats> {
    let summary = baseline_summary(ds, baseline, exec);
    compute_dimension_stats_with(ds, baseline, &summary, target, weights, exec)
}

/// As [`compute_dimension_stats`], reusing a precomputed baseline summary.
pub fn compute_dimension_stats_with(
    ds: &Dataset,
    baseline: &EntitySet,
    summary: &BaselineSummary,
    target: &EntitySet,
    weights: Option<&EntityWeights>,
    exec: Execution,
) -> Result<DimensionStats> {
    if let Some(w) = weights {
        w.validate(target)?;
    }
    let forest = ds.forest();
    let outcome = ds.outcome();
    let size = target.len();

    let mut totals = Totals { unweighted: BinaryMoments::default(), interp: 0.0, full: BinaryMoments::default() };
    for i in target.iter() {
        let o = outcome.contains(i);
        totals.unweighted.add(false, o, 1.0);
        if let Some(w) = weights {
            totals.interp += w.interpolated[i];
            totals.full.add(false, o, w.full[i]);
        }
    }

    let rows = exec.map_range(forest.len(), |i| {
        let d = DimId(i as u32);
        let node = forest.node(d);
        let mut row = DimensionStat {
            code: node.code.clone(),
            kind: node.kind,
            count_baseline: summary.count[i],
            count_focus: 0,
            prevalence_baseline: summary.prevalence[i],
            prevalence_focus: None,
            prevalence_focus_weighted: None,
            distance_unweighted: None,
            distance_weighted: None,
            corr_baseline: summary.correlation[i],
            corr_focus: None,
            corr_focus_weighted: None,
        };
        if size == 0 {
            return row;
        }

        let mut unweighted = BinaryMoments { total: totals.unweighted.total, o: totals.unweighted.o, ..Default::default() };
        let mut full = BinaryMoments { total: totals.full.total, o: totals.full.o, ..Default::default() };
        let mut interp_present = 0.0;
        for e in target.iter_and(ds.presence(d)) {
            let o = outcome.contains(e);
            unweighted.v += 1.0;
            if o {
                unweighted.vo += 1.0;
            }
            if let Some(w) = weights {
                interp_present += w.interpolated[e];
                full.v += w.full[e];
                if o {
                    full.vo += w.full[e];
                }
            }
        }
        row.count_focus = unweighted.v as usize;
        let p_focus = unweighted.v / unweighted.total;
        row.prevalence_focus = Some(p_focus);
        row.corr_focus = pearson_from_moments(&unweighted);

        let (p_weighted, corr_weighted) = match weights {
            None => (Some(p_focus), row.corr_focus),
            Some(w) => {
                let p = (totals.interp > 0.0).then(|| interp_present / totals.interp);
                let rho_w = pearson_from_moments(&full);
                let corr = match (row.corr_focus, rho_w) {
                    (Some(a), Some(b)) => Some(interp_correlation(a, b, w.coefficient).expect("coefficient validated")),
                    (a, None) if w.coefficient == 0.0 => a,
                    (None, b) if w.coefficient == 1.0 => b,
                    _ => None,
                };
                (p, corr)
            }
        };
        row.prevalence_focus_weighted = p_weighted;
        row.corr_focus_weighted = corr_weighted;

        match node.kind {
            DimensionKind::Event => {
                if let Some(pb) = row.prevalence_baseline {
                    row.distance_unweighted = Some(hellinger_binary(p_focus, pb));
                    row.distance_weighted = p_weighted.map(|p| hellinger_binary(p, pb));
                }
            }
            DimensionKind::Categorical | DimensionKind::Numeric => {
                let bins = AttributeBins::new(ds, d, baseline);
                let base = bins.histogram(baseline, None);
                row.distance_unweighted = distance_between(&bins.histogram(target, None), &base);
                row.distance_weighted = match weights {
                    None => row.distance_unweighted,
                    Some(w) => distance_between(&bins.histogram(target, Some(&w.interpolated)), &base),
                };
            }
        }
        row
    });
    Ok(DimensionStats { rows })
}

struct Totals {
    unweighted: BinaryMoments,
    interp: f64,
    full: BinaryMoments,
}

fn distance_between(a: &[f64], b: &[f64]) -> Option<f64> {
    let ta: f64 = a.iter().sum();
    let tb: f64 = b.iter().sum();
    if ta <= 0.0 || tb <= 0.0 {
        return None;
    }
    Some(hellinger_weights(a.iter().zip(b).map(|(x, y)| (x / ta, y / tb))))
}

/// Bin assignment for an attribute dimension: categories as-is, numbers in
/// [`NUMERIC_BINS`] equal-width bins over the baseline's observed range.
pub(crate) struct AttributeBins<'a> {
    column: &'a AttributeColumn,
    lo: f64,
    width: f64,
    labels: Vec<String>,
}

impl<'a> AttributeBins<'a> {
    pub(crate) fn new(ds: &'a Dataset, d: DimId, baseline: &EntitySet) -> Self {
        let column = ds.column(d).expect("attribute dimension has a column");
        match column {
            AttributeColumn::Categorical { categories, .. } => AttributeBins { column, lo: 0.0, width: 0.0, labels: categories.clone() },
            AttributeColumn::Numeric { values } => {
                let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
                for v in baseline.iter().filter_map(|i| values[i]) {
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
                if !lo.is_finite() {
                    lo = 0.0;
                    hi = 0.0;
                }
                let width = (hi - lo) / NUMERIC_BINS as f64;
                let labels = (0..NUMERIC_BINS).map(|b| format!("{:.6}", lo + width * b as f64)).collect();
                AttributeBins { column, lo, width, labels }
            }
        }
    }

    pub(crate) fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Lower edge of each numeric bin and the bin width.
    pub(crate) fn edges(&self) -> (f64, f64) {
        (self.lo, self.width)
    }

    fn bin(&self, entity: usize) -> Option<usize> {
        match self.column {
            AttributeColumn::Categorical { values, .. } => values[entity].map(|c| c as usize),
            AttributeColumn::Numeric { values } => values[entity].map(|v| {
                if self.width > 0.0 {
                    (((v - self.lo) / self.width).floor().max(0.0) as usize).min(NUMERIC_BINS - 1)
                } else {
                    0
                }
            }),
        }
    }

    pub(crate) fn histogram(&self, members: &EntitySet, weights: Option<&[f64]>) -> Vec<f64> {
        let mut h = vec![0.0; self.labels.len()];
        for i in members.iter() {
            if let Some(b) = self.bin(i) {
                h[b] += weights.map_or(1.0, |w| w[i]);
            }
        }
        h
    }
}

/// Generalized mean of the per-dimension distances; `None` when no dimension has one.
pub fn aggregate_distance(stats: &DimensionStats, cfg: PowerMeanConfig, weighted: bool) -> Result<Option<f64>> {
    let d = stats.distances(weighted);
    if d.is_empty() {
        return Ok(None);
    }
    generalized_mean(&d, cfg).map(Some)
}
