use serde::{Deserialize, Serialize};

use crate::cohort::{AttributeBins, AttributeColumn, Dataset, DimensionKind, EntitySet, EntityWeights};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
}

/// Baseline, focus and weighted-focus series for one dimension.
/// Empty cohorts give all-zero series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "plot", rename_all = "snake_case")]
pub enum DistributionPlot {
    Binary { code: String, baseline: f64, focus: f64, weighted_focus: f64 },
    Numeric { code: String, bins: Vec<HistogramBin>, baseline: Vec<f64>, focus: Vec<f64>, weighted_focus: Vec<f64> },
    Categorical { code: String, categories: Vec<String>, baseline: Vec<f64>, focus: Vec<f64>, weighted_focus: Vec<f64> },
}

fn normalize(mut h: Vec<f64>) -> Vec<f64> {
    let total: f64 = h.iter().sum();
    if total > 0.0 {
        h.iter_mut().for_each(|v| *v /= total);
    }
    h
}

pub fn distribution_plot(
    ds: &Dataset,
    code: &str,
    baseline: &EntitySet,
    focus: &EntitySet,
    weights: &EntityWeights,
) -> Result<DistributionPlot> {
    let d = ds.forest().require(code)?;
    if weights.interpolated.len() != ds.len() {
        return Err(Error::InvalidInput("weight vector length does not match the dataset".into()));
    }
    let w = &weights.interpolated;
    let code = code.to_string();
    match ds.forest().kind(d) {
        DimensionKind::Event => {
            let present = ds.presence(d);
            let share = |n: usize, of: usize| if of == 0 { 0.0 } else { n as f64 / of as f64 };
            let total_w: f64 = focus.iter().map(|i| w[i]).sum();
            let hit_w: f64 = focus.iter_and(present).map(|i| w[i]).sum();
            Ok(DistributionPlot::Binary {
                code,
                baseline: share(baseline.intersection_len(present), baseline.len()),
                focus: share(focus.intersection_len(present), focus.len()),
                weighted_focus: if total_w > 0.0 { hit_w / total_w } else { 0.0 },
            })
        }
        _ => {
            let bins = AttributeBins::new(ds, d, baseline);
            let b = normalize(bins.histogram(baseline, None));
            let f = normalize(bins.histogram(focus, None));
            let wf = normalize(bins.histogram(focus, Some(w)));
            match ds.column(d).expect("attribute dimension has a column") {
                AttributeColumn::Categorical { .. } => Ok(DistributionPlot::Categorical {
                    code,
                    categories: bins.labels().to_vec(),
                    baseline: b,
                    focus: f,
                    weighted_focus: wf,
                }),
                AttributeColumn::Numeric { .. } => {
                    let (lo, width) = bins.edges();
                    let edges = (0..b.len()).map(|k| HistogramBin { lo: lo + width * k as f64, hi: lo + width * (k + 1) as f64 }).collect();
                    Ok(DistributionPlot::Numeric { code, bins: edges, baseline: b, focus: f, weighted_focus: wf })
                }
            }
        }
    }
}
