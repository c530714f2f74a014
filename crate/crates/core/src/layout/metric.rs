use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::cohort::{DimId, DimensionForest, DimensionStat, DimensionStats};
use crate::error::{Error, Result};

/// Column a layout can be sorted or colored by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    UnweightedDistance,
    WeightedDistance,
    BaselineCorrelation,
    FocusCorrelation,
    WeightedFocusCorrelation,
}

impl Metric {
    pub fn value(self, s: &DimensionStat) -> Option<f64> {
        match self {
            Metric::UnweightedDistance => s.distance_unweighted,
            Metric::WeightedDistance => s.distance_weighted,
            Metric::BaselineCorrelation => s.corr_baseline,
            Metric::FocusCorrelation => s.corr_focus,
            Metric::WeightedFocusCorrelation => s.corr_focus_weighted,
        }
    }

    /// Correlations are signed; distances are not.
    pub fn is_signed(self) -> bool {
        matches!(self, Metric::BaselineCorrelation | Metric::FocusCorrelation | Metric::WeightedFocusCorrelation)
    }

    pub fn parse(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|_| Error::InvalidInput(format!("unknown metric `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutConfig {
    /// Saliency threshold `t_s`; `f64::INFINITY` disables threshold-driven saliency.
    #[serde(alias = "t_s", with = "threshold")]
    pub saliency_threshold: f64,
    #[serde(default)]
    pub pins: BTreeSet<String>,
    #[serde(default)]
    pub collapses: BTreeSet<String>,
    #[serde(default = "default_sort")]
    pub sort: Metric,
    #[serde(default = "default_color")]
    pub color: Metric,
}

fn default_sort() -> Metric {
    Metric::UnweightedDistance
}

fn default_color() -> Metric {
    Metric::WeightedDistance
}

impl Default for LayoutConfig {
    fn default() -> Self {
        LayoutConfig {
            saliency_threshold: 0.1,
            pins: BTreeSet::new(),
            collapses: BTreeSet::new(),
            sort: default_sort(),
            color: default_color(),
        }
    }
}

impl LayoutConfig {
    pub fn validate(&self, forest: &DimensionForest) -> Result<()> {
        if self.saliency_threshold.is_nan() || self.saliency_threshold <= 0.0 {
            return Err(Error::InvalidInput(format!("saliency threshold must be > 0, got {}", self.saliency_threshold)));
        }
        for code in self.pins.iter().chain(&self.collapses) {
            forest.require(code)?;
        }
        Ok(())
    }
}

// JSON has no infinity; an unbounded threshold travels as null.
mod threshold {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

/// Metric value `s_i` and shift gradient `delta_i = s_i - s_parent` per
/// dimension, indexed by [`DimId`]. Missing values count as 0.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricField {
    values: Vec<f64>,
    deltas: Vec<f64>,
}

impl MetricField {
    pub fn from_values(forest: &DimensionForest, values: Vec<Option<f64>>) -> Result<Self> {
        if values.len() != forest.len() {
            return Err(Error::InvalidInput(format!("{} metric values for {} dimensions", values.len(), forest.len())));
        }
        let values: Vec<f64> = values.into_iter().map(|v| v.filter(|x| x.is_finite()).unwrap_or(0.0)).collect();
        let deltas = forest.ids().map(|d| values[d.index()] - forest.parent(d).map_or(0.0, |p| values[p.index()])).collect();
        Ok(MetricField { values, deltas })
    }

    pub fn from_stats(forest: &DimensionForest, stats: &DimensionStats, metric: Metric) -> Result<Self> {
        Self::from_values(forest, stats.rows.iter().map(|r| metric.value(r)).collect())
    }

    pub fn value(&self, d: DimId) -> f64 {
        self.values[d.index()]
    }

    pub fn delta(&self, d: DimId) -> f64 {
        self.deltas[d.index()]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}
