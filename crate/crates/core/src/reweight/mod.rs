//! Subgroup partitioning over the reweight dimensions, subgroup weights, and
//! the chi-square danger score of a reweighting configuration.

mod danger;
mod subgroups;

pub use danger::{assess_danger, danger_raw, danger_standardize, DangerScore, DangerTerm};
pub use subgroups::{compute_weights, entity_weights, interpolate_weights, partition_subgroups, SubgroupRow, SubgroupTable, WeightRegime};

use serde::{Deserialize, Serialize};

use crate::cohort::{DimId, DimensionForest, DimensionKind};
use crate::error::{Error, Result};

/// At most this many reweight dimensions (2^12 = 4096 subgroups).
pub const MAX_REWEIGHT_DIMS: usize = 12;

/// The dimensions to correct for and how strongly to apply the correction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReweightConfig {
    #[serde(alias = "dims")]
    pub dimensions: Vec<String>,
    #[serde(alias = "C", alias = "coeff")]
    pub coefficient: f64,
}

impl ReweightConfig {
    pub fn new(dimensions: Vec<String>, coefficient: f64) -> Self {
        ReweightConfig { dimensions, coefficient }
    }

    /// Checks the configuration against the forest and resolves the dimension ids.
    pub fn resolve(&self, forest: &DimensionForest) -> Result<Vec<DimId>> {
        if self.dimensions.is_empty() {
            return Err(Error::InvalidConfig("at least one reweight dimension is required".into()));
        }
        if self.dimensions.len() > MAX_REWEIGHT_DIMS {
            return Err(Error::SubgroupExplosion(self.dimensions.len()));
        }
        if !(0.0..=1.0).contains(&self.coefficient) {
            return Err(Error::InvalidConfig(format!("coefficient {} outside [0, 1]", self.coefficient)));
        }
        let mut ids = Vec::with_capacity(self.dimensions.len());
        for code in &self.dimensions {
            let id = forest.require(code)?;
            if forest.kind(id) != DimensionKind::Event {
                return Err(Error::InvalidConfig(format!("`{code}` is not a binary event dimension")));
            }
            if ids.contains(&id) {
                return Err(Error::InvalidConfig(format!("`{code}` listed twice")));
            }
            ids.push(id);
        }
        for &a in &ids {
            for &b in &ids {
                if forest.is_ancestor(a, b) {
                    return Err(Error::InvalidConfig(format!("`{}` is an ancestor of `{}`", forest.code(a), forest.code(b))));
                }
            }
        }
        Ok(ids)
    }
}
