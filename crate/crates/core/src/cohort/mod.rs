//! Dataset, dimension forest, cohort provenance tree and per-dimension statistics.

pub(crate) mod dataset;
mod dim_stats;
mod entity_set;
mod forest;
mod tree;

pub use dataset::{entity_has_dimension, AttributeColumn, AttributeValue, Dataset, EntityRecord};
pub(crate) use dim_stats::AttributeBins;
pub use dim_stats::{
    aggregate_distance, baseline_summary, compute_dimension_stats, compute_dimension_stats_with, BaselineSummary, DimensionStat,
    DimensionStats, EntityWeights, NUMERIC_BINS,
};
pub use entity_set::EntitySet;
pub use forest::{DimId, DimensionForest, DimensionKind, DimensionNode, DimensionRecord};
pub use tree::{Cohort, CohortSpec, CohortTree, Constraint, Predicate, ROOT_COHORT};
