use serde::{Deserialize, Serialize};

use crate::cohort::{Constraint, DimensionKind, DimensionStat};
use crate::layout::{LayoutConfig, LayoutModel};
use crate::plots::DangerFlag;
use crate::reweight::{DangerScore, ReweightConfig, SubgroupTable};

/// Machine-readable error kind plus message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub kind: String,
    pub message: String,
}

impl From<&crate::Error> for ErrorBody {
    fn from(e: &crate::Error) -> Self {
        ErrorBody { kind: e.kind().into(), message: e.to_string() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetPayload {
    pub revision: u64,
    pub dataset_id: String,
    pub checksum: String,
    pub entities: usize,
    pub dimensions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HierarchyNode {
    pub code: String,
    pub label: String,
    pub parent: Option<String>,
    pub kind: DimensionKind,
    pub depth: usize,
    pub is_leaf: bool,
    /// Entities in the whole dataset having the dimension.
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HierarchyPayload {
    pub revision: u64,
    pub dataset_id: String,
    pub nodes: Vec<HierarchyNode>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivePayload {
    pub revision: u64,
    pub parent: String,
    pub included: String,
    pub excluded: String,
    pub included_size: usize,
    pub excluded_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortNode {
    pub id: String,
    pub parent: Option<String>,
    pub constraint: Option<Constraint>,
    pub is_complement: bool,
    pub size: usize,
    pub roles: Vec<String>,
    /// Power mean of the per-dimension distances to the baseline.
    pub distance: Option<f64>,
    pub distance_weighted: Option<f64>,
    pub danger: Option<DangerFlag>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub danger_error: Option<ErrorBody>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortsPayload {
    pub revision: u64,
    pub baseline: String,
    pub focus: Option<String>,
    /// Configuration the danger column refers to: the applied one, else the pending one.
    pub reweight: Option<ReweightConfig>,
    pub cohorts: Vec<CohortNode>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsPayload {
    pub revision: u64,
    pub cohort: String,
    pub baseline: String,
    pub weighted: bool,
    pub reweight: Option<ReweightConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights_error: Option<ErrorBody>,
    /// Aggregate of the distance column selected by `weighted`.
    pub aggregate: Option<f64>,
    pub dimensions: Vec<DimensionStat>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortDanger {
    pub cohort: String,
    pub danger: Option<DangerScore>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorBody>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssessPayload {
    pub revision: u64,
    pub config: ReweightConfig,
    pub baseline: String,
    pub cohort: String,
    pub table: SubgroupTable,
    pub danger: DangerScore,
    /// Every non-baseline cohort under the same configuration.
    pub cohorts: Vec<CohortDanger>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApplyResult {
    pub cohort: String,
    pub aggregate_unweighted: Option<f64>,
    pub aggregate_weighted: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights_error: Option<ErrorBody>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApplyPayload {
    pub revision: u64,
    pub config: ReweightConfig,
    pub cohorts: Vec<ApplyResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutPayload {
    pub revision: u64,
    pub cohort: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replace_dimension: Option<String>,
    pub config: LayoutConfig,
    #[serde(flatten)]
    pub model: LayoutModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotPayload<T> {
    pub revision: u64,
    pub cohort: String,
    #[serde(flatten)]
    pub model: T,
}
