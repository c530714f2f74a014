//! Versioned, serializable analysis state: which dataset, which cohorts,
//! which roles, and every view setting.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cohort::{CohortSpec, ROOT_COHORT};
use crate::error::{Error, Result};
use crate::ingest::DatasetManifest;
use crate::layout::LayoutConfig;
use crate::plots::{DEFAULT_SCATTER_CAP, DEFAULT_VECTOR_THRESHOLD};
use crate::reweight::ReweightConfig;

pub const SESSION_SCHEMA_VERSION: u32 = 1;

fn default_cap() -> usize {
    DEFAULT_SCATTER_CAP
}

fn default_threshold() -> f64 {
    DEFAULT_VECTOR_THRESHOLD
}

fn default_baseline() -> String {
    ROOT_COHORT.into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotSettings {
    #[serde(default = "default_cap")]
    pub scatter_cap: usize,
    #[serde(default = "default_threshold")]
    pub vector_threshold: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selected_dimension: Option<String>,
}

impl Default for PlotSettings {
    fn default() -> Self {
        PlotSettings { scatter_cap: DEFAULT_SCATTER_CAP, vector_threshold: DEFAULT_VECTOR_THRESHOLD, selected_dimension: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub schema_version: u32,
    #[serde(default)]
    pub revision: u64,
    #[serde(default)]
    pub dataset_id: Option<String>,
    #[serde(default)]
    pub manifest: Option<DatasetManifest>,
    /// Derived cohorts in creation order; the root is implicit.
    #[serde(default)]
    pub cohorts: Vec<CohortSpec>,
    #[serde(default = "default_baseline")]
    pub baseline: String,
    #[serde(default)]
    pub focus: Option<String>,
    /// Configuration whose weights are in effect.
    #[serde(default)]
    pub reweight: Option<ReweightConfig>,
    /// Last assessed configuration, not yet applied.
    #[serde(default)]
    pub pending_reweight: Option<ReweightConfig>,
    #[serde(default)]
    pub layout: LayoutConfig,
    #[serde(default)]
    pub plots: PlotSettings,
}

impl Default for SessionState {
    fn default() -> Self {
        SessionState {
            schema_version: SESSION_SCHEMA_VERSION,
            revision: 0,
            dataset_id: None,
            manifest: None,
            cohorts: Vec::new(),
            baseline: default_baseline(),
            focus: None,
            reweight: None,
            pending_reweight: None,
            layout: LayoutConfig::default(),
            plots: PlotSettings::default(),
        }
    }
}

#[derive(Deserialize)]
struct Envelope {
    #[serde(flatten)]
    state: SessionState,
    #[serde(flatten)]
    extra: BTreeMap<String, serde_json::Value>,
}

pub fn save_session(state: &SessionState) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(state).map_err(|e| Error::Parse(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Parses a saved session; fields this version does not know are dropped
/// with a warning.
pub fn load_session(bytes: &[u8]) -> Result<SessionState> {
    let value: serde_json::Value = serde_json::from_slice(bytes).map_err(|e| Error::Parse(format!("session: {e}")))?;
    let version = value
        .get("schema_version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| Error::Parse("session: missing integer `schema_version`".into()))?;
    if version != u64::from(SESSION_SCHEMA_VERSION) {
        return Err(Error::UnsupportedVersion(u32::try_from(version).unwrap_or(u32::MAX)));
    }
    let env: Envelope = serde_json::from_value(value).map_err(|e| Error::Parse(format!("session: {e}")))?;
    if !env.extra.is_empty() {
        let keys: Vec<&str> = env.extra.keys().map(String::as_str).collect();
        log::warn!("ignoring unknown session fields: {}", keys.join(", "));
    }
    Ok(env.state)
}
