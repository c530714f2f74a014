//! Session-level operations shared by the command line and the HTTP service.
//!
//! Every operation returns a serializable payload carrying the session
//! revision, so both front ends emit the same bytes for the same state.

mod payload;

use std::collections::{BTreeSet, HashMap};
use std::path::Path;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

pub use payload::*;

use crate::cohort::{
    aggregate_distance, baseline_summary, compute_dimension_stats_with, BaselineSummary, Cohort, CohortTree, Constraint, Dataset, DimId,
    DimensionStats, EntityWeights,
};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::ingest::{ingest, DatasetManifest};
use crate::layout::{build_layout, compute_saliency, replace_reweight_view, LayoutConfig, Metric, MetricField};
use crate::plots::{
    contour_polylines, distribution_plot, scatter_points, set_vis, vector_field, CohortSubgroups, ContourModel, DangerFlag,
    DistributionPlot, ScatterModel, SetVisModel, VectorModel,
};
use crate::reweight::{
    assess_danger, compute_weights, entity_weights, interpolate_weights, partition_subgroups, DangerScore, ReweightConfig, SubgroupTable,
};
use crate::session::{PlotSettings, SessionState, SESSION_SCHEMA_VERSION};
use crate::stats::{ChiSquareParams, PowerMeanConfig};

const CACHE_LIMIT: usize = 256;

/// Statistics of one cohort against one baseline under one applied configuration.
#[derive(Debug)]
pub struct CohortStats {
    pub stats: DimensionStats,
    pub weights: Option<EntityWeights>,
    pub weights_error: Option<ErrorBody>,
}

/// Memoized baseline summaries and cohort statistics, shared by every clone
/// of an engine so that snapshots reuse each other's work.
#[derive(Debug, Default)]
pub struct StatsCache {
    summaries: Mutex<HashMap<String, Arc<BaselineSummary>>>,
    stats: Mutex<HashMap<String, Arc<CohortStats>>>,
}

impl StatsCache {
    pub fn len(&self) -> usize {
        self.stats.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn memo<T>(map: &Mutex<HashMap<String, Arc<T>>>, key: String, make: impl FnOnce() -> Result<T>) -> Result<Arc<T>> {
    if let Some(v) = map.lock().expect("cache lock").get(&key) {
        return Ok(v.clone());
    }
    let v = Arc::new(make()?);
    let mut m = map.lock().expect("cache lock");
    if m.len() >= CACHE_LIMIT {
        m.clear();
    }
    m.insert(key, v.clone());
    Ok(v)
}

/// Per-request overrides of the session's layout configuration.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LayoutOverrides {
    pub t_s: Option<f64>,
    pub pins: Option<BTreeSet<String>>,
    pub collapses: Option<BTreeSet<String>>,
    pub sort: Option<Metric>,
    pub color: Option<Metric>,
}

impl LayoutOverrides {
    /// Builds overrides from query-string style values: `t_s` as a number
    /// (`inf` allowed), code lists comma separated, metrics by kebab-case name.
    pub fn parse(t_s: Option<&str>, pins: Option<&str>, collapses: Option<&str>, sort: Option<&str>, color: Option<&str>) -> Result<Self> {
        let list = |s: &str| s.split(',').map(str::trim).filter(|c| !c.is_empty()).map(String::from).collect::<BTreeSet<_>>();
        let t_s =
            t_s.map(|t| t.trim().parse::<f64>().map_err(|_| Error::InvalidInput(format!("t_s `{t}` is not a number")))).transpose()?;
        Ok(LayoutOverrides {
            t_s,
            pins: pins.map(list),
            collapses: collapses.map(list),
            sort: sort.map(Metric::parse).transpose()?,
            color: color.map(Metric::parse).transpose()?,
        })
    }
}

#[derive(Debug, Clone)]
pub struct Engine {
    dataset: Arc<Dataset>,
    manifest: Option<DatasetManifest>,
    tree: CohortTree,
    revision: u64,
    applied: Option<ReweightConfig>,
    pending: Option<ReweightConfig>,
    layout: LayoutConfig,
    plots: PlotSettings,
    params: ChiSquareParams,
    power: PowerMeanConfig,
    exec: Execution,
    cache: Arc<StatsCache>,
}

impl Engine {
    pub fn new(dataset: Dataset, manifest: Option<DatasetManifest>) -> Self {
        Engine::from_shared(Arc::new(dataset), manifest)
    }

    pub fn from_shared(dataset: Arc<Dataset>, manifest: Option<DatasetManifest>) -> Self {
        let tree = CohortTree::new(&dataset);
        Engine {
            dataset,
            manifest,
            tree,
            revision: 0,
            applied: None,
            pending: None,
            layout: LayoutConfig::default(),
            plots: PlotSettings::default(),
            params: ChiSquareParams::default(),
            power: PowerMeanConfig::default(),
            exec: Execution::default(),
            cache: Arc::new(StatsCache::default()),
        }
    }

    /// Ingests the manifest (relative paths against `base`).
    pub fn open(manifest: &DatasetManifest, base: &Path) -> Result<Self> {
        let ds = ingest(manifest, base)?;
        Ok(Engine::new(ds, Some(manifest.resolved(base))))
    }

    /// Restores a saved session, ingesting the dataset its manifest names.
    pub fn from_session(state: SessionState) -> Result<Self> {
        let manifest = state.manifest.clone().ok_or_else(|| Error::InvalidInput("session has no dataset manifest".into()))?;
        let mut e = Engine::open(&manifest, Path::new(""))?;
        e.restore(state, true)?;
        Ok(e)
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    pub fn execution(&self) -> Execution {
        self.exec
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn shared_dataset(&self) -> Arc<Dataset> {
        self.dataset.clone()
    }

    pub fn tree(&self) -> &CohortTree {
        &self.tree
    }

    pub fn revision(&self) -> u64 {
        self.revision
    }

    pub fn cache(&self) -> &StatsCache {
        &self.cache
    }

    pub fn applied(&self) -> Option<&ReweightConfig> {
        self.applied.as_ref()
    }

    fn bump(&mut self) {
        self.revision += 1;
    }

    // ---- session ----

    pub fn session(&self) -> SessionState {
        SessionState {
            schema_version: SESSION_SCHEMA_VERSION,
            revision: self.revision,
            dataset_id: Some(self.dataset.id().to_string()),
            manifest: self.manifest.clone(),
            cohorts: self.tree.specs(),
            baseline: self.tree.baseline_id().to_string(),
            focus: self.tree.focus_id().map(str::to_string),
            reweight: self.applied.clone(),
            pending_reweight: self.pending.clone(),
            layout: self.layout.clone(),
            plots: self.plots.clone(),
        }
    }

    /// Replaces the analysis state with `state`. The revision becomes the
    /// larger of the next revision and the stored one.
    pub fn put_session(&mut self, state: SessionState) -> Result<SessionState> {
        self.restore(state, false)?;
        Ok(self.session())
    }

    fn restore(&mut self, state: SessionState, exact_revision: bool) -> Result<()> {
        if state.schema_version != SESSION_SCHEMA_VERSION {
            return Err(Error::UnsupportedVersion(state.schema_version));
        }
        if let Some(id) = &state.dataset_id {
            if id != self.dataset.id() {
                return Err(Error::UnknownDataset(id.clone()));
            }
        }
        let tree = CohortTree::replay(&self.dataset, &state.cohorts, &state.baseline, state.focus.as_deref())?;
        for cfg in [&state.reweight, &state.pending_reweight].into_iter().flatten() {
            cfg.resolve(self.dataset.forest())?;
        }
        state.layout.validate(self.dataset.forest())?;
        if state.plots.scatter_cap == 0 || state.plots.vector_threshold.is_nan() || state.plots.vector_threshold < 0.0 {
            return Err(Error::InvalidConfig("plot settings out of range".into()));
        }
        self.tree = tree;
        self.applied = state.reweight;
        self.pending = state.pending_reweight;
        self.layout = state.layout;
        self.plots = state.plots;
        if state.manifest.is_some() {
            self.manifest = state.manifest;
        }
        self.revision = if exact_revision { state.revision } else { state.revision.max(self.revision + 1) };
        Ok(())
    }

    // ---- dataset ----

    pub fn dataset_info(&self) -> DatasetPayload {
        DatasetPayload {
            revision: self.revision,
            dataset_id: self.dataset.id().to_string(),
            checksum: self.dataset.checksum().to_string(),
            entities: self.dataset.len(),
            dimensions: self.dataset.forest().len(),
        }
    }

    pub fn hierarchy(&self) -> HierarchyPayload {
        let f = self.dataset.forest();
        let nodes = f
            .ids()
            .map(|d| {
                let n = f.node(d);
                HierarchyNode {
                    code: n.code.clone(),
                    label: n.label.clone(),
                    parent: f.parent(d).map(|p| f.code(p).to_string()),
                    kind: f.kind(d),
                    depth: f.depth(d),
                    is_leaf: f.is_leaf(d),
                    count: self.dataset.presence(d).len(),
                }
            })
            .collect();
        HierarchyPayload { revision: self.revision, dataset_id: self.dataset.id().to_string(), nodes }
    }

    // ---- cohorts ----

    pub fn derive_cohort(&mut self, parent: &str, constraint: Constraint) -> Result<DerivePayload> {
        let (included, excluded) = self.tree.derive(&self.dataset, parent, constraint)?;
        self.bump();
        Ok(DerivePayload {
            revision: self.revision,
            parent: parent.to_string(),
            included_size: self.tree.get(&included)?.size(),
            excluded_size: self.tree.get(&excluded)?.size(),
            included,
            excluded,
        })
    }

    pub fn set_baseline(&mut self, id: &str) -> Result<CohortsPayload> {
        self.tree.set_baseline(id)?;
        self.bump();
        self.cohorts()
    }

    pub fn set_focus(&mut self, id: Option<&str>) -> Result<CohortsPayload> {
        self.tree.set_focus(id)?;
        self.bump();
        self.cohorts()
    }

    /// The provenance tree with size, aggregate distance and danger per cohort.
    pub fn cohorts(&self) -> Result<CohortsPayload> {
        let config = self.applied.as_ref().or(self.pending.as_ref()).cloned();
        let baseline = self.tree.baseline_id().to_string();
        let focus = self.tree.focus_id().map(str::to_string);
        let mut nodes = Vec::with_capacity(self.tree.cohorts().len());
        for c in self.tree.cohorts() {
            let mut roles = Vec::new();
            if c.id() == baseline {
                roles.push("baseline".to_string());
            }
            if focus.as_deref() == Some(c.id()) {
                roles.push("focus".to_string());
            }
            let (mut distance, mut distance_weighted) = (None, None);
            if c.size() > 0 {
                let s = self.cohort_stats(c.id())?;
                distance = aggregate_distance(&s.stats, self.power, false)?;
                distance_weighted = aggregate_distance(&s.stats, self.power, true)?;
            }
            let (mut danger, mut danger_error) = (None, None);
            if let (Some(cfg), false) = (&config, c.id() == baseline) {
                match self.danger_for(c, cfg) {
                    Ok(s) => danger = Some(DangerFlag::from(&s)),
                    Err(e) => danger_error = Some(ErrorBody::from(&e)),
                }
            }
            nodes.push(CohortNode {
                id: c.id().to_string(),
                parent: c.spec.parent.clone(),
                constraint: c.spec.constraint.clone(),
                is_complement: c.spec.is_complement,
                size: c.size(),
                roles,
                distance,
                distance_weighted,
                danger,
                danger_error,
            });
        }
        Ok(CohortsPayload { revision: self.revision, baseline, focus, reweight: config, cohorts: nodes })
    }

    // ---- statistics ----

    fn lineage_key(&self, id: &str) -> Result<String> {
        let mut parts = Vec::new();
        let mut cur = Some(self.tree.get(id)?);
        while let Some(c) = cur {
            parts.push(serde_json::to_string(&c.spec).map_err(|e| Error::Parse(e.to_string()))?);
            cur = c.spec.parent.as_deref().map(|p| self.tree.get(p)).transpose()?;
        }
        Ok(parts.join("/"))
    }

    fn summary(&self) -> Result<Arc<BaselineSummary>> {
        let key = format!("{}|{}", self.dataset.checksum(), self.lineage_key(self.tree.baseline_id())?);
        let members = self.tree.baseline().members.clone();
        memo(&self.cache.summaries, key, || Ok(baseline_summary(&self.dataset, &members, self.exec)))
    }

    /// Weights of `cohort` under `config` against the current baseline.
    fn weights_for(&self, cohort: &Cohort, config: &ReweightConfig) -> Result<EntityWeights> {
        let baseline = &self.tree.baseline().members;
        let mut table = partition_subgroups(&self.dataset, baseline, &cohort.members, config)?;
        compute_weights(&mut table)?;
        interpolate_weights(&mut table, config.coefficient)?;
        entity_weights(&self.dataset, &table, config, &cohort.members)
    }

    /// Cached statistics of a cohort under the applied configuration.
    pub fn cohort_stats(&self, id: &str) -> Result<Arc<CohortStats>> {
        let cohort = self.tree.get(id)?;
        let config_key = match &self.applied {
            Some(c) => serde_json::to_string(c).map_err(|e| Error::Parse(e.to_string()))?,
            None => String::new(),
        };
        let key =
            format!("{}|{}|{}|{}", self.dataset.checksum(), self.lineage_key(id)?, self.lineage_key(self.tree.baseline_id())?, config_key);
        let summary = self.summary()?;
        memo(&self.cache.stats, key, || {
            let (weights, weights_error) = match (&self.applied, id == self.tree.baseline_id()) {
                (Some(cfg), false) => match self.weights_for(cohort, cfg) {
                    Ok(w) => (Some(w), None),
                    Err(e) => (None, Some(ErrorBody::from(&e))),
                },
                _ => (None, None),
            };
            let stats = compute_dimension_stats_with(
                &self.dataset,
                &self.tree.baseline().members,
                &summary,
                &cohort.members,
                weights.as_ref(),
                self.exec,
            )?;
            Ok(CohortStats { stats, weights, weights_error })
        })
    }

    fn target(&self, cohort: Option<&str>) -> Result<String> {
        match cohort {
            Some(c) => Ok(self.tree.get(c)?.id().to_string()),
            None => self.tree.focus_id().map(str::to_string).ok_or(Error::NoFocus),
        }
    }

    pub fn stats(&self, cohort: Option<&str>, weighted: bool) -> Result<StatsPayload> {
        let id = self.target(cohort)?;
        let s = self.cohort_stats(&id)?;
        Ok(StatsPayload {
            revision: self.revision,
            cohort: id,
            baseline: self.tree.baseline_id().to_string(),
            weighted,
            reweight: self.applied.clone(),
            weights_error: s.weights_error.clone(),
            aggregate: aggregate_distance(&s.stats, self.power, weighted)?,
            dimensions: s.stats.rows.clone(),
        })
    }

    // ---- reweighting ----

    fn danger_for(&self, cohort: &Cohort, config: &ReweightConfig) -> Result<DangerScore> {
        let table = partition_subgroups(&self.dataset, &self.tree.baseline().members, &cohort.members, config)?;
        assess_danger(&table, self.params)
    }

    /// Subgroup table and danger scores for `config`; cohort statistics are
    /// untouched, the configuration is remembered as pending.
    pub fn assess(&mut self, config: ReweightConfig) -> Result<AssessPayload> {
        config.resolve(self.dataset.forest())?;
        let focus = self.tree.focus().ok_or(Error::NoFocus)?.clone();
        let baseline = self.tree.baseline().clone();
        let mut table = partition_subgroups(&self.dataset, &baseline.members, &focus.members, &config)?;
        compute_weights(&mut table)?;
        interpolate_weights(&mut table, config.coefficient)?;
        let danger = assess_danger(&table, self.params)?;
        let cohorts = self
            .tree
            .cohorts()
            .iter()
            .filter(|c| c.id() != baseline.id())
            .map(|c| match self.danger_for(c, &config) {
                Ok(d) => CohortDanger { cohort: c.id().to_string(), danger: Some(d), error: None },
                Err(e) => CohortDanger { cohort: c.id().to_string(), danger: None, error: Some(ErrorBody::from(&e)) },
            })
            .collect();
        self.pending = Some(config.clone());
        self.bump();
        Ok(AssessPayload {
            revision: self.revision,
            config,
            baseline: baseline.id().to_string(),
            cohort: focus.id().to_string(),
            table,
            danger,
            cohorts,
        })
    }

    /// Makes `config` (or the pending one) the applied configuration and
    /// recomputes weighted statistics for every non-baseline cohort.
    pub fn apply(&mut self, config: Option<ReweightConfig>) -> Result<ApplyPayload> {
        let config =
            config.or_else(|| self.pending.clone()).ok_or_else(|| Error::InvalidConfig("no reweight configuration to apply".into()))?;
        config.resolve(self.dataset.forest())?;
        if let Some(focus) = self.tree.focus() {
            if focus.id() != self.tree.baseline_id() {
                self.weights_for(focus, &config)?;
            }
        }
        self.applied = Some(config.clone());
        self.pending = None;
        self.bump();
        let ids: Vec<String> =
            self.tree.cohorts().iter().filter(|c| c.id() != self.tree.baseline_id() && c.size() > 0).map(|c| c.id().to_string()).collect();
        let mut cohorts = Vec::with_capacity(ids.len());
        for id in ids {
            let s = self.cohort_stats(&id)?;
            cohorts.push(ApplyResult {
                cohort: id,
                aggregate_unweighted: aggregate_distance(&s.stats, self.power, false)?,
                aggregate_weighted: aggregate_distance(&s.stats, self.power, true)?,
                weights_error: s.weights_error.clone(),
            });
        }
        Ok(ApplyPayload { revision: self.revision, config, cohorts })
    }

    /// Drops the applied configuration.
    pub fn clear_reweight(&mut self) {
        self.applied = None;
        self.pending = None;
        self.bump();
    }

    // ---- layout ----

    pub fn layout_config(&self, o: &LayoutOverrides) -> LayoutConfig {
        let mut cfg = self.layout.clone();
        if let Some(t) = o.t_s {
            cfg.saliency_threshold = t;
        }
        if let Some(p) = &o.pins {
            cfg.pins = p.clone();
        }
        if let Some(c) = &o.collapses {
            cfg.collapses = c.clone();
        }
        if let Some(s) = o.sort {
            cfg.sort = s;
        }
        if let Some(c) = o.color {
            cfg.color = c;
        }
        cfg
    }

    fn constraint_dims(&self, cohort: &str) -> Result<BTreeSet<DimId>> {
        let f = self.dataset.forest();
        self.tree.lineage_constraints(cohort)?.iter().map(|c| f.require(&c.dimension)).collect()
    }

    fn fields(&self, stats: &DimensionStats, cfg: &LayoutConfig) -> Result<(MetricField, MetricField)> {
        let f = self.dataset.forest();
        Ok((MetricField::from_stats(f, stats, cfg.sort)?, MetricField::from_stats(f, stats, cfg.color)?))
    }

    pub fn layout(&self, cohort: Option<&str>, overrides: &LayoutOverrides) -> Result<LayoutPayload> {
        let id = self.target(cohort)?;
        let cfg = self.layout_config(overrides);
        cfg.validate(self.dataset.forest())?;
        let s = self.cohort_stats(&id)?;
        let (sort, color) = self.fields(&s.stats, &cfg)?;
        let salient = compute_saliency(self.dataset.forest(), &sort, &cfg)?;
        let model = build_layout(self.dataset.forest(), &sort, &color, &salient, &cfg, &self.constraint_dims(&id)?)?;
        Ok(LayoutPayload { revision: self.revision, cohort: id, replace_dimension: None, config: cfg, model })
    }

    pub fn replace_view(&self, cohort: Option<&str>, dim: &str, overrides: &LayoutOverrides) -> Result<LayoutPayload> {
        let id = self.target(cohort)?;
        let config = self
            .applied
            .as_ref()
            .or(self.pending.as_ref())
            .ok_or_else(|| Error::InvalidConfig("no reweight dimensions selected".into()))?;
        let cfg = self.layout_config(overrides);
        cfg.validate(self.dataset.forest())?;
        let s = self.cohort_stats(&id)?;
        let (sort, color) = self.fields(&s.stats, &cfg)?;
        let model =
            replace_reweight_view(self.dataset.forest(), &sort, &color, &cfg, &config.dimensions, dim, &self.constraint_dims(&id)?)?;
        Ok(LayoutPayload { revision: self.revision, cohort: id, replace_dimension: Some(dim.to_string()), config: cfg, model })
    }

    // ---- plots ----

    fn plot<T>(&self, cohort: String, model: T) -> PlotPayload<T> {
        PlotPayload { revision: self.revision, cohort, model }
    }

    pub fn scatter(&self, cohort: Option<&str>, cap: Option<usize>) -> Result<PlotPayload<ScatterModel>> {
        let id = self.target(cohort)?;
        let s = self.cohort_stats(&id)?;
        Ok(self.plot(id, scatter_points(&s.stats, cap.unwrap_or(self.plots.scatter_cap))?))
    }

    /// Contours of the baseline, focus and weighted-focus glyph clouds.
    pub fn contour(&self, cohort: Option<&str>) -> Result<PlotPayload<ContourModel>> {
        let id = self.target(cohort)?;
        let s = self.cohort_stats(&id)?;
        let all = scatter_points(&s.stats, usize::MAX)?;
        let sets = vec![
            ("baseline".to_string(), all.dimensions.iter().map(|d| d.baseline).collect()),
            ("focus".to_string(), all.dimensions.iter().map(|d| d.focus).collect()),
            ("weighted_focus".to_string(), all.dimensions.iter().map(|d| d.weighted_focus).collect()),
        ];
        Ok(self.plot(id, contour_polylines(&sets)))
    }

    pub fn vector(&self, cohort: Option<&str>, threshold: Option<f64>) -> Result<PlotPayload<VectorModel>> {
        let id = self.target(cohort)?;
        let s = self.cohort_stats(&id)?;
        Ok(self.plot(id, vector_field(&s.stats, threshold.unwrap_or(self.plots.vector_threshold))?))
    }

    pub fn distribution(&self, cohort: Option<&str>, code: &str) -> Result<PlotPayload<DistributionPlot>> {
        let id = self.target(cohort)?;
        self.dataset.forest().require(code)?;
        let s = self.cohort_stats(&id)?;
        let uniform;
        let weights = match &s.weights {
            Some(w) => w,
            None => {
                uniform = EntityWeights::uniform(self.dataset.len());
                &uniform
            }
        };
        let model = distribution_plot(&self.dataset, code, &self.tree.baseline().members, &self.tree.get(&id)?.members, weights)?;
        Ok(self.plot(id, model))
    }

    /// Set view over every non-baseline cohort for the applied (else pending) configuration.
    pub fn setvis(&self) -> Result<PlotPayload<SetVisModel>> {
        let config = self
            .applied
            .as_ref()
            .or(self.pending.as_ref())
            .ok_or_else(|| Error::InvalidConfig("no reweight dimensions selected".into()))?;
        let baseline = self.tree.baseline();
        let others: Vec<&Cohort> = self.tree.cohorts().iter().filter(|c| c.id() != baseline.id()).collect();
        if others.is_empty() {
            return Err(Error::InvalidInput("no cohorts besides the baseline".into()));
        }
        let tables: Vec<SubgroupTable> =
            others.iter().map(|c| partition_subgroups(&self.dataset, &baseline.members, &c.members, config)).collect::<Result<_>>()?;
        let dangers: Vec<std::result::Result<DangerScore, String>> =
            tables.iter().map(|t| assess_danger(t, self.params).map_err(|e| e.to_string())).collect();
        let entries: Vec<CohortSubgroups<'_>> = others
            .iter()
            .zip(&tables)
            .zip(&dangers)
            .map(|((c, t), d)| CohortSubgroups { cohort: c.id().to_string(), table: t, danger: d.as_ref().map_err(Clone::clone) })
            .collect();
        let model = set_vis(baseline.id(), &entries)?;
        Ok(self.plot(self.tree.focus_id().unwrap_or(baseline.id()).to_string(), model))
    }
}

#[cfg(test)]
mod tests;
