//! HTTP JSON service over one analysis session.
//!
//! Reads run against an immutable snapshot of the engine; a mutation clones
//! the snapshot, applies the change off the async runtime and swaps the
//! result in, so long recomputations never block readers. Only one mutation
//! runs at a time; a second concurrent one is refused with 409.

use std::path::PathBuf;
use std::sync::{Arc, RwLock};

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use rebalance_core::cohort::Constraint;
use rebalance_core::engine::{Engine, LayoutOverrides};
use rebalance_core::ingest::DatasetManifest;
use rebalance_core::reweight::ReweightConfig;
use rebalance_core::session::SessionState;
use rebalance_core::{Error, Execution};
use serde::{Deserialize, Serialize};
use tower_http::cors::CorsLayer;

/// Error response body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    pub status: u16,
    pub kind: String,
    pub message: String,
}

impl ApiError {
    fn conflict() -> Self {
        ApiError { status: 409, kind: "conflict".into(), message: "another mutation is in progress".into() }
    }

    fn internal(message: String) -> Self {
        ApiError { status: 500, kind: "internal".into(), message }
    }
}

/// HTTP status for an engine error.
pub fn status_for(e: &Error) -> StatusCode {
    match e {
        Error::UnknownDimension(_) | Error::UnknownCohort(_) | Error::UnknownDataset(_) => StatusCode::NOT_FOUND,
        Error::EmptyBaseline | Error::EmptyFocus | Error::NoFocus | Error::DangerUndefined(_) => StatusCode::UNPROCESSABLE_ENTITY,
        Error::Io { .. } => StatusCode::INTERNAL_SERVER_ERROR,
        _ => StatusCode::BAD_REQUEST,
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        ApiError { status: status_for(&e).as_u16(), kind: e.kind().into(), message: e.to_string() }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

pub struct AppState {
    snapshot: RwLock<Option<Arc<Engine>>>,
    writer: tokio::sync::Mutex<()>,
    exec: Execution,
    /// Base directory for relative manifest paths.
    base: PathBuf,
}

impl AppState {
    pub fn new(exec: Execution, base: PathBuf) -> Self {
        AppState { snapshot: RwLock::new(None), writer: tokio::sync::Mutex::new(()), exec, base }
    }

    pub fn with_engine(engine: Engine) -> Self {
        let exec = engine.execution();
        let state = AppState::new(exec, PathBuf::new());
        *state.snapshot.write().expect("snapshot lock") = Some(Arc::new(engine));
        state
    }

    /// The current snapshot.
    pub fn current(&self) -> Result<Arc<Engine>, ApiError> {
        self.snapshot.read().expect("snapshot lock").clone().ok_or_else(|| Error::UnknownDataset("no dataset loaded".into()).into())
    }

    async fn read<T, F>(&self, f: F) -> ApiResult<T>
    where
        T: Send + 'static,
        F: FnOnce(&Engine) -> rebalance_core::Result<T> + Send + 'static,
    {
        let engine = self.current()?;
        let out = tokio::task::spawn_blocking(move || f(&engine)).await.map_err(|e| ApiError::internal(e.to_string()))?;
        Ok(Json(out?))
    }

    async fn write<T, F>(&self, f: F) -> ApiResult<T>
    where
        T: Send + 'static,
        F: FnOnce(&mut Engine) -> rebalance_core::Result<T> + Send + 'static,
    {
        let _guard = self.writer.try_lock().map_err(|_| ApiError::conflict())?;
        let mut engine = (*self.current()?).clone();
        let (engine, out) = tokio::task::spawn_blocking(move || {
            let out = f(&mut engine);
            (engine, out)
        })
        .await
        .map_err(|e| ApiError::internal(e.to_string()))?;
        let out = out?;
        *self.snapshot.write().expect("snapshot lock") = Some(Arc::new(engine));
        Ok(Json(out))
    }

    async fn replace<T, F>(&self, f: F) -> ApiResult<T>
    where
        T: Send + 'static,
        F: FnOnce() -> rebalance_core::Result<(Engine, T)> + Send + 'static,
    {
        let _guard = self.writer.try_lock().map_err(|_| ApiError::conflict())?;
        let (engine, out) = tokio::task::spawn_blocking(f).await.map_err(|e| ApiError::internal(e.to_string()))??;
        *self.snapshot.write().expect("snapshot lock") = Some(Arc::new(engine));
        Ok(Json(out))
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/datasets", post(load_dataset))
        .route("/datasets/{id}/hierarchy", get(hierarchy))
        .route("/cohorts", post(derive_cohort).get(cohorts))
        .route("/session/baseline", put(set_baseline))
        .route("/session/focus", put(set_focus))
        .route("/session", get(get_session).put(put_session))
        .route("/dimensions/stats", get(stats))
        .route("/dimensions/{code}/distribution", get(distribution))
        .route("/reweight/config", put(assess))
        .route("/reweight/apply", post(apply))
        .route("/layout/icicle", get(icicle))
        .route("/layout/replace", get(replace_view))
        .route("/plots/scatter", get(scatter))
        .route("/plots/contour", get(contour))
        .route("/plots/vector", get(vector))
        .route("/plots/setvis", get(setvis))
        .layer(CorsLayer::permissive())
        .with_state(state)
}

type St = State<Arc<AppState>>;

async fn load_dataset(State(s): St, Json(manifest): Json<DatasetManifest>) -> ApiResult<rebalance_core::engine::DatasetPayload> {
    let (exec, base) = (s.exec, s.base.clone());
    s.replace(move || {
        let e = Engine::open(&manifest, &base)?.with_execution(exec);
        let info = e.dataset_info();
        Ok((e, info))
    })
    .await
}

async fn hierarchy(State(s): St, Path(id): Path<String>) -> ApiResult<rebalance_core::engine::HierarchyPayload> {
    s.read(move |e| {
        if e.dataset().id() != id {
            return Err(Error::UnknownDataset(id));
        }
        Ok(e.hierarchy())
    })
    .await
}

#[derive(Deserialize)]
struct DeriveBody {
    parent: String,
    constraint: Constraint,
}

async fn derive_cohort(State(s): St, Json(b): Json<DeriveBody>) -> ApiResult<rebalance_core::engine::DerivePayload> {
    s.write(move |e| e.derive_cohort(&b.parent, b.constraint)).await
}

async fn cohorts(State(s): St) -> ApiResult<rebalance_core::engine::CohortsPayload> {
    s.read(|e| e.cohorts()).await
}

#[derive(Deserialize)]
struct RoleBody {
    cohort_id: Option<String>,
}

async fn set_baseline(State(s): St, Json(b): Json<RoleBody>) -> ApiResult<rebalance_core::engine::CohortsPayload> {
    let id = b.cohort_id.ok_or_else(|| ApiError::from(Error::InvalidInput("cohort_id is required".into())))?;
    s.write(move |e| e.set_baseline(&id)).await
}

async fn set_focus(State(s): St, Json(b): Json<RoleBody>) -> ApiResult<rebalance_core::engine::CohortsPayload> {
    s.write(move |e| e.set_focus(b.cohort_id.as_deref())).await
}

async fn get_session(State(s): St) -> ApiResult<SessionState> {
    s.read(|e| Ok(e.session())).await
}

async fn put_session(State(s): St, Json(state): Json<SessionState>) -> ApiResult<SessionState> {
    s.write(move |e| e.put_session(state)).await
}

#[derive(Deserialize, Default)]
struct StatsQuery {
    cohort: Option<String>,
    #[serde(default)]
    weighted: bool,
}

async fn stats(State(s): St, Query(q): Query<StatsQuery>) -> ApiResult<rebalance_core::engine::StatsPayload> {
    s.read(move |e| e.stats(q.cohort.as_deref(), q.weighted)).await
}

#[derive(Deserialize, Default)]
struct CohortQuery {
    cohort: Option<String>,
}

async fn distribution(
    State(s): St,
    Path(code): Path<String>,
    Query(q): Query<CohortQuery>,
) -> ApiResult<rebalance_core::engine::PlotPayload<rebalance_core::plots::DistributionPlot>> {
    s.read(move |e| e.distribution(q.cohort.as_deref(), &code)).await
}

async fn assess(State(s): St, Json(cfg): Json<ReweightConfig>) -> ApiResult<rebalance_core::engine::AssessPayload> {
    s.write(move |e| e.assess(cfg)).await
}

async fn apply(State(s): St, body: Option<Json<ReweightConfig>>) -> ApiResult<rebalance_core::engine::ApplyPayload> {
    let cfg = body.map(|Json(c)| c);
    s.write(move |e| e.apply(cfg)).await
}

#[derive(Deserialize, Default)]
struct LayoutQuery {
    cohort: Option<String>,
    dim: Option<String>,
    t_s: Option<String>,
    pins: Option<String>,
    collapses: Option<String>,
    sort: Option<String>,
    color: Option<String>,
}

impl LayoutQuery {
    fn overrides(&self) -> rebalance_core::Result<LayoutOverrides> {
        LayoutOverrides::parse(
            self.t_s.as_deref(),
            self.pins.as_deref(),
            self.collapses.as_deref(),
            self.sort.as_deref(),
            self.color.as_deref(),
        )
    }
}

async fn icicle(State(s): St, Query(q): Query<LayoutQuery>) -> ApiResult<rebalance_core::engine::LayoutPayload> {
    s.read(move |e| e.layout(q.cohort.as_deref(), &q.overrides()?)).await
}

async fn replace_view(State(s): St, Query(q): Query<LayoutQuery>) -> ApiResult<rebalance_core::engine::LayoutPayload> {
    s.read(move |e| {
        let dim = q.dim.as_deref().ok_or_else(|| Error::InvalidInput("dim is required".into()))?;
        e.replace_view(q.cohort.as_deref(), dim, &q.overrides()?)
    })
    .await
}

#[derive(Deserialize, Default)]
struct PlotQuery {
    cohort: Option<String>,
    cap: Option<usize>,
    threshold: Option<f64>,
}

async fn scatter(
    State(s): St,
    Query(q): Query<PlotQuery>,
) -> ApiResult<rebalance_core::engine::PlotPayload<rebalance_core::plots::ScatterModel>> {
    s.read(move |e| e.scatter(q.cohort.as_deref(), q.cap)).await
}

async fn contour(
    State(s): St,
    Query(q): Query<PlotQuery>,
) -> ApiResult<rebalance_core::engine::PlotPayload<rebalance_core::plots::ContourModel>> {
    s.read(move |e| e.contour(q.cohort.as_deref())).await
}

async fn vector(
    State(s): St,
    Query(q): Query<PlotQuery>,
) -> ApiResult<rebalance_core::engine::PlotPayload<rebalance_core::plots::VectorModel>> {
    s.read(move |e| e.vector(q.cohort.as_deref(), q.threshold)).await
}

async fn setvis(State(s): St) -> ApiResult<rebalance_core::engine::PlotPayload<rebalance_core::plots::SetVisModel>> {
    s.read(|e| e.setvis()).await
}
