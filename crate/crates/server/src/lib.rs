//! JSON HTTP API over precomputed per-layer statistics.
//!
//! Routes:
//!
//! * `GET  /layers`
//! * `GET  /layers/{n}/stats?top=N`
//! * `POST /layers/{n}/brush/membership`  `{cluster, lo, hi}`
//! * `POST /layers/{n}/brush/span`        `{cluster, lo, hi}`
//! * `POST /layers/{n}/sentences`         `{left, right, spacing, brush?, page, page_size}`
//!
//! Every body carries `schema_version`. Field names are fixed by
//! [`API_SCHEMA`]. Brush state lives in the client; the server only reads.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};

use axum::extract::rejection::{JsonRejection, PathRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;

use embprobe_core::query::{
    Brush, CellSelection, MembershipBrush, QueryEngine, QueryError, SentenceHit, SpanBrush,
    DEFAULT_PAGE_SIZE,
};
use embprobe_core::statistics::{SparseTensor, SCHEMA_VERSION};
use embprobe_core::LayerStats;

/// JSON Schema for every request and response body.
pub const API_SCHEMA: &str = include_str!("../../../schema/api.schema.json");

/// [`API_SCHEMA`] rooted at one of its `$defs`, e.g. `"StatsBundle"`, for
/// validating a single body.
pub fn schema_for(def: &str) -> serde_json::Value {
    let mut schema: serde_json::Value = serde_json::from_str(API_SCHEMA).expect("schema file is JSON");
    schema["$ref"] = serde_json::Value::String(format!("#/$defs/{def}"));
    schema
}

/// Everything the server answers from. Immutable once built.
#[derive(Debug, Default)]
pub struct Snapshot {
    pub model: String,
    pub dim: usize,
    /// Layers the model has, loaded or not.
    pub num_layers: u32,
    pub layers: BTreeMap<u32, Arc<LayerStats>>,
}

/// Shared handle. Readers clone the current snapshot; [`AppState::replace`]
/// swaps in a new one without disturbing requests in flight.
#[derive(Debug, Clone, Default)]
pub struct AppState {
    current: Arc<RwLock<Arc<Snapshot>>>,
}

impl AppState {
    pub fn new(snapshot: Snapshot) -> Self {
        Self {
            current: Arc::new(RwLock::new(Arc::new(snapshot))),
        }
    }

    pub fn snapshot(&self) -> Arc<Snapshot> {
        self.current.read().unwrap_or_else(|e| e.into_inner()).clone()
    }

    pub fn replace(&self, snapshot: Snapshot) {
        *self.current.write().unwrap_or_else(|e| e.into_inner()) = Arc::new(snapshot);
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct LayerInfo {
    pub layer: u32,
    pub k: usize,
    pub sentences: usize,
    pub tokens: usize,
    pub word_types: usize,
    pub max_span: usize,
    pub max_spacing: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct LayersResponse {
    pub schema_version: u32,
    pub model: String,
    pub dim: usize,
    pub num_layers: u32,
    pub layers: Vec<LayerInfo>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MembershipBrushResponse {
    pub schema_version: u32,
    pub layer: u32,
    pub brush: MembershipBrush,
    pub words: Vec<String>,
    /// Indexed by cluster id.
    pub histograms: Vec<Vec<u32>>,
    pub cooccurrence: SparseTensor,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SpanBrushResponse {
    pub schema_version: u32,
    pub layer: u32,
    pub brush: SpanBrush,
    /// Only entries whose left cluster is the brushed one.
    pub cooccurrence: SparseTensor,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SentencesRequest {
    pub left: usize,
    pub right: usize,
    pub spacing: usize,
    #[serde(default)]
    pub brush: Option<Brush>,
    #[serde(default)]
    pub page: usize,
    #[serde(default = "default_page_size")]
    pub page_size: usize,
}

fn default_page_size() -> usize {
    DEFAULT_PAGE_SIZE
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SentencesResponse {
    pub schema_version: u32,
    pub layer: u32,
    pub total: usize,
    pub page: usize,
    pub page_size: usize,
    pub hits: Vec<SentenceHit>,
}

#[derive(Debug, Deserialize)]
pub struct StatsParams {
    pub top: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorResponse {
    pub schema_version: u32,
    pub error: ErrorBody,
}

#[derive(Debug)]
pub enum ApiError {
    UnknownLayer(u32),
    Query(QueryError),
    BadRequest(String),
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, code, message) = match self {
            ApiError::UnknownLayer(n) => (
                StatusCode::NOT_FOUND,
                "unknown_layer",
                format!("layer {n} is not loaded"),
            ),
            ApiError::Query(e @ QueryError::UnknownCluster { .. }) => {
                (StatusCode::BAD_REQUEST, "unknown_cluster", e.to_string())
            }
            ApiError::Query(e) => (StatusCode::BAD_REQUEST, "invalid_query", e.to_string()),
            ApiError::BadRequest(m) => (StatusCode::BAD_REQUEST, "bad_request", m),
        };
        let body = ErrorResponse {
            schema_version: SCHEMA_VERSION,
            error: ErrorBody {
                code: code.to_string(),
                message,
            },
        };
        (status, Json(body)).into_response()
    }
}

impl From<QueryError> for ApiError {
    fn from(e: QueryError) -> Self {
        ApiError::Query(e)
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError::BadRequest(e.body_text())
    }
}

impl From<PathRejection> for ApiError {
    fn from(e: PathRejection) -> Self {
        ApiError::BadRequest(e.body_text())
    }
}

impl From<QueryRejection> for ApiError {
    fn from(e: QueryRejection) -> Self {
        ApiError::BadRequest(e.body_text())
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

fn layer_stats(state: &AppState, n: u32) -> Result<Arc<LayerStats>, ApiError> {
    state
        .snapshot()
        .layers
        .get(&n)
        .cloned()
        .ok_or(ApiError::UnknownLayer(n))
}

async fn list_layers(State(state): State<AppState>) -> Json<LayersResponse> {
    let snap = state.snapshot();
    let layers = snap
        .layers
        .values()
        .map(|s| LayerInfo {
            layer: s.layer,
            k: s.k(),
            sentences: s.corpus.sentences().len(),
            tokens: s.corpus.num_tokens(),
            word_types: s.corpus.vocab().len(),
            max_span: s.config.max_span,
            max_spacing: s.config.max_spacing,
        })
        .collect();
    Json(LayersResponse {
        schema_version: SCHEMA_VERSION,
        model: snap.model.clone(),
        dim: snap.dim,
        num_layers: snap.num_layers,
        layers,
    })
}

async fn get_stats(
    State(state): State<AppState>,
    path: Result<Path<u32>, PathRejection>,
    params: Result<Query<StatsParams>, QueryRejection>,
) -> Result<Response, ApiError> {
    let Path(n) = path?;
    let Query(params) = params?;
    let stats = layer_stats(&state, n)?;
    let top = params.top.unwrap_or(stats.k());
    Ok(Json(stats.bundle(top)).into_response())
}

async fn brush_membership(
    State(state): State<AppState>,
    path: Result<Path<u32>, PathRejection>,
    body: Result<Json<MembershipBrush>, JsonRejection>,
) -> ApiResult<MembershipBrushResponse> {
    let Path(n) = path?;
    let Json(brush) = body?;
    let stats = layer_stats(&state, n)?;
    let overlay = QueryEngine::new(&stats).apply_membership_brush(brush)?;
    Ok(Json(MembershipBrushResponse {
        schema_version: SCHEMA_VERSION,
        layer: n,
        brush: overlay.brush,
        words: overlay.words,
        histograms: overlay.histograms,
        cooccurrence: SparseTensor::from_dense(&overlay.cooccurrence, |_| true),
    }))
}

async fn brush_span(
    State(state): State<AppState>,
    path: Result<Path<u32>, PathRejection>,
    body: Result<Json<SpanBrush>, JsonRejection>,
) -> ApiResult<SpanBrushResponse> {
    let Path(n) = path?;
    let Json(brush) = body?;
    let stats = layer_stats(&state, n)?;
    let overlay = QueryEngine::new(&stats).apply_span_brush(brush)?;
    let w = overlay.max_spacing + 1;
    let entries = overlay
        .row
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(i, &c)| [brush.cluster as u64, (i / w) as u64, (i % w) as u64, c])
        .collect();
    Ok(Json(SpanBrushResponse {
        schema_version: SCHEMA_VERSION,
        layer: n,
        brush,
        cooccurrence: SparseTensor {
            max_spacing: overlay.max_spacing,
            entries,
        },
    }))
}

async fn sentences(
    State(state): State<AppState>,
    path: Result<Path<u32>, PathRejection>,
    body: Result<Json<SentencesRequest>, JsonRejection>,
) -> ApiResult<SentencesResponse> {
    let Path(n) = path?;
    let Json(req) = body?;
    let stats = layer_stats(&state, n)?;
    let sel = CellSelection {
        left: req.left,
        right: req.right,
        spacing: req.spacing,
        brush: req.brush,
    };
    let page = QueryEngine::new(&stats).select_cell(&sel, req.page, req.page_size)?;
    Ok(Json(SentencesResponse {
        schema_version: SCHEMA_VERSION,
        layer: n,
        total: page.total,
        page: page.page,
        page_size: page.page_size,
        hits: page.hits,
    }))
}

/// API routes. With `ui_dir`, static files from it are served for every
/// other path.
pub fn router(state: AppState, ui_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/layers", get(list_layers))
        .route("/layers/{n}/stats", get(get_stats))
        .route("/layers/{n}/brush/membership", post(brush_membership))
        .route("/layers/{n}/brush/span", post(brush_span))
        .route("/layers/{n}/sentences", post(sentences))
        .with_state(state);
    match ui_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

pub async fn serve(
    listener: tokio::net::TcpListener,
    state: AppState,
    ui_dir: Option<PathBuf>,
) -> std::io::Result<()> {
    if let Ok(addr) = listener.local_addr() {
        tracing::info!(%addr, "serving");
    }
    axum::serve(listener, router(state, ui_dir)).await
}
