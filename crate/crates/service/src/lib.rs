//! HTTP/JSON front end for a loaded model.
//!
//! | method | path           | body                                  |
//! |--------|----------------|---------------------------------------|
//! | POST   | `/v1/classify` | `{"text": "..."}` -> [`ClassifyResponse`] |
//! | POST   | `/v1/feedback` | `{"query_id": "...", "chosen_class": "..."}` -> 204 |
//! | GET    | `/v1/model`    | model constants                       |
//! | GET    | `/healthz`     | `ok`                                  |
//!
//! There is no authentication; the service is meant for a trusted network.

mod cache;
mod feedback;

use std::sync::{Arc, Mutex, OnceLock};

use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use ina_core::{classify, Decision, InaModel, FORMAT_TAG};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::net::TcpListener;
use tower_http::cors::CorsLayer;

pub use cache::{CandidateCache, Offer, DEFAULT_CACHE_CAPACITY};
pub use feedback::{FeedbackLog, FeedbackRecord};

pub struct AppState {
    model: OnceLock<Arc<InaModel>>,
    cache: Mutex<CandidateCache>,
    feedback: FeedbackLog,
}

impl AppState {
    /// State with no model yet; model-dependent endpoints answer 503 until
    /// [`AppState::install_model`] is called.
    pub fn empty(feedback: FeedbackLog) -> Self {
        AppState {
            model: OnceLock::new(),
            cache: Mutex::new(CandidateCache::new(DEFAULT_CACHE_CAPACITY)),
            feedback,
        }
    }

    pub fn new(model: InaModel, feedback: FeedbackLog) -> Self {
        let state = AppState::empty(feedback);
        state.install_model(model);
        state
    }

    /// Returns false if a model was already installed.
    pub fn install_model(&self, model: InaModel) -> bool {
        self.model.set(Arc::new(model)).is_ok()
    }

    pub fn with_cache_capacity(mut self, capacity: usize) -> Self {
        self.cache = Mutex::new(CandidateCache::new(capacity));
        self
    }

    fn model(&self) -> Result<&Arc<InaModel>, ApiError> {
        self.model.get().ok_or(ApiError::ModelNotLoaded)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateView {
    pub class: String,
    pub confidence: f64,
    pub example_query: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyResponse {
    pub status: String,
    pub class: Option<String>,
    pub confidence: f64,
    pub candidates: Vec<CandidateView>,
    pub unknown_count: usize,
    pub query_id: String,
}

#[derive(Deserialize)]
struct ClassifyRequest {
    text: String,
}

#[derive(Deserialize)]
struct FeedbackRequest {
    query_id: String,
    chosen_class: String,
}

#[derive(Debug)]
enum ApiError {
    BadRequest(String),
    ModelNotLoaded,
    UnknownQuery,
    NotOffered,
    Internal(String),
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, message) = match self {
            ApiError::BadRequest(m) => (StatusCode::BAD_REQUEST, m),
            ApiError::ModelNotLoaded => {
                (StatusCode::SERVICE_UNAVAILABLE, "model not loaded".into())
            }
            ApiError::UnknownQuery => (StatusCode::NOT_FOUND, "unknown or expired query_id".into()),
            ApiError::NotOffered => (
                StatusCode::UNPROCESSABLE_ENTITY,
                "chosen_class was not among the offered candidates".into(),
            ),
            ApiError::Internal(m) => (StatusCode::INTERNAL_SERVER_ERROR, m),
        };
        (status, Json(json!({ "error": message }))).into_response()
    }
}

fn parse_body<T: for<'de> Deserialize<'de>>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::BadRequest(e.to_string()))
}

/// Maps a decision to the wire response. Answered and rejected responses
/// carry no candidates; ambiguous ones carry two or more.
pub fn response_for(
    decision: &Decision,
    unknown_count: usize,
    query_id: String,
) -> ClassifyResponse {
    let (class, candidates) = match decision {
        Decision::Answered { class, .. } => (Some(class.clone()), Vec::new()),
        Decision::Ambiguous { candidates } => (
            None,
            candidates
                .iter()
                .map(|c| CandidateView {
                    class: c.class.clone(),
                    confidence: c.confidence,
                    example_query: c.representative.clone(),
                })
                .collect(),
        ),
        Decision::Rejected { .. } => (None, Vec::new()),
    };
    ClassifyResponse {
        status: decision.status().to_string(),
        class,
        confidence: decision.confidence(),
        candidates,
        unknown_count,
        query_id,
    }
}

async fn handle_classify(
    State(state): State<Arc<AppState>>,
    body: Bytes,
) -> Result<Json<ClassifyResponse>, ApiError> {
    let request: ClassifyRequest = parse_body(&body)?;
    let model = state.model()?;
    let result = classify(&request.text, model).map_err(|e| ApiError::Internal(e.to_string()))?;

    let query_id = uuid::Uuid::new_v4().to_string();
    let offered: Vec<String> = match &result.decision {
        Decision::Answered { class, .. } => vec![class.clone()],
        Decision::Ambiguous { candidates } => candidates.iter().map(|c| c.class.clone()).collect(),
        Decision::Rejected { .. } => Vec::new(),
    };
    state
        .cache
        .lock()
        .unwrap_or_else(|e| e.into_inner())
        .insert(
            query_id.clone(),
            Offer {
                query: request.text,
                candidates: offered,
            },
        );
    Ok(Json(response_for(
        &result.decision,
        result.analysis.unknown_count,
        query_id,
    )))
}

async fn handle_feedback(
    State(state): State<Arc<AppState>>,
    body: Bytes,
) -> Result<StatusCode, ApiError> {
    let request: FeedbackRequest = parse_body(&body)?;
    state.model()?;
    let offer = state
        .cache
        .lock()
        .unwrap_or_else(|e| e.into_inner())
        .get(&request.query_id)
        .cloned()
        .ok_or(ApiError::UnknownQuery)?;
    if !offer.candidates.contains(&request.chosen_class) {
        return Err(ApiError::NotOffered);
    }
    let record = FeedbackRecord::now(
        Some(request.query_id),
        offer.query,
        offer.candidates,
        request.chosen_class,
    );
    let state = state.clone();
    tokio::task::spawn_blocking(move || state.feedback.append(&record))
        .await
        .map_err(|e| ApiError::Internal(e.to_string()))?
        .map_err(|e| ApiError::Internal(e.to_string()))?;
    Ok(StatusCode::NO_CONTENT)
}

async fn handle_model_info(
    State(state): State<Arc<AppState>>,
) -> Result<Json<serde_json::Value>, ApiError> {
    let model = state.model()?;
    let config = model.config();
    Ok(Json(json!({
        "classes": model.classes().len(),
        "vocabulary": model.vocabulary().len(),
        "alpha": config.alpha_f,
        "threshold": config.threshold,
        "window": config.window,
        "format": FORMAT_TAG,
    })))
}

async fn healthz() -> &'static str {
    "ok"
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/v1/classify", post(handle_classify))
        .route("/v1/feedback", post(handle_feedback))
        .route("/v1/model", get(handle_model_info))
        .route("/healthz", get(healthz))
        .layer(CorsLayer::permissive())
        .with_state(state)
}

pub async fn serve(listener: TcpListener, state: Arc<AppState>) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}
