//! HTTP API over [`Workspace`]. Requests for one project are serialized; the blocking
//! work runs on the blocking thread pool.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use crate::error::ServiceError;
use crate::ops::{AddCorpus, CreateProject, DiscrepancyReview, SetAlignment, TopicReview, Workspace};

#[derive(Clone)]
pub struct AppState {
    workspace: Arc<Workspace>,
    locks: Arc<Mutex<HashMap<String, Arc<tokio::sync::Mutex<()>>>>>,
}

impl AppState {
    pub fn new(workspace: Workspace) -> Self {
        Self {
            workspace: Arc::new(workspace),
            locks: Arc::default(),
        }
    }

    fn project_lock(&self, id: &str) -> Arc<tokio::sync::Mutex<()>> {
        self.locks.lock().unwrap().entry(id.to_string()).or_default().clone()
    }

    /// Runs `f` on the blocking pool while holding the project's request lock.
    async fn with_project<T, F>(&self, id: &str, f: F) -> Result<T, ApiError>
    where
        T: Send + 'static,
        F: FnOnce(&Workspace) -> crate::error::Result<T> + Send + 'static,
    {
        let lock = self.project_lock(id);
        let _guard = lock.lock().await;
        let ws = self.workspace.clone();
        tokio::task::spawn_blocking(move || f(&ws))
            .await
            .map_err(|e| ApiError(ServiceError::Invalid(format!("worker panicked: {e}"))))?
            .map_err(ApiError)
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
}

pub struct ApiError(pub ServiceError);

/// Machine-readable error kind and HTTP status.
pub fn classify(e: &ServiceError) -> (&'static str, StatusCode) {
    use ServiceError::*;
    match e {
        PredecessorIncomplete { .. } => ("predecessor_incomplete", StatusCode::CONFLICT),
        StageFailure { .. } => ("stage_failure", StatusCode::UNPROCESSABLE_ENTITY),
        NotReady(_) => ("not_ready", StatusCode::CONFLICT),
        UnknownStage(_) => ("unknown_stage", StatusCode::NOT_FOUND),
        UnknownTopic(_) => ("unknown_topic", StatusCode::NOT_FOUND),
        UnknownRecord(_) => ("unknown_record", StatusCode::NOT_FOUND),
        AlreadyReviewed(_) => ("already_reviewed", StatusCode::CONFLICT),
        NothingToExport(_) => ("nothing_to_export", StatusCode::CONFLICT),
        UnknownProject(_) => ("unknown_project", StatusCode::NOT_FOUND),
        ProjectExists(_) => ("project_exists", StatusCode::CONFLICT),
        Locked { .. } => ("locked", StatusCode::LOCKED),
        Invalid(_) | Corpus(_) => ("invalid", StatusCode::BAD_REQUEST),
        Config(_) => ("config", StatusCode::BAD_REQUEST),
        Corrupt { .. } => ("corrupt", StatusCode::INTERNAL_SERVER_ERROR),
        Io(_) => ("io", StatusCode::INTERNAL_SERVER_ERROR),
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (kind, status) = classify(&self.0);
        let body = ErrorBody {
            error: kind.to_string(),
            message: self.0.to_string(),
        };
        (status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

#[derive(Debug, Default, Deserialize)]
struct ForceQuery {
    #[serde(default)]
    force: bool,
}

#[derive(Debug, Default, Deserialize)]
struct StateQuery {
    state: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
struct ExportQuery {
    #[serde(default)]
    include_rejected: bool,
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/projects", post(create_project))
        .route("/projects/{id}/corpora", post(add_corpus))
        .route("/projects/{id}/alignment", post(set_alignment))
        .route("/projects/{id}/run", post(run_all))
        .route("/projects/{id}/stages/{name}/run", post(run_stage))
        .route("/projects/{id}/status", get(status))
        .route("/projects/{id}/topics", get(topics))
        .route("/projects/{id}/topics/{k}/{action}", post(review_topic))
        .route("/projects/{id}/discrepancies", get(discrepancies))
        .route("/projects/{id}/discrepancies/{rid}/review", post(review_discrepancy))
        .route("/projects/{id}/export", get(export))
        .with_state(state)
}

async fn create_project(State(s): State<AppState>, Json(req): Json<CreateProject>) -> ApiResult<impl IntoResponse> {
    let id = req.id.clone();
    let out = s.with_project(&id, move |ws| ws.create_project(req)).await?;
    Ok((StatusCode::CREATED, Json(out)))
}

async fn add_corpus(
    State(s): State<AppState>,
    Path(id): Path<String>,
    Json(req): Json<AddCorpus>,
) -> ApiResult<impl IntoResponse> {
    let pid = id.clone();
    let out = s.with_project(&id, move |ws| ws.add_corpus(&pid, req)).await?;
    Ok((StatusCode::CREATED, Json(out)))
}

async fn set_alignment(
    State(s): State<AppState>,
    Path(id): Path<String>,
    Json(req): Json<SetAlignment>,
) -> ApiResult<impl IntoResponse> {
    let pid = id.clone();
    Ok(Json(s.with_project(&id, move |ws| ws.set_alignment(&pid, req)).await?))
}

async fn run_all(
    State(s): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<ForceQuery>,
) -> ApiResult<impl IntoResponse> {
    let pid = id.clone();
    Ok(Json(s.with_project(&id, move |ws| ws.run_all(&pid, q.force)).await?))
}

async fn run_stage(
    State(s): State<AppState>,
    Path((id, name)): Path<(String, String)>,
    Query(q): Query<ForceQuery>,
) -> ApiResult<impl IntoResponse> {
    let pid = id.clone();
    Ok(Json(
        s.with_project(&id, move |ws| ws.run_stage(&pid, &name, q.force))
            .await?,
    ))
}

async fn status(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    let pid = id.clone();
    Ok(Json(s.with_project(&id, move |ws| ws.status(&pid)).await?))
}

async fn topics(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    let pid = id.clone();
    Ok(Json(s.with_project(&id, move |ws| ws.topics(&pid)).await?))
}

async fn review_topic(
    State(s): State<AppState>,
    Path((id, k, action)): Path<(String, usize, String)>,
    body: Option<Json<TopicReview>>,
) -> ApiResult<impl IntoResponse> {
    let pid = id.clone();
    let req = body.map(|Json(b)| b).unwrap_or_default();
    Ok(Json(
        s.with_project(&id, move |ws| ws.review_topic(&pid, k, &action, req))
            .await?,
    ))
}

async fn discrepancies(
    State(s): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<StateQuery>,
) -> ApiResult<impl IntoResponse> {
    let pid = id.clone();
    Ok(Json(
        s.with_project(&id, move |ws| ws.discrepancies(&pid, q.state.as_deref()))
            .await?,
    ))
}

async fn review_discrepancy(
    State(s): State<AppState>,
    Path((id, rid)): Path<(String, String)>,
    Json(req): Json<DiscrepancyReview>,
) -> ApiResult<impl IntoResponse> {
    let pid = id.clone();
    Ok(Json(
        s.with_project(&id, move |ws| ws.review_discrepancy(&pid, &rid, req))
            .await?,
    ))
}

async fn export(
    State(s): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<ExportQuery>,
) -> ApiResult<impl IntoResponse> {
    let pid = id.clone();
    let body = s
        .with_project(&id, move |ws| ws.export(&pid, q.include_rejected))
        .await?;
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], body))
}

/// Serves the API on `addr` until the process is stopped.
pub async fn serve(workspace: Workspace, addr: std::net::SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(%addr, "listening");
    axum::serve(listener, router(AppState::new(workspace))).await
}
