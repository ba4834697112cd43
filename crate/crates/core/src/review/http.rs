use std::net::SocketAddr;
use std::path::{Component, Path, PathBuf};
use std::sync::Arc;

use axum::extract::{Query, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode, Uri};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use super::service::{ReviewService, Submission};
use crate::corpus_io::Tag;
use crate::error::Error;
use crate::evaluation::AgreementReport;

#[derive(Clone)]
struct AppState {
    service: Arc<ReviewService>,
    ui_dir: Option<Arc<PathBuf>>,
}

#[derive(Serialize)]
struct ErrorBody {
    error: String,
}

fn error(status: StatusCode, err: impl ToString) -> Response {
    (
        status,
        Json(ErrorBody {
            error: err.to_string(),
        }),
    )
        .into_response()
}

fn review_error(err: Error) -> Response {
    match err {
        Error::Review(_) | Error::InvalidTags(_) | Error::Mismatch { .. } => {
            error(StatusCode::UNPROCESSABLE_ENTITY, err)
        }
        other => error(StatusCode::INTERNAL_SERVER_ERROR, other),
    }
}

#[derive(Deserialize)]
struct NextQuery {
    annotator: String,
}

#[derive(Deserialize)]
struct IaaQuery {
    a: String,
    b: String,
}

#[derive(Serialize)]
struct Cell {
    a: Tag,
    b: Tag,
    count: usize,
}

/// Wire form of [`AgreementReport`].
#[derive(Serialize)]
struct AgreementBody {
    level: &'static str,
    kappa: f64,
    observed_agreement: f64,
    expected_agreement: f64,
    tokens: usize,
    degenerate: bool,
    contingency: Vec<Cell>,
}

impl From<AgreementReport> for AgreementBody {
    fn from(r: AgreementReport) -> Self {
        Self {
            level: "token",
            kappa: r.kappa,
            observed_agreement: r.observed_agreement,
            expected_agreement: r.expected_agreement,
            tokens: r.tokens,
            degenerate: r.degenerate,
            contingency: r
                .contingency
                .into_iter()
                .map(|((a, b), count)| Cell { a, b, count })
                .collect(),
        }
    }
}

async fn next_task(State(state): State<AppState>, Query(q): Query<NextQuery>) -> Response {
    match state.service.next_task(&q.annotator) {
        Ok(Some(task)) => Json(task).into_response(),
        Ok(None) => StatusCode::NO_CONTENT.into_response(),
        Err(e) => error(StatusCode::NOT_FOUND, e),
    }
}

async fn submit(
    State(state): State<AppState>,
    body: Result<Json<Submission>, axum::extract::rejection::JsonRejection>,
) -> Response {
    let Json(submission) = match body {
        Ok(b) => b,
        Err(rejection) => return error(StatusCode::UNPROCESSABLE_ENTITY, rejection.body_text()),
    };
    let service = state.service.clone();
    match tokio::task::spawn_blocking(move || service.submit_verdict(submission)).await {
        Ok(Ok(record)) => (StatusCode::CREATED, Json(record)).into_response(),
        Ok(Err(e)) => review_error(e),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e),
    }
}

async fn iaa(State(state): State<AppState>, Query(q): Query<IaaQuery>) -> Response {
    match state.service.iaa_report(&q.a, &q.b) {
        Ok(report) => Json(AgreementBody::from(report)).into_response(),
        Err(e) => review_error(e),
    }
}

async fn export(State(state): State<AppState>) -> Response {
    match state.service.export_gold() {
        Ok(gold) => {
            let mut headers = HeaderMap::new();
            headers.insert(
                header::CONTENT_TYPE,
                HeaderValue::from_static("text/plain; charset=utf-8"),
            );
            headers.insert("x-sentences", HeaderValue::from(gold.sentences));
            headers.insert("x-conflicts", HeaderValue::from(gold.conflicts));
            let how = if gold.fallback_used {
                "first-annotator"
            } else {
                "adjudicator"
            };
            headers.insert("x-adjudication", HeaderValue::from_static(how));
            (headers, gold.conll).into_response()
        }
        Err(e) => review_error(e),
    }
}

async fn progress(State(state): State<AppState>) -> Response {
    Json(state.service.progress()).into_response()
}

fn content_type(path: &Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()) {
        Some("html") => "text/html; charset=utf-8",
        Some("js") | Some("mjs") => "text/javascript; charset=utf-8",
        Some("css") => "text/css; charset=utf-8",
        Some("json") => "application/json",
        Some("svg") => "image/svg+xml",
        _ => "application/octet-stream",
    }
}

async fn static_file(State(state): State<AppState>, uri: Uri) -> Response {
    let Some(root) = state.ui_dir.as_ref() else {
        return StatusCode::NOT_FOUND.into_response();
    };
    let rel = uri.path().trim_start_matches('/');
    let rel = if rel.is_empty() { "index.html" } else { rel };
    let rel = Path::new(rel);
    if rel.components().any(|c| !matches!(c, Component::Normal(_))) {
        return StatusCode::NOT_FOUND.into_response();
    }
    let path = root.join(rel);
    match tokio::fs::read(&path).await {
        Ok(bytes) => ([(header::CONTENT_TYPE, content_type(&path))], bytes).into_response(),
        Err(_) => StatusCode::NOT_FOUND.into_response(),
    }
}

/// The review API. Static files under `ui_dir`, when given, are served for
/// every other path.
pub fn router(service: Arc<ReviewService>, ui_dir: Option<PathBuf>) -> Router {
    let state = AppState {
        service,
        ui_dir: ui_dir.map(Arc::new),
    };
    Router::new()
        .route("/api/tasks/next", get(next_task))
        .route("/api/verdicts", post(submit))
        .route("/api/iaa", get(iaa))
        .route("/api/export", get(export))
        .route("/api/progress", get(progress))
        .fallback(static_file)
        .with_state(state)
}

/// Binds `addr` and serves until the process ends. `on_bound` receives the
/// actual address, which matters when binding port 0.
pub async fn serve(
    addr: SocketAddr,
    service: Arc<ReviewService>,
    ui_dir: Option<PathBuf>,
    on_bound: impl FnOnce(SocketAddr),
) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    on_bound(listener.local_addr()?);
    axum::serve(listener, router(service, ui_dir)).await
}
