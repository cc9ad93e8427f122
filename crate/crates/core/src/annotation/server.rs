use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;
use tower_http::services::ServeDir;

use super::store::{AnnotationService, ApiError, JudgmentInput};

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match &self {
            ApiError::NotFound(_) => StatusCode::NOT_FOUND,
            ApiError::Rejected(_) => StatusCode::CONFLICT,
            ApiError::Invalid(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ApiError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (status, Json(json!({ "error": self.to_string() }))).into_response()
    }
}

#[derive(Deserialize)]
struct NewSession {
    annotator_id: String,
}

type Svc = State<Arc<AnnotationService>>;

async fn create_session(State(svc): Svc, Json(body): Json<NewSession>) -> Result<Response, ApiError> {
    let info = svc.create_session(&body.annotator_id)?;
    Ok((StatusCode::CREATED, Json(info)).into_response())
}

async fn session(State(svc): Svc, Path(id): Path<String>) -> Result<Response, ApiError> {
    Ok(Json(svc.session(&id)?).into_response())
}

async fn next_item(State(svc): Svc, Path(id): Path<String>) -> Result<Response, ApiError> {
    Ok(Json(svc.next_item(&id)?).into_response())
}

async fn submit(State(svc): Svc, Path(id): Path<String>, Json(body): Json<JudgmentInput>) -> Result<Response, ApiError> {
    Ok(Json(svc.submit(&id, body)?).into_response())
}

async fn export(State(svc): Svc) -> Result<Response, ApiError> {
    let mut body = String::new();
    for j in svc.export() {
        body.push_str(&serde_json::to_string(&j).map_err(crate::Error::from)?);
        body.push('\n');
    }
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], body).into_response())
}

async fn agreement(State(svc): Svc) -> Json<super::store::AgreementReport> {
    Json(svc.agreement())
}

/// The annotation API, plus static UI assets from `ui_dir` when given.
pub fn router(service: Arc<AnnotationService>, ui_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(session))
        .route("/sessions/{id}/next", get(next_item))
        .route("/sessions/{id}/judgments", post(submit))
        .route("/export", get(export))
        .route("/agreement", get(agreement))
        .with_state(service);
    match ui_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

/// Serve until the process is stopped.
pub async fn serve(listener: tokio::net::TcpListener, app: Router) -> std::io::Result<()> {
    axum::serve(listener, app).await
}

/// Bind `addr` and serve on a background runtime. Returns the bound address.
pub fn spawn(addr: SocketAddr, app: Router) -> std::io::Result<SocketAddr> {
    let listener = std::net::TcpListener::bind(addr)?;
    listener.set_nonblocking(true)?;
    let local = listener.local_addr()?;
    std::thread::spawn(move || {
        let rt = tokio::runtime::Builder::new_multi_thread()
            .enable_all()
            .build()
            .expect("tokio runtime");
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::from_std(listener).expect("listener");
            if let Err(e) = serve(listener, app).await {
                log::error!("annotation server stopped: {e}");
            }
        });
    });
    Ok(local)
}
