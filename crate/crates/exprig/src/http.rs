use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;
use tokio::net::TcpListener;
use tower_http::services::ServeDir;

use crate::session::{parse_submission, Experiment};
use crate::ExpError;

impl ExpError {
    pub fn status(&self) -> StatusCode {
        match self {
            ExpError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ExpError::Validation { .. } => StatusCode::UNPROCESSABLE_ENTITY,
            ExpError::UnknownSession(_) => StatusCode::NOT_FOUND,
            ExpError::Conflict(_) | ExpError::OutOfOrder { .. } | ExpError::AlreadyRecorded(_) => {
                StatusCode::CONFLICT
            }
            ExpError::Catalog(_) | ExpError::Log(_) | ExpError::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            ExpError::BadRequest(_) => "bad_request",
            ExpError::Validation { .. } => "validation",
            ExpError::UnknownSession(_) => "unknown_session",
            ExpError::Conflict(_) => "conflict",
            ExpError::OutOfOrder { .. } => "out_of_order",
            ExpError::AlreadyRecorded(_) => "already_recorded",
            ExpError::Catalog(_) => "catalog",
            ExpError::Log(_) => "log",
            ExpError::Io(_) => "io",
        }
    }
}

impl IntoResponse for ExpError {
    fn into_response(self) -> Response {
        let mut body = json!({ "error": self.kind(), "message": self.to_string() });
        if let ExpError::Validation { sum } = self {
            body["sum"] = json!(sum);
        }
        (self.status(), Json(body)).into_response()
    }
}

/// URL prefix under which stimulus images are served.
pub const STIMULUS_PREFIX: &str = "/stimuli";

#[derive(Deserialize)]
struct StartRequest {
    observer: String,
    session: u8,
    seed: u64,
}

async fn start(State(exp): State<Arc<Experiment>>, body: Bytes) -> Result<Response, ExpError> {
    let req: StartRequest = serde_json::from_slice(&body).map_err(|e| ExpError::BadRequest(e.to_string()))?;
    let s = exp.start_session(&req.observer, req.session, req.seed)?;
    let body = json!({
        "id": s.id,
        "observer": s.observer,
        "session": s.session,
        "trials": s.order.len(),
        "cursor": s.cursor,
        "completed": s.completed(),
    });
    Ok((StatusCode::CREATED, Json(body)).into_response())
}

async fn trial(State(exp): State<Arc<Experiment>>, Path(id): Path<u64>) -> Result<Response, ExpError> {
    let body = match exp.next_trial(id)? {
        Some(t) => json!({
            "complete": false,
            "index": t.index,
            "total": t.total,
            "stimulus_id": t.stimulus_id,
            "image_url": format!("{STIMULUS_PREFIX}/{}", t.image),
        }),
        None => json!({ "complete": true }),
    };
    Ok(Json(body).into_response())
}

async fn rate(State(exp): State<Arc<Experiment>>, Path(id): Path<u64>, body: Bytes) -> Result<Response, ExpError> {
    let sub = parse_submission(&body)?;
    let s = exp.submit(id, &sub)?;
    Ok(Json(json!({ "accepted": true, "cursor": s.cursor, "complete": s.completed() })).into_response())
}

async fn export(State(exp): State<Arc<Experiment>>) -> Result<Response, ExpError> {
    let csv = exp.export_csv()?;
    Ok(([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], csv).into_response())
}

pub fn router(exp: Arc<Experiment>, stimuli_dir: impl Into<PathBuf>) -> Router {
    Router::new()
        .route("/sessions", post(start))
        .route("/sessions/{id}/trial", get(trial))
        .route("/sessions/{id}/ratings", post(rate))
        .route("/export.csv", get(export))
        .nest_service(STIMULUS_PREFIX, ServeDir::new(stimuli_dir.into()))
        .with_state(exp)
}

/// Serve on an already bound listener until the process receives Ctrl-C.
pub async fn serve_listener(listener: TcpListener, exp: Arc<Experiment>, stimuli_dir: PathBuf) -> std::io::Result<()> {
    axum::serve(listener, router(exp, stimuli_dir))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

pub async fn serve(exp: Arc<Experiment>, stimuli_dir: PathBuf, addr: SocketAddr) -> std::io::Result<()> {
    serve_listener(TcpListener::bind(addr).await?, exp, stimuli_dir).await
}
