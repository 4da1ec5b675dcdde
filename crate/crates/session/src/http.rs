//! The HTTP layer: JSON in, JSON out, errors as `{"error", "clause"}`.

use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::Value;

use crate::store::{ApiError, CreateRequest, MoveRequest, SessionStore, StateQuery};

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match self {
            ApiError::UnknownSession(_) | ApiError::UnknownVersion(_) => StatusCode::NOT_FOUND,
            ApiError::Conflict { .. } => StatusCode::CONFLICT,
            ApiError::Rejected { .. } => StatusCode::UNPROCESSABLE_ENTITY,
            ApiError::BadRequest(_) | ApiError::Config(_) | ApiError::CapOverflow(_) => StatusCode::BAD_REQUEST,
        };
        (status, Json(self.body())).into_response()
    }
}

type Reply = Result<Json<Value>, ApiError>;

fn body<T>(b: Result<Json<T>, JsonRejection>) -> Result<T, ApiError> {
    b.map(|Json(t)| t).map_err(|e| ApiError::BadRequest(e.body_text()))
}

#[derive(Debug, Deserialize)]
struct VersionBody {
    version: u64,
}

async fn presets(State(s): State<Arc<SessionStore>>) -> Reply {
    s.presets().map(Json)
}

async fn create(State(s): State<Arc<SessionStore>>, b: Result<Json<CreateRequest>, JsonRejection>) -> Reply {
    let req = body(b)?;
    // building a preset is CPU work
    tokio::task::spawn_blocking(move || s.create(&req))
        .await
        .map_err(|e| ApiError::BadRequest(e.to_string()))?
        .map(Json)
}

async fn state(State(s): State<Arc<SessionStore>>, Path(id): Path<String>, Query(q): Query<StateQuery>) -> Reply {
    s.state(&id, &q).map(Json)
}

async fn ais_move(
    State(s): State<Arc<SessionStore>>,
    Path(id): Path<String>,
    b: Result<Json<MoveRequest>, JsonRejection>,
) -> Reply {
    let req = body(b)?;
    tokio::task::spawn_blocking(move || s.post_move(&id, &req))
        .await
        .map_err(|e| ApiError::BadRequest(e.to_string()))?
        .map(Json)
}

async fn undo(State(s): State<Arc<SessionStore>>, Path(id): Path<String>, b: Result<Json<VersionBody>, JsonRejection>) -> Reply {
    s.undo(&id, body(b)?.version).map(Json)
}

async fn branch(State(s): State<Arc<SessionStore>>, Path(id): Path<String>, b: Result<Json<VersionBody>, JsonRejection>) -> Reply {
    s.branch(&id, body(b)?.version).map(Json)
}

pub fn router(store: Arc<SessionStore>) -> Router {
    Router::new()
        .route("/presets", get(presets))
        .route("/sessions", post(create))
        .route("/sessions/{id}/state", get(state))
        .route("/sessions/{id}/ais-move", post(ais_move))
        .route("/sessions/{id}/undo", post(undo))
        .route("/sessions/{id}/branch", post(branch))
        .with_state(store)
}

/// Binds localhost on `port`; a busy port is an error, not a retry.
pub async fn bind(port: u16) -> std::io::Result<tokio::net::TcpListener> {
    let addr = SocketAddr::from(([127, 0, 0, 1], port));
    tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| std::io::Error::new(e.kind(), format!("cannot listen on {addr}: {e}")))
}

pub async fn serve(listener: tokio::net::TcpListener) -> std::io::Result<()> {
    axum::serve(listener, router(Arc::new(SessionStore::new()))).await
}
