//! HTTP classification endpoint.
//!
//! `POST /classify[?top=N]` with the raw source as the body answers with the
//! same JSON as `langgram classify --format json`. `GET /health` reports the
//! loaded model's size.

use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use langgram::maxent::MaxentModel;
use langgram::pipeline::classify;
use langgram::DEFAULT_MAX_BYTES;
use serde::{Deserialize, Serialize};

/// Largest accepted request body, in bytes.
pub const MAX_BODY_BYTES: usize = DEFAULT_MAX_BYTES as usize;

#[derive(Debug, Deserialize)]
struct ClassifyQuery {
    top: Option<usize>,
}

#[derive(Debug, Serialize)]
struct Health {
    status: &'static str,
    languages: usize,
    productions: usize,
}

#[derive(Debug, Serialize)]
struct ErrorBody {
    error: String,
}

fn error(status: StatusCode, message: String) -> Response {
    (status, Json(ErrorBody { error: message })).into_response()
}

async fn classify_handler(
    State(model): State<Arc<MaxentModel>>,
    Query(query): Query<ClassifyQuery>,
    body: Bytes,
) -> Response {
    let result = tokio::task::spawn_blocking(move || classify(&model, &body)).await;
    match result {
        Ok(Ok(mut r)) => {
            if let Some(top) = query.top {
                r.truncate(top);
            }
            Json(r).into_response()
        }
        Ok(Err(e)) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

async fn health_handler(State(model): State<Arc<MaxentModel>>) -> Json<Health> {
    Json(Health {
        status: "ok",
        languages: model.languages().len(),
        productions: model.grammar().len(),
    })
}

pub fn router(model: Arc<MaxentModel>) -> Router {
    Router::new()
        .route("/classify", post(classify_handler))
        .route("/health", get(health_handler))
        .layer(DefaultBodyLimit::max(MAX_BODY_BYTES))
        .with_state(model)
}

pub async fn serve(model: MaxentModel, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(Arc::new(model)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
