//! HTTP/JSON transport for the workbench: solve, analyze, oracle and
//! montecarlo as POST endpoints over the shared wire types. Compute runs on
//! blocking threads; the per-design kappa certification cache lives in the
//! process state and is shared across requests.

use std::sync::Arc;

use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};

use sparsebench_core::api::{
    handle_analyze, handle_montecarlo, handle_oracle, handle_solve, AnalyzeRequest, ErrorBody,
    ErrorKind, MonteCarloRequest, OracleRequest, SolveRequest,
};
use sparsebench_core::harness::KappaCache;
use sparsebench_core::Error;

#[derive(Default)]
pub struct AppState {
    pub kappa_cache: KappaCache,
}

pub type SharedState = Arc<AppState>;

fn status_for(kind: ErrorKind) -> StatusCode {
    match kind {
        ErrorKind::InvalidInput => StatusCode::BAD_REQUEST,
        ErrorKind::SolverFailure => StatusCode::UNPROCESSABLE_ENTITY,
        ErrorKind::Io | ErrorKind::Internal => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

fn error_response(error: &Error) -> Response {
    let body = ErrorBody::from_error(error);
    (status_for(body.kind), Json(body)).into_response()
}

async fn run_blocking<T, F>(task: F) -> Response
where
    T: serde::Serialize + Send + 'static,
    F: FnOnce() -> sparsebench_core::Result<T> + Send + 'static,
{
    match tokio::task::spawn_blocking(task).await {
        Ok(Ok(value)) => Json(value).into_response(),
        Ok(Err(error)) => error_response(&error),
        Err(join_error) => {
            let body = ErrorBody {
                kind: ErrorKind::Internal,
                error: format!("worker panicked: {join_error}"),
            };
            (StatusCode::INTERNAL_SERVER_ERROR, Json(body)).into_response()
        }
    }
}

async fn health() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok" }))
}

async fn solve(Json(request): Json<SolveRequest>) -> Response {
    run_blocking(move || handle_solve(&request)).await
}

async fn analyze(Json(request): Json<AnalyzeRequest>) -> Response {
    run_blocking(move || handle_analyze(&request)).await
}

async fn oracle(Json(request): Json<OracleRequest>) -> Response {
    run_blocking(move || handle_oracle(&request)).await
}

async fn montecarlo(
    State(state): State<SharedState>,
    Json(request): Json<MonteCarloRequest>,
) -> Response {
    run_blocking(move || handle_montecarlo(&request, Some(&state.kappa_cache))).await
}

pub fn router(state: SharedState) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/v1/solve", post(solve))
        .route("/v1/analyze", post(analyze))
        .route("/v1/oracle", post(oracle))
        .route("/v1/montecarlo", post(montecarlo))
        .with_state(state)
}

/// Serves the API on an already-bound listener until the process exits.
pub async fn serve(listener: tokio::net::TcpListener) -> std::io::Result<()> {
    let state = Arc::new(AppState::default());
    axum::serve(listener, router(state)).await
}
