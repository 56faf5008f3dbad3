//! HTTP session API: a person answers the queries a simulated human would.
//!
//! Every session is guarded by its own lock and all library work runs on the
//! blocking pool, so a slow posterior update never stalls other sessions.

pub mod api;
mod error;
mod store;

use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use conceptpref::envs::EnvSpec;
use conceptpref::humansim::HumanAnswer;
use conceptpref::runner::{Method, SessionConfig, SessionResult};
use conceptpref::Error;
use serde_json::Value;

use api::{CreateSession, FeedbackBody, FeedbackResponse, PosteriorView, QueryView, SessionView};
pub use error::{ApiError, ErrorBody};
pub use store::{SessionHandle, Store};

type ApiResult<T> = Result<T, ApiError>;

pub fn router(store: Arc<Store>) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/query", get(next_query))
        .route("/sessions/{id}/feedback", post(submit_feedback))
        .route("/sessions/{id}/stop", post(stop_session))
        .with_state(store)
}

pub async fn serve(addr: SocketAddr, store: Arc<Store>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(store)).await
}

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> ApiResult<T> {
    payload.map(|Json(v)| v).map_err(|e| ApiError::bad_request("malformed_body", e.body_text()))
}

/// The request as a full session config; `options` may set any field the
/// top level does not.
fn session_config(req: &CreateSession) -> ApiResult<SessionConfig> {
    let kind = req.env.kind.parse().map_err(|e: Error| ApiError::bad_request("unknown_environment", e.to_string()))?;
    let method: Method = req.method.parse().map_err(|e: Error| ApiError::bad_request("unknown_method", e.to_string()))?;
    let env = EnvSpec { kind, seed: req.env.seed, n_nodes: req.env.n_nodes, pool_size: req.env.pool_size };
    match (&req.instruction, &req.instruction_id) {
        (Some(_), Some(_)) | (None, None) => {
            return Err(ApiError::bad_request("invalid_config", "give exactly one of instruction and instruction_id"))
        }
        (Some(text), None) if text.trim().is_empty() => return Err(ApiError::bad_request("invalid_config", "instruction is empty")),
        _ => {}
    }
    let base = SessionConfig::new(env, req.instruction_id.clone(), method, req.budget, req.seed);
    let Value::Object(mut merged) = serde_json::to_value(&base).map_err(|e| ApiError::internal(e.to_string()))? else {
        return Err(ApiError::internal("config did not serialize to an object"));
    };
    for (key, value) in &req.options {
        if matches!(key.as_str(), "env" | "instruction_id" | "method" | "budget" | "seed") {
            return Err(ApiError::bad_request("invalid_config", format!("'{key}' is a top-level field")));
        }
        if !merged.contains_key(key) {
            return Err(ApiError::bad_request("invalid_config", format!("unknown option '{key}'")));
        }
        merged.insert(key.clone(), value.clone());
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| ApiError::bad_request("invalid_config", e.to_string()))
}

/// Runs `f` on the session under its lock, on the blocking pool. The
/// session is persisted afterwards when `mutates`.
async fn with_session<T, F>(store: Arc<Store>, id: String, mutates: bool, f: F) -> ApiResult<T>
where
    T: Send + 'static,
    F: FnOnce(&mut conceptpref::runner::Session, &str) -> ApiResult<T> + Send + 'static,
{
    let handle = store.get(&id).ok_or_else(|| ApiError::not_found(&id))?;
    tokio::task::spawn_blocking(move || {
        let mut session = handle.lock().map_err(|_| ApiError::internal("session lock poisoned"))?;
        let out = f(&mut session, &id);
        if mutates {
            store.save(&id, &session).map_err(|e| ApiError::internal(e.to_string()))?;
        }
        out
    })
    .await
    .map_err(|e| ApiError::internal(e.to_string()))?
}

fn view(session: &conceptpref::runner::Session, id: &str) -> ApiResult<SessionView> {
    let state = session.state();
    let summary = session.summary().map_err(ApiError::on_session)?;
    Ok(SessionView {
        session_id: id.into(),
        state: state.phase,
        iteration: state.records.len(),
        instruction: state.instruction.clone(),
        template_backed: state.ground_truth.is_some(),
        config: state.config.clone(),
        posterior: PosteriorView::new(session.environment(), summary),
        pending: state.pending.as_ref().map(|p| (p.query.first.as_str().into(), p.query.second.as_str().into())),
        aborted: state.aborted.clone(),
    })
}

async fn create_session(
    State(store): State<Arc<Store>>,
    payload: Result<Json<CreateSession>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<SessionView>)> {
    let req = body(payload)?;
    let cfg = session_config(&req)?;
    let view = tokio::task::spawn_blocking(move || {
        let session = store.start(cfg, req.instruction).map_err(ApiError::on_create)?;
        let id = uuid::Uuid::new_v4().simple().to_string();
        let v = view(&session, &id)?;
        store.insert(id, session).map_err(|e| ApiError::internal(e.to_string()))?;
        Ok::<_, ApiError>(v)
    })
    .await
    .map_err(|e| ApiError::internal(e.to_string()))??;
    Ok((StatusCode::CREATED, Json(view)))
}

async fn get_session(State(store): State<Arc<Store>>, Path(id): Path<String>) -> ApiResult<Json<SessionView>> {
    with_session(store, id, false, |s, id| view(s, id)).await.map(Json)
}

async fn next_query(State(store): State<Arc<Store>>, Path(id): Path<String>) -> ApiResult<Json<QueryView>> {
    with_session(store, id, true, |s, id| {
        let pending = s.next_query().map_err(ApiError::on_session)?;
        QueryView::new(id, s.iteration(), s.environment(), &pending).ok_or_else(|| ApiError::internal("query names unknown trajectories"))
    })
    .await
    .map(Json)
}

async fn submit_feedback(
    State(store): State<Arc<Store>>,
    Path(id): Path<String>,
    payload: Result<Json<FeedbackBody>, JsonRejection>,
) -> ApiResult<Json<FeedbackResponse>> {
    let fb = body(payload)?;
    with_session(store, id, true, move |s, id| {
        let answer = HumanAnswer { choice: fb.choice.into_choice(), explanation: fb.explanation, difficulty: fb.difficulty };
        let summary = s.submit(answer).map_err(ApiError::on_session)?;
        Ok(FeedbackResponse {
            session_id: id.into(),
            state: s.phase(),
            iteration: s.iteration(),
            posterior: PosteriorView::new(s.environment(), summary),
        })
    })
    .await
    .map(Json)
}

async fn stop_session(State(store): State<Arc<Store>>, Path(id): Path<String>) -> ApiResult<Json<SessionResult>> {
    with_session(store, id, true, |s, _| s.stop().map_err(ApiError::on_session)).await.map(Json)
}
