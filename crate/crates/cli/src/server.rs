//! HTTP API over an annotation store.

use std::sync::{Arc, Mutex, MutexGuard};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use eventcause::annotation::{AnnotationStore, TaskKind, TaskStatus};
use eventcause::Error;

pub type SharedStore = Arc<Mutex<AnnotationStore>>;

pub fn router(store: SharedStore) -> Router {
    Router::new()
        .route("/api/tasks", get(list_tasks))
        .route("/api/tasks/{id}", get(get_task))
        .route("/api/tasks/{id}/result", post(post_result))
        .route("/api/progress", get(progress))
        .route("/api/agreement", get(agreement))
        .with_state(store)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}

fn error(status: StatusCode, msg: impl ToString) -> Response {
    (status, Json(ErrorBody { error: msg.to_string() })).into_response()
}

fn status_for(e: &Error) -> StatusCode {
    match e {
        Error::UnknownId { .. } => StatusCode::NOT_FOUND,
        Error::Precondition(_) => StatusCode::FORBIDDEN,
        Error::Schema(_) | Error::DuplicateId { .. } | Error::Invalid(_) => StatusCode::CONFLICT,
        _ => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

// keep serving after a panicked handler
fn lock(store: &SharedStore) -> MutexGuard<'_, AnnotationStore> {
    store.lock().unwrap_or_else(|p| p.into_inner())
}

#[derive(Debug, Deserialize)]
struct ListQuery {
    annotator: Option<String>,
    status: Option<TaskStatus>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct TaskSummary {
    pub task_id: String,
    pub kind: TaskKind,
    pub batch: usize,
    pub status: TaskStatus,
    pub assigned_to: Vec<String>,
}

async fn list_tasks(State(store): State<SharedStore>, Query(q): Query<ListQuery>) -> Json<Vec<TaskSummary>> {
    let store = lock(&store);
    let list = store
        .tasks_for(q.annotator.as_deref(), q.status)
        .into_iter()
        .map(|t| TaskSummary {
            task_id: t.task_id.clone(),
            kind: t.kind(),
            batch: t.batch,
            status: t.status,
            assigned_to: t.assigned_to.clone(),
        })
        .collect();
    Json(list)
}

async fn get_task(State(store): State<SharedStore>, Path(id): Path<String>) -> Response {
    let store = lock(&store);
    match store.task(&id) {
        Some(t) => Json(t).into_response(),
        None => error(StatusCode::NOT_FOUND, format!("unknown task `{id}`")),
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Submission {
    annotator_id: String,
    answer: serde_json::Value,
}

/// 400 for unparsable JSON, 409 when the body or answer does not fit the
/// task's schema, 404 for an unknown task, 403 for an unassigned annotator.
async fn post_result(State(store): State<SharedStore>, Path(id): Path<String>, body: Bytes) -> Response {
    let value: serde_json::Value = match serde_json::from_slice(&body) {
        Ok(v) => v,
        Err(e) => return error(StatusCode::BAD_REQUEST, format!("malformed JSON: {e}")),
    };
    let sub: Submission = match serde_json::from_value(value) {
        Ok(s) => s,
        Err(e) => return error(StatusCode::CONFLICT, format!("schema mismatch: {e}")),
    };
    let mut store = lock(&store);
    match store.submit(&id, &sub.annotator_id, &sub.answer) {
        Ok(record) => Json(record).into_response(),
        Err(e) => error(status_for(&e), e),
    }
}

async fn progress(State(store): State<SharedStore>) -> Response {
    Json(lock(&store).progress()).into_response()
}

async fn agreement(State(store): State<SharedStore>) -> Response {
    Json(lock(&store).agreement()).into_response()
}
