//! HTTP front end over in-memory sessions.
//!
//! Routes: `GET /assistants`, `POST /sessions`, `GET /sessions/{id}`,
//! `POST /sessions/{id}/choice`, `POST /sessions/{id}/constraint`,
//! `POST /sessions/{id}/accept` and `GET /sessions/{id}/result`.
//! When a data directory is configured every session is saved there as a
//! replay script and restored on start-up.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use axum::extract::{DefaultBodyLimit, Path as UrlPath, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::Error;
use crate::registry::{self, Bindings};
use crate::session::{ReplayScript, Session, Settings, Status};

pub const MAX_UPLOAD_BYTES: usize = 50 * 1024 * 1024;
pub const DEFAULT_PORT: u16 = 8787;

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError {
            status,
            message: message.into(),
        }
    }

    fn no_session(id: &str) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, format!("unknown session `{id}`"))
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::UnknownAssistant(_) => StatusCode::NOT_FOUND,
            Error::StaleChoice
            | Error::SessionAccepted
            | Error::ChoiceOutOfRange { .. }
            | Error::NoRecommendation
            | Error::ConflictingConstraints(_)
            | Error::Exhausted(_) => StatusCode::CONFLICT,
            Error::Stream(_) => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::BAD_REQUEST,
        };
        ApiError::new(status, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

type ApiResult<T> = std::result::Result<T, ApiError>;

pub struct AppState {
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
    data_dir: Option<PathBuf>,
    upload_dir: PathBuf,
}

#[derive(Serialize, Deserialize)]
struct Saved {
    session_id: String,
    status: Status,
    script: ReplayScript,
}

impl AppState {
    /// Opens the store, restoring saved sessions from `data_dir`.
    pub fn open(data_dir: Option<PathBuf>) -> crate::Result<Self> {
        let upload_dir = match &data_dir {
            Some(d) => d.join("uploads"),
            None => std::env::temp_dir().join(format!("wrangle-uploads-{}", std::process::id())),
        };
        std::fs::create_dir_all(&upload_dir).map_err(|e| Error::io(&upload_dir, e))?;
        let state = AppState {
            sessions: RwLock::new(HashMap::new()),
            data_dir,
            upload_dir,
        };
        state.restore()?;
        Ok(state)
    }

    fn sessions_dir(&self) -> Option<PathBuf> {
        self.data_dir.as_ref().map(|d| d.join("sessions"))
    }

    fn restore(&self) -> crate::Result<()> {
        let Some(dir) = self.sessions_dir() else {
            return Ok(());
        };
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let entries = std::fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))?;
        for entry in entries.flatten() {
            let path = entry.path();
            if path.extension().and_then(|e| e.to_str()) != Some("json") {
                continue;
            }
            match restore_one(&path) {
                Ok(s) => {
                    let id = s.id().to_string();
                    self.sessions.write().unwrap().insert(id, Arc::new(Mutex::new(s)));
                }
                Err(e) => log::warn!("skipping saved session {}: {e}", path.display()),
            }
        }
        Ok(())
    }

    fn persist(&self, s: &Session) {
        let Some(dir) = self.sessions_dir() else {
            return;
        };
        let saved = Saved {
            session_id: s.id().to_string(),
            status: s.status(),
            script: s.replay_script(),
        };
        let path = dir.join(format!("{}.json", s.id()));
        let text = serde_json::to_string_pretty(&saved).expect("saved sessions serialize");
        if let Err(e) = std::fs::write(&path, text) {
            log::warn!("cannot save session to {}: {e}", path.display());
        }
    }

    fn get(&self, id: &str) -> ApiResult<Arc<Mutex<Session>>> {
        self.sessions
            .read()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::no_session(id))
    }

    fn store_upload(&self, slot: &str, upload: &Upload) -> ApiResult<PathBuf> {
        if upload.content.len() > MAX_UPLOAD_BYTES {
            return Err(ApiError::new(StatusCode::PAYLOAD_TOO_LARGE, "upload exceeds 50 MB"));
        }
        let name: String = upload
            .name
            .as_deref()
            .unwrap_or("data.csv")
            .chars()
            .map(|c| {
                if c.is_ascii_alphanumeric() || c == '.' || c == '-' || c == '_' {
                    c
                } else {
                    '_'
                }
            })
            .collect();
        let path = self
            .upload_dir
            .join(format!("{}-{slot}-{name}", uuid::Uuid::new_v4().simple()));
        std::fs::write(&path, &upload.content)
            .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
        Ok(path)
    }
}

fn restore_one(path: &Path) -> crate::Result<Session> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let saved: Saved =
        serde_json::from_str(&text).map_err(|e| Error::InvalidData(format!("{}: {e}", path.display())))?;
    let mut s = Session::from_replay(&saved.script)?;
    s.set_id(saved.session_id);
    if saved.status == Status::Accepted {
        s.step()?;
        s.accept()?;
    }
    Ok(s)
}

#[derive(Debug, Deserialize)]
pub struct Upload {
    pub name: Option<String>,
    pub content: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    pub assistant: String,
    /// Slot to server-side path.
    #[serde(default)]
    pub bindings: BTreeMap<String, String>,
    /// Slot to uploaded file content.
    #[serde(default)]
    pub files: BTreeMap<String, Upload>,
    #[serde(default)]
    pub settings: Settings,
}

#[derive(Debug, Deserialize)]
pub struct ChoiceRequest {
    pub index: usize,
    pub revision: Option<u64>,
}

#[derive(Debug, Deserialize)]
pub struct ConstraintRequest {
    pub constraint: String,
}

#[derive(Debug, Deserialize)]
pub struct ResultQuery {
    pub part: Option<String>,
}

/// The JSON view of a session.
fn resource(s: &mut Session) -> ApiResult<Value> {
    let mut body = json!({
        "session_id": s.id(),
        "assistant": s.descriptor().id,
        "status": s.status(),
        "revision": s.revision(),
        "constraints": s.constraints(),
        "history": s.history(),
    });
    match s.status() {
        Status::Active => {
            let rec = s.step()?;
            let choices: Vec<Value> = rec
                .choices
                .iter()
                .enumerate()
                .map(|(i, c)| json!({ "index": i, "label": c.label, "constraints": c.next }))
                .collect();
            body["expression_script"] = json!(rec.script);
            body["preview"] = json!(rec.preview);
            body["choices"] = json!(choices);
            body["score"] = json!(rec.score);
            body["valid"] = json!(rec.valid);
            body["notes"] = json!(rec.notes);
            body["warnings"] = json!(rec.warnings);
        }
        Status::Accepted => {
            let r = s.result().expect("accepted sessions keep their result");
            body["expression_script"] = json!(r.script);
            body["preview"] = json!(r.output.preview(s.preview_rows()));
            body["choices"] = json!([]);
        }
    }
    Ok(body)
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
}

async fn list_assistants() -> Json<Value> {
    Json(json!(registry::descriptors()))
}

async fn create_session(
    State(st): State<Arc<AppState>>,
    Json(req): Json<CreateSession>,
) -> ApiResult<(StatusCode, Json<Value>)> {
    if registry::descriptor(&req.assistant).is_none() {
        return Err(Error::UnknownAssistant(req.assistant).into());
    }
    let mut bindings: Bindings = req
        .bindings
        .iter()
        .map(|(k, v)| (k.clone(), PathBuf::from(v)))
        .collect();
    for (slot, upload) in &req.files {
        let path = st.store_upload(slot, upload)?;
        bindings.retain(|(k, _)| k != slot);
        bindings.push((slot.clone(), path));
    }
    let st2 = st.clone();
    blocking(move || {
        let mut s = Session::init(&req.assistant, bindings, req.settings)?;
        let body = resource(&mut s)?;
        st2.persist(&s);
        st2.sessions
            .write()
            .unwrap()
            .insert(s.id().to_string(), Arc::new(Mutex::new(s)));
        Ok((StatusCode::CREATED, Json(body)))
    })
    .await
}

async fn get_session(State(st): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> ApiResult<Json<Value>> {
    let s = st.get(&id)?;
    blocking(move || Ok(Json(resource(&mut s.lock().unwrap())?))).await
}

async fn post_choice(
    State(st): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    Json(req): Json<ChoiceRequest>,
) -> ApiResult<Json<Value>> {
    let s = st.get(&id)?;
    blocking(move || {
        let mut s = s.lock().unwrap();
        s.select_at(req.index, req.revision)?;
        let body = resource(&mut s)?;
        st.persist(&s);
        Ok(Json(body))
    })
    .await
}

async fn post_constraint(
    State(st): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    Json(req): Json<ConstraintRequest>,
) -> ApiResult<Json<Value>> {
    let s = st.get(&id)?;
    blocking(move || {
        let mut s = s.lock().unwrap();
        s.constrain(&req.constraint)?;
        let body = resource(&mut s)?;
        st.persist(&s);
        Ok(Json(body))
    })
    .await
}

async fn post_accept(State(st): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> ApiResult<Json<Value>> {
    let s = st.get(&id)?;
    blocking(move || {
        let mut s = s.lock().unwrap();
        s.step()?;
        s.accept()?;
        let body = resource(&mut s)?;
        st.persist(&s);
        Ok(Json(body))
    })
    .await
}

async fn get_result(
    State(st): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<ResultQuery>,
) -> ApiResult<Response> {
    let s = st.get(&id)?;
    let s = s.lock().unwrap();
    let r = s
        .result()
        .ok_or_else(|| ApiError::new(StatusCode::CONFLICT, "session has not been accepted"))?;
    Ok(match q.part.as_deref() {
        None | Some("output") => (
            [
                (header::CONTENT_TYPE, "text/csv; charset=utf-8".to_string()),
                (
                    header::CONTENT_DISPOSITION,
                    format!("attachment; filename=\"{id}.csv\""),
                ),
            ],
            r.output.to_csv_string(),
        )
            .into_response(),
        Some("script") => (
            [(header::CONTENT_TYPE, "text/plain; charset=utf-8")],
            r.script_text.clone(),
        )
            .into_response(),
        Some(other) => {
            return Err(ApiError::new(
                StatusCode::BAD_REQUEST,
                format!("unknown result part `{other}`"),
            ))
        }
    })
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/assistants", get(list_assistants))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/choice", post(post_choice))
        .route("/sessions/{id}/constraint", post(post_constraint))
        .route("/sessions/{id}/accept", post(post_accept))
        .route("/sessions/{id}/result", get(get_result))
        .layer(DefaultBodyLimit::max(MAX_UPLOAD_BYTES + 64 * 1024))
        .with_state(state)
}

/// Serves until interrupted.
pub async fn serve(addr: std::net::SocketAddr, data_dir: Option<PathBuf>) -> crate::Result<()> {
    let state = Arc::new(AppState::open(data_dir)?);
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
