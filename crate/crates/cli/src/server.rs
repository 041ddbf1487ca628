//! HTTP front end for the rating study.
//!
//! Reads share a lock; registrations and submissions take it exclusively
//! and run on the blocking pool because they fsync the log before replying.

use axum::extract::{Path, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};
use std::sync::{Arc, RwLock};

use twstrs_core::study::Scores;
use twstrs_core::{Item, Study, StudyError, StudyManifest};

use crate::args::ServeArgs;
use crate::commands::store_dir;
use crate::error::{require_file, CliError, CliResult};
use crate::run_manifest::{RunManifest, FILE_NAME};

#[derive(Clone)]
pub struct AppState {
    study: Arc<RwLock<Study>>,
    n_bootstrap: usize,
}

impl AppState {
    pub fn new(study: Study, n_bootstrap: usize) -> Self {
        AppState { study: Arc::new(RwLock::new(study)), n_bootstrap }
    }

    pub fn study(&self) -> Arc<RwLock<Study>> {
        Arc::clone(&self.study)
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/raters", post(register))
        .route("/raters/{id}/next", get(next))
        .route("/raters/{id}/ratings", post(submit))
        .route("/agreement", get(agreement))
        .route("/export.csv", get(export))
        .with_state(state)
}

#[derive(Debug)]
pub enum ApiError {
    Study(StudyError),
    BadRequest(String),
    OutOfRange { item: Item, value: i64, max: u8 },
    Internal(String),
}

impl From<StudyError> for ApiError {
    fn from(e: StudyError) -> Self {
        ApiError::Study(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, body) = match self {
            ApiError::Study(e) => {
                let (status, kind) = match &e {
                    StudyError::DuplicateRater(_) => (StatusCode::CONFLICT, "duplicate_rater"),
                    StudyError::WrongImage { .. } => (StatusCode::CONFLICT, "wrong_image"),
                    StudyError::UnknownRater(_) => (StatusCode::NOT_FOUND, "unknown_rater"),
                    StudyError::Unauthorized(_) => (StatusCode::UNAUTHORIZED, "unauthorized"),
                    StudyError::OutOfRangeScore { .. } => (StatusCode::UNPROCESSABLE_ENTITY, "out_of_range_score"),
                    StudyError::InvalidRaterId(_) => (StatusCode::BAD_REQUEST, "invalid_rater_id"),
                    _ => (StatusCode::INTERNAL_SERVER_ERROR, "storage"),
                };
                let mut body = json!({ "error": kind, "message": e.to_string() });
                if let StudyError::OutOfRangeScore { item, max, .. } = &e {
                    body["item"] = json!(item);
                    body["max"] = json!(max);
                }
                if let StudyError::WrongImage { expected, .. } = &e {
                    body["expected"] = json!(expected);
                }
                (status, body)
            }
            ApiError::OutOfRange { item, value, max } => (
                StatusCode::UNPROCESSABLE_ENTITY,
                json!({
                    "error": "out_of_range_score",
                    "message": format!("{item} score {value} is out of range 0..={max}"),
                    "item": item,
                    "max": max,
                }),
            ),
            ApiError::BadRequest(m) => (StatusCode::BAD_REQUEST, json!({ "error": "bad_request", "message": m })),
            ApiError::Internal(m) => (StatusCode::INTERNAL_SERVER_ERROR, json!({ "error": "internal", "message": m })),
        };
        (status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn poisoned<T>(_: T) -> ApiError {
    ApiError::Internal("study state lock poisoned".into())
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::Internal(e.to_string()))?
}

fn bearer(headers: &HeaderMap) -> Option<&str> {
    headers
        .get(header::AUTHORIZATION)?
        .to_str()
        .ok()?
        .strip_prefix("Bearer ")
        .map(str::trim)
}

fn authorize(study: &Study, rater_id: &str, headers: &HeaderMap) -> ApiResult<()> {
    let token = bearer(headers).ok_or_else(|| ApiError::Study(StudyError::Unauthorized(rater_id.to_string())))?;
    Ok(study.authenticate(rater_id, token)?)
}

fn parse_json(body: &str) -> ApiResult<Value> {
    serde_json::from_str(body).map_err(|e| ApiError::BadRequest(format!("invalid JSON body: {e}")))
}

async fn healthz() -> Json<Value> {
    Json(json!({ "status": "ok", "version": env!("CARGO_PKG_VERSION"), "core_version": twstrs_core::VERSION }))
}

#[derive(Deserialize)]
struct RegisterBody {
    rater_id: String,
}

async fn register(State(state): State<AppState>, body: String) -> ApiResult<Response> {
    let req: RegisterBody =
        serde_json::from_str(&body).map_err(|e| ApiError::BadRequest(format!("expected {{\"rater_id\": ...}}: {e}")))?;
    let study = state.study();
    let reg = blocking(move || {
        let mut s = study.write().map_err(poisoned)?;
        Ok(s.register_rater(&req.rater_id)?)
    })
    .await?;
    Ok((StatusCode::CREATED, Json(reg)).into_response())
}

async fn next(State(state): State<AppState>, Path(id): Path<String>, headers: HeaderMap) -> ApiResult<Response> {
    let s = state.study.read().map_err(poisoned)?;
    authorize(&s, &id, &headers)?;
    Ok(Json(s.next_image(&id)?).into_response())
}

/// Scores are read as wide integers so that negative or oversized values
/// are reported against the item's range instead of as a type error.
fn parse_submission(body: &str) -> ApiResult<(String, Scores)> {
    let v = parse_json(body)?;
    let image_id = v
        .get("image_id")
        .and_then(Value::as_str)
        .ok_or_else(|| ApiError::BadRequest("missing string field image_id".into()))?
        .to_string();
    let scores = v
        .get("scores")
        .and_then(Value::as_object)
        .ok_or_else(|| ApiError::BadRequest("missing object field scores".into()))?;
    let mut values = [0u8; 4];
    for (slot, item) in values.iter_mut().zip(Item::ALL) {
        let raw = scores
            .get(item.as_str())
            .ok_or_else(|| ApiError::BadRequest(format!("missing score for {item}")))?;
        let value = raw
            .as_i64()
            .ok_or_else(|| ApiError::BadRequest(format!("score for {item} must be an integer")))?;
        let max = item.max_score();
        if !(0..=max as i64).contains(&value) {
            return Err(ApiError::OutOfRange { item, value, max });
        }
        *slot = value as u8;
    }
    let [torticollis, laterocollis, antero_retrocollis, lateral_shift] = values;
    Ok((image_id, Scores { torticollis, laterocollis, antero_retrocollis, lateral_shift }))
}

async fn submit(
    State(state): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
    body: String,
) -> ApiResult<Response> {
    {
        let s = state.study.read().map_err(poisoned)?;
        authorize(&s, &id, &headers)?;
    }
    let (image_id, scores) = parse_submission(&body)?;
    let study = state.study();
    let ack = blocking(move || {
        let mut s = study.write().map_err(poisoned)?;
        Ok(s.submit_rating(&id, &image_id, scores)?)
    })
    .await?;
    Ok(Json(ack).into_response())
}

async fn agreement(State(state): State<AppState>) -> ApiResult<Response> {
    let input = state.study.read().map_err(poisoned)?.snapshot_input();
    let n = state.n_bootstrap;
    let snapshot = blocking(move || Ok(input.compute(n)?)).await?;
    Ok(Json(snapshot).into_response())
}

async fn export(State(state): State<AppState>) -> ApiResult<Response> {
    let mut buf = Vec::new();
    state.study.read().map_err(poisoned)?.export_csv(&mut buf)?;
    Ok(([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], buf).into_response())
}

/// Resolves on Ctrl-C or SIGTERM.
pub async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {},
        _ = term => {},
    }
}

/// Loads the manifest, replays the store, binds and serves until a shutdown
/// signal arrives.
pub fn serve(args: &ServeArgs) -> CliResult<()> {
    require_file(&args.manifest, "--manifest")?;
    let manifest = StudyManifest::load(&args.manifest).map_err(|e| CliError::data(&args.manifest, e))?;
    if args.n_bootstrap == 0 {
        return Err(CliError::Usage("--n-bootstrap must be at least 1".into()));
    }
    let dir = store_dir(&args.store);
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let study = Study::open(manifest, args.seed, &args.store).map_err(|e| match e {
        StudyError::Io(io) => CliError::io(&args.store, io),
        other => CliError::data(&args.store, other),
    })?;
    RunManifest::new("serve", Some(args.seed), args, vec![args.store.display().to_string()])
        .write(&dir.join(FILE_NAME))?;

    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    runtime.block_on(async {
        let addr = format!("{}:{}", args.host, args.port);
        let listener = tokio::net::TcpListener::bind(&addr)
            .await
            .map_err(|e| CliError::Runtime(format!("cannot bind {addr}: {e}")))?;
        let local = listener.local_addr().map_err(|e| CliError::Runtime(e.to_string()))?;
        println!("listening on http://{local}");
        use std::io::Write as _;
        let _ = std::io::stdout().flush();
        axum::serve(listener, router(AppState::new(study, args.n_bootstrap)))
            .with_graceful_shutdown(shutdown_signal())
            .await
            .map_err(|e| CliError::Runtime(e.to_string()))
    })?;
    eprintln!("shut down cleanly");
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn submission_parser_checks_every_item_range() {
        let ok = r#"{"image_id":"a","scores":{"torticollis":4,"laterocollis":3,"antero_retrocollis":0,"lateral_shift":1}}"#;
        let (id, s) = parse_submission(ok).unwrap();
        assert_eq!((id.as_str(), s.torticollis, s.lateral_shift), ("a", 4, 1));

        let big = ok.replace("\"antero_retrocollis\":0", "\"antero_retrocollis\":300");
        match parse_submission(&big) {
            Err(ApiError::OutOfRange { item, value, max }) => {
                assert_eq!((item, value, max), (Item::AnteroRetrocollis, 300, 3))
            }
            other => panic!("{other:?}"),
        }
        let fractional = ok.replace("\"torticollis\":4", "\"torticollis\":1.5");
        assert!(matches!(parse_submission(&fractional), Err(ApiError::BadRequest(_))));
        assert!(matches!(parse_submission("{"), Err(ApiError::BadRequest(_))));
    }

    #[test]
    fn bearer_header_is_parsed() {
        let mut h = HeaderMap::new();
        assert_eq!(bearer(&h), None);
        h.insert(header::AUTHORIZATION, "Bearer abc123".parse().unwrap());
        assert_eq!(bearer(&h), Some("abc123"));
        h.insert(header::AUTHORIZATION, "Basic abc123".parse().unwrap());
        assert_eq!(bearer(&h), None);
    }
}
