//! Local HTTP endpoint for the tuning UI.
//!
//! `GET /health`, `POST /series` (upload, returns a token) and
//! `POST /detect` (inline CSV or token, plus parameter overrides). Errors are
//! JSON objects `{"error": code, "message": text}`.

use std::collections::{HashMap, VecDeque};
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;

use dynpeak::document::TOOL_VERSION;
use dynpeak::io::{read_series, series_to_csv};
use dynpeak::model::{generate, scenario};
use dynpeak::plot::render_plots;
use dynpeak::{Provenance, TimeSeries};

use crate::{run_on_series, ParamOverrides};

/// Number of uploaded series kept in memory.
pub const CACHE_CAPACITY: usize = 16;

#[derive(Clone)]
struct Upload {
    csv: Arc<[u8]>,
    series: TimeSeries,
    seed: Option<u64>,
}

/// Oldest-first eviction once `CACHE_CAPACITY` is reached.
#[derive(Default)]
struct UploadCache {
    order: VecDeque<String>,
    entries: HashMap<String, Upload>,
}

impl UploadCache {
    fn insert(&mut self, token: String, upload: Upload) {
        if self.entries.insert(token.clone(), upload).is_some() {
            self.order.retain(|t| t != &token);
        }
        self.order.push_back(token);
        while self.order.len() > CACHE_CAPACITY {
            if let Some(old) = self.order.pop_front() {
                self.entries.remove(&old);
            }
        }
    }
}

#[derive(Clone, Default)]
pub struct AppState {
    cache: Arc<RwLock<UploadCache>>,
}

pub fn router() -> Router {
    router_with_state(AppState::default())
}

pub fn router_with_state(state: AppState) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/series", post(upload))
        .route("/detect", post(detect))
        .with_state(state)
}

struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn bad_request(code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status: StatusCode::BAD_REQUEST,
            code,
            message: message.into(),
        }
    }
}

impl From<dynpeak::Error> for ApiError {
    fn from(e: dynpeak::Error) -> Self {
        Self::bad_request(e.code(), e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({ "error": self.code, "message": self.message });
        (self.status, Json(body)).into_response()
    }
}

fn parse_body<T: serde::de::DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body)
        .map_err(|e| ApiError::bad_request("malformed_request", e.to_string()))
}

async fn health() -> Json<serde_json::Value> {
    Json(json!({ "status": "ok", "version": TOOL_VERSION }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct UploadRequest {
    csv: Option<String>,
    scenario: Option<String>,
    seed: Option<u64>,
}

async fn upload(State(state): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let req: UploadRequest = parse_body(&body)?;
    let upload = match (req.csv, req.scenario) {
        (Some(csv), None) => {
            let series = read_series(csv.as_bytes())?;
            Upload {
                csv: csv.into_bytes().into(),
                series,
                seed: None,
            }
        }
        (None, Some(name)) => {
            let (g, mut s) = scenario(&name)?;
            if let Some(seed) = req.seed {
                s.seed = seed;
            }
            let series = generate(&g, &s)?;
            Upload {
                csv: series_to_csv(&series).into_bytes().into(),
                series,
                seed: Some(s.seed),
            }
        }
        (None, None) => {
            return Err(ApiError::bad_request(
                "missing_series",
                "expected `csv` or `scenario`",
            ))
        }
        (Some(_), Some(_)) => {
            return Err(ApiError::bad_request(
                "ambiguous_series",
                "give either `csv` or `scenario`",
            ))
        }
    };
    let token = match upload.seed {
        Some(seed) => format!(
            "{}-{seed}",
            Provenance::for_input(&upload.csv, None).input_sha256
        ),
        None => Provenance::for_input(&upload.csv, None).input_sha256,
    };
    let body = json!({
        "token": token,
        "samples": upload.series.len(),
        "sampling_period": upload.series.period(),
    });
    state
        .cache
        .write()
        .expect("upload cache poisoned")
        .insert(token, upload);
    Ok(Json(body).into_response())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DetectRequest {
    csv: Option<String>,
    token: Option<String>,
    #[serde(default)]
    params: ParamOverrides,
    /// Also return the two SVG plots.
    #[serde(default)]
    plots: bool,
}

async fn detect(State(state): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let req: DetectRequest = parse_body(&body)?;
    let upload = match (req.csv, req.token) {
        (Some(csv), None) => Upload {
            series: read_series(csv.as_bytes())?,
            csv: csv.into_bytes().into(),
            seed: None,
        },
        (None, Some(token)) => {
            let cache = state.cache.read().expect("upload cache poisoned");
            cache.entries.get(&token).cloned().ok_or_else(|| ApiError {
                status: StatusCode::NOT_FOUND,
                code: "unknown_token",
                message: format!("no uploaded series with token {token}"),
            })?
        }
        (None, None) => {
            return Err(ApiError::bad_request(
                "missing_series",
                "expected `csv` or `token`",
            ))
        }
        (Some(_), Some(_)) => {
            return Err(ApiError::bad_request(
                "ambiguous_series",
                "give either `csv` or `token`",
            ))
        }
    };
    let run = run_on_series(upload.series, &upload.csv, &req.params, upload.seed)?;
    if req.plots {
        let plots = render_plots(&run.series, &run.result);
        let body = json!({
            "document": run.document,
            "plots": { "series_svg": plots.series_svg, "ipi_svg": plots.ipi_svg },
        });
        return Ok(Json(body).into_response());
    }
    Ok((
        [(header::CONTENT_TYPE, "application/json")],
        run.document.to_canonical_json(),
    )
        .into_response())
}
