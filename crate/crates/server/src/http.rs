use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::rejection::QueryRejection;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use motiv_core::analytics::TimelineConfig;
use motiv_core::glyph::{GlyphScales, LayoutConfig};
use motiv_core::Dataset;
use tower_http::cors::{AllowOrigin, CorsLayer};

use crate::api::{self, ApiError};

/// Rendering parameters shared by every request.
#[derive(Debug, Clone, Default)]
pub struct Settings {
    pub timeline: TimelineConfig,
    pub scales: GlyphScales,
    pub layout: LayoutConfig,
}

pub struct AppState {
    pub dataset: Dataset,
    pub settings: Settings,
}

pub type SharedState = Arc<AppState>;

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        let body = serde_json::to_vec(&self).unwrap_or_else(|_| b"{\"code\":\"internal\",\"message\":\"error\"}".to_vec());
        (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
    }
}

struct Json(Vec<u8>);

impl IntoResponse for Json {
    fn into_response(self) -> Response {
        ([(header::CONTENT_TYPE, "application/json")], self.0).into_response()
    }
}

type Reply = Result<Json, ApiError>;
type Params = Result<Query<HashMap<String, String>>, QueryRejection>;

fn params(q: Params) -> Result<HashMap<String, String>, ApiError> {
    q.map(|Query(m)| m).map_err(|e| ApiError::bad_request(format!("bad query string: {e}")))
}

/// Runs a payload builder off the async executor.
async fn blocking<F>(f: F) -> Reply
where
    F: FnOnce() -> Result<Vec<u8>, ApiError> + Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::internal(format!("worker failed: {e}")))?
        .map(Json)
}

async fn frames() -> Reply {
    api::frames_payload().map(Json)
}

async fn summary(State(st): State<SharedState>, q: Params) -> Reply {
    let p = params(q)?;
    blocking(move || api::summary_payload(&st.dataset, p.get("sort").map(String::as_str), p.get("dir").map(String::as_str))).await
}

async fn timeline(State(st): State<SharedState>, q: Params) -> Reply {
    let p = params(q)?;
    blocking(move || {
        api::timeline_payload(
            &st.dataset,
            p.get("frame").map(String::as_str),
            p.get("color").map(String::as_str),
            &st.settings.timeline,
        )
    })
    .await
}

async fn map(State(st): State<SharedState>, q: Params) -> Reply {
    let p = params(q)?;
    blocking(move || {
        api::map_payload(
            &st.dataset,
            p.get("frame").map(String::as_str),
            p.get("color").map(String::as_str),
            &st.settings.scales,
            &st.settings.layout,
        )
    })
    .await
}

async fn gam(State(st): State<SharedState>, body: Bytes) -> Reply {
    blocking(move || api::gam_payload(&st.dataset, &body)).await
}

async fn brush(State(st): State<SharedState>, Path(fips): Path<String>) -> Reply {
    api::brush_payload(&st.dataset, &fips).map(Json)
}

async fn tweet(State(st): State<SharedState>, Path(id): Path<String>) -> Reply {
    api::tweet_payload(&st.dataset, &id).map(Json)
}

async fn no_route() -> ApiError {
    ApiError::not_found("no such endpoint")
}

async fn wrong_method() -> Response {
    let mut r = ApiError::bad_request("method not allowed on this endpoint").into_response();
    *r.status_mut() = StatusCode::METHOD_NOT_ALLOWED;
    r
}

/// CORS policy: `None` allows any origin, otherwise only the given one.
pub fn cors(origin: Option<&str>) -> Result<CorsLayer, String> {
    let allow = match origin {
        None | Some("*") => AllowOrigin::any(),
        Some(o) => AllowOrigin::exact(HeaderValue::from_str(o).map_err(|e| format!("bad CORS origin {o:?}: {e}"))?),
    };
    Ok(CorsLayer::new()
        .allow_origin(allow)
        .allow_methods([Method::GET, Method::POST, Method::OPTIONS])
        .allow_headers([header::CONTENT_TYPE]))
}

pub fn router(state: SharedState, cors: CorsLayer) -> Router {
    Router::new()
        .route("/api/frames", get(frames))
        .route("/api/summary", get(summary))
        .route("/api/timeline", get(timeline))
        .route("/api/map", get(map))
        .route("/api/gam", post(gam))
        .route("/api/brush/county/{fips}", get(brush))
        .route("/api/tweets/{id}", get(tweet))
        .fallback(no_route)
        .method_not_allowed_fallback(wrong_method)
        .with_state(state)
        .layer(cors)
}

/// Binds `addr`, reports the bound address through `on_bound` and serves
/// until Ctrl-C.
pub async fn serve(app: Router, addr: SocketAddr, on_bound: impl FnOnce(SocketAddr)) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    on_bound(listener.local_addr()?);
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
