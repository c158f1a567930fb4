//! HTTP relay from the browser extension to the refiner.
//!
//! `POST /refine` takes `{answer, comments: [{author?, body, timestamp?}],
//! question}` and answers with the structured refinement result;
//! `GET /healthz` reports the active provider.

pub mod config;
pub mod schema;

use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::num::NonZeroU32;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::rejection::BytesRejection;
use axum::extract::{ConnectInfo, DefaultBodyLimit, FromRequestParts, Request, State};
use axum::http::request::Parts;
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use governor::{DefaultKeyedRateLimiter, Quota, RateLimiter};
use serde_json::json;
use sha2::{Digest, Sha256};
use tokio::io::AsyncWriteExt;
use tokio::sync::{Mutex, Semaphore};

use autocombat_core::provider::{request_hash, ModelProvider, ProviderError, RetryPolicy};
use autocombat_core::refiner::{build_prompt, refine, AttemptError, RefineError};

pub use config::{ServerConfig, ServiceConfig, ServiceConfigError};
use schema::{parse_request, ErrorBody, RefineResponse};

pub struct AppState {
    provider: Arc<dyn ModelProvider>,
    retry: RetryPolicy,
    allowed_origins: Vec<String>,
    limiter: DefaultKeyedRateLimiter<IpAddr>,
    requests_seen: AtomicU64,
    in_flight: Semaphore,
    audit: Option<Mutex<tokio::fs::File>>,
}

impl AppState {
    pub async fn new(server: &ServerConfig, provider: Arc<dyn ModelProvider>, retry: RetryPolicy) -> std::io::Result<Self> {
        let per_minute = NonZeroU32::new(server.rate_limit_per_minute).unwrap_or(NonZeroU32::MIN);
        let audit = match &server.audit_log {
            Some(path) => Some(Mutex::new(open_append(path).await?)),
            None => None,
        };
        Ok(AppState {
            provider,
            retry,
            allowed_origins: server.allowed_origins.clone(),
            limiter: RateLimiter::keyed(Quota::per_minute(per_minute)),
            requests_seen: AtomicU64::new(0),
            in_flight: Semaphore::new(server.max_in_flight.max(1)),
            audit,
        })
    }
}

async fn open_append(path: &Path) -> std::io::Result<tokio::fs::File> {
    tokio::fs::OpenOptions::new().create(true).append(true).open(path).await
}

fn error_response(status: StatusCode, body: ErrorBody) -> Response {
    (status, Json(body)).into_response()
}

pub fn router(state: Arc<AppState>, max_body_bytes: usize) -> Router {
    Router::new()
        .route("/refine", post(refine_handler).options(preflight))
        .route("/healthz", get(healthz).options(preflight))
        .layer(DefaultBodyLimit::max(max_body_bytes))
        .layer(middleware::from_fn_with_state(state.clone(), origin_guard))
        .with_state(state)
}

fn origin_allowed(allowed: &[String], origin: &str) -> bool {
    allowed.iter().any(|a| a == "*" || a == origin)
}

/// Requests without an `Origin` header are not cross-origin and pass; a
/// browser origin must be on the allow-list.
async fn origin_guard(State(state): State<Arc<AppState>>, req: Request, next: Next) -> Response {
    let origin = req.headers().get(header::ORIGIN).cloned();
    if let Some(o) = &origin {
        if !origin_allowed(&state.allowed_origins, o.to_str().unwrap_or("")) {
            return error_response(StatusCode::FORBIDDEN, ErrorBody::new("origin_not_allowed", "origin is not allowed"));
        }
    }
    let mut resp = next.run(req).await;
    if let Some(o) = origin {
        let h = resp.headers_mut();
        h.insert(header::ACCESS_CONTROL_ALLOW_ORIGIN, o);
        h.insert(header::VARY, HeaderValue::from_static("Origin"));
    }
    resp
}

async fn preflight() -> Response {
    let mut h = HeaderMap::new();
    h.insert(header::ACCESS_CONTROL_ALLOW_METHODS, HeaderValue::from_static("GET, POST, OPTIONS"));
    h.insert(header::ACCESS_CONTROL_ALLOW_HEADERS, HeaderValue::from_static("content-type"));
    h.insert(header::ACCESS_CONTROL_MAX_AGE, HeaderValue::from_static("600"));
    (StatusCode::NO_CONTENT, h).into_response()
}

async fn healthz(State(state): State<Arc<AppState>>) -> Json<serde_json::Value> {
    Json(json!({
        "status": "ok",
        "provider": state.provider.name(),
        "replay_mode": state.provider.replay_mode(),
    }))
}

/// Peer address when the server was started with connect info; requests
/// without it (in-process tests) share one bucket.
struct ClientIp(IpAddr);

impl<S: Send + Sync> FromRequestParts<S> for ClientIp {
    type Rejection = std::convert::Infallible;

    async fn from_request_parts(parts: &mut Parts, _: &S) -> Result<Self, Self::Rejection> {
        let ip = parts
            .extensions
            .get::<ConnectInfo<SocketAddr>>()
            .map(|c| c.0.ip())
            .unwrap_or(IpAddr::V4(Ipv4Addr::UNSPECIFIED));
        Ok(ClientIp(ip))
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

async fn refine_handler(
    State(state): State<Arc<AppState>>,
    ClientIp(ip): ClientIp,
    body: Result<Bytes, BytesRejection>,
) -> Response {
    if state.requests_seen.fetch_add(1, Ordering::Relaxed) % 1024 == 1023 {
        state.limiter.retain_recent();
    }
    if let Err(not_until) = state.limiter.check_key(&ip) {
        let wait = not_until.wait_time_from(governor::clock::Clock::now(&governor::clock::DefaultClock::default()));
        let mut resp = error_response(StatusCode::TOO_MANY_REQUESTS, ErrorBody::new("rate_limited", "too many requests"));
        let secs = wait.as_secs().max(1).to_string();
        resp.headers_mut().insert(header::RETRY_AFTER, HeaderValue::from_str(&secs).expect("digits"));
        return resp;
    }

    let body = match body {
        Ok(b) => b,
        Err(rej) if rej.status() == StatusCode::PAYLOAD_TOO_LARGE => {
            return error_response(StatusCode::PAYLOAD_TOO_LARGE, ErrorBody::new("payload_too_large", "request body exceeds the limit"));
        }
        Err(rej) => return error_response(StatusCode::BAD_REQUEST, ErrorBody::new("invalid_request", rej.body_text())),
    };
    let request = match parse_request(&body) {
        Ok(r) => r,
        Err(fields) => {
            let mut e = ErrorBody::new("invalid_request", "request does not match schema v1");
            e.fields = fields;
            return error_response(StatusCode::BAD_REQUEST, e);
        }
    };

    let _permit = state.in_flight.acquire().await.expect("semaphore is never closed");
    let outcome = refine(&request, state.provider.as_ref(), &state.retry).await;
    let prompt = build_prompt(&request);
    let hash = request_hash(&prompt.system, &prompt.user, state.provider.decoding());
    match outcome {
        Ok(r) => {
            let body = serde_json::to_vec(&RefineResponse::new(&r.result, &r.flags, &r.request_hash)).expect("response serializes");
            if let Some(log) = &state.audit {
                let line = format!("{}\n", json!({"request_hash": r.request_hash, "result_hash": sha256_hex(&body)}));
                let mut f = log.lock().await;
                if let Err(e) = f.write_all(line.as_bytes()).await {
                    tracing::warn!("audit log write failed: {e}");
                }
            }
            ([(header::CONTENT_TYPE, "application/json")], body).into_response()
        }
        Err(RefineError::Invalid(e)) => {
            let mut b = ErrorBody::new("invalid_request", e.0.clone());
            b.request_hash = Some(hash);
            error_response(StatusCode::BAD_REQUEST, b)
        }
        Err(err @ RefineError::Failed { .. }) => {
            let timed_out = matches!(err.last_attempt(), Some(AttemptError::Provider(ProviderError::Timeout)));
            let (status, code, msg) = if timed_out {
                (StatusCode::GATEWAY_TIMEOUT, "provider_timeout", "model provider timed out")
            } else {
                (StatusCode::BAD_GATEWAY, "provider_failure", "model provider failed after retries")
            };
            tracing::warn!(request_hash = %hash, "{err}");
            let mut b = ErrorBody::new(code, msg);
            b.request_hash = Some(hash);
            b.diagnostics = err.diagnostics();
            error_response(status, b)
        }
    }
}

/// Bind and serve until ctrl-c.
pub async fn serve(config: &ServiceConfig, provider: Arc<dyn ModelProvider>) -> Result<(), Box<dyn std::error::Error + Send + Sync>> {
    let addr = config.server.validate()?;
    let state = Arc::new(AppState::new(&config.server, provider, RetryPolicy::default()).await?);
    let app = router(state, config.server.max_body_bytes);
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, app.into_make_service_with_connect_info::<SocketAddr>())
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
