//! The chat-completions client against a local stub server.

use std::collections::VecDeque;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::State;
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::post;
use axum::{Json, Router};
use serde_json::{json, Value};

use autocombat_core::provider::{
    ChatCompletionsProvider, Decoding, ModelProvider, ProviderError, RecordingProvider, ReplayProvider, ReplayStore,
    RetryPolicy, SystemRole,
};
use autocombat_core::refiner::{refine, AttemptError, FeedbackComment, RefineError, RefinementRequest};

#[derive(Clone)]
enum Reply {
    Status(u16, Option<&'static str>),
    Content(String),
    Raw(&'static str),
    Slow(Duration),
}

#[derive(Default)]
struct Stub {
    replies: Mutex<VecDeque<Reply>>,
    seen: Mutex<Vec<(Option<String>, Value)>>,
}

async fn handler(State(stub): State<Arc<Stub>>, headers: HeaderMap, Json(body): Json<Value>) -> Response {
    let auth = headers.get("authorization").and_then(|v| v.to_str().ok()).map(str::to_string);
    stub.seen.lock().unwrap().push((auth, body));
    let reply = stub.replies.lock().unwrap().pop_front().expect("unexpected call");
    match reply {
        Reply::Status(code, retry_after) => {
            let mut resp = (StatusCode::from_u16(code).unwrap(), "stub error").into_response();
            if let Some(s) = retry_after {
                resp.headers_mut().insert("retry-after", s.parse().unwrap());
            }
            resp
        }
        Reply::Content(text) => Json(json!({
            "choices": [{"message": {"role": "assistant", "content": text}}],
            "usage": {"prompt_tokens": 11, "completion_tokens": 7}
        }))
        .into_response(),
        Reply::Raw(body) => body.into_response(),
        Reply::Slow(d) => {
            tokio::time::sleep(d).await;
            Json(json!({"choices": []})).into_response()
        }
    }
}

async fn start(replies: Vec<Reply>) -> (String, Arc<Stub>) {
    let stub = Arc::new(Stub {
        replies: Mutex::new(replies.into()),
        ..Default::default()
    });
    let app = Router::new().route("/v1/chat/completions", post(handler)).with_state(stub.clone());
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    (format!("http://{addr}/v1/chat/completions"), stub)
}

fn client(endpoint: &str, role: SystemRole, timeout: Duration) -> ChatCompletionsProvider {
    ChatCompletionsProvider::new("stub", endpoint, "sk-test", Decoding::new("m1", 256), role, timeout).unwrap()
}

fn calls(stub: &Stub) -> usize {
    stub.seen.lock().unwrap().len()
}

const VALID: &str = r#"{"concerns":["c"],"used_question":false,"change_log":[{"concern":"c","change":"x"}],"improved_answer":"new"}"#;

fn request() -> RefinementRequest {
    let comment = FeedbackComment { author: None, body: "please fix c".into(), timestamp: None };
    RefinementRequest::new("old answer", vec![comment], "q").unwrap()
}

#[tokio::test]
async fn request_shape_and_success() {
    let (url, stub) = start(vec![Reply::Content("hello".into()), Reply::Content("again".into())]).await;
    let p = client(&url, SystemRole::Native, Duration::from_secs(5));
    let c = p.complete("sys", "usr").await.unwrap();
    assert_eq!(c.text, "hello");
    assert_eq!(c.usage.prompt_tokens, Some(11));
    let (auth, body) = stub.seen.lock().unwrap()[0].clone();
    assert_eq!(auth.as_deref(), Some("Bearer sk-test"));
    assert_eq!(body["model"], "m1");
    assert_eq!(body["temperature"], 0.0);
    assert_eq!(body["max_tokens"], 256);
    assert_eq!(body["stream"], false);
    assert_eq!(body["messages"][0], json!({"role": "system", "content": "sys"}));

    let merged = client(&url, SystemRole::MergeIntoUser, Duration::from_secs(5));
    merged.complete("sys", "usr").await.unwrap();
    let body = stub.seen.lock().unwrap()[1].1.clone();
    assert_eq!(body["messages"], json!([{"role": "user", "content": "sys\n\nusr"}]));
    assert!(!format!("{p:?}").contains("sk-test"));
}

#[tokio::test]
async fn auth_failure_is_not_retried() {
    let (url, stub) = start(vec![Reply::Status(401, None)]).await;
    let p = client(&url, SystemRole::Native, Duration::from_secs(5));
    let err = refine(&request(), &p, &RetryPolicy::no_delay(3)).await.unwrap_err();
    assert_eq!(
        err.last_attempt(),
        Some(&AttemptError::Provider(ProviderError::Auth { status: 401 }))
    );
    assert_eq!(calls(&stub), 1);
}

#[tokio::test]
async fn rate_limit_and_server_errors_are_retried() {
    let (url, stub) = start(vec![
        Reply::Status(429, Some("0")),
        Reply::Status(503, None),
        Reply::Content(VALID.into()),
    ])
    .await;
    let p = client(&url, SystemRole::Native, Duration::from_secs(5));
    let r = refine(&request(), &p, &RetryPolicy::no_delay(3)).await.unwrap();
    assert_eq!(r.attempts, 3);
    assert_eq!(r.result.improved_answer, "new");
    assert_eq!(calls(&stub), 3);
}

#[tokio::test]
async fn client_timeout_maps_to_timeout() {
    let (url, _stub) = start(vec![Reply::Slow(Duration::from_millis(800))]).await;
    let p = client(&url, SystemRole::Native, Duration::from_millis(100));
    assert_eq!(p.complete("s", "u").await.unwrap_err(), ProviderError::Timeout);
}

#[tokio::test]
async fn malformed_bodies() {
    let (url, stub) = start(vec![
        Reply::Raw("<html>not json</html>"),
        Reply::Content("I think the answer is fine.".into()),
        Reply::Content(VALID.into()),
        Reply::Status(400, None),
    ])
    .await;
    let p = client(&url, SystemRole::Native, Duration::from_secs(5));
    assert!(matches!(p.complete("s", "u").await, Err(ProviderError::Malformed(_))));
    // non-JSON model output is a schema failure and is retried
    let r = refine(&request(), &p, &RetryPolicy::no_delay(3)).await.unwrap();
    assert_eq!(r.attempts, 2);
    let err = refine(&request(), &p, &RetryPolicy::no_delay(3)).await.unwrap_err();
    assert!(matches!(err, RefineError::Failed { .. }));
    assert!(matches!(
        err.last_attempt(),
        Some(AttemptError::Provider(ProviderError::Rejected { status: 400, .. }))
    ));
    assert_eq!(calls(&stub), 4);
}

#[tokio::test]
async fn recorded_calls_replay_without_network() {
    let (url, stub) = start(vec![Reply::Content(VALID.into())]).await;
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rec.jsonl");
    let live: Arc<dyn ModelProvider> = Arc::new(client(&url, SystemRole::Native, Duration::from_secs(5)));
    let recorder = RecordingProvider::open(live, &path).unwrap();
    let first = refine(&request(), &recorder, &RetryPolicy::no_delay(1)).await.unwrap();

    let store = ReplayStore::load(&path).unwrap();
    assert_eq!(store.len(), 1);
    let replay = ReplayProvider::new("replay", Decoding::new("m1", 256), store);
    let second = refine(&request(), &replay, &RetryPolicy::no_delay(1)).await.unwrap();
    assert_eq!(first, second);
    assert_eq!((replay.hits(), replay.misses()), (1, 0));
    assert_eq!(calls(&stub), 1);
}
