#![allow(dead_code)]

use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use conceptpref_service::{router, Store};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

/// One request through the router, without a socket.
pub async fn call(store: &Arc<Store>, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    call_raw(store, method, uri, body.map(|b| b.to_string())).await
}

pub async fn call_raw(store: &Arc<Store>, method: &str, uri: &str, body: Option<String>) -> (StatusCode, Value) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map(Body::from).unwrap_or_else(Body::empty))
        .unwrap();
    let resp = router(Arc::clone(store)).oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

pub fn create_body(kind: &str, method: &str, budget: usize, seed: u64) -> Value {
    json!({
        "env": {"kind": kind, "seed": 0},
        "instruction_id": if kind == "routing" { "natural-01" } else { "clear-01" },
        "method": method,
        "budget": budget,
        "seed": seed,
        "options": {"oracle": {"kind": "mock", "y0": 0.62, "y1": 0.72}}
    })
}

/// Serves the router on an ephemeral port from a background runtime.
pub fn spawn_server(store: Arc<Store>) -> String {
    let (tx, rx) = std::sync::mpsc::channel();
    std::thread::spawn(move || {
        let rt = tokio::runtime::Builder::new_multi_thread().worker_threads(2).enable_all().build().unwrap();
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
            tx.send(listener.local_addr().unwrap()).unwrap();
            axum::serve(listener, router(store)).await.unwrap();
        });
    });
    format!("http://{}", rx.recv().unwrap())
}
