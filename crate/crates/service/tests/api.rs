mod common;

use std::sync::Arc;

use axum::http::StatusCode;
use common::{call, call_raw, create_body};
use conceptpref::envs::{EnvKind, EnvSpec};
use conceptpref::runner::{Method, MockParams, OracleSpec, SessionConfig};
use conceptpref_service::Store;
use serde_json::{json, Value};

async fn create(store: &Arc<Store>, body: Value) -> String {
    let (status, v) = call(store, "POST", "/sessions", Some(body)).await;
    assert_eq!(status, StatusCode::CREATED, "{v}");
    v["session_id"].as_str().unwrap().to_owned()
}

#[tokio::test]
async fn create_returns_a_handle_with_the_prior() {
    let store = Arc::new(Store::in_memory());
    let (status, v) = call(&store, "POST", "/sessions", Some(create_body("routing", "maple_oaqs", 3, 0))).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(v["state"], "selecting");
    assert_eq!(v["iteration"], 0);
    assert_eq!(v["template_backed"], true);
    assert_eq!(v["config"]["oracle"]["y0"], 0.62);
    assert_eq!(v["posterior"]["concepts"].as_array().unwrap().len(), 10);
    assert_eq!(v["posterior"]["map"].as_array().unwrap().len(), 10);
    let other = create(&store, create_body("routing", "maple_oaqs", 3, 0)).await;
    assert_ne!(v["session_id"].as_str().unwrap(), other);
    assert_eq!(store.len(), 2);
}

#[tokio::test]
async fn bad_requests_are_rejected_with_a_reason() {
    let store = Arc::new(Store::in_memory());
    let cases = [
        (create_body("moon", "maple_oaqs", 3, 0), "unknown_environment"),
        (create_body("routing", "dpo", 3, 0), "unknown_method"),
        (create_body("routing", "maple_top", 0, 0), "invalid_config"),
        (json!({"env": {"kind": "routing"}, "method": "brex", "budget": 2}), "invalid_config"),
        (json!({"env": {"kind": "routing"}, "instruction": "x", "method": "brex", "budget": 2, "options": {"k": 0}}), "invalid_config"),
        (json!({"env": {"kind": "routing"}, "instruction": "x", "method": "brex", "budget": 2, "options": {"seed": 3}}), "invalid_config"),
        (json!({"env": {"kind": "routing"}, "instruction": "x", "method": "brex", "budget": 2, "options": {"bogus": 1}}), "invalid_config"),
        (json!({"env": {"kind": "routing"}, "instruction_id": "no-such", "method": "brex", "budget": 2}), "invalid_config"),
    ];
    for (body, code) in cases {
        let (status, v) = call(&store, "POST", "/sessions", Some(body.clone())).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{body}");
        assert_eq!(v["code"], code, "{body}: {v}");
        assert!(!v["message"].as_str().unwrap().is_empty());
    }
    let (_, v) = call(&store, "POST", "/sessions", Some(create_body("moon", "brex", 3, 0))).await;
    assert!(v["message"].as_str().unwrap().contains("unknown environment"));
    let (status, v) = call_raw(&store, "POST", "/sessions", Some("{not json".into())).await;
    assert_eq!((status, v["code"].as_str()), (StatusCode::BAD_REQUEST, Some("malformed_body")));
    assert!(store.is_empty());
}

#[tokio::test]
async fn unknown_sessions_are_404() {
    let store = Arc::new(Store::in_memory());
    for (method, uri) in [("GET", "/sessions/nope"), ("GET", "/sessions/nope/query"), ("POST", "/sessions/nope/stop")] {
        let (status, v) = call(&store, method, uri, None).await;
        assert_eq!(status, StatusCode::NOT_FOUND);
        assert_eq!(v["code"], "session_not_found");
    }
    let (status, _) = call(&store, "POST", "/sessions/nope/feedback", Some(json!({"choice": "first"}))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn query_is_idempotent_and_feedback_needs_one() {
    let store = Arc::new(Store::in_memory());
    let id = create(&store, create_body("routing", "maple_oaqs", 3, 1)).await;
    let (status, v) = call(&store, "POST", &format!("/sessions/{id}/feedback"), Some(json!({"choice": "first"}))).await;
    assert_eq!((status, v["code"].as_str()), (StatusCode::CONFLICT, Some("wrong_state")));
    let (status, q1) = call(&store, "GET", &format!("/sessions/{id}/query"), None).await;
    assert_eq!(status, StatusCode::OK);
    let (_, q2) = call(&store, "GET", &format!("/sessions/{id}/query"), None).await;
    assert_eq!(q1, q2);
    assert_eq!(q1["iteration"], 0);
    assert_eq!(q1["first"]["features"].as_array().unwrap().len(), 10);
    assert!(q1["first"]["polyline"].as_array().is_some_and(|p| p.len() >= 2));
    let (_, s) = call(&store, "GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(s["state"], "awaiting_feedback");
    assert_eq!(s["pending"][0], q1["first"]["id"]);
    for bad in [json!({"choice": "maybe"}), json!({}), json!({"choice": "first", "extra": 1})] {
        let (status, v) = call(&store, "POST", &format!("/sessions/{id}/feedback"), Some(bad)).await;
        assert_eq!((status, v["code"].as_str()), (StatusCode::BAD_REQUEST, Some("malformed_body")));
    }
}

#[tokio::test]
async fn budget_exhaustion_stops_the_session() {
    let store = Arc::new(Store::in_memory());
    let id = create(&store, create_body("homegrid", "maple_top", 1, 0)).await;
    let (_, q) = call(&store, "GET", &format!("/sessions/{id}/query"), None).await;
    assert!(q["first"]["episode"].is_object());
    let (status, fb) = call(&store, "POST", &format!("/sessions/{id}/feedback"), Some(json!({"choice": "second"}))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!((fb["state"].as_str(), fb["iteration"].as_u64()), (Some("stopped"), Some(1)));
    let (status, v) = call(&store, "GET", &format!("/sessions/{id}/query"), None).await;
    assert_eq!((status, v["code"].as_str()), (StatusCode::CONFLICT, Some("session_stopped")));
    assert!(v["message"].as_str().unwrap().contains("session stopped"));
}

#[tokio::test]
async fn skipped_pairs_are_not_asked_again() {
    let store = Arc::new(Store::in_memory());
    let id = create(&store, create_body("routing", "maple_top", 5, 2)).await;
    let (_, skipped) = call(&store, "GET", &format!("/sessions/{id}/query"), None).await;
    let body = json!({"choice": "skip", "difficulty": "they look identical"});
    let (_, fb) = call(&store, "POST", &format!("/sessions/{id}/feedback"), Some(body)).await;
    assert_eq!(fb["iteration"], 1);
    let pair = |q: &Value| {
        let mut p = [q["first"]["id"].as_str().unwrap().to_owned(), q["second"]["id"].as_str().unwrap().to_owned()];
        p.sort();
        p
    };
    for _ in 0..4 {
        let (_, q) = call(&store, "GET", &format!("/sessions/{id}/query"), None).await;
        assert_ne!(pair(&q), pair(&skipped));
        call(&store, "POST", &format!("/sessions/{id}/feedback"), Some(json!({"choice": "first"}))).await;
    }
}

#[tokio::test]
async fn stop_is_idempotent_and_reports_ground_truth_metrics() {
    let store = Arc::new(Store::in_memory());
    let (_, created) = call(&store, "POST", "/sessions", Some(create_body("routing", "maple_oaqs", 4, 0))).await;
    let id = created["session_id"].as_str().unwrap();
    let (status, a) = call(&store, "POST", &format!("/sessions/{id}/stop"), None).await;
    assert_eq!(status, StatusCode::OK);
    let (_, b) = call(&store, "POST", &format!("/sessions/{id}/stop"), None).await;
    assert_eq!(a, b);
    assert_eq!(a["final_map"], created["posterior"]["map"]);
    assert!(a["records"].as_array().unwrap().is_empty());
    assert!(a["final_metrics"]["cosine_distance"].is_f64());

    let free = json!({"env": {"kind": "homegrid"}, "instruction": "Keep things tidy.", "method": "maple_random", "budget": 2});
    let id = create(&store, free).await;
    call(&store, "GET", &format!("/sessions/{id}/query"), None).await;
    call(&store, "POST", &format!("/sessions/{id}/feedback"), Some(json!({"choice": "first", "explanation": "shorter is better"}))).await;
    let (_, r) = call(&store, "POST", &format!("/sessions/{id}/stop"), None).await;
    assert!(r["final_metrics"]["cosine_distance"].is_null());
    assert_eq!(r["records"].as_array().unwrap().len(), 1);
}

#[tokio::test]
async fn first_query_matches_the_library_selection() {
    let store = Arc::new(Store::in_memory());
    let id = create(&store, create_body("routing", "maple_oaqs", 3, 7)).await;
    let (_, q) = call(&store, "GET", &format!("/sessions/{id}/query"), None).await;

    let mut cfg = SessionConfig::new(EnvSpec::new(EnvKind::Routing, 0), Some("natural-01".into()), Method::MapleOaqs, 3, 7);
    cfg.oracle = OracleSpec::Mock(MockParams { y0: 0.62, y1: 0.72, ..MockParams::default() });
    let mut local = Store::in_memory().start(cfg, None).unwrap();
    let p = local.next_query().unwrap();
    assert_eq!(q["first"]["id"], p.query.first.as_str());
    assert_eq!(q["second"]["id"], p.query.second.as_str());
    assert_eq!(q["rank"].as_u64(), p.rank.map(|r| r as u64));
    assert_eq!(q["oracle_calls"].as_u64(), Some(p.oracle_calls as u64));
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_queries_share_one_outstanding_pair() {
    let store = Arc::new(Store::in_memory());
    let id = create(&store, create_body("routing", "maple_oaqs", 3, 3)).await;
    let calls = (0..8).map(|_| {
        let (store, uri) = (Arc::clone(&store), format!("/sessions/{id}/query"));
        tokio::spawn(async move { call(&store, "GET", &uri, None).await.1 })
    });
    let mut seen = Vec::new();
    for c in calls {
        seen.push(c.await.unwrap());
    }
    assert!(seen.windows(2).all(|w| w[0] == w[1]));
    let (_, s) = call(&store, "GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(s["iteration"], 0);
}

#[tokio::test]
async fn persisted_sessions_survive_a_restart() {
    let dir = tempfile::tempdir().unwrap();
    let store = Arc::new(Store::persistent(dir.path()).unwrap());
    let twin = Arc::new(Store::in_memory());
    let id = create(&store, create_body("routing", "maple_oaqs", 4, 5)).await;
    let twin_id = create(&twin, create_body("routing", "maple_oaqs", 4, 5)).await;
    for (s, i) in [(&store, &id), (&twin, &twin_id)] {
        call(s, "GET", &format!("/sessions/{i}/query"), None).await;
        call(s, "POST", &format!("/sessions/{i}/feedback"), Some(json!({"choice": "first", "explanation": "I like parks"}))).await;
        call(s, "GET", &format!("/sessions/{i}/query"), None).await;
    }
    drop(store);
    let reopened = Arc::new(Store::persistent(dir.path()).unwrap());
    assert_eq!(reopened.len(), 1);
    let (_, s) = call(&reopened, "GET", &format!("/sessions/{id}"), None).await;
    assert_eq!((s["state"].as_str(), s["iteration"].as_u64()), (Some("awaiting_feedback"), Some(1)));
    for _ in 0..3 {
        let (_, a) = call(&reopened, "GET", &format!("/sessions/{id}/query"), None).await;
        let (_, b) = call(&twin, "GET", &format!("/sessions/{twin_id}/query"), None).await;
        assert_eq!(a["first"], b["first"]);
        assert_eq!(a["second"], b["second"]);
        let (_, fa) = call(&reopened, "POST", &format!("/sessions/{id}/feedback"), Some(json!({"choice": "second"}))).await;
        let (_, fb) = call(&twin, "POST", &format!("/sessions/{twin_id}/feedback"), Some(json!({"choice": "second"}))).await;
        assert_eq!(fa["posterior"], fb["posterior"]);
        if fa["state"] == "stopped" {
            break;
        }
    }
}
