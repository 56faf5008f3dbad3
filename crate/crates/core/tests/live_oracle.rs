use std::collections::VecDeque;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};

use conceptpref::domain::Query;
use conceptpref::envs::routing::routing_catalog;
use conceptpref::envs::EnvKind;
use conceptpref::oracles::{LanguageOracle, LiveOracle, OracleConfig, PromptBundle};
use conceptpref::Error;
use serde_json::{json, Value};

struct Request {
    headers: Vec<String>,
    body: Value,
}

/// A chat-completions stand-in serving scripted `(status, body)` replies in
/// order, then 500s.
struct Stub {
    url: String,
    seen: Arc<Mutex<Vec<Request>>>,
}

fn completion(content: &str) -> String {
    json!({"choices": [{"message": {"role": "assistant", "content": content}}]}).to_string()
}

fn stub(replies: Vec<(u16, String)>) -> Stub {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
    let seen = Arc::new(Mutex::new(Vec::new()));
    let queue = Arc::new(Mutex::new(VecDeque::from(replies)));
    let log = Arc::clone(&seen);
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { break };
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut headers = Vec::new();
            let mut len = 0;
            loop {
                let mut line = String::new();
                if reader.read_line(&mut line).unwrap_or(0) == 0 {
                    break;
                }
                let line = line.trim_end().to_string();
                if line.is_empty() {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap();
                }
                headers.push(line);
            }
            let mut body = vec![0; len];
            reader.read_exact(&mut body).unwrap();
            log.lock().unwrap().push(Request { headers, body: serde_json::from_slice(&body).unwrap_or(Value::Null) });
            let (status, text) = queue.lock().unwrap().pop_front().unwrap_or((500, "exhausted".into()));
            let resp = format!(
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{text}",
                text.len()
            );
            let _ = stream.write_all(resp.as_bytes());
        }
    });
    Stub { url, seen }
}

fn oracle(url: &str, retries: u32, key_env: &str) -> LiveOracle {
    LiveOracle::new(OracleConfig {
        endpoint: url.into(),
        model_name: "stub-model".into(),
        max_retries: retries,
        timeout_secs: 5.0,
        api_key_env: key_env.into(),
        retry_backoff_ms: 1,
        ..OracleConfig::default()
    })
    .unwrap()
}

fn bundle() -> PromptBundle {
    PromptBundle::for_env(EnvKind::Routing, &routing_catalog(), "Avoid highways.", &[]).unwrap()
}

fn weights_reply() -> String {
    let names: Vec<String> = routing_catalog().names().map(str::to_owned).collect();
    completion(&format!("Here you go:\n```json\n{{\"{}\": 3, \"{}\": 4}}\n```", names[0], names[1]))
}

#[test]
fn weights_are_parsed_and_projected() {
    let s = stub(vec![(200, weights_reply())]);
    let w = oracle(&s.url, 0, "CP_TEST_NO_KEY").sample_weights(&bundle(), 1, 0).unwrap();
    assert_eq!(w.len(), 1);
    let v = w[0].as_slice();
    assert!((v[0] - 0.6).abs() < 1e-12 && (v[1] - 0.8).abs() < 1e-12);
    assert!(v[2..].iter().all(|&x| x == 0.0));
    let seen = s.seen.lock().unwrap();
    assert_eq!(seen[0].body["model"], "stub-model");
    assert_eq!(seen[0].body["temperature"], 1.0);
    assert!(seen[0].body["messages"].as_array().is_some_and(|m| !m.is_empty()));
    assert!(!seen[0].headers.iter().any(|h| h.to_ascii_lowercase().starts_with("authorization")));
}

#[test]
fn server_errors_are_retried() {
    let s = stub(vec![(503, "busy".into()), (200, completion("not json at all")), (200, weights_reply())]);
    let w = oracle(&s.url, 2, "CP_TEST_NO_KEY").sample_weights(&bundle(), 1, 0).unwrap();
    assert_eq!(w.len(), 1);
    assert_eq!(s.seen.lock().unwrap().len(), 3);
}

#[test]
fn exhausted_retries_surface_the_last_error() {
    let s = stub(vec![(503, "busy".into()), (429, "slow down".into())]);
    let e = oracle(&s.url, 1, "CP_TEST_NO_KEY").sample_ranges(&bundle(), 0).unwrap_err();
    match e {
        Error::Oracle(msg) => assert!(msg.contains("HTTP 429") && msg.contains("slow down"), "{msg}"),
        other => panic!("unexpected {other:?}"),
    }
    assert_eq!(s.seen.lock().unwrap().len(), 2);
}

#[test]
fn malformed_envelope_is_an_oracle_error() {
    let s = stub(vec![(200, "{\"choices\": []}".into())]);
    let e = oracle(&s.url, 0, "CP_TEST_NO_KEY").sample_ranges(&bundle(), 0).unwrap_err();
    assert!(e.to_string().contains("choices[0]"), "{e}");
}

#[test]
fn unreachable_endpoint_fails_cleanly() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let o = oracle(&format!("http://127.0.0.1:{port}/v1/chat/completions"), 0, "CP_TEST_NO_KEY");
    assert!(matches!(o.sample_weights(&bundle(), 2, 0), Err(Error::Oracle(_))));
}

#[test]
fn failed_samples_are_dropped() {
    let s = stub(vec![(200, weights_reply()), (200, completion("no idea")), (200, weights_reply())]);
    let w = oracle(&s.url, 0, "CP_TEST_NO_KEY").sample_weights(&bundle(), 3, 0).unwrap();
    assert_eq!(w.len(), 2);
}

#[test]
fn ranges_parse_with_defaults() {
    let names: Vec<String> = routing_catalog().names().map(str::to_owned).collect();
    let reply = completion(&format!("{{\"{}\": [0.7, 0.2], \"{}\": {{\"min\": 0.1, \"max\": 0.3}}}}", names[0], names[1]));
    let s = stub(vec![(200, reply)]);
    let r = oracle(&s.url, 0, "CP_TEST_NO_KEY").sample_ranges(&bundle(), 0).unwrap();
    assert_eq!((r[0].min, r[0].max), (0.2, 0.7));
    assert_eq!((r[1].min, r[1].max), (0.1, 0.3));
    assert!(r[2..].iter().all(|i| i.min == 0.0 && i.max == 1.0));
}

#[test]
fn judge_is_greedy_and_authenticated() {
    std::env::set_var("CP_TEST_KEY", "sk-test");
    let s = stub(vec![(200, completion("**YES** - clearly different")), (200, completion("No."))]);
    let o = oracle(&s.url, 0, "CP_TEST_KEY");
    let q = Query::new("a", "b").unwrap();
    assert!(o.judge_answerable(&bundle(), &[], &q, ("route A", "route B"), 0).unwrap());
    assert!(!o.judge_answerable(&bundle(), &[], &q, ("route A", "route B"), 1).unwrap());
    let seen = s.seen.lock().unwrap();
    assert_eq!(seen[0].body["temperature"], 0.0);
    assert!(seen[0].headers.iter().any(|h| h == "authorization: Bearer sk-test" || h == "Authorization: Bearer sk-test"));
    let prompt = seen[0].body["messages"].to_string();
    assert!(prompt.contains("route A") && prompt.contains("route B"));
}
