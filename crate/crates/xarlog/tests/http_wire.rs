// SPDX-License-Identifier: Apache-2.0

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::thread;
use std::time::Duration;

use rand::rngs::StdRng;
use rand::SeedableRng;
use xarlog::config::{BackendConfig, BackendKind};
use xarlog::gateway::{Gateway, GatewayError, Sleeper, UreqTransport};

struct NoSleep;

impl Sleeper for NoSleep {
    fn sleep(&self, _: Duration) {}
}

struct Seen {
    request_line: String,
    headers: Vec<(String, String)>,
    body: String,
}

/// Answers one connection per scripted `(status, body)` and returns what it saw.
fn serve(script: Vec<(u16, &'static str)>) -> (String, thread::JoinHandle<Vec<Seen>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
    let handle = thread::spawn(move || {
        let mut seen = Vec::new();
        for (status, body) in script {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut request_line = String::new();
            reader.read_line(&mut request_line).unwrap();
            let mut headers = Vec::new();
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                let line = line.trim_end();
                if line.is_empty() {
                    break;
                }
                let (k, v) = line.split_once(':').unwrap();
                headers.push((k.trim().to_ascii_lowercase(), v.trim().to_string()));
            }
            let len: usize = headers
                .iter()
                .find(|(k, _)| k == "content-length")
                .map(|(_, v)| v.parse().unwrap())
                .unwrap_or(0);
            let mut buf = vec![0; len];
            reader.read_exact(&mut buf).unwrap();
            seen.push(Seen {
                request_line: request_line.trim_end().into(),
                headers,
                body: String::from_utf8(buf).unwrap(),
            });
            let mut stream = stream;
            write!(
                stream,
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            )
            .unwrap();
        }
        seen
    });
    (url, handle)
}

fn backend(url: &str, max_retries: u32) -> BackendConfig {
    BackendConfig {
        id: "local".into(),
        kind: BackendKind::HttpChat,
        endpoint_url: Some(url.into()),
        fixture_path: None,
        model_name: "alpaca-7b".into(),
        max_tokens: 128,
        temperature: 0.0,
        timeout: 5.0,
        max_retries,
    }
}

fn gateway(key: Option<&str>) -> Gateway {
    Gateway::new(Box::new(UreqTransport), Box::new(NoSleep), StdRng::seed_from_u64(1), key.map(String::from))
}

const OK: &str = r#"{"id":"x","choices":[{"index":0,"message":{"role":"assistant","content":"The robot checked the door."},"finish_reason":"stop"}]}"#;

#[test]
fn retries_then_parses_openai_reply() {
    let (url, server) = serve(vec![(429, "{}"), (429, "{}"), (200, OK)]);
    let x = gateway(Some("sk-local")).complete(&backend(&url, 3), "why?").unwrap();
    let resp = x.response.unwrap();
    assert_eq!(resp.content, "The robot checked the door.");
    assert_eq!(resp.finish_reason, "stop");
    assert_eq!(resp.attempts, 3);

    let seen = server.join().unwrap();
    assert_eq!(seen.len(), 3);
    let first = &seen[0];
    assert_eq!(first.request_line, "POST /v1/chat/completions HTTP/1.1");
    assert!(first
        .headers
        .iter()
        .any(|(k, v)| k == "authorization" && v == "Bearer sk-local"));
    assert!(first
        .headers
        .iter()
        .any(|(k, v)| k == "content-type" && v.starts_with("application/json")));
    let body: serde_json::Value = serde_json::from_str(&first.body).unwrap();
    assert_eq!(
        body,
        serde_json::json!({
            "model": "alpaca-7b",
            "messages": [{"role": "user", "content": "why?"}],
            "max_tokens": 128,
            "temperature": 0.0
        })
    );
}

#[test]
fn unauthorized_is_not_retried() {
    let (url, server) = serve(vec![(401, r#"{"error":"bad key"}"#)]);
    let err = gateway(Some("wrong")).complete(&backend(&url, 4), "p").unwrap_err();
    assert_eq!(err.error, GatewayError::AuthError { status: 401 });
    assert_eq!(server.join().unwrap().len(), 1);
}

#[test]
fn no_key_means_no_header() {
    let (url, server) = serve(vec![(200, OK)]);
    gateway(None).complete(&backend(&url, 0), "p").unwrap();
    let seen = server.join().unwrap();
    assert!(!seen[0].headers.iter().any(|(k, _)| k == "authorization"));
}

#[test]
fn server_error_without_retries() {
    let (url, server) = serve(vec![(500, "{}")]);
    let err = gateway(None).complete(&backend(&url, 0), "p").unwrap_err();
    assert!(matches!(err.error, GatewayError::BackendUnavailable { attempts: 1, .. }));
    server.join().unwrap();
}
