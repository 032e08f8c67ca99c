//! The OpenAI-compatible backend against a scripted local server.

mod common;

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::thread;

use asap::harness::{run_summarization, ExperimentConfig, RecordStatus, Task};
use asap::llm::{ApiMode, Backend, Cache, Client, HttpBackend, ModelParams, RetryPolicy};
use asap::{corpus::Language, Error};
use serde_json::{json, Value};

#[derive(Debug, Clone)]
struct Seen {
    path: String,
    auth: Option<String>,
    body: Value,
}

struct Server {
    endpoint: String,
    seen: Arc<Mutex<Vec<Seen>>>,
}

/// Serves one scripted `(status, extra headers, body)` per connection; the
/// last entry repeats once the script runs out.
fn serve(script: Vec<(u16, &'static str, String)>) -> Server {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let endpoint = format!("http://{}/v1", listener.local_addr().unwrap());
    let seen = Arc::new(Mutex::new(Vec::new()));
    let log = Arc::clone(&seen);
    thread::spawn(move || {
        for (n, stream) in listener.incoming().enumerate() {
            let Ok(mut stream) = stream else { break };
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut request_line = String::new();
            reader.read_line(&mut request_line).unwrap();
            let mut length = 0;
            let mut auth = None;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                let line = line.trim_end();
                if line.is_empty() {
                    break;
                }
                let (k, v) = line.split_once(':').unwrap();
                match k.to_ascii_lowercase().as_str() {
                    "content-length" => length = v.trim().parse().unwrap(),
                    "authorization" => auth = Some(v.trim().to_string()),
                    _ => {}
                }
            }
            let mut body = vec![0; length];
            reader.read_exact(&mut body).unwrap();
            log.lock().unwrap().push(Seen {
                path: request_line.split_whitespace().nth(1).unwrap_or_default().to_string(),
                auth,
                body: serde_json::from_slice(&body).unwrap_or(Value::Null),
            });
            let (status, headers, text) = &script[n.min(script.len() - 1)];
            let response = format!(
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n{headers}\r\n{text}",
                text.len()
            );
            let _ = stream.write_all(response.as_bytes());
        }
    });
    Server { endpoint, seen }
}

fn completion(text: &str) -> String {
    json!({"choices": [{"text": text, "finish_reason": "stop"}]}).to_string()
}

fn fast_retry(max_attempts: u32) -> RetryPolicy {
    RetryPolicy { max_attempts, base_delay_ms: 1, max_delay_ms: 4, jitter: 0.0, timeout_secs: 10 }
}

fn params(server: &Server) -> ModelParams {
    ModelParams { endpoint: server.endpoint.clone(), ..ModelParams::summarization() }
}

#[test]
fn retries_rate_limits_and_server_errors() {
    let server = serve(vec![
        (429, "Retry-After: 0\r\n", "{}".into()),
        (500, "", "oops".into()),
        (200, "", completion(" Adds two numbers.")),
    ]);
    let backend = HttpBackend::with_key(fast_retry(6), Some("sk-test".into())).unwrap();
    let raw = backend.complete("PROMPT", &params(&server)).unwrap();
    assert_eq!(raw.text, " Adds two numbers.");
    let seen = server.seen.lock().unwrap().clone();
    assert_eq!(seen.len(), 3);
    assert_eq!(seen[2].path, "/v1/completions");
    assert_eq!(seen[2].auth.as_deref(), Some("Bearer sk-test"));
    assert_eq!(seen[2].body["prompt"], "PROMPT");
    assert_eq!(seen[2].body["temperature"], 0.0);
    assert_eq!(seen[2].body["stop"], json!(["\n\n"]));
}

#[test]
fn authentication_failures_are_not_retried() {
    let server = serve(vec![(401, "", "{}".into())]);
    let backend = HttpBackend::with_key(fast_retry(6), None).unwrap();
    let err = backend.complete("P", &params(&server)).unwrap_err();
    assert!(matches!(err, Error::Authentication { status: 401 }), "{err}");
    assert_eq!(server.seen.lock().unwrap().len(), 1);
    assert!(server.seen.lock().unwrap()[0].auth.is_none());
}

#[test]
fn other_client_errors_fail_at_once() {
    let server = serve(vec![(400, "", "{\"error\": \"bad\"}".into())]);
    let backend = HttpBackend::with_key(fast_retry(6), None).unwrap();
    let err = backend.complete("P", &params(&server)).unwrap_err();
    assert!(matches!(err, Error::Http(_)), "{err}");
    assert_eq!(server.seen.lock().unwrap().len(), 1);
}

#[test]
fn retries_run_out() {
    let server = serve(vec![(503, "", "busy".into())]);
    let backend = HttpBackend::with_key(fast_retry(3), None).unwrap();
    match backend.complete("P", &params(&server)).unwrap_err() {
        Error::RetriesExhausted { attempts, last } => {
            assert_eq!(attempts, 3);
            assert!(last.contains("503"), "{last}");
        }
        other => panic!("unexpected {other}"),
    }
    assert_eq!(server.seen.lock().unwrap().len(), 3);
}

#[test]
fn chat_mode_reads_message_content() {
    let body = json!({"choices": [{"message": {"role": "assistant", "content": "Hi."}, "finish_reason": "length"}]});
    let server = serve(vec![(200, "", body.to_string())]);
    let backend = HttpBackend::with_key(fast_retry(1), None).unwrap();
    let p = ModelParams { api_mode: ApiMode::Chat, ..params(&server) };
    let raw = backend.complete("P", &p).unwrap();
    assert_eq!(raw.text, "Hi.");
    let seen = server.seen.lock().unwrap().clone();
    assert_eq!(seen[0].path, "/v1/chat/completions");
    assert_eq!(seen[0].body["messages"][0]["content"], "P");
}

#[test]
fn empty_output_is_an_error_and_cache_avoids_repeats() {
    let server = serve(vec![(200, "", completion("  \n")), (200, "", completion("Text."))]);
    let dir = tempfile::tempdir().unwrap();
    let client = Client::new(Box::new(HttpBackend::with_key(fast_retry(1), None).unwrap()))
        .with_cache(Cache::open(dir.path()).unwrap());
    let p = params(&server);
    assert!(matches!(client.complete("A", &p), Err(Error::EmptyCompletion)));
    // The empty answer is cached too, and still reported as empty.
    assert!(matches!(client.complete("A", &p), Err(Error::EmptyCompletion)));
    assert_eq!(client.backend_calls(), 1);

    let first = client.complete("B", &p).unwrap();
    let second = client.complete("B", &p).unwrap();
    assert!(!first.cached && second.cached);
    assert_eq!(first.text, second.text);
    assert_eq!(first.request_hash, second.request_hash);
    assert_eq!(client.backend_calls(), 2);
    assert_eq!(server.seen.lock().unwrap().len(), 2);
}

fn http_config(server: &Server, dir: &std::path::Path) -> ExperimentConfig {
    let pool = dir.join("pool.jsonl");
    common::write_pool(&asap::synth::pool(Language::Java, 12, 2), &pool);
    let mut config = ExperimentConfig {
        test_pool: pool,
        language: Language::Java,
        workers: 2,
        output_dir: dir.join("out"),
        retry: fast_retry(2),
        ..ExperimentConfig::for_task(Task::Summarize)
    };
    config.model.endpoint = server.endpoint.clone();
    config
}

#[test]
fn summarization_run_over_http() {
    let server = serve(vec![(200, "", completion(" Returns the value.\n\nExtra paragraph."))]);
    let dir = tempfile::tempdir().unwrap();
    let config = http_config(&server, dir.path());
    let client = Client::new(Box::new(HttpBackend::with_key(config.retry.clone(), None).unwrap()));
    let (records, report) = run_summarization(&config, &client).unwrap();
    assert_eq!(report.backend, "http");
    assert_eq!(records.len(), 12);
    assert!(records.iter().all(|r| r.status == RecordStatus::Ok));
    assert!(records.iter().all(|r| r.prediction.as_deref() == Some("Returns the value.")));
    assert_eq!(server.seen.lock().unwrap().len(), 12);
    let prompt = server.seen.lock().unwrap()[0].body["prompt"].as_str().unwrap().to_string();
    assert!(prompt.ends_with("Summary:"));
    assert!(prompt.contains("# Repository:"));
}

#[test]
fn authentication_failure_aborts_the_run() {
    let server = serve(vec![(403, "", "{}".into())]);
    let dir = tempfile::tempdir().unwrap();
    let config = http_config(&server, dir.path());
    let client = Client::new(Box::new(HttpBackend::with_key(config.retry.clone(), None).unwrap()));
    let err = run_summarization(&config, &client).unwrap_err();
    assert!(matches!(err, Error::Authentication { status: 403 }), "{err}");
    assert!(!config.output_dir.join("report.json").exists());
}
