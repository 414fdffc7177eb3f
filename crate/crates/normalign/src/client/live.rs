//! Live client for OpenAI-compatible chat-completions endpoints.
//!
//! Each query requests exactly one output token at temperature zero with
//! log-probability alternatives enabled; the response's first-position
//! alternatives become the token distribution.

use serde::{Deserialize, Serialize};

use super::{Backend, BackendConfig, DistributionSource, QueryError, TokenDistribution};

pub struct LiveClient {
    config: BackendConfig,
    http: reqwest::blocking::Client,
    api_key: Option<String>,
}

impl LiveClient {
    pub fn new(config: BackendConfig) -> Result<Self, QueryError> {
        let http = reqwest::blocking::Client::builder()
            .timeout(std::time::Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| QueryError::InvalidConfig(e.to_string()))?;
        let api_key = std::env::var(&config.api_key_env).ok();
        Ok(Self {
            config,
            http,
            api_key,
        })
    }

    fn url(&self) -> String {
        let base = self.config.endpoint.trim_end_matches('/');
        if base.ends_with("/chat/completions") {
            base.to_string()
        } else {
            format!("{base}/chat/completions")
        }
    }

    fn attempt(&self, prompt: &str) -> Result<TokenDistribution, QueryError> {
        let body = ChatRequest {
            model: &self.config.model,
            messages: vec![Message {
                role: "user",
                content: prompt,
            }],
            temperature: self.config.temperature,
            max_tokens: 1,
            logprobs: true,
            top_logprobs: self.config.top_logprobs,
        };
        let mut request = self.http.post(self.url()).json(&body);
        if let Some(key) = &self.api_key {
            request = request.bearer_auth(key);
        }
        let response = request
            .send()
            .map_err(|e| QueryError::Network(e.to_string()))?;
        let status = response.status().as_u16();
        let text = response
            .text()
            .map_err(|e| QueryError::Network(e.to_string()))?;
        if status != 200 {
            return Err(QueryError::Http { status, body: text });
        }
        let parsed: ChatResponse = serde_json::from_str(&text)
            .map_err(|e| QueryError::InvalidDistribution(format!("bad response body: {e}")))?;
        let choice = parsed
            .choices
            .into_iter()
            .next()
            .ok_or(QueryError::LogprobsUnsupported)?;
        let alternatives = choice
            .logprobs
            .and_then(|lp| lp.content.into_iter().next())
            .map(|pos| pos.top_logprobs)
            .unwrap_or_default();
        if alternatives.is_empty() {
            return Err(QueryError::LogprobsUnsupported);
        }
        TokenDistribution::from_logprobs(
            alternatives.into_iter().map(|alt| (alt.token, alt.logprob)),
            DistributionSource::Live,
        )
    }

    fn backoff(&self, attempt: usize) -> std::time::Duration {
        let schedule = &self.config.backoff_ms;
        let ms = if schedule.is_empty() {
            0
        } else {
            schedule[attempt.min(schedule.len() - 1)]
        };
        std::time::Duration::from_millis(ms)
    }
}

impl Backend for LiveClient {
    /// At most `1 + max_retries` attempts; only retryable failures
    /// (network errors, 429, 5xx) consume the budget.
    fn query_first_token(&self, prompt: &str) -> Result<TokenDistribution, QueryError> {
        let mut last = None;
        for attempt in 0..=self.config.max_retries as usize {
            match self.attempt(prompt) {
                Ok(d) => return Ok(d),
                Err(e) if e.is_retryable() => {
                    last = Some(e);
                    if attempt < self.config.max_retries as usize {
                        std::thread::sleep(self.backoff(attempt));
                    }
                }
                Err(e) => return Err(e),
            }
        }
        Err(last.unwrap_or(QueryError::Network("no attempts made".to_string())))
    }
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: Vec<Message<'a>>,
    temperature: f64,
    max_tokens: u32,
    logprobs: bool,
    top_logprobs: u8,
}

#[derive(Serialize)]
struct Message<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    #[serde(default)]
    logprobs: Option<Logprobs>,
}

#[derive(Deserialize)]
struct Logprobs {
    #[serde(default)]
    content: Vec<TokenPosition>,
}

#[derive(Deserialize)]
struct TokenPosition {
    #[serde(default)]
    top_logprobs: Vec<Alternative>,
}

#[derive(Deserialize)]
struct Alternative {
    token: String,
    logprob: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{Read, Write};
    use std::net::TcpListener;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    /// Minimal HTTP/1.1 fixture: serves one canned (status, body) per
    /// accepted connection, cycling through the script, and counts requests.
    fn serve_script(script: Vec<(u16, String)>) -> (String, Arc<AtomicUsize>, std::thread::JoinHandle<()>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let hits = Arc::new(AtomicUsize::new(0));
        let hits_in_thread = Arc::clone(&hits);
        let handle = std::thread::spawn(move || {
            for (status, body) in script {
                let (mut stream, _) = listener.accept().unwrap();
                let mut buf = Vec::new();
                let mut chunk = [0u8; 4096];
                // Read headers, then the Content-Length body.
                let body_len = loop {
                    let n = stream.read(&mut chunk).unwrap();
                    buf.extend_from_slice(&chunk[..n]);
                    if let Some(pos) = find_header_end(&buf) {
                        let headers = String::from_utf8_lossy(&buf[..pos]).to_lowercase();
                        let len = headers
                            .lines()
                            .find_map(|l| l.strip_prefix("content-length:"))
                            .and_then(|v| v.trim().parse::<usize>().ok())
                            .unwrap_or(0);
                        break (pos + 4, len);
                    }
                };
                while buf.len() < body_len.0 + body_len.1 {
                    let n = stream.read(&mut chunk).unwrap();
                    buf.extend_from_slice(&chunk[..n]);
                }
                hits_in_thread.fetch_add(1, Ordering::SeqCst);
                let reason = if status == 200 { "OK" } else { "Error" };
                let response = format!(
                    "HTTP/1.1 {status} {reason}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                    body.len()
                );
                stream.write_all(response.as_bytes()).unwrap();
            }
        });
        (format!("http://{addr}/v1"), hits, handle)
    }

    fn find_header_end(buf: &[u8]) -> Option<usize> {
        buf.windows(4).position(|w| w == b"\r\n\r\n")
    }

    fn ok_body(pairs: &[(&str, f64)]) -> String {
        let alts: Vec<String> = pairs
            .iter()
            .map(|(t, lp)| format!(r#"{{"token":{},"logprob":{lp}}}"#, serde_json::to_string(t).unwrap()))
            .collect();
        format!(
            r#"{{"id":"c1","object":"chat.completion","model":"m","choices":[{{"index":0,"message":{{"role":"assistant","content":"7"}},"logprobs":{{"content":[{{"token":"7","logprob":-0.1,"top_logprobs":[{}]}}]}},"finish_reason":"length"}}]}}"#,
            alts.join(",")
        )
    }

    fn test_config(endpoint: &str) -> BackendConfig {
        let mut config = BackendConfig::new(endpoint, "test-model");
        config.max_retries = 2;
        config.backoff_ms = vec![0];
        config.api_key_env = "NORMALIGN_TEST_KEY_UNSET".to_string();
        config
    }

    #[test]
    fn parses_first_position_alternatives() {
        let (endpoint, hits, handle) =
            serve_script(vec![(200, ok_body(&[("7", -0.3), (" 7", -2.0), ("8", -3.0)]))]);
        let client = LiveClient::new(test_config(&endpoint)).unwrap();
        let d = client.query_first_token("rate this").unwrap();
        handle.join().unwrap();
        assert_eq!(hits.load(Ordering::SeqCst), 1);
        assert_eq!(d.source(), DistributionSource::Live);
        assert_eq!(d.entries().len(), 3);
        assert!((d.entries()["7"] - (-0.3f64).exp()).abs() < 1e-12);
        assert!(d.entries().contains_key(" 7"));
    }

    #[test]
    fn missing_alternatives_is_logprobs_unsupported() {
        let body = r#"{"id":"c1","object":"chat.completion","model":"m","choices":[{"index":0,"message":{"role":"assistant","content":"7"},"logprobs":null,"finish_reason":"stop"}]}"#;
        let (endpoint, _, handle) = serve_script(vec![(200, body.to_string())]);
        let client = LiveClient::new(test_config(&endpoint)).unwrap();
        let err = client.query_first_token("rate this").unwrap_err();
        handle.join().unwrap();
        assert!(matches!(err, QueryError::LogprobsUnsupported));
    }

    #[test]
    fn retries_server_errors_then_succeeds() {
        let (endpoint, hits, handle) = serve_script(vec![
            (500, r#"{"error":"boom"}"#.to_string()),
            (429, r#"{"error":"slow down"}"#.to_string()),
            (200, ok_body(&[("4", -0.1)])),
        ]);
        let client = LiveClient::new(test_config(&endpoint)).unwrap();
        let d = client.query_first_token("rate this").unwrap();
        handle.join().unwrap();
        assert_eq!(hits.load(Ordering::SeqCst), 3, "two retries then success");
        assert!(d.entries().contains_key("4"));
    }

    #[test]
    fn exhausted_retries_surface_the_last_error() {
        let (endpoint, hits, handle) = serve_script(vec![
            (503, "a".to_string()),
            (503, "b".to_string()),
            (503, "c".to_string()),
        ]);
        let client = LiveClient::new(test_config(&endpoint)).unwrap();
        let err = client.query_first_token("rate this").unwrap_err();
        handle.join().unwrap();
        // max_retries = 2 means exactly 3 attempts.
        assert_eq!(hits.load(Ordering::SeqCst), 3);
        assert!(matches!(err, QueryError::Http { status: 503, .. }));
    }

    #[test]
    fn client_errors_are_not_retried() {
        let (endpoint, hits, handle) = serve_script(vec![(400, r#"{"error":"bad"}"#.to_string())]);
        let client = LiveClient::new(test_config(&endpoint)).unwrap();
        let err = client.query_first_token("rate this").unwrap_err();
        handle.join().unwrap();
        assert_eq!(hits.load(Ordering::SeqCst), 1);
        assert!(matches!(err, QueryError::Http { status: 400, .. }));
    }

    #[test]
    fn unreachable_endpoint_is_a_network_error() {
        // Bind then drop to get a port nothing listens on.
        let port = {
            let l = TcpListener::bind("127.0.0.1:0").unwrap();
            l.local_addr().unwrap().port()
        };
        let mut config = test_config(&format!("http://127.0.0.1:{port}/v1"));
        config.max_retries = 1;
        let client = LiveClient::new(config).unwrap();
        let err = client.query_first_token("rate this").unwrap_err();
        assert!(matches!(err, QueryError::Network(_)));
    }
}
