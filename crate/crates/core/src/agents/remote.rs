//! Chat-completions client for remote models.
//!
//! Requests use the common `messages` + `usage` wire shape, which both
//! OpenAI-compatible servers and Gemini's compatibility endpoint accept.
//! Native Gemini `candidates`/`usageMetadata` bodies are also understood.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{Agent, AgentContext, AgentError, AgentResponse, TokenUsage};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndpointConfig {
    /// e.g. `https://generativelanguage.googleapis.com/v1beta/openai`
    pub base_url: String,
    pub model: String,
    /// Name of the environment variable holding the API key.
    #[serde(default)]
    pub api_key_env: Option<String>,
    #[serde(default)]
    pub temperature: Option<f64>,
    #[serde(default)]
    pub max_output_tokens: Option<u32>,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default = "default_initial_backoff")]
    pub initial_backoff_ms: u64,
    #[serde(default = "default_max_backoff")]
    pub max_backoff_ms: u64,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default = "default_concurrency")]
    pub max_concurrent: usize,
    /// Optional JSONL file receiving every exchange.
    #[serde(default)]
    pub transcript: Option<PathBuf>,
}

fn default_retries() -> u32 {
    3
}
fn default_initial_backoff() -> u64 {
    500
}
fn default_max_backoff() -> u64 {
    30_000
}
fn default_timeout() -> u64 {
    600
}
fn default_concurrency() -> usize {
    4
}

impl EndpointConfig {
    pub fn new(base_url: impl Into<String>, model: impl Into<String>) -> Self {
        EndpointConfig {
            base_url: base_url.into(),
            model: model.into(),
            api_key_env: None,
            temperature: None,
            max_output_tokens: None,
            max_retries: default_retries(),
            initial_backoff_ms: default_initial_backoff(),
            max_backoff_ms: default_max_backoff(),
            timeout_secs: default_timeout(),
            max_concurrent: default_concurrency(),
            transcript: None,
        }
    }

    /// Reads a TOML or JSON endpoint file (chosen by extension, TOML default).
    pub fn load(path: &std::path::Path) -> Result<Self, AgentError> {
        let text = std::fs::read_to_string(path).map_err(|e| AgentError::Config(format!("{}: {e}", path.display())))?;
        let parsed = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| e.to_string())
        } else {
            toml::from_str(&text).map_err(|e| e.to_string())
        };
        parsed.map_err(|e| AgentError::Config(format!("{}: {e}", path.display())))
    }

    fn url(&self) -> String {
        format!("{}/chat/completions", self.base_url.trim_end_matches('/'))
    }
}

/// Sleep before each retry: `initial * 2^i`, capped, so never decreasing.
pub fn backoff_schedule(config: &EndpointConfig) -> Vec<Duration> {
    (0..config.max_retries)
        .map(|i| {
            let ms = config.initial_backoff_ms.saturating_mul(1u64 << i.min(32)).min(config.max_backoff_ms);
            Duration::from_millis(ms)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpReply {
    pub status: u16,
    pub body: String,
}

/// One HTTP POST. `Err` means the request never produced a status line
/// (connection refused, timeout, ...), which is treated as transient.
pub trait Transport: Send + Sync {
    fn post(&self, url: &str, headers: &[(String, String)], body: &str) -> Result<HttpReply, String>;
}

pub struct UreqTransport {
    agent: ureq::Agent,
}

impl UreqTransport {
    pub fn new(timeout: Duration) -> Self {
        let agent =
            ureq::Agent::config_builder().http_status_as_error(false).timeout_global(Some(timeout)).build().into();
        UreqTransport { agent }
    }
}

impl Transport for UreqTransport {
    fn post(&self, url: &str, headers: &[(String, String)], body: &str) -> Result<HttpReply, String> {
        let mut request = self.agent.post(url).header("content-type", "application/json");
        for (k, v) in headers {
            request = request.header(k.as_str(), v.as_str());
        }
        let mut response = request.send(body).map_err(|e| e.to_string())?;
        let status = response.status().as_u16();
        let body = response.body_mut().read_to_string().map_err(|e| e.to_string())?;
        Ok(HttpReply { status, body })
    }
}

/// Counting semaphore capping concurrent requests; share one `Arc` across
/// agents to make the cap global.
pub struct RequestGate {
    free: Mutex<usize>,
    cv: Condvar,
}

impl RequestGate {
    pub fn new(slots: usize) -> Arc<Self> {
        Arc::new(RequestGate { free: Mutex::new(slots.max(1)), cv: Condvar::new() })
    }

    fn acquire(&self) -> GateGuard<'_> {
        let mut free = self.free.lock().expect("gate poisoned");
        while *free == 0 {
            free = self.cv.wait(free).expect("gate poisoned");
        }
        *free -= 1;
        GateGuard { gate: self }
    }
}

struct GateGuard<'a> {
    gate: &'a RequestGate,
}

impl Drop for GateGuard<'_> {
    fn drop(&mut self) {
        *self.gate.free.lock().expect("gate poisoned") += 1;
        self.gate.cv.notify_one();
    }
}

type Sleeper = Box<dyn Fn(Duration) + Send + Sync>;

pub struct ChatAgent {
    config: EndpointConfig,
    api_key: Option<String>,
    transport: Box<dyn Transport>,
    sleep: Sleeper,
    gate: Arc<RequestGate>,
}

impl ChatAgent {
    /// Live client over HTTP. Fails if the configured key variable is unset.
    pub fn connect(config: EndpointConfig) -> Result<Self, AgentError> {
        let transport = UreqTransport::new(Duration::from_secs(config.timeout_secs));
        let gate = RequestGate::new(config.max_concurrent);
        Self::with_transport(config, Box::new(transport), gate)
    }

    pub fn with_transport(
        config: EndpointConfig,
        transport: Box<dyn Transport>,
        gate: Arc<RequestGate>,
    ) -> Result<Self, AgentError> {
        let api_key = match &config.api_key_env {
            Some(var) => Some(
                std::env::var(var).map_err(|_| AgentError::Config(format!("environment variable {var} is not set")))?,
            ),
            None => None,
        };
        Ok(ChatAgent { config, api_key, transport, sleep: Box::new(std::thread::sleep), gate })
    }

    /// Replaces the retry sleep, e.g. with a no-op in tests.
    pub fn with_sleeper(mut self, sleep: impl Fn(Duration) + Send + Sync + 'static) -> Self {
        self.sleep = Box::new(sleep);
        self
    }

    pub fn with_gate(mut self, gate: Arc<RequestGate>) -> Self {
        self.gate = gate;
        self
    }

    pub fn request_body(&self, ctx: &AgentContext) -> Value {
        let mut messages = Vec::new();
        if !ctx.system_text.is_empty() {
            messages.push(json!({"role": "system", "content": ctx.system_text}));
        }
        for ex in &ctx.transcript {
            if ex.speaker == ctx.speaker {
                messages.push(json!({"role": "user", "content": ex.prompt}));
                messages.push(json!({"role": "assistant", "content": ex.response}));
            } else {
                messages.push(
                    json!({"role": "user", "content": format!("{} (turn {}):\n{}", ex.speaker, ex.turn, ex.response)}),
                );
            }
        }
        messages.push(json!({"role": "user", "content": ctx.user_text}));
        let mut body = json!({"model": self.config.model, "messages": messages});
        if let Some(t) = self.config.temperature {
            body["temperature"] = json!(t);
        }
        if let Some(m) = self.config.max_output_tokens {
            body["max_tokens"] = json!(m);
        }
        body
    }
}

impl Agent for ChatAgent {
    fn name(&self) -> String {
        format!("remote:{}", self.config.model)
    }

    fn respond(&self, ctx: &AgentContext) -> Result<AgentResponse, AgentError> {
        let body = self.request_body(ctx).to_string();
        let mut headers = Vec::new();
        if let Some(key) = &self.api_key {
            headers.push(("authorization".to_string(), format!("Bearer {key}")));
        }
        let url = self.config.url();
        let delays = backoff_schedule(&self.config);
        let _slot = self.gate.acquire();
        let started = Instant::now();
        let mut attempt = 0u32;
        loop {
            let failure = match self.transport.post(&url, &headers, &body) {
                Ok(reply) if (200..300).contains(&reply.status) => {
                    let mut response = map_response(&reply.body)?;
                    response.latency = started.elapsed();
                    response.provider_meta.insert("retries".into(), attempt.to_string());
                    if attempt > 0 {
                        log::info!("{} turn {}: succeeded after {attempt} retries", ctx.trial_id, ctx.turn);
                    }
                    return Ok(response);
                }
                Ok(reply) if is_transient(reply.status) => format!("HTTP {}: {}", reply.status, snippet(&reply.body)),
                Ok(reply) => {
                    return Err(AgentError::Provider(format!("HTTP {}: {}", reply.status, snippet(&reply.body))))
                }
                Err(e) => e,
            };
            let Some(delay) = delays.get(attempt as usize) else {
                return Err(AgentError::Transport { attempts: attempt + 1, message: failure });
            };
            log::warn!(
                "{} turn {}: attempt {} failed ({failure}); retrying in {delay:?}",
                ctx.trial_id,
                ctx.turn,
                attempt + 1
            );
            (self.sleep)(*delay);
            attempt += 1;
        }
    }
}

fn is_transient(status: u16) -> bool {
    status == 408 || status == 429 || status >= 500
}

fn snippet(body: &str) -> String {
    body.chars().take(200).collect()
}

/// Maps a provider body onto [`AgentResponse`]. Token fields are normalised
/// so that `total = prompt + completion`; any surplus in the provider's total
/// (typically hidden reasoning tokens) is counted as completion.
fn map_response(body: &str) -> Result<AgentResponse, AgentError> {
    let v: Value = serde_json::from_str(body).map_err(|e| AgentError::Provider(format!("malformed body: {e}")))?;
    let text = extract_text(&v)
        .ok_or_else(|| AgentError::Provider(format!("no completion text in body: {}", snippet(body))))?;

    let mut meta = BTreeMap::new();
    let fields = if let Some(u) = v.get("usage").filter(|u| u.is_object()) {
        Some((
            "usage.prompt_tokens/completion_tokens/total_tokens",
            u["prompt_tokens"].as_u64(),
            u["completion_tokens"].as_u64(),
            u["total_tokens"].as_u64(),
        ))
    } else if let Some(u) = v.get("usageMetadata").filter(|u| u.is_object()) {
        let completion = match (u["candidatesTokenCount"].as_u64(), u["thoughtsTokenCount"].as_u64()) {
            (None, None) => None,
            (c, t) => Some(c.unwrap_or(0) + t.unwrap_or(0)),
        };
        Some((
            "usageMetadata.promptTokenCount/candidatesTokenCount+thoughtsTokenCount/totalTokenCount",
            u["promptTokenCount"].as_u64(),
            completion,
            u["totalTokenCount"].as_u64(),
        ))
    } else {
        None
    };
    if let Some(reasoning) = v.pointer("/usage/completion_tokens_details/reasoning_tokens").and_then(Value::as_u64) {
        meta.insert("reasoning_tokens".into(), reasoning.to_string());
    }
    let usage = match fields {
        Some((names, prompt, completion, total)) => {
            meta.insert("usage_fields".into(), names.into());
            let prompt = prompt.unwrap_or(0);
            let mut completion = completion.unwrap_or(0);
            if let Some(total) = total {
                if total > prompt + completion {
                    meta.insert("completion_includes_unlisted".into(), (total - prompt - completion).to_string());
                    completion = total - prompt;
                }
            }
            TokenUsage::new(prompt, completion)
        }
        None => {
            log::warn!("provider response has no usage object; recording zero tokens");
            meta.insert("diagnostic".into(), "MissingUsage".into());
            TokenUsage::default()
        }
    };
    if let Some(model) = v.get("model").and_then(Value::as_str) {
        meta.insert("model".into(), model.into());
    }
    Ok(AgentResponse { text, usage, latency: Duration::ZERO, provider_meta: meta })
}

fn extract_text(v: &Value) -> Option<String> {
    if let Some(content) = v.pointer("/choices/0/message/content") {
        return match content {
            Value::String(s) => Some(s.clone()),
            Value::Array(parts) => Some(parts.iter().filter_map(|p| p.get("text").and_then(Value::as_str)).collect()),
            _ => None,
        };
    }
    let parts = v.pointer("/candidates/0/content/parts")?.as_array()?;
    Some(
        parts
            .iter()
            .filter(|p| p.get("thought") != Some(&Value::Bool(true)))
            .filter_map(|p| p.get("text").and_then(Value::as_str))
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{test_context, Exchange};
    use crate::puzzle::Puzzle;
    use std::sync::atomic::{AtomicUsize, Ordering};

    /// Serves canned replies in order and counts calls.
    struct Stub {
        replies: Mutex<Vec<Result<HttpReply, String>>>,
        calls: AtomicUsize,
    }

    impl Stub {
        fn new(mut replies: Vec<Result<HttpReply, String>>) -> Arc<Self> {
            replies.reverse();
            Arc::new(Stub { replies: Mutex::new(replies), calls: AtomicUsize::new(0) })
        }
    }

    impl Transport for Arc<Stub> {
        fn post(&self, _url: &str, _headers: &[(String, String)], _body: &str) -> Result<HttpReply, String> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            self.replies.lock().unwrap().pop().unwrap_or(Err("stub exhausted".into()))
        }
    }

    fn ok(body: &str) -> Result<HttpReply, String> {
        Ok(HttpReply { status: 200, body: body.into() })
    }

    const BODY: &str = r#"{"model":"m","choices":[{"message":{"role":"assistant","content":"moves = [[1,0,2]]"}}],
        "usage":{"prompt_tokens":12,"completion_tokens":5,"total_tokens":17}}"#;

    fn agent(stub: &Arc<Stub>, slept: Arc<Mutex<Vec<Duration>>>) -> ChatAgent {
        ChatAgent::with_transport(
            EndpointConfig::new("http://stub/v1/", "m"),
            Box::new(Arc::clone(stub)),
            RequestGate::new(4),
        )
        .unwrap()
        .with_sleeper(move |d| slept.lock().unwrap().push(d))
    }

    fn ctx() -> AgentContext {
        test_context(Puzzle::hanoi(3).unwrap(), 1, Some(1))
    }

    #[test]
    fn maps_fixed_body() {
        let stub = Stub::new(vec![ok(BODY)]);
        let r = agent(&stub, Default::default()).respond(&ctx()).unwrap();
        assert_eq!(r.text, "moves = [[1,0,2]]");
        assert_eq!(r.usage, TokenUsage::new(12, 5));
        assert_eq!(r.provider_meta["retries"], "0");
    }

    #[test]
    fn retries_transient_failures() {
        let slept = Arc::new(Mutex::new(Vec::new()));
        let stub = Stub::new(vec![
            Ok(HttpReply { status: 503, body: "busy".into() }),
            Err("connection reset".into()),
            ok(BODY),
        ]);
        let r = agent(&stub, Arc::clone(&slept)).respond(&ctx()).unwrap();
        assert_eq!(r.provider_meta["retries"], "2");
        assert_eq!(stub.calls.load(Ordering::SeqCst), 3);
        assert_eq!(*slept.lock().unwrap(), vec![Duration::from_millis(500), Duration::from_millis(1000)]);
    }

    #[test]
    fn gives_up_after_budget() {
        let slept = Arc::new(Mutex::new(Vec::new()));
        let stub = Stub::new((0..10).map(|_| Ok(HttpReply { status: 429, body: "slow down".into() })).collect());
        let err = agent(&stub, Arc::clone(&slept)).respond(&ctx()).unwrap_err();
        assert!(matches!(err, AgentError::Transport { attempts: 4, .. }));
        assert_eq!(stub.calls.load(Ordering::SeqCst), 4);
        assert_eq!(slept.lock().unwrap().len(), 3);
    }

    #[test]
    fn non_retryable_and_malformed() {
        let stub = Stub::new(vec![Ok(HttpReply { status: 401, body: "bad key".into() })]);
        assert!(matches!(agent(&stub, Default::default()).respond(&ctx()), Err(AgentError::Provider(_))));
        assert_eq!(stub.calls.load(Ordering::SeqCst), 1);
        let stub = Stub::new(vec![ok("<html>oops</html>")]);
        assert!(matches!(agent(&stub, Default::default()).respond(&ctx()), Err(AgentError::Provider(_))));
    }

    #[test]
    fn missing_usage_is_zero_with_diagnostic() {
        let stub = Stub::new(vec![ok(r#"{"choices":[{"message":{"content":"hi"}}]}"#)]);
        let r = agent(&stub, Default::default()).respond(&ctx()).unwrap();
        assert_eq!(r.usage, TokenUsage::default());
        assert_eq!(r.provider_meta["diagnostic"], "MissingUsage");
    }

    #[test]
    fn gemini_native_and_reasoning_surplus() {
        let body = r#"{"candidates":[{"content":{"parts":[{"text":"thinking","thought":true},{"text":"moves = []"}]}}],
            "usageMetadata":{"promptTokenCount":10,"candidatesTokenCount":4,"thoughtsTokenCount":30,"totalTokenCount":44}}"#;
        let r = map_response(body).unwrap();
        assert_eq!(r.text, "moves = []");
        assert_eq!(r.usage, TokenUsage::new(10, 34));

        let body = r#"{"choices":[{"message":{"content":"x"}}],"usage":{"prompt_tokens":10,"completion_tokens":4,"total_tokens":50}}"#;
        let r = map_response(body).unwrap();
        assert_eq!(r.usage, TokenUsage::new(10, 40));
        assert_eq!(r.provider_meta["completion_includes_unlisted"], "36");
    }

    #[test]
    fn backoff_is_non_decreasing_and_capped() {
        let mut cfg = EndpointConfig::new("u", "m");
        cfg.max_retries = 8;
        cfg.max_backoff_ms = 10_000;
        let s = backoff_schedule(&cfg);
        assert_eq!(s.len(), 8);
        assert!(s.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(*s.last().unwrap(), Duration::from_millis(10_000));
    }

    #[test]
    fn dialogue_maps_to_messages() {
        let stub = Stub::new(vec![]);
        let a = agent(&stub, Default::default());
        let mut c = ctx();
        c.speaker = "agent_b".into();
        c.transcript = vec![
            Exchange { turn: 1, speaker: "agent_a".into(), prompt: "p1".into(), response: "r1".into() },
            Exchange { turn: 2, speaker: "agent_b".into(), prompt: "p2".into(), response: "r2".into() },
        ];
        let body = a.request_body(&c);
        let roles: Vec<&str> =
            body["messages"].as_array().unwrap().iter().map(|m| m["role"].as_str().unwrap()).collect();
        assert_eq!(roles, ["system", "user", "user", "assistant", "user"]);
        assert_eq!(body["model"], "m");
    }

    #[test]
    fn missing_credential_is_config_error() {
        let mut cfg = EndpointConfig::new("u", "m");
        cfg.api_key_env = Some("PUZZLEBENCH_TEST_SURELY_UNSET_KEY".into());
        assert!(matches!(ChatAgent::connect(cfg), Err(AgentError::Config(_))));
    }

    #[test]
    fn gate_caps_concurrency() {
        let gate = RequestGate::new(2);
        let active = Arc::new(AtomicUsize::new(0));
        let peak = Arc::new(AtomicUsize::new(0));
        std::thread::scope(|s| {
            for _ in 0..8 {
                let (gate, active, peak) = (&gate, &active, &peak);
                s.spawn(move || {
                    let _g = gate.acquire();
                    let now = active.fetch_add(1, Ordering::SeqCst) + 1;
                    peak.fetch_max(now, Ordering::SeqCst);
                    std::thread::sleep(Duration::from_millis(5));
                    active.fetch_sub(1, Ordering::SeqCst);
                });
            }
        });
        assert!(peak.load(Ordering::SeqCst) <= 2);
    }
}
