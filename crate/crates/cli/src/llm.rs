//! Chat-completions client with retry and exponential backoff.

use std::thread;
use std::time::Duration;

use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde::Serialize;
use serde_json::{json, Value};

use eventcause::qa::LanguageModel;
use eventcause::{Error, Result};

#[derive(Clone, Debug, Serialize)]
pub struct EndpointConfig {
    pub base_url: String,
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
    #[serde(skip)]
    pub api_key: Option<String>,
    pub retries: u32,
    pub backoff: Duration,
    pub timeout: Duration,
}

pub struct HttpModel {
    cfg: EndpointConfig,
    url: String,
    client: Client,
}

impl HttpModel {
    pub fn new(cfg: EndpointConfig) -> Result<Self> {
        let client = Client::builder()
            .timeout(cfg.timeout)
            .build()
            .map_err(|e| Error::Model(e.to_string()))?;
        let base = cfg.base_url.trim_end_matches('/');
        let url = if base.ends_with("/chat/completions") {
            base.to_owned()
        } else {
            format!("{base}/chat/completions")
        };
        Ok(Self { cfg, url, client })
    }

    fn body(&self, prompt: &str) -> Value {
        json!({
            "model": self.cfg.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.cfg.temperature,
            "max_tokens": self.cfg.max_tokens,
        })
    }
}

fn retryable(s: StatusCode) -> bool {
    s == StatusCode::TOO_MANY_REQUESTS || s == StatusCode::REQUEST_TIMEOUT || s.is_server_error()
}

fn content(v: &Value) -> Option<&str> {
    v.pointer("/choices/0/message/content").and_then(Value::as_str)
}

impl LanguageModel for HttpModel {
    fn complete(&self, prompt: &str) -> Result<String> {
        let body = self.body(prompt);
        let mut delay = self.cfg.backoff;
        let mut last = String::new();
        for attempt in 0..=self.cfg.retries {
            if attempt > 0 {
                log::debug!("retry {attempt} after {delay:?}: {last}");
                thread::sleep(delay);
                delay = delay.saturating_mul(2);
            }
            let mut req = self.client.post(&self.url).json(&body);
            if let Some(key) = &self.cfg.api_key {
                req = req.bearer_auth(key);
            }
            let resp = match req.send() {
                Ok(r) => r,
                Err(e) => {
                    last = e.to_string();
                    continue;
                }
            };
            let status = resp.status();
            if status.is_success() {
                let v: Value = resp
                    .json()
                    .map_err(|e| Error::Model(format!("bad response body: {e}")))?;
                return content(&v)
                    .map(str::to_owned)
                    .ok_or_else(|| Error::Model("response has no choices[0].message.content".into()));
            }
            let text = resp.text().unwrap_or_default();
            if !retryable(status) {
                return Err(Error::Model(format!("HTTP {status}: {text}")));
            }
            last = format!("HTTP {status}");
        }
        Err(Error::Model(format!(
            "giving up after {} attempts: {last}",
            self.cfg.retries + 1
        )))
    }
}
