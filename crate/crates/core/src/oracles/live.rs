//! OpenAI-compatible chat-completions client.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{parse_ranges, parse_weights, parse_yes_no, LanguageOracle, Message, PromptBundle};
use crate::domain::{DifficultyFeedback, NormConstraint, PreferenceWeights, Query};
use crate::error::{Error, Result};
use crate::inference::Interval;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleConfig {
    /// Full chat-completions URL.
    pub endpoint: String,
    pub model_name: String,
    pub temperature: f64,
    pub max_retries: u32,
    pub timeout_secs: f64,
    /// Environment variable holding the bearer token; unset means no auth header.
    pub api_key_env: String,
    pub retry_backoff_ms: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            model_name: "gpt-4o".into(),
            temperature: 1.0,
            max_retries: 3,
            timeout_secs: 60.0,
            api_key_env: "OPENAI_API_KEY".into(),
            retry_backoff_ms: 500,
        }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return Err(Error::Domain(format!("temperature must be >= 0, got {}", self.temperature)));
        }
        if !(self.timeout_secs.is_finite() && self.timeout_secs > 0.0) {
            return Err(Error::Domain(format!("timeout must be > 0, got {}", self.timeout_secs)));
        }
        if self.endpoint.trim().is_empty() || self.model_name.trim().is_empty() {
            return Err(Error::Contract("endpoint and model_name are required".into()));
        }
        Ok(())
    }
}

pub struct LiveOracle {
    pub config: OracleConfig,
    api_key: Option<String>,
    agent: ureq::Agent,
}

impl std::fmt::Debug for LiveOracle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LiveOracle").field("config", &self.config).field("has_key", &self.api_key.is_some()).finish()
    }
}

impl LiveOracle {
    pub fn new(config: OracleConfig) -> Result<Self> {
        config.validate()?;
        let api_key = std::env::var(&config.api_key_env).ok().filter(|k| !k.is_empty());
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(config.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(Self { config, api_key, agent })
    }

    /// One completion; returns the first choice's text.
    pub fn complete(&self, messages: &[Message], temperature: f64) -> Result<String> {
        let body = json!({
            "model": self.config.model_name,
            "messages": messages,
            "temperature": temperature,
        });
        let mut req = self.agent.post(&self.config.endpoint).header("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", format!("Bearer {key}"));
        }
        let mut resp = req.send_json(&body).map_err(|e| Error::Oracle(format!("transport: {e}")))?;
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(|e| Error::Oracle(format!("reading body: {e}")))?;
        if !(200..300).contains(&status) {
            return Err(Error::Oracle(format!("HTTP {status}: {}", text.chars().take(200).collect::<String>())));
        }
        let v: Value = serde_json::from_str(&text).map_err(|e| Error::Oracle(format!("response is not JSON: {e}")))?;
        v.pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_owned)
            .ok_or_else(|| Error::Oracle("response has no choices[0].message.content".into()))
    }

    /// Completes and parses, retrying transport and parse failures.
    fn with_retries<T>(&self, messages: &[Message], temperature: f64, parse: impl Fn(&str) -> Result<T>) -> Result<T> {
        let mut last = None;
        for attempt in 0..=self.config.max_retries {
            if attempt > 0 {
                let wait = self.config.retry_backoff_ms.saturating_mul(1 << (attempt - 1).min(10));
                std::thread::sleep(Duration::from_millis(wait));
            }
            match self.complete(messages, temperature).and_then(|t| parse(&t)) {
                Ok(v) => return Ok(v),
                Err(e) => {
                    log::warn!("oracle attempt {} failed: {e}", attempt + 1);
                    last = Some(e);
                }
            }
        }
        Err(last.unwrap_or_else(|| Error::Oracle("no attempts made".into())))
    }
}

impl LanguageOracle for LiveOracle {
    fn sample_weights(&self, bundle: &PromptBundle, m: usize, _nonce: u64) -> Result<Vec<PreferenceWeights>> {
        if m == 0 {
            return Err(Error::Contract("m must be >= 1".into()));
        }
        let messages = bundle.weights_messages();
        let parse = |t: &str| parse_weights(t, &bundle.catalog, NormConstraint::UnitL2Nonnegative);
        let results: Vec<Result<PreferenceWeights>> = std::thread::scope(|s| {
            let handles: Vec<_> = (0..m)
                .map(|_| s.spawn(|| self.with_retries(&messages, self.config.temperature, parse)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().unwrap_or_else(|_| Err(Error::Oracle("worker panicked".into()))))
                .collect()
        });
        let (ok, failed): (Vec<_>, Vec<_>) = results.into_iter().partition(Result::is_ok);
        if ok.is_empty() {
            let why = failed.into_iter().next().and_then(Result::err).map(|e| e.to_string()).unwrap_or_default();
            return Err(Error::Oracle(format!("all {m} weight samples failed; first error: {why}")));
        }
        if !failed.is_empty() {
            log::warn!("{} of {m} weight samples failed and were dropped", failed.len());
        }
        Ok(ok.into_iter().filter_map(Result::ok).collect())
    }

    fn sample_ranges(&self, bundle: &PromptBundle, _nonce: u64) -> Result<Vec<Interval>> {
        self.with_retries(&bundle.ranges_messages(), self.config.temperature, |t| parse_ranges(t, &bundle.catalog))
    }

    fn judge_answerable(
        &self,
        bundle: &PromptBundle,
        fq: &[DifficultyFeedback],
        _q: &Query,
        rendered: (&str, &str),
        _nonce: u64,
    ) -> Result<bool> {
        // judgments are meant to be stable, so sample greedily
        self.with_retries(&bundle.judge_messages(fq, rendered), 0.0, parse_yes_no)
    }
}
