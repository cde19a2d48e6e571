use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::remote::RemoteBackend;
use super::scripted::ScriptedBackend;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GatewayErrorKind {
    Timeout,
    Http,
    ExhaustedRetries,
    ScriptExhausted,
    Config,
}

impl GatewayErrorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            GatewayErrorKind::Timeout => "timeout",
            GatewayErrorKind::Http => "http",
            GatewayErrorKind::ExhaustedRetries => "exhausted-retries",
            GatewayErrorKind::ScriptExhausted => "script-exhausted",
            GatewayErrorKind::Config => "config",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[error("{}: {message}", kind.as_str())]
pub struct GatewayError {
    pub kind: GatewayErrorKind,
    pub message: String,
}

impl GatewayError {
    pub fn new(kind: GatewayErrorKind, message: impl Into<String>) -> Self {
        GatewayError {
            kind,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ApiFlavor {
    /// `POST` chat-completions body with `messages`, bearer auth.
    #[default]
    OpenaiChat,
    /// `generateContent` body with `contents`, `x-goog-api-key` auth.
    Gemini,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BackendConfig {
    Remote {
        endpoint: String,
        model: String,
        /// Environment variable holding the credential.
        token_env: String,
        #[serde(default)]
        api: ApiFlavor,
    },
    Scripted {
        script: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LlmConfig {
    pub backend: BackendConfig,
    #[serde(default)]
    pub max_output_tokens: Option<u32>,
    #[serde(default = "default_timeout")]
    pub request_timeout_secs: u64,
    /// Requests per minute for remote backends.
    #[serde(default = "default_rate")]
    pub rate_limit: f64,
    #[serde(default = "default_retries")]
    pub retries: u32,
}

fn default_timeout() -> u64 {
    120
}

fn default_rate() -> f64 {
    60.0
}

fn default_retries() -> u32 {
    2
}

impl LlmConfig {
    pub fn scripted(script: impl Into<PathBuf>) -> Self {
        LlmConfig {
            backend: BackendConfig::Scripted { script: script.into() },
            max_output_tokens: None,
            request_timeout_secs: default_timeout(),
            rate_limit: default_rate(),
            retries: default_retries(),
        }
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        if matches!(self.backend, BackendConfig::Remote { .. }) && !(self.rate_limit > 0.0) {
            return Err(GatewayError::new(GatewayErrorKind::Config, "rate_limit must be positive"));
        }
        if self.request_timeout_secs == 0 {
            return Err(GatewayError::new(GatewayErrorKind::Config, "request_timeout_secs must be positive"));
        }
        Ok(())
    }
}

pub trait Backend: Send + Sync {
    fn complete(&self, prompt: &str) -> Result<String, GatewayError>;

    /// Short description for logs and records, e.g. `scripted:path`.
    fn describe(&self) -> String;
}

/// Called after every completion with the prompt and its result.
pub type CaptureHook = Arc<dyn Fn(&str, &Result<String, GatewayError>) + Send + Sync>;

/// Shareable handle over one backend.
#[derive(Clone)]
pub struct LlmClient {
    backend: Arc<dyn Backend>,
    hook: Option<CaptureHook>,
}

impl std::fmt::Debug for LlmClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LlmClient").field("backend", &self.backend.describe()).finish()
    }
}

impl LlmClient {
    pub fn new(backend: Arc<dyn Backend>) -> Self {
        LlmClient { backend, hook: None }
    }

    pub fn from_config(config: &LlmConfig) -> Result<Self, GatewayError> {
        config.validate()?;
        let backend: Arc<dyn Backend> = match &config.backend {
            BackendConfig::Scripted { script } => Arc::new(ScriptedBackend::load(script)?),
            BackendConfig::Remote { .. } => Arc::new(RemoteBackend::new(config)?),
        };
        Ok(Self::new(backend))
    }

    pub fn with_hook(mut self, hook: CaptureHook) -> Self {
        self.hook = Some(hook);
        self
    }

    pub fn describe(&self) -> String {
        self.backend.describe()
    }

    pub fn complete(&self, prompt: &str) -> Result<String, GatewayError> {
        if prompt.trim().is_empty() {
            return Err(GatewayError::new(GatewayErrorKind::Config, "empty prompt"));
        }
        let out = self.backend.complete(prompt);
        if let Some(hook) = &self.hook {
            hook(prompt, &out);
        }
        out
    }
}

/// Token bucket: `capacity` requests may burst, refilled at `per_minute`.
#[derive(Debug)]
pub struct RateLimiter {
    per_second: f64,
    capacity: f64,
    state: Mutex<(f64, Instant)>,
}

impl RateLimiter {
    pub fn new(per_minute: f64, capacity: f64) -> Self {
        RateLimiter {
            per_second: per_minute / 60.0,
            capacity,
            state: Mutex::new((capacity, Instant::now())),
        }
    }

    /// Takes one token, returning how long the caller must wait first.
    pub fn reserve(&self) -> Duration {
        let mut st = self.state.lock().unwrap_or_else(|e| e.into_inner());
        let now = Instant::now();
        let (tokens, last) = *st;
        let tokens = (tokens + now.saturating_duration_since(last).as_secs_f64() * self.per_second).min(self.capacity);
        let wait = if tokens >= 1.0 {
            0.0
        } else {
            (1.0 - tokens) / self.per_second
        };
        // Going negative books the token against future refill.
        *st = (tokens - 1.0, now);
        Duration::from_secs_f64(wait)
    }

    pub fn acquire(&self) {
        let wait = self.reserve();
        if !wait.is_zero() {
            std::thread::sleep(wait);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bucket_spaces_requests() {
        let rl = RateLimiter::new(60.0, 2.0);
        assert!(rl.reserve().is_zero());
        assert!(rl.reserve().is_zero());
        let w = rl.reserve().as_secs_f64();
        assert!(w > 0.9 && w <= 1.0, "{w}");
        let w = rl.reserve().as_secs_f64();
        assert!(w > 1.9 && w <= 2.0, "{w}");
    }

    #[test]
    fn config_round_trip() {
        let text = "retries = 1\n[backend]\nkind = \"remote\"\nendpoint = \"http://localhost:1/v1/chat/completions\"\nmodel = \"m\"\ntoken_env = \"KEY\"\n";
        let cfg: LlmConfig = toml::from_str(text).unwrap();
        assert_eq!(cfg.retries, 1);
        assert_eq!(cfg.rate_limit, 60.0);
        assert!(matches!(cfg.backend, BackendConfig::Remote { api: ApiFlavor::OpenaiChat, .. }));
        let bad = LlmConfig { rate_limit: 0.0, ..cfg };
        assert_eq!(bad.validate().unwrap_err().kind, GatewayErrorKind::Config);
    }
}
