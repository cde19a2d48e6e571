use std::time::Duration;

use serde_json::{json, Value};

use super::gateway::{ApiFlavor, Backend, BackendConfig, GatewayError, GatewayErrorKind, LlmConfig, RateLimiter};

/// HTTP chat-completion backend. Retries transport failures, 429 and 5xx
/// responses with exponential backoff.
pub struct RemoteBackend {
    agent: ureq::Agent,
    endpoint: String,
    model: String,
    token: String,
    api: ApiFlavor,
    max_output_tokens: Option<u32>,
    retries: u32,
    limiter: RateLimiter,
    backoff: Duration,
}

impl RemoteBackend {
    pub fn new(config: &LlmConfig) -> Result<Self, GatewayError> {
        let BackendConfig::Remote {
            endpoint,
            model,
            token_env,
            api,
        } = &config.backend
        else {
            return Err(GatewayError::new(GatewayErrorKind::Config, "not a remote backend configuration"));
        };
        let token = std::env::var(token_env).map_err(|_| {
            GatewayError::new(GatewayErrorKind::Config, format!("environment variable {token_env} is not set"))
        })?;
        Ok(RemoteBackend {
            agent: ureq::AgentBuilder::new()
                .timeout(Duration::from_secs(config.request_timeout_secs))
                .build(),
            endpoint: endpoint.clone(),
            model: model.clone(),
            token,
            api: *api,
            max_output_tokens: config.max_output_tokens,
            retries: config.retries,
            limiter: RateLimiter::new(config.rate_limit, 1.0),
            backoff: Duration::from_millis(500),
        })
    }

    pub fn with_backoff(mut self, backoff: Duration) -> Self {
        self.backoff = backoff;
        self
    }

    fn body(&self, prompt: &str) -> Value {
        match self.api {
            ApiFlavor::OpenaiChat => {
                let mut b = json!({
                    "model": self.model,
                    "messages": [{"role": "user", "content": prompt}],
                });
                if let Some(n) = self.max_output_tokens {
                    b["max_completion_tokens"] = json!(n);
                }
                b
            }
            ApiFlavor::Gemini => {
                let mut b = json!({
                    "contents": [{"role": "user", "parts": [{"text": prompt}]}],
                });
                if let Some(n) = self.max_output_tokens {
                    b["generationConfig"] = json!({"maxOutputTokens": n});
                }
                b
            }
        }
    }

    fn send(&self, body: &Value) -> Result<std::io::Result<Value>, ureq::Error> {
        let req = self.agent.post(&self.endpoint).set("Content-Type", "application/json");
        let req = match self.api {
            ApiFlavor::OpenaiChat => req.set("Authorization", &format!("Bearer {}", self.token)),
            ApiFlavor::Gemini => req.set("x-goog-api-key", &self.token),
        };
        Ok(req.send_json(body.clone())?.into_json::<Value>())
    }

    fn extract(&self, v: &Value) -> Option<String> {
        match self.api {
            ApiFlavor::OpenaiChat => v["choices"][0]["message"]["content"].as_str().map(str::to_string),
            ApiFlavor::Gemini => {
                let parts = v["candidates"][0]["content"]["parts"].as_array()?;
                Some(parts.iter().filter_map(|p| p["text"].as_str()).collect())
            }
        }
    }
}

fn is_timeout(t: &ureq::Transport) -> bool {
    let msg = t.to_string().to_lowercase();
    msg.contains("timed out") || msg.contains("timeout")
}

impl Backend for RemoteBackend {
    fn complete(&self, prompt: &str) -> Result<String, GatewayError> {
        let body = self.body(prompt);
        let mut last = GatewayError::new(GatewayErrorKind::Http, "no attempt made");
        for attempt in 0..=self.retries {
            if attempt > 0 {
                std::thread::sleep(self.backoff * 2u32.pow(attempt - 1));
            }
            self.limiter.acquire();
            match self.send(&body) {
                Ok(Ok(v)) => {
                    return self.extract(&v).ok_or_else(|| {
                        GatewayError::new(GatewayErrorKind::Http, format!("response has no completion text: {v}"))
                    })
                }
                Ok(Err(e)) => last = GatewayError::new(GatewayErrorKind::Http, format!("unreadable response body: {e}")),
                Err(ureq::Error::Status(code, resp)) => {
                    let text = resp.into_string().unwrap_or_default();
                    let msg = format!("HTTP {code}: {}", text.chars().take(300).collect::<String>());
                    if code == 429 || code >= 500 {
                        last = GatewayError::new(GatewayErrorKind::ExhaustedRetries, msg);
                    } else {
                        return Err(GatewayError::new(GatewayErrorKind::Http, msg));
                    }
                }
                Err(ureq::Error::Transport(t)) => {
                    let kind = if is_timeout(&t) {
                        GatewayErrorKind::Timeout
                    } else {
                        GatewayErrorKind::Http
                    };
                    last = GatewayError::new(kind, t.to_string());
                }
            }
        }
        last.message = format!("{} (after {} attempts)", last.message, self.retries + 1);
        Err(last)
    }

    fn describe(&self) -> String {
        format!("remote:{}", self.model)
    }
}
