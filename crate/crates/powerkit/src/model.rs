//! Chat-completion backend for the session's model client boundary.

use std::time::Duration;

use powerkit_core::session::ModelClient;
use serde_json::{json, Value};

/// Posts `{model?, messages}` to a chat-completions style endpoint and
/// reads `choices[0].message.content`.
pub struct HttpModelClient {
    endpoint: String,
    model: Option<String>,
    agent: ureq::Agent,
}

impl HttpModelClient {
    pub fn new(endpoint: impl Into<String>, model: Option<String>, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder().timeout_global(Some(timeout)).build().into();
        Self { endpoint: endpoint.into(), model, agent }
    }
}

impl ModelClient for HttpModelClient {
    fn complete(&self, system: &str, user: &str) -> Result<String, String> {
        let mut body = json!({
            "messages": [
                {"role": "system", "content": system},
                {"role": "user", "content": user},
            ],
            "temperature": 0,
        });
        if let Some(m) = &self.model {
            body["model"] = json!(m);
        }
        let reply: Value = self
            .agent
            .post(&self.endpoint)
            .send_json(&body)
            .map_err(|e| e.to_string())?
            .body_mut()
            .read_json()
            .map_err(|e| e.to_string())?;
        reply["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_owned)
            .ok_or_else(|| "response has no choices[0].message.content".to_owned())
    }
}
