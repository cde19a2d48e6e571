//! Deterministic backend replaying responses from a TOML script.
//!
//! ```toml
//! [[responses]]
//! sha256 = "9f86d0..."           # exact prompt digest
//! response = "..."
//!
//! [[responses]]
//! contains = ["TASK: refine", "Widget"]   # all must occur; longest total wins
//! response = "..."
//!
//! [[responses]]
//! ordinal = 3                    # the third call
//! response = "..."
//!
//! [[responses]]                  # no key: served in file order
//! response = "..."
//! ```
//!
//! Keyed entries may answer any number of calls. Unkeyed entries are used
//! once each; the sequence cursor is shared, so sequence scripts are meant
//! for single-threaded use.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use serde::Deserialize;
use sha2::{Digest, Sha256};

use super::gateway::{Backend, GatewayError, GatewayErrorKind};

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(untagged)]
pub enum Needles {
    One(String),
    All(Vec<String>),
}

impl Needles {
    fn list(&self) -> Vec<&str> {
        match self {
            Needles::One(s) => vec![s.as_str()],
            Needles::All(v) => v.iter().map(String::as_str).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptEntry {
    pub sha256: Option<String>,
    pub contains: Option<Needles>,
    pub ordinal: Option<usize>,
    pub response: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScriptFile {
    #[serde(default)]
    responses: Vec<ScriptEntry>,
}

pub fn sha256_hex(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

#[derive(Debug)]
pub struct ScriptedBackend {
    entries: Vec<ScriptEntry>,
    sequence: Vec<usize>,
    cursor: AtomicUsize,
    calls: AtomicUsize,
    source: PathBuf,
}

impl ScriptedBackend {
    pub fn from_entries(entries: Vec<ScriptEntry>) -> Self {
        let sequence = entries
            .iter()
            .enumerate()
            .filter(|(_, e)| e.sha256.is_none() && e.contains.is_none() && e.ordinal.is_none())
            .map(|(i, _)| i)
            .collect();
        ScriptedBackend {
            entries,
            sequence,
            cursor: AtomicUsize::new(0),
            calls: AtomicUsize::new(0),
            source: PathBuf::from("<inline>"),
        }
    }

    /// Plain sequence script.
    pub fn sequence<S: Into<String>>(responses: impl IntoIterator<Item = S>) -> Self {
        Self::from_entries(
            responses
                .into_iter()
                .map(|r| ScriptEntry {
                    sha256: None,
                    contains: None,
                    ordinal: None,
                    response: r.into(),
                })
                .collect(),
        )
    }

    pub fn from_toml(text: &str) -> Result<Self, GatewayError> {
        let file: ScriptFile = toml::from_str(text)
            .map_err(|e| GatewayError::new(GatewayErrorKind::Config, format!("invalid script: {e}")))?;
        Ok(Self::from_entries(file.responses))
    }

    pub fn load(path: &Path) -> Result<Self, GatewayError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            GatewayError::new(GatewayErrorKind::Config, format!("cannot read script {}: {e}", path.display()))
        })?;
        let mut b = Self::from_toml(&text)?;
        b.source = path.to_path_buf();
        Ok(b)
    }

    fn keyed(&self, prompt: &str, call: usize) -> Option<&ScriptEntry> {
        let digest = sha256_hex(prompt);
        if let Some(e) = self.entries.iter().find(|e| e.sha256.as_deref() == Some(digest.as_str())) {
            return Some(e);
        }
        if let Some(e) = self.entries.iter().find(|e| e.ordinal == Some(call)) {
            return Some(e);
        }
        let mut best: Option<(usize, &ScriptEntry)> = None;
        for e in &self.entries {
            let Some(needles) = &e.contains else { continue };
            let list = needles.list();
            if list.iter().all(|n| prompt.contains(n)) {
                let score: usize = list.iter().map(|n| n.len()).sum();
                if best.is_none_or(|(b, _)| score > b) {
                    best = Some((score, e));
                }
            }
        }
        best.map(|(_, e)| e)
    }
}

impl Backend for ScriptedBackend {
    fn complete(&self, prompt: &str) -> Result<String, GatewayError> {
        let call = self.calls.fetch_add(1, Ordering::SeqCst) + 1;
        if let Some(e) = self.keyed(prompt, call) {
            return Ok(e.response.clone());
        }
        let k = self.cursor.fetch_add(1, Ordering::SeqCst);
        match self.sequence.get(k) {
            Some(&i) => Ok(self.entries[i].response.clone()),
            None => Err(GatewayError::new(
                GatewayErrorKind::ScriptExhausted,
                format!("no scripted response left for call {call} ({} sequence entries)", self.sequence.len()),
            )),
        }
    }

    fn describe(&self) -> String {
        let name = self.source.file_name().map_or_else(|| self.source.display().to_string(), |n| n.to_string_lossy().into_owned());
        format!("scripted:{name}")
    }
}
