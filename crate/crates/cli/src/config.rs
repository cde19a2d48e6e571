use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use optspec_core::llm::{sha256_hex, LlmConfig};
use optspec_core::pipeline::{ExternalRuntime, VariantConfig};
use optspec_core::SolverParams;

use crate::Failure;

/// Contents of `--config`. Relative paths are taken from the file's
/// directory.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub few_shots: Option<PathBuf>,
    pub scratch: Option<PathBuf>,
    pub records: Option<PathBuf>,
    pub model_label: Option<String>,
    pub default_backend: Option<String>,
    #[serde(default)]
    pub backends: BTreeMap<String, LlmConfig>,
    pub solver: Option<SolverParams>,
    pub runtime: Option<ExternalRuntime>,
    /// Custom variants; a label equal to a preset replaces it.
    #[serde(default)]
    pub variants: Vec<VariantConfig>,
}

/// Global flags as parsed.
#[derive(Debug, Clone, Default)]
pub struct GlobalFlags {
    pub config: Option<PathBuf>,
    pub llm_backend: Option<String>,
    pub jobs: Option<usize>,
    pub seed: Option<u64>,
    pub timeout: Option<f64>,
}

/// Flags over file over defaults.
#[derive(Debug, Clone, Serialize)]
pub struct Resolved {
    pub few_shots: PathBuf,
    pub scratch: PathBuf,
    pub records: PathBuf,
    pub model_label: Option<String>,
    pub backend_name: Option<String>,
    pub backend: Option<LlmConfig>,
    pub solver: SolverParams,
    pub runtime: ExternalRuntime,
    pub variants: Vec<VariantConfig>,
    pub jobs: usize,
    pub seed: u64,
}

fn anchor(base: &Path, p: PathBuf) -> PathBuf {
    if p.is_absolute() {
        p
    } else {
        base.join(p)
    }
}

impl Resolved {
    pub fn load(flags: &GlobalFlags) -> Result<Self, Failure> {
        let (file, base) = match &flags.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Failure::usage(format!("cannot read config {}: {e}", path.display())))?;
                let file: FileConfig = toml::from_str(&text)
                    .map_err(|e| Failure::usage(format!("invalid config {}: {e}", path.display())))?;
                (file, path.parent().map(Path::to_path_buf).unwrap_or_default())
            }
            None => (FileConfig::default(), PathBuf::new()),
        };
        let backend_name = flags.llm_backend.clone().or(file.default_backend.clone());
        let backend = match &backend_name {
            None => None,
            Some(name) => Some(match name.strip_prefix("scripted:") {
                Some(path) => LlmConfig::scripted(path),
                None => {
                    let mut cfg = file
                        .backends
                        .get(name)
                        .cloned()
                        .ok_or_else(|| Failure::usage(format!("no backend named '{name}' in the config")))?;
                    if let optspec_core::llm::BackendConfig::Scripted { script } = &mut cfg.backend {
                        *script = anchor(&base, script.clone());
                    }
                    cfg
                }
            }),
        };
        let solver = file.solver.unwrap_or_default();
        solver.validate().map_err(Failure::usage)?;
        let mut runtime = file.runtime.clone().unwrap_or_default();
        if let Some(t) = flags.timeout {
            runtime.timeout_secs = t;
        }
        runtime.validate().map_err(Failure::usage)?;
        // The runtime runs inside each attempt directory, so path-like
        // arguments must not stay relative.
        for arg in &mut runtime.command {
            if arg.contains('/') && Path::new(arg.as_str()).is_relative() {
                let p = anchor(&base, PathBuf::from(&*arg));
                let p = std::path::absolute(&p).unwrap_or(p);
                *arg = p.display().to_string();
            }
        }
        for v in &file.variants {
            v.validate().map_err(Failure::usage)?;
        }
        if flags.jobs == Some(0) {
            return Err(Failure::usage("--jobs must be at least 1"));
        }
        Ok(Resolved {
            few_shots: anchor(&base, file.few_shots.clone().unwrap_or_else(|| "fewshot".into())),
            scratch: anchor(&base, file.scratch.clone().unwrap_or_else(|| "scratch".into())),
            records: anchor(&base, file.records.clone().unwrap_or_else(|| "records".into())),
            model_label: file.model_label.clone(),
            backend_name,
            backend,
            solver,
            runtime,
            variants: file.variants,
            jobs: flags.jobs.unwrap_or(1),
            seed: flags.seed.unwrap_or(0),
        })
    }

    /// Digest of the resolved settings, for replay.
    pub fn digest(&self) -> String {
        sha256_hex(&serde_json::to_string(self).expect("config serializes"))
    }

    /// A configured variant, else a preset; presets get the configured
    /// solver parameters.
    pub fn variant(&self, label: &str) -> Result<VariantConfig, Failure> {
        if let Some(v) = self.variants.iter().find(|v| v.label == label) {
            return Ok(v.clone());
        }
        let mut v = VariantConfig::preset(label).ok_or_else(|| {
            Failure::usage(format!(
                "unknown variant '{label}' (presets: Ampl1-4, Python1-4, Baseline; or define it in the config)"
            ))
        })?;
        v.solver_params = self.solver;
        Ok(v)
    }
}
