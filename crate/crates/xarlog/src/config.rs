// SPDX-License-Identifier: Apache-2.0

//! JSON configuration file. Unknown keys are rejected and everything is
//! validated before any subcommand runs.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use xarlog_core::assessment::DEFAULT_MODELS;
use xarlog_core::chunk::{BudgetError, ByteRatio, TokenBudget};
use xarlog_core::classify::{ClassifierRules, DEFAULT_WARNING_PATTERNS};
use xarlog_core::interrogate::{RenderError, Template, TemplateError, TemplateSet};

pub const DEFAULT_CONFIG_PATH: &str = "xarlog.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BackendKind {
    HttpChat,
    Stub,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendConfig {
    pub id: String,
    pub kind: BackendKind,
    #[serde(default)]
    pub endpoint_url: Option<String>,
    /// Stub response table. Relative paths resolve against the config file.
    #[serde(default)]
    pub fixture_path: Option<PathBuf>,
    pub model_name: String,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
    #[serde(default)]
    pub temperature: f64,
    /// Per-request timeout in seconds.
    #[serde(default = "default_timeout")]
    pub timeout: f64,
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
}

fn default_max_tokens() -> u32 {
    512
}

fn default_timeout() -> f64 {
    60.0
}

fn default_max_retries() -> u32 {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BudgetConfig {
    pub max_prompt_tokens: usize,
    pub reserved_tokens: usize,
    pub bytes_per_token: usize,
}

impl Default for BudgetConfig {
    fn default() -> Self {
        let b = TokenBudget::default();
        Self {
            max_prompt_tokens: b.max_prompt_tokens(),
            reserved_tokens: b.reserved_tokens(),
            bytes_per_token: ByteRatio::default().bytes_per_token,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifierConfig {
    pub warning_patterns: Vec<String>,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            warning_patterns: DEFAULT_WARNING_PATTERNS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GatewayConfig {
    pub max_inflight: usize,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        Self { max_inflight: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AssessmentConfig {
    pub models: Vec<String>,
}

impl Default for AssessmentConfig {
    fn default() -> Self {
        Self {
            models: DEFAULT_MODELS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AppConfig {
    pub backends: Vec<BackendConfig>,
    pub budget: BudgetConfig,
    pub classifier: ClassifierConfig,
    /// Extra `*.txt` templates; the file stem is the template id.
    pub template_dir: Option<PathBuf>,
    pub transcript_path: PathBuf,
    pub matrix_path: PathBuf,
    pub gateway: GatewayConfig,
    pub assessment: AssessmentConfig,
}

impl Default for AppConfig {
    fn default() -> Self {
        Self {
            backends: Vec::new(),
            budget: BudgetConfig::default(),
            classifier: ClassifierConfig::default(),
            template_dir: None,
            transcript_path: "xarlog-transcript.jsonl".into(),
            matrix_path: "xarlog-matrix.json".into(),
            gateway: GatewayConfig::default(),
            assessment: AssessmentConfig::default(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("budget: {0}")]
    Budget(#[from] BudgetError),
    #[error("budget.bytes_per_token must be at least 1")]
    BytesPerToken,
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Reserve(#[from] RenderError),
    #[error("backend `{id}`: {reason}")]
    Backend { id: String, reason: String },
    #[error("gateway.max_inflight must be at least 1")]
    MaxInflight,
    #[error("assessment.models must list at least one model")]
    NoModels,
}

/// Fully validated configuration.
#[derive(Debug, Clone)]
pub struct Settings {
    pub config: AppConfig,
    pub budget: TokenBudget,
    pub estimator: ByteRatio,
    pub rules: ClassifierRules,
    pub templates: TemplateSet,
}

impl Settings {
    pub fn backend(&self, id: &str) -> Option<&BackendConfig> {
        self.config.backends.iter().find(|b| b.id == id)
    }
}

fn backend_error(id: &str, reason: &str) -> ConfigError {
    ConfigError::Backend {
        id: id.into(),
        reason: reason.into(),
    }
}

impl AppConfig {
    /// Loads `path`. When `path` is `None` the default file is used if it
    /// exists, and built-in defaults otherwise.
    pub fn load(path: Option<&Path>) -> Result<Settings, ConfigError> {
        let (path, required) = match path {
            Some(p) => (p.to_path_buf(), true),
            None => (PathBuf::from(DEFAULT_CONFIG_PATH), false),
        };
        let config = match fs::read_to_string(&path) {
            Ok(text) => {
                let mut cfg: AppConfig =
                    serde_json::from_str(&text).map_err(|source| ConfigError::Json { path: path.clone(), source })?;
                cfg.resolve_paths(path.parent().unwrap_or(Path::new("")));
                cfg
            }
            Err(e) if !required && e.kind() == std::io::ErrorKind::NotFound => AppConfig::default(),
            Err(source) => return Err(ConfigError::Read { path, source }),
        };
        config.validate()
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for b in &mut self.backends {
            if let Some(p) = b.fixture_path.as_mut() {
                fix(p);
            }
        }
        if let Some(p) = self.template_dir.as_mut() {
            fix(p);
        }
        fix(&mut self.transcript_path);
        fix(&mut self.matrix_path);
    }

    pub fn validate(self) -> Result<Settings, ConfigError> {
        let budget = TokenBudget::new(self.budget.max_prompt_tokens, self.budget.reserved_tokens)?;
        if self.budget.bytes_per_token == 0 {
            return Err(ConfigError::BytesPerToken);
        }
        let estimator = ByteRatio {
            bytes_per_token: self.budget.bytes_per_token,
        };
        if self.gateway.max_inflight == 0 {
            return Err(ConfigError::MaxInflight);
        }
        if self.assessment.models.is_empty() {
            return Err(ConfigError::NoModels);
        }

        let mut ids = BTreeSet::new();
        for b in &self.backends {
            if !ids.insert(b.id.as_str()) {
                return Err(backend_error(&b.id, "duplicate id"));
            }
            match b.kind {
                BackendKind::HttpChat if b.endpoint_url.as_deref().is_none_or(str::is_empty) => {
                    return Err(backend_error(&b.id, "HttpChat needs endpoint_url"))
                }
                BackendKind::Stub if b.fixture_path.is_none() => {
                    return Err(backend_error(&b.id, "Stub needs fixture_path"))
                }
                _ => {}
            }
            if b.max_tokens == 0 {
                return Err(backend_error(&b.id, "max_tokens must be positive"));
            }
            if !(0.0..=2.0).contains(&b.temperature) {
                return Err(backend_error(&b.id, "temperature must be within [0, 2]"));
            }
            if !(b.timeout.is_finite() && b.timeout > 0.0) {
                return Err(backend_error(&b.id, "timeout must be a positive number of seconds"));
            }
        }

        let mut templates = TemplateSet::default();
        if let Some(dir) = &self.template_dir {
            let entries = fs::read_dir(dir).map_err(|source| ConfigError::Read {
                path: dir.clone(),
                source,
            })?;
            let mut paths: Vec<PathBuf> = entries
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "txt"))
                .collect();
            paths.sort();
            for p in paths {
                let id = p.file_stem().unwrap_or_default().to_string_lossy().into_owned();
                let body = fs::read_to_string(&p).map_err(|source| ConfigError::Read {
                    path: p.clone(),
                    source,
                })?;
                templates.insert(Template::parse(&id, &body)?);
            }
        }
        templates.check_reserve(&budget, &estimator)?;

        let rules = ClassifierRules {
            warning_patterns: self.classifier.warning_patterns.clone(),
        };
        Ok(Settings {
            config: self,
            budget,
            estimator,
            rules,
            templates,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(json: &str) -> Result<Settings, ConfigError> {
        let cfg: AppConfig = serde_json::from_str(json).map_err(|source| ConfigError::Json {
            path: "t".into(),
            source,
        })?;
        cfg.validate()
    }

    #[test]
    fn defaults() {
        let s = parse("{}").unwrap();
        assert_eq!(s.budget, TokenBudget::default());
        assert_eq!(s.config.gateway.max_inflight, 4);
        assert_eq!(s.rules.warning_patterns.len(), 9);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(matches!(parse(r#"{"budgett": {}}"#), Err(ConfigError::Json { .. })));
        assert!(matches!(
            parse(r#"{"budget": {"max_prompt_tokens": 100, "extra": 1}}"#),
            Err(ConfigError::Json { .. })
        ));
    }

    #[test]
    fn backend_rules() {
        let http = r#"{"backends": [{"id": "g", "kind": "HttpChat", "model_name": "gpt-4"}]}"#;
        assert!(matches!(parse(http), Err(ConfigError::Backend { .. })));
        let stub = r#"{"backends": [{"id": "s", "kind": "Stub", "model_name": "m"}]}"#;
        assert!(matches!(parse(stub), Err(ConfigError::Backend { .. })));
        let hot = r#"{"backends": [{"id": "s", "kind": "Stub", "model_name": "m", "fixture_path": "f", "temperature": 2.5}]}"#;
        assert!(matches!(parse(hot), Err(ConfigError::Backend { .. })));
        let ok = r#"{"backends": [{"id": "s", "kind": "Stub", "model_name": "m", "fixture_path": "f"}]}"#;
        let s = parse(ok).unwrap();
        assert_eq!(s.backend("s").unwrap().max_retries, 3);
        assert_eq!(s.backend("s").unwrap().temperature, 0.0);
    }

    #[test]
    fn budget_checked() {
        assert!(matches!(
            parse(r#"{"budget": {"max_prompt_tokens": 100, "reserved_tokens": 50}}"#),
            Err(ConfigError::Budget(_))
        ));
        // default template does not fit in a 40-token reserve
        assert!(matches!(
            parse(r#"{"budget": {"max_prompt_tokens": 200, "reserved_tokens": 40}}"#),
            Err(ConfigError::Reserve(_))
        ));
    }
}
