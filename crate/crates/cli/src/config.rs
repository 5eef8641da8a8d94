//! Backend selection from a TOML file, command-line flags and the
//! environment.
//!
//! ```toml
//! backend = "external"
//! [external]
//! cmd = "smtinterpol -q"
//! dialect = "smtinterpol"
//! timeout_ms = 30000
//! ```

use std::time::Duration;

use serde::Deserialize;
use thiserror::Error;

use crate::external::{Dialect, ExternalConfig, DEFAULT_TIMEOUT};

pub const EXTERNAL_CMD_ENV: &str = "CDD_CHC_EXTERNAL_CMD";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    #[default]
    Builtin,
    External,
}

impl std::str::FromStr for BackendKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "builtin" => Ok(BackendKind::Builtin),
            "external" => Ok(BackendKind::External),
            other => Err(format!("unknown backend `{}` (expected builtin or external)", other)),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExternalSection {
    pub cmd: Option<String>,
    pub dialect: Option<Dialect>,
    pub timeout_ms: Option<u64>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub backend: Option<BackendKind>,
    #[serde(default)]
    pub external: ExternalSection,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid configuration: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("the external backend needs a command (--external-cmd, external.cmd or {EXTERNAL_CMD_ENV})")]
    MissingCommand,
    #[error("timeout must be positive")]
    ZeroTimeout,
    #[error("cannot split external command: {0}")]
    Command(#[from] shell_words::ParseError),
}

/// Validated backend settings. `external` is present whenever a command is
/// known; with the builtin backend it serves as a fallback.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BackendSettings {
    pub kind: BackendKind,
    pub external: Option<ExternalConfig>,
}

impl FileConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    /// Settings with command-line values (`flags`) taking precedence over
    /// the file, and `env_cmd` used only when neither names a command.
    pub fn resolve(&self, flags: &FileConfig, env_cmd: Option<String>) -> Result<BackendSettings, ConfigError> {
        let kind = flags.backend.or(self.backend).unwrap_or_default();
        let cmd = flags.external.cmd.clone().or_else(|| self.external.cmd.clone()).or(env_cmd);
        let dialect = flags.external.dialect.or(self.external.dialect).unwrap_or_default();
        let timeout = match flags.external.timeout_ms.or(self.external.timeout_ms) {
            Some(0) => return Err(ConfigError::ZeroTimeout),
            Some(ms) => Duration::from_millis(ms),
            None => DEFAULT_TIMEOUT,
        };
        let cmd = match cmd {
            Some(c) => Some(shell_words::split(&c)?).filter(|c| !c.is_empty()),
            None => None,
        };
        let external = cmd.map(|cmd| ExternalConfig { cmd, dialect, timeout });
        if kind == BackendKind::External && external.is_none() {
            return Err(ConfigError::MissingCommand);
        }
        Ok(BackendSettings { kind, external })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_and_env_is_last() {
        let file = FileConfig::from_toml(
            "backend = \"external\"\n[external]\ncmd = \"z3 -in\"\ndialect = \"mathsat\"\ntimeout_ms = 500\n",
        )
        .unwrap();
        let s = file.resolve(&FileConfig::default(), Some("other".into())).unwrap();
        assert_eq!(s.kind, BackendKind::External);
        let ext = s.external.unwrap();
        assert_eq!(ext.cmd, vec!["z3", "-in"]);
        assert_eq!(ext.dialect, Dialect::Mathsat);
        assert_eq!(ext.timeout, Duration::from_millis(500));
        let flags = FileConfig { backend: Some(BackendKind::Builtin), external: ExternalSection { cmd: Some("s".into()), ..Default::default() } };
        let s = file.resolve(&flags, None).unwrap();
        assert_eq!(s.kind, BackendKind::Builtin);
        assert_eq!(s.external.unwrap().cmd, vec!["s"]);
        let s = FileConfig::default().resolve(&FileConfig::default(), Some("sh -c 'echo a b'".into())).unwrap();
        let ext = s.external.unwrap();
        assert_eq!(ext.timeout, DEFAULT_TIMEOUT);
        assert_eq!(ext.cmd, vec!["sh", "-c", "echo a b"]);
    }

    #[test]
    fn rejects_incomplete_settings() {
        let ext = FileConfig { backend: Some(BackendKind::External), ..Default::default() };
        assert!(matches!(FileConfig::default().resolve(&ext, None), Err(ConfigError::MissingCommand)));
        assert!(matches!(FileConfig::from_toml("backend = \"z3\""), Err(ConfigError::Toml(_))));
        assert!(matches!(FileConfig::from_toml("[external]\ntimeout = 3"), Err(ConfigError::Toml(_))));
        let zero = FileConfig::from_toml("[external]\ntimeout_ms = 0").unwrap();
        assert!(matches!(zero.resolve(&FileConfig::default(), None), Err(ConfigError::ZeroTimeout)));
    }
}
