//! Language configuration files: JSON with `language`, `wrapper`, and
//! `render` sections.
//!
//! ```json
//! {
//!   "language": {
//!     "name": "minilang",
//!     "extension": "mml",
//!     "command": ["minilang-check", "{file}"],
//!     "timeout_seconds": 10.0,
//!     "success_exit": 0
//!   },
//!   "wrapper": { "prefix": "", "suffix": "" },
//!   "render": { "separator": " ", "no_space": [] }
//! }
//! ```

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::harness::LanguageConfig;
use crate::treegrammar::RenderRules;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageSection {
    pub name: String,
    pub extension: String,
    /// Compiler argv template; `{file}` marks where the program path goes.
    pub command: Vec<String>,
    #[serde(default = "default_timeout")]
    pub timeout_seconds: f64,
    #[serde(default)]
    pub success_exit: i32,
}

fn default_timeout() -> f64 {
    30.0
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WrapperSection {
    #[serde(default)]
    pub prefix: String,
    #[serde(default)]
    pub suffix: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigFile {
    pub language: LanguageSection,
    #[serde(default)]
    pub wrapper: Option<WrapperSection>,
    #[serde(default)]
    pub render: RenderRules,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot parse language config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("compile command must contain the `{{file}}` placeholder exactly once, found {count}")]
    FilePlaceholder { count: usize },
    #[error("compile command is empty")]
    EmptyCommand,
}

impl ConfigFile {
    pub fn from_json(text: &str) -> Result<ConfigFile, ConfigError> {
        let cfg: ConfigFile = serde_json::from_str(text)?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn check(&self) -> Result<(), ConfigError> {
        if self.language.command.is_empty() {
            return Err(ConfigError::EmptyCommand);
        }
        let count = self
            .language
            .command
            .iter()
            .map(|arg| arg.matches("{file}").count())
            .sum();
        if count != 1 {
            return Err(ConfigError::FilePlaceholder { count });
        }
        Ok(())
    }

    pub fn language_config(&self) -> LanguageConfig {
        let wrapper = self.wrapper.as_ref().and_then(|w| {
            if w.prefix.is_empty() && w.suffix.is_empty() {
                None
            } else {
                Some((w.prefix.clone(), w.suffix.clone()))
            }
        });
        LanguageConfig {
            name: self.language.name.clone(),
            file_extension: self.language.extension.clone(),
            compile_command: self.language.command.clone(),
            entry_wrapper: wrapper,
            timeout: std::time::Duration::from_secs_f64(self.language.timeout_seconds),
            expected_success_exit: self.language.success_exit,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::treegrammar::TokenPat;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg = ConfigFile::from_json(
            r#"{"language": {"name": "x", "extension": "x", "command": ["true", "{file}"]}}"#,
        )
        .unwrap();
        assert_eq!(cfg.language.timeout_seconds, 30.0);
        assert_eq!(cfg.language.success_exit, 0);
        assert_eq!(cfg.render.separator, " ");
        let lc = cfg.language_config();
        assert!(lc.entry_wrapper.is_none());
    }

    #[test]
    fn placeholder_must_appear_exactly_once() {
        let err = ConfigFile::from_json(
            r#"{"language": {"name": "x", "extension": "x", "command": ["true"]}}"#,
        )
        .unwrap_err();
        assert!(matches!(err, ConfigError::FilePlaceholder { count: 0 }));
        let err = ConfigFile::from_json(
            r#"{"language": {"name": "x", "extension": "x", "command": ["cp", "{file}", "{file}"]}}"#,
        )
        .unwrap_err();
        assert!(matches!(err, ConfigError::FilePlaceholder { count: 2 }));
    }

    #[test]
    fn render_section_with_wildcards() {
        let cfg = ConfigFile::from_json(
            r#"{
                "language": {"name": "x", "extension": "x", "command": ["{file}"]},
                "render": {"separator": " ", "no_space": [["*", "("], [")", "*"]]}
            }"#,
        )
        .unwrap();
        assert_eq!(cfg.render.no_space.len(), 2);
        assert_eq!(cfg.render.no_space[0].0, TokenPat::Any);
        assert_eq!(cfg.render.no_space[0].1, TokenPat::Lit("(".to_string()));
    }

    #[test]
    fn wrapper_round_trips() {
        let cfg = ConfigFile::from_json(
            r#"{
                "language": {"name": "c", "extension": "c", "command": ["cc", "{file}"]},
                "wrapper": {"prefix": "int main(void) {\n", "suffix": "\n}\n"}
            }"#,
        )
        .unwrap();
        let lc = cfg.language_config();
        let (prefix, suffix) = lc.entry_wrapper.unwrap();
        assert!(prefix.starts_with("int main"));
        assert!(suffix.ends_with("}\n"));
        let json = serde_json::to_string(&cfg).unwrap();
        assert_eq!(ConfigFile::from_json(&json).unwrap(), cfg);
    }
}
