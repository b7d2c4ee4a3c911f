use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::depgraph::GradeCapTable;
use crate::feasibility::{FeasibilityPolicy, LevelBands};
use crate::model::{ReadinessGrade, TrlLevel};
use crate::requirements::default_extra_functional_attributes;
use crate::trlgap::GapThresholds;

/// Environment variable naming a default engine configuration file.
pub const CONFIG_ENV: &str = "DEMOREQ_CONFIG";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    pub gap_thresholds: GapThresholds,
    pub grade_cap_table: GradeCapTable,
    pub level_trl_bands: LevelBands,
    /// Upper bound on full pipeline passes, feedback re-runs included.
    pub max_feedback_iterations: u32,
    pub strict_schema: bool,
    /// Cap for WPs a demonstrator has no artifacts for, and for covered
    /// WPs that do not interact.
    pub standalone_trl_cap: TrlLevel,
    /// Estimate assumed for a WP with neither estimate nor target.
    pub fallback_estimate: TrlLevel,
    /// Grade extra-functional levels expect from their artifacts.
    pub extra_functional_grade: ReadinessGrade,
    pub extra_functional_attributes: Vec<String>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            gap_thresholds: GapThresholds::default(),
            grade_cap_table: GradeCapTable::default(),
            level_trl_bands: LevelBands::default(),
            max_feedback_iterations: 3,
            strict_schema: true,
            standalone_trl_cap: TrlLevel::saturating(4),
            fallback_estimate: TrlLevel::saturating(4),
            extra_functional_grade: ReadinessGrade::G3,
            extra_functional_attributes: default_extra_functional_attributes(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {message}")]
    Io { path: String, message: String },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

impl EngineConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !self.grade_cap_table.is_complete_and_monotone() {
            return Err(ConfigError::Invalid("grade_cap_table must map G0..G4 monotonically".into()));
        }
        if !self.level_trl_bands.is_complete_and_monotone() {
            return Err(ConfigError::Invalid("level_trl_bands must map L1..L5 monotonically".into()));
        }
        if self.max_feedback_iterations < 1 {
            return Err(ConfigError::Invalid("max_feedback_iterations must be at least 1".into()));
        }
        if self.gap_thresholds.minor > self.gap_thresholds.major {
            return Err(ConfigError::Invalid("gap_thresholds.minor exceeds gap_thresholds.major".into()));
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let config: EngineConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.message().to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io { path: path.display().to_string(), message: e.to_string() })?;
        Self::from_toml_str(&text)
    }

    /// Config from the file named by [`CONFIG_ENV`], defaults when unset.
    pub fn from_env() -> Result<Self, ConfigError> {
        match std::env::var_os(CONFIG_ENV) {
            Some(path) if !path.is_empty() => Self::load(Path::new(&path)),
            _ => Ok(Self::default()),
        }
    }

    pub fn policy(&self) -> FeasibilityPolicy {
        FeasibilityPolicy {
            bands: self.level_trl_bands.clone(),
            gap_thresholds: self.gap_thresholds,
            grade_caps: self.grade_cap_table.clone(),
            standalone_trl: self.standalone_trl_cap,
            extra_functional_grade: self.extra_functional_grade,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        EngineConfig::default().validate().unwrap();
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let c = EngineConfig::from_toml_str("max_feedback_iterations = 5\n[grade_cap_table]\nG0 = 2\nG1 = 4\nG2 = 5\nG3 = 6\nG4 = 8\n")
            .unwrap();
        assert_eq!(c.max_feedback_iterations, 5);
        assert_eq!(c.grade_cap_table.cap(ReadinessGrade::G4), TrlLevel::new(8).unwrap());
        assert_eq!(c.level_trl_bands, LevelBands::default());
    }

    #[test]
    fn non_monotone_table_is_rejected() {
        let err = EngineConfig::from_toml_str("[grade_cap_table]\nG0 = 5\nG1 = 4\nG2 = 5\nG3 = 6\nG4 = 7\n").unwrap_err();
        assert!(matches!(err, ConfigError::Invalid(_)));
        assert!(EngineConfig::from_toml_str("max_feedback_iterations = 0").is_err());
        assert!(matches!(EngineConfig::from_toml_str("colour = 1"), Err(ConfigError::Parse(_))));
    }
}
