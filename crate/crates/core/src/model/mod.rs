//! Project data model: work packages, dependencies, use-cases and
//! demonstrator targets, plus the readiness scales they are expressed in.

mod consolidate;
mod file;
mod validate;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use consolidate::{consolidate, AppliedDefault, ConsolidatedInput, MissingInfo, MissingIssue, Subject};
pub use file::{parse_model, parse_model_with, serialize_model, ModelError, ParseOptions, Parsed};
pub use validate::{has_errors, validate_model, Diagnostic, DiagnosticCode, Severity};

/// Technology readiness level, always within `1..=9`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "u8")]
pub struct TrlLevel(u8);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("TRL {0} is outside the range 1..=9")]
pub struct TrlRangeError(pub i64);

impl TrlLevel {
    pub const MIN: TrlLevel = TrlLevel(1);
    pub const MAX: TrlLevel = TrlLevel(9);

    pub fn new(value: i64) -> Result<Self, TrlRangeError> {
        if (1..=9).contains(&value) {
            Ok(TrlLevel(value as u8))
        } else {
            Err(TrlRangeError(value))
        }
    }

    /// Clamps into range; used where arithmetic on levels may step outside.
    pub fn saturating(value: i64) -> Self {
        TrlLevel(value.clamp(1, 9) as u8)
    }

    pub fn get(self) -> u8 {
        self.0
    }

    pub fn all() -> impl Iterator<Item = TrlLevel> {
        (1..=9).map(TrlLevel)
    }
}

impl TryFrom<i64> for TrlLevel {
    type Error = TrlRangeError;

    fn try_from(value: i64) -> Result<Self, Self::Error> {
        TrlLevel::new(value)
    }
}

impl From<TrlLevel> for u8 {
    fn from(level: TrlLevel) -> u8 {
        level.0
    }
}

impl fmt::Display for TrlLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TRL {}", self.0)
    }
}

/// Readiness of the code/data a use-case provider delivers for integration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ReadinessGrade {
    /// Nothing delivered.
    G0,
    /// Sample data only.
    G1,
    /// Representative data and interfaces.
    G2,
    /// Industrial artifacts with baselines or benchmarks.
    G3,
    /// Artifacts usable in the operational environment.
    G4,
}

impl ReadinessGrade {
    pub const ALL: [ReadinessGrade; 5] = [
        ReadinessGrade::G0,
        ReadinessGrade::G1,
        ReadinessGrade::G2,
        ReadinessGrade::G3,
        ReadinessGrade::G4,
    ];

    pub fn description(self) -> &'static str {
        match self {
            ReadinessGrade::G0 => "no artifacts",
            ReadinessGrade::G1 => "sample data",
            ReadinessGrade::G2 => "representative data and interfaces",
            ReadinessGrade::G3 => "industrial artifacts with baselines",
            ReadinessGrade::G4 => "operational environment",
        }
    }
}

impl fmt::Display for ReadinessGrade {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl std::str::FromStr for ReadinessGrade {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ReadinessGrade::ALL
            .into_iter()
            .find(|g| g.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown readiness grade `{s}` (expected G0..G4)"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WpKind {
    Technical,
    Dissemination,
    Management,
    Demonstration,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DependencyKind {
    Data,
    Temporal,
    Control,
    Functional,
}

impl DependencyKind {
    /// Only data and temporal dependencies take part in TRL propagation.
    pub fn is_propagated(self) -> bool {
        matches!(self, DependencyKind::Data | DependencyKind::Temporal)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Certainty {
    #[default]
    Direct,
    Uncertain,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Qualities {
    FunctionalOnly,
    FunctionalAndExtraFunctional,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkPackage {
    pub id: String,
    pub name: String,
    pub kind: WpKind,
    pub target_trl: Option<TrlLevel>,
    pub estimated_trl: Option<TrlLevel>,
    /// Explicit inclusion/exclusion from TRL analysis; `None` means the kind default.
    pub analyzed: Option<bool>,
    pub use_cases: BTreeSet<String>,
}

impl WorkPackage {
    pub fn new(id: impl Into<String>, name: impl Into<String>, kind: WpKind) -> Self {
        WorkPackage {
            id: id.into(),
            name: name.into(),
            kind,
            target_trl: None,
            estimated_trl: None,
            analyzed: None,
            use_cases: BTreeSet::new(),
        }
    }

    /// Technical and demonstration WPs are analyzed unless switched off;
    /// management and dissemination WPs only when switched on.
    pub fn is_analyzed(&self) -> bool {
        self.analyzed
            .unwrap_or(matches!(self.kind, WpKind::Technical | WpKind::Demonstration))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WpDependency {
    pub from: String,
    pub to: String,
    pub kind: DependencyKind,
    pub certainty: Certainty,
}

impl WpDependency {
    pub fn new(from: impl Into<String>, to: impl Into<String>, kind: DependencyKind, certainty: Certainty) -> Self {
        WpDependency { from: from.into(), to: to.into(), kind, certainty }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UseCase {
    pub id: String,
    pub provider: String,
    pub framework_group: Option<String>,
    pub readiness: Option<ReadinessGrade>,
}

impl UseCase {
    pub fn new(id: impl Into<String>, provider: impl Into<String>) -> Self {
        UseCase { id: id.into(), provider: provider.into(), framework_group: None, readiness: None }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DemonstratorTarget {
    pub id: String,
    pub name: String,
    pub target_trl: Option<TrlLevel>,
    pub covered_wps: BTreeSet<String>,
    pub use_cases: BTreeSet<String>,
    pub qualities: Qualities,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectModel {
    pub name: String,
    pub blanket_trl_range: Option<(TrlLevel, TrlLevel)>,
    pub work_packages: Vec<WorkPackage>,
    pub dependencies: Vec<WpDependency>,
    pub use_cases: Vec<UseCase>,
    pub demonstrators: Vec<DemonstratorTarget>,
}

impl ProjectModel {
    pub fn wp(&self, id: &str) -> Option<&WorkPackage> {
        self.work_packages.iter().find(|wp| wp.id == id)
    }

    pub fn wp_mut(&mut self, id: &str) -> Option<&mut WorkPackage> {
        self.work_packages.iter_mut().find(|wp| wp.id == id)
    }

    pub fn use_case(&self, id: &str) -> Option<&UseCase> {
        self.use_cases.iter().find(|uc| uc.id == id)
    }

    pub fn use_case_mut(&mut self, id: &str) -> Option<&mut UseCase> {
        self.use_cases.iter_mut().find(|uc| uc.id == id)
    }

    pub fn demonstrator(&self, id: &str) -> Option<&DemonstratorTarget> {
        self.demonstrators.iter().find(|d| d.id == id)
    }

    pub fn demonstrator_mut(&mut self, id: &str) -> Option<&mut DemonstratorTarget> {
        self.demonstrators.iter_mut().find(|d| d.id == id)
    }

    pub fn analyzed_wps(&self) -> impl Iterator<Item = &WorkPackage> {
        self.work_packages.iter().filter(|wp| wp.is_analyzed())
    }

    /// Use-cases associated with a WP, resolved against the model.
    pub fn use_cases_of<'a>(&'a self, wp: &'a WorkPackage) -> impl Iterator<Item = &'a UseCase> + 'a {
        wp.use_cases.iter().filter_map(move |id| self.use_case(id))
    }
}

/// IDs are case-sensitive tokens over `[A-Za-z0-9_.-]`.
pub fn is_valid_id(id: &str) -> bool {
    !id.is_empty() && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '-'))
}
