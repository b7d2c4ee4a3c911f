//! Block 1: aggregate the model, apply default rules, flag what is missing.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Certainty, ProjectModel, TrlLevel};

/// The model element a flag or default refers to.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "type", content = "id", rename_all = "snake_case")]
pub enum Subject {
    WorkPackage(String),
    Demonstrator(String),
    UseCase(String),
    Dependency(String, String),
}

impl Subject {
    pub fn key(&self) -> String {
        match self {
            Subject::WorkPackage(id) | Subject::Demonstrator(id) | Subject::UseCase(id) => id.clone(),
            Subject::Dependency(from, to) => format!("{from}->{to}"),
        }
    }
}

impl fmt::Display for Subject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Subject::WorkPackage(id) => write!(f, "wp {id}"),
            Subject::Demonstrator(id) => write!(f, "demo {id}"),
            Subject::UseCase(id) => write!(f, "use-case {id}"),
            Subject::Dependency(from, to) => write!(f, "dependency {from}->{to}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingIssue {
    MissingTargetTrl,
    MissingEstimatedTrl,
    MissingReadiness,
    MissingDemonstratorTrl,
    UncertainDependency,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MissingInfo {
    pub subject: Subject,
    pub issue: MissingIssue,
    pub note: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AppliedDefault {
    pub path: String,
    pub value: String,
    pub provenance: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConsolidatedInput {
    pub model: ProjectModel,
    pub flags: Vec<MissingInfo>,
    pub defaults_applied: Vec<AppliedDefault>,
}

/// Applies the blanket-range default to analyzed WPs without a target and
/// flags every gap that cannot be defaulted. Demonstrator targets are never
/// defaulted. Idempotent.
pub fn consolidate(model: &ProjectModel) -> ConsolidatedInput {
    let mut model = model.clone();
    let mut flags = Vec::new();
    let mut defaults_applied = Vec::new();

    let blanket_low: Option<TrlLevel> = model.blanket_trl_range.map(|(lo, _)| lo);

    for wp in model.work_packages.iter_mut().filter(|wp| wp.is_analyzed()) {
        if wp.target_trl.is_none() {
            if let Some(low) = blanket_low {
                wp.target_trl = Some(low);
                defaults_applied.push(AppliedDefault {
                    path: format!("wp.{}.target_trl", wp.id),
                    value: low.get().to_string(),
                    provenance: "low bound of project.blanket_trl_range".into(),
                });
            } else {
                flags.push(MissingInfo {
                    subject: Subject::WorkPackage(wp.id.clone()),
                    issue: MissingIssue::MissingTargetTrl,
                    note: "no per-WP target and no blanket range to default from".into(),
                });
            }
        }
        if wp.estimated_trl.is_none() {
            flags.push(MissingInfo {
                subject: Subject::WorkPackage(wp.id.clone()),
                issue: MissingIssue::MissingEstimatedTrl,
                note: "no estimated achievable TRL in the WP planning".into(),
            });
        }
    }

    for uc in &model.use_cases {
        if uc.readiness.is_none() {
            flags.push(MissingInfo {
                subject: Subject::UseCase(uc.id.clone()),
                issue: MissingIssue::MissingReadiness,
                note: format!("artifact readiness of {} not assessed", uc.provider),
            });
        }
    }

    for demo in &model.demonstrators {
        if demo.target_trl.is_none() {
            flags.push(MissingInfo {
                subject: Subject::Demonstrator(demo.id.clone()),
                issue: MissingIssue::MissingDemonstratorTrl,
                note: "demonstrator TRL target must be deduced by a human".into(),
            });
        }
    }

    for dep in model.dependencies.iter().filter(|d| d.certainty == Certainty::Uncertain) {
        flags.push(MissingInfo {
            subject: Subject::Dependency(dep.from.clone(), dep.to.clone()),
            issue: MissingIssue::UncertainDependency,
            note: "uncertain or undefined input".into(),
        });
    }

    flags.sort_by_key(|a| (a.subject.key(), a.issue));
    flags.dedup();

    ConsolidatedInput { model, flags, defaults_applied }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{UseCase, WorkPackage, WpKind};

    fn t(v: i64) -> TrlLevel {
        TrlLevel::new(v).unwrap()
    }

    fn base() -> ProjectModel {
        ProjectModel {
            name: "p".into(),
            blanket_trl_range: Some((t(4), t(5))),
            work_packages: vec![
                WorkPackage::new("WP1", "a", WpKind::Technical),
                WorkPackage::new("WP7", "mgmt", WpKind::Management),
            ],
            dependencies: vec![],
            use_cases: vec![],
            demonstrators: vec![],
        }
    }

    #[test]
    fn blanket_low_is_the_default() {
        let c = consolidate(&base());
        assert_eq!(c.model.wp("WP1").unwrap().target_trl, Some(t(4)));
        assert_eq!(c.model.wp("WP7").unwrap().target_trl, None);
        assert_eq!(c.defaults_applied.len(), 1);
        assert_eq!(c.defaults_applied[0].path, "wp.WP1.target_trl");
        assert_eq!(c.flags.len(), 1);
        assert_eq!(c.flags[0].issue, MissingIssue::MissingEstimatedTrl);
    }

    #[test]
    fn complete_model_needs_nothing() {
        let mut m = base();
        m.work_packages[0].target_trl = Some(t(4));
        m.work_packages[0].estimated_trl = Some(t(4));
        let mut uc = UseCase::new("U", "Acme");
        uc.readiness = Some(crate::model::ReadinessGrade::G2);
        m.use_cases.push(uc);
        let c = consolidate(&m);
        assert!(c.flags.is_empty());
        assert!(c.defaults_applied.is_empty());
    }

    #[test]
    fn missing_target_without_blanket_is_flagged_once() {
        let mut m = base();
        m.blanket_trl_range = None;
        let c = consolidate(&m);
        let n = c.flags.iter().filter(|f| f.issue == MissingIssue::MissingTargetTrl).count();
        assert_eq!(n, 1);
    }

    #[test]
    fn idempotent() {
        let once = consolidate(&base());
        let twice = consolidate(&once.model);
        assert_eq!(once.model, twice.model);
    }
}
