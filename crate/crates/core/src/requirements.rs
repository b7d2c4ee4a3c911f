//! Block 7: templated requirements for the recommended demonstration and a
//! WP improvement plan for reaching higher levels.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::depgraph::WpGraph;
use crate::feasibility::{DemonstrationLevel, DemonstratorAssessment, Mitigation, MitigationAction};
use crate::model::{DependencyKind, ProjectModel};
use crate::quality::ComplianceReport;

pub const DEFAULT_EXTRA_FUNCTIONAL_ATTRIBUTES: [&str; 5] =
    ["performance", "latency", "throughput", "explainability", "resource efficiency"];

pub fn default_extra_functional_attributes() -> Vec<String> {
    DEFAULT_EXTRA_FUNCTIONAL_ATTRIBUTES.iter().map(|s| s.to_string()).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RequirementKind {
    Functional,
    ExtraFunctional,
    Integration,
    Validation,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum RequirementSubject {
    WorkPackage { id: String },
    Demonstrator { id: String },
    Edge { from: String, to: String },
}

impl fmt::Display for RequirementSubject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RequirementSubject::WorkPackage { id } | RequirementSubject::Demonstrator { id } => f.write_str(id),
            RequirementSubject::Edge { from, to } => write!(f, "{from}->{to}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RequirementSource {
    LevelTemplate,
    ComplianceGap,
    DependencyEdge,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Requirement {
    pub id: String,
    pub kind: RequirementKind,
    pub subject: RequirementSubject,
    pub statement: String,
    pub source: RequirementSource,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImprovementAction {
    pub wp_ids: Vec<String>,
    pub action: String,
    pub mitigation: MitigationAction,
    /// Level the demonstrator is recommended at once the action is applied.
    pub unlocks: DemonstrationLevel,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequirementsSpec {
    pub demo_id: String,
    pub level: DemonstrationLevel,
    pub scope: Vec<String>,
    pub requirements: Vec<Requirement>,
    pub improvement_plan: Vec<ImprovementAction>,
}

impl RequirementsSpec {
    pub fn count(&self, kind: RequirementKind) -> usize {
        self.requirements.iter().filter(|r| r.kind == kind).count()
    }
}

/// Requirements with default attributes and no compliance detail; each
/// improvement entry is assumed to unlock nothing beyond the current level.
pub fn elaborate(assessment: &DemonstratorAssessment, model: &ProjectModel, graph: &WpGraph) -> RequirementsSpec {
    elaborate_with(
        assessment,
        model,
        graph,
        &default_extra_functional_attributes(),
        None,
        |_| assessment.recommended_level,
    )
}

/// Ids are `<demo>/<kind letter>/<subject>`; `/` and `>` never occur in
/// model ids, so ids cannot collide.
pub fn elaborate_with(
    assessment: &DemonstratorAssessment,
    model: &ProjectModel,
    graph: &WpGraph,
    attributes: &[String],
    compliance: Option<&ComplianceReport>,
    mut unlocks: impl FnMut(&Mitigation) -> DemonstrationLevel,
) -> RequirementsSpec {
    let demo = &assessment.demo_id;
    let level = assessment.recommended_level;
    let scope = &assessment.recommended_scope.wp_ids;
    let mut requirements = Vec::new();

    for wp_id in scope {
        let name = model.wp(wp_id).map_or("", |wp| wp.name.as_str());
        requirements.push(Requirement {
            id: format!("{demo}/F/{wp_id}"),
            kind: RequirementKind::Functional,
            subject: RequirementSubject::WorkPackage { id: wp_id.clone() },
            statement: format!(
                "{wp_id} ({name}) shall realise its functional capabilities within demonstrator {demo} \
                 as part of a {} ({level}).",
                level.title().to_lowercase()
            ),
            source: RequirementSource::LevelTemplate,
        });
    }

    if level.integrates() {
        for edge in graph.direct_edges_within(scope) {
            let (from, to) = (&edge.from, &edge.to);
            let what = match edge.kind {
                DependencyKind::Temporal => "scheduled results",
                _ => "data outputs",
            };
            requirements.push(Requirement {
                id: format!("{demo}/I/{from}>{to}"),
                kind: RequirementKind::Integration,
                subject: RequirementSubject::Edge { from: from.clone(), to: to.clone() },
                statement: format!(
                    "{from} shall deliver its {what} to {to} over a documented interface; the input/output data \
                     structures and formatting exchanged between {from} and {to} shall be defined and agreed before \
                     integration starts."
                ),
                source: RequirementSource::DependencyEdge,
            });
        }
    }

    if level.extra_functional() {
        let wps = scope.iter().map(String::as_str).collect::<Vec<_>>().join(", ");
        for (i, attribute) in attributes.iter().enumerate() {
            requirements.push(Requirement {
                id: format!("{demo}/X/{}", i + 1),
                kind: RequirementKind::ExtraFunctional,
                subject: RequirementSubject::Demonstrator { id: demo.clone() },
                statement: format!(
                    "Demonstrator {demo} shall quantify the {attribute} of the integrated {wps} against baselines or \
                     benchmarking results."
                ),
                source: RequirementSource::LevelTemplate,
            });
        }
    }

    let declared_use_cases = model.demonstrator(demo).map(|d| d.use_cases.clone()).unwrap_or_default();
    for uc_id in &declared_use_cases {
        let provider = model.use_case(uc_id).map_or("", |uc| uc.provider.as_str());
        let gap = compliance.and_then(|c| {
            let rows: Vec<_> =
                c.rows.iter().filter(|r| r.use_case_id.as_deref() == Some(uc_id.as_str()) && !r.compliant).collect();
            (!rows.is_empty()).then(|| (c.required_grade, rows[0].actual))
        });
        let (statement, source) = match gap {
            Some((required, actual)) => (
                format!(
                    "Demonstrator {demo} shall be validated on the {uc_id} use-case ({provider}) with artifacts of \
                     readiness {required} or better (currently {}).",
                    actual.map_or_else(|| "not assessed".to_string(), |g| g.to_string())
                ),
                RequirementSource::ComplianceGap,
            ),
            None => (
                format!("Demonstrator {demo} shall be validated on the {uc_id} use-case ({provider})."),
                RequirementSource::LevelTemplate,
            ),
        };
        requirements.push(Requirement {
            id: format!("{demo}/V/{uc_id}"),
            kind: RequirementKind::Validation,
            subject: RequirementSubject::Demonstrator { id: demo.clone() },
            statement,
            source,
        });
    }

    let improvement_plan = assessment
        .mitigations
        .iter()
        .map(|m| ImprovementAction {
            wp_ids: m.action.wp_ids(),
            action: m.text.clone(),
            mitigation: m.action.clone(),
            unlocks: unlocks(m),
        })
        .collect();

    RequirementsSpec { demo_id: demo.clone(), level, scope: scope.iter().cloned().collect(), requirements, improvement_plan }
}
