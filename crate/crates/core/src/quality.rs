//! Block 5 artifact quality gate.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::depgraph::{GradeCapTable, WpGraph};
use crate::model::{ConsolidatedInput, DemonstratorTarget, ReadinessGrade, TrlLevel};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QualityThreshold {
    pub trl: TrlLevel,
    pub required_grade: ReadinessGrade,
}

/// Lowest grade whose cap reaches `trl`; G4 when no grade does.
pub fn thresholds_for(trl: TrlLevel, table: &GradeCapTable) -> QualityThreshold {
    let required_grade = ReadinessGrade::ALL
        .into_iter()
        .find(|g| table.cap(*g) >= trl)
        .unwrap_or(ReadinessGrade::G4);
    QualityThreshold { trl, required_grade }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Finding {
    Compliant,
    InsufficientGrade,
    UngradedArtifact,
    /// The WP shares no use-case with the demonstrator.
    Unavailable,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplianceRow {
    pub wp_id: String,
    pub use_case_id: Option<String>,
    pub required: ReadinessGrade,
    pub actual: Option<ReadinessGrade>,
    pub compliant: bool,
    pub finding: Finding,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplianceReport {
    pub demo_id: String,
    pub target_trl: TrlLevel,
    pub required_grade: ReadinessGrade,
    pub rows: Vec<ComplianceRow>,
    pub corrective_actions: Vec<String>,
    pub affects_dependencies: bool,
}

impl ComplianceReport {
    pub fn is_compliant(&self) -> bool {
        self.rows.iter().all(|r| r.compliant)
    }

    pub fn unavailable_wps(&self) -> BTreeSet<String> {
        self.rows
            .iter()
            .filter(|r| r.finding == Finding::Unavailable)
            .map(|r| r.wp_id.clone())
            .collect()
    }

    /// Caps implied by what the demonstrator's own use-cases can supply:
    /// stand-alone level where nothing is available, grade cap of the best
    /// graded demo use-case otherwise.
    pub fn artifact_caps(&self, table: &GradeCapTable, standalone_cap: TrlLevel) -> BTreeMap<String, TrlLevel> {
        let mut by_wp: BTreeMap<&str, Vec<&ComplianceRow>> = BTreeMap::new();
        for row in &self.rows {
            by_wp.entry(row.wp_id.as_str()).or_default().push(row);
        }
        by_wp
            .into_iter()
            .filter_map(|(wp, rows)| {
                let cap = if rows.iter().all(|r| r.finding == Finding::Unavailable) {
                    Some(standalone_cap)
                } else {
                    rows.iter().filter_map(|r| r.actual).max().map(|g| table.cap(g))
                };
                cap.map(|c| (wp.to_string(), c))
            })
            .collect()
    }
}

/// Compares each (covered WP, shared use-case) pair against the grade the
/// target TRL requires. Covered WPs sharing no use-case with the
/// demonstrator are reported as unavailable.
pub fn assess_compliance(
    input: &ConsolidatedInput,
    graph: &WpGraph,
    demo: &DemonstratorTarget,
    target_trl: TrlLevel,
    table: &GradeCapTable,
) -> ComplianceReport {
    let model = &input.model;
    let required = thresholds_for(target_trl, table).required_grade;
    let mut rows = Vec::new();

    for wp_id in &demo.covered_wps {
        let shared: Vec<&String> = model
            .wp(wp_id)
            .map(|wp| wp.use_cases.intersection(&demo.use_cases).collect())
            .unwrap_or_default();
        if shared.is_empty() {
            rows.push(ComplianceRow {
                wp_id: wp_id.clone(),
                use_case_id: None,
                required,
                actual: None,
                compliant: false,
                finding: Finding::Unavailable,
            });
            continue;
        }
        for uc_id in shared {
            let actual = model.use_case(uc_id).and_then(|uc| uc.readiness);
            let finding = match actual {
                None => Finding::UngradedArtifact,
                Some(g) if g >= required => Finding::Compliant,
                Some(_) => Finding::InsufficientGrade,
            };
            rows.push(ComplianceRow {
                wp_id: wp_id.clone(),
                use_case_id: Some(uc_id.clone()),
                required,
                actual,
                compliant: finding == Finding::Compliant,
                finding,
            });
        }
    }

    let affects_dependencies = rows
        .iter()
        .filter(|r| !r.compliant)
        .any(|r| graph.direct_downstream(&r.wp_id).next().is_some());

    let corrective_actions = corrective_actions(demo, &rows, required, target_trl);

    ComplianceReport {
        demo_id: demo.id.clone(),
        target_trl,
        required_grade: required,
        rows,
        corrective_actions,
        affects_dependencies,
    }
}

fn corrective_actions(
    demo: &DemonstratorTarget,
    rows: &[ComplianceRow],
    required: ReadinessGrade,
    target: TrlLevel,
) -> Vec<String> {
    let mut actions = Vec::new();

    let unavailable: Vec<&str> = rows
        .iter()
        .filter(|r| r.finding == Finding::Unavailable)
        .map(|r| r.wp_id.as_str())
        .collect();
    if !unavailable.is_empty() {
        if demo.use_cases.is_empty() {
            actions.push(format!(
                "reference an industrial use-case for demonstrator {} (no artifacts available for {})",
                demo.id,
                unavailable.join(", ")
            ));
        } else {
            let ucs: Vec<&str> = demo.use_cases.iter().map(String::as_str).collect();
            actions.push(format!(
                "associate a demonstrator use-case ({}) with {} or source artifacts for them",
                ucs.join(", "),
                unavailable.join(", ")
            ));
        }
    }

    let mut ungraded = BTreeSet::new();
    let mut insufficient = BTreeMap::new();
    for row in rows {
        match (row.finding, &row.use_case_id) {
            (Finding::UngradedArtifact, Some(uc)) => {
                ungraded.insert(uc.as_str());
            }
            (Finding::InsufficientGrade, Some(uc)) => {
                insufficient.insert(uc.as_str(), row.actual);
            }
            _ => {}
        }
    }
    for uc in ungraded {
        actions.push(format!("assess artifact readiness of {uc} (>= {required} needed for {target})"));
    }
    for (uc, actual) in insufficient {
        let actual = actual.map_or_else(|| "ungraded".to_string(), |g| g.to_string());
        actions.push(format!("raise artifact readiness of {uc} from {actual} to {required} for {target}"));
    }
    actions
}
