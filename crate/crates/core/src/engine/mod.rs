//! Orchestrates Blocks 1 to 7 with their feedback loops.
//!
//! Feedback handled by re-running:
//! * 4 -> 2: an analyzed WP has no estimate; the target (or the configured
//!   fallback) is assumed and the gap analysis re-runs.
//! * 5 -> 3: artifact quality gaps of a demonstrator reach WPs with
//!   dependents; its availability caps are propagated and Block 3 re-runs.
//!
//! Advisory feedback (recorded, never re-run): 4 -> 1 for TRL targets that
//! need human input, 6 -> 3 when the recommendation stays below the target
//! level.

mod config;
mod diff;
mod overrides;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

pub use config::{ConfigError, EngineConfig, CONFIG_ENV};
pub use diff::{diff_reports, Change, DiffError, ReportDiff};
pub use overrides::{apply_overrides, parse_overrides, Override, OverrideError, OverrideOp};

use crate::depgraph::{
    bottlenecks, build_graph, detect_structure, model_caps, propagate, AdjustedTrlMap, PropagationError,
    StructureReport,
};
use crate::feasibility::{
    achievable_demo_trl_with, recommend_level, DemoContext, DemonstrationLevel, DemonstratorAssessment,
    FeasibilityError, RiskLevel,
};
use crate::model::{
    consolidate, has_errors, validate_model, AppliedDefault, ConsolidatedInput, Diagnostic, MissingInfo, MissingIssue,
    ProjectModel, Severity, TrlLevel,
};
use crate::quality::{assess_compliance, ComplianceReport};
use crate::requirements::{elaborate_with, RequirementsSpec};
use crate::trlgap::{demo_gap_table, gap_rows, DemoGap, WpGap};

pub const REPORT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedbackEvent {
    pub from_block: u8,
    pub to_block: u8,
    pub reason: String,
    /// Pass during which the event fired, starting at 1.
    pub iteration: u32,
    /// Whether the engine re-ran from `to_block`.
    pub rerun: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConsolidationSummary {
    pub flags: Vec<MissingInfo>,
    pub defaults_applied: Vec<AppliedDefault>,
    /// Non-fatal validation findings.
    pub warnings: Vec<Diagnostic>,
}

/// Adjusted TRLs a demonstrator sees once its artifact availability caps
/// are applied.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DemoView {
    pub demo_id: String,
    pub caps: BTreeMap<String, TrlLevel>,
    pub adjusted: AdjustedTrlMap,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub report_version: u32,
    pub project: String,
    pub overrides: Vec<String>,
    pub consolidated: ConsolidationSummary,
    pub gaps: Vec<WpGap>,
    /// Analyzed WPs left out of the gap table for lack of a target.
    pub incomplete_gaps: Vec<String>,
    pub demo_gaps: Vec<DemoGap>,
    pub adjusted: AdjustedTrlMap,
    pub structure: StructureReport,
    pub demo_views: Vec<DemoView>,
    pub compliance: Vec<ComplianceReport>,
    pub assessments: Vec<DemonstratorAssessment>,
    pub specs: Vec<RequirementsSpec>,
    pub feedback: Vec<FeedbackEvent>,
    pub passes: u32,
    pub config_used: EngineConfig,
}

impl AnalysisReport {
    pub fn assessment(&self, demo_id: &str) -> Option<&DemonstratorAssessment> {
        self.assessments.iter().find(|a| a.demo_id == demo_id)
    }

    pub fn spec(&self, demo_id: &str) -> Option<&RequirementsSpec> {
        self.specs.iter().find(|s| s.demo_id == demo_id)
    }

    pub fn has_shortfall(&self) -> bool {
        self.assessments.iter().any(|a| a.shortfall > 0)
    }

    /// A recommended or targeted level/use-case combination is impractical.
    pub fn has_impractical(&self) -> bool {
        self.assessments
            .iter()
            .any(|a| a.risk == RiskLevel::Impractical || a.target_risk == Some(RiskLevel::Impractical))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EngineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Override(#[from] OverrideError),
    #[error("model is invalid: {}", summary(.diagnostics))]
    ValidationFailed { diagnostics: Vec<Diagnostic> },
    #[error("feedback did not settle within {limit} pass(es); pending: {pending}")]
    IterationLimitExceeded { limit: u32, pending: String },
    #[error(transparent)]
    Propagation(#[from] PropagationError),
    #[error(transparent)]
    Feasibility(#[from] FeasibilityError),
}

fn summary(diagnostics: &[Diagnostic]) -> String {
    diagnostics.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// Applies `overrides` to a copy of `model` and runs the full pipeline.
pub fn run(model: &ProjectModel, config: &EngineConfig, overrides: &[Override]) -> Result<AnalysisReport, EngineError> {
    config.validate()?;
    let mut model = model.clone();
    apply_overrides(&mut model, overrides)?;
    let mut report = analyze(&model, config, true)?;
    report.overrides = overrides.iter().map(ToString::to_string).collect();
    Ok(report)
}

fn event(feedback: &mut Vec<FeedbackEvent>, from: u8, to: u8, iteration: u32, rerun: bool, reason: String) {
    feedback.push(FeedbackEvent { from_block: from, to_block: to, reason, iteration, rerun });
}

/// `plan` computes, for each improvement action, the level it unlocks by
/// re-running the analysis with the action applied.
fn analyze(model: &ProjectModel, config: &EngineConfig, plan: bool) -> Result<AnalysisReport, EngineError> {
    // Block 1
    let diagnostics = validate_model(model);
    if has_errors(&diagnostics) {
        return Err(EngineError::ValidationFailed {
            diagnostics: diagnostics.into_iter().filter(|d| d.severity == Severity::Error).collect(),
        });
    }
    let mut input: ConsolidatedInput = consolidate(model);
    let graph = build_graph(&input);
    let policy = config.policy();
    let table = &config.grade_cap_table;

    let mut feedback = Vec::new();
    let mut demo_caps: BTreeMap<String, BTreeMap<String, TrlLevel>> = BTreeMap::new();
    let mut dependency_gaps_seen: BTreeSet<String> = BTreeSet::new();
    let mut pass = 0;

    let human_input: Vec<String> = input
        .flags
        .iter()
        .filter(|f| matches!(f.issue, MissingIssue::MissingTargetTrl | MissingIssue::MissingDemonstratorTrl))
        .map(|f| f.subject.to_string())
        .collect();
    if !human_input.is_empty() {
        event(
            &mut feedback,
            4,
            1,
            1,
            false,
            format!("TRL targets must be deduced by a human for {}", human_input.join(", ")),
        );
    }

    loop {
        pass += 1;
        if pass > config.max_feedback_iterations {
            let pending = feedback.iter().rev().find(|e| e.rerun).map_or_else(String::new, |e| e.reason.clone());
            return Err(EngineError::IterationLimitExceeded { limit: config.max_feedback_iterations, pending });
        }

        // Block 2
        let (gaps, incomplete) = gap_rows(&input, config.gap_thresholds);
        let demo_gaps = demo_gap_table(&input, config.gap_thresholds);

        let missing: Vec<String> =
            input.model.analyzed_wps().filter(|wp| wp.estimated_trl.is_none()).map(|wp| wp.id.clone()).collect();
        if !missing.is_empty() {
            for wp_id in &missing {
                let wp = input.model.wp_mut(wp_id).expect("analyzed WP exists");
                let (value, provenance) = match wp.target_trl {
                    Some(t) => (t, "assumed equal to the WP target TRL"),
                    None => (config.fallback_estimate, "fallback_estimate; no estimate or target available"),
                };
                wp.estimated_trl = Some(value);
                input.defaults_applied.push(AppliedDefault {
                    path: format!("wp.{wp_id}.estimated_trl"),
                    value: value.get().to_string(),
                    provenance: provenance.into(),
                });
            }
            event(
                &mut feedback,
                4,
                2,
                pass,
                true,
                format!("no estimated TRL for {}; assumed and re-running the gap analysis", missing.join(", ")),
            );
            continue;
        }

        // Block 3
        let estimates: BTreeMap<String, TrlLevel> =
            input.model.analyzed_wps().filter_map(|wp| wp.estimated_trl.map(|e| (wp.id.clone(), e))).collect();
        let base_caps = model_caps(&input.model, &graph.nodes, table);
        let adjusted = propagate(&graph, &estimates, &base_caps)?;
        let mut structure = detect_structure(&graph);
        structure.bottlenecks = bottlenecks(&adjusted);

        let view_with = |caps: &BTreeMap<String, TrlLevel>| -> Result<AdjustedTrlMap, PropagationError> {
            let mut merged = base_caps.clone();
            for (wp, cap) in caps {
                merged.entry(wp.clone()).and_modify(|c| *c = (*c).min(*cap)).or_insert(*cap);
            }
            propagate(&graph, &estimates, &merged)
        };

        // Blocks 4 and 5
        let mut views: BTreeMap<String, AdjustedTrlMap> = BTreeMap::new();
        let mut compliance = Vec::new();
        let mut rerun = false;
        for demo in &input.model.demonstrators {
            let view = match demo_caps.get(&demo.id) {
                Some(caps) => view_with(caps)?,
                None => adjusted.clone(),
            };
            let target = match demo.target_trl {
                Some(t) => t,
                None => achievable_demo_trl_with(demo, &adjusted, &graph, config.standalone_trl_cap)?,
            };
            let report = assess_compliance(&input, &graph, demo, target, table);
            let caps = report.artifact_caps(table, config.standalone_trl_cap);
            let capped = view_with(&caps)?;
            let lowers = lowers_any(&capped, &view);
            let first_dependency_gap = report.affects_dependencies && dependency_gaps_seen.insert(demo.id.clone());

            if lowers && demo_caps.get(&demo.id) != Some(&caps) {
                demo_caps.insert(demo.id.clone(), caps);
                if report.affects_dependencies {
                    event(
                        &mut feedback,
                        5,
                        3,
                        pass,
                        true,
                        format!(
                            "artifact gaps of {} limit WPs with dependents; re-propagating with availability caps",
                            demo.id
                        ),
                    );
                    rerun = true;
                } else {
                    views.insert(demo.id.clone(), capped);
                }
            } else {
                if first_dependency_gap {
                    event(
                        &mut feedback,
                        5,
                        3,
                        pass,
                        false,
                        format!("artifact gaps of {} touch WPs with dependents but lower no TRL", demo.id),
                    );
                }
                views.insert(demo.id.clone(), view);
            }
            compliance.push(report);
        }
        if rerun {
            continue;
        }

        // Block 6
        let mut assessments = Vec::new();
        for (demo, report) in input.model.demonstrators.iter().zip(&compliance) {
            let ctx = DemoContext {
                model: &input.model,
                graph: &graph,
                demo,
                view: &views[&demo.id],
                compliance: report,
                policy: &policy,
            };
            let assessment = recommend_level(&ctx)?;
            if let Some(target) = assessment.target_level.filter(|t| *t > assessment.recommended_level) {
                event(
                    &mut feedback,
                    6,
                    3,
                    pass,
                    false,
                    format!(
                        "{} is recommended at {} below its target {target}; TRL upgrades of {} would be needed",
                        demo.id,
                        assessment.recommended_level,
                        demo.covered_wps.iter().cloned().collect::<Vec<_>>().join(", ")
                    ),
                );
            }
            assessments.push(assessment);
        }

        // Block 7
        let specs = assessments
            .iter()
            .zip(&compliance)
            .map(|(a, report)| {
                elaborate_with(a, &input.model, &graph, &config.extra_functional_attributes, Some(report), |m| {
                    if plan {
                        unlocked_level(model, config, &a.demo_id, &m.action.overrides(&a.demo_id))
                            .unwrap_or(a.recommended_level)
                    } else {
                        a.recommended_level
                    }
                })
            })
            .collect();

        let demo_views = demo_caps
            .iter()
            .map(|(id, caps)| DemoView { demo_id: id.clone(), caps: caps.clone(), adjusted: views[id].clone() })
            .collect();

        return Ok(AnalysisReport {
            report_version: REPORT_VERSION,
            project: input.model.name.clone(),
            overrides: Vec::new(),
            consolidated: ConsolidationSummary {
                flags: input.flags,
                defaults_applied: input.defaults_applied,
                warnings: diagnostics,
            },
            gaps,
            incomplete_gaps: incomplete,
            demo_gaps,
            adjusted,
            structure,
            demo_views,
            compliance,
            assessments,
            specs,
            feedback,
            passes: pass,
            config_used: config.clone(),
        });
    }
}

fn lowers_any(candidate: &AdjustedTrlMap, current: &AdjustedTrlMap) -> bool {
    candidate.0.iter().any(|(id, a)| current.adjusted(id).is_some_and(|c| a.adjusted < c))
}

fn unlocked_level(
    model: &ProjectModel,
    config: &EngineConfig,
    demo_id: &str,
    overrides: &[String],
) -> Option<DemonstrationLevel> {
    let overrides = parse_overrides(overrides).ok()?;
    let mut changed = model.clone();
    apply_overrides(&mut changed, &overrides).ok()?;
    let report = analyze(&changed, config, false).ok()?;
    report.assessment(demo_id).map(|a| a.recommended_level)
}
