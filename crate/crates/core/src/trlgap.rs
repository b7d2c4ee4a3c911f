//! TRL scale definitions (original and software-adapted) and the Block 2
//! gap analysis.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::{ConsolidatedInput, TrlLevel};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrlDefinition {
    pub level: TrlLevel,
    pub original_text: &'static str,
    pub adapted_text: &'static str,
}

const TRL_TABLE: [(&str, &str); 9] = [
    (
        "Basic principles observed and reported",
        "Basic principles or algorithms identified and described",
    ),
    (
        "Technology concept and/or application formulated",
        "Software concept and intended application formulated",
    ),
    (
        "Analytical and experimental critical function and/or characteristic proof-of-concept",
        "Proof-of-concept algorithms developed and demonstrated in analytical or simulation environments",
    ),
    (
        "Component and/or breadboard validation in laboratory environment",
        "Individual software components prototyped and tested in controlled lab conditions",
    ),
    (
        "Component and/or breadboard validation in relevant environment",
        "Software modules integrated and tested with representative data and interfaces in a simulated or partially relevant environment",
    ),
    (
        "System/subsystem model or prototype demonstration in a relevant environment (ground or space)",
        "Prototype software integrated with relevant subsystems and tested in a relevant environment, e.g., hardware-in-the-loop",
    ),
    (
        "System prototype demonstration in a space environment",
        "Integrated software prototype demonstrated in an operational or high-fidelity simulated environment",
    ),
    (
        "Actual system completed and \"flight qualified\" through test and demonstration (ground or space)",
        "Fully developed software system qualified through rigorous testing under expected operational conditions",
    ),
    (
        "Actual system \"flight proven\" through successful mission operations",
        "Software system validated through successful operational use in the target environment",
    ),
];

pub fn trl_definition(level: TrlLevel) -> TrlDefinition {
    let (original_text, adapted_text) = TRL_TABLE[usize::from(level.get()) - 1];
    TrlDefinition { level, original_text, adapted_text }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapCategory {
    OnTrack,
    MinorGap,
    MajorGap,
}

/// A gap below `minor` is on track, below `major` is minor, otherwise major.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapThresholds {
    pub minor: i32,
    pub major: i32,
}

impl Default for GapThresholds {
    fn default() -> Self {
        GapThresholds { minor: 1, major: 2 }
    }
}

impl GapThresholds {
    pub fn categorize(&self, gap: i32) -> GapCategory {
        if gap < self.minor {
            GapCategory::OnTrack
        } else if gap < self.major {
            GapCategory::MinorGap
        } else {
            GapCategory::MajorGap
        }
    }
}

/// Default thresholds: `<= 0` on track, `1` minor, `>= 2` major.
pub fn categorize(gap: i32) -> GapCategory {
    GapThresholds::default().categorize(gap)
}

pub fn trl_gap(target: TrlLevel, estimated: TrlLevel) -> i32 {
    i32::from(target.get()) - i32::from(estimated.get())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WpGap {
    pub wp_id: String,
    pub target: TrlLevel,
    pub estimated: TrlLevel,
    pub gap: i32,
    pub category: GapCategory,
}

/// Demonstrator ambition against the per-WP level it builds on: the
/// demonstrator target minus the lowest per-WP target among covered WPs
/// (estimate when a WP has no target).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DemoGap {
    pub demo_id: String,
    pub target: TrlLevel,
    pub wp_level: TrlLevel,
    pub gap: i32,
    pub category: GapCategory,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GapError {
    #[error("incomplete TRL data for {}", .wp_ids.join(", "))]
    IncompleteInput { wp_ids: Vec<String> },
}

/// Rows for analyzed WPs with complete data plus the ids of analyzed WPs
/// lacking a target or estimate.
pub fn gap_rows(input: &ConsolidatedInput, thresholds: GapThresholds) -> (Vec<WpGap>, Vec<String>) {
    let mut rows = Vec::new();
    let mut incomplete = Vec::new();
    for wp in input.model.analyzed_wps() {
        match (wp.target_trl, wp.estimated_trl) {
            (Some(target), Some(estimated)) => {
                let gap = trl_gap(target, estimated);
                rows.push(WpGap {
                    wp_id: wp.id.clone(),
                    target,
                    estimated,
                    gap,
                    category: thresholds.categorize(gap),
                });
            }
            _ => incomplete.push(wp.id.clone()),
        }
    }
    rows.sort_by(|a, b| a.wp_id.cmp(&b.wp_id));
    incomplete.sort();
    (rows, incomplete)
}

pub fn gap_table(input: &ConsolidatedInput, thresholds: GapThresholds) -> Result<Vec<WpGap>, GapError> {
    let (rows, incomplete) = gap_rows(input, thresholds);
    if incomplete.is_empty() {
        Ok(rows)
    } else {
        Err(GapError::IncompleteInput { wp_ids: incomplete })
    }
}

pub fn demo_gap_table(input: &ConsolidatedInput, thresholds: GapThresholds) -> Vec<DemoGap> {
    let model = &input.model;
    let levels: BTreeMap<&str, TrlLevel> = model
        .work_packages
        .iter()
        .filter_map(|wp| wp.target_trl.or(wp.estimated_trl).map(|l| (wp.id.as_str(), l)))
        .collect();

    let mut out: Vec<DemoGap> = model
        .demonstrators
        .iter()
        .filter_map(|demo| {
            let target = demo.target_trl?;
            let wp_level = demo.covered_wps.iter().filter_map(|id| levels.get(id.as_str()).copied()).min()?;
            let gap = trl_gap(target, wp_level);
            Some(DemoGap {
                demo_id: demo.id.clone(),
                target,
                wp_level,
                gap,
                category: thresholds.categorize(gap),
            })
        })
        .collect();
    out.sort_by(|a, b| a.demo_id.cmp(&b.demo_id));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{consolidate, ProjectModel, WorkPackage, WpKind};
    use proptest::prelude::*;

    fn t(v: i64) -> TrlLevel {
        TrlLevel::new(v).unwrap()
    }

    #[test]
    fn definition_lookup() {
        assert!(trl_definition(t(5)).adapted_text.contains("representative data and interfaces"));
        assert!(trl_definition(t(1)).adapted_text.contains("algorithms"));
        assert!(trl_definition(t(9)).adapted_text.contains("target environment"));
        assert_eq!(trl_definition(t(4)).level, t(4));
    }

    #[test]
    fn categorize_examples() {
        assert_eq!(categorize(trl_gap(t(5), t(4))), GapCategory::MinorGap);
        assert_eq!(categorize(trl_gap(t(6), t(4))), GapCategory::MajorGap);
        assert_eq!(categorize(trl_gap(t(4), t(4))), GapCategory::OnTrack);
        assert_eq!(categorize(trl_gap(t(3), t(5))), GapCategory::OnTrack);
    }

    #[test]
    fn single_wp_negative_gap() {
        let mut wp = WorkPackage::new("WP1", "x", WpKind::Technical);
        wp.target_trl = Some(t(3));
        wp.estimated_trl = Some(t(5));
        let model = ProjectModel {
            name: "p".into(),
            blanket_trl_range: None,
            work_packages: vec![wp],
            dependencies: vec![],
            use_cases: vec![],
            demonstrators: vec![],
        };
        let rows = gap_table(&consolidate(&model), GapThresholds::default()).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].gap, -2);
        assert_eq!(rows[0].category, GapCategory::OnTrack);
    }

    #[test]
    fn incomplete_input_names_wps() {
        let model = ProjectModel {
            name: "p".into(),
            blanket_trl_range: None,
            work_packages: vec![
                WorkPackage::new("WP2", "x", WpKind::Technical),
                WorkPackage::new("WP1", "y", WpKind::Technical),
                WorkPackage::new("WP8", "m", WpKind::Management),
            ],
            dependencies: vec![],
            use_cases: vec![],
            demonstrators: vec![],
        };
        let err = gap_table(&consolidate(&model), GapThresholds::default()).unwrap_err();
        assert_eq!(err, GapError::IncompleteInput { wp_ids: vec!["WP1".into(), "WP2".into()] });
    }

    proptest! {
        #[test]
        fn categorize_is_monotone(a in -10i32..10, b in -10i32..10) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(categorize(lo) <= categorize(hi));
        }
    }
}
