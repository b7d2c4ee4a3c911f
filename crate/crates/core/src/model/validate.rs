use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{is_valid_id, Certainty, ProjectModel};
use crate::depgraph;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Error,
    Advisory,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagnosticCode {
    DuplicateId,
    InvalidId,
    SelfDependency,
    InvertedRange,
    DanglingReference,
    EmptyCoverage,
    UnanalyzedCoverage,
    CyclicDependency,
    NonPropagatedKind,
    UncertainDependency,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: DiagnosticCode,
    pub subject: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity {
            Severity::Error => "error",
            Severity::Advisory => "advisory",
        };
        write!(f, "{tag}[{:?}] {}: {}", self.code, self.subject, self.message)
    }
}

pub fn has_errors(diagnostics: &[Diagnostic]) -> bool {
    diagnostics.iter().any(|d| d.severity == Severity::Error)
}

/// Checks every model invariant. Returns errors and advisories sorted by
/// subject, then code; an empty list means the model is clean.
pub fn validate_model(model: &ProjectModel) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut push = |severity, code, subject: String, message: String| {
        out.push(Diagnostic { severity, code, subject, message });
    };

    let mut seen: BTreeMap<(&str, &str), usize> = BTreeMap::new();
    let ids = model
        .work_packages
        .iter()
        .map(|wp| ("work package", wp.id.as_str()))
        .chain(model.use_cases.iter().map(|uc| ("use-case", uc.id.as_str())))
        .chain(model.demonstrators.iter().map(|d| ("demonstrator", d.id.as_str())));
    for (what, id) in ids {
        *seen.entry((what, id)).or_default() += 1;
        if !is_valid_id(id) {
            push(Severity::Error, DiagnosticCode::InvalidId, id.to_string(), format!("{what} id is not a valid token"));
        }
    }
    for ((what, id), count) in seen {
        if count > 1 {
            push(
                Severity::Error,
                DiagnosticCode::DuplicateId,
                id.to_string(),
                format!("{what} id declared {count} times"),
            );
        }
    }

    if let Some((lo, hi)) = model.blanket_trl_range {
        if lo > hi {
            push(
                Severity::Error,
                DiagnosticCode::InvertedRange,
                "project.blanket_trl_range".into(),
                format!("low bound {} exceeds high bound {}", lo.get(), hi.get()),
            );
        }
    }

    let wp_ids: BTreeSet<&str> = model.work_packages.iter().map(|wp| wp.id.as_str()).collect();
    let uc_ids: BTreeSet<&str> = model.use_cases.iter().map(|uc| uc.id.as_str()).collect();

    for wp in &model.work_packages {
        for uc in wp.use_cases.iter().filter(|uc| !uc_ids.contains(uc.as_str())) {
            push(
                Severity::Error,
                DiagnosticCode::DanglingReference,
                wp.id.clone(),
                format!("references unknown use-case `{uc}`"),
            );
        }
    }

    for dep in &model.dependencies {
        let subject = format!("{}->{}", dep.from, dep.to);
        for end in [&dep.from, &dep.to] {
            if !wp_ids.contains(end.as_str()) {
                push(
                    Severity::Error,
                    DiagnosticCode::DanglingReference,
                    subject.clone(),
                    format!("references unknown work package `{end}`"),
                );
            }
        }
        if dep.from == dep.to {
            push(
                Severity::Error,
                DiagnosticCode::SelfDependency,
                subject.clone(),
                "a work package cannot depend on itself".into(),
            );
        }
        if !dep.kind.is_propagated() {
            push(
                Severity::Advisory,
                DiagnosticCode::NonPropagatedKind,
                subject.clone(),
                format!("{:?} dependency is recorded but not propagated", dep.kind),
            );
        }
        if dep.certainty == Certainty::Uncertain {
            push(
                Severity::Advisory,
                DiagnosticCode::UncertainDependency,
                subject,
                "uncertain input; it does not constrain the consumer's TRL".into(),
            );
        }
    }

    for demo in &model.demonstrators {
        if demo.covered_wps.is_empty() {
            push(
                Severity::Error,
                DiagnosticCode::EmptyCoverage,
                demo.id.clone(),
                "demonstrator covers no work package".into(),
            );
        }
        for wp in demo.covered_wps.iter().filter(|wp| !wp_ids.contains(wp.as_str())) {
            push(
                Severity::Error,
                DiagnosticCode::DanglingReference,
                demo.id.clone(),
                format!("covers unknown work package `{wp}`"),
            );
        }
        for wp in demo.covered_wps.iter().filter_map(|id| model.wp(id)).filter(|wp| !wp.is_analyzed()) {
            push(
                Severity::Error,
                DiagnosticCode::UnanalyzedCoverage,
                demo.id.clone(),
                format!("covers `{}`, which is excluded from TRL analysis", wp.id),
            );
        }
        for uc in demo.use_cases.iter().filter(|uc| !uc_ids.contains(uc.as_str())) {
            push(
                Severity::Error,
                DiagnosticCode::DanglingReference,
                demo.id.clone(),
                format!("references unknown use-case `{uc}`"),
            );
        }
    }

    let analyzed: BTreeSet<String> = model.analyzed_wps().map(|wp| wp.id.clone()).collect();
    let direct: Vec<(String, String)> = model
        .dependencies
        .iter()
        .filter(|d| {
            d.kind.is_propagated()
                && d.certainty == Certainty::Direct
                && d.from != d.to
                && analyzed.contains(&d.from)
                && analyzed.contains(&d.to)
        })
        .map(|d| (d.from.clone(), d.to.clone()))
        .collect();
    for cycle in depgraph::find_cycles(&analyzed, &direct) {
        push(
            Severity::Error,
            DiagnosticCode::CyclicDependency,
            cycle[0].clone(),
            format!("dependency cycle {}", cycle_text(&cycle)),
        );
    }

    out.sort_by(|a, b| (&a.subject, a.code, &a.message).cmp(&(&b.subject, b.code, &b.message)));
    out.dedup();
    out
}

fn cycle_text(cycle: &[String]) -> String {
    let mut s = cycle.join(" -> ");
    if let Some(first) = cycle.first() {
        s.push_str(" -> ");
        s.push_str(first);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DependencyKind, TrlLevel, WorkPackage, WpDependency, WpKind};

    fn model() -> ProjectModel {
        ProjectModel {
            name: "t".into(),
            blanket_trl_range: None,
            work_packages: ["A", "B", "C"]
                .iter()
                .map(|id| WorkPackage::new(*id, *id, WpKind::Technical))
                .collect(),
            dependencies: vec![],
            use_cases: vec![],
            demonstrators: vec![],
        }
    }

    #[test]
    fn clean_model_has_no_diagnostics() {
        assert!(validate_model(&model()).is_empty());
    }

    #[test]
    fn self_dependency() {
        let mut m = model();
        m.dependencies.push(WpDependency::new("A", "A", DependencyKind::Data, Certainty::Direct));
        let d = validate_model(&m);
        assert!(d.iter().any(|d| d.code == DiagnosticCode::SelfDependency && d.severity == Severity::Error));
    }

    #[test]
    fn inverted_range() {
        let mut m = model();
        m.blanket_trl_range = Some((TrlLevel::new(5).unwrap(), TrlLevel::new(4).unwrap()));
        let d = validate_model(&m);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].code, DiagnosticCode::InvertedRange);
    }

    #[test]
    fn control_edge_is_advisory_only() {
        let mut m = model();
        m.dependencies.push(WpDependency::new("A", "B", DependencyKind::Control, Certainty::Direct));
        let d = validate_model(&m);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].severity, Severity::Advisory);
        assert!(!has_errors(&d));
    }

    #[test]
    fn cycle_is_an_error() {
        let mut m = model();
        for (f, t) in [("A", "B"), ("B", "C"), ("C", "A")] {
            m.dependencies.push(WpDependency::new(f, t, DependencyKind::Data, Certainty::Direct));
        }
        let d = validate_model(&m);
        let cyc: Vec<_> = d.iter().filter(|d| d.code == DiagnosticCode::CyclicDependency).collect();
        assert_eq!(cyc.len(), 1);
        assert!(cyc[0].message.contains("A -> B -> C -> A"), "{}", cyc[0].message);
    }

    #[test]
    fn duplicates_and_sorted_output() {
        let mut m = model();
        m.work_packages.push(WorkPackage::new("A", "again", WpKind::Technical));
        m.dependencies.push(WpDependency::new("C", "B", DependencyKind::Data, Certainty::Uncertain));
        let d = validate_model(&m);
        let subjects: Vec<_> = d.iter().map(|d| d.subject.as_str()).collect();
        let mut sorted = subjects.clone();
        sorted.sort();
        assert_eq!(subjects, sorted);
        assert!(d.iter().any(|d| d.code == DiagnosticCode::DuplicateId));
    }
}
