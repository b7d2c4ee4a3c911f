//! Human-readable report: one section per block, stable ordering.

use std::fmt::Write;

use demoreq_core::engine::{AnalysisReport, ReportDiff};
use demoreq_core::feasibility::ScopeOrigin;
use demoreq_core::model::{MissingIssue, TrlLevel};
use demoreq_core::quality::Finding;
use demoreq_core::requirements::RequirementKind;
use demoreq_core::trlgap::GapCategory;

fn gap_category(c: GapCategory) -> &'static str {
    match c {
        GapCategory::OnTrack => "on track",
        GapCategory::MinorGap => "minor gap",
        GapCategory::MajorGap => "major gap",
    }
}

fn issue(i: MissingIssue) -> &'static str {
    match i {
        MissingIssue::MissingTargetTrl => "missing target TRL",
        MissingIssue::MissingEstimatedTrl => "missing estimated TRL",
        MissingIssue::MissingReadiness => "missing artifact readiness",
        MissingIssue::MissingDemonstratorTrl => "missing demonstrator TRL",
        MissingIssue::UncertainDependency => "uncertain dependency",
    }
}

fn finding(f: Finding) -> &'static str {
    match f {
        Finding::Compliant => "compliant",
        Finding::InsufficientGrade => "insufficient grade",
        Finding::UngradedArtifact => "not assessed",
        Finding::Unavailable => "unavailable",
    }
}

fn kind(k: RequirementKind) -> &'static str {
    match k {
        RequirementKind::Functional => "functional",
        RequirementKind::ExtraFunctional => "extra-functional",
        RequirementKind::Integration => "integration",
        RequirementKind::Validation => "validation",
    }
}

fn opt_trl(t: Option<TrlLevel>) -> String {
    t.map_or_else(|| "-".to_string(), |t| t.get().to_string())
}

fn join<I: IntoIterator<Item = S>, S: AsRef<str>>(items: I) -> String {
    let parts: Vec<String> = items.into_iter().map(|s| s.as_ref().to_string()).collect();
    if parts.is_empty() {
        "none".into()
    } else {
        parts.join(", ")
    }
}

pub fn render_report(r: &AnalysisReport) -> String {
    let mut o = String::new();
    // Writing to a String cannot fail.
    let _ = write_report(&mut o, r);
    o
}

fn write_report(o: &mut String, r: &AnalysisReport) -> std::fmt::Result {
    writeln!(o, "Project: {}", r.project)?;
    writeln!(o, "Report version {}, {} pass(es)", r.report_version, r.passes)?;
    if !r.overrides.is_empty() {
        writeln!(o, "Overrides: {}", r.overrides.join(" "))?;
    }

    writeln!(o, "\n== Block 1: Consolidated input ==")?;
    if r.consolidated.flags.is_empty() {
        writeln!(o, "Missing information: none")?;
    } else {
        writeln!(o, "Missing information:")?;
        for f in &r.consolidated.flags {
            writeln!(o, "  - {}: {} ({})", f.subject, issue(f.issue), f.note)?;
        }
    }
    if !r.consolidated.defaults_applied.is_empty() {
        writeln!(o, "Defaults applied:")?;
        for d in &r.consolidated.defaults_applied {
            writeln!(o, "  - {} = {} ({})", d.path, d.value, d.provenance)?;
        }
    }
    for w in &r.consolidated.warnings {
        writeln!(o, "  ! {w}")?;
    }

    writeln!(o, "\n== Block 2: TRL gap analysis ==")?;
    writeln!(o, "  {:<12} {:>6} {:>8} {:>4}  category", "WP", "target", "estimate", "gap")?;
    for g in &r.gaps {
        writeln!(
            o,
            "  {:<12} {:>6} {:>8} {:>4}  {}",
            g.wp_id,
            g.target.get(),
            g.estimated.get(),
            g.gap,
            gap_category(g.category)
        )?;
    }
    if !r.incomplete_gaps.is_empty() {
        writeln!(o, "  incomplete: {}", join(&r.incomplete_gaps))?;
    }
    for g in &r.demo_gaps {
        writeln!(
            o,
            "  demonstrator {}: target {}, WP level {}, gap {} ({})",
            g.demo_id,
            g.target,
            g.wp_level,
            g.gap,
            gap_category(g.category)
        )?;
    }

    writeln!(o, "\n== Block 3: Dependency-adjusted TRL ==")?;
    writeln!(o, "  {:<12} {:>8} {:>4} {:>8}  notes", "WP", "estimate", "cap", "adjusted")?;
    for (id, a) in &r.adjusted.0 {
        let mut notes = Vec::new();
        if let Some(u) = &a.limiting_upstream {
            notes.push(format!("limited by {u}"));
        }
        if !a.uncertain_inputs.is_empty() {
            notes.push(format!("uncertain inputs from {}", join(&a.uncertain_inputs)));
        }
        let row = format!(
            "  {:<12} {:>8} {:>4} {:>8}  {}",
            id,
            a.own_estimate.get(),
            opt_trl(a.quality_cap),
            a.adjusted.get(),
            notes.join("; ")
        );
        writeln!(o, "{}", row.trim_end())?;
    }
    writeln!(o, "  islands: {}", join(&r.structure.islands))?;
    writeln!(
        o,
        "  bottlenecks: {}",
        join(r.structure.bottlenecks.iter().map(|b| format!("{} (blocks {})", b.wp_id, b.blocked_downstream)))
    )?;
    for v in &r.demo_views {
        writeln!(
            o,
            "  view of {}: {}",
            v.demo_id,
            join(v.adjusted.0.iter().map(|(id, a)| {
                match v.caps.get(id) {
                    Some(c) => format!("{id} {} (cap {})", a.adjusted.get(), c.get()),
                    None => format!("{id} {}", a.adjusted.get()),
                }
            }))
        )?;
    }

    writeln!(o, "\n== Block 4: Achievable demonstrator TRL ==")?;
    for a in &r.assessments {
        writeln!(
            o,
            "  {}: achievable {}, target {}, shortfall {} ({})",
            a.demo_id,
            a.achievable_trl,
            a.target_trl.map_or_else(|| "not set".to_string(), |t| t.to_string()),
            a.shortfall,
            if a.target_reachable { "reachable" } else { "unreachable" }
        )?;
    }

    writeln!(o, "\n== Block 5: Artifact quality ==")?;
    for c in &r.compliance {
        writeln!(
            o,
            "  {} (for {}, requires {}){}",
            c.demo_id,
            c.target_trl,
            c.required_grade,
            if c.affects_dependencies { ", gaps affect dependencies" } else { "" }
        )?;
        for row in &c.rows {
            writeln!(
                o,
                "    {:<12} {:<12} {:<4} {}",
                row.wp_id,
                row.use_case_id.as_deref().unwrap_or("-"),
                row.actual.map_or_else(|| "-".to_string(), |g| g.to_string()),
                finding(row.finding)
            )?;
        }
        for action in &c.corrective_actions {
            writeln!(o, "    action: {action}")?;
        }
    }

    writeln!(o, "\n== Block 6: Demonstration level ==")?;
    for a in &r.assessments {
        let via = match &a.recommended_scope.origin {
            ScopeOrigin::Declared => "declared coverage".to_string(),
            ScopeOrigin::UseCase(uc) => format!("sub-scope spanned by {uc}"),
            ScopeOrigin::FrameworkGroup(g) => format!("sub-scope spanned by framework group {g}"),
        };
        writeln!(
            o,
            "  {}: recommended {} ({}) over {} [{}], {}, risk {}",
            a.demo_id,
            a.recommended_level,
            a.recommended_level.title(),
            join(&a.recommended_scope.wp_ids),
            via,
            a.use_case_type,
            a.risk
        )?;
        if let Some(t) = a.target_level {
            let risk = a.target_risk.map_or_else(String::new, |r| format!(", risk {r}"));
            writeln!(o, "    target level {t} ({}){risk}", t.title())?;
        }
        for j in &a.justification {
            writeln!(o, "    because {j}")?;
        }
        for c in &a.constraints {
            let tag = if c.conditional { ", conditional" } else { "" };
            writeln!(o, "    constraint [{}{tag}] on {}: {}", c.level, join(&c.scope), c.message)?;
        }
        for m in &a.mitigations {
            writeln!(o, "    mitigation: {}", m.text)?;
        }
    }

    writeln!(o, "\n== Block 7: Requirements ==")?;
    for s in &r.specs {
        writeln!(o, "  {} at {} over {}", s.demo_id, s.level, join(&s.scope))?;
        for req in &s.requirements {
            writeln!(o, "    {} [{}] {}", req.id, kind(req.kind), req.statement)?;
        }
        for p in &s.improvement_plan {
            writeln!(o, "    plan: {} -> unlocks {}", p.action, p.unlocks)?;
        }
    }

    writeln!(o, "\n== Feedback ==")?;
    if r.feedback.is_empty() {
        writeln!(o, "  none")?;
    }
    for e in &r.feedback {
        let mode = if e.rerun { "re-run" } else { "advisory" };
        writeln!(o, "  pass {}: {} -> {} ({mode}) {}", e.iteration, e.from_block, e.to_block, e.reason)?;
    }
    Ok(())
}

pub fn render_diff(d: &ReportDiff) -> String {
    let mut o = String::new();
    if d.is_empty() {
        o.push_str("no changes\n");
        return o;
    }
    let opt = |v: Option<String>| v.unwrap_or_else(|| "-".into());
    for c in &d.adjusted {
        let _ = writeln!(
            o,
            "adjusted {}: {} -> {}",
            c.id,
            opt(c.before.map(|t| t.to_string())),
            opt(c.after.map(|t| t.to_string()))
        );
    }
    for c in &d.achievable {
        let _ = writeln!(
            o,
            "achievable {}: {} -> {}",
            c.id,
            opt(c.before.map(|t| t.to_string())),
            opt(c.after.map(|t| t.to_string()))
        );
    }
    for c in &d.shortfall {
        let _ = writeln!(
            o,
            "shortfall {}: {} -> {}",
            c.id,
            opt(c.before.map(|t| t.to_string())),
            opt(c.after.map(|t| t.to_string()))
        );
    }
    for c in &d.recommendations {
        let _ = writeln!(
            o,
            "recommended {}: {} -> {}",
            c.id,
            opt(c.before.map(|l| l.to_string())),
            opt(c.after.map(|l| l.to_string()))
        );
    }
    for (demo, msg) in &d.removed_constraints {
        let _ = writeln!(o, "- {demo}: {msg}");
    }
    for (demo, msg) in &d.added_constraints {
        let _ = writeln!(o, "+ {demo}: {msg}");
    }
    o
}
