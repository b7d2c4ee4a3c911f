//! Graphviz export: direct dependencies solid, uncertain ones dashed,
//! islands drawn dotted and grey.

use std::collections::BTreeSet;
use std::fmt::Write;

use demoreq_core::model::{Certainty, DependencyKind, ProjectModel};

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => {}
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// WPs that take part in no dependency at all.
pub fn islands(model: &ProjectModel) -> BTreeSet<String> {
    let linked: BTreeSet<&str> =
        model.dependencies.iter().flat_map(|d| [d.from.as_str(), d.to.as_str()]).collect();
    model.work_packages.iter().filter(|wp| !linked.contains(wp.id.as_str())).map(|wp| wp.id.clone()).collect()
}

pub fn render_dot(model: &ProjectModel) -> String {
    let islands = islands(model);
    let mut o = String::new();
    let _ = writeln!(o, "digraph {} {{", quote(&model.name));
    o.push_str("  rankdir=LR;\n  node [shape=box];\n");
    for wp in &model.work_packages {
        let label = format!("{}: {}", wp.id, wp.name);
        if islands.contains(&wp.id) {
            let _ = writeln!(
                o,
                "  {} [label={}, style=dotted, color=gray40, xlabel=\"island\"];",
                quote(&wp.id),
                quote(&label)
            );
        } else {
            let _ = writeln!(o, "  {} [label={}];", quote(&wp.id), quote(&label));
        }
    }
    for d in &model.dependencies {
        let style = match d.certainty {
            Certainty::Direct => "solid",
            Certainty::Uncertain => "dashed",
        };
        let label = match d.kind {
            DependencyKind::Data => String::new(),
            DependencyKind::Temporal => ", label=\"temporal\"".into(),
            DependencyKind::Control => ", label=\"control\"".into(),
            DependencyKind::Functional => ", label=\"functional\"".into(),
        };
        let _ = writeln!(o, "  {} -> {} [style={style}{label}];", quote(&d.from), quote(&d.to));
    }
    o.push_str("}\n");
    o
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quotes_are_escaped() {
        assert_eq!(quote(r#"a "b" \c"#), r#""a \"b\" \\c""#);
        assert_eq!(quote("x\ny"), r#""x\ny""#);
    }
}
