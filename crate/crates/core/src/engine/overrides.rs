//! What-if overrides: `path=value`, `path+=items`, `path-=items`.
//!
//! Paths are `wp.<id>.<field>`, `use_case.<id>.<field>`,
//! `demo.<id>.<field>` and `project.<field>`. Lists are comma separated;
//! `none` clears an optional field.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::model::{is_valid_id, ProjectModel, Qualities, ReadinessGrade, TrlLevel, WpKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverrideOp {
    Set,
    Add,
    Remove,
}

impl OverrideOp {
    fn symbol(self) -> &'static str {
        match self {
            OverrideOp::Set => "=",
            OverrideOp::Add => "+=",
            OverrideOp::Remove => "-=",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Override {
    pub path: String,
    pub op: OverrideOp,
    pub value: String,
}

impl fmt::Display for Override {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}{}", self.path, self.op.symbol(), self.value)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OverrideError {
    #[error("override `{0}` is not of the form path=value, path+=value or path-=value")]
    Syntax(String),
    #[error("unknown override path `{0}`")]
    UnknownPath(String),
    #[error("override `{path}` refers to unknown id `{id}`")]
    UnknownId { path: String, id: String },
    #[error("override `{path}`: invalid value `{value}` ({reason})")]
    InvalidValue { path: String, value: String, reason: String },
    #[error("override `{path}` does not support `{op}`")]
    UnsupportedOp { path: String, op: String },
}

impl FromStr for Override {
    type Err = OverrideError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let eq = text.find('=').ok_or_else(|| OverrideError::Syntax(text.to_string()))?;
        let (lhs, value) = (text[..eq].trim(), text[eq + 1..].trim());
        // Field names are lowercase words, so a trailing sign belongs to the operator.
        let (path, op) = match lhs.as_bytes().last() {
            Some(b'+') => (&lhs[..lhs.len() - 1], OverrideOp::Add),
            Some(b'-') => (&lhs[..lhs.len() - 1], OverrideOp::Remove),
            _ => (lhs, OverrideOp::Set),
        };
        if path.is_empty() || !path.contains('.') {
            return Err(OverrideError::Syntax(text.to_string()));
        }
        Ok(Override { path: path.to_string(), op, value: value.to_string() })
    }
}

pub fn parse_overrides<S: AsRef<str>>(items: &[S]) -> Result<Vec<Override>, OverrideError> {
    items.iter().map(|s| s.as_ref().parse()).collect()
}

/// Applies overrides in order. References inside list values must name
/// existing WPs or use-cases.
pub fn apply_overrides(model: &mut ProjectModel, overrides: &[Override]) -> Result<(), OverrideError> {
    for o in overrides {
        apply_one(model, o)?;
    }
    Ok(())
}

fn apply_one(model: &mut ProjectModel, o: &Override) -> Result<(), OverrideError> {
    let path = o.path.as_str();
    let (prefix, rest) = path.split_once('.').ok_or_else(|| OverrideError::UnknownPath(path.to_string()))?;

    if prefix == "project" {
        return match rest {
            "name" => set_only(o).map(|_| model.name = o.value.clone()),
            "blanket_trl_range" => {
                set_only(o)?;
                model.blanket_trl_range = parse_range(o)?;
                Ok(())
            }
            _ => Err(OverrideError::UnknownPath(path.to_string())),
        };
    }

    let (id, field) = rest.rsplit_once('.').ok_or_else(|| OverrideError::UnknownPath(path.to_string()))?;
    let unknown_id = || OverrideError::UnknownId { path: path.to_string(), id: id.to_string() };
    let wp_ids: BTreeSet<String> = model.work_packages.iter().map(|w| w.id.clone()).collect();
    let uc_ids: BTreeSet<String> = model.use_cases.iter().map(|u| u.id.clone()).collect();

    match prefix {
        "wp" => {
            let wp = model.wp_mut(id).ok_or_else(unknown_id)?;
            match field {
                "target_trl" => wp.target_trl = parse_trl(o)?,
                "estimated_trl" => wp.estimated_trl = parse_trl(o)?,
                "analyzed" => {
                    set_only(o)?;
                    wp.analyzed = optional(o, |v| v.parse::<bool>().map_err(|e| e.to_string()))?;
                }
                "name" => set_only(o).map(|_| wp.name = o.value.clone())?,
                "kind" => {
                    set_only(o)?;
                    wp.kind = parse_kind(o)?;
                }
                "use_cases" => edit_list(&mut wp.use_cases, o, &uc_ids)?,
                _ => return Err(OverrideError::UnknownPath(path.to_string())),
            }
        }
        "use_case" => {
            let uc = model.use_case_mut(id).ok_or_else(unknown_id)?;
            set_only(o)?;
            match field {
                "readiness" => uc.readiness = optional(o, |v| v.parse::<ReadinessGrade>())?,
                "framework_group" => uc.framework_group = optional(o, |v| Ok::<_, String>(v.to_string()))?,
                "provider" => uc.provider = o.value.clone(),
                _ => return Err(OverrideError::UnknownPath(path.to_string())),
            }
        }
        "demo" => {
            let demo = model.demonstrator_mut(id).ok_or_else(unknown_id)?;
            match field {
                "target_trl" => demo.target_trl = parse_trl(o)?,
                "covered_wps" => edit_list(&mut demo.covered_wps, o, &wp_ids)?,
                "use_cases" => edit_list(&mut demo.use_cases, o, &uc_ids)?,
                "name" => set_only(o).map(|_| demo.name = o.value.clone())?,
                "qualities" => {
                    set_only(o)?;
                    demo.qualities = match o.value.as_str() {
                        "functional_only" => Qualities::FunctionalOnly,
                        "functional_and_extra_functional" => Qualities::FunctionalAndExtraFunctional,
                        _ => return Err(invalid(o, "expected functional_only or functional_and_extra_functional")),
                    };
                }
                _ => return Err(OverrideError::UnknownPath(path.to_string())),
            }
        }
        _ => return Err(OverrideError::UnknownPath(path.to_string())),
    }
    Ok(())
}

fn invalid(o: &Override, reason: impl Into<String>) -> OverrideError {
    OverrideError::InvalidValue { path: o.path.clone(), value: o.value.clone(), reason: reason.into() }
}

fn set_only(o: &Override) -> Result<(), OverrideError> {
    if o.op == OverrideOp::Set {
        Ok(())
    } else {
        Err(OverrideError::UnsupportedOp { path: o.path.clone(), op: o.op.symbol().to_string() })
    }
}

fn optional<T, E: fmt::Display>(o: &Override, parse: impl Fn(&str) -> Result<T, E>) -> Result<Option<T>, OverrideError> {
    if o.value == "none" {
        Ok(None)
    } else {
        parse(&o.value).map(Some).map_err(|e| invalid(o, e.to_string()))
    }
}

fn parse_trl(o: &Override) -> Result<Option<TrlLevel>, OverrideError> {
    set_only(o)?;
    optional(o, |v| {
        let n: i64 = v.parse().map_err(|_| "expected an integer TRL".to_string())?;
        TrlLevel::new(n).map_err(|e| e.to_string())
    })
}

fn parse_range(o: &Override) -> Result<Option<(TrlLevel, TrlLevel)>, OverrideError> {
    optional(o, |v| {
        let (lo, hi) = v.split_once(['-', ',']).ok_or("expected low-high")?;
        let level = |s: &str| {
            s.trim().parse::<i64>().map_err(|_| "expected integers".to_string()).and_then(|n| TrlLevel::new(n).map_err(|e| e.to_string()))
        };
        Ok::<_, String>((level(lo)?, level(hi)?))
    })
}

fn parse_kind(o: &Override) -> Result<WpKind, OverrideError> {
    match o.value.as_str() {
        "technical" => Ok(WpKind::Technical),
        "dissemination" => Ok(WpKind::Dissemination),
        "management" => Ok(WpKind::Management),
        "demonstration" => Ok(WpKind::Demonstration),
        _ => Err(invalid(o, "expected technical, dissemination, management or demonstration")),
    }
}

fn edit_list(list: &mut BTreeSet<String>, o: &Override, known: &BTreeSet<String>) -> Result<(), OverrideError> {
    let items: Vec<String> =
        o.value.split(',').map(str::trim).filter(|s| !s.is_empty()).map(str::to_string).collect();
    for item in &items {
        if !is_valid_id(item) {
            return Err(invalid(o, format!("`{item}` is not a valid id")));
        }
        if !known.contains(item) {
            return Err(OverrideError::UnknownId { path: o.path.clone(), id: item.clone() });
        }
    }
    match o.op {
        OverrideOp::Set => *list = items.into_iter().collect(),
        OverrideOp::Add => list.extend(items),
        OverrideOp::Remove => {
            for item in &items {
                list.remove(item);
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DemonstratorTarget, UseCase, WorkPackage};

    fn model() -> ProjectModel {
        let mut wp = WorkPackage::new("WP-1", "a", WpKind::Technical);
        wp.estimated_trl = Some(TrlLevel::new(4).unwrap());
        ProjectModel {
            name: "p".into(),
            blanket_trl_range: None,
            work_packages: vec![wp, WorkPackage::new("WP2", "b", WpKind::Technical)],
            dependencies: vec![],
            use_cases: vec![UseCase::new("CPP", "CPP")],
            demonstrators: vec![DemonstratorTarget {
                id: "d.1".into(),
                name: "d".into(),
                target_trl: None,
                covered_wps: ["WP2".to_string()].into(),
                use_cases: BTreeSet::new(),
                qualities: Qualities::FunctionalOnly,
            }],
        }
    }

    #[test]
    fn parses_operators() {
        let o: Override = "demo.d.1.covered_wps+=WP1".parse().unwrap();
        assert_eq!((o.path.as_str(), o.op, o.value.as_str()), ("demo.d.1.covered_wps", OverrideOp::Add, "WP1"));
        let o: Override = "wp.WP-1.use_cases-=CPP".parse().unwrap();
        assert_eq!((o.path.as_str(), o.op), ("wp.WP-1.use_cases", OverrideOp::Remove));
        assert_eq!(o.to_string(), "wp.WP-1.use_cases-=CPP");
        assert!("nonsense".parse::<Override>().is_err());
        assert!("=5".parse::<Override>().is_err());
    }

    #[test]
    fn applies_fields() {
        let mut m = model();
        let os = parse_overrides(&[
            "wp.WP-1.estimated_trl=none",
            "wp.WP-1.use_cases+=CPP",
            "use_case.CPP.readiness=g3",
            "demo.d.1.covered_wps+=WP-1",
            "demo.d.1.target_trl=6",
            "project.blanket_trl_range=4-5",
        ])
        .unwrap();
        apply_overrides(&mut m, &os).unwrap();
        assert_eq!(m.work_packages[0].estimated_trl, None);
        assert!(m.work_packages[0].use_cases.contains("CPP"));
        assert_eq!(m.use_cases[0].readiness, Some(ReadinessGrade::G3));
        assert_eq!(m.demonstrators[0].covered_wps.len(), 2);
        assert_eq!(m.demonstrators[0].target_trl, Some(TrlLevel::new(6).unwrap()));
        assert!(m.blanket_trl_range.is_some());
    }

    #[test]
    fn rejects_bad_overrides() {
        let mut m = model();
        let bad = |s: &str, m: &mut ProjectModel| apply_overrides(m, &parse_overrides(&[s]).unwrap()).unwrap_err();
        assert!(matches!(bad("wp.WP9.target_trl=4", &mut m), OverrideError::UnknownId { .. }));
        assert!(matches!(bad("wp.WP-1.target_trl=11", &mut m), OverrideError::InvalidValue { .. }));
        assert!(matches!(bad("wp.WP-1.colour=red", &mut m), OverrideError::UnknownPath(_)));
        assert!(matches!(bad("wp.WP-1.use_cases+=TFS", &mut m), OverrideError::UnknownId { .. }));
        assert!(matches!(bad("wp.WP-1.target_trl+=1", &mut m), OverrideError::UnsupportedOp { .. }));
    }
}
