//! TOML project model files.
//!
//! ```toml
//! [project]
//! name = "ZORRO"
//! blanket_trl_range = [4, 5]
//!
//! [[work_packages]]
//! id = "WP1"
//! name = "Monitoring systems"
//! kind = "technical"
//! estimated_trl = 5
//! use_cases = ["ASML", "ITEC"]
//!
//! [[dependencies]]
//! from = "WP1"
//! to = "WP4"
//! kind = "data"
//! certainty = "direct"
//! ```

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{
    is_valid_id, Certainty, DemonstratorTarget, DependencyKind, ProjectModel, Qualities, ReadinessGrade, TrlLevel,
    UseCase, WorkPackage, WpDependency, WpKind,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("reference error at `{path}`: unknown id `{id}`")]
    Reference { path: String, id: String },
}

#[derive(Debug, Clone, Copy)]
pub struct ParseOptions {
    /// Unknown keys are errors when set, warnings otherwise.
    pub strict: bool,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions { strict: true }
    }
}

#[derive(Debug, Clone)]
pub struct Parsed {
    pub model: ProjectModel,
    pub warnings: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    project: ProjectSection,
    #[serde(default)]
    work_packages: Vec<WpEntry>,
    #[serde(default)]
    dependencies: Vec<DependencyEntry>,
    #[serde(default)]
    use_cases: Vec<UseCaseEntry>,
    #[serde(default)]
    demonstrators: Vec<DemonstratorEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ProjectSection {
    name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    blanket_trl_range: Option<[TrlLevel; 2]>,
}

#[derive(Debug, Serialize, Deserialize)]
struct WpEntry {
    id: String,
    name: String,
    kind: WpKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    target_trl: Option<TrlLevel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    estimated_trl: Option<TrlLevel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    analyzed: Option<bool>,
    #[serde(default)]
    use_cases: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct DependencyEntry {
    from: String,
    to: String,
    kind: DependencyKind,
    #[serde(default)]
    certainty: Certainty,
}

#[derive(Debug, Serialize, Deserialize)]
struct UseCaseEntry {
    id: String,
    provider: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    framework_group: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    readiness: Option<ReadinessGrade>,
}

#[derive(Debug, Serialize, Deserialize)]
struct DemonstratorEntry {
    id: String,
    name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    target_trl: Option<TrlLevel>,
    covered_wps: Vec<String>,
    #[serde(default)]
    use_cases: Vec<String>,
    qualities: Qualities,
}

/// Parses a model file in strict mode.
pub fn parse_model(source: &[u8]) -> Result<ProjectModel, ModelError> {
    parse_model_with(source, ParseOptions::default()).map(|p| p.model)
}

pub fn parse_model_with(source: &[u8], options: ParseOptions) -> Result<Parsed, ModelError> {
    let text = std::str::from_utf8(source).map_err(|e| {
        let (line, column) = line_column(&String::from_utf8_lossy(&source[..e.valid_up_to()]), e.valid_up_to());
        ModelError::Syntax { line, column, message: "input is not valid UTF-8".into() }
    })?;

    let de = toml::de::Deserializer::parse(text).map_err(|e| {
        let offset = e.span().map(|s| s.start).unwrap_or(0);
        let (line, column) = line_column(text, offset);
        ModelError::Syntax { line, column, message: e.message().trim().to_string() }
    })?;

    let mut unknown: Vec<String> = Vec::new();
    let file: ModelFile = {
        let mut record = |path: serde_ignored::Path<'_>| unknown.push(path.to_string());
        let ignoring = serde_ignored::Deserializer::new(de, &mut record);
        serde_path_to_error::deserialize(ignoring).map_err(|e| ModelError::Schema {
            path: display_path(&e.path().to_string()),
            message: e.inner().message().trim().to_string(),
        })?
    };

    let mut warnings = Vec::new();
    for path in unknown {
        let path = display_path(&path);
        if options.strict {
            return Err(ModelError::Schema { path, message: "unknown key".into() });
        }
        warnings.push(format!("ignoring unknown key `{path}`"));
    }

    let model = into_model(file)?;
    resolve_references(&model)?;
    Ok(Parsed { model, warnings })
}

/// Renders a model back into the file format; `parse_model` of the result
/// reproduces the model.
pub fn serialize_model(model: &ProjectModel) -> String {
    let file = ModelFile {
        project: ProjectSection {
            name: model.name.clone(),
            blanket_trl_range: model.blanket_trl_range.map(|(lo, hi)| [lo, hi]),
        },
        work_packages: model
            .work_packages
            .iter()
            .map(|wp| WpEntry {
                id: wp.id.clone(),
                name: wp.name.clone(),
                kind: wp.kind,
                target_trl: wp.target_trl,
                estimated_trl: wp.estimated_trl,
                analyzed: wp.analyzed,
                use_cases: wp.use_cases.iter().cloned().collect(),
            })
            .collect(),
        dependencies: model
            .dependencies
            .iter()
            .map(|d| DependencyEntry { from: d.from.clone(), to: d.to.clone(), kind: d.kind, certainty: d.certainty })
            .collect(),
        use_cases: model
            .use_cases
            .iter()
            .map(|uc| UseCaseEntry {
                id: uc.id.clone(),
                provider: uc.provider.clone(),
                framework_group: uc.framework_group.clone(),
                readiness: uc.readiness,
            })
            .collect(),
        demonstrators: model
            .demonstrators
            .iter()
            .map(|d| DemonstratorEntry {
                id: d.id.clone(),
                name: d.name.clone(),
                target_trl: d.target_trl,
                covered_wps: d.covered_wps.iter().cloned().collect(),
                use_cases: d.use_cases.iter().cloned().collect(),
                qualities: d.qualities,
            })
            .collect(),
    };
    toml::to_string_pretty(&file).expect("model file structure is always representable in TOML")
}

fn into_model(file: ModelFile) -> Result<ProjectModel, ModelError> {
    if file.work_packages.is_empty() {
        return Err(ModelError::Schema {
            path: "work_packages".into(),
            message: "at least one work package is required".into(),
        });
    }

    let check_id = |path: String, id: &str| {
        if is_valid_id(id) {
            Ok(())
        } else {
            Err(ModelError::Schema { path, message: format!("`{id}` is not a valid id token ([A-Za-z0-9_.-]+)") })
        }
    };

    let mut work_packages = Vec::with_capacity(file.work_packages.len());
    for (i, wp) in file.work_packages.into_iter().enumerate() {
        check_id(format!("work_packages[{i}].id"), &wp.id)?;
        work_packages.push(WorkPackage {
            id: wp.id,
            name: wp.name,
            kind: wp.kind,
            target_trl: wp.target_trl,
            estimated_trl: wp.estimated_trl,
            analyzed: wp.analyzed,
            use_cases: wp.use_cases.into_iter().collect(),
        });
    }

    let mut use_cases = Vec::with_capacity(file.use_cases.len());
    for (i, uc) in file.use_cases.into_iter().enumerate() {
        check_id(format!("use_cases[{i}].id"), &uc.id)?;
        if let Some(group) = &uc.framework_group {
            check_id(format!("use_cases[{i}].framework_group"), group)?;
        }
        use_cases.push(UseCase {
            id: uc.id,
            provider: uc.provider,
            framework_group: uc.framework_group,
            readiness: uc.readiness,
        });
    }

    let mut demonstrators = Vec::with_capacity(file.demonstrators.len());
    for (i, d) in file.demonstrators.into_iter().enumerate() {
        check_id(format!("demonstrators[{i}].id"), &d.id)?;
        if d.covered_wps.is_empty() {
            return Err(ModelError::Schema {
                path: format!("demonstrators[{i}].covered_wps"),
                message: "a demonstrator must cover at least one work package".into(),
            });
        }
        demonstrators.push(DemonstratorTarget {
            id: d.id,
            name: d.name,
            target_trl: d.target_trl,
            covered_wps: d.covered_wps.into_iter().collect::<BTreeSet<_>>(),
            use_cases: d.use_cases.into_iter().collect(),
            qualities: d.qualities,
        });
    }

    Ok(ProjectModel {
        name: file.project.name,
        blanket_trl_range: file.project.blanket_trl_range.map(|[lo, hi]| (lo, hi)),
        work_packages,
        dependencies: file
            .dependencies
            .into_iter()
            .map(|d| WpDependency { from: d.from, to: d.to, kind: d.kind, certainty: d.certainty })
            .collect(),
        use_cases,
        demonstrators,
    })
}

fn resolve_references(model: &ProjectModel) -> Result<(), ModelError> {
    let wp_ids: BTreeSet<&str> = model.work_packages.iter().map(|wp| wp.id.as_str()).collect();
    let uc_ids: BTreeSet<&str> = model.use_cases.iter().map(|uc| uc.id.as_str()).collect();
    let dangling = |path: String, id: &str| ModelError::Reference { path, id: id.to_string() };

    for (i, wp) in model.work_packages.iter().enumerate() {
        if let Some(uc) = wp.use_cases.iter().find(|uc| !uc_ids.contains(uc.as_str())) {
            return Err(dangling(format!("work_packages[{i}].use_cases"), uc));
        }
    }
    for (i, dep) in model.dependencies.iter().enumerate() {
        if !wp_ids.contains(dep.from.as_str()) {
            return Err(dangling(format!("dependencies[{i}].from"), &dep.from));
        }
        if !wp_ids.contains(dep.to.as_str()) {
            return Err(dangling(format!("dependencies[{i}].to"), &dep.to));
        }
    }
    for (i, demo) in model.demonstrators.iter().enumerate() {
        if let Some(wp) = demo.covered_wps.iter().find(|wp| !wp_ids.contains(wp.as_str())) {
            return Err(dangling(format!("demonstrators[{i}].covered_wps"), wp));
        }
        if let Some(uc) = demo.use_cases.iter().find(|uc| !uc_ids.contains(uc.as_str())) {
            return Err(dangling(format!("demonstrators[{i}].use_cases"), uc));
        }
    }
    Ok(())
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let prefix = &text[..offset.min(text.len())];
    let line = prefix.matches('\n').count() + 1;
    let column = prefix.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

/// `work_packages.0.kind` -> `work_packages[0].kind`
fn display_path(raw: &str) -> String {
    let mut out = String::new();
    for segment in raw.split('.').filter(|s| !s.is_empty() && *s != "?") {
        if segment.chars().all(|c| c.is_ascii_digit()) {
            out.push_str(&format!("[{segment}]"));
        } else {
            if !out.is_empty() {
                out.push('.');
            }
            out.push_str(segment);
        }
    }
    if out.is_empty() {
        ".".into()
    } else {
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[project]
name = "mini"

[[work_packages]]
id = "WP1"
name = "Only"
kind = "technical"
target_trl = 4
estimated_trl = 4
"#;

    #[test]
    fn parses_minimal() {
        let model = parse_model(MINIMAL.as_bytes()).unwrap();
        assert_eq!(model.name, "mini");
        assert_eq!(model.work_packages.len(), 1);
        assert_eq!(model.work_packages[0].target_trl, Some(TrlLevel::new(4).unwrap()));
    }

    #[test]
    fn empty_wp_list_is_schema_error() {
        let err = parse_model(b"[project]\nname = \"x\"\n").unwrap_err();
        assert!(matches!(err, ModelError::Schema { ref path, .. } if path == "work_packages"), "{err}");
    }

    #[test]
    fn dangling_dependency_names_the_id() {
        let src = format!("{MINIMAL}\n[[dependencies]]\nfrom = \"WP1\"\nto = \"WP9\"\nkind = \"data\"\n");
        let err = parse_model(src.as_bytes()).unwrap_err();
        assert_eq!(err, ModelError::Reference { path: "dependencies[0].to".into(), id: "WP9".into() });
        assert!(err.to_string().contains("WP9"));
    }

    #[test]
    fn out_of_range_trl_is_schema_error() {
        let src = MINIMAL.replace("target_trl = 4", "target_trl = 11");
        let err = parse_model(src.as_bytes()).unwrap_err();
        match err {
            ModelError::Schema { path, message } => {
                assert_eq!(path, "work_packages[0].target_trl");
                assert!(message.contains("11"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn syntax_error_has_position() {
        let err = parse_model(b"[project]\nname = \n").unwrap_err();
        match err {
            ModelError::Syntax { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_keys_strict_and_lenient() {
        let src = MINIMAL.replace("kind = \"technical\"", "kind = \"technical\"\ncolour = \"blue\"");
        let err = parse_model(src.as_bytes()).unwrap_err();
        assert!(matches!(err, ModelError::Schema { ref path, .. } if path == "work_packages[0].colour"), "{err}");

        let parsed = parse_model_with(src.as_bytes(), ParseOptions { strict: false }).unwrap();
        assert_eq!(parsed.warnings.len(), 1);
        assert!(parsed.warnings[0].contains("colour"));
    }

    #[test]
    fn invalid_id_token() {
        let src = MINIMAL.replace("id = \"WP1\"", "id = \"WP 1\"");
        assert!(matches!(parse_model(src.as_bytes()), Err(ModelError::Schema { .. })));
    }

    #[test]
    fn serialize_round_trip() {
        let model = parse_model(MINIMAL.as_bytes()).unwrap();
        let again = parse_model(serialize_model(&model).as_bytes()).unwrap();
        assert_eq!(model, again);
    }
}
