//! Blocks 4 and 6: achievable demonstrator TRL, use-case typing, the
//! level/type feasibility and risk matrix, and level recommendation.
//!
//! A recommendation is searched over the declared coverage and over the
//! integrable sub-scopes inside it: connected groups of covered WPs that
//! share one referenced use-case or one framework group. A disparate
//! demonstrator therefore stays at L1 as declared, while still pointing at
//! the partial integrations it could be split into.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::depgraph::{AdjustedTrlMap, GradeCapTable, WpGraph};
use crate::model::{DemonstratorTarget, ProjectModel, Qualities, ReadinessGrade, TrlLevel, WpKind};
use crate::quality::{thresholds_for, ComplianceReport};
use crate::trlgap::{GapCategory, GapThresholds};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DemonstrationLevel {
    L1,
    L2,
    L3,
    L4,
    L5,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Coverage {
    SingleWp,
    Subset,
    AllWps,
}

impl DemonstrationLevel {
    pub const ALL: [DemonstrationLevel; 5] = [
        DemonstrationLevel::L1,
        DemonstrationLevel::L2,
        DemonstrationLevel::L3,
        DemonstrationLevel::L4,
        DemonstrationLevel::L5,
    ];

    pub fn number(self) -> u8 {
        self as u8 + 1
    }

    pub fn title(self) -> &'static str {
        match self {
            DemonstrationLevel::L1 => "Proof of concept",
            DemonstrationLevel::L2 => "Proof of integration",
            DemonstrationLevel::L3 => "Optimised proof of integration",
            DemonstrationLevel::L4 => "Grand proof of integration",
            DemonstrationLevel::L5 => "Optimised grand proof of integration",
        }
    }

    pub fn coverage(self) -> Coverage {
        match self {
            DemonstrationLevel::L1 => Coverage::SingleWp,
            DemonstrationLevel::L2 | DemonstrationLevel::L3 => Coverage::Subset,
            DemonstrationLevel::L4 | DemonstrationLevel::L5 => Coverage::AllWps,
        }
    }

    pub fn integrates(self) -> bool {
        self != DemonstrationLevel::L1
    }

    pub fn extra_functional(self) -> bool {
        matches!(self, DemonstrationLevel::L3 | DemonstrationLevel::L5)
    }
}

impl fmt::Display for DemonstrationLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UseCaseType {
    Unified,
    CoordinatedMulti,
    Disparate,
}

impl fmt::Display for UseCaseType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UseCaseType::Unified => "unified",
            UseCaseType::CoordinatedMulti => "coordinated multi-use-case",
            UseCaseType::Disparate => "disparate",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiskLevel {
    Normal,
    Moderate,
    High,
    Impractical,
}

impl fmt::Display for RiskLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RiskLevel::Normal => "normal",
            RiskLevel::Moderate => "moderate",
            RiskLevel::High => "high",
            RiskLevel::Impractical => "impractical",
        })
    }
}

pub fn feasible_levels(t: UseCaseType) -> BTreeSet<DemonstrationLevel> {
    use DemonstrationLevel::*;
    match t {
        UseCaseType::Unified => [L1, L2, L3, L4, L5].into(),
        UseCaseType::CoordinatedMulti => [L1, L2, L3].into(),
        UseCaseType::Disparate => [L1].into(),
    }
}

pub fn risk_of(level: DemonstrationLevel, t: UseCaseType) -> RiskLevel {
    use RiskLevel::*;
    // Columns: unified, coordinated, disparate.
    const TABLE: [[RiskLevel; 3]; 5] = [
        [Normal, Normal, Normal],
        [Moderate, Moderate, Impractical],
        [High, High, Impractical],
        [Moderate, Impractical, Impractical],
        [High, Impractical, Impractical],
    ];
    let col = match t {
        UseCaseType::Unified => 0,
        UseCaseType::CoordinatedMulti => 1,
        UseCaseType::Disparate => 2,
    };
    TABLE[level as usize][col]
}

/// Minimum TRL each demonstration level stands for.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LevelBands(pub BTreeMap<DemonstrationLevel, TrlLevel>);

impl Default for LevelBands {
    fn default() -> Self {
        LevelBands(
            DemonstrationLevel::ALL
                .into_iter()
                .zip([3, 5, 5, 6, 7])
                .map(|(l, v)| (l, TrlLevel::saturating(v)))
                .collect(),
        )
    }
}

impl LevelBands {
    pub fn band(&self, level: DemonstrationLevel) -> TrlLevel {
        self.0.get(&level).copied().unwrap_or(TrlLevel::MAX)
    }

    pub fn is_complete_and_monotone(&self) -> bool {
        DemonstrationLevel::ALL.iter().all(|l| self.0.contains_key(l))
            && DemonstrationLevel::ALL.windows(2).all(|w| self.band(w[0]) <= self.band(w[1]))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FeasibilityError {
    #[error("demonstrator {demo_id} covers {wp_id}, which has no adjusted TRL")]
    UnknownWp { demo_id: String, wp_id: String },
    #[error("demonstrator {demo_id} references no use-case")]
    NoUseCase { demo_id: String },
}

/// Highest TRL a WP may claim without any integration.
pub fn standalone_trl() -> TrlLevel {
    TrlLevel::saturating(4)
}

/// Min of adjusted TRLs over `scope`, capped at `standalone` when a
/// multi-WP scope is not weakly connected by direct edges. Returns the
/// first WP missing from the map as the error.
pub fn scope_trl(
    scope: &BTreeSet<String>,
    adjusted: &AdjustedTrlMap,
    graph: &WpGraph,
    standalone: TrlLevel,
) -> Result<TrlLevel, String> {
    let mut min = TrlLevel::MAX;
    for wp in scope {
        min = min.min(adjusted.adjusted(wp).ok_or_else(|| wp.clone())?);
    }
    if scope.len() >= 2 && !graph.weakly_connected(scope) {
        min = min.min(standalone);
    }
    Ok(min)
}

pub fn achievable_demo_trl(
    demo: &DemonstratorTarget,
    adjusted: &AdjustedTrlMap,
    graph: &WpGraph,
) -> Result<TrlLevel, FeasibilityError> {
    achievable_demo_trl_with(demo, adjusted, graph, standalone_trl())
}

pub fn achievable_demo_trl_with(
    demo: &DemonstratorTarget,
    adjusted: &AdjustedTrlMap,
    graph: &WpGraph,
    standalone: TrlLevel,
) -> Result<TrlLevel, FeasibilityError> {
    scope_trl(&demo.covered_wps, adjusted, graph, standalone)
        .map_err(|wp_id| FeasibilityError::UnknownWp { demo_id: demo.id.clone(), wp_id })
}

/// Use-case type of a set of WPs demonstrated with `use_cases`; `None`
/// when no use-case is given.
pub fn classify_scope(scope: &BTreeSet<String>, use_cases: &BTreeSet<String>, model: &ProjectModel) -> Option<UseCaseType> {
    if use_cases.is_empty() {
        return None;
    }
    let associated = |wp: &String, uc: &String| model.wp(wp).is_some_and(|w| w.use_cases.contains(uc));

    if use_cases.iter().any(|uc| scope.iter().all(|wp| associated(wp, uc))) {
        return Some(UseCaseType::Unified);
    }
    let every_wp_served = scope.iter().all(|wp| use_cases.iter().any(|uc| associated(wp, uc)));
    let groups: BTreeSet<Option<&str>> = use_cases
        .iter()
        .map(|uc| model.use_case(uc).and_then(|u| u.framework_group.as_deref()))
        .collect();
    let one_framework = groups.len() == 1 && groups.iter().all(Option::is_some);
    if every_wp_served && one_framework {
        Some(UseCaseType::CoordinatedMulti)
    } else {
        Some(UseCaseType::Disparate)
    }
}

pub fn classify_use_case_type(demo: &DemonstratorTarget, model: &ProjectModel) -> Result<UseCaseType, FeasibilityError> {
    classify_scope(&demo.covered_wps, &demo.use_cases, model)
        .ok_or_else(|| FeasibilityError::NoUseCase { demo_id: demo.id.clone() })
}

/// The WPs a grand (L4/L5) demonstration has to cover: analyzed technical
/// WPs that interact with at least one other WP.
pub fn all_wps(model: &ProjectModel, graph: &WpGraph) -> BTreeSet<String> {
    model
        .analyzed_wps()
        .filter(|wp| wp.kind == WpKind::Technical && graph.nodes.contains(&wp.id) && !graph.is_island(&wp.id))
        .map(|wp| wp.id.clone())
        .collect()
}

fn covers_all(scope: &BTreeSet<String>, all: &BTreeSet<String>) -> bool {
    scope.len() >= 2 && all.is_subset(scope)
}

/// Level a demonstrator's declared target stands for: the highest level
/// whose band does not exceed the target TRL and whose coverage and
/// qualities match the declaration. Falls back to L1.
pub fn target_level(
    demo: &DemonstratorTarget,
    target: TrlLevel,
    all: &BTreeSet<String>,
    bands: &LevelBands,
) -> Option<DemonstrationLevel> {
    let extra = demo.qualities == Qualities::FunctionalAndExtraFunctional;
    let matches = |level: DemonstrationLevel| match level.coverage() {
        Coverage::SingleWp => demo.covered_wps.len() == 1,
        Coverage::Subset => demo.covered_wps.len() >= 2 && level.extra_functional() == extra,
        Coverage::AllWps => covers_all(&demo.covered_wps, all) && level.extra_functional() == extra,
    };
    DemonstrationLevel::ALL
        .into_iter()
        .rev()
        .filter(|l| bands.band(*l) <= target)
        .find(|l| matches(*l))
        .or_else(|| (bands.band(DemonstrationLevel::L1) <= target).then_some(DemonstrationLevel::L1))
}

pub fn shortfall(target: Option<TrlLevel>, achievable: TrlLevel) -> u32 {
    target.map_or(0, |t| u32::from(t.get().saturating_sub(achievable.get())))
}

/// Where a candidate demonstration scope comes from.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "origin", content = "id", rename_all = "snake_case")]
pub enum ScopeOrigin {
    Declared,
    UseCase(String),
    FrameworkGroup(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scope {
    pub origin: ScopeOrigin,
    pub wp_ids: BTreeSet<String>,
    pub use_cases: BTreeSet<String>,
    pub use_case_type: UseCaseType,
    pub achievable_trl: TrlLevel,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    UseCaseCoverage,
    ScopeCoverage,
    Connectivity,
    TrlBand,
    ArtifactGrade,
    TrlShortfall,
}

/// A condition that keeps a demonstrator below a level. `conditional`
/// marks conditions that hinge on information not yet available (an
/// unassessed artifact grade) rather than on a known deficit.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Constraint {
    pub level: DemonstrationLevel,
    pub kind: ConstraintKind,
    pub scope: Vec<String>,
    pub conditional: bool,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum MitigationAction {
    AssociateUseCase { use_case: String, wp_ids: Vec<String> },
    ReferenceUseCase { use_case: String },
    RaiseGrade { use_case: String, from: Option<ReadinessGrade>, to: ReadinessGrade },
    RaiseEstimate { wp_ids: Vec<String>, to: TrlLevel },
    ExtendCoverage { wp_ids: Vec<String> },
    RedefineScope { wp_ids: Vec<String>, use_cases: Vec<String>, level: DemonstrationLevel },
    AcceptLevel { level: DemonstrationLevel },
}

impl MitigationAction {
    pub fn describe(&self) -> String {
        match self {
            MitigationAction::AssociateUseCase { use_case, wp_ids } => {
                format!("associate {use_case} use-case with {}", wp_ids.join(", "))
            }
            MitigationAction::ReferenceUseCase { use_case } => {
                format!("base the demonstrator on the {use_case} use-case")
            }
            MitigationAction::RaiseGrade { use_case, from, to } => match from {
                Some(g) => format!("raise artifact readiness of {use_case} from {g} to {to}"),
                None => format!("obtain {use_case} artifacts of readiness {to} or better"),
            },
            MitigationAction::RaiseEstimate { wp_ids, to } => {
                format!("plan {} to reach {to}", wp_ids.join(", "))
            }
            MitigationAction::ExtendCoverage { wp_ids } => {
                format!("extend demonstrator coverage with {}", wp_ids.join(", "))
            }
            MitigationAction::RedefineScope { wp_ids, use_cases, level } => format!(
                "redefine as a level {} demonstration over {} based on {}",
                level.number(),
                wp_ids.join(", "),
                use_cases.join(", ")
            ),
            MitigationAction::AcceptLevel { level } => {
                format!("accept level {} ({}) as the demonstration target", level.number(), level.title())
            }
        }
    }

    /// WPs the action touches; empty for demonstrator-wide actions.
    pub fn wp_ids(&self) -> Vec<String> {
        match self {
            MitigationAction::AssociateUseCase { wp_ids, .. }
            | MitigationAction::RaiseEstimate { wp_ids, .. }
            | MitigationAction::ExtendCoverage { wp_ids }
            | MitigationAction::RedefineScope { wp_ids, .. } => wp_ids.clone(),
            _ => Vec::new(),
        }
    }

    /// The what-if overrides that apply the action to the model.
    pub fn overrides(&self, demo_id: &str) -> Vec<String> {
        match self {
            MitigationAction::AssociateUseCase { use_case, wp_ids } => {
                wp_ids.iter().map(|wp| format!("wp.{wp}.use_cases+={use_case}")).collect()
            }
            MitigationAction::ReferenceUseCase { use_case } => vec![format!("demo.{demo_id}.use_cases+={use_case}")],
            MitigationAction::RaiseGrade { use_case, to, .. } => vec![format!("use_case.{use_case}.readiness={to}")],
            MitigationAction::RaiseEstimate { wp_ids, to } => {
                wp_ids.iter().map(|wp| format!("wp.{wp}.estimated_trl={}", to.get())).collect()
            }
            MitigationAction::ExtendCoverage { wp_ids } => vec![format!("demo.{demo_id}.covered_wps+={}", wp_ids.join(","))],
            MitigationAction::RedefineScope { wp_ids, use_cases, .. } => vec![
                format!("demo.{demo_id}.covered_wps={}", wp_ids.join(",")),
                format!("demo.{demo_id}.use_cases={}", use_cases.join(",")),
            ],
            MitigationAction::AcceptLevel { .. } => Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mitigation {
    pub action: MitigationAction,
    pub text: String,
}

impl From<MitigationAction> for Mitigation {
    fn from(action: MitigationAction) -> Self {
        let text = action.describe();
        Mitigation { action, text }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DemonstratorAssessment {
    pub demo_id: String,
    pub achievable_trl: TrlLevel,
    pub target_trl: Option<TrlLevel>,
    pub target_reachable: bool,
    pub shortfall: u32,
    /// Type of the declared coverage with the referenced use-cases; `None`
    /// when the demonstrator references no use-case.
    pub declared_use_case_type: Option<UseCaseType>,
    pub declared_scope_level: DemonstrationLevel,
    /// Type of the scope the recommendation is made for.
    pub use_case_type: UseCaseType,
    pub recommended_level: DemonstrationLevel,
    pub recommended_scope: Scope,
    pub target_level: Option<DemonstrationLevel>,
    pub risk: RiskLevel,
    /// Matrix cell of the target level under the declared type.
    pub target_risk: Option<RiskLevel>,
    pub constraints: Vec<Constraint>,
    pub mitigations: Vec<Mitigation>,
    pub justification: Vec<String>,
}

/// Knobs of the feasibility rules.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeasibilityPolicy {
    pub bands: LevelBands,
    pub gap_thresholds: GapThresholds,
    pub grade_caps: GradeCapTable,
    pub standalone_trl: TrlLevel,
    pub extra_functional_grade: ReadinessGrade,
}

impl Default for FeasibilityPolicy {
    fn default() -> Self {
        FeasibilityPolicy {
            bands: LevelBands::default(),
            gap_thresholds: GapThresholds::default(),
            grade_caps: GradeCapTable::default(),
            standalone_trl: standalone_trl(),
            extra_functional_grade: ReadinessGrade::G3,
        }
    }
}

/// Everything Blocks 4 and 6 look at for one demonstrator. `view` is the
/// demonstrator's adjusted TRL map (global map plus its own artifact caps).
#[derive(Clone, Copy, Debug)]
pub struct DemoContext<'a> {
    pub model: &'a ProjectModel,
    pub graph: &'a WpGraph,
    pub demo: &'a DemonstratorTarget,
    pub view: &'a AdjustedTrlMap,
    pub compliance: &'a ComplianceReport,
    pub policy: &'a FeasibilityPolicy,
}

struct Issue {
    kind: ConstraintKind,
    conditional: bool,
    message: String,
    actions: Vec<MitigationAction>,
}

impl<'a> DemoContext<'a> {
    fn associated(&self, wp: &str, uc: &str) -> bool {
        self.model.wp(wp).is_some_and(|w| w.use_cases.contains(uc))
    }

    fn declared_scope(&self) -> Result<Scope, FeasibilityError> {
        let achievable = achievable_demo_trl_with(self.demo, self.view, self.graph, self.policy.standalone_trl)?;
        Ok(Scope {
            origin: ScopeOrigin::Declared,
            wp_ids: self.demo.covered_wps.clone(),
            use_cases: self.demo.use_cases.clone(),
            use_case_type: classify_scope(&self.demo.covered_wps, &self.demo.use_cases, self.model)
                .unwrap_or(UseCaseType::Disparate),
            achievable_trl: achievable,
        })
    }

    /// Connected groups of covered WPs sharing a referenced use-case or a
    /// framework group of referenced use-cases.
    fn sub_scopes(&self) -> Vec<Scope> {
        let mut seeds: Vec<(ScopeOrigin, BTreeSet<String>)> = self
            .demo
            .use_cases
            .iter()
            .map(|uc| (ScopeOrigin::UseCase(uc.clone()), BTreeSet::from([uc.clone()])))
            .collect();
        let mut groups: BTreeMap<&str, BTreeSet<String>> = BTreeMap::new();
        for uc in &self.demo.use_cases {
            if let Some(g) = self.model.use_case(uc).and_then(|u| u.framework_group.as_deref()) {
                groups.entry(g).or_default().insert(uc.clone());
            }
        }
        seeds.extend(
            groups
                .into_iter()
                .filter(|(_, ucs)| ucs.len() >= 2)
                .map(|(g, ucs)| (ScopeOrigin::FrameworkGroup(g.to_string()), ucs)),
        );

        let mut out = Vec::new();
        for (origin, ucs) in seeds {
            let served: BTreeSet<String> = self
                .demo
                .covered_wps
                .iter()
                .filter(|wp| ucs.iter().any(|uc| self.associated(wp, uc)))
                .cloned()
                .collect();
            for component in self.graph.components_within(&served) {
                if component.len() < 2 || component == self.demo.covered_wps {
                    continue;
                }
                let Ok(achievable) = scope_trl(&component, self.view, self.graph, self.policy.standalone_trl) else {
                    continue;
                };
                let use_case_type = classify_scope(&component, &ucs, self.model).unwrap_or(UseCaseType::Disparate);
                out.push(Scope {
                    origin: origin.clone(),
                    wp_ids: component,
                    use_cases: ucs.clone(),
                    use_case_type,
                    achievable_trl: achievable,
                });
            }
        }
        out
    }

    fn level_issues(&self, scope: &Scope, level: DemonstrationLevel, all: &BTreeSet<String>) -> Vec<Issue> {
        let declared = scope.origin == ScopeOrigin::Declared;
        let wps = join(&scope.wp_ids);
        let mut issues = Vec::new();

        if !feasible_levels(scope.use_case_type).contains(&level) {
            issues.push(self.use_case_issue(scope, level, declared));
        }

        if level.integrates() {
            if scope.wp_ids.len() < 2 {
                let neighbours: Vec<String> = scope
                    .wp_ids
                    .iter()
                    .flat_map(|wp| self.graph.direct_upstream(wp).chain(self.graph.direct_downstream(wp)))
                    .filter(|n| !scope.wp_ids.contains(*n))
                    .map(str::to_string)
                    .collect::<BTreeSet<_>>()
                    .into_iter()
                    .collect();
                issues.push(Issue {
                    kind: ConstraintKind::ScopeCoverage,
                    conditional: false,
                    message: format!("{level} integrates at least two WPs; scope is {wps}"),
                    actions: if declared && !neighbours.is_empty() {
                        vec![MitigationAction::ExtendCoverage { wp_ids: neighbours }]
                    } else {
                        Vec::new()
                    },
                });
            } else if !self.graph.weakly_connected(&scope.wp_ids) {
                issues.push(self.connectivity_issue(scope, level, declared));
            }
        }

        if level.coverage() == Coverage::AllWps && !all.is_subset(&scope.wp_ids) {
            let missing: Vec<String> = all.difference(&scope.wp_ids).cloned().collect();
            issues.push(Issue {
                kind: ConstraintKind::ScopeCoverage,
                conditional: false,
                message: format!("{level} covers all interacting WPs; {} not covered", missing.join(", ")),
                actions: if declared { vec![MitigationAction::ExtendCoverage { wp_ids: missing }] } else { Vec::new() },
            });
        }

        let band = self.policy.bands.band(level);
        let gap = i32::from(band.get()) - i32::from(scope.achievable_trl.get());
        if self.policy.gap_thresholds.categorize(gap) == GapCategory::MajorGap {
            issues.push(Issue {
                kind: ConstraintKind::TrlBand,
                conditional: false,
                message: format!(
                    "{level} stands for {band}; {wps} can reach {} (major gap)",
                    scope.achievable_trl
                ),
                actions: self.lift(&scope.wp_ids, band),
            });
        }

        if level.extra_functional() {
            issues.extend(self.grade_issue(scope, level));
        }
        issues
    }

    fn use_case_issue(&self, scope: &Scope, level: DemonstrationLevel, declared: bool) -> Issue {
        let wps = join(&scope.wp_ids);
        if scope.use_cases.is_empty() {
            let best = self.best_use_case();
            return Issue {
                kind: ConstraintKind::UseCaseCoverage,
                conditional: false,
                message: format!("{level} needs a use-case; {} references none", self.demo.id),
                actions: best.map(|use_case| MitigationAction::ReferenceUseCase { use_case }).into_iter().collect(),
            };
        }
        let gaps: Vec<(String, Vec<String>)> = scope
            .use_cases
            .iter()
            .map(|uc| {
                let missing = scope.wp_ids.iter().filter(|wp| !self.associated(wp, uc)).cloned().collect();
                (uc.clone(), missing)
            })
            .collect();
        let detail = gaps
            .iter()
            .map(|(uc, missing)| format!("{uc} is not associated with {}", missing.join(", ")))
            .collect::<Vec<_>>()
            .join("; ");
        let message = format!(
            "{level} is not feasible for {} use-cases: no single referenced use-case spans {wps} ({detail})",
            scope.use_case_type
        );
        let actions = if declared {
            gaps.into_iter()
                .filter(|(_, missing)| !missing.is_empty())
                .map(|(use_case, wp_ids)| MitigationAction::AssociateUseCase { use_case, wp_ids })
                .collect()
        } else {
            Vec::new()
        };
        Issue { kind: ConstraintKind::UseCaseCoverage, conditional: false, message, actions }
    }

    fn connectivity_issue(&self, scope: &Scope, level: DemonstrationLevel, declared: bool) -> Issue {
        let components = self.graph.components_within(&scope.wp_ids);
        let groups = components.iter().map(|c| format!("{{{}}}", join(c))).collect::<Vec<_>>().join(" ");
        let mut bridge = BTreeSet::new();
        if declared {
            for pair in components.windows(2) {
                let (a, b) = (pair[0].first().unwrap(), pair[1].first().unwrap());
                if let Some(path) = self.graph.undirected_path(a, b) {
                    bridge.extend(path.into_iter().filter(|wp| !scope.wp_ids.contains(wp)));
                }
            }
        }
        Issue {
            kind: ConstraintKind::Connectivity,
            conditional: false,
            message: format!("{level} needs interacting WPs; covered WPs fall apart into {groups}"),
            actions: if bridge.is_empty() {
                Vec::new()
            } else {
                vec![MitigationAction::ExtendCoverage { wp_ids: bridge.into_iter().collect() }]
            },
        }
    }

    fn grade_issue(&self, scope: &Scope, level: DemonstrationLevel) -> Option<Issue> {
        let needed = self.policy.extra_functional_grade;
        let mut low: BTreeMap<&str, (Option<ReadinessGrade>, BTreeSet<&str>)> = BTreeMap::new();
        for wp in &scope.wp_ids {
            for uc in scope.use_cases.iter().filter(|uc| self.associated(wp, uc)) {
                let grade = self.model.use_case(uc).and_then(|u| u.readiness);
                if grade.is_none_or(|g| g < needed) {
                    low.entry(uc.as_str()).or_insert((grade, BTreeSet::new())).1.insert(wp.as_str());
                }
            }
        }
        if low.is_empty() {
            return None;
        }
        let conditional = low.values().all(|(g, _)| g.is_none());
        let detail = low
            .iter()
            .map(|(uc, (g, wps))| {
                let g = g.map_or_else(|| "not assessed".to_string(), |g| g.to_string());
                format!("{uc} for {} ({g})", wps.iter().copied().collect::<Vec<_>>().join(", "))
            })
            .collect::<Vec<_>>()
            .join("; ");
        let message = if conditional {
            format!("{level} is conditional on baseline-grade artifacts (>= {needed}): {detail}")
        } else {
            format!("{level} needs artifacts of readiness >= {needed}: {detail}")
        };
        let actions = low
            .into_iter()
            .map(|(uc, (from, _))| MitigationAction::RaiseGrade { use_case: uc.to_string(), from, to: needed })
            .collect();
        Some(Issue { kind: ConstraintKind::ArtifactGrade, conditional, message, actions })
    }

    /// Use-case associated with most covered WPs, smallest id on ties.
    fn best_use_case(&self) -> Option<String> {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for wp in self.demo.covered_wps.iter().filter_map(|id| self.model.wp(id)) {
            for uc in &wp.use_cases {
                *counts.entry(uc.as_str()).or_default() += 1;
            }
        }
        let best = counts.values().copied().max()?;
        counts.into_iter().find(|(_, n)| *n == best).map(|(uc, _)| uc.to_string())
    }

    /// Actions that would let every WP of `scope` reach `needed`, looking
    /// through the WPs it (transitively) consumes from.
    fn lift(&self, scope: &BTreeSet<String>, needed: TrlLevel) -> Vec<MitigationAction> {
        let mut relevant: BTreeSet<String> = BTreeSet::new();
        let mut stack: Vec<String> = scope.iter().cloned().collect();
        while let Some(wp) = stack.pop() {
            if relevant.insert(wp.clone()) {
                stack.extend(self.graph.direct_upstream(&wp).map(str::to_string));
            }
        }

        let unavailable = self.compliance.unavailable_wps();
        let mut estimate_wps = Vec::new();
        let mut actions = Vec::new();
        for wp in &relevant {
            let Some(a) = self.view.get(wp) else { continue };
            if a.adjusted >= needed {
                continue;
            }
            if a.own_estimate < needed {
                estimate_wps.push(wp.clone());
            }
            if a.quality_cap.is_some_and(|c| c < needed) {
                if unavailable.contains(wp) {
                    if self.demo.use_cases.is_empty() {
                        actions.extend(self.best_use_case().map(|use_case| MitigationAction::ReferenceUseCase { use_case }));
                    } else {
                        actions.extend(self.demo.use_cases.iter().map(|uc| MitigationAction::AssociateUseCase {
                            use_case: uc.clone(),
                            wp_ids: vec![wp.clone()],
                        }));
                    }
                } else if let Some(uc) = self.best_graded_use_case(wp) {
                    let from = self.model.use_case(&uc).and_then(|u| u.readiness);
                    let to = thresholds_for(needed, &self.policy.grade_caps).required_grade;
                    if from.is_none_or(|g| g < to) {
                        actions.push(MitigationAction::RaiseGrade { use_case: uc, from, to });
                    }
                }
            }
        }
        if !estimate_wps.is_empty() {
            actions.push(MitigationAction::RaiseEstimate { wp_ids: estimate_wps, to: needed });
        }
        actions
    }

    /// The graded use-case of `wp` with the best grade, preferring the
    /// demonstrator's own use-cases.
    fn best_graded_use_case(&self, wp: &str) -> Option<String> {
        let wp = self.model.wp(wp)?;
        wp.use_cases
            .iter()
            .filter_map(|id| self.model.use_case(id))
            .filter_map(|uc| uc.readiness.map(|g| (g, self.demo.use_cases.contains(&uc.id), uc.id.clone())))
            .max_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)).then_with(|| b.2.cmp(&a.2)))
            .map(|(_, _, id)| id)
    }
}

fn join(set: &BTreeSet<String>) -> String {
    set.iter().map(String::as_str).collect::<Vec<_>>().join(", ")
}

/// Shortfall of the declared demonstrator against its target and the
/// actions that would close it.
pub fn shortfall_analysis(ctx: &DemoContext<'_>, achievable: TrlLevel) -> (u32, Vec<Mitigation>) {
    let shortfall = shortfall(ctx.demo.target_trl, achievable);
    let actions = match ctx.demo.target_trl {
        Some(target) if shortfall > 0 => ctx.lift(&ctx.demo.covered_wps, target),
        _ => Vec::new(),
    };
    (shortfall, merge_actions(actions))
}

/// Folds overlapping actions together (one association per use-case, the
/// strongest grade per use-case, one estimate raise) in a stable order.
pub fn merge_actions(actions: impl IntoIterator<Item = MitigationAction>) -> Vec<Mitigation> {
    let mut associate: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    let mut reference: BTreeSet<String> = BTreeSet::new();
    let mut grade: BTreeMap<String, (Option<ReadinessGrade>, ReadinessGrade)> = BTreeMap::new();
    let mut estimate: Option<(BTreeSet<String>, TrlLevel)> = None;
    let mut coverage: BTreeSet<String> = BTreeSet::new();
    let mut other: BTreeSet<MitigationAction> = BTreeSet::new();

    for action in actions {
        match action {
            MitigationAction::AssociateUseCase { use_case, wp_ids } => {
                associate.entry(use_case).or_default().extend(wp_ids);
            }
            MitigationAction::ReferenceUseCase { use_case } => {
                reference.insert(use_case);
            }
            MitigationAction::RaiseGrade { use_case, from, to } => {
                let entry = grade.entry(use_case).or_insert((from, to));
                entry.1 = entry.1.max(to);
            }
            MitigationAction::RaiseEstimate { wp_ids, to } => {
                let entry = estimate.get_or_insert_with(|| (BTreeSet::new(), to));
                entry.0.extend(wp_ids);
                entry.1 = entry.1.max(to);
            }
            MitigationAction::ExtendCoverage { wp_ids } => coverage.extend(wp_ids),
            a => {
                other.insert(a);
            }
        }
    }

    let mut out: Vec<MitigationAction> = Vec::new();
    out.extend(
        associate
            .into_iter()
            .map(|(use_case, wps)| MitigationAction::AssociateUseCase { use_case, wp_ids: wps.into_iter().collect() }),
    );
    out.extend(reference.into_iter().map(|use_case| MitigationAction::ReferenceUseCase { use_case }));
    out.extend(grade.into_iter().map(|(use_case, (from, to))| MitigationAction::RaiseGrade { use_case, from, to }));
    out.extend(estimate.map(|(wps, to)| MitigationAction::RaiseEstimate { wp_ids: wps.into_iter().collect(), to }));
    if !coverage.is_empty() {
        out.push(MitigationAction::ExtendCoverage { wp_ids: coverage.into_iter().collect() });
    }
    out.extend(other);
    out.into_iter().map(Mitigation::from).collect()
}

/// Block 6. Picks the highest level attainable without major additional
/// work over the declared coverage and its integrable sub-scopes, capped
/// at the target level, and lists every condition that blocks the levels
/// above it.
pub fn recommend_level(ctx: &DemoContext<'_>) -> Result<DemonstratorAssessment, FeasibilityError> {
    let all = all_wps(ctx.model, ctx.graph);
    let declared = ctx.declared_scope()?;
    let declared_type = classify_scope(&ctx.demo.covered_wps, &ctx.demo.use_cases, ctx.model);
    let target_level = ctx.demo.target_trl.and_then(|t| target_level(ctx.demo, t, &all, &ctx.policy.bands));
    let ceiling = target_level.unwrap_or(DemonstrationLevel::L5);

    let best_of = |scope: &Scope| {
        DemonstrationLevel::ALL
            .into_iter()
            .rev()
            .filter(|l| *l <= ceiling && *l > DemonstrationLevel::L1)
            .find(|l| ctx.level_issues(scope, *l, &all).is_empty())
            .unwrap_or(DemonstrationLevel::L1)
    };

    let declared_level = best_of(&declared);
    let mut chosen = (declared_level, declared.clone());
    for scope in ctx.sub_scopes() {
        let level = best_of(&scope);
        let better = level > chosen.0 || (level == chosen.0 && chosen.1.origin != ScopeOrigin::Declared && scope.wp_ids.len() > chosen.1.wp_ids.len());
        if better {
            chosen = (level, scope);
        }
    }
    let (recommended, scope) = chosen;

    let mut constraints: BTreeSet<Constraint> = BTreeSet::new();
    let mut actions: Vec<MitigationAction> = Vec::new();
    let mut record = |scope: &Scope, level: DemonstrationLevel, issue: Issue, keep_actions: bool| {
        if keep_actions || matches!(issue.kind, ConstraintKind::ArtifactGrade | ConstraintKind::TrlBand) {
            actions.extend(issue.actions);
        }
        constraints.insert(Constraint {
            level,
            kind: issue.kind,
            scope: scope.wp_ids.iter().cloned().collect(),
            conditional: issue.conditional,
            message: issue.message,
        });
    };
    let mut scopes = vec![&declared];
    if scope.origin != ScopeOrigin::Declared {
        scopes.push(&scope);
    }
    for s in scopes {
        let is_declared = s.origin == ScopeOrigin::Declared;
        for level in DemonstrationLevel::ALL.into_iter().filter(|l| *l > recommended && *l <= ceiling) {
            for issue in ctx.level_issues(s, level, &all) {
                record(s, level, issue, is_declared);
            }
        }
    }
    let l1_band = ctx.policy.bands.band(DemonstrationLevel::L1);
    if ctx.policy.gap_thresholds.categorize(i32::from(l1_band.get()) - i32::from(scope.achievable_trl.get()))
        == GapCategory::MajorGap
    {
        let issue = Issue {
            kind: ConstraintKind::TrlBand,
            conditional: false,
            message: format!("L1 stands for {l1_band}; {} can reach {}", join(&scope.wp_ids), scope.achievable_trl),
            actions: ctx.lift(&scope.wp_ids, l1_band),
        };
        record(&scope, DemonstrationLevel::L1, issue, true);
    }

    let achievable = declared.achievable_trl;
    let (shortfall, _) = shortfall_analysis(ctx, achievable);
    if let (Some(target), true) = (ctx.demo.target_trl, shortfall > 0) {
        record(
            &declared,
            target_level.unwrap_or(DemonstrationLevel::L1),
            Issue {
                kind: ConstraintKind::TrlShortfall,
                conditional: false,
                message: format!("achievable {achievable} is below the target {target} (shortfall {shortfall})"),
                actions: ctx.lift(&ctx.demo.covered_wps, target),
            },
            true,
        );
    }
    if scope.origin != ScopeOrigin::Declared {
        actions.push(MitigationAction::RedefineScope {
            wp_ids: scope.wp_ids.iter().cloned().collect(),
            use_cases: scope.use_cases.iter().cloned().collect(),
            level: recommended,
        });
    }
    let mut mitigations = merge_actions(actions);
    if mitigations.is_empty() && !constraints.is_empty() {
        mitigations.push(MitigationAction::AcceptLevel { level: recommended }.into());
    }

    let mut justification = vec![match declared_type {
        Some(t) => format!("declared coverage {} with {} is {t}", join(&declared.wp_ids), join(&declared.use_cases)),
        None => format!("declared coverage {} references no use-case; treated as disparate", join(&declared.wp_ids)),
    }];
    if scope.origin != ScopeOrigin::Declared {
        let via = match &scope.origin {
            ScopeOrigin::UseCase(uc) => format!("use-case {uc}"),
            ScopeOrigin::FrameworkGroup(g) => format!("framework group {g}"),
            ScopeOrigin::Declared => unreachable!(),
        };
        justification.push(format!(
            "{} spanned by {via} is {} and reaches {}",
            join(&scope.wp_ids),
            scope.use_case_type,
            scope.achievable_trl
        ));
    }
    let band = ctx.policy.bands.band(recommended);
    justification.push(format!(
        "{recommended} ({}) stands for {band}; achievable {} ({})",
        recommended.title(),
        scope.achievable_trl,
        match ctx.policy.gap_thresholds.categorize(i32::from(band.get()) - i32::from(scope.achievable_trl.get())) {
            GapCategory::OnTrack => "on track",
            GapCategory::MinorGap => "within a minor gap",
            GapCategory::MajorGap => "major gap",
        }
    ));

    Ok(DemonstratorAssessment {
        demo_id: ctx.demo.id.clone(),
        achievable_trl: achievable,
        target_trl: ctx.demo.target_trl,
        target_reachable: shortfall == 0,
        shortfall,
        declared_use_case_type: declared_type,
        declared_scope_level: declared_level,
        use_case_type: scope.use_case_type,
        recommended_level: recommended,
        risk: risk_of(recommended, scope.use_case_type),
        recommended_scope: scope,
        target_level,
        target_risk: target_level.map(|l| risk_of(l, declared_type.unwrap_or(UseCaseType::Disparate))),
        constraints: constraints.into_iter().collect(),
        mitigations,
        justification,
    })
}
