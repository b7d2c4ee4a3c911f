//! Proptest strategies producing valid project models and acyclic
//! dependency graphs.

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;

use crate::depgraph::{GraphEdge, WpGraph};
use crate::model::{
    Certainty, DemonstratorTarget, DependencyKind, ProjectModel, Qualities, ReadinessGrade, TrlLevel, UseCase,
    WorkPackage, WpDependency, WpKind,
};

pub fn trl() -> impl Strategy<Value = TrlLevel> {
    (1..=9i64).prop_map(TrlLevel::saturating)
}

pub fn grade() -> impl Strategy<Value = ReadinessGrade> {
    prop::sample::select(ReadinessGrade::ALL.to_vec())
}

fn kind() -> impl Strategy<Value = DependencyKind> {
    prop::sample::select(vec![
        DependencyKind::Data,
        DependencyKind::Temporal,
        DependencyKind::Control,
        DependencyKind::Functional,
    ])
}

fn certainty() -> impl Strategy<Value = Certainty> {
    prop_oneof![4 => Just(Certainty::Direct), 1 => Just(Certainty::Uncertain)]
}

pub fn wp_id(i: usize) -> String {
    format!("WP{}", i + 1)
}

pub fn uc_id(i: usize) -> String {
    format!("UC{}", i + 1)
}

/// Edges only run from a lower to a higher index, so every graph is acyclic.
fn forward_edges(n: usize) -> impl Strategy<Value = Vec<(usize, usize, DependencyKind, Certainty)>> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let max = pairs.len().min(2 * n);
    if pairs.is_empty() {
        return Just(Vec::new()).boxed();
    }
    prop::collection::vec((prop::sample::select(pairs), kind(), certainty()), 0..=max)
        .prop_map(|edges| {
            let mut seen = BTreeSet::new();
            edges.into_iter().filter(|(p, _, _)| seen.insert(*p)).map(|((i, j), k, c)| (i, j, k, c)).collect()
        })
        .boxed()
}

fn subset(n: usize) -> impl Strategy<Value = BTreeSet<usize>> {
    prop::collection::btree_set(0..n, 0..=n)
}

/// Valid models with up to `max_wps` technical WPs, one dissemination WP
/// outside the analysis, up to five use-cases and three demonstrators.
pub fn arb_model_with(max_wps: usize) -> BoxedStrategy<ProjectModel> {
    (1..=max_wps.max(1), 1..=5usize)
        .prop_flat_map(|(n, u)| {
            let wps = prop::collection::vec(
                (prop::option::weighted(0.7, trl()), prop::option::weighted(0.85, trl()), subset(u)),
                n,
            );
            let ucs = prop::collection::vec((prop::option::weighted(0.7, grade()), prop::option::of(0..2u8)), u);
            let demos = prop::collection::vec(
                (
                    prop::collection::btree_set(0..n, 1..=n),
                    subset(u),
                    prop::option::weighted(0.8, trl()),
                    any::<bool>(),
                ),
                0..=3,
            );
            let blanket = prop::option::of((1..=9i64, 0..=2i64));
            (Just(n), Just(u), wps, forward_edges(n), ucs, demos, blanket)
        })
        .prop_map(|(n, u, wps, edges, ucs, demos, blanket)| {
            let mut work_packages: Vec<WorkPackage> = wps
                .into_iter()
                .enumerate()
                .map(|(i, (target, estimate, ucs))| {
                    let mut wp = WorkPackage::new(wp_id(i), format!("work package {}", i + 1), WpKind::Technical);
                    wp.target_trl = target;
                    wp.estimated_trl = estimate;
                    wp.use_cases = ucs.into_iter().map(uc_id).collect();
                    wp
                })
                .collect();
            work_packages.push(WorkPackage::new(wp_id(n), "dissemination", WpKind::Dissemination));

            let use_cases = ucs
                .into_iter()
                .enumerate()
                .map(|(i, (readiness, group))| UseCase {
                    id: uc_id(i),
                    provider: format!("provider {}", i + 1),
                    framework_group: group.map(|g| format!("FG{g}")),
                    readiness,
                })
                .collect();
            let dependencies =
                edges.into_iter().map(|(i, j, k, c)| WpDependency::new(wp_id(i), wp_id(j), k, c)).collect();
            let demonstrators = demos
                .into_iter()
                .enumerate()
                .map(|(i, (covered, ucs, target, ef))| DemonstratorTarget {
                    id: format!("D{}", i + 1),
                    name: format!("demonstrator {}", i + 1),
                    target_trl: target,
                    covered_wps: covered.into_iter().map(wp_id).collect(),
                    use_cases: ucs.into_iter().filter(|k| *k < u).map(uc_id).collect(),
                    qualities: if ef { Qualities::FunctionalAndExtraFunctional } else { Qualities::FunctionalOnly },
                })
                .collect();
            ProjectModel {
                name: "generated".into(),
                blanket_trl_range: blanket.map(|(lo, w)| (TrlLevel::saturating(lo), TrlLevel::saturating(lo + w))),
                work_packages,
                dependencies,
                use_cases,
                demonstrators,
            }
        })
        .boxed()
}

pub fn arb_model() -> BoxedStrategy<ProjectModel> {
    arb_model_with(12)
}

/// A graph with per-node estimates and optional quality caps.
#[derive(Clone, Debug)]
pub struct DagCase {
    pub graph: WpGraph,
    pub estimates: BTreeMap<String, TrlLevel>,
    pub caps: BTreeMap<String, TrlLevel>,
}

pub fn arb_dag(max_nodes: usize) -> BoxedStrategy<DagCase> {
    (1..=max_nodes.max(1))
        .prop_flat_map(|n| {
            (
                Just(n),
                forward_edges(n),
                prop::collection::vec(trl(), n),
                prop::collection::vec(prop::option::weighted(0.3, trl()), n),
            )
        })
        .prop_map(|(n, edges, estimates, caps)| {
            let nodes: BTreeSet<String> = (0..n).map(wp_id).collect();
            let edges = edges
                .into_iter()
                .map(|(i, j, kind, certainty)| GraphEdge { from: wp_id(i), to: wp_id(j), kind, certainty });
            DagCase {
                graph: WpGraph::new(nodes, edges),
                estimates: estimates.into_iter().enumerate().map(|(i, e)| (wp_id(i), e)).collect(),
                caps: caps.into_iter().enumerate().filter_map(|(i, c)| c.map(|c| (wp_id(i), c))).collect(),
            }
        })
        .boxed()
}
