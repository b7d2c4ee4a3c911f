//! WP dependency graph, structural analysis, and the Block 3
//! dependency-adjusted TRL propagation.
//!
//! Propagation is weakest-link: a WP cannot demonstrate above its own
//! estimate, its artifact-quality cap, or the adjusted TRL of any WP it
//! directly consumes from. Uncertain edges never constrain; they are kept
//! on the graph (and in the report) as advisories.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::model::{Certainty, ConsolidatedInput, DependencyKind, ProjectModel, ReadinessGrade, TrlLevel, UseCase, WorkPackage};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GraphEdge {
    pub from: String,
    pub to: String,
    pub kind: DependencyKind,
    pub certainty: Certainty,
}

impl GraphEdge {
    pub fn is_direct(&self) -> bool {
        self.certainty == Certainty::Direct
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WpGraph {
    pub nodes: BTreeSet<String>,
    pub edges: BTreeSet<GraphEdge>,
}

impl WpGraph {
    /// Keeps only data/temporal edges between known nodes, without self-loops.
    pub fn new(nodes: BTreeSet<String>, edges: impl IntoIterator<Item = GraphEdge>) -> Self {
        let edges = edges
            .into_iter()
            .filter(|e| {
                e.kind.is_propagated() && e.from != e.to && nodes.contains(&e.from) && nodes.contains(&e.to)
            })
            .collect();
        WpGraph { nodes, edges }
    }

    pub fn direct_edges(&self) -> impl Iterator<Item = &GraphEdge> {
        self.edges.iter().filter(|e| e.is_direct())
    }

    pub fn direct_upstream<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.direct_edges().filter(move |e| e.to == id).map(|e| e.from.as_str())
    }

    pub fn direct_downstream<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.direct_edges().filter(move |e| e.from == id).map(|e| e.to.as_str())
    }

    pub fn uncertain_inputs<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.edges.iter().filter(move |e| !e.is_direct() && e.to == id).map(|e| e.from.as_str())
    }

    /// No data/temporal edge touches the node, whatever its certainty.
    pub fn is_island(&self, id: &str) -> bool {
        self.nodes.contains(id) && !self.edges.iter().any(|e| e.from == id || e.to == id)
    }

    pub fn direct_edges_within<'a>(&'a self, set: &'a BTreeSet<String>) -> impl Iterator<Item = &'a GraphEdge> + 'a {
        self.direct_edges().filter(move |e| set.contains(&e.from) && set.contains(&e.to))
    }

    /// Weakly connected components of `set` using direct edges inside it.
    pub fn components_within(&self, set: &BTreeSet<String>) -> Vec<BTreeSet<String>> {
        let mut adjacency: BTreeMap<&str, Vec<&str>> = set.iter().map(|n| (n.as_str(), Vec::new())).collect();
        for e in self.direct_edges_within(set) {
            adjacency.entry(e.from.as_str()).or_default().push(e.to.as_str());
            adjacency.entry(e.to.as_str()).or_default().push(e.from.as_str());
        }
        let mut seen = BTreeSet::new();
        let mut components = Vec::new();
        for start in set {
            if !seen.insert(start.as_str()) {
                continue;
            }
            let mut component = BTreeSet::from([start.clone()]);
            let mut queue = VecDeque::from([start.as_str()]);
            while let Some(n) = queue.pop_front() {
                for &m in &adjacency[n] {
                    if seen.insert(m) {
                        component.insert(m.to_string());
                        queue.push_back(m);
                    }
                }
            }
            components.push(component);
        }
        components
    }

    pub fn weakly_connected(&self, set: &BTreeSet<String>) -> bool {
        self.components_within(set).len() <= 1
    }

    /// Shortest undirected path over direct edges of the whole graph
    /// between two nodes, endpoints included.
    pub fn undirected_path(&self, from: &str, to: &str) -> Option<Vec<String>> {
        let mut parent: BTreeMap<&str, &str> = BTreeMap::new();
        let mut queue = VecDeque::from([from]);
        let mut seen = BTreeSet::from([from]);
        while let Some(n) = queue.pop_front() {
            if n == to {
                let mut path = vec![to.to_string()];
                let mut cur = to;
                while let Some(&p) = parent.get(cur) {
                    path.push(p.to_string());
                    cur = p;
                }
                path.reverse();
                return Some(path);
            }
            let neighbours = self
                .direct_edges()
                .filter_map(|e| {
                    if e.from == n {
                        Some(e.to.as_str())
                    } else if e.to == n {
                        Some(e.from.as_str())
                    } else {
                        None
                    }
                })
                .collect::<BTreeSet<_>>();
            for m in neighbours {
                if seen.insert(m) {
                    parent.insert(m, n);
                    queue.push_back(m);
                }
            }
        }
        None
    }

    fn direct_pairs(&self) -> Vec<(String, String)> {
        self.direct_edges().map(|e| (e.from.clone(), e.to.clone())).collect()
    }
}

/// Graph over analyzed WPs with their data/temporal dependencies.
pub fn build_graph(input: &ConsolidatedInput) -> WpGraph {
    graph_of(&input.model)
}

pub fn graph_of(model: &ProjectModel) -> WpGraph {
    let nodes = model.analyzed_wps().map(|wp| wp.id.clone()).collect();
    let edges = model.dependencies.iter().map(|d| GraphEdge {
        from: d.from.clone(),
        to: d.to.clone(),
        kind: d.kind,
        certainty: d.certainty,
    });
    WpGraph::new(nodes, edges)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bottleneck {
    pub wp_id: String,
    pub blocked_downstream: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureReport {
    pub islands: BTreeSet<String>,
    pub bottlenecks: Vec<Bottleneck>,
    pub cycles: Vec<Vec<String>>,
}

/// Islands and direct-edge cycles. Bottlenecks need propagated values; see
/// [`bottlenecks`].
pub fn detect_structure(graph: &WpGraph) -> StructureReport {
    StructureReport {
        islands: graph.nodes.iter().filter(|n| graph.is_island(n)).cloned().collect(),
        bottlenecks: Vec::new(),
        cycles: find_cycles(&graph.nodes, &graph.direct_pairs()),
    }
}

/// One representative cycle per strongly connected component with more
/// than one node, each rotated to start at its smallest id.
pub fn find_cycles(nodes: &BTreeSet<String>, edges: &[(String, String)]) -> Vec<Vec<String>> {
    let mut succ: BTreeMap<&str, BTreeSet<&str>> = nodes.iter().map(|n| (n.as_str(), BTreeSet::new())).collect();
    for (f, t) in edges {
        if f != t && nodes.contains(f) && nodes.contains(t) {
            succ.get_mut(f.as_str()).unwrap().insert(t.as_str());
        }
    }

    let mut cycles = Vec::new();
    for scc in strongly_connected(&succ) {
        if scc.len() < 2 {
            continue;
        }
        let start = *scc.iter().next().unwrap();
        // BFS inside the component for the shortest way back to `start`.
        let mut parent: BTreeMap<&str, &str> = BTreeMap::new();
        let mut queue = VecDeque::from([start]);
        let mut seen = BTreeSet::from([start]);
        let mut closing = None;
        'bfs: while let Some(n) = queue.pop_front() {
            for &m in &succ[n] {
                if !scc.contains(m) {
                    continue;
                }
                if m == start {
                    closing = Some(n);
                    break 'bfs;
                }
                if seen.insert(m) {
                    parent.insert(m, n);
                    queue.push_back(m);
                }
            }
        }
        let mut cycle = Vec::new();
        let mut cur = closing.expect("a non-trivial SCC always contains a cycle through each node");
        loop {
            cycle.push(cur.to_string());
            if cur == start {
                break;
            }
            cur = parent[cur];
        }
        cycle.reverse();
        cycles.push(cycle);
    }
    cycles.sort();
    cycles
}

fn strongly_connected<'a>(succ: &BTreeMap<&'a str, BTreeSet<&'a str>>) -> Vec<BTreeSet<&'a str>> {
    struct Tarjan<'a, 'g> {
        succ: &'g BTreeMap<&'a str, BTreeSet<&'a str>>,
        index: BTreeMap<&'a str, usize>,
        low: BTreeMap<&'a str, usize>,
        stack: Vec<&'a str>,
        on_stack: BTreeSet<&'a str>,
        next: usize,
        out: Vec<BTreeSet<&'a str>>,
    }

    impl<'a> Tarjan<'a, '_> {
        fn visit(&mut self, v: &'a str) {
            self.index.insert(v, self.next);
            self.low.insert(v, self.next);
            self.next += 1;
            self.stack.push(v);
            self.on_stack.insert(v);
            for &w in &self.succ[v] {
                if !self.index.contains_key(w) {
                    self.visit(w);
                    let lw = self.low[w];
                    let lv = self.low.get_mut(v).unwrap();
                    *lv = (*lv).min(lw);
                } else if self.on_stack.contains(w) {
                    let iw = self.index[w];
                    let lv = self.low.get_mut(v).unwrap();
                    *lv = (*lv).min(iw);
                }
            }
            if self.low[v] == self.index[v] {
                let mut scc = BTreeSet::new();
                while let Some(w) = self.stack.pop() {
                    self.on_stack.remove(w);
                    scc.insert(w);
                    if w == v {
                        break;
                    }
                }
                self.out.push(scc);
            }
        }
    }

    let mut t = Tarjan {
        succ,
        index: BTreeMap::new(),
        low: BTreeMap::new(),
        stack: Vec::new(),
        on_stack: BTreeSet::new(),
        next: 0,
        out: Vec::new(),
    };
    for &v in succ.keys() {
        if !t.index.contains_key(v) {
            t.visit(v);
        }
    }
    t.out
}

/// Maximum TRL that artifacts of a given readiness grade can support.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GradeCapTable(pub BTreeMap<ReadinessGrade, TrlLevel>);

impl Default for GradeCapTable {
    fn default() -> Self {
        GradeCapTable(
            ReadinessGrade::ALL
                .into_iter()
                .zip([3, 4, 5, 6, 7])
                .map(|(g, v)| (g, TrlLevel::saturating(v)))
                .collect(),
        )
    }
}

impl GradeCapTable {
    pub fn cap(&self, grade: ReadinessGrade) -> TrlLevel {
        self.0.get(&grade).copied().unwrap_or(TrlLevel::MAX)
    }

    pub fn is_complete_and_monotone(&self) -> bool {
        ReadinessGrade::ALL.iter().all(|g| self.0.contains_key(g))
            && ReadinessGrade::ALL.windows(2).all(|w| self.cap(w[0]) <= self.cap(w[1]))
    }
}

/// Cap from the best graded use-case among `use_cases`; `None` when none
/// carries a grade.
pub fn quality_cap<'a>(use_cases: impl IntoIterator<Item = &'a UseCase>, table: &GradeCapTable) -> Option<TrlLevel> {
    use_cases.into_iter().filter_map(|uc| uc.readiness).max().map(|g| table.cap(g))
}

/// Per-WP quality caps over each WP's own use-case associations.
pub fn model_caps(model: &ProjectModel, wps: &BTreeSet<String>, table: &GradeCapTable) -> BTreeMap<String, TrlLevel> {
    model
        .work_packages
        .iter()
        .filter(|wp| wps.contains(&wp.id))
        .filter_map(|wp: &WorkPackage| quality_cap(model.use_cases_of(wp), table).map(|c| (wp.id.clone(), c)))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdjustedTrl {
    pub own_estimate: TrlLevel,
    pub quality_cap: Option<TrlLevel>,
    pub adjusted: TrlLevel,
    pub limiting_upstream: Option<String>,
    /// Uncertain inputs that were not allowed to constrain this WP.
    pub uncertain_inputs: Vec<String>,
}

impl AdjustedTrl {
    /// min(own estimate, cap): the value before graph influence.
    pub fn local_limit(&self) -> TrlLevel {
        self.quality_cap.map_or(self.own_estimate, |c| c.min(self.own_estimate))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AdjustedTrlMap(pub BTreeMap<String, AdjustedTrl>);

impl AdjustedTrlMap {
    pub fn get(&self, id: &str) -> Option<&AdjustedTrl> {
        self.0.get(id)
    }

    pub fn adjusted(&self, id: &str) -> Option<TrlLevel> {
        self.0.get(id).map(|a| a.adjusted)
    }

    pub fn estimates(&self) -> BTreeMap<String, TrlLevel> {
        self.0.iter().map(|(k, v)| (k.clone(), v.own_estimate)).collect()
    }

    pub fn caps(&self) -> BTreeMap<String, TrlLevel> {
        self.0.iter().filter_map(|(k, v)| v.quality_cap.map(|c| (k.clone(), c))).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PropagationError {
    #[error("cyclic dependency {}", .cycle.join(" -> "))]
    CyclicDependency { cycle: Vec<String> },
    #[error("work package {wp_id} has no estimated TRL")]
    MissingEstimate { wp_id: String },
}

/// Min-composition along direct edges, in topological order.
pub fn propagate(
    graph: &WpGraph,
    estimates: &BTreeMap<String, TrlLevel>,
    caps: &BTreeMap<String, TrlLevel>,
) -> Result<AdjustedTrlMap, PropagationError> {
    if let Some(missing) = graph.nodes.iter().find(|n| !estimates.contains_key(*n)) {
        return Err(PropagationError::MissingEstimate { wp_id: missing.clone() });
    }
    let order = topological_order(graph)?;

    let mut out: BTreeMap<String, AdjustedTrl> = BTreeMap::new();
    for id in order {
        let own_estimate = estimates[&id];
        let quality_cap = caps.get(&id).copied();
        let local = quality_cap.map_or(own_estimate, |c| c.min(own_estimate));

        let binding_upstream = graph
            .direct_upstream(&id)
            .map(|u| (out[u].adjusted, u))
            .min()
            .filter(|(value, _)| *value < local);

        let (adjusted, limiting_upstream) = match binding_upstream {
            Some((value, u)) => (value, Some(u.to_string())),
            None => (local, None),
        };
        let uncertain_inputs = graph.uncertain_inputs(&id).map(str::to_string).collect::<BTreeSet<_>>();
        out.insert(
            id,
            AdjustedTrl {
                own_estimate,
                quality_cap,
                adjusted,
                limiting_upstream,
                uncertain_inputs: uncertain_inputs.into_iter().collect(),
            },
        );
    }
    Ok(AdjustedTrlMap(out))
}

/// Kahn's algorithm over direct edges, smallest ready id first.
pub fn topological_order(graph: &WpGraph) -> Result<Vec<String>, PropagationError> {
    let mut indegree: BTreeMap<&str, usize> = graph.nodes.iter().map(|n| (n.as_str(), 0)).collect();
    for e in graph.direct_edges() {
        *indegree.get_mut(e.to.as_str()).unwrap() += 1;
    }
    let mut ready: BTreeSet<&str> = indegree.iter().filter(|(_, d)| **d == 0).map(|(n, _)| *n).collect();
    let mut order = Vec::with_capacity(graph.nodes.len());
    while let Some(n) = ready.pop_first() {
        order.push(n.to_string());
        for e in graph.direct_edges().filter(|e| e.from == n) {
            let d = indegree.get_mut(e.to.as_str()).unwrap();
            *d -= 1;
            if *d == 0 {
                ready.insert(e.to.as_str());
            }
        }
    }
    if order.len() < graph.nodes.len() {
        let cycle = find_cycles(&graph.nodes, &graph.direct_pairs()).into_iter().next().unwrap_or_default();
        return Err(PropagationError::CyclicDependency { cycle });
    }
    Ok(order)
}

/// WPs whose adjusted TRL lowers downstream WPs. Each lowered WP is
/// attributed to the root of its `limiting_upstream` chain. Sorted by
/// blocked count (descending), then id.
pub fn bottlenecks(adjusted: &AdjustedTrlMap) -> Vec<Bottleneck> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for id in adjusted.0.keys() {
        let mut cur = id.as_str();
        let mut steps = 0;
        while let Some(up) = adjusted.0[cur].limiting_upstream.as_deref() {
            cur = up;
            steps += 1;
        }
        if steps > 0 {
            *counts.entry(cur).or_default() += 1;
        }
    }
    let mut out: Vec<Bottleneck> = counts
        .into_iter()
        .map(|(wp_id, blocked_downstream)| Bottleneck { wp_id: wp_id.to_string(), blocked_downstream })
        .collect();
    out.sort_by(|a, b| b.blocked_downstream.cmp(&a.blocked_downstream).then_with(|| a.wp_id.cmp(&b.wp_id)));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(v: i64) -> TrlLevel {
        TrlLevel::new(v).unwrap()
    }

    fn edge(from: &str, to: &str) -> GraphEdge {
        GraphEdge { from: from.into(), to: to.into(), kind: DependencyKind::Data, certainty: Certainty::Direct }
    }

    fn graph(nodes: &[&str], edges: &[(&str, &str)]) -> WpGraph {
        WpGraph::new(nodes.iter().map(|s| s.to_string()).collect(), edges.iter().map(|(f, t)| edge(f, t)))
    }

    fn est(pairs: &[(&str, i64)]) -> BTreeMap<String, TrlLevel> {
        pairs.iter().map(|(k, v)| (k.to_string(), t(*v))).collect()
    }

    #[test]
    fn chain_is_limited_by_upstream() {
        let g = graph(&["A", "B"], &[("A", "B")]);
        let m = propagate(&g, &est(&[("A", 6), ("B", 7)]), &BTreeMap::new()).unwrap();
        assert_eq!(m.adjusted("B"), Some(t(6)));
        assert_eq!(m.get("B").unwrap().limiting_upstream.as_deref(), Some("A"));
        assert_eq!(m.get("A").unwrap().limiting_upstream, None);
    }

    #[test]
    fn isolated_node_keeps_estimate() {
        let g = graph(&["A"], &[]);
        let m = propagate(&g, &est(&[("A", 5)]), &BTreeMap::new()).unwrap();
        assert_eq!(m.adjusted("A"), Some(t(5)));
    }

    #[test]
    fn cap_bounds_the_chain() {
        let g = graph(&["WP1", "WP2", "WP3", "WP4", "WP5"], &[("WP1", "WP2"), ("WP2", "WP3"), ("WP3", "WP4"), ("WP4", "WP5")]);
        let estimates = est(&[("WP1", 7), ("WP2", 7), ("WP3", 7), ("WP4", 7), ("WP5", 7)]);
        let caps = est(&[("WP2", 5)]);
        let m = propagate(&g, &estimates, &caps).unwrap();
        for wp in ["WP3", "WP4", "WP5"] {
            assert!(m.adjusted(wp).unwrap() <= t(5));
        }
        assert_eq!(m.adjusted("WP1"), Some(t(7)));
    }

    #[test]
    fn uncertain_edges_do_not_constrain() {
        let mut g = graph(&["A", "B"], &[]);
        g.edges.insert(GraphEdge { certainty: Certainty::Uncertain, ..edge("A", "B") });
        let m = propagate(&g, &est(&[("A", 3), ("B", 7)]), &BTreeMap::new()).unwrap();
        assert_eq!(m.adjusted("B"), Some(t(7)));
        assert_eq!(m.get("B").unwrap().uncertain_inputs, vec!["A".to_string()]);
    }

    #[test]
    fn cycle_is_an_error() {
        let g = graph(&["A", "B", "C"], &[("A", "B"), ("B", "C"), ("C", "A")]);
        let err = propagate(&g, &est(&[("A", 3), ("B", 3), ("C", 3)]), &BTreeMap::new()).unwrap_err();
        assert_eq!(err, PropagationError::CyclicDependency { cycle: vec!["A".into(), "B".into(), "C".into()] });
    }

    #[test]
    fn missing_estimate() {
        let g = graph(&["A", "B"], &[]);
        let err = propagate(&g, &est(&[("A", 3)]), &BTreeMap::new()).unwrap_err();
        assert_eq!(err, PropagationError::MissingEstimate { wp_id: "B".into() });
    }

    #[test]
    fn structure_examples() {
        let s = detect_structure(&graph(&["A", "B", "C"], &[]));
        assert_eq!(s.islands.len(), 3);
        assert!(s.cycles.is_empty());

        let s = detect_structure(&graph(&["A", "B", "C"], &[("A", "B"), ("B", "C"), ("C", "A")]));
        assert_eq!(s.cycles, vec![vec!["A".to_string(), "B".into(), "C".into()]]);

        let chain = graph(&["WP1", "WP2", "WP3", "WP4", "WP5"], &[("WP1", "WP2"), ("WP2", "WP3"), ("WP3", "WP4"), ("WP4", "WP5")]);
        let s = detect_structure(&chain);
        assert!(s.islands.is_empty());
        assert!(s.cycles.is_empty());
    }

    #[test]
    fn control_only_edges_leave_islands() {
        let g = WpGraph::new(
            ["A", "B"].iter().map(|s| s.to_string()).collect(),
            [GraphEdge { kind: DependencyKind::Control, ..edge("A", "B") }],
        );
        assert!(g.edges.is_empty());
        assert_eq!(detect_structure(&g).islands.len(), 2);
    }

    #[test]
    fn bottleneck_attribution() {
        let g = graph(&["A", "B", "C"], &[("A", "B"), ("B", "C")]);
        let m = propagate(&g, &est(&[("A", 4), ("B", 7), ("C", 7)]), &BTreeMap::new()).unwrap();
        assert_eq!(bottlenecks(&m), vec![Bottleneck { wp_id: "A".into(), blocked_downstream: 2 }]);

        let m = propagate(&g, &est(&[("A", 5), ("B", 5), ("C", 5)]), &BTreeMap::new()).unwrap();
        assert!(bottlenecks(&m).is_empty());
    }

    #[test]
    fn quality_cap_takes_best_grade() {
        let table = GradeCapTable::default();
        let mut a = UseCase::new("a", "A");
        let mut b = UseCase::new("b", "B");
        a.readiness = Some(ReadinessGrade::G2);
        assert_eq!(quality_cap([&a], &table), Some(t(5)));
        a.readiness = Some(ReadinessGrade::G1);
        b.readiness = Some(ReadinessGrade::G3);
        assert_eq!(quality_cap([&a, &b], &table), Some(t(6)));
        let c = UseCase::new("c", "C");
        assert_eq!(quality_cap([&c], &table), None);
        assert!(table.is_complete_and_monotone());
    }

    #[test]
    fn components_and_paths() {
        let g = graph(&["WP1", "WP2", "WP3", "WP4"], &[("WP2", "WP3"), ("WP1", "WP4"), ("WP4", "WP3")]);
        let set: BTreeSet<String> = ["WP1", "WP3"].iter().map(|s| s.to_string()).collect();
        assert!(!g.weakly_connected(&set));
        assert_eq!(g.undirected_path("WP1", "WP3").unwrap(), vec!["WP1", "WP4", "WP3"]);
        let all: BTreeSet<String> = g.nodes.clone();
        assert!(g.weakly_connected(&all));
    }
}
