use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::AnalysisReport;
use crate::feasibility::DemonstrationLevel;
use crate::model::TrlLevel;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Change<T> {
    pub id: String,
    pub before: Option<T>,
    pub after: Option<T>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportDiff {
    pub adjusted: Vec<Change<TrlLevel>>,
    pub achievable: Vec<Change<TrlLevel>>,
    pub shortfall: Vec<Change<u32>>,
    pub recommendations: Vec<Change<DemonstrationLevel>>,
    /// `(demo id, constraint message)` pairs.
    pub added_constraints: Vec<(String, String)>,
    pub removed_constraints: Vec<(String, String)>,
}

impl ReportDiff {
    pub fn is_empty(&self) -> bool {
        self.adjusted.is_empty()
            && self.achievable.is_empty()
            && self.shortfall.is_empty()
            && self.recommendations.is_empty()
            && self.added_constraints.is_empty()
            && self.removed_constraints.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DiffError {
    #[error("reports belong to different projects: `{left}` and `{right}`")]
    ProjectMismatch { left: String, right: String },
}

fn changes<T: Clone + PartialEq>(a: BTreeMap<String, T>, b: BTreeMap<String, T>) -> Vec<Change<T>> {
    let ids: BTreeSet<&String> = a.keys().chain(b.keys()).collect();
    ids.into_iter()
        .filter_map(|id| {
            let (before, after) = (a.get(id).cloned(), b.get(id).cloned());
            (before != after).then(|| Change { id: id.clone(), before, after })
        })
        .collect()
}

pub fn diff_reports(a: &AnalysisReport, b: &AnalysisReport) -> Result<ReportDiff, DiffError> {
    if a.project != b.project {
        return Err(DiffError::ProjectMismatch { left: a.project.clone(), right: b.project.clone() });
    }
    let adjusted = |r: &AnalysisReport| r.adjusted.0.iter().map(|(k, v)| (k.clone(), v.adjusted)).collect();
    let per_demo = |r: &AnalysisReport, f: &dyn Fn(&crate::feasibility::DemonstratorAssessment) -> u32| {
        r.assessments.iter().map(|x| (x.demo_id.clone(), f(x))).collect::<BTreeMap<_, _>>()
    };
    let achievable = |r: &AnalysisReport| r.assessments.iter().map(|x| (x.demo_id.clone(), x.achievable_trl)).collect();
    let recommended =
        |r: &AnalysisReport| r.assessments.iter().map(|x| (x.demo_id.clone(), x.recommended_level)).collect();
    let constraints = |r: &AnalysisReport| -> BTreeSet<(String, String)> {
        r.assessments
            .iter()
            .flat_map(|x| x.constraints.iter().map(|c| (x.demo_id.clone(), c.message.clone())))
            .collect()
    };
    let (ca, cb) = (constraints(a), constraints(b));

    Ok(ReportDiff {
        adjusted: changes(adjusted(a), adjusted(b)),
        achievable: changes(achievable(a), achievable(b)),
        shortfall: changes(per_demo(a, &|x| x.shortfall), per_demo(b, &|x| x.shortfall)),
        recommendations: changes(recommended(a), recommended(b)),
        added_constraints: cb.difference(&ca).cloned().collect(),
        removed_constraints: ca.difference(&cb).cloned().collect(),
    })
}
