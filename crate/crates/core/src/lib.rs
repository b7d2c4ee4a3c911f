//! Demonstrator feasibility analysis for multi-work-package research
//! projects: TRL gaps, dependency-adjusted readiness, artifact quality
//! gating, demonstration-level recommendation and requirements elaboration.

pub mod depgraph;
pub mod engine;
pub mod feasibility;
pub mod model;
pub mod quality;
pub mod requirements;
pub mod trlgap;

#[cfg(any(test, feature = "testkit"))]
pub mod testkit;
