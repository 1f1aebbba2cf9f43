//! JSON run report.

use std::collections::BTreeMap;

use ipocp::{KktReport, RunReport};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Converged,
    Failed,
}

/// Where a run setting came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Flag,
    Bundle,
    Default,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub status: Status,
    /// Failure message when `status` is `failed`.
    pub error: Option<String>,
    #[serde(flatten)]
    pub run: RunReport,
    pub settings_source: BTreeMap<String, Source>,
    /// Cost of the final trajectory, `null` when no solve converged.
    pub objective: Option<f64>,
    pub kkt: Option<KktReport>,
    pub corrections: Vec<String>,
}
