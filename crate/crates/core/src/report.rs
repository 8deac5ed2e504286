use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Partition,
    Regular,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolveWarning {
    /// No trial produced a set with nonzero determinant.
    AllTrialsDegenerate,
    /// `|det(B_S)|` of the returned set is not 1.
    RepresentationNotUnimodular { det_abs: String },
}

impl fmt::Display for SolveWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolveWarning::AllTrialsDegenerate => {
                write!(f, "all trials degenerate: every candidate has determinant 0")
            }
            SolveWarning::RepresentationNotUnimodular { det_abs } => {
                write!(
                    f,
                    "representation is not unimodular on the chosen set: |det(B_S)| = {det_abs}"
                )
            }
        }
    }
}

/// Outcome of a randomized solve.
///
/// `certified_factor_log` is the natural log of the explicit factor `c` for
/// which the algorithm guarantees `det(L_{S,S}) >= c * OPT` with high
/// probability.
#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    pub kind: ProblemKind,
    pub chosen_set: Vec<usize>,
    pub objective_det: f64,
    /// `ln det(L_{S,S})`; `None` when the determinant is zero.
    pub objective_log: Option<f64>,
    pub certified_factor_log: f64,
    pub trials: usize,
    pub seed: u64,
    pub best_trial: usize,
    pub nonzero_trials: usize,
    pub per_trial_values: Vec<f64>,
    pub warnings: Vec<SolveWarning>,
}

impl SolveReport {
    pub fn is_degenerate(&self) -> bool {
        self.warnings.contains(&SolveWarning::AllTrialsDegenerate)
    }
}
