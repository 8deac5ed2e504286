//! On-disk JSON formats: instance files and solve reports.
//!
//! Matrices are stored dense and row-major with explicit dimensions;
//! indices are 0-based.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instances::Instance;
use crate::kernel::KernelInstance;
use crate::numkernel::RealMatrix;
use crate::oracle::ExactResult;
use crate::partition::PartitionInstance;
use crate::regular::RegularInstance;
use crate::report::{ProblemKind, SolveReport};

pub const FORMAT_VERSION: &str = "1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixData {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl MatrixData {
    pub fn to_matrix(&self, field: &str) -> Result<RealMatrix<f64>> {
        RealMatrix::new(self.rows, self.cols, self.data.clone())
            .map_err(|e| Error::InvalidInstance(format!("field `{field}`: {e}")))
    }
}

impl From<&RealMatrix<f64>> for MatrixData {
    fn from(m: &RealMatrix<f64>) -> Self {
        Self {
            rows: m.rows(),
            cols: m.cols(),
            data: m.as_slice().to_vec(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum Constraint {
    Partition {
        parts: Vec<Vec<usize>>,
        quotas: Vec<usize>,
    },
    Regular {
        #[serde(rename = "B")]
        representation: MatrixData,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub format_version: String,
    pub kind: ProblemKind,
    #[serde(rename = "L", default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<MatrixData>,
    #[serde(rename = "V", default, skip_serializing_if = "Option::is_none")]
    pub factor: Option<MatrixData>,
    pub constraint: Constraint,
}

impl InstanceFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidInstance(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("instance files always serialize");
        s.push('\n');
        s
    }

    pub fn from_instance(inst: &Instance<f64>) -> Self {
        let kernel = inst.kernel();
        let (kind, constraint) = match inst {
            Instance::Partition(p) => (
                ProblemKind::Partition,
                Constraint::Partition {
                    parts: p.parts().to_vec(),
                    quotas: p.quotas().to_vec(),
                },
            ),
            Instance::Regular(r) => (
                ProblemKind::Regular,
                Constraint::Regular {
                    representation: r.representation().into(),
                },
            ),
        };
        Self {
            format_version: FORMAT_VERSION.to_string(),
            kind,
            kernel: Some(kernel.kernel().into()),
            factor: Some(kernel.factor().into()),
            constraint,
        }
    }

    /// Validates and builds the instance. `V` is recovered from `L` when
    /// absent, `L` is formed as `V^T V` when absent.
    pub fn to_instance(&self) -> Result<Instance<f64>> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::InvalidInstance(format!(
                "field `format_version`: unsupported version {:?}",
                self.format_version
            )));
        }
        let l = self.kernel.as_ref().map(|m| m.to_matrix("L")).transpose()?;
        let v = self.factor.as_ref().map(|m| m.to_matrix("V")).transpose()?;
        let kernel = match (l, v) {
            (Some(l), Some(v)) => KernelInstance::from_parts(l, v),
            (Some(l), None) => KernelInstance::from_kernel(l),
            (None, Some(v)) => Ok(KernelInstance::from_factor(v)),
            (None, None) => {
                return Err(Error::InvalidInstance("one of fields `L` or `V` is required".into()));
            }
        }
        .map_err(|e| match e {
            Error::InvalidInstance(_) => e,
            other => Error::InvalidInstance(format!("fields `L`/`V`: {other}")),
        })?;
        match (&self.kind, &self.constraint) {
            (ProblemKind::Partition, Constraint::Partition { parts, quotas }) => Ok(Instance::Partition(
                PartitionInstance::new(kernel, parts.clone(), quotas.clone())?,
            )),
            (ProblemKind::Regular, Constraint::Regular { representation }) => Ok(Instance::Regular(
                RegularInstance::new(kernel, representation.to_matrix("B")?)?,
            )),
            _ => Err(Error::InvalidInstance(
                "field `constraint`: type does not match `kind`".into(),
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    SampleAndRound,
    Exhaustive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub format_version: String,
    pub kind: ProblemKind,
    pub method: Method,
    pub chosen_set: Vec<usize>,
    pub objective_det: f64,
    /// `null` when the determinant is zero.
    pub objective_log: Option<f64>,
    /// Natural log of the certified approximation factor; 0 for
    /// exhaustive results.
    pub certified_factor_log: f64,
    pub trials: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub enumerated: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_trial_values: Option<Vec<f64>>,
    pub warnings: Vec<String>,
}

impl ReportFile {
    pub fn from_solve(report: &SolveReport) -> Self {
        Self {
            format_version: FORMAT_VERSION.to_string(),
            kind: report.kind,
            method: Method::SampleAndRound,
            chosen_set: report.chosen_set.clone(),
            objective_det: report.objective_det,
            objective_log: report.objective_log,
            certified_factor_log: report.certified_factor_log,
            trials: report.trials,
            seed: report.seed,
            enumerated: None,
            per_trial_values: Some(report.per_trial_values.clone()),
            warnings: report.warnings.iter().map(ToString::to_string).collect(),
        }
    }

    pub fn from_exact(kind: ProblemKind, exact: &ExactResult<f64>) -> Self {
        let mut warnings = Vec::new();
        if !exact.is_feasible() {
            warnings.push("no feasible set: the base family is empty".to_string());
        }
        Self {
            format_version: FORMAT_VERSION.to_string(),
            kind,
            method: Method::Exhaustive,
            chosen_set: exact.best_set.clone(),
            objective_det: exact.best_value,
            objective_log: (!exact.best_log.is_zero()).then_some(exact.best_log.log_abs),
            certified_factor_log: 0.0,
            trials: 0,
            seed: 0,
            enumerated: Some(u64::try_from(exact.enumerated).unwrap_or(u64::MAX)),
            per_trial_values: None,
            warnings,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports always serialize");
        s.push('\n');
        s
    }
}
