//! JSON instance and schedule files.
//!
//! Node labels in files are 1-based. Example instance:
//!
//! ```json
//! {
//!   "n": 2,
//!   "liabilities": [[0, 5], [0, 0]],
//!   "external_node": 2,
//!   "inflows": [[3, 0], [4, 0]],
//!   "alpha": 1.01
//! }
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dense::Matrix;
use crate::error::ModelError;
use crate::model::{DynamicInstance, LiabilityMatrix, PaymentSchedule, StaticInstance};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("field `{field}`: {message}")]
    Field { field: &'static str, message: String },
    #[error("invalid instance: {0}")]
    Invalid(String),
}

fn syntax(e: serde_json::Error) -> FormatError {
    FormatError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

/// Restates a model error with 1-based node labels.
fn describe(e: &ModelError) -> String {
    match *e {
        ModelError::NegativeLiability { i, j, value } => {
            format!("liability ({}, {}) must be finite and nonnegative, got {value}", i + 1, j + 1)
        }
        ModelError::NonzeroDiagonal { i, value } => {
            format!("diagonal must be zero: liability ({}, {}) = {value}", i + 1, i + 1)
        }
        ModelError::ExternalNodeOwes { node, row_sum } => {
            format!("external node {} must owe nothing, but its row sums to {row_sum}", node + 1)
        }
        ModelError::NegativeInflow { t, i, value } => {
            format!("inflow at period {t}, node {} must be finite and nonnegative, got {value}", i + 1)
        }
        _ => e.to_string(),
    }
}

fn invalid(e: ModelError) -> FormatError {
    FormatError::Invalid(describe(&e))
}

fn default_alpha() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub n: usize,
    /// Row-major `n × n`; entry `(i, j)` is owed by `i` to `j`.
    pub liabilities: Vec<Vec<f64>>,
    /// 1-based label of the external-sector node.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub external_node: Option<usize>,
    /// One row of external inflows per period.
    pub inflows: Vec<Vec<f64>>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Defaults to the number of inflow rows; longer horizons are padded
    /// with zero inflows.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(default)]
    pub eta: f64,
}

impl InstanceFile {
    fn check_shape(&self) -> Result<(), FormatError> {
        let n = self.n;
        if self.liabilities.len() != n {
            return Err(FormatError::Field {
                field: "liabilities",
                message: format!("{} rows, expected n = {n}", self.liabilities.len()),
            });
        }
        if let Some(r) = self.liabilities.iter().position(|row| row.len() != n) {
            return Err(FormatError::Field {
                field: "liabilities",
                message: format!("row {} has {} entries, expected {n}", r + 1, self.liabilities[r].len()),
            });
        }
        if self.inflows.is_empty() {
            return Err(FormatError::Field {
                field: "inflows",
                message: "at least one period of inflows is required".into(),
            });
        }
        if let Some(t) = self.inflows.iter().position(|row| row.len() != n) {
            return Err(FormatError::Field {
                field: "inflows",
                message: format!("period {t} has {} entries, expected {n}", self.inflows[t].len()),
            });
        }
        if let Some(s) = self.external_node {
            if s == 0 || s > n {
                return Err(FormatError::Field {
                    field: "external_node",
                    message: format!("{s} is not a node label in 1..={n}"),
                });
            }
        }
        if let Some(h) = self.horizon {
            if h < self.inflows.len() {
                return Err(FormatError::Field {
                    field: "horizon",
                    message: format!("{h} is shorter than the {} inflow periods given", self.inflows.len()),
                });
            }
        }
        Ok(())
    }

    pub fn liability_matrix(&self) -> Result<LiabilityMatrix, FormatError> {
        self.check_shape()?;
        let m = Matrix::from_rows(self.liabilities.clone()).map_err(invalid)?;
        LiabilityMatrix::new(m, self.external_node.map(|s| s - 1)).map_err(invalid)
    }

    pub fn dynamic_instance(&self) -> Result<DynamicInstance, FormatError> {
        let liabilities = self.liability_matrix()?;
        let mut inflows = self.inflows.clone();
        if let Some(h) = self.horizon {
            inflows.resize(h, vec![0.0; self.n]);
        }
        DynamicInstance::new(liabilities, inflows, self.alpha, self.eta).map_err(invalid)
    }

    /// Single-period view; the file must hold exactly one period.
    pub fn static_instance(&self) -> Result<StaticInstance, FormatError> {
        let liabilities = self.liability_matrix()?;
        if self.inflows.len() != 1 || self.horizon.is_some_and(|h| h != 1) {
            return Err(FormatError::Field {
                field: "inflows",
                message: format!(
                    "static clearing needs a single period, the file has {}",
                    self.horizon.unwrap_or(self.inflows.len())
                ),
            });
        }
        StaticInstance::new(liabilities, self.inflows[0].clone()).map_err(invalid)
    }
}

pub fn parse_instance(text: &str) -> Result<InstanceFile, FormatError> {
    let file: InstanceFile = serde_json::from_str(text).map_err(syntax)?;
    file.check_shape()?;
    Ok(file)
}

pub fn read_instance(path: &Path) -> Result<InstanceFile, FormatError> {
    parse_instance(&read(path)?)
}

fn read(path: &Path) -> Result<String, FormatError> {
    std::fs::read_to_string(path).map_err(|source| FormatError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Serialized payment schedule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode")]
pub enum ScheduleFile {
    #[serde(rename = "matrix")]
    Matrix { payments: Vec<Matrix> },
    #[serde(rename = "prorata")]
    ProRata { payments: Vec<Vec<f64>> },
}

impl ScheduleFile {
    pub fn from_schedule(schedule: &PaymentSchedule) -> Self {
        match schedule.vectors() {
            Some(v) => ScheduleFile::ProRata { payments: v.to_vec() },
            None => ScheduleFile::Matrix {
                payments: schedule.matrices().to_vec(),
            },
        }
    }

    pub fn to_schedule(&self, instance: &DynamicInstance) -> Result<PaymentSchedule, FormatError> {
        match self {
            ScheduleFile::Matrix { payments } => PaymentSchedule::from_matrices(instance, payments.clone()),
            ScheduleFile::ProRata { payments } => PaymentSchedule::from_vectors(instance, payments.clone()),
        }
        .map_err(invalid)
    }
}

/// Accepts a bare schedule or any document with a `schedule` member (such
/// as a report file).
pub fn parse_schedule(text: &str) -> Result<ScheduleFile, FormatError> {
    let mut value: serde_json::Value = serde_json::from_str(text).map_err(syntax)?;
    if let Some(inner) = value.get_mut("schedule") {
        value = inner.take();
    }
    serde_json::from_value(value).map_err(|e| FormatError::Field {
        field: "schedule",
        message: e.to_string(),
    })
}

pub fn read_schedule(path: &Path) -> Result<ScheduleFile, FormatError> {
    parse_schedule(&read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TINY: &str = r#"{
  "n": 2,
  "liabilities": [[0, 5], [0, 0]],
  "external_node": 2,
  "inflows": [[3, 0], [4, 0]],
  "alpha": 1.01
}"#;

    #[test]
    fn parses_defaults() {
        let f = parse_instance(TINY).unwrap();
        assert_eq!(f.eta, 0.0);
        let inst = f.dynamic_instance().unwrap();
        assert_eq!(inst.horizon(), 2);
        assert_eq!(inst.liabilities().external_node(), Some(1));
        assert!(f.static_instance().is_err());
    }

    #[test]
    fn horizon_pads_with_zero_inflow() {
        let mut f = parse_instance(TINY).unwrap();
        f.horizon = Some(4);
        let inst = f.dynamic_instance().unwrap();
        assert_eq!(inst.horizon(), 4);
        assert_eq!(inst.inflow(3), &[0.0, 0.0]);
        f.horizon = Some(1);
        assert!(matches!(f.dynamic_instance(), Err(FormatError::Field { field: "horizon", .. })));
    }

    #[test]
    fn syntax_error_has_location() {
        let err = parse_instance("{\n  \"n\": 2,\n  \"liabilities\": [[0, 1],\n}").unwrap_err();
        assert!(matches!(err, FormatError::Syntax { line: 4, .. }), "{err}");
        let err = parse_instance(r#"{"n": 1, "liabilities": [[0]], "inflows": [[0]], "beta": 2}"#).unwrap_err();
        assert!(err.to_string().contains("beta"));
    }

    #[test]
    fn invariant_violations_are_named() {
        let text = r#"{"n": 2, "liabilities": [[1, 0], [0, 0]], "inflows": [[0, 0]]}"#;
        let err = parse_instance(text).unwrap().static_instance().unwrap_err();
        assert!(err.to_string().contains("diagonal must be zero: liability (1, 1)"), "{err}");
        let text = r#"{"n": 2, "liabilities": [[0, 1]], "inflows": [[0, 0]]}"#;
        assert!(matches!(parse_instance(text), Err(FormatError::Field { field: "liabilities", .. })));
        let text = r#"{"n": 2, "liabilities": [[0, 1], [0, 0]], "inflows": [[0, 0]], "alpha": 0.9}"#;
        assert!(parse_instance(text).unwrap().dynamic_instance().unwrap_err().to_string().contains("alpha"));
        let text = r#"{"n": 2, "liabilities": [[0, 1], [0, 0]], "inflows": [[0, 0]], "eta": 1}"#;
        assert!(parse_instance(text).unwrap().dynamic_instance().unwrap_err().to_string().contains("eta"));
    }

    #[test]
    fn schedule_round_trip() {
        let inst = parse_instance(TINY).unwrap().dynamic_instance().unwrap();
        let mut p = Matrix::square_zeros(2);
        p[(0, 1)] = 3.0;
        let s = PaymentSchedule::from_matrices(&inst, vec![p.clone(), p]).unwrap();
        let text = serde_json::to_string(&ScheduleFile::from_schedule(&s)).unwrap();
        let back = parse_schedule(&text).unwrap().to_schedule(&inst).unwrap();
        assert_eq!(back, s);
        let wrapped = format!("{{\"report\": {{}}, \"schedule\": {text}}}");
        assert_eq!(parse_schedule(&wrapped).unwrap().to_schedule(&inst).unwrap(), s);
        let v = PaymentSchedule::from_vectors(&inst, vec![vec![3.0, 0.0], vec![2.0, 0.0]]).unwrap();
        let text = serde_json::to_string(&ScheduleFile::from_schedule(&v)).unwrap();
        assert!(text.contains("\"prorata\""));
        assert_eq!(parse_schedule(&text).unwrap().to_schedule(&inst).unwrap(), v);
    }
}
