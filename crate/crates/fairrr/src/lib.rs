//! Group-fair pre-processing for binary classification.
//!
//! The crate makes training data fair by randomly flipping a minimal fraction
//! of labels before a downstream classifier is trained. The flip probabilities
//! come from a closed-form randomized-response design ([`mechanism`]); a
//! scalar knob `t` trades accuracy against group disparity and is calibrated
//! to any target disparity by bisection ([`calibrate`]). The remaining
//! modules supply data handling ([`data`]), a deterministic logistic
//! regression ([`model`]), evaluation metrics ([`metrics`]), and a multi-seed
//! benchmark harness ([`harness`]).

pub mod calibrate;
pub mod data;
pub mod error;
pub mod harness;
pub mod mechanism;
pub mod metrics;
pub mod model;
pub mod seeds;

pub use calibrate::{CalibrationConfig, CalibrationResult};
pub use data::{AdapterSpec, Dataset, SyntheticSpec};
pub use error::{Error, Result};
pub use mechanism::{DesignMatrix, FairnessMetric, GroupProbabilities};
pub use metrics::EvaluationReport;
pub use model::{LogisticModel, TrainConfig};
