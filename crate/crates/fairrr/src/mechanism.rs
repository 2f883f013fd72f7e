//! Group-wise randomized-response mechanism.
//!
//! The mechanism reports each training label unchanged with a retention
//! probability that depends on the (sensitive group, label) cell, and flipped
//! otherwise. The four retention probabilities form a [`DesignMatrix`]. For a
//! scalar parameter `t` the closed-form utility-maximizing matrix keeps the
//! expected fraction of unchanged labels as high as possible subject to the
//! fairness constraint selected by [`FairnessMetric`]; the induced downstream
//! classifier behaves like a group-wise thresholded rule whose thresholds are
//! shifted by the metric-specific transforms `T_1(t)` and `T_0(t)`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack for bracket-inclusion and bound checks, absorbing float dust at the
/// closed endpoints.
const EDGE_EPS: f64 = 1e-9;

/// Guard threshold for transform denominators.
const DENOM_EPS: f64 = 1e-12;

/// Group-fairness criterion to enforce on the perturbed labels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FairnessMetric {
    /// Equal positive-prediction rates across sensitive groups.
    #[serde(rename = "dp")]
    DemographicParity,
    /// Equal true-positive rates across sensitive groups.
    #[serde(rename = "eo")]
    EqualityOfOpportunity,
    /// Equal false-positive rates across sensitive groups.
    #[serde(rename = "pe")]
    PredictiveEquality,
}

impl FairnessMetric {
    pub const ALL: [FairnessMetric; 3] = [
        FairnessMetric::DemographicParity,
        FairnessMetric::EqualityOfOpportunity,
        FairnessMetric::PredictiveEquality,
    ];

    pub fn code(&self) -> &'static str {
        match self {
            FairnessMetric::DemographicParity => "dp",
            FairnessMetric::EqualityOfOpportunity => "eo",
            FairnessMetric::PredictiveEquality => "pe",
        }
    }
}

impl fmt::Display for FairnessMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for FairnessMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dp" => Ok(FairnessMetric::DemographicParity),
            "eo" => Ok(FairnessMetric::EqualityOfOpportunity),
            "pe" => Ok(FairnessMetric::PredictiveEquality),
            other => Err(Error::InvalidArgument(format!(
                "unknown fairness metric {other:?}, expected dp, eo or pe"
            ))),
        }
    }
}

/// Joint probabilities of the four (sensitive group, label) cells.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupProbabilities {
    pub p11: f64,
    pub p10: f64,
    pub p01: f64,
    pub p00: f64,
}

impl GroupProbabilities {
    /// Checks strict positivity of every cell and that the cells sum to one
    /// within 1e-12.
    pub fn new(p11: f64, p10: f64, p01: f64, p00: f64) -> Result<Self> {
        let p = GroupProbabilities { p11, p10, p01, p00 };
        for (name, v) in p.named_cells() {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::DegenerateData(format!(
                    "group probability {name} = {v} not in (0, 1)"
                )));
            }
        }
        let sum = p11 + p10 + p01 + p00;
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::DegenerateData(format!(
                "group probabilities sum to {sum}, expected 1"
            )));
        }
        Ok(p)
    }

    pub fn from_counts(n11: usize, n10: usize, n01: usize, n00: usize) -> Result<Self> {
        let cells = [("A=1,Y=1", n11), ("A=1,Y=0", n10), ("A=0,Y=1", n01), ("A=0,Y=0", n00)];
        for (name, n) in cells {
            if n == 0 {
                return Err(Error::DegenerateData(format!("empty cell {name}")));
            }
        }
        let total = (n11 + n10 + n01 + n00) as f64;
        Ok(GroupProbabilities {
            p11: n11 as f64 / total,
            p10: n10 as f64 / total,
            p01: n01 as f64 / total,
            p00: n00 as f64 / total,
        })
    }

    /// Marginal mass of group `a`, p_a1 + p_a0.
    pub fn group_mass(&self, a: u8) -> f64 {
        if a == 1 {
            self.p11 + self.p10
        } else {
            self.p01 + self.p00
        }
    }

    fn named_cells(&self) -> [(&'static str, f64); 4] {
        [("p11", self.p11), ("p10", self.p10), ("p01", self.p01), ("p00", self.p00)]
    }
}

/// Empirical cell probabilities p_ay = n_ay / n.
pub fn estimate_group_probs(labels: &[u8], sensitive: &[u8]) -> Result<GroupProbabilities> {
    if labels.len() != sensitive.len() {
        return Err(Error::InvalidArgument(format!(
            "labels ({}) and sensitive ({}) differ in length",
            labels.len(),
            sensitive.len()
        )));
    }
    if labels.is_empty() {
        return Err(Error::InvalidArgument("empty label vector".into()));
    }
    let mut counts = [0usize; 4];
    for (&y, &a) in labels.iter().zip(sensitive) {
        counts[cell_index(a, y)] += 1;
    }
    GroupProbabilities::from_counts(counts[0], counts[1], counts[2], counts[3])
}

fn cell_index(a: u8, y: u8) -> usize {
    match (a, y) {
        (1, 1) => 0,
        (1, 0) => 1,
        (0, 1) => 2,
        _ => 3,
    }
}

/// Retention probabilities θ_ay = P(reported label = y | A = a, Y = y).
///
/// Matrices produced by [`solve_design_matrix`] additionally have at most one
/// retention probability below one within each group.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignMatrix {
    pub theta11: f64,
    pub theta10: f64,
    pub theta01: f64,
    pub theta00: f64,
}

impl DesignMatrix {
    /// Checks that every retention probability lies in [1/2, 1]; values within
    /// 1e-9 of a bound are clamped onto it.
    pub fn new(theta11: f64, theta10: f64, theta01: f64, theta00: f64) -> Result<Self> {
        let clamp = |name: &str, v: f64| -> Result<f64> {
            if !(0.5 - EDGE_EPS..=1.0 + EDGE_EPS).contains(&v) {
                return Err(Error::InvalidArgument(format!("{name} = {v} outside [1/2, 1]")));
            }
            Ok(v.clamp(0.5, 1.0))
        };
        Ok(DesignMatrix {
            theta11: clamp("theta11", theta11)?,
            theta10: clamp("theta10", theta10)?,
            theta01: clamp("theta01", theta01)?,
            theta00: clamp("theta00", theta00)?,
        })
    }

    /// The identity mechanism: every label kept with probability one.
    pub fn identity() -> Self {
        DesignMatrix { theta11: 1.0, theta10: 1.0, theta01: 1.0, theta00: 1.0 }
    }

    pub fn is_identity(&self) -> bool {
        self.theta11 == 1.0 && self.theta10 == 1.0 && self.theta01 == 1.0 && self.theta00 == 1.0
    }

    /// Retention probability for cell (a, y).
    pub fn retention(&self, a: u8, y: u8) -> f64 {
        match (a, y) {
            (1, 1) => self.theta11,
            (1, 0) => self.theta10,
            (0, 1) => self.theta01,
            _ => self.theta00,
        }
    }
}

/// Maximal interval of `t` around zero on which both |T_1(t)| ≤ 1 and
/// |T_0(t)| ≤ 1.
pub fn feasible_bracket(metric: FairnessMetric, p: &GroupProbabilities) -> (f64, f64) {
    match metric {
        FairnessMetric::DemographicParity => {
            let m = p.group_mass(1).min(p.group_mass(0));
            (-m, m)
        }
        FairnessMetric::EqualityOfOpportunity => (-p.p01, p.p11),
        FairnessMetric::PredictiveEquality => (-p.p10, p.p00),
    }
}

fn check_bracket(metric: FairnessMetric, p: &GroupProbabilities, t: f64) -> Result<()> {
    let (lo, hi) = feasible_bracket(metric, p);
    if t < lo - EDGE_EPS || t > hi + EDGE_EPS {
        return Err(Error::OutOfBracket { t, lo, hi });
    }
    Ok(())
}

/// Threshold-shift transforms (T_1(t), T_0(t)) for the given metric.
///
/// Both transforms vanish at t = 0 and are monotone non-decreasing on the
/// feasible bracket.
pub fn t_transform(metric: FairnessMetric, p: &GroupProbabilities, t: f64) -> Result<(f64, f64)> {
    check_bracket(metric, p, t)?;
    let (d1, d0) = match metric {
        FairnessMetric::DemographicParity => (p.group_mass(1), p.group_mass(0)),
        FairnessMetric::EqualityOfOpportunity => (2.0 * p.p11 - t, 2.0 * p.p01 + t),
        FairnessMetric::PredictiveEquality => (2.0 * p.p10 + t, 2.0 * p.p00 - t),
    };
    if d1.abs() < DENOM_EPS || d0.abs() < DENOM_EPS {
        return Err(Error::Numeric(format!(
            "transform denominator vanished at t = {t} ({metric})"
        )));
    }
    Ok((t / d1, t / d0))
}

/// Per-group decision thresholds ((1 + T_1(t))/2, (1 − T_0(t))/2) induced by
/// the mechanism at `t`.
pub fn adjusted_thresholds(
    metric: FairnessMetric,
    p: &GroupProbabilities,
    t: f64,
) -> Result<(f64, f64)> {
    let (t1, t0) = t_transform(metric, p, t)?;
    Ok(((1.0 + t1) / 2.0, (1.0 - t0) / 2.0))
}

/// Utility-maximizing design matrix for parameter `t`.
///
/// Keeps every retention probability at one except the two cells that must
/// move to satisfy the constraint system: for t > 0 the privileged positives
/// and unprivileged negatives, for t < 0 the reverse. t = 0 short-circuits to
/// the identity matrix.
pub fn solve_design_matrix(
    metric: FairnessMetric,
    p: &GroupProbabilities,
    t: f64,
) -> Result<DesignMatrix> {
    check_bracket(metric, p, t)?;
    if t == 0.0 {
        return Ok(DesignMatrix::identity());
    }
    let (t1, t0) = t_transform(metric, p, t)?;
    if t > 0.0 {
        DesignMatrix::new(1.0 / (1.0 + t1), 1.0, 1.0, 1.0 / (1.0 + t0))
    } else {
        DesignMatrix::new(1.0, 1.0 / (1.0 - t1), 1.0 / (1.0 - t0), 1.0)
    }
}

/// Left-minus-right residuals of the two per-group constraint equations.
pub fn constraint_residuals(
    metric: FairnessMetric,
    p: &GroupProbabilities,
    t: f64,
    dm: &DesignMatrix,
) -> (f64, f64) {
    match metric {
        FairnessMetric::DemographicParity => {
            let m1 = p.group_mass(1);
            let m0 = p.group_mass(0);
            (
                (m1 + t) * dm.theta11 + (t - m1) * dm.theta10 - t,
                (t - m0) * dm.theta01 + (t + m0) * dm.theta00 - t,
            )
        }
        FairnessMetric::EqualityOfOpportunity => (
            2.0 * p.p11 * dm.theta11 + 2.0 * (t - p.p11) * dm.theta10 - t,
            -2.0 * p.p01 * dm.theta01 + 2.0 * (t + p.p01) * dm.theta00 - t,
        ),
        FairnessMetric::PredictiveEquality => (
            2.0 * (t + p.p10) * dm.theta11 - 2.0 * p.p10 * dm.theta10 - t,
            2.0 * (t - p.p00) * dm.theta01 + 2.0 * p.p00 * dm.theta00 - t,
        ),
    }
}

/// Expected fraction of labels left unchanged, p11·θ11 + p10·θ10 + p01·θ01 +
/// p00·θ00.
pub fn retention_objective(p: &GroupProbabilities, dm: &DesignMatrix) -> f64 {
    p.p11 * dm.theta11 + p.p10 * dm.theta10 + p.p01 * dm.theta01 + p.p00 * dm.theta00
}

/// Applies the randomized-response mechanism to a label vector.
///
/// Row i keeps its label with probability θ_{a_i y_i} and flips otherwise.
/// The randomness for row i is an independent ChaCha8 stream selected by
/// (seed, i), so the output does not depend on evaluation order.
pub fn perturb(labels: &[u8], sensitive: &[u8], dm: &DesignMatrix, seed: u64) -> Result<Vec<u8>> {
    if labels.len() != sensitive.len() {
        return Err(Error::InvalidArgument(format!(
            "labels ({}) and sensitive ({}) differ in length",
            labels.len(),
            sensitive.len()
        )));
    }
    if labels.iter().chain(sensitive).any(|&v| v > 1) {
        return Err(Error::InvalidArgument("labels and sensitive entries must be 0 or 1".into()));
    }
    let template = ChaCha8Rng::seed_from_u64(seed);
    let out = labels
        .iter()
        .zip(sensitive)
        .enumerate()
        .map(|(i, (&y, &a))| {
            let keep = dm.retention(a, y);
            if keep >= 1.0 {
                return y;
            }
            let mut rng = template.clone();
            rng.set_stream(i as u64);
            if rng.random::<f64>() < keep {
                y
            } else {
                1 - y
            }
        })
        .collect();
    Ok(out)
}

/// Posterior of the perturbed label: θ_a1·η + (1 − θ_a0)·(1 − η).
pub fn perturbed_posterior(eta: f64, a: u8, dm: &DesignMatrix) -> f64 {
    let (keep_pos, keep_neg) =
        if a == 1 { (dm.theta11, dm.theta10) } else { (dm.theta01, dm.theta00) };
    keep_pos * eta + (1.0 - keep_neg) * (1.0 - eta)
}
