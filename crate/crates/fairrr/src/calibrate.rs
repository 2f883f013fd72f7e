//! Bisection search for t*: the mechanism strength whose downstream
//! classifier attains a target disparity.
//!
//! The measured disparity D(t) of a classifier trained on perturbed labels is
//! monotone non-increasing in t, so a sign-checked bisection over the
//! feasible bracket finds the t where |D(t)| hits the target. Measurements
//! are averaged over several perturbation seeds on a held-out validation
//! slice; the perturbation seeds do not depend on t, which keeps the
//! estimated curve monotone up to per-row flip noise and makes bisection
//! stable.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::data::{split, Dataset};
use crate::error::{Error, Result};
use crate::mechanism::{
    estimate_group_probs, feasible_bracket, perturb, solve_design_matrix, FairnessMetric,
    GroupProbabilities,
};
use crate::metrics::disparity;
use crate::model::{predict, train, TrainConfig};
use crate::seeds::{mix, TAG_EVAL_REPEAT, TAG_INNER_SPLIT};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationConfig {
    /// Target disparity magnitude δ ≥ 0.
    pub target_delta: f64,
    pub max_iterations: usize,
    /// Stop once the measured disparity is this close to the signed target.
    pub disparity_tolerance: f64,
    /// Perturbation draws averaged per evaluated t.
    pub repeats_per_evaluation: usize,
    pub base_seed: u64,
    pub train_config: TrainConfig,
    /// Share of the training data held out for disparity measurement.
    pub validation_fraction: f64,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        CalibrationConfig {
            target_delta: 0.0,
            max_iterations: 25,
            disparity_tolerance: 0.005,
            repeats_per_evaluation: 5,
            base_seed: 0,
            train_config: TrainConfig::default(),
            validation_fraction: 0.3,
        }
    }
}

impl CalibrationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.target_delta >= 0.0 && self.target_delta.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "target_delta = {} must be finite and non-negative",
                self.target_delta
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidArgument("max_iterations must be at least 1".into()));
        }
        if self.disparity_tolerance <= 0.0 || self.disparity_tolerance.is_nan() {
            return Err(Error::InvalidArgument(format!(
                "disparity_tolerance = {} must be positive",
                self.disparity_tolerance
            )));
        }
        if self.repeats_per_evaluation == 0 {
            return Err(Error::InvalidArgument("repeats_per_evaluation must be at least 1".into()));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "validation_fraction = {} must lie in (0, 1)",
                self.validation_fraction
            )));
        }
        self.train_config.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub t_star: f64,
    /// Signed disparity measured at t_star.
    pub achieved_disparity: f64,
    /// Every evaluated (t, measured disparity) pair, in evaluation order.
    pub iterations: Vec<(f64, f64)>,
    /// The stopping tolerance was reached within max_iterations.
    pub converged: bool,
}

/// Measures D(t) on a fixed inner fit/validation split.
///
/// Built once per calibration so every evaluated t shares the same split and
/// the same perturbation seeds (common random numbers). Classifiers see the
/// sensitive attribute as a feature: without it a single linear boundary
/// cannot express the group-wise thresholds that label flipping induces, and
/// the harsher disparities never reach the target.
struct DisparityEvaluator<'a> {
    fit: Dataset,
    val: Dataset,
    fit_x: Array2<f64>,
    val_x: Array2<f64>,
    p: GroupProbabilities,
    metric: FairnessMetric,
    cfg: &'a CalibrationConfig,
}

impl<'a> DisparityEvaluator<'a> {
    fn new(training: &Dataset, metric: FairnessMetric, cfg: &'a CalibrationConfig) -> Result<Self> {
        cfg.validate()?;
        training.require_all_cells()?;
        let p = estimate_group_probs(training.labels(), training.sensitive())?;
        let (fit, val) =
            split(training, 1.0 - cfg.validation_fraction, mix(cfg.base_seed, TAG_INNER_SPLIT, 0))?;
        let fit_x = fit.features_with_sensitive();
        let val_x = val.features_with_sensitive();
        Ok(DisparityEvaluator { fit, val, fit_x, val_x, p, metric, cfg })
    }

    fn eval(&self, t: f64) -> Result<f64> {
        let dm = solve_design_matrix(self.metric, &self.p, t)?;
        // the identity mechanism is deterministic, so one repeat suffices
        let repeats = if dm.is_identity() { 1 } else { self.cfg.repeats_per_evaluation };
        let mut total = 0.0;
        for j in 0..repeats {
            let seed = mix(self.cfg.base_seed, TAG_EVAL_REPEAT, j as u64);
            let labels = perturb(self.fit.labels(), self.fit.sensitive(), &dm, seed)?;
            let fitted = train(self.fit_x.view(), &labels, &self.cfg.train_config)?;
            let pred = predict(&fitted.model, self.val_x.view(), 0.5)?;
            total += disparity(self.metric, &pred, self.val.labels(), self.val.sensitive())?;
        }
        Ok(total / repeats as f64)
    }
}

/// Mean signed validation disparity of classifiers trained on labels
/// perturbed at strength `t`. Deterministic in its arguments.
pub fn evaluate_disparity_at(
    t: f64,
    training: &Dataset,
    metric: FairnessMetric,
    cfg: &CalibrationConfig,
) -> Result<f64> {
    DisparityEvaluator::new(training, metric, cfg)?.eval(t)
}

/// Calibrates t* to the target disparity by bisection.
///
/// If the baseline already satisfies |D(0)| ≤ target, returns t* = 0 with the
/// identity mechanism. Otherwise bisects D(t) − sign(D(0))·target over the
/// half of the feasible bracket on the crossing side; if even the bracket
/// endpoint leaves the target band without a sign change, a
/// calibration-failure error reports both endpoint measurements.
pub fn calibrate_t(
    training: &Dataset,
    metric: FairnessMetric,
    cfg: &CalibrationConfig,
) -> Result<CalibrationResult> {
    let evaluator = DisparityEvaluator::new(training, metric, cfg)?;
    let mut trace = Vec::new();
    let d0 = evaluator.eval(0.0)?;
    trace.push((0.0, d0));
    let delta = cfg.target_delta;
    if d0.abs() <= delta {
        return Ok(CalibrationResult {
            t_star: 0.0,
            achieved_disparity: d0,
            iterations: trace,
            converged: true,
        });
    }

    let sign = if d0 > 0.0 { 1.0 } else { -1.0 };
    let target = sign * delta;
    // the band is around the signed target: an overshoot past zero can hit
    // |D| = delta on the far side, which is not the calibrated operating point
    let within = |d: f64| (d - target).abs() <= cfg.disparity_tolerance;
    // g(t) = D(t) - target is non-increasing with g(0) matching sign
    let g = |d: f64| d - target;

    let (bracket_lo, bracket_hi) = feasible_bracket(metric, &evaluator.p);
    let far = if sign > 0.0 { bracket_hi } else { bracket_lo };
    let d_far = evaluator.eval(far)?;
    trace.push((far, d_far));
    if g(d_far).signum() == g(d0).signum() {
        if within(d_far) {
            return Ok(CalibrationResult {
                t_star: far,
                achieved_disparity: d_far,
                iterations: trace,
                converged: true,
            });
        }
        let ((lo_t, lo_d), (hi_t, hi_d)) =
            if far < 0.0 { ((far, d_far), (0.0, d0)) } else { ((0.0, d0), (far, d_far)) };
        return Err(Error::CalibrationFailure {
            message: format!(
                "disparity never crosses the target band: target |D| = {delta}, \
                 measured {d0:.6} at t=0 and {d_far:.6} at t={far:.6}"
            ),
            lo_t,
            lo_d,
            hi_t,
            hi_d,
        });
    }

    // maintain g(lo) > 0 > g(hi); both orderings reduce to this because g is
    // non-increasing in t
    let (mut lo, mut hi) = if sign > 0.0 { (0.0, far) } else { (far, 0.0) };
    for _ in 0..cfg.max_iterations {
        let mid = 0.5 * (lo + hi);
        let d_mid = evaluator.eval(mid)?;
        trace.push((mid, d_mid));
        if within(d_mid) {
            return Ok(CalibrationResult {
                t_star: mid,
                achieved_disparity: d_mid,
                iterations: trace,
                converged: true,
            });
        }
        if g(d_mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    // out of iterations: report the best point seen
    let (t_best, d_best) = trace
        .iter()
        .copied()
        .min_by(|a, b| (a.1 - target).abs().total_cmp(&(b.1 - target).abs()))
        .expect("trace is non-empty");
    Ok(CalibrationResult {
        t_star: t_best,
        achieved_disparity: d_best,
        iterations: trace,
        converged: false,
    })
}
