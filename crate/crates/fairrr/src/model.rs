//! From-scratch logistic regression with a deterministic L-BFGS optimizer.
//!
//! Used both inside disparity calibration and as the downstream benchmark
//! classifier, so determinism matters more than raw speed: zero
//! initialization, no stochastic steps, and a backtracking line search with
//! fixed constants. The objective is mean logistic loss plus
//! `l2_strength`·‖weights‖²/2 with the bias unregularized.

use ndarray::{Array1, ArrayView2};
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

use crate::error::{Error, Result};

/// How the optimizer picks its step length.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRule {
    /// Armijo backtracking line search along the quasi-Newton direction.
    Backtracking,
    /// Constant-step steepest descent; accepted unconditionally.
    Fixed { step: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Penalty weight on ‖weights‖²/2 at the mean-loss scale; 1/n matches the
    /// common C=1.0 regularization default.
    pub l2_strength: f64,
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
    pub step_rule: StepRule,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            l2_strength: 0.0,
            max_iterations: 500,
            gradient_tolerance: 1e-6,
            step_rule: StepRule::Backtracking,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.l2_strength >= 0.0 && self.l2_strength.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "l2_strength = {} must be finite and non-negative",
                self.l2_strength
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidArgument("max_iterations must be at least 1".into()));
        }
        if self.gradient_tolerance <= 0.0 || self.gradient_tolerance.is_nan() {
            return Err(Error::InvalidArgument(format!(
                "gradient_tolerance = {} must be positive",
                self.gradient_tolerance
            )));
        }
        if let StepRule::Fixed { step } = self.step_rule {
            if !(step > 0.0 && step.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "fixed step = {step} must be finite and positive"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Array1<f64>,
    pub bias: f64,
}

/// Trained model plus optimizer diagnostics.
#[derive(Clone, Debug)]
pub struct TrainResult {
    pub model: LogisticModel,
    /// Accepted optimizer steps.
    pub iterations: usize,
    /// Gradient norm reached `gradient_tolerance`.
    pub converged: bool,
    /// The training labels contained a single class.
    pub single_class: bool,
    pub final_loss: f64,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// ln(1 + e^z) without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Parameter layout: d weights followed by the bias.
struct Objective<'a> {
    features: ArrayView2<'a, f64>,
    labels: Array1<f64>,
    l2: f64,
}

impl Objective<'_> {
    fn margins(&self, params: &Array1<f64>) -> Array1<f64> {
        let d = self.features.ncols();
        let w = params.slice(ndarray::s![..d]);
        let mut z = self.features.dot(&w);
        z += params[d];
        z
    }

    fn loss(&self, params: &Array1<f64>) -> Result<f64> {
        let d = self.features.ncols();
        let n = self.features.nrows() as f64;
        let z = self.margins(params);
        let mut total = 0.0;
        for (&zi, &yi) in z.iter().zip(&self.labels) {
            total += softplus(zi) - yi * zi;
        }
        let w = params.slice(ndarray::s![..d]);
        let loss = total / n + 0.5 * self.l2 * w.dot(&w);
        if !loss.is_finite() {
            return Err(Error::Numeric(format!(
                "non-finite loss {loss} during optimization; check feature scaling"
            )));
        }
        Ok(loss)
    }

    fn loss_and_grad(&self, params: &Array1<f64>) -> Result<(f64, Array1<f64>)> {
        let d = self.features.ncols();
        let n = self.features.nrows() as f64;
        let z = self.margins(params);
        let mut total = 0.0;
        let mut resid = Array1::<f64>::zeros(z.len());
        for (i, (&zi, &yi)) in z.iter().zip(&self.labels).enumerate() {
            total += softplus(zi) - yi * zi;
            resid[i] = sigmoid(zi) - yi;
        }
        let w = params.slice(ndarray::s![..d]);
        let loss = total / n + 0.5 * self.l2 * w.dot(&w);
        let mut grad = Array1::<f64>::zeros(d + 1);
        let grad_w = self.features.t().dot(&resid) / n + &(self.l2 * &w);
        grad.slice_mut(ndarray::s![..d]).assign(&grad_w);
        grad[d] = resid.sum() / n;
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Numeric(
                "non-finite loss or gradient during optimization; check feature scaling".into(),
            ));
        }
        Ok((loss, grad))
    }
}

/// Curvature memory of the quasi-Newton update.
const LBFGS_MEMORY: usize = 8;
/// Armijo sufficient-decrease constant.
const ARMIJO_C1: f64 = 1e-4;

fn lbfgs_direction(
    grad: &Array1<f64>,
    history: &VecDeque<(Array1<f64>, Array1<f64>, f64)>,
) -> Array1<f64> {
    let mut q = grad.clone();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let alpha = rho * s.dot(&q);
        q.scaled_add(-alpha, y);
        alphas.push(alpha);
    }
    let gamma = history.back().map(|(s, y, _)| s.dot(y) / y.dot(y)).unwrap_or(1.0);
    let mut r = gamma * q;
    for ((s, y, rho), alpha) in history.iter().zip(alphas.into_iter().rev()) {
        let beta = rho * y.dot(&r);
        r.scaled_add(alpha - beta, s);
    }
    -r
}

/// Fits a logistic model by minimizing the regularized mean logistic loss
/// from all-zero parameters. Deterministic: identical inputs give identical
/// parameters.
pub fn train(features: ArrayView2<f64>, labels: &[u8], cfg: &TrainConfig) -> Result<TrainResult> {
    cfg.validate()?;
    let n = features.nrows();
    let d = features.ncols();
    if n < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 rows, got {n}")));
    }
    if labels.len() != n {
        return Err(Error::InvalidArgument(format!(
            "features have {n} rows but labels length is {}",
            labels.len()
        )));
    }
    if labels.iter().any(|&y| y > 1) {
        return Err(Error::InvalidArgument("labels must be 0 or 1".into()));
    }
    let single_class = labels.iter().all(|&y| y == labels[0]);

    let obj = Objective {
        features,
        labels: labels.iter().map(|&y| y as f64).collect(),
        l2: cfg.l2_strength,
    };
    let mut params = Array1::<f64>::zeros(d + 1);
    let (mut loss, mut grad) = obj.loss_and_grad(&params)?;
    let mut history: VecDeque<(Array1<f64>, Array1<f64>, f64)> = VecDeque::new();
    let mut iterations = 0;
    let mut converged = grad.dot(&grad).sqrt() <= cfg.gradient_tolerance;

    while !converged && iterations < cfg.max_iterations {
        let (step_base, mut direction) = match cfg.step_rule {
            StepRule::Fixed { step } => (step, -grad.clone()),
            StepRule::Backtracking => (1.0, lbfgs_direction(&grad, &history)),
        };
        let mut slope = direction.dot(&grad);
        if slope >= 0.0 {
            // curvature memory turned the direction uphill; fall back to
            // steepest descent
            history.clear();
            direction = -grad.clone();
            slope = direction.dot(&grad);
        }

        let accepted = match cfg.step_rule {
            StepRule::Fixed { .. } => {
                let next = &params + &(step_base * &direction);
                if next.iter().any(|p| !p.is_finite()) {
                    return Err(Error::Numeric("parameters diverged to non-finite values".into()));
                }
                let next_loss = obj.loss(&next)?;
                Some((next, next_loss))
            }
            StepRule::Backtracking => {
                let gnorm = grad.dot(&grad).sqrt();
                let mut alpha =
                    if iterations == 0 { step_base.min(1.0 / (1.0 + gnorm)) } else { step_base };
                let mut found = None;
                for _ in 0..60 {
                    let next = &params + &(alpha * &direction);
                    if next.iter().all(|p| p.is_finite()) {
                        let next_loss = obj.loss(&next)?;
                        if next_loss <= loss + ARMIJO_C1 * alpha * slope {
                            found = Some((next, next_loss));
                            break;
                        }
                    }
                    alpha *= 0.5;
                }
                found
            }
        };

        let Some((next, next_loss)) = accepted else {
            break; // line search stalled below float resolution
        };
        let (_, next_grad) = obj.loss_and_grad(&next)?;
        let s = &next - &params;
        let y = &next_grad - &grad;
        let sy = s.dot(&y);
        if sy > 1e-10 {
            if history.len() == LBFGS_MEMORY {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }
        params = next;
        loss = next_loss;
        grad = next_grad;
        iterations += 1;
        converged = grad.dot(&grad).sqrt() <= cfg.gradient_tolerance;
    }

    let weights = params.slice(ndarray::s![..d]).to_owned();
    let bias = params[d];
    Ok(TrainResult {
        model: LogisticModel { weights, bias },
        iterations,
        converged,
        single_class,
        final_loss: loss,
    })
}

/// P(label = 1 | x) per row, clamped into (0, 1).
pub fn predict_proba(model: &LogisticModel, features: ArrayView2<f64>) -> Result<Vec<f64>> {
    if features.ncols() != model.weights.len() {
        return Err(Error::InvalidArgument(format!(
            "model expects {} features, got {}",
            model.weights.len(),
            features.ncols()
        )));
    }
    let z = features.dot(&model.weights) + model.bias;
    Ok(z.iter().map(|&zi| sigmoid(zi).clamp(1e-15, 1.0 - 1e-15)).collect())
}

/// Indicator of predicted probability strictly above `threshold`; ties map
/// to 0.
pub fn predict(
    model: &LogisticModel,
    features: ArrayView2<f64>,
    threshold: f64,
) -> Result<Vec<u8>> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidArgument(format!("threshold = {threshold} must lie in (0, 1)")));
    }
    let probs = predict_proba(model, features)?;
    Ok(probs.into_iter().map(|p| u8::from(p > threshold)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn separable_data() -> (Array2<f64>, Vec<u8>) {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..200 {
            rows.push(-1.0);
            labels.push(0u8);
            rows.push(1.0);
            labels.push(1u8);
        }
        (Array2::from_shape_vec((400, 1), rows).unwrap(), labels)
    }

    #[test]
    fn separable_data_fits_perfectly() {
        let (x, y) = separable_data();
        let cfg = TrainConfig { l2_strength: 1e-6, ..TrainConfig::default() };
        let fit = train(x.view(), &y, &cfg).unwrap();
        assert!(!fit.single_class);
        let pred = predict(&fit.model, x.view(), 0.5).unwrap();
        assert_eq!(pred, y);
    }

    #[test]
    fn single_class_with_strong_l2_leans_on_bias() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = Array2::from_shape_fn((100, 2), |_| rng.random::<f64>() * 2.0 - 1.0);
        let y = vec![1u8; 100];
        let cfg = TrainConfig { l2_strength: 1e3, ..TrainConfig::default() };
        let fit = train(x.view(), &y, &cfg).unwrap();
        assert!(fit.single_class);
        assert!(fit.model.weights.iter().all(|w| w.abs() < 1e-3));
        let probs = predict_proba(&fit.model, x.view()).unwrap();
        assert!(
            probs.iter().all(|&p| p > 0.999),
            "min prob {:?}",
            probs.iter().cloned().fold(f64::INFINITY, f64::min)
        );
    }

    /// Central finite differences at random points, step 1e-5: every analytic
    /// gradient component within 1e-6.
    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let d = 5;
        let x = Array2::from_shape_fn((40, d), |_| rng.random::<f64>() * 2.0 - 1.0);
        let y: Vec<f64> = (0..40).map(|i| f64::from(i % 3 == 0)).collect();
        let obj = Objective { features: x.view(), labels: Array1::from(y), l2: 0.1 };
        let h = 1e-5;
        for _ in 0..10 {
            let point = Array1::from_shape_fn(d + 1, |_| rng.random::<f64>() * 2.0 - 1.0);
            let (_, grad) = obj.loss_and_grad(&point).unwrap();
            for i in 0..=d {
                let mut plus = point.clone();
                plus[i] += h;
                let mut minus = point.clone();
                minus[i] -= h;
                let fd = (obj.loss(&plus).unwrap() - obj.loss(&minus).unwrap()) / (2.0 * h);
                assert!(
                    (grad[i] - fd).abs() < 1e-6,
                    "component {i}: analytic {} vs fd {}",
                    grad[i],
                    fd
                );
            }
        }
    }

    #[test]
    fn loss_never_exceeds_zero_init_loss() {
        // loss at all-zero parameters is ln 2 regardless of data
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let x = Array2::from_shape_fn((60, 3), |_| rng.random::<f64>() * 2.0 - 1.0);
        let y: Vec<u8> = (0..60).map(|_| u8::from(rng.random::<f64>() < 0.4)).collect();
        let fit = train(x.view(), &y, &TrainConfig::default()).unwrap();
        assert!(fit.final_loss <= f64::ln(2.0) + 1e-12);
    }

    #[test]
    fn training_is_deterministic() {
        let (x, y) = separable_data();
        let cfg = TrainConfig { l2_strength: 0.01, ..TrainConfig::default() };
        let a = train(x.view(), &y, &cfg).unwrap();
        let b = train(x.view(), &y, &cfg).unwrap();
        assert_eq!(a.model, b.model);
        assert_eq!(a.iterations, b.iterations);
    }

    #[test]
    fn predict_proba_values() {
        let zero = LogisticModel { weights: array![0.0, 0.0], bias: 0.0 };
        let x = array![[3.0, -1.0], [0.5, 2.0]];
        assert_eq!(predict_proba(&zero, x.view()).unwrap(), vec![0.5, 0.5]);

        let biased = LogisticModel { weights: array![0.0, 0.0], bias: 10.0 };
        assert!(predict_proba(&biased, x.view()).unwrap().iter().all(|&p| p > 0.9999));

        // w·x + b = ln 3 gives probability 3/4
        let m = LogisticModel { weights: array![1.0], bias: 0.0 };
        let x = array![[3.0f64.ln()]];
        let p = predict_proba(&m, x.view()).unwrap()[0];
        assert!((p - 0.75).abs() < 1e-12);
    }

    #[test]
    fn predict_threshold_behavior() {
        let m = LogisticModel { weights: array![1.0], bias: 0.0 };
        // probabilities (0.4, 0.6) around threshold 0.5
        let x = array![[-0.4054651081081644], [0.4054651081081644]];
        assert_eq!(predict(&m, x.view(), 0.5).unwrap(), vec![0, 1]);
        // probability exactly 0.5 maps to 0 under the strict inequality
        let x0 = array![[0.0]];
        assert_eq!(predict(&m, x0.view(), 0.5).unwrap(), vec![0]);
        assert!(predict(&m, x0.view(), 1.0).is_err());
        assert!(predict(&m, x0.view(), 0.0).is_err());
    }

    #[test]
    fn lowering_threshold_never_lowers_predictions() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let m = LogisticModel { weights: array![1.3, -0.7], bias: 0.1 };
        let x = Array2::from_shape_fn((200, 2), |_| rng.random::<f64>() * 4.0 - 2.0);
        let hi = predict(&m, x.view(), 0.7).unwrap();
        let lo = predict(&m, x.view(), 0.3).unwrap();
        assert!(hi.iter().zip(&lo).all(|(h, l)| h <= l));
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let m = LogisticModel { weights: array![1.0, 2.0], bias: 0.0 };
        let x = array![[1.0]];
        assert!(matches!(predict_proba(&m, x.view()), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn divergent_fixed_step_reports_numeric_error() {
        let x = array![[f64::MAX], [-f64::MAX]];
        let y = [0u8, 1];
        let cfg =
            TrainConfig { step_rule: StepRule::Fixed { step: 1e200 }, ..TrainConfig::default() };
        assert!(matches!(train(x.view(), &y, &cfg), Err(Error::Numeric(_))));
    }

    #[test]
    fn config_validation() {
        let bad = TrainConfig { l2_strength: -1.0, ..TrainConfig::default() };
        assert!(bad.validate().is_err());
        let bad = TrainConfig { gradient_tolerance: 0.0, ..TrainConfig::default() };
        assert!(bad.validate().is_err());
        let bad = TrainConfig { max_iterations: 0, ..TrainConfig::default() };
        assert!(bad.validate().is_err());
        let bad =
            TrainConfig { step_rule: StepRule::Fixed { step: 0.0 }, ..TrainConfig::default() };
        assert!(bad.validate().is_err());
    }
}
