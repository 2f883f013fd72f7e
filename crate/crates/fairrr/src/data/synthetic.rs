//! Synthetic binary-classification data with analytically known posteriors.
//!
//! Rows are drawn as A ~ Bernoulli(pi_a), X | A=a ~ N(mu_a, I),
//! Y | X, A=a ~ Bernoulli(sigmoid(w·x + b + c_a)). Because the posterior
//! P(Y=1 | x, a) is available in closed form, generated datasets serve as
//! oracles for threshold and calibration tests.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    /// P(A = 1).
    pub pi_a: f64,
    /// Feature means of group A=1.
    pub mu_1: Vec<f64>,
    /// Feature means of group A=0.
    pub mu_0: Vec<f64>,
    /// Posterior coefficients: eta_a(x) = sigmoid(w·x + b + c_a).
    pub w: Vec<f64>,
    pub b: f64,
    pub c_1: f64,
    pub c_0: f64,
    pub n: usize,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn d(&self) -> usize {
        self.w.len()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.pi_a > 0.0 && self.pi_a < 1.0) {
            return Err(Error::InvalidArgument(format!("pi_a = {} must lie in (0, 1)", self.pi_a)));
        }
        let d = self.w.len();
        if d == 0 || self.mu_1.len() != d || self.mu_0.len() != d {
            return Err(Error::InvalidArgument(format!(
                "dimension mismatch: w has {d} entries, mu_1 {} and mu_0 {}",
                self.mu_1.len(),
                self.mu_0.len()
            )));
        }
        if self.n == 0 {
            return Err(Error::InvalidArgument("n must be positive".into()));
        }
        let params = self
            .mu_1
            .iter()
            .chain(&self.mu_0)
            .chain(&self.w)
            .chain([&self.b, &self.c_1, &self.c_0, &self.pi_a]);
        if params.into_iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite generator parameter".into()));
        }
        Ok(())
    }

    /// Analytic posterior eta_a(x) = P(Y=1 | X=x, A=a).
    pub fn posterior(&self, x: &[f64], a: u8) -> f64 {
        let c = if a == 1 { self.c_1 } else { self.c_0 };
        let z: f64 = self.w.iter().zip(x).map(|(wi, xi)| wi * xi).sum::<f64>() + self.b + c;
        sigmoid(z)
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Draws a dataset from the generator; bit-reproducible in `spec.seed`.
pub fn synthesize(spec: &SyntheticSpec) -> Result<Dataset> {
    spec.validate()?;
    let d = spec.d();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut features = Vec::with_capacity(spec.n * d);
    let mut labels = Vec::with_capacity(spec.n);
    let mut sensitive = Vec::with_capacity(spec.n);
    let mut x = vec![0.0f64; d];
    for _ in 0..spec.n {
        let a = u8::from(rng.random::<f64>() < spec.pi_a);
        let mu = if a == 1 { &spec.mu_1 } else { &spec.mu_0 };
        for (xj, &mj) in x.iter_mut().zip(mu) {
            let noise: f64 = rng.sample(StandardNormal);
            *xj = mj + noise;
        }
        let eta = spec.posterior(&x, a);
        let y = u8::from(rng.random::<f64>() < eta);
        features.extend_from_slice(&x);
        labels.push(y);
        sensitive.push(a);
    }
    let features =
        Array2::from_shape_vec((spec.n, d), features).map_err(|e| Error::Numeric(e.to_string()))?;
    Dataset::new(features, labels, sensitive)
}
