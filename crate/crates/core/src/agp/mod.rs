//! Additive Gaussian process over continuous covariates and binary
//! indicators.
//!
//! The covariance is a sum of `q` components, one per binary indicator:
//!
//! ```text
//! Sigma(w_i, w_j) = tau2 * sum_h [exp(-||x_i - x_j||^2 / theta_h) + eta * 1(i = j)] * phi_h
//! phi_h = 1 if z_hi == z_hj, rho_h otherwise
//! ```
//!
//! The prior mean is zero; responses are centered by a stored constant
//! before fitting. Parameters are estimated by minimizing the profile
//! negative log-likelihood (with `tau2` replaced by its closed-form
//! maximizer) using BFGS on transformed coordinates.

mod likelihood;
mod model;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use likelihood::{neg_log_likelihood, nll_gradient, profile_tau2, Likelihood, LikelihoodValue};
pub use model::{fit, AgpModel, FitOptions, FitReport, FitTermination, ParamTransform, PredictiveDistribution};

/// One training or prediction point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixedInput {
    pub x_cont: Vec<f64>,
    pub z_bin: Vec<u8>,
}

impl MixedInput {
    pub fn new(x_cont: Vec<f64>, z_bin: Vec<u8>) -> Result<Self> {
        if x_cont.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("continuous covariates must be finite"));
        }
        if z_bin.iter().any(|z| *z > 1) {
            return Err(Error::param("binary covariates must be 0 or 1"));
        }
        Ok(MixedInput { x_cont, z_bin })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgpParams {
    pub rho: Vec<f64>,
    pub theta: Vec<f64>,
    pub eta: f64,
    pub tau2: f64,
}

impl AgpParams {
    pub fn q(&self) -> usize {
        self.rho.len()
    }

    /// Unit variance, moderate correlations and length-scales.
    pub fn initial(q: usize) -> Self {
        AgpParams {
            rho: vec![0.5; q],
            theta: vec![1.0; q],
            eta: 1e-4,
            tau2: 1.0,
        }
    }

    /// Variance at a single point, `tau2 * q * (1 + eta)`.
    pub fn prior_variance(&self) -> f64 {
        self.tau2 * self.q() as f64 * (1.0 + self.eta)
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.rho.is_empty() || self.rho.len() != self.theta.len() {
            return Err(Error::param(format!(
                "need equal, nonzero numbers of correlations and length-scales, got {} and {}",
                self.rho.len(),
                self.theta.len()
            )));
        }
        if self.rho.iter().any(|r| !(*r >= 0.0 && *r <= 1.0)) {
            return Err(Error::param("correlations must lie in [0, 1]"));
        }
        if self.theta.iter().any(|t| !(*t > 0.0) || !t.is_finite()) {
            return Err(Error::param("length-scales must be positive"));
        }
        if !(self.eta >= 0.0) || !self.eta.is_finite() {
            return Err(Error::param("nugget must be nonnegative"));
        }
        if !(self.tau2 > 0.0) || !self.tau2.is_finite() {
            return Err(Error::param("variance must be positive"));
        }
        Ok(())
    }
}

/// Box constraints used during fitting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamBounds {
    pub rho: (f64, f64),
    pub theta: (f64, f64),
    pub eta: (f64, f64),
}

impl Default for ParamBounds {
    fn default() -> Self {
        ParamBounds {
            rho: (1e-4, 1.0 - 1e-6),
            theta: (1e-3, 1e3),
            eta: (1e-8, 1.0),
        }
    }
}

/// Dummy coding against the first level: the first level maps to all zeros,
/// level `h + 1` sets component `h`.
pub fn encode_categorical(level: &str, levels: &[String]) -> Result<Vec<u8>> {
    let idx = levels
        .iter()
        .position(|l| l == level)
        .ok_or_else(|| Error::param(format!("unknown level {level:?}; expected one of {levels:?}")))?;
    let mut out = vec![0u8; levels.len().saturating_sub(1)];
    if idx > 0 {
        out[idx - 1] = 1;
    }
    Ok(out)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Covariance between two points. `same_index` marks a diagonal entry, where
/// the nugget applies.
pub fn covariance(wi: &MixedInput, wj: &MixedInput, params: &AgpParams, same_index: bool) -> f64 {
    let s = sq_dist(&wi.x_cont, &wj.x_cont);
    let nugget = if same_index { params.eta } else { 0.0 };
    let sum: f64 = (0..params.q())
        .map(|h| {
            let psi = (-s / params.theta[h]).exp() + nugget;
            let phi = if wi.z_bin[h] == wj.z_bin[h] { 1.0 } else { params.rho[h] };
            psi * phi
        })
        .sum();
    params.tau2 * sum
}

pub(crate) fn check_inputs(inputs: &[MixedInput], q: usize) -> Result<usize> {
    let first = inputs.first().ok_or_else(|| Error::param("no input points"))?;
    let p = first.x_cont.len();
    for w in inputs {
        if w.x_cont.len() != p || w.z_bin.len() != q {
            return Err(Error::param(format!(
                "input has {} continuous and {} binary covariates, expected {p} and {q}",
                w.x_cont.len(),
                w.z_bin.len()
            )));
        }
    }
    Ok(p)
}

/// The `N x N` training covariance, verified positive definite by a
/// Cholesky factorization.
pub fn covariance_matrix(inputs: &[MixedInput], params: &AgpParams) -> Result<DMatrix<f64>> {
    params.validate()?;
    check_inputs(inputs, params.q())?;
    let n = inputs.len();
    let mut sigma = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = covariance(&inputs[i], &inputs[j], params, i == j);
            sigma[(i, j)] = v;
            sigma[(j, i)] = v;
        }
    }
    cholesky(&sigma)?;
    Ok(sigma)
}

/// Lower Cholesky factor. A nonpositive pivot yields
/// [`Error::Conditioning`] with its index and value.
pub fn cholesky(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let mut l = a.lower_triangle();
    // Column-major storage: column `k` is `data[k * n..(k + 1) * n]`.
    let data = l.as_mut_slice();
    for j in 0..n {
        let (done, rest) = data.split_at_mut(j * n);
        let col_j = &mut rest[..n];
        // Left-looking: subtract contributions of the finished columns.
        for k in 0..j {
            let col_k = &done[k * n..(k + 1) * n];
            let ljk = col_k[j];
            if ljk != 0.0 {
                for (dst, src) in col_j[j..].iter_mut().zip(&col_k[j..]) {
                    *dst -= ljk * src;
                }
            }
        }
        let pivot = col_j[j];
        if !(pivot > 0.0) || !pivot.is_finite() {
            return Err(Error::Conditioning { index: j, pivot });
        }
        let d = pivot.sqrt();
        col_j[j] = d;
        col_j[j + 1..].iter_mut().for_each(|v| *v /= d);
    }
    Ok(l)
}

/// `A^{-1}` from the lower Cholesky factor of `A`.
pub(crate) fn inverse_from_cholesky(l: &DMatrix<f64>) -> DMatrix<f64> {
    let n = l.nrows();
    let linv = l
        .solve_lower_triangular(&DMatrix::identity(n, n))
        .expect("Cholesky factor has a positive diagonal");
    // (L^-T L^-1)_ij = sum_{k >= max(i, j)} Linv_ki Linv_kj; columns of the
    // lower-triangular Linv are contiguous, so each entry is one dot product.
    let data = linv.as_slice();
    let mut inv = DMatrix::zeros(n, n);
    for j in 0..n {
        let col_j = &data[j * n + j..(j + 1) * n];
        for i in 0..=j {
            let col_i = &data[i * n + j..(i + 1) * n];
            let v: f64 = col_i.iter().zip(col_j).map(|(a, b)| a * b).sum();
            inv[(i, j)] = v;
            inv[(j, i)] = v;
        }
    }
    inv
}

#[cfg(test)]
mod tests {
    use super::*;

    fn levels(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn dummy_coding() {
        let two = levels(&["MNIST", "FashionMNIST"]);
        assert_eq!(encode_categorical("MNIST", &two).unwrap(), vec![0]);
        assert_eq!(encode_categorical("FashionMNIST", &two).unwrap(), vec![1]);
        let four = levels(&["a", "b", "c", "d"]);
        assert_eq!(encode_categorical("c", &four).unwrap(), vec![0, 1, 0]);
        assert!(matches!(encode_categorical("e", &four), Err(Error::Parameter(_))));
    }

    #[test]
    fn covariance_special_cases() {
        let params = AgpParams {
            rho: vec![0.3],
            theta: vec![0.7],
            eta: 0.2,
            tau2: 2.5,
        };
        let w = MixedInput::new(vec![0.1, 0.4], vec![0]).unwrap();
        assert!((covariance(&w, &w, &params, true) - 2.5 * 1.2).abs() < 1e-15);
        let w2 = MixedInput::new(vec![0.1, 0.4], vec![1]).unwrap();
        assert!((covariance(&w, &w2, &params, false) - 2.5 * 0.3).abs() < 1e-15);
    }

    #[test]
    fn covariance_two_components_hand_value() {
        let params = AgpParams {
            rho: vec![0.3, 0.7],
            theta: vec![1.0, 2.0],
            eta: 0.0,
            tau2: 1.7,
        };
        let a = MixedInput::new(vec![0.0, 0.0], vec![0, 0]).unwrap();
        let b = MixedInput::new(vec![0.6, 0.8], vec![0, 1]).unwrap();
        let expected = 1.7 * ((-1.0f64).exp() * 1.0 + (-0.5f64).exp() * 0.7);
        assert!((covariance(&a, &b, &params, false) - expected).abs() < 1e-15);
    }

    #[test]
    fn single_point_matrix() {
        let params = AgpParams {
            rho: vec![0.4],
            theta: vec![1.0],
            eta: 0.1,
            tau2: 3.0,
        };
        let w = vec![MixedInput::new(vec![0.5], vec![1]).unwrap()];
        let m = covariance_matrix(&w, &params).unwrap();
        assert_eq!(m.shape(), (1, 1));
        assert!((m[(0, 0)] - 3.0 * 1.0 * 1.1).abs() < 1e-15);
    }

    #[test]
    fn cholesky_reports_failing_pivot() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 2.0, 0.0, 2.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        match cholesky(&a) {
            Err(Error::Conditioning { index, pivot }) => {
                assert_eq!(index, 1);
                assert!(pivot.abs() < 1e-15);
            }
            other => panic!("expected conditioning error, got {other:?}"),
        }
    }

    #[test]
    fn cholesky_reconstructs() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 2.0, 0.4, 2.0, 3.0, 0.5, 0.4, 0.5, 2.0]);
        let l = cholesky(&a).unwrap();
        assert!((&l * l.transpose() - &a).abs().max() < 1e-14);
        let inv = inverse_from_cholesky(&l);
        assert!((&a * inv - DMatrix::identity(3, 3)).abs().max() < 1e-14);
    }
}
