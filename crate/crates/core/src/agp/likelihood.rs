//! Profile likelihood of the additive process and its analytic gradient.
//!
//! Everything is computed on the unit-variance correlation matrix
//! `R = Sigma / tau2`; the profile variance is `y' R^-1 y / N` and the
//! objective is `log det R + N log(y' R^-1 y)`.

use nalgebra::{DMatrix, DVector};

use super::{check_inputs, cholesky, inverse_from_cholesky, sq_dist, MixedInput};
use crate::error::{Error, Result};

/// Pairwise quantities that do not depend on the parameters.
#[derive(Clone, Debug)]
pub struct Likelihood {
    n: usize,
    q: usize,
    /// Squared continuous distances, row-major `n x n`.
    sqdist: Vec<f64>,
    /// `differs[h][i * n + j]` is true when indicator `h` differs.
    differs: Vec<Vec<bool>>,
    y: DVector<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LikelihoodValue {
    pub nll: f64,
    pub tau2: f64,
    /// Gradient with respect to `(rho_1..rho_q, theta_1..theta_q, eta)`,
    /// when requested.
    pub gradient: Option<Vec<f64>>,
}

impl Likelihood {
    pub fn new(inputs: &[MixedInput], y: &[f64]) -> Result<Self> {
        let q = inputs.first().map_or(0, |w| w.z_bin.len());
        if q == 0 {
            return Err(Error::param("at least one binary covariate is required"));
        }
        check_inputs(inputs, q)?;
        if inputs.len() != y.len() {
            return Err(Error::param(format!(
                "{} inputs but {} responses",
                inputs.len(),
                y.len()
            )));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("responses must be finite"));
        }
        let n = inputs.len();
        let mut sqdist = vec![0.0; n * n];
        let mut differs = vec![vec![false; n * n]; q];
        for i in 0..n {
            for j in 0..n {
                sqdist[i * n + j] = sq_dist(&inputs[i].x_cont, &inputs[j].x_cont);
                for h in 0..q {
                    differs[h][i * n + j] = inputs[i].z_bin[h] != inputs[j].z_bin[h];
                }
            }
        }
        Ok(Likelihood {
            n,
            q,
            sqdist,
            differs,
            y: DVector::from_column_slice(y),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> usize {
        self.q
    }

    fn check_params(&self, rho: &[f64], theta: &[f64]) -> Result<()> {
        if rho.len() != self.q || theta.len() != self.q {
            return Err(Error::param(format!(
                "expected {} correlations and length-scales, got {} and {}",
                self.q,
                rho.len(),
                theta.len()
            )));
        }
        Ok(())
    }

    /// Unit-variance correlation matrix `R`.
    pub fn correlation(&self, rho: &[f64], theta: &[f64], eta: f64) -> DMatrix<f64> {
        let n = self.n;
        let mut r = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let s = self.sqdist[i * n + j];
                let mut v = 0.0;
                for h in 0..self.q {
                    let psi = (-s / theta[h]).exp() + if i == j { eta } else { 0.0 };
                    v += if self.differs[h][i * n + j] { rho[h] * psi } else { psi };
                }
                r[(i, j)] = v;
                r[(j, i)] = v;
            }
        }
        r
    }

    pub fn evaluate(&self, rho: &[f64], theta: &[f64], eta: f64, with_gradient: bool) -> Result<LikelihoodValue> {
        self.check_params(rho, theta)?;
        let n = self.n;
        let r = self.correlation(rho, theta, eta);
        let l = cholesky(&r)?;
        let log_det = 2.0 * l.diagonal().iter().map(|d| d.ln()).sum::<f64>();
        let alpha = {
            let z = l.solve_lower_triangular(&self.y).expect("positive diagonal");
            l.tr_solve_lower_triangular(&z).expect("positive diagonal")
        };
        let quad = self.y.dot(&alpha);
        let nf = n as f64;
        let nll = log_det + nf * quad.ln();
        let tau2 = quad / nf;
        if !with_gradient {
            return Ok(LikelihoodValue {
                nll,
                tau2,
                gradient: None,
            });
        }

        // d nll / d b = tr(R^-1 dR) - N (alpha' dR alpha) / (y' alpha).
        // Both terms are sum_ij W_ij dR_ij with W = R^-1 - (N / quad) alpha alpha'.
        let rinv = inverse_from_cholesky(&l);
        let scale = nf / quad;
        let mut weights = vec![0.0; n * n];
        for j in 0..n {
            for i in 0..n {
                weights[i * n + j] = rinv[(i, j)] - scale * alpha[i] * alpha[j];
            }
        }

        let q = self.q;
        let mut grad = vec![0.0; 2 * q + 1];
        for h in 0..q {
            let (mut g_rho, mut g_theta) = (0.0, 0.0);
            let inv_theta = 1.0 / theta[h];
            for i in 0..n {
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    let k = i * n + j;
                    let s = self.sqdist[k];
                    let e = (-s * inv_theta).exp();
                    let w = weights[k];
                    if self.differs[h][k] {
                        g_rho += w * e;
                        g_theta += w * rho[h] * e * s * inv_theta * inv_theta;
                    } else {
                        g_theta += w * e * s * inv_theta * inv_theta;
                    }
                }
            }
            grad[h] = g_rho;
            grad[q + h] = g_theta;
        }
        // Every component carries the nugget on the diagonal.
        grad[2 * q] = q as f64 * (0..n).map(|i| weights[i * n + i]).sum::<f64>();

        Ok(LikelihoodValue {
            nll,
            tau2,
            gradient: Some(grad),
        })
    }
}

/// `y' R^-1 y / N`, the variance that maximizes the likelihood for fixed
/// correlation parameters.
pub fn profile_tau2(inputs: &[MixedInput], y: &[f64], rho: &[f64], theta: &[f64], eta: f64) -> Result<f64> {
    Ok(Likelihood::new(inputs, y)?.evaluate(rho, theta, eta, false)?.tau2)
}

/// `log det R + N log(y' R^-1 y)`.
pub fn neg_log_likelihood(inputs: &[MixedInput], y: &[f64], rho: &[f64], theta: &[f64], eta: f64) -> Result<f64> {
    Ok(Likelihood::new(inputs, y)?.evaluate(rho, theta, eta, false)?.nll)
}

/// Gradient of [`neg_log_likelihood`] with respect to
/// `(rho_1..rho_q, theta_1..theta_q, eta)`.
pub fn nll_gradient(inputs: &[MixedInput], y: &[f64], rho: &[f64], theta: &[f64], eta: f64) -> Result<Vec<f64>> {
    Ok(Likelihood::new(inputs, y)?
        .evaluate(rho, theta, eta, true)?
        .gradient
        .expect("gradient requested"))
}
