//! Independent brute-force reimplementations used as test oracles, plus
//! random instance generators.

#![allow(dead_code)]

use doaiq::agp::{AgpParams, MixedInput};
use doaiq::simplex::SimplexPoint;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform point on the simplex via sorted uniform spacings.
pub fn random_simplex_point(rng: &mut impl Rng, m: usize) -> SimplexPoint {
    let mut cuts: Vec<f64> = (0..m - 1).map(|_| rng.random::<f64>()).collect();
    cuts.push(0.0);
    cuts.push(1.0);
    cuts.sort_by(f64::total_cmp);
    let mut coords: Vec<f64> = cuts.windows(2).map(|w| w[1] - w[0]).collect();
    // Put the rounding residue on the largest coordinate.
    let resid = 1.0 - coords.iter().sum::<f64>();
    let k = (0..m).max_by(|a, b| coords[*a].total_cmp(&coords[*b])).unwrap();
    coords[k] += resid;
    SimplexPoint::new(coords).unwrap()
}

pub fn random_design(rng: &mut impl Rng, n: usize, m: usize) -> Vec<SimplexPoint> {
    (0..n).map(|_| random_simplex_point(rng, m)).collect()
}

pub fn naive_maxpro(rows: &[SimplexPoint], delta2: f64) -> f64 {
    let mut total = 0.0;
    for i in 0..rows.len() {
        for j in 0..rows.len() {
            if i < j {
                let mut prod = 1.0;
                for l in 0..rows[i].dim() {
                    let d = rows[i].coords()[l] - rows[j].coords()[l];
                    prod /= d * d + delta2;
                }
                total += prod;
            }
        }
    }
    total
}

pub fn naive_contributions(rows: &[SimplexPoint], delta2: f64) -> Vec<f64> {
    (0..rows.len())
        .map(|i| {
            (0..rows.len())
                .filter(|j| *j != i)
                .map(|j| {
                    (0..rows[i].dim())
                        .map(|l| {
                            let d = rows[i].coords()[l] - rows[j].coords()[l];
                            1.0 / (d * d + delta2)
                        })
                        .product::<f64>()
                })
                .sum()
        })
        .collect()
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

pub fn naive_nn(rows: &[Vec<f64>]) -> Vec<f64> {
    (0..rows.len())
        .map(|i| {
            let mut best = f64::INFINITY;
            for j in 0..rows.len() {
                if j != i {
                    best = best.min(euclid(&rows[i], &rows[j]));
                }
            }
            best
        })
        .collect()
}

pub fn naive_pm1(rows: &[Vec<f64>]) -> f64 {
    let d = naive_nn(rows);
    let mean = d.iter().sum::<f64>() / d.len() as f64;
    d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / mean
}

pub fn naive_pm2(rows: &[Vec<f64>]) -> f64 {
    naive_nn(rows).into_iter().fold(f64::NEG_INFINITY, f64::max)
}

/// Textbook Kennard-Stone: full pair scan, then recompute every unselected
/// point's distance to the whole selection at each step.
pub fn naive_kennard_stone(pool: &[Vec<f64>], n: usize) -> Vec<usize> {
    let mut best = (0, 1, -1.0);
    for i in 0..pool.len() {
        for j in i + 1..pool.len() {
            let d = euclid(&pool[i], &pool[j]);
            if d > best.2 {
                best = (i, j, d);
            }
        }
    }
    let mut sel = vec![best.0, best.1];
    while sel.len() < n {
        let mut pick = (usize::MAX, -1.0);
        for k in 0..pool.len() {
            if sel.contains(&k) {
                continue;
            }
            let d = sel.iter().map(|s| euclid(&pool[k], &pool[*s])).fold(f64::INFINITY, f64::min);
            if d > pick.1 {
                pick = (k, d);
            }
        }
        sel.push(pick.0);
    }
    sel
}

pub fn random_inputs(rng: &mut impl Rng, n: usize, p: usize, q: usize) -> Vec<MixedInput> {
    (0..n)
        .map(|_| {
            MixedInput::new(
                (0..p).map(|_| rng.random::<f64>()).collect(),
                (0..q).map(|_| rng.random_range(0..2u8)).collect(),
            )
            .unwrap()
        })
        .collect()
}

pub fn log_uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp()
}

pub fn random_params(rng: &mut impl Rng, q: usize, eta_lo: f64, eta_hi: f64) -> AgpParams {
    AgpParams {
        rho: (0..q).map(|_| rng.random_range(0.05..0.95)).collect(),
        theta: (0..q).map(|_| log_uniform(rng, 0.05, 20.0)).collect(),
        eta: log_uniform(rng, eta_lo, eta_hi),
        tau2: log_uniform(rng, 0.1, 10.0),
    }
}

/// `tau2 * sum_h (K_h + eta I) o Phi_h`, assembled as whole matrices.
pub fn schur_covariance(inputs: &[MixedInput], params: &AgpParams) -> DMatrix<f64> {
    let n = inputs.len();
    let mut total = DMatrix::zeros(n, n);
    for h in 0..params.rho.len() {
        let k = DMatrix::from_fn(n, n, |i, j| {
            let s: f64 = inputs[i]
                .x_cont
                .iter()
                .zip(&inputs[j].x_cont)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            (-s / params.theta[h]).exp()
        }) + DMatrix::identity(n, n) * params.eta;
        let phi = DMatrix::from_fn(n, n, |i, j| {
            if inputs[i].z_bin[h] == inputs[j].z_bin[h] {
                1.0
            } else {
                params.rho[h]
            }
        });
        total += k.component_mul(&phi);
    }
    total * params.tau2
}

/// Conditional mean and variance through an explicit inverse.
pub fn dense_predict(inputs: &[MixedInput], y: &[f64], offset: f64, params: &AgpParams, w: &MixedInput) -> (f64, f64) {
    let sigma = schur_covariance(inputs, params);
    let inv = sigma.try_inverse().unwrap();
    let mut all = inputs.to_vec();
    all.push(w.clone());
    let big = schur_covariance(&all, params);
    let n = inputs.len();
    let k = DVector::from_fn(n, |i, _| big[(n, i)]);
    let yc = DVector::from_iterator(n, y.iter().map(|v| v - offset));
    let mean = offset + (k.transpose() * &inv * yc)[(0, 0)];
    // The nugget sits on the training diagonal only, so the prior variance
    // at the new point includes it too.
    let var = big[(n, n)] - (k.transpose() * &inv * &k)[(0, 0)];
    (mean, var)
}

/// `(X'X)^-1 X'y` with an intercept column.
pub fn normal_equations(rows: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let n = rows.len();
    let k = rows[0].len();
    let x = DMatrix::from_fn(n, k + 1, |i, j| if j == 0 { 1.0 } else { rows[i][j - 1] });
    let xtx = x.transpose() * &x;
    let beta = xtx.try_inverse().unwrap() * x.transpose() * DVector::from_column_slice(y);
    beta.iter().copied().collect()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}
