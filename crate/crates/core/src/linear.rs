//! First-order least-squares regression used as the benchmark surrogate.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative size of an `R` diagonal entry below which a column is treated as
/// a linear combination of the columns before it.
const RANK_TOL: f64 = 1e-10;

/// `y ~ b0 + sum_k b_k w_k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    /// Intercept first, then one slope per column.
    pub coefficients: Vec<f64>,
    pub column_names: Vec<String>,
}

impl LinearModel {
    pub fn intercept(&self) -> f64 {
        self.coefficients[0]
    }

    pub fn slopes(&self) -> &[f64] {
        &self.coefficients[1..]
    }

    pub fn predict(&self, row: &[f64]) -> Result<f64> {
        if row.len() != self.column_names.len() {
            return Err(Error::param(format!(
                "row has {} covariates, model expects {}",
                row.len(),
                self.column_names.len()
            )));
        }
        Ok(self.intercept() + self.slopes().iter().zip(row).map(|(b, w)| b * w).sum::<f64>())
    }
}

/// Least squares through a QR factorization of `[1 | W]`. `rows` holds the
/// covariates without the intercept column.
pub fn ols_fit(rows: &[Vec<f64>], y: &[f64], column_names: &[String]) -> Result<LinearModel> {
    let n = rows.len();
    let k = column_names.len();
    if y.len() != n {
        return Err(Error::param(format!("{n} rows but {} responses", y.len())));
    }
    if let Some(r) = rows.iter().find(|r| r.len() != k) {
        return Err(Error::param(format!("row has {} covariates, expected {k}", r.len())));
    }
    if n <= k + 1 {
        return Err(Error::param(format!(
            "need more than {} observations for {} coefficients, got {n}",
            k + 1,
            k + 1
        )));
    }
    let x = DMatrix::from_fn(n, k + 1, |i, j| if j == 0 { 1.0 } else { rows[i][j - 1] });
    let qr = x.clone().qr();
    let r = qr.r();

    let scale = (0..=k).map(|j| x.column(j).norm()).fold(0.0f64, f64::max);
    let dependent: Vec<String> = (0..=k)
        .filter(|&j| r[(j, j)].abs() <= RANK_TOL * scale.max(f64::MIN_POSITIVE))
        .map(|j| if j == 0 { "intercept".to_string() } else { column_names[j - 1].clone() })
        .collect();
    if !dependent.is_empty() {
        return Err(Error::Singular { columns: dependent });
    }

    let qty = qr.q().tr_mul(&DVector::from_column_slice(y));
    let beta = r.solve_upper_triangular(&qty).expect("nonzero diagonal checked above");
    Ok(LinearModel {
        coefficients: beta.iter().copied().collect(),
        column_names: column_names.to_vec(),
    })
}

/// Mean squared difference.
pub fn mse(predictions: &[f64], truths: &[f64]) -> Result<f64> {
    if predictions.len() != truths.len() || predictions.is_empty() {
        return Err(Error::param(format!(
            "need equal nonzero lengths, got {} predictions and {} truths",
            predictions.len(),
            truths.len()
        )));
    }
    let sum: f64 = predictions.iter().zip(truths).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok(sum / predictions.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn names(k: usize) -> Vec<String> {
        (1..=k).map(|i| format!("w{i}")).collect()
    }

    #[test]
    fn exact_linear_recovery() {
        let mut rng = crate::seeded_rng(1);
        let rows: Vec<Vec<f64>> = (0..20).map(|_| (0..3).map(|_| rng.random::<f64>()).collect()).collect();
        let y: Vec<f64> = rows.iter().map(|r| 0.5 - 2.0 * r[0] + 3.0 * r[1] + 0.25 * r[2]).collect();
        let model = ols_fit(&rows, &y, &names(3)).unwrap();
        for (b, e) in model.coefficients.iter().zip([0.5, -2.0, 3.0, 0.25]) {
            assert!((b - e).abs() < 1e-10);
        }
        for (r, t) in rows.iter().zip(&y) {
            assert!((model.predict(r).unwrap() - t).abs() < 1e-10);
        }
    }

    #[test]
    fn constant_response() {
        let rows: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64, (i * i) as f64]).collect();
        let model = ols_fit(&rows, &[2.5; 6], &names(2)).unwrap();
        assert!((model.intercept() - 2.5).abs() < 1e-12);
        assert!(model.slopes().iter().all(|b| b.abs() < 1e-12));
    }

    #[test]
    fn collinear_column_is_named() {
        // w2 = 1 - w1 duplicates the intercept direction.
        let rows: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64 / 8.0, 1.0 - i as f64 / 8.0]).collect();
        let y: Vec<f64> = (0..8).map(|i| i as f64).collect();
        match ols_fit(&rows, &y, &names(2)) {
            Err(Error::Singular { columns }) => assert_eq!(columns, vec!["w2".to_string()]),
            other => panic!("expected singular error, got {other:?}"),
        }
    }

    #[test]
    fn too_few_rows() {
        let rows = vec![vec![0.0], vec![1.0]];
        assert!(ols_fit(&rows, &[0.0, 1.0], &names(1)).is_err());
    }

    #[test]
    fn mse_hand_values() {
        assert_eq!(mse(&[0.3, 0.4], &[0.3, 0.4]).unwrap(), 0.0);
        assert_eq!(mse(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 1.0);
        assert!(mse(&[0.0], &[1.0, 2.0]).is_err());
        assert!(mse(&[], &[]).is_err());
    }
}
