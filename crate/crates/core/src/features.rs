//! Covariate encoding shared by both surrogates: optional log transform,
//! affine normalization to the training range, dummy coding of the
//! categorical factor.

use serde::{Deserialize, Serialize};

use crate::agp::{encode_categorical, MixedInput};
use crate::assembly::DesignRun;
use crate::error::{Error, Result};

/// Environmental columns log-transformed unless told otherwise.
pub const DEFAULT_LOG_COLUMNS: [&str; 1] = ["z1"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureEncoder {
    pub cat_name: String,
    /// Reference level first.
    pub levels: Vec<String>,
    pub z_names: Vec<String>,
    pub log_z: Vec<bool>,
    pub x_dim: usize,
    /// Training range of each continuous covariate after the log transform,
    /// z columns then x columns.
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Proportion column left out of the regression design, since the
    /// proportions sum to the intercept.
    pub dropped_x: usize,
}

impl FeatureEncoder {
    pub fn fit(
        runs: &[DesignRun],
        cat_name: &str,
        z_names: &[String],
        levels: &[String],
        log_columns: &[String],
    ) -> Result<Self> {
        let first = runs.first().ok_or_else(|| Error::param("no runs to encode"))?;
        let x_dim = first.x.dim();
        if levels.len() < 2 {
            return Err(Error::param("the categorical factor needs at least 2 levels"));
        }
        for name in log_columns {
            if !z_names.contains(name) {
                return Err(Error::param(format!("log column {name:?} is not an environmental column")));
            }
        }
        let log_z: Vec<bool> = z_names.iter().map(|n| log_columns.contains(n)).collect();
        let mut enc = FeatureEncoder {
            cat_name: cat_name.to_string(),
            levels: levels.to_vec(),
            z_names: z_names.to_vec(),
            log_z,
            x_dim,
            lower: vec![f64::INFINITY; z_names.len() + x_dim],
            upper: vec![f64::NEG_INFINITY; z_names.len() + x_dim],
            dropped_x: x_dim - 1,
        };
        for run in runs {
            let raw = enc.raw(run)?;
            for (k, v) in raw.into_iter().enumerate() {
                enc.lower[k] = enc.lower[k].min(v);
                enc.upper[k] = enc.upper[k].max(v);
            }
        }
        Ok(enc)
    }

    /// Leaves a different proportion column out of the regression design.
    pub fn with_dropped_x(mut self, column: usize) -> Result<Self> {
        if column >= self.x_dim {
            return Err(Error::param(format!("x column {} out of range 1..={}", column + 1, self.x_dim)));
        }
        self.dropped_x = column;
        Ok(self)
    }

    fn raw(&self, run: &DesignRun) -> Result<Vec<f64>> {
        if run.z_cont.len() != self.z_names.len() || run.x.dim() != self.x_dim {
            return Err(Error::param(format!(
                "run {} has {} environmental values and {} proportions, expected {} and {}",
                run.run_id,
                run.z_cont.len(),
                run.x.dim(),
                self.z_names.len(),
                self.x_dim
            )));
        }
        let mut out = Vec::with_capacity(self.lower.len());
        for (k, v) in run.z_cont.iter().enumerate() {
            if self.log_z[k] {
                if !(*v > 0.0) {
                    return Err(Error::param(format!(
                        "run {}: {} = {v} cannot be log-transformed",
                        run.run_id, self.z_names[k]
                    )));
                }
                out.push(v.ln());
            } else {
                out.push(*v);
            }
        }
        out.extend_from_slice(run.x.coords());
        Ok(out)
    }

    /// Normalized continuous covariates; a column constant in training maps
    /// to zero.
    pub fn continuous(&self, run: &DesignRun) -> Result<Vec<f64>> {
        let raw = self.raw(run)?;
        Ok(raw
            .iter()
            .enumerate()
            .map(|(k, v)| {
                let span = self.upper[k] - self.lower[k];
                if span > 0.0 {
                    (v - self.lower[k]) / span
                } else {
                    0.0
                }
            })
            .collect())
    }

    pub fn indicators(&self, run: &DesignRun) -> Result<Vec<u8>> {
        encode_categorical(&run.z_cat, &self.levels)
    }

    pub fn mixed_input(&self, run: &DesignRun) -> Result<MixedInput> {
        MixedInput::new(self.continuous(run)?, self.indicators(run)?)
    }

    /// Regression covariates: normalized continuous columns minus the
    /// dropped proportion, then the dummies.
    pub fn regression_row(&self, run: &DesignRun) -> Result<Vec<f64>> {
        let nz = self.z_names.len();
        let mut row: Vec<f64> = self
            .continuous(run)?
            .into_iter()
            .enumerate()
            .filter(|(k, _)| *k != nz + self.dropped_x)
            .map(|(_, v)| v)
            .collect();
        row.extend(self.indicators(run)?.into_iter().map(f64::from));
        Ok(row)
    }

    pub fn regression_columns(&self) -> Vec<String> {
        let mut cols: Vec<String> = self
            .z_names
            .iter()
            .zip(&self.log_z)
            .map(|(n, l)| if *l { format!("log_{n}") } else { n.clone() })
            .collect();
        cols.extend((0..self.x_dim).filter(|l| *l != self.dropped_x).map(|l| format!("x{}", l + 1)));
        cols.extend(self.levels[1..].iter().map(|lv| format!("{}={lv}", self.cat_name)));
        cols
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simplex::SimplexPoint;

    fn run(id: u64, cat: &str, z: [f64; 2], x: [f64; 3]) -> DesignRun {
        DesignRun {
            run_id: id,
            replicate: 1,
            z_cat: cat.into(),
            z_cont: z.to_vec(),
            x: SimplexPoint::new(x.to_vec()).unwrap(),
        }
    }

    fn strs(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn normalizes_to_training_range() {
        let runs = vec![
            run(1, "a", [0.01, 2.0], [1.0, 0.0, 0.0]),
            run(2, "b", [100.0, 2.0], [0.0, 0.5, 0.5]),
            run(3, "a", [1.0, 2.0], [0.2, 0.2, 0.6]),
        ];
        let enc = FeatureEncoder::fit(&runs, "c", &strs(&["z1", "z2"]), &strs(&["a", "b"]), &strs(&["z1"])).unwrap();
        let c = enc.continuous(&runs[2]).unwrap();
        // log 1 sits halfway between log 0.01 and log 100.
        assert!((c[0] - 0.5).abs() < 1e-15);
        assert_eq!(c[1], 0.0);
        assert!((c[2] - 0.2).abs() < 1e-15);
        assert_eq!(enc.indicators(&runs[1]).unwrap(), vec![1]);
        assert_eq!(enc.regression_columns(), strs(&["log_z1", "z2", "x1", "x2", "c=b"]));
        assert_eq!(enc.regression_row(&runs[1]).unwrap().len(), 5);
    }

    #[test]
    fn rejects_nonpositive_log_value() {
        let runs = vec![run(1, "a", [0.0, 2.0], [1.0, 0.0, 0.0])];
        assert!(FeatureEncoder::fit(&runs, "c", &strs(&["z1", "z2"]), &strs(&["a", "b"]), &strs(&["z1"])).is_err());
    }
}
