//! Synthetic accuracy responses standing in for real detection experiments.
//!
//! Environmental values are read positionally as (weights ratio, threshold,
//! mislabel proportion).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::assembly::DesignRun;
use crate::error::{Error, Result};

pub const DEFAULT_NOISE_SD: f64 = 0.01;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleKind {
    /// Smooth nonlinear surfaces: a sigmoidal jump in the log weights ratio,
    /// a straight-line decrease in the mislabel proportion, a penalty on
    /// class imbalance and a level offset between datasets.
    #[default]
    Default,
    /// Affine in the encoded covariates (with the weights ratio on a log
    /// scale).
    Linear,
}

impl std::str::FromStr for OracleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "default" => Ok(OracleKind::Default),
            "linear" => Ok(OracleKind::Linear),
            _ => Err(Error::param(format!("unknown oracle {s:?}; expected default or linear"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticOracle {
    pub kind: OracleKind,
    pub noise_sd: f64,
    pub seed: u64,
}

/// Population variance of the proportions.
pub fn variance_feature(run: &DesignRun) -> f64 {
    let x = run.x.coords();
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n
}

impl SyntheticOracle {
    pub fn new(kind: OracleKind, noise_sd: f64, seed: u64) -> Result<Self> {
        if !(noise_sd >= 0.0) || !noise_sd.is_finite() {
            return Err(Error::param(format!("noise_sd must be finite and nonnegative, got {noise_sd}")));
        }
        Ok(SyntheticOracle { kind, noise_sd, seed })
    }

    /// Noise-free `(y1, y2)`.
    pub fn mean_response(&self, run: &DesignRun, levels: &[String]) -> Result<(f64, f64)> {
        if run.z_cont.len() < 3 {
            return Err(Error::param(format!(
                "run {}: the oracle needs 3 environmental values, got {}",
                run.run_id,
                run.z_cont.len()
            )));
        }
        if !(run.z_cont[0] > 0.0) {
            return Err(Error::param(format!("run {}: weights ratio must be positive", run.run_id)));
        }
        let level = levels
            .iter()
            .position(|l| *l == run.z_cat)
            .ok_or_else(|| Error::param(format!("run {}: unknown level {:?}", run.run_id, run.z_cat)))?
            as f64;
        let m = run.x.dim();
        let x = run.x.coords();
        let log_ratio = run.z_cont[0].ln() / 500f64.ln();
        let t2 = (run.z_cont[1] - 1.0) / 2.0;
        let t3 = (run.z_cont[2] - 0.1) / 0.4;
        // Scaled so a vertex of the simplex gives 1.
        let imbalance = if m > 1 {
            variance_feature(run) * (m * m) as f64 / (m - 1) as f64
        } else {
            0.0
        };
        Ok(match self.kind {
            OracleKind::Default => {
                let jump = 1.0 / (1.0 + (-3.0 * run.z_cont[0].log10()).exp());
                let y1 = 0.93 - 0.05 * level + 0.04 * jump - 0.12 * t3 * (0.5 + jump) - 0.06 * imbalance
                    + 0.02 * (2.0 * std::f64::consts::PI * x[0]).cos();
                let y2 = 0.62 + 0.30 * jump - 0.20 * t3 - 0.10 * imbalance
                    + 0.03 * (std::f64::consts::PI * t2).sin();
                (y1, y2)
            }
            OracleKind::Linear => {
                let tilt: f64 = x.iter().enumerate().map(|(l, v)| (l as f64 / m as f64 - 0.5) * v).sum();
                let y1 = 0.55 + 0.10 * log_ratio + 0.05 * t2 - 0.15 * t3 + 0.10 * tilt - 0.04 * level;
                let y2 = 0.60 + 0.15 * log_ratio + 0.05 * t2 - 0.20 * t3 + 0.08 * (x[0] - x[m - 1]) - 0.03 * level;
                (y1, y2)
            }
        })
    }

    /// Mean response plus Gaussian noise drawn from a stream keyed by the
    /// run id, clipped to `[0, 1]`.
    pub fn respond(&self, run: &DesignRun, levels: &[String]) -> Result<(f64, f64)> {
        let (y1, y2) = self.mean_response(run, levels)?;
        let (e1, e2) = if self.noise_sd > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
            rng.set_stream(run.run_id);
            let normal = Normal::new(0.0, self.noise_sd).expect("validated noise level");
            (normal.sample(&mut rng), normal.sample(&mut rng))
        } else {
            (0.0, 0.0)
        };
        Ok(((y1 + e1).clamp(0.0, 1.0), (y2 + e2).clamp(0.0, 1.0)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simplex::SimplexPoint;

    fn run(z: [f64; 3], x: Vec<f64>) -> DesignRun {
        DesignRun {
            run_id: 7,
            replicate: 1,
            z_cat: "MNIST".into(),
            z_cont: z.to_vec(),
            x: SimplexPoint::new(x).unwrap(),
        }
    }

    fn levels() -> Vec<String> {
        vec!["MNIST".into(), "FashionMNIST".into()]
    }

    #[test]
    fn detection_falls_with_mislabel_rate() {
        let o = SyntheticOracle::new(OracleKind::Default, 0.0, 1).unwrap();
        let lo = o.respond(&run([2.0, 2.0, 0.1], vec![0.5, 0.5]), &levels()).unwrap();
        let hi = o.respond(&run([2.0, 2.0, 0.5], vec![0.5, 0.5]), &levels()).unwrap();
        assert!(lo.1 > hi.1);
    }

    #[test]
    fn deterministic_without_noise_and_with_seed() {
        let r = run([0.3, 1.4, 0.2], vec![0.2, 0.3, 0.5]);
        let o = SyntheticOracle::new(OracleKind::Default, 0.0, 1).unwrap();
        assert_eq!(o.respond(&r, &levels()).unwrap(), o.respond(&r, &levels()).unwrap());
        let noisy = SyntheticOracle::new(OracleKind::Default, 0.05, 9).unwrap();
        assert_eq!(noisy.respond(&r, &levels()).unwrap(), noisy.respond(&r, &levels()).unwrap());
        let other = SyntheticOracle::new(OracleKind::Default, 0.05, 10).unwrap();
        assert_ne!(noisy.respond(&r, &levels()).unwrap(), other.respond(&r, &levels()).unwrap());
    }

    #[test]
    fn balance_beats_imbalance() {
        let o = SyntheticOracle::new(OracleKind::Default, 0.0, 1).unwrap();
        for m in 2..=10 {
            let balanced = o.respond(&run([5.0, 2.5, 0.3], vec![1.0 / m as f64; m]), &levels()).unwrap();
            let mut vertex = vec![0.0; m];
            vertex[0] = 1.0;
            let imbalanced = o.respond(&run([5.0, 2.5, 0.3], vertex), &levels()).unwrap();
            assert!(balanced.1 >= imbalanced.1);
        }
    }

    #[test]
    fn variance_hand_values() {
        assert!(variance_feature(&run([1.0; 3], vec![0.25; 4])).abs() < 1e-18);
        assert_eq!(variance_feature(&run([1.0; 3], vec![1.0, 0.0])), 0.25);
    }

    #[test]
    fn negative_noise_rejected() {
        assert_eq!(SyntheticOracle::new(OracleKind::Default, -0.1, 0).unwrap_err().exit_code(), 2);
    }
}
