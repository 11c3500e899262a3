//! End-to-end experiment: design, synthetic responses, surrogate comparison.

mod oracle;
mod pipeline;

pub use oracle::{variance_feature, OracleKind, SyntheticOracle, DEFAULT_NOISE_SD};
pub use pipeline::{run_pipeline, EvaluationReport, PipelineConfig, ResponseReport};

use rand::seq::SliceRandom;

use crate::assembly::DesignRun;
use crate::error::{Error, Result};
use crate::seeded_rng;

#[derive(Clone, Debug, PartialEq)]
pub struct Split {
    /// Row indices, ascending.
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Train/test split that keeps every replicate of a setting on the same
/// side. Settings are shuffled with `seed` and the first
/// `round(groups * train_fraction)` go to training.
pub fn grouped_split(runs: &[DesignRun], train_fraction: f64, seed: u64) -> Result<Split> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::param(format!("train fraction must lie in (0, 1), got {train_fraction}")));
    }
    let mut keys: Vec<String> = Vec::new();
    let mut group_of = Vec::with_capacity(runs.len());
    let mut index = std::collections::HashMap::new();
    for r in runs {
        let key = r.setting_key();
        let g = *index.entry(key.clone()).or_insert_with(|| {
            keys.push(key);
            keys.len() - 1
        });
        group_of.push(g);
    }
    let groups = keys.len();
    let n_train = (groups as f64 * train_fraction).round() as usize;
    if n_train == 0 || n_train == groups {
        return Err(Error::param(format!(
            "{groups} settings cannot be split {train_fraction}/{} with both sides nonempty",
            1.0 - train_fraction
        )));
    }
    let mut order: Vec<usize> = (0..groups).collect();
    order.shuffle(&mut seeded_rng(seed));
    let mut in_train = vec![false; groups];
    for g in &order[..n_train] {
        in_train[*g] = true;
    }
    let (train, test): (Vec<usize>, Vec<usize>) = (0..runs.len()).partition(|&i| in_train[group_of[i]]);
    Ok(Split { train, test })
}
