//! Latin hypercube designs for the unconstrained factors and the full
//! cross-array that combines them with the mixture design and the
//! categorical levels.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeded_rng;
use crate::simplex::SimplexPoint;

/// Sizes of the full-scale experiment.
pub const DEFAULT_X_RUNS: usize = 50;
pub const DEFAULT_Z_RUNS: usize = 20;
pub const DEFAULT_REPLICATES: usize = 5;
pub const DEFAULT_MAX_RUNS: usize = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    #[default]
    Linear,
    Log,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FactorKind {
    Continuous {
        lower: f64,
        upper: f64,
        #[serde(default)]
        scale: Scale,
    },
    Categorical {
        levels: Vec<String>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorSpec {
    pub name: String,
    #[serde(flatten)]
    pub kind: FactorKind,
}

impl FactorSpec {
    pub fn continuous(name: &str, lower: f64, upper: f64, scale: Scale) -> Self {
        FactorSpec {
            name: name.to_string(),
            kind: FactorKind::Continuous { lower, upper, scale },
        }
    }

    pub fn categorical(name: &str, levels: &[&str]) -> Self {
        FactorSpec {
            name: name.to_string(),
            kind: FactorKind::Categorical {
                levels: levels.iter().map(|s| s.to_string()).collect(),
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            FactorKind::Continuous { lower, upper, scale } => {
                if !(lower < upper) || !lower.is_finite() || !upper.is_finite() {
                    return Err(Error::param(format!(
                        "factor {}: need finite lower < upper, got [{lower}, {upper}]",
                        self.name
                    )));
                }
                if *scale == Scale::Log && *lower <= 0.0 {
                    return Err(Error::param(format!(
                        "factor {}: log scale needs a positive lower bound",
                        self.name
                    )));
                }
            }
            FactorKind::Categorical { levels } => {
                if levels.len() < 2 {
                    return Err(Error::param(format!(
                        "factor {}: categorical factors need at least 2 levels",
                        self.name
                    )));
                }
                for (i, l) in levels.iter().enumerate() {
                    if levels[..i].contains(l) {
                        return Err(Error::param(format!("factor {}: duplicate level {l}", self.name)));
                    }
                }
            }
        }
        Ok(())
    }

    /// Maps `u` in `[0, 1]` to the factor's natural units.
    pub fn from_unit(&self, u: f64) -> f64 {
        match self.kind {
            FactorKind::Continuous { lower, upper, scale } => match scale {
                Scale::Linear => lower + u * (upper - lower),
                Scale::Log => (lower.ln() + u * (upper.ln() - lower.ln())).exp(),
            },
            FactorKind::Categorical { .. } => panic!("categorical factor has no unit mapping"),
        }
    }

    /// Inverse of [`FactorSpec::from_unit`].
    pub fn to_unit(&self, v: f64) -> f64 {
        match self.kind {
            FactorKind::Continuous { lower, upper, scale } => match scale {
                Scale::Linear => (v - lower) / (upper - lower),
                Scale::Log => (v.ln() - lower.ln()) / (upper.ln() - lower.ln()),
            },
            FactorKind::Categorical { .. } => panic!("categorical factor has no unit mapping"),
        }
    }

    pub fn is_log(&self) -> bool {
        matches!(self.kind, FactorKind::Continuous { scale: Scale::Log, .. })
    }
}

/// Weights ratio on [1/500, 500] (log scale), threshold on [1, 3], mislabel
/// proportion on [0.1, 0.5].
pub fn default_continuous_factors() -> Vec<FactorSpec> {
    vec![
        FactorSpec::continuous("z1", 1.0 / 500.0, 500.0, Scale::Log),
        FactorSpec::continuous("z2", 1.0, 3.0, Scale::Linear),
        FactorSpec::continuous("z3", 0.10, 0.50, Scale::Linear),
    ]
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LhdOptions {
    /// Random pairwise swaps tried by the maximin pass; 0 disables it.
    pub maximin_swaps: usize,
}

/// An `n x specs.len()` Latin hypercube in natural units.
///
/// Each column places exactly one point uniformly inside each of `n`
/// equal-probability strata of `[0, 1]`, in a random row order, then maps it
/// through the factor's scale. The optional maximin pass swaps values within
/// a column and keeps a swap only if it increases the minimum pairwise
/// distance in unit coordinates.
pub fn latin_hypercube(specs: &[FactorSpec], n: usize, seed: u64, options: &LhdOptions) -> Result<Vec<Vec<f64>>> {
    if n == 0 {
        return Err(Error::param("Latin hypercube needs at least one run"));
    }
    for s in specs {
        s.validate()?;
        if matches!(s.kind, FactorKind::Categorical { .. }) {
            return Err(Error::param(format!(
                "factor {} is categorical; Latin hypercubes take continuous factors",
                s.name
            )));
        }
    }
    let mut rng = seeded_rng(seed);
    let k = specs.len();
    let mut unit = vec![vec![0.0; k]; n];
    let mut strata: Vec<usize> = (0..n).collect();
    for col in 0..k {
        strata.shuffle(&mut rng);
        for (row, &s) in strata.iter().enumerate() {
            let jitter: f64 = rng.random();
            unit[row][col] = (s as f64 + jitter) / n as f64;
        }
    }

    if options.maximin_swaps > 0 && n > 2 && k > 0 {
        let mut current = min_pairwise_sq(&unit);
        for _ in 0..options.maximin_swaps {
            let col = rng.random_range(0..k);
            let a = rng.random_range(0..n);
            let b = rng.random_range(0..n);
            if a == b {
                continue;
            }
            swap_cell(&mut unit, a, b, col);
            let trial = min_pairwise_sq(&unit);
            if trial > current {
                current = trial;
            } else {
                swap_cell(&mut unit, a, b, col);
            }
        }
    }

    Ok(unit
        .into_iter()
        .map(|row| row.iter().zip(specs).map(|(u, s)| s.from_unit(*u)).collect())
        .collect())
}

fn swap_cell(rows: &mut [Vec<f64>], a: usize, b: usize, col: usize) {
    let tmp = rows[a][col];
    rows[a][col] = rows[b][col];
    rows[b][col] = tmp;
}

pub(crate) fn min_pairwise_sq(rows: &[Vec<f64>]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            let d: f64 = rows[i].iter().zip(&rows[j]).map(|(a, b)| (a - b) * (a - b)).sum();
            best = best.min(d);
        }
    }
    best
}

/// The unconstrained continuous block of the cross array.
#[derive(Clone, Debug, PartialEq)]
pub struct ContinuousDesign {
    pub names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CategoricalFactor {
    pub name: String,
    pub levels: Vec<String>,
}

impl CategoricalFactor {
    pub fn new(name: &str, levels: &[&str]) -> Self {
        CategoricalFactor {
            name: name.to_string(),
            levels: levels.iter().map(|s| s.to_string()).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DesignRun {
    pub run_id: u64,
    /// 1-based replicate number.
    pub replicate: usize,
    pub z_cat: String,
    pub z_cont: Vec<f64>,
    pub x: SimplexPoint,
}

impl DesignRun {
    /// Identifies the setting shared by all replicates of this run.
    pub fn setting_key(&self) -> String {
        let mut key = self.z_cat.clone();
        for v in self.z_cont.iter().chain(self.x.coords()) {
            key.push('|');
            key.push_str(&format!("{:016x}", v.to_bits()));
        }
        key
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FullDesign {
    pub cat_name: String,
    pub z_names: Vec<String>,
    pub runs: Vec<DesignRun>,
    pub replicate_count: usize,
}

impl FullDesign {
    pub fn x_dim(&self) -> usize {
        self.runs.first().map_or(0, |r| r.x.dim())
    }
}

/// Full Cartesian product ordered lexicographically by (categorical level,
/// z row, x row, replicate), with run ids counting from 1.
pub fn cross_array(
    x_rows: &[SimplexPoint],
    z: &ContinuousDesign,
    cat: &CategoricalFactor,
    replicates: usize,
    max_runs: usize,
) -> Result<FullDesign> {
    if x_rows.is_empty() || z.rows.is_empty() || cat.levels.is_empty() {
        return Err(Error::param("cross array components must be nonempty"));
    }
    if replicates == 0 {
        return Err(Error::param("replicates must be at least 1"));
    }
    if let Some(r) = z.rows.iter().find(|r| r.len() != z.names.len()) {
        return Err(Error::param(format!(
            "z row has {} values for {} named factors",
            r.len(),
            z.names.len()
        )));
    }
    let m = x_rows[0].dim();
    if x_rows.iter().any(|x| x.dim() != m) {
        return Err(Error::param("mixture rows have differing dimensions"));
    }
    let requested = x_rows.len() as u128 * z.rows.len() as u128 * cat.levels.len() as u128 * replicates as u128;
    if requested > max_runs as u128 {
        return Err(Error::Capacity {
            requested,
            cap: max_runs,
        });
    }

    let mut runs = Vec::with_capacity(requested as usize);
    let mut run_id = 1u64;
    for level in &cat.levels {
        for zr in &z.rows {
            for x in x_rows {
                for rep in 1..=replicates {
                    runs.push(DesignRun {
                        run_id,
                        replicate: rep,
                        z_cat: level.clone(),
                        z_cont: zr.clone(),
                        x: x.clone(),
                    });
                    run_id += 1;
                }
            }
        }
    }
    Ok(FullDesign {
        cat_name: cat.name.clone(),
        z_names: z.names.clone(),
        runs,
        replicate_count: replicates,
    })
}
