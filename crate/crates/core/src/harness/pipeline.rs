use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::oracle::{variance_feature, OracleKind, SyntheticOracle, DEFAULT_NOISE_SD};
use super::grouped_split;
use crate::agp::FitOptions;
use crate::assembly::{
    cross_array, default_continuous_factors, latin_hypercube, CategoricalFactor, ContinuousDesign, LhdOptions,
    DEFAULT_MAX_RUNS,
};
use crate::dataset::{save_dataset, save_design, ExperimentDataset, Response};
use crate::error::{Error, Result, StageExt};
use crate::features::{FeatureEncoder, DEFAULT_LOG_COLUMNS};
use crate::io::{fmt_f64, save_points, save_trace};
use crate::linear::mse;
use crate::maxpro::{optimize_design, InnerOptConfig, OptimizerConfig, DEFAULT_DELTA2};
use crate::simplex::{generate_candidate_set, CandidateConfig, DEFAULT_MAX_PAIRS, DEFAULT_SEGMENT_FRACTIONS};
use crate::surrogate::{AgpSurrogate, LinearSurrogate, SavedModel};

const HISTOGRAM_BINS: usize = 20;

/// Flat key-value settings for [`run_pipeline`]; every key is optional.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    /// Number of mixture components.
    pub m: usize,
    /// Defaults to `m`.
    pub max_subset_size: Option<usize>,
    pub segment_fractions: Vec<f64>,
    pub max_pairs: Option<usize>,
    pub x_runs: usize,
    /// Non-improving exchange attempts before the optimizer stops.
    pub t: usize,
    pub eps: f64,
    pub delta2: f64,
    pub z_runs: usize,
    pub cat_name: String,
    pub levels: Vec<String>,
    pub replicates: usize,
    pub oracle: OracleKind,
    pub noise_sd: f64,
    pub train_fraction: f64,
    pub restarts: usize,
    pub max_iters: usize,
    pub log_columns: Vec<String>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 0,
            m: 5,
            max_subset_size: None,
            segment_fractions: DEFAULT_SEGMENT_FRACTIONS.to_vec(),
            max_pairs: Some(DEFAULT_MAX_PAIRS),
            x_runs: 12,
            t: 10_000,
            eps: 1e-8,
            delta2: DEFAULT_DELTA2,
            z_runs: 8,
            cat_name: "z4".into(),
            levels: vec!["MNIST".into(), "FashionMNIST".into()],
            replicates: 3,
            oracle: OracleKind::Default,
            noise_sd: DEFAULT_NOISE_SD,
            train_fraction: 0.8,
            restarts: 5,
            max_iters: 200,
            log_columns: DEFAULT_LOG_COLUMNS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::param(format!("pipeline config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::format(path, e.to_string()))?;
        toml::from_str(&text).map_err(|e| Error::format(path, e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is representable")
    }

    // Independent streams for each random stage.
    fn stage_seed(&self, stage: u64) -> u64 {
        self.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(stage)
    }
}

/// Test-set comparison for one response. Residuals are truth minus
/// prediction, in test-row order.
#[derive(Clone, Debug, PartialEq)]
pub struct ResponseReport {
    pub response: Response,
    pub run_ids: Vec<u64>,
    pub truths: Vec<f64>,
    pub agp_residuals: Vec<f64>,
    pub linear_residuals: Vec<f64>,
    pub agp_mse: f64,
    pub linear_mse: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvaluationReport {
    pub seed: u64,
    pub train_fraction: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub responses: Vec<ResponseReport>,
}

impl EvaluationReport {
    pub fn get(&self, r: Response) -> &ResponseReport {
        self.responses.iter().find(|x| x.response == r).expect("both responses are evaluated")
    }

    pub fn report_csv(&self) -> String {
        let mut s = String::from("response,model,test_mse,n_train,n_test,train_fraction,seed\n");
        for r in &self.responses {
            for (model, v) in [("agp", r.agp_mse), ("linear", r.linear_mse)] {
                let _ = writeln!(
                    s,
                    "{},{model},{},{},{},{},{}",
                    r.response,
                    fmt_f64(v),
                    self.n_train,
                    self.n_test,
                    self.train_fraction,
                    self.seed
                );
            }
        }
        s
    }

    pub fn residuals_csv(&self) -> String {
        let mut s = String::from("response,model,run_id,truth,prediction,residual\n");
        for r in &self.responses {
            for (model, res) in [("agp", &r.agp_residuals), ("linear", &r.linear_residuals)] {
                for ((id, t), e) in r.run_ids.iter().zip(&r.truths).zip(res) {
                    let _ = writeln!(s, "{},{model},{id},{},{},{}", r.response, fmt_f64(*t), fmt_f64(t - e), fmt_f64(*e));
                }
            }
        }
        s
    }

    /// Residual counts in equal-width bins over a range symmetric about zero
    /// and shared by both models of a response.
    pub fn histogram_csv(&self) -> String {
        let mut s = String::from("response,model,bin,lower,upper,count\n");
        for r in &self.responses {
            let reach = r
                .agp_residuals
                .iter()
                .chain(&r.linear_residuals)
                .fold(0.0f64, |m, e| m.max(e.abs()));
            let reach = if reach > 0.0 { reach } else { 1.0 };
            let width = 2.0 * reach / HISTOGRAM_BINS as f64;
            for (model, res) in [("agp", &r.agp_residuals), ("linear", &r.linear_residuals)] {
                let mut counts = [0usize; HISTOGRAM_BINS];
                for e in res {
                    let b = (((e + reach) / width).floor() as usize).min(HISTOGRAM_BINS - 1);
                    counts[b] += 1;
                }
                for (b, c) in counts.iter().enumerate() {
                    let lower = -reach + b as f64 * width;
                    let _ = writeln!(
                        s,
                        "{},{model},{b},{},{},{c}",
                        r.response,
                        fmt_f64(lower),
                        fmt_f64(lower + width)
                    );
                }
            }
        }
        s
    }

    pub fn summary(&self) -> String {
        let mut s = format!(
            "seed {}; {} training runs, {} test runs (train fraction {})\n",
            self.seed, self.n_train, self.n_test, self.train_fraction
        );
        for r in &self.responses {
            let better = if r.agp_mse < r.linear_mse { "agp" } else { "linear" };
            let _ = writeln!(
                s,
                "{}: test MSE agp {:.6e}, linear {:.6e}, lower: {better}",
                r.response, r.agp_mse, r.linear_mse
            );
        }
        s
    }
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    let mut f = crate::io::create(&path)?;
    f.write_all(contents.as_bytes())?;
    f.flush()?;
    Ok(())
}

/// Candidates, optimized mixture design, Latin hypercube for the
/// environmental factors, cross array, oracle responses, grouped split, one
/// additive-process and one linear fit per response, test-set comparison.
/// With `out_dir`, every intermediate artifact is written there.
pub fn run_pipeline(config: &PipelineConfig, out_dir: Option<&Path>) -> Result<EvaluationReport> {
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::format(dir, e.to_string()))?;
    }

    let candidate_config = CandidateConfig {
        max_subset_size: config.max_subset_size.unwrap_or(config.m),
        segment_fractions: config.segment_fractions.clone(),
        max_pairs: config.max_pairs,
    };
    let candidates = generate_candidate_set(config.m, &candidate_config, config.stage_seed(1)).stage("candidates")?;

    let optimizer = OptimizerConfig {
        max_redundant_iters: config.t,
        convergence_tol: config.eps,
        delta2: config.delta2,
        inner: InnerOptConfig::default(),
        seed: config.stage_seed(2),
    };
    let optimized = optimize_design(&candidates, config.x_runs, &optimizer).stage("design")?;

    let z_specs = default_continuous_factors();
    let z = ContinuousDesign {
        names: z_specs.iter().map(|f| f.name.clone()).collect(),
        rows: latin_hypercube(&z_specs, config.z_runs, config.stage_seed(3), &LhdOptions::default())
            .stage("assembly")?,
    };
    let levels: Vec<&str> = config.levels.iter().map(String::as_str).collect();
    let cat = CategoricalFactor::new(&config.cat_name, &levels);
    let design = cross_array(optimized.design.rows(), &z, &cat, config.replicates, DEFAULT_MAX_RUNS).stage("assembly")?;

    let oracle = SyntheticOracle::new(config.oracle, config.noise_sd, config.stage_seed(4)).stage("oracle")?;
    let responses = design
        .runs
        .iter()
        .map(|r| oracle.respond(r, &config.levels))
        .collect::<Result<Vec<_>>>()
        .stage("oracle")?;
    let data = ExperimentDataset::new(&design, config.levels.clone(), &responses).stage("oracle")?;

    let split = grouped_split(&design.runs, config.train_fraction, config.stage_seed(5)).stage("split")?;
    let train = data.subset(&split.train);
    let test = data.subset(&split.test);

    let encoder = FeatureEncoder::fit(
        &train.runs(),
        &config.cat_name,
        &data.z_names,
        &config.levels,
        &config.log_columns,
    )
    .stage("encoding")?;
    let fit_options = FitOptions {
        max_iters: config.max_iters,
        restarts: config.restarts,
        seed: config.stage_seed(6),
        ..FitOptions::default()
    };

    let mut reports = Vec::new();
    let mut models = Vec::new();
    for response in Response::ALL {
        let agp = AgpSurrogate::fit(&train, response, encoder.clone(), &fit_options).stage("agp fit")?;
        let lin = LinearSurrogate::fit(&train, response, encoder.clone()).stage("linear fit")?;
        let truths = test.response(response);
        let mut agp_pred = Vec::with_capacity(test.len());
        let mut lin_pred = Vec::with_capacity(test.len());
        for o in &test.observations {
            agp_pred.push(agp.predict(&o.run).stage("agp predict")?.mean);
            lin_pred.push(lin.predict(&o.run).stage("linear predict")?);
        }
        reports.push(ResponseReport {
            response,
            run_ids: test.observations.iter().map(|o| o.run.run_id).collect(),
            agp_residuals: truths.iter().zip(&agp_pred).map(|(t, p)| t - p).collect(),
            linear_residuals: truths.iter().zip(&lin_pred).map(|(t, p)| t - p).collect(),
            agp_mse: mse(&agp_pred, &truths)?,
            linear_mse: mse(&lin_pred, &truths)?,
            truths,
        });
        models.push((response, agp, lin));
    }
    let report = EvaluationReport {
        seed: config.seed,
        train_fraction: config.train_fraction,
        n_train: train.len(),
        n_test: test.len(),
        responses: reports,
    };

    if let Some(dir) = out_dir {
        (|| -> Result<()> {
            write_file(dir, "config.toml", &config.to_toml())?;
            save_points(&dir.join("candidates.csv"), candidates.points())?;
            save_points(&dir.join("design.csv"), optimized.design.rows())?;
            save_trace(&dir.join("trace.csv"), &optimized.trace)?;
            save_design(&dir.join("full_design.csv"), &design)?;
            save_dataset(&dir.join("data.csv"), &data)?;

            let mut analysis = String::from("run_id,rep,z5,y1,y2\n");
            for o in &data.observations {
                let _ = writeln!(
                    analysis,
                    "{},{},{},{},{}",
                    o.run.run_id,
                    o.run.replicate,
                    fmt_f64(variance_feature(&o.run)),
                    fmt_f64(o.y1),
                    fmt_f64(o.y2)
                );
            }
            write_file(dir, "analysis.csv", &analysis)?;

            let mut split_csv = String::from("run_id,set\n");
            let mut sides: Vec<(u64, &str)> = split
                .train
                .iter()
                .map(|i| (design.runs[*i].run_id, "train"))
                .chain(split.test.iter().map(|i| (design.runs[*i].run_id, "test")))
                .collect();
            sides.sort_unstable();
            for (id, side) in sides {
                let _ = writeln!(split_csv, "{id},{side}");
            }
            write_file(dir, "split.csv", &split_csv)?;

            for (response, agp, lin) in &models {
                SavedModel::Agp(agp.clone()).save(&dir.join(format!("agp_{response}.json")))?;
                SavedModel::Linear(lin.clone()).save(&dir.join(format!("linear_{response}.json")))?;
            }
            write_file(dir, "report.csv", &report.report_csv())?;
            write_file(dir, "residuals.csv", &report.residuals_csv())?;
            write_file(dir, "residual_hist.csv", &report.histogram_csv())?;
            write_file(dir, "summary.txt", &report.summary())
        })()
        .stage("persist")?;
    }
    Ok(report)
}
