use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use doaiq::agp::FitOptions;
use doaiq::assembly::{
    cross_array, default_continuous_factors, latin_hypercube, CategoricalFactor, ContinuousDesign, FactorSpec,
    LhdOptions, DEFAULT_MAX_RUNS,
};
use doaiq::dataset::{load_dataset, load_design, save_design, Response};
use doaiq::features::{FeatureEncoder, DEFAULT_LOG_COLUMNS};
use doaiq::harness::{run_pipeline, PipelineConfig};
use doaiq::io::{create, fmt_f64, load_points, save_points, save_trace};
use doaiq::maxpro::{optimize_design, InnerOptConfig, OptimizerConfig, DEFAULT_DELTA2};
use doaiq::metrics::{kennard_stone_indices, NearestNeighborProfile};
use doaiq::simplex::{generate_candidate_set, CandidateConfig, CandidateSet, DEFAULT_MAX_PAIRS};
use doaiq::surrogate::{AgpSurrogate, LinearSurrogate, SavedModel};
use doaiq::{Error, Result};

#[derive(Parser)]
#[command(name = "doaiq", version, about = "Space-filling mixture designs and additive GP surrogates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simplex-centroid points plus points on the segments between them.
    Candidates {
        #[arg(long)]
        dim: usize,
        /// Largest centroid subset size [default: dim].
        #[arg(long)]
        max_subset: Option<usize>,
        #[arg(long, value_delimiter = ',', default_value = "0.25,0.5,0.75")]
        fractions: Vec<f64>,
        #[arg(long, default_value_t = DEFAULT_MAX_PAIRS)]
        max_pairs: usize,
        /// Use every centroid pair, ignoring --max-pairs.
        #[arg(long)]
        all_pairs: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Optimizes an N-run design against a candidate pool.
    Design {
        #[arg(long)]
        candidates: PathBuf,
        #[arg(long)]
        runs: usize,
        #[arg(long, default_value_t = 10_000)]
        t: usize,
        #[arg(long, default_value_t = 1e-8)]
        eps: f64,
        #[arg(long, default_value_t = DEFAULT_DELTA2)]
        delta2: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Prints the coverage and maximin measures of a design.
    Metrics {
        #[arg(long)]
        design: PathBuf,
    },
    /// Kennard-Stone selection from a candidate pool.
    Ks {
        #[arg(long)]
        candidates: PathBuf,
        #[arg(long)]
        runs: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Crosses a mixture design with a Latin hypercube and categorical levels.
    Assemble {
        #[arg(long)]
        x: PathBuf,
        /// TOML file with a `[[factor]]` table per continuous factor
        /// [default: the three standard environmental factors].
        #[arg(long)]
        zspec: Option<PathBuf>,
        #[arg(long)]
        zruns: usize,
        #[arg(long, value_delimiter = ',', default_value = "MNIST,FashionMNIST")]
        levels: Vec<String>,
        #[arg(long, default_value = "z4")]
        cat_name: String,
        #[arg(long, default_value_t = 5)]
        replicates: usize,
        #[arg(long, default_value_t = DEFAULT_MAX_RUNS)]
        max_runs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fits an additive Gaussian process to one response.
    Fit {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "y1")]
        response: Response,
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_LOG_COLUMNS.map(String::from))]
        log_columns: Vec<String>,
        #[arg(long, default_value_t = 5)]
        restarts: usize,
        #[arg(long, default_value_t = 200)]
        max_iters: usize,
        /// Holds the nugget at this value instead of estimating it.
        #[arg(long)]
        nugget: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Predicts at the runs of a design file with a saved model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        points: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fits the first-order least-squares benchmark to one response.
    FitLinear {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "y1")]
        response: Response,
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_LOG_COLUMNS.map(String::from))]
        log_columns: Vec<String>,
        /// Proportion column (1-based) left out of the regression [default: last].
        #[arg(long)]
        drop_x: Option<usize>,
    },
    /// Runs the whole synthetic experiment.
    Pipeline {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "pipeline-out")]
        out: PathBuf,
        /// Overrides the seed in the config file.
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct ZSpecFile {
    factor: Vec<FactorSpec>,
}

fn encoder_for(path: &Path, log_columns: &[String]) -> Result<(doaiq::dataset::ExperimentDataset, FeatureEncoder)> {
    let data = load_dataset(path)?;
    let enc = FeatureEncoder::fit(&data.runs(), &data.cat_name, &data.z_names, &data.levels, log_columns)?;
    Ok((data, enc))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Candidates {
            dim,
            max_subset,
            fractions,
            max_pairs,
            all_pairs,
            seed,
            out,
        } => {
            let config = CandidateConfig {
                max_subset_size: max_subset.unwrap_or(dim),
                segment_fractions: fractions,
                max_pairs: (!all_pairs).then_some(max_pairs),
            };
            let set = generate_candidate_set(dim, &config, seed)?;
            save_points(&out, set.points())?;
            eprintln!("{} candidates", set.len());
        }
        Command::Design {
            candidates,
            runs,
            t,
            eps,
            delta2,
            seed,
            out,
            trace,
        } => {
            let pool = CandidateSet::from_points(load_points(&candidates)?)?;
            let config = OptimizerConfig {
                max_redundant_iters: t,
                convergence_tol: eps,
                delta2,
                inner: InnerOptConfig::default(),
                seed,
            };
            let result = optimize_design(&pool, runs, &config)?;
            save_points(&out, result.design.rows())?;
            if let Some(trace) = trace {
                save_trace(&trace, &result.trace)?;
            }
            eprintln!(
                "criterion {} ({:?})",
                fmt_f64(result.design.criterion()),
                result.termination
            );
        }
        Command::Metrics { design } => {
            let rows = load_points(&design)?;
            let profile = NearestNeighborProfile::new(&rows)?;
            println!("pm1,pm2");
            println!("{},{}", fmt_f64(profile.coverage()), fmt_f64(profile.maximin()));
        }
        Command::Ks { candidates, runs, out } => {
            let pool = load_points(&candidates)?;
            let picked = kennard_stone_indices(&pool, runs)?;
            let rows: Vec<_> = picked.iter().map(|i| pool[*i].clone()).collect();
            save_points(&out, &rows)?;
        }
        Command::Assemble {
            x,
            zspec,
            zruns,
            levels,
            cat_name,
            replicates,
            max_runs,
            seed,
            out,
        } => {
            let specs = match zspec {
                Some(path) => {
                    let text = std::fs::read_to_string(&path).map_err(|e| Error::Format {
                        path: path.clone(),
                        message: e.to_string(),
                    })?;
                    toml::from_str::<ZSpecFile>(&text)
                        .map_err(|e| Error::Format {
                            path: path.clone(),
                            message: e.to_string(),
                        })?
                        .factor
                }
                None => default_continuous_factors(),
            };
            let x_rows = load_points(&x)?;
            let z = ContinuousDesign {
                names: specs.iter().map(|f| f.name.clone()).collect(),
                rows: latin_hypercube(&specs, zruns, seed, &LhdOptions::default())?,
            };
            let levels: Vec<&str> = levels.iter().map(String::as_str).collect();
            let design = cross_array(&x_rows, &z, &CategoricalFactor::new(&cat_name, &levels), replicates, max_runs)?;
            save_design(&out, &design)?;
            eprintln!("{} runs", design.runs.len());
        }
        Command::Fit {
            data,
            out,
            response,
            log_columns,
            restarts,
            max_iters,
            nugget,
            seed,
        } => {
            let (data, enc) = encoder_for(&data, &log_columns)?;
            let opts = FitOptions {
                restarts,
                max_iters,
                seed,
                fixed_eta: nugget,
                ..FitOptions::default()
            };
            let model = AgpSurrogate::fit(&data, response, enc, &opts)?;
            let r = model.model.report();
            eprintln!("{:?} after {} iterations, nll {:?}", r.termination, r.iterations, r.nll);
            SavedModel::Agp(model).save(&out)?;
        }
        Command::Predict { model, points, out } => {
            let model = SavedModel::load(&model)?;
            let design = load_design(&points)?;
            let mut w = create(&out)?;
            match &model {
                SavedModel::Agp(m) => {
                    writeln!(w, "run_id,mean,variance")?;
                    for run in &design.runs {
                        let p = m.predict(run)?;
                        writeln!(w, "{},{},{}", run.run_id, fmt_f64(p.mean), fmt_f64(p.variance))?;
                    }
                }
                SavedModel::Linear(m) => {
                    writeln!(w, "run_id,mean")?;
                    for run in &design.runs {
                        writeln!(w, "{},{}", run.run_id, fmt_f64(m.predict(run)?))?;
                    }
                }
            }
            w.flush()?;
        }
        Command::FitLinear {
            data,
            out,
            response,
            log_columns,
            drop_x,
        } => {
            let (data, mut enc) = encoder_for(&data, &log_columns)?;
            if let Some(k) = drop_x {
                enc = enc.with_dropped_x(k.checked_sub(1).ok_or_else(|| Error::Parameter("--drop-x counts from 1".into()))?)?;
            }
            let model = LinearSurrogate::fit(&data, response, enc)?;
            SavedModel::Linear(model).save(&out)?;
        }
        Command::Pipeline { config, out, seed } => {
            let mut config = PipelineConfig::load(&config)?;
            if let Some(seed) = seed {
                config.seed = seed;
            }
            let report = run_pipeline(&config, Some(&out))?;
            print!("{}", report.summary());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
