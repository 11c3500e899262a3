//! Generates a small synthetic dataset and compares the additive process
//! with first-order least squares on a held-out split.

use doaiq::agp::FitOptions;
use doaiq::assembly::{
    cross_array, default_continuous_factors, latin_hypercube, CategoricalFactor, ContinuousDesign, LhdOptions,
    DEFAULT_MAX_RUNS,
};
use doaiq::dataset::{ExperimentDataset, Response};
use doaiq::features::FeatureEncoder;
use doaiq::harness::{grouped_split, OracleKind, SyntheticOracle};
use doaiq::linear::mse;
use doaiq::maxpro::{optimize_design, OptimizerConfig};
use doaiq::simplex::{generate_candidate_set, CandidateConfig};
use doaiq::surrogate::{AgpSurrogate, LinearSurrogate};

fn main() -> doaiq::Result<()> {
    let pool = generate_candidate_set(4, &CandidateConfig::full(4), 1)?;
    let x = optimize_design(&pool, 8, &OptimizerConfig::default())?.design.into_rows();
    let specs = default_continuous_factors();
    let z = ContinuousDesign {
        names: specs.iter().map(|f| f.name.clone()).collect(),
        rows: latin_hypercube(&specs, 6, 1, &LhdOptions::default())?,
    };
    let levels = vec!["MNIST".to_string(), "FashionMNIST".to_string()];
    let design = cross_array(&x, &z, &CategoricalFactor::new("z4", &["MNIST", "FashionMNIST"]), 2, DEFAULT_MAX_RUNS)?;
    let oracle = SyntheticOracle::new(OracleKind::Default, 0.01, 1)?;
    let responses = design.runs.iter().map(|r| oracle.respond(r, &levels)).collect::<doaiq::Result<Vec<_>>>()?;
    let data = ExperimentDataset::new(&design, levels, &responses)?;

    let split = grouped_split(&design.runs, 0.8, 1)?;
    let train = data.subset(&split.train);
    let test = data.subset(&split.test);
    let enc = FeatureEncoder::fit(&train.runs(), &train.cat_name, &train.z_names, &train.levels, &["z1".to_string()])?;
    println!("{} training runs, {} test runs", train.len(), test.len());
    for response in Response::ALL {
        let agp = AgpSurrogate::fit(&train, response, enc.clone(), &FitOptions::default())?;
        let lin = LinearSurrogate::fit(&train, response, enc.clone())?;
        let truth = test.response(response);
        let agp_pred = test.runs().iter().map(|r| agp.predict(r).map(|p| p.mean)).collect::<doaiq::Result<Vec<_>>>()?;
        let lin_pred = test.runs().iter().map(|r| lin.predict(r)).collect::<doaiq::Result<Vec<_>>>()?;
        println!(
            "{response}: test MSE agp {:.3e}, linear {:.3e}",
            mse(&agp_pred, &truth)?,
            mse(&lin_pred, &truth)?
        );
    }
    Ok(())
}
