//! Acceptance suite: one test per criterion, each printing a single
//! `ACCEPTANCE <n> PASS|FAIL` line. Tests hold a shared lock so their
//! wall-clock budgets are measured without contention.

mod common;

use std::io::Write;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use common::*;
use doaiq::agp::{
    covariance_matrix, fit, AgpModel, AgpParams, FitOptions, Likelihood, ParamBounds, ParamTransform,
};
use doaiq::assembly::{
    cross_array, default_continuous_factors, latin_hypercube, CategoricalFactor, ContinuousDesign, LhdOptions,
    DEFAULT_MAX_RUNS,
};
use doaiq::dataset::Response;
use doaiq::harness::{run_pipeline, PipelineConfig};
use doaiq::linear::ols_fit;
use doaiq::maxpro::{maxpro_criterion, montecarlo_maximin_expectation, optimize_design, OptimizerConfig, DEFAULT_DELTA2};
use doaiq::metrics::{kennard_stone_indices, kennard_stone_select, pm1_coverage, pm2_maximin, NearestNeighborProfile};
use doaiq::simplex::{generate_candidate_set, CandidateConfig, SimplexPoint};
use rand::seq::index::sample;
use rand::Rng;

static LOCK: Mutex<()> = Mutex::new(());

// Pinned tolerances and budgets.
const MC_RATIO_TOL: f64 = 0.05;
const MC_SAMPLES: usize = 1_000_000;
const GRAD_REL_TOL: f64 = 1e-4;
const GRAD_FD_STEP: f64 = 1e-5;
/// Denominator floor for the componentwise relative gradient error, so a
/// component that vanishes analytically is compared absolutely.
const GRAD_ABS_FLOOR: f64 = 1e-6;
const INTERP_TOL: f64 = 1e-8;
const MAXPRO_REL_TOL: f64 = 1e-10;
const PM_TOL: f64 = 1e-12;
const COV_REL_TOL: f64 = 1e-12;
const OLS_TOL: f64 = 1e-8;
const PREDICT_TOL: f64 = 1e-10;
const ORACLE_INSTANCES: usize = 60;

fn report(n: u32, name: &str, pass: bool, detail: &str, elapsed: Duration, budget: Option<Duration>) -> bool {
    let within = budget.is_none_or(|b| elapsed <= b);
    let ok = pass && within;
    let budget_note = budget.map_or(String::new(), |b| format!(" / budget {:.0}s", b.as_secs_f64()));
    let line = format!(
        "ACCEPTANCE {n} {} {name}: {detail} [{:.1}s{budget_note}]\n",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64()
    );
    std::io::stderr().write_all(line.as_bytes()).unwrap();
    ok
}

fn guard() -> std::sync::MutexGuard<'static, ()> {
    LOCK.lock().unwrap_or_else(|e| e.into_inner())
}

#[test]
fn criterion_1_pm1_pm2_against_kennard_stone() {
    let _g = guard();
    let start = Instant::now();
    let seeds = 0..5u64;
    let runs = [50usize, 100, 150, 200];
    let mut pm1_wins = [0usize; 4];
    let mut pm2_wins = [0usize; 4];
    for seed in seeds.clone() {
        let pool = generate_candidate_set(10, &CandidateConfig::full(10), seed).unwrap();
        for (k, &n) in runs.iter().enumerate() {
            let config = OptimizerConfig {
                seed,
                ..OptimizerConfig::default()
            };
            let proposed = optimize_design(&pool, n, &config).unwrap();
            let ks = kennard_stone_select(&pool, n).unwrap();
            let p = NearestNeighborProfile::new(proposed.design.rows()).unwrap();
            let b = NearestNeighborProfile::new(ks.rows()).unwrap();
            pm1_wins[k] += usize::from(p.coverage() > b.coverage());
            pm2_wins[k] += usize::from(p.maximin() > b.maximin());
        }
    }
    let majority = seeds.count() / 2 + 1;
    let pm1_cases = pm1_wins.iter().filter(|w| **w >= majority).count();
    let pm2_cases = pm2_wins[1..].iter().filter(|w| **w >= majority).count();
    let pass = pm1_cases == 4 && pm2_cases >= 2;
    let detail = format!(
        "PM1 majority wins {pm1_cases}/4 (per N {pm1_wins:?} of 5), PM2 majority wins {pm2_cases}/3 for N>=100 (per N {:?} of 5)",
        &pm2_wins[1..]
    );
    assert!(report(
        1,
        "space-filling measures vs Kennard-Stone",
        pass,
        &detail,
        start.elapsed(),
        Some(Duration::from_secs(600))
    ));
}

#[test]
fn criterion_2_montecarlo_expectation_proportional_to_criterion() {
    let _g = guard();
    let start = Instant::now();
    let mut r = rng(2024);
    let mut ratios = Vec::new();
    while ratios.len() < 3 {
        let design = random_design(&mut r, 4, 3);
        let coincident = (0..4).any(|i| {
            (i + 1..4).any(|j| (0..3).any(|l| design[i].coords()[l] == design[j].coords()[l]))
        });
        if coincident {
            continue;
        }
        let exact = maxpro_criterion(&design, 0.0).unwrap();
        let mc = montecarlo_maximin_expectation(&design, 6.0, MC_SAMPLES, 7 + ratios.len() as u64).unwrap();
        ratios.push(mc / exact);
    }
    let mut worst: f64 = 0.0;
    for i in 0..3 {
        for j in i + 1..3 {
            worst = worst.max((ratios[i] / ratios[j] - 1.0).abs());
        }
    }
    let pass = worst <= MC_RATIO_TOL;
    let detail = format!("ratios {ratios:.4?}, worst pairwise disagreement {:.2}% (tol 5%)", worst * 100.0);
    assert!(report(
        2,
        "Monte Carlo maximin expectation",
        pass,
        &detail,
        start.elapsed(),
        Some(Duration::from_secs(60))
    ));
}

#[test]
fn criterion_3_optimizer_beats_random_subsets() {
    let _g = guard();
    let start = Instant::now();
    let pool = generate_candidate_set(3, &CandidateConfig::full(3), 0).unwrap();
    let mut wins = 0;
    let mut margins = Vec::new();
    for seed in 0..10u64 {
        let config = OptimizerConfig {
            seed,
            ..OptimizerConfig::default()
        };
        let opt = optimize_design(&pool, 5, &config).unwrap().design.criterion();
        let mut r = rng(1000 + seed);
        let best_random = (0..1000)
            .map(|_| {
                let rows: Vec<SimplexPoint> = sample(&mut r, pool.len(), 5)
                    .into_iter()
                    .map(|i| pool.points()[i].clone())
                    .collect();
                maxpro_criterion(&rows, DEFAULT_DELTA2).unwrap()
            })
            .fold(f64::INFINITY, f64::min);
        wins += usize::from(opt <= best_random);
        margins.push(opt / best_random);
    }
    let detail = format!(
        "{wins}/10 seeds at or below the best of 1000 random subsets; worst ratio {:.3e}",
        margins.iter().cloned().fold(0.0, f64::max)
    );
    assert!(report(
        3,
        "optimizer dominance",
        wins == 10,
        &detail,
        start.elapsed(),
        Some(Duration::from_secs(120))
    ));
}

#[test]
fn criterion_4_gradient_matches_finite_differences() {
    let _g = guard();
    let start = Instant::now();
    let mut r = rng(44);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let inputs = random_inputs(&mut r, 12, 4, 2);
        let y: Vec<f64> = (0..12).map(|_| r.random_range(-1.0..1.0)).collect();
        let lik = Likelihood::new(&inputs, &y).unwrap();
        let params = random_params(&mut r, 2, 1e-4, 1e-1);
        let transform = ParamTransform::new(2, ParamBounds::default(), None);
        let u = transform.from_natural(&params.rho, &params.theta, params.eta);
        let nll = |u: &[f64]| {
            let (rho, theta, eta) = transform.to_natural(u);
            lik.evaluate(&rho, &theta, eta, false).unwrap().nll
        };
        let natural = lik
            .evaluate(&params.rho, &params.theta, params.eta, true)
            .unwrap()
            .gradient
            .unwrap();
        let analytic = transform.chain(&u, &natural);
        for k in 0..u.len() {
            let mut up = u.clone();
            let mut dn = u.clone();
            up[k] += GRAD_FD_STEP;
            dn[k] -= GRAD_FD_STEP;
            let fd = (nll(&up) - nll(&dn)) / (2.0 * GRAD_FD_STEP);
            let err = (analytic[k] - fd).abs() / analytic[k].abs().max(fd.abs()).max(GRAD_ABS_FLOOR);
            worst = worst.max(err);
        }
    }
    let detail = format!("50 instances (N=12, 4 continuous, 2 binary), worst componentwise relative error {worst:.2e}");
    assert!(report(4, "likelihood gradient", worst < GRAD_REL_TOL, &detail, start.elapsed(), None));
}

#[test]
fn criterion_5_interpolation_without_nugget() {
    let _g = guard();
    let start = Instant::now();
    let mut r = rng(5);
    let inputs = random_inputs(&mut r, 20, 2, 1);
    let y: Vec<f64> = inputs
        .iter()
        .map(|w| (6.0 * w.x_cont[0]).sin() * (4.0 * w.x_cont[1]).cos() + 0.5 * w.z_bin[0] as f64)
        .collect();
    let opts = FitOptions {
        fixed_eta: Some(0.0),
        ..FitOptions::default()
    };
    let model = fit(&inputs, &y, &AgpParams::initial(1), &opts).unwrap();
    let tau2 = model.params().tau2;
    let mut worst_mean: f64 = 0.0;
    let mut worst_var: f64 = 0.0;
    for (w, t) in inputs.iter().zip(&y) {
        let p = model.predict(w).unwrap();
        worst_mean = worst_mean.max((p.mean - t).abs());
        worst_var = worst_var.max(p.variance / tau2);
    }
    let pass = model.params().eta == 0.0 && worst_mean < INTERP_TOL && worst_var < INTERP_TOL;
    let detail = format!(
        "eta {}, max |mean - y| {worst_mean:.2e}, max variance / tau2 {worst_var:.2e} (theta {:.3e})",
        model.params().eta,
        model.params().theta[0]
    );
    assert!(report(5, "interpolation at eta = 0", pass, &detail, start.elapsed(), None));
}

#[test]
fn criterion_6_covariance_positive_definite() {
    let _g = guard();
    let start = Instant::now();
    let mut r = rng(6);
    let bounds = ParamBounds::default();
    let mut failures = 0;
    for _ in 0..500 {
        let n = r.random_range(2..=40);
        let p = r.random_range(1..=5);
        let q = r.random_range(1..=3);
        let inputs = random_inputs(&mut r, n, p, q);
        let params = AgpParams {
            rho: (0..q).map(|_| r.random_range(bounds.rho.0..bounds.rho.1)).collect(),
            theta: (0..q).map(|_| log_uniform(&mut r, bounds.theta.0, bounds.theta.1)).collect(),
            eta: log_uniform(&mut r, bounds.eta.0, bounds.eta.1),
            tau2: log_uniform(&mut r, 1e-3, 1e3),
        };
        failures += usize::from(covariance_matrix(&inputs, &params).is_err());
    }
    let detail = format!("{} of 500 random draws factorized", 500 - failures);
    assert!(report(6, "positive definiteness", failures == 0, &detail, start.elapsed(), None));
}

#[test]
fn criterion_7_agp_beats_linear_on_pipeline() {
    let _g = guard();
    let start = Instant::now();
    let mut wins = [0usize; 2];
    let mut lines = Vec::new();
    for seed in 0..5u64 {
        let config = PipelineConfig {
            seed,
            ..PipelineConfig::default()
        };
        let report = run_pipeline(&config, None).unwrap();
        for (k, resp) in Response::ALL.iter().enumerate() {
            let rr = report.get(*resp);
            wins[k] += usize::from(rr.agp_mse < rr.linear_mse);
            lines.push(format!("s{seed} {resp} {:.2e}/{:.2e}", rr.agp_mse, rr.linear_mse));
        }
    }
    let pass = wins.iter().all(|w| *w >= 4);
    let detail = format!(
        "AGP lower on y1 {}/5, y2 {}/5 (agp/linear MSE: {})",
        wins[0],
        wins[1],
        lines.join(", ")
    );
    assert!(report(
        7,
        "surrogate comparison",
        pass,
        &detail,
        start.elapsed(),
        Some(Duration::from_secs(300))
    ));
}

#[test]
fn criterion_8_full_cross_array() {
    let _g = guard();
    let start = Instant::now();
    let pool = generate_candidate_set(10, &CandidateConfig::full(10), 8).unwrap();
    let x = optimize_design(&pool, 50, &OptimizerConfig::default()).unwrap().design.into_rows();
    let specs = default_continuous_factors();
    let z = ContinuousDesign {
        names: specs.iter().map(|f| f.name.clone()).collect(),
        rows: latin_hypercube(&specs, 20, 8, &LhdOptions::default()).unwrap(),
    };
    let cat = CategoricalFactor::new("z4", &["MNIST", "FashionMNIST"]);
    let design = cross_array(&x, &z, &cat, 5, DEFAULT_MAX_RUNS).unwrap();
    let mut ids = std::collections::HashSet::new();
    let mut ordered = true;
    for (k, run) in design.runs.iter().enumerate() {
        ids.insert(run.run_id);
        ordered &= run.run_id == k as u64 + 1
            && run.z_cat == cat.levels[k / 5000]
            && run.z_cont == z.rows[(k / 250) % 20]
            && run.x == x[(k / 5) % 50]
            && run.replicate == k % 5 + 1;
    }
    let pass = design.runs.len() == 10_000 && ids.len() == 10_000 && ordered;
    let detail = format!(
        "{} runs, {} unique run ids, lexicographic (level, z, x, replicate) order {}",
        design.runs.len(),
        ids.len(),
        if ordered { "holds" } else { "violated" }
    );
    assert!(report(8, "cross-array cardinality", pass, &detail, start.elapsed(), None));
}

#[test]
fn criterion_9_oracle_equivalence() {
    let _g = guard();
    let start = Instant::now();
    let mut r = rng(9);
    let mut failures: Vec<String> = Vec::new();
    let mut check = |name: &str, ok: bool| {
        if !ok {
            failures.push(name.to_string());
        }
    };

    for i in 0..ORACLE_INSTANCES {
        let m = r.random_range(2..=5);
        let n = r.random_range(2..=8);
        let design = random_design(&mut r, n, m);
        let delta2 = if i % 2 == 0 { 0.0 } else { DEFAULT_DELTA2 };
        let got = maxpro_criterion(&design, delta2).unwrap();
        check("maxpro", rel_err(got, naive_maxpro(&design, delta2)) <= MAXPRO_REL_TOL);
    }

    for _ in 0..ORACLE_INSTANCES {
        let m = r.random_range(2..=6);
        let n = r.random_range(2..=12);
        let rows: Vec<Vec<f64>> = random_design(&mut r, n, m).into_iter().map(|p| p.into_inner()).collect();
        let pm1 = pm1_coverage(&rows).unwrap();
        let pm2 = pm2_maximin(&rows).unwrap();
        check("pm1", (pm1 - naive_pm1(&rows)).abs() <= PM_TOL * pm1.abs().max(1.0));
        check("pm2", (pm2 - naive_pm2(&rows)).abs() <= PM_TOL * pm2.abs().max(1.0));
    }

    for _ in 0..ORACLE_INSTANCES {
        let pool: Vec<Vec<f64>> = random_design(&mut r, 20, 3).into_iter().map(|p| p.into_inner()).collect();
        check("kennard-stone", kennard_stone_indices(&pool, 5).unwrap() == naive_kennard_stone(&pool, 5));
    }

    for _ in 0..ORACLE_INSTANCES {
        let n = r.random_range(1..=10);
        let q = r.random_range(1..=3);
        let p = r.random_range(1..=4);
        let inputs = random_inputs(&mut r, n, p, q);
        let params = random_params(&mut r, q, 1e-6, 1e-1);
        let got = covariance_matrix(&inputs, &params).unwrap();
        let want = schur_covariance(&inputs, &params);
        check("covariance", (&got - &want).abs().max() <= COV_REL_TOL * want.abs().max());
    }

    for _ in 0..ORACLE_INSTANCES {
        let k = r.random_range(1..=5);
        let rows: Vec<Vec<f64>> = (0..30).map(|_| (0..k).map(|_| r.random::<f64>()).collect()).collect();
        let y: Vec<f64> = (0..30).map(|_| r.random_range(-1.0..1.0)).collect();
        let names: Vec<String> = (0..k).map(|j| format!("w{j}")).collect();
        let got = ols_fit(&rows, &y, &names).unwrap();
        let want = normal_equations(&rows, &y);
        check(
            "ols",
            got.coefficients.iter().zip(&want).all(|(a, b)| (a - b).abs() <= OLS_TOL),
        );
    }

    for _ in 0..ORACLE_INSTANCES {
        let n = r.random_range(3..=8);
        let q = r.random_range(1..=2);
        let inputs = random_inputs(&mut r, n, 3, q);
        let y: Vec<f64> = (0..n).map(|_| r.random_range(0.0..1.0)).collect();
        let offset = y.iter().sum::<f64>() / n as f64;
        let params = random_params(&mut r, q, 1e-3, 1e-1);
        let model = AgpModel::with_params(inputs.clone(), &y, offset, params.clone()).unwrap();
        let w = random_inputs(&mut r, 1, 3, q).pop().unwrap();
        let p = model.predict(&w).unwrap();
        let (mean, var) = dense_predict(&inputs, &y, offset, &params, &w);
        let scale = params.prior_variance();
        check(
            "predict",
            (p.mean - mean).abs() <= PREDICT_TOL * mean.abs().max(1.0)
                && (p.variance - var.max(0.0)).abs() <= PREDICT_TOL * scale,
        );
    }

    failures.dedup();
    let detail = if failures.is_empty() {
        format!("{ORACLE_INSTANCES} random instances each for maxpro, pm1/pm2, kennard-stone, covariance, ols, predict")
    } else {
        format!("mismatches in {failures:?}")
    };
    assert!(report(9, "oracle equivalence", failures.is_empty(), &detail, start.elapsed(), None));
}
