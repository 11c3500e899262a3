use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::likelihood::Likelihood;
use super::{check_inputs, cholesky, covariance, covariance_matrix, AgpParams, MixedInput, ParamBounds};
use crate::error::{Error, Result};
use crate::optim::{self, BfgsOptions, BfgsTermination};
use crate::seeded_rng;

/// Nugget floor used when a factorization fails and the fit is retried.
const JITTER_ETA: f64 = 1e-6;
/// Largest negative rounding tolerated in a predictive variance, relative to
/// the prior variance, before it is clamped to zero.
const VARIANCE_ROUNDING: f64 = 1e-10;

/// Maps optimizer coordinates to `(rho, theta, eta)`: a scaled logistic for
/// each `rho_h` onto its bounds, `log` for `theta_h` and `eta`.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamTransform {
    q: usize,
    bounds: ParamBounds,
    fixed_eta: Option<f64>,
}

impl ParamTransform {
    pub fn new(q: usize, bounds: ParamBounds, fixed_eta: Option<f64>) -> Self {
        ParamTransform { q, bounds, fixed_eta }
    }

    pub fn dim(&self) -> usize {
        2 * self.q + usize::from(self.fixed_eta.is_none())
    }

    fn sigmoid(u: f64) -> f64 {
        1.0 / (1.0 + (-u).exp())
    }

    pub fn to_natural(&self, u: &[f64]) -> (Vec<f64>, Vec<f64>, f64) {
        let (lo, hi) = self.bounds.rho;
        let rho = u[..self.q].iter().map(|v| lo + (hi - lo) * Self::sigmoid(*v)).collect();
        let theta = u[self.q..2 * self.q].iter().map(|v| v.exp()).collect();
        let eta = self.fixed_eta.unwrap_or_else(|| u[2 * self.q].exp());
        (rho, theta, eta)
    }

    pub fn from_natural(&self, rho: &[f64], theta: &[f64], eta: f64) -> Vec<f64> {
        let (lo, hi) = self.bounds.rho;
        let mut u: Vec<f64> = rho
            .iter()
            .map(|r| {
                let p = ((r - lo) / (hi - lo)).clamp(1e-12, 1.0 - 1e-12);
                (p / (1.0 - p)).ln()
            })
            .collect();
        u.extend(theta.iter().map(|t| t.ln()));
        if self.fixed_eta.is_none() {
            u.push(eta.max(f64::MIN_POSITIVE).ln());
        }
        u
    }

    /// Chain rule: turns a natural-parameter gradient (length `2q + 1`)
    /// into one over the optimizer coordinates.
    pub fn chain(&self, u: &[f64], natural_grad: &[f64]) -> Vec<f64> {
        let (lo, hi) = self.bounds.rho;
        let (_, theta, eta) = self.to_natural(u);
        let mut g: Vec<f64> = (0..self.q)
            .map(|h| {
                let s = Self::sigmoid(u[h]);
                natural_grad[h] * (hi - lo) * s * (1.0 - s)
            })
            .collect();
        g.extend((0..self.q).map(|h| natural_grad[self.q + h] * theta[h]));
        if self.fixed_eta.is_none() {
            g.push(natural_grad[2 * self.q] * eta);
        }
        g
    }

    fn box_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        // The logistic already confines rho; the box only keeps it away
        // from saturation.
        let mut lower = vec![-30.0; self.q];
        let mut upper = vec![30.0; self.q];
        lower.extend(std::iter::repeat_n(self.bounds.theta.0.ln(), self.q));
        upper.extend(std::iter::repeat_n(self.bounds.theta.1.ln(), self.q));
        if self.fixed_eta.is_none() {
            lower.push(self.bounds.eta.0.ln());
            upper.push(self.bounds.eta.1.ln());
        }
        (lower, upper)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub max_iters: usize,
    pub grad_tol: f64,
    pub bounds: ParamBounds,
    /// Number of starting points; the first is the caller's `init`, the rest
    /// are drawn from `seed`.
    pub restarts: usize,
    pub seed: u64,
    /// Holds the nugget fixed instead of estimating it.
    pub fixed_eta: Option<f64>,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iters: 200,
            grad_tol: 1e-5,
            bounds: ParamBounds::default(),
            restarts: 5,
            seed: 0,
            fixed_eta: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitTermination {
    GradientTolerance,
    MaxIterations,
    Stalled,
    /// Centered responses are all zero; parameters were left at `init`.
    ConstantResponse,
    /// Parameters supplied directly rather than estimated.
    Fixed,
}

impl From<BfgsTermination> for FitTermination {
    fn from(t: BfgsTermination) -> Self {
        match t {
            BfgsTermination::GradientTolerance => FitTermination::GradientTolerance,
            BfgsTermination::MaxIterations => FitTermination::MaxIterations,
            BfgsTermination::Stalled => FitTermination::Stalled,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    /// NLL at the winning start; `None` when nothing was estimated.
    pub initial_nll: Option<f64>,
    pub nll: Option<f64>,
    pub iterations: usize,
    pub grad_norm: Option<f64>,
    pub termination: FitTermination,
    /// Index of the winning start.
    pub restart: usize,
    /// NLL reached from every start (`None` where the start was not
    /// positive definite).
    pub restart_nlls: Vec<Option<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PredictiveDistribution {
    pub mean: f64,
    pub variance: f64,
}

/// A fitted additive process with a cached factorization of the training
/// covariance.
#[derive(Clone, Debug, PartialEq)]
pub struct AgpModel {
    params: AgpParams,
    inputs: Vec<MixedInput>,
    y_centered: Vec<f64>,
    y_offset: f64,
    report: FitReport,
    chol: DMatrix<f64>,
    alpha: DVector<f64>,
}

impl AgpModel {
    /// Builds a model for fixed parameters, centering `y` by `y_offset`.
    pub fn with_params(inputs: Vec<MixedInput>, y: &[f64], y_offset: f64, params: AgpParams) -> Result<Self> {
        let report = FitReport {
            initial_nll: None,
            nll: None,
            iterations: 0,
            grad_norm: None,
            termination: FitTermination::Fixed,
            restart: 0,
            restart_nlls: Vec::new(),
        };
        Self::assemble(inputs, y.iter().map(|v| v - y_offset).collect(), y_offset, params, report)
    }

    /// Rebuilds a model from its persisted parts; the factorization is
    /// recomputed.
    pub fn from_parts(
        params: AgpParams,
        inputs: Vec<MixedInput>,
        y_centered: Vec<f64>,
        y_offset: f64,
        report: FitReport,
    ) -> Result<Self> {
        Self::assemble(inputs, y_centered, y_offset, params, report)
    }

    fn assemble(
        inputs: Vec<MixedInput>,
        y_centered: Vec<f64>,
        y_offset: f64,
        params: AgpParams,
        report: FitReport,
    ) -> Result<Self> {
        if inputs.len() != y_centered.len() {
            return Err(Error::param(format!(
                "{} inputs but {} responses",
                inputs.len(),
                y_centered.len()
            )));
        }
        let sigma = covariance_matrix(&inputs, &params)?;
        let chol = cholesky(&sigma)?;
        let y = DVector::from_column_slice(&y_centered);
        let z = chol.solve_lower_triangular(&y).expect("positive diagonal");
        let alpha = chol.tr_solve_lower_triangular(&z).expect("positive diagonal");
        Ok(AgpModel {
            params,
            inputs,
            y_centered,
            y_offset,
            report,
            chol,
            alpha,
        })
    }

    pub fn params(&self) -> &AgpParams {
        &self.params
    }

    pub fn inputs(&self) -> &[MixedInput] {
        &self.inputs
    }

    pub fn y_centered(&self) -> &[f64] {
        &self.y_centered
    }

    pub fn y_offset(&self) -> f64 {
        self.y_offset
    }

    pub fn report(&self) -> &FitReport {
        &self.report
    }

    /// Lower Cholesky factor of the training covariance.
    pub fn factor(&self) -> &DMatrix<f64> {
        &self.chol
    }

    /// Conditional mean and variance at `w`.
    pub fn predict(&self, w: &MixedInput) -> Result<PredictiveDistribution> {
        let first = &self.inputs[0];
        if w.x_cont.len() != first.x_cont.len() || w.z_bin.len() != first.z_bin.len() {
            return Err(Error::param(format!(
                "prediction point has {} continuous and {} binary covariates, model expects {} and {}",
                w.x_cont.len(),
                w.z_bin.len(),
                first.x_cont.len(),
                first.z_bin.len()
            )));
        }
        let k = DVector::from_iterator(
            self.inputs.len(),
            self.inputs.iter().map(|wi| covariance(w, wi, &self.params, false)),
        );
        let mean = self.y_offset + k.dot(&self.alpha);
        let v = self.chol.solve_lower_triangular(&k).expect("positive diagonal");
        let prior = self.params.prior_variance();
        let mut variance = prior - v.dot(&v);
        if variance < 0.0 {
            if variance < -VARIANCE_ROUNDING * prior.max(1.0) {
                return Err(Error::Conditioning {
                    index: 0,
                    pivot: variance,
                });
            }
            variance = 0.0;
        }
        Ok(PredictiveDistribution { mean, variance })
    }
}

fn random_start(rng: &mut impl Rng, q: usize, fixed_eta: Option<f64>, bounds: &ParamBounds) -> AgpParams {
    let log_uniform = |rng: &mut dyn rand::RngCore, lo: f64, hi: f64| -> f64 {
        (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp()
    };
    let rho = (0..q).map(|_| rng.random_range(0.1..0.9)).collect();
    let theta = (0..q)
        .map(|_| log_uniform(rng, 0.1f64.max(bounds.theta.0), 10.0f64.min(bounds.theta.1)))
        .collect();
    let eta = fixed_eta.unwrap_or_else(|| log_uniform(rng, 1e-6f64.max(bounds.eta.0), 1e-1f64.min(bounds.eta.1)));
    AgpParams {
        rho,
        theta,
        eta,
        tau2: 1.0,
    }
}

struct StartResult {
    u: Vec<f64>,
    initial_nll: f64,
    nll: f64,
    iterations: usize,
    grad_norm: f64,
    termination: FitTermination,
}

fn run_start(lik: &Likelihood, transform: &ParamTransform, start: &AgpParams, opts: &FitOptions) -> Option<StartResult> {
    let objective = |u: &[f64]| -> Option<(f64, Vec<f64>)> {
        let (rho, theta, eta) = transform.to_natural(u);
        let v = lik.evaluate(&rho, &theta, eta, true).ok()?;
        let g = transform.chain(u, v.gradient.as_ref()?);
        Some((v.nll, g))
    };
    let (lower, upper) = transform.box_bounds();
    let bfgs = BfgsOptions {
        max_iters: opts.max_iters,
        grad_tol: opts.grad_tol,
        lower,
        upper,
    };
    let u = transform.from_natural(&start.rho, &start.theta, start.eta);
    let initial_nll = objective(&u)?.0;
    let out = optim::minimize(&objective, &u, &bfgs)?;
    Some(StartResult {
        u: out.x,
        initial_nll,
        nll: out.f,
        iterations: out.iterations,
        grad_norm: out.grad_norm,
        termination: out.termination.into(),
    })
}

/// Profile maximum-likelihood fit with multiple starts; the lowest NLL wins
/// (ties to the earliest start). Responses are centered by their mean.
pub fn fit(inputs: &[MixedInput], y: &[f64], init: &AgpParams, opts: &FitOptions) -> Result<AgpModel> {
    if inputs.len() < 2 {
        return Err(Error::param(format!("need at least 2 training points, got {}", inputs.len())));
    }
    init.validate()?;
    check_inputs(inputs, init.q())?;
    if opts.restarts == 0 {
        return Err(Error::param("at least one start is required"));
    }
    let offset = y.iter().sum::<f64>() / y.len() as f64;
    let centered: Vec<f64> = y.iter().map(|v| v - offset).collect();
    let lik = Likelihood::new(inputs, &centered)?;

    let spread = centered.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if spread <= 1e-14 * offset.abs().max(1.0) {
        let mut params = init.clone();
        params.tau2 = f64::EPSILON;
        if let Some(eta) = opts.fixed_eta {
            params.eta = eta;
        }
        let report = FitReport {
            initial_nll: None,
            nll: None,
            iterations: 0,
            grad_norm: None,
            termination: FitTermination::ConstantResponse,
            restart: 0,
            restart_nlls: Vec::new(),
        };
        return with_jitter(inputs, centered, offset, params, report);
    }

    match fit_starts(&lik, inputs, &centered, offset, init, opts) {
        Err(Error::Conditioning { .. }) => {
            let mut retry = opts.clone();
            retry.bounds.eta.0 = retry.bounds.eta.0.max(JITTER_ETA);
            retry.fixed_eta = retry.fixed_eta.map(|e| e.max(JITTER_ETA));
            let mut init = init.clone();
            init.eta = init.eta.max(JITTER_ETA);
            fit_starts(&lik, inputs, &centered, offset, &init, &retry)
        }
        other => other,
    }
}

fn fit_starts(
    lik: &Likelihood,
    inputs: &[MixedInput],
    centered: &[f64],
    offset: f64,
    init: &AgpParams,
    opts: &FitOptions,
) -> Result<AgpModel> {
    let q = init.q();
    let transform = ParamTransform::new(q, opts.bounds.clone(), opts.fixed_eta);
    let mut rng = seeded_rng(opts.seed);
    let mut starts = vec![init.clone()];
    if let Some(eta) = opts.fixed_eta {
        starts[0].eta = eta;
    }
    for _ in 1..opts.restarts {
        starts.push(random_start(&mut rng, q, opts.fixed_eta, &opts.bounds));
    }

    let results: Vec<Option<StartResult>> = starts.iter().map(|s| run_start(lik, &transform, s, opts)).collect();
    let best = results
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.as_ref().map(|r| (i, r)))
        .fold(None::<(usize, &StartResult)>, |acc, (i, r)| match acc {
            Some((_, b)) if b.nll <= r.nll => acc,
            _ => Some((i, r)),
        });
    let Some((restart, best)) = best else {
        // Report the first start's failing pivot.
        let s = &starts[0];
        lik.evaluate(&s.rho, &s.theta, s.eta, false)?;
        return Err(Error::Conditioning {
            index: 0,
            pivot: f64::NAN,
        });
    };

    let (rho, theta, eta) = transform.to_natural(&best.u);
    let tau2 = lik.evaluate(&rho, &theta, eta, false)?.tau2;
    let params = AgpParams { rho, theta, eta, tau2 };
    let report = FitReport {
        initial_nll: Some(best.initial_nll),
        nll: Some(best.nll),
        iterations: best.iterations,
        grad_norm: Some(best.grad_norm),
        termination: best.termination,
        restart,
        restart_nlls: results.iter().map(|r| r.as_ref().map(|r| r.nll)).collect(),
    };
    AgpModel::from_parts(params, inputs.to_vec(), centered.to_vec(), offset, report)
}

fn with_jitter(
    inputs: &[MixedInput],
    centered: Vec<f64>,
    offset: f64,
    params: AgpParams,
    report: FitReport,
) -> Result<AgpModel> {
    match AgpModel::from_parts(params.clone(), inputs.to_vec(), centered.clone(), offset, report.clone()) {
        Err(Error::Conditioning { .. }) => {
            let mut params = params;
            params.eta = params.eta.max(JITTER_ETA);
            AgpModel::from_parts(params, inputs.to_vec(), centered, offset, report)
        }
        other => other,
    }
}
