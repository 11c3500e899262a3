//! The simplex-constrained MaxPro criterion and the exchange/refinement
//! optimizer that minimizes it over a candidate pool.
//!
//! The criterion is `sum_{i<j} prod_l 1 / ((x_il - x_jl)^2 + delta2)`. The
//! regularizer `delta2` keeps the value finite for designs that share a
//! coordinate value (every centroid candidate has zeros), with `delta2 = 0`
//! giving the raw criterion, which is `+inf` for such designs.

use rand::seq::{index, SliceRandom};
use rand_distr::{Distribution, Exp1};

use crate::error::{Error, Result};
use crate::seeded_rng;
use crate::simplex::{project_onto_simplex, CandidateSet, SimplexPoint};

pub const DEFAULT_DELTA2: f64 = 1e-6;

fn pair_term(a: &[f64], b: &[f64], delta2: f64) -> f64 {
    let prod: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d + delta2
        })
        .product();
    if prod == 0.0 {
        f64::INFINITY
    } else {
        1.0 / prod
    }
}

fn check_rows(rows: &[SimplexPoint], min_rows: usize) -> Result<usize> {
    if rows.len() < min_rows {
        return Err(Error::param(format!(
            "design needs at least {min_rows} rows, got {}",
            rows.len()
        )));
    }
    let m = rows[0].dim();
    if let Some(r) = rows.iter().find(|r| r.dim() != m) {
        return Err(Error::param(format!(
            "row of dimension {} in a design of dimension {m}",
            r.dim()
        )));
    }
    Ok(m)
}

/// `sum_{i<j} prod_l 1/((x_il - x_jl)^2 + delta2)`; `+inf` (not an error)
/// when `delta2 = 0` and two rows share a coordinate value.
pub fn maxpro_criterion(rows: &[SimplexPoint], delta2: f64) -> Result<f64> {
    check_rows(rows, 2)?;
    let mut total = 0.0;
    for (i, a) in rows.iter().enumerate() {
        for b in &rows[i + 1..] {
            total += pair_term(a.coords(), b.coords(), delta2);
        }
    }
    Ok(total)
}

/// Sum of the pair terms involving row `i`. Summed over all rows this is
/// twice the criterion.
pub fn row_contribution(rows: &[SimplexPoint], i: usize, delta2: f64) -> Result<f64> {
    check_rows(rows, 2)?;
    if i >= rows.len() {
        return Err(Error::param(format!(
            "row index {i} out of range for {} rows",
            rows.len()
        )));
    }
    Ok(contribution_of(rows[i].coords(), rows, i, delta2))
}

/// Contribution of `point` if it were placed at row `skip`.
fn contribution_of(point: &[f64], rows: &[SimplexPoint], skip: usize, delta2: f64) -> f64 {
    rows.iter()
        .enumerate()
        .filter(|(j, _)| *j != skip)
        .map(|(_, r)| pair_term(point, r.coords(), delta2))
        .sum()
}

/// Gradient of [`contribution_of`] with respect to `point`.
fn contribution_gradient(point: &[f64], rows: &[SimplexPoint], skip: usize, delta2: f64) -> Vec<f64> {
    let mut grad = vec![0.0; point.len()];
    for (j, r) in rows.iter().enumerate() {
        if j == skip {
            continue;
        }
        let term = pair_term(point, r.coords(), delta2);
        for (l, (x, y)) in point.iter().zip(r.coords()).enumerate() {
            let d = x - y;
            grad[l] -= term * 2.0 * d / (d * d + delta2);
        }
    }
    grad
}

/// Inner continuous optimizer for a single row.
#[derive(Clone, Debug, PartialEq)]
pub struct InnerOptConfig {
    pub max_iters: usize,
    /// First trial step length along the unit descent direction.
    pub initial_step: f64,
    /// Backtracking stops below this step length.
    pub min_step: f64,
    /// Stop once an iteration improves the contribution by less than this
    /// relative amount.
    pub rel_tol: f64,
}

impl Default for InnerOptConfig {
    fn default() -> Self {
        InnerOptConfig {
            max_iters: 200,
            initial_step: 0.1,
            min_step: 1e-14,
            rel_tol: 1e-12,
        }
    }
}

/// Projected-gradient descent on row `i` alone, with backtracking. Only
/// strict decreases are accepted, so the returned point never increases the
/// criterion.
pub fn refine_row(
    rows: &[SimplexPoint],
    i: usize,
    delta2: f64,
    inner: &InnerOptConfig,
) -> Result<SimplexPoint> {
    let start = row_contribution(rows, i, delta2)?;
    if !start.is_finite() {
        return Err(Error::degenerate(format!(
            "row {i} has infinite contribution; refinement needs a finite criterion"
        )));
    }

    let mut x = rows[i].coords().to_vec();
    let mut fx = start;
    let mut step = inner.initial_step;
    for _ in 0..inner.max_iters {
        let mut g = contribution_gradient(&x, rows, i, delta2);
        // Moving along (1, ..., 1) leaves the simplex; drop that component.
        let mean = g.iter().sum::<f64>() / g.len() as f64;
        g.iter_mut().for_each(|v| *v -= mean);
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            break;
        }

        let mut accepted = None;
        while step >= inner.min_step {
            let trial: Vec<f64> = x.iter().zip(&g).map(|(a, d)| a - step * d / norm).collect();
            let y = project_onto_simplex(&trial);
            let fy = contribution_of(&y, rows, i, delta2);
            if fy < fx {
                accepted = Some((y, fy));
                break;
            }
            step *= 0.5;
        }
        let Some((y, fy)) = accepted else { break };
        let gain = (fx - fy) / fx;
        x = y;
        fx = fy;
        step = (step * 2.0).min(1.0);
        if gain < inner.rel_tol {
            break;
        }
    }
    Ok(SimplexPoint::from_raw(x))
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerConfig {
    /// Budget of non-improving exchange attempts (`t`).
    pub max_redundant_iters: usize,
    /// Relative criterion change after a refinement below which the search
    /// stops (`epsilon`).
    pub convergence_tol: f64,
    pub delta2: f64,
    pub inner: InnerOptConfig,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            max_redundant_iters: 10_000,
            convergence_tol: 1e-8,
            delta2: DEFAULT_DELTA2,
            inner: InnerOptConfig::default(),
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    fn validate(&self) -> Result<()> {
        if self.max_redundant_iters == 0 {
            return Err(Error::param("redundant iteration budget must be at least 1"));
        }
        if !(self.convergence_tol > 0.0) {
            return Err(Error::param("convergence tolerance must be positive"));
        }
        if !(self.delta2 >= 0.0) || !self.delta2.is_finite() {
            return Err(Error::param("delta2 must be finite and nonnegative"));
        }
        Ok(())
    }
}

/// An `N`-row design on the simplex together with its criterion value.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstrainedDesign {
    rows: Vec<SimplexPoint>,
    criterion: f64,
    delta2: f64,
}

impl ConstrainedDesign {
    pub fn new(rows: Vec<SimplexPoint>, delta2: f64) -> Result<Self> {
        let criterion = maxpro_criterion(&rows, delta2)?;
        Ok(ConstrainedDesign {
            rows,
            criterion,
            delta2,
        })
    }

    pub fn rows(&self) -> &[SimplexPoint] {
        &self.rows
    }

    pub fn criterion(&self) -> f64 {
        self.criterion
    }

    pub fn delta2(&self) -> f64 {
        self.delta2
    }

    pub fn dim(&self) -> usize {
        self.rows[0].dim()
    }

    pub fn into_rows(self) -> Vec<SimplexPoint> {
        self.rows
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TraceAction {
    Init,
    Exchange,
    Refine,
}

impl TraceAction {
    pub fn as_str(self) -> &'static str {
        match self {
            TraceAction::Init => "init",
            TraceAction::Exchange => "exchange",
            TraceAction::Refine => "refine",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [TraceAction::Init, TraceAction::Exchange, TraceAction::Refine]
            .into_iter()
            .find(|a| a.as_str() == s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceEntry {
    pub step: usize,
    pub action: TraceAction,
    pub criterion: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    /// A refinement changed the criterion by less than the tolerance.
    Converged,
    /// The non-improving attempt budget ran out.
    BudgetExhausted,
    /// No row could be improved by any candidate.
    LocalOptimum,
}

#[derive(Clone, Debug)]
pub struct Optimized {
    pub design: ConstrainedDesign,
    pub trace: Vec<TraceEntry>,
    pub termination: Termination,
    pub failed_attempts: usize,
}

/// Pair-term matrix with cached row sums; row sums are recomputed from
/// scratch after each change since the terms span dozens of orders of
/// magnitude.
struct PairCache {
    terms: Vec<f64>,
    contributions: Vec<f64>,
    n: usize,
}

impl PairCache {
    fn new(rows: &[SimplexPoint], delta2: f64) -> Self {
        let n = rows.len();
        let mut terms = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let t = pair_term(rows[i].coords(), rows[j].coords(), delta2);
                terms[i * n + j] = t;
                terms[j * n + i] = t;
            }
        }
        let mut cache = PairCache {
            terms,
            contributions: vec![0.0; n],
            n,
        };
        cache.resum();
        cache
    }

    fn resum(&mut self) {
        for i in 0..self.n {
            self.contributions[i] = self.terms[i * self.n..(i + 1) * self.n].iter().sum();
        }
    }

    fn replace_row(&mut self, rows: &[SimplexPoint], i: usize, delta2: f64) {
        for j in 0..self.n {
            if j != i {
                let t = pair_term(rows[i].coords(), rows[j].coords(), delta2);
                self.terms[i * self.n + j] = t;
                self.terms[j * self.n + i] = t;
            }
        }
        self.resum();
    }

    fn criterion(&self) -> f64 {
        self.contributions.iter().sum::<f64>() / 2.0
    }

    /// Row indices by decreasing contribution, ties to the lower index.
    fn worst_first(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.n).collect();
        order.sort_by(|&a, &b| {
            self.contributions[b]
                .total_cmp(&self.contributions[a])
                .then(a.cmp(&b))
        });
        order
    }
}

/// Coordinate exchange against the pool followed by single-row continuous
/// refinement.
///
/// Starting from a seeded random `N`-subset of the pool, the row with the
/// largest contribution is offered each candidate in a freshly shuffled
/// order. The first candidate that lowers the criterion is swapped in, the
/// row is refined, and the search restarts from the new worst row. A row
/// that no candidate improves passes the turn to the next worst row. Every
/// non-improving attempt is charged against `max_redundant_iters`.
pub fn optimize_design(candidates: &CandidateSet, n: usize, config: &OptimizerConfig) -> Result<Optimized> {
    config.validate()?;
    if n < 2 {
        return Err(Error::param(format!("design needs at least 2 runs, got {n}")));
    }
    if candidates.len() < n {
        return Err(Error::param(format!(
            "candidate pool has {} points, fewer than the {n} runs requested",
            candidates.len()
        )));
    }
    let delta2 = config.delta2;
    let pool = candidates.points();
    let mut rng = seeded_rng(config.seed);

    let mut rows: Vec<SimplexPoint> = index::sample(&mut rng, pool.len(), n)
        .into_iter()
        .map(|k| pool[k].clone())
        .collect();
    let mut cache = PairCache::new(&rows, delta2);
    let mut criterion = cache.criterion();
    let mut trace = vec![TraceEntry {
        step: 0,
        action: TraceAction::Init,
        criterion,
    }];

    let mut order: Vec<usize> = (0..pool.len()).collect();
    let mut failed = 0usize;
    let termination = 'search: loop {
        order.shuffle(&mut rng);
        for row in cache.worst_first() {
            let current = cache.contributions[row];
            for &k in &order {
                let proposal = contribution_of(pool[k].coords(), &rows, row, delta2);
                if !(proposal < current) {
                    failed += 1;
                    if failed >= config.max_redundant_iters {
                        break 'search Termination::BudgetExhausted;
                    }
                    continue;
                }

                rows[row] = pool[k].clone();
                cache.replace_row(&rows, row, delta2);
                let exchanged = cache.criterion();
                trace.push(TraceEntry {
                    step: trace.len(),
                    action: TraceAction::Exchange,
                    criterion: exchanged,
                });

                if exchanged.is_finite() {
                    rows[row] = refine_row(&rows, row, delta2, &config.inner)?;
                    cache.replace_row(&rows, row, delta2);
                }
                let refined = cache.criterion();
                trace.push(TraceEntry {
                    step: trace.len(),
                    action: TraceAction::Refine,
                    criterion: refined,
                });

                let change = (criterion - refined).abs();
                let converged = criterion.is_finite() && change < config.convergence_tol * criterion;
                criterion = refined;
                if converged {
                    break 'search Termination::Converged;
                }
                continue 'search;
            }
        }
        break Termination::LocalOptimum;
    };

    Ok(Optimized {
        design: ConstrainedDesign::new(rows, delta2)?,
        trace,
        termination,
        failed_attempts: failed,
    })
}

/// Monte Carlo estimate of `E_theta[ sum_{i<j} (sum_l theta_l d_ijl)^(-p/2) ]`
/// with `theta` uniform on the simplex and `d_ijl = (x_il - x_jl)^2`.
///
/// With `p = 2m` the expectation equals the `delta2 = 0` MaxPro criterion
/// (the proportionality constant is exactly one).
pub fn montecarlo_maximin_expectation(rows: &[SimplexPoint], p: f64, samples: usize, seed: u64) -> Result<f64> {
    let m = check_rows(rows, 2)?;
    if !(p > 0.0) {
        return Err(Error::param(format!("exponent must be positive, got {p}")));
    }
    if samples == 0 {
        return Err(Error::param("at least one Monte Carlo sample is required"));
    }
    let mut sq_diffs = Vec::new();
    for (i, a) in rows.iter().enumerate() {
        for (j, b) in rows.iter().enumerate().skip(i + 1) {
            let d: Vec<f64> = a
                .coords()
                .iter()
                .zip(b.coords())
                .map(|(x, y)| (x - y) * (x - y))
                .collect();
            if d.iter().all(|v| *v == 0.0) {
                return Err(Error::degenerate(format!("rows {i} and {j} coincide")));
            }
            sq_diffs.push(d);
        }
    }

    let mut rng = seeded_rng(seed);
    let mut theta = vec![0.0; m];
    let half_p = p / 2.0;
    let mut total = 0.0;
    for _ in 0..samples {
        // Normalized unit exponentials are uniform on the simplex.
        let mut sum = 0.0;
        for t in theta.iter_mut() {
            *t = Exp1.sample(&mut rng);
            sum += *t;
        }
        theta.iter_mut().for_each(|t| *t /= sum);
        total += sq_diffs
            .iter()
            .map(|d| {
                let s: f64 = theta.iter().zip(d).map(|(t, v)| t * v).sum();
                s.powf(-half_p)
            })
            .sum::<f64>();
    }
    Ok(total / samples as f64)
}
