//! Box-constrained BFGS with a projected Armijo backtracking line search.

#[derive(Clone, Debug, PartialEq)]
pub struct BfgsOptions {
    pub max_iters: usize,
    /// Stop once the projected gradient's infinity norm falls below this.
    pub grad_tol: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BfgsTermination {
    GradientTolerance,
    MaxIterations,
    /// The line search could not decrease the objective further.
    Stalled,
}

#[derive(Clone, Debug)]
pub struct BfgsOutcome {
    pub x: Vec<f64>,
    pub f: f64,
    pub grad: Vec<f64>,
    pub grad_norm: f64,
    pub iterations: usize,
    pub termination: BfgsTermination,
}

const ARMIJO_C: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 40;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Zeroes gradient components that push against an active bound.
fn projected_gradient(x: &[f64], g: &[f64], lo: &[f64], hi: &[f64]) -> Vec<f64> {
    x.iter()
        .zip(g)
        .zip(lo.iter().zip(hi))
        .map(|((xi, gi), (l, h))| {
            if (*xi <= *l && *gi > 0.0) || (*xi >= *h && *gi < 0.0) {
                0.0
            } else {
                *gi
            }
        })
        .collect()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Minimizes `objective` from `x0`. The objective returns `None` where it is
/// undefined; the line search treats such points as rejected steps. Returns
/// `None` only when the starting point itself is undefined.
pub fn minimize<F>(mut objective: F, x0: &[f64], opts: &BfgsOptions) -> Option<BfgsOutcome>
where
    F: FnMut(&[f64]) -> Option<(f64, Vec<f64>)>,
{
    let n = x0.len();
    let (lo, hi) = (&opts.lower, &opts.upper);
    let clamp = |v: Vec<f64>| -> Vec<f64> {
        v.into_iter()
            .zip(lo.iter().zip(hi))
            .map(|(x, (l, h))| x.clamp(*l, *h))
            .collect()
    };

    let mut x = clamp(x0.to_vec());
    let (mut f, mut g) = objective(&x)?;
    if !f.is_finite() {
        return None;
    }
    let mut h = identity(n);
    let mut fresh_hessian = true;
    let mut iterations = 0;

    let termination = loop {
        let pg = projected_gradient(&x, &g, lo, hi);
        if inf_norm(&pg) <= opts.grad_tol {
            break BfgsTermination::GradientTolerance;
        }
        if iterations >= opts.max_iters {
            break BfgsTermination::MaxIterations;
        }
        iterations += 1;

        let mut direction: Vec<f64> = (0..n).map(|i| -dot(&h[i], &pg)).collect();
        for i in 0..n {
            if pg[i] == 0.0 {
                direction[i] = 0.0;
            }
        }
        if dot(&direction, &pg) >= 0.0 {
            h = identity(n);
            fresh_hessian = true;
            direction = pg.iter().map(|v| -v).collect();
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let trial = clamp(x.iter().zip(&direction).map(|(a, d)| a + step * d).collect());
            let moved: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
            if moved.iter().all(|v| *v == 0.0) {
                break;
            }
            if let Some((ft, gt)) = objective(&trial) {
                if ft.is_finite() && ft <= f + ARMIJO_C * dot(&g, &moved) {
                    accepted = Some((trial, ft, gt, moved));
                    break;
                }
            }
            step *= 0.5;
        }

        let Some((x_new, f_new, g_new, s)) = accepted else {
            if fresh_hessian {
                break BfgsTermination::Stalled;
            }
            h = identity(n);
            fresh_hessian = true;
            continue;
        };

        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if fresh_hessian {
                let scale = sy / dot(&y, &y);
                h = identity(n);
                h.iter_mut().enumerate().for_each(|(i, row)| row[i] = scale);
            }
            bfgs_update(&mut h, &s, &y, sy);
            fresh_hessian = false;
        }

        let decrease = f - f_new;
        x = x_new;
        f = f_new;
        g = g_new;
        if decrease <= 1e-14 * f.abs().max(1.0) {
            let pg = projected_gradient(&x, &g, lo, hi);
            if inf_norm(&pg) <= opts.grad_tol {
                break BfgsTermination::GradientTolerance;
            }
            break BfgsTermination::Stalled;
        }
    };

    let grad_norm = inf_norm(&projected_gradient(&x, &g, lo, hi));
    Some(BfgsOutcome {
        x,
        f,
        grad: g,
        grad_norm,
        iterations,
        termination,
    })
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

/// Inverse-Hessian update `H <- (I - r s y') H (I - r y s') + r s s'`.
fn bfgs_update(h: &mut [Vec<f64>], s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    let r = 1.0 / sy;
    let hy: Vec<f64> = (0..n).map(|i| dot(&h[i], y)).collect();
    let yhy = dot(y, &hy);
    for i in 0..n {
        for j in 0..n {
            h[i][j] += -r * (s[i] * hy[j] + hy[i] * s[j]) + (r * r * yhy + r) * s[i] * s[j];
        }
    }
}
