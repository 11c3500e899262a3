//! Space-filling quality measures built on nearest-neighbor distances, and
//! the Kennard-Stone selector used as the benchmark design.

use crate::error::{Error, Result};
use crate::maxpro::{ConstrainedDesign, DEFAULT_DELTA2};
use crate::simplex::CandidateSet;

const TIE_TOL: f64 = 1e-12;

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest-neighbor distances `d_i = min_{j != i} ||x_i - x_j||` and their mean.
#[derive(Clone, Debug, PartialEq)]
pub struct NearestNeighborProfile {
    pub d: Vec<f64>,
    pub d_bar: f64,
}

impl NearestNeighborProfile {
    pub fn new<P: AsRef<[f64]>>(rows: &[P]) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::param(format!(
                "nearest-neighbor profile needs at least 2 rows, got {}",
                rows.len()
            )));
        }
        let n = rows.len();
        let mut best = vec![f64::INFINITY; n];
        for i in 0..n {
            for j in i + 1..n {
                let d2 = sq_dist(rows[i].as_ref(), rows[j].as_ref());
                if d2 == 0.0 {
                    return Err(Error::degenerate(format!("rows {i} and {j} are identical")));
                }
                best[i] = best[i].min(d2);
                best[j] = best[j].min(d2);
            }
        }
        let d: Vec<f64> = best.into_iter().map(f64::sqrt).collect();
        let d_bar = d.iter().sum::<f64>() / n as f64;
        Ok(NearestNeighborProfile { d, d_bar })
    }

    /// `(1/d_bar) * sum_i (d_i - d_bar)^2`.
    pub fn coverage(&self) -> f64 {
        self.d.iter().map(|v| (v - self.d_bar).powi(2)).sum::<f64>() / self.d_bar
    }

    /// `max_i d_i`.
    pub fn maximin(&self) -> f64 {
        self.d.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Coverage measure (PM1).
pub fn pm1_coverage<P: AsRef<[f64]>>(rows: &[P]) -> Result<f64> {
    Ok(NearestNeighborProfile::new(rows)?.coverage())
}

/// Maximin measure (PM2).
pub fn pm2_maximin<P: AsRef<[f64]>>(rows: &[P]) -> Result<f64> {
    Ok(NearestNeighborProfile::new(rows)?.maximin())
}

/// Pool indices chosen by classical Kennard-Stone: the farthest pair first,
/// then repeatedly the point whose distance to the selection is largest.
/// Ties (within 1e-12) go to the lowest pool index.
pub fn kennard_stone_indices<P: AsRef<[f64]>>(pool: &[P], n: usize) -> Result<Vec<usize>> {
    if n < 2 {
        return Err(Error::param(format!("selection needs at least 2 runs, got {n}")));
    }
    if pool.len() < n {
        return Err(Error::param(format!(
            "pool has {} points, fewer than the {n} runs requested",
            pool.len()
        )));
    }
    let (a, b) = farthest_pair(pool);
    let mut selected = vec![a, b];
    let mut taken = vec![false; pool.len()];
    taken[a] = true;
    taken[b] = true;
    let mut min_d2: Vec<f64> = pool
        .iter()
        .map(|p| sq_dist(p.as_ref(), pool[a].as_ref()).min(sq_dist(p.as_ref(), pool[b].as_ref())))
        .collect();

    while selected.len() < n {
        let mut best: Option<(usize, f64)> = None;
        for (k, &d2) in min_d2.iter().enumerate() {
            if taken[k] {
                continue;
            }
            let d = d2.sqrt();
            match best {
                Some((_, bd)) if d <= bd + TIE_TOL => {}
                _ => best = Some((k, d)),
            }
        }
        let (k, _) = best.expect("pool larger than selection");
        taken[k] = true;
        selected.push(k);
        let chosen = pool[k].as_ref();
        for (p, slot) in pool.iter().zip(min_d2.iter_mut()) {
            *slot = slot.min(sq_dist(p.as_ref(), chosen));
        }
    }
    Ok(selected)
}

/// Exact farthest pair, ties to the lexicographically smallest `(i, j)`.
///
/// Points are visited by decreasing distance `r` from the pool centroid;
/// `||x_i - x_j|| <= r_i + r_j` prunes the pair scan.
fn farthest_pair<P: AsRef<[f64]>>(pool: &[P]) -> (usize, usize) {
    let m = pool[0].as_ref().len();
    let mut center = vec![0.0; m];
    for p in pool {
        for (c, v) in center.iter_mut().zip(p.as_ref()) {
            *c += v;
        }
    }
    center.iter_mut().for_each(|c| *c /= pool.len() as f64);
    let radius: Vec<f64> = pool.iter().map(|p| sq_dist(p.as_ref(), &center).sqrt()).collect();
    let mut by_radius: Vec<usize> = (0..pool.len()).collect();
    by_radius.sort_by(|&a, &b| radius[b].total_cmp(&radius[a]).then(a.cmp(&b)));

    let mut best_d = -1.0;
    let mut best_pair = (0, 1);
    for (s, &i) in by_radius.iter().enumerate() {
        if radius[i] + radius[by_radius[0]] < best_d - TIE_TOL {
            break;
        }
        for &j in &by_radius[s + 1..] {
            if radius[i] + radius[j] < best_d - TIE_TOL {
                break;
            }
            let d = sq_dist(pool[i].as_ref(), pool[j].as_ref()).sqrt();
            let pair = (i.min(j), i.max(j));
            if d > best_d + TIE_TOL || ((d - best_d).abs() <= TIE_TOL && pair < best_pair) {
                best_d = d;
                best_pair = pair;
            }
        }
    }
    best_pair
}

/// Kennard-Stone design drawn from a candidate pool, in selection order.
pub fn kennard_stone_select(pool: &CandidateSet, n: usize) -> Result<ConstrainedDesign> {
    let picked = kennard_stone_indices(pool.points(), n)?;
    let rows = picked.into_iter().map(|k| pool.points()[k].clone()).collect();
    ConstrainedDesign::new(rows, DEFAULT_DELTA2)
}
