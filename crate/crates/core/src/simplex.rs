//! Points on the probability simplex and the algebraic candidate pool built
//! from the simplex-centroid design.
//!
//! The pool is the union of the centroid points (equal weight on every
//! nonempty subset of components, up to a subset-size bound) and convex
//! combinations `λp + (1-λ)q` along segments joining pairs of centroid points.
//! Everything is constructed exactly, so there is no rejection step.

use std::collections::HashSet;

use rand::seq::index;

use crate::error::{Error, Result};
use crate::seeded_rng;

/// Absolute tolerance for the sum-to-one constraint and for point identity.
pub const SIMPLEX_TOL: f64 = 1e-12;

pub const DEFAULT_SEGMENT_FRACTIONS: [f64; 3] = [0.25, 0.5, 0.75];
pub const DEFAULT_MAX_PAIRS: usize = 50_000;

/// A vector of `m >= 2` nonnegative proportions summing to one.
#[derive(Clone, Debug, PartialEq)]
pub struct SimplexPoint(Vec<f64>);

impl SimplexPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::param(format!(
                "simplex point needs at least 2 coordinates, got {}",
                coords.len()
            )));
        }
        if let Some(bad) = coords
            .iter()
            .find(|c| !c.is_finite() || **c < -SIMPLEX_TOL || **c > 1.0 + SIMPLEX_TOL)
        {
            return Err(Error::param(format!("coordinate {bad} outside [0, 1]")));
        }
        let sum: f64 = coords.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::param(format!(
                "coordinates sum to {sum:.17}, expected 1"
            )));
        }
        Ok(SimplexPoint(coords.into_iter().map(|c| c.clamp(0.0, 1.0)).collect()))
    }

    /// Callers guarantee the invariants (convex combinations, projections).
    pub(crate) fn from_raw(coords: Vec<f64>) -> Self {
        debug_assert!((coords.iter().sum::<f64>() - 1.0).abs() <= SIMPLEX_TOL);
        SimplexPoint(coords)
    }

    /// The barycenter `(1/m, ..., 1/m)`.
    pub fn barycenter(m: usize) -> Self {
        SimplexPoint(vec![1.0 / m as f64; m])
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Same point within [`SIMPLEX_TOL`] in every coordinate.
    pub fn approx_eq(&self, other: &SimplexPoint) -> bool {
        self.0.len() == other.0.len()
            && self
                .0
                .iter()
                .zip(&other.0)
                .all(|(a, b)| (a - b).abs() <= SIMPLEX_TOL)
    }
}

impl AsRef<[f64]> for SimplexPoint {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Euclidean projection onto `{x >= 0, sum x = 1}` (sort-and-threshold).
pub fn project_onto_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut shift = 0.0;
    for (k, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - 1.0) / (k + 1) as f64;
        if u - candidate > 0.0 {
            shift = candidate;
        }
    }
    let mut out: Vec<f64> = v.iter().map(|&x| (x - shift).max(0.0)).collect();
    // Absorb rounding so the sum is one to machine precision.
    let sum: f64 = out.iter().sum();
    if sum > 0.0 {
        out.iter_mut().for_each(|x| *x /= sum);
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct CandidateConfig {
    pub max_subset_size: usize,
    pub segment_fractions: Vec<f64>,
    pub max_pairs: Option<usize>,
}

impl CandidateConfig {
    /// Every subset size, fractions {1/4, 1/2, 3/4}, at most 50,000 pairs.
    pub fn full(m: usize) -> Self {
        CandidateConfig {
            max_subset_size: m,
            segment_fractions: DEFAULT_SEGMENT_FRACTIONS.to_vec(),
            max_pairs: Some(DEFAULT_MAX_PAIRS),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CandidateSet {
    points: Vec<SimplexPoint>,
    dim: usize,
    config: Option<CandidateConfig>,
}

impl CandidateSet {
    /// Wraps an externally supplied pool, rejecting mixed dimensions and
    /// duplicate points.
    pub fn from_points(points: Vec<SimplexPoint>) -> Result<Self> {
        let dim = points
            .first()
            .map(SimplexPoint::dim)
            .ok_or_else(|| Error::param("candidate set is empty"))?;
        if let Some(p) = points.iter().find(|p| p.dim() != dim) {
            return Err(Error::param(format!(
                "candidate of dimension {} in a pool of dimension {dim}",
                p.dim()
            )));
        }
        let mut seen = HashSet::with_capacity(points.len());
        for p in &points {
            if !seen.insert(dedup_key(p.coords())) {
                return Err(Error::param(format!("duplicate candidate {:?}", p.coords())));
            }
        }
        Ok(CandidateSet {
            points,
            dim,
            config: None,
        })
    }

    pub fn points(&self) -> &[SimplexPoint] {
        &self.points
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// The configuration used to generate the pool, if it was generated.
    pub fn config(&self) -> Option<&CandidateConfig> {
        self.config.as_ref()
    }
}

fn validate_dims(m: usize, max_subset_size: usize) -> Result<()> {
    if m < 2 {
        return Err(Error::param(format!("dimension must be at least 2, got {m}")));
    }
    if max_subset_size == 0 || max_subset_size > m {
        return Err(Error::param(format!(
            "max subset size must lie in 1..={m}, got {max_subset_size}"
        )));
    }
    Ok(())
}

/// One point per nonempty subset `S` with `|S| <= max_subset_size`, weight
/// `1/|S|` on `S`. Ordered by subset size, then lexicographically.
pub fn generate_centroid_points(m: usize, max_subset_size: usize) -> Result<Vec<SimplexPoint>> {
    validate_dims(m, max_subset_size)?;
    let mut points = Vec::new();
    for size in 1..=max_subset_size {
        let weight = 1.0 / size as f64;
        let mut subset: Vec<usize> = (0..size).collect();
        loop {
            let mut coords = vec![0.0; m];
            for &l in &subset {
                coords[l] = weight;
            }
            points.push(SimplexPoint(coords));
            if !next_combination(&mut subset, m) {
                break;
            }
        }
    }
    Ok(points)
}

/// Advances `subset` to the next k-combination of `0..n` in lexicographic order.
fn next_combination(subset: &mut [usize], n: usize) -> bool {
    let k = subset.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if subset[i] < n - k + i {
            subset[i] += 1;
            for j in i + 1..k {
                subset[j] = subset[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn dedup_key(coords: &[f64]) -> Vec<i64> {
    coords
        .iter()
        .map(|c| (c / SIMPLEX_TOL).round() as i64)
        .collect()
}

/// Maps a linear index over the strict upper triangle of an `n x n` grid to
/// its `(i, j)` pair, `i < j`, row by row.
fn pair_from_index(mut k: usize, n: usize) -> (usize, usize) {
    let mut i = 0;
    loop {
        let row_len = n - 1 - i;
        if k < row_len {
            return (i, i + 1 + k);
        }
        k -= row_len;
        i += 1;
    }
}

/// Centroid points plus segment interpolations, deduplicated at
/// [`SIMPLEX_TOL`]. When the number of centroid pairs exceeds `max_pairs`,
/// a seeded uniform sample of pairs (without replacement) is used; the pair
/// sample does not depend on the fractions.
pub fn generate_candidate_set(m: usize, config: &CandidateConfig, seed: u64) -> Result<CandidateSet> {
    validate_dims(m, config.max_subset_size)?;
    if config.segment_fractions.is_empty() {
        return Err(Error::param("segment fractions must be nonempty"));
    }
    if let Some(f) = config
        .segment_fractions
        .iter()
        .find(|f| !(**f > 0.0 && **f < 1.0))
    {
        return Err(Error::param(format!("segment fraction {f} outside (0, 1)")));
    }

    let centroids = generate_centroid_points(m, config.max_subset_size)?;
    let n = centroids.len();
    let total_pairs = n * (n - 1) / 2;

    let pairs: Vec<(usize, usize)> = match config.max_pairs {
        Some(cap) if total_pairs > cap => {
            let mut rng = seeded_rng(seed);
            let mut picked = index::sample(&mut rng, total_pairs, cap).into_vec();
            picked.sort_unstable();
            picked.into_iter().map(|k| pair_from_index(k, n)).collect()
        }
        _ => (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect(),
    };

    let mut seen: HashSet<Vec<i64>> = HashSet::with_capacity(n + pairs.len() * config.segment_fractions.len());
    let mut points = Vec::with_capacity(seen.capacity());
    for p in centroids.iter() {
        seen.insert(dedup_key(p.coords()));
        points.push(p.clone());
    }
    for &(i, j) in &pairs {
        let (p, q) = (centroids[i].coords(), centroids[j].coords());
        for &lambda in &config.segment_fractions {
            let coords: Vec<f64> = p
                .iter()
                .zip(q)
                .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
                .collect();
            if seen.insert(dedup_key(&coords)) {
                points.push(SimplexPoint::from_raw(coords));
            }
        }
    }

    Ok(CandidateSet {
        points,
        dim: m,
        config: Some(config.clone()),
    })
}
