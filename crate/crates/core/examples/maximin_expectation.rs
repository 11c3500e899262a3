//! Averages the weighted maximin measure over random simplex weights and
//! compares it with the unregularized criterion for a few random designs.
//! The ratio should not depend on the design.

use doaiq::maxpro::{maxpro_criterion, montecarlo_maximin_expectation};
use doaiq::simplex::SimplexPoint;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

fn main() -> doaiq::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let m = 3;
    for k in 0..4 {
        let rows: Vec<SimplexPoint> = (0..4)
            .map(|_| {
                // Normalized exponentials are uniform on the simplex.
                let raw: Vec<f64> = (0..m).map(|_| Exp1.sample(&mut rng)).collect();
                let total: f64 = raw.iter().sum();
                SimplexPoint::new(raw.iter().map(|v| v / total).collect())
            })
            .collect::<doaiq::Result<_>>()?;
        let exact = maxpro_criterion(&rows, 0.0)?;
        let mc = montecarlo_maximin_expectation(&rows, 2.0 * m as f64, 400_000, k)?;
        println!("design {k}: criterion {exact:.5e}, expectation {mc:.5e}, ratio {:.4}", mc / exact);
    }
    Ok(())
}
