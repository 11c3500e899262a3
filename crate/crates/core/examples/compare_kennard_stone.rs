//! Coverage and maximin measures of optimized designs against Kennard-Stone
//! selections from the same pool.
//!
//! ```text
//! cargo run --example compare_kennard_stone -- [M] [SEED]
//! ```

use doaiq::maxpro::{optimize_design, OptimizerConfig};
use doaiq::metrics::{kennard_stone_select, NearestNeighborProfile};
use doaiq::simplex::{generate_candidate_set, CandidateConfig};

fn main() -> doaiq::Result<()> {
    let mut args = std::env::args().skip(1);
    let m: usize = args.next().map_or(10, |s| s.parse().expect("M must be an integer"));
    let seed: u64 = args.next().map_or(0, |s| s.parse().expect("seed must be an integer"));
    let pool = generate_candidate_set(m, &CandidateConfig::full(m), seed)?;
    println!("pool of {} points in {m} components", pool.len());
    println!("{:>5} {:>10} {:>10} {:>10} {:>10}", "N", "PM1 ours", "PM1 KS", "PM2 ours", "PM2 KS");
    for n in [50, 100, 150, 200] {
        let config = OptimizerConfig {
            seed,
            ..OptimizerConfig::default()
        };
        let ours = NearestNeighborProfile::new(optimize_design(&pool, n, &config)?.design.rows())?;
        let ks = NearestNeighborProfile::new(kennard_stone_select(&pool, n)?.rows())?;
        println!(
            "{n:>5} {:>10.4} {:>10.4} {:>10.4} {:>10.4}",
            ours.coverage(),
            ks.coverage(),
            ours.maximin(),
            ks.maximin()
        );
    }
    Ok(())
}
