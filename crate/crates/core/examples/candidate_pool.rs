//! Builds the simplex-centroid candidate pool and reports its size.
//!
//! ```text
//! cargo run --example candidate_pool -- [M] [OUT.csv]
//! ```

use std::path::Path;

use doaiq::io::save_points;
use doaiq::simplex::{generate_candidate_set, generate_centroid_points, CandidateConfig};

fn main() -> doaiq::Result<()> {
    let mut args = std::env::args().skip(1);
    let m: usize = args.next().map_or(4, |s| s.parse().expect("M must be an integer"));
    let centroids = generate_centroid_points(m, m)?;
    let pool = generate_candidate_set(m, &CandidateConfig::full(m), 0)?;
    println!("m = {m}: {} centroids, {} candidates", centroids.len(), pool.len());
    for p in pool.points().iter().take(5) {
        println!("  {:?}", p.coords());
    }
    if let Some(out) = args.next() {
        save_points(Path::new(&out), pool.points())?;
        println!("wrote {out}");
    }
    Ok(())
}
