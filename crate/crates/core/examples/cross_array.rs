//! Crosses a small mixture design with a Latin hypercube over the
//! environmental factors and two categorical levels, then writes the
//! design table.
//!
//! ```text
//! cargo run --example cross_array -- [OUT.csv]
//! ```

use std::path::Path;

use doaiq::assembly::{
    cross_array, default_continuous_factors, latin_hypercube, CategoricalFactor, ContinuousDesign, LhdOptions,
    DEFAULT_MAX_RUNS,
};
use doaiq::maxpro::{optimize_design, OptimizerConfig};
use doaiq::simplex::{generate_candidate_set, CandidateConfig};

fn main() -> doaiq::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "cross_array.csv".into());
    let pool = generate_candidate_set(5, &CandidateConfig::full(5), 0)?;
    let x = optimize_design(&pool, 8, &OptimizerConfig::default())?.design.into_rows();
    let specs = default_continuous_factors();
    let z = ContinuousDesign {
        names: specs.iter().map(|f| f.name.clone()).collect(),
        rows: latin_hypercube(&specs, 6, 0, &LhdOptions::default())?,
    };
    let cat = CategoricalFactor::new("z4", &["MNIST", "FashionMNIST"]);
    let design = cross_array(&x, &z, &cat, 3, DEFAULT_MAX_RUNS)?;
    println!("{} x-rows x {} z-rows x {} levels x 3 replicates = {} runs", x.len(), z.rows.len(), cat.levels.len(), design.runs.len());
    for row in &z.rows {
        println!("  z1 {:>9.4}  z2 {:.3}  z3 {:.3}", row[0], row[1], row[2]);
    }
    doaiq::dataset::save_design(Path::new(&out), &design)?;
    println!("wrote {out}");
    Ok(())
}
