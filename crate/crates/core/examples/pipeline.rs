//! Runs the desk-scale experiment end to end and writes every artifact.
//!
//! ```text
//! cargo run --example pipeline -- [OUT_DIR] [SEED]
//! ```

use std::path::PathBuf;

use doaiq::harness::{run_pipeline, PipelineConfig};

fn main() -> doaiq::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "pipeline-out".into()));
    let seed = args.next().map_or(0, |s| s.parse().expect("seed must be an integer"));
    let config = PipelineConfig {
        seed,
        ..PipelineConfig::default()
    };
    let report = run_pipeline(&config, Some(&out))?;
    print!("{}", report.summary());
    println!("artifacts in {}", out.display());
    Ok(())
}
