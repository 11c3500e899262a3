//! Optimizes a 10-run design for a 4-component mixture and prints the
//! trace summary and the rows.

use doaiq::maxpro::{optimize_design, OptimizerConfig, TraceAction};
use doaiq::simplex::{generate_candidate_set, CandidateConfig};

fn main() -> doaiq::Result<()> {
    let pool = generate_candidate_set(4, &CandidateConfig::full(4), 0)?;
    let out = optimize_design(&pool, 10, &OptimizerConfig::default())?;
    let exchanges = out.trace.iter().filter(|t| t.action == TraceAction::Exchange).count();
    println!(
        "criterion {:.6e} -> {:.6e} after {exchanges} exchanges ({:?}, {} rejected candidates)",
        out.trace[0].criterion,
        out.design.criterion(),
        out.termination,
        out.failed_attempts
    );
    for row in out.design.rows() {
        let cells: Vec<String> = row.coords().iter().map(|v| format!("{v:.4}")).collect();
        println!("{}", cells.join("  "));
    }
    Ok(())
}
