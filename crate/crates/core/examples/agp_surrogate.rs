//! Fits the additive process to a toy problem with one binary factor and
//! prints predictions with their standard deviations.

use doaiq::agp::{fit, AgpParams, FitOptions, MixedInput};

fn truth(x: f64, z: u8) -> f64 {
    (5.0 * x).sin() + if z == 1 { 0.4 + 0.3 * x } else { 0.0 }
}

fn main() -> doaiq::Result<()> {
    let mut inputs = Vec::new();
    let mut y = Vec::new();
    for i in 0..12 {
        let x = i as f64 / 11.0;
        for z in [0u8, 1] {
            if (i + z as usize).is_multiple_of(2) {
                inputs.push(MixedInput::new(vec![x], vec![z])?);
                y.push(truth(x, z));
            }
        }
    }
    let model = fit(&inputs, &y, &AgpParams::initial(1), &FitOptions::default())?;
    let p = model.params();
    println!(
        "rho {:.3}, theta {:.4}, eta {:.2e}, tau2 {:.4} ({:?})",
        p.rho[0],
        p.theta[0],
        p.eta,
        p.tau2,
        model.report().termination
    );
    println!("{:>5} {:>3} {:>9} {:>9} {:>9}", "x", "z", "truth", "mean", "sd");
    for k in 0..=8 {
        let x = k as f64 / 8.0;
        for z in [0u8, 1] {
            let pred = model.predict(&MixedInput::new(vec![x], vec![z])?)?;
            println!("{x:>5.3} {z:>3} {:>9.4} {:>9.4} {:>9.2e}", truth(x, z), pred.mean, pred.variance.sqrt());
        }
    }
    Ok(())
}
