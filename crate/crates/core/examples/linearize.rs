//! Tangent-line envelopes of the concave cost families and their measured
//! relative error on a dense grid.
//!
//!     cargo run --example linearize

use eos_ssd::{linearize, CostFunction};

fn main() -> eos_ssd::Result<()> {
    for g in [CostFunction::SquareRoot, CostFunction::Fractional] {
        for eps in [0.1, 0.01, 0.001] {
            let lin = linearize(&g, eps, 1.0, 1e4)?;
            let worst = (0..=200_000)
                .map(|k| 1.0 + (1e4 - 1.0) * k as f64 / 200_000.0)
                .map(|x| {
                    let exact = g.eval(x).expect("x >= 1");
                    (lin.eval(x) - exact) / exact
                })
                .fold(0.0f64, f64::max);
            println!(
                "{:<12} eps {:<6} pieces {:>4}  worst relative error {:.6}",
                g.name(),
                eps,
                lin.len(),
                worst
            );
        }
    }

    let lin = linearize(&CostFunction::SquareRoot, 0.01, 1.0, 20.0)?;
    println!("\nsquare root, eps 0.01 on [1, 20]:");
    print!("{}", lin.to_csv());
    Ok(())
}
