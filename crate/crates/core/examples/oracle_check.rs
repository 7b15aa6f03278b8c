//! Selection consistency and the limiting variance of the active
//! coefficients at the scheduled penalty levels.
//!
//! cargo run --release --example oracle_check [n] [replications]

use goal::harness::{oracle_diagnostics, HarnessOptions};
use goal::simgen::paper_scenario;

fn main() -> goal::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(500, |v| v.parse().expect("n"));
    let r: usize = args.next().map_or(100, |v| v.parse().expect("replications"));
    let s = paper_scenario(n, 0.0, 7)?;
    let d = oracle_diagnostics(&s, r, true, 3.0, &HarnessOptions::default())?;

    println!("n = {n}, R = {r}");
    println!("all inactive coefficients zero: {:.3}", d.zero_recovery_rate);
    println!("all active coefficients nonzero: {:.3}", d.nonzero_recovery_rate);
    println!("{:>5} {:>10} {:>8} {:>10} {:>10} {:>7}", "j", "mean", "se", "var", "ref var", "ratio");
    for m in &d.standardized_moments {
        println!(
            "{:>5} {:>10.3} {:>8.3} {:>10.3} {:>10.3} {:>7.3}",
            m.index + 1,
            m.mean,
            m.mean_se,
            m.variance,
            m.reference_variance,
            m.variance_ratio()
        );
    }
    Ok(())
}
