//! Outcome-adaptive weights, the penalty schedule and the tuning grid.
//!
//! cargo run --example adaptive_weights

use goal::simgen::{paper_scenario, Role};
use goal::weights::{compute_weights, lambda_grid, lambda_schedule, ols_fit};

fn main() -> goal::Result<()> {
    let s = paper_scenario(200, 0.0, 5)?;
    let d = s.replicate(1);
    let ols = ols_fit(&d)?;
    let w = compute_weights(&ols, 3.0)?;
    println!("OLS treatment coefficient {:.3} (truth {}), rank {}", ols.beta_a, s.beta_a, ols.rank);

    let roles = s.roles();
    for role in Role::ALL {
        let idx = roles.indices(role);
        let median = |mut v: Vec<f64>| {
            v.sort_by(f64::total_cmp);
            v[v.len() / 2]
        };
        println!(
            "{:>20}: median |beta| {:.3}, median weight {:.3e}",
            role.name(),
            median(idx.iter().map(|&j| ols.beta[j].abs()).collect()),
            median(idx.iter().map(|&j| w[j]).collect())
        );
    }

    for n in [100, 1000, 10000] {
        let (l1, l2) = lambda_schedule(n, 3.0)?;
        println!("schedule n = {n:>5}: lambda1 = {l1:.3}, lambda2 = {l2:.3}");
    }
    println!("grid at n = {}:", d.n());
    for (l1, l2) in lambda_grid(d.n()) {
        print!(" ({l1:.2e}, {l2:.2})");
    }
    println!();
    Ok(())
}
