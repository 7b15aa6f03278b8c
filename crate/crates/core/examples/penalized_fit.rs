//! One penalized fit with the coordinate-descent solver, with and without
//! the adaptive weights.
//!
//! cargo run --release --example penalized_fit

use goal::estimators::{selected_support, SELECTION_TOL};
use goal::simgen::paper_scenario;
use goal::solver::{fit, kkt_residual, FitOptions, PenaltySpec};
use goal::weights::{compute_weights, lambda_schedule, ols_fit};
use nalgebra::DVector;

fn main() -> goal::Result<()> {
    let s = paper_scenario(400, 0.0, 3)?;
    let d = s.replicate(1);
    let (l1, l2) = lambda_schedule(d.n(), 3.0)?;
    let weights = compute_weights(&ols_fit(&d)?, 3.0)?;

    for (label, pen) in [
        ("adaptive", PenaltySpec::new(l1, l2, weights, 3.0)?),
        ("unit", PenaltySpec::unit(l1, l2, d.p(), 3.0)?),
    ] {
        let r = fit(&d, &pen, &DVector::zeros(d.p()), &FitOptions::default())?;
        let trace = &r.objective_trace;
        println!(
            "{label:>8} weights: objective {:.4} -> {:.4} in {} sweeps, converged = {}, KKT = {:.1e}",
            trace[0],
            r.objective,
            r.iterations,
            r.converged,
            kkt_residual(&d, &r.alpha_hat, &pen)?
        );
        let sel: Vec<usize> = selected_support(&r.alpha_hat, SELECTION_TOL).iter().map(|j| j + 1).collect();
        println!("          selected {:?}", sel);
    }
    println!("active set {:?}", s.active_set().iter().map(|j| j + 1).collect::<Vec<_>>());
    Ok(())
}
