//! Logistic propensity model: likelihood, score, Fisher information.
//!
//! cargo run --example propensity_model

use goal::model::{fisher_information, neg_log_likelihood, phi, phi1, phi2, propensity, score};
use goal::simgen::paper_scenario;
use nalgebra::DVector;

fn main() -> goal::Result<()> {
    println!("phi(0) = {:.4}, phi'(0) = {}, phi''(0) = {}", phi(0.0), phi1(0.0), phi2(0.0));
    println!("phi(1000) = {}, phi(-1000) = {:e}", phi(1000.0), phi(-1000.0));

    let s = paper_scenario(200, 0.0, 1)?;
    let d = s.replicate(1);
    let truth = DVector::from_column_slice(&s.alpha_star);
    let zero = DVector::zeros(d.p());

    println!("n = {}, p = {}", d.n(), d.p());
    println!("nll at 0     = {:.4} (n log 2 = {:.4})", neg_log_likelihood(&d, &zero)?, d.n() as f64 * 2f64.ln());
    println!("nll at truth = {:.4}", neg_log_likelihood(&d, &truth)?);

    let g = score(&d, &truth)?;
    println!("max |score| at truth = {:.3}", g.amax());

    let f = fisher_information(&d, &truth)?;
    let f11 = f.active_block(&s.active_set())?;
    let eig = f11.clone().symmetric_eigen().eigenvalues;
    println!(
        "active Fisher block {}x{}: eigenvalues in [{:.4}, {:.4}]",
        f11.nrows(),
        f11.ncols(),
        eig.min(),
        eig.max()
    );

    let ps = propensity(&d, &truth)?;
    println!("true propensity range [{:.3}, {:.3}]", ps.min(), ps.max());
    Ok(())
}
