//! Effect estimates from GOAL, OAL and the lasso on one simulated dataset.
//!
//! cargo run --release --example estimate_ate [n] [rho]

use goal::estimators::{fit_method, iptw_ate, MethodSpec};
use goal::model::propensity;
use goal::simgen::paper_scenario;
use goal::weights::lambda_grid;
use nalgebra::DVector;

fn main() -> goal::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(200, |v| v.parse().expect("n"));
    let rho: f64 = args.next().map_or(0.0, |v| v.parse().expect("rho"));
    let s = paper_scenario(n, rho, 11)?;
    let d = s.replicate(1);

    let half = DVector::from_element(d.n(), 0.5);
    let truth = propensity(&d, &DVector::from_column_slice(&s.alpha_star))?;
    println!("unadjusted difference   {:+.4}", iptw_ate(&d, &half)?);
    println!("IPTW with true scores   {:+.4}", iptw_ate(&d, &truth)?);

    let grid = lambda_grid(d.n());
    for m in [MethodSpec::goal(), MethodSpec::oal(), MethodSpec::lasso()] {
        let e = fit_method(&d, &m, &grid)?;
        println!(
            "{:<6} ate {:+.4}  lambda = ({:.2e}, {:.2})  |selected| = {:>2}  ps in [{:.3}, {:.3}]",
            m.to_string(),
            e.ate,
            e.lambda1,
            e.lambda2,
            e.selected.len(),
            e.ps.min(),
            e.ps.max()
        );
    }
    Ok(())
}
