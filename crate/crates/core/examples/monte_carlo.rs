//! A small paired Monte Carlo comparison, written out as tables and a plot.
//!
//! cargo run --release --example monte_carlo [replications] [workers]

use std::path::Path;

use goal::estimators::MethodSpec;
use goal::harness::{run_replications, HarnessOptions};
use goal::report::emit_results;
use goal::simgen::paper_scenario;

fn main() -> goal::Result<()> {
    let mut args = std::env::args().skip(1);
    let r: usize = args.next().map_or(20, |v| v.parse().expect("replications"));
    let workers: usize = args.next().map_or(1, |v| v.parse().expect("workers"));
    let methods = [MethodSpec::goal(), MethodSpec::oal(), MethodSpec::lasso()];
    let opts = HarnessOptions::with_workers(workers);

    let mut results = Vec::new();
    for rho in [0.0, 0.5] {
        let s = paper_scenario(100, rho, 2024)?;
        let res = run_replications(&s, &methods, r, &opts)?;
        for m in &res.summaries {
            println!(
                "rho = {rho}: {:<6} bias {:+.3}  se {:.3}  mse {:.3}  failed {}",
                m.method.to_string(),
                m.bias,
                m.se,
                m.mse,
                m.n_failed
            );
        }
        results.push(res);
    }
    for path in emit_results(&results, Path::new("out/monte_carlo"))? {
        println!("wrote {}", path.display());
    }
    Ok(())
}
