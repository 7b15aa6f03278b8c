//! Draw one dataset, write it as CSV alongside its scenario file, and read
//! both back.
//!
//! cargo run --example simulate_dataset [out_dir]

use std::path::PathBuf;

use goal::io::{load_dataset, save_dataset};
use goal::simgen::{paper_scenario, scenario_hash, Scenario};

fn main() -> goal::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "out/dataset".into()));
    std::fs::create_dir_all(&dir).expect("create output directory");

    let s = paper_scenario(100, 0.5, 42)?;
    let d = s.replicate(1);
    let (treated, control) = d.arm_sizes();
    println!("n = {}, p = {}, q = {}, treated = {treated}, control = {control}", s.n, s.p, s.q);
    println!("scenario hash {}", scenario_hash(std::slice::from_ref(&s)));

    let data_path = dir.join("data.csv");
    save_dataset(&d, &data_path)?;
    let toml_path = dir.join("scenario.toml");
    std::fs::write(&toml_path, s.to_toml()).expect("write scenario");

    let back = load_dataset(&data_path)?;
    let s_back = Scenario::from_toml(&std::fs::read_to_string(&toml_path).expect("read scenario"))?;
    println!("dataset round trip exact: {}", back == d);
    println!("scenario round trip exact: {}", s_back == s);
    println!("wrote {} and {}", data_path.display(), toml_path.display());
    Ok(())
}
