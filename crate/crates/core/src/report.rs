//! Output files: metrics and selection tables, selection plots, oracle
//! diagnostics and single-dataset fit reports.
//!
//! Every file opens with a `#` comment line naming the scenario hash, seed,
//! RNG algorithm, library version and IPTW variant. Output is a pure function
//! of its inputs, so repeated runs produce byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::Result;
use crate::estimators::{AteEstimate, IPTW_VARIANT};
use crate::harness::{OracleDiagnostics, ScenarioResult};
use crate::io::io_err;
use crate::simgen::{scenario_hash, Role, Scenario, RNG_ALGORITHM};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const METRICS_HEADER: &str = "n,p,card_A,rho,method,bias,se,mse,n_failed";
pub const SELECTION_HEADER: &str = "method,covariate_index,role,proportion";

/// Provenance line shared by every emitted file (without the comment marker).
pub fn provenance(scenarios: &[Scenario]) -> String {
    let mut seeds: Vec<u64> = scenarios.iter().map(|s| s.seed).collect();
    seeds.dedup();
    let seed = seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(";");
    format!(
        "scenario_hash={} seed={} rng={} version={} iptw={}",
        scenario_hash(scenarios),
        seed,
        RNG_ALGORITHM,
        VERSION,
        IPTW_VARIANT
    )
}

/// File stem shared by a scenario's selection table and plot.
pub fn scenario_stem(s: &Scenario) -> String {
    format!("selection_n{}_rho{}", s.n, s.rho)
}

pub fn metrics_csv(results: &[ScenarioResult]) -> String {
    let scenarios: Vec<Scenario> = results.iter().map(|r| r.scenario.clone()).collect();
    let mut out = format!("# {}\n{METRICS_HEADER}\n", provenance(&scenarios));
    for r in results {
        let s = &r.scenario;
        let card = s.active_set().len();
        for m in &r.summaries {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                s.n, s.p, card, s.rho, m.method, m.bias, m.se, m.mse, m.n_failed
            )
            .unwrap();
        }
    }
    out
}

pub fn selection_csv(r: &ScenarioResult) -> String {
    let s = &r.scenario;
    let roles = s.roles();
    let mut out = format!("# {}\n{SELECTION_HEADER}\n", provenance(std::slice::from_ref(s)));
    for m in &r.summaries {
        for (j, prop) in m.selection_prop.iter().enumerate() {
            writeln!(out, "{},{},{},{}", m.method, j + 1, roles.get(j).name(), prop).unwrap();
        }
    }
    out
}

const SERIES_COLORS: [&str; 6] = ["#1b6ca8", "#d1495b", "#edae49", "#00798c", "#66a182", "#8d6a9f"];

fn role_fill(role: Role) -> &'static str {
    match role {
        Role::Confounder => "#e8f1f8",
        Role::OutcomePredictor => "#eaf5ea",
        Role::TreatmentPredictor => "#fbf0e0",
        Role::Spurious => "#f2f2f2",
    }
}

/// Selection proportion against covariate index, one series per method, on
/// background bands marking each covariate's role.
pub fn selection_svg(r: &ScenarioResult) -> String {
    let s = &r.scenario;
    let roles = s.roles();
    let (w, h) = (760.0, 340.0);
    let (left, right, top, bottom) = (56.0, 150.0, 36.0, 48.0);
    let pw = w - left - right;
    let ph = h - top - bottom;
    let p = s.p.max(1) as f64;
    let xpos = |j: usize| left + (j as f64 + 0.5) / p * pw;
    let ypos = |v: f64| top + (1.0 - v) * ph;

    let mut o = String::new();
    writeln!(o, "<?xml version=\"1.0\" encoding=\"UTF-8\"?>").unwrap();
    writeln!(o, "<!-- {} -->", provenance(std::slice::from_ref(s))).unwrap();
    writeln!(
        o,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\" font-size=\"11\">"
    )
    .unwrap();
    writeln!(o, "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>").unwrap();
    writeln!(
        o,
        "<text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-size=\"13\">Selection proportion, n = {}, p = {}, rho = {}</text>",
        left + pw / 2.0,
        s.n,
        s.p,
        s.rho
    )
    .unwrap();

    // role bands over maximal runs of equal role
    let mut j = 0;
    while j < s.p {
        let role = roles.get(j);
        let mut k = j;
        while k + 1 < s.p && roles.get(k + 1) == role {
            k += 1;
        }
        let x0 = left + j as f64 / p * pw;
        let x1 = left + (k + 1) as f64 / p * pw;
        writeln!(
            o,
            "<rect x=\"{x0:.2}\" y=\"{top}\" width=\"{:.2}\" height=\"{ph}\" fill=\"{}\"><title>{}</title></rect>",
            x1 - x0,
            role_fill(role),
            role.name()
        )
        .unwrap();
        j = k + 1;
    }

    for t in 0..=4 {
        let v = t as f64 / 4.0;
        let y = ypos(v);
        writeln!(o, "<line x1=\"{left}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"#cccccc\" stroke-width=\"0.5\"/>", left + pw).unwrap();
        writeln!(o, "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{v:.2}</text>", left - 6.0, y + 4.0).unwrap();
    }
    let step = (s.p / 10).max(1);
    for j in (0..s.p).step_by(step) {
        writeln!(o, "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>", xpos(j), top + ph + 16.0, j + 1).unwrap();
    }
    writeln!(o, "<rect x=\"{left}\" y=\"{top}\" width=\"{pw}\" height=\"{ph}\" fill=\"none\" stroke=\"black\"/>").unwrap();
    writeln!(o, "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">covariate index</text>", left + pw / 2.0, h - 10.0).unwrap();
    writeln!(
        o,
        "<text x=\"16\" y=\"{:.2}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.2})\">proportion selected</text>",
        top + ph / 2.0,
        top + ph / 2.0
    )
    .unwrap();

    for (k, m) in r.summaries.iter().enumerate() {
        let color = SERIES_COLORS[k % SERIES_COLORS.len()];
        let points: Vec<String> = m
            .selection_prop
            .iter()
            .enumerate()
            .map(|(j, &v)| format!("{:.2},{:.2}", xpos(j), ypos(v)))
            .collect();
        writeln!(o, "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>", points.join(" ")).unwrap();
        for (j, &v) in m.selection_prop.iter().enumerate() {
            writeln!(o, "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.5\" fill=\"{color}\"/>", xpos(j), ypos(v)).unwrap();
        }
        let ly = top + 14.0 + 18.0 * k as f64;
        let lx = left + pw + 16.0;
        writeln!(o, "<line x1=\"{lx:.2}\" y1=\"{ly:.2}\" x2=\"{:.2}\" y2=\"{ly:.2}\" stroke=\"{color}\" stroke-width=\"2\"/>", lx + 20.0).unwrap();
        writeln!(o, "<text x=\"{:.2}\" y=\"{:.2}\">{}</text>", lx + 26.0, ly + 4.0, m.method).unwrap();
    }
    let base = top + 14.0 + 18.0 * r.summaries.len() as f64 + 10.0;
    for (k, role) in Role::ALL.iter().enumerate() {
        let ly = base + 18.0 * k as f64;
        let lx = left + pw + 16.0;
        writeln!(o, "<rect x=\"{lx:.2}\" y=\"{:.2}\" width=\"20\" height=\"10\" fill=\"{}\" stroke=\"#999999\" stroke-width=\"0.5\"/>", ly - 5.0, role_fill(*role)).unwrap();
        writeln!(o, "<text x=\"{:.2}\" y=\"{:.2}\">{}</text>", lx + 26.0, ly + 4.0, role.name()).unwrap();
    }
    writeln!(o, "</svg>").unwrap();
    o
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| io_err(path, e))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

/// Writes `metrics.csv` plus a selection table and plot per scenario; returns
/// the paths written, in order.
pub fn emit_results(results: &[ScenarioResult], dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let mut written = Vec::new();
    let path = dir.join("metrics.csv");
    write(&path, &metrics_csv(results))?;
    written.push(path);
    for r in results {
        let stem = scenario_stem(&r.scenario);
        let path = dir.join(format!("{stem}.csv"));
        write(&path, &selection_csv(r))?;
        written.push(path);
        let path = dir.join(format!("{stem}.svg"));
        write(&path, &selection_svg(r))?;
        written.push(path);
    }
    Ok(written)
}

pub const ORACLE_HEADER: &str =
    "n,replications,zero_recovery_rate,nonzero_recovery_rate,covariate_index,mean,mean_se,variance,reference_variance,variance_ratio";

/// One row per (sample size, active coordinate).
pub fn oracle_csv(scenarios: &[Scenario], diags: &[OracleDiagnostics]) -> String {
    let mut out = format!("# {}\n{ORACLE_HEADER}\n", provenance(scenarios));
    for d in diags {
        for m in &d.standardized_moments {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                d.n,
                d.replications,
                d.zero_recovery_rate,
                d.nonzero_recovery_rate,
                m.index + 1,
                m.mean,
                m.mean_se,
                m.variance,
                m.reference_variance,
                m.variance_ratio()
            )
            .unwrap();
        }
        if d.standardized_moments.is_empty() {
            writeln!(out, "{},{},{},{},,,,,,", d.n, d.replications, d.zero_recovery_rate, d.nonzero_recovery_rate).unwrap();
        }
    }
    out
}

pub fn emit_oracle(scenarios: &[Scenario], diags: &[OracleDiagnostics], dir: &Path) -> Result<PathBuf> {
    ensure_dir(dir)?;
    let path = dir.join("oracle.csv");
    write(&path, &oracle_csv(scenarios, diags))?;
    Ok(path)
}

pub const FIT_HEADER: &str = "method,ate,lambda1,lambda2,wamd,n_selected,selected";

/// One row per method; `selected` lists 1-based indices separated by `;`.
pub fn fit_csv(source: &str, estimates: &[AteEstimate]) -> String {
    let mut out = format!(
        "# data={} version={} iptw={}\n{FIT_HEADER}\n",
        source, VERSION, IPTW_VARIANT
    );
    for e in estimates {
        let sel: Vec<String> = e.selected.iter().map(|j| (j + 1).to_string()).collect();
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            e.method,
            e.ate,
            e.lambda1,
            e.lambda2,
            e.wamd,
            e.selected.len(),
            sel.join(";")
        )
        .unwrap();
    }
    out
}

pub fn emit_fit(source: &str, estimates: &[AteEstimate], dir: &Path) -> Result<PathBuf> {
    ensure_dir(dir)?;
    let path = dir.join("fit.csv");
    write(&path, &fit_csv(source, estimates))?;
    Ok(path)
}
