//! Monte Carlo replication over simulated scenarios.
//!
//! Every replication draws its dataset from its own child seed, so results do
//! not depend on the order replications run in or on the worker count. All
//! methods of one replication see the same dataset.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::{fit_method_with, MethodSpec, SELECTION_TOL};
use crate::model::{fisher_information, Dataset};
use crate::simgen::{child_seed, generate, Scenario, SimRng};
use crate::solver::{fit, FitOptions, PenaltySpec};
use crate::weights::{compute_weights, lambda_grid, lambda_schedule, ols_fit};
use rand::SeedableRng;

/// Sample size of the Monte Carlo draw used for the reference information.
pub const REFERENCE_N: usize = 100_000;

#[derive(Debug, Clone)]
pub struct HarnessOptions {
    pub workers: usize,
    pub fit: FitOptions,
    /// Tuning grid; `None` uses [`lambda_grid`] at the scenario's `n`.
    pub grid: Option<Vec<(f64, f64)>>,
}

impl Default for HarnessOptions {
    fn default() -> Self {
        Self {
            workers: 1,
            fit: FitOptions::default(),
            grid: None,
        }
    }
}

impl HarnessOptions {
    pub fn with_workers(workers: usize) -> Self {
        Self {
            workers,
            ..Self::default()
        }
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        if self.workers == 0 {
            return Err(Error::InvalidArgument("workers must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| Error::InvalidArgument(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationSummary {
    pub method: MethodSpec,
    pub bias: f64,
    /// Sample standard deviation of the estimates.
    pub se: f64,
    /// Mean squared error about the true effect.
    pub mse: f64,
    pub selection_prop: Vec<f64>,
    /// Fraction of replications whose selected set equals the active set.
    pub support_recovery_rate: f64,
    pub n_replications: usize,
    pub n_failed: usize,
}

/// All summaries of one scenario, in method order.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioResult {
    pub scenario: Scenario,
    pub replications: usize,
    pub summaries: Vec<ReplicationSummary>,
}

/// Outcome of one method on one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodOutcome {
    pub ate: f64,
    pub selected: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationRecord {
    pub index: u64,
    pub data_checksum: u64,
    /// One entry per method; `None` when the method failed on this dataset.
    pub outcomes: Vec<Option<MethodOutcome>>,
}

/// `(bias, se, mse)` of `estimates` about `truth`; `se` is the sample SD.
pub fn aggregate(estimates: &[f64], truth: f64) -> (f64, f64, f64) {
    let r = estimates.len();
    if r == 0 {
        return (f64::NAN, f64::NAN, f64::NAN);
    }
    let rf = r as f64;
    let mean = estimates.iter().sum::<f64>() / rf;
    let se = if r > 1 {
        let ss: f64 = estimates.iter().map(|e| (e - mean) * (e - mean)).sum();
        (ss / (rf - 1.0)).sqrt()
    } else {
        0.0
    };
    let mse = estimates.iter().map(|e| (e - truth) * (e - truth)).sum::<f64>() / rf;
    (mean - truth, se, mse)
}

/// FNV-1a over the bit patterns of every stored value.
pub fn dataset_checksum(d: &Dataset) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let values = d
        .x()
        .iter()
        .chain(d.treatment().iter())
        .chain(d.outcome().iter());
    for v in values {
        for b in v.to_bits().to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

/// Runs `r` paired replications of every method and returns the raw records.
pub fn replicate_methods(
    s: &Scenario,
    methods: &[MethodSpec],
    r: usize,
    opts: &HarnessOptions,
) -> Result<Vec<ReplicationRecord>> {
    s.validate()?;
    let grid = opts.grid.clone().unwrap_or_else(|| lambda_grid(s.n));
    let one = |index: u64| {
        let d = s.replicate(index);
        let outcomes = methods
            .iter()
            .map(|m| {
                fit_method_with(&d, m, &grid, &opts.fit).ok().map(|e| MethodOutcome {
                    ate: e.ate,
                    selected: e.selected,
                })
            })
            .collect();
        ReplicationRecord {
            index,
            data_checksum: dataset_checksum(&d),
            outcomes,
        }
    };
    let pool = opts.pool()?;
    Ok(pool.install(|| (1..=r as u64).into_par_iter().map(one).collect()))
}

/// Folds replication records into one summary per method.
pub fn summarize(
    s: &Scenario,
    methods: &[MethodSpec],
    records: &[ReplicationRecord],
) -> Result<Vec<ReplicationSummary>> {
    let active = s.active_set();
    let r = records.len();
    let mut out = Vec::with_capacity(methods.len());
    for (k, m) in methods.iter().enumerate() {
        let ok: Vec<&MethodOutcome> = records.iter().filter_map(|rec| rec.outcomes[k].as_ref()).collect();
        let n_failed = r - ok.len();
        if n_failed * 10 > r {
            return Err(Error::TooManyFailures { failed: n_failed, total: r });
        }
        let ates: Vec<f64> = ok.iter().map(|o| o.ate).collect();
        let (bias, se, mse) = aggregate(&ates, s.beta_a);
        let denom = ok.len().max(1) as f64;
        let mut selection_prop = vec![0.0; s.p];
        let mut recovered = 0usize;
        for o in &ok {
            for &j in &o.selected {
                selection_prop[j] += 1.0;
            }
            if o.selected == active {
                recovered += 1;
            }
        }
        selection_prop.iter_mut().for_each(|v| *v /= denom);
        out.push(ReplicationSummary {
            method: *m,
            bias,
            se,
            mse,
            selection_prop,
            support_recovery_rate: recovered as f64 / denom,
            n_replications: ok.len(),
            n_failed,
        });
    }
    Ok(out)
}

/// `r` paired replications of `methods` on scenario `s`, summarized.
pub fn run_replications(
    s: &Scenario,
    methods: &[MethodSpec],
    r: usize,
    opts: &HarnessOptions,
) -> Result<ScenarioResult> {
    if r < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 replications, got {r}")));
    }
    let records = replicate_methods(s, methods, r, opts)?;
    Ok(ScenarioResult {
        scenario: s.clone(),
        replications: r,
        summaries: summarize(s, methods, &records)?,
    })
}

/// Moments of `√n(α̂ⱼ − α*ⱼ)` for one active coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordinateMoments {
    pub index: usize,
    pub mean: f64,
    pub variance: f64,
    /// Standard error of `mean`.
    pub mean_se: f64,
    /// `(F₁₁⁻¹)ⱼⱼ` from the reference draw.
    pub reference_variance: f64,
}

impl CoordinateMoments {
    pub fn variance_ratio(&self) -> f64 {
        self.variance / self.reference_variance
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleDiagnostics {
    pub n: usize,
    pub replications: usize,
    /// Fits that hit the sweep limit; they are still counted.
    pub unconverged: usize,
    pub zero_recovery_rate: f64,
    pub nonzero_recovery_rate: f64,
    pub standardized_moments: Vec<CoordinateMoments>,
}

impl OracleDiagnostics {
    pub fn max_variance_ratio_deviation(&self) -> f64 {
        self.standardized_moments
            .iter()
            .map(|m| (m.variance_ratio() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Active-block Fisher information at `α*` from a reference draw of size
/// `n_ref`, inverted.
pub fn reference_inverse_information(s: &Scenario, n_ref: usize) -> Result<DMatrix<f64>> {
    let big = Scenario {
        n: n_ref,
        ..s.with_seed(child_seed(s.seed, u64::MAX))
    };
    let mut rng = SimRng::seed_from_u64(big.seed);
    let d = generate(&big, &mut rng);
    let f = fisher_information(&d, &DVector::from_column_slice(&s.alpha_star))?;
    let f11 = f.active_block(&s.active_set())?;
    f11.cholesky()
        .map(|c| c.inverse())
        .ok_or_else(|| Error::DegenerateDesign("active Fisher block is not positive definite".into()))
}

/// GOAL fit used by the oracle check: scheduled `λ` when `use_schedule`,
/// otherwise the balance-tuned grid search.
fn oracle_fit(d: &Dataset, gamma: f64, use_schedule: bool, opts: &FitOptions) -> Result<(DVector<f64>, bool)> {
    if use_schedule {
        let (l1, l2) = lambda_schedule(d.n(), gamma)?;
        let w = compute_weights(&ols_fit(d)?, gamma)?;
        let pen = PenaltySpec::new(l1, l2, w, gamma)?;
        let r = fit(d, &pen, &DVector::zeros(d.p()), opts)?;
        Ok((r.alpha_hat, r.converged))
    } else {
        let m = MethodSpec::new(crate::estimators::MethodKind::Goal, gamma)?;
        let e = fit_method_with(d, &m, &lambda_grid(d.n()), opts)?;
        Ok((e.alpha_hat, true))
    }
}

/// Empirical check of selection consistency and the limiting normal law of
/// the active coefficients.
pub fn oracle_diagnostics(
    s: &Scenario,
    r: usize,
    use_schedule: bool,
    gamma: f64,
    opts: &HarnessOptions,
) -> Result<OracleDiagnostics> {
    oracle_diagnostics_with_reference(s, r, use_schedule, gamma, opts, REFERENCE_N)
}

pub fn oracle_diagnostics_with_reference(
    s: &Scenario,
    r: usize,
    use_schedule: bool,
    gamma: f64,
    opts: &HarnessOptions,
    n_ref: usize,
) -> Result<OracleDiagnostics> {
    if r < 50 {
        return Err(Error::InvalidArgument(format!(
            "oracle diagnostics need at least 50 replications, got {r}"
        )));
    }
    s.validate()?;
    let roles = s.roles();
    let active = roles.active();
    let inactive = roles.inactive();

    let pool = opts.pool()?;
    let fits: Vec<Result<(DVector<f64>, bool)>> = pool.install(|| {
        (1..=r as u64)
            .into_par_iter()
            .map(|i| oracle_fit(&s.replicate(i), gamma, use_schedule, &opts.fit))
            .collect()
    });
    let fits = fits.into_iter().collect::<Result<Vec<_>>>()?;

    let rf = r as f64;
    let zero_ok = fits
        .iter()
        .filter(|(a, _)| inactive.iter().all(|&j| a[j].abs() <= SELECTION_TOL))
        .count();
    let nonzero_ok = fits
        .iter()
        .filter(|(a, _)| active.iter().all(|&j| a[j].abs() > SELECTION_TOL))
        .count();
    let unconverged = fits.iter().filter(|(_, c)| !c).count();

    let inv = if active.is_empty() {
        DMatrix::zeros(0, 0)
    } else {
        reference_inverse_information(s, n_ref)?
    };
    let scale = (s.n as f64).sqrt();
    let standardized_moments = active
        .iter()
        .enumerate()
        .map(|(k, &j)| {
            let z: Vec<f64> = fits.iter().map(|(a, _)| scale * (a[j] - s.alpha_star[j])).collect();
            let mean = z.iter().sum::<f64>() / rf;
            let variance = z.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (rf - 1.0);
            CoordinateMoments {
                index: j,
                mean,
                variance,
                mean_se: (variance / rf).sqrt(),
                reference_variance: inv[(k, k)],
            }
        })
        .collect();

    Ok(OracleDiagnostics {
        n: s.n,
        replications: r,
        unconverged,
        zero_recovery_rate: zero_ok as f64 / rf,
        nonzero_recovery_rate: nonzero_ok as f64 / rf,
        standardized_moments,
    })
}

/// True when `rates` never drops by more than `slack` from one entry to the next.
pub fn nondecreasing_with_slack(rates: &[f64], slack: f64) -> bool {
    rates.windows(2).all(|w| w[1] >= w[0] - slack)
}
