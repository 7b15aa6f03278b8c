//! Propensity-score estimation with GOAL, OAL and lasso, tuned by weighted
//! covariate balance, followed by inverse-probability-weighted effect
//! estimation.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;

use crate::error::{check_len, Error, Result};
use crate::model::{propensity, Dataset};
use crate::solver::{fit, FitOptions, PenaltySpec};
use crate::weights::{compute_weights, ols_fit, OlsFit};

/// A coefficient counts as selected when its magnitude exceeds this.
pub const SELECTION_TOL: f64 = 1e-8;

/// Propensity scores are clipped to `[PS_CLIP, 1 − PS_CLIP]` before weighting.
pub const PS_CLIP: f64 = 1e-6;

/// Name of the effect estimator, recorded in output metadata.
pub const IPTW_VARIANT: &str = "hajek";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MethodKind {
    Goal,
    Oal,
    Lasso,
}

impl MethodKind {
    pub fn name(self) -> &'static str {
        match self {
            MethodKind::Goal => "GOAL",
            MethodKind::Oal => "OAL",
            MethodKind::Lasso => "LASSO",
        }
    }
}

impl fmt::Display for MethodKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MethodKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "GOAL" => Ok(MethodKind::Goal),
            "OAL" => Ok(MethodKind::Oal),
            "LASSO" => Ok(MethodKind::Lasso),
            other => Err(Error::Config(format!("unknown method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MethodSpec {
    pub kind: MethodKind,
    /// Weight exponent; ignored by the lasso.
    pub gamma: f64,
}

impl MethodSpec {
    pub fn new(kind: MethodKind, gamma: f64) -> Result<Self> {
        if kind != MethodKind::Lasso && !(gamma > 1.0) {
            return Err(Error::InvalidGamma(gamma));
        }
        Ok(Self { kind, gamma })
    }

    pub fn goal() -> Self {
        Self { kind: MethodKind::Goal, gamma: 3.0 }
    }

    pub fn oal() -> Self {
        Self { kind: MethodKind::Oal, gamma: 3.0 }
    }

    pub fn lasso() -> Self {
        Self { kind: MethodKind::Lasso, gamma: 3.0 }
    }

    /// The grid this method actually searches: OAL and lasso have no ridge
    /// term, so their `λ₂` is forced to zero and duplicates are dropped.
    pub fn effective_grid(&self, grid: &[(f64, f64)]) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(grid.len());
        for &(l1, l2) in grid {
            let pair = match self.kind {
                MethodKind::Goal => (l1, l2),
                MethodKind::Oal | MethodKind::Lasso => (l1, 0.0),
            };
            if !out.contains(&pair) {
                out.push(pair);
            }
        }
        out
    }
}

impl fmt::Display for MethodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind)
    }
}

/// One tuning candidate visited by [`fit_method`].
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub lambda1: f64,
    pub lambda2: f64,
    pub converged: bool,
    pub sweeps: usize,
    pub wamd: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AteEstimate {
    pub ate: f64,
    pub method: MethodSpec,
    pub selected: Vec<usize>,
    pub lambda1: f64,
    pub lambda2: f64,
    /// Clipped propensity scores of the chosen fit.
    pub ps: DVector<f64>,
    pub alpha_hat: DVector<f64>,
    pub wamd: f64,
    pub candidates: Vec<Candidate>,
}

/// `{ j : |αⱼ| > tol }`, zero-based.
pub fn selected_support(alpha: &DVector<f64>, tol: f64) -> Vec<usize> {
    alpha
        .iter()
        .enumerate()
        .filter(|(_, v)| v.abs() > tol)
        .map(|(j, _)| j)
        .collect()
}

pub fn clip_propensity(ps: &DVector<f64>) -> DVector<f64> {
    ps.map(|v| v.clamp(PS_CLIP, 1.0 - PS_CLIP))
}

fn ipt_weights(d: &Dataset, ps: &DVector<f64>) -> Result<Vec<f64>> {
    check_len("propensity vector", d.n(), ps.len())?;
    let (treated, control) = d.arm_sizes();
    if treated == 0 {
        return Err(Error::DegenerateArm(1));
    }
    if control == 0 {
        return Err(Error::DegenerateArm(0));
    }
    d.treatment()
        .iter()
        .zip(ps.iter())
        .enumerate()
        .map(|(i, (&a, &e))| {
            let w = if a == 1.0 { 1.0 / e } else { 1.0 / (1.0 - e) };
            if e > 0.0 && e < 1.0 && w.is_finite() {
                Ok(w)
            } else {
                Err(Error::NonFiniteWeight { index: i, value: e })
            }
        })
        .collect()
}

/// Weighted mean of `values` in each arm: `(treated, control)`.
fn arm_means(a: &DVector<f64>, w: &[f64], values: &[f64]) -> (f64, f64) {
    let (mut s1, mut w1, mut s0, mut w0) = (0.0, 0.0, 0.0, 0.0);
    for ((&ai, &wi), &v) in a.iter().zip(w).zip(values) {
        if ai == 1.0 {
            s1 += wi * v;
            w1 += wi;
        } else {
            s0 += wi * v;
            w0 += wi;
        }
    }
    (s1 / w1, s0 / w0)
}

fn sample_sd(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (ss / (n - 1.0)).sqrt()
}

/// Outcome-weighted absolute standardized mean difference after inverse
/// probability weighting:
///
/// ```text
/// Σⱼ |β̂ⱼ| · |x̄ⱼ(treated) − x̄ⱼ(control)| / sd(xⱼ)
/// ```
///
/// Columns with zero sample variance contribute nothing.
pub fn wamd(d: &Dataset, ps: &DVector<f64>, ols: &OlsFit) -> Result<f64> {
    check_len("outcome coefficients", d.p(), ols.beta.len())?;
    let w = ipt_weights(d, ps)?;
    let mut total = 0.0;
    for j in 0..d.p() {
        let col = d.column(j);
        let sd = sample_sd(col);
        if !(sd > 0.0) {
            continue;
        }
        let (m1, m0) = arm_means(d.treatment(), &w, col);
        total += ols.beta[j].abs() * (m1 - m0).abs() / sd;
    }
    Ok(total)
}

/// Normalized (Hájek) inverse-probability-weighted effect estimate.
pub fn iptw_ate(d: &Dataset, ps: &DVector<f64>) -> Result<f64> {
    let w = ipt_weights(d, ps)?;
    let (m1, m0) = arm_means(d.treatment(), &w, d.outcome().as_slice());
    Ok(m1 - m0)
}

/// Grid search with default solver options.
pub fn fit_method(d: &Dataset, m: &MethodSpec, grid: &[(f64, f64)]) -> Result<AteEstimate> {
    fit_method_with(d, m, grid, &FitOptions::default())
}

/// Fits every grid point (warm-started along decreasing `λ₁` within each
/// `λ₂` level), keeps the converged fit with the smallest weighted balance
/// criterion and estimates the effect with its propensity scores.
///
/// Ties in the criterion go to the earliest pair in grid order.
pub fn fit_method_with(
    d: &Dataset,
    m: &MethodSpec,
    grid: &[(f64, f64)],
    opts: &FitOptions,
) -> Result<AteEstimate> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty tuning grid".into()));
    }
    let grid = m.effective_grid(grid);
    let ols = ols_fit(d)?;
    let weights = match m.kind {
        MethodKind::Goal | MethodKind::Oal => compute_weights(&ols, m.gamma)?,
        MethodKind::Lasso => vec![1.0; d.p()],
    };
    let gamma = if m.gamma > 1.0 { m.gamma } else { 3.0 };
    let base = PenaltySpec::new(0.0, 0.0, weights, gamma)?;

    let mut levels: Vec<f64> = Vec::new();
    for &(_, l2) in &grid {
        if !levels.contains(&l2) {
            levels.push(l2);
        }
    }

    struct Fitted {
        index: usize,
        alpha: DVector<f64>,
        ps: DVector<f64>,
        wamd: f64,
    }
    let mut candidates = vec![None; grid.len()];
    let mut best: Option<Fitted> = None;
    for &l2 in &levels {
        let mut order: Vec<usize> = (0..grid.len()).filter(|&k| grid[k].1 == l2).collect();
        order.sort_by(|&a, &b| grid[b].0.total_cmp(&grid[a].0).then(a.cmp(&b)));
        let mut warm = DVector::zeros(d.p());
        for k in order {
            let pen = base.with_lambdas(grid[k].0, l2)?;
            let res = fit(d, &pen, &warm, opts)?;
            let ps = clip_propensity(&propensity(d, &res.alpha_hat)?);
            let crit = wamd(d, &ps, &ols)?;
            candidates[k] = Some(Candidate {
                lambda1: grid[k].0,
                lambda2: l2,
                converged: res.converged,
                sweeps: res.iterations,
                wamd: crit,
            });
            if res.converged {
                let better = match &best {
                    None => true,
                    Some(b) => crit < b.wamd || (crit == b.wamd && k < b.index),
                };
                if better {
                    best = Some(Fitted {
                        index: k,
                        alpha: res.alpha_hat.clone(),
                        ps,
                        wamd: crit,
                    });
                }
            }
            warm = res.alpha_hat;
        }
    }

    let best = best.ok_or(Error::NoConvergedCandidate { tried: grid.len() })?;
    let ate = iptw_ate(d, &best.ps)?;
    Ok(AteEstimate {
        ate,
        method: *m,
        selected: selected_support(&best.alpha, SELECTION_TOL),
        lambda1: grid[best.index].0,
        lambda2: grid[best.index].1,
        ps: best.ps,
        alpha_hat: best.alpha,
        wamd: best.wamd,
        candidates: candidates.into_iter().flatten().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;

    fn four_units() -> Dataset {
        Dataset::new(
            DMatrix::from_row_slice(4, 1, &[0.5, -0.2, 1.0, 0.3]),
            DVector::from_row_slice(&[1.0, 0.0, 1.0, 0.0]),
            DVector::from_row_slice(&[2.0, 1.0, 3.0, 0.0]),
        )
        .unwrap()
    }

    #[test]
    fn support_rule() {
        let s = selected_support(&DVector::from_row_slice(&[0.0, 1e-9, 2.0]), 1e-8);
        assert_eq!(s, vec![2]);
        assert!(selected_support(&DVector::zeros(3), 1e-8).is_empty());
        let s = selected_support(&DVector::from_row_slice(&[1e-7, -1e-7]), 1e-8);
        assert_eq!(s, vec![0, 1]);
        assert!(selected_support(&DVector::from_row_slice(&[1e-8]), 1e-8).is_empty());
    }

    #[test]
    fn hajek_hand_evaluation() {
        let d = four_units();
        let ps = DVector::from_row_slice(&[0.8, 0.8, 0.2, 0.2]);
        // treated: units 1 (y=2, ps=.8) and 3 (y=3, ps=.2)
        // control: units 2 (y=1, 1-ps=.2) and 4 (y=0, 1-ps=.8)
        let treated = (2.0 / 0.8 + 3.0 / 0.2) / (1.0 / 0.8 + 1.0 / 0.2);
        let control = (1.0 / 0.2 + 0.0 / 0.8) / (1.0 / 0.2 + 1.0 / 0.8);
        assert_abs_diff_eq!(iptw_ate(&d, &ps).unwrap(), treated - control, epsilon = 1e-14);
        assert_abs_diff_eq!(iptw_ate(&d, &ps).unwrap(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn constant_ps_gives_difference_of_means() {
        let d = four_units();
        let ps = DVector::from_element(4, 0.5);
        assert_abs_diff_eq!(iptw_ate(&d, &ps).unwrap(), 2.5 - 0.5, epsilon = 1e-15);
    }

    #[test]
    fn weighting_errors() {
        let d = four_units();
        let bad = DVector::from_row_slice(&[1.0, 0.5, 0.5, 0.5]);
        assert!(matches!(iptw_ate(&d, &bad), Err(Error::NonFiniteWeight { index: 0, .. })));
        let d1 = Dataset::new(
            DMatrix::from_element(2, 1, 1.0),
            DVector::from_element(2, 1.0),
            DVector::zeros(2),
        )
        .unwrap();
        let ps = DVector::from_element(2, 0.5);
        assert!(matches!(iptw_ate(&d1, &ps), Err(Error::DegenerateArm(0))));
        assert!(iptw_ate(&d, &DVector::from_element(3, 0.5)).is_err());
    }

    #[test]
    fn wamd_single_term() {
        // treated covariate values {1, 1}, control {0, 0}; column sd is sqrt(1/3)
        let d = Dataset::new(
            DMatrix::from_row_slice(4, 1, &[1.0, 0.0, 1.0, 0.0]),
            DVector::from_row_slice(&[1.0, 0.0, 1.0, 0.0]),
            DVector::zeros(4),
        )
        .unwrap();
        let ols = OlsFit::from_coefficients(0.0, DVector::from_element(1, 1.0));
        let v = wamd(&d, &DVector::from_element(4, 0.5), &ols).unwrap();
        assert_abs_diff_eq!(v, 1.0 / (1.0f64 / 3.0).sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn method_parsing_and_grid() {
        assert_eq!("goal".parse::<MethodKind>().unwrap(), MethodKind::Goal);
        assert_eq!(" Lasso ".parse::<MethodKind>().unwrap(), MethodKind::Lasso);
        assert!("ridge".parse::<MethodKind>().is_err());
        assert!(MethodSpec::new(MethodKind::Goal, 1.0).is_err());
        assert!(MethodSpec::new(MethodKind::Lasso, 1.0).is_ok());
        let grid = [(1.0, 0.0), (2.0, 0.0), (1.0, 3.0), (2.0, 3.0)];
        assert_eq!(MethodSpec::goal().effective_grid(&grid).len(), 4);
        assert_eq!(MethodSpec::oal().effective_grid(&grid), vec![(1.0, 0.0), (2.0, 0.0)]);
    }
}
