//! Outcome-adaptive penalty weights and tuning-parameter schedules.
//!
//! The L1 multiplier of covariate `j` is `|β̂ⱼ|^(−γ)`, where `β̂` comes from
//! the least-squares regression of the outcome on treatment and all
//! covariates. Covariates that do not predict the outcome receive large
//! weights and are pushed out of the propensity model.

use nalgebra::{DMatrix, DVector, SVD};

use crate::error::{Error, Result};
use crate::model::Dataset;

/// Least-squares fit of `Y` on `[A | X]`.
#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    pub beta_a: f64,
    pub beta: DVector<f64>,
    pub residual_norm: f64,
    pub rank: usize,
}

impl OlsFit {
    /// Builds a fit from known coefficients (weights experiments, tests).
    pub fn from_coefficients(beta_a: f64, beta: DVector<f64>) -> Self {
        let rank = beta.len() + 1;
        Self {
            beta_a,
            beta,
            residual_norm: 0.0,
            rank,
        }
    }
}

/// Minimum-norm least squares of `Y` on the treatment-augmented design.
///
/// The design is reduced to its triangular QR factor when it has at least as
/// many rows as columns; the minimum-norm solution of the triangular system
/// is then taken from an SVD with the usual `σ_max · max(n, k) · ε` rank cutoff.
pub fn ols_fit(d: &Dataset) -> Result<OlsFit> {
    let (n, p) = (d.n(), d.p());
    let k = p + 1;
    let mut design = DMatrix::zeros(n, k);
    design.column_mut(0).copy_from(d.treatment());
    design.columns_mut(1, p).copy_from(d.x());
    if design.iter().all(|&v| v == 0.0) {
        return Err(Error::DegenerateDesign("every design column is zero".into()));
    }
    let y = d.outcome();

    let (system, rhs) = if n >= k {
        let qr = design.clone().qr();
        let rhs = qr.q().tr_mul(y);
        (qr.r(), rhs)
    } else {
        (design.clone(), y.clone())
    };
    let svd = SVD::new(system, true, true);
    let smax = svd.singular_values.max();
    let cutoff = smax * (n.max(k) as f64) * f64::EPSILON;
    let rank = svd.singular_values.iter().filter(|&&s| s > cutoff).count();
    let coef = svd
        .solve(&rhs, cutoff)
        .map_err(|e| Error::DegenerateDesign(e.to_string()))?;
    let residual_norm = (y - &design * &coef).norm();
    Ok(OlsFit {
        beta_a: coef[0],
        beta: coef.rows(1, p).into_owned(),
        residual_norm,
        rank,
    })
}

/// `wⱼ = |β̂ⱼ|^(−γ)`, with `+∞` for an exactly-zero coefficient.
pub fn compute_weights(fit: &OlsFit, gamma: f64) -> Result<Vec<f64>> {
    if !(gamma > 1.0) {
        return Err(Error::InvalidGamma(gamma));
    }
    Ok(fit
        .beta
        .iter()
        .map(|&b| {
            if b == 0.0 {
                f64::INFINITY
            } else {
                b.abs().powf(-gamma)
            }
        })
        .collect())
}

/// Exponent `c` of `λ₁ = n^c`: the midpoint of `(max(0, 1 − γ/2), 1/2)`.
///
/// Any `c` in that interval gives `λ₁/√n → 0` and `λ₁ n^(γ/2 − 1) → ∞`.
pub fn schedule_exponent(gamma: f64) -> Result<f64> {
    if !(gamma > 1.0) {
        return Err(Error::InvalidGamma(gamma));
    }
    let lower = (1.0 - gamma / 2.0).max(0.0);
    Ok(0.5 * (lower + 0.5))
}

/// Rate-admissible `(λ₁, λ₂)` for sample size `n`; `λ₂ = n^(1/4)`.
pub fn lambda_schedule(n: usize, gamma: f64) -> Result<(f64, f64)> {
    let c = schedule_exponent(gamma)?;
    if n == 0 {
        return Err(Error::InvalidArgument("n must be >= 1".into()));
    }
    let nf = n as f64;
    Ok((nf.powf(c), nf.powf(0.25)))
}

/// Exponents `e` of the L1 grid `λ₁ = n · n^e`.
pub const LAMBDA1_EXPONENTS: [f64; 8] = [-10.0, -5.0, -1.0, -0.75, -0.5, -0.25, 0.25, 0.49];

/// Default tuning grid: every L1 level crossed with `λ₂ ∈ {0, n^¼, 2n^¼}`.
///
/// Ordered by `λ₂` level, then by increasing `λ₁`.
pub fn lambda_grid(n: usize) -> Vec<(f64, f64)> {
    let nf = n.max(1) as f64;
    let base = nf.powf(0.25);
    [0.0, base, 2.0 * base]
        .iter()
        .flat_map(|&l2| LAMBDA1_EXPONENTS.iter().map(move |&e| (nf * nf.powf(e), l2)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn exact_treatment_fit() {
        // X orthogonal to A and Y
        let a = [1.0, 0.0, 1.0, 0.0];
        let x = DMatrix::from_row_slice(4, 1, &[1.0, 1.0, -1.0, -1.0]);
        let y: Vec<f64> = a.iter().map(|v| 2.0 * v).collect();
        let d = Dataset::new(x, DVector::from_row_slice(&a), DVector::from_vec(y)).unwrap();
        let f = ols_fit(&d).unwrap();
        assert_abs_diff_eq!(f.beta_a, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.beta[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.residual_norm, 0.0, epsilon = 1e-12);
        assert_eq!(f.rank, 2);
    }

    #[test]
    fn perfect_line_with_empty_treatment_column() {
        let d = Dataset::new(
            DMatrix::from_row_slice(3, 1, &[1.0, 2.0, 3.0]),
            DVector::zeros(3),
            DVector::from_row_slice(&[1.0, 2.0, 3.0]),
        )
        .unwrap();
        let f = ols_fit(&d).unwrap();
        assert_abs_diff_eq!(f.beta[0], 1.0, epsilon = 1e-12);
        assert_eq!(f.beta_a, 0.0);
        assert_eq!(f.rank, 1);
        assert_abs_diff_eq!(f.residual_norm, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn all_zero_design_is_degenerate() {
        let d = Dataset::new(DMatrix::zeros(3, 2), DVector::zeros(3), DVector::from_element(3, 1.0))
            .unwrap();
        assert!(matches!(ols_fit(&d), Err(Error::DegenerateDesign(_))));
    }

    #[test]
    fn weight_values() {
        let f = OlsFit::from_coefficients(0.0, DVector::from_row_slice(&[0.5, 1.0, -1.0, 0.0]));
        let w = compute_weights(&f, 3.0).unwrap();
        assert_eq!(w[0], 8.0);
        assert_eq!(w[1], 1.0);
        assert_eq!(w[2], 1.0);
        assert_eq!(w[3], f64::INFINITY);
        assert_eq!(compute_weights(&f, 1.7).unwrap()[1], 1.0);
        assert!(matches!(compute_weights(&f, 1.0), Err(Error::InvalidGamma(_))));
    }

    #[test]
    fn schedule_values() {
        let (l1, l2) = lambda_schedule(16, 3.0).unwrap();
        assert_relative_eq!(l1, 2.0, max_relative = 1e-15);
        assert_relative_eq!(l2, 2.0, max_relative = 1e-15);
        let (l1, l2) = lambda_schedule(10_000, 3.0).unwrap();
        assert_relative_eq!(l1, 10.0, max_relative = 1e-14);
        assert_relative_eq!(l2, 10.0, max_relative = 1e-14);
        assert!(lambda_schedule(10, 0.5).is_err());
    }

    #[test]
    fn schedule_rate_conditions_at_finite_n() {
        for n in 2..5000 {
            let (l1, l2) = lambda_schedule(n, 3.0).unwrap();
            let nf = n as f64;
            assert!(l1 / nf.sqrt() < 1.0);
            assert!(l1 * nf.powf(0.5) > 1.0);
            assert!(l2 / nf.sqrt() < 1.0);
        }
        // admissible interval is open for every gamma > 1
        for g in [1.01, 1.5, 2.0, 3.0, 7.0] {
            let c = schedule_exponent(g).unwrap();
            assert!(c < 0.5 && c > 1.0 - g / 2.0 && c >= 0.0);
        }
    }

    #[test]
    fn grid_layout() {
        let g = lambda_grid(100);
        assert_eq!(g.len(), 24);
        assert_relative_eq!(g[0].0, 100.0 * 100f64.powf(-10.0), max_relative = 1e-12);
        assert_eq!(g[0].1, 0.0);
        for level in g.chunks(8) {
            assert!(level.windows(2).all(|w| w[0].0 < w[1].0));
            assert!(level.iter().all(|&(l1, l2)| l1 > 0.0 && l2 == level[0].1));
        }
        assert!(g.iter().all(|&(_, l2)| l2 >= 0.0));
        assert_relative_eq!(g[8].1, 100f64.powf(0.25));
        assert_relative_eq!(g[16].1, 2.0 * 100f64.powf(0.25));
    }
}
