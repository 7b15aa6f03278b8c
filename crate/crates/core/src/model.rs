//! Logistic propensity-score model primitives.
//!
//! The propensity model has no intercept: `logit P(A = 1 | x) = xᵀα`. The
//! negative log-likelihood is written through the log-partition function
//! `φ(t) = log(1 + eᵗ)`:
//!
//! ```text
//! ℓ(α) = Σᵢ [ −aᵢ·xᵢᵀα + φ(xᵢᵀα) ]
//! ```

use nalgebra::{DMatrix, DVector};

use crate::error::{check_len, Error, Result};

/// Covariates, binary treatment and continuous outcome for `n` units.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: DMatrix<f64>,
    a: DVector<f64>,
    y: DVector<f64>,
}

impl Dataset {
    /// Validates shapes, finiteness and that every treatment entry is 0 or 1.
    pub fn new(x: DMatrix<f64>, a: DVector<f64>, y: DVector<f64>) -> Result<Self> {
        let (n, p) = x.shape();
        if n == 0 {
            return Err(Error::InvalidData("dataset has no rows".into()));
        }
        if p == 0 {
            return Err(Error::InvalidData("dataset has no covariates".into()));
        }
        check_len("treatment vector", n, a.len())?;
        check_len("outcome vector", n, y.len())?;
        if let Some(i) = a.iter().position(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::InvalidData(format!(
                "treatment at row {} is {}, expected 0 or 1",
                i + 1,
                a[i]
            )));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("non-finite covariate or outcome".into()));
        }
        Ok(Self { x, a, y })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn treatment(&self) -> &DVector<f64> {
        &self.a
    }

    pub fn outcome(&self) -> &DVector<f64> {
        &self.y
    }

    /// Contiguous view of covariate column `j` (storage is column-major).
    pub fn column(&self, j: usize) -> &[f64] {
        let n = self.n();
        &self.x.as_slice()[j * n..(j + 1) * n]
    }

    /// Returns a copy with covariate columns reordered so that new column
    /// `k` is old column `perm[k]`.
    pub fn permute_columns(&self, perm: &[usize]) -> Result<Self> {
        check_len("column permutation", self.p(), perm.len())?;
        let x = DMatrix::from_fn(self.n(), self.p(), |i, k| self.x[(i, perm[k])]);
        Ok(Self {
            x,
            a: self.a.clone(),
            y: self.y.clone(),
        })
    }

    /// Number of treated and control units.
    pub fn arm_sizes(&self) -> (usize, usize) {
        let treated = self.a.iter().filter(|&&v| v == 1.0).count();
        (treated, self.n() - treated)
    }

    pub(crate) fn check_coefficients(&self, alpha: &DVector<f64>) -> Result<()> {
        check_len("coefficient vector", self.p(), alpha.len())
    }
}

/// Log-partition function `log(1 + eᵗ)` without overflow.
#[inline]
pub fn phi(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// First derivative of [`phi`], the logistic function.
#[inline]
pub fn phi1(t: f64) -> f64 {
    // exp overflow gives 1/(1 + inf) = 0, which is the correct limit
    1.0 / (1.0 + (-t).exp())
}

/// Second derivative of [`phi`].
#[inline]
pub fn phi2(t: f64) -> f64 {
    let s = phi1(t);
    s * (1.0 - s)
}

/// Linear predictor `Xα`.
pub fn linear_predictor(d: &Dataset, alpha: &DVector<f64>) -> Result<DVector<f64>> {
    d.check_coefficients(alpha)?;
    Ok(d.x() * alpha)
}

pub(crate) fn nll_from_eta(a: &DVector<f64>, eta: &[f64]) -> f64 {
    a.iter()
        .zip(eta)
        .map(|(&ai, &e)| -ai * e + phi(e))
        .sum()
}

pub fn neg_log_likelihood(d: &Dataset, alpha: &DVector<f64>) -> Result<f64> {
    let eta = linear_predictor(d, alpha)?;
    Ok(nll_from_eta(d.treatment(), eta.as_slice()))
}

/// Gradient of [`neg_log_likelihood`]: `−Σᵢ (aᵢ − φ′(xᵢᵀα)) xᵢ`.
pub fn score(d: &Dataset, alpha: &DVector<f64>) -> Result<DVector<f64>> {
    let eta = linear_predictor(d, alpha)?;
    let resid = DVector::from_iterator(
        d.n(),
        d.treatment()
            .iter()
            .zip(eta.iter())
            .map(|(&ai, &e)| phi1(e) - ai),
    );
    Ok(d.x().tr_mul(&resid))
}

/// Fitted propensity scores `expit(xᵢᵀα)`.
pub fn propensity(d: &Dataset, alpha: &DVector<f64>) -> Result<DVector<f64>> {
    Ok(linear_predictor(d, alpha)?.map(phi1))
}

/// Per-observation Fisher information `(1/n) Σᵢ φ″(xᵢᵀα) xᵢxᵢᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct FisherInfo {
    matrix: DMatrix<f64>,
}

impl FisherInfo {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// The block indexed by `active` in both rows and columns, in the given order.
    pub fn active_block(&self, active: &[usize]) -> Result<DMatrix<f64>> {
        let p = self.matrix.nrows();
        if let Some(&j) = active.iter().find(|&&j| j >= p) {
            return Err(Error::InvalidArgument(format!(
                "active index {j} out of range for p = {p}"
            )));
        }
        Ok(DMatrix::from_fn(active.len(), active.len(), |r, c| {
            self.matrix[(active[r], active[c])]
        }))
    }
}

pub fn fisher_information(d: &Dataset, alpha: &DVector<f64>) -> Result<FisherInfo> {
    let eta = linear_predictor(d, alpha)?;
    let n = d.n();
    let mut scaled = d.x().clone();
    for (i, &e) in eta.iter().enumerate() {
        let s = phi2(e).sqrt();
        scaled.row_mut(i).scale_mut(s);
    }
    let mut f = scaled.tr_mul(&scaled) / n as f64;
    // gemm accumulation order differs between (j, k) and (k, j)
    let ft = f.transpose();
    f += ft;
    f.scale_mut(0.5);
    Ok(FisherInfo { matrix: f })
}
