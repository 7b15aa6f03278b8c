//! Seeded synthetic data with equicorrelated Gaussian covariates.
//!
//! Covariates use the one-factor construction
//! `Xᵢⱼ = √ρ·Zᵢ₀ + √(1−ρ)·Zᵢⱼ`, which gives unit marginal variances and
//! pairwise correlation exactly `ρ`. Treatment is Bernoulli with
//! `logit P(Aᵢ = 1) = xᵢᵀα*`, and the outcome is `Yᵢ = β_A·Aᵢ + xᵢᵀβ* + εᵢ`
//! with standard normal noise.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{phi1, Dataset};

/// Generator behind every simulated dataset.
pub type SimRng = ChaCha8Rng;

/// Written into output headers so streams can be traced to an algorithm.
pub const RNG_ALGORITHM: &str = "ChaCha8Rng/rand_chacha-0.9+StandardNormal/rand_distr-0.5";

/// Generative description of one simulation setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub n: usize,
    pub rho: f64,
    pub q: usize,
    pub p: usize,
    pub alpha_star: Vec<f64>,
    pub beta_star: Vec<f64>,
    #[serde(rename = "beta_A")]
    pub beta_a: f64,
    pub seed: u64,
}

/// Block magnitudes used by [`paper_scenario`]; override to explore other
/// readings of the design.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockCoefficients {
    pub confounder_alpha: f64,
    pub confounder_beta: f64,
    pub outcome_beta: f64,
    pub treatment_alpha: f64,
}

impl Default for BlockCoefficients {
    fn default() -> Self {
        Self {
            confounder_alpha: 0.6,
            confounder_beta: 0.6,
            outcome_beta: 0.6,
            treatment_alpha: 0.1,
        }
    }
}

/// `⌊4√n − 5⌋`.
pub fn diverging_dimension(n: usize) -> usize {
    let v = (4.0 * (n as f64).sqrt() - 5.0).floor();
    if v < 0.0 {
        0
    } else {
        v as usize
    }
}

/// The diverging-dimension design with the default block magnitudes.
pub fn paper_scenario(n: usize, rho: f64, seed: u64) -> Result<Scenario> {
    blocked_scenario(n, rho, seed, BlockCoefficients::default())
}

/// `p = ⌊4√n − 5⌋`, `q = ⌊p/9⌋`, blocks of `q` confounders, `q` pure outcome
/// predictors, `q` pure treatment predictors and `p − 3q` spurious covariates,
/// true effect zero.
pub fn blocked_scenario(n: usize, rho: f64, seed: u64, b: BlockCoefficients) -> Result<Scenario> {
    let p = diverging_dimension(n);
    if p < 9 {
        return Err(Error::InvalidSampleSize(n));
    }
    let q = p / 9;
    let mut alpha_star = vec![0.0; p];
    let mut beta_star = vec![0.0; p];
    for j in 0..q {
        alpha_star[j] = b.confounder_alpha;
        beta_star[j] = b.confounder_beta;
        beta_star[q + j] = b.outcome_beta;
        alpha_star[2 * q + j] = b.treatment_alpha;
    }
    let s = Scenario {
        n,
        rho,
        q,
        p,
        alpha_star,
        beta_star,
        beta_a: 0.0,
        seed,
    };
    s.validate()?;
    Ok(s)
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n < 2 {
            return bad(format!("n must be >= 2, got {}", self.n));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return bad(format!("rho must lie in [0, 1), got {}", self.rho));
        }
        if self.q < 1 || self.p < 3 * self.q {
            return bad(format!("need q >= 1 and p >= 3q, got p = {}, q = {}", self.p, self.q));
        }
        if self.alpha_star.len() != self.p || self.beta_star.len() != self.p {
            return bad(format!(
                "alpha_star and beta_star must have length p = {} (got {} and {})",
                self.p,
                self.alpha_star.len(),
                self.beta_star.len()
            ));
        }
        if self
            .alpha_star
            .iter()
            .chain(&self.beta_star)
            .chain(std::iter::once(&self.beta_a))
            .any(|v| !v.is_finite())
        {
            return bad("coefficients must be finite".into());
        }
        Ok(())
    }

    pub fn roles(&self) -> RoleMap {
        RoleMap::from_coefficients(&self.alpha_star, &self.beta_star)
    }

    /// Indices of covariates the oracle propensity model contains.
    pub fn active_set(&self) -> Vec<usize> {
        self.roles().active()
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    /// Draws the dataset for replication `r` from its own child stream.
    pub fn replicate(&self, r: u64) -> Dataset {
        let mut rng = SimRng::seed_from_u64(child_seed(self.seed, r));
        generate(self, &mut rng)
    }
}

/// Short content hash of a set of scenarios, for output provenance.
pub fn scenario_hash(scenarios: &[Scenario]) -> String {
    let mut h = Sha256::new();
    for s in scenarios {
        h.update(s.to_toml().as_bytes());
        h.update(b"\n--\n");
    }
    h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replication `r`: `seed ⊕ mix(r)`.
pub fn child_seed(seed: u64, r: u64) -> u64 {
    seed ^ mix64(r)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    Confounder,
    OutcomePredictor,
    TreatmentPredictor,
    Spurious,
}

impl Role {
    pub const ALL: [Role; 4] = [
        Role::Confounder,
        Role::OutcomePredictor,
        Role::TreatmentPredictor,
        Role::Spurious,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Role::Confounder => "confounder",
            Role::OutcomePredictor => "outcome_predictor",
            Role::TreatmentPredictor => "treatment_predictor",
            Role::Spurious => "spurious",
        }
    }

    pub fn is_active(self) -> bool {
        matches!(self, Role::Confounder | Role::OutcomePredictor)
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoleMap {
    roles: Vec<Role>,
}

impl RoleMap {
    pub fn from_coefficients(alpha: &[f64], beta: &[f64]) -> Self {
        let roles = alpha
            .iter()
            .zip(beta)
            .map(|(&a, &b)| match (a != 0.0, b != 0.0) {
                (true, true) => Role::Confounder,
                (false, true) => Role::OutcomePredictor,
                (true, false) => Role::TreatmentPredictor,
                (false, false) => Role::Spurious,
            })
            .collect();
        Self { roles }
    }

    pub fn roles(&self) -> &[Role] {
        &self.roles
    }

    pub fn get(&self, j: usize) -> Role {
        self.roles[j]
    }

    pub fn indices(&self, role: Role) -> Vec<usize> {
        (0..self.roles.len()).filter(|&j| self.roles[j] == role).collect()
    }

    pub fn active(&self) -> Vec<usize> {
        (0..self.roles.len()).filter(|&j| self.roles[j].is_active()).collect()
    }

    pub fn inactive(&self) -> Vec<usize> {
        (0..self.roles.len()).filter(|&j| !self.roles[j].is_active()).collect()
    }
}

/// `n × p` equicorrelated standard Gaussian covariates, drawn row by row.
pub fn sample_covariates<R: Rng + ?Sized>(s: &Scenario, rng: &mut R) -> DMatrix<f64> {
    equicorrelated_gaussian(s.n, s.p, s.rho, rng)
}

pub fn equicorrelated_gaussian<R: Rng + ?Sized>(
    n: usize,
    p: usize,
    rho: f64,
    rng: &mut R,
) -> DMatrix<f64> {
    let shared = rho.sqrt();
    let own = (1.0 - rho).sqrt();
    let mut rows = Vec::with_capacity(n * p);
    for _ in 0..n {
        let z0: f64 = rng.sample(StandardNormal);
        for _ in 0..p {
            let z: f64 = rng.sample(StandardNormal);
            rows.push(shared * z0 + own * z);
        }
    }
    DMatrix::from_row_slice(n, p, &rows)
}

/// Bernoulli treatment with success probability `expit(xᵢᵀα*)`.
pub fn sample_treatment<R: Rng + ?Sized>(
    x: &DMatrix<f64>,
    alpha_star: &[f64],
    rng: &mut R,
) -> DVector<f64> {
    let eta = x * DVector::from_column_slice(alpha_star);
    eta.map(|e| {
        let u: f64 = rng.random();
        if u < phi1(e) {
            1.0
        } else {
            0.0
        }
    })
}

/// Noise-free outcome `β_A·A + Xβ*`.
pub fn outcome_mean(x: &DMatrix<f64>, a: &DVector<f64>, beta_a: f64, beta_star: &[f64]) -> DVector<f64> {
    x * DVector::from_column_slice(beta_star) + a * beta_a
}

pub fn sample_outcome<R: Rng + ?Sized>(
    x: &DMatrix<f64>,
    a: &DVector<f64>,
    beta_a: f64,
    beta_star: &[f64],
    rng: &mut R,
) -> DVector<f64> {
    let mut y = outcome_mean(x, a, beta_a, beta_star);
    for v in y.iter_mut() {
        let e: f64 = rng.sample(StandardNormal);
        *v += e;
    }
    y
}

/// Covariates, then treatment, then outcome, all from one stream.
pub fn generate<R: Rng + ?Sized>(s: &Scenario, rng: &mut R) -> Dataset {
    let x = sample_covariates(s, rng);
    let a = sample_treatment(&x, &s.alpha_star, rng);
    let y = sample_outcome(&x, &a, s.beta_a, &s.beta_star, rng);
    Dataset::new(x, a, y).expect("simulated data is well formed")
}
