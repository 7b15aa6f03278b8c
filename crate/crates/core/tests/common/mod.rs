//! Independent reference computations shared by the integration tests. None
//! of these call into the library's numerical code.

#![allow(dead_code)]

use goal::model::Dataset;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Gaussian covariates, logistic treatment from `alpha`, outcome `Xβ + ε`.
pub fn random_dataset(rng: &mut ChaCha8Rng, n: usize, alpha: &[f64], beta: &[f64]) -> Dataset {
    let p = alpha.len();
    let x = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    let a = DVector::from_fn(n, |i, _| {
        let eta: f64 = (0..p).map(|j| x[(i, j)] * alpha[j]).sum();
        let pr = 1.0 / (1.0 + (-eta).exp());
        if rng.random::<f64>() < pr {
            1.0
        } else {
            0.0
        }
    });
    let y = DVector::from_fn(n, |i, _| {
        (0..p).map(|j| x[(i, j)] * beta[j]).sum::<f64>() + rng.sample::<f64, _>(StandardNormal)
    });
    Dataset::new(x, a, y).unwrap()
}

/// Random dataset whose treatment arms are both nonempty.
pub fn random_two_arm(rng: &mut ChaCha8Rng, n: usize, p: usize) -> Dataset {
    loop {
        let alpha: Vec<f64> = (0..p).map(|_| rng.random_range(-1.0..1.0)).collect();
        let beta: Vec<f64> = (0..p).map(|_| rng.random_range(-1.0..1.0)).collect();
        let d = random_dataset(rng, n, &alpha, &beta);
        let (t, c) = d.arm_sizes();
        if t > 0 && c > 0 {
            return d;
        }
    }
}

fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

fn expit(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `Σᵢ −aᵢηᵢ + log(1 + e^ηᵢ)`, computed row by row.
pub fn nll(d: &Dataset, alpha: &[f64]) -> f64 {
    let x = d.x();
    (0..d.n())
        .map(|i| {
            let eta: f64 = (0..d.p()).map(|j| x[(i, j)] * alpha[j]).sum();
            -d.treatment()[i] * eta + softplus(eta)
        })
        .sum()
}

/// Penalized objective evaluated from the displayed formula.
pub fn objective(d: &Dataset, alpha: &[f64], l1: f64, w: &[f64], l2: f64) -> f64 {
    nll(d, alpha)
        + l1 * alpha.iter().zip(w).map(|(a, w)| w * a.abs()).sum::<f64>()
        + l2 * alpha.iter().map(|a| a * a).sum::<f64>()
}

/// Logistic MLE by damped Newton with step halving.
pub fn newton_mle(d: &Dataset) -> Option<Vec<f64>> {
    let (n, p) = (d.n(), d.p());
    let x = d.x();
    let mut beta = vec![0.0; p];
    for _ in 0..200 {
        let mut g = DVector::<f64>::zeros(p);
        let mut h = DMatrix::<f64>::zeros(p, p);
        for i in 0..n {
            let eta: f64 = (0..p).map(|j| x[(i, j)] * beta[j]).sum();
            let pr = expit(eta);
            let r = d.treatment()[i] - pr;
            let wt = pr * (1.0 - pr);
            for j in 0..p {
                g[j] -= r * x[(i, j)];
                for k in 0..p {
                    h[(j, k)] += wt * x[(i, j)] * x[(i, k)];
                }
            }
        }
        if g.amax() < 1e-12 {
            return Some(beta);
        }
        let step = h.lu().solve(&g)?;
        let f0 = nll(d, &beta);
        let mut t = 1.0;
        loop {
            let cand: Vec<f64> = (0..p).map(|j| beta[j] - t * step[j]).collect();
            if nll(d, &cand) <= f0 || t < 1e-12 {
                beta = cand;
                break;
            }
            t *= 0.5;
        }
    }
    Some(beta)
}

/// Accelerated proximal gradient on the penalized objective; a second,
/// unrelated algorithm for the same minimizer.
pub fn fista(d: &Dataset, l1: f64, w: &[f64], l2: f64, iters: usize) -> Vec<f64> {
    let (n, p) = (d.n(), d.p());
    let x = d.x();
    let lip = 0.25 * x.norm_squared() + 2.0 * l2;
    let step = 1.0 / lip;
    let grad = |b: &[f64]| -> Vec<f64> {
        let mut g = vec![0.0; p];
        for i in 0..n {
            let eta: f64 = (0..p).map(|j| x[(i, j)] * b[j]).sum();
            let r = d.treatment()[i] - expit(eta);
            for j in 0..p {
                g[j] -= r * x[(i, j)];
            }
        }
        for j in 0..p {
            g[j] += 2.0 * l2 * b[j];
        }
        g
    };
    let prox = |v: f64, t: f64| v.signum() * (v.abs() - t).max(0.0);
    let mut b = vec![0.0; p];
    let mut yk = b.clone();
    let mut tk = 1.0f64;
    for _ in 0..iters {
        let g = grad(&yk);
        let next: Vec<f64> = (0..p)
            .map(|j| if w[j].is_infinite() { 0.0 } else { prox(yk[j] - step * g[j], step * l1 * w[j]) })
            .collect();
        let tn = (1.0 + (1.0 + 4.0 * tk * tk).sqrt()) / 2.0;
        yk = (0..p).map(|j| next[j] + (tk - 1.0) / tn * (next[j] - b[j])).collect();
        b = next;
        tk = tn;
    }
    b
}

/// Least squares of `y` on `[A | X]` through the Cholesky factor of the
/// Gram matrix.
pub fn normal_equations(d: &Dataset) -> Vec<f64> {
    let (n, p) = (d.n(), d.p());
    let z = DMatrix::from_fn(n, p + 1, |i, j| if j == 0 { d.treatment()[i] } else { d.x()[(i, j - 1)] });
    let gram = z.transpose() * &z;
    let rhs = z.transpose() * d.outcome();
    gram.cholesky().expect("full rank").solve(&rhs).as_slice().to_vec()
}

/// Minimum of a convex `f` over the lattice with spacing `step` on
/// `[−4, 4]^p`. Leading coordinates are enumerated; along the last one the
/// restriction of a convex function is a convex sequence, so its lattice
/// minimum is found by binary search on the sign of successive differences.
pub fn grid_min(f: impl Fn(&[f64]) -> f64, p: usize, step: f64) -> f64 {
    let k = (8.0 / step).round() as usize;
    let pts: Vec<f64> = (0..=k).map(|i| -4.0 + i as f64 * step).collect();
    let mut best = f64::INFINITY;
    let mut idx = vec![0usize; p - 1];
    let mut point = vec![0.0; p];
    loop {
        for j in 0..p - 1 {
            point[j] = pts[idx[j]];
        }
        let mut eval = |m: usize| {
            point[p - 1] = pts[m];
            f(&point)
        };
        // first m with f(m+1) − f(m) ≥ 0
        let (mut lo, mut hi) = (0usize, k);
        while lo < hi {
            let mid = (lo + hi) / 2;
            if eval(mid + 1) >= eval(mid) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        best = best.min(eval(lo));
        let mut j = 0;
        loop {
            if j == p - 1 {
                return best;
            }
            idx[j] += 1;
            if idx[j] <= k {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
    }
}
