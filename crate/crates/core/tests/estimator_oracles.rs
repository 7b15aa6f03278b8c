mod common;

use goal::estimators::{
    clip_propensity, fit_method, iptw_ate, selected_support, wamd, MethodKind, MethodSpec, SELECTION_TOL,
};
use goal::model::{propensity, Dataset};
use goal::simgen::paper_scenario;
use goal::solver::{fit, penalized_objective, FitOptions, PenaltySpec};
use goal::weights::{compute_weights, lambda_grid, ols_fit, OlsFit};
use goal::Error;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;

/// The balance criterion evaluated term by term from its displayed formula.
fn wamd_literal(d: &Dataset, ps: &[f64], beta: &[f64]) -> f64 {
    let n = d.n();
    let a = d.treatment();
    let mut total = 0.0;
    for j in 0..d.p() {
        let col: Vec<f64> = (0..n).map(|i| d.x()[(i, j)]).collect();
        let mean = col.iter().sum::<f64>() / n as f64;
        let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0)).sqrt();
        let omega: Vec<f64> = (0..n).map(|i| a[i] / ps[i] + (1.0 - a[i]) / (1.0 - ps[i])).collect();
        let num1: f64 = (0..n).map(|i| omega[i] * a[i] * col[i]).sum();
        let den1: f64 = (0..n).map(|i| omega[i] * a[i]).sum();
        let num0: f64 = (0..n).map(|i| omega[i] * (1.0 - a[i]) * col[i]).sum();
        let den0: f64 = (0..n).map(|i| omega[i] * (1.0 - a[i])).sum();
        total += beta[j].abs() * (num1 / den1 - num0 / den0).abs() / sd;
    }
    total
}

#[test]
fn wamd_matches_literal_formula() {
    let mut rng = common::rng(50);
    for _ in 0..10 {
        let d = common::random_two_arm(&mut rng, 50, 3);
        let ps: Vec<f64> = (0..50).map(|_| rng.random_range(0.05..0.95)).collect();
        let beta: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
        let ols = OlsFit::from_coefficients(0.0, DVector::from_vec(beta.clone()));
        let got = wamd(&d, &DVector::from_vec(ps.clone()), &ols).unwrap();
        let want = wamd_literal(&d, &ps, &beta);
        assert!((got - want).abs() < 1e-12 * want.max(1.0), "{got} vs {want}");
    }
}

#[test]
fn wamd_zero_under_exact_balance() {
    // each covariate value appears once in each arm
    let x = DMatrix::from_row_slice(4, 2, &[1.0, 5.0, 1.0, 5.0, 3.0, -1.0, 3.0, -1.0]);
    let a = DVector::from_row_slice(&[1.0, 0.0, 1.0, 0.0]);
    let d = Dataset::new(x, a, DVector::zeros(4)).unwrap();
    let ols = OlsFit::from_coefficients(0.0, DVector::from_row_slice(&[1.0, 2.0]));
    assert_eq!(wamd(&d, &DVector::from_element(4, 0.3), &ols).unwrap(), 0.0);
}

#[test]
fn hajek_four_unit_hand_value() {
    let d = Dataset::new(
        DMatrix::from_element(4, 1, 1.0),
        DVector::from_row_slice(&[1.0, 0.0, 1.0, 0.0]),
        DVector::from_row_slice(&[2.0, 1.0, 3.0, 0.0]),
    )
    .unwrap();
    let ps = DVector::from_row_slice(&[0.8, 0.8, 0.2, 0.2]);
    // treated: (2/0.8 + 3/0.2)/(1/0.8 + 1/0.2) = 17.5/6.25 = 2.8
    // control: (1/0.2 + 0/0.8)/(1/0.2 + 1/0.8) = 5/6.25 = 0.8
    assert!((iptw_ate(&d, &ps).unwrap() - 2.0).abs() < 1e-14);
}

#[test]
fn half_scores_give_difference_in_means() {
    let mut rng = common::rng(2);
    let d = common::random_two_arm(&mut rng, 40, 2);
    let (mut s1, mut n1, mut s0, mut n0) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..40 {
        if d.treatment()[i] == 1.0 {
            s1 += d.outcome()[i];
            n1 += 1.0;
        } else {
            s0 += d.outcome()[i];
            n0 += 1.0;
        }
    }
    let ate = iptw_ate(&d, &DVector::from_element(40, 0.5)).unwrap();
    assert!((ate - (s1 / n1 - s0 / n0)).abs() < 1e-12);
}

#[test]
fn degenerate_inputs() {
    let d = Dataset::new(DMatrix::from_element(3, 1, 1.0), DVector::from_element(3, 1.0), DVector::zeros(3)).unwrap();
    assert!(matches!(iptw_ate(&d, &DVector::from_element(3, 0.5)), Err(Error::DegenerateArm(0))));
    let d = Dataset::new(
        DMatrix::from_element(2, 1, 1.0),
        DVector::from_row_slice(&[1.0, 0.0]),
        DVector::zeros(2),
    )
    .unwrap();
    assert!(matches!(iptw_ate(&d, &DVector::from_row_slice(&[0.0, 0.5])), Err(Error::NonFiniteWeight { .. })));
}

#[test]
fn support_rule_examples() {
    let s = selected_support(&DVector::from_row_slice(&[0.0, 1e-9, 2.0]), SELECTION_TOL);
    assert_eq!(s, vec![2]);
    assert!(selected_support(&DVector::zeros(3), SELECTION_TOL).is_empty());
    assert_eq!(selected_support(&DVector::from_row_slice(&[1e-7, -1e-7]), SELECTION_TOL), vec![0, 1]);
}

#[test]
fn huge_penalty_gives_raw_difference() {
    let mut rng = common::rng(3);
    let d = common::random_two_arm(&mut rng, 30, 3);
    for m in [MethodSpec::goal(), MethodSpec::oal(), MethodSpec::lasso()] {
        let e = fit_method(&d, &m, &[(1e12, 0.0)]).unwrap();
        assert!(e.selected.is_empty());
        assert!(e.ps.iter().all(|&v| v == 0.5));
        let raw = iptw_ate(&d, &DVector::from_element(30, 0.5)).unwrap();
        assert_eq!(e.ate, raw);
    }
}

#[test]
fn lasso_finds_strong_treatment_driver() {
    let mut rng = common::rng(17);
    let d = common::random_dataset(&mut rng, 200, &[2.5, 0.0], &[1.0, 1.0]);
    let l1 = 10.0;
    let e = fit_method(&d, &MethodSpec::lasso(), &[(l1, 0.0)]).unwrap();
    assert!(e.selected.contains(&0));
    let best = common::grid_min(|a| common::objective(&d, a, l1, &[1.0, 1.0], 0.0), 2, 0.02);
    let got = common::objective(&d, e.alpha_hat.as_slice(), l1, &[1.0, 1.0], 0.0);
    assert!(got <= best + 1e-3);
}

#[test]
fn goal_without_ridge_equals_oal() {
    let s = paper_scenario(100, 0.0, 9).unwrap();
    let d = s.replicate(1);
    let grid: Vec<(f64, f64)> = lambda_grid(100).into_iter().filter(|p| p.1 == 0.0).collect();
    let g = fit_method(&d, &MethodSpec::goal(), &grid).unwrap();
    let o = fit_method(&d, &MethodSpec::oal(), &grid).unwrap();
    assert_eq!(g.selected, o.selected);
    assert_eq!(g.ate.to_bits(), o.ate.to_bits());
    assert_eq!(g.alpha_hat, o.alpha_hat);
}

#[test]
fn shared_grid_points_give_equal_objectives() {
    let s = paper_scenario(100, 0.5, 4).unwrap();
    let d = s.replicate(2);
    let w = compute_weights(&ols_fit(&d).unwrap(), 3.0).unwrap();
    let l1 = 1.0;
    let goal_pen = PenaltySpec::new(l1, 0.0, w.clone(), 3.0).unwrap();
    let oal_pen = PenaltySpec::new(l1, 0.0, w, 3.0).unwrap();
    let lasso_pen = PenaltySpec::unit(l1, 0.0, d.p(), 3.0).unwrap();
    let zero = DVector::zeros(d.p());
    let a = fit(&d, &goal_pen, &zero, &FitOptions::default()).unwrap();
    let b = fit(&d, &oal_pen, &zero, &FitOptions::default()).unwrap();
    assert_eq!(a.objective, b.objective);
    let unit = penalized_objective(&d, &a.alpha_hat, &lasso_pen).unwrap();
    let direct = common::objective(&d, a.alpha_hat.as_slice(), l1, &vec![1.0; d.p()], 0.0);
    assert!((unit - direct).abs() < 1e-9 * direct);
}

#[test]
fn true_scores_are_unbiased_at_large_n() {
    let s = paper_scenario(2000, 0.0, 33).unwrap();
    let r = 60;
    let ates: Vec<f64> = (1..=r)
        .map(|k| {
            let d = s.replicate(k);
            let ps = clip_propensity(&propensity(&d, &DVector::from_column_slice(&s.alpha_star)).unwrap());
            iptw_ate(&d, &ps).unwrap()
        })
        .collect();
    let mean = ates.iter().sum::<f64>() / r as f64;
    let sd = (ates.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (r as f64 - 1.0)).sqrt();
    assert!((mean - s.beta_a).abs() <= 3.0 * sd / (r as f64).sqrt(), "mean {mean}, sd {sd}");
}

#[test]
fn method_names_parse() {
    assert_eq!("goal".parse::<MethodKind>().unwrap(), MethodKind::Goal);
    assert_eq!(" Lasso ".parse::<MethodKind>().unwrap(), MethodKind::Lasso);
    assert!("ridge".parse::<MethodKind>().is_err());
    assert!(MethodSpec::new(MethodKind::Oal, 1.0).is_err());
    assert!(MethodSpec::new(MethodKind::Lasso, 1.0).is_ok());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn location_invariance(seed in any::<u64>(), c in -100.0f64..100.0) {
        let mut rng = common::rng(seed);
        let d = common::random_two_arm(&mut rng, 30, 2);
        let ps = DVector::from_fn(30, |_, _| rng.random_range(0.05..0.95));
        let shifted = Dataset::new(d.x().clone(), d.treatment().clone(), d.outcome().add_scalar(c)).unwrap();
        let delta = iptw_ate(&shifted, &ps).unwrap() - iptw_ate(&d, &ps).unwrap();
        prop_assert!(delta.abs() < 1e-10);
        let constant = Dataset::new(d.x().clone(), d.treatment().clone(), DVector::from_element(30, c)).unwrap();
        prop_assert!(iptw_ate(&constant, &ps).unwrap().abs() < 1e-10 * c.abs().max(1.0));
    }

    #[test]
    fn wamd_permutation_invariant(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let d = common::random_two_arm(&mut rng, 40, 4);
        let ps = DVector::from_fn(40, |_, _| rng.random_range(0.05..0.95));
        let beta = DVector::from_fn(4, |_, _| rng.random_range(-1.0..1.0));
        let perm = [2usize, 0, 3, 1];
        let dp = d.permute_columns(&perm).unwrap();
        let bp = DVector::from_fn(4, |k, _| beta[perm[k]]);
        let v = wamd(&d, &ps, &OlsFit::from_coefficients(0.0, beta)).unwrap();
        let vp = wamd(&dp, &ps, &OlsFit::from_coefficients(0.0, bp)).unwrap();
        prop_assert!((v - vp).abs() < 1e-12 * v.max(1.0));
    }
}
