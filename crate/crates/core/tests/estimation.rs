use proptest::prelude::*;

use robust_wald::estimation::{fit_mdpde, fit_weighted, objective, FitOptions, Sample};
use robust_wald::family::numeric::discretize;
use robust_wald::family::{Exponential, NormalFull, NormalKnownVar, ParametricFamily, Poisson};
use robust_wald::sim::rng::Stream;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn location_shift_moves_the_estimate(
        xs in prop::collection::vec(-5.0..5.0f64, 5..40),
        c in -100.0..100.0f64,
    ) {
        let f = NormalKnownVar::new(1.0).unwrap();
        for beta in [0.0, 0.5, 1.0] {
            let a = fit_mdpde(&f, &Sample::new(xs.clone()).unwrap(), beta).unwrap().theta[0];
            let shifted: Vec<f64> = xs.iter().map(|x| x + c).collect();
            let b = fit_mdpde(&f, &Sample::new(shifted).unwrap(), beta).unwrap().theta[0];
            prop_assert!((b - a - c).abs() < 1e-8, "beta {}: {} vs {}", beta, b - a, c);
        }
    }
}

#[test]
fn robustness_grows_with_beta() {
    // symmetric clean sample, so every beta fits the clean mean exactly
    let f = NormalKnownVar::new(1.0).unwrap();
    let n = 40;
    let mut x: Vec<f64> = (0..n)
        .map(|i| robust_wald::dist::std_normal_quantile((i as f64 + 0.5) / n as f64).unwrap())
        .collect();
    let clean = x.iter().sum::<f64>() / x.len() as f64;
    x.push(12.0);
    let sample = Sample::new(x).unwrap();
    let mut last = f64::INFINITY;
    for beta in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let gap = (fit_mdpde(&f, &sample, beta).unwrap().theta[0] - clean).abs();
        assert!(gap <= last + 1e-3, "beta {beta}: {gap} after {last}");
        last = gap;
    }
}

fn probe_local_min(f: &dyn ParametricFamily, x: Vec<f64>, beta: f64, seed: u64) {
    let w = vec![1.0 / x.len() as f64; x.len()];
    let fit = fit_weighted(f, &x, &w, beta, &FitOptions::default()).unwrap();
    let best = objective(f, &x, &w, &fit.theta, beta);
    let mut s = Stream::new(seed, 0, 2);
    for _ in 0..1000 {
        let probe: Vec<f64> = fit
            .theta
            .iter()
            .map(|t| t + (s.uniform() - 0.5) * 0.2 * t.abs().max(0.5))
            .collect();
        if !f.in_domain(&probe) {
            continue;
        }
        let v = objective(f, &x, &w, &probe, beta);
        assert!(best <= v + 1e-12, "{} beta {beta}: {best} > {v} at {probe:?}", f.name());
    }
}

#[test]
fn fitted_objective_is_a_local_minimum() {
    let cases: Vec<(Box<dyn ParametricFamily>, Vec<f64>)> = vec![
        (Box::new(NormalKnownVar::new(1.0).unwrap()), vec![1.0]),
        (Box::new(NormalFull), vec![1.0, 2.0]),
        (Box::new(Poisson), vec![4.0]),
        (Box::new(Exponential), vec![1.5]),
    ];
    for (k, (f, theta)) in cases.iter().enumerate() {
        let mut s = Stream::new(12, k as u64, 0);
        let x = s.sample(f.as_ref(), theta, 60).unwrap();
        for beta in [0.0, 0.3, 1.0] {
            probe_local_min(f.as_ref(), x.clone(), beta, 100 + k as u64);
        }
    }
}

#[test]
fn fisher_consistent_on_the_model_itself() {
    let cases: Vec<(Box<dyn ParametricFamily>, Vec<f64>)> = vec![
        (Box::new(NormalKnownVar::new(2.0).unwrap()), vec![1.0]),
        (Box::new(NormalFull), vec![-0.5, 1.3]),
        (Box::new(Poisson), vec![6.0]),
        (Box::new(Exponential), vec![0.7]),
    ];
    for (f, theta) in &cases {
        let (x, w) = discretize(f.as_ref(), theta, 64).unwrap();
        for i in 0..=10 {
            let beta = i as f64 / 10.0;
            let fit = fit_weighted(f.as_ref(), &x, &w, beta, &FitOptions::default()).unwrap();
            for (a, b) in fit.theta.iter().zip(theta) {
                assert!((a - b).abs() < 1e-4, "{} beta {beta}: {a} vs {b}", f.name());
            }
        }
    }
}
