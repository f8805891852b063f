use nalgebra::DMatrix;
use proptest::prelude::*;

use robust_wald::family::numeric;
use robust_wald::family::{
    dpd_divergence, mdpde_influence, Exponential, NormalFull, NormalKnownVar, ParametricFamily, Poisson,
};

const BETAS: [f64; 4] = [0.0, 0.1, 0.5, 1.0];

fn all() -> Vec<(Box<dyn ParametricFamily>, Vec<f64>)> {
    vec![
        (Box::new(NormalKnownVar::new(1.7).unwrap()), vec![0.4]),
        (Box::new(NormalFull), vec![-1.2, 0.8]),
        (Box::new(Poisson), vec![3.5]),
        (Box::new(Exponential), vec![2.2]),
    ]
}

fn max_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).abs().max()
}

#[test]
fn closed_forms_agree_with_quadrature() {
    for (f, theta) in all() {
        let f = f.as_ref();
        for beta in BETAS {
            let j = max_diff(&f.j_matrix(&theta, beta).unwrap(), &numeric::j_matrix(f, &theta, beta).unwrap());
            let k = max_diff(&f.k_matrix(&theta, beta).unwrap(), &numeric::k_matrix(f, &theta, beta).unwrap());
            let xi = (f.xi(&theta, beta).unwrap() - numeric::xi(f, &theta, beta).unwrap()).abs().max();
            assert!(j < 1e-6 && k < 1e-6 && xi < 1e-6, "{} beta {beta}: {j} {k} {xi}", f.name());
        }
    }
}

#[test]
fn influence_has_mean_zero_under_the_model() {
    for (f, theta) in all() {
        let f = f.as_ref();
        for beta in BETAS {
            for i in 0..f.dim() {
                let mean = numeric::integrate(f, &theta, 1.0, |x| {
                    mdpde_influence(f, &theta, beta, x).unwrap()[i] * f.density(&theta, x)
                })
                .unwrap();
                assert!(mean.abs() < 1e-6, "{} beta {beta} coord {i}: {mean}", f.name());
            }
        }
    }
}

fn family_and_pair() -> impl Strategy<Value = (usize, Vec<f64>, Vec<f64>)> {
    (0usize..4).prop_flat_map(|k| {
        let theta = match k {
            0 => prop::collection::vec(-3.0..3.0f64, 1).boxed(),
            1 => (-3.0..3.0f64, 0.3..3.0f64).prop_map(|(a, b)| vec![a, b]).boxed(),
            _ => prop::collection::vec(0.2..10.0f64, 1).boxed(),
        };
        (Just(k), theta.clone(), theta)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn divergence_is_nonnegative((k, t1, t2) in family_and_pair(), beta in 0.0..1.0f64) {
        let fams = all();
        let f = fams[k].0.as_ref();
        let d = dpd_divergence(f, &t1, &t2, beta).unwrap();
        prop_assert!(d >= 0.0);
        let dist = t1.iter().zip(&t2).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if dist > 1e-2 {
            prop_assert!(d > 0.0, "zero divergence off the diagonal");
        }
        prop_assert!(dpd_divergence(f, &t1, &t1, beta).unwrap() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn divergence_is_continuous_at_zero((k, t1, t2) in family_and_pair()) {
        let fams = all();
        let f = fams[k].0.as_ref();
        let d0 = dpd_divergence(f, &t1, &t2, 0.0).unwrap();
        let e2 = (dpd_divergence(f, &t1, &t2, 1e-2).unwrap() - d0).abs();
        let e4 = (dpd_divergence(f, &t1, &t2, 1e-4).unwrap() - d0).abs();
        prop_assert!(e4 <= e2 + 1e-9, "{e4} > {e2}");
        // first-order convergence: a hundredfold smaller beta, a much smaller gap
        prop_assert!(e4 <= 0.1 * e2 + 1e-9, "{e4} vs {e2}");
    }
}
