use nalgebra::{DMatrix, DVector};

use super::{ParametricFamily, ScanInterval, Support};
use crate::error::Result;
use crate::stats;

/// Exponential family parametrized by its mean θ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exponential;

fn power(theta: f64, gamma: f64) -> f64 {
    theta.powf(-gamma) / (1.0 + gamma)
}

impl ParametricFamily for Exponential {
    fn name(&self) -> &str {
        "exponential"
    }

    fn dim(&self) -> usize {
        1
    }

    fn support(&self) -> Support {
        Support::Continuous {
            lower: 0.0,
            upper: f64::INFINITY,
        }
    }

    fn in_domain(&self, theta: &[f64]) -> bool {
        theta.len() == 1 && theta[0] > 0.0 && theta[0].is_finite()
    }

    fn density(&self, theta: &[f64], x: f64) -> f64 {
        if x < 0.0 {
            0.0
        } else {
            (-x / theta[0]).exp() / theta[0]
        }
    }

    fn log_density(&self, theta: &[f64], x: f64) -> f64 {
        if x < 0.0 {
            f64::NEG_INFINITY
        } else {
            -x / theta[0] - theta[0].ln()
        }
    }

    fn score(&self, theta: &[f64], x: f64) -> DVector<f64> {
        let t = theta[0];
        DVector::from_element(1, (x - t) / (t * t))
    }

    fn score_jacobian(&self, theta: &[f64], x: f64) -> DMatrix<f64> {
        let t = theta[0];
        DMatrix::from_element(1, 1, -2.0 * x / (t * t * t) + 1.0 / (t * t))
    }

    fn spread(&self, theta: &[f64]) -> (f64, f64) {
        (theta[0], theta[0])
    }

    fn power_integral(&self, theta: &[f64], beta: f64) -> Result<f64> {
        Ok(power(theta[0], beta))
    }

    fn xi(&self, theta: &[f64], beta: f64) -> Result<DVector<f64>> {
        let t = theta[0];
        Ok(DVector::from_element(1, -power(t, beta) * beta / ((1.0 + beta) * t)))
    }

    fn xi_jacobian(&self, theta: &[f64], beta: f64) -> Result<DMatrix<f64>> {
        let t = theta[0];
        Ok(DMatrix::from_element(1, 1, power(t, beta) * beta / (t * t)))
    }

    fn j_matrix(&self, theta: &[f64], beta: f64) -> Result<DMatrix<f64>> {
        let t = theta[0];
        let b1 = 1.0 + beta;
        Ok(DMatrix::from_element(
            1,
            1,
            power(t, beta) * (1.0 + beta * beta) / (b1 * b1 * t * t),
        ))
    }

    fn k_matrix(&self, theta: &[f64], beta: f64) -> Result<DMatrix<f64>> {
        let t = theta[0];
        let g = 2.0 * beta;
        let xi = self.xi(theta, beta)?[0];
        Ok(DMatrix::from_element(
            1,
            1,
            power(t, g) * (1.0 + g * g) / ((1.0 + g) * (1.0 + g) * t * t) - xi * xi,
        ))
    }

    fn cross_integral(&self, model: &[f64], data: &[f64], beta: f64) -> Result<f64> {
        let (tm, td) = (model[0], data[0]);
        Ok(tm.powf(-beta) / td / (beta / tm + 1.0 / td))
    }

    fn kl(&self, theta1: &[f64], theta2: &[f64]) -> Result<f64> {
        let r = theta1[0] / theta2[0];
        Ok(r - r.ln() - 1.0)
    }

    fn mle(&self, x: &[f64], w: &[f64]) -> Option<Vec<f64>> {
        Some(vec![stats::weighted_mean(x, w)])
    }

    fn starts(&self, x: &[f64], w: &[f64]) -> Vec<Vec<f64>> {
        [
            stats::weighted_mean(x, w),
            stats::weighted_median(x, w) / std::f64::consts::LN_2,
        ]
        .into_iter()
        .filter(|v| *v > 0.0)
        .map(|v| vec![v])
        .collect()
    }

    fn scan_interval(&self, x: &[f64]) -> Option<ScanInterval> {
        let (_, hi) = stats::min_max(x);
        let positive_min = x.iter().copied().filter(|v| *v > 0.0).fold(f64::INFINITY, f64::min);
        let lower = if positive_min.is_finite() { 0.01 * positive_min } else { 1e-6 };
        Some(ScanInterval {
            lower,
            upper: 10.0 * hi.max(lower),
            log_scale: true,
        })
    }

    fn quantile(&self, theta: &[f64], u: f64) -> Option<f64> {
        Some(-theta[0] * u.ln())
    }
}

#[cfg(test)]
mod tests {
    use super::super::numeric;
    use super::*;

    #[test]
    fn closed_forms_match_quadrature() {
        for &b in &[0.0, 0.1, 0.5, 1.0] {
            let t = [1.8];
            assert!((Exponential.power_integral(&t, b).unwrap() - numeric::power_integral(&Exponential, &t, b).unwrap()).abs() < 1e-9);
            assert!((Exponential.xi(&t, b).unwrap()[0] - numeric::xi(&Exponential, &t, b).unwrap()[0]).abs() < 1e-9);
            assert!((Exponential.j_matrix(&t, b).unwrap()[(0, 0)] - numeric::j_matrix(&Exponential, &t, b).unwrap()[(0, 0)]).abs() < 1e-9);
            assert!((Exponential.k_matrix(&t, b).unwrap()[(0, 0)] - numeric::k_matrix(&Exponential, &t, b).unwrap()[(0, 0)]).abs() < 1e-9);
            assert!((Exponential.xi_jacobian(&t, b).unwrap()[(0, 0)] - numeric::xi_jacobian(&Exponential, &t, b).unwrap()[(0, 0)]).abs() < 1e-7);
        }
    }

    #[test]
    fn cross_and_kl_match_quadrature() {
        let a = Exponential.cross_integral(&[2.0], &[0.7], 0.4).unwrap();
        let b = numeric::cross_integral(&Exponential, &[2.0], &[0.7], 0.4).unwrap();
        assert!((a - b).abs() < 1e-9);
        let a = Exponential.kl(&[2.0], &[0.7]).unwrap();
        let b = numeric::kl(&Exponential, &[2.0], &[0.7]).unwrap();
        assert!((a - b).abs() < 1e-9);
    }
}
