use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use super::{ParametricFamily, ScanInterval, Support};
use crate::dist::std_normal_quantile;
use crate::error::{Error, Result};
use crate::stats;

/// ∫ φ_σ^{1+γ} for a normal density with standard deviation σ.
fn normal_power(sigma: f64, gamma: f64) -> f64 {
    (2.0 * PI * sigma * sigma).powf(-0.5 * gamma) / (1.0 + gamma).sqrt()
}

fn normal_density(mu: f64, sigma: f64, x: f64) -> f64 {
    let t = (x - mu) / sigma;
    (-0.5 * t * t).exp() / (sigma * (2.0 * PI).sqrt())
}

/// ∫ f_{(mm, sm)}^β f_{(md, sd)} for normal densities.
fn normal_cross(mm: f64, sm: f64, md: f64, sd: f64, beta: f64) -> f64 {
    let v = sm * sm + beta * sd * sd;
    let d = mm - md;
    (2.0 * PI * sm * sm).powf(-0.5 * beta) * sm / v.sqrt() * (-0.5 * beta * d * d / v).exp()
}

fn efficiency_factor(beta: f64) -> f64 {
    (1.0 + beta * beta / (1.0 + 2.0 * beta)).powf(1.5)
}

/// Normal location family with known standard deviation σ; θ = μ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalKnownVar {
    sigma: f64,
}

impl NormalKnownVar {
    pub fn new(sigma: f64) -> Result<Self> {
        if sigma > 0.0 && sigma.is_finite() {
            Ok(Self { sigma })
        } else {
            Err(Error::InvalidInput(format!("sigma {sigma} must be positive")))
        }
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

impl ParametricFamily for NormalKnownVar {
    fn name(&self) -> &str {
        "normal-known-sigma"
    }

    fn dim(&self) -> usize {
        1
    }

    fn support(&self) -> Support {
        Support::Continuous {
            lower: f64::NEG_INFINITY,
            upper: f64::INFINITY,
        }
    }

    fn in_domain(&self, theta: &[f64]) -> bool {
        theta.len() == 1 && theta[0].is_finite()
    }

    fn density(&self, theta: &[f64], x: f64) -> f64 {
        normal_density(theta[0], self.sigma, x)
    }

    fn log_density(&self, theta: &[f64], x: f64) -> f64 {
        let t = (x - theta[0]) / self.sigma;
        -0.5 * t * t - self.sigma.ln() - 0.5 * (2.0 * PI).ln()
    }

    fn score(&self, theta: &[f64], x: f64) -> DVector<f64> {
        DVector::from_element(1, (x - theta[0]) / (self.sigma * self.sigma))
    }

    fn score_jacobian(&self, _theta: &[f64], _x: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, -1.0 / (self.sigma * self.sigma))
    }

    fn spread(&self, theta: &[f64]) -> (f64, f64) {
        (theta[0], self.sigma)
    }

    fn power_integral(&self, _theta: &[f64], beta: f64) -> Result<f64> {
        Ok(normal_power(self.sigma, beta))
    }

    fn xi(&self, _theta: &[f64], _beta: f64) -> Result<DVector<f64>> {
        Ok(DVector::zeros(1))
    }

    fn xi_jacobian(&self, _theta: &[f64], _beta: f64) -> Result<DMatrix<f64>> {
        Ok(DMatrix::zeros(1, 1))
    }

    fn j_matrix(&self, _theta: &[f64], beta: f64) -> Result<DMatrix<f64>> {
        let s2 = self.sigma * self.sigma;
        Ok(DMatrix::from_element(1, 1, normal_power(self.sigma, beta) / ((1.0 + beta) * s2)))
    }

    fn k_matrix(&self, _theta: &[f64], beta: f64) -> Result<DMatrix<f64>> {
        let s2 = self.sigma * self.sigma;
        let g = 2.0 * beta;
        Ok(DMatrix::from_element(1, 1, normal_power(self.sigma, g) / ((1.0 + g) * s2)))
    }

    fn sigma(&self, _theta: &[f64], beta: f64) -> Result<DMatrix<f64>> {
        Ok(DMatrix::from_element(1, 1, efficiency_factor(beta) * self.sigma * self.sigma))
    }

    fn cross_integral(&self, model: &[f64], data: &[f64], beta: f64) -> Result<f64> {
        Ok(normal_cross(model[0], self.sigma, data[0], self.sigma, beta))
    }

    fn kl(&self, theta1: &[f64], theta2: &[f64]) -> Result<f64> {
        let d = (theta1[0] - theta2[0]) / self.sigma;
        Ok(0.5 * d * d)
    }

    fn mle(&self, x: &[f64], w: &[f64]) -> Option<Vec<f64>> {
        Some(vec![stats::weighted_mean(x, w)])
    }

    fn starts(&self, x: &[f64], w: &[f64]) -> Vec<Vec<f64>> {
        vec![vec![stats::weighted_mean(x, w)], vec![stats::weighted_median(x, w)]]
    }

    fn scan_interval(&self, x: &[f64]) -> Option<ScanInterval> {
        let (lo, hi) = stats::min_max(x);
        Some(ScanInterval {
            lower: lo,
            upper: hi,
            log_scale: false,
        })
    }

    fn quantile(&self, theta: &[f64], u: f64) -> Option<f64> {
        std_normal_quantile(u).ok().map(|z| theta[0] + self.sigma * z)
    }
}

/// Normal family with unknown mean and standard deviation; θ = (μ, σ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalFull;

/// ζ_β = 1 + 3β + 5β² + 7β³ + 6β⁴ + 2β⁵.
pub(crate) fn zeta(beta: f64) -> f64 {
    1.0 + beta * (3.0 + beta * (5.0 + beta * (7.0 + beta * (6.0 + 2.0 * beta))))
}

impl ParametricFamily for NormalFull {
    fn name(&self) -> &str {
        "normal"
    }

    fn dim(&self) -> usize {
        2
    }

    fn support(&self) -> Support {
        Support::Continuous {
            lower: f64::NEG_INFINITY,
            upper: f64::INFINITY,
        }
    }

    fn in_domain(&self, theta: &[f64]) -> bool {
        theta.len() == 2 && theta[0].is_finite() && theta[1] > 0.0 && theta[1].is_finite()
    }

    fn density(&self, theta: &[f64], x: f64) -> f64 {
        normal_density(theta[0], theta[1], x)
    }

    fn log_density(&self, theta: &[f64], x: f64) -> f64 {
        let t = (x - theta[0]) / theta[1];
        -0.5 * t * t - theta[1].ln() - 0.5 * (2.0 * PI).ln()
    }

    fn score(&self, theta: &[f64], x: f64) -> DVector<f64> {
        let (mu, s) = (theta[0], theta[1]);
        let t = x - mu;
        DVector::from_vec(vec![t / (s * s), t * t / (s * s * s) - 1.0 / s])
    }

    fn score_jacobian(&self, theta: &[f64], x: f64) -> DMatrix<f64> {
        let (mu, s) = (theta[0], theta[1]);
        let t = x - mu;
        let s2 = s * s;
        let off = -2.0 * t / (s2 * s);
        DMatrix::from_row_slice(2, 2, &[-1.0 / s2, off, off, -3.0 * t * t / (s2 * s2) + 1.0 / s2])
    }

    fn spread(&self, theta: &[f64]) -> (f64, f64) {
        (theta[0], theta[1])
    }

    fn power_integral(&self, theta: &[f64], beta: f64) -> Result<f64> {
        Ok(normal_power(theta[1], beta))
    }

    fn xi(&self, theta: &[f64], beta: f64) -> Result<DVector<f64>> {
        let s = theta[1];
        let m = normal_power(s, beta);
        Ok(DVector::from_vec(vec![0.0, -m * beta / ((1.0 + beta) * s)]))
    }

    fn xi_jacobian(&self, theta: &[f64], beta: f64) -> Result<DMatrix<f64>> {
        let s = theta[1];
        let m = normal_power(s, beta);
        Ok(DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, beta * m / (s * s)]))
    }

    fn j_matrix(&self, theta: &[f64], beta: f64) -> Result<DMatrix<f64>> {
        let s2 = theta[1] * theta[1];
        let m = normal_power(theta[1], beta);
        let b1 = 1.0 + beta;
        Ok(DMatrix::from_row_slice(
            2,
            2,
            &[m / (b1 * s2), 0.0, 0.0, m * (2.0 + beta * beta) / (b1 * b1 * s2)],
        ))
    }

    fn k_matrix(&self, theta: &[f64], beta: f64) -> Result<DMatrix<f64>> {
        let s2 = theta[1] * theta[1];
        let g = 2.0 * beta;
        let m2 = normal_power(theta[1], g);
        let xs = self.xi(theta, beta)?[1];
        let g1 = 1.0 + g;
        Ok(DMatrix::from_row_slice(
            2,
            2,
            &[m2 / (g1 * s2), 0.0, 0.0, m2 * (2.0 + g * g) / (g1 * g1 * s2) - xs * xs],
        ))
    }

    fn sigma(&self, theta: &[f64], beta: f64) -> Result<DMatrix<f64>> {
        let s2 = theta[1] * theta[1];
        let b2 = beta * beta;
        let scale = (1.0 + beta).powi(2) / (2.0 + b2).powi(2)
            * (2.0 * zeta(beta) / (1.0 + 2.0 * beta).powf(2.5) - b2);
        Ok(DMatrix::from_row_slice(
            2,
            2,
            &[efficiency_factor(beta) * s2, 0.0, 0.0, scale * s2],
        ))
    }

    fn cross_integral(&self, model: &[f64], data: &[f64], beta: f64) -> Result<f64> {
        Ok(normal_cross(model[0], model[1], data[0], data[1], beta))
    }

    fn kl(&self, theta1: &[f64], theta2: &[f64]) -> Result<f64> {
        let (m1, s1, m2, s2) = (theta1[0], theta1[1], theta2[0], theta2[1]);
        Ok((s2 / s1).ln() + (s1 * s1 + (m1 - m2).powi(2)) / (2.0 * s2 * s2) - 0.5)
    }

    fn mle(&self, x: &[f64], w: &[f64]) -> Option<Vec<f64>> {
        let m = stats::weighted_mean(x, w);
        Some(vec![m, stats::weighted_variance(x, w, m).sqrt()])
    }

    fn starts(&self, x: &[f64], w: &[f64]) -> Vec<Vec<f64>> {
        let mut out = Vec::new();
        let m = stats::weighted_mean(x, w);
        let sd = stats::weighted_variance(x, w, m).sqrt();
        if sd > 0.0 {
            out.push(vec![m, sd]);
        }
        let med = stats::weighted_median(x, w);
        let dev: Vec<f64> = x.iter().map(|v| (v - med).abs()).collect();
        let mad = 1.482_602_218_505_602 * stats::weighted_median(&dev, w);
        if mad > 0.0 {
            out.push(vec![med, mad]);
        }
        out
    }

    fn quantile(&self, theta: &[f64], u: f64) -> Option<f64> {
        std_normal_quantile(u).ok().map(|z| theta[0] + theta[1] * z)
    }
}

#[cfg(test)]
mod tests {
    use super::super::numeric;
    use super::*;

    fn close(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> bool {
        (a - b).amax() <= tol
    }

    #[test]
    fn known_var_quantities_match_quadrature() {
        let f = NormalKnownVar::new(1.7).unwrap();
        for &b in &[0.0, 0.1, 0.5, 1.0] {
            let th = [0.3];
            assert!((f.power_integral(&th, b).unwrap() - numeric::power_integral(&f, &th, b).unwrap()).abs() < 1e-6);
            assert!(close(&f.j_matrix(&th, b).unwrap(), &numeric::j_matrix(&f, &th, b).unwrap(), 1e-6));
            assert!(close(&f.k_matrix(&th, b).unwrap(), &numeric::k_matrix(&f, &th, b).unwrap(), 1e-6));
        }
    }

    #[test]
    fn full_sigma_closed_form_matches_sandwich() {
        for &b in &[0.0, 0.1, 0.5, 1.0] {
            let th = [1.0, 2.5];
            let j = NormalFull.j_matrix(&th, b).unwrap();
            let k = NormalFull.k_matrix(&th, b).unwrap();
            let ji = j.try_inverse().unwrap();
            let sandwich = &ji * k * &ji;
            assert!(close(&NormalFull.sigma(&th, b).unwrap(), &sandwich, 1e-10 * 6.25));
        }
    }

    #[test]
    fn full_sigma_at_zero_is_inverse_fisher() {
        let s = NormalFull.sigma(&[0.0, 3.0], 0.0).unwrap();
        assert!((s[(0, 0)] - 9.0).abs() < 1e-12);
        assert!((s[(1, 1)] - 4.5).abs() < 1e-12);
    }

    #[test]
    fn zeta_expansion() {
        let b: f64 = 0.37;
        let direct = (1.0 + b).powi(3) * (1.0 + 2.0 * b * b);
        assert!((zeta(b) - direct).abs() < 1e-14);
    }

    #[test]
    fn cross_integral_matches_quadrature() {
        let th_m = [0.4, 1.3];
        let th_d = [-0.2, 0.8];
        let a = NormalFull.cross_integral(&th_m, &th_d, 0.6).unwrap();
        let b = numeric::cross_integral(&NormalFull, &th_m, &th_d, 0.6).unwrap();
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn score_jacobian_matches_difference() {
        let a = NormalFull.score_jacobian(&[0.5, 1.5], 2.0);
        let b = numeric::score_jacobian(&NormalFull, &[0.5, 1.5], 2.0);
        assert!(close(&a, &b, 1e-7));
    }
}
