use nalgebra::{DMatrix, DVector};
use statrs::function::gamma::ln_gamma;

use super::{ParametricFamily, ScanInterval, Support};
use crate::error::{Error, Result};
use crate::stats;

const TAIL_MASS: f64 = 1e-12;
const CUTOFF: f64 = 1e-14;

/// Poisson family parametrized by its mean θ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Poisson;

fn log_pmf(theta: f64, k: f64) -> f64 {
    k * theta.ln() - theta - ln_gamma(k + 1.0)
}

/// Σ_k f^{1+γ}, Σ_k u f^{1+γ} and Σ_k u² f^{1+γ}, summed over the counts
/// that carry all but 1e-12 of the probability mass.
fn power_sums(theta: f64, gamma: f64) -> Result<[f64; 3]> {
    let sd = theta.sqrt();
    let start = (theta - 40.0 * sd - 10.0).max(0.0).floor();
    let mut cum = 0.0;
    let mut out = [0.0; 3];
    let mut k = start;
    for _ in 0..50_000_000u64 {
        let lp = log_pmf(theta, k);
        let p = lp.exp();
        let w = ((1.0 + gamma) * lp).exp();
        let u = k / theta - 1.0;
        out[0] += w;
        out[1] += u * w;
        out[2] += u * u * w;
        cum += p;
        if cum >= 1.0 - TAIL_MASS && k >= theta && p < CUTOFF {
            return Ok(out);
        }
        k += 1.0;
    }
    Err(Error::NoConvergence(50_000_000))
}

impl ParametricFamily for Poisson {
    fn name(&self) -> &str {
        "poisson"
    }

    fn dim(&self) -> usize {
        1
    }

    fn support(&self) -> Support {
        Support::Counts
    }

    fn in_domain(&self, theta: &[f64]) -> bool {
        theta.len() == 1 && theta[0] > 0.0 && theta[0].is_finite()
    }

    fn density(&self, theta: &[f64], x: f64) -> f64 {
        if x < 0.0 || x.fract() != 0.0 {
            return 0.0;
        }
        log_pmf(theta[0], x).exp()
    }

    fn log_density(&self, theta: &[f64], x: f64) -> f64 {
        if x < 0.0 || x.fract() != 0.0 {
            return f64::NEG_INFINITY;
        }
        log_pmf(theta[0], x)
    }

    fn score(&self, theta: &[f64], x: f64) -> DVector<f64> {
        DVector::from_element(1, x / theta[0] - 1.0)
    }

    fn score_jacobian(&self, theta: &[f64], x: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, -x / (theta[0] * theta[0]))
    }

    fn spread(&self, theta: &[f64]) -> (f64, f64) {
        (theta[0], theta[0].sqrt())
    }

    fn power_integral(&self, theta: &[f64], beta: f64) -> Result<f64> {
        Ok(power_sums(theta[0], beta)?[0])
    }

    fn xi(&self, theta: &[f64], beta: f64) -> Result<DVector<f64>> {
        Ok(DVector::from_element(1, power_sums(theta[0], beta)?[1]))
    }

    fn j_matrix(&self, theta: &[f64], beta: f64) -> Result<DMatrix<f64>> {
        Ok(DMatrix::from_element(1, 1, power_sums(theta[0], beta)?[2]))
    }

    fn k_matrix(&self, theta: &[f64], beta: f64) -> Result<DMatrix<f64>> {
        let xi = power_sums(theta[0], beta)?[1];
        Ok(DMatrix::from_element(1, 1, power_sums(theta[0], 2.0 * beta)?[2] - xi * xi))
    }

    fn sigma(&self, theta: &[f64], beta: f64) -> Result<DMatrix<f64>> {
        let s1 = power_sums(theta[0], beta)?;
        let s2 = power_sums(theta[0], 2.0 * beta)?;
        let j = s1[2];
        let k = s2[2] - s1[1] * s1[1];
        Ok(DMatrix::from_element(1, 1, k / (j * j)))
    }

    fn kl(&self, theta1: &[f64], theta2: &[f64]) -> Result<f64> {
        let (a, b) = (theta1[0], theta2[0]);
        Ok(a * (a / b).ln() - a + b)
    }

    fn mle(&self, x: &[f64], w: &[f64]) -> Option<Vec<f64>> {
        Some(vec![stats::weighted_mean(x, w)])
    }

    fn starts(&self, x: &[f64], w: &[f64]) -> Vec<Vec<f64>> {
        [stats::weighted_mean(x, w), stats::weighted_median(x, w)]
            .into_iter()
            .filter(|v| *v > 0.0)
            .map(|v| vec![v])
            .collect()
    }

    fn scan_interval(&self, x: &[f64]) -> Option<ScanInterval> {
        let (_, hi) = stats::min_max(x);
        let positive_min = x.iter().copied().filter(|v| *v > 0.0).fold(f64::INFINITY, f64::min);
        let lower = if positive_min.is_finite() { 0.01 * positive_min } else { 1e-3 };
        Some(ScanInterval {
            lower,
            upper: 2.0 * hi + 10.0,
            log_scale: true,
        })
    }

    fn quantile(&self, theta: &[f64], u: f64) -> Option<f64> {
        // inversion by sequential search from zero
        let mut k = 0.0;
        let mut p = (-theta[0]).exp();
        let mut cdf = p;
        if p == 0.0 {
            return None;
        }
        while cdf < u {
            k += 1.0;
            p *= theta[0] / k;
            cdf += p;
            if p == 0.0 && k > theta[0] {
                break;
            }
        }
        Some(k)
    }
}

#[cfg(test)]
mod tests {
    use super::super::numeric;
    use super::*;

    #[test]
    fn sums_match_generic_path() {
        for &th in &[0.7, 2.0, 15.0] {
            for &b in &[0.0, 0.1, 0.5, 1.0] {
                let t = [th];
                assert!((Poisson.power_integral(&t, b).unwrap() - numeric::power_integral(&Poisson, &t, b).unwrap()).abs() < 1e-10);
                assert!((Poisson.xi(&t, b).unwrap()[0] - numeric::xi(&Poisson, &t, b).unwrap()[0]).abs() < 1e-10);
                assert!((Poisson.j_matrix(&t, b).unwrap()[(0, 0)] - numeric::j_matrix(&Poisson, &t, b).unwrap()[(0, 0)]).abs() < 1e-10);
                assert!((Poisson.k_matrix(&t, b).unwrap()[(0, 0)] - numeric::k_matrix(&Poisson, &t, b).unwrap()[(0, 0)]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn fisher_information() {
        assert!((Poisson.j_matrix(&[4.0], 0.0).unwrap()[(0, 0)] - 0.25).abs() < 1e-12);
        assert!(Poisson.xi(&[4.0], 0.0).unwrap()[0].abs() < 1e-12);
    }

    #[test]
    fn quantile_inverts() {
        assert_eq!(Poisson.quantile(&[2.0], 1e-6), Some(0.0));
        assert_eq!(Poisson.quantile(&[2.0], 0.2), Some(1.0));
        // P(X <= 1) = 3 e^{-2} ≈ 0.406
        assert_eq!(Poisson.quantile(&[2.0], 0.41), Some(2.0));
    }

    #[test]
    fn kl_matches_sum() {
        let a = Poisson.kl(&[2.0], &[3.5]).unwrap();
        let b = numeric::kl(&Poisson, &[2.0], &[3.5]).unwrap();
        assert!((a - b).abs() < 1e-10);
    }
}
