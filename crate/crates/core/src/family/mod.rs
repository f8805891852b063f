//! Parametric model families and their density power divergence quantities.
//!
//! A family exposes its density, score and the integrals
//! `M = ∫ f^{1+β}`, `ξ = ∫ u f^{1+β}`, `J = ∫ u u' f^{1+β}` and
//! `K = ∫ u u' f^{1+2β} - ξ ξ'`. Every integral has a numeric default
//! (adaptive quadrature over the support, or truncated sums for counts);
//! the built-in families override them with closed forms.

mod exponential;
mod normal;
pub mod numeric;
mod poisson;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

pub use exponential::Exponential;
pub use normal::{NormalFull, NormalKnownVar};
pub use poisson::Poisson;

/// Where observations live.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Support {
    /// An interval `[lower, upper]`; either end may be infinite.
    Continuous { lower: f64, upper: f64 },
    /// The non-negative integers.
    Counts,
}

impl Support {
    pub fn contains(&self, x: f64) -> bool {
        match *self {
            Support::Continuous { lower, upper } => x.is_finite() && x >= lower && x <= upper,
            Support::Counts => x.is_finite() && x >= 0.0 && x.fract() == 0.0,
        }
    }
}

/// Interval scanned before the scalar minimizer refines the MDPDE.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanInterval {
    pub lower: f64,
    pub upper: f64,
    /// Scan on a logarithmic grid (positive parameters).
    pub log_scale: bool,
}

pub trait ParametricFamily: Send + Sync {
    fn name(&self) -> &str;

    /// Parameter dimension p.
    fn dim(&self) -> usize;

    fn support(&self) -> Support;

    fn in_domain(&self, theta: &[f64]) -> bool;

    fn density(&self, theta: &[f64], x: f64) -> f64;

    fn log_density(&self, theta: &[f64], x: f64) -> f64 {
        self.density(theta, x).ln()
    }

    /// u_θ(x) = ∂ log f_θ(x) / ∂θ.
    fn score(&self, theta: &[f64], x: f64) -> DVector<f64>;

    /// ∂u_θ(x)/∂θ, row i holding the derivative of u_i.
    fn score_jacobian(&self, theta: &[f64], x: f64) -> DMatrix<f64> {
        numeric::score_jacobian(self, theta, x)
    }

    /// A centre and a spread of f_θ, used to place integration and search grids.
    fn spread(&self, theta: &[f64]) -> (f64, f64);

    fn power_integral(&self, theta: &[f64], beta: f64) -> Result<f64> {
        numeric::power_integral(self, theta, beta)
    }

    fn xi(&self, theta: &[f64], beta: f64) -> Result<DVector<f64>> {
        numeric::xi(self, theta, beta)
    }

    fn j_matrix(&self, theta: &[f64], beta: f64) -> Result<DMatrix<f64>> {
        numeric::j_matrix(self, theta, beta)
    }

    fn k_matrix(&self, theta: &[f64], beta: f64) -> Result<DMatrix<f64>> {
        numeric::k_matrix(self, theta, beta)
    }

    /// ∂ξ/∂θ, row i holding the derivative of ξ_i.
    fn xi_jacobian(&self, theta: &[f64], beta: f64) -> Result<DMatrix<f64>> {
        numeric::xi_jacobian(self, theta, beta)
    }

    /// Σ_β(θ) = J⁻¹ K J⁻¹.
    fn sigma(&self, theta: &[f64], beta: f64) -> Result<DMatrix<f64>> {
        let j = self.j_matrix(theta, beta)?;
        let k = self.k_matrix(theta, beta)?;
        let ji = linalg::inverse(&j, "J")?;
        Ok(linalg::symmetrize(&(&ji * k * &ji)))
    }

    /// ∫ f_{model}^β f_{data}.
    fn cross_integral(&self, model: &[f64], data: &[f64], beta: f64) -> Result<f64> {
        numeric::cross_integral(self, model, data, beta)
    }

    /// Kullback-Leibler divergence of f_{theta2} from f_{theta1}.
    fn kl(&self, theta1: &[f64], theta2: &[f64]) -> Result<f64> {
        numeric::kl(self, theta1, theta2)
    }

    /// Closed-form weighted maximum likelihood estimate, when one exists.
    fn mle(&self, _x: &[f64], _w: &[f64]) -> Option<Vec<f64>> {
        None
    }

    /// Starting points for the MDPDE search.
    fn starts(&self, x: &[f64], w: &[f64]) -> Vec<Vec<f64>>;

    /// Scan interval for one-parameter families.
    fn scan_interval(&self, _x: &[f64]) -> Option<ScanInterval> {
        None
    }

    /// Inverse-CDF style variate from a uniform on (0, 1).
    fn quantile(&self, _theta: &[f64], _u: f64) -> Option<f64> {
        None
    }
}

pub(crate) fn check_theta(family: &(impl ParametricFamily + ?Sized), theta: &[f64]) -> Result<()> {
    if theta.len() != family.dim() {
        return Err(Error::Domain(format!(
            "{} expects {} parameters, got {}",
            family.name(),
            family.dim(),
            theta.len()
        )));
    }
    if !family.in_domain(theta) {
        return Err(Error::Domain(format!("{} at {:?}", family.name(), theta)));
    }
    Ok(())
}

fn check_beta(beta: f64) -> Result<()> {
    if beta >= 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("tuning parameter {beta} must be >= 0")))
    }
}

/// Density power divergence d_β(f_{θ1}, f_{θ2}); Kullback-Leibler at β = 0.
pub fn dpd_divergence(
    family: &(impl ParametricFamily + ?Sized),
    theta1: &[f64],
    theta2: &[f64],
    beta: f64,
) -> Result<f64> {
    check_theta(family, theta1)?;
    check_theta(family, theta2)?;
    check_beta(beta)?;
    if beta == 0.0 {
        return Ok(family.kl(theta1, theta2)?.max(0.0));
    }
    let m2 = family.power_integral(theta2, beta)?;
    let m1 = family.power_integral(theta1, beta)?;
    let cross = family.cross_integral(theta2, theta1, beta)?;
    Ok((m2 - (1.0 + 1.0 / beta) * cross + m1 / beta).max(0.0))
}

/// Asymptotic covariance Σ_β(θ) of the MDPDE.
pub fn sigma_beta(
    family: &(impl ParametricFamily + ?Sized),
    theta: &[f64],
    beta: f64,
) -> Result<DMatrix<f64>> {
    check_theta(family, theta)?;
    check_beta(beta)?;
    family.sigma(theta, beta)
}

/// Influence function of the MDPDE functional at the model f_{θ0}:
/// J⁻¹ (u(x) f^β(x) - ξ).
pub fn mdpde_influence(
    family: &(impl ParametricFamily + ?Sized),
    theta0: &[f64],
    beta: f64,
    x: f64,
) -> Result<DVector<f64>> {
    check_theta(family, theta0)?;
    check_beta(beta)?;
    let ji = linalg::inverse(&family.j_matrix(theta0, beta)?, "J")?;
    let xi = family.xi(theta0, beta)?;
    Ok(influence_with(family, theta0, beta, x, &ji, &xi))
}

/// Influence function with J⁻¹ and ξ already computed.
pub(crate) fn influence_with(
    family: &(impl ParametricFamily + ?Sized),
    theta0: &[f64],
    beta: f64,
    x: f64,
    j_inv: &DMatrix<f64>,
    xi: &DVector<f64>,
) -> DVector<f64> {
    let w = if beta == 0.0 {
        1.0
    } else {
        family.density(theta0, x).powf(beta)
    };
    j_inv * (family.score(theta0, x) * w - xi)
}

/// Serializable choice of a built-in family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum FamilySpec {
    NormalKnownSigma { sigma: f64 },
    Normal,
    Poisson,
    Exponential,
}

impl FamilySpec {
    pub fn build(&self) -> Result<Box<dyn ParametricFamily>> {
        Ok(match *self {
            FamilySpec::NormalKnownSigma { sigma } => Box::new(NormalKnownVar::new(sigma)?),
            FamilySpec::Normal => Box::new(NormalFull),
            FamilySpec::Poisson => Box::new(Poisson),
            FamilySpec::Exponential => Box::new(Exponential),
        })
    }

    pub fn label(&self) -> &'static str {
        match self {
            FamilySpec::NormalKnownSigma { .. } => "normal-known-sigma",
            FamilySpec::Normal => "normal",
            FamilySpec::Poisson => "poisson",
            FamilySpec::Exponential => "exponential",
        }
    }
}
