//! Wald-type two-sample tests built on minimum density power divergence
//! estimators, and their asymptotic power.
//!
//! Sample 1 is X with size n, sample 2 is Y with size m, and ω = m/(n+m).

pub mod hypothesis;
pub mod power;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dist::{chisq_quantile, chisq_sf, std_normal_quantile, std_normal_sf};
use crate::error::{Error, Result};
use crate::estimation::{fit_mdpde, fit_pooled, MdpdeFit, Sample};
use crate::family::{check_theta, ParametricFamily};
use crate::linalg;

pub use hypothesis::{Difference, FnHypothesis, HypothesisFunction, VarianceRatio};
pub use power::{
    approx_power_fixed, contiguous_power, sample_size_for_power, LocalAlternative, NullPoint,
    TestKind, Theta3Rule,
};

/// Null distribution of a statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Reference {
    ChiSquare { df: usize },
    StandardNormal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub test: String,
    pub statistic: f64,
    pub reference: Reference,
    pub p_value: f64,
    pub critical_value: f64,
    pub alpha: f64,
    pub reject: bool,
    pub beta: f64,
    pub omega: f64,
    pub n: usize,
    pub m: usize,
    /// Estimated restriction; θ̂₁ - θ̂₂ for the simple test.
    pub psi_hat: Vec<f64>,
    pub fit1: MdpdeFit,
    pub fit2: MdpdeFit,
    pub pooled: Option<MdpdeFit>,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("level {alpha} outside (0, 1)")))
    }
}

/// nm/(n+m) and ω = m/(n+m).
pub(crate) fn size_factors(n: f64, m: f64) -> (f64, f64) {
    (n * m / (n + m), m / (n + m))
}

/// Σ̃ = ω Ψ₁' Σ(θ₁) Ψ₁ + (1-ω) Ψ₂' Σ(θ₂) Ψ₂ together with ψ, Ψ₁ and Ψ₂.
pub(crate) fn restriction_covariance(
    family: &(impl ParametricFamily + ?Sized),
    psi: &(impl HypothesisFunction + ?Sized),
    theta1: &[f64],
    theta2: &[f64],
    beta: f64,
    omega: f64,
) -> Result<(DVector<f64>, DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)> {
    let value = psi.value(theta1, theta2);
    if value.len() != psi.r() {
        return Err(Error::InvalidInput(format!(
            "restriction returned {} values, expected {}",
            value.len(),
            psi.r()
        )));
    }
    let (j1, j2) = psi.jacobians(theta1, theta2);
    if j1.nrows() != family.dim() || j1.ncols() != psi.r() {
        return Err(Error::InvalidInput("jacobian has the wrong shape".into()));
    }
    hypothesis::check_rank(&j1, &j2)?;
    let s1 = family.sigma(theta1, beta)?;
    let s2 = family.sigma(theta2, beta)?;
    let st = j1.transpose() * s1 * &j1 * omega + j2.transpose() * s2 * &j2 * (1.0 - omega);
    Ok((value, j1, j2, linalg::symmetrize(&st)))
}

fn two_sided(
    name: &str,
    statistic: f64,
    df: usize,
    alpha: f64,
) -> Result<(Reference, f64, f64, bool)> {
    let p = chisq_sf(statistic, df as f64);
    let crit = chisq_quantile(alpha, df as f64)?;
    if !statistic.is_finite() {
        return Err(Error::InvalidInput(format!("{name} statistic is not finite")));
    }
    Ok((Reference::ChiSquare { df }, p, crit, p < alpha))
}

fn fit_pair(
    family: &(impl ParametricFamily + ?Sized),
    sample1: &Sample,
    sample2: &Sample,
    beta: f64,
) -> Result<(MdpdeFit, MdpdeFit)> {
    Ok((fit_mdpde(family, sample1, beta)?, fit_mdpde(family, sample2, beta)?))
}

/// Simple hypothesis θ₁ = θ₂:
/// T = (nm/(n+m)) (θ̂₁ - θ̂₂)' Σ_β(θ̂₀)⁻¹ (θ̂₁ - θ̂₂) with θ̂₀ the pooled MDPDE,
/// referred to χ²_p.
pub fn simple_test(
    family: &(impl ParametricFamily + ?Sized),
    sample1: &Sample,
    sample2: &Sample,
    beta: f64,
    alpha: f64,
) -> Result<TestResult> {
    check_alpha(alpha)?;
    let (fit1, fit2) = fit_pair(family, sample1, sample2, beta)?;
    let pooled = fit_pooled(family, sample1, sample2, beta)?;
    let (n, m) = (sample1.len(), sample2.len());
    let (nf, omega) = size_factors(n as f64, m as f64);
    let d = DVector::from_iterator(
        family.dim(),
        fit1.theta.iter().zip(&fit2.theta).map(|(a, b)| a - b),
    );
    let sigma = family.sigma(&pooled.theta, beta)?;
    let statistic = nf * linalg::inv_quad_form(&sigma, &d, "Σ at the pooled estimate")?;
    let (reference, p_value, critical_value, reject) =
        two_sided("simple", statistic, family.dim(), alpha)?;
    Ok(TestResult {
        test: "simple".into(),
        statistic,
        reference,
        p_value,
        critical_value,
        alpha,
        reject,
        beta,
        omega,
        n,
        m,
        psi_hat: d.iter().copied().collect(),
        fit1,
        fit2,
        pooled: Some(pooled),
    })
}

/// Composite hypothesis ψ(θ₁, θ₂) = 0:
/// T̃ = (nm/(n+m)) ψ̂' Σ̃⁻¹ ψ̂ with Σ̃ at the two unrestricted fits, against χ²_r.
pub fn composite_test(
    family: &(impl ParametricFamily + ?Sized),
    sample1: &Sample,
    sample2: &Sample,
    psi: &(impl HypothesisFunction + ?Sized),
    beta: f64,
    alpha: f64,
) -> Result<TestResult> {
    check_alpha(alpha)?;
    let (fit1, fit2) = fit_pair(family, sample1, sample2, beta)?;
    let (n, m) = (sample1.len(), sample2.len());
    let (nf, omega) = size_factors(n as f64, m as f64);
    let (value, _, _, st) =
        restriction_covariance(family, psi, &fit1.theta, &fit2.theta, beta, omega)?;
    let statistic = nf * linalg::inv_quad_form(&st, &value, "restriction covariance")?;
    let (reference, p_value, critical_value, reject) =
        two_sided("composite", statistic, psi.r(), alpha)?;
    Ok(TestResult {
        test: format!("composite {}", psi.label()),
        statistic,
        reference,
        p_value,
        critical_value,
        alpha,
        reject,
        beta,
        omega,
        n,
        m,
        psi_hat: value.iter().copied().collect(),
        fit1,
        fit2,
        pooled: None,
    })
}

/// Partial homogeneity: the first `r` coordinates agree, the rest are
/// nuisance parameters. Uses the leading r×r minors Σ^{11} of Σ_β.
pub fn partial_homogeneity_test(
    family: &(impl ParametricFamily + ?Sized),
    sample1: &Sample,
    sample2: &Sample,
    r: usize,
    beta: f64,
    alpha: f64,
) -> Result<TestResult> {
    check_alpha(alpha)?;
    if r == 0 || r >= family.dim() {
        return Err(Error::InvalidInput(format!(
            "partial homogeneity needs 0 < r < p = {}, got r = {r}",
            family.dim()
        )));
    }
    let (fit1, fit2) = fit_pair(family, sample1, sample2, beta)?;
    let (n, m) = (sample1.len(), sample2.len());
    let (nf, omega) = size_factors(n as f64, m as f64);
    let minor = |t: &[f64]| -> Result<DMatrix<f64>> {
        Ok(family.sigma(t, beta)?.view((0, 0), (r, r)).into_owned())
    };
    let st = minor(&fit1.theta)? * omega + minor(&fit2.theta)? * (1.0 - omega);
    let d = DVector::from_iterator(r, (0..r).map(|i| fit1.theta[i] - fit2.theta[i]));
    let statistic = nf * linalg::inv_quad_form(&st, &d, "Σ¹¹ combination")?;
    let (reference, p_value, critical_value, reject) =
        two_sided("partial homogeneity", statistic, r, alpha)?;
    Ok(TestResult {
        test: format!("partial-homogeneity[r = {r}]"),
        statistic,
        reference,
        p_value,
        critical_value,
        alpha,
        reject,
        beta,
        omega,
        n,
        m,
        psi_hat: d.iter().copied().collect(),
        fit1,
        fit2,
        pooled: None,
    })
}

/// One-sided test of ψ = 0 against ψ > 0 for a scalar restriction:
/// T = √(nm/(n+m)) ψ̂ / √Σ̃, standard normal under the null.
pub fn one_sided_test(
    family: &(impl ParametricFamily + ?Sized),
    sample1: &Sample,
    sample2: &Sample,
    psi: &(impl HypothesisFunction + ?Sized),
    beta: f64,
    alpha: f64,
) -> Result<TestResult> {
    check_alpha(alpha)?;
    if psi.r() != 1 {
        return Err(Error::InvalidInput("one-sided tests need a scalar restriction".into()));
    }
    let (fit1, fit2) = fit_pair(family, sample1, sample2, beta)?;
    let (n, m) = (sample1.len(), sample2.len());
    let (nf, omega) = size_factors(n as f64, m as f64);
    let (value, _, _, st) =
        restriction_covariance(family, psi, &fit1.theta, &fit2.theta, beta, omega)?;
    let var = st[(0, 0)];
    if !(var > 0.0) {
        return Err(Error::Singular("restriction variance is not positive".into()));
    }
    let statistic = nf.sqrt() * value[0] / var.sqrt();
    let p_value = std_normal_sf(statistic);
    Ok(TestResult {
        test: format!("one-sided {}", psi.label()),
        statistic,
        reference: Reference::StandardNormal,
        p_value,
        critical_value: std_normal_quantile(1.0 - alpha)?,
        alpha,
        reject: p_value < alpha,
        beta,
        omega,
        n,
        m,
        psi_hat: vec![value[0]],
        fit1,
        fit2,
        pooled: None,
    })
}

/// Checks that a parameter pair satisfies a restriction.
pub(crate) fn check_null(
    family: &(impl ParametricFamily + ?Sized),
    psi: &(impl HypothesisFunction + ?Sized),
    theta1: &[f64],
    theta2: &[f64],
) -> Result<()> {
    check_theta(family, theta1)?;
    check_theta(family, theta2)?;
    let v = psi.value(theta1, theta2);
    if v.amax() > 1e-8 {
        return Err(Error::InvalidInput(format!(
            "null parameters do not satisfy {} (|ψ| = {:e})",
            psi.label(),
            v.amax()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{NormalFull, NormalKnownVar, Poisson};

    fn s(v: Vec<f64>) -> Sample {
        Sample::new(v).unwrap()
    }

    /// Sample of size k with exactly the given mean and MLE variance.
    fn shaped(k: usize, mean: f64, sd: f64) -> Sample {
        let half = k / 2;
        let mut v = vec![mean - sd; half];
        v.extend(vec![mean + sd; k - half]);
        if k % 2 == 1 {
            v[k - 1] = mean;
            let scale = (k as f64 / (k - 1) as f64).sqrt();
            for x in v.iter_mut().take(k - 1) {
                *x = mean + (*x - mean) * scale;
            }
        }
        s(v)
    }

    #[test]
    fn identical_samples_give_zero() {
        let a = s(vec![0.3, -0.2, 1.4, 0.8]);
        let f = NormalKnownVar::new(1.0).unwrap();
        let t = simple_test(&f, &a, &a, 0.3, 0.05).unwrap();
        assert_eq!(t.statistic, 0.0);
        assert_eq!(t.p_value, 1.0);
        assert!(!t.reject);
        let t = partial_homogeneity_test(&NormalFull, &a, &a, 1, 0.3, 0.05).unwrap();
        assert_eq!(t.statistic, 0.0);
    }

    #[test]
    fn simple_known_value() {
        let f = NormalKnownVar::new(1.0).unwrap();
        let t = simple_test(&f, &shaped(50, 0.5, 1.0), &shaped(50, 0.0, 1.0), 0.0, 0.05).unwrap();
        assert!((t.statistic - 6.25).abs() < 1e-12);
        assert!((t.p_value - 0.012_419_330_651_552_318).abs() < 1e-12);
        assert!(t.reject);
    }

    #[test]
    fn composite_difference_equals_simple() {
        let f = NormalKnownVar::new(1.3).unwrap();
        let a = s(vec![0.1, 0.9, -0.4, 1.6, 0.3]);
        let b = s(vec![1.1, 0.2, 2.5, 0.7, 1.9]);
        for &beta in &[0.0, 0.5] {
            let t1 = simple_test(&f, &a, &b, beta, 0.05).unwrap();
            let t2 = composite_test(&f, &a, &b, &Difference::new(1), beta, 0.05).unwrap();
            assert!((t1.statistic - t2.statistic).abs() < 1e-12 * t1.statistic.max(1.0));
        }
    }

    #[test]
    fn partial_closed_form_at_zero() {
        let t = partial_homogeneity_test(
            &NormalFull,
            &shaped(50, 0.5, 1.0),
            &shaped(50, 0.0, 1.0),
            1,
            0.0,
            0.05,
        )
        .unwrap();
        assert!((t.statistic - 6.25).abs() < 1e-10);
    }

    #[test]
    fn partial_equals_composite_on_means() {
        let a = s(vec![0.1, 0.9, -0.4, 1.6, 0.3, 0.2]);
        let b = s(vec![1.1, 0.2, 2.5, 0.7, 1.9]);
        let t1 = partial_homogeneity_test(&NormalFull, &a, &b, 1, 0.4, 0.05).unwrap();
        let h = Difference::coords(2, vec![0]);
        let t2 = composite_test(&NormalFull, &a, &b, &h, 0.4, 0.05).unwrap();
        assert!((t1.statistic - t2.statistic).abs() < 1e-12);
    }

    #[test]
    fn one_sided_square_is_two_sided() {
        let a = s(vec![3.0, 5.0, 4.0, 6.0, 2.0]);
        let b = s(vec![6.0, 8.0, 5.0, 7.0, 9.0, 4.0]);
        let h = Difference::new(1).reversed();
        let one = one_sided_test(&Poisson, &a, &b, &h, 0.2, 0.05).unwrap();
        let two = composite_test(&Poisson, &a, &b, &h, 0.2, 0.05).unwrap();
        assert!((one.statistic.powi(2) - two.statistic).abs() < 1e-10);
        assert!(one.statistic > 0.0);
    }

    #[test]
    fn one_sided_zero_restriction() {
        let a = s(vec![3.0, 5.0, 4.0]);
        let t = one_sided_test(&Poisson, &a, &a, &Difference::new(1), 0.0, 0.05).unwrap();
        assert_eq!(t.statistic, 0.0);
        assert_eq!(t.p_value, 0.5);
    }

    #[test]
    fn one_sided_closed_form_statistic() {
        let (n, m) = (20usize, 30usize);
        let (nf, omega) = size_factors(n as f64, m as f64);
        // both samples have MLE variance 1, so the Σ̃ combination is 1
        let gap = 2.0 / nf.sqrt() * (omega * 1.0 + (1.0 - omega) * 1.0f64).sqrt();
        let h = Difference::coords(2, vec![0]);
        let t = one_sided_test(&NormalFull, &shaped(n, gap, 1.0), &shaped(m, 0.0, 1.0), &h, 0.0, 0.05)
            .unwrap();
        assert!((t.statistic - 2.0).abs() < 1e-10);
    }

    #[test]
    fn rejects_wrong_level_and_scalar_check() {
        let a = s(vec![3.0, 5.0, 4.0]);
        assert!(simple_test(&Poisson, &a, &a, 0.0, 1.0).is_err());
        let h = Difference::new(2);
        assert!(one_sided_test(&NormalFull, &a, &a, &h, 0.0, 0.05).is_err());
    }

    #[test]
    fn decision_matches_critical_value() {
        let f = NormalKnownVar::new(1.0).unwrap();
        for k in 0..20 {
            let shift = 0.05 * k as f64;
            let t = simple_test(&f, &shaped(30, shift, 1.0), &shaped(30, 0.0, 1.0), 0.3, 0.05).unwrap();
            assert_eq!(t.reject, t.statistic > t.critical_value);
        }
    }
}
