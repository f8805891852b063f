//! Asymptotic power: fixed alternatives, contiguous alternatives and
//! sample-size planning.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::hypothesis::HypothesisFunction;
use super::{check_null, restriction_covariance, size_factors};
use crate::dist::{chisq_quantile, noncentral_chisq_sf, std_normal_cdf, std_normal_quantile};
use crate::error::{Error, Result};
use crate::estimation::{fit_weighted, FitOptions};
use crate::family::{check_theta, numeric, ParametricFamily};
use crate::linalg;

/// Which statistic a power or influence computation refers to.
#[derive(Clone, Copy)]
pub enum TestKind<'a> {
    /// θ₁ = θ₂ with the pooled plug-in covariance.
    Simple,
    /// ψ(θ₁, θ₂) = 0 against ψ ≠ 0.
    Composite(&'a dyn HypothesisFunction),
    /// Scalar ψ = 0 against ψ > 0.
    OneSided(&'a dyn HypothesisFunction),
}

impl TestKind<'_> {
    pub fn label(&self) -> String {
        match self {
            TestKind::Simple => "simple".into(),
            TestKind::Composite(h) => format!("composite {}", h.label()),
            TestKind::OneSided(h) => format!("one-sided {}", h.label()),
        }
    }

    pub fn is_one_sided(&self) -> bool {
        matches!(self, TestKind::OneSided(_))
    }
}

/// Parameters at which the null holds. For the simple test both entries
/// equal the common θ₀.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullPoint {
    pub theta1: Vec<f64>,
    pub theta2: Vec<f64>,
}

impl NullPoint {
    pub fn common(theta0: &[f64]) -> Self {
        Self {
            theta1: theta0.to_vec(),
            theta2: theta0.to_vec(),
        }
    }
}

/// θᵢ,ₙ = θᵢ₀ + Δᵢ/√(sample size).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalAlternative {
    pub null: NullPoint,
    pub delta1: Vec<f64>,
    pub delta2: Vec<f64>,
}

/// Limit of the pooled estimator under a fixed alternative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Theta3Rule {
    /// (1-ω)θ₁ + ωθ₂.
    #[default]
    Linear,
    /// MDPDE of the mixture (1-ω) f_{θ₁} + ω f_{θ₂}.
    MixtureFit,
}

/// Local geometry at a null point: the drift of a contamination or local
/// alternative is W = √ω P₁'Δ₁ + √(1-ω) P₂'Δ₂ and the limiting statistic is
/// noncentral χ² with noncentrality W'A⁻¹W (or normal with mean W/√A).
pub(crate) struct Drift {
    pub df: usize,
    pub a: DMatrix<f64>,
    pub a_inv: DMatrix<f64>,
    pub p1: DMatrix<f64>,
    pub p2: DMatrix<f64>,
    pub omega: f64,
    pub one_sided: bool,
}

impl Drift {
    pub fn new(
        family: &(impl ParametricFamily + ?Sized),
        kind: TestKind<'_>,
        null: &NullPoint,
        omega: f64,
        beta: f64,
    ) -> Result<Self> {
        check_omega(omega)?;
        let (a, p1, p2, one_sided) = match kind {
            TestKind::Simple => {
                check_theta(family, &null.theta1)?;
                if null.theta1 != null.theta2 {
                    return Err(Error::InvalidInput(
                        "simple null needs a common parameter".into(),
                    ));
                }
                let p = family.dim();
                (
                    family.sigma(&null.theta1, beta)?,
                    DMatrix::identity(p, p),
                    -DMatrix::identity(p, p),
                    false,
                )
            }
            TestKind::Composite(h) | TestKind::OneSided(h) => {
                check_null(family, h, &null.theta1, &null.theta2)?;
                if kind.is_one_sided() && h.r() != 1 {
                    return Err(Error::InvalidInput(
                        "one-sided tests need a scalar restriction".into(),
                    ));
                }
                let (_, j1, j2, st) =
                    restriction_covariance(family, h, &null.theta1, &null.theta2, beta, omega)?;
                (st, j1, j2, kind.is_one_sided())
            }
        };
        let a_inv = linalg::inverse(&a, "null covariance")?;
        if one_sided && !(a[(0, 0)] > 0.0) {
            return Err(Error::Singular("restriction variance is not positive".into()));
        }
        Ok(Self {
            df: a.nrows(),
            a,
            a_inv,
            p1,
            p2,
            omega,
            one_sided,
        })
    }

    pub fn w(&self, d1: &DVector<f64>, d2: &DVector<f64>) -> DVector<f64> {
        self.p1.transpose() * d1 * self.omega.sqrt()
            + self.p2.transpose() * d2 * (1.0 - self.omega).sqrt()
    }

    pub fn noncentrality(&self, w: &DVector<f64>) -> f64 {
        (w.transpose() * &self.a_inv * w)[(0, 0)].max(0.0)
    }

    /// Limiting rejection probability for drift `w`.
    pub fn power(&self, w: &DVector<f64>, alpha: f64) -> Result<f64> {
        if self.one_sided {
            let z = std_normal_quantile(1.0 - alpha)?;
            Ok(1.0 - std_normal_cdf(z - w[0] / self.a[(0, 0)].sqrt()))
        } else {
            let c = chisq_quantile(alpha, self.df as f64)?;
            noncentral_chisq_sf(c, self.df as f64, self.noncentrality(w))
        }
    }
}

pub(crate) fn check_omega(omega: f64) -> Result<()> {
    if omega > 0.0 && omega < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("ω = {omega} outside (0, 1)")))
    }
}

pub(crate) fn check_level(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("level {alpha} outside (0, 1)")))
    }
}

pub(crate) fn as_vector(
    family: &(impl ParametricFamily + ?Sized),
    v: &[f64],
    what: &str,
) -> Result<DVector<f64>> {
    if v.len() != family.dim() || v.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "{what} must have {} finite entries",
            family.dim()
        )));
    }
    Ok(DVector::from_column_slice(v))
}

/// Asymptotic power under the contiguous alternative `alt`.
pub fn contiguous_power(
    family: &(impl ParametricFamily + ?Sized),
    kind: TestKind<'_>,
    alt: &LocalAlternative,
    omega: f64,
    beta: f64,
    alpha: f64,
) -> Result<f64> {
    check_level(alpha)?;
    let drift = Drift::new(family, kind, &alt.null, omega, beta)?;
    let w = drift.w(
        &as_vector(family, &alt.delta1, "Δ₁")?,
        &as_vector(family, &alt.delta2, "Δ₂")?,
    );
    drift.power(&w, alpha)
}

fn theta3(
    family: &(impl ParametricFamily + ?Sized),
    theta1: &[f64],
    theta2: &[f64],
    omega: f64,
    beta: f64,
    rule: Theta3Rule,
) -> Result<Vec<f64>> {
    match rule {
        Theta3Rule::Linear => Ok(theta1
            .iter()
            .zip(theta2)
            .map(|(a, b)| (1.0 - omega) * a + omega * b)
            .collect()),
        Theta3Rule::MixtureFit => {
            let (mut x, w1) = numeric::discretize(family, theta1, 200)?;
            let (x2, w2) = numeric::discretize(family, theta2, 200)?;
            x.extend(x2);
            let w: Vec<f64> = w1
                .iter()
                .map(|v| v * (1.0 - omega))
                .chain(w2.iter().map(|v| v * omega))
                .collect();
            Ok(fit_weighted(family, &x, &w, beta, &FitOptions::default())?.theta)
        }
    }
}

fn fixed_power_inner(
    family: &(impl ParametricFamily + ?Sized),
    kind: TestKind<'_>,
    theta1: &[f64],
    theta2: &[f64],
    nf: f64,
    omega: f64,
    beta: f64,
    alpha: f64,
    rule: Theta3Rule,
) -> Result<f64> {
    match kind {
        TestKind::Simple => {
            let d = as_vector(family, theta1, "θ₁")? - as_vector(family, theta2, "θ₂")?;
            if d.amax() == 0.0 {
                return Err(Error::InvalidInput("θ₁ = θ₂ is not an alternative".into()));
            }
            let t3 = theta3(family, theta1, theta2, omega, beta, rule)?;
            check_theta(family, &t3)?;
            let s3i = linalg::inverse(&family.sigma(&t3, beta)?, "Σ(θ₃)")?;
            let mix = family.sigma(theta1, beta)? * omega
                + family.sigma(theta2, beta)? * (1.0 - omega);
            let v = &s3i * &d;
            let l = d.dot(&v);
            let s2 = (v.transpose() * mix * &v)[(0, 0)];
            let c = chisq_quantile(alpha, family.dim() as f64)?;
            Ok(1.0 - std_normal_cdf((c - nf * l) / (2.0 * s2.sqrt() * nf.sqrt())))
        }
        TestKind::Composite(h) => {
            let (value, _, _, st) = restriction_covariance(family, h, theta1, theta2, beta, omega)?;
            if value.amax() == 0.0 {
                return Err(Error::InvalidInput("ψ = 0 is not an alternative".into()));
            }
            let l = linalg::inv_quad_form(&st, &value, "restriction covariance")?;
            let c = chisq_quantile(alpha, h.r() as f64)?;
            Ok(1.0 - std_normal_cdf((c - nf * l) / (2.0 * l.sqrt() * nf.sqrt())))
        }
        TestKind::OneSided(h) => {
            if h.r() != 1 {
                return Err(Error::InvalidInput(
                    "one-sided tests need a scalar restriction".into(),
                ));
            }
            let (value, _, _, st) = restriction_covariance(family, h, theta1, theta2, beta, omega)?;
            if value[0] == 0.0 {
                return Err(Error::InvalidInput("ψ = 0 is not an alternative".into()));
            }
            let z = std_normal_quantile(1.0 - alpha)?;
            Ok(1.0 - std_normal_cdf(z - nf.sqrt() * value[0] / st[(0, 0)].sqrt()))
        }
    }
}

/// Normal approximation to the power at the fixed alternative (θ₁, θ₂)
/// with sample sizes n (first sample) and m (second). Sizes may be
/// fractional, which is convenient for planning.
#[allow(clippy::too_many_arguments)]
pub fn approx_power_fixed(
    family: &(impl ParametricFamily + ?Sized),
    kind: TestKind<'_>,
    theta1: &[f64],
    theta2: &[f64],
    n: f64,
    m: f64,
    beta: f64,
    alpha: f64,
    rule: Theta3Rule,
) -> Result<f64> {
    check_level(alpha)?;
    check_theta(family, theta1)?;
    check_theta(family, theta2)?;
    if !(n > 0.0 && m > 0.0 && n.is_finite() && m.is_finite()) {
        return Err(Error::InvalidInput("sample sizes must be positive".into()));
    }
    let (nf, omega) = size_factors(n, m);
    fixed_power_inner(family, kind, theta1, theta2, nf, omega, beta, alpha, rule)
}

const MAX_TOTAL: u64 = 1_000_000_000;

/// Smallest total size N, split as n = (1-ω)N and m = ωN, whose approximate
/// power reaches `target`.
#[allow(clippy::too_many_arguments)]
pub fn sample_size_for_power(
    family: &(impl ParametricFamily + ?Sized),
    kind: TestKind<'_>,
    theta1: &[f64],
    theta2: &[f64],
    target: f64,
    omega: f64,
    beta: f64,
    alpha: f64,
    rule: Theta3Rule,
) -> Result<u64> {
    check_level(alpha)?;
    check_omega(omega)?;
    if !(target > alpha && target < 1.0) {
        return Err(Error::InvalidInput(format!(
            "target power {target} must lie in (α, 1)"
        )));
    }
    let power = |total: u64| {
        let t = total as f64;
        approx_power_fixed(
            family,
            kind,
            theta1,
            theta2,
            (1.0 - omega) * t,
            omega * t,
            beta,
            alpha,
            rule,
        )
    };
    let mut hi = 2u64;
    while power(hi)? < target {
        if hi >= MAX_TOTAL {
            return Err(Error::InvalidInput(format!(
                "target power {target} not reached with N ≤ {MAX_TOTAL}"
            )));
        }
        hi = (hi * 2).min(MAX_TOTAL);
    }
    let mut lo = hi / 2;
    if lo < 2 || power(lo)? >= target {
        return Ok(if lo < 2 { hi.min(2) } else { lo });
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if power(mid)? >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}
