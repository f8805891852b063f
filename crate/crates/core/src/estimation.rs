//! Minimum density power divergence estimation, empirical J/K estimators and
//! data-driven selection of the tuning parameter β.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::{check_theta, ParametricFamily};
use crate::linalg;
use crate::optimize::{brent_minimize, nelder_mead};
use crate::stats;

/// Observations of one sample; at least two finite values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Sample(Vec<f64>);

impl Sample {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "a sample needs at least 2 observations, got {}",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite observation {v}")));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Concatenation of two samples.
    pub fn pooled(&self, other: &Sample) -> Sample {
        Sample([self.0.as_slice(), other.0.as_slice()].concat())
    }
}

impl TryFrom<Vec<f64>> for Sample {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Sample::new(v)
    }
}

impl From<Sample> for Vec<f64> {
    fn from(s: Sample) -> Self {
        s.0
    }
}

/// Which covariance a fit reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VarianceKind {
    /// Σ_β(θ̂) from the model.
    #[default]
    Model,
    /// Ĵ⁻¹ K̂ Ĵ⁻¹ from the data.
    Sandwich,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Tolerance on the parameter.
    pub tol: f64,
    pub max_iter: usize,
    pub variance: VarianceKind,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: 500,
            variance: VarianceKind::Model,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MdpdeFit {
    pub theta: Vec<f64>,
    pub beta: f64,
    pub objective: f64,
    pub variance: VarianceKind,
    pub sigma: Vec<Vec<f64>>,
    pub j_hat: Vec<Vec<f64>>,
    pub k_hat: Vec<Vec<f64>>,
    /// False when K̂ has a negative eigenvalue (possible for tiny samples).
    pub k_hat_psd: bool,
    /// Norm of the estimating equation at θ̂.
    pub gradient_norm: f64,
    pub converged: bool,
    pub iterations: usize,
    pub n: usize,
}

/// The MDPDE objective on a weighted sample (weights summing to one):
/// M_{1+β}(θ) - (1 + 1/β) Σ w f_θ^β(x) for β > 0, and -Σ w log f_θ(x) at β = 0.
pub fn objective(
    family: &(impl ParametricFamily + ?Sized),
    x: &[f64],
    w: &[f64],
    theta: &[f64],
    beta: f64,
) -> f64 {
    if !family.in_domain(theta) {
        return f64::INFINITY;
    }
    if beta == 0.0 {
        return -x
            .iter()
            .zip(w)
            .map(|(&xi, &wi)| wi * family.log_density(theta, xi))
            .sum::<f64>();
    }
    let Ok(m) = family.power_integral(theta, beta) else {
        return f64::INFINITY;
    };
    let s: f64 = x
        .iter()
        .zip(w)
        .map(|(&xi, &wi)| wi * family.density(theta, xi).powf(beta))
        .sum();
    m - (1.0 + 1.0 / beta) * s
}

struct Equations {
    g: DVector<f64>,
    j_hat: DMatrix<f64>,
    k_hat: DMatrix<f64>,
}

/// Estimating equation Σ w u f^β - ξ and the empirical Ĵ, K̂ at θ.
///
/// Ĵ is minus the derivative of the estimating equation, which keeps the
/// model term ∂ξ/∂θ; K̂ is the weighted covariance of u f^β.
fn equations(
    family: &(impl ParametricFamily + ?Sized),
    x: &[f64],
    w: &[f64],
    theta: &[f64],
    beta: f64,
) -> Result<Equations> {
    let p = family.dim();
    let mut xi_hat = DVector::zeros(p);
    let mut a = DMatrix::zeros(p, p);
    let mut b = DMatrix::zeros(p, p);
    for (&xi, &wi) in x.iter().zip(w) {
        let u = family.score(theta, xi);
        let fb = if beta == 0.0 {
            1.0
        } else {
            family.density(theta, xi).powf(beta)
        };
        let uu = &u * u.transpose();
        xi_hat += &u * (wi * fb);
        a += (family.score_jacobian(theta, xi) + &uu * beta) * (wi * fb);
        b += uu * (wi * fb * fb);
    }
    let (xi, dxi) = if beta == 0.0 {
        (DVector::zeros(p), DMatrix::zeros(p, p))
    } else {
        (family.xi(theta, beta)?, family.xi_jacobian(theta, beta)?)
    };
    Ok(Equations {
        g: &xi_hat - xi,
        j_hat: linalg::symmetrize(&(dxi - a)),
        k_hat: linalg::symmetrize(&(b - &xi_hat * xi_hat.transpose())),
    })
}

fn validate(
    family: &(impl ParametricFamily + ?Sized),
    x: &[f64],
    w: &[f64],
    beta: f64,
) -> Result<Vec<f64>> {
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::InvalidInput(format!("tuning parameter {beta} must be >= 0")));
    }
    if x.len() != w.len() || x.is_empty() {
        return Err(Error::InvalidInput("observations and weights must match".into()));
    }
    let support = family.support();
    if let Some(v) = x.iter().find(|v| !support.contains(**v)) {
        return Err(Error::InvalidInput(format!(
            "observation {v} outside the {} support",
            family.name()
        )));
    }
    let total: f64 = w.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::InvalidInput("weights must have a positive sum".into()));
    }
    Ok(w.iter().map(|v| v / total).collect())
}

fn minimize_scalar(
    family: &(impl ParametricFamily + ?Sized),
    x: &[f64],
    w: &[f64],
    beta: f64,
    opts: &FitOptions,
) -> Result<(Vec<f64>, usize, bool)> {
    let h = |t: f64| objective(family, x, w, &[t], beta);
    let starts: Vec<f64> = family.starts(x, w).into_iter().map(|s| s[0]).collect();
    let interval = family.scan_interval(x).unwrap_or_else(|| {
        let s = starts.first().copied().unwrap_or(0.0);
        crate::family::ScanInterval {
            lower: s - 10.0 * (1.0 + s.abs()),
            upper: s + 10.0 * (1.0 + s.abs()),
            log_scale: false,
        }
    });
    let (lo, hi) = (interval.lower, interval.upper);
    if hi <= lo {
        return Ok((vec![lo], 0, true));
    }
    const POINTS: usize = 64;
    let mut grid: Vec<f64> = (0..POINTS)
        .map(|i| {
            let t = i as f64 / (POINTS - 1) as f64;
            if interval.log_scale {
                (lo.ln() + t * (hi.ln() - lo.ln())).exp()
            } else {
                lo + t * (hi - lo)
            }
        })
        .collect();
    grid.extend(starts.iter().copied().filter(|s| *s > lo && *s < hi));
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let values: Vec<f64> = grid.iter().map(|&t| h(t)).collect();
    let (best, _) = values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
    if interval.log_scale && (best == 0 || best + 1 == grid.len()) {
        return Err(Error::Boundary(format!(
            "{} objective decreases towards the edge of the parameter range",
            family.name()
        )));
    }
    let a = grid[best.saturating_sub(1)];
    let b = grid[(best + 1).min(grid.len() - 1)];
    let m = brent_minimize(h, a, b, opts.tol, opts.max_iter)?;
    let x_best = if m.fx <= values[best] { m.x } else { grid[best] };
    Ok((vec![x_best], m.iterations, true))
}

fn minimize_simplex(
    family: &(impl ParametricFamily + ?Sized),
    x: &[f64],
    w: &[f64],
    beta: f64,
    opts: &FitOptions,
) -> Result<(Vec<f64>, usize, bool)> {
    let starts = family.starts(x, w);
    if starts.is_empty() {
        return Err(Error::Boundary(format!(
            "no interior starting point for {} (degenerate sample)",
            family.name()
        )));
    }
    let h = |t: &[f64]| objective(family, x, w, t, beta);
    let step = |s: &[f64], frac: f64| -> Vec<f64> {
        s.iter()
            .map(|v| if *v == 0.0 { frac } else { frac * v.abs() })
            .collect()
    };
    let mut best: Option<crate::optimize::MinimumN> = None;
    for s in &starts {
        let r = nelder_mead(h, s, &step(s, 0.1), opts.tol, opts.max_iter);
        if best.as_ref().is_none_or(|b| r.fx < b.fx) {
            best = Some(r);
        }
    }
    let first = best.expect("at least one start");
    // restart from the best vertex to guard against a collapsed simplex
    let second = nelder_mead(h, &first.x, &step(&first.x, 0.01), opts.tol, opts.max_iter);
    let iterations = first.iterations + second.iterations;
    let result = if second.fx <= first.fx { second } else { first };
    if !result.converged {
        return Err(Error::NoConvergence(opts.max_iter));
    }
    Ok((result.x, iterations, true))
}

/// Refines θ with Newton steps on the estimating equation while they reduce
/// its norm and do not raise the objective.
fn polish(
    family: &(impl ParametricFamily + ?Sized),
    x: &[f64],
    w: &[f64],
    beta: f64,
    theta: Vec<f64>,
) -> Vec<f64> {
    let mut theta = theta;
    let mut current = objective(family, x, w, &theta, beta);
    for _ in 0..6 {
        let Ok(eq) = equations(family, x, w, &theta, beta) else { break };
        let gn = eq.g.norm();
        if gn == 0.0 {
            break;
        }
        let Ok(ji) = linalg::inverse(&eq.j_hat, "J") else { break };
        let step = ji * &eq.g;
        let cand: Vec<f64> = theta.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
        if !family.in_domain(&cand) {
            break;
        }
        let value = objective(family, x, w, &cand, beta);
        let Ok(eq2) = equations(family, x, w, &cand, beta) else { break };
        if eq2.g.norm() < gn && value <= current + 1e-12 * current.abs().max(1.0) {
            theta = cand;
            current = value;
        } else {
            break;
        }
    }
    theta
}

/// MDPDE on a weighted sample. Weights are normalized to sum to one; they may
/// be negative as long as the total is positive.
pub fn fit_weighted(
    family: &(impl ParametricFamily + ?Sized),
    x: &[f64],
    w: &[f64],
    beta: f64,
    opts: &FitOptions,
) -> Result<MdpdeFit> {
    let w = validate(family, x, w, beta)?;
    let closed = if beta == 0.0 { family.mle(x, &w) } else { None };
    let (theta, iterations, converged) = match closed {
        Some(t) => {
            if !family.in_domain(&t) {
                return Err(Error::Boundary(format!(
                    "{} maximum likelihood estimate {:?} is on the boundary",
                    family.name(),
                    t
                )));
            }
            (t, 0, true)
        }
        None => {
            let (t, it, conv) = if family.dim() == 1 {
                minimize_scalar(family, x, &w, beta, opts)?
            } else {
                minimize_simplex(family, x, &w, beta, opts)?
            };
            if !family.in_domain(&t) {
                return Err(Error::Boundary(format!("{} estimate {:?}", family.name(), t)));
            }
            (polish(family, x, &w, beta, t), it, conv)
        }
    };
    let eq = equations(family, x, &w, &theta, beta)?;
    let sigma = match opts.variance {
        VarianceKind::Model => family.sigma(&theta, beta)?,
        VarianceKind::Sandwich => {
            let ji = linalg::inverse(&eq.j_hat, "empirical J")?;
            linalg::symmetrize(&(&ji * &eq.k_hat * &ji))
        }
    };
    Ok(MdpdeFit {
        objective: objective(family, x, &w, &theta, beta),
        theta,
        beta,
        variance: opts.variance,
        sigma: linalg::to_rows(&sigma),
        j_hat: linalg::to_rows(&eq.j_hat),
        k_hat_psd: linalg::is_positive_semidefinite(&eq.k_hat),
        k_hat: linalg::to_rows(&eq.k_hat),
        gradient_norm: eq.g.norm(),
        converged,
        iterations,
        n: x.len(),
    })
}

/// MDPDE of θ from one sample.
pub fn fit_mdpde(
    family: &(impl ParametricFamily + ?Sized),
    sample: &Sample,
    beta: f64,
) -> Result<MdpdeFit> {
    fit_mdpde_with(family, sample, beta, &FitOptions::default())
}

pub fn fit_mdpde_with(
    family: &(impl ParametricFamily + ?Sized),
    sample: &Sample,
    beta: f64,
    opts: &FitOptions,
) -> Result<MdpdeFit> {
    let x = sample.values();
    fit_weighted(family, x, &stats::uniform_weights(x.len()), beta, opts)
}

/// MDPDE from the concatenation of two samples.
pub fn fit_pooled(
    family: &(impl ParametricFamily + ?Sized),
    sample1: &Sample,
    sample2: &Sample,
    beta: f64,
) -> Result<MdpdeFit> {
    fit_mdpde(family, &sample1.pooled(sample2), beta)
}

/// Empirical Ĵ and K̂ at θ̂ from sample averages.
pub fn empirical_jk(
    family: &(impl ParametricFamily + ?Sized),
    sample: &Sample,
    theta: &[f64],
    beta: f64,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    check_theta(family, theta)?;
    let x = sample.values();
    let eq = equations(family, x, &stats::uniform_weights(x.len()), theta, beta)?;
    Ok((eq.j_hat, eq.k_hat))
}

fn mse_from_fit(
    family: &(impl ParametricFamily + ?Sized),
    sample: &Sample,
    fit: &MdpdeFit,
    pilot: &[f64],
) -> Result<f64> {
    let (j, k) = empirical_jk(family, sample, &fit.theta, fit.beta)?;
    let ji = linalg::inverse(&j, "empirical J")?;
    let var = (&ji * k * &ji).trace() / sample.len() as f64;
    let bias: f64 = fit.theta.iter().zip(pilot).map(|(a, b)| (a - b).powi(2)).sum();
    Ok(bias + var)
}

/// Estimated mean squared error of θ̂_β against a pilot estimate:
/// |θ̂_β - θ_P|² + tr(Ĵ⁻¹ K̂ Ĵ⁻¹)/n.
pub fn estimated_mse(
    family: &(impl ParametricFamily + ?Sized),
    sample: &Sample,
    beta: f64,
    pilot: &[f64],
) -> Result<f64> {
    check_theta(family, pilot)?;
    let fit = fit_mdpde(family, sample, beta)?;
    mse_from_fit(family, sample, &fit, pilot)
}

/// Default selection grid 0, 0.05, ..., 1.
pub fn default_beta_grid() -> Vec<f64> {
    (0..=20).map(|i| i as f64 / 20.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub beta: f64,
    /// Criterion per sample; `None` when the fit failed at this β.
    pub mse1: Option<f64>,
    pub mse2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaSelection {
    /// Joint minimizer of the summed criterion.
    pub beta: f64,
    /// Minimizers of each sample's own criterion.
    pub beta_sample1: f64,
    pub beta_sample2: f64,
    pub pilot_beta: f64,
    pub grid: Vec<GridPoint>,
    pub skipped: usize,
}

fn argmin(points: impl Iterator<Item = (f64, f64)>) -> Option<f64> {
    points
        .filter(|(_, v)| v.is_finite())
        .fold(None, |acc: Option<(f64, f64)>, (b, v)| match acc {
            Some((bb, bv)) if bv < v || (bv == v && bb <= b) => Some((bb, bv)),
            _ => Some((b, v)),
        })
        .map(|(b, _)| b)
}

/// Selects β on `grid` by minimizing the summed estimated MSE of the two
/// samples, each against its own MDPDE at `pilot_beta`. Ties go to the
/// smallest β; grid points where a fit fails are skipped.
pub fn select_beta_with(
    family: &(impl ParametricFamily + ?Sized),
    sample1: &Sample,
    sample2: &Sample,
    grid: &[f64],
    pilot_beta: f64,
) -> Result<BetaSelection> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("empty tuning grid".into()));
    }
    if let Some(b) = grid.iter().find(|b| !(0.0..=1.0).contains(*b)) {
        return Err(Error::InvalidInput(format!("grid value {b} outside [0, 1]")));
    }
    let pilot1 = fit_mdpde(family, sample1, pilot_beta)?.theta;
    let pilot2 = fit_mdpde(family, sample2, pilot_beta)?.theta;
    let crit = |s: &Sample, b: f64, pilot: &[f64]| -> Option<f64> {
        let fit = fit_mdpde(family, s, b).ok()?;
        mse_from_fit(family, s, &fit, pilot).ok().filter(|v| v.is_finite())
    };
    let points: Vec<GridPoint> = grid
        .iter()
        .map(|&b| GridPoint {
            beta: b,
            mse1: crit(sample1, b, &pilot1),
            mse2: crit(sample2, b, &pilot2),
        })
        .collect();
    let skipped = points
        .iter()
        .filter(|p| p.mse1.is_none() || p.mse2.is_none())
        .count();
    let joint = argmin(
        points
            .iter()
            .filter_map(|p| Some((p.beta, p.mse1? + p.mse2?))),
    )
    .ok_or_else(|| Error::InvalidInput("criterion failed at every grid point".into()))?;
    let b1 = argmin(points.iter().filter_map(|p| Some((p.beta, p.mse1?)))).unwrap_or(joint);
    let b2 = argmin(points.iter().filter_map(|p| Some((p.beta, p.mse2?)))).unwrap_or(joint);
    Ok(BetaSelection {
        beta: joint,
        beta_sample1: b1,
        beta_sample2: b2,
        pilot_beta,
        grid: points,
        skipped,
    })
}

/// [`select_beta_with`] using the MDPDE at β = 1 as pilot.
pub fn select_beta(
    family: &(impl ParametricFamily + ?Sized),
    sample1: &Sample,
    sample2: &Sample,
    grid: &[f64],
) -> Result<BetaSelection> {
    select_beta_with(family, sample1, sample2, grid, 1.0)
}
