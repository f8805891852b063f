//! Generic numeric evaluation of the divergence integrals.
//!
//! Continuous families are integrated by adaptive Gauss-Kronrod on the part
//! of the support where f^{1+β} ≥ 1e-14 (absolute tolerance 1e-10); count
//! families are summed until the remaining probability mass is below 1e-12.

use nalgebra::{DMatrix, DVector};

use super::{ParametricFamily, Support};
use crate::error::{Error, Result};
use crate::quadrature;

const ABS_TOL: f64 = 1e-10;
const CUTOFF: f64 = 1e-14;
const TAIL_MASS: f64 = 1e-12;
const MAX_COUNT: u64 = 50_000_000;

fn truncated_range<F: ParametricFamily + ?Sized>(
    family: &F,
    theta: &[f64],
    exponent: f64,
) -> Result<(f64, f64)> {
    let Support::Continuous { lower, upper } = family.support() else {
        return Err(Error::InvalidInput("not a continuous support".into()));
    };
    let (centre, scale) = family.spread(theta);
    let centre = centre.clamp(lower, upper);
    let mass = |x: f64| family.density(theta, x).powf(exponent);
    let walk = |dir: f64, bound: f64| -> Result<f64> {
        for k in 1..100_000 {
            let x = centre + dir * scale * k as f64;
            if (dir < 0.0 && x <= bound) || (dir > 0.0 && x >= bound) {
                return Ok(bound);
            }
            if k >= 8 && mass(x) < CUTOFF {
                return Ok(x);
            }
        }
        Err(Error::NoConvergence(100_000))
    };
    Ok((walk(-1.0, lower)?, walk(1.0, upper)?))
}

/// Sums `g(k)` over the counts carrying all but 1e-12 of the mass of f_θ.
fn sum_counts<F, G>(family: &F, theta: &[f64], g: G) -> Result<f64>
where
    F: ParametricFamily + ?Sized,
    G: Fn(f64) -> f64,
{
    let (centre, _) = family.spread(theta);
    let mut cum = 0.0;
    let mut total = 0.0;
    for k in 0..MAX_COUNT {
        let x = k as f64;
        let p = family.density(theta, x);
        cum += p;
        total += g(x);
        if cum >= 1.0 - TAIL_MASS && x >= centre && p < CUTOFF {
            return Ok(total);
        }
    }
    Err(Error::NoConvergence(MAX_COUNT as usize))
}

/// ∫ g over the support, truncated where f_θ^{exponent} is negligible.
pub fn integrate<F, G>(family: &F, theta: &[f64], exponent: f64, g: G) -> Result<f64>
where
    F: ParametricFamily + ?Sized,
    G: Fn(f64) -> f64,
{
    match family.support() {
        Support::Counts => sum_counts(family, theta, g),
        Support::Continuous { .. } => {
            let (a, b) = truncated_range(family, theta, exponent)?;
            quadrature::integrate(g, a, b, ABS_TOL)
        }
    }
}

pub fn power_integral<F: ParametricFamily + ?Sized>(family: &F, theta: &[f64], beta: f64) -> Result<f64> {
    integrate(family, theta, 1.0 + beta, |x| family.density(theta, x).powf(1.0 + beta))
}

pub fn xi<F: ParametricFamily + ?Sized>(family: &F, theta: &[f64], beta: f64) -> Result<DVector<f64>> {
    let p = family.dim();
    let mut out = DVector::zeros(p);
    for i in 0..p {
        out[i] = integrate(family, theta, 1.0 + beta, |x| {
            family.score(theta, x)[i] * family.density(theta, x).powf(1.0 + beta)
        })?;
    }
    Ok(out)
}

fn outer_integral<F: ParametricFamily + ?Sized>(
    family: &F,
    theta: &[f64],
    exponent: f64,
) -> Result<DMatrix<f64>> {
    let p = family.dim();
    let mut out = DMatrix::zeros(p, p);
    for i in 0..p {
        for j in i..p {
            let v = integrate(family, theta, exponent, |x| {
                let u = family.score(theta, x);
                u[i] * u[j] * family.density(theta, x).powf(exponent)
            })?;
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    Ok(out)
}

pub fn j_matrix<F: ParametricFamily + ?Sized>(family: &F, theta: &[f64], beta: f64) -> Result<DMatrix<f64>> {
    outer_integral(family, theta, 1.0 + beta)
}

pub fn k_matrix<F: ParametricFamily + ?Sized>(family: &F, theta: &[f64], beta: f64) -> Result<DMatrix<f64>> {
    let xi = family.xi(theta, beta)?;
    Ok(outer_integral(family, theta, 1.0 + 2.0 * beta)? - &xi * xi.transpose())
}

pub fn cross_integral<F: ParametricFamily + ?Sized>(
    family: &F,
    model: &[f64],
    data: &[f64],
    beta: f64,
) -> Result<f64> {
    let g = |x: f64| family.density(model, x).powf(beta) * family.density(data, x);
    match family.support() {
        Support::Counts => sum_counts(family, data, g),
        Support::Continuous { .. } => {
            let (a1, b1) = truncated_range(family, data, 1.0)?;
            let (a2, b2) = truncated_range(family, model, 1.0 + beta)?;
            quadrature::integrate(g, a1.min(a2), b1.max(b2), ABS_TOL)
        }
    }
}

pub fn kl<F: ParametricFamily + ?Sized>(family: &F, theta1: &[f64], theta2: &[f64]) -> Result<f64> {
    integrate(family, theta1, 1.0, |x| {
        let f1 = family.density(theta1, x);
        if f1 == 0.0 {
            0.0
        } else {
            f1 * (family.log_density(theta1, x) - family.log_density(theta2, x))
        }
    })
}

fn step(v: f64, rel: f64) -> f64 {
    rel * (1.0 + v.abs())
}

pub fn score_jacobian<F: ParametricFamily + ?Sized>(family: &F, theta: &[f64], x: f64) -> DMatrix<f64> {
    let p = family.dim();
    let mut out = DMatrix::zeros(p, p);
    for j in 0..p {
        let h = step(theta[j], 1e-6);
        let mut up = theta.to_vec();
        let mut dn = theta.to_vec();
        up[j] += h;
        dn[j] -= h;
        let d = (family.score(&up, x) - family.score(&dn, x)) / (2.0 * h);
        out.set_column(j, &d);
    }
    out
}

pub fn xi_jacobian<F: ParametricFamily + ?Sized>(family: &F, theta: &[f64], beta: f64) -> Result<DMatrix<f64>> {
    let p = family.dim();
    let mut out = DMatrix::zeros(p, p);
    for j in 0..p {
        let h = step(theta[j], 1e-5);
        let mut up = theta.to_vec();
        let mut dn = theta.to_vec();
        up[j] += h;
        dn[j] -= h;
        let d = (family.xi(&up, beta)? - family.xi(&dn, beta)?) / (2.0 * h);
        out.set_column(j, &d);
    }
    Ok(out)
}

/// Nodes and probability weights approximating F_θ: Gauss-Kronrod nodes on
/// `panels` equal pieces of the truncated support, or the counts themselves.
/// Weights are normalized to sum to one.
pub fn discretize<F: ParametricFamily + ?Sized>(
    family: &F,
    theta: &[f64],
    panels: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let (mut x, mut w) = (Vec::new(), Vec::new());
    match family.support() {
        Support::Counts => {
            let (centre, _) = family.spread(theta);
            let mut cum = 0.0;
            for k in 0..MAX_COUNT {
                let p = family.density(theta, k as f64);
                cum += p;
                if p > 0.0 {
                    x.push(k as f64);
                    w.push(p);
                }
                if cum >= 1.0 - TAIL_MASS && k as f64 >= centre && p < CUTOFF {
                    break;
                }
            }
        }
        Support::Continuous { .. } => {
            let (a, b) = truncated_range(family, theta, 1.0)?;
            let h = (b - a) / panels.max(1) as f64;
            for i in 0..panels.max(1) {
                let lo = a + h * i as f64;
                for (node, weight) in quadrature::kronrod_rule(lo, lo + h) {
                    let f = family.density(theta, node);
                    if f > 0.0 {
                        x.push(node);
                        w.push(weight * f);
                    }
                }
            }
        }
    }
    let total: f64 = w.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Domain(format!("{} has no mass at {:?}", family.name(), theta)));
    }
    w.iter_mut().for_each(|v| *v /= total);
    Ok((x, w))
}
