//! Restrictions ψ(θ₁, θ₂) = 0 for composite two-sample hypotheses.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;

/// A restriction ψ: R^p × R^p → R^r. Jacobians Ψ₁, Ψ₂ are p×r with entry
/// (k, j) = ∂ψ_j / ∂θ_{i,k}.
pub trait HypothesisFunction: Send + Sync {
    fn r(&self) -> usize;

    fn label(&self) -> String;

    fn value(&self, theta1: &[f64], theta2: &[f64]) -> DVector<f64>;

    fn jacobians(&self, theta1: &[f64], theta2: &[f64]) -> (DMatrix<f64>, DMatrix<f64>) {
        finite_difference_jacobians(self, theta1, theta2)
    }
}

/// Central differences with step 1e-6·(1 + |θ|).
pub fn finite_difference_jacobians<H: HypothesisFunction + ?Sized>(
    h: &H,
    theta1: &[f64],
    theta2: &[f64],
) -> (DMatrix<f64>, DMatrix<f64>) {
    let r = h.r();
    let column = |t: &[f64], k: usize, first: bool| -> DVector<f64> {
        let step = 1e-6 * (1.0 + t[k].abs());
        let mut up = t.to_vec();
        let mut dn = t.to_vec();
        up[k] += step;
        dn[k] -= step;
        let (vu, vd) = if first {
            (h.value(&up, theta2), h.value(&dn, theta2))
        } else {
            (h.value(theta1, &up), h.value(theta1, &dn))
        };
        (vu - vd) / (2.0 * step)
    };
    let mut j1 = DMatrix::zeros(theta1.len(), r);
    let mut j2 = DMatrix::zeros(theta2.len(), r);
    for k in 0..theta1.len() {
        j1.set_row(k, &column(theta1, k, true).transpose());
    }
    for k in 0..theta2.len() {
        j2.set_row(k, &column(theta2, k, false).transpose());
    }
    (j1, j2)
}

/// Checks that both Jacobians have full column rank r.
pub fn check_rank(j1: &DMatrix<f64>, j2: &DMatrix<f64>) -> Result<()> {
    for j in [j1, j2] {
        let s = linalg::min_singular_value(j);
        if !(s > 1e-10) {
            return Err(Error::RankDeficient(s));
        }
    }
    Ok(())
}

/// ψ = s·(θ₁[c] - θ₂[c]) over a set of coordinates c, with sign s = ±1.
#[derive(Debug, Clone, PartialEq)]
pub struct Difference {
    coords: Vec<usize>,
    p: usize,
    sign: f64,
}

impl Difference {
    /// All p coordinates: ψ = θ₁ - θ₂.
    pub fn new(p: usize) -> Self {
        Self {
            coords: (0..p).collect(),
            p,
            sign: 1.0,
        }
    }

    /// Selected coordinates only, e.g. the means of two normal samples.
    pub fn coords(p: usize, coords: Vec<usize>) -> Self {
        Self { coords, p, sign: 1.0 }
    }

    /// ψ = θ₂ - θ₁ instead.
    pub fn reversed(mut self) -> Self {
        self.sign = -self.sign;
        self
    }
}

impl HypothesisFunction for Difference {
    fn r(&self) -> usize {
        self.coords.len()
    }

    fn label(&self) -> String {
        let dir = if self.sign > 0.0 { "theta1-theta2" } else { "theta2-theta1" };
        format!("difference[{dir}; coords {:?}]", self.coords)
    }

    fn value(&self, theta1: &[f64], theta2: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            self.coords.len(),
            self.coords.iter().map(|&c| self.sign * (theta1[c] - theta2[c])),
        )
    }

    fn jacobians(&self, _theta1: &[f64], _theta2: &[f64]) -> (DMatrix<f64>, DMatrix<f64>) {
        let mut j = DMatrix::zeros(self.p, self.coords.len());
        for (col, &c) in self.coords.iter().enumerate() {
            j[(c, col)] = self.sign;
        }
        (j.clone(), -j)
    }
}

/// ψ = σ₁²/σ₂² - C₀ for the scale coordinate `index`.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceRatio {
    pub c0: f64,
    pub index: usize,
    pub p: usize,
}

impl VarianceRatio {
    /// For the (μ, σ) normal family.
    pub fn normal(c0: f64) -> Self {
        Self { c0, index: 1, p: 2 }
    }
}

impl HypothesisFunction for VarianceRatio {
    fn r(&self) -> usize {
        1
    }

    fn label(&self) -> String {
        format!("variance-ratio[c0 = {}]", self.c0)
    }

    fn value(&self, theta1: &[f64], theta2: &[f64]) -> DVector<f64> {
        let (a, b) = (theta1[self.index], theta2[self.index]);
        DVector::from_element(1, a * a / (b * b) - self.c0)
    }

    fn jacobians(&self, theta1: &[f64], theta2: &[f64]) -> (DMatrix<f64>, DMatrix<f64>) {
        let (a, b) = (theta1[self.index], theta2[self.index]);
        let mut j1 = DMatrix::zeros(self.p, 1);
        let mut j2 = DMatrix::zeros(self.p, 1);
        j1[(self.index, 0)] = 2.0 * a / (b * b);
        j2[(self.index, 0)] = -2.0 * a * a / (b * b * b);
        (j1, j2)
    }
}

type PsiFn = dyn Fn(&[f64], &[f64]) -> DVector<f64> + Send + Sync;

/// A user-supplied restriction with finite-difference Jacobians.
pub struct FnHypothesis {
    r: usize,
    label: String,
    f: Box<PsiFn>,
}

impl FnHypothesis {
    pub fn new<F>(r: usize, label: &str, f: F) -> Self
    where
        F: Fn(&[f64], &[f64]) -> DVector<f64> + Send + Sync + 'static,
    {
        Self {
            r,
            label: label.to_string(),
            f: Box::new(f),
        }
    }
}

impl HypothesisFunction for FnHypothesis {
    fn r(&self) -> usize {
        self.r
    }

    fn label(&self) -> String {
        self.label.clone()
    }

    fn value(&self, theta1: &[f64], theta2: &[f64]) -> DVector<f64> {
        (self.f)(theta1, theta2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analytic_jacobians_match_differences() {
        let t1 = [0.3, 1.7];
        let t2 = [-0.2, 0.9];
        for h in [
            &Difference::new(2) as &dyn HypothesisFunction,
            &Difference::coords(2, vec![0]).reversed(),
            &VarianceRatio::normal(1.5),
        ] {
            let (a1, a2) = h.jacobians(&t1, &t2);
            let (n1, n2) = finite_difference_jacobians(h, &t1, &t2);
            assert!((a1 - n1).amax() < 1e-8 && (a2 - n2).amax() < 1e-8, "{}", h.label());
        }
    }

    #[test]
    fn rank_check() {
        let (j1, j2) = Difference::new(2).jacobians(&[0.0, 1.0], &[0.0, 1.0]);
        assert!(check_rank(&j1, &j2).is_ok());
        let flat = FnHypothesis::new(1, "flat", |_, _| DVector::from_element(1, 0.0));
        let (j1, j2) = flat.jacobians(&[0.0, 1.0], &[0.0, 1.0]);
        assert!(matches!(check_rank(&j1, &j2), Err(Error::RankDeficient(_))));
    }
}
