//! Influence analytics for the Wald-type statistics: first and second order
//! influence functions, gross-error sensitivity, and power and level
//! influence functions under contaminated contiguous alternatives.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dist::{kp_star, std_normal_pdf, std_normal_quantile};
use crate::error::{Error, Result};
use crate::family::{influence_with, ParametricFamily, Support};
use crate::linalg;
use crate::optimize::{golden_maximize, nelder_mead};
use crate::wald::power::{as_vector, check_level, Drift};
use crate::wald::{LocalAlternative, NullPoint, TestKind};

/// Which sample receives the point mass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Which {
    First,
    Second,
    Both,
}

/// Contamination points: x in sample 1, y in sample 2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "which", rename_all = "kebab-case")]
pub enum Pattern {
    First { x: f64 },
    Second { y: f64 },
    Both { x: f64, y: f64 },
}

impl Pattern {
    pub fn which(&self) -> Which {
        match self {
            Pattern::First { .. } => Which::First,
            Pattern::Second { .. } => Which::Second,
            Pattern::Both { .. } => Which::Both,
        }
    }

    fn from_points(which: Which, p: &[f64]) -> Self {
        match which {
            Which::First => Pattern::First { x: p[0] },
            Which::Second => Pattern::Second { y: p[0] },
            Which::Both => Pattern::Both { x: p[0], y: p[1] },
        }
    }

    fn check(&self, support: Support) -> Result<()> {
        let pts: &[f64] = match self {
            Pattern::First { x } => &[*x],
            Pattern::Second { y } => &[*y],
            Pattern::Both { x, y } => &[*x, *y],
        };
        match pts.iter().find(|v| !support.contains(**v)) {
            Some(v) => Err(Error::InvalidInput(format!("contamination point {v} outside the support"))),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IfReport {
    pub order: u8,
    pub value: f64,
    pub pattern: Pattern,
    pub null: NullPoint,
    pub beta: f64,
    /// sup of |IF| of the same order over a probe grid of contamination points.
    pub probe_sup: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sensitivity {
    /// +∞ when the influence function is unbounded.
    pub value: f64,
    pub bounded: bool,
    /// Contamination point(s) attaining the largest influence found.
    pub argmax: Vec<f64>,
}

/// Precomputed pieces shared by every contamination point.
struct Context<'a, F: ParametricFamily + ?Sized> {
    family: &'a F,
    drift: Drift,
    null: NullPoint,
    beta: f64,
    j1: DMatrix<f64>,
    xi1: DVector<f64>,
    j2: DMatrix<f64>,
    xi2: DVector<f64>,
}

impl<'a, F: ParametricFamily + ?Sized> Context<'a, F> {
    fn new(family: &'a F, kind: TestKind<'_>, null: &NullPoint, omega: f64, beta: f64) -> Result<Self> {
        let drift = Drift::new(family, kind, null, omega, beta)?;
        let j1 = linalg::inverse(&family.j_matrix(&null.theta1, beta)?, "J")?;
        let j2 = linalg::inverse(&family.j_matrix(&null.theta2, beta)?, "J")?;
        Ok(Self {
            family,
            drift,
            null: null.clone(),
            beta,
            j1,
            xi1: family.xi(&null.theta1, beta)?,
            j2,
            xi2: family.xi(&null.theta2, beta)?,
        })
    }

    fn if1(&self, x: f64) -> DVector<f64> {
        influence_with(self.family, &self.null.theta1, self.beta, x, &self.j1, &self.xi1)
    }

    fn if2(&self, y: f64) -> DVector<f64> {
        influence_with(self.family, &self.null.theta2, self.beta, y, &self.j2, &self.xi2)
    }

    /// P₁'IF₁(x), P₂'IF₂(y) or their sum, scaled by √ω and √(1-ω) if `scaled`.
    fn projected(&self, pattern: &Pattern, scaled: bool) -> DVector<f64> {
        let (a, b) = if scaled {
            (self.drift.omega.sqrt(), (1.0 - self.drift.omega).sqrt())
        } else {
            (1.0, 1.0)
        };
        let d = &self.drift;
        match *pattern {
            Pattern::First { x } => d.p1.transpose() * self.if1(x) * a,
            Pattern::Second { y } => d.p2.transpose() * self.if2(y) * b,
            Pattern::Both { x, y } => {
                d.p1.transpose() * self.if1(x) * a + d.p2.transpose() * self.if2(y) * b
            }
        }
    }

    fn test_if(&self, order: u8, pattern: &Pattern) -> Result<f64> {
        let d = &self.drift;
        match (order, d.one_sided) {
            (1, false) => Ok(0.0),
            (1, true) => Ok(self.projected(pattern, false)[0] / d.a[(0, 0)].sqrt()),
            (2, false) => {
                let v = self.projected(pattern, false);
                Ok(2.0 * (v.transpose() * &d.a_inv * &v)[(0, 0)])
            }
            (2, true) => Err(Error::InvalidInput(
                "second order influence is defined for two-sided tests".into(),
            )),
            _ => Err(Error::InvalidInput(format!("influence order {order} is not 1 or 2"))),
        }
    }

    fn pif_at(&self, w: &DVector<f64>, alpha: f64, pattern: &Pattern) -> Result<f64> {
        let d = &self.drift;
        let g = self.projected(pattern, true);
        if d.one_sided {
            let sd = d.a[(0, 0)].sqrt();
            let z = std_normal_quantile(1.0 - alpha)?;
            Ok(std_normal_pdf(z - w[0] / sd) * g[0] / sd)
        } else {
            let k = kp_star(d.noncentrality(w), d.df as f64, alpha)?;
            Ok(k * (w.transpose() * &d.a_inv * g)[(0, 0)])
        }
    }

    /// Influence used for sensitivity: IF₂ for two-sided tests, IF for one-sided.
    fn sensitivity_order(&self) -> u8 {
        if self.drift.one_sided {
            1
        } else {
            2
        }
    }

    fn theta_for(&self, which: Which, coord: usize) -> &[f64] {
        match (which, coord) {
            (Which::Second, _) | (Which::Both, 1) => &self.null.theta2,
            _ => &self.null.theta1,
        }
    }

    fn coords(which: Which) -> usize {
        if which == Which::Both {
            2
        } else {
            1
        }
    }
}

/// Range of contamination points within `mult` scale units of the centre of
/// f_θ, clipped to the support.
fn span(family: &(impl ParametricFamily + ?Sized), theta: &[f64], mult: f64) -> (f64, f64) {
    let (c, s) = family.spread(theta);
    let (lo, hi) = (c - mult * s, c + mult * s);
    match family.support() {
        Support::Continuous { lower, upper } => (lo.max(lower), hi.min(upper)),
        Support::Counts => (lo.max(0.0).floor(), hi.ceil()),
    }
}

fn grid(family: &(impl ParametricFamily + ?Sized), (lo, hi): (f64, f64), points: usize) -> Vec<f64> {
    match family.support() {
        Support::Counts => {
            let count = (hi - lo) as usize + 1;
            let stride = count.div_ceil(points).max(1);
            (0..count).step_by(stride).map(|k| lo + k as f64).collect()
        }
        Support::Continuous { lower, upper } => {
            // keep off the endpoints of a half-open support
            let (lo, hi) = (
                if lo == lower { lo + 1e-9 * (hi - lo) } else { lo },
                if hi == upper { hi - 1e-9 * (hi - lo) } else { hi },
            );
            (0..points)
                .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
                .collect()
        }
    }
}

/// Largest |h| over the grid, as (value, point).
fn grid_sup<F, H>(ctx: &Context<'_, F>, which: Which, mult: f64, points: usize, h: &H) -> (f64, Vec<f64>)
where
    F: ParametricFamily + ?Sized,
    H: Fn(&[f64]) -> f64,
{
    let k = Context::<F>::coords(which);
    let axes: Vec<Vec<f64>> = (0..k)
        .map(|c| grid(ctx.family, span(ctx.family, ctx.theta_for(which, c), mult), points))
        .collect();
    let mut best = (f64::NEG_INFINITY, vec![]);
    let mut visit = |p: Vec<f64>| {
        let v = h(&p).abs();
        if v > best.0 {
            best = (v, p);
        }
    };
    if k == 1 {
        axes[0].iter().for_each(|&x| visit(vec![x]));
    } else {
        for &x in &axes[0] {
            for &y in &axes[1] {
                visit(vec![x, y]);
            }
        }
    }
    best
}

fn check_order_and_beta(beta: f64) -> Result<()> {
    if beta >= 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("tuning parameter {beta} must be >= 0")))
    }
}

/// Influence function of the test statistic of the given order at the null.
#[allow(clippy::too_many_arguments)]
pub fn test_if(
    family: &(impl ParametricFamily + ?Sized),
    kind: TestKind<'_>,
    null: &NullPoint,
    omega: f64,
    beta: f64,
    order: u8,
    pattern: Pattern,
) -> Result<IfReport> {
    check_order_and_beta(beta)?;
    pattern.check(family.support())?;
    let ctx = Context::new(family, kind, null, omega, beta)?;
    let value = ctx.test_if(order, &pattern)?;
    let which = pattern.which();
    let points = if which == Which::Both { 41 } else { 401 };
    let (probe_sup, _) = grid_sup(&ctx, which, 50.0, points, &|p: &[f64]| {
        ctx.test_if(order, &Pattern::from_points(which, p)).unwrap_or(f64::NAN)
    });
    Ok(IfReport {
        order,
        value,
        pattern,
        null: null.clone(),
        beta,
        probe_sup,
    })
}

/// sup over contamination points of |IF₂| (two-sided) or |IF| (one-sided).
///
/// A 10⁴ point grid over ±50 scale units is refined by golden section (or a
/// 100×100 grid refined by Nelder-Mead when both samples are contaminated).
/// The influence is declared unbounded when a grid ten times wider finds a
/// value more than 1% larger.
pub fn gross_error_sensitivity(
    family: &(impl ParametricFamily + ?Sized),
    kind: TestKind<'_>,
    null: &NullPoint,
    omega: f64,
    beta: f64,
    which: Which,
) -> Result<Sensitivity> {
    check_order_and_beta(beta)?;
    let ctx = Context::new(family, kind, null, omega, beta)?;
    let order = ctx.sensitivity_order();
    let support = family.support();
    let h = |p: &[f64]| -> f64 {
        let pat = Pattern::from_points(which, p);
        if pat.check(support).is_err() {
            return 0.0;
        }
        ctx.test_if(order, &pat).map(f64::abs).unwrap_or(0.0)
    };
    let points = if which == Which::Both { 100 } else { 10_000 };
    let (mut best, mut arg) = grid_sup(&ctx, which, 50.0, points, &h);
    if matches!(support, Support::Continuous { .. }) {
        if which == Which::Both {
            let step: Vec<f64> = (0..2)
                .map(|c| family.spread(ctx.theta_for(which, c)).1)
                .collect();
            let boxes: Vec<(f64, f64)> = (0..2)
                .map(|c| span(family, ctx.theta_for(which, c), 50.0))
                .collect();
            let inside = |p: &[f64]| p.iter().zip(&boxes).all(|(v, (lo, hi))| v >= lo && v <= hi);
            let r = nelder_mead(
                |p| if inside(p) { -h(p) } else { 0.0 },
                &arg,
                &step,
                1e-10,
                2000,
            );
            if -r.fx > best {
                best = -r.fx;
                arg = r.x;
            }
        } else {
            let (lo, hi) = span(family, ctx.theta_for(which, 0), 50.0);
            let width = (hi - lo) / (points - 1) as f64;
            let (a, b) = ((arg[0] - width).max(lo), (arg[0] + width).min(hi));
            let (x, v) = golden_maximize(|x| h(&[x]), a, b, 1e-12);
            if v > best {
                best = v;
                arg = vec![x];
            }
        }
    }
    let (wide, wide_arg) = grid_sup(&ctx, which, 500.0, points, &h);
    if wide > 1.01 * best {
        return Ok(Sensitivity {
            value: f64::INFINITY,
            bounded: false,
            argmax: wide_arg,
        });
    }
    Ok(Sensitivity {
        value: best,
        bounded: true,
        argmax: arg,
    })
}

/// Influence of the given order at many contamination points, sharing the
/// setup; used for plotting curves.
#[allow(clippy::too_many_arguments)]
pub fn test_if_curve(
    family: &(impl ParametricFamily + ?Sized),
    kind: TestKind<'_>,
    null: &NullPoint,
    omega: f64,
    beta: f64,
    order: u8,
    patterns: &[Pattern],
) -> Result<Vec<f64>> {
    check_order_and_beta(beta)?;
    let ctx = Context::new(family, kind, null, omega, beta)?;
    patterns
        .iter()
        .map(|p| {
            p.check(family.support())?;
            ctx.test_if(order, p)
        })
        .collect()
}

/// Power influence at many contamination points.
#[allow(clippy::too_many_arguments)]
pub fn pif_curve(
    family: &(impl ParametricFamily + ?Sized),
    kind: TestKind<'_>,
    alt: &LocalAlternative,
    omega: f64,
    beta: f64,
    alpha: f64,
    patterns: &[Pattern],
) -> Result<Vec<f64>> {
    check_level(alpha)?;
    let ctx = Context::new(family, kind, &alt.null, omega, beta)?;
    let w = ctx.drift.w(
        &as_vector(family, &alt.delta1, "Δ₁")?,
        &as_vector(family, &alt.delta2, "Δ₂")?,
    );
    patterns
        .iter()
        .map(|p| {
            p.check(family.support())?;
            ctx.pif_at(&w, alpha, p)
        })
        .collect()
}

/// Power influence function at the contiguous alternative `alt`.
pub fn pif(
    family: &(impl ParametricFamily + ?Sized),
    kind: TestKind<'_>,
    alt: &LocalAlternative,
    omega: f64,
    beta: f64,
    alpha: f64,
    pattern: Pattern,
) -> Result<f64> {
    check_level(alpha)?;
    pattern.check(family.support())?;
    let ctx = Context::new(family, kind, &alt.null, omega, beta)?;
    let w = ctx.drift.w(
        &as_vector(family, &alt.delta1, "Δ₁")?,
        &as_vector(family, &alt.delta2, "Δ₂")?,
    );
    ctx.pif_at(&w, alpha, &pattern)
}

/// Level influence function: the power influence at Δ₁ = Δ₂ = 0.
pub fn lif(
    family: &(impl ParametricFamily + ?Sized),
    kind: TestKind<'_>,
    null: &NullPoint,
    omega: f64,
    beta: f64,
    alpha: f64,
    pattern: Pattern,
) -> Result<f64> {
    let p = family.dim();
    let alt = LocalAlternative {
        null: null.clone(),
        delta1: vec![0.0; p],
        delta2: vec![0.0; p],
    };
    pif(family, kind, &alt, omega, beta, alpha, pattern)
}

/// Asymptotic power when the contiguous alternative is contaminated by a
/// point mass of size ε/√(sample size): Δ̃ᵢ = Δᵢ + ε IFᵢ.
#[allow(clippy::too_many_arguments)]
pub fn contaminated_contiguous_power(
    family: &(impl ParametricFamily + ?Sized),
    kind: TestKind<'_>,
    alt: &LocalAlternative,
    omega: f64,
    beta: f64,
    alpha: f64,
    epsilon: f64,
    pattern: Pattern,
) -> Result<f64> {
    check_level(alpha)?;
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidInput(format!("ε = {epsilon} must be >= 0")));
    }
    pattern.check(family.support())?;
    let ctx = Context::new(family, kind, &alt.null, omega, beta)?;
    let w = ctx.drift.w(
        &as_vector(family, &alt.delta1, "Δ₁")?,
        &as_vector(family, &alt.delta2, "Δ₂")?,
    );
    let shifted = if epsilon == 0.0 {
        w
    } else {
        w + ctx.projected(&pattern, true) * epsilon
    };
    ctx.drift.power(&shifted, alpha)
}

/// Contaminated contiguous power evaluated at any ε, including the negative
/// side needed by central differences.
#[doc(hidden)]
#[allow(clippy::too_many_arguments)]
pub fn contaminated_power_signed(
    family: &(impl ParametricFamily + ?Sized),
    kind: TestKind<'_>,
    alt: &LocalAlternative,
    omega: f64,
    beta: f64,
    alpha: f64,
    epsilon: f64,
    pattern: Pattern,
) -> Result<f64> {
    let ctx = Context::new(family, kind, &alt.null, omega, beta)?;
    let w = ctx.drift.w(
        &as_vector(family, &alt.delta1, "Δ₁")?,
        &as_vector(family, &alt.delta2, "Δ₂")?,
    );
    ctx.drift.power(&(w + ctx.projected(&pattern, true) * epsilon), alpha)
}
