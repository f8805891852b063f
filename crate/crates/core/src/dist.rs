//! Reference distributions: standard normal, central and noncentral
//! chi-square, and the power-derivative series used by power influence
//! functions.

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

const EPS: f64 = 1e-16;
const FPMIN: f64 = 1e-300;
const MAX_TERMS: usize = 10_000;
const TAIL_MASS: f64 = 1e-12;
const LAST_TERM: f64 = 1e-14;

// ---------------------------------------------------------------------------
// Incomplete gamma
// ---------------------------------------------------------------------------

fn gamma_prefactor(a: f64, x: f64) -> f64 {
    (-x + a * x.ln() - ln_gamma(a)).exp()
}

fn gamma_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut del = 1.0 / a;
    let mut sum = del;
    for _ in 0..100_000 {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * EPS {
            break;
        }
    }
    sum * gamma_prefactor(a, x)
}

fn gamma_continued_fraction(a: f64, x: f64) -> f64 {
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / FPMIN;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..100_000 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = b + an / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    gamma_prefactor(a, x) * h
}

/// Regularized lower incomplete gamma P(a, x).
pub fn gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x < a + 1.0 {
        gamma_series(a, x)
    } else {
        1.0 - gamma_continued_fraction(a, x)
    }
}

/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
pub fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        1.0 - gamma_series(a, x)
    } else {
        gamma_continued_fraction(a, x)
    }
}

// ---------------------------------------------------------------------------
// Standard normal
// ---------------------------------------------------------------------------

pub fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Φ(z), through erfc(t) = Q(1/2, t²).
pub fn std_normal_cdf(z: f64) -> f64 {
    let tail = 0.5 * gamma_q(0.5, 0.5 * z * z);
    if z < 0.0 {
        tail
    } else {
        1.0 - tail
    }
}

/// Upper tail 1 - Φ(z), accurate far into the right tail.
pub fn std_normal_sf(z: f64) -> f64 {
    std_normal_cdf(-z)
}

/// Φ⁻¹(q): rational starting value refined by Halley steps on the CDF.
pub fn std_normal_quantile(q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::InvalidInput(format!(
            "normal quantile level {q} outside (0, 1)"
        )));
    }
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    let tail = |p: f64| {
        let t = (-2.0 * p.ln()).sqrt();
        (((((C[0] * t + C[1]) * t + C[2]) * t + C[3]) * t + C[4]) * t + C[5])
            / ((((D[0] * t + D[1]) * t + D[2]) * t + D[3]) * t + 1.0)
    };
    let mut x = if q < 0.02425 {
        tail(q)
    } else if q > 1.0 - 0.02425 {
        -tail(1.0 - q)
    } else {
        let r = q - 0.5;
        let s = r * r;
        (((((A[0] * s + A[1]) * s + A[2]) * s + A[3]) * s + A[4]) * s + A[5]) * r
            / (((((B[0] * s + B[1]) * s + B[2]) * s + B[3]) * s + B[4]) * s + 1.0)
    };
    for _ in 0..3 {
        // work in whichever tail keeps the residual accurate
        let e = if x > 0.0 {
            (1.0 - q) - std_normal_sf(x)
        } else {
            std_normal_cdf(x) - q
        };
        let u = e / std_normal_pdf(x);
        x -= u / (1.0 + 0.5 * x * u);
    }
    Ok(x)
}

// ---------------------------------------------------------------------------
// Chi-square
// ---------------------------------------------------------------------------

fn check_df(df: f64) -> Result<()> {
    if df > 0.0 && df.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("degrees of freedom {df} must be positive")))
    }
}

pub fn chisq_cdf(x: f64, df: f64) -> f64 {
    gamma_p(0.5 * df, 0.5 * x)
}

pub fn chisq_sf(x: f64, df: f64) -> f64 {
    gamma_q(0.5 * df, 0.5 * x)
}

pub fn chisq_pdf(x: f64, df: f64) -> f64 {
    if x <= 0.0 {
        return if df < 2.0 {
            f64::INFINITY
        } else if df == 2.0 {
            0.5
        } else {
            0.0
        };
    }
    let k = 0.5 * df;
    ((k - 1.0) * x.ln() - 0.5 * x - k * std::f64::consts::LN_2 - ln_gamma(k)).exp()
}

/// Upper-α point χ²_{df,α}: the x with CDF(x) = 1 - α.
pub fn chisq_quantile(alpha: f64, df: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidInput(format!("level {alpha} outside (0, 1)")));
    }
    check_df(df)?;
    let f = |x: f64| chisq_sf(x, df) - alpha;
    let (mut lo, mut hi) = (0.0, df.max(1.0));
    while f(hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    // Wilson-Hilferty start, clamped into the bracket
    let z = std_normal_quantile(1.0 - alpha)?;
    let h = 2.0 / (9.0 * df);
    let mut x = (df * (1.0 - h + z * h.sqrt()).powi(3)).clamp(lo, hi);
    if x <= lo || x >= hi {
        x = 0.5 * (lo + hi);
    }
    for _ in 0..200 {
        let fx = f(x);
        if fx > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let pdf = chisq_pdf(x, df);
        let mut next = x + fx / pdf;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 1e-15 * x.max(1e-300) || hi - lo <= 1e-15 * hi {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}

/// Visits the Poisson(mu) weights in order of decreasing mass until the
/// remaining tail is negligible: the cumulative weight reaches 1 - 1e-12 and
/// the last weight is below 1e-14, with at most 10 000 terms.
fn poisson_mixture<F: FnMut(usize) -> f64>(mu: f64, mut term: F) -> f64 {
    if mu == 0.0 {
        return term(0);
    }
    let log_w = |v: usize| -mu + v as f64 * mu.ln() - ln_gamma(v as f64 + 1.0);
    let mode = mu.floor() as usize;
    let mut sum = 0.0;
    let mut cum = 0.0;
    let mut count = 0;
    let mut v = mode as isize;
    while v >= 0 && count < MAX_TERMS {
        let w = log_w(v as usize).exp();
        sum += w * term(v as usize);
        cum += w;
        count += 1;
        if w < 1e-300 || (w < LAST_TERM * 1e-3 && (v as f64) < mu - 1.0) {
            break;
        }
        v -= 1;
    }
    let mut v = mode + 1;
    while count < MAX_TERMS {
        let w = log_w(v).exp();
        sum += w * term(v);
        cum += w;
        count += 1;
        if cum >= 1.0 - TAIL_MASS && w < LAST_TERM {
            break;
        }
        v += 1;
    }
    sum
}

/// Survival function of the noncentral chi-square with `df` degrees of freedom
/// and noncentrality `ncp`, as a Poisson(ncp/2) mixture of central tails.
pub fn noncentral_chisq_sf(x: f64, df: f64, ncp: f64) -> Result<f64> {
    check_df(df)?;
    if !(ncp >= 0.0 && ncp.is_finite()) {
        return Err(Error::InvalidInput(format!("noncentrality {ncp} must be >= 0")));
    }
    if x <= 0.0 {
        return Ok(1.0);
    }
    let s = poisson_mixture(0.5 * ncp, |v| chisq_sf(x, df + 2.0 * v as f64));
    Ok(s.clamp(0.0, 1.0))
}

pub fn noncentral_chisq_cdf(x: f64, df: f64, ncp: f64) -> Result<f64> {
    Ok(1.0 - noncentral_chisq_sf(x, df, ncp)?)
}

/// Mixture weights C_v = (q/2)^v e^{-q/2} / v! for a quadratic form q = t'At.
pub fn mixture_weight(v: usize, q: f64) -> f64 {
    if q == 0.0 {
        return if v == 0 { 1.0 } else { 0.0 };
    }
    let mu = 0.5 * q;
    (-mu + v as f64 * mu.ln() - ln_gamma(v as f64 + 1.0)).exp()
}

/// K*_p(s) = e^{-s/2} Σ_v s^{v-1}/(v! 2^v) (2v - s) P(χ²_{p+2v} > χ²_{p,α}).
///
/// Regrouped as Σ_v π_v (P_{v+1} - P_v) with Poisson(s/2) weights π_v, which
/// is the same series and is finite at s = 0.
pub fn kp_star(s: f64, df: f64, alpha: f64) -> Result<f64> {
    check_df(df)?;
    if !(s >= 0.0 && s.is_finite()) {
        return Err(Error::InvalidInput(format!("argument {s} must be >= 0")));
    }
    let c = chisq_quantile(alpha, df)?;
    let tail = |v: usize| chisq_sf(c, df + 2.0 * v as f64);
    Ok(poisson_mixture(0.5 * s, |v| tail(v + 1) - tail(v)))
}
