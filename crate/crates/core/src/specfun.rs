//! Special functions used by the closed-form densities and target laws:
//! log-gamma, Beta, the regularised lower incomplete gamma function, the
//! modified Bessel function of the second kind and Gauss' ₂F₁.

use crate::error::{invalid, LabError, Result};
use serde::Serialize;
use std::f64::consts::PI;

/// Declared accuracy of one routine over the domain where it is used.
#[derive(Debug, Clone, Serialize)]
pub struct AccuracyContract {
    pub function: &'static str,
    pub domain: &'static str,
    pub rel_tol: f64,
}

pub fn contracts() -> Vec<AccuracyContract> {
    vec![
        AccuracyContract { function: "lgamma", domain: "x in (0, 200]", rel_tol: 1e-10 },
        AccuracyContract { function: "beta", domain: "a, b in (0, 50]", rel_tol: 1e-10 },
        AccuracyContract { function: "reg_inc_gamma_lower", domain: "s in (0, 50], x in [0, 200]", rel_tol: 1e-10 },
        AccuracyContract { function: "bessel_k", domain: "nu in [0, 10], x in [0.01, 50]", rel_tol: 1e-8 },
        AccuracyContract { function: "gauss_2f1", domain: "a, b, c > 0, z in (-10, 0.95]", rel_tol: 1e-8 },
    ]
}

const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of Γ(x) for x > 0 (Lanczos approximation).
pub fn lgamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(invalid(format!("lgamma requires x > 0, got {x}")));
    }
    Ok(lgamma_pos(x))
}

fn lgamma_pos(x: f64) -> f64 {
    if x < 0.5 {
        // Γ(x) = Γ(x + 1)/x keeps the series in its accurate range.
        return lgamma_pos(x + 1.0) - x.ln();
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

pub fn ln_beta(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return Err(invalid(format!("beta requires a, b > 0, got ({a}, {b})")));
    }
    Ok(lgamma_pos(a) + lgamma_pos(b) - lgamma_pos(a + b))
}

pub fn beta(a: f64, b: f64) -> Result<f64> {
    ln_beta(a, b).map(f64::exp)
}

/// Regularised lower incomplete gamma P(s, x) = γ(s, x)/Γ(s).
pub fn reg_inc_gamma_lower(s: f64, x: f64) -> Result<f64> {
    if !(s > 0.0) || !(x >= 0.0) || x.is_nan() {
        return Err(invalid(format!("P(s, x) requires s > 0, x >= 0, got ({s}, {x})")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    let log_prefix = -x + s * x.ln() - lgamma_pos(s);
    if x < s + 1.0 {
        let mut term = 1.0 / s;
        let mut sum = term;
        let mut ap = s;
        for _ in 0..10_000 {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * 1e-17 {
                return Ok((sum.ln() + log_prefix).exp().min(1.0));
            }
        }
        Err(LabError::NotConverged { what: "incomplete gamma series", iterations: 10_000, last_change: term })
    } else {
        // Modified Lentz evaluation of the continued fraction for Q(s, x).
        let tiny = 1e-300;
        let mut b = x + 1.0 - s;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..10_000 {
            let an = -(i as f64) * (i as f64 - s);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                let q = (log_prefix + h.ln()).exp();
                return Ok((1.0 - q).max(0.0));
            }
        }
        Err(LabError::NotConverged { what: "incomplete gamma continued fraction", iterations: 10_000, last_change: h })
    }
}

/// Modified Bessel function of the second kind K_ν(x) from
/// K_ν(x) = ∫₀^∞ exp(−x cosh u) cosh(νu) du.
///
/// The integrand is analytic and decays double-exponentially, so the
/// trapezoidal rule converges geometrically in the step size.
pub fn bessel_k(nu: f64, x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(invalid(format!("bessel_k requires x > 0, got {x}")));
    }
    let nu = nu.abs();
    // log of the integrand scaled by e^{x}
    let log_g = |u: f64| -> f64 {
        let cm1 = 2.0 * (0.5 * u).sinh().powi(2);
        let ch = if nu * u > 30.0 {
            nu * u - std::f64::consts::LN_2
        } else {
            (nu * u).cosh().ln()
        };
        -x * cm1 + ch
    };
    let mut peak = 0.0f64;
    let mut upper = 0.0;
    loop {
        upper += 0.25;
        let v = log_g(upper);
        peak = peak.max(v);
        if v < peak - 50.0 {
            break;
        }
        if upper > 800.0 {
            return Err(LabError::NotConverged { what: "bessel_k truncation", iterations: 3200, last_change: v });
        }
    }
    let g = |u: f64| (log_g(u) - peak).exp();
    let mut n = 64usize;
    let mut prev = f64::NAN;
    while n <= 1 << 18 {
        let h = upper / n as f64;
        let mut sum = 0.5 * g(0.0);
        for i in 1..=n {
            sum += g(i as f64 * h);
        }
        let est = sum * h;
        if (est - prev).abs() <= 1e-15 * est {
            return Ok((est.ln() + peak - x).exp());
        }
        prev = est;
        n *= 2;
    }
    Err(LabError::NotConverged { what: "bessel_k trapezoid", iterations: n, last_change: prev })
}

/// Gauss hypergeometric function ₂F₁(a, b; c; z) for real z < 1.
///
/// Negative arguments go through the Pfaff transformation so the series is
/// always summed at a point of [0, 1).
pub fn gauss_2f1(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    if c <= 0.0 && c.fract() == 0.0 {
        return Err(invalid(format!("2F1 pole: c = {c} is a nonpositive integer")));
    }
    if !(z < 1.0) || z.is_nan() {
        return Err(invalid(format!("2F1 implemented for z < 1 only, got {z}")));
    }
    if z < 0.0 {
        let w = z / (z - 1.0);
        return Ok((1.0 - z).powf(-a) * series_2f1(a, c - b, c, w)?);
    }
    series_2f1(a, b, c, z)
}

fn series_2f1(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    const MAX_TERMS: usize = 200_000;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut small = 0;
    for n in 0..MAX_TERMS {
        let nf = n as f64;
        term *= (a + nf) * (b + nf) / ((c + nf) * (nf + 1.0)) * z;
        sum += term;
        if term == 0.0 {
            return Ok(sum);
        }
        if term.abs() < 1e-17 * sum.abs() {
            small += 1;
            if small >= 2 {
                return Ok(sum);
            }
        } else {
            small = 0;
        }
    }
    Err(LabError::NotConverged { what: "2F1 series", iterations: MAX_TERMS, last_change: term })
}
