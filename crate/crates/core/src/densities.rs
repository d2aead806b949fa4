//! Closed-form stationary densities of the Riccati variable Z_∞ at E = −k².
//!
//! Two families have explicit solutions:
//!
//! * Gaussian driving noise, no jumps (W = a·x + σB):
//!   f(z) ∝ z^{−2a/σ²−1} exp(−(2/σ²)(k²z + 1/z)) on (0, ∞).
//! * Drift μ plus Exp(q) jumps at rate p, no Gaussian part:
//!   f(z) ∝ z^q (z − z₋)^{−ν−1} (z₊ − z)^{ν−1} on (0, z₊),
//!   with z± the roots of k²z² + μz − 1 and ν = p/√(μ² + 4k²).
//!
//! Normalisation, moments and the CDF are computed by adaptive quadrature in
//! coordinates that remove the known endpoint behaviour.

use crate::error::{invalid, LabError, Result};
use crate::quad::{integrate, QuadOptions};
use crate::specfun::{bessel_k, gauss_2f1, ln_beta};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum DensityFamily {
    /// W = a·x + σB.
    Brownian { a: f64, sigma2: f64, k: f64 },
    /// W = μx + compound Poisson with rate p and Exp(q) jumps.
    ExponentialJumps { mu: f64, p: f64, q: f64, k: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StationaryDensity {
    pub family: DensityFamily,
    /// Open support interval (lo, hi); hi may be infinite.
    pub support: (f64, f64),
    /// Roots of k²z² + μz − 1 (jump family only; NaN otherwise).
    pub z_minus: f64,
    pub z_plus: f64,
    /// ν = p/√(μ² + 4k²) (jump family only; NaN otherwise).
    pub nu: f64,
    /// log C, with C·(unnormalised density) integrating to one.
    pub log_norm: f64,
    /// Scale subtracted from the unnormalised log density before exponentiating.
    #[serde(skip)]
    shift: f64,
}

const QUAD: QuadOptions = QuadOptions {
    abs_tol: 1e-13,
    rel_tol: 1e-12,
    max_intervals: 4000,
};

impl StationaryDensity {
    /// Density for Gaussian noise: pre σ² > 0, k ≥ 0, and a > 0 when k = 0.
    pub fn brownian(a: f64, sigma2: f64, k: f64) -> Result<Self> {
        if !(sigma2 > 0.0) || !a.is_finite() || !(k >= 0.0) {
            return Err(invalid(format!("need sigma2 > 0, finite a, k >= 0; got a={a}, sigma2={sigma2}, k={k}")));
        }
        if k == 0.0 && !(a > 0.0) {
            return Err(invalid(format!(
                "density z^(-2a/sigma2-1) exp(-2/(sigma2 z)) is not integrable at infinity for a = {a} <= 0"
            )));
        }
        let mut d = Self {
            family: DensityFamily::Brownian { a, sigma2, k },
            support: (0.0, f64::INFINITY),
            z_minus: f64::NAN,
            z_plus: f64::NAN,
            nu: f64::NAN,
            log_norm: 0.0,
            shift: 0.0,
        };
        d.shift = d.log_unnormalised(d.mode());
        d.log_norm = d.normalize()?;
        Ok(d)
    }

    /// Density for drift plus exponential jumps: pre μ ≥ 0, p, q, k > 0.
    pub fn exponential_jumps(mu: f64, p: f64, q: f64, k: f64) -> Result<Self> {
        if !(mu >= 0.0 && p > 0.0 && q > 0.0 && k > 0.0) || !(mu.is_finite() && p.is_finite() && q.is_finite() && k.is_finite()) {
            return Err(invalid(format!("need mu >= 0 and p, q, k > 0; got mu={mu}, p={p}, q={q}, k={k}")));
        }
        let kappa = (mu * mu + 4.0 * k * k).sqrt();
        let z_plus = 2.0 / (mu + kappa);
        let z_minus = -(mu + kappa) / (2.0 * k * k);
        let nu = p / kappa;
        let mut d = Self {
            family: DensityFamily::ExponentialJumps { mu, p, q, k },
            support: (0.0, z_plus),
            z_minus,
            z_plus,
            nu,
            log_norm: 0.0,
            shift: 0.0,
        };
        d.shift = (0..=64)
            .map(|i| d.log_jump_core(z_plus * (i as f64 + 0.5) / 65.0, 0.0))
            .fold(f64::NEG_INFINITY, f64::max);
        d.log_norm = d.normalize()?;
        Ok(d)
    }

    /// Mode of the Gaussian-noise density.
    fn mode(&self) -> f64 {
        match self.family {
            DensityFamily::Brownian { a, sigma2, k } => {
                let b = 2.0 * a + sigma2;
                if k == 0.0 {
                    2.0 / b
                } else {
                    4.0 / (b + (b * b + 16.0 * k * k).sqrt())
                }
            }
            DensityFamily::ExponentialJumps { .. } => 0.5 * self.z_plus,
        }
    }

    /// Unnormalised log density (without the shift).
    pub fn log_unnormalised(&self, z: f64) -> f64 {
        if !(z > self.support.0 && z < self.support.1) {
            return f64::NEG_INFINITY;
        }
        match self.family {
            DensityFamily::Brownian { a, sigma2, k } => {
                -(2.0 * a / sigma2 + 1.0) * z.ln() - 2.0 / sigma2 * (k * k * z + 1.0 / z)
            }
            DensityFamily::ExponentialJumps { .. } => {
                self.log_jump_core(z, 0.0) + (self.nu - 1.0) * (self.z_plus - z).ln()
            }
        }
    }

    /// log of z^{q+power} (z − z₋)^{−ν−1}: the jump density without its
    /// (z₊ − z)^{ν−1} endpoint factor.
    fn log_jump_core(&self, z: f64, power: f64) -> f64 {
        match self.family {
            DensityFamily::ExponentialJumps { q, .. } => {
                (q + power) * z.ln() - (self.nu + 1.0) * (z - self.z_minus).ln()
            }
            DensityFamily::Brownian { .. } => unreachable!("jump core of a Brownian density"),
        }
    }

    pub fn log_pdf(&self, z: f64) -> f64 {
        self.log_norm + self.log_unnormalised(z)
    }

    pub fn pdf(&self, z: f64) -> f64 {
        self.log_pdf(z).exp()
    }

    /// ∫_lo^hi z^power · exp(log_unnormalised(z) − shift) dz.
    fn scaled_integral(&self, lo: f64, hi: f64, power: f64) -> Result<f64> {
        let lo = lo.max(self.support.0);
        let hi = hi.min(self.support.1);
        if !(hi > lo) {
            return Ok(0.0);
        }
        match self.family {
            DensityFamily::Brownian { .. } => {
                let g = |z: f64| {
                    if z <= 0.0 {
                        0.0
                    } else {
                        (power * z.ln() + self.log_unnormalised(z) - self.shift).exp()
                    }
                };
                let split = self.mode().max(1.0);
                let mut total = 0.0;
                if lo < split {
                    total += integrate(g, lo, hi.min(split), QUAD)?.value;
                }
                if hi > split {
                    let from = lo.max(split);
                    if hi.is_finite() {
                        total += integrate(g, from, hi, QUAD)?.value;
                    } else {
                        // z = 1/u on the tail
                        let tail = |u: f64| if u <= 0.0 { 0.0 } else { g(1.0 / u) / (u * u) };
                        total += integrate(tail, 0.0, 1.0 / from, QUAD)?.value;
                    }
                }
                Ok(total)
            }
            DensityFamily::ExponentialJumps { .. } => {
                // u = (z₊ − z)^ν absorbs the (z₊ − z)^{ν−1} factor exactly.
                let nu = self.nu;
                let zp = self.z_plus;
                let h = |u: f64| {
                    let z = zp - u.powf(1.0 / nu);
                    if z <= 0.0 {
                        0.0
                    } else {
                        (self.log_jump_core(z, power) - self.shift).exp() / nu
                    }
                };
                let u_lo = (zp - hi).max(0.0).powf(nu);
                let u_hi = (zp - lo).powf(nu);
                Ok(integrate(h, u_lo, u_hi, QUAD)?.value)
            }
        }
    }

    fn normalize(&self) -> Result<f64> {
        let total = self.scaled_integral(self.support.0, self.support.1, 0.0)?;
        if !(total > 0.0 && total.is_finite()) {
            return Err(invalid(format!("density is not normalisable (integral {total})")));
        }
        Ok(-(total.ln() + self.shift))
    }

    /// Probability of (lo, hi).
    pub fn mass(&self, lo: f64, hi: f64) -> Result<f64> {
        Ok(self.scaled_integral(lo, hi, 0.0)? * (self.log_norm + self.shift).exp())
    }

    /// E[Z^power] for real power.
    pub fn moment(&self, power: f64) -> Result<f64> {
        if let DensityFamily::Brownian { a, sigma2, k } = self.family {
            if k == 0.0 && power >= 2.0 * a / sigma2 {
                return Err(LabError::DivergentMoment(format!(
                    "E[Z^{power}] diverges for 2a/sigma2 = {}",
                    2.0 * a / sigma2
                )));
            }
        }
        Ok(self.scaled_integral(self.support.0, self.support.1, power)? * (self.log_norm + self.shift).exp())
    }

    pub fn mean(&self) -> Result<f64> {
        self.moment(1.0)
    }

    pub fn cdf(&self, z: f64) -> Result<f64> {
        if z <= self.support.0 {
            return Ok(0.0);
        }
        if z >= self.support.1 {
            return Ok(1.0);
        }
        Ok(self.mass(self.support.0, z)?.clamp(0.0, 1.0))
    }

    /// CDF at each point of an ascending slice, accumulated interval by
    /// interval.
    pub fn cdf_sorted(&self, zs: &[f64]) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(zs.len());
        let mut acc = 0.0;
        let mut prev = self.support.0;
        for &z in zs {
            let z = z.clamp(self.support.0, self.support.1);
            if z > prev {
                acc += self.mass(prev, z)?;
                prev = z;
            }
            out.push(acc.clamp(0.0, 1.0));
        }
        Ok(out)
    }

    /// Point z with cdf(z) = p, by bisection.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&p) {
            return Err(invalid(format!("quantile level must lie in [0, 1), got {p}")));
        }
        let mut lo = self.support.0;
        let mut hi = if self.support.1.is_finite() {
            self.support.1
        } else {
            let mut h = self.mode().max(1.0);
            while self.cdf(h)? < p {
                h *= 2.0;
            }
            h
        };
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid)? < p {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-14 * hi {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// log C from the special-function closed forms (a cross-check of the
    /// quadrature value stored in `log_norm`).
    pub fn closed_form_log_norm(&self) -> Result<f64> {
        match self.family {
            DensityFamily::Brownian { a, sigma2, k } => {
                let lam = 2.0 * a / sigma2;
                if k == 0.0 {
                    // ∫ z^{−λ−1} e^{−β/z} dz = Γ(λ) β^{−λ}, β = 2/σ²
                    let beta = 2.0 / sigma2;
                    Ok(-(crate::specfun::lgamma(lam)? - lam * beta.ln()))
                } else {
                    // ∫ z^{−λ−1} e^{−αz − β/z} dz = 2 (β/α)^{−λ/2} K_λ(2√(αβ))
                    let arg = 4.0 * k / sigma2;
                    Ok(-(2f64.ln() + lam * k.ln() + bessel_k(lam, arg)?.ln()))
                }
            }
            DensityFamily::ExponentialJumps { q, .. } => {
                let nu = self.nu;
                let zp = self.z_plus;
                let zm = self.z_minus;
                let log_inv_c = (q + nu) * zp.ln() - (nu + 1.0) * zm.abs().ln()
                    + ln_beta(nu, q + 1.0)?
                    + gauss_2f1(nu + 1.0, q + 1.0, q + nu + 1.0, zp / zm)?.ln();
                Ok(-log_inv_c)
            }
        }
    }

    /// Closed-form mean of the Gaussian-noise family for k > 0:
    /// K_{1−λ}(4k/σ²) / (k·K_λ(4k/σ²)), λ = 2a/σ².
    pub fn brownian_mean_closed_form(a: f64, sigma2: f64, k: f64) -> Result<f64> {
        if !(k > 0.0 && sigma2 > 0.0) {
            return Err(invalid("closed-form mean needs k > 0 and sigma2 > 0"));
        }
        let lam = 2.0 * a / sigma2;
        let arg = 4.0 * k / sigma2;
        Ok(bessel_k(1.0 - lam, arg)? / (k * bessel_k(lam, arg)?))
    }
}
