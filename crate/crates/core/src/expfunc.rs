//! Exponential functionals I_t = ∫₀^t e^{−W(s)} ds and the Riccati flow
//!
//! Z' = 1 + E·Z² − w·Z,  w = W',  E = −k² ≤ 0,
//!
//! read in the Stratonovich sense for the Gaussian part, with the jump rule
//! Z(x+) = e^{−ΔW}·Z(x−) at jump positions.

use crate::error::{invalid, Result};
use crate::levy::{grid_steps, LevySpec, PathRecord};
use crate::rng::rng_from_seed;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// One draw of the stationary Riccati variable Z_∞.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiccatiSample {
    pub value: f64,
    /// E = −k².
    pub energy: f64,
    pub burn_in: f64,
}

/// (1 − e^{−x})/x, continuous at 0.
#[inline]
fn relax(x: f64) -> f64 {
    if x.abs() < 1e-9 {
        1.0 - 0.5 * x
    } else {
        -(-x).exp_m1() / x
    }
}

/// Positive root of k²z² + μz − 1 = 0, written without cancellation. Infinite
/// when k = 0 and μ ≤ 0.
pub fn positive_fixed_point(k: f64, mu: f64) -> f64 {
    let kappa = (mu * mu + 4.0 * k * k).sqrt();
    if mu + kappa > 0.0 {
        2.0 / (mu + kappa)
    } else {
        f64::INFINITY
    }
}

/// I_t of a sampled path. Exact on linear pieces when there is no Gaussian
/// part, trapezoidal on the Brownian grid otherwise.
pub fn exp_functional(path: &PathRecord) -> f64 {
    let mut w = 0.0;
    let mut ew = 1.0;
    let mut total = 0.0;
    if path.grid.is_empty() {
        for piece in path.pieces() {
            let rise = path.drift * piece.len;
            total += ew * piece.len * relax(rise);
            w += rise + piece.jump;
            ew = (-w).exp();
        }
    } else {
        for piece in path.pieces() {
            let w_next = w + path.drift * piece.len + piece.gauss;
            let ew_next = (-w_next).exp();
            total += 0.5 * (ew + ew_next) * piece.len;
            w = w_next + piece.jump;
            ew = if piece.jump == 0.0 { ew_next } else { (-w).exp() };
        }
    }
    total
}

/// One draw of ∫₀^horizon e^{−μt − B_t} dt, trapezoidal on a grid of mesh
/// `dx`. Uses the same random stream as
/// `exp_functional(&LevySpec::brownian(mu, 1)?.sample_path(horizon, dx, seed)?)`.
pub fn sample_dufresne(mu: f64, horizon: f64, dx: f64, seed: u64) -> Result<f64> {
    if !(mu > 0.0) {
        return Err(invalid(format!("the Dufresne functional needs mu > 0, got {mu}")));
    }
    if !(horizon > 0.0 && dx > 0.0) {
        return Err(invalid("horizon and dx must be positive"));
    }
    let mut rng = rng_from_seed(seed);
    let n = grid_steps(horizon, dx);
    let mut w = 0.0;
    let mut ew = 1.0;
    let mut total = 0.0;
    for i in 0..n {
        let left = i as f64 * dx;
        let right = if i + 1 == n { horizon } else { (i + 1) as f64 * dx };
        let z: f64 = rng.sample(StandardNormal);
        let inc = (right - left).sqrt() * z;
        let len = right - left;
        let w_next = w + mu * len + inc;
        let ew_next = (-w_next).exp();
        total += 0.5 * (ew + ew_next) * len;
        w = w_next;
        ew = ew_next;
    }
    Ok(total)
}

/// Exact solution after length `dx` of Z' = 1 − k²Z² − μZ started at `z0`.
pub fn riccati_flow_segment(z0: f64, k: f64, mu: f64, dx: f64) -> f64 {
    if k == 0.0 {
        if mu == 0.0 {
            return z0 + dx;
        }
        return z0 * (-mu * dx).exp() + dx * relax(mu * dx);
    }
    let k2 = k * k;
    let kappa = (mu * mu + 4.0 * k2).sqrt();
    let zp = 2.0 / (mu + kappa);
    let delta = z0 - zp;
    if delta == 0.0 {
        return zp;
    }
    // y = Z − z₊ solves the Bernoulli equation y' = −k²y² − κy.
    let decay = (-kappa * dx).exp();
    let grown = -(-kappa * dx).exp_m1();
    zp + kappa * delta * decay / (kappa + k2 * delta * grown)
}

/// Z(x+) = e^{−ΔW}·Z(x−).
#[inline]
pub fn riccati_jump(z: f64, dw: f64) -> f64 {
    z * (-dw).exp()
}

#[inline]
fn heun_step(z: f64, k2: f64, mu: f64, h: f64, b: f64) -> f64 {
    let f = |z: f64| 1.0 - k2 * z * z - mu * z;
    let pred = z + f(z) * h - z * b;
    z + 0.5 * (f(z) + f(pred)) * h - 0.5 * (z + pred) * b
}

/// Terminal value of the Riccati flow along `path`, started at `z0`.
///
/// Between jumps the flow is solved exactly when the path has no Gaussian
/// part; otherwise each linear piece takes one Heun step, which is consistent
/// with the Stratonovich reading.
pub fn riccati_along_path(path: &PathRecord, k: f64, z0: f64) -> f64 {
    let mut z = z0;
    if path.grid.is_empty() {
        for piece in path.pieces() {
            z = riccati_flow_segment(z, k, path.drift, piece.len);
            z = riccati_jump(z, piece.jump);
        }
    } else {
        let k2 = k * k;
        for piece in path.pieces() {
            z = heun_step(z, k2, path.drift, piece.len, piece.gauss);
            z = riccati_jump(z, piece.jump);
        }
    }
    z
}

/// Euler–Maruyama on the Itô form dZ = (1 − k²Z² − μZ + σ²Z/2)dx − Z σdB.
/// Cross-check for the Heun scheme.
pub fn riccati_along_path_ito(path: &PathRecord, k: f64, z0: f64) -> f64 {
    let k2 = k * k;
    let mut z = z0;
    for piece in path.pieces() {
        let drift = 1.0 - k2 * z * z - path.drift * z + 0.5 * path.sigma2 * z;
        z += drift * piece.len - z * piece.gauss;
        z = riccati_jump(z, piece.jump);
    }
    z
}

/// Path length after which the Riccati variable has forgotten its start.
///
/// Two Riccati trajectories driven by the same path contract at mean rate
/// c(0) + 2k²E(Z_∞) ≥ c(0); 30/c(0) leaves a factor of at most e^{−30}.
/// When c(0) ≤ 0 the energy term alone sets the rate and 30/k is used.
pub fn default_burn_in(spec: &LevySpec, k: f64) -> Result<f64> {
    let c0 = spec.c_function(0.0)?;
    if c0 > 0.0 {
        Ok(30.0 / c0)
    } else if k > 0.0 {
        Ok(30.0 / k)
    } else {
        Err(invalid(format!(
            "no stationary Riccati law at E = 0 when c(0) = {c0} <= 0"
        )))
    }
}

/// One draw of Z_∞: the Riccati variable after `burn_in`, started at 0.
pub fn sample_stationary_riccati(spec: &LevySpec, k: f64, burn_in: f64, dx: f64, seed: u64) -> Result<RiccatiSample> {
    if !(k >= 0.0) || !k.is_finite() {
        return Err(invalid(format!("k must be finite and nonnegative, got {k}")));
    }
    if !(burn_in > 0.0) {
        return Err(invalid(format!("burn_in must be positive, got {burn_in}")));
    }
    if k == 0.0 && spec.c_function(0.0)? <= 0.0 {
        return Err(invalid("Z_inf does not exist at E = 0 unless c(0) > 0"));
    }
    let energy = -k * k;
    let value = if spec.jump_rate() == 0.0 && spec.sigma2() > 0.0 {
        brownian_riccati_stream(spec, k, burn_in, dx, seed)?
    } else {
        let path = spec.sample_path(burn_in, dx, seed)?;
        riccati_along_path(&path, k, 0.0)
    };
    Ok(RiccatiSample { value, energy, burn_in })
}

/// Heun integration for a pure Brownian spec without materialising the path.
/// Draws the same normals, in the same order, as `sample_path`.
fn brownian_riccati_stream(spec: &LevySpec, k: f64, horizon: f64, dx: f64, seed: u64) -> Result<f64> {
    if !(dx > 0.0) {
        return Err(invalid(format!("dx must be positive, got {dx}")));
    }
    let mut rng = rng_from_seed(seed);
    let sigma = spec.sigma2().sqrt();
    let mu = spec.drift_coefficient();
    let k2 = k * k;
    let n = grid_steps(horizon, dx);
    let mut z = 0.0;
    for i in 0..n {
        let left = i as f64 * dx;
        let right = if i + 1 == n { horizon } else { (i + 1) as f64 * dx };
        let g: f64 = rng.sample(StandardNormal);
        let len = right - left;
        z = heun_step(z, k2, mu, len, sigma * len.sqrt() * g);
    }
    Ok(z)
}
