//! Mellin moments of the Riccati variable and the Lyapunov exponent.
//!
//! The stationary moments f̂(s) = E[Z_∞^s] at E = −k² satisfy the
//! three-term recurrence
//!
//! −k²·f̂(s+1) − c(s)·f̂(s) + f̂(s−1) = 0,  f̂(0) = 1,
//!
//! whose physical solution is the minimal one. Forward iteration is unstable,
//! so ratios r_s = f̂(s)/f̂(s−1) = 1/(c(s) + k²·r_{s+1}) are computed
//! backwards from a deep truncation. The same ratios give the continued
//! fraction Ω(−k²) = c(0)/2 + k²/(c(1) + k²/(c(2) + …)).

use crate::error::{invalid, LabError, Result};
use crate::levy::LevySpec;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OmegaMethod {
    ContinuedFraction,
    MonteCarlo,
    Quadrature,
}

/// Ω(E) = γ(E) − iπN(E) below the spectrum, where it is real.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovResult {
    pub energy: f64,
    pub omega: f64,
    /// Inverse localisation length.
    pub gamma: f64,
    /// Integrated density of states.
    pub idos: f64,
    pub method: OmegaMethod,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentTable {
    pub energy: f64,
    /// f̂(s) for s = 0..=s_max.
    pub values: Vec<f64>,
    /// r_s = f̂(s)/f̂(s−1) for s = 1..=s_max (index 0 holds r_1).
    pub ratios: Vec<f64>,
    /// Truncation depth that met the tolerance (0 when k = 0).
    pub depth: usize,
}

impl MomentTable {
    pub fn s_max(&self) -> usize {
        self.values.len() - 1
    }
}

/// Initial value of the backward recursion at the truncation depth.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tail {
    /// r_S = 0: the plain S-th approximant of the continued fraction.
    Zero,
    /// r_S = positive root of k²r² + c(S)r − 1, the ratio the recursion would
    /// have if c were frozen at c(S).
    FrozenCoefficient,
}

const MAX_DEPTH: usize = 1 << 24;

/// Ratios r_1..=r_{s_max} from a backward sweep started at `depth`.
pub fn backward_ratios(spec: &LevySpec, k: f64, s_max: usize, depth: usize, tail: Tail) -> Result<Vec<f64>> {
    let k2 = k * k;
    let depth = depth.max(s_max + 1);
    let c_depth = spec.c_function(depth as f64)?;
    let mut r = match tail {
        Tail::Zero => 0.0,
        Tail::FrozenCoefficient => 2.0 / (c_depth + (c_depth * c_depth + 4.0 * k2).sqrt()),
    };
    let mut ratios = vec![0.0; s_max];
    for s in (1..depth).rev() {
        r = 1.0 / (spec.c_function(s as f64)? + k2 * r);
        if s <= s_max {
            ratios[s - 1] = r;
        }
    }
    Ok(ratios)
}

fn ensure_subordinator(spec: &LevySpec) -> Result<()> {
    if spec.is_subordinator() {
        Ok(())
    } else {
        Err(LabError::NotSubordinator(format!(
            "sigma2 = {}, mu = {}",
            spec.sigma2(),
            spec.drift_coefficient()
        )))
    }
}

/// Stationary moments f̂(0..=s_max) at E = −k².
///
/// At k = 0 the recurrence decouples into f̂(s) = f̂(s−1)/c(s) and any spec
/// with c(1..=s_max) > 0 is accepted. For k > 0 the spec must be a
/// subordinator, and the truncation depth is doubled until f̂(1) moves by
/// less than `tol`.
pub fn stationary_moment_ratios(spec: &LevySpec, k: f64, s_max: usize, tol: f64) -> Result<MomentTable> {
    if !(k >= 0.0) || !k.is_finite() {
        return Err(invalid(format!("k must be finite and nonnegative, got {k}")));
    }
    if s_max == 0 {
        return Err(invalid("s_max must be at least 1"));
    }
    if !(tol > 0.0) {
        return Err(invalid(format!("tolerance must be positive, got {tol}")));
    }
    let (ratios, depth) = if k == 0.0 {
        let mut ratios = Vec::with_capacity(s_max);
        for s in 1..=s_max {
            let c = spec.c_function(s as f64)?;
            if c <= 0.0 {
                return Err(LabError::DivergentMoment(format!("c({s}) = {c} <= 0, so E[Z^{s}] is infinite")));
            }
            ratios.push(1.0 / c);
        }
        (ratios, 0)
    } else {
        ensure_subordinator(spec)?;
        converge_ratios(spec, k, s_max, tol)?
    };
    let mut values = Vec::with_capacity(s_max + 1);
    values.push(1.0);
    for r in &ratios {
        let last = *values.last().expect("nonempty");
        values.push(last * r);
    }
    Ok(MomentTable {
        energy: -k * k,
        values,
        ratios,
        depth,
    })
}

fn converge_ratios(spec: &LevySpec, k: f64, s_max: usize, tol: f64) -> Result<(Vec<f64>, usize)> {
    let mut depth = (4 * s_max).max(64);
    let mut prev = backward_ratios(spec, k, s_max, depth, Tail::FrozenCoefficient)?;
    loop {
        depth *= 2;
        let next = backward_ratios(spec, k, s_max, depth, Tail::FrozenCoefficient)?;
        let change = (next[0] - prev[0]).abs();
        if change < tol {
            return Ok((next, depth));
        }
        if depth >= MAX_DEPTH {
            return Err(LabError::NotConverged {
                what: "moment ratio recursion",
                iterations: depth,
                last_change: change,
            });
        }
        prev = next;
    }
}

/// Ω(−k²) from the continued fraction. Requires a subordinator.
pub fn continued_fraction_omega(spec: &LevySpec, k: f64, tol: f64) -> Result<LyapunovResult> {
    ensure_subordinator(spec)?;
    let c0 = spec.c_function(0.0)?;
    let tail = if k == 0.0 {
        0.0
    } else {
        let table = stationary_moment_ratios(spec, k, 1, tol / (k * k))?;
        k * k * table.ratios[0]
    };
    let omega = c0 / 2.0 + tail;
    let (gamma, idos) = lyapunov_decompose(omega, -k * k)?;
    Ok(LyapunovResult {
        energy: -k * k,
        omega,
        gamma,
        idos,
        method: OmegaMethod::ContinuedFraction,
    })
}

/// Ω(−k²) = c(0)/2 + k²·E(Z_∞) for a mean obtained elsewhere.
pub fn omega_from_mean(spec: &LevySpec, k: f64, mean_z: f64, method: OmegaMethod) -> Result<LyapunovResult> {
    if !(mean_z >= 0.0) || !mean_z.is_finite() {
        return Err(invalid(format!("E(Z) must be finite and nonnegative, got {mean_z}")));
    }
    let c0 = spec.c_function(0.0)?;
    let omega = c0 / 2.0 + k * k * mean_z;
    let (gamma, idos) = lyapunov_decompose(omega, -k * k)?;
    Ok(LyapunovResult {
        energy: -k * k,
        omega,
        gamma,
        idos,
        method,
    })
}

/// E[I_T^s] for T ~ Exp(λ) independent of W, from the recursion
/// F̂(λ, s) = s/(λ + s·c(s))·F̂(λ, s−1) with λF̂(λ, 0) = 1.
pub fn bertoin_yor_moment(spec: &LevySpec, lambda: f64, s: u32) -> Result<f64> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(invalid(format!("lambda must be positive, got {lambda}")));
    }
    ensure_subordinator(spec)?;
    let mut m = 1.0;
    for j in 1..=s {
        let j = j as f64;
        m *= j / (lambda + j * spec.c_function(j)?);
    }
    Ok(m)
}

/// (γ, N) from a real Ω at E ≤ 0.
pub fn lyapunov_decompose(omega: f64, energy: f64) -> Result<(f64, f64)> {
    if energy > 0.0 {
        return Err(invalid(format!(
            "positive energy {energy} needs analytic continuation, which is not supported"
        )));
    }
    Ok((omega, 0.0))
}
