//! Lévy process specifications, their analytic descriptors and exact samplers.
//!
//! A [`LevySpec`] is the triple (a, σ², Π) of the Lévy–Khintchine
//! representation
//!
//! Λ(θ) = iaθ − σ²θ²/2 + ∫ (e^{iθy} − 1 − iθy/(1+y²)) Π(dy),
//!
//! with Π either zero or the exponential measure p·q·e^{−qy} dy on (0, ∞).
//! Everything downstream only needs Λ, the drift μ and c(s) = −Λ(is)/s.

use crate::error::{invalid, LabError, Result};
use crate::quad::{integrate_to_inf, QuadOptions};
use crate::rng::rng_from_seed;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

/// Lévy measure of the jump part.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum JumpFamily {
    #[default]
    None,
    /// Π(dy) = p·q·e^{−qy} on y > 0: intensity p, Exp(q) jump sizes.
    #[serde(rename = "exp")]
    ExponentialPositive { p: f64, q: f64 },
}

/// Serialized form: exactly one of `a` (Lévy–Khintchine drift) or `mu`
/// (drift coefficient a − compensator).
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    #[serde(default)]
    a: Option<f64>,
    #[serde(default)]
    mu: Option<f64>,
    #[serde(default)]
    sigma2: f64,
    #[serde(default)]
    jumps: JumpFamily,
}

/// A validated Lévy process specification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec")]
pub struct LevySpec {
    a: f64,
    sigma2: f64,
    jumps: JumpFamily,
    /// ∫ y/(1+y²) Π(dy), computed once at construction.
    #[serde(skip)]
    compensator: f64,
}

impl TryFrom<RawSpec> for LevySpec {
    type Error = LabError;
    fn try_from(raw: RawSpec) -> Result<Self> {
        match (raw.a, raw.mu) {
            (Some(a), None) => LevySpec::new(a, raw.sigma2, raw.jumps),
            (None, Some(mu)) => LevySpec::with_drift(mu, raw.sigma2, raw.jumps),
            _ => Err(invalid("a spec needs exactly one of `a` or `mu`")),
        }
    }
}

fn compensator_integral(jumps: JumpFamily) -> Result<f64> {
    match jumps {
        JumpFamily::None => Ok(0.0),
        JumpFamily::ExponentialPositive { p, q } => {
            // substitute u = q·y: p ∫ q·u/(q² + u²) e^{−u} du
            let r = integrate_to_inf(
                |u: f64| q * u / (q * q + u * u) * (-u).exp(),
                0.0,
                QuadOptions::tol(1e-14, 1e-12),
            )?;
            Ok(p * r.value)
        }
    }
}

impl LevySpec {
    pub fn new(a: f64, sigma2: f64, jumps: JumpFamily) -> Result<Self> {
        if !a.is_finite() {
            return Err(invalid(format!("a must be finite, got {a}")));
        }
        if !(sigma2 >= 0.0) || !sigma2.is_finite() {
            return Err(invalid(format!("sigma2 must be a finite nonnegative number, got {sigma2}")));
        }
        if let JumpFamily::ExponentialPositive { p, q } = jumps {
            if !(p > 0.0 && p.is_finite() && q > 0.0 && q.is_finite()) {
                return Err(invalid(format!("jump parameters need p > 0 and q > 0, got p={p}, q={q}")));
            }
        }
        let compensator = compensator_integral(jumps)?;
        Ok(Self { a, sigma2, jumps, compensator })
    }

    /// Builds the spec whose drift coefficient μ = a − ∫ y/(1+y²)Π(dy) equals `mu`.
    pub fn with_drift(mu: f64, sigma2: f64, jumps: JumpFamily) -> Result<Self> {
        let comp = compensator_integral(jumps)?;
        let mut spec = Self::new(mu + comp, sigma2, jumps)?;
        spec.compensator = comp;
        Ok(spec)
    }

    /// W(x) = a·x + σB(x).
    pub fn brownian(a: f64, sigma2: f64) -> Result<Self> {
        Self::new(a, sigma2, JumpFamily::None)
    }

    pub fn pure_drift(mu: f64) -> Result<Self> {
        Self::new(mu, 0.0, JumpFamily::None)
    }

    /// Compound Poisson process with drift μ and Exp(q) jumps at rate p.
    pub fn compound_poisson(mu: f64, p: f64, q: f64) -> Result<Self> {
        Self::with_drift(mu, 0.0, JumpFamily::ExponentialPositive { p, q })
    }

    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }
    pub fn jumps(&self) -> JumpFamily {
        self.jumps
    }
    pub fn compensator(&self) -> f64 {
        self.compensator
    }

    /// Total jump intensity Π(ℝ∖{0}).
    pub fn jump_rate(&self) -> f64 {
        match self.jumps {
            JumpFamily::None => 0.0,
            JumpFamily::ExponentialPositive { p, .. } => p,
        }
    }

    /// Λ(θ) with E[exp(iθW(t))] = exp(tΛ(θ)).
    pub fn levy_exponent(&self, theta: Complex64) -> Complex64 {
        let i = Complex64::i();
        let mut out = i * theta * self.a - 0.5 * self.sigma2 * theta * theta;
        if let JumpFamily::ExponentialPositive { p, q } = self.jumps {
            // ∫ (e^{iθy} − 1) pq e^{−qy} dy = p·iθ/(q − iθ)
            out += p * i * theta / (q - i * theta) - i * theta * self.compensator;
        }
        out
    }

    /// μ = a − ∫ y/(1+y²) Π(dy).
    pub fn drift_coefficient(&self) -> f64 {
        self.a - self.compensator
    }

    /// c(s) = −Λ(is)/s for s > 0, extended continuously to s = 0.
    pub fn c_function(&self, s: f64) -> Result<f64> {
        if !(s >= 0.0) || !s.is_finite() {
            return Err(invalid(format!("c(s) is defined here for finite s >= 0, got {s}")));
        }
        let mut c = self.drift_coefficient() - 0.5 * self.sigma2 * s;
        if let JumpFamily::ExponentialPositive { p, q } = self.jumps {
            c += p / (q + s);
        }
        Ok(c)
    }

    /// Non-decreasing paths: no Gaussian part, positive jumps only, μ ≥ 0.
    pub fn is_subordinator(&self) -> bool {
        self.sigma2 == 0.0 && self.drift_coefficient() >= 0.0
    }

    /// Samples W on [0, horizon]. Jumps are placed event-exactly; the
    /// Gaussian part uses exact increments on a grid of mesh `dx`.
    pub fn sample_path(&self, horizon: f64, dx: f64, seed: u64) -> Result<PathRecord> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(invalid(format!("horizon must be positive, got {horizon}")));
        }
        if self.sigma2 > 0.0 && !(dx > 0.0) {
            return Err(invalid(format!("dx must be positive, got {dx}")));
        }
        let mut rng = rng_from_seed(seed);
        let events = self.sample_events(horizon, &mut rng);
        let grid = if self.sigma2 > 0.0 {
            brownian_grid(self.sigma2.sqrt(), horizon, dx, &mut rng)
        } else {
            Vec::new()
        };
        Ok(PathRecord::assemble(horizon, self.drift_coefficient(), self.sigma2, events, grid))
    }

    pub(crate) fn sample_events<R: Rng>(&self, horizon: f64, rng: &mut R) -> Vec<(f64, f64)> {
        match self.jumps {
            JumpFamily::None => Vec::new(),
            JumpFamily::ExponentialPositive { p, q } => {
                let n = Poisson::new(p * horizon)
                    .expect("positive Poisson mean")
                    .sample(rng) as usize;
                let mut pos: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * horizon).collect();
                pos.sort_by(f64::total_cmp);
                pos.dedup();
                let sizes = Exp::new(q).expect("positive rate");
                pos.into_iter().map(|x| (x, sizes.sample(rng))).collect()
            }
        }
    }
}

/// Number of grid steps of mesh `dx` covering `[0, horizon]`; the last step
/// may be shorter.
pub(crate) fn grid_steps(horizon: f64, dx: f64) -> usize {
    ((horizon / dx) * (1.0 - 1e-12)).ceil().max(1.0) as usize
}

pub(crate) fn brownian_grid<R: Rng>(sigma: f64, horizon: f64, dx: f64, rng: &mut R) -> Vec<(f64, f64)> {
    let n = grid_steps(horizon, dx);
    let mut grid = Vec::with_capacity(n);
    for i in 0..n {
        let left = i as f64 * dx;
        let right = if i + 1 == n { horizon } else { (i + 1) as f64 * dx };
        let z: f64 = rng.sample(StandardNormal);
        grid.push((right, sigma * (right - left).sqrt() * z));
    }
    grid
}

/// A sampled path W on [0, horizon], W(0) = 0.
///
/// W(x) = drift·x + (Gaussian part) + (sum of jumps at positions ≤ x). The
/// Gaussian part is known at the grid points and linearly interpolated
/// between them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    pub horizon: f64,
    pub drift: f64,
    pub sigma2: f64,
    /// (position, jump size), positions strictly increasing.
    pub events: Vec<(f64, f64)>,
    /// (right end of step, Gaussian increment over the step).
    pub grid: Vec<(f64, f64)>,
    pub terminal_value: f64,
}

impl PathRecord {
    pub fn assemble(horizon: f64, drift: f64, sigma2: f64, events: Vec<(f64, f64)>, grid: Vec<(f64, f64)>) -> Self {
        let terminal_value = drift * horizon
            + grid.iter().map(|&(_, b)| b).sum::<f64>()
            + events.iter().map(|&(_, j)| j).sum::<f64>();
        Self { horizon, drift, sigma2, events, grid, terminal_value }
    }

    /// Path with no randomness: W(x) = drift·x.
    pub fn deterministic(horizon: f64, drift: f64) -> Self {
        Self::assemble(horizon, drift, 0.0, Vec::new(), Vec::new())
    }

    /// The reversed path s ↦ W(t) − W((t − s)−), which has the same law as W.
    pub fn reversed(&self) -> Self {
        let t = self.horizon;
        let events = self.events.iter().rev().map(|&(pos, j)| (t - pos, j)).collect();
        let mut grid = Vec::with_capacity(self.grid.len());
        for i in (0..self.grid.len()).rev() {
            let left = if i == 0 { 0.0 } else { self.grid[i - 1].0 };
            grid.push((t - left, self.grid[i].1));
        }
        Self::assemble(t, self.drift, self.sigma2, events, grid)
    }

    /// W(x), right-continuous at jump positions.
    pub fn value_at(&self, x: f64) -> f64 {
        let jumps: f64 = self.events.iter().take_while(|&&(pos, _)| pos <= x).map(|&(_, j)| j).sum();
        let mut gauss = 0.0;
        let mut left = 0.0;
        for &(right, inc) in &self.grid {
            if right <= x {
                gauss += inc;
                left = right;
            } else {
                if x > left {
                    gauss += inc * (x - left) / (right - left);
                }
                break;
            }
        }
        self.drift * x + gauss + jumps
    }

    /// Splits the path into maximal pieces on which W is linear. Each item is
    /// (length, Gaussian increment over the piece, jump applied at the end).
    pub(crate) fn pieces(&self) -> Vec<Piece> {
        let mut out = Vec::with_capacity(self.grid.len() + self.events.len() + 1);
        let mut ev = self.events.iter().peekable();
        let push_span = |out: &mut Vec<Piece>, left: f64, right: f64, inc: f64, ev: &mut std::iter::Peekable<std::slice::Iter<'_, (f64, f64)>>| {
            let mut cursor = left;
            while let Some(&&(pos, jump)) = ev.peek() {
                if pos > right {
                    break;
                }
                let frac = if right > left { (pos - cursor) / (right - left) } else { 0.0 };
                out.push(Piece { len: pos - cursor, gauss: inc * frac, jump });
                cursor = pos;
                ev.next();
            }
            let frac = if right > left { (right - cursor) / (right - left) } else { 0.0 };
            out.push(Piece { len: right - cursor, gauss: inc * frac, jump: 0.0 });
        };
        if self.grid.is_empty() {
            push_span(&mut out, 0.0, self.horizon, 0.0, &mut ev);
        } else {
            let mut left = 0.0;
            for &(right, inc) in &self.grid {
                push_span(&mut out, left, right, inc, &mut ev);
                left = right;
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Piece {
    pub len: f64,
    pub gauss: f64,
    pub jump: f64,
}
