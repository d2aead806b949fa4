//! Probe grids for the special functions, evaluated against statrs and
//! independent quadratures.

#![allow(dead_code)]

use levylab::specfun::{beta, bessel_k, contracts, gauss_2f1, lgamma, reg_inc_gamma_lower};
use statrs::function::{beta as sbeta, gamma as sgamma};
use std::f64::consts::PI;

/// (label, computed, oracle) triples checked under one error measure.
pub struct ProbeGrid {
    pub name: &'static str,
    pub points: Vec<(String, f64, f64)>,
    pub err: fn(f64, f64) -> f64,
    pub tol: f64,
}

impl ProbeGrid {
    /// Worst error and where it occurred.
    pub fn worst(&self) -> (f64, String) {
        let mut worst = (0.0, String::new());
        for (label, got, want) in &self.points {
            let e = (self.err)(*got, *want);
            if e > worst.0 || e.is_nan() {
                worst = (e, label.clone());
            }
        }
        worst
    }

    pub fn passes(&self) -> bool {
        self.points.len() >= 25 && self.worst().0 <= self.tol
    }

    pub fn check(&self) {
        assert!(self.points.len() >= 25, "{}: only {} probes", self.name, self.points.len());
        let (e, at) = self.worst();
        assert!(e <= self.tol, "{}: worst error {e:e} at {at} exceeds {:e}", self.name, self.tol);
    }
}

fn tol_of(name: &str) -> f64 {
    contracts().into_iter().find(|c| c.function == name).expect("contract").rel_tol
}

pub fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(1e-300)
}

/// Relative error, falling back to absolute near a zero of the target.
pub fn mixed_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(1.0)
}

pub fn abs_err(got: f64, want: f64) -> f64 {
    (got - want).abs()
}

fn simpson_weight(i: usize, n: usize) -> f64 {
    if i == 0 || i == n {
        1.0
    } else if i % 2 == 1 {
        4.0
    } else {
        2.0
    }
}

/// Simpson rule for K_ν(x) from the cosh integral, run in log space.
pub fn bessel_k_simpson(nu: f64, x: f64) -> f64 {
    let log_f = |u: f64| -x * (u.cosh() - 1.0) + nu * u + (1.0 + (-2.0 * nu * u).exp()).ln() - std::f64::consts::LN_2;
    let mut upper: f64 = 0.5;
    let mut top = log_f(0.0);
    while log_f(upper) > top - 80.0 {
        top = top.max(log_f(upper));
        upper += 0.5;
    }
    let n = 40_000;
    let h = upper / n as f64;
    let peak = (0..=n).map(|i| log_f(i as f64 * h)).fold(f64::MIN, f64::max);
    let sum: f64 = (0..=n).map(|i| simpson_weight(i, n) * (log_f(i as f64 * h) - peak).exp()).sum();
    sum * h / 3.0 * (peak - x).exp()
}

/// Euler integral for ₂F₁ with c > b > 0; the probes keep b and c − b
/// integers so the integrand is smooth on [0, 1].
pub fn hyp2f1_euler(a: f64, b: f64, c: f64, z: f64) -> f64 {
    let n = 20_000;
    let h = 1.0 / n as f64;
    let f = |t: f64| t.powf(b - 1.0) * (1.0 - t).powf(c - b - 1.0) * (1.0 - z * t).powf(-a);
    let sum: f64 = (0..=n).map(|i| simpson_weight(i, n) * f(i as f64 * h)).sum();
    let log_norm = sgamma::ln_gamma(c) - sgamma::ln_gamma(b) - sgamma::ln_gamma(c - b);
    sum * h / 3.0 * log_norm.exp()
}

pub fn lgamma_grid() -> ProbeGrid {
    let xs = [
        1e-6, 1e-3, 0.01, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0, 1.1, 1.5, 1.9, 2.0, 2.5, 3.3, 5.0, 7.7, 10.0, 15.5, 20.0,
        33.3, 50.0, 75.0, 100.0, 133.7, 170.0, 199.0, 200.0,
    ];
    let points = xs
        .iter()
        .map(|&x| (format!("x={x}"), lgamma(x).unwrap(), sgamma::ln_gamma(x)))
        .collect();
    ProbeGrid { name: "lgamma", points, err: mixed_err, tol: tol_of("lgamma") }
}

pub fn beta_grid() -> ProbeGrid {
    let vals = [0.05, 0.5, 1.0, 2.5, 7.0, 20.0, 50.0];
    let mut points = Vec::new();
    for &a in &vals {
        for &b in &vals {
            points.push((format!("a={a},b={b}"), beta(a, b).unwrap(), sbeta::beta(a, b)));
        }
    }
    ProbeGrid { name: "beta", points, err: rel_err, tol: tol_of("beta") }
}

/// The regularised value is a probability, so absolute error is the scale.
pub fn incomplete_gamma_grid() -> ProbeGrid {
    let ss = [0.05, 0.5, 1.0, 2.5, 10.0, 30.0, 50.0];
    let xs = [0.0, 0.01, 0.5, 2.0, 8.0, 30.0, 60.0, 200.0];
    let mut points = Vec::new();
    for &s in &ss {
        for &x in &xs {
            let want = if x == 0.0 { 0.0 } else { sgamma::gamma_lr(s, x) };
            points.push((format!("s={s},x={x}"), reg_inc_gamma_lower(s, x).unwrap(), want));
        }
    }
    ProbeGrid { name: "reg_inc_gamma_lower", points, err: abs_err, tol: tol_of("reg_inc_gamma_lower") }
}

pub fn incomplete_gamma_tail_grid() -> ProbeGrid {
    let mut points = Vec::new();
    for &s in &[0.5, 1.0, 3.0, 10.0, 25.0] {
        for &frac in &[0.01, 0.1, 0.3, 0.6, 0.9] {
            let x = s * frac;
            points.push((format!("s={s},x={x}"), reg_inc_gamma_lower(s, x).unwrap(), sgamma::gamma_lr(s, x)));
        }
    }
    ProbeGrid { name: "reg_inc_gamma_lower left tail", points, err: rel_err, tol: 1e-9 }
}

pub fn bessel_k_grid() -> ProbeGrid {
    let nus = [0.0, 0.3, 1.0, 2.7, 5.0, 10.0];
    let xs = [0.01, 0.1, 0.7, 2.0, 8.0, 25.0, 50.0];
    let mut points = Vec::new();
    for &nu in &nus {
        for &x in &xs {
            points.push((format!("nu={nu},x={x}"), bessel_k(nu, x).unwrap(), bessel_k_simpson(nu, x)));
        }
    }
    ProbeGrid { name: "bessel_k", points, err: rel_err, tol: tol_of("bessel_k") }
}

pub fn bessel_half_order_grid() -> ProbeGrid {
    let mut points = Vec::new();
    for &x in &[0.01, 0.05, 0.2, 0.333, 0.5, 1.0, 2.0, 3.5, 6.0, 10.0, 20.0, 35.0, 50.0] {
        let base = (PI / (2.0 * x)).sqrt() * (-x).exp();
        points.push((format!("1/2,x={x}"), bessel_k(0.5, x).unwrap(), base));
        points.push((format!("3/2,x={x}"), bessel_k(1.5, x).unwrap(), base * (1.0 + 1.0 / x)));
    }
    ProbeGrid { name: "bessel_k half orders", points, err: rel_err, tol: 1e-12 }
}

/// K_{ν+1} = K_{ν−1} + (2ν/x)K_ν.
pub fn bessel_recurrence_grid() -> ProbeGrid {
    let mut points = Vec::new();
    for &nu in &[0.5, 1.0, 1.3, 2.0, 4.4, 7.0, 9.0] {
        for &x in &[0.05, 0.5, 3.0, 12.0, 40.0] {
            let lhs = bessel_k(nu + 1.0, x).unwrap();
            let rhs = bessel_k(nu - 1.0, x).unwrap() + 2.0 * nu / x * bessel_k(nu, x).unwrap();
            points.push((format!("nu={nu},x={x}"), lhs, rhs));
        }
    }
    ProbeGrid { name: "bessel_k recurrence", points, err: rel_err, tol: 1e-8 }
}

pub fn hypergeometric_closed_form_grid() -> ProbeGrid {
    let zs = [-9.5, -4.0, -1.0, -0.3, -0.01, 0.01, 0.2, 0.5, 0.8, 0.9, 0.95];
    let mut points = Vec::new();
    for &z in &zs {
        points.push((format!("log z={z}"), gauss_2f1(1.0, 1.0, 2.0, z).unwrap(), -(-z).ln_1p() / z));
        points.push((format!("power z={z}"), gauss_2f1(1.7, 0.6, 0.6, z).unwrap(), (1.0 - z).powf(-1.7)));
        let atan = if z < 0.0 {
            (-z).sqrt().atan() / (-z).sqrt()
        } else {
            z.sqrt().atanh() / z.sqrt()
        };
        points.push((format!("atan z={z}"), gauss_2f1(0.5, 1.0, 1.5, z).unwrap(), atan));
        if z > 0.0 {
            let w = z.sqrt();
            points.push((format!("asin z={z}"), gauss_2f1(0.5, 0.5, 1.5, z).unwrap(), w.asin() / w));
        }
    }
    ProbeGrid { name: "gauss_2f1 closed forms", points, err: rel_err, tol: 1e-12 }
}

pub fn hypergeometric_grid() -> ProbeGrid {
    let params = [(0.5, 2.0, 5.0), (1.3, 3.0, 5.0), (2.5, 1.0, 3.0), (0.2, 2.0, 6.0)];
    let zs = [-9.0, -3.0, -0.7, 0.0, 0.3, 0.6, 0.85, 0.95];
    let mut points = Vec::new();
    for &(a, b, c) in &params {
        for &z in &zs {
            points.push((format!("a={a},b={b},c={c},z={z}"), gauss_2f1(a, b, c, z).unwrap(), hyp2f1_euler(a, b, c, z)));
        }
    }
    ProbeGrid { name: "gauss_2f1", points, err: rel_err, tol: tol_of("gauss_2f1") }
}

pub fn all_grids() -> Vec<ProbeGrid> {
    vec![
        lgamma_grid(),
        beta_grid(),
        incomplete_gamma_grid(),
        incomplete_gamma_tail_grid(),
        bessel_k_grid(),
        bessel_half_order_grid(),
        bessel_recurrence_grid(),
        hypergeometric_closed_form_grid(),
        hypergeometric_grid(),
    ]
}

pub fn bessel_k_decreasing() -> bool {
    [0.0, 0.5, 2.0, 6.5, 10.0].iter().all(|&nu| {
        let vals: Vec<f64> = (0..60).map(|i| bessel_k(nu, 0.01 * 1.12f64.powi(i)).unwrap()).collect();
        vals.windows(2).all(|w| w[1] < w[0])
    })
}

pub fn incomplete_gamma_increasing() -> bool {
    [0.1, 1.0, 4.0, 40.0].iter().all(|&s| {
        let vals: Vec<f64> = (1..200).map(|i| reg_inc_gamma_lower(s, 0.5 * i as f64).unwrap()).collect();
        vals.windows(2).all(|w| w[1] >= w[0]) && vals.iter().all(|v| (0.0..=1.0).contains(v))
    })
}
