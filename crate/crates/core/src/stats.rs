//! Reference laws, goodness-of-fit statistics and estimator helpers shared
//! by the experiments.

use crate::error::{invalid, LabError, Result};
use crate::rng::rng_from_seed;
use crate::specfun::reg_inc_gamma_lower;
use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;

/// A Monte Carlo estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub standard_error: f64,
    pub n_samples: usize,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Result<Self> {
        let (value, standard_error) = mean_with_se(xs)?;
        Ok(Self { value, standard_error, n_samples: xs.len() })
    }

    /// |value − target| measured in standard errors.
    pub fn z_score(&self, target: f64) -> f64 {
        (self.value - target).abs() / self.standard_error
    }
}

/// Results of one experiment run. Entries can be added but never replaced.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub version: String,
    pub estimates: BTreeMap<String, Estimate>,
    pub gof: BTreeMap<String, f64>,
    pub values: BTreeMap<String, f64>,
    pub seeds: Vec<u64>,
    pub config_echo: serde_json::Value,
    pub wall_clock_seconds: f64,
}

impl ExperimentReport {
    pub fn new(experiment: &str, config_echo: serde_json::Value) -> Self {
        Self {
            experiment: experiment.to_string(),
            config_echo,
            ..Self::default()
        }
    }

    fn check_fresh(&self, name: &str) -> Result<()> {
        if self.estimates.contains_key(name) || self.gof.contains_key(name) || self.values.contains_key(name) {
            Err(invalid(format!("report entry {name:?} already recorded")))
        } else {
            Ok(())
        }
    }

    pub fn add_estimate(&mut self, name: impl Into<String>, est: Estimate) -> Result<()> {
        let name = name.into();
        self.check_fresh(&name)?;
        self.estimates.insert(name, est);
        Ok(())
    }

    pub fn add_gof(&mut self, name: impl Into<String>, statistic: f64) -> Result<()> {
        let name = name.into();
        self.check_fresh(&name)?;
        self.gof.insert(name, statistic);
        Ok(())
    }

    /// Deterministic quantities (closed forms, quadrature, recursions).
    pub fn add_value(&mut self, name: impl Into<String>, value: f64) -> Result<()> {
        let name = name.into();
        self.check_fresh(&name)?;
        self.values.insert(name, value);
        Ok(())
    }
}

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Kolmogorov–Smirnov distance D_N between the samples and `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<f64> {
    if samples.is_empty() {
        return Err(invalid("KS statistic needs at least one sample"));
    }
    let xs = sorted(samples);
    let fs: Vec<f64> = xs.iter().map(|&x| cdf(x)).collect();
    Ok(ks_from_sorted_cdf(&fs))
}

/// D_N given the reference CDF evaluated at the ascending samples.
pub fn ks_from_sorted_cdf(cdf_at_sorted: &[f64]) -> f64 {
    let n = cdf_at_sorted.len() as f64;
    cdf_at_sorted
        .iter()
        .enumerate()
        .map(|(i, &f)| ((i as f64 + 1.0) / n - f).max(f - i as f64 / n))
        .fold(0.0, f64::max)
}

/// Two-sample Kolmogorov–Smirnov distance.
pub fn ks_two_sample(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.is_empty() || ys.is_empty() {
        return Err(invalid("two-sample KS needs nonempty samples"));
    }
    let a = sorted(xs);
    let b = sorted(ys);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// One Gamma(shape, 1) variate from its own stream.
pub fn sample_gamma(shape: f64, seed: u64) -> Result<f64> {
    let mut rng = rng_from_seed(seed);
    sample_gamma_with(shape, &mut rng)
}

pub fn sample_gamma_with<R: Rng>(shape: f64, rng: &mut R) -> Result<f64> {
    let g = Gamma::new(shape, 1.0).map_err(|e| invalid(format!("gamma shape {shape}: {e}")))?;
    Ok(g.sample(rng))
}

/// CDF of the standard Cauchy law.
pub fn cauchy_cdf(x: f64) -> f64 {
    0.5 + x.atan() / PI
}

/// P(2/Γ_{2μ} ≤ x) = 1 − P(2μ, 2/x).
pub fn gamma_reciprocal_cdf(mu: f64, x: f64) -> Result<f64> {
    if !(mu > 0.0) {
        return Err(invalid(format!("mu must be positive, got {mu}")));
    }
    if x <= 0.0 {
        return Ok(0.0);
    }
    Ok(1.0 - reg_inc_gamma_lower(2.0 * mu, 2.0 / x)?)
}

/// Sample mean and its standard error.
pub fn mean_with_se(xs: &[f64]) -> Result<(f64, f64)> {
    if xs.is_empty() {
        return Err(invalid("mean of an empty sample"));
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() == 1 {
        return Ok((mean, f64::INFINITY));
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok((mean, (var / n).sqrt()))
}

/// Median of the samples.
pub fn median(xs: &[f64]) -> Result<f64> {
    if xs.is_empty() {
        return Err(invalid("median of an empty sample"));
    }
    let v = sorted(xs);
    let n = v.len();
    Ok(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

/// Hill estimate of the tail index of |samples| from the top `k_frac`
/// fraction of order statistics.
pub fn hill_tail_index(samples: &[f64], k_frac: f64) -> Result<f64> {
    if !(k_frac > 0.0 && k_frac < 0.5) {
        return Err(invalid(format!("k_frac must lie in (0, 0.5), got {k_frac}")));
    }
    let mut v: Vec<f64> = samples.iter().map(|x| x.abs()).collect();
    v.sort_by(|a, b| b.total_cmp(a));
    let k = (k_frac * v.len() as f64).floor() as usize;
    if k < 1 || k >= v.len() {
        return Err(invalid("too few samples for the Hill estimator"));
    }
    let threshold = v[k];
    if !(threshold > 0.0) {
        return Err(invalid("Hill threshold order statistic is zero"));
    }
    let h = v[..k].iter().map(|x| (x / threshold).ln()).sum::<f64>() / k as f64;
    Ok(1.0 / h)
}

/// Equal-width histogram on [lo, hi) with overflow counts on both sides.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
    pub below: u64,
    pub above: u64,
}

impl Histogram {
    pub fn new(samples: &[f64], lo: f64, hi: f64, bins: usize) -> Result<Self> {
        if !(hi > lo) || bins == 0 {
            return Err(invalid("histogram needs hi > lo and at least one bin"));
        }
        let mut h = Self { lo, hi, counts: vec![0; bins], below: 0, above: 0 };
        let width = (hi - lo) / bins as f64;
        for &x in samples {
            if x < lo {
                h.below += 1;
            } else if x >= hi {
                h.above += 1;
            } else {
                let i = (((x - lo) / width) as usize).min(bins - 1);
                h.counts[i] += 1;
            }
        }
        Ok(h)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.below + self.above
    }

    pub fn edges(&self) -> Vec<f64> {
        let n = self.counts.len();
        (0..=n).map(|i| self.lo + (self.hi - self.lo) * i as f64 / n as f64).collect()
    }
}

/// Σ_bins |p̂_bin − ∫_bin f|, with the two overflow regions counted as bins.
pub fn l1_density_distance<M>(hist: &Histogram, mass: M) -> Result<f64>
where
    M: Fn(f64, f64) -> Result<f64>,
{
    let total = hist.total();
    if total == 0 {
        return Err(invalid("empty histogram"));
    }
    let n = total as f64;
    let edges = hist.edges();
    let mut l1 = 0.0;
    for (i, &c) in hist.counts.iter().enumerate() {
        l1 += (c as f64 / n - mass(edges[i], edges[i + 1])?).abs();
    }
    l1 += (hist.below as f64 / n - mass(f64::NEG_INFINITY, hist.lo)?).abs();
    l1 += (hist.above as f64 / n - mass(hist.hi, f64::INFINITY)?).abs();
    Ok(l1)
}

/// Fraction of positive samples with its binomial standard error.
pub fn positive_fraction(xs: &[f64]) -> Result<Estimate> {
    if xs.is_empty() {
        return Err(LabError::InvalidParameter("empty sample".into()));
    }
    let signs: Vec<f64> = xs.iter().map(|&x| if x > 0.0 { 1.0 } else { 0.0 }).collect();
    Estimate::from_samples(&signs)
}
