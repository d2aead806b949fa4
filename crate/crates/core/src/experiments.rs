//! Experiment definitions shared by the command-line runner and the
//! acceptance tests. Each run returns a report and named tables; writing
//! them to disk is left to the caller.

use crate::densities::StationaryDensity;
use crate::error::{invalid, LabError, Result};
use crate::expfunc::{default_burn_in, exp_functional, positive_fixed_point, riccati_along_path, sample_dufresne, sample_stationary_riccati};
use crate::levy::{JumpFamily, LevySpec};
use crate::moments::{bertoin_yor_moment, continued_fraction_omega, omega_from_mean, stationary_moment_ratios, OmegaMethod};
use crate::rng::{replicate, rng_from_seed, stream_seed};
use crate::stats::{
    cauchy_cdf, gamma_reciprocal_cdf, hill_tail_index, ks_from_sorted_cdf, ks_statistic, ks_two_sample, l1_density_distance, median,
    positive_fraction, Estimate, ExperimentReport, Histogram,
};
use crate::winding::{
    expected_sector_area, partition_deficit, sample_bridge, sample_winding_thresholds, sector_statistics, signed_area, subsample, winding_field_with,
    BoundaryPolicy, SectorSummary, SquareBox,
};
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

const DEFAULT_SEED: u64 = 1;

fn default_seed() -> u64 {
    DEFAULT_SEED
}

/// A CSV-shaped result: header plus rows of numbers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    fn new(name: impl Into<String>, header: &[&str]) -> Self {
        Self {
            name: name.into(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentOutput {
    pub report: ExperimentReport,
    pub tables: Vec<Table>,
}

impl ExperimentOutput {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Spitzer,
    Sectors,
    Dufresne,
    RiccatiDensity,
    LyapunovCurve,
    MomentsCheck,
    Deficit,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        ExperimentKind::Spitzer,
        ExperimentKind::Sectors,
        ExperimentKind::Dufresne,
        ExperimentKind::RiccatiDensity,
        ExperimentKind::LyapunovCurve,
        ExperimentKind::MomentsCheck,
        ExperimentKind::Deficit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Spitzer => "spitzer",
            ExperimentKind::Sectors => "sectors",
            ExperimentKind::Dufresne => "dufresne",
            ExperimentKind::RiccatiDensity => "riccati-density",
            ExperimentKind::LyapunovCurve => "lyapunov-curve",
            ExperimentKind::MomentsCheck => "moments-check",
            ExperimentKind::Deficit => "deficit",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = LabError;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| invalid(format!("unknown experiment {s:?}")))
    }
}

/// Winding angles of planar Brownian motion against the Cauchy limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpitzerConfig {
    #[serde(default = "SpitzerConfig::default_times")]
    pub times: Vec<f64>,
    #[serde(default = "one")]
    pub r0: f64,
    #[serde(default = "SpitzerConfig::default_eps")]
    pub eps: f64,
    #[serde(default = "one")]
    pub r_star: f64,
    /// Extra split radii whose θ⁺ moments are reported alongside.
    #[serde(default = "SpitzerConfig::default_sensitivity")]
    pub r_star_sensitivity: Vec<f64>,
    #[serde(default = "SpitzerConfig::default_paths")]
    pub paths: usize,
    #[serde(default = "SpitzerConfig::default_hill")]
    pub hill_k_frac: f64,
    #[serde(default = "default_seed")]
    pub base_seed: u64,
    #[serde(default)]
    pub output_path: Option<String>,
}

fn one() -> f64 {
    1.0
}

impl SpitzerConfig {
    fn default_times() -> Vec<f64> {
        vec![1e2, 1e4, 1e8]
    }
    fn default_eps() -> f64 {
        1e-3
    }
    fn default_sensitivity() -> Vec<f64> {
        vec![0.5, 2.0]
    }
    fn default_paths() -> usize {
        10_000
    }
    fn default_hill() -> f64 {
        0.02
    }
}

impl Default for SpitzerConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults")
    }
}

/// Winding-sector areas of the planar Brownian bridge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SectorsConfig {
    #[serde(default = "one")]
    pub t: f64,
    #[serde(default = "SectorsConfig::default_steps")]
    pub n_steps: usize,
    #[serde(default = "SectorsConfig::default_resolution")]
    pub resolution: usize,
    #[serde(default = "SectorsConfig::default_bridges")]
    pub bridges: usize,
    #[serde(default = "SectorsConfig::default_n_max")]
    pub n_max: i32,
    #[serde(default = "SectorsConfig::default_margin")]
    pub margin_cells: usize,
    #[serde(default)]
    pub boundary: BoundaryPolicy,
    /// Also evaluate each bridge with doubled steps and resolution; the
    /// coarse polygon is every other vertex of the fine one.
    #[serde(default = "yes")]
    pub refine: bool,
    /// Number of index grids written as CSV matrices.
    #[serde(default)]
    pub export_fields: usize,
    #[serde(default = "default_seed")]
    pub base_seed: u64,
    #[serde(default)]
    pub output_path: Option<String>,
}

fn yes() -> bool {
    true
}

impl SectorsConfig {
    fn default_steps() -> usize {
        1 << 14
    }
    fn default_resolution() -> usize {
        512
    }
    fn default_bridges() -> usize {
        200
    }
    fn default_n_max() -> i32 {
        3
    }
    fn default_margin() -> usize {
        2
    }
}

impl Default for SectorsConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults")
    }
}

/// ∫₀^∞ e^{−μt−B_t} dt against 2/Γ_{2μ}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DufresneConfig {
    #[serde(default = "one")]
    pub mu: f64,
    /// Defaults to 40/μ.
    #[serde(default)]
    pub horizon: Option<f64>,
    #[serde(default = "default_dx")]
    pub dx: f64,
    #[serde(default = "default_replicas")]
    pub replicas: usize,
    #[serde(default = "default_seed")]
    pub base_seed: u64,
    #[serde(default)]
    pub output_path: Option<String>,
}

fn default_dx() -> f64 {
    1e-3
}

fn default_replicas() -> usize {
    100_000
}

fn default_tol() -> f64 {
    1e-10
}

impl Default for DufresneConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults")
    }
}

/// Stationary Riccati samples against the closed-form density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RiccatiDensityConfig {
    pub spec: LevySpec,
    #[serde(default = "one")]
    pub k: f64,
    #[serde(default = "default_replicas")]
    pub replicas: usize,
    /// Defaults to the spec's relaxation-based burn-in.
    #[serde(default)]
    pub burn_in: Option<f64>,
    #[serde(default = "default_dx")]
    pub dx: f64,
    #[serde(default = "RiccatiDensityConfig::default_bins")]
    pub bins: usize,
    #[serde(default = "default_seed")]
    pub base_seed: u64,
    #[serde(default)]
    pub output_path: Option<String>,
}

impl RiccatiDensityConfig {
    fn default_bins() -> usize {
        50
    }

    pub fn new(spec: LevySpec, k: f64) -> Self {
        let mut v = serde_json::json!({ "k": k });
        v["spec"] = serde_json::to_value(&spec).expect("spec serializes");
        serde_json::from_value(v).expect("defaults")
    }
}

/// Ω(E) on an energy grid by continued fraction, density quadrature and
/// Monte Carlo.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LyapunovCurveConfig {
    pub spec: LevySpec,
    #[serde(default = "LyapunovCurveConfig::default_k")]
    pub k_values: Vec<f64>,
    #[serde(default = "default_replicas")]
    pub replicas: usize,
    #[serde(default)]
    pub burn_in: Option<f64>,
    #[serde(default = "default_dx")]
    pub dx: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_seed")]
    pub base_seed: u64,
    #[serde(default)]
    pub output_path: Option<String>,
}

impl LyapunovCurveConfig {
    fn default_k() -> Vec<f64> {
        (1..=8).map(|i| 0.25 * i as f64).collect()
    }

    pub fn new(spec: LevySpec, k_values: Vec<f64>) -> Self {
        let mut v = serde_json::json!({ "k_values": k_values });
        v["spec"] = serde_json::to_value(&spec).expect("spec serializes");
        serde_json::from_value(v).expect("defaults")
    }
}

/// Moment recursions against Monte Carlo and quadrature, and the
/// zero-energy identity Z(x) = I_x in law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentsCheckConfig {
    pub spec: LevySpec,
    #[serde(default = "one")]
    pub lambda: f64,
    #[serde(default = "MomentsCheckConfig::default_s_max")]
    pub s_max: u32,
    #[serde(default = "default_replicas")]
    pub replicas: usize,
    /// Energies −k² at which recursion moments are compared with quadrature.
    #[serde(default = "MomentsCheckConfig::default_k")]
    pub k_values: Vec<f64>,
    #[serde(default = "MomentsCheckConfig::default_horizon")]
    pub zero_energy_horizon: f64,
    #[serde(default = "MomentsCheckConfig::default_zero_replicas")]
    pub zero_energy_replicas: usize,
    #[serde(default = "default_dx")]
    pub dx: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_seed")]
    pub base_seed: u64,
    #[serde(default)]
    pub output_path: Option<String>,
}

impl MomentsCheckConfig {
    fn default_s_max() -> u32 {
        4
    }
    fn default_k() -> Vec<f64> {
        vec![0.5, 1.0, 2.0]
    }
    fn default_horizon() -> f64 {
        3.0
    }
    fn default_zero_replicas() -> usize {
        10_000
    }

    pub fn new(spec: LevySpec) -> Self {
        let v = serde_json::json!({ "spec": serde_json::to_value(&spec).expect("spec serializes") });
        serde_json::from_value(v).expect("defaults")
    }
}

/// Partial sums of the flux partition-function deficit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeficitConfig {
    #[serde(default = "DeficitConfig::default_alphas")]
    pub alphas: Vec<f64>,
    #[serde(default = "DeficitConfig::default_n_max")]
    pub n_max: u64,
    #[serde(default = "default_seed")]
    pub base_seed: u64,
    #[serde(default)]
    pub output_path: Option<String>,
}

impl DeficitConfig {
    fn default_alphas() -> Vec<f64> {
        vec![0.25, 0.5, 0.75]
    }
    fn default_n_max() -> u64 {
        1_000_000
    }
}

impl Default for DeficitConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults")
    }
}

/// A complete run definition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "kebab-case")]
pub enum ExperimentConfig {
    Spitzer(SpitzerConfig),
    Sectors(SectorsConfig),
    Dufresne(DufresneConfig),
    RiccatiDensity(RiccatiDensityConfig),
    LyapunovCurve(LyapunovCurveConfig),
    MomentsCheck(MomentsCheckConfig),
    Deficit(DeficitConfig),
}

impl ExperimentConfig {
    /// Parses a JSON object for the given experiment. An `experiment` key,
    /// when present, must name the same experiment.
    pub fn from_json(kind: ExperimentKind, mut value: serde_json::Value) -> Result<Self> {
        let obj = value
            .as_object_mut()
            .ok_or_else(|| invalid("configuration must be a JSON object"))?;
        match obj.get("experiment") {
            None => {
                obj.insert("experiment".into(), serde_json::Value::String(kind.name().into()));
            }
            Some(serde_json::Value::String(s)) if s == kind.name() => {}
            Some(other) => {
                return Err(invalid(format!("configuration names experiment {other}, but {kind} was requested")));
            }
        }
        serde_json::from_value(value).map_err(|e| invalid(format!("invalid {kind} configuration: {e}")))
    }

    pub fn kind(&self) -> ExperimentKind {
        match self {
            ExperimentConfig::Spitzer(_) => ExperimentKind::Spitzer,
            ExperimentConfig::Sectors(_) => ExperimentKind::Sectors,
            ExperimentConfig::Dufresne(_) => ExperimentKind::Dufresne,
            ExperimentConfig::RiccatiDensity(_) => ExperimentKind::RiccatiDensity,
            ExperimentConfig::LyapunovCurve(_) => ExperimentKind::LyapunovCurve,
            ExperimentConfig::MomentsCheck(_) => ExperimentKind::MomentsCheck,
            ExperimentConfig::Deficit(_) => ExperimentKind::Deficit,
        }
    }

    pub fn base_seed(&self) -> u64 {
        match self {
            ExperimentConfig::Spitzer(c) => c.base_seed,
            ExperimentConfig::Sectors(c) => c.base_seed,
            ExperimentConfig::Dufresne(c) => c.base_seed,
            ExperimentConfig::RiccatiDensity(c) => c.base_seed,
            ExperimentConfig::LyapunovCurve(c) => c.base_seed,
            ExperimentConfig::MomentsCheck(c) => c.base_seed,
            ExperimentConfig::Deficit(c) => c.base_seed,
        }
    }

    pub fn set_base_seed(&mut self, seed: u64) {
        match self {
            ExperimentConfig::Spitzer(c) => c.base_seed = seed,
            ExperimentConfig::Sectors(c) => c.base_seed = seed,
            ExperimentConfig::Dufresne(c) => c.base_seed = seed,
            ExperimentConfig::RiccatiDensity(c) => c.base_seed = seed,
            ExperimentConfig::LyapunovCurve(c) => c.base_seed = seed,
            ExperimentConfig::MomentsCheck(c) => c.base_seed = seed,
            ExperimentConfig::Deficit(c) => c.base_seed = seed,
        }
    }

    pub fn output_path(&self) -> Option<&str> {
        match self {
            ExperimentConfig::Spitzer(c) => c.output_path.as_deref(),
            ExperimentConfig::Sectors(c) => c.output_path.as_deref(),
            ExperimentConfig::Dufresne(c) => c.output_path.as_deref(),
            ExperimentConfig::RiccatiDensity(c) => c.output_path.as_deref(),
            ExperimentConfig::LyapunovCurve(c) => c.output_path.as_deref(),
            ExperimentConfig::MomentsCheck(c) => c.output_path.as_deref(),
            ExperimentConfig::Deficit(c) => c.output_path.as_deref(),
        }
    }
}

/// Runs an experiment. The report echoes the configuration and records the
/// derived seeds and the wall-clock time.
pub fn run(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    let start = Instant::now();
    let echo = serde_json::to_value(config).map_err(|e| invalid(e.to_string()))?;
    let mut report = ExperimentReport::new(config.kind().name(), echo);
    report.version = env!("CARGO_PKG_VERSION").to_string();
    report.seeds.push(config.base_seed());
    let tables = match config {
        ExperimentConfig::Spitzer(c) => run_spitzer(c, &mut report)?,
        ExperimentConfig::Sectors(c) => run_sectors(c, &mut report)?,
        ExperimentConfig::Dufresne(c) => run_dufresne(c, &mut report)?,
        ExperimentConfig::RiccatiDensity(c) => run_riccati_density(c, &mut report)?,
        ExperimentConfig::LyapunovCurve(c) => run_lyapunov_curve(c, &mut report)?,
        ExperimentConfig::MomentsCheck(c) => run_moments_check(c, &mut report)?,
        ExperimentConfig::Deficit(c) => run_deficit(c, &mut report)?,
    };
    report.wall_clock_seconds = start.elapsed().as_secs_f64();
    Ok(ExperimentOutput { report, tables })
}

fn need_replicas(n: usize, at_least: usize, what: &str) -> Result<()> {
    if n < at_least {
        Err(invalid(format!("{what} must be at least {at_least}, got {n}")))
    } else {
        Ok(())
    }
}

/// Sub-stream base for one part of an experiment, recorded in the report.
fn sub_seed(report: &mut ExperimentReport, base: u64, tag: u64) -> u64 {
    let s = stream_seed(base, tag);
    report.seeds.push(s);
    s
}

fn collect<T>(items: Vec<Result<T>>) -> Result<Vec<T>> {
    items.into_iter().collect()
}

fn fourth_moment(xs: &[f64]) -> f64 {
    xs.iter().map(|x| x.powi(4)).sum::<f64>() / xs.len() as f64
}

fn run_spitzer(c: &SpitzerConfig, report: &mut ExperimentReport) -> Result<Vec<Table>> {
    need_replicas(c.paths, 2, "paths")?;
    let mut r_stars = vec![c.r_star];
    r_stars.extend_from_slice(&c.r_star_sensitivity);
    let seed = sub_seed(report, c.base_seed, 0);
    let traces = collect(replicate(seed, c.paths, |_, s| {
        sample_winding_thresholds(&c.times, c.r0, c.eps, &r_stars, s)
    }))?;
    let mut summary = Table::new("summary", &["t", "ks_cauchy", "median_abs", "hill_index", "m4_full", "m4_big", "positive_fraction"]);
    let mut sensitivity = Table::new("r_star_sensitivity", &["t", "r_star", "m4_big", "median_abs_big", "median_abs_small"]);
    let mut angles = Table::new("angles", &["path", "t", "total_angle", "big_angle", "small_angle"]);
    for (ti, &t) in c.times.iter().enumerate() {
        let key = format!("t={t:e}");
        let full: Vec<f64> = traces.iter().map(|p| p[ti][0].spitzer_statistic()).collect();
        let ks = ks_statistic(&full, cauchy_cdf)?;
        let abs: Vec<f64> = full.iter().map(|x| x.abs()).collect();
        let med = median(&abs)?;
        let hill = hill_tail_index(&full, c.hill_k_frac)?;
        let m4_full = fourth_moment(&full);
        let big: Vec<f64> = traces.iter().map(|p| p[ti][0].big_statistic()).collect();
        let m4_big = fourth_moment(&big);
        let pos = positive_fraction(&full)?;
        let negated: Vec<f64> = full.iter().map(|x| -x).collect();
        report.add_gof(format!("ks_cauchy[{key}]"), ks)?;
        report.add_gof(format!("ks_symmetry[{key}]"), ks_two_sample(&full, &negated)?)?;
        report.add_value(format!("median_abs[{key}]"), med)?;
        report.add_value(format!("hill_index[{key}]"), hill)?;
        report.add_value(format!("m4_full[{key}]"), m4_full)?;
        report.add_value(format!("m4_big[{key}]"), m4_big)?;
        report.add_estimate(format!("positive_fraction[{key}]"), pos)?;
        let steps: Vec<f64> = traces.iter().map(|p| p[ti][0].steps as f64).collect();
        report.add_estimate(format!("steps[{key}]"), Estimate::from_samples(&steps)?)?;
        summary.push(vec![t, ks, med, hill, m4_full, m4_big, pos.value]);
        for (ri, &r) in r_stars.iter().enumerate() {
            let big_r: Vec<f64> = traces.iter().map(|p| p[ti][ri].big_statistic()).collect();
            let small_r: Vec<f64> = traces
                .iter()
                .map(|p| (2.0 * p[ti][ri].small_angle / t.ln()).abs())
                .collect();
            let m4 = fourth_moment(&big_r);
            let abs_big: Vec<f64> = big_r.iter().map(|x| x.abs()).collect();
            if ri > 0 {
                report.add_value(format!("m4_big[{key},r_star={r}]"), m4)?;
            }
            sensitivity.push(vec![t, r, m4, median(&abs_big)?, median(&small_r)?]);
        }
        for (pi, p) in traces.iter().enumerate() {
            let tr = p[ti][0];
            angles.push(vec![pi as f64, t, tr.total_angle, tr.big_angle, tr.small_angle]);
        }
    }
    Ok(vec![summary, sensitivity, angles])
}

fn run_sectors(c: &SectorsConfig, report: &mut ExperimentReport) -> Result<Vec<Table>> {
    need_replicas(c.bridges, 2, "bridges")?;
    if c.n_max < 1 {
        return Err(invalid("n_max must be at least 1"));
    }
    if c.resolution < 2 * c.margin_cells + 1 {
        return Err(invalid("resolution must exceed twice the margin"));
    }
    let seed = sub_seed(report, c.base_seed, 0);
    let levels: Vec<(usize, usize)> = if c.refine {
        vec![(c.n_steps, c.resolution), (2 * c.n_steps, 2 * c.resolution)]
    } else {
        vec![(c.n_steps, c.resolution)]
    };
    let finest = levels.last().expect("one level").0;
    type Level = (SectorSummary, f64, Option<Vec<i32>>);
    let per_bridge = collect(replicate(seed, c.bridges, |i, s| -> Result<Vec<Level>> {
        let fine = sample_bridge(c.t, finest, s)?;
        levels
            .iter()
            .map(|&(n, res)| {
                let poly = if n == finest { fine.clone() } else { subsample(&fine, finest / n) };
                let bbox = SquareBox::around(&poly, res, c.margin_cells);
                let field = winding_field_with(&poly, bbox, res, c.boundary)?;
                let grid = (i < c.export_fields).then(|| field.grid.clone());
                Ok(((&field).into(), signed_area(&poly), grid))
            })
            .collect()
    }))?;

    let targets = [
        ("A_1", expected_sector_area(1, c.t)),
        ("arithmetic_area", PI * c.t / 5.0),
        ("A_0_inside", PI * c.t / 30.0),
    ];
    for (name, v) in targets {
        report.add_value(format!("target_{name}"), v)?;
    }
    let mut header: Vec<String> = vec!["bridge".into(), "n_steps".into(), "resolution".into()];
    for n in (-c.n_max..=c.n_max).filter(|n| *n != 0) {
        header.push(format!("A_{n}"));
    }
    for h in ["A_0_inside", "arithmetic_area", "algebraic_area", "shoelace_area", "boundary_area"] {
        header.push(h.into());
    }
    let mut rows = Table { name: "bridges".into(), header, rows: Vec::new() };
    let mut trend = Table::new("trend", &["n_steps", "resolution", "A_1", "A_1_se", "arithmetic_area", "arithmetic_se", "A_0_inside", "A_0_se", "algebraic_area", "algebraic_se"]);
    for (li, &(n, res)) in levels.iter().enumerate() {
        let prefix = if li == 0 { String::new() } else { format!("level{li}_") };
        let summaries: Vec<SectorSummary> = per_bridge.iter().map(|b| b[li].0.clone()).collect();
        let stats = sector_statistics(&summaries, c.n_max)?;
        for (name, est) in &stats.estimates {
            report.add_estimate(format!("{prefix}{name}"), *est)?;
        }
        for (name, target) in targets {
            let est = stats.estimates[name];
            report.add_value(format!("{prefix}rel_bias_{name}"), (est.value - target) / target)?;
        }
        let diffs: Vec<f64> = per_bridge.iter().map(|b| b[li].0.algebraic_area - b[li].1).collect();
        report.add_estimate(format!("{prefix}algebraic_minus_shoelace"), Estimate::from_samples(&diffs)?)?;
        let e = |k: &str| stats.estimates[k];
        trend.push(vec![
            n as f64,
            res as f64,
            e("A_1").value,
            e("A_1").standard_error,
            e("arithmetic_area").value,
            e("arithmetic_area").standard_error,
            e("A_0_inside").value,
            e("A_0_inside").standard_error,
            e("algebraic_area").value,
            e("algebraic_area").standard_error,
        ]);
        for (bi, b) in per_bridge.iter().enumerate() {
            let s = &b[li].0;
            let mut row = vec![bi as f64, n as f64, res as f64];
            for k in (-c.n_max..=c.n_max).filter(|k| *k != 0) {
                row.push(s.sector_areas.get(&k).copied().unwrap_or(0.0));
            }
            row.extend_from_slice(&[s.zero_sector_inside, s.arithmetic_area, s.algebraic_area, b[li].1, s.boundary_area]);
            rows.push(row);
        }
    }
    let mut tables = vec![rows, trend];
    for (bi, b) in per_bridge.iter().enumerate().take(c.export_fields) {
        let grid = b[0].2.as_ref().expect("grid kept for exported bridges");
        let res = levels[0].1;
        let header: Vec<String> = (0..res).map(|i| format!("c{i}")).collect();
        let rows = grid.chunks(res).map(|r| r.iter().map(|&v| v as f64).collect()).collect();
        tables.push(Table { name: format!("field_{bi}"), header, rows });
    }
    Ok(tables)
}

fn run_dufresne(c: &DufresneConfig, report: &mut ExperimentReport) -> Result<Vec<Table>> {
    need_replicas(c.replicas, 2, "replicas")?;
    if !(c.mu > 0.0) {
        return Err(invalid(format!("mu must be positive, got {}", c.mu)));
    }
    let horizon = c.horizon.unwrap_or(40.0 / c.mu);
    report.add_value("horizon", horizon)?;
    let seed = sub_seed(report, c.base_seed, 0);
    let draws = collect(replicate(seed, c.replicas, |_, s| sample_dufresne(c.mu, horizon, c.dx, s)))?;
    report.add_estimate("mean", Estimate::from_samples(&draws)?)?;
    match stationary_moment_ratios(&LevySpec::brownian(c.mu, 1.0)?, 0.0, 1, default_tol()) {
        Ok(table) => report.add_value("mean_recursion", table.values[1])?,
        Err(LabError::DivergentMoment(_)) => {}
        Err(e) => return Err(e),
    }
    report.add_gof("ks_reciprocal_gamma", ks_statistic(&draws, |x| gamma_reciprocal_cdf(c.mu, x).unwrap_or(0.0))?)?;
    let mut samples = Table::new("samples", &["replica", "value"]);
    for (i, v) in draws.iter().enumerate() {
        samples.push(vec![i as f64, *v]);
    }
    Ok(vec![samples])
}

/// The closed-form stationary density matching a spec, when one is known.
pub fn stationary_density_for(spec: &LevySpec, k: f64) -> Result<StationaryDensity> {
    match spec.jumps() {
        JumpFamily::None if spec.sigma2() > 0.0 => StationaryDensity::brownian(spec.a(), spec.sigma2(), k),
        JumpFamily::ExponentialPositive { p, q } if spec.sigma2() == 0.0 => StationaryDensity::exponential_jumps(spec.drift_coefficient(), p, q, k),
        _ => Err(invalid(
            "closed-form stationary densities exist for Brownian specs without jumps and for exponential jumps without a Gaussian part",
        )),
    }
}

fn stationary_draws(spec: &LevySpec, k: f64, burn_in: Option<f64>, dx: f64, replicas: usize, seed: u64) -> Result<(Vec<f64>, f64)> {
    let burn_in = match burn_in {
        Some(b) => b,
        None => default_burn_in(spec, k)?,
    };
    let draws = collect(replicate(seed, replicas, |_, s| sample_stationary_riccati(spec, k, burn_in, dx, s).map(|r| r.value)))?;
    Ok((draws, burn_in))
}

fn run_riccati_density(c: &RiccatiDensityConfig, report: &mut ExperimentReport) -> Result<Vec<Table>> {
    need_replicas(c.replicas, 2, "replicas")?;
    if c.bins == 0 {
        return Err(invalid("bins must be positive"));
    }
    let density = stationary_density_for(&c.spec, c.k)?;
    let seed = sub_seed(report, c.base_seed, 0);
    let (draws, burn_in) = stationary_draws(&c.spec, c.k, c.burn_in, c.dx, c.replicas, seed)?;
    report.add_value("burn_in", burn_in)?;
    let (lo, hi) = density.support;
    let inside = draws.iter().filter(|&&z| z > lo && z < hi).count();
    report.add_value("fraction_in_support", inside as f64 / draws.len() as f64)?;
    if hi.is_finite() {
        report.add_value("z_plus", hi)?;
    }
    let top = if hi.is_finite() { hi } else { density.quantile(1.0 - 1e-4)? };
    let hist = Histogram::new(&draws, lo, top, c.bins)?;
    report.add_gof("l1", l1_density_distance(&hist, |a, b| density.mass(a, b))?)?;
    let mut sorted = draws.clone();
    sorted.sort_by(f64::total_cmp);
    report.add_gof("ks", ks_from_sorted_cdf(&density.cdf_sorted(&sorted)?))?;
    report.add_estimate("mean", Estimate::from_samples(&draws)?)?;
    report.add_value("mean_quadrature", density.mean()?)?;
    let closed = density.closed_form_log_norm()?;
    report.add_value("log_norm_quadrature", density.log_norm)?;
    report.add_value("log_norm_closed_form", closed)?;
    report.add_value("normalisation_rel_diff", ((density.log_norm - closed).exp() - 1.0).abs())?;

    let mut table = Table::new("histogram", &["lo", "hi", "count", "empirical_density", "exact_mass"]);
    let edges = hist.edges();
    let n = draws.len() as f64;
    for (i, &count) in hist.counts.iter().enumerate() {
        let (a, b) = (edges[i], edges[i + 1]);
        table.push(vec![a, b, count as f64, count as f64 / (n * (b - a)), density.mass(a, b)?]);
    }
    Ok(vec![table])
}

/// E(Z_∞) from the closed-form density, or the fixed point for a pure drift.
fn quadrature_mean(spec: &LevySpec, k: f64) -> Result<Option<f64>> {
    if spec.jumps() == JumpFamily::None && spec.sigma2() == 0.0 {
        return Ok(Some(positive_fixed_point(k, spec.drift_coefficient())));
    }
    match stationary_density_for(spec, k) {
        Ok(d) => d.mean().map(Some),
        Err(LabError::InvalidParameter(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

fn run_lyapunov_curve(c: &LyapunovCurveConfig, report: &mut ExperimentReport) -> Result<Vec<Table>> {
    if !c.spec.is_subordinator() {
        return Err(LabError::NotSubordinator(
            "the continued-fraction Lyapunov exponent is only available for subordinators".into(),
        ));
    }
    if c.k_values.iter().any(|k| !(*k > 0.0 && k.is_finite())) {
        return Err(invalid("k values must be positive and finite"));
    }
    let mut curve = Table::new("curve", &["E", "omega_cf", "omega_quadrature", "omega_mc", "mc_se"]);
    let mut loc = Table::new("localisation", &["E", "gamma", "idos", "localisation_length"]);
    for (i, &k) in c.k_values.iter().enumerate() {
        let key = format!("k={k}");
        let cf = continued_fraction_omega(&c.spec, k, c.tol)?;
        report.add_value(format!("omega_cf[{key}]"), cf.omega)?;
        let quad = match quadrature_mean(&c.spec, k)? {
            Some(m) => {
                let q = omega_from_mean(&c.spec, k, m, OmegaMethod::Quadrature)?.omega;
                report.add_value(format!("omega_quadrature[{key}]"), q)?;
                q
            }
            None => f64::NAN,
        };
        let (mc, se) = if c.replicas >= 2 {
            let seed = sub_seed(report, c.base_seed, i as u64);
            let (draws, _) = stationary_draws(&c.spec, k, c.burn_in, c.dx, c.replicas, seed)?;
            let z = Estimate::from_samples(&draws)?;
            let om = omega_from_mean(&c.spec, k, z.value, OmegaMethod::MonteCarlo)?.omega;
            let est = Estimate {
                value: om,
                standard_error: k * k * z.standard_error,
                n_samples: z.n_samples,
            };
            report.add_estimate(format!("omega_mc[{key}]"), est)?;
            (est.value, est.standard_error)
        } else {
            (f64::NAN, f64::NAN)
        };
        curve.push(vec![cf.energy, cf.omega, quad, mc, se]);
        loc.push(vec![cf.energy, cf.gamma, cf.idos, 1.0 / cf.gamma]);
    }
    Ok(vec![curve, loc])
}

fn run_moments_check(c: &MomentsCheckConfig, report: &mut ExperimentReport) -> Result<Vec<Table>> {
    need_replicas(c.replicas, 2, "replicas")?;
    need_replicas(c.zero_energy_replicas, 2, "zero_energy_replicas")?;
    if c.s_max < 1 {
        return Err(invalid("s_max must be at least 1"));
    }
    let spec = &c.spec;

    // Bertoin–Yor: T ~ Exp(λ) independent of the path.
    let recursion: Vec<f64> = (1..=c.s_max).map(|s| bertoin_yor_moment(spec, c.lambda, s)).collect::<Result<_>>()?;
    let exp_t = Exp::new(c.lambda).map_err(|e| invalid(e.to_string()))?;
    let seed = sub_seed(report, c.base_seed, 0);
    let functionals = collect(replicate(seed, c.replicas, |_, s| {
        let horizon = exp_t.sample(&mut rng_from_seed(stream_seed(s, 0))).max(f64::MIN_POSITIVE);
        spec.sample_path(horizon, c.dx, stream_seed(s, 1)).map(|p| exp_functional(&p))
    }))?;
    let mut by = Table::new("bertoin_yor", &["s", "recursion", "mc_mean", "mc_se", "z_score"]);
    for (i, &m) in recursion.iter().enumerate() {
        let s = i as i32 + 1;
        let powers: Vec<f64> = functionals.iter().map(|x| x.powi(s)).collect();
        let est = Estimate::from_samples(&powers)?;
        report.add_value(format!("recursion_m{s}"), m)?;
        report.add_estimate(format!("mc_m{s}"), est)?;
        by.push(vec![s as f64, m, est.value, est.standard_error, est.z_score(m)]);
    }

    // Stationary moments: recursion against quadrature of the closed form.
    let mut stationary = Table::new("stationary_moments", &["k", "s", "recursion", "quadrature", "rel_diff"]);
    for &k in &c.k_values {
        let table = stationary_moment_ratios(spec, k, c.s_max as usize, c.tol)?;
        let density = stationary_density_for(spec, k).ok();
        for s in 1..=c.s_max as usize {
            let quad = match &density {
                Some(d) => d.moment(s as f64)?,
                None => f64::NAN,
            };
            let rel = (table.values[s] - quad).abs() / quad;
            if s == 1 {
                report.add_value(format!("f1_recursion[k={k}]"), table.values[1])?;
                if quad.is_finite() {
                    report.add_value(format!("f1_quadrature[k={k}]"), quad)?;
                }
            }
            stationary.push(vec![k, s as f64, table.values[s], quad, rel]);
        }
    }

    // Zero energy: Z(x) from Z(0) = 0 against I_x on independent paths.
    let x = c.zero_energy_horizon;
    let z_seed = sub_seed(report, c.base_seed, 1);
    let i_seed = sub_seed(report, c.base_seed, 2);
    let zs = collect(replicate(z_seed, c.zero_energy_replicas, |_, s| {
        spec.sample_path(x, c.dx, s).map(|p| riccati_along_path(&p, 0.0, 0.0))
    }))?;
    let is = collect(replicate(i_seed, c.zero_energy_replicas, |_, s| spec.sample_path(x, c.dx, s).map(|p| exp_functional(&p))))?;
    report.add_gof("ks_zero_energy", ks_two_sample(&zs, &is)?)?;
    let mut zero = Table::new("zero_energy", &["replica", "riccati_z", "exp_functional"]);
    for (i, (z, v)) in zs.iter().zip(&is).enumerate() {
        zero.push(vec![i as f64, *z, *v]);
    }
    Ok(vec![by, stationary, zero])
}

fn run_deficit(c: &DeficitConfig, report: &mut ExperimentReport) -> Result<Vec<Table>> {
    if c.alphas.is_empty() {
        return Err(invalid("at least one alpha is required"));
    }
    let mut ladder: Vec<u64> = std::iter::successors(Some(10u64), |n| n.checked_mul(10)).take_while(|n| *n < c.n_max).collect();
    ladder.push(c.n_max);
    let mut table = Table::new("deficit", &["alpha", "n_max", "partial", "limit", "abs_error"]);
    for &alpha in &c.alphas {
        for &n in &ladder {
            let d = partition_deficit(alpha, n)?;
            table.push(vec![alpha, n as f64, d.partial, d.limit, (d.partial - d.limit).abs()]);
            if n == c.n_max {
                report.add_value(format!("partial[alpha={alpha}]"), d.partial)?;
                report.add_value(format!("limit[alpha={alpha}]"), d.limit)?;
                report.add_value(format!("abs_error[alpha={alpha}]"), (d.partial - d.limit).abs())?;
            }
        }
    }
    Ok(vec![table])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp_spec(mu: f64) -> LevySpec {
        LevySpec::with_drift(mu, 0.0, JumpFamily::ExponentialPositive { p: 1.0, q: 1.0 }).unwrap()
    }

    #[test]
    fn configs_parse_with_defaults_and_reject_unknown_keys() {
        let c = ExperimentConfig::from_json(ExperimentKind::Dufresne, serde_json::json!({ "mu": 2.0 })).unwrap();
        match &c {
            ExperimentConfig::Dufresne(d) => {
                assert_eq!(d.mu, 2.0);
                assert_eq!(d.replicas, 100_000);
                assert_eq!(d.dx, 1e-3);
            }
            other => panic!("wrong variant {other:?}"),
        }
        assert!(ExperimentConfig::from_json(ExperimentKind::Dufresne, serde_json::json!({ "mu": 1.0, "bogus": 3 })).is_err());
        assert!(ExperimentConfig::from_json(ExperimentKind::Dufresne, serde_json::json!({ "experiment": "spitzer" })).is_err());
        assert!(ExperimentConfig::from_json(ExperimentKind::RiccatiDensity, serde_json::json!({})).is_err());
        assert!(ExperimentConfig::from_json(ExperimentKind::Deficit, serde_json::json!([1, 2])).is_err());
        let spec = serde_json::json!({ "mu": 0.0, "jumps": { "type": "exp", "p": 1.0, "q": 1.0 } });
        let l = ExperimentConfig::from_json(ExperimentKind::LyapunovCurve, serde_json::json!({ "spec": spec })).unwrap();
        assert_eq!(l.kind(), ExperimentKind::LyapunovCurve);
        for kind in ExperimentKind::ALL {
            assert_eq!(kind.name().parse::<ExperimentKind>().unwrap(), kind);
        }
    }

    #[test]
    fn config_echo_round_trips() {
        let c = ExperimentConfig::Deficit(DeficitConfig { n_max: 1000, ..Default::default() });
        let out = run(&c).unwrap();
        let back: ExperimentConfig = serde_json::from_value(out.report.config_echo.clone()).unwrap();
        assert_eq!(back, c);
        assert_eq!(out.report.seeds, vec![DEFAULT_SEED]);
        assert!(!out.report.version.is_empty());
    }

    #[test]
    fn deficit_table_converges() {
        let out = run(&ExperimentConfig::Deficit(DeficitConfig::default())).unwrap();
        let t = out.table("deficit").unwrap();
        assert_eq!(t.rows.len(), 3 * 6);
        for alpha in [0.25, 0.5, 0.75] {
            assert!(out.report.values[&format!("abs_error[alpha={alpha}]")] < 1e-5);
        }
    }

    #[test]
    fn lyapunov_curve_columns_and_gate() {
        let mut c = LyapunovCurveConfig::new(exp_spec(0.0), vec![0.5, 1.0]);
        c.replicas = 2000;
        let out = run(&ExperimentConfig::LyapunovCurve(c.clone())).unwrap();
        let t = out.table("curve").unwrap();
        assert_eq!(t.header, ["E", "omega_cf", "omega_quadrature", "omega_mc", "mc_se"]);
        for row in &t.rows {
            assert!((row[1] - row[2]).abs() < 1e-6);
            assert!((row[1] - row[3]).abs() < 4.0 * row[4]);
        }
        c.spec = LevySpec::brownian(1.0, 1.0).unwrap();
        assert!(matches!(run(&ExperimentConfig::LyapunovCurve(c)), Err(LabError::NotSubordinator(_))));
    }

    #[test]
    fn pure_drift_curve_uses_fixed_point() {
        let mut c = LyapunovCurveConfig::new(LevySpec::pure_drift(1.0).unwrap(), vec![1.0]);
        c.replicas = 0;
        let out = run(&ExperimentConfig::LyapunovCurve(c)).unwrap();
        let row = &out.table("curve").unwrap().rows[0];
        assert!((row[1] - 5f64.sqrt() / 2.0).abs() < 1e-10);
        assert!((row[2] - 5f64.sqrt() / 2.0).abs() < 1e-12);
        assert!(row[3].is_nan());
    }

    #[test]
    fn small_dufresne_run() {
        let c = DufresneConfig { replicas: 400, horizon: Some(20.0), dx: 1e-2, ..Default::default() };
        let out = run(&ExperimentConfig::Dufresne(c)).unwrap();
        assert_eq!(out.report.values["mean_recursion"], 2.0);
        assert!(out.report.estimates["mean"].z_score(2.0) < 4.0);
        assert_eq!(out.table("samples").unwrap().rows.len(), 400);
        assert_eq!(out.report.seeds.len(), 2);
    }

    #[test]
    fn small_runs_are_reproducible() {
        let mut c = SpitzerConfig { paths: 50, times: vec![10.0, 100.0], ..Default::default() };
        c.base_seed = 9;
        let a = run(&ExperimentConfig::Spitzer(c.clone())).unwrap();
        let b = run(&ExperimentConfig::Spitzer(c)).unwrap();
        assert_eq!(a.tables, b.tables);
        assert_eq!(a.report.gof, b.report.gof);
        assert_eq!(a.report.values, b.report.values);
    }

    #[test]
    fn sectors_small_run() {
        let c = SectorsConfig { n_steps: 512, resolution: 64, bridges: 8, export_fields: 1, ..Default::default() };
        let out = run(&ExperimentConfig::Sectors(c)).unwrap();
        assert_eq!(out.table("trend").unwrap().rows.len(), 2);
        assert_eq!(out.table("bridges").unwrap().rows.len(), 16);
        let field = out.table("field_0").unwrap();
        assert_eq!(field.rows.len(), 64);
        assert_eq!(field.header.len(), 64);
        assert!(out.report.estimates.contains_key("level1_A_1"));
    }

    #[test]
    fn moments_check_small_run() {
        let mut c = MomentsCheckConfig::new(exp_spec(0.5));
        c.replicas = 2000;
        c.zero_energy_replicas = 500;
        c.k_values = vec![1.0];
        let out = run(&ExperimentConfig::MomentsCheck(c)).unwrap();
        for row in &out.table("stationary_moments").unwrap().rows {
            assert!(row[4] < 1e-6, "{row:?}");
        }
        assert!(out.report.gof["ks_zero_energy"] < 0.15);
    }

    #[test]
    fn density_needs_a_closed_form() {
        let spec = LevySpec::with_drift(0.5, 1.0, JumpFamily::ExponentialPositive { p: 1.0, q: 1.0 }).unwrap();
        let c = RiccatiDensityConfig::new(spec, 1.0);
        assert!(matches!(run(&ExperimentConfig::RiccatiDensity(c)), Err(LabError::InvalidParameter(_))));
    }
}
