//! Windings of planar Brownian motion around the origin and winding-sector
//! areas of the planar Brownian bridge.
//!
//! Angles are sampled in skew-product form: Z_t = exp(β(H_t) + iγ(H_t)) with
//! β, γ independent Brownian motions and H_t = ∫₀^t ds/|Z_s|². The angle
//! increments are then exact Gaussians and need no unwrapping, and the split
//! θ = θ⁺ + θ⁻ assigns each increment by whether the radius is above or
//! below `r_star`.

use crate::error::{invalid, Result};
use crate::rng::rng_from_seed;
use crate::stats::{Estimate, ExperimentReport};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, VecDeque};

/// Winding of one path observed at time `horizon`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindingTrace {
    /// θ_t, continuous determination of arg Z_t − arg Z_0.
    pub total_angle: f64,
    /// θ⁺: increments accrued while |Z| ≥ r_star.
    pub big_angle: f64,
    /// θ⁻: increments accrued while |Z| < r_star.
    pub small_angle: f64,
    pub horizon: f64,
    pub start_radius: f64,
    pub steps: u64,
}

impl WindingTrace {
    /// 2θ/log t.
    pub fn spitzer_statistic(&self) -> f64 {
        2.0 * self.total_angle / self.horizon.ln()
    }

    /// 2θ⁺/log t.
    pub fn big_statistic(&self) -> f64 {
        2.0 * self.big_angle / self.horizon.ln()
    }
}

/// Partition of angular increments by the radius at each step's midpoint.
/// Returns (θ⁺, θ⁻).
pub fn split_windings(increments: &[(f64, f64)], r_star: f64) -> Result<(f64, f64)> {
    if !(r_star > 0.0) {
        return Err(invalid(format!("r_star must be positive, got {r_star}")));
    }
    let (mut big, mut small) = (0.0, 0.0);
    for &(dtheta, mid_radius) in increments {
        if mid_radius < r_star {
            small += dtheta;
        } else {
            big += dtheta;
        }
    }
    Ok((big, small))
}

fn check_winding_args(times: &[f64], r0: f64, eps: f64, r_star: f64) -> Result<()> {
    if !(r0 > 0.0) {
        return Err(invalid(format!("start radius must be positive, got {r0}")));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(invalid(format!("eps must lie in (0, 1), got {eps}")));
    }
    if !(r_star > 0.0) {
        return Err(invalid(format!("r_star must be positive, got {r_star}")));
    }
    if times.is_empty() || times.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
        return Err(invalid("observation times must be positive and finite"));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("observation times must be strictly increasing"));
    }
    Ok(())
}

/// Winding of one planar Brownian path started at (r0, 0), observed at each of
/// the increasing `times`.
///
/// Steps in the intrinsic clock u (du = dt/|Z|²) have length
/// eps·max(1, d²), where d is the distance of log|Z| from the nearer of
/// log r_star and the log-radius ½·log(t_next) at which the next observation
/// is due; in real time this is dt = eps·|Z|² near those radii. Each step is
/// further capped so it spends at most half the remaining real time.
pub fn sample_winding_ladder(times: &[f64], r0: f64, eps: f64, r_star: f64, seed: u64) -> Result<Vec<WindingTrace>> {
    Ok(sample_winding_thresholds(times, r0, eps, &[r_star], seed)?
        .into_iter()
        .map(|row| row[0])
        .collect())
}

/// As [`sample_winding_ladder`], splitting the same path at several radii.
/// Indexed `[time][threshold]`; `total_angle` is identical across a row up
/// to summation order.
pub fn sample_winding_thresholds(times: &[f64], r0: f64, eps: f64, r_stars: &[f64], seed: u64) -> Result<Vec<Vec<WindingTrace>>> {
    if r_stars.is_empty() {
        return Err(invalid("at least one split radius is required"));
    }
    for &r in r_stars {
        check_winding_args(times, r0, eps, r)?;
    }
    let mut rng = rng_from_seed(seed);
    let log_stars: Vec<f64> = r_stars.iter().map(|r| r.ln()).collect();
    let mut beta = r0.ln();
    let mut clock = 0.0;
    let mut big = vec![0.0; r_stars.len()];
    let mut small = vec![0.0; r_stars.len()];
    let mut steps = 0u64;
    let mut out = Vec::with_capacity(times.len());
    for &target in times {
        let level = 0.5 * target.ln();
        while target - clock > 1e-10 * target {
            let near_star = log_stars.iter().map(|l| (beta - l).abs()).fold(f64::INFINITY, f64::min);
            let d = near_star.min((level - beta).max(0.0));
            let rate = (2.0 * beta).exp();
            let du = (eps * d.powi(2).max(1.0)).min(0.5 * (target - clock) / rate);
            let db: f64 = rng.sample(StandardNormal);
            let dg: f64 = rng.sample(StandardNormal);
            let next = beta + du.sqrt() * db;
            clock += 0.5 * (rate + (2.0 * next).exp()) * du;
            let dtheta = du.sqrt() * dg;
            let mid = 0.5 * (beta + next);
            for (i, l) in log_stars.iter().enumerate() {
                if mid < *l {
                    small[i] += dtheta;
                } else {
                    big[i] += dtheta;
                }
            }
            beta = next;
            steps += 1;
        }
        out.push(
            (0..r_stars.len())
                .map(|i| WindingTrace {
                    total_angle: big[i] + small[i],
                    big_angle: big[i],
                    small_angle: small[i],
                    horizon: target,
                    start_radius: r0,
                    steps,
                })
                .collect(),
        );
    }
    Ok(out)
}

pub fn sample_winding_angle(t: f64, r0: f64, eps: f64, r_star: f64, seed: u64) -> Result<WindingTrace> {
    Ok(sample_winding_ladder(&[t], r0, eps, r_star, seed)?[0])
}

/// Direct planar discretisation: Gaussian steps with dt = eps·|Z|², angle
/// accumulated from atan2 of successive positions. Its cost is proportional
/// to ∫ dt/|Z|², which has infinite mean, so it is only usable for short
/// horizons; `None` when `max_steps` is exhausted.
pub fn sample_winding_angle_planar(t: f64, r0: f64, eps: f64, r_star: f64, max_steps: u64, seed: u64) -> Result<Option<WindingTrace>> {
    check_winding_args(&[t], r0, eps, r_star)?;
    let mut rng = rng_from_seed(seed);
    let (mut x, mut y) = (r0, 0.0);
    let mut now = 0.0;
    let (mut big, mut small) = (0.0, 0.0);
    let mut steps = 0u64;
    while now < t {
        if steps >= max_steps {
            return Ok(None);
        }
        let dt = (eps * (x * x + y * y)).min(t - now);
        let s = dt.sqrt();
        let nx = x + s * rng.sample::<f64, _>(StandardNormal);
        let ny = y + s * rng.sample::<f64, _>(StandardNormal);
        let dtheta = (x * ny - y * nx).atan2(x * nx + y * ny);
        let mid = (0.25 * ((x + nx).powi(2) + (y + ny).powi(2))).sqrt();
        if mid < r_star {
            small += dtheta;
        } else {
            big += dtheta;
        }
        x = nx;
        y = ny;
        now += dt;
        steps += 1;
    }
    Ok(Some(WindingTrace {
        total_angle: big + small,
        big_angle: big,
        small_angle: small,
        horizon: t,
        start_radius: r0,
        steps,
    }))
}

/// Closed polygon: the last vertex repeats the first.
pub type Polygon = Vec<[f64; 2]>;

/// Planar Brownian bridge of duration `t` at `n_steps` uniform times.
pub fn sample_bridge(t: f64, n_steps: usize, seed: u64) -> Result<Polygon> {
    if n_steps < 3 {
        return Err(invalid(format!("a bridge polygon needs at least 3 steps, got {n_steps}")));
    }
    if !(t > 0.0) {
        return Err(invalid(format!("bridge duration must be positive, got {t}")));
    }
    let mut rng = rng_from_seed(seed);
    let sd = (t / n_steps as f64).sqrt();
    let mut walk = Vec::with_capacity(n_steps + 1);
    let (mut x, mut y) = (0.0, 0.0);
    walk.push([0.0, 0.0]);
    for _ in 0..n_steps {
        x += sd * rng.sample::<f64, _>(StandardNormal);
        y += sd * rng.sample::<f64, _>(StandardNormal);
        walk.push([x, y]);
    }
    let [ex, ey] = walk[n_steps];
    for (i, p) in walk.iter_mut().enumerate() {
        let s = i as f64 / n_steps as f64;
        p[0] -= s * ex;
        p[1] -= s * ey;
    }
    walk[n_steps] = walk[0];
    Ok(walk)
}

/// Every `factor`-th vertex of a closed polygon (still closed).
pub fn subsample(polygon: &[[f64; 2]], factor: usize) -> Polygon {
    let mut out: Polygon = polygon.iter().step_by(factor.max(1)).copied().collect();
    if out.last() != polygon.first() {
        out.push(polygon[0]);
    }
    out
}

/// Shoelace signed area.
pub fn signed_area(polygon: &[[f64; 2]]) -> f64 {
    0.5 * polygon
        .windows(2)
        .map(|w| w[0][0] * w[1][1] - w[1][0] * w[0][1])
        .sum::<f64>()
}

/// Axis-aligned square [x0, x0 + side] × [y0, y0 + side].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SquareBox {
    pub x0: f64,
    pub y0: f64,
    pub side: f64,
}

impl SquareBox {
    /// Smallest square containing the polygon, padded by `margin_cells`
    /// cells of a `resolution`-cell grid on each side.
    pub fn around(polygon: &[[f64; 2]], resolution: usize, margin_cells: usize) -> Self {
        let (mut xmin, mut xmax, mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for p in polygon {
            xmin = xmin.min(p[0]);
            xmax = xmax.max(p[0]);
            ymin = ymin.min(p[1]);
            ymax = ymax.max(p[1]);
        }
        let span = (xmax - xmin).max(ymax - ymin).max(f64::MIN_POSITIVE);
        let inner = resolution.saturating_sub(2 * margin_cells).max(1) as f64;
        let cell = span / inner;
        let side = cell * resolution as f64;
        let cx = 0.5 * (xmin + xmax);
        let cy = 0.5 * (ymin + ymax);
        Self { x0: cx - 0.5 * side, y0: cy - 0.5 * side, side }
    }
}

/// Whether cells flagged as boundary enter the area sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryPolicy {
    /// Every cell counts; the flagged area is reported separately.
    #[default]
    Include,
    /// Flagged cells are dropped from A_n, A₀ and the derived areas.
    Exclude,
}

/// Winding indices of a closed polygon on a square grid, with sector areas.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindingField {
    pub resolution: usize,
    pub bbox: SquareBox,
    /// n_z at cell centres, row-major from the bottom row.
    pub grid: Vec<i32>,
    /// Cells whose centre lies within one cell diagonal of the polygon.
    pub boundary: Vec<bool>,
    pub cell_area: f64,
    pub policy: BoundaryPolicy,
    /// A_n for every index n present, under `policy`.
    pub sector_areas: BTreeMap<i32, f64>,
    /// Area of the boundary-flagged cells.
    pub boundary_area: f64,
    /// Σ n·A_n.
    pub algebraic_area: f64,
    /// Σ_{n≠0} A_n + zero_sector_inside.
    pub arithmetic_area: f64,
    /// Index-0 area not connected to the outside of the box.
    pub zero_sector_inside: f64,
}

impl WindingField {
    pub fn index_at(&self, col: usize, row: usize) -> i32 {
        self.grid[row * self.resolution + col]
    }

    pub fn sector(&self, n: i32) -> f64 {
        self.sector_areas.get(&n).copied().unwrap_or(0.0)
    }
}

fn point_segment_distance2(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (ex, ey) = (a[0] + t * dx - p[0], a[1] + t * dy - p[1]);
    ex * ex + ey * ey
}

/// Winding number of every cell centre by signed crossings of horizontal
/// rays, swept row by row.
pub fn winding_field(polygon: &[[f64; 2]], bbox: SquareBox, resolution: usize) -> Result<WindingField> {
    winding_field_with(polygon, bbox, resolution, BoundaryPolicy::Include)
}

pub fn winding_field_with(polygon: &[[f64; 2]], bbox: SquareBox, resolution: usize, policy: BoundaryPolicy) -> Result<WindingField> {
    if polygon.len() < 4 || polygon.first() != polygon.last() {
        return Err(invalid("polygon must be closed (first vertex repeated last) with at least 3 edges"));
    }
    if resolution == 0 || !(bbox.side > 0.0) {
        return Err(invalid("grid needs positive resolution and box side"));
    }
    let inside = |p: &[f64; 2]| {
        p[0] >= bbox.x0 && p[0] <= bbox.x0 + bbox.side && p[1] >= bbox.y0 && p[1] <= bbox.y0 + bbox.side
    };
    if !polygon.iter().all(inside) {
        return Err(invalid("box does not contain the polygon"));
    }
    let n = resolution;
    let h = bbox.side / n as f64;
    let centre = |i: usize| (i as f64 + 0.5) * h;

    // Per-row crossings (x, ±1) of the line through the row's cell centres.
    let mut rows: Vec<Vec<(f64, i32)>> = vec![Vec::new(); n];
    for w in polygon.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (ay, by) = (a[1] - bbox.y0, b[1] - bbox.y0);
        if ay == by {
            continue;
        }
        let (lo, hi, sign) = if ay < by { (ay, by, 1) } else { (by, ay, -1) };
        // rows with lo <= y_c < hi
        let first = ((lo / h - 0.5).ceil().max(0.0)) as usize;
        let mut j = first;
        while j < n && centre(j) < hi {
            let yc = centre(j);
            if yc >= lo {
                let x = a[0] + (yc - ay) * (b[0] - a[0]) / (by - ay) - bbox.x0;
                rows[j].push((x, sign));
            }
            j += 1;
        }
    }
    let mut grid = vec![0i32; n * n];
    for (j, row) in rows.iter_mut().enumerate() {
        row.sort_by(|p, q| p.0.total_cmp(&q.0));
        let mut acc: i32 = row.iter().map(|c| c.1).sum();
        let mut k = 0;
        for i in 0..n {
            let xc = centre(i);
            while k < row.len() && row[k].0 <= xc {
                acc -= row[k].1;
                k += 1;
            }
            grid[j * n + i] = acc;
        }
    }

    let mut boundary = vec![false; n * n];
    let diag2 = 2.0 * h * h;
    let reach = 2.0f64.sqrt() * h;
    for w in polygon.windows(2) {
        let (a, b) = (w[0], w[1]);
        let lo_x = (((a[0].min(b[0]) - reach - bbox.x0) / h - 0.5).floor().max(0.0)) as usize;
        let hi_x = (((a[0].max(b[0]) + reach - bbox.x0) / h - 0.5).ceil().max(0.0) as usize).min(n - 1);
        let lo_y = (((a[1].min(b[1]) - reach - bbox.y0) / h - 0.5).floor().max(0.0)) as usize;
        let hi_y = (((a[1].max(b[1]) + reach - bbox.y0) / h - 0.5).ceil().max(0.0) as usize).min(n - 1);
        for j in lo_y..=hi_y {
            for i in lo_x..=hi_x {
                let p = [bbox.x0 + centre(i), bbox.y0 + centre(j)];
                if point_segment_distance2(p, a, b) <= diag2 {
                    boundary[j * n + i] = true;
                }
            }
        }
    }

    // Index-0 cells reachable from the box edge through index-0 cells.
    let mut outside = vec![false; n * n];
    let mut queue = VecDeque::new();
    for i in 0..n {
        for &(c, r) in &[(i, 0), (i, n - 1), (0, i), (n - 1, i)] {
            let id = r * n + c;
            if grid[id] == 0 && !outside[id] {
                outside[id] = true;
                queue.push_back((c, r));
            }
        }
    }
    while let Some((c, r)) = queue.pop_front() {
        let mut visit = |c: usize, r: usize| {
            let id = r * n + c;
            if grid[id] == 0 && !outside[id] {
                outside[id] = true;
                queue.push_back((c, r));
            }
        };
        if c > 0 {
            visit(c - 1, r);
        }
        if c + 1 < n {
            visit(c + 1, r);
        }
        if r > 0 {
            visit(c, r - 1);
        }
        if r + 1 < n {
            visit(c, r + 1);
        }
    }

    let cell_area = h * h;
    let mut counts: BTreeMap<i32, u64> = BTreeMap::new();
    let mut zero_inside = 0u64;
    let mut boundary_cells = 0u64;
    for id in 0..n * n {
        if boundary[id] {
            boundary_cells += 1;
            if policy == BoundaryPolicy::Exclude {
                continue;
            }
        }
        *counts.entry(grid[id]).or_default() += 1;
        if grid[id] == 0 && !outside[id] {
            zero_inside += 1;
        }
    }
    let sector_areas: BTreeMap<i32, f64> = counts.iter().map(|(&k, &c)| (k, c as f64 * cell_area)).collect();
    let algebraic_area = sector_areas.iter().map(|(&k, &a)| k as f64 * a).sum();
    let zero_sector_inside = zero_inside as f64 * cell_area;
    let arithmetic_area = sector_areas.iter().filter(|(&k, _)| k != 0).map(|(_, &a)| a).sum::<f64>() + zero_sector_inside;
    Ok(WindingField {
        resolution: n,
        bbox,
        grid,
        boundary,
        cell_area,
        policy,
        sector_areas,
        boundary_area: boundary_cells as f64 * cell_area,
        algebraic_area,
        arithmetic_area,
        zero_sector_inside,
    })
}

/// Field summaries used by [`sector_statistics`]; small enough to keep one
/// per replica.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorSummary {
    pub sector_areas: BTreeMap<i32, f64>,
    pub algebraic_area: f64,
    pub arithmetic_area: f64,
    pub zero_sector_inside: f64,
    pub boundary_area: f64,
}

impl From<&WindingField> for SectorSummary {
    fn from(f: &WindingField) -> Self {
        Self {
            sector_areas: f.sector_areas.clone(),
            algebraic_area: f.algebraic_area,
            arithmetic_area: f.arithmetic_area,
            zero_sector_inside: f.zero_sector_inside,
            boundary_area: f.boundary_area,
        }
    }
}

/// Means and standard errors of A_n (0 < |n| ≤ n_max), the pooled
/// (A_n + A_{−n})/2, the arithmetic and algebraic areas and A₀.
pub fn sector_statistics(fields: &[SectorSummary], n_max: i32) -> Result<ExperimentReport> {
    if fields.len() < 2 {
        return Err(invalid("sector statistics need at least two fields"));
    }
    let mut report = ExperimentReport::new("sectors", serde_json::Value::Null);
    let column = |f: &dyn Fn(&SectorSummary) -> f64| -> Vec<f64> { fields.iter().map(f).collect() };
    for k in 1..=n_max {
        for n in [k, -k] {
            let xs = column(&|s| s.sector_areas.get(&n).copied().unwrap_or(0.0));
            report.add_estimate(format!("A_{n}"), Estimate::from_samples(&xs)?)?;
        }
        let pooled = column(&|s| {
            0.5 * (s.sector_areas.get(&k).copied().unwrap_or(0.0) + s.sector_areas.get(&-k).copied().unwrap_or(0.0))
        });
        report.add_estimate(format!("A_pm{k}"), Estimate::from_samples(&pooled)?)?;
    }
    report.add_estimate("arithmetic_area", Estimate::from_samples(&column(&|s| s.arithmetic_area))?)?;
    report.add_estimate("algebraic_area", Estimate::from_samples(&column(&|s| s.algebraic_area))?)?;
    report.add_estimate("A_0_inside", Estimate::from_samples(&column(&|s| s.zero_sector_inside))?)?;
    report.add_estimate("boundary_area", Estimate::from_samples(&column(&|s| s.boundary_area))?)?;
    Ok(report)
}

/// Expected area of the index-n sector of a planar Brownian bridge of
/// duration t, n ≠ 0.
pub fn expected_sector_area(n: i32, t: f64) -> f64 {
    t / (2.0 * std::f64::consts::PI * (n as f64).powi(2))
}

/// Partial sum of the flux-dependent partition-function difference and its
/// limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PartitionDeficit {
    pub alpha: f64,
    pub n_max: u64,
    /// (1/2πt) Σ_{0<|n|≤n_max} (e^{−2πiαn} − 1)·t/(2πn²).
    pub partial: f64,
    /// −α(1−α)/2.
    pub limit: f64,
}

pub fn partition_deficit(alpha: f64, n_max: u64) -> Result<PartitionDeficit> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(invalid(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    if n_max < 1 {
        return Err(invalid("n_max must be at least 1"));
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    // ±n terms pair into 2(cos(2παn) − 1); summed from the small tail upward.
    let mut sum = 0.0;
    for n in (1..=n_max).rev() {
        let nf = n as f64;
        sum += ((two_pi * alpha * nf).cos() - 1.0) / (nf * nf);
    }
    let partial = sum / (two_pi * std::f64::consts::PI);
    Ok(PartitionDeficit {
        alpha,
        n_max,
        partial,
        limit: -0.5 * alpha * (1.0 - alpha),
    })
}
