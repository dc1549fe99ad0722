//! Rays/junction partition, first-return excursions and the cell table.
//!
//! The junction `Y` is chosen so that it dynamically separates the rays
//! `A_1, ..., A_d`: an orbit can only move from one ray to another through
//! `Y`. Each ray is a union of the inner parts `h < theta_s` of the
//! half-branches anchored at its fixed point, so region membership is a
//! single comparison in local coordinates.
//!
//! * `d = 2`: `A_1 = [0, gamma)`, `Y = [gamma, T gamma]`, `A_2 = (T gamma, 1]`
//!   where `gamma` is the 2-periodic point in `J_1`.
//! * `d >= 3`: `A_j` is the part of `J_j` mapped back into `J_j`; `Y` is the
//!   rest.
//!
//! Within a ray the dynamics is the monotone local map `h -> phi(h)`, so the
//! number of steps until `Y` is reached is determined by which cell
//! `[b_n, b_{n-1})` of the backward orbit `b_0 = theta`, `b_n = phi^-1(b_{n-1})`
//! contains the entry point.

use alloc::vec::Vec;

use rand::Rng;
use thiserror::Error;

use crate::map::{Direction, IntermittentMap, MapError, MapFamily, Orbit, Point, StallPolicy, TailLaw};
use crate::special::{bisect, gamma as gamma_fn};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReturnMapError {
    #[error(transparent)]
    Map(#[from] MapError),
    #[error("no 2-periodic point found in the first branch")]
    NoPeriodicPoint,
    #[error("operation needs a two-branch map, got {d} branches")]
    NotTwoBranch { d: usize },
    #[error("insufficient data: {have} excursions, need at least {need}")]
    InsufficientData { have: usize, need: usize },
    #[error("orbit moved between rays {from} and {to} without visiting Y (time {time})")]
    SeparationViolation { from: usize, to: usize, time: u64 },
    #[error("tail estimate degenerate: {0}")]
    DegenerateTail(&'static str),
}

/// `A_1 + ... + A_d + Y = [0, 1]` in local-coordinate form.
#[derive(Debug, Clone, PartialEq)]
pub struct RaysPartition {
    d: usize,
    thresholds: Vec<f64>,
    ray_of_side: Vec<usize>,
    gamma: Option<f64>,
    rays: Vec<Vec<(f64, f64)>>,
    junction: Vec<(f64, f64)>,
}

impl RaysPartition {
    pub fn ray_count(&self) -> usize {
        self.d
    }

    /// The 2-periodic point, for two-branch maps.
    pub fn gamma(&self) -> Option<f64> {
        self.gamma
    }

    /// Per half-branch: offsets `h < theta` belong to the ray.
    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn ray_of_side(&self, side: usize) -> usize {
        self.ray_of_side[side]
    }

    /// Ray `j` (0-based) as a union of global intervals.
    pub fn ray(&self, j: usize) -> &[(f64, f64)] {
        &self.rays[j]
    }

    /// `Y` as a union of global intervals.
    pub fn junction(&self) -> &[(f64, f64)] {
        &self.junction
    }

    /// Region index of a point: `0..d` for the rays, `d` for `Y`.
    #[inline]
    pub fn region_index(&self, p: Point) -> usize {
        if p.h < self.thresholds[p.side] {
            self.ray_of_side[p.side]
        } else {
            self.d
        }
    }

    #[inline]
    pub fn region(&self, p: Point) -> Region {
        let r = self.region_index(p);
        if r == self.d {
            Region::Junction
        } else {
            Region::Ray(r)
        }
    }

    #[inline]
    pub fn in_junction(&self, p: Point) -> bool {
        p.h >= self.thresholds[p.side]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    Ray(usize),
    Junction,
}

/// The point `gamma` of `J_1` with `T^2 gamma = gamma != T gamma`.
pub fn find_periodic_gamma(map: &IntermittentMap) -> Result<f64, ReturnMapError> {
    let d = map.branch_count();
    if d != 2 {
        return Err(ReturnMapError::NotTwoBranch { d });
    }
    if map.family() == MapFamily::Boole {
        // T gamma = 1 - gamma reduces to gamma^2 + 2 gamma - 1 = 0
        return Ok(core::f64::consts::SQRT_2 - 1.0);
    }
    let side = map.side(0);
    let lo = side.inverse(side.length);
    let hi = side.length;
    let g = |h: f64| -> f64 {
        let p = map.step_point(Point { side: 0, h });
        let q = map.step_point(p);
        map.to_global(q) - h
    };
    let root = bisect(g, lo * (1.0 + 1e-12), hi * (1.0 - 1e-15), 1e-16)
        .ok_or(ReturnMapError::NoPeriodicPoint)?;
    let image = map.step_point(Point { side: 0, h: root });
    if image.side != 1 {
        return Err(ReturnMapError::NoPeriodicPoint);
    }
    Ok(root)
}

pub fn build_partition(map: &IntermittentMap) -> Result<RaysPartition, ReturnMapError> {
    let d = map.branch_count();
    let sides = map.sides();
    let ray_of_side: Vec<usize> = sides.iter().map(|s| s.anchor).collect();
    let (thresholds, gamma) = if d == 2 {
        let gamma = find_periodic_gamma(map)?;
        let far = if map.family() == MapFamily::Boole {
            gamma
        } else {
            map.side(0).complement(gamma)
        };
        (alloc::vec![gamma, far], Some(gamma))
    } else {
        (sides.iter().map(|s| s.inverse(s.length)).collect(), None)
    };

    let mut rays = alloc::vec![Vec::new(); d];
    let mut junction = Vec::new();
    for (k, side) in sides.iter().enumerate() {
        let inner_end = map.to_global(Point { side: k, h: thresholds[k] });
        let outer_end = map.to_global(Point { side: k, h: side.length });
        let x_j = map.fixed_points()[side.anchor];
        let (ray, y) = match side.direction {
            Direction::Right => ((x_j, inner_end), (inner_end, outer_end)),
            Direction::Left => ((inner_end, x_j), (outer_end, inner_end)),
        };
        rays[side.anchor].push(ray);
        if y.1 > y.0 {
            junction.push(y);
        }
    }
    // merge adjacent junction pieces
    junction.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for iv in junction {
        match merged.last_mut() {
            Some(last) if (iv.0 - last.1).abs() <= 1e-15 => last.1 = iv.1,
            _ => merged.push(iv),
        }
    }
    Ok(RaysPartition { d, thresholds, ray_of_side, gamma, rays, junction: merged })
}

/// Lebesgue-uniform initial point as a local point.
pub fn sample_uniform_point<R: Rng + ?Sized>(map: &IntermittentMap, rng: &mut R) -> Point {
    let x: f64 = rng.random();
    map.locate(x).expect("uniform draw lies in [0, 1)")
}

/// Audit of dynamical separation: count ray-to-ray transitions that skip `Y`
/// over `segments` orbit segments of `len` steps from uniform starting points.
pub fn audit_separation<R: Rng + ?Sized>(
    map: &IntermittentMap,
    partition: &RaysPartition,
    segments: usize,
    len: u64,
    rng: &mut R,
) -> Result<u64, MapError> {
    let d = partition.ray_count();
    let mut violations = 0u64;
    for _ in 0..segments {
        let mut orbit = Orbit::from_point(map, sample_uniform_point(map, rng), StallPolicy::AnalyticTail);
        let mut last = partition.region_index(orbit.point());
        for _ in 0..len {
            orbit.step()?;
            let r = partition.region_index(orbit.point());
            if r < d && last < d && r != last {
                violations += 1;
            }
            last = r;
        }
    }
    Ok(violations)
}

/// One excursion between consecutive visits to `Y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExcursionRecord {
    /// Ray visited in between, `None` when the return is immediate.
    pub ray: Option<usize>,
    /// Steps spent in that ray, `ell_ray`.
    pub steps: u64,
}

impl ExcursionRecord {
    /// Return time `phi = 1 + sum_j ell_j`.
    #[inline]
    pub fn phi(&self) -> u64 {
        1 + self.steps
    }

    /// `ell_j` for 0-based ray `j`.
    #[inline]
    pub fn ell(&self, j: usize) -> u64 {
        if self.ray == Some(j) {
            self.steps
        } else {
            0
        }
    }
}

/// Excursion sequence of an orbit (or i.i.d. stationary draws).
///
/// Record `k` covers the steps after the `k`-th visit to `Y` (visit 0 being
/// the starting time) up to and including the next visit.
#[derive(Debug, Clone, PartialEq)]
pub struct ExcursionTrace {
    d: usize,
    records: Vec<ExcursionRecord>,
}

impl ExcursionTrace {
    pub fn from_records(d: usize, records: Vec<ExcursionRecord>) -> Self {
        ExcursionTrace { d, records }
    }

    /// Build the trace from region indices of `T^1 x, T^2 x, ...` (`d` = `Y`).
    /// Trailing steps after the last `Y` visit are dropped.
    pub fn from_regions(d: usize, regions: &[u8]) -> Result<Self, ReturnMapError> {
        let mut records = Vec::new();
        let mut ray: Option<usize> = None;
        let mut steps = 0u64;
        for (k, &r) in regions.iter().enumerate() {
            let r = r as usize;
            if r >= d {
                records.push(ExcursionRecord { ray, steps });
                ray = None;
                steps = 0;
                continue;
            }
            match ray {
                Some(prev) if prev != r => {
                    return Err(ReturnMapError::SeparationViolation { from: prev, to: r, time: k as u64 + 1 })
                }
                _ => ray = Some(r),
            }
            steps += 1;
        }
        Ok(ExcursionTrace { d, records })
    }

    pub fn ray_count(&self) -> usize {
        self.d
    }

    pub fn records(&self) -> &[ExcursionRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// `eta_j(t) = sum_{k <= t} ell_j(k)` as a step function on `[0, len)`.
    pub fn eta(&self, j: usize) -> crate::cadlag::StepFunction {
        self.cumulative(|r| r.ell(j) as f64)
    }

    /// `phi(t) = sum_{k <= t} phi(k)`, the `Y`-visit times.
    pub fn phi(&self) -> crate::cadlag::StepFunction {
        self.cumulative(|r| r.phi() as f64)
    }

    fn cumulative<F: Fn(&ExcursionRecord) -> f64>(&self, f: F) -> crate::cadlag::StepFunction {
        let mut values = Vec::with_capacity(self.records.len());
        let mut acc = 0.0;
        for r in &self.records {
            acc += f(r);
            values.push(acc);
        }
        crate::cadlag::StepFunction::integer_steps(&values)
    }
}

/// Trace of the orbit of `x0` up to `n_returns` visits to `Y`.
pub fn excursion_trace(
    map: &IntermittentMap,
    partition: &RaysPartition,
    x0: f64,
    n_returns: usize,
    policy: StallPolicy,
) -> Result<ExcursionTrace, ReturnMapError> {
    let d = partition.ray_count();
    let mut orbit = Orbit::new(map, x0, policy)?;
    let mut records = Vec::with_capacity(n_returns);
    let mut ray: Option<usize> = None;
    let mut steps = 0u64;
    while records.len() < n_returns {
        orbit.step()?;
        // the flow surrogate only runs deep inside a ray
        steps += orbit.finish_analytic_tail();
        let r = partition.region_index(orbit.point());
        if r == d {
            records.push(ExcursionRecord { ray, steps });
            ray = None;
            steps = 0;
        } else {
            match ray {
                Some(prev) if prev != r => {
                    return Err(ReturnMapError::SeparationViolation { from: prev, to: r, time: orbit.time() })
                }
                _ => ray = Some(r),
            }
            steps += 1;
        }
    }
    Ok(ExcursionTrace { d, records })
}

/// Steps until the next visit to `Y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExitSteps {
    pub steps: u64,
    /// False when the count comes from the flow approximation beyond the table.
    pub exact: bool,
}

/// Backward orbits of the ray thresholds, one per half-branch.
#[derive(Debug, Clone, PartialEq)]
pub struct CellTable {
    n_max: usize,
    // boundaries[s][n] = b_n for side s; b_0 = theta_s, strictly decreasing
    boundaries: Vec<Vec<f64>>,
    tails: Vec<TailLaw>,
    ray_of_side: Vec<usize>,
    thresholds: Vec<f64>,
}

/// Junction cell: the points of `Y` on half-branch `source` whose image lies
/// in cell `n` of half-branch `target` (`n = 0`: the image is in `Y`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JunctionCell {
    pub source: usize,
    pub target: usize,
    pub ray: usize,
    pub n: usize,
    pub lo: f64,
    pub hi: f64,
}

impl JunctionCell {
    /// Return time of every point of the cell.
    pub fn return_time(&self) -> u64 {
        self.n as u64 + 1
    }
}

pub fn cell_table(map: &IntermittentMap, partition: &RaysPartition, n_max: usize) -> CellTable {
    let n_max = n_max.max(1);
    let boundaries = map
        .sides()
        .iter()
        .enumerate()
        .map(|(k, side)| {
            let mut b = Vec::with_capacity(n_max + 1);
            let mut v = partition.thresholds()[k];
            b.push(v);
            for _ in 0..n_max {
                v = side.inverse(v);
                b.push(v);
            }
            b
        })
        .collect();
    CellTable {
        n_max,
        boundaries,
        tails: map.sides().iter().map(|s| s.tail).collect(),
        ray_of_side: (0..map.sides().len()).map(|k| partition.ray_of_side(k)).collect(),
        thresholds: partition.thresholds().to_vec(),
    }
}

impl CellTable {
    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// `b_0 > b_1 > ... > b_{n_max}` for half-branch `side`.
    pub fn boundaries(&self, side: usize) -> &[f64] {
        &self.boundaries[side]
    }

    /// Local interval `[b_n, b_{n-1})` of ray cell `n >= 1` on `side`.
    pub fn ray_cell(&self, side: usize, n: usize) -> Option<(f64, f64)> {
        let b = &self.boundaries[side];
        if n == 0 || n >= b.len() {
            return None;
        }
        Some((b[n], b[n - 1]))
    }

    /// Steps from a ray point until the orbit enters `Y`; `None` if the
    /// point is already in `Y`.
    pub fn exit_steps(&self, p: Point) -> Option<ExitSteps> {
        let b = &self.boundaries[p.side];
        if p.h >= b[0] {
            return None;
        }
        // number of b_1..b_M strictly above h; ties go to the smaller n
        let above = b[1..].partition_point(|&bk| bk > p.h);
        if above < self.n_max {
            return Some(ExitSteps { steps: above as u64 + 1, exact: true });
        }
        let tail = &self.tails[p.side];
        let b_m = b[self.n_max];
        let extra = if p.h > 0.0 {
            libm::ceil((tail.to_u(p.h) - tail.to_u(b_m)) / tail.rate()).max(1.0)
        } else {
            f64::INFINITY
        };
        let steps = if extra >= (u64::MAX / 2) as f64 {
            u64::MAX
        } else {
            self.n_max as u64 + extra as u64
        };
        Some(ExitSteps { steps, exact: false })
    }

    /// Return time of a point of `Y` and the ray its excursion visits.
    pub fn return_record(&self, map: &IntermittentMap, p: Point) -> (ExcursionRecord, bool) {
        let q = map.step_point(p);
        match self.exit_steps(q) {
            None => (ExcursionRecord { ray: None, steps: 0 }, true),
            Some(e) => (ExcursionRecord { ray: Some(self.ray_of_side[q.side]), steps: e.steps }, e.exact),
        }
    }

    /// Junction cell `(source, target, n)` in global coordinates, if nonempty.
    pub fn junction_cell(
        &self,
        map: &IntermittentMap,
        source: usize,
        target: usize,
        n: usize,
    ) -> Option<JunctionCell> {
        if n > self.n_max {
            return None;
        }
        let src = map.side(source);
        let tgt = map.side(target);
        // target cell in local offsets
        let (t_lo, t_hi) = if n == 0 {
            (self.thresholds[target], tgt.length)
        } else {
            (self.boundaries[target][n], self.boundaries[target][n - 1])
        };
        if !(t_hi > t_lo) {
            return None;
        }
        let x_t = map.fixed_points()[tgt.anchor];
        let x_s = map.fixed_points()[src.anchor];
        let s = src.direction.sign();
        let g_a = x_t + tgt.direction.sign() * t_lo;
        let g_b = x_t + tgt.direction.sign() * t_hi;
        // distances from x_s along the source direction
        let (mut d_lo, mut d_hi) = {
            let a = s * (g_a - x_s);
            let b = s * (g_b - x_s);
            if a < b {
                (a, b)
            } else {
                (b, a)
            }
        };
        let img_lo = src.forward(self.thresholds[source]);
        let img_hi = src.reach;
        d_lo = d_lo.max(img_lo);
        d_hi = d_hi.min(img_hi);
        if !(d_hi > d_lo) {
            return None;
        }
        let h_lo = src.inverse(d_lo);
        let h_hi = src.inverse(d_hi);
        let a = map.to_global(Point { side: source, h: h_lo });
        let b = map.to_global(Point { side: source, h: h_hi });
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        Some(JunctionCell { source, target, ray: self.ray_of_side[target], n, lo, hi })
    }

    /// All nonempty junction cells with `n <= n_max`.
    pub fn junction_cells(&self, map: &IntermittentMap, n_max: usize) -> Vec<JunctionCell> {
        let sides = map.sides().len();
        let mut out = Vec::new();
        for source in 0..sides {
            for target in 0..sides {
                if target == source {
                    continue;
                }
                for n in 0..=n_max.min(self.n_max) {
                    if let Some(c) = self.junction_cell(map, source, target, n) {
                        out.push(c);
                    }
                }
            }
        }
        out
    }
}

/// Numerical check of uniform expansion and bounded distortion of `T_Y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionReport {
    pub n_max: usize,
    pub samples: usize,
    /// Estimated `inf T_Y'`.
    pub inf_derivative: f64,
    /// Estimated `sup |T_Y''| / (T_Y')^2`.
    pub sup_distortion: f64,
    pub expanding: bool,
    pub bounded_distortion: bool,
}

/// `(T_Y'(x), T_Y''(x))` along the excursion of `x` of length `n + 1`.
pub fn return_map_derivatives(map: &IntermittentMap, x: f64, n: usize) -> Result<(f64, f64), MapError> {
    let mut p = map.locate(x)?;
    let mut d1 = 1.0;
    let mut acc = 0.0;
    for _ in 0..=n {
        let t1 = map.derivative_at(p);
        let t2 = map.second_derivative_at(p);
        acc += t2 / t1 * d1;
        d1 *= t1;
        p = map.step_point(p);
    }
    Ok((d1, d1 * acc))
}

pub fn check_return_map_conditions(
    map: &IntermittentMap,
    cells: &CellTable,
    n_max: usize,
) -> Result<ConditionReport, MapError> {
    let mut inf_d = f64::INFINITY;
    let mut sup_dist: f64 = 0.0;
    let mut samples = 0usize;
    for cell in cells.junction_cells(map, n_max) {
        for &f in &[0.01, 0.25, 0.5, 0.75, 0.99] {
            let x = cell.lo + f * (cell.hi - cell.lo);
            let (d1, d2) = return_map_derivatives(map, x, cell.n)?;
            inf_d = inf_d.min(d1);
            sup_dist = sup_dist.max(libm::fabs(d2) / (d1 * d1));
            samples += 1;
        }
    }
    Ok(ConditionReport {
        n_max,
        samples,
        inf_derivative: inf_d,
        sup_distortion: sup_dist,
        expanding: inf_d > 1.0 + 1e-6,
        bounded_distortion: sup_dist < 1e6,
    })
}

/// Sampler for the normalized invariant measure restricted to `Y`.
#[derive(Debug, Clone, PartialEq)]
pub enum JunctionSampler {
    /// Rejection against `x^-2 + (1-x)^-2` on `[gamma, 1 - gamma]`.
    Boole { gamma: f64, h_max: f64 },
    /// Piecewise-constant density from visit frequencies of a long orbit.
    Histogram { bins: Vec<(usize, f64, f64)>, cumulative: Vec<f64> },
}

impl JunctionSampler {
    pub fn boole(partition: &RaysPartition) -> Result<Self, ReturnMapError> {
        let gamma = partition.gamma().ok_or(ReturnMapError::NotTwoBranch { d: partition.ray_count() })?;
        let h_max = 1.0 / (gamma * gamma) + 1.0 / ((1.0 - gamma) * (1.0 - gamma));
        Ok(JunctionSampler::Boole { gamma, h_max })
    }

    /// Histogram of `bins_per_side` bins on every `Y` piece, filled by the
    /// visits of an orbit of `n_steps` steps (ratio ergodic theorem).
    pub fn from_orbit(
        map: &IntermittentMap,
        partition: &RaysPartition,
        x0: f64,
        n_steps: u64,
        bins_per_side: usize,
    ) -> Result<Self, ReturnMapError> {
        let sides = map.sides().len();
        let mut counts = alloc::vec![0u64; sides * bins_per_side];
        let mut orbit = Orbit::new(map, x0, StallPolicy::AnalyticTail)?;
        for _ in 0..n_steps {
            orbit.step()?;
            if orbit.in_analytic_tail() {
                continue;
            }
            let p = orbit.point();
            if partition.in_junction(p) {
                let th = partition.thresholds()[p.side];
                let len = map.side(p.side).length - th;
                let f = ((p.h - th) / len * bins_per_side as f64) as usize;
                counts[p.side * bins_per_side + f.min(bins_per_side - 1)] += 1;
            }
        }
        let mut bins = Vec::new();
        let mut cumulative = Vec::new();
        let mut acc = 0.0;
        for s in 0..sides {
            let th = partition.thresholds()[s];
            let len = map.side(s).length - th;
            if len <= 0.0 {
                continue;
            }
            for b in 0..bins_per_side {
                let c = counts[s * bins_per_side + b];
                if c == 0 {
                    continue;
                }
                let lo = th + len * b as f64 / bins_per_side as f64;
                let hi = th + len * (b + 1) as f64 / bins_per_side as f64;
                acc += c as f64;
                bins.push((s, lo, hi));
                cumulative.push(acc);
            }
        }
        if bins.is_empty() {
            return Err(ReturnMapError::InsufficientData { have: 0, need: 1 });
        }
        for c in cumulative.iter_mut() {
            *c /= acc;
        }
        Ok(JunctionSampler::Histogram { bins, cumulative })
    }

    pub fn sample<R: Rng + ?Sized>(&self, map: &IntermittentMap, rng: &mut R) -> Point {
        match self {
            JunctionSampler::Boole { gamma, h_max } => loop {
                let x = gamma + (1.0 - 2.0 * gamma) * rng.random::<f64>();
                let h = 1.0 / (x * x) + 1.0 / ((1.0 - x) * (1.0 - x));
                if rng.random::<f64>() * h_max <= h {
                    return map.locate(x).expect("junction point lies in [0, 1]");
                }
            },
            JunctionSampler::Histogram { bins, cumulative } => {
                let u: f64 = rng.random();
                let i = cumulative.partition_point(|&c| c < u).min(bins.len() - 1);
                let (side, lo, hi) = bins[i];
                Point { side, h: lo + (hi - lo) * rng.random::<f64>() }
            }
        }
    }
}

/// Closed-form `mu(Y)` where available (Boole: `sqrt 2`).
pub fn junction_measure(map: &IntermittentMap, partition: &RaysPartition) -> Option<f64> {
    match (map.family(), partition.gamma()) {
        (MapFamily::Boole, Some(g)) => Some(2.0 * (1.0 / g - 1.0 / (1.0 - g))),
        _ => None,
    }
}

/// I.i.d. excursions with entry points drawn from `mu_Y`.
pub fn sample_stationary_excursions<R: Rng + ?Sized>(
    map: &IntermittentMap,
    cells: &CellTable,
    sampler: &JunctionSampler,
    n: usize,
    rng: &mut R,
) -> ExcursionTrace {
    let d = map.branch_count();
    let records = (0..n).map(|_| cells.return_record(map, sampler.sample(map, rng)).0).collect();
    ExcursionTrace::from_records(d, records)
}

/// Empirical tail summary of an excursion sample.
#[derive(Debug, Clone, PartialEq)]
pub struct TailReport {
    pub n_records: usize,
    /// Log-log least-squares estimate of `alpha` on the selected decade.
    pub alpha_hat: f64,
    /// Hill estimate on the exceedances above the window start.
    pub alpha_hill: f64,
    pub window: (u64, u64),
    pub beta_hat: Vec<f64>,
    pub mu_y: Option<f64>,
    phi_sorted: Vec<u64>,
    ell_sorted: Vec<Vec<u64>>,
}

const MIN_TRACE: usize = 10_000;

pub fn tail_statistics(trace: &ExcursionTrace, mu_y: Option<f64>) -> Result<TailReport, ReturnMapError> {
    let n = trace.len();
    if n < MIN_TRACE {
        return Err(ReturnMapError::InsufficientData { have: n, need: MIN_TRACE });
    }
    let d = trace.ray_count();
    let mut phi_sorted: Vec<u64> = trace.records().iter().map(|r| r.phi()).collect();
    phi_sorted.sort_unstable();
    let mut ell_sorted: Vec<Vec<u64>> = (0..d)
        .map(|j| trace.records().iter().map(|r| r.ell(j)).collect())
        .collect();
    for v in ell_sorted.iter_mut() {
        v.sort_unstable();
    }
    let count_above = |v: &[u64], t: u64| (v.len() - v.partition_point(|&x| x <= t)) as f64;

    // geometric grid, 10 points per decade
    let grid: Vec<u64> = (0..)
        .map(|k| libm::round(libm::pow(10.0, k as f64 / 10.0)) as u64)
        .take_while(|&g| g <= *phi_sorted.last().unwrap_or(&1))
        .collect::<Vec<_>>()
        .into_iter()
        .fold(Vec::new(), |mut acc, g| {
            if acc.last() != Some(&g) {
                acc.push(g);
            }
            acc
        });
    let min_count = 200.0;
    let slope = |pts: &[(f64, f64)]| -> f64 {
        let m = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        sxy / sxx
    };
    let logs: Vec<(u64, f64, f64)> = grid
        .iter()
        .filter_map(|&g| {
            let c = count_above(&phi_sorted, g);
            (c >= min_count && g >= 2).then(|| (g, libm::log(g as f64), libm::log(c / n as f64)))
        })
        .collect();
    if logs.len() < 11 {
        return Err(ReturnMapError::DegenerateTail("fewer than one decade of resolved tail"));
    }
    // decade whose two halves agree best on the slope
    let mut best: Option<(f64, usize)> = None;
    for start in 0..=logs.len() - 11 {
        let pts: Vec<(f64, f64)> = logs[start..start + 11].iter().map(|p| (p.1, p.2)).collect();
        let s1 = slope(&pts[..6]);
        let s2 = slope(&pts[5..]);
        let curvature = libm::fabs(s1 - s2);
        if best.is_none_or(|b| curvature < b.0) {
            best = Some((curvature, start));
        }
    }
    let start = best.map(|b| b.1).unwrap_or(0);
    let window_pts: Vec<(f64, f64)> = logs[start..start + 11].iter().map(|p| (p.1, p.2)).collect();
    let alpha_hat = -slope(&window_pts);
    let window = (logs[start].0, logs[start + 10].0);

    let lo = window.0;
    let exceed: Vec<f64> = phi_sorted.iter().filter(|&&v| v > lo).map(|&v| v as f64).collect();
    let alpha_hill = if exceed.is_empty() {
        f64::NAN
    } else {
        let s: f64 = exceed.iter().map(|&v| libm::log(v / lo as f64)).sum();
        exceed.len() as f64 / s
    };

    let window_grid: Vec<u64> = grid.iter().copied().filter(|&g| g >= window.0 && g <= window.1).collect();
    let denom: f64 = window_grid.iter().map(|&g| count_above(&phi_sorted, g)).sum();
    let beta_hat = (0..d)
        .map(|j| {
            // ell_j >= g  <=>  ell_j > g - 1, and phi > g  <=>  ell > g - 1
            let num: f64 = window_grid.iter().map(|&g| count_above(&ell_sorted[j], g - 1)).sum();
            num / denom
        })
        .collect();

    Ok(TailReport { n_records: n, alpha_hat, alpha_hill, window, beta_hat, mu_y, phi_sorted, ell_sorted })
}

impl TailReport {
    /// `mu_Y[phi > n]`.
    pub fn tail_phi(&self, n: u64) -> f64 {
        let v = &self.phi_sorted;
        (v.len() - v.partition_point(|&x| x <= n)) as f64 / v.len() as f64
    }

    /// `mu_Y[phi >= n]`.
    pub fn tail_phi_ge(&self, n: u64) -> f64 {
        self.tail_phi(n.saturating_sub(1))
    }

    /// `mu_Y[ell_j >= n]`.
    pub fn tail_ell(&self, j: usize, n: u64) -> f64 {
        let v = &self.ell_sorted[j];
        (v.len() - v.partition_point(|&x| x < n)) as f64 / v.len() as f64
    }

    fn scale(&self) -> f64 {
        self.mu_y.unwrap_or(1.0)
    }

    /// Wandering rate `w(n) = mu(Y) sum_{k<n} mu_Y[phi > k]`; per unit `mu(Y)`
    /// when it is unknown.
    pub fn wandering_rate(&self, n: u64) -> f64 {
        let v = &self.phi_sorted;
        let s: f64 = v.iter().map(|&x| x.min(n) as f64).sum();
        self.scale() * s / v.len() as f64
    }

    /// `w_j(n) = mu(Y) sum_{1 <= k < n} mu_Y[ell_j >= k]`.
    pub fn wandering_rate_ray(&self, j: usize, n: u64) -> f64 {
        let v = &self.ell_sorted[j];
        let cap = n.saturating_sub(1);
        let s: f64 = v.iter().map(|&x| x.min(cap) as f64).sum();
        self.scale() * s / v.len() as f64
    }

    /// `1 / (Gamma(1 - alpha) mu_Y[phi >= n])`.
    pub fn b_n_estimate(&self, n: u64, alpha: f64) -> f64 {
        1.0 / (gamma_fn(1.0 - alpha) * self.tail_phi_ge(n))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn boole() -> (IntermittentMap, RaysPartition) {
        let map = IntermittentMap::boole();
        let part = build_partition(&map).unwrap();
        (map, part)
    }

    #[test]
    fn boole_gamma_and_partition() {
        let (map, part) = boole();
        let g = part.gamma().unwrap();
        assert!((g - 0.414_213_562_373_095).abs() < 1e-14);
        let t2 = map.eval(map.eval(g).unwrap()).unwrap();
        assert!((t2 - g).abs() < 1e-12);
        assert_eq!(part.junction(), &[(g, 2.0 - core::f64::consts::SQRT_2)]);
        assert!((junction_measure(&map, &part).unwrap() - core::f64::consts::SQRT_2).abs() < 1e-13);
    }

    #[test]
    fn thaler_gamma_by_bisection() {
        let map = IntermittentMap::thaler(2, 0.5, &[1.0, 1.0]).unwrap();
        let g = find_periodic_gamma(&map).unwrap();
        let tg = map.eval(g).unwrap();
        assert!((map.eval(tg).unwrap() - g).abs() < 1e-12);
        assert!(tg > map.partition_points()[1]);
    }

    #[test]
    fn seven_step_example() {
        // Y A1 Y A2 A2 Y Y, regions of T^1..T^6
        let trace = ExcursionTrace::from_regions(2, &[0, 2, 1, 1, 2, 2]).unwrap();
        let r = trace.records();
        assert_eq!(r.len(), 3);
        assert_eq!((r[0].ell(0), r[0].ell(1), r[0].phi()), (1, 0, 2));
        assert_eq!((r[1].ell(0), r[1].ell(1), r[1].phi()), (0, 2, 3));
        assert_eq!((r[2].ell(0), r[2].ell(1), r[2].phi()), (0, 0, 1));
    }

    #[test]
    fn cell_lookup_matches_iteration() {
        let (map, part) = boole();
        let cells = cell_table(&map, &part, 4096);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let sampler = JunctionSampler::boole(&part).unwrap();
        for _ in 0..1000 {
            let p = sampler.sample(&map, &mut rng);
            let (rec, exact) = cells.return_record(&map, p);
            if !exact {
                continue;
            }
            let mut orbit = Orbit::from_point(&map, p, StallPolicy::Error);
            let mut steps = 0u64;
            let mut ray = None;
            loop {
                orbit.step().unwrap();
                match part.region(orbit.point()) {
                    Region::Junction => break,
                    Region::Ray(j) => {
                        ray = Some(j);
                        steps += 1;
                    }
                }
            }
            assert_eq!(rec, ExcursionRecord { ray, steps });
        }
    }

    #[test]
    fn junction_cells_decay_like_tail_density() {
        let (map, part) = boole();
        let cells = cell_table(&map, &part, 2000);
        let size = |n| {
            let c = cells.junction_cell(&map, 1, 0, n).unwrap();
            c.hi - c.lo
        };
        let slope = libm::log(size(2000) / size(200)) / libm::log(10.0);
        // mu_Y[phi > n] ~ n^-alpha, so cell n has size ~ n^(-1-alpha)
        assert!((slope + 1.5).abs() < 0.02, "{slope}");
        // cells ordered toward the preimage of the fixed point and disjoint
        let mut prev = cells.junction_cell(&map, 1, 0, 1).unwrap();
        for n in 2..50 {
            let c = cells.junction_cell(&map, 1, 0, n).unwrap();
            assert!(c.hi <= prev.lo + 1e-15);
            prev = c;
        }
    }

    #[test]
    fn chain_rule_matches_finite_differences() {
        let (map, part) = boole();
        let cells = cell_table(&map, &part, 64);
        for n in [1usize, 5, 20] {
            let c = cells.junction_cell(&map, 0, 1, n).unwrap();
            let x = 0.5 * (c.lo + c.hi);
            let (d1, d2) = return_map_derivatives(&map, x, n).unwrap();
            let step = 1e-6 * (c.hi - c.lo);
            let f = |x: f64| {
                let mut p = map.locate(x).unwrap();
                for _ in 0..=n {
                    p = map.step_point(p);
                }
                map.to_global(p)
            };
            let fd1 = (f(x + step) - f(x - step)) / (2.0 * step);
            assert!((fd1 / d1 - 1.0).abs() < 1e-5, "n={n} {fd1} {d1}");
            let g = |x: f64| return_map_derivatives(&map, x, n).unwrap().0;
            let fd2 = (g(x + step) - g(x - step)) / (2.0 * step);
            assert!((fd2 / d2 - 1.0).abs() < 1e-5, "n={n} {fd2} {d2}");
        }
    }

    #[test]
    fn boole_return_map_conditions() {
        let (map, part) = boole();
        let cells = cell_table(&map, &part, 64);
        let reports: Vec<_> =
            [10, 20, 40].iter().map(|&n| check_return_map_conditions(&map, &cells, n).unwrap()).collect();
        for r in &reports {
            assert!(r.expanding && r.bounded_distortion, "{r:?}");
        }
        let (a, b) = (reports[1].sup_distortion, reports[2].sup_distortion);
        assert!((a - b).abs() / b < 0.1, "{a} {b}");
    }

    #[test]
    fn separation_audit_is_clean() {
        let (map, part) = boole();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(audit_separation(&map, &part, 200, 2000, &mut rng).unwrap(), 0);
        let map3 = IntermittentMap::thaler(3, 0.6, &[1.0, 0.5, 2.0]).unwrap();
        let part3 = build_partition(&map3).unwrap();
        assert_eq!(audit_separation(&map3, &part3, 200, 2000, &mut rng).unwrap(), 0);
        // rays contain neighbourhoods of the fixed points
        for j in 0..3 {
            let xj = map3.fixed_points()[j];
            assert!(part3.ray(j).iter().any(|&(a, b)| a <= xj && xj <= b));
        }
    }
}
