//! Intermittent interval maps with indifferent fixed points.
//!
//! A map with `d` branches is stored as `2d - 2` half-branches, one on each
//! side of every fixed point. Orbit points are kept in local coordinates
//! `(side, h)` where `h >= 0` is the distance to the side's fixed point, so
//! points close to `x = 1` keep the same relative precision as points close
//! to `x = 0`. On a half-branch the map reads `h -> phi(h)`; once `phi(h)`
//! exceeds the half-branch length the point has left the branch domain and
//! is re-expressed relative to the fixed point it landed next to.
//!
//! # Thaler family
//!
//! For `d` branches with tail index `alpha` and coefficients `c_j`:
//!
//! * fixed points `x_j = (j - 1) / (d - 1)`, so `x_1 = 0` and `x_d = 1`;
//! * every half-branch is `phi(h) = h + c h^p + kappa h^(p+1)` with
//!   `p = 1 + 1/alpha`; the local map is `T(x_j ± h) = x_j ± phi(h)`;
//! * a half-branch with reach `R` (distance from `x_j` to the end of `[0,1]`
//!   on that side) has maximal admissible length `L*`, the root of
//!   `L + c L^p = R`; the gap between consecutive fixed points is split
//!   between the two facing half-branches in proportion to their `L*`, and
//!   `kappa = (R - L - c L^p) / L^(p+1) >= 0` makes the branch onto;
//! * `c_j = inf` is realised as `phi(h) = h + h^2 + kappa h^3`, an
//!   indifferent point with `|Tx - x| / Psi(|x - x_j|) -> inf`.
//!
//! Coefficient sets for which some gap exceeds the sum of the two `L*` are
//! rejected.

use alloc::vec::Vec;

use thiserror::Error;

use crate::special::bisect;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MapError {
    #[error("invalid map parameters: {0}")]
    InvalidParameters(&'static str),
    #[error("all coefficients are infinite")]
    AllCoefficientsInfinite,
    #[error("coefficients too large for the documented branch family (gap {gap} between fixed points {gap} and {next})", next = gap + 1)]
    InfeasibleCoefficients { gap: usize },
    #[error("invariant density is unbounded at x = {x}")]
    UnboundedDensity { x: f64 },
    #[error("point {x} lies outside [0, 1]")]
    OutOfDomain { x: f64 },
    #[error("orbit stalled at x = {x} (time {time}): T(x) = x in working precision")]
    StallDetected { x: f64, time: u64 },
}

/// Boole's map in closed form: `x(1-x)/(1-x-x^2)` on `[0, 1/2]`, mirrored.
pub fn boole_eval(x: f64) -> f64 {
    if x <= 0.5 {
        x * (1.0 - x) / (1.0 - x - x * x)
    } else {
        1.0 - boole_eval(1.0 - x)
    }
}

/// Invariant density `x^-2 + (1-x)^-2` of Boole's map.
pub fn invariant_density_boole(x: f64) -> Result<f64, MapError> {
    if !(0.0..=1.0).contains(&x) {
        return Err(MapError::OutOfDomain { x });
    }
    if x == 0.0 || x == 1.0 {
        return Err(MapError::UnboundedDensity { x });
    }
    let y = 1.0 - x;
    Ok(1.0 / (x * x) + 1.0 / (y * y))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Points `x_j + h`.
    Right,
    /// Points `x_j - h`.
    Left,
}

impl Direction {
    #[inline]
    pub fn sign(self) -> f64 {
        match self {
            Direction::Right => 1.0,
            Direction::Left => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BranchShape {
    /// `h -> h(1-h)/(1-h-h^2)`, Boole's map seen from either fixed point.
    Boole,
    /// `h -> h + c h^p + kappa h^q`.
    Power { c: f64, p: f64, kappa: f64, q: f64 },
}

/// Leading behaviour `phi(h) - h ~ coef * h^exponent` near the fixed point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailLaw {
    pub coef: f64,
    pub exponent: f64,
}

impl TailLaw {
    /// Decrease of `u = h^-(exponent-1)` per step of the flow `h' = coef h^exponent`.
    #[inline]
    pub fn rate(&self) -> f64 {
        self.coef * (self.exponent - 1.0)
    }

    #[inline]
    pub fn to_u(&self, h: f64) -> f64 {
        libm::pow(h, -(self.exponent - 1.0))
    }

    #[inline]
    pub fn from_u(&self, u: f64) -> f64 {
        libm::pow(u, -1.0 / (self.exponent - 1.0))
    }
}

// Relative increment below which iteration switches to the flow surrogate.
const STALL_RELATIVE_INCREMENT: f64 = 1.0 / (1u64 << 30) as f64;

#[derive(Debug, Clone, PartialEq)]
pub struct HalfBranch {
    pub anchor: usize,
    pub direction: Direction,
    /// Extent of the half-branch domain measured from the fixed point.
    pub length: f64,
    /// Extent of its image on the same side, `phi(length)`.
    pub reach: f64,
    pub shape: BranchShape,
    pub tail: TailLaw,
    stall_h: f64,
}

impl HalfBranch {
    fn new(anchor: usize, direction: Direction, length: f64, reach: f64, shape: BranchShape) -> Self {
        let (tail, stall_h) = match shape {
            BranchShape::Boole => (
                TailLaw { coef: 1.0, exponent: 3.0 },
                libm::sqrt(STALL_RELATIVE_INCREMENT),
            ),
            BranchShape::Power { c, p, .. } => (
                TailLaw { coef: c, exponent: p },
                libm::pow(STALL_RELATIVE_INCREMENT / c, 1.0 / (p - 1.0)),
            ),
        };
        HalfBranch { anchor, direction, length, reach, shape, tail, stall_h }
    }

    /// Offset below which the analytic-tail policy replaces iteration.
    pub fn stall_offset(&self) -> f64 {
        self.stall_h
    }

    #[inline]
    pub fn forward(&self, h: f64) -> f64 {
        match self.shape {
            BranchShape::Boole => h + h * h * h / (1.0 - h - h * h),
            BranchShape::Power { c, p, kappa, q } => {
                h + c * libm::pow(h, p) + kappa * libm::pow(h, q)
            }
        }
    }

    /// `phi(h) - h` without cancellation.
    #[inline]
    pub fn increment(&self, h: f64) -> f64 {
        match self.shape {
            BranchShape::Boole => h * h * h / (1.0 - h - h * h),
            BranchShape::Power { c, p, kappa, q } => c * libm::pow(h, p) + kappa * libm::pow(h, q),
        }
    }

    /// `reach - phi(h)`, computed without cancellation near `h = length`.
    #[inline]
    pub fn complement(&self, h: f64) -> f64 {
        match self.shape {
            BranchShape::Boole => (1.0 - 2.0 * h) / (1.0 - h - h * h),
            BranchShape::Power { c, p, kappa, q } => {
                let l = self.length;
                (l - h) + c * pow_diff(l, h, p) + kappa * pow_diff(l, h, q)
            }
        }
    }

    pub fn derivative(&self, h: f64) -> f64 {
        match self.shape {
            BranchShape::Boole => {
                let den = 1.0 - h - h * h;
                (1.0 - 2.0 * h + 2.0 * h * h) / (den * den)
            }
            BranchShape::Power { c, p, kappa, q } => {
                1.0 + c * p * libm::pow(h, p - 1.0) + kappa * q * libm::pow(h, q - 1.0)
            }
        }
    }

    pub fn second_derivative(&self, h: f64) -> f64 {
        match self.shape {
            BranchShape::Boole => {
                let den = 1.0 - h - h * h;
                let num = 1.0 - 2.0 * h + 2.0 * h * h;
                ((-2.0 + 4.0 * h) * den + 2.0 * num * (1.0 + 2.0 * h)) / (den * den * den)
            }
            BranchShape::Power { c, p, kappa, q } => {
                c * p * (p - 1.0) * libm::pow(h, p - 2.0)
                    + kappa * q * (q - 1.0) * libm::pow(h, q - 2.0)
            }
        }
    }

    /// Inverse branch: the `h >= 0` with `phi(h) = y`.
    pub fn inverse(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        match self.shape {
            BranchShape::Boole => 2.0 * y / ((1.0 + y) + libm::sqrt(1.0 - 2.0 * y + 5.0 * y * y)),
            BranchShape::Power { c, p, kappa, q } => {
                // phi is convex and phi(y) >= y, so Newton from y decreases monotonically.
                let mut h = y;
                for _ in 0..200 {
                    let excess = (h - y) + c * libm::pow(h, p) + kappa * libm::pow(h, q);
                    let step = excess / self.derivative(h);
                    let next = h - step;
                    if !(next > 0.0) {
                        h *= 0.5;
                        continue;
                    }
                    if libm::fabs(step) <= 1e-16 * next {
                        return next;
                    }
                    h = next;
                }
                h
            }
        }
    }
}

// l^p - h^p without cancellation when h is close to l.
fn pow_diff(l: f64, h: f64, p: f64) -> f64 {
    if h <= 0.0 {
        return libm::pow(l, p);
    }
    -libm::pow(l, p) * libm::expm1(p * libm::log1p(-(l - h) / l))
}

/// Orbit point in local coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub side: usize,
    pub h: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapFamily {
    Boole,
    Thaler,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntermittentMap {
    family: MapFamily,
    alpha: f64,
    coefficients: Vec<f64>,
    partition_points: Vec<f64>,
    fixed_points: Vec<f64>,
    sides: Vec<HalfBranch>,
    // sides[k] covers [side_bounds[k], side_bounds[k+1]] in global coordinates
    side_bounds: Vec<f64>,
}

/// Build a map from the documented family; `MapFamily::Boole` is reserved for
/// `(d, alpha, c) = (2, 1/2, (1, 1))`.
pub fn make_thaler_family(
    d: usize,
    alpha: f64,
    c: &[f64],
    family: MapFamily,
) -> Result<IntermittentMap, MapError> {
    match family {
        MapFamily::Boole => {
            if d != 2 || alpha != 0.5 || c != [1.0, 1.0] {
                return Err(MapError::InvalidParameters(
                    "Boole's map requires d = 2, alpha = 1/2, c = (1, 1)",
                ));
            }
            Ok(IntermittentMap::boole())
        }
        MapFamily::Thaler => IntermittentMap::thaler(d, alpha, c),
    }
}

impl IntermittentMap {
    pub fn boole() -> Self {
        let sides = alloc::vec![
            HalfBranch::new(0, Direction::Right, 0.5, 1.0, BranchShape::Boole),
            HalfBranch::new(1, Direction::Left, 0.5, 1.0, BranchShape::Boole),
        ];
        IntermittentMap {
            family: MapFamily::Boole,
            alpha: 0.5,
            coefficients: alloc::vec![1.0, 1.0],
            partition_points: alloc::vec![0.0, 0.5, 1.0],
            fixed_points: alloc::vec![0.0, 1.0],
            sides,
            side_bounds: alloc::vec![0.0, 0.5, 1.0],
        }
    }

    pub fn thaler(d: usize, alpha: f64, c: &[f64]) -> Result<Self, MapError> {
        if d < 2 {
            return Err(MapError::InvalidParameters("need at least two branches"));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(MapError::InvalidParameters("alpha must lie in (0, 1)"));
        }
        if c.len() != d {
            return Err(MapError::InvalidParameters("one coefficient per branch required"));
        }
        if c.iter().any(|&v| !(v > 0.0)) {
            return Err(MapError::InvalidParameters("coefficients must be positive"));
        }
        if c.iter().all(|v| v.is_infinite()) {
            return Err(MapError::AllCoefficientsInfinite);
        }
        let p_main = 1.0 + 1.0 / alpha;
        let fixed_points: Vec<f64> = (0..d).map(|j| j as f64 / (d - 1) as f64).collect();

        // (anchor, direction, reach, c_eff, p)
        let mut specs = Vec::with_capacity(2 * d - 2);
        for j in 0..d {
            let (c_eff, p) = if c[j].is_finite() { (c[j], p_main) } else { (1.0, 2.0) };
            if j > 0 {
                specs.push((j, Direction::Left, fixed_points[j], c_eff, p));
            }
            if j + 1 < d {
                specs.push((j, Direction::Right, 1.0 - fixed_points[j], c_eff, p));
            }
        }
        let max_len: Vec<f64> = specs
            .iter()
            .map(|&(_, _, reach, c_eff, p)| {
                bisect(|l| l + c_eff * libm::pow(l, p) - reach, 0.0, reach, 1e-15)
                    .unwrap_or(reach)
            })
            .collect();

        let gap = 1.0 / (d - 1) as f64;
        let mut lengths = alloc::vec![0.0; specs.len()];
        for g in 0..d - 1 {
            let (r, l) = (2 * g, 2 * g + 1);
            let total = max_len[r] + max_len[l];
            if total < gap {
                return Err(MapError::InfeasibleCoefficients { gap: g + 1 });
            }
            lengths[r] = gap * max_len[r] / total;
            lengths[l] = gap - lengths[r];
        }

        let mut sides = Vec::with_capacity(specs.len());
        for (k, &(anchor, direction, reach, c_eff, p)) in specs.iter().enumerate() {
            let len = lengths[k];
            let q = p + 1.0;
            let kappa = ((reach - len - c_eff * libm::pow(len, p)) / libm::pow(len, q)).max(0.0);
            sides.push(HalfBranch::new(
                anchor,
                direction,
                len,
                reach,
                BranchShape::Power { c: c_eff, p, kappa, q },
            ));
        }

        let mut side_bounds = Vec::with_capacity(sides.len() + 1);
        side_bounds.push(0.0);
        let mut partition_points = alloc::vec![0.0];
        for g in 0..d - 1 {
            let a = fixed_points[g] + lengths[2 * g];
            side_bounds.push(a);
            side_bounds.push(fixed_points[g + 1]);
            partition_points.push(a);
        }
        side_bounds.pop();
        side_bounds.push(1.0);
        partition_points.push(1.0);

        Ok(IntermittentMap {
            family: MapFamily::Thaler,
            alpha,
            coefficients: c.to_vec(),
            partition_points,
            fixed_points,
            sides,
            side_bounds,
        })
    }

    pub fn family(&self) -> MapFamily {
        self.family
    }

    pub fn branch_count(&self) -> usize {
        self.fixed_points.len()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// `0 = a_0 < a_1 < ... < a_d = 1`.
    pub fn partition_points(&self) -> &[f64] {
        &self.partition_points
    }

    pub fn fixed_points(&self) -> &[f64] {
        &self.fixed_points
    }

    pub fn sides(&self) -> &[HalfBranch] {
        &self.sides
    }

    pub fn side(&self, k: usize) -> &HalfBranch {
        &self.sides[k]
    }

    /// `Psi(s) = s^(1 + 1/alpha)`.
    pub fn psi(&self, s: f64) -> f64 {
        libm::pow(s, 1.0 + 1.0 / self.alpha)
    }

    /// Global interval `[lo, hi]` covered by side `k`.
    pub fn side_span(&self, k: usize) -> (f64, f64) {
        (self.side_bounds[k], self.side_bounds[k + 1])
    }

    fn side_index(&self, x: f64) -> usize {
        let last = self.sides.len() - 1;
        // J_j = [a_{j-1}, a_j); Boole's map puts 1/2 in the left branch.
        let k = if self.family == MapFamily::Boole {
            self.side_bounds[1..].partition_point(|&b| b < x)
        } else {
            self.side_bounds[1..].partition_point(|&b| b <= x)
        };
        k.min(last)
    }

    pub fn locate(&self, x: f64) -> Result<Point, MapError> {
        if !(0.0..=1.0).contains(&x) {
            return Err(MapError::OutOfDomain { x });
        }
        let side = self.side_index(x);
        let anchor = self.fixed_points[self.sides[side].anchor];
        Ok(Point { side, h: libm::fabs(x - anchor) })
    }

    #[inline]
    pub fn to_global(&self, p: Point) -> f64 {
        let side = &self.sides[p.side];
        let anchor = self.fixed_points[side.anchor];
        match side.direction {
            Direction::Right => anchor + p.h,
            Direction::Left => {
                if anchor == 1.0 {
                    1.0 - p.h
                } else {
                    anchor - p.h
                }
            }
        }
    }

    /// One application of the map in local coordinates.
    #[inline]
    pub fn step_point(&self, p: Point) -> Point {
        let side = &self.sides[p.side];
        let y = side.forward(p.h);
        if y <= side.length {
            return Point { side: p.side, h: y };
        }
        self.land(p, side, y)
    }

    #[cold]
    fn land(&self, p: Point, side: &HalfBranch, y: f64) -> Point {
        // distance from the end of [0,1] the image points towards
        let far = side.complement(p.h).max(0.0);
        let anchor = self.fixed_points[side.anchor];
        match side.direction {
            Direction::Right => {
                let last = self.sides.len() - 1;
                let g = if far < 0.5 { 1.0 - far } else { anchor + y };
                let k = self.side_index(g).max(p.side + 1).min(last);
                let h = if k == last {
                    far
                } else {
                    libm::fabs(g - self.fixed_points[self.sides[k].anchor])
                };
                Point { side: k, h }
            }
            Direction::Left => {
                let g = if far < 0.5 { far } else { anchor - y };
                let k = self.side_index(g).min(p.side.saturating_sub(1));
                let h = if k == 0 {
                    far
                } else {
                    libm::fabs(g - self.fixed_points[self.sides[k].anchor])
                };
                Point { side: k, h }
            }
        }
    }

    /// Evaluate `T` at a global coordinate.
    pub fn eval(&self, x: f64) -> Result<f64, MapError> {
        Ok(self.to_global(self.step_point(self.locate(x)?)))
    }

    /// `T'(x)` at a local point.
    pub fn derivative_at(&self, p: Point) -> f64 {
        self.sides[p.side].derivative(p.h)
    }

    /// `T''(x)` at a local point.
    pub fn second_derivative_at(&self, p: Point) -> f64 {
        let side = &self.sides[p.side];
        side.direction.sign() * side.second_derivative(p.h)
    }

    /// Inverse branch `f_j` (0-based `j`) evaluated at a global `y`.
    pub fn inverse_branch(&self, j: usize, y: f64) -> Result<f64, MapError> {
        if !(0.0..=1.0).contains(&y) {
            return Err(MapError::OutOfDomain { x: y });
        }
        if j >= self.branch_count() {
            return Err(MapError::InvalidParameters("branch index out of range"));
        }
        let x_j = self.fixed_points[j];
        let k = self
            .sides
            .iter()
            .position(|s| {
                s.anchor == j
                    && match s.direction {
                        Direction::Right => y >= x_j,
                        Direction::Left => y < x_j || (y == x_j && j == self.branch_count() - 1),
                    }
            })
            .ok_or(MapError::InvalidParameters("no half-branch covers this value"))?;
        let side = &self.sides[k];
        let h = side.inverse(libm::fabs(y - x_j));
        Ok(self.to_global(Point { side: k, h }))
    }

    /// Derivative of the inverse branch `f_j` at `y`.
    pub fn inverse_branch_derivative(&self, j: usize, y: f64) -> Result<f64, MapError> {
        let x = self.inverse_branch(j, y)?;
        let p = self.locate(x)?;
        // locate may assign a shared boundary to the neighbouring branch
        let p = if self.sides[p.side].anchor == j {
            p
        } else {
            let k = self.sides.iter().position(|s| s.anchor == j).unwrap_or(p.side);
            Point { side: k, h: libm::fabs(x - self.fixed_points[j]) }
        };
        Ok(1.0 / self.derivative_at(p))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StallPolicy {
    /// Fail with [`MapError::StallDetected`] when `T(x) = x` at a non-fixed point.
    Error,
    /// Replace iteration close to a fixed point by the flow `h' = c h^p`.
    AnalyticTail,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitConfig {
    pub x0: f64,
    pub n_steps: u64,
    pub stall_policy: StallPolicy,
}

#[derive(Debug, Clone, Copy)]
struct Surrogate {
    tail: TailLaw,
    u0: f64,
    k: u64,
    exit: u64,
}

impl Surrogate {
    fn position(&self, k: u64) -> f64 {
        let u = (self.u0 - k as f64 * self.tail.rate()).max(f64::MIN_POSITIVE);
        self.tail.from_u(u)
    }
}

/// Deterministic orbit `x, Tx, T^2 x, ...`.
#[derive(Debug, Clone)]
pub struct Orbit<'a> {
    map: &'a IntermittentMap,
    point: Point,
    surrogate: Option<Surrogate>,
    time: u64,
    policy: StallPolicy,
}

impl<'a> Orbit<'a> {
    pub fn new(map: &'a IntermittentMap, x0: f64, policy: StallPolicy) -> Result<Self, MapError> {
        Ok(Self::from_point(map, map.locate(x0)?, policy))
    }

    pub fn from_point(map: &'a IntermittentMap, point: Point, policy: StallPolicy) -> Self {
        Orbit { map, point, surrogate: None, time: 0, policy }
    }

    pub fn map(&self) -> &'a IntermittentMap {
        self.map
    }

    pub fn time(&self) -> u64 {
        self.time
    }

    /// True while the flow surrogate stands in for iteration.
    pub fn in_analytic_tail(&self) -> bool {
        self.surrogate.is_some()
    }

    /// Steps left before the flow surrogate hands back to iteration.
    pub fn analytic_tail_remaining(&self) -> Option<u64> {
        self.surrogate.map(|s| s.exit - s.k)
    }

    /// Advance up to `max` steps inside the analytic tail; returns the number
    /// of steps taken (0 outside the tail).
    #[inline]
    pub fn skip_analytic_tail(&mut self, max: u64) -> u64 {
        let Some(s) = self.surrogate.as_mut() else {
            return 0;
        };
        let n = max.min(s.exit - s.k);
        s.k += n;
        self.time += n;
        if s.k >= s.exit {
            self.point.h = s.position(s.exit);
            self.surrogate = None;
        }
        n
    }

    /// Jump to the end of the analytic tail; returns the number of steps taken.
    pub fn finish_analytic_tail(&mut self) -> u64 {
        match self.surrogate.take() {
            Some(s) => {
                let n = s.exit - s.k;
                self.point.h = s.position(s.exit);
                self.time += n;
                n
            }
            None => 0,
        }
    }

    #[inline]
    pub fn side(&self) -> usize {
        self.point.side
    }

    /// Current point; during the analytic tail this is the flow position.
    pub fn point(&self) -> Point {
        match &self.surrogate {
            Some(s) => Point { side: self.point.side, h: s.position(s.k) },
            None => self.point,
        }
    }

    /// Distance to the fixed point, valid only outside the analytic tail.
    #[inline]
    pub fn raw_offset(&self) -> f64 {
        self.point.h
    }

    pub fn x(&self) -> f64 {
        self.map.to_global(self.point())
    }

    #[inline]
    pub fn step(&mut self) -> Result<(), MapError> {
        if let Some(s) = self.surrogate.as_mut() {
            s.k += 1;
            if s.k >= s.exit {
                self.point.h = s.position(s.exit);
                self.surrogate = None;
            }
            self.time += 1;
            return Ok(());
        }
        let h = self.point.h;
        let side = &self.map.sides[self.point.side];
        if h < side.stall_h && self.policy == StallPolicy::AnalyticTail && h > 0.0 {
            let tail = side.tail;
            let u0 = tail.to_u(h);
            let u_exit = tail.to_u(side.stall_h);
            let exit = libm::ceil((u0 - u_exit) / tail.rate());
            if exit > 1.0 {
                let exit = if exit >= u64::MAX as f64 { u64::MAX } else { exit as u64 };
                self.surrogate = Some(Surrogate { tail, u0, k: 1, exit });
                self.time += 1;
                return Ok(());
            }
        }
        let next = self.map.step_point(self.point);
        if next == self.point && h > 0.0 {
            return Err(MapError::StallDetected { x: self.map.to_global(self.point), time: self.time });
        }
        self.point = next;
        self.time += 1;
        Ok(())
    }

    /// Iterator over `x_0, x_1, ..., x_n` in global coordinates.
    pub fn points(self, n: u64) -> OrbitPoints<'a> {
        OrbitPoints { orbit: self, remaining: n + 1, started: false, failed: false }
    }
}

pub struct OrbitPoints<'a> {
    orbit: Orbit<'a>,
    remaining: u64,
    started: bool,
    failed: bool,
}

impl Iterator for OrbitPoints<'_> {
    type Item = Result<f64, MapError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.remaining == 0 || self.failed {
            return None;
        }
        self.remaining -= 1;
        if !self.started {
            self.started = true;
            return Some(Ok(self.orbit.x()));
        }
        match self.orbit.step() {
            Ok(()) => Some(Ok(self.orbit.x())),
            Err(e) => {
                self.failed = true;
                Some(Err(e))
            }
        }
    }
}

/// Orbit `x_0, ..., x_n` of `config` as global coordinates.
pub fn iterate(map: &IntermittentMap, config: &OrbitConfig) -> Result<Vec<f64>, MapError> {
    let mut orbit = Orbit::new(map, config.x0, config.stall_policy)?;
    let mut out = Vec::with_capacity(config.n_steps as usize + 1);
    out.push(orbit.x());
    for _ in 0..config.n_steps {
        orbit.step()?;
        out.push(orbit.x());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boole_values() {
        assert_eq!(boole_eval(0.0), 0.0);
        assert_eq!(boole_eval(1.0), 1.0);
        assert_eq!(boole_eval(0.5), 1.0);
        assert!((boole_eval(0.3) - 21.0 / 61.0).abs() < 1e-15);
    }

    #[test]
    fn local_step_matches_closed_form() {
        let map = IntermittentMap::boole();
        for i in 1..1000 {
            let x = i as f64 / 1000.0;
            let y = map.eval(x).unwrap();
            assert!((y - boole_eval(x)).abs() < 1e-13, "x={x} {y} {}", boole_eval(x));
        }
        assert_eq!(map.eval(0.5).unwrap(), 1.0);
    }

    #[test]
    fn density_values() {
        assert_eq!(invariant_density_boole(0.5).unwrap(), 8.0);
        assert!(matches!(invariant_density_boole(0.0), Err(MapError::UnboundedDensity { .. })));
        assert!(matches!(invariant_density_boole(1.0), Err(MapError::UnboundedDensity { .. })));
    }

    #[test]
    fn transfer_operator_fixes_density() {
        let map = IntermittentMap::boole();
        for i in 1..1000 {
            let y = i as f64 / 1000.0;
            let mut s = 0.0;
            for j in 0..2 {
                let x = map.inverse_branch(j, y).unwrap();
                s += invariant_density_boole(x).unwrap() * map.inverse_branch_derivative(j, y).unwrap();
            }
            let h = invariant_density_boole(y).unwrap();
            assert!((s - h).abs() < 1e-9 * h.max(1.0), "y={y} {s} {h}");
        }
    }

    #[test]
    fn boole_orbit_from_half() {
        let map = IntermittentMap::boole();
        let cfg = OrbitConfig { x0: 0.5, n_steps: 4, stall_policy: StallPolicy::Error };
        let orbit = iterate(&map, &cfg).unwrap();
        assert_eq!(orbit, alloc::vec![0.5, 1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn boole_tail_law() {
        let map = IntermittentMap::boole();
        let mut h = 1e-2;
        while h > 1e-6 {
            for side in map.sides() {
                let r = side.increment(h) / (h * h * h);
                assert!((r - 1.0).abs() < 2.0 * h, "h={h} r={r}");
            }
            if h > 1e-3 {
                let r = (map.eval(h).unwrap() - h) / (h * h * h);
                assert!((r - 1.0).abs() < 2.0 * h);
                let r1 = (1.0 - h - map.eval(1.0 - h).unwrap()) / (h * h * h);
                assert!((r1 - 1.0).abs() < 2.0 * h);
            }
            h *= 0.5;
        }
    }

    #[test]
    fn boole_stall_detected_and_bridged() {
        let map = IntermittentMap::boole();
        let err = iterate(&map, &OrbitConfig { x0: 1e-9, n_steps: 10, stall_policy: StallPolicy::Error });
        assert!(matches!(err, Err(MapError::StallDetected { .. })));
        let mut orbit = Orbit::new(&map, 1e-9, StallPolicy::AnalyticTail).unwrap();
        orbit.step().unwrap();
        let remaining = orbit.analytic_tail_remaining().unwrap();
        let h_exit = map.side(0).stall_offset();
        // flow h' = h^3 takes (h0^-2 - h1^-2) / 2 steps
        let want = (1e18 - h_exit.powi(-2)) / 2.0;
        assert!(((remaining + 1) as f64 / want - 1.0).abs() < 1e-9);
        let mut probe = orbit.clone();
        assert_eq!(probe.finish_analytic_tail(), remaining);
        assert!(!probe.in_analytic_tail());
        assert!((probe.x() / h_exit - 1.0).abs() < 1e-6, "{}", probe.x());
        probe.step().unwrap();
        assert!(probe.x() > h_exit);
    }

    #[test]
    fn thaler_family_is_consistent() {
        for &(d, alpha, ref c) in &[
            (3usize, 0.5, alloc::vec![1.0, 2.0, 0.5]),
            (4, 0.7, alloc::vec![0.3, 1.0, 1.0, 0.8]),
            (2, 0.3, alloc::vec![1.0, f64::INFINITY]),
        ] {
            let map = make_thaler_family(d, alpha, c, MapFamily::Thaler).unwrap();
            for (k, side) in map.sides().iter().enumerate() {
                let y = side.forward(side.length);
                assert!((y - side.reach).abs() < 1e-12, "side {k}: {y} vs {}", side.reach);
                assert!(side.complement(side.length).abs() < 1e-12);
                for i in 1..50 {
                    let h = side.length * i as f64 / 50.0;
                    assert!((side.inverse(side.forward(h)) - h).abs() < 1e-12);
                    assert!((side.complement(h) - (side.reach - side.forward(h))).abs() < 1e-12);
                }
            }
            // onto and monotone
            for j in 0..d {
                let mut prev = -1.0;
                for i in 0..=200 {
                    let y = i as f64 / 200.0;
                    let x = map.inverse_branch(j, y).unwrap();
                    assert!(x > prev);
                    prev = x;
                    if i > 0 && i < 200 {
                        assert!((map.eval(x).unwrap() - y).abs() < 1e-12, "j={j} y={y}");
                    }
                }
            }
            // |Tx - x| / (c_j Psi(h)) -> 1 along a geometric grid
            for side in map.sides() {
                let cj = c[side.anchor];
                if !cj.is_finite() {
                    continue;
                }
                let mut prev = f64::INFINITY;
                let mut h = 1e-2;
                while h > 1e-8 {
                    let dev = (side.increment(h) / (cj * map.psi(h)) - 1.0).abs();
                    assert!(dev <= prev * (1.0 + 1e-9));
                    prev = dev;
                    h *= 0.5;
                }
                assert!(prev < 1e-3, "anchor {} dev {prev}", side.anchor);
            }
        }
    }

    #[test]
    fn thaler_rejects_bad_parameters() {
        assert!(matches!(
            make_thaler_family(3, 0.5, &[f64::INFINITY; 3], MapFamily::Thaler),
            Err(MapError::AllCoefficientsInfinite)
        ));
        assert!(matches!(
            make_thaler_family(2, 0.5, &[200.0, 200.0], MapFamily::Thaler),
            Err(MapError::InfeasibleCoefficients { .. })
        ));
        assert!(make_thaler_family(3, 0.5, &[1.0; 3], MapFamily::Boole).is_err());
    }

    #[test]
    fn orbit_stays_in_unit_interval() {
        let map = IntermittentMap::boole();
        let mut orbit = Orbit::new(&map, 0.1, StallPolicy::AnalyticTail).unwrap();
        let mut inside = 0u64;
        let n = 1_000_000;
        for _ in 0..n {
            orbit.step().unwrap();
            let x = orbit.x();
            assert!((0.0..=1.0).contains(&x));
            if (0.1..=0.9).contains(&x) {
                inside += 1;
            }
        }
        assert!((inside as f64) / (n as f64) < 0.05);
    }
}
