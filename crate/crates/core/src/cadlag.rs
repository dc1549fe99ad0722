//! Nondecreasing càdlàg functions on `[0, inf)`.
//!
//! A [`StepFunction`] is piecewise linear: piece `k` starts at `starts[k]`
//! with value `values[k]` and grows with slope `slopes[k]` until the next
//! start, where it may jump up. With all slopes zero it is a pure step
//! function; a positive final slope gives an element of `D_0`. A function may
//! be known only up to a horizon `H` (censored), in which case evaluations at
//! or beyond `H` fail instead of extrapolating.
//!
//! Integer-valued step functions with integer jump times are represented
//! exactly, so the discrete identities checked here hold without tolerance.

use alloc::vec::Vec;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CadlagError {
    #[error("function is bounded, right-continuous inverse is not proper")]
    NotProper,
    #[error("t = {t} lies beyond the known horizon {horizon}")]
    BeyondHorizon { t: f64, horizon: f64 },
    #[error("malformed step function: {0}")]
    Malformed(&'static str),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction {
    starts: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
    end: Option<f64>,
}

impl StepFunction {
    pub fn new(starts: Vec<f64>, values: Vec<f64>, slopes: Vec<f64>, end: Option<f64>) -> Result<Self, CadlagError> {
        let n = starts.len();
        if n == 0 || values.len() != n || slopes.len() != n {
            return Err(CadlagError::Malformed("piece arrays must be nonempty and of equal length"));
        }
        if starts[0] != 0.0 {
            return Err(CadlagError::Malformed("first piece must start at 0"));
        }
        if values[0] < 0.0 {
            return Err(CadlagError::Malformed("values must be nonnegative"));
        }
        for k in 0..n {
            if !(slopes[k] >= 0.0) || !slopes[k].is_finite() {
                return Err(CadlagError::Malformed("slopes must be finite and nonnegative"));
            }
            if k + 1 < n {
                if !(starts[k + 1] > starts[k]) {
                    return Err(CadlagError::Malformed("piece starts must increase strictly"));
                }
                let left = values[k] + slopes[k] * (starts[k + 1] - starts[k]);
                if values[k + 1] < left {
                    return Err(CadlagError::Malformed("function must be nondecreasing"));
                }
            }
        }
        if let Some(h) = end {
            if h < starts[n - 1] {
                return Err(CadlagError::Malformed("horizon precedes last piece"));
            }
        }
        Ok(StepFunction { starts, values, slopes, end })
    }

    /// Pure step function: `initial` on `[0, t_1)`, then `v_k` from `t_k` on.
    pub fn from_jumps(initial: f64, jumps: &[(f64, f64)]) -> Result<Self, CadlagError> {
        let mut starts = alloc::vec![0.0];
        let mut values = alloc::vec![initial];
        for &(t, v) in jumps {
            if t == 0.0 && starts.len() == 1 {
                values[0] = v;
                continue;
            }
            starts.push(t);
            values.push(v);
        }
        let slopes = alloc::vec![0.0; starts.len()];
        Self::new(starts, values, slopes, None)
    }

    /// `values[k]` on `[k, k + 1)`, known on `[0, values.len())`.
    pub fn integer_steps(values: &[f64]) -> Self {
        if values.is_empty() {
            return StepFunction { starts: alloc::vec![0.0], values: alloc::vec![0.0], slopes: alloc::vec![0.0], end: Some(0.0) };
        }
        let starts = (0..values.len()).map(|k| k as f64).collect();
        StepFunction {
            starts,
            values: values.to_vec(),
            slopes: alloc::vec![0.0; values.len()],
            end: Some(values.len() as f64),
        }
        .merged()
    }

    /// Counting process `u -> #{k in times : k <= u}`, known on `[0, horizon)`.
    pub fn counting(times: &[f64], horizon: Option<f64>) -> Result<Self, CadlagError> {
        let jumps: Vec<(f64, f64)> = times.iter().enumerate().map(|(i, &t)| (t, (i + 1) as f64)).collect();
        let mut f = Self::from_jumps(0.0, &jumps)?;
        f.end = horizon;
        Ok(f)
    }

    pub fn identity() -> Self {
        Self::linear(1.0)
    }

    pub fn linear(slope: f64) -> Self {
        StepFunction { starts: alloc::vec![0.0], values: alloc::vec![0.0], slopes: alloc::vec![slope], end: None }
    }

    /// Restrict knowledge to `[0, horizon)`.
    pub fn with_horizon(mut self, horizon: f64) -> Self {
        let h = match self.end {
            Some(e) => e.min(horizon),
            None => horizon,
        };
        let keep = self.starts.partition_point(|&s| s < h).max(1);
        self.starts.truncate(keep);
        self.values.truncate(keep);
        self.slopes.truncate(keep);
        self.end = Some(h.max(self.starts[keep - 1]));
        self
    }

    /// Replace the slope of the final piece (linear growth at infinity).
    pub fn with_tail_slope(mut self, slope: f64) -> Self {
        if let Some(s) = self.slopes.last_mut() {
            *s = slope.max(0.0);
        }
        self
    }

    pub fn horizon(&self) -> Option<f64> {
        self.end
    }

    pub fn piece_count(&self) -> usize {
        self.starts.len()
    }

    pub fn is_pure_step(&self) -> bool {
        self.slopes.iter().all(|&s| s == 0.0)
    }

    /// Discontinuities `(time, size)`.
    pub fn jumps(&self) -> Vec<(f64, f64)> {
        (1..self.starts.len())
            .filter_map(|k| {
                let size = self.values[k] - self.left_end(k - 1);
                (size > 0.0).then_some((self.starts[k], size))
            })
            .collect()
    }

    #[inline]
    fn piece(&self, t: f64) -> usize {
        self.starts.partition_point(|&s| s <= t).saturating_sub(1)
    }

    // left limit at the end of piece k (the next start, or the horizon)
    fn left_end(&self, k: usize) -> f64 {
        match self.piece_end(k) {
            Some(b) => self.values[k] + self.slopes[k] * (b - self.starts[k]),
            None => {
                if self.slopes[k] > 0.0 {
                    f64::INFINITY
                } else {
                    self.values[k]
                }
            }
        }
    }

    fn piece_end(&self, k: usize) -> Option<f64> {
        if k + 1 < self.starts.len() {
            Some(self.starts[k + 1])
        } else {
            self.end
        }
    }

    fn check(&self, t: f64) -> Result<(), CadlagError> {
        match self.end {
            Some(h) if t >= h => Err(CadlagError::BeyondHorizon { t, horizon: h }),
            _ => Ok(()),
        }
    }

    #[inline]
    fn value_in(&self, k: usize, t: f64) -> f64 {
        let s = self.slopes[k];
        if s == 0.0 {
            self.values[k]
        } else {
            self.values[k] + s * (t - self.starts[k])
        }
    }

    pub fn eval(&self, t: f64) -> Result<f64, CadlagError> {
        let t = t.max(0.0);
        self.check(t)?;
        Ok(self.value_in(self.piece(t), t))
    }

    /// `x(t-)`, with `x(0-) = x(0)`.
    pub fn left_limit(&self, t: f64) -> Result<f64, CadlagError> {
        if t <= 0.0 {
            return self.eval(0.0);
        }
        if let Some(h) = self.end {
            if t > h {
                return Err(CadlagError::BeyondHorizon { t, horizon: h });
            }
        }
        let k = self.starts.partition_point(|&s| s < t).saturating_sub(1);
        Ok(self.value_in(k, t))
    }

    /// `inf {s > 0 : x(s) > t}` at a single point.
    pub fn inverse_at(&self, t: f64) -> Result<f64, CadlagError> {
        if self.values[0] > t {
            return Ok(0.0);
        }
        let k = self.values.partition_point(|&v| v <= t) - 1;
        let w = self.left_end(k);
        if self.slopes[k] > 0.0 && t < w {
            return Ok(self.starts[k] + (t - self.values[k]) / self.slopes[k]);
        }
        if k + 1 < self.starts.len() {
            return Ok(self.starts[k + 1]);
        }
        match self.end {
            None => Err(CadlagError::NotProper),
            Some(h) => Err(CadlagError::BeyondHorizon { t, horizon: w.min(h.max(w)) }),
        }
    }

    /// Right-continuous inverse `s -> inf {t > 0 : x(t) > s}`.
    pub fn rc_inverse(&self) -> Result<StepFunction, CadlagError> {
        let n = self.starts.len();
        if self.end.is_none() && self.slopes[n - 1] == 0.0 {
            return Err(CadlagError::NotProper);
        }
        let mut out = Builder::default();
        if self.values[0] > 0.0 {
            out.push(0.0, 0.0, 0.0);
        }
        let mut out_end = None;
        for k in 0..n {
            let a = self.starts[k];
            let v = self.values[k];
            let sigma = self.slopes[k];
            let w = self.left_end(k);
            if sigma > 0.0 {
                out.push(v, a, 1.0 / sigma);
            }
            if k + 1 < n {
                let b = self.starts[k + 1];
                if self.values[k + 1] > w || sigma == 0.0 {
                    out.push(w, b, 0.0);
                }
            } else if self.end.is_some() {
                out_end = Some(w);
            }
        }
        out.finish(out_end)
    }

    /// `G(t) = sup {x(s) : x(s) <= t}` (closure of the range, `sup {} = 0`).
    pub fn g_op(&self, t: f64) -> Result<f64, CadlagError> {
        if self.values[0] > t {
            return Ok(0.0);
        }
        let k = self.values.partition_point(|&v| v <= t) - 1;
        let w = self.left_end(k);
        let g = if self.slopes[k] > 0.0 { w.min(t) } else { self.values[k] };
        if g == t || k + 1 < self.starts.len() || self.end.is_none() {
            return Ok(g);
        }
        Err(CadlagError::BeyondHorizon { t, horizon: w })
    }

    /// `D(t) = inf {x(s) : x(s) > t}` (`inf {} = inf`).
    pub fn d_op(&self, t: f64) -> Result<f64, CadlagError> {
        if self.values[0] > t {
            return Ok(self.values[0]);
        }
        let k = self.values.partition_point(|&v| v <= t) - 1;
        let w = self.left_end(k);
        if self.slopes[k] > 0.0 && t < w {
            return Ok(t);
        }
        if k + 1 < self.starts.len() {
            return Ok(self.values[k + 1]);
        }
        match self.end {
            None => Ok(f64::INFINITY),
            Some(_) => Err(CadlagError::BeyondHorizon { t, horizon: w }),
        }
    }

    /// `self(inner(u))` for a nondecreasing `inner`.
    pub fn compose(&self, inner: &StepFunction) -> StepFunction {
        let mut out = Builder::default();
        let mut out_end = inner.end;
        let y_end = self.end.unwrap_or(f64::INFINITY);
        'pieces: for k in 0..inner.starts.len() {
            let a = inner.starts[k];
            let v = inner.values[k];
            let sigma = inner.slopes[k];
            if v >= y_end {
                out_end = Some(a);
                break;
            }
            let i0 = self.piece(v);
            if sigma == 0.0 {
                out.push(a, self.value_in(i0, v), 0.0);
                continue;
            }
            let w = inner.left_end(k);
            out.push(a, self.value_in(i0, v), self.slopes[i0] * sigma);
            let mut i = i0 + 1;
            while i < self.starts.len() && self.starts[i] < w {
                let u = a + (self.starts[i] - v) / sigma;
                out.push(u, self.values[i], self.slopes[i] * sigma);
                i += 1;
            }
            if y_end < w {
                let u = a + (y_end - v) / sigma;
                out_end = Some(out_end.map_or(u, |e| e.min(u)));
                break 'pieces;
            }
        }
        out.finish(out_end).expect("composition of nondecreasing functions")
    }

    /// Pointwise sum.
    pub fn add(&self, other: &StepFunction) -> StepFunction {
        let end = match (self.end, other.end) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, None) => a,
            (None, b) => b,
        };
        let mut times: Vec<f64> = self.starts.iter().chain(other.starts.iter()).copied().collect();
        times.sort_by(f64::total_cmp);
        times.dedup();
        let mut out = Builder::default();
        for &t in &times {
            if end.is_some_and(|e| t >= e) && t > 0.0 {
                break;
            }
            let (i, j) = (self.piece(t), other.piece(t));
            out.push(t, self.value_in(i, t) + other.value_in(j, t), self.slopes[i] + other.slopes[j]);
        }
        out.finish(end).expect("sum of nondecreasing functions")
    }

    // drop breakpoints where nothing changes
    fn merged(self) -> Self {
        let mut out = Builder::default();
        for k in 0..self.starts.len() {
            out.push(self.starts[k], self.values[k], self.slopes[k]);
        }
        out.finish(self.end).expect("input was valid")
    }
}

#[derive(Default)]
struct Builder {
    starts: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl Builder {
    fn push(&mut self, start: f64, value: f64, slope: f64) {
        if let Some(&last) = self.starts.last() {
            if start <= last {
                // a later piece at the same point wins (right-continuity)
                let n = self.starts.len();
                self.values[n - 1] = value.max(if n >= 2 { self.values[n - 2] } else { 0.0 });
                self.slopes[n - 1] = slope;
                return;
            }
            let n = self.starts.len();
            let left = self.values[n - 1] + self.slopes[n - 1] * (start - last);
            if slope == self.slopes[n - 1] && value == left {
                return;
            }
            self.starts.push(start);
            self.values.push(value.max(left));
            self.slopes.push(slope);
        } else {
            self.starts.push(start);
            self.values.push(value);
            self.slopes.push(slope);
        }
    }

    fn finish(self, end: Option<f64>) -> Result<StepFunction, CadlagError> {
        if self.starts.is_empty() {
            return Ok(StepFunction {
                starts: alloc::vec![0.0],
                values: alloc::vec![0.0],
                slopes: alloc::vec![0.0],
                end: Some(0.0),
            });
        }
        let last = *self.starts.last().unwrap_or(&0.0);
        StepFunction::new(self.starts, self.values, self.slopes, end.map(|e| e.max(last)))
    }
}

/// `y(x^-1(t))`.
pub fn compose_inverse(y: &StepFunction, x: &StepFunction, t: f64) -> Result<f64, CadlagError> {
    y.eval(x.inverse_at(t)?)
}

/// Outcome of the discrete Williams identity audit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct WilliamsReport {
    pub checked: u64,
    pub violations: u64,
    /// Grid points outside the range covered by the finite orbit.
    pub skipped: u64,
}

impl WilliamsReport {
    pub fn passed(&self) -> bool {
        self.violations == 0 && self.checked > 0
    }
}

/// Check `S_{A_j}^-1(t) = floor(t+1) + sum_{i != j} eta_i(eta_j^-1(t)) + eta_j^-1(t)`
/// and `phi(t) = floor(t+1) + sum_i eta_i(t)` exactly on `t_grid`.
///
/// `s_a[j]` are the occupation counts of the rays computed directly from the
/// orbit; `eta` and `phi` come from its excursion trace.
pub fn williams_discrete_check(
    eta: &[StepFunction],
    phi: &StepFunction,
    s_a: &[StepFunction],
    t_grid: &[f64],
) -> WilliamsReport {
    let mut report = WilliamsReport::default();
    for &t in t_grid {
        let base = libm::floor(t + 1.0);
        for j in 0..eta.len() {
            let lhs = s_a[j].inverse_at(t);
            let rhs = eta[j].inverse_at(t).and_then(|r| {
                let mut acc = base + r;
                for (i, e) in eta.iter().enumerate() {
                    if i != j {
                        acc += e.eval(r)?;
                    }
                }
                Ok(acc)
            });
            match (lhs, rhs) {
                (Ok(l), Ok(r)) => {
                    report.checked += 1;
                    if l != r {
                        report.violations += 1;
                    }
                }
                _ => report.skipped += 1,
            }
        }
        let lhs = phi.eval(t);
        let rhs: Result<f64, CadlagError> = eta.iter().try_fold(base, |acc, e| Ok(acc + e.eval(t)?));
        match (lhs, rhs) {
            (Ok(l), Ok(r)) => {
                report.checked += 1;
                if l != r {
                    report.violations += 1;
                }
            }
            _ => report.skipped += 1,
        }
    }
    report
}

/// Upper bound on the Skorokhod J1 distance between `x` and `y` on
/// `[0, horizon]`.
///
/// Time changes are restricted to piecewise-linear maps whose breakpoints
/// send jumps of `x` onto jumps of `y` (an order-preserving matching found by
/// dynamic programming); after the last matched pair the time change has
/// slope one. The cost of a time change is the larger of its maximal
/// log-slope and the sup distance `min(1, |x(u) - y(lambda(u))|)`. Runs in
/// `O((m n)^2 (m + n))` for `m`, `n` jumps.
pub fn j1_upper_bound(x: &StepFunction, y: &StepFunction, horizon: f64) -> Result<f64, CadlagError> {
    x.check(horizon * (1.0 - 1e-15))?;
    y.check(horizon * (1.0 - 1e-15))?;
    let jx: Vec<f64> = x.jumps().into_iter().map(|j| j.0).filter(|&t| t <= horizon).collect();
    let jy: Vec<f64> = y.jumps().into_iter().map(|j| j.0).filter(|&t| t <= horizon).collect();

    // anchors: 0 = origin, then pairs (i, j)
    let mut nodes: Vec<(f64, f64)> = alloc::vec![(0.0, 0.0)];
    for &a in &jx {
        for &b in &jy {
            nodes.push((a, b));
        }
    }
    let mut best = alloc::vec![f64::INFINITY; nodes.len()];
    best[0] = 0.0;
    let mut answer = f64::INFINITY;
    for p in 0..nodes.len() {
        if !best[p].is_finite() {
            continue;
        }
        let (ta, sa) = nodes[p];
        // finish with slope one
        let tail = segment_cost(x, y, ta, sa, horizon, sa + (horizon - ta))?;
        answer = answer.min(best[p].max(tail));
        for q in p + 1..nodes.len() {
            let (tb, sb) = nodes[q];
            if !(tb > ta && sb > sa) {
                continue;
            }
            let slope = libm::fabs(libm::log((sb - sa) / (tb - ta)));
            let cand = best[p].max(slope);
            if cand >= best[q] || cand >= answer {
                continue;
            }
            let c = cand.max(segment_cost(x, y, ta, sa, tb, sb)?);
            if c < best[q] {
                best[q] = c;
            }
        }
    }
    Ok(answer.min(1.0))
}

// sup over u in [ta, tb) of min(1, |x(u) - y(lambda(u))|), lambda linear from (ta, sa) to (tb, sb)
fn segment_cost(x: &StepFunction, y: &StepFunction, ta: f64, sa: f64, tb: f64, sb: f64) -> Result<f64, CadlagError> {
    let rate = (sb - sa) / (tb - ta);
    let lam = |u: f64| sa + rate * (u - ta);
    let mut pts: Vec<f64> = alloc::vec![ta, tb];
    pts.extend(x.starts.iter().copied().filter(|&s| s > ta && s < tb));
    pts.extend(y.starts.iter().copied().filter(|&s| s > sa && s < sb).map(|s| ta + (s - sa) / rate));
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let y_horizon = y.end.unwrap_or(f64::INFINITY);
    let x_horizon = x.end.unwrap_or(f64::INFINITY);
    let mut worst: f64 = 0.0;
    for w in pts.windows(2) {
        let (u0, u1) = (w[0], w[1]);
        if u0 < x_horizon && lam(u0) < y_horizon {
            worst = worst.max(libm::fabs(x.eval(u0)? - y.eval(lam(u0))?));
        }
        if u1 <= x_horizon && lam(u1) <= y_horizon {
            worst = worst.max(libm::fabs(x.left_limit(u1)? - y.left_limit(lam(u1))?));
        }
        if worst >= 1.0 {
            return Ok(1.0);
        }
    }
    Ok(worst.min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn floor_fn(n: usize) -> StepFunction {
        let jumps: Vec<(f64, f64)> = (1..=n).map(|k| (k as f64, k as f64)).collect();
        StepFunction::from_jumps(0.0, &jumps).unwrap().with_horizon(n as f64 + 1.0)
    }

    #[test]
    fn identity_inverse() {
        let inv = StepFunction::identity().rc_inverse().unwrap();
        for &t in &[0.0, 0.3, 7.5] {
            assert_eq!(inv.eval(t).unwrap(), t);
        }
    }

    #[test]
    fn floor_inverse() {
        let f = floor_fn(10);
        assert_eq!(f.inverse_at(0.5).unwrap(), 1.0);
        assert_eq!(f.inverse_at(2.0).unwrap(), 3.0);
        let inv = f.rc_inverse().unwrap();
        assert_eq!(inv.eval(0.5).unwrap(), 1.0);
        assert_eq!(inv.eval(2.0).unwrap(), 3.0);
        assert_eq!(inv.eval(1.999).unwrap(), 2.0);
    }

    #[test]
    fn bounded_function_has_no_proper_inverse() {
        let f = StepFunction::from_jumps(0.0, &[(1.0, 2.0)]).unwrap();
        assert_eq!(f.rc_inverse(), Err(CadlagError::NotProper));
    }

    #[test]
    fn g_and_d_on_two_point_range() {
        let f = StepFunction::from_jumps(0.0, &[(1.0, 2.0)]).unwrap();
        assert_eq!(f.g_op(1.0).unwrap(), 0.0);
        assert_eq!(f.d_op(1.0).unwrap(), 2.0);
        for n in [1.0, 10.0, 1000.0] {
            let f = StepFunction::from_jumps(0.0, &[(1.0, 1.0 + 1.0 / n)]).unwrap();
            assert_eq!(f.g_op(1.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn compose_with_identity() {
        let y = floor_fn(5).with_tail_slope(0.0);
        let id = StepFunction::identity();
        let c = y.compose(&id);
        for &t in &[0.0, 0.5, 1.0, 3.2, 5.9] {
            assert_eq!(c.eval(t).unwrap(), y.eval(t).unwrap());
        }
        // y(x^-1(t)) >= t for y = x
        let x = StepFunction::new(alloc::vec![0.0, 1.0, 2.0], alloc::vec![0.0, 3.0, 4.0], alloc::vec![1.0, 0.0, 2.0], None).unwrap();
        for &t in &[0.0, 0.5, 1.5, 3.0, 3.5, 4.0, 10.0] {
            assert!(compose_inverse(&x, &x, t).unwrap() >= t);
        }
    }

    #[test]
    fn sum_of_ramps() {
        let f = StepFunction::linear(2.0).add(&StepFunction::from_jumps(0.0, &[(1.0, 5.0)]).unwrap());
        assert_eq!(f.eval(0.5).unwrap(), 1.0);
        assert_eq!(f.eval(1.0).unwrap(), 7.0);
        assert_eq!(f.left_limit(1.0).unwrap(), 2.0);
    }

    #[test]
    fn j1_examples() {
        let x = StepFunction::from_jumps(0.0, &[(1.0, 1.0), (3.0, 2.0)]).unwrap();
        assert_eq!(j1_upper_bound(&x, &x, 5.0).unwrap(), 0.0);
        let h = 0.01;
        let y = StepFunction::from_jumps(0.0, &[(1.0 + h, 1.0), (3.0, 2.0)]).unwrap();
        let b = j1_upper_bound(&x, &y, 5.0).unwrap();
        assert!(b <= libm::log(1.0 + h) + 1e-3, "{b}");
        let z = StepFunction::from_jumps(0.0, &[(1.0, 1.5), (3.0, 2.0)]).unwrap();
        assert!(j1_upper_bound(&x, &z, 5.0).unwrap() >= 0.5);
    }
}
