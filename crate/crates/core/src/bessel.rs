//! Skew Bessel diffusions on `d` rays.
//!
//! Construction A builds the occupation times, local time, last exit and first
//! entrance from independent stable subordinators, one per ray, through the
//! Williams formula. Construction B simulates the modulus exactly on a time
//! grid, tags excursions above a threshold `eps` with rays and measures
//! local time by the normalized occupation of `[0, eps]`.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, Poisson};
use thiserror::Error;

use crate::cadlag::{CadlagError, StepFunction};
use crate::limits::{sample_index, LimitSample, StableParams};
use crate::special::gamma;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BesselError {
    #[error("time {t} outruns the simulated horizon {horizon}")]
    HorizonExceeded { t: f64, horizon: f64 },
    #[error("invalid parameters: {0}")]
    InvalidParameters(&'static str),
    #[error(transparent)]
    Cadlag(#[from] CadlagError),
}

/// `C = 2^alpha Gamma(alpha) / Gamma(1 - alpha)`.
pub fn c_alpha(alpha: f64) -> f64 {
    libm::pow(2.0, alpha) * gamma(alpha) / gamma(1.0 - alpha)
}

/// Independent `alpha`-stable subordinators `eta_j` with
/// `E exp(-lambda eta_j(s)) = exp(-s beta_j lambda^alpha)`, on `[0, s_max)`.
///
/// Jumps of size at least `j_min` form a Poisson random measure with
/// intensity `beta_j alpha r^(-1-alpha) / Gamma(1-alpha)`; smaller jumps are
/// replaced by their mean, a drift of `beta_j alpha j_min^(1-alpha) / ((1-alpha) Gamma(1-alpha))`.
#[derive(Debug, Clone)]
pub struct SubordinatorPath {
    pub alpha: f64,
    pub beta: Vec<f64>,
    pub j_min: f64,
    pub s_max: f64,
    pub drift: Vec<f64>,
    /// Jump epochs per ray, increasing.
    pub epochs: Vec<Vec<f64>>,
    pub sizes: Vec<Vec<f64>>,
    eta_rays: Vec<StepFunction>,
    eta: StepFunction,
}

impl SubordinatorPath {
    pub fn ray_count(&self) -> usize {
        self.beta.len()
    }

    pub fn eta_ray(&self, j: usize) -> &StepFunction {
        &self.eta_rays[j]
    }

    pub fn eta(&self) -> &StepFunction {
        &self.eta
    }

    /// `eta(s_max-)`: times below this are covered by the path.
    pub fn reach(&self) -> f64 {
        self.eta.left_limit(self.s_max).unwrap_or(0.0)
    }

    fn assemble(
        params: &StableParams,
        j_min: f64,
        s_max: f64,
        drift: Vec<f64>,
        epochs: Vec<Vec<f64>>,
        sizes: Vec<Vec<f64>>,
    ) -> Self {
        let eta_rays: Vec<StepFunction> = (0..params.rays())
            .map(|j| ray_function(drift[j], &epochs[j], &sizes[j], s_max))
            .collect();
        let eta = eta_rays[1..].iter().fold(eta_rays[0].clone(), |acc, f| acc.add(f));
        SubordinatorPath {
            alpha: params.alpha(),
            beta: params.beta().to_vec(),
            j_min,
            s_max,
            drift,
            epochs,
            sizes,
            eta_rays,
            eta,
        }
    }
}

fn ray_function(drift: f64, epochs: &[f64], sizes: &[f64], s_max: f64) -> StepFunction {
    let n = epochs.len();
    let mut starts = Vec::with_capacity(n + 1);
    let mut values = Vec::with_capacity(n + 1);
    starts.push(0.0);
    values.push(0.0);
    let mut jumps = 0.0;
    for k in 0..n {
        jumps += sizes[k];
        starts.push(epochs[k]);
        values.push(drift * epochs[k] + jumps);
    }
    let slopes = alloc::vec![drift; starts.len()];
    StepFunction::new(starts, values, slopes, Some(s_max)).expect("jump epochs increase and sizes are positive")
}

fn truncation(alpha: f64, j_min: f64) -> (f64, f64) {
    let g = gamma(1.0 - alpha);
    let rate = libm::pow(j_min, -alpha) / g;
    let drift = alpha * libm::pow(j_min, 1.0 - alpha) / ((1.0 - alpha) * g);
    (rate, drift)
}

#[inline]
fn pareto<R: Rng + ?Sized>(alpha: f64, j_min: f64, rng: &mut R) -> f64 {
    let u = 1.0 - rng.random::<f64>();
    j_min * libm::pow(u, -1.0 / alpha)
}

/// Subordinator paths on the fixed local-time horizon `[0, s_max)`.
pub fn subordinator_paths<R: Rng + ?Sized>(
    params: &StableParams,
    j_min: f64,
    s_max: f64,
    rng: &mut R,
) -> Result<SubordinatorPath, BesselError> {
    if !(j_min > 0.0 && s_max > 0.0) {
        return Err(BesselError::InvalidParameters("j_min and s_max must be positive"));
    }
    let alpha = params.alpha();
    let (rate, unit_drift) = truncation(alpha, j_min);
    let mut epochs = Vec::new();
    let mut sizes = Vec::new();
    let mut drift = Vec::new();
    for &b in params.beta() {
        let (mut e, mut z) = (Vec::new(), Vec::new());
        drift.push(b * unit_drift);
        if b > 0.0 {
            let mut s = 0.0;
            loop {
                s += rng.sample::<f64, _>(Exp1) / (b * rate);
                if s >= s_max {
                    break;
                }
                e.push(s);
                z.push(pareto(alpha, j_min, rng));
            }
        }
        epochs.push(e);
        sizes.push(z);
    }
    Ok(SubordinatorPath::assemble(params, j_min, s_max, drift, epochs, sizes))
}

/// Subordinator paths run in local time until `eta` first exceeds `t_max`;
/// the horizon is the following (unsimulated) jump epoch, so every time up to
/// `t_max` is covered together with its straddling excursion.
pub fn subordinator_paths_until<R: Rng + ?Sized>(
    params: &StableParams,
    j_min: f64,
    t_max: f64,
    rng: &mut R,
) -> Result<SubordinatorPath, BesselError> {
    if !(j_min > 0.0 && t_max > 0.0) {
        return Err(BesselError::InvalidParameters("j_min and t_max must be positive"));
    }
    let alpha = params.alpha();
    let d = params.rays();
    let (rate, unit_drift) = truncation(alpha, j_min);
    let drift: Vec<f64> = params.beta().iter().map(|b| b * unit_drift).collect();
    let mut epochs = alloc::vec![Vec::new(); d];
    let mut sizes = alloc::vec![Vec::new(); d];
    let mut s = 0.0;
    let mut total = 0.0;
    let mut passed = false;
    let s_max = loop {
        let next = s + rng.sample::<f64, _>(Exp1) / rate;
        if passed {
            break next;
        }
        s = next;
        let j = sample_index(params.beta(), rng);
        let size = pareto(alpha, j_min, rng);
        epochs[j].push(s);
        sizes[j].push(size);
        total += size;
        passed = unit_drift * s + total > t_max;
    };
    Ok(SubordinatorPath::assemble(params, j_min, s_max, drift, epochs, sizes))
}

/// Occupation processes of construction A.
#[derive(Debug, Clone)]
pub struct SubordinatorOccupation {
    /// `Z_j`, obtained by inverting `W_j = id + sum_{i != j} eta_i o eta_j^-1`.
    pub z: Vec<StepFunction>,
    /// `L = eta^-1`.
    pub local_time: StepFunction,
    eta: StepFunction,
    eta_rays: Vec<StepFunction>,
    horizon: f64,
}

impl SubordinatorOccupation {
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    fn check(&self, t: f64) -> Result<(), BesselError> {
        if !(t < self.horizon) {
            return Err(BesselError::HorizonExceeded { t, horizon: self.horizon });
        }
        Ok(())
    }

    pub fn g(&self, t: f64) -> Result<f64, BesselError> {
        self.check(t)?;
        Ok(self.eta.g_op(t)?)
    }

    pub fn d(&self, t: f64) -> Result<f64, BesselError> {
        self.check(t)?;
        Ok(self.eta.d_op(t)?)
    }

    pub fn l(&self, t: f64) -> Result<f64, BesselError> {
        self.check(t)?;
        Ok(self.local_time.eval(t)?)
    }

    pub fn z_at(&self, t: f64) -> Result<Vec<f64>, BesselError> {
        self.check(t)?;
        self.z.iter().map(|f| f.eval(t).map_err(BesselError::from)).collect()
    }

    /// Ray whose subordinator jumps at `L(t)`; `None` when `t` is in the zero set.
    pub fn straddling_ray(&self, t: f64) -> Result<Option<usize>, BesselError> {
        let s = self.l(t)?;
        for (j, f) in self.eta_rays.iter().enumerate() {
            if f.eval(s)? > f.left_limit(s)? && self.eta.left_limit(s)? <= t {
                return Ok(Some(j));
            }
        }
        Ok(None)
    }

    /// The full limit vector at time `t`.
    pub fn sample_at(&self, t: f64) -> Result<LimitSample, BesselError> {
        let z = self.z_at(t)?;
        let g = self.g(t)?;
        let zg = if g > 0.0 { self.z_at(g)?.iter().map(|v| v / g).collect() } else { Vec::new() };
        let ray = self.straddling_ray(t)?.unwrap_or(0);
        Ok(LimitSample { z, l: self.l(t)?, g, dv: self.d(t)?, zg, ray })
    }
}

pub fn occupation_from_subordinators(path: &SubordinatorPath) -> Result<SubordinatorOccupation, BesselError> {
    let d = path.ray_count();
    let horizon = path.reach();
    let mut z = Vec::with_capacity(d);
    for j in 0..d {
        if d == 1 {
            z.push(StepFunction::identity().with_horizon(horizon));
            continue;
        }
        let inv = path.eta_rays[j].rc_inverse()?;
        let mut w = StepFunction::identity();
        for i in 0..d {
            if i != j {
                w = w.add(&path.eta_rays[i].compose(&inv));
            }
        }
        z.push(w.rc_inverse()?);
    }
    Ok(SubordinatorOccupation {
        z,
        local_time: path.eta.rc_inverse()?,
        eta: path.eta.clone(),
        eta_rays: path.eta_rays.clone(),
        horizon,
    })
}

/// Exact transition of the squared Bessel process of dimension `2 - 2 alpha`
/// over a step `dt`: `2 dt Gamma(1 - alpha + N)` with `N ~ Poisson(x / (2 dt))`.
pub fn besq_step<R: Rng + ?Sized>(x: f64, dt: f64, alpha: f64, rng: &mut R) -> f64 {
    let lambda = x / (2.0 * dt);
    let n = if lambda > 0.0 {
        Poisson::new(lambda).map(|p| p.sample(rng)).unwrap_or(0.0)
    } else {
        0.0
    };
    let shape = 1.0 - alpha + n;
    let g: f64 = Gamma::new(shape, 1.0).map(|g| g.sample(rng)).unwrap_or(0.0);
    2.0 * dt * g
}

/// Grid path of the modulus with its ray-tagged excursions above `eps`.
#[derive(Debug, Clone)]
pub struct DiffusionPath {
    pub alpha: f64,
    pub dt: f64,
    pub eps: f64,
    pub c_alpha: f64,
    pub rays: usize,
    /// `R(k dt)`.
    pub values: Vec<f64>,
    /// `(first index, one past last index, ray)` of each excursion above `eps`.
    pub excursions: Vec<(usize, usize, usize)>,
}

impl DiffusionPath {
    pub fn ray_tags(&self) -> impl Iterator<Item = usize> + '_ {
        self.excursions.iter().map(|e| e.2)
    }

    pub fn horizon(&self) -> f64 {
        (self.values.len() - 1) as f64 * self.dt
    }

    /// Ray of the grid point `k`, `None` at or below `eps`.
    pub fn ray_at(&self, k: usize) -> Option<usize> {
        let i = self.excursions.partition_point(|e| e.0 <= k);
        let e = self.excursions.get(i.checked_sub(1)?)?;
        (k < e.1).then_some(e.2)
    }

    /// Local time normalizer `(2 - 2 alpha) / (C eps^(2 - 2 alpha))`.
    pub fn local_time_scale(&self) -> f64 {
        (2.0 - 2.0 * self.alpha) / (self.c_alpha * libm::pow(self.eps, 2.0 - 2.0 * self.alpha))
    }

    /// `L(k dt)` on the whole grid, counting grid points `0..k` (left Riemann sums).
    pub fn local_time(&self) -> Vec<f64> {
        let scale = self.local_time_scale() * self.dt;
        let mut out = Vec::with_capacity(self.values.len());
        let mut count = 0usize;
        for &r in &self.values {
            out.push(scale * count as f64);
            if r <= self.eps {
                count += 1;
            }
        }
        out
    }

    /// `L(t)` measured on every `stride`-th grid point with threshold `eps`.
    ///
    /// Subsampling an exact path gives an exact path on the coarser grid, so
    /// the two discretizations can be compared on the same trajectory.
    pub fn local_time_coarse(&self, stride: usize, eps: f64, t: f64) -> f64 {
        let stride = stride.max(1);
        let dt = self.dt * stride as f64;
        let kt = (libm::floor(t / dt + 1e-9) as usize).min((self.values.len() - 1) / stride);
        let below = (0..kt).filter(|&k| self.values[k * stride] <= eps).count();
        let scale = (2.0 - 2.0 * self.alpha) / (self.c_alpha * libm::pow(eps, 2.0 - 2.0 * self.alpha));
        scale * dt * below as f64
    }

    /// Limit vector at time `t`. `D` beyond the horizon is reported as infinite.
    pub fn sample_at(&self, t: f64) -> Result<LimitSample, BesselError> {
        let kt = libm::floor(t / self.dt + 1e-9) as usize;
        if kt >= self.values.len() {
            return Err(BesselError::HorizonExceeded { t, horizon: self.horizon() });
        }
        let mut z = alloc::vec![0.0; self.rays];
        let mut below = 0usize;
        let mut last_low = 0usize;
        let mut zg = Vec::new();
        for k in 0..kt {
            match self.ray_at(k) {
                Some(j) => z[j] += self.dt,
                None => {
                    below += 1;
                    last_low = k;
                    zg.clear();
                    zg.extend_from_slice(&z);
                }
            }
        }
        let low_at_t = self.values[kt] <= self.eps;
        let g = if low_at_t { kt as f64 * self.dt } else { last_low as f64 * self.dt };
        if low_at_t {
            zg.clear();
            zg.extend_from_slice(&z);
        }
        let dv = (kt..self.values.len())
            .find(|&k| self.values[k] <= self.eps)
            .map_or(f64::INFINITY, |k| k as f64 * self.dt);
        let zg = if g > 0.0 { zg.iter().map(|v| v / g).collect() } else { Vec::new() };
        let ray = self.ray_at(kt).or_else(|| self.excursions.last().map(|e| e.2)).unwrap_or(0);
        let l = self.local_time_scale() * self.dt * below as f64;
        Ok(LimitSample { z, l, g, dv, zg, ray })
    }
}

/// Simulates the modulus from 0 on `[0, horizon]` with exact squared-Bessel
/// transitions; each maximal run of grid points above `eps` is one excursion,
/// tagged with ray `j` with probability `beta_j`.
pub fn simulate_skew_path<R: Rng + ?Sized>(
    params: &StableParams,
    dt: f64,
    eps: f64,
    horizon: f64,
    rng: &mut R,
) -> Result<DiffusionPath, BesselError> {
    if !(dt > 0.0 && eps > 0.0 && horizon > 0.0) {
        return Err(BesselError::InvalidParameters("dt, eps and horizon must be positive"));
    }
    let alpha = params.alpha();
    let steps = libm::ceil(horizon / dt - 1e-9) as usize;
    let mut values = Vec::with_capacity(steps + 1);
    let mut excursions = Vec::new();
    let mut x = 0.0;
    let mut open: Option<(usize, usize)> = None;
    for k in 0..=steps {
        if k > 0 {
            x = besq_step(x, dt, alpha, rng);
        }
        let r = libm::sqrt(x);
        values.push(r);
        if r > eps {
            if open.is_none() {
                open = Some((k, sample_index(params.beta(), rng)));
            }
        } else if let Some((start, ray)) = open.take() {
            excursions.push((start, k, ray));
        }
    }
    if let Some((start, ray)) = open {
        excursions.push((start, steps + 1, ray));
    }
    Ok(DiffusionPath { alpha, dt, eps, c_alpha: c_alpha(alpha), rays: params.rays(), values, excursions })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::ks_statistic;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn half() -> StableParams {
        StableParams::new(0.5, alloc::vec![0.5, 0.5]).unwrap()
    }

    #[test]
    fn c_alpha_half() {
        assert!((c_alpha(0.5) - core::f64::consts::SQRT_2).abs() < 1e-14);
    }

    #[test]
    fn eta_is_sum_of_rays() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = subordinator_paths(&half(), 1e-4, 2.0, &mut rng).unwrap();
        for k in 0..200 {
            let s = 2.0 * k as f64 / 200.0;
            let sum = p.eta_ray(0).eval(s).unwrap() + p.eta_ray(1).eval(s).unwrap();
            assert!((p.eta().eval(s).unwrap() - sum).abs() <= 1e-12 * sum.max(1.0));
        }
    }

    #[test]
    fn zero_weight_ray_has_no_jumps() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let params = StableParams::new(0.5, alloc::vec![1.0, 0.0]).unwrap();
        let p = subordinator_paths(&params, 1e-4, 3.0, &mut rng).unwrap();
        assert!(p.epochs[1].is_empty() && p.drift[1] == 0.0);
        let p = subordinator_paths_until(&params, 1e-4, 1.0, &mut rng).unwrap();
        assert!(p.epochs[1].is_empty());
    }

    #[test]
    fn subordinator_laplace() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let params = StableParams::new(0.5, alloc::vec![0.3, 0.7]).unwrap();
        let n = 20_000;
        let mut acc = [0.0; 2];
        for _ in 0..n {
            let p = subordinator_paths(&params, 1e-6, 1.0 + 1e-9, &mut rng).unwrap();
            for j in 0..2 {
                acc[j] += libm::exp(-p.eta_ray(j).eval(1.0).unwrap());
            }
        }
        for j in 0..2 {
            let want = libm::exp(-params.beta()[j]);
            assert!((acc[j] / n as f64 - want).abs() < 0.01, "ray {j}");
        }
    }

    #[test]
    fn single_ray_occupation_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let params = StableParams::new(0.5, alloc::vec![1.0]).unwrap();
        let p = subordinator_paths_until(&params, 1e-5, 1.0, &mut rng).unwrap();
        let occ = occupation_from_subordinators(&p).unwrap();
        for &t in &[0.1, 0.5, 1.0] {
            assert_eq!(occ.z_at(t).unwrap()[0], t);
        }
    }

    #[test]
    fn occupation_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let p = subordinator_paths_until(&half(), 1e-6, 1.0, &mut rng).unwrap();
            let occ = occupation_from_subordinators(&p).unwrap();
            let mut prev = [0.0; 2];
            for k in 0..=100 {
                let t = k as f64 / 100.0;
                let z = occ.z_at(t).unwrap();
                assert!((z[0] + z[1] - t).abs() < 1e-9, "t={t} {z:?}");
                assert!(z[0] >= prev[0] && z[1] >= prev[1]);
                prev = [z[0], z[1]];
                let (g, d) = (occ.g(t).unwrap(), occ.d(t).unwrap());
                assert!(g <= t && t <= d);
                // no local time accrues inside the straddling excursion
                if g < t {
                    assert!((occ.l(g).unwrap() - occ.l(t).unwrap()).abs() < 1e-12);
                }
            }
            assert!(occ.d(occ.horizon()).is_err());
        }
    }

    #[test]
    fn last_exit_is_arcsine() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let g: Vec<f64> = (0..4000)
            .map(|_| {
                let p = subordinator_paths_until(&half(), 1e-6, 1.0, &mut rng).unwrap();
                p.eta().g_op(1.0).unwrap()
            })
            .collect();
        let d = ks_statistic(&g, |x| crate::limits::arcsine_cdf(x.clamp(0.0, 1.0), 1.0).unwrap()).unwrap();
        assert!(d < 0.03, "{d}");
    }

    #[test]
    fn besq_mean_and_support() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 100_000;
        for &(x, alpha) in &[(0.0, 0.5), (1.3, 0.3)] {
            let mut m = 0.0;
            for _ in 0..n {
                let y = besq_step(x, 0.5, alpha, &mut rng);
                assert!(y >= 0.0);
                m += y;
            }
            let want = x + (2.0 - 2.0 * alpha) * 0.5;
            assert!((m / n as f64 - want).abs() < 0.02, "{}", m / n as f64);
        }
    }

    #[test]
    fn besq_one_dimensional_is_reflected_gaussian() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let r: Vec<f64> = (0..50_000).map(|_| libm::sqrt(besq_step(0.0, 1.0, 0.5, &mut rng))).collect();
        let d = ks_statistic(&r, |u| libm::erf(u / core::f64::consts::SQRT_2)).unwrap();
        assert!(d < 0.01, "{d}");
    }

    #[test]
    fn skew_path_structure() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let path = simulate_skew_path(&half(), 1e-4, 0.03, 2.0, &mut rng).unwrap();
        assert!(path.values.iter().all(|&r| r >= 0.0));
        for &(a, b, ray) in &path.excursions {
            for k in a..b {
                assert!(path.values[k] > path.eps && path.ray_at(k) == Some(ray));
            }
        }
        let lt = path.local_time();
        for &(a, b, _) in &path.excursions {
            // constant inside excursions
            assert!(lt[a + 1..b.min(lt.len())].iter().all(|&v| v == lt[a + 1]));
        }
        let s = path.sample_at(1.0).unwrap();
        assert!(s.g <= 1.0 && s.dv >= 1.0);
        assert_eq!(path.local_time_coarse(1, path.eps, 1.0), s.l);
        assert!(s.z.iter().sum::<f64>() <= 1.0 + 1e-12);
    }
}
