//! Goodness-of-fit statistics: Kolmogorov-Smirnov distances, empirical
//! Laplace transforms and log-log tail fits.

use alloc::vec::Vec;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("empty sample")]
    EmptySample,
    #[error("sample contains a non-finite value")]
    NonFinite,
    #[error("not enough points for a fit: {have}")]
    TooFewPoints { have: usize },
}

fn sorted(sample: &[f64]) -> Result<Vec<f64>, StatsError> {
    if sample.is_empty() {
        return Err(StatsError::EmptySample);
    }
    if sample.iter().any(|x| x.is_nan()) {
        return Err(StatsError::NonFinite);
    }
    let mut v = sample.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// `sup_x |F_n(x) - F(x)|` against a continuous or discontinuous CDF.
///
/// Tied observations are grouped so the empirical CDF jumps once per distinct
/// value; the left limit of `F` is taken as `F(x.next_down())`.
pub fn ks_statistic<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> Result<f64, StatsError> {
    let v = sorted(sample)?;
    let n = v.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < v.len() {
        let x = v[i];
        let mut j = i;
        while j < v.len() && v[j] == x {
            j += 1;
        }
        let below = i as f64 / n;
        let upto = j as f64 / n;
        let f = cdf(x);
        let f_left = cdf(x.next_down());
        d = d.max(libm::fabs(upto - f)).max(libm::fabs(f_left - below));
        i = j;
    }
    Ok(d)
}

/// Asymptotic Kolmogorov survival `Q(lambda) = 2 sum (-1)^(k-1) exp(-2 k^2 lambda^2)`.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = libm::exp(-2.0 * k * k * lambda * lambda);
        sum += sign * term;
        if term < 1e-16 * sum {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// p-value of a distance `d` with effective size `ne`, using the small-sample
/// correction `lambda = (sqrt(ne) + 0.12 + 0.11 / sqrt(ne)) d`.
pub fn ks_pvalue(d: f64, ne: f64) -> f64 {
    let s = libm::sqrt(ne);
    kolmogorov_q((s + 0.12 + 0.11 / s) * d)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsTwoSample {
    pub statistic: f64,
    pub p_value: f64,
    pub effective_size: f64,
}

/// Two-sample Kolmogorov-Smirnov test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsTwoSample, StatsError> {
    let a = sorted(a)?;
    let b = sorted(b)?;
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
        d = d.max(libm::fabs(i as f64 / na - j as f64 / nb));
    }
    let ne = na * nb / (na + nb);
    Ok(KsTwoSample { statistic: d, p_value: ks_pvalue(d, ne), effective_size: ne })
}

/// `mean(exp(-lambda x_i))` for each `lambda`.
pub fn empirical_laplace(sample: &[f64], lambdas: &[f64]) -> Result<Vec<f64>, StatsError> {
    if sample.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let n = sample.len() as f64;
    Ok(lambdas
        .iter()
        .map(|&l| sample.iter().map(|&x| libm::exp(-l * x)).sum::<f64>() / n)
        .collect())
}

pub fn mean(sample: &[f64]) -> Result<f64, StatsError> {
    if sample.is_empty() {
        return Err(StatsError::EmptySample);
    }
    Ok(sample.iter().sum::<f64>() / sample.len() as f64)
}

/// Least-squares line `y = intercept + slope x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LineFit, StatsError> {
    let n = x.len().min(y.len());
    if n < 3 {
        return Err(StatsError::TooFewPoints { have: n });
    }
    let nf = n as f64;
    let mx = x[..n].iter().sum::<f64>() / nf;
    let my = y[..n].iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for k in 0..n {
        sxx += (x[k] - mx) * (x[k] - mx);
        sxy += (x[k] - mx) * (y[k] - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = (0..n).map(|k| {
        let r = y[k] - intercept - slope * x[k];
        r * r
    }).sum();
    let slope_stderr = libm::sqrt(rss / (nf - 2.0) / sxx);
    Ok(LineFit { slope, intercept, slope_stderr })
}

/// Slope of `log P[X > x]` against `log x` on a geometric grid of `points`
/// levels spanning `[lo, hi]`; levels with no exceedances are dropped.
pub fn survival_slope(sample: &[f64], lo: f64, hi: f64, points: usize) -> Result<LineFit, StatsError> {
    let v = sorted(sample)?;
    let n = v.len() as f64;
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    let ratio = libm::pow(hi / lo, 1.0 / (points.max(2) - 1) as f64);
    let mut level = lo;
    for _ in 0..points.max(2) {
        let above = v.len() - v.partition_point(|&x| x <= level);
        if above > 0 {
            xs.push(libm::log(level));
            ys.push(libm::log(above as f64 / n));
        }
        level *= ratio;
    }
    linear_fit(&xs, &ys)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_uniform_grid() {
        let s: Vec<f64> = (0..10).map(|i| (i as f64 + 0.5) / 10.0).collect();
        let d = ks_statistic(&s, |x| x.clamp(0.0, 1.0)).unwrap();
        assert!((d - 0.05).abs() < 1e-12);
    }

    #[test]
    fn ks_point_mass_is_zero() {
        let s = [2.0; 7];
        let d = ks_statistic(&s, |x| if x >= 2.0 { 1.0 } else { 0.0 }).unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn empty_samples_rejected() {
        assert_eq!(ks_statistic(&[], |x| x), Err(StatsError::EmptySample));
        assert_eq!(empirical_laplace(&[], &[1.0]), Err(StatsError::EmptySample));
        assert!(ks_two_sample(&[1.0], &[]).is_err());
    }

    #[test]
    fn laplace_at_zero_is_one() {
        let v = empirical_laplace(&[0.3, 2.0, 7.0], &[0.0, 1.0]).unwrap();
        assert_eq!(v[0], 1.0);
        assert!((v[1] - (libm::exp(-0.3) + libm::exp(-2.0) + libm::exp(-7.0)) / 3.0).abs() < 1e-15);
    }

    #[test]
    fn kolmogorov_quantiles() {
        // 5% and 1% critical values of the limiting distribution
        assert!((kolmogorov_q(1.3581) - 0.05).abs() < 1e-4);
        assert!((kolmogorov_q(1.6276) - 0.01).abs() < 1e-4);
        assert_eq!(kolmogorov_q(0.0), 1.0);
    }

    #[test]
    fn two_sample_identical_and_disjoint() {
        let a = [0.1, 0.4, 0.7];
        let r = ks_two_sample(&a, &a).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
        let r = ks_two_sample(&[0.0, 1.0], &[5.0, 6.0]).unwrap();
        assert_eq!(r.statistic, 1.0);
    }

    #[test]
    fn fits() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 3.0, 5.0, 7.0];
        let f = linear_fit(&x, &y).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12 && (f.intercept - 1.0).abs() < 1e-12);
        // Pareto(1/2) survival x^-1/2
        let s: Vec<f64> = (1..=100_000).map(|i| libm::pow(i as f64 / 100_001.0, -2.0)).collect();
        let f = survival_slope(&s, 10.0, 1e4, 10).unwrap();
        assert!((f.slope + 0.5).abs() < 0.01, "{}", f.slope);
    }
}
