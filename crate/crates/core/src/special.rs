//! Special functions, quadrature and root finding used by the limit laws.
//!
//! Everything here is `no_std`; elementary functions come from `libm`.

use alloc::collections::BinaryHeap;

pub use libm::{erf, erfc};

#[inline]
pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

#[inline]
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// Regularized incomplete beta function `I_x(a, b)`.
///
/// Continued fraction (modified Lentz) evaluated on whichever side of the
/// mean converges fastest.
pub fn beta_inc(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b)
        + a * libm::log(x)
        + b * libm::log1p(-x);
    let front = libm::exp(ln_front);
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, 1.0 - x) / b
    }
}

fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if libm::fabs(d) < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=400 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if libm::fabs(d) < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if libm::fabs(c) < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if libm::fabs(d) < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if libm::fabs(c) < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if libm::fabs(del - 1.0) < EPS {
            break;
        }
    }
    h
}

/// Inverse of `x -> I_x(a, b)` by safeguarded Newton iteration.
pub fn beta_inc_inv(a: f64, b: f64, p: f64) -> f64 {
    if p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return 1.0;
    }
    let ln_norm = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b);
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    // tail approximations I_x ~ x^a / (a B) and 1 - I_x ~ (1-x)^b / (b B)
    let ln_beta = -ln_norm;
    let x_lo = libm::exp((libm::log(p * a) + ln_beta) / a);
    let x_hi = 1.0 - libm::exp((libm::log((1.0 - p) * b) + ln_beta) / b);
    let mut x = if x_lo < 0.5 * a / (a + b) {
        x_lo
    } else if x_hi > 0.5 + 0.5 * a / (a + b) {
        x_hi
    } else {
        a / (a + b)
    };
    for _ in 0..300 {
        let f = beta_inc(a, b, x) - p;
        if f < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let dens = libm::exp(ln_norm + (a - 1.0) * libm::log(x) + (b - 1.0) * libm::log1p(-x));
        let mut next = x - f / dens;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if libm::fabs(next - x) <= 1e-15 * next.min(1.0 - next).max(1e-300) {
            return next;
        }
        x = next;
    }
    x
}

/// Bisection for a sign change of `f` on `[lo, hi]`.
///
/// Returns `None` when `f(lo)` and `f(hi)` have the same strict sign.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> Option<f64> {
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Some(lo);
    }
    if f_hi == 0.0 {
        return Some(hi);
    }
    if (f_lo > 0.0) == (f_hi > 0.0) {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol || mid == lo || mid == hi {
            return Some(mid);
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Some(mid);
        }
        if (f_mid > 0.0) == (f_lo > 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

// Gauss-Kronrod 7/15 nodes and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

// a node rounded onto a singular endpoint contributes nothing
#[inline]
fn finite(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        0.0
    }
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = finite(f(center));
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for i in 0..7 {
        let dx = half * XGK[i];
        let pair = finite(f(center - dx)) + finite(f(center + dx));
        kronrod += WGK[i] * pair;
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    (kronrod * half, libm::fabs((kronrod - gauss) * half))
}

/// Adaptive Gauss-Kronrod quadrature of `f` over a finite interval.
///
/// Subdivides the interval with the largest error estimate until the summed
/// estimate is below `max(abs_tol, rel_tol * |integral|)`. Nodes never touch
/// the endpoints, so integrable endpoint singularities are tolerated.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (v, e) = gk15(&f, a, b);
    let mut parts = BinaryHeap::new();
    parts.push(Panel { lo: a, hi: b, value: v, err: e });
    let mut total = v;
    let mut err = e;
    for _ in 0..2000 {
        if err <= abs_tol.max(rel_tol * libm::fabs(total)) {
            break;
        }
        let Some(p) = parts.pop() else { break };
        let mid = 0.5 * (p.lo + p.hi);
        if mid <= p.lo || mid >= p.hi || p.err == 0.0 {
            // cannot split further; freeze this panel and everything below it
            parts.push(p);
            break;
        }
        let (v1, e1) = gk15(&f, p.lo, mid);
        let (v2, e2) = gk15(&f, mid, p.hi);
        total += v1 + v2 - p.value;
        err += e1 + e2 - p.err;
        parts.push(Panel { lo: p.lo, hi: mid, value: v1, err: e1 });
        parts.push(Panel { lo: mid, hi: p.hi, value: v2, err: e2 });
    }
    parts.iter().map(|p| p.value).sum()
}

struct Panel {
    lo: f64,
    hi: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err.total_cmp(&other.err).is_eq()
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<core::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> core::cmp::Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Quadrature over `[a, inf)` through the map `x = a + s / (1 - s)`.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(f: F, a: f64, abs_tol: f64, rel_tol: f64) -> f64 {
    integrate(
        |s| {
            let one_minus = 1.0 - s;
            let x = a + s / one_minus;
            let jac = 1.0 / (one_minus * one_minus);
            let v = f(x) * jac;
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        abs_tol,
        rel_tol,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_values() {
        assert!((gamma(0.5) - libm::sqrt(core::f64::consts::PI)).abs() < 1e-14);
        assert!((gamma(5.0) - 24.0).abs() < 1e-12);
    }

    #[test]
    fn beta_inc_arcsine_closed_form() {
        // Beta(1/2,1/2) CDF is (2/pi) asin(sqrt x).
        for &x in &[0.01, 0.1, 0.25, 0.5, 0.8, 0.999] {
            let want = 2.0 / core::f64::consts::PI * libm::asin(libm::sqrt(x));
            assert!((beta_inc(0.5, 0.5, x) - want).abs() < 1e-13, "x={x}");
        }
    }

    #[test]
    fn beta_inc_inverse_roundtrip() {
        for &(a, b) in &[(0.3, 0.7), (0.5, 0.5), (0.8, 0.2)] {
            for &p in &[1e-6, 0.1, 0.5, 0.9, 0.9999] {
                let x = beta_inc_inv(a, b, p);
                if 1.0 - x > 1e-6 {
                    assert!((beta_inc(a, b, x) - p).abs() < 1e-12, "a={a} p={p}");
                }
                // reflection I_x(a, b) = 1 - I_{1-x}(b, a)
                let y = beta_inc_inv(b, a, 1.0 - p);
                assert!((x + y - 1.0).abs() < 1e-12, "a={a} p={p}");
            }
        }
    }

    #[test]
    fn quadrature_handles_endpoint_singularity() {
        // int_0^1 x^{-1/2} dx = 2
        let v = integrate(|x| 1.0 / libm::sqrt(x), 0.0, 1.0, 1e-12, 1e-12);
        assert!((v - 2.0).abs() < 1e-8, "{v}");
        let g = integrate_to_infinity(|x| libm::exp(-x), 0.0, 1e-13, 1e-13);
        assert!((g - 1.0).abs() < 1e-11);
    }

    #[test]
    fn bisect_finds_sqrt2() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-15).unwrap();
        assert!((r - core::f64::consts::SQRT_2).abs() < 1e-14);
        assert!(bisect(|x| x * x + 1.0, 0.0, 1.0, 1e-12).is_none());
    }
}
