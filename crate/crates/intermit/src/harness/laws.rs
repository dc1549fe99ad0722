use std::f64::consts::PI;

use intermit_core::limits::{
    arcsine_density, beta_a_1ma_density, gd_joint_density, half_gaussian_density, lamperti_density,
    lamperti_zg_density, mittag_leffler_laplace,
};
use intermit_core::special::{gamma, integrate, integrate_to_infinity};

use super::{timed, HarnessError};
use crate::config::Config;
use crate::report::{StatReport, TestResult};

const ALPHAS: [f64; 3] = [0.3, 0.5, 0.7];
const PS: [f64; 3] = [0.2, 0.5, 0.8];

/// `int_0^(1/2) f` with `x = v^k`, which tames `x^(a-1)` singularities at 0.
fn half_mass(f: &dyn Fn(f64) -> f64, k: f64, tol: f64) -> f64 {
    let top = 0.5f64.powf(1.0 / k);
    integrate(|v| f(v.powf(k)) * k * v.powf(k - 1.0), 0.0, top, tol, tol)
}

/// `int_0^1 f` from evaluations at `x` and `1 - x` for small `x`.
fn unit_mass(f: &dyn Fn(f64) -> f64) -> f64 {
    half_mass(f, 4.0, 1e-9) + half_mass(&|y| f(1.0 - y), 4.0, 1e-9)
}

fn gd_mass(alpha: f64) -> f64 {
    // v = u + (1 - u) t^(-1/alpha); u = w^(1/alpha) near 0 and 1 - u = y^(1/(1-alpha)) near 1
    let inner = |u: f64| {
        let jac = |t: f64| (1.0 - u) / alpha * t.powf(-1.0 / alpha - 1.0);
        integrate(|t| gd_joint_density(u, u + (1.0 - u) * t.powf(-1.0 / alpha), alpha, 1.0) * jac(t), 0.0, 1.0, 1e-12, 1e-7)
    };
    let (a, b) = (1.0 / alpha, 1.0 / (1.0 - alpha));
    integrate(|w| inner(w.powf(a)) * a * w.powf(a - 1.0), 0.0, 0.5f64.powf(alpha), 1e-9, 1e-9)
        + integrate(|y| inner(1.0 - y.powf(b)) * b * y.powf(b - 1.0), 0.0, 0.5f64.powf(1.0 - alpha), 1e-9, 1e-9)
}

/// `sum (-z)^k / Gamma(alpha k + 1)` for moderate `z`.
fn ml_series(z: f64, alpha: f64) -> f64 {
    let mut s = 0.0;
    let mut pow = 1.0;
    for k in 0..400 {
        let term = pow / gamma(alpha * k as f64 + 1.0);
        s += term;
        if k > 10 && term.abs() < 1e-18 {
            break;
        }
        pow *= -z;
    }
    s
}

/// `E_alpha(-z) = sin(alpha pi) / pi int_0^inf r^(alpha-1) exp(-r z^(1/alpha)) / (r^(2 alpha) + 2 r^alpha cos(alpha pi) + 1) dr`.
fn ml_quadrature(z: f64, alpha: f64) -> f64 {
    let c = (alpha * PI).sin() / PI;
    let s = z.powf(1.0 / alpha);
    let f = |r: f64| {
        let ra = r.powf(alpha);
        r.powf(alpha - 1.0) * (-r * s).exp() / (ra * ra + 2.0 * ra * (alpha * PI).cos() + 1.0)
    };
    // r = v^(1/alpha) on [0, 1] removes the endpoint singularity
    let head = integrate(|v| f(v.powf(1.0 / alpha)) * v.powf(1.0 / alpha - 1.0) / alpha, 0.0, 1.0, 1e-15, 1e-13);
    c * (head + integrate_to_infinity(f, 1.0, 1e-15, 1e-13))
}

/// Normalization of every limit density and agreement of the Mittag-Leffler
/// transform between series, quadrature and the `alpha = 1/2` closed form.
pub fn run_law_checks(cfg: &Config) -> Result<StatReport, HarnessError> {
    timed(|| {
        let tol = cfg.tol.normalization;
        let mut r = StatReport::new("laws");
        let worst = |name: &str, defects: Vec<(String, f64)>, r: &mut StatReport| {
            let (at, d) = defects.into_iter().fold((String::new(), 0.0), |acc, x| if x.1 >= acc.1 { x } else { acc });
            r.push(TestResult::below(format!("normalization_{name}"), "abs_error", 1, d, tol).with_note(format!("worst at {at}")));
        };
        let a = unit_mass(&|x| arcsine_density(x, 1.0).unwrap_or(f64::NAN));
        worst("arcsine", vec![("t=1".into(), (a - 1.0).abs())], &mut r);
        let mut beta = Vec::new();
        let mut lamperti = Vec::new();
        let mut zg = Vec::new();
        let mut gd = Vec::new();
        for alpha in ALPHAS {
            // Beta(a, 1-a) at 1 - y is Beta(1-a, a) at y
            let m = half_mass(&|x| beta_a_1ma_density(x, alpha).unwrap_or(f64::NAN), 4.0, 1e-12)
                + half_mass(&|y| beta_a_1ma_density(y, 1.0 - alpha).unwrap_or(f64::NAN), 4.0, 1e-12);
            beta.push((format!("alpha={alpha}"), (m - 1.0).abs()));
            gd.push((format!("alpha={alpha}"), (gd_mass(alpha) - 1.0).abs()));
            for p in PS {
                // Z_1 at 1 - y is Z_2 at y
                let m = half_mass(&|x| lamperti_density(x, alpha, p).unwrap_or(f64::NAN), 10.0, 1e-14)
                    + half_mass(&|y| lamperti_density(y, alpha, 1.0 - p).unwrap_or(f64::NAN), 10.0, 1e-14);
                lamperti.push((format!("alpha={alpha} p={p}"), (m - 1.0).abs()));
                let m = unit_mass(&|x| lamperti_zg_density(x, alpha, p).unwrap_or(f64::NAN));
                zg.push((format!("alpha={alpha} p={p}"), (m - 1.0).abs()));
            }
        }
        worst("beta", beta, &mut r);
        worst("lamperti", lamperti, &mut r);
        worst("lamperti_zg", zg, &mut r);
        worst("gd_joint", gd, &mut r);
        let h = integrate_to_infinity(|u| half_gaussian_density(u, 1.0), 0.0, 1e-14, 1e-13);
        worst("half_gaussian", vec![("t=1".into(), (h - 1.0).abs())], &mut r);

        let lambdas = &cfg.marginal.lambdas;
        let mut gap: f64 = 0.0;
        for alpha in ALPHAS {
            for &z in lambdas {
                gap = gap.max((ml_series(z, alpha) - ml_quadrature(z, alpha)).abs());
                gap = gap.max((mittag_leffler_laplace(z, 1.0, alpha) - ml_quadrature(z, alpha)).abs());
            }
        }
        r.push(TestResult::below("ml_series_vs_quadrature", "abs_error", 1, gap, cfg.tol.ml_series));
        let mut gap: f64 = 0.0;
        for &z in lambdas {
            let q = integrate_to_infinity(|u| (-z * u).exp() * half_gaussian_density(u, 1.0), 0.0, 1e-15, 1e-13);
            gap = gap.max((mittag_leffler_laplace(z, 1.0, 0.5) - q).abs());
        }
        r.push(TestResult::below("ml_vs_half_gaussian", "abs_error", 1, gap, cfg.tol.ml_series));
        Ok(r)
    })
}
