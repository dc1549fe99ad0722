use intermit_core::limits::{
    arcsine_cdf, beta_a_1ma_cdf, half_gaussian_cdf, lamperti_cdf, lamperti_zg_cdf, mittag_leffler_laplace,
    sample_zg_joint, LimitSample,
};
use intermit_core::occupation::{occupation_from_orbit, Completion, OccupationRecord, WaitingTime};
use intermit_core::return_map::sample_uniform_point;
use intermit_core::stats::{empirical_laplace, ks_statistic, ks_two_sample, survival_slope};
use intermit_core::{Orbit, StallPolicy};

use super::{law_index, max_gap, stream, tag, timed, HarnessError, Runner, Setup};
use crate::config::{Config, InitialLaw};
use crate::report::{StatReport, TestResult};

/// Occupation record of replica `replica` started from `law`, observed at
/// `times` (orbit length `max(times)`), on stream `(tag, law, replica)`.
pub fn simulate_orbit(
    cfg: &Config,
    setup: &Setup,
    stream_tag: u64,
    law: InitialLaw,
    n: u64,
    times: &[u64],
    replica: u64,
) -> Result<OccupationRecord, HarnessError> {
    let n_steps = times.iter().copied().max().unwrap_or(0);
    let cap = cfg.marginal.cap_factor.saturating_mul(n);
    let mut rng = stream(cfg.seed, stream_tag, (law_index(law) << 40) | replica);
    let p = match law {
        InitialLaw::Uniform => sample_uniform_point(&setup.map, &mut rng),
        InitialLaw::MuY => setup.sampler.sample(&setup.map, &mut rng),
    };
    let orbit = Orbit::from_point(&setup.map, p, StallPolicy::AnalyticTail);
    let completion = Completion { cells: &setup.cells, cap };
    Ok(occupation_from_orbit(orbit, &setup.partition, n_steps, times, Some(completion))?)
}

/// [`simulate_orbit`] for replicas `0..count`, in order.
#[allow(clippy::too_many_arguments)]
pub fn simulate_orbits(
    cfg: &Config,
    setup: &Setup,
    runner: &Runner,
    stream_tag: u64,
    law: InitialLaw,
    n: u64,
    times: &[u64],
    count: usize,
) -> Result<Vec<OccupationRecord>, HarnessError> {
    runner.try_map(count, |i| simulate_orbit(cfg, setup, stream_tag, law, n, times, i as u64))
}

/// `k n / points` for `k = 0..=points`, rounded down.
pub fn marginal_times(n: u64, points: u64) -> Vec<u64> {
    let points = points.max(1);
    (0..=points).map(|k| (k as u128 * n as u128 / points as u128) as u64).collect()
}

/// Columns of the time-`n` marginals of one initial law.
pub(crate) struct Marginals {
    pub z: Vec<Vec<f64>>,
    pub zg: Vec<Vec<f64>>,
    pub local: Vec<f64>,
    pub g: Vec<f64>,
    /// `D / n`, infinite when censored.
    pub d: Vec<f64>,
    pub censored: usize,
    pub approximate: usize,
    pub g_zero: usize,
    pub decomposition: usize,
}

impl Marginals {
    pub fn collect(records: &[OccupationRecord], index: usize, n: u64, b_n: f64, rays: usize) -> Self {
        let mut m = Marginals {
            z: vec![Vec::with_capacity(records.len()); rays],
            zg: vec![Vec::new(); rays],
            local: Vec::with_capacity(records.len()),
            g: Vec::with_capacity(records.len()),
            d: Vec::with_capacity(records.len()),
            censored: 0,
            approximate: 0,
            g_zero: 0,
            decomposition: 0,
        };
        for rec in records {
            let total: u64 = rec.s_a[index].iter().sum::<u64>() + rec.s_y[index];
            if total != rec.times[index] {
                m.decomposition += 1;
            }
            match rec.d_y[index] {
                WaitingTime::Censored => m.censored += 1,
                WaitingTime::Approximate(_) => m.approximate += 1,
                _ => {}
            }
            let s = &rec.scaled(n as f64, b_n)[index];
            for j in 0..rays {
                m.z[j].push(s.z[j]);
            }
            if s.zg.is_empty() {
                m.g_zero += 1;
            } else {
                for j in 0..rays {
                    m.zg[j].push(s.zg[j]);
                }
            }
            m.local.push(s.local);
            m.g.push(s.g);
            m.d.push(s.d.unwrap_or(f64::INFINITY));
        }
        m
    }
}

pub(crate) fn lamperti_law(alpha: f64, p: f64) -> impl Fn(f64) -> f64 {
    move |x: f64| {
        let x = x.clamp(0.0, 1.0);
        if alpha == 0.5 && p == 0.5 {
            arcsine_cdf(x, 1.0).unwrap_or(f64::NAN)
        } else {
            lamperti_cdf(x, alpha, p).unwrap_or(f64::NAN)
        }
    }
}

/// `exp(-lambda (z_1 + l + g + 1/d))`.
fn joint_functional(z1: f64, l: f64, g: f64, d: f64, lambda: f64) -> f64 {
    (-lambda * (z1 + l + g + 1.0 / d)).exp()
}

/// Time-`n` marginals of the map against the limit laws, for each initial law.
pub fn run_marginal_experiment(cfg: &Config, setup: &Setup, runner: &Runner) -> Result<StatReport, HarnessError> {
    timed(|| {
        let mc = &cfg.marginal;
        let tol = &cfg.tol;
        let alpha = setup.map.alpha();
        let d = setup.rays();
        let beta = setup.params.beta().to_vec();
        let b_n = setup.normalizer(mc.n, mc.normalizer);
        let mut limit_rng = stream(cfg.seed, tag::MARGINAL_LIMIT, 0);
        let limit: Vec<LimitSample> =
            sample_zg_joint(&setup.params, mc.limit_samples, cfg.limits.pool_factor, &mut limit_rng)?;
        let limit_joint: Vec<f64> = mc
            .lambdas
            .iter()
            .map(|&lam| {
                let s: f64 = limit
                    .iter()
                    .map(|v| {
                        let dv = if v.dv > mc.cap_factor as f64 { f64::INFINITY } else { v.dv };
                        joint_functional(v.z[0], v.l, v.g, dv, lam)
                    })
                    .sum();
                s / limit.len() as f64
            })
            .collect();
        let ml: Vec<f64> = mc.lambdas.iter().map(|&l| mittag_leffler_laplace(l, 1.0, alpha)).collect();

        let mut r = StatReport::new("marginal");
        let mut per_law: Vec<(InitialLaw, Marginals)> = Vec::new();
        for &law in &mc.initial_laws {
            let records = simulate_orbits(cfg, setup, runner, tag::MARGINAL, law, mc.n, &[mc.n], mc.replicas)?;
            let m = Marginals::collect(&records, 0, mc.n, b_n, d);
            let k = records.len();
            let sfx = format!("[{}]", law.name());
            for j in 0..d {
                let ks = ks_statistic(&m.z[j], lamperti_law(alpha, beta[j]))?;
                r.push(TestResult::below(format!("lamperti_ks_ray{}{sfx}", j + 1), "ks", k, ks, tol.ks_lamperti));
            }
            if alpha == 0.5 {
                let ks = ks_statistic(&m.local, |x| half_gaussian_cdf(x.max(0.0), 1.0).unwrap_or(f64::NAN))?;
                r.push(
                    TestResult::below(format!("local_ks{sfx}"), "ks", k, ks, tol.ks_local)
                        .with_note(format!("b_n = {b_n:.6}")),
                );
            }
            let lap = empirical_laplace(&m.local, &mc.lambdas)?;
            r.push(TestResult::below(format!("local_laplace{sfx}"), "laplace", k, max_gap(&lap, &ml), tol.laplace));
            let ks = ks_statistic(&m.g, |u| beta_a_1ma_cdf(u.clamp(0.0, 1.0), alpha).unwrap_or(f64::NAN))?;
            r.push(TestResult::below(format!("last_exit_ks{sfx}"), "ks", k, ks, tol.ks_last_exit));
            for j in 0..d {
                let p = beta[j];
                let law_zg = move |x: f64| lamperti_zg_cdf(x.clamp(0.0, 1.0), alpha, p).unwrap_or(f64::NAN);
                let ks = if m.zg[j].is_empty() { 1.0 } else { ks_statistic(&m.zg[j], law_zg)? };
                r.push(
                    TestResult::below(format!("zg_ks_ray{}{sfx}", j + 1), "ks", m.zg[j].len(), ks, tol.ks_zg)
                        .with_excluded(m.g_zero),
                );
            }
            let fit = survival_slope(&m.d, mc.d_tail_lo, mc.d_tail_hi, 11)?;
            r.push(
                TestResult::within(format!("d_tail_slope{sfx}"), "slope", k, fit.slope, -alpha, tol.d_tail)
                    .with_censored(m.censored)
                    .with_note(format!("approximate completions {}", m.approximate)),
            );
            let joint: Vec<f64> = mc
                .lambdas
                .iter()
                .map(|&lam| {
                    let s: f64 = (0..k).map(|i| joint_functional(m.z[0][i], m.local[i], m.g[i], m.d[i], lam)).sum();
                    s / k as f64
                })
                .collect();
            r.push(
                TestResult::below(format!("joint_laplace{sfx}"), "laplace", k, max_gap(&joint, &limit_joint), tol.laplace)
                    .with_censored(m.censored),
            );
            r.push(TestResult::exact_zero(format!("decomposition{sfx}"), k, m.decomposition));
            per_law.push((law, m));
        }
        for a in 0..per_law.len() {
            for b in a + 1..per_law.len() {
                let (la, ma) = &per_law[a];
                let (lb, mb) = &per_law[b];
                let sfx = format!("[{}~{}]", la.name(), lb.name());
                let mut pairs: Vec<(String, &[f64], &[f64])> = Vec::new();
                for j in 0..d {
                    pairs.push((format!("z{}", j + 1), &ma.z[j], &mb.z[j]));
                    pairs.push((format!("zg{}", j + 1), &ma.zg[j], &mb.zg[j]));
                }
                pairs.push(("local".into(), &ma.local, &mb.local));
                pairs.push(("g".into(), &ma.g, &mb.g));
                pairs.push(("d".into(), &ma.d, &mb.d));
                for (name, x, y) in pairs {
                    let t = ks_two_sample(x, y)?;
                    r.push(
                        TestResult::above(format!("two_sample_{name}{sfx}"), "two_sample_p", x.len().min(y.len()), t.p_value, tol.two_sample_p)
                            .with_note(format!("D = {:.5}", t.statistic)),
                    );
                }
            }
        }
        Ok(r)
    })
}
