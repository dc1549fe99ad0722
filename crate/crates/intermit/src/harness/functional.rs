use intermit_core::bessel::{occupation_from_subordinators, subordinator_paths_until};
use intermit_core::limits::LimitSample;
use intermit_core::stats::{empirical_laplace, ks_two_sample};

use super::marginal::{simulate_orbits, Marginals};
use super::{max_gap, stream, tag, timed, HarnessError, Runner, Setup};
use crate::config::{Config, InitialLaw};
use crate::report::{StatReport, TestResult};

/// Finite-dimensional distributions of `t -> (Z(t), L(t), G(t))` on the
/// configured grid, against construction A at the same times.
pub fn run_functional_experiment(cfg: &Config, setup: &Setup, runner: &Runner) -> Result<StatReport, HarnessError> {
    timed(|| {
        let fc = &cfg.functional;
        let d = setup.rays();
        let n = fc.n;
        let mut grid = fc.t_grid.clone();
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        let times: Vec<u64> = grid.iter().map(|&t| (t * n as f64).round() as u64).collect();
        let t_max = grid.last().copied().unwrap_or(1.0).max(f64::MIN_POSITIVE);
        let b_n = setup.normalizer(n, cfg.marginal.normalizer);
        let law = cfg.marginal.initial_laws[0];
        let records = simulate_orbits(cfg, setup, runner, tag::FUNCTIONAL, law, n, &times, fc.replicas)?;
        let dynamic: Vec<Marginals> = (0..grid.len()).map(|i| Marginals::collect(&records, i, n, b_n, d)).collect();

        let j_min = cfg.limits.j_min * t_max;
        let limit: Vec<Vec<LimitSample>> = runner.try_map(fc.limit_paths, |i| {
            let mut rng = stream(cfg.seed, tag::FUNCTIONAL_LIMIT, i as u64);
            let path = subordinator_paths_until(&setup.params, j_min, t_max, &mut rng)?;
            let occ = occupation_from_subordinators(&path)?;
            grid.iter().map(|&t| Ok(occ.sample_at(t)?)).collect::<Result<Vec<_>, HarnessError>>()
        })?;
        let column = |i: usize, f: &dyn Fn(&LimitSample) -> f64| -> Vec<f64> { limit.iter().map(|p| f(&p[i])).collect() };

        let tol = cfg.tol.ks_functional;
        let k = records.len();
        let sfx = if law == InitialLaw::Uniform { String::new() } else { format!("[{}]", law.name()) };
        let mut r = StatReport::new("functional");
        for (i, &t) in grid.iter().enumerate() {
            let m = &dynamic[i];
            let mut cols: Vec<(String, Vec<f64>, Vec<f64>)> = Vec::new();
            for j in 0..d {
                cols.push((format!("z{}", j + 1), m.z[j].clone(), column(i, &|s| s.z[j])));
            }
            cols.push(("local".into(), m.local.clone(), column(i, &|s| s.l)));
            cols.push(("g".into(), m.g.clone(), column(i, &|s| s.g)));
            for (name, a, b) in cols {
                let ks = ks_two_sample(&a, &b)?;
                r.push(TestResult::below(format!("functional_ks_{name}@{t}{sfx}"), "ks", k, ks.statistic, tol));
            }
            r.push(TestResult::exact_zero(format!("decomposition@{t}{sfx}"), k, m.decomposition));
        }
        let lambdas = &cfg.marginal.lambdas;
        for i in 1..grid.len() {
            let (a, b) = (&dynamic[i - 1], &dynamic[i]);
            let label = format!("{}-{}", grid[i - 1], grid[i]);
            let inc = |x: &[f64], y: &[f64]| -> Vec<f64> { x.iter().zip(y).map(|(u, v)| v - u).collect() };
            let pairs: Vec<(&str, Vec<f64>, Vec<f64>)> = vec![
                ("z1", inc(&a.z[0], &b.z[0]), inc(&column(i - 1, &|s| s.z[0]), &column(i, &|s| s.z[0]))),
                ("local", inc(&a.local, &b.local), inc(&column(i - 1, &|s| s.l), &column(i, &|s| s.l))),
            ];
            for (name, x, y) in pairs {
                let gap = max_gap(&empirical_laplace(&x, lambdas)?, &empirical_laplace(&y, lambdas)?);
                r.push(TestResult::below(
                    format!("functional_increment_laplace_{name}@{label}{sfx}"),
                    "laplace",
                    k,
                    gap,
                    cfg.tol.laplace,
                ));
            }
        }
        Ok(r)
    })
}
