use intermit_core::bessel::{occupation_from_subordinators, simulate_skew_path, subordinator_paths_until};
use intermit_core::limits::{sample_lamperti_joint, sample_zg_joint, LimitSample, OccupationSample};
use intermit_core::stats::ks_two_sample;

use super::{limit_params, stream, tag, timed, HarnessError, Runner};
use crate::config::Config;
use crate::report::{StatReport, TestResult};

/// Grid refinement factor of the local-time drift check.
const REFINE: usize = 4;
/// Excursions shorter than this are left out of the ray frequencies.
const LONG_EXCURSION: f64 = 0.01;

/// Construction A against the exact limit samplers, construction B against
/// construction A, and the stability of B's local time under refinement.
pub fn run_limit_crosscheck(cfg: &Config, runner: &Runner) -> Result<StatReport, HarnessError> {
    timed(|| {
        let params = limit_params(cfg)?;
        let d = params.rays();
        let lc = &cfg.limits;
        let bc = &cfg.bessel;
        let a: Vec<LimitSample> = runner.try_map(lc.samples, |i| {
            let mut rng = stream(cfg.seed, tag::CONSTRUCTION_A, i as u64);
            let path = subordinator_paths_until(&params, lc.j_min, 1.0, &mut rng)?;
            Ok(occupation_from_subordinators(&path)?.sample_at(1.0)?)
        })?;
        let mut rng = stream(cfg.seed, tag::EXACT, 0);
        let lamperti: Vec<OccupationSample> = (0..lc.samples).map(|_| sample_lamperti_joint(&params, &mut rng)).collect();
        let exact = sample_zg_joint(&params, lc.samples, lc.pool_factor, &mut rng)?;

        let col = |v: &[LimitSample], f: &dyn Fn(&LimitSample) -> f64| -> Vec<f64> { v.iter().map(f).collect() };
        let mut r = StatReport::new("limits");
        let push_ks = |r: &mut StatReport, name: String, x: Vec<f64>, y: Vec<f64>, tol: f64| -> Result<(), HarnessError> {
            let ks = ks_two_sample(&x, &y)?;
            r.push(TestResult::below(name, "ks", x.len().min(y.len()), ks.statistic, tol).with_note(format!("p = {:.4}", ks.p_value)));
            Ok(())
        };
        let tol_a = cfg.tol.ks_construction_a;
        for j in 0..d {
            let z_exact = lamperti.iter().map(|s| s.z[j]).collect();
            push_ks(&mut r, format!("a_vs_exact_ks_z{}", j + 1), col(&a, &|s| s.z[j]), z_exact, tol_a)?;
        }
        push_ks(&mut r, "a_vs_exact_ks_l".into(), col(&a, &|s| s.l), lamperti.iter().map(|s| s.l).collect(), tol_a)?;
        push_ks(&mut r, "a_vs_exact_ks_g".into(), col(&a, &|s| s.g), col(&exact, &|s| s.g), tol_a)?;
        push_ks(&mut r, "a_vs_exact_ks_d".into(), col(&a, &|s| s.dv), col(&exact, &|s| s.dv), tol_a)?;
        for j in 0..d {
            push_ks(&mut r, format!("a_vs_exact_ks_zg{}", j + 1), col(&a, &|s| s.zg[j]), col(&exact, &|s| s.zg[j]), tol_a)?;
        }

        let b: Vec<(LimitSample, Vec<(f64, usize)>)> = runner.try_map(bc.paths, |i| {
            let mut rng = stream(cfg.seed, tag::CONSTRUCTION_B, i as u64);
            let path = simulate_skew_path(&params, bc.dt, bc.eps, bc.horizon, &mut rng)?;
            let lengths = path.excursions.iter().map(|e| ((e.1 - e.0) as f64 * path.dt, e.2)).collect();
            Ok((path.sample_at(1.0)?, lengths))
        })?;
        let tol_b = cfg.tol.ks_construction_b;
        let bs: Vec<LimitSample> = b.iter().map(|x| x.0.clone()).collect();
        for j in 0..d {
            push_ks(&mut r, format!("b_vs_a_ks_z{}", j + 1), col(&bs, &|s| s.z[j]), col(&a, &|s| s.z[j]), tol_b)?;
        }
        push_ks(&mut r, "b_vs_a_ks_l".into(), col(&bs, &|s| s.l), col(&a, &|s| s.l), tol_b)?;
        push_ks(&mut r, "b_vs_a_ks_g".into(), col(&bs, &|s| s.g), col(&a, &|s| s.g), tol_b)?;
        let h = bc.horizon;
        push_ks(&mut r, "b_vs_a_ks_d".into(), col(&bs, &|s| s.dv.min(h)), col(&a, &|s| s.dv.min(h)), tol_b)?;

        let mut counts = vec![0usize; d];
        for (_, ex) in &b {
            for &(len, ray) in ex {
                if len > LONG_EXCURSION {
                    counts[ray] += 1;
                }
            }
        }
        let total: usize = counts.iter().sum();
        for j in 0..d {
            let f = counts[j] as f64 / total.max(1) as f64;
            r.push(
                TestResult::within(format!("b_ray_frequency_ray{}", j + 1), "estimate", total, f, params.beta()[j], cfg.tol.beta_band)
                    .with_note(format!("excursions longer than {LONG_EXCURSION}")),
            );
        }

        // The coarse path is every REFINE-th point of the fine one, which is
        // itself an exact path with step dt.
        let drift_paths = (bc.paths / 5).max(1);
        let fine_dt = bc.dt / REFINE as f64;
        let fine_eps = bc.eps / 2.0;
        let pairs: Vec<(f64, f64)> = runner.try_map(drift_paths, |i| {
            let mut rng = stream(cfg.seed, tag::DRIFT, i as u64);
            let path = simulate_skew_path(&params, fine_dt, fine_eps, 1.0 + bc.dt, &mut rng)?;
            Ok((path.local_time_coarse(REFINE, bc.eps, 1.0), path.local_time_coarse(1, fine_eps, 1.0)))
        })?;
        let m = pairs.len() as f64;
        let coarse = pairs.iter().map(|p| (-p.0).exp()).sum::<f64>() / m;
        let fine = pairs.iter().map(|p| (-p.1).exp()).sum::<f64>() / m;
        r.push(
            TestResult::below("b_local_time_drift", "laplace", pairs.len(), (coarse - fine).abs(), cfg.tol.local_time_drift)
                .with_note(format!("E exp(-L(1)): {coarse:.5} at eps {}, {fine:.5} at eps {fine_eps}", bc.eps)),
        );
        Ok(r)
    })
}
