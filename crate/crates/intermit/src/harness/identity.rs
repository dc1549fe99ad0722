use intermit_core::cadlag::williams_discrete_check;
use intermit_core::occupation::{occupation_counting, record_itinerary};
use intermit_core::return_map::{sample_uniform_point, ExcursionTrace};
use intermit_core::{OrbitConfig, StallPolicy};

use super::{stream, tag, timed, HarnessError, Runner, Setup};
use crate::config::Config;
use crate::report::{StatReport, TestResult};

struct OrbitAudit {
    decomposition: usize,
    williams: u64,
    checked: u64,
    skipped: u64,
}

/// Exact pathwise identities on uniform orbits: the decomposition of `n`
/// into occupation times and the Williams formula, at every integer time
/// (all processes involved are constant between integers).
pub fn run_identity_suite(cfg: &Config, setup: &Setup, runner: &Runner) -> Result<StatReport, HarnessError> {
    timed(|| {
        let d = setup.rays();
        let length = cfg.identity.length;
        let audits = runner.try_map(cfg.identity.orbits, |i| {
            let mut rng = stream(cfg.seed, tag::IDENTITY, i as u64);
            let x0 = setup.map.to_global(sample_uniform_point(&setup.map, &mut rng));
            let oc = OrbitConfig { x0, n_steps: length, stall_policy: StallPolicy::AnalyticTail };
            let it = record_itinerary(&setup.map, &setup.partition, &oc)?;
            let s: Vec<_> = (0..=d).map(|r| occupation_counting(&it, r as u8)).collect();
            let mut decomposition = 0;
            for u in 0..=length {
                let u = u as f64;
                let total: f64 = s.iter().map(|f| f.eval(u).unwrap_or(f64::NAN)).sum();
                if total != u {
                    decomposition += 1;
                }
            }
            let trace = ExcursionTrace::from_regions(d, &it)?;
            let eta: Vec<_> = (0..d).map(|j| trace.eta(j)).collect();
            let top = s[..d].iter().map(|f| f.eval(length as f64).unwrap_or(0.0)).fold(0.0, f64::max);
            let grid: Vec<f64> = (0..=top as u64).map(|t| t as f64).collect();
            let w = williams_discrete_check(&eta, &trace.phi(), &s[..d], &grid);
            Ok(OrbitAudit { decomposition, williams: w.violations, checked: w.checked, skipped: w.skipped })
        })?;
        let n = audits.len();
        let mut r = StatReport::new("identity");
        let dec: usize = audits.iter().map(|a| a.decomposition).sum();
        r.push(TestResult::exact_zero("decomposition", n, dec).with_note(format!("{} integer times per orbit", length + 1)));
        let viol: u64 = audits.iter().map(|a| a.williams).sum();
        let checked: u64 = audits.iter().map(|a| a.checked).sum();
        let skipped: u64 = audits.iter().map(|a| a.skipped).sum();
        r.push(
            TestResult::exact_zero("williams", n, viol as usize)
                .with_excluded(skipped as usize)
                .with_note(format!("{checked} evaluations")),
        );
        Ok(r)
    })
}
