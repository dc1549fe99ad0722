use intermit_core::return_map::{sample_stationary_excursions, tail_statistics};

use super::{stream, tag, timed, HarnessError, Runner, Setup};
use crate::config::Config;
use crate::report::{StatReport, TestResult};

/// Return time `n` at which the scaling of `b_n` is checked.
const DOUBLING_AT: u64 = 1000;

/// Tail of the return time and the ray split of long excursions, from
/// i.i.d. excursions entered according to `mu_Y`.
pub fn run_tail_experiment(cfg: &Config, setup: &Setup, _runner: &Runner) -> Result<StatReport, HarnessError> {
    timed(|| {
        let alpha = setup.map.alpha();
        let mut rng = stream(cfg.seed, tag::TAIL, 0);
        let trace = sample_stationary_excursions(&setup.map, &setup.cells, &setup.sampler, cfg.tail.returns, &mut rng);
        let t = tail_statistics(&trace, setup.mu_y)?;
        let n = t.n_records;
        let window = format!("window [{}, {}], Hill {:.4}", t.window.0, t.window.1, t.alpha_hill);
        let mut r = StatReport::new("tail");
        r.push(TestResult::within("alpha_hat", "estimate", n, t.alpha_hat, alpha, cfg.tol.alpha_band).with_note(window));
        match &setup.beta_reference {
            Some(beta) => {
                for (j, (&b_hat, &b)) in t.beta_hat.iter().zip(beta).enumerate() {
                    r.push(TestResult::within(format!("beta_hat_ray{}", j + 1), "estimate", n, b_hat, b, cfg.tol.beta_band));
                }
            }
            None => {
                let s: f64 = t.beta_hat.iter().sum();
                r.push(
                    TestResult::within("beta_hat_sum", "estimate", n, s, 1.0, cfg.tol.beta_band)
                        .with_note("no reference beta; checked for consistency only"),
                );
            }
        }
        let ratio = t.b_n_estimate(2 * DOUBLING_AT, alpha) / t.b_n_estimate(DOUBLING_AT, alpha);
        r.push(
            TestResult::within("b_n_doubling", "estimate", n, ratio / 2f64.powf(alpha), 1.0, 0.1)
                .with_note(format!("b_2n / b_n at n = {DOUBLING_AT}")),
        );
        Ok(r)
    })
}
