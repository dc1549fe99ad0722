//! Monte Carlo experiments over the map and the limit objects.
//!
//! Every experiment draws its randomness from ChaCha8 streams keyed by
//! `(seed, experiment tag, index)`, and parallel work is collected in index
//! order, so reports do not depend on the thread count.

mod functional;
mod identity;
mod laws;
mod limits;
mod marginal;
mod tail;

use std::time::Instant;

use intermit_core::limits::{LimitsError, StableParams};
use intermit_core::occupation::OccupationError;
use intermit_core::return_map::{
    build_partition, cell_table, junction_measure, sample_stationary_excursions, tail_statistics, CellTable,
    JunctionSampler, RaysPartition, ReturnMapError, TailReport,
};
use intermit_core::stats::StatsError;
use intermit_core::{IntermittentMap, MapError};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::config::{Config, Family, InitialLaw, Normalizer};
use crate::report::StatReport;

pub use functional::run_functional_experiment;
pub use identity::run_identity_suite;
pub use laws::run_law_checks;
pub use limits::run_limit_crosscheck;
pub use marginal::{marginal_times, run_marginal_experiment, simulate_orbit, simulate_orbits};
pub use tail::run_tail_experiment;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    ReturnMap(#[from] ReturnMapError),
    #[error(transparent)]
    Occupation(#[from] OccupationError),
    #[error(transparent)]
    Limits(#[from] LimitsError),
    #[error(transparent)]
    Bessel(#[from] intermit_core::bessel::BesselError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Cadlag(#[from] intermit_core::cadlag::CadlagError),
    #[error("thread pool: {0}")]
    Pool(String),
}

/// Stream tags, one per experiment.
pub mod tag {
    pub const SETUP: u64 = 1;
    pub const IDENTITY: u64 = 2;
    pub const MARGINAL: u64 = 3;
    pub const MARGINAL_LIMIT: u64 = 4;
    pub const FUNCTIONAL: u64 = 5;
    pub const FUNCTIONAL_LIMIT: u64 = 6;
    pub const TAIL: u64 = 7;
    pub const CONSTRUCTION_A: u64 = 8;
    pub const EXACT: u64 = 9;
    pub const CONSTRUCTION_B: u64 = 10;
    pub const DRIFT: u64 = 11;
    pub const EXPORT: u64 = 12;
}

/// Generator for replica `index` of the experiment `tag`.
pub fn stream(seed: u64, tag: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((tag << 48) ^ index);
    rng
}

/// Thread pool sized by `INTERMIT_THREADS` (rayon's default when unset).
pub struct Runner {
    pool: rayon::ThreadPool,
}

impl Runner {
    pub fn new(threads: Option<usize>) -> Result<Self, HarnessError> {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(t) = threads.filter(|&t| t > 0) {
            b = b.num_threads(t);
        }
        Ok(Runner { pool: b.build().map_err(|e| HarnessError::Pool(e.to_string()))? })
    }

    pub fn from_env() -> Result<Self, HarnessError> {
        let threads = std::env::var("INTERMIT_THREADS").ok().and_then(|v| v.trim().parse().ok());
        Self::new(threads)
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }

    /// `f(0), .., f(count - 1)` in parallel, in index order.
    pub fn map<T, F>(&self, count: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        self.pool.install(|| (0..count).into_par_iter().map(f).collect())
    }

    pub fn try_map<T, F>(&self, count: usize, f: F) -> Result<Vec<T>, HarnessError>
    where
        T: Send,
        F: Fn(usize) -> Result<T, HarnessError> + Sync + Send,
    {
        self.pool.install(|| (0..count).into_par_iter().map(f).collect())
    }
}

/// Map, partition, cell table and `mu_Y` sampler shared by the map experiments.
pub struct Setup {
    pub map: IntermittentMap,
    pub partition: RaysPartition,
    pub cells: CellTable,
    pub sampler: JunctionSampler,
    pub mu_y: Option<f64>,
    /// Known or configured `beta`; `None` when it has to be estimated.
    pub beta_reference: Option<Vec<f64>>,
    pub params: StableParams,
    /// Stationary tail statistics, computed when `beta` or `b_n` are estimated.
    pub tail: Option<TailReport>,
}

impl Setup {
    pub fn new(cfg: &Config) -> Result<Self, HarnessError> {
        let map = match cfg.map.family {
            Family::Boole => IntermittentMap::boole(),
            Family::Thaler => IntermittentMap::thaler(cfg.map.d, cfg.map.alpha, &cfg.map.coefficients)?,
        };
        let partition = build_partition(&map)?;
        let cells = cell_table(&map, &partition, cfg.marginal.cell_table);
        let sampler = match cfg.map.family {
            Family::Boole => JunctionSampler::boole(&partition)?,
            Family::Thaler => JunctionSampler::from_orbit(&map, &partition, 0.123_456_789, 10_000_000, 512)?,
        };
        let mu_y = junction_measure(&map, &partition);
        let beta_reference = if !cfg.map.beta.is_empty() {
            Some(cfg.map.beta.clone())
        } else if cfg.map.family == Family::Boole {
            Some(vec![0.5, 0.5])
        } else {
            None
        };
        let tail = if beta_reference.is_none() || cfg.marginal.normalizer == Normalizer::Estimate {
            let mut rng = stream(cfg.seed, tag::SETUP, 0);
            let trace = sample_stationary_excursions(&map, &cells, &sampler, cfg.tail.returns, &mut rng);
            Some(tail_statistics(&trace, mu_y)?)
        } else {
            None
        };
        let beta = match (&beta_reference, &tail) {
            (Some(b), _) => b.clone(),
            (None, Some(t)) => {
                let s: f64 = t.beta_hat.iter().sum();
                t.beta_hat.iter().map(|b| b / s).collect()
            }
            (None, None) => unreachable!("tail statistics are computed whenever beta is unknown"),
        };
        let params = StableParams::new(map.alpha(), beta)?;
        Ok(Setup { map, partition, cells, sampler, mu_y, beta_reference, params, tail })
    }

    /// `b_n` for `S_Y(n) / b_n`.
    pub fn normalizer(&self, n: u64, kind: Normalizer) -> f64 {
        match (kind, self.mu_y, &self.tail) {
            (Normalizer::Exact, Some(mu), _) => mu * (n as f64 / (2.0 * std::f64::consts::PI)).sqrt(),
            (_, _, Some(t)) => t.b_n_estimate(n, self.map.alpha()),
            // validated configs never reach this
            (_, _, None) => f64::NAN,
        }
    }

    pub fn rays(&self) -> usize {
        self.params.rays()
    }
}

pub(crate) fn law_index(law: InitialLaw) -> u64 {
    match law {
        InitialLaw::Uniform => 0,
        InitialLaw::MuY => 1,
    }
}

/// Runs `f` and stamps its wall-clock time on the report.
pub(crate) fn timed<F>(f: F) -> Result<StatReport, HarnessError>
where
    F: FnOnce() -> Result<StatReport, HarnessError>,
{
    let start = Instant::now();
    let mut r = f()?;
    r.runtime_s = start.elapsed().as_secs_f64();
    Ok(r)
}

/// Experiments selectable by name.
pub const EXPERIMENTS: &[&str] = &["identity", "marginal", "functional", "tail", "limits", "laws"];

/// Runs the named experiments in the canonical order.
pub fn run_experiments(cfg: &Config, names: &[&str], runner: &Runner) -> Result<Vec<StatReport>, HarnessError> {
    let wants = |n: &str| names.contains(&n);
    let needs_map = ["identity", "marginal", "functional", "tail"].iter().any(|n| wants(n));
    let setup = if needs_map { Some(Setup::new(cfg)?) } else { None };
    let mut out = Vec::new();
    for &name in EXPERIMENTS.iter().filter(|n| wants(n)) {
        let report = match name {
            "identity" => run_identity_suite(cfg, setup.as_ref().unwrap(), runner)?,
            "marginal" => run_marginal_experiment(cfg, setup.as_ref().unwrap(), runner)?,
            "functional" => run_functional_experiment(cfg, setup.as_ref().unwrap(), runner)?,
            "tail" => run_tail_experiment(cfg, setup.as_ref().unwrap(), runner)?,
            "limits" => run_limit_crosscheck(cfg, runner)?,
            "laws" => run_law_checks(cfg)?,
            _ => unreachable!(),
        };
        out.push(report);
    }
    Ok(out)
}

/// `|a - b|` maximised over the entries.
pub(crate) fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// `(alpha, beta)` of the limit experiments: the map's when a map is configured.
pub fn limit_params(cfg: &Config) -> Result<StableParams, HarnessError> {
    let beta = if cfg.map.beta.is_empty() { vec![1.0 / cfg.map.d as f64; cfg.map.d] } else { cfg.map.beta.clone() };
    Ok(StableParams::new(cfg.map.alpha, beta)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Config {
        let text = "schema = 1\nseed = 3\nmarginal.n = 2000\nmarginal.replicas = 200\nmarginal.limit_samples = 2000\n\
                    marginal.d_tail_hi = 50\nfunctional.n = 1000\nfunctional.replicas = 100\nfunctional.limit_paths = 200\n\
                    identity.orbits = 5\nidentity.length = 2000\ntail.returns = 20000\nlimits.samples = 300\n\
                    bessel.paths = 50\nbessel.dt = 0.0009\nbessel.eps = 0.1\n";
        Config::parse(text).unwrap()
    }

    #[test]
    fn streams_differ_by_tag_and_index() {
        use rand::Rng;
        let a: u64 = stream(1, 2, 3).random();
        assert_eq!(a, stream(1, 2, 3).random::<u64>());
        assert_ne!(a, stream(1, 2, 4).random::<u64>());
        assert_ne!(a, stream(1, 3, 3).random::<u64>());
        assert_ne!(a, stream(2, 2, 3).random::<u64>());
    }

    #[test]
    fn reports_do_not_depend_on_thread_count() {
        let cfg = tiny();
        let names = ["identity", "marginal", "functional", "tail", "limits"];
        let one = run_experiments(&cfg, &names, &Runner::new(Some(1)).unwrap()).unwrap();
        let three = run_experiments(&cfg, &names, &Runner::new(Some(3)).unwrap()).unwrap();
        assert_eq!(one.len(), names.len());
        for (a, b) in one.iter().zip(&three) {
            assert_eq!(a.experiment, b.experiment);
            assert_eq!(a.tests, b.tests);
        }
    }

    #[test]
    fn boole_normalizer_matches_estimate() {
        let mut cfg = tiny();
        cfg.tail.returns = 200_000;
        cfg.marginal.normalizer = Normalizer::Estimate;
        let setup = Setup::new(&cfg).unwrap();
        let exact = setup.normalizer(10_000, Normalizer::Exact);
        let estimate = setup.normalizer(10_000, Normalizer::Estimate);
        assert!((exact - (10_000.0 / std::f64::consts::PI).sqrt()).abs() < 1e-9);
        assert!((estimate / exact - 1.0).abs() < 0.05, "{estimate} vs {exact}");
    }
}
