//! Experiment configuration: flat `key = value` text with dotted sections.
//!
//! ```text
//! schema = 1
//! seed = 7
//! map.family = boole
//! marginal.n = 1000000
//! ```
//!
//! `#` starts a comment. Every key must be known, may appear once, and the
//! file must declare `schema = 1`. Unset keys keep their defaults.

use std::fmt::{self, Display};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

pub const SCHEMA: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` given twice")]
    Duplicate { line: usize, key: String },
    #[error("line {line}: bad value `{value}` for `{key}`: {reason}")]
    BadValue { line: usize, key: String, value: String, reason: String },
    #[error("missing `schema = {SCHEMA}`")]
    MissingSchema,
    #[error("unsupported schema {0}, expected {SCHEMA}")]
    Schema(u32),
    #[error("override `{0}` is not of the form key=value")]
    Override(String),
    #[error("inconsistent configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Boole,
    Thaler,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialLaw {
    /// Lebesgue measure on `[0, 1]`.
    Uniform,
    /// Normalized invariant measure on `Y`.
    MuY,
}

impl InitialLaw {
    pub fn name(self) -> &'static str {
        match self {
            InitialLaw::Uniform => "uniform",
            InitialLaw::MuY => "mu_y",
        }
    }
}

/// How `S_Y(n)` is normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalizer {
    /// `mu(Y) sqrt(n / (2 pi))`, Boole only.
    Exact,
    /// `1 / (Gamma(1 - alpha) mu_Y[phi >= n])` from stationary excursions.
    Estimate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapConfig {
    pub family: Family,
    pub d: usize,
    pub alpha: f64,
    /// Empty for Boole; `inf` allowed.
    pub coefficients: Vec<f64>,
    /// Ray weights of the limit laws; estimated from excursions when empty
    /// (Boole defaults to `1/2, 1/2`).
    pub beta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarginalConfig {
    pub n: u64,
    pub replicas: usize,
    pub initial_laws: Vec<InitialLaw>,
    pub normalizer: Normalizer,
    /// `D_Y` values above `cap_factor * n` are censored.
    pub cap_factor: u64,
    pub cell_table: usize,
    pub lambdas: Vec<f64>,
    pub limit_samples: usize,
    /// Window of the `D_Y / n - 1` survival fit.
    pub d_tail_lo: f64,
    pub d_tail_hi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalConfig {
    pub n: u64,
    pub replicas: usize,
    pub t_grid: Vec<f64>,
    pub limit_paths: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityConfig {
    pub orbits: usize,
    pub length: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailConfig {
    pub returns: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitsConfig {
    pub samples: usize,
    pub pool_factor: usize,
    /// Small-jump cutoff of the subordinators, relative to the time horizon.
    pub j_min: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BesselConfig {
    pub paths: usize,
    pub dt: f64,
    pub eps: f64,
    pub horizon: f64,
}

/// Thresholds calibrated from pilot runs; the limit theorems come without rates.
#[derive(Debug, Clone, PartialEq)]
pub struct Tolerances {
    pub ks_lamperti: f64,
    pub ks_local: f64,
    pub ks_last_exit: f64,
    pub ks_zg: f64,
    pub d_tail: f64,
    pub laplace: f64,
    pub two_sample_p: f64,
    pub ks_functional: f64,
    pub ks_construction_a: f64,
    pub ks_construction_b: f64,
    pub local_time_drift: f64,
    pub alpha_band: f64,
    pub beta_band: f64,
    pub normalization: f64,
    pub ml_series: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub schema: u32,
    pub seed: u64,
    pub map: MapConfig,
    pub marginal: MarginalConfig,
    pub functional: FunctionalConfig,
    pub identity: IdentityConfig,
    pub tail: TailConfig,
    pub limits: LimitsConfig,
    pub bessel: BesselConfig,
    pub tol: Tolerances,
    /// Record wall-clock runtimes in report files (breaks byte-identity).
    pub report_runtime: bool,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            schema: SCHEMA,
            seed: 20_240_601,
            map: MapConfig { family: Family::Boole, d: 2, alpha: 0.5, coefficients: Vec::new(), beta: Vec::new() },
            marginal: MarginalConfig {
                n: 1_000_000,
                replicas: 10_000,
                initial_laws: vec![InitialLaw::Uniform, InitialLaw::MuY],
                normalizer: Normalizer::Exact,
                cap_factor: 1_000_000,
                cell_table: 1 << 16,
                lambdas: vec![0.5, 1.0, 2.0],
                limit_samples: 100_000,
                d_tail_lo: 10.0,
                d_tail_hi: 1000.0,
            },
            functional: FunctionalConfig { n: 100_000, replicas: 2_000, t_grid: vec![0.5, 1.0, 2.0], limit_paths: 20_000 },
            identity: IdentityConfig { orbits: 1_000, length: 100_000 },
            tail: TailConfig { returns: 1_000_000 },
            limits: LimitsConfig { samples: 100_000, pool_factor: 8, j_min: 1e-6 },
            bessel: BesselConfig { paths: 10_000, dt: 9e-5, eps: 0.03, horizon: 2.0 },
            tol: Tolerances {
                ks_lamperti: 0.02,
                ks_local: 0.03,
                ks_last_exit: 0.02,
                ks_zg: 0.02,
                d_tail: 0.1,
                laplace: 0.02,
                two_sample_p: 0.01,
                ks_functional: 0.03,
                ks_construction_a: 0.02,
                ks_construction_b: 0.05,
                local_time_drift: 0.01,
                alpha_band: 0.05,
                beta_band: 0.03,
                normalization: 1e-6,
                ml_series: 1e-8,
            },
            report_runtime: false,
        }
    }
}

fn list<T: Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn parse_list<T: FromStr>(s: &str) -> Result<Vec<T>, String>
where
    T::Err: Display,
{
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',').map(|p| p.trim().parse::<T>().map_err(|e| e.to_string())).collect()
}

fn parse_one<T: FromStr>(s: &str) -> Result<T, String>
where
    T::Err: Display,
{
    s.parse::<T>().map_err(|e| e.to_string())
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err("expected true or false".into()),
    }
}

impl FromStr for Family {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "boole" => Ok(Family::Boole),
            "thaler" => Ok(Family::Thaler),
            _ => Err("expected boole or thaler".into()),
        }
    }
}

impl Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Boole => "boole",
            Family::Thaler => "thaler",
        })
    }
}

impl FromStr for InitialLaw {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "uniform" => Ok(InitialLaw::Uniform),
            "mu_y" => Ok(InitialLaw::MuY),
            _ => Err("expected uniform or mu_y".into()),
        }
    }
}

impl Display for InitialLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Normalizer {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "exact" => Ok(Normalizer::Exact),
            "estimate" => Ok(Normalizer::Estimate),
            _ => Err("expected exact or estimate".into()),
        }
    }
}

impl Display for Normalizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Normalizer::Exact => "exact",
            Normalizer::Estimate => "estimate",
        })
    }
}

macro_rules! keys {
    ($( $key:literal => $($field:ident).+ : $kind:ident ),* $(,)?) => {
        /// Every recognised key, in canonical order.
        pub const KEYS: &[&str] = &[$($key),*];

        impl Config {
            fn set(&mut self, key: &str, value: &str) -> Option<Result<(), String>> {
                match key {
                    $( $key => Some(keys!(@parse $kind, value).map(|v| self.$($field).+ = v)), )*
                    _ => None,
                }
            }

            /// Canonical `key = value` lines of every setting.
            pub fn entries(&self) -> Vec<(&'static str, String)> {
                vec![$( ($key, keys!(@show $kind, &self.$($field).+)) ),*]
            }
        }
    };
    (@parse one, $v:expr) => { parse_one($v) };
    (@parse list, $v:expr) => { parse_list($v) };
    (@parse flag, $v:expr) => { parse_bool($v) };
    (@show one, $v:expr) => { $v.to_string() };
    (@show list, $v:expr) => { list($v) };
    (@show flag, $v:expr) => { $v.to_string() };
}

keys! {
    "schema" => schema: one,
    "seed" => seed: one,
    "report.runtime" => report_runtime: flag,
    "map.family" => map.family: one,
    "map.d" => map.d: one,
    "map.alpha" => map.alpha: one,
    "map.coefficients" => map.coefficients: list,
    "map.beta" => map.beta: list,
    "marginal.n" => marginal.n: one,
    "marginal.replicas" => marginal.replicas: one,
    "marginal.initial_laws" => marginal.initial_laws: list,
    "marginal.normalizer" => marginal.normalizer: one,
    "marginal.cap_factor" => marginal.cap_factor: one,
    "marginal.cell_table" => marginal.cell_table: one,
    "marginal.lambdas" => marginal.lambdas: list,
    "marginal.limit_samples" => marginal.limit_samples: one,
    "marginal.d_tail_lo" => marginal.d_tail_lo: one,
    "marginal.d_tail_hi" => marginal.d_tail_hi: one,
    "functional.n" => functional.n: one,
    "functional.replicas" => functional.replicas: one,
    "functional.t_grid" => functional.t_grid: list,
    "functional.limit_paths" => functional.limit_paths: one,
    "identity.orbits" => identity.orbits: one,
    "identity.length" => identity.length: one,
    "tail.returns" => tail.returns: one,
    "limits.samples" => limits.samples: one,
    "limits.pool_factor" => limits.pool_factor: one,
    "limits.j_min" => limits.j_min: one,
    "bessel.paths" => bessel.paths: one,
    "bessel.dt" => bessel.dt: one,
    "bessel.eps" => bessel.eps: one,
    "bessel.horizon" => bessel.horizon: one,
    "tol.ks_lamperti" => tol.ks_lamperti: one,
    "tol.ks_local" => tol.ks_local: one,
    "tol.ks_last_exit" => tol.ks_last_exit: one,
    "tol.ks_zg" => tol.ks_zg: one,
    "tol.d_tail" => tol.d_tail: one,
    "tol.laplace" => tol.laplace: one,
    "tol.two_sample_p" => tol.two_sample_p: one,
    "tol.ks_functional" => tol.ks_functional: one,
    "tol.ks_construction_a" => tol.ks_construction_a: one,
    "tol.ks_construction_b" => tol.ks_construction_b: one,
    "tol.local_time_drift" => tol.local_time_drift: one,
    "tol.alpha_band" => tol.alpha_band: one,
    "tol.beta_band" => tol.beta_band: one,
    "tol.normalization" => tol.normalization: one,
    "tol.ml_series" => tol.ml_series: one,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Config::default();
        let mut seen: Vec<String> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let Some((key, value)) = body.split_once('=') else {
                return Err(ConfigError::Syntax { line, text: raw.to_string() });
            };
            let (key, value) = (key.trim(), value.trim());
            if seen.iter().any(|k| k == key) {
                return Err(ConfigError::Duplicate { line, key: key.to_string() });
            }
            cfg.apply(line, key, value)?;
            seen.push(key.to_string());
        }
        if !seen.iter().any(|k| k == "schema") {
            return Err(ConfigError::MissingSchema);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        Self::parse(&text)
    }

    fn apply(&mut self, line: usize, key: &str, value: &str) -> Result<(), ConfigError> {
        match self.set(key, value) {
            None => Err(ConfigError::UnknownKey { line, key: key.to_string() }),
            Some(Err(reason)) => Err(ConfigError::BadValue { line, key: key.to_string(), value: value.to_string(), reason }),
            Some(Ok(())) => {
                if self.schema != SCHEMA {
                    return Err(ConfigError::Schema(self.schema));
                }
                Ok(())
            }
        }
    }

    /// Applies `key=value` overrides (line number 0 in diagnostics).
    pub fn with_overrides(mut self, overrides: &[String]) -> Result<Self, ConfigError> {
        for o in overrides {
            let (k, v) = o.split_once('=').ok_or_else(|| ConfigError::Override(o.clone()))?;
            self.apply(0, k.trim(), v.trim())?;
        }
        self.validate()?;
        Ok(self)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.entries() {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(&v);
            s.push('\n');
        }
        s
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        match self.map.family {
            Family::Boole => {
                if self.map.d != 2 || self.map.alpha != 0.5 {
                    return bad("Boole's map has d = 2 and alpha = 0.5");
                }
            }
            Family::Thaler => {
                if self.map.coefficients.len() != self.map.d {
                    return bad("map.coefficients needs one entry per branch");
                }
                if self.marginal.normalizer == Normalizer::Exact {
                    return bad("the exact normalizer is only known for Boole's map");
                }
            }
        }
        if !self.map.beta.is_empty() && self.map.beta.len() != self.map.d {
            return bad("map.beta needs one entry per branch");
        }
        if self.marginal.initial_laws.is_empty() {
            return bad("marginal.initial_laws is empty");
        }
        if !(self.marginal.d_tail_lo > 0.0 && self.marginal.d_tail_hi > self.marginal.d_tail_lo) {
            return bad("need 0 < marginal.d_tail_lo < marginal.d_tail_hi");
        }
        if self.functional.t_grid.iter().any(|&t| !(t >= 0.0)) {
            return bad("functional.t_grid must be nonnegative");
        }
        if !(self.bessel.dt > 0.0 && self.bessel.eps > 0.0 && self.bessel.horizon > 1.0) {
            return bad("bessel.dt, bessel.eps must be positive and bessel.horizon > 1");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = Config::default();
        let back = Config::parse(&c.to_text()).unwrap();
        assert_eq!(c, back);
        assert_eq!(c.entries().len(), KEYS.len());
    }

    #[test]
    fn rejects_unknown_and_duplicate_keys() {
        let e = Config::parse("schema = 1\nmarginal.nn = 3\n").unwrap_err();
        assert!(matches!(e, ConfigError::UnknownKey { line: 2, .. }));
        let e = Config::parse("schema = 1\nseed = 1\nseed = 2\n").unwrap_err();
        assert!(matches!(e, ConfigError::Duplicate { line: 3, .. }));
        assert!(matches!(Config::parse("seed = 1\n"), Err(ConfigError::MissingSchema)));
        assert!(matches!(Config::parse("schema = 2\n"), Err(ConfigError::Schema(2))));
        assert!(matches!(Config::parse("schema = 1\nnot a pair\n"), Err(ConfigError::Syntax { .. })));
    }

    #[test]
    fn values_and_overrides() {
        let c = Config::parse("schema = 1 # current\nmarginal.initial_laws = mu_y\nmarginal.lambdas = 1, 3\n").unwrap();
        assert_eq!(c.marginal.initial_laws, vec![InitialLaw::MuY]);
        assert_eq!(c.marginal.lambdas, vec![1.0, 3.0]);
        let c = c.with_overrides(&["seed=9".into(), "map.family = thaler".into()]);
        assert!(matches!(c, Err(ConfigError::Invalid(_))));
        let c = Config::default()
            .with_overrides(&[
                "map.family=thaler".into(),
                "map.d=3".into(),
                "map.alpha=0.6".into(),
                "map.coefficients=1,inf,2".into(),
                "marginal.normalizer=estimate".into(),
            ])
            .unwrap();
        assert!(c.map.coefficients[1].is_infinite());
        let e = Config::default().with_overrides(&["marginal.n=ten".into()]).unwrap_err();
        assert!(matches!(e, ConfigError::BadValue { .. }));
    }
}
