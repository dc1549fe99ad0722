//! One line per acceptance criterion, at full scale on Boole's map.
//!
//! Runs for several minutes single-threaded; `INTERMIT_THREADS` sets the
//! worker count. Set `INTERMIT_ACCEPTANCE_OUT` to keep the report files.

use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use intermit::config::Config;
use intermit::harness::{run_experiments, Runner};
use intermit::report::{write_reports, StatReport, TestResult};

struct Criterion {
    id: u8,
    title: &'static str,
    experiment: &'static str,
    select: fn(&str) -> bool,
}

const CRITERIA: &[Criterion] = &[
    Criterion { id: 1, title: "exact identities", experiment: "identity", select: |_| true },
    Criterion { id: 2, title: "arcsine law of S_A1(n)/n", experiment: "marginal", select: |n| n == "lamperti_ks_ray1[uniform]" },
    Criterion { id: 3, title: "Darling-Kac law of S_Y(n)/b_n", experiment: "marginal", select: |n| n == "local_ks[uniform]" },
    Criterion {
        id: 4,
        title: "last exit and first entrance",
        experiment: "marginal",
        select: |n| n == "last_exit_ks[uniform]" || n == "d_tail_slope[uniform]",
    },
    Criterion { id: 5, title: "occupation fraction at G_Y(n)", experiment: "marginal", select: |n| n == "zg_ks_ray1[uniform]" },
    Criterion {
        id: 6,
        title: "limit constructions agree",
        experiment: "limits",
        select: |n| n.starts_with("a_vs_exact_") || n.starts_with("b_vs_a_"),
    },
    Criterion {
        id: 7,
        title: "alpha and beta recovery",
        experiment: "tail",
        select: |n| n == "alpha_hat" || n.starts_with("beta_hat_"),
    },
    Criterion { id: 8, title: "closed-form laws", experiment: "laws", select: |_| true },
    Criterion {
        id: 9,
        title: "robustness to the initial law",
        experiment: "marginal",
        select: |n| {
            ["z1", "local", "g", "d", "zg1"].iter().any(|m| n == format!("two_sample_{m}[uniform~mu_y]"))
        },
    },
];

/// The identity suite must finish within a minute.
const IDENTITY_BUDGET_S: f64 = 60.0;

fn worst(tests: &[&TestResult]) -> String {
    tests
        .iter()
        .map(|t| match t.target {
            Some(target) => format!("{}={:.4} (target {target})", t.name, t.statistic),
            None => format!("{}={:.4}", t.name, t.statistic),
        })
        .collect::<Vec<_>>()
        .join(", ")
}

fn main() -> ExitCode {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/boole.cfg");
    let cfg = Config::load(&path).expect("shipped config parses");
    let runner = Runner::from_env().expect("thread pool");
    let start = Instant::now();
    let reports: Vec<StatReport> =
        run_experiments(&cfg, &["identity", "marginal", "tail", "limits", "laws"], &runner).expect("experiments run");
    if let Some(dir) = std::env::var_os("INTERMIT_ACCEPTANCE_OUT") {
        write_reports(Path::new(&dir), &reports, true).expect("report files written");
    }
    let mut failed = 0;
    for c in CRITERIA {
        let report = reports.iter().find(|r| r.experiment == c.experiment).expect("experiment ran");
        let tests: Vec<&TestResult> = report.tests.iter().filter(|t| (c.select)(&t.name)).collect();
        let mut pass = !tests.is_empty() && tests.iter().all(|t| t.pass);
        let mut detail = worst(&tests);
        if c.id == 1 {
            pass &= report.runtime_s < IDENTITY_BUDGET_S;
            detail.push_str(&format!(", runtime {:.1}s", report.runtime_s));
        }
        if !pass {
            failed += 1;
        }
        println!("criterion {}: {} {}: {detail}", c.id, if pass { "PASS" } else { "FAIL" }, c.title);
    }
    println!(
        "acceptance: {} of {} criteria passed in {:.0}s with {} worker thread(s)",
        CRITERIA.len() - failed,
        CRITERIA.len(),
        start.elapsed().as_secs_f64(),
        runner.threads()
    );
    if failed > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
