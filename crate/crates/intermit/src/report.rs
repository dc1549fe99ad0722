//! Test outcomes and their CSV / JSON-lines serialization.

use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestResult {
    pub name: String,
    pub sample_size: usize,
    /// `ks`, `two_sample_p`, `laplace`, `slope`, `estimate`, `count`, `abs_error`.
    pub kind: &'static str,
    pub statistic: f64,
    pub threshold: f64,
    pub target: Option<f64>,
    pub pass: bool,
    pub censored: usize,
    pub excluded: usize,
    pub note: String,
}

impl TestResult {
    pub fn below(name: impl Into<String>, kind: &'static str, n: usize, statistic: f64, threshold: f64) -> Self {
        TestResult {
            name: name.into(),
            sample_size: n,
            kind,
            statistic,
            threshold,
            target: None,
            pass: statistic < threshold,
            censored: 0,
            excluded: 0,
            note: String::new(),
        }
    }

    pub fn above(name: impl Into<String>, kind: &'static str, n: usize, statistic: f64, threshold: f64) -> Self {
        TestResult { pass: statistic > threshold, ..Self::below(name, kind, n, statistic, threshold) }
    }

    pub fn within(
        name: impl Into<String>,
        kind: &'static str,
        n: usize,
        statistic: f64,
        target: f64,
        threshold: f64,
    ) -> Self {
        TestResult {
            target: Some(target),
            pass: (statistic - target).abs() <= threshold,
            ..Self::below(name, kind, n, statistic, threshold)
        }
    }

    pub fn exact_zero(name: impl Into<String>, n: usize, violations: usize) -> Self {
        TestResult { pass: violations == 0, ..Self::below(name, "count", n, violations as f64, 0.0) }
    }

    pub fn with_censored(mut self, censored: usize) -> Self {
        self.censored = censored;
        self
    }

    pub fn with_excluded(mut self, excluded: usize) -> Self {
        self.excluded = excluded;
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }

    /// One-line human summary.
    pub fn summary(&self) -> String {
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        let rel = match self.target {
            Some(t) => format!("|{:.6} - {}| <= {}", self.statistic, t, self.threshold),
            None if self.kind == "two_sample_p" => format!("{:.6} > {}", self.statistic, self.threshold),
            None if self.kind == "count" => format!("{} == 0", self.statistic),
            None => format!("{:.6} < {}", self.statistic, self.threshold),
        };
        let mut s = format!("{verdict} {} [{} n={}] {rel}", self.name, self.kind, self.sample_size);
        if self.censored > 0 {
            let _ = write!(s, " censored={}", self.censored);
        }
        if self.excluded > 0 {
            let _ = write!(s, " excluded={}", self.excluded);
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatReport {
    pub experiment: String,
    pub tests: Vec<TestResult>,
    /// Wall-clock seconds; written only when requested.
    #[serde(skip)]
    pub runtime_s: f64,
}

impl StatReport {
    pub fn new(experiment: impl Into<String>) -> Self {
        StatReport { experiment: experiment.into(), tests: Vec::new(), runtime_s: 0.0 }
    }

    pub fn push(&mut self, t: TestResult) {
        self.tests.push(t);
    }

    pub fn passed(&self) -> bool {
        self.tests.iter().all(|t| t.pass)
    }

    pub fn get(&self, name: &str) -> Option<&TestResult> {
        self.tests.iter().find(|t| t.name == name)
    }

    pub fn merge(&mut self, other: StatReport) {
        self.tests.extend(other.tests);
        self.runtime_s += other.runtime_s;
    }
}

pub const CSV_HEADER: &str = "experiment,test,kind,sample_size,statistic,threshold,target,pass,censored,excluded,note";

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Reports as CSV; with `runtime` an extra column carries wall-clock seconds.
pub fn write_csv<W: Write>(mut w: W, reports: &[StatReport], runtime: bool) -> io::Result<()> {
    write!(w, "{CSV_HEADER}")?;
    if runtime {
        write!(w, ",runtime_s")?;
    }
    writeln!(w)?;
    for r in reports {
        for t in &r.tests {
            write!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{}",
                csv_field(&r.experiment),
                csv_field(&t.name),
                t.kind,
                t.sample_size,
                t.statistic,
                t.threshold,
                t.target.map(|v| v.to_string()).unwrap_or_default(),
                t.pass,
                t.censored,
                t.excluded,
                csv_field(&t.note)
            )?;
            if runtime {
                write!(w, ",{:.3}", r.runtime_s)?;
            }
            writeln!(w)?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct Line<'a> {
    experiment: &'a str,
    #[serde(flatten)]
    test: &'a TestResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    runtime_s: Option<f64>,
}

/// One JSON object per test.
pub fn write_jsonl<W: Write>(mut w: W, reports: &[StatReport], runtime: bool) -> io::Result<()> {
    for r in reports {
        for t in &r.tests {
            let line = Line { experiment: &r.experiment, test: t, runtime_s: runtime.then_some(r.runtime_s) };
            serde_json::to_writer(&mut w, &line)?;
            writeln!(w)?;
        }
    }
    Ok(())
}

/// Writes `report.csv` and `report.jsonl` into `dir`.
pub fn write_reports(dir: &Path, reports: &[StatReport], runtime: bool) -> io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let csv = std::fs::File::create(dir.join("report.csv"))?;
    write_csv(io::BufWriter::new(csv), reports, runtime)?;
    let jsonl = std::fs::File::create(dir.join("report.jsonl"))?;
    write_jsonl(io::BufWriter::new(jsonl), reports, runtime)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdicts() {
        assert!(TestResult::below("a", "ks", 10, 0.01, 0.02).pass);
        assert!(!TestResult::below("a", "ks", 10, 0.02, 0.02).pass);
        assert!(TestResult::above("p", "two_sample_p", 10, 0.5, 0.01).pass);
        assert!(TestResult::within("s", "slope", 10, -0.46, -0.5, 0.1).pass);
        assert!(!TestResult::exact_zero("id", 10, 1).pass);
    }

    #[test]
    fn csv_and_jsonl_shapes() {
        let mut r = StatReport::new("marginal");
        r.push(TestResult::below("ks, quoted", "ks", 3, 0.1, 0.2).with_note("a \"b\""));
        let mut buf = Vec::new();
        write_csv(&mut buf, std::slice::from_ref(&r), false).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert!(lines[1].starts_with("marginal,\"ks, quoted\",ks,3,0.1,0.2,,true,0,0,\"a \"\"b\"\"\""));
        let mut buf = Vec::new();
        write_jsonl(&mut buf, &[r], false).unwrap();
        let v: serde_json::Value = serde_json::from_slice(buf.trim_ascii_end()).unwrap();
        assert_eq!(v["experiment"], "marginal");
        assert_eq!(v["pass"], true);
        assert!(v.get("runtime_s").is_none());
    }
}
