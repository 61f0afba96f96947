use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::Result;

/// One checked statistic. `p_value` is absent for deterministic checks;
/// `reps` and `seed` are 0 there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub experiment: String,
    pub statistic: String,
    pub estimate: f64,
    pub target: f64,
    pub stderr: f64,
    pub p_value: Option<f64>,
    pub reps: usize,
    pub seed: u64,
    #[serde(skip)]
    pub passed: bool,
}

impl TestReport {
    pub fn line(&self) -> String {
        let p = self.p_value.map_or_else(|| "-".to_string(), |p| format!("{p:.4}"));
        format!(
            "{} {}/{}: estimate={:.6} target={:.6} stderr={:.2e} p={}",
            if self.passed { "PASS" } else { "FAIL" },
            self.experiment,
            self.statistic,
            self.estimate,
            self.target,
            self.stderr,
            p
        )
    }
}

pub fn all_passed(reports: &[TestReport]) -> bool {
    reports.iter().all(|r| r.passed)
}

pub fn reports_to_csv(reports: &[TestReport]) -> String {
    let mut out = String::from("experiment,statistic,estimate,target,stderr,p_value,reps,seed\n");
    for r in reports {
        let p = r.p_value.map(|p| p.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.experiment, r.statistic, r.estimate, r.target, r.stderr, p, r.reps, r.seed
        );
    }
    out
}

pub fn reports_to_json(reports: &[TestReport]) -> Result<String> {
    Ok(serde_json::to_string_pretty(reports)?)
}
