use haegan::selftest::{run_selftest, Fault, SelfTestConfig, SelfTestReport};
use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, Scale};
use crate::error::{CliError, Result};
use crate::output::RunDir;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelftestRunConfig {
    pub seed: u64,
    pub cases: usize,
    pub gradient_cases: usize,
    /// Test fixture: clamp exp-map time components to this value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fault_time_clamp: Option<f64>,
}

impl RunConfig for SelftestRunConfig {
    const NAME: &'static str = "manifold-selftest";

    fn preset(scale: Scale) -> Self {
        match scale {
            Scale::Paper => Self { seed: 0, cases: 10_000, gradient_cases: 50, fault_time_clamp: None },
            Scale::Ci => Self { seed: 0, cases: 2_000, gradient_cases: 10, fault_time_clamp: None },
        }
    }

    fn seed(&self) -> u64 {
        self.seed
    }

    fn validate(&self) -> Result<()> {
        if self.cases == 0 {
            return Err(CliError::Config("cases must be positive".into()));
        }
        Ok(())
    }
}

/// Runs the property table and writes `properties.csv`. Fails with an
/// invariant error when any property exceeds its tolerance.
pub fn execute(cfg: &SelftestRunConfig, dir: &mut RunDir) -> Result<SelfTestReport> {
    let report = run_selftest(&SelfTestConfig {
        cases: cfg.cases,
        gradient_cases: cfg.gradient_cases,
        seed: cfg.seed,
        fault: cfg.fault_time_clamp.map(Fault::TimeClamp),
    })?;
    let mut table = dir.table("properties.csv", &["property", "cases", "max_error", "tolerance", "passed"])?;
    println!("{:<28} {:>8} {:>12} {:>10}  result", "property", "cases", "max_error", "tolerance");
    for p in &report.properties {
        println!(
            "{:<28} {:>8} {:>12.3e} {:>10.1e}  {}",
            p.name,
            p.cases,
            p.max_error,
            p.tolerance,
            if p.passed() { "pass" } else { "FAIL" }
        );
        table.row(vec![p.name.as_str().into(), p.cases.into(), p.max_error.into(), p.tolerance.into(), p.passed().into()])?;
    }
    table.finish()?;
    if !report.all_passed() {
        let failed: Vec<&str> =
            report.properties.iter().filter(|p| !p.passed()).map(|p| p.name.as_str()).collect();
        return Err(CliError::Invariant(format!("self-test failed: {}", failed.join(", "))));
    }
    Ok(report)
}
