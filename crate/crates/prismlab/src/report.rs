//! Suite configuration and JSON-first reporting.
//!
//! Reports are deterministic for a fixed config and seed up to the timing
//! fields; checks are assembled in sorted order by name.

use serde::{Deserialize, Serialize};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub suite: String,
    pub p: u32,
    /// Eisenstein polynomial, low-degree-first integer coefficients.
    pub eisenstein: Vec<i64>,
    pub m: u32,
    pub n: u32,
    pub l: u32,
    pub i: u32,
    pub depth: u32,
    pub seed: u64,
    pub nmax: u32,
    pub budget: u32,
}

impl SuiteConfig {
    pub fn new(suite: &str, p: u32, eisenstein: Vec<i64>) -> Self {
        SuiteConfig {
            suite: suite.to_string(),
            p,
            eisenstein,
            m: 12,
            n: 12,
            l: 8,
            i: 8,
            depth: 6,
            seed: 1,
            nmax: 4,
            budget: 64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    Undecided,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub status: Status,
    pub detail: String,
    pub millis: u128,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub suite: String,
    /// the requested configuration
    pub config: SuiteConfig,
    /// the effective working windows after guard adjustments
    pub effective: EffectiveWindows,
    pub checks: Vec<CheckRecord>,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EffectiveWindows {
    pub m: u32,
    pub n: u32,
    pub l: u32,
    pub i: u32,
    pub depth: u32,
}

pub struct ReportBuilder {
    suite: String,
    config: SuiteConfig,
    effective: EffectiveWindows,
    checks: Vec<CheckRecord>,
}

impl ReportBuilder {
    pub fn new(config: &SuiteConfig, effective: EffectiveWindows) -> Self {
        ReportBuilder {
            suite: config.suite.clone(),
            config: config.clone(),
            effective,
            checks: Vec::new(),
        }
    }

    pub fn check(&mut self, name: impl Into<String>, pass: bool, detail: impl Into<String>) {
        self.checks.push(CheckRecord {
            name: name.into(),
            status: if pass { Status::Pass } else { Status::Fail },
            detail: detail.into(),
            millis: 0,
        });
    }

    pub fn record(&mut self, name: impl Into<String>, status: Status, detail: impl Into<String>) {
        self.checks.push(CheckRecord { name: name.into(), status, detail: detail.into(), millis: 0 });
    }

    /// Run a closure as one timed check; an Err is a failure with the error
    /// text as detail.
    pub fn timed(
        &mut self,
        name: impl Into<String>,
        f: impl FnOnce() -> crate::error::Result<(bool, String)>,
    ) {
        let start = std::time::Instant::now();
        let (status, detail) = match f() {
            Ok((true, d)) => (Status::Pass, d),
            Ok((false, d)) => (Status::Fail, d),
            Err(e) => (Status::Fail, format!("error: {e}")),
        };
        self.checks.push(CheckRecord {
            name: name.into(),
            status,
            detail,
            millis: start.elapsed().as_millis(),
        });
    }

    pub fn finish(mut self) -> Report {
        self.checks.sort_by(|a, b| a.name.cmp(&b.name));
        // undecided records are observations, not failures
        let pass = self.checks.iter().all(|c| c.status != Status::Fail);
        Report {
            schema_version: REPORT_SCHEMA_VERSION,
            suite: self.suite,
            config: self.config,
            effective: self.effective,
            checks: self.checks,
            pass,
        }
    }
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization")
    }

    /// Human-readable table rendering.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "suite {} (p = {}, E = {:?})\n",
            self.suite, self.config.p, self.config.eisenstein
        ));
        out.push_str(&format!(
            "windows: M={} N={} L={} I={} D={}\n",
            self.effective.m, self.effective.n, self.effective.l, self.effective.i, self.effective.depth
        ));
        for c in &self.checks {
            let s = match c.status {
                Status::Pass => "pass",
                Status::Fail => "FAIL",
                Status::Undecided => "und.",
            };
            out.push_str(&format!("  [{s}] {:<44} {}\n", c.name, c.detail));
        }
        out.push_str(&format!("=> {}\n", if self.pass { "PASS" } else { "FAIL" }));
        out
    }
}

/// Guard window for phi-exact identities at precision m: L >= p*m/(p-1) + p.
pub fn guard_l(p: u32, m: u32) -> u32 {
    (p * m).div_ceil(p - 1) + p
}

/// Guard for the u-adic window: dropping u^N costs p^{N/e} in O_max, so
/// identities exact at precision m need N >= e*m plus margin.
pub fn guard_n(e_deg: u32, m: u32) -> u32 {
    e_deg * m + 2 * e_deg.max(2)
}
