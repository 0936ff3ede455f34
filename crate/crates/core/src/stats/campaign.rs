//! Application-level (dynamic) cross-sections from campaign logs, and the
//! split of failure rates into critical / tolerable / hang categories.

use std::collections::BTreeMap;
use std::io::Read;

use serde::{Deserialize, Serialize};

use super::estimate::{estimate_cross_section, Basis, CrossSectionEstimate, EstimateOptions};
use crate::error::{Error, Result};
use crate::units::{fit_from_cross_section, FitRate, Fluence, Flux};

/// Outcome of a single benchmark execution under beam.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunResult {
    Correct,
    TolerableSdc,
    CriticalSdc,
    CrashRecoverable,
    CrashSoftPersistent,
    Timeout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub benchmark: String,
    pub result: RunResult,
    pub duration_s: f64,
}

/// Per-category run counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct OutcomeCounts {
    pub runs: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correct: Option<u64>,
    #[serde(default)]
    pub tolerable_sdc: u64,
    #[serde(default)]
    pub critical_sdc: u64,
    #[serde(default)]
    pub crash_recoverable: u64,
    #[serde(default)]
    pub crash_soft_persistent: u64,
    #[serde(default)]
    pub timeout: u64,
}

impl OutcomeCounts {
    pub fn sdc(&self) -> u64 {
        self.tolerable_sdc + self.critical_sdc
    }

    /// Crashes of either kind plus result-query timeouts.
    pub fn hang(&self) -> u64 {
        self.crash_recoverable + self.crash_soft_persistent + self.timeout
    }

    pub fn errors(&self) -> u64 {
        self.sdc() + self.hang()
    }

    pub fn correct_runs(&self) -> u64 {
        self.correct
            .unwrap_or(self.runs.saturating_sub(self.errors()))
    }

    pub fn count(&self, category: ErrorCategory) -> u64 {
        match category {
            ErrorCategory::TolerableSdc => self.tolerable_sdc,
            ErrorCategory::CriticalSdc => self.critical_sdc,
            ErrorCategory::CrashRecoverable => self.crash_recoverable,
            ErrorCategory::CrashSoftPersistent => self.crash_soft_persistent,
            ErrorCategory::Timeout => self.timeout,
            ErrorCategory::Sdc => self.sdc(),
            ErrorCategory::Crash => self.hang(),
            ErrorCategory::CriticalPlusHang => self.critical_sdc + self.hang(),
            ErrorCategory::All => self.errors(),
        }
    }

    fn add(&mut self, result: RunResult) {
        self.runs += 1;
        match result {
            RunResult::Correct => *self.correct.get_or_insert(0) += 1,
            RunResult::TolerableSdc => self.tolerable_sdc += 1,
            RunResult::CriticalSdc => self.critical_sdc += 1,
            RunResult::CrashRecoverable => self.crash_recoverable += 1,
            RunResult::CrashSoftPersistent => self.crash_soft_persistent += 1,
            RunResult::Timeout => self.timeout += 1,
        }
    }
}

/// Error categories reported by [`dynamic_cross_sections`]: the five raw
/// outcomes plus the combined SDC, crash (hang), C+H and all-error groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCategory {
    CriticalSdc,
    TolerableSdc,
    CrashRecoverable,
    CrashSoftPersistent,
    Timeout,
    Sdc,
    Crash,
    CriticalPlusHang,
    All,
}

impl ErrorCategory {
    pub const ALL: [ErrorCategory; 9] = [
        ErrorCategory::CriticalSdc,
        ErrorCategory::TolerableSdc,
        ErrorCategory::CrashRecoverable,
        ErrorCategory::CrashSoftPersistent,
        ErrorCategory::Timeout,
        ErrorCategory::Sdc,
        ErrorCategory::Crash,
        ErrorCategory::CriticalPlusHang,
        ErrorCategory::All,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ErrorCategory::CriticalSdc => "critical_sdc",
            ErrorCategory::TolerableSdc => "tolerable_sdc",
            ErrorCategory::CrashRecoverable => "crash_recoverable",
            ErrorCategory::CrashSoftPersistent => "crash_soft_persistent",
            ErrorCategory::Timeout => "timeout",
            ErrorCategory::Sdc => "sdc",
            ErrorCategory::Crash => "crash",
            ErrorCategory::CriticalPlusHang => "critical_plus_hang",
            ErrorCategory::All => "all",
        }
    }
}

/// One benchmark's beam campaign: outcome counts and accumulated fluence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignLog {
    pub benchmark: String,
    #[serde(rename = "fluence_n_per_cm2")]
    pub fluence: Fluence,
    pub counts: OutcomeCounts,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flux_during_test: Option<Flux>,
}

impl CampaignLog {
    pub fn new(
        benchmark: impl Into<String>,
        fluence: Fluence,
        counts: OutcomeCounts,
    ) -> Result<Self> {
        let log = Self {
            benchmark: benchmark.into(),
            fluence,
            counts,
            flux_during_test: None,
        };
        log.validate()?;
        Ok(log)
    }

    /// Aggregate individual run outcomes of one benchmark.
    pub fn from_runs(
        benchmark: impl Into<String>,
        fluence: Fluence,
        runs: &[RunOutcome],
    ) -> Result<Self> {
        let benchmark = benchmark.into();
        let mut counts = OutcomeCounts {
            correct: Some(0),
            ..Default::default()
        };
        for run in runs.iter().filter(|r| r.benchmark == benchmark) {
            if !(run.duration_s >= 0.0) {
                return Err(Error::negative("run duration", run.duration_s));
            }
            counts.add(run.result);
        }
        Self::new(benchmark, fluence, counts)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fluence.value() > 0.0) {
            return Err(Error::non_positive("fluence", self.fluence.value()));
        }
        let c = &self.counts;
        if c.errors() > c.runs {
            return Err(Error::CountsExceedRuns {
                benchmark: self.benchmark.clone(),
                errors: c.errors(),
                runs: c.runs,
            });
        }
        if let Some(correct) = c.correct {
            if correct + c.errors() != c.runs {
                return Err(Error::InvalidParameter(format!(
                    "{}: categories sum to {} but runs = {}",
                    self.benchmark,
                    correct + c.errors(),
                    c.runs
                )));
            }
        }
        Ok(())
    }
}

/// Parse campaign logs from JSON (one object or an array of objects).
pub fn parse_logs_json(text: &str) -> Result<Vec<CampaignLog>> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    let logs: Vec<CampaignLog> = match value {
        serde_json::Value::Array(_) => serde_json::from_value(value)?,
        _ => vec![serde_json::from_value(value)?],
    };
    for log in &logs {
        log.validate()?;
    }
    Ok(logs)
}

/// Parse campaign logs from CSV rows `benchmark,category,count`.
///
/// `category` is one of the outcome names (`runs`, `correct`,
/// `tolerable_sdc`, `critical_sdc`, `crash_recoverable`,
/// `crash_soft_persistent`, `timeout`) or `fluence_n_per_cm2`, whose count
/// column carries the benchmark fluence. Benchmarks keep first-seen order.
pub fn parse_logs_csv<R: Read>(reader: R) -> Result<Vec<CampaignLog>> {
    #[derive(Deserialize)]
    struct Row {
        benchmark: String,
        category: String,
        count: f64,
    }

    let mut order: Vec<String> = Vec::new();
    let mut acc: BTreeMap<String, (Option<f64>, OutcomeCounts)> = BTreeMap::new();
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    for (line, row) in rdr.deserialize::<Row>().enumerate() {
        let row = row?;
        let entry = acc.entry(row.benchmark.clone()).or_insert_with(|| {
            order.push(row.benchmark.clone());
            (None, OutcomeCounts::default())
        });
        let as_count = || -> Result<u64> {
            if row.count >= 0.0 && row.count.fract() == 0.0 {
                Ok(row.count as u64)
            } else {
                Err(Error::MalformedInput(format!(
                    "row {}: count {} is not a non-negative integer",
                    line + 2,
                    row.count
                )))
            }
        };
        let counts = &mut entry.1;
        match row.category.as_str() {
            "fluence_n_per_cm2" | "fluence" => entry.0 = Some(row.count),
            "runs" => counts.runs = as_count()?,
            "correct" => counts.correct = Some(as_count()?),
            "tolerable_sdc" => counts.tolerable_sdc = as_count()?,
            "critical_sdc" => counts.critical_sdc = as_count()?,
            "crash_recoverable" => counts.crash_recoverable = as_count()?,
            "crash_soft_persistent" => counts.crash_soft_persistent = as_count()?,
            "timeout" => counts.timeout = as_count()?,
            other => {
                return Err(Error::MalformedInput(format!(
                    "row {}: unknown category '{other}'",
                    line + 2
                )))
            }
        }
    }
    order
        .into_iter()
        .map(|name| {
            let (fluence, counts) = acc.remove(&name).expect("benchmark recorded");
            let fluence = fluence.ok_or_else(|| {
                Error::MalformedInput(format!("benchmark '{name}' has no fluence_n_per_cm2 row"))
            })?;
            CampaignLog::new(name, Fluence::new(fluence)?, counts)
        })
        .collect()
}

/// Per-device dynamic cross-section for every error category.
pub fn dynamic_cross_sections(
    log: &CampaignLog,
    options: EstimateOptions,
) -> Result<BTreeMap<ErrorCategory, CrossSectionEstimate>> {
    ErrorCategory::ALL
        .iter()
        .map(|&cat| {
            estimate_cross_section(
                log.counts.count(cat),
                log.fluence,
                Basis::PerDevice,
                options,
            )
            .map(|e| (cat, e))
        })
        .collect()
}

/// Per-device cross-sections of one application split into the three
/// failure-rate terms.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ApplicationSigma {
    pub critical: f64,
    pub tolerable: f64,
    pub hang: f64,
}

impl ApplicationSigma {
    pub fn from_log(log: &CampaignLog) -> Self {
        let phi = log.fluence.value();
        let c = &log.counts;
        Self {
            critical: c.critical_sdc as f64 / phi,
            tolerable: c.tolerable_sdc as f64 / phi,
            hang: c.hang() as f64 / phi,
        }
    }

    pub fn breakdown(&self, flux: Flux) -> Result<ErrorRateBreakdown> {
        Ok(ErrorRateBreakdown {
            fit_critical: fit_from_cross_section(self.critical, flux)?,
            fit_tolerable: fit_from_cross_section(self.tolerable, flux)?,
            fit_hang: fit_from_cross_section(self.hang, flux)?,
        })
    }
}

/// FIT split into critical SDC, tolerable SDC and hang (crash/timeout).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ErrorRateBreakdown {
    pub fit_critical: FitRate,
    pub fit_tolerable: FitRate,
    pub fit_hang: FitRate,
}

impl ErrorRateBreakdown {
    /// Failure rate ignoring tolerable SDCs.
    pub fn fit_c_plus_h(&self) -> FitRate {
        self.fit_critical + self.fit_hang
    }

    /// Every error counts as a failure.
    pub fn fit_all(&self) -> FitRate {
        self.fit_c_plus_h() + self.fit_tolerable
    }

    pub fn scaled(&self, factor: u64) -> Self {
        Self {
            fit_critical: self.fit_critical.for_devices(factor),
            fit_tolerable: self.fit_tolerable.for_devices(factor),
            fit_hang: self.fit_hang.for_devices(factor),
        }
    }
}

/// Sum of several logs: counts and fluences add up. `correct` is kept only
/// when every log has it.
pub fn total_log(name: impl Into<String>, logs: &[CampaignLog]) -> Result<CampaignLog> {
    if logs.is_empty() {
        return Err(Error::InvalidParameter("no logs to total".into()));
    }
    let mut counts = OutcomeCounts {
        correct: Some(0),
        ..Default::default()
    };
    let mut fluence = 0.0;
    for log in logs {
        let c = &log.counts;
        counts.runs += c.runs;
        counts.correct = counts.correct.zip(c.correct).map(|(a, b)| a + b);
        counts.tolerable_sdc += c.tolerable_sdc;
        counts.critical_sdc += c.critical_sdc;
        counts.crash_recoverable += c.crash_recoverable;
        counts.crash_soft_persistent += c.crash_soft_persistent;
        counts.timeout += c.timeout;
        fluence += log.fluence.value();
    }
    CampaignLog::new(name, Fluence::new(fluence)?, counts)
}

pub fn breakdown_from_log(log: &CampaignLog, flux: Flux) -> Result<ErrorRateBreakdown> {
    if !(flux.value() > 0.0) {
        return Err(Error::non_positive("flux", flux.value()));
    }
    ApplicationSigma::from_log(log).breakdown(flux)
}
