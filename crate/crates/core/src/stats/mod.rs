//! Cross-section estimation with exact Poisson intervals.

mod campaign;
pub mod chi2;
mod estimate;

pub use campaign::{
    breakdown_from_log, dynamic_cross_sections, parse_logs_csv, parse_logs_json, total_log,
    ApplicationSigma, CampaignLog, ErrorCategory, ErrorRateBreakdown, OutcomeCounts, RunOutcome,
    RunResult,
};
pub use estimate::{
    estimate_cross_section, garwood_interval, Basis, Confidence, CrossSectionEstimate,
    EstimateOptions,
};
