//! Monte Carlo soft-error simulation.
//!
//! Upsets arrive per array as homogeneous Poisson processes. A failure
//! campaign records the time to the first upset that mitigation cannot
//! mask; a scrub race tracks how many upsets are waiting for correction.
//!
//! Every trial owns a ChaCha8 stream selected by its index, so results are
//! bit-identical for a given seed regardless of thread count.

mod arrivals;
mod campaign;
mod placement;
mod scrub;

use std::collections::BTreeMap;
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::DeviceProfile;
use crate::projection::{Deployment, EnvironmentSpec};
use crate::units::{MeanTimeKind, MeanTimeTo};

pub use arrivals::{sample_arrivals, sample_arrivals_seeded};
pub use campaign::{
    arrays_from_profile, run_failure_campaign, simulate_arrays, ArraySpec, CachePolicy,
    MitigationConfig, DEFAULT_HORIZON_ARRIVALS,
};
pub use placement::{place_upset, ShapeSampler};
pub use scrub::{run_scrub_race, ScrubRace};

pub const DEFAULT_SEED: u64 = 42;

/// Generator for trial `trial` of a run seeded with `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateMethod {
    /// Mean of fully observed samples.
    SampleMean,
    /// Total time on test over failures, for censored samples.
    ExponentialMle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanTimeEstimate {
    pub mean_time: MeanTimeTo,
    pub standard_error_hours: Option<f64>,
    pub method: EstimateMethod,
}

impl MeanTimeEstimate {
    /// Whether `expected_hours` lies within `k` standard errors.
    pub fn agrees_with(&self, expected_hours: f64, k: f64) -> bool {
        match (self.mean_time.hours(), self.standard_error_hours) {
            (Some(m), Some(se)) => (m - expected_hours).abs() <= k * se,
            _ => false,
        }
    }
}

pub(crate) fn mean_and_standard_error(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Mean time from observed first-failure times plus `censored` trials that
/// survived to `horizon`.
pub fn estimate_mean_time(
    observed: &[f64],
    censored: u64,
    horizon: f64,
    kind: MeanTimeKind,
) -> MeanTimeEstimate {
    if censored == 0 && !observed.is_empty() {
        let (mean, se) = mean_and_standard_error(observed);
        return MeanTimeEstimate {
            mean_time: MeanTimeTo::Finite { kind, hours: mean },
            standard_error_hours: Some(se),
            method: EstimateMethod::SampleMean,
        };
    }
    if observed.is_empty() {
        return MeanTimeEstimate {
            mean_time: MeanTimeTo::NoneObserved { kind },
            standard_error_hours: None,
            method: EstimateMethod::ExponentialMle,
        };
    }
    let failures = observed.len() as f64;
    let exposure = observed.iter().sum::<f64>() + censored as f64 * horizon;
    let mle = exposure / failures;
    MeanTimeEstimate {
        mean_time: MeanTimeTo::Finite { kind, hours: mle },
        standard_error_hours: Some(mle / failures.sqrt()),
        method: EstimateMethod::ExponentialMle,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimKind {
    FailureCampaign,
    ScrubRace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccumulationPoint {
    pub time_min: f64,
    pub mean_uncorrected: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacklogSummary {
    /// Time-averaged uncorrected count over the second half of the horizon,
    /// averaged over trials.
    pub steady_state_mean: f64,
    pub steady_state_standard_error: f64,
    pub final_mean: f64,
    /// Arrival rate over scrub rate; absent without scrubbing.
    pub utilisation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub kind: SimKind,
    pub seed: u64,
    pub trials: u64,
    pub horizon_hours: f64,
    /// Observed first-failure times in trial order; censored trials omitted.
    pub time_to_first_failure: Vec<f64>,
    pub censored_trials: u64,
    pub mttu_estimate: Option<MeanTimeEstimate>,
    /// Total unmitigated upset rate of the simulated arrays.
    pub analytic_rate_per_hour: Option<f64>,
    pub failure_counts: BTreeMap<String, u64>,
    pub uncorrected_accumulation: Vec<AccumulationPoint>,
    pub backlog: Option<BacklogSummary>,
}

impl SimResult {
    /// `sample,time_hours` rows of the observed first-failure times.
    pub fn write_samples_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["sample", "time_hours"])?;
        for (i, t) in self.time_to_first_failure.iter().enumerate() {
            out.write_record([i.to_string(), format!("{t:e}")])?;
        }
        out.flush()?;
        Ok(())
    }

    /// `time_min,mean_uncorrected` rows of the backlog series.
    pub fn write_accumulation_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["time_min", "mean_uncorrected"])?;
        for p in &self.uncorrected_accumulation {
            out.write_record([p.time_min.to_string(), p.mean_uncorrected.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}

fn one_device() -> u64 {
    1
}

/// Simulation config file. A `scrub_race` block selects the scrub race;
/// otherwise a failure campaign runs on `profile`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    #[serde(default)]
    pub profile: Option<String>,
    #[serde(default)]
    pub environment: EnvironmentSpec,
    #[serde(default = "one_device")]
    pub nodes: u64,
    #[serde(default)]
    pub mitigation: MitigationConfig,
    pub trials: u64,
    #[serde(default)]
    pub horizon_hours: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Restrict the campaign to these memory groups.
    #[serde(default)]
    pub groups: Vec<String>,
    #[serde(default)]
    pub scrub_race: Option<ScrubRace>,
}

impl SimConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: SimConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        Deployment::new(self.nodes)?;
        self.mitigation.validate()?;
        if let Some(race) = &self.scrub_race {
            race.validate()?;
        } else if self.profile.is_none() {
            return Err(Error::InvalidParameter(
                "a failure campaign needs a profile".into(),
            ));
        }
        Ok(())
    }

    /// Run with `seed_override` taking precedence over the config seed.
    pub fn run(
        &self,
        profile: Option<&DeviceProfile>,
        seed_override: Option<u64>,
    ) -> Result<SimResult> {
        self.validate()?;
        let seed = seed_override.or(self.seed).unwrap_or(DEFAULT_SEED);
        if let Some(race) = &self.scrub_race {
            return run_scrub_race(race, self.trials, seed);
        }
        let profile =
            profile.ok_or_else(|| Error::InvalidParameter("profile not loaded".into()))?;
        let env = self.environment.resolve()?;
        let arrays =
            arrays_from_profile(profile, &env, Deployment::new(self.nodes)?, &self.groups)?;
        simulate_arrays(
            &arrays,
            &profile.cram_shape_distribution()?,
            &self.mitigation,
            self.trials,
            seed,
            self.horizon_hours,
        )
    }
}
