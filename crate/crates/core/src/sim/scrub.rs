use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::arrivals::sample_arrivals;
use super::{
    mean_and_standard_error, trial_rng, AccumulationPoint, BacklogSummary, SimKind, SimResult,
};
use crate::error::{Error, Result};

fn default_series_points() -> usize {
    60
}

/// Upsets arriving at one rate race a scrubber correcting them at another.
///
/// The scrubber is a single FIFO server with a fixed service time of
/// `1 / scrub_rate_per_min`. An upset only joins the queue once the scan
/// reaches its frame, modelled as a uniform delay in `[0, scan_period_min)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScrubRace {
    pub arrival_rate_per_min: f64,
    /// 0 disables scrubbing.
    pub scrub_rate_per_min: f64,
    pub horizon_min: f64,
    /// Full-device scan latency; 0 means upsets are seen immediately.
    #[serde(default)]
    pub scan_period_min: f64,
    #[serde(default = "default_series_points")]
    pub series_points: usize,
}

impl ScrubRace {
    pub fn new(arrival_rate_per_min: f64, scrub_rate_per_min: f64, horizon_min: f64) -> Self {
        Self {
            arrival_rate_per_min,
            scrub_rate_per_min,
            horizon_min,
            scan_period_min: 0.0,
            series_points: default_series_points(),
        }
    }

    /// Scan latency of a scrubber visiting `frame_scan_rate_per_min` frames
    /// per minute over `device_frames` frames.
    pub fn with_device_scan(
        mut self,
        device_frames: u32,
        frame_scan_rate_per_min: f64,
    ) -> Result<Self> {
        if !(frame_scan_rate_per_min > 0.0) {
            return Err(Error::non_positive(
                "frame scan rate",
                frame_scan_rate_per_min,
            ));
        }
        self.scan_period_min = f64::from(device_frames) / frame_scan_rate_per_min;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("arrival_rate_per_min", self.arrival_rate_per_min),
            ("scrub_rate_per_min", self.scrub_rate_per_min),
            ("scan_period_min", self.scan_period_min),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::negative(name, v));
            }
        }
        if !(self.horizon_min.is_finite() && self.horizon_min > 0.0) {
            return Err(Error::non_positive("horizon_min", self.horizon_min));
        }
        if self.series_points == 0 {
            return Err(Error::InvalidParameter(
                "series_points must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

struct RaceTrial {
    arrivals: u64,
    corrected: u64,
    steady_backlog: f64,
    series: Vec<u64>,
}

fn race_trial(race: &ScrubRace, seed: u64, trial: u64) -> Result<RaceTrial> {
    let mut rng = trial_rng(seed, trial);
    let h = race.horizon_min;
    let arrivals = sample_arrivals(race.arrival_rate_per_min, h, &mut rng)?;

    // (time seen by the scrubber, arrival index)
    let mut visible: Vec<(f64, usize)> = arrivals
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            let delay = if race.scan_period_min > 0.0 {
                rng.gen::<f64>() * race.scan_period_min
            } else {
                0.0
            };
            (a + delay, i)
        })
        .collect();
    visible.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));

    let mut fixed_at = vec![f64::INFINITY; arrivals.len()];
    if race.scrub_rate_per_min > 0.0 {
        let service = 1.0 / race.scrub_rate_per_min;
        let mut free_at = 0.0f64;
        for &(seen, i) in &visible {
            free_at = free_at.max(seen) + service;
            fixed_at[i] = free_at;
        }
    }

    // time-averaged backlog over the second half of the horizon
    let (lo, hi) = (h / 2.0, h);
    let occupied: f64 = arrivals
        .iter()
        .zip(&fixed_at)
        .map(|(&a, &d)| (d.min(hi) - a.max(lo)).max(0.0))
        .sum();
    let series = (1..=race.series_points)
        .map(|k| {
            let t = h * k as f64 / race.series_points as f64;
            arrivals
                .iter()
                .zip(&fixed_at)
                .filter(|&(&a, &d)| a <= t && t < d)
                .count() as u64
        })
        .collect();
    Ok(RaceTrial {
        arrivals: arrivals.len() as u64,
        corrected: fixed_at.iter().filter(|&&d| d <= h).count() as u64,
        steady_backlog: occupied / (hi - lo),
        series,
    })
}

/// Monte Carlo scrub race. Trials run in parallel, each on its own
/// generator stream, and are aggregated in trial order.
pub fn run_scrub_race(race: &ScrubRace, trials: u64, seed: u64) -> Result<SimResult> {
    race.validate()?;
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let outcomes = (0..trials)
        .into_par_iter()
        .map(|i| race_trial(race, seed, i))
        .collect::<Result<Vec<_>>>()?;

    let n = outcomes.len() as f64;
    let steady: Vec<f64> = outcomes.iter().map(|o| o.steady_backlog).collect();
    let (steady_mean, steady_se) = mean_and_standard_error(&steady);
    let uncorrected_accumulation: Vec<AccumulationPoint> = (0..race.series_points)
        .map(|k| AccumulationPoint {
            time_min: race.horizon_min * (k + 1) as f64 / race.series_points as f64,
            mean_uncorrected: outcomes.iter().map(|o| o.series[k] as f64).sum::<f64>() / n,
        })
        .collect();
    let final_mean = uncorrected_accumulation
        .last()
        .map_or(0.0, |p| p.mean_uncorrected);

    let mut failure_counts = BTreeMap::new();
    failure_counts.insert(
        "arrivals".to_string(),
        outcomes.iter().map(|o| o.arrivals).sum(),
    );
    failure_counts.insert(
        "corrected".to_string(),
        outcomes.iter().map(|o| o.corrected).sum(),
    );

    Ok(SimResult {
        kind: SimKind::ScrubRace,
        seed,
        trials,
        horizon_hours: race.horizon_min / 60.0,
        time_to_first_failure: Vec::new(),
        censored_trials: 0,
        mttu_estimate: None,
        analytic_rate_per_hour: None,
        failure_counts,
        uncorrected_accumulation,
        backlog: Some(BacklogSummary {
            steady_state_mean: steady_mean,
            steady_state_standard_error: steady_se,
            final_mean,
            utilisation: (race.scrub_rate_per_min > 0.0)
                .then(|| race.arrival_rate_per_min / race.scrub_rate_per_min),
        }),
    })
}
