use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::arrivals::exponential;
use super::placement::{place_upset, ShapeSampler};
use super::{estimate_mean_time, trial_rng, SimKind, SimResult};
use crate::error::{Error, Result};
use crate::profile::DeviceProfile;
use crate::projection::{Deployment, Environment};
use crate::readback::{MemoryGeometry, MemoryKind, ShapeDistribution};
use crate::units::MeanTimeKind;

/// Protection of a non-configuration array (cache, BRAM, ...).
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default,
)]
pub enum CachePolicy {
    /// Single-bit errors are detected and the line invalidated; a dirty
    /// line loses its data. Double-bit errors go undetected.
    #[serde(rename = "parity")]
    ParityDetectInvalidate,
    /// Single-bit errors are corrected; double-bit errors are detected and
    /// only lose data on a dirty line.
    #[serde(rename = "secded")]
    SecdedCorrect,
    #[default]
    #[serde(rename = "none")]
    None,
}

impl CachePolicy {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "parity" | "parity-detect-invalidate" => Some(Self::ParityDetectInvalidate),
            "secded" | "secded-correct" | "ecc" => Some(Self::SecdedCorrect),
            "none" => Some(Self::None),
            _ => None,
        }
    }
}

fn half() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MitigationConfig {
    /// Frame corrections per minute; 0 disables scrubbing.
    #[serde(default)]
    pub scrub_rate_per_min: f64,
    /// SECDED per configuration frame (CRAM only).
    #[serde(default)]
    pub frame_ecc: bool,
    /// Spread sampled CRAM shapes so no two bits share a frame.
    #[serde(default)]
    pub interleaving: bool,
    /// Per-array policy, keyed by array name.
    #[serde(default)]
    pub cache_policy: BTreeMap<String, CachePolicy>,
    /// Fall back to the protection recorded in the profile for arrays not
    /// listed in `cache_policy`.
    #[serde(default)]
    pub use_profile_protection: bool,
    #[serde(default = "half")]
    pub dirty_line_fraction: f64,
    /// Probability that a non-configuration upset flips two bits of one
    /// protected word.
    #[serde(default)]
    pub double_bit_fraction: f64,
}

impl Default for MitigationConfig {
    fn default() -> Self {
        Self::off()
    }
}

impl MitigationConfig {
    pub fn off() -> Self {
        Self {
            scrub_rate_per_min: 0.0,
            frame_ecc: false,
            interleaving: false,
            cache_policy: BTreeMap::new(),
            use_profile_protection: false,
            dirty_line_fraction: 0.5,
            double_bit_fraction: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scrub_rate_per_min.is_finite() && self.scrub_rate_per_min >= 0.0) {
            return Err(Error::negative(
                "scrub_rate_per_min",
                self.scrub_rate_per_min,
            ));
        }
        for (name, p) in [
            ("dirty_line_fraction", self.dirty_line_fraction),
            ("double_bit_fraction", self.double_bit_fraction),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidQuantity {
                    name,
                    value: p,
                    reason: "must be in [0, 1]",
                });
            }
        }
        Ok(())
    }

    /// True when no mechanism can mask an upset.
    pub fn is_off(&self) -> bool {
        !self.frame_ecc
            && self.cache_policy.values().all(|p| *p == CachePolicy::None)
            && !self.use_profile_protection
    }

    pub fn policy_for(&self, array: &ArraySpec) -> CachePolicy {
        if let Some(p) = self.cache_policy.get(&array.geometry.name) {
            return *p;
        }
        if self.use_profile_protection {
            return array.protection.unwrap_or_default();
        }
        CachePolicy::None
    }

    fn service_hours(&self) -> f64 {
        if self.scrub_rate_per_min > 0.0 {
            1.0 / (self.scrub_rate_per_min * 60.0)
        } else {
            f64::INFINITY
        }
    }
}

/// One simulated array: a Poisson upset source with a geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArraySpec {
    pub geometry: MemoryGeometry,
    /// Upset events per hour across the whole deployment.
    pub rate_per_hour: f64,
    #[serde(default)]
    pub protection: Option<CachePolicy>,
}

impl ArraySpec {
    pub fn name(&self) -> &str {
        &self.geometry.name
    }
}

/// Arrays of `profile` at the given environment and deployment; the rate
/// of each is σ_bit × bit count × flux × devices. `groups` restricts the
/// selection when non-empty.
pub fn arrays_from_profile(
    profile: &DeviceProfile,
    env: &Environment,
    dep: Deployment,
    groups: &[String],
) -> Result<Vec<ArraySpec>> {
    let arrays: Vec<ArraySpec> = profile
        .memories
        .iter()
        .filter(|m| groups.is_empty() || groups.contains(&m.group))
        .map(|m| ArraySpec {
            geometry: m.geometry.clone(),
            rate_per_hour: m.upset_rate_per_hour(env.flux) * dep.n_devices as f64,
            protection: m.protection,
        })
        .collect();
    if arrays.is_empty() {
        return Err(Error::EmptyProfile(profile.name.clone()));
    }
    Ok(arrays)
}

struct ArrayState<'a> {
    spec: &'a ArraySpec,
    policy: CachePolicy,
}

struct CramState {
    /// frame -> time its pending upset is repaired
    pending: HashMap<u32, f64>,
    scrubber_free_at: f64,
}

fn upset_fails<R: Rng + ?Sized>(
    array: &ArrayState<'_>,
    t: f64,
    mitigation: &MitigationConfig,
    shapes: &ShapeSampler,
    cram: &mut CramState,
    rng: &mut R,
) -> Result<bool> {
    if array.spec.geometry.kind == MemoryKind::Cram {
        let idx = shapes.sample_index(rng);
        if !mitigation.frame_ecc || shapes.has_multi_bit_frame(idx) {
            return Ok(true);
        }
        let bits = place_upset(shapes.shape(idx), &array.spec.geometry, 0, rng)?;
        let mut frames: Vec<u32> = bits.iter().map(|b| b.frame).collect();
        frames.dedup();
        // a second upset in a frame not yet repaired beats SECDED
        if frames
            .iter()
            .any(|f| cram.pending.get(f).is_some_and(|&fix| fix > t))
        {
            return Ok(true);
        }
        let service = mitigation.service_hours();
        for f in frames {
            cram.scrubber_free_at = cram.scrubber_free_at.max(t) + service;
            cram.pending.insert(f, cram.scrubber_free_at);
        }
        return Ok(false);
    }
    let double = rng.gen_bool(mitigation.double_bit_fraction);
    let dirty = rng.gen_bool(mitigation.dirty_line_fraction);
    Ok(match array.policy {
        CachePolicy::None => true,
        CachePolicy::ParityDetectInvalidate => double || dirty,
        CachePolicy::SecdedCorrect => double && dirty,
    })
}

/// Per-trial first failure: (time, array index), or None if censored.
fn campaign_trial(
    arrays: &[ArrayState<'_>],
    mitigation: &MitigationConfig,
    shapes: &ShapeSampler,
    horizon: f64,
    seed: u64,
    trial: u64,
) -> Result<Option<(f64, usize)>> {
    let mut rng = trial_rng(seed, trial);
    let mut first: Option<(f64, usize)> = None;
    for (i, a) in arrays.iter().enumerate() {
        if a.spec.rate_per_hour <= 0.0 {
            continue;
        }
        // arrays are independent, so each only needs simulating up to the
        // earliest failure found so far
        let limit = first.map_or(horizon, |(t, _)| t);
        let mut cram = CramState {
            pending: HashMap::new(),
            scrubber_free_at: 0.0,
        };
        let mut t = 0.0;
        loop {
            t += exponential(&mut rng, a.spec.rate_per_hour);
            if t > limit {
                break;
            }
            if upset_fails(a, t, mitigation, shapes, &mut cram, &mut rng)? {
                first = Some((t, i));
                break;
            }
        }
    }
    Ok(first)
}

/// Default horizon: 1000 mean unmitigated inter-arrival times.
pub const DEFAULT_HORIZON_ARRIVALS: f64 = 1000.0;

/// Time-to-first-failure campaign over explicit arrays. CRAM arrays draw
/// event shapes from `shapes`; every other array sees single-word upsets.
pub fn simulate_arrays(
    arrays: &[ArraySpec],
    shapes: &ShapeDistribution,
    mitigation: &MitigationConfig,
    trials: u64,
    seed: u64,
    horizon_hours: Option<f64>,
) -> Result<SimResult> {
    mitigation.validate()?;
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    if arrays.is_empty() {
        return Err(Error::EmptyProfile("no arrays to simulate".into()));
    }
    for a in arrays {
        a.geometry.validate()?;
        if !(a.rate_per_hour.is_finite() && a.rate_per_hour >= 0.0) {
            return Err(Error::negative("array rate", a.rate_per_hour));
        }
    }
    let total_rate: f64 = arrays.iter().map(|a| a.rate_per_hour).sum();
    let horizon = match horizon_hours {
        Some(h) if h.is_finite() && h > 0.0 => h,
        Some(h) => return Err(Error::non_positive("horizon_hours", h)),
        None if total_rate > 0.0 => DEFAULT_HORIZON_ARRIVALS / total_rate,
        None => {
            return Err(Error::InvalidParameter(
                "all arrival rates are zero; set an explicit horizon".into(),
            ))
        }
    };

    let mut sampler = ShapeSampler::new(shapes)?;
    if mitigation.interleaving {
        sampler = sampler.interleaved();
    }
    let states: Vec<ArrayState<'_>> = arrays
        .iter()
        .map(|spec| ArrayState {
            spec,
            policy: mitigation.policy_for(spec),
        })
        .collect();

    let outcomes = (0..trials)
        .into_par_iter()
        .map(|i| campaign_trial(&states, mitigation, &sampler, horizon, seed, i))
        .collect::<Result<Vec<_>>>()?;

    let mut failure_counts: BTreeMap<String, u64> = BTreeMap::new();
    let mut times = Vec::new();
    let mut censored = 0u64;
    for o in &outcomes {
        match o {
            Some((t, i)) => {
                times.push(*t);
                *failure_counts
                    .entry(arrays[*i].name().to_string())
                    .or_default() += 1;
            }
            None => censored += 1,
        }
    }
    if censored > 0 {
        failure_counts.insert("censored".into(), censored);
    }
    let kind = if mitigation.is_off() {
        MeanTimeKind::Upset
    } else {
        MeanTimeKind::Failure
    };
    Ok(SimResult {
        kind: SimKind::FailureCampaign,
        seed,
        trials,
        horizon_hours: horizon,
        mttu_estimate: Some(estimate_mean_time(&times, censored, horizon, kind)),
        time_to_first_failure: times,
        censored_trials: censored,
        analytic_rate_per_hour: Some(total_rate),
        failure_counts,
        uncorrected_accumulation: Vec::new(),
        backlog: None,
    })
}

/// Failure campaign for every array of a profile.
pub fn run_failure_campaign(
    profile: &DeviceProfile,
    mitigation: &MitigationConfig,
    env: &Environment,
    dep: Deployment,
    trials: u64,
    seed: u64,
) -> Result<SimResult> {
    let arrays = arrays_from_profile(profile, env, dep, &[])?;
    simulate_arrays(
        &arrays,
        &profile.cram_shape_distribution()?,
        mitigation,
        trials,
        seed,
        None,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::readback::ShapeSignature;

    fn array(name: &str, kind: MemoryKind, rate: f64) -> ArraySpec {
        ArraySpec {
            geometry: MemoryGeometry::new(name, kind, 1024, 512).unwrap(),
            rate_per_hour: rate,
            protection: None,
        }
    }

    fn failure_rate(r: &SimResult) -> f64 {
        1.0 / r
            .mttu_estimate
            .as_ref()
            .unwrap()
            .mean_time
            .hours()
            .unwrap_or(f64::INFINITY)
    }

    #[test]
    fn unmitigated_single_array_matches_exponential() {
        let arrays = [array("BRAM", MemoryKind::Bram, 0.25)];
        let r = simulate_arrays(
            &arrays,
            &ShapeDistribution::single_bit_only(),
            &MitigationConfig::off(),
            10_000,
            1,
            None,
        )
        .unwrap();
        let est = r.mttu_estimate.unwrap();
        let se = est.standard_error_hours.unwrap();
        assert_eq!(r.censored_trials, 0);
        assert!((est.mean_time.hours().unwrap() - 4.0).abs() < 3.0 * se);
        assert_eq!(est.mean_time.kind(), MeanTimeKind::Upset);
    }

    #[test]
    fn superposition_of_arrays() {
        let arrays = [
            array("a", MemoryKind::Bram, 0.3),
            array("b", MemoryKind::Srl, 1.7),
        ];
        let r = simulate_arrays(
            &arrays,
            &ShapeDistribution::single_bit_only(),
            &MitigationConfig::off(),
            10_000,
            2,
            None,
        )
        .unwrap();
        let est = r.mttu_estimate.unwrap();
        assert!(
            (est.mean_time.hours().unwrap() - 0.5).abs() < 3.0 * est.standard_error_hours.unwrap()
        );
        // attribution follows the rate split, 15% / 85%
        let a = r.failure_counts["a"] as f64 / 10_000.0;
        assert!((a - 0.15).abs() < 0.015);
    }

    #[test]
    fn frame_ecc_masks_reference_cram_shapes() {
        let arrays = [ArraySpec {
            geometry: MemoryGeometry::new("CRAM", MemoryKind::Cram, 36_783, 2976).unwrap(),
            rate_per_hour: 1.0,
            protection: None,
        }];
        let mitigation = MitigationConfig {
            frame_ecc: true,
            scrub_rate_per_min: 1700.0,
            ..MitigationConfig::off()
        };
        let r = simulate_arrays(
            &arrays,
            &ShapeDistribution::reference_cram(),
            &mitigation,
            200,
            3,
            Some(500.0),
        )
        .unwrap();
        assert_eq!(r.censored_trials, 200);
        assert!(r.mttu_estimate.unwrap().mean_time.hours().is_none());
    }

    #[test]
    fn same_frame_shapes_beat_frame_ecc_unless_interleaved() {
        let mbu = ShapeDistribution::from_weights(vec![
            (ShapeSignature::single_bit(), 0.5),
            (ShapeSignature::from_positions([(0, 0), (0, 1)]), 0.5),
        ])
        .unwrap();
        let arrays = [array("CRAM", MemoryKind::Cram, 1.0)];
        let ecc = MitigationConfig {
            frame_ecc: true,
            scrub_rate_per_min: 1000.0,
            ..MitigationConfig::off()
        };
        let r = simulate_arrays(&arrays, &mbu, &ecc, 4000, 4, Some(50.0)).unwrap();
        // half the events are MBUs, so the failure rate is about 0.5 per hour
        assert!((failure_rate(&r) - 0.5).abs() < 0.05);
        let inter = MitigationConfig {
            interleaving: true,
            ..ecc
        };
        let r = simulate_arrays(&arrays, &mbu, &inter, 500, 4, Some(50.0)).unwrap();
        assert_eq!(r.censored_trials, 500);
    }

    #[test]
    fn unscrubbed_ecc_fails_by_accumulation() {
        // 4 frames: the second upset lands in an already hit frame quickly
        let arrays = [ArraySpec {
            geometry: MemoryGeometry::new("CRAM", MemoryKind::Cram, 4, 8).unwrap(),
            rate_per_hour: 1.0,
            protection: None,
        }];
        let ecc = MitigationConfig {
            frame_ecc: true,
            ..MitigationConfig::off()
        };
        let r = simulate_arrays(
            &arrays,
            &ShapeDistribution::single_bit_only(),
            &ecc,
            2000,
            5,
            Some(1000.0),
        )
        .unwrap();
        assert_eq!(r.censored_trials, 0);
        let m = r.mttu_estimate.unwrap().mean_time.hours().unwrap();
        // expected number of upsets until a repeat among 4 frames is 3.22
        assert!((m - 3.22).abs() < 0.2, "{m}");
    }

    #[test]
    fn cache_policies_are_ordered() {
        let arrays = [array("L2 Data", MemoryKind::CacheArray, 1.0)];
        let run = |p: CachePolicy| {
            let m = MitigationConfig {
                cache_policy: [("L2 Data".to_string(), p)].into_iter().collect(),
                double_bit_fraction: 0.2,
                dirty_line_fraction: 0.5,
                ..MitigationConfig::off()
            };
            failure_rate(
                &simulate_arrays(
                    &arrays,
                    &ShapeDistribution::single_bit_only(),
                    &m,
                    4000,
                    6,
                    Some(2000.0),
                )
                .unwrap(),
            )
        };
        let (none, parity, secded) = (
            run(CachePolicy::None),
            run(CachePolicy::ParityDetectInvalidate),
            run(CachePolicy::SecdedCorrect),
        );
        // per-upset failure probabilities 1, 0.6 and 0.1
        assert!((none - 1.0).abs() < 0.05);
        assert!((parity - 0.6).abs() < 0.04);
        assert!((secded - 0.1).abs() < 0.01);
    }

    #[test]
    fn deterministic_for_seed() {
        let arrays = [
            array("a", MemoryKind::Bram, 0.3),
            array("c", MemoryKind::Cram, 0.1),
        ];
        let m = MitigationConfig {
            frame_ecc: true,
            ..MitigationConfig::off()
        };
        let d = ShapeDistribution::reference_cram();
        let a = simulate_arrays(&arrays, &d, &m, 300, 9, None).unwrap();
        let b = simulate_arrays(&arrays, &d, &m, 300, 9, None).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn validation_errors() {
        let d = ShapeDistribution::single_bit_only();
        let arrays = [array("a", MemoryKind::Bram, 1.0)];
        assert!(simulate_arrays(&arrays, &d, &MitigationConfig::off(), 0, 1, None).is_err());
        assert!(simulate_arrays(&[], &d, &MitigationConfig::off(), 1, 1, None).is_err());
        let bad = MitigationConfig {
            dirty_line_fraction: 1.5,
            ..MitigationConfig::off()
        };
        assert!(simulate_arrays(&arrays, &d, &bad, 1, 1, None).is_err());
        let zero = [array("z", MemoryKind::Bram, 0.0)];
        assert!(simulate_arrays(&zero, &d, &MitigationConfig::off(), 1, 1, None).is_err());
    }
}
