//! Projection of measured cross-sections to target environments and fleet
//! sizes.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{ApplicationSigma, ErrorRateBreakdown};
use crate::units::{
    fit_from_cross_section, FitRate, Flux, MeanTimeKind, MeanTimeTo, NYC_SEA_LEVEL_FLUX,
};

/// Flux multiplier of a high-latitude 40k-feet flight path relative to NYC
/// sea level.
pub const ALTITUDE_40KFT_MULTIPLIER: f64 = 500.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub name: String,
    pub flux: Flux,
}

impl Environment {
    pub fn nyc_sea_level() -> Self {
        Self {
            name: "nyc_sea_level".into(),
            flux: Flux::nyc_sea_level(),
        }
    }

    pub fn nyc_40kft() -> Self {
        Self::with_multiplier("nyc_40kft", ALTITUDE_40KFT_MULTIPLIER).expect("positive multiplier")
    }

    /// Environment whose flux is `multiplier` × the NYC sea-level reference.
    pub fn with_multiplier(name: impl Into<String>, multiplier: f64) -> Result<Self> {
        if !(multiplier.is_finite() && multiplier > 0.0) {
            return Err(Error::non_positive("flux multiplier", multiplier));
        }
        Ok(Self {
            name: name.into(),
            flux: Flux::new(NYC_SEA_LEVEL_FLUX * multiplier)?,
        })
    }

    pub fn with_flux(name: impl Into<String>, flux: Flux) -> Result<Self> {
        if !(flux.value() > 0.0) {
            return Err(Error::non_positive("flux", flux.value()));
        }
        Ok(Self {
            name: name.into(),
            flux,
        })
    }

    pub fn builtin(name: &str) -> Result<Self> {
        match name {
            "nyc_sea_level" => Ok(Self::nyc_sea_level()),
            "nyc_40kft" => Ok(Self::nyc_40kft()),
            other => Err(Error::UnknownEnvironment(other.to_string())),
        }
    }

    pub fn reference_multiplier(&self) -> f64 {
        self.flux.value() / NYC_SEA_LEVEL_FLUX
    }
}

/// Environment as written in config files: a built-in name, a multiplier
/// of the sea-level reference, or an explicit flux.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EnvironmentSpec {
    Named(String),
    Multiplier {
        name: String,
        reference_multiplier: f64,
    },
    Explicit(Environment),
}

impl Default for EnvironmentSpec {
    fn default() -> Self {
        EnvironmentSpec::Named("nyc_sea_level".into())
    }
}

impl EnvironmentSpec {
    pub fn resolve(&self) -> Result<Environment> {
        match self {
            EnvironmentSpec::Named(n) => Environment::builtin(n),
            EnvironmentSpec::Multiplier {
                name,
                reference_multiplier,
            } => Environment::with_multiplier(name.clone(), *reference_multiplier),
            EnvironmentSpec::Explicit(e) => Environment::with_flux(e.name.clone(), e.flux),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Deployment {
    pub n_devices: u64,
}

impl Deployment {
    pub const SINGLE: Deployment = Deployment { n_devices: 1 };

    pub fn new(n_devices: u64) -> Result<Self> {
        if n_devices == 0 {
            return Err(Error::InvalidParameter(
                "deployment needs at least one device".into(),
            ));
        }
        Ok(Self { n_devices })
    }
}

/// Environment plus deployment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub environment: Environment,
    pub deployment: Deployment,
}

impl Scenario {
    pub fn new(environment: Environment, deployment: Deployment) -> Self {
        Self {
            environment,
            deployment,
        }
    }

    pub fn label(&self) -> String {
        format!("{} x{}", self.environment.name, self.deployment.n_devices)
    }

    /// One device at sea level, one device at 40k feet, 1000 devices at sea
    /// level.
    pub fn standard() -> Vec<Scenario> {
        vec![
            Scenario::new(Environment::nyc_sea_level(), Deployment::SINGLE),
            Scenario::new(Environment::nyc_40kft(), Deployment::SINGLE),
            Scenario::new(Environment::nyc_sea_level(), Deployment { n_devices: 1000 }),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    /// Every error is a failure.
    #[serde(rename = "All")]
    All,
    /// Tolerable SDCs excluded.
    #[serde(rename = "C+H")]
    CPlusH,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::All => "All",
            Variant::CPlusH => "C+H",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionRow {
    pub subject: String,
    pub environment: Environment,
    pub deployment: Deployment,
    pub fit: FitRate,
    pub mean_time: MeanTimeTo,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<Variant>,
}

impl ProjectionRow {
    pub fn label(&self) -> String {
        match self.variant {
            Some(v) => format!("{} [{v}]", self.subject),
            None => self.subject.clone(),
        }
    }
}

/// System FIT and mean time for a per-device cross-section.
pub fn project(
    subject: impl Into<String>,
    sigma_device_cm2: f64,
    kind: MeanTimeKind,
    env: &Environment,
    dep: Deployment,
) -> Result<ProjectionRow> {
    let fit = fit_from_cross_section(sigma_device_cm2, env.flux)?.for_devices(dep.n_devices);
    Ok(ProjectionRow {
        subject: subject.into(),
        environment: env.clone(),
        deployment: dep,
        fit,
        mean_time: MeanTimeTo::from_fit(fit, kind),
        variant: None,
    })
}

/// All and C+H MTTF rows for every application.
pub fn mttf_table(
    applications: &BTreeMap<String, ApplicationSigma>,
    env: &Environment,
    dep: Deployment,
) -> Result<Vec<ProjectionRow>> {
    let mut rows = Vec::with_capacity(applications.len() * 2);
    for (name, sigma) in applications {
        let breakdown: ErrorRateBreakdown = sigma.breakdown(env.flux)?.scaled(dep.n_devices);
        for (variant, fit) in [
            (Variant::All, breakdown.fit_all()),
            (Variant::CPlusH, breakdown.fit_c_plus_h()),
        ] {
            rows.push(ProjectionRow {
                subject: name.clone(),
                environment: env.clone(),
                deployment: dep,
                fit,
                mean_time: MeanTimeTo::from_fit(fit, MeanTimeKind::Failure),
                variant: Some(variant),
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub numerator: String,
    pub denominator: String,
    /// mean_time(numerator) / mean_time(denominator)
    pub ratio: f64,
    /// 1 - ratio
    pub degradation: f64,
}

/// Pairwise mean-time ratios of rows sharing one scenario. Rows without
/// observed failures are left out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub scenario: Scenario,
    pub mean_time_hours: BTreeMap<String, f64>,
    pub comparisons: Vec<Comparison>,
}

impl RatioReport {
    pub fn ratio(&self, numerator: &str, denominator: &str) -> Option<f64> {
        let a = self.mean_time_hours.get(numerator)?;
        let b = self.mean_time_hours.get(denominator)?;
        Some(a / b)
    }

    pub fn degradation(&self, numerator: &str, denominator: &str) -> Option<f64> {
        self.ratio(numerator, denominator).map(|r| 1.0 - r)
    }

    /// Mean of the group's mean times divided by the reference mean time.
    pub fn mean_ratio(&self, group: &[&str], reference: &str) -> Option<f64> {
        let vals = group
            .iter()
            .map(|g| self.mean_time_hours.get(*g).copied())
            .collect::<Option<Vec<f64>>>()?;
        if vals.is_empty() {
            return None;
        }
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        Some(mean / self.mean_time_hours.get(reference)?)
    }
}

pub fn ratio_report(rows: &[ProjectionRow]) -> Result<RatioReport> {
    let first = rows
        .first()
        .ok_or_else(|| Error::InvalidParameter("no rows to compare".into()))?;
    if rows
        .iter()
        .any(|r| r.environment != first.environment || r.deployment != first.deployment)
    {
        return Err(Error::MixedScenario);
    }
    let mean_time_hours: BTreeMap<String, f64> = rows
        .iter()
        .filter_map(|r| r.mean_time.hours().map(|h| (r.label(), h)))
        .collect();
    let mut comparisons = Vec::new();
    for (a, ha) in &mean_time_hours {
        for (b, hb) in &mean_time_hours {
            if a != b {
                let ratio = ha / hb;
                comparisons.push(Comparison {
                    numerator: a.clone(),
                    denominator: b.clone(),
                    ratio,
                    degradation: 1.0 - ratio,
                });
            }
        }
    }
    Ok(RatioReport {
        scenario: Scenario::new(first.environment.clone(), first.deployment),
        mean_time_hours,
        comparisons,
    })
}
