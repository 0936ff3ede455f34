use serde::{Deserialize, Serialize};

use super::chi2::chi2_quantile;
use crate::error::{Error, Result};
use crate::units::Fluence;

/// Two-sided confidence level in `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Confidence(f64);

impl Confidence {
    pub const DEFAULT: Confidence = Confidence(0.95);

    pub fn new(level: f64) -> Result<Self> {
        if (0.0..1.0).contains(&level) {
            Ok(Self(level))
        } else {
            Err(Error::InvalidParameter(format!(
                "confidence level {level} outside [0, 1)"
            )))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn alpha(self) -> f64 {
        1.0 - self.0
    }
}

impl Default for Confidence {
    fn default() -> Self {
        Self::DEFAULT
    }
}

impl TryFrom<f64> for Confidence {
    type Error = Error;

    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Confidence> for f64 {
    fn from(c: Confidence) -> f64 {
        c.0
    }
}

/// Exact (Garwood) Poisson interval on the expected count given `n` observed
/// events: `(χ²(α/2; 2n)/2, χ²(1-α/2; 2n+2)/2)`.
pub fn garwood_interval(n_events: u64, confidence: Confidence) -> (f64, f64) {
    let alpha = confidence.alpha();
    let n = n_events as f64;
    let low = if n_events == 0 {
        0.0
    } else {
        0.5 * chi2_quantile(alpha / 2.0, 2.0 * n)
    };
    let high = 0.5 * chi2_quantile(1.0 - alpha / 2.0, 2.0 * n + 2.0);
    (low, high)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "basis", rename_all = "snake_case")]
pub enum Basis {
    PerDevice,
    PerBit { bit_count: u64 },
}

impl Basis {
    fn divisor(self) -> f64 {
        match self {
            Basis::PerDevice => 1.0,
            Basis::PerBit { bit_count } => bit_count as f64,
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            Basis::PerDevice => "cm²",
            Basis::PerBit { .. } => "cm²/bit",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EstimateOptions {
    pub confidence: Confidence,
    /// Relative fluence uncertainty `u`; when set, bounds widen to
    /// `low / (1 + u)` and `high / (1 - u)`.
    pub fluence_uncertainty: Option<f64>,
}

impl EstimateOptions {
    pub fn with_confidence(confidence: Confidence) -> Self {
        Self {
            confidence,
            fluence_uncertainty: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.fluence_uncertainty {
            Some(u) if !(0.0..1.0).contains(&u) => Err(Error::InvalidParameter(format!(
                "fluence uncertainty {u} outside [0, 1)"
            ))),
            _ => Ok(()),
        }
    }
}

/// Events-per-fluence estimate with its exact Poisson interval.
///
/// `mean` is `None` when no events were observed; only `ci_high` is then
/// meaningful (`ci_low` is 0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossSectionEstimate {
    pub n_events: u64,
    pub fluence: Fluence,
    pub mean: Option<f64>,
    pub ci_low: f64,
    pub ci_high: f64,
    pub confidence: Confidence,
    #[serde(flatten)]
    pub basis: Basis,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fluence_uncertainty: Option<f64>,
}

impl CrossSectionEstimate {
    /// Mean, or 0 when nothing was observed.
    pub fn mean_or_zero(&self) -> f64 {
        self.mean.unwrap_or(0.0)
    }

    pub fn is_none_observed(&self) -> bool {
        self.n_events == 0
    }

    /// Same estimate expressed per device (multiplies per-bit values back).
    pub fn per_device(&self) -> CrossSectionEstimate {
        let k = self.basis.divisor();
        CrossSectionEstimate {
            mean: self.mean.map(|m| m * k),
            ci_low: self.ci_low * k,
            ci_high: self.ci_high * k,
            basis: Basis::PerDevice,
            ..*self
        }
    }
}

/// σ = n / Φ (÷ bit count for a per-bit basis) with a Garwood interval.
pub fn estimate_cross_section(
    n_events: u64,
    fluence: Fluence,
    basis: Basis,
    options: EstimateOptions,
) -> Result<CrossSectionEstimate> {
    options.validate()?;
    if fluence.value() <= 0.0 {
        return Err(Error::non_positive("fluence", fluence.value()));
    }
    if let Basis::PerBit { bit_count: 0 } = basis {
        return Err(Error::InvalidParameter(
            "per-bit basis with zero bits".into(),
        ));
    }
    let scale = fluence.value() * basis.divisor();
    let (low, high) = garwood_interval(n_events, options.confidence);
    let (low, high) = match options.fluence_uncertainty {
        Some(u) => (low / (1.0 + u), high / (1.0 - u)),
        None => (low, high),
    };
    Ok(CrossSectionEstimate {
        n_events,
        fluence,
        mean: (n_events > 0).then(|| n_events as f64 / scale),
        ci_low: low / scale,
        ci_high: high / scale,
        confidence: options.confidence,
        basis,
        fluence_uncertainty: options.fluence_uncertainty,
    })
}
