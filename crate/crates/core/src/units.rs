//! Fluence, flux, FIT and mean-time quantities.

use std::fmt;
use std::iter::Sum;
use std::ops::Add;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Device-hours in one FIT unit.
pub const FIT_HOURS: f64 = 1e9;

/// Julian month, used for every hours-to-months conversion in reports.
pub const HOURS_PER_MONTH: f64 = 730.5;

/// Atmospheric neutron flux (>= 10 MeV) at New York City sea level, n/cm²/h.
pub const NYC_SEA_LEVEL_FLUX: f64 = 13.0;

fn check_non_negative(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(Error::negative(name, value))
    }
}

/// Accumulated particle fluence in n/cm².
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Fluence(f64);

impl Fluence {
    pub fn new(n_per_cm2: f64) -> Result<Self> {
        check_non_negative("fluence", n_per_cm2).map(Self)
    }

    /// Fluence accumulated by exposure to `flux` for `hours`.
    pub fn from_exposure(flux: Flux, hours: f64) -> Result<Self> {
        let hours = check_non_negative("exposure time", hours)?;
        Ok(Self(flux.value() * hours))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Hours of exposure to `flux` needed to accumulate this fluence.
    ///
    /// Returns `None` for zero flux.
    pub fn equivalent_hours(self, flux: Flux) -> Option<f64> {
        (flux.value() > 0.0).then(|| self.0 / flux.value())
    }
}

/// Particle flux in n/cm²/h.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Flux(f64);

impl Flux {
    pub fn new(n_per_cm2_per_hour: f64) -> Result<Self> {
        check_non_negative("flux", n_per_cm2_per_hour).map(Self)
    }

    pub fn per_second(n_per_cm2_per_second: f64) -> Result<Self> {
        Self::new(n_per_cm2_per_second * 3600.0)
    }

    pub fn nyc_sea_level() -> Self {
        Self(NYC_SEA_LEVEL_FLUX)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn scaled(self, factor: f64) -> Result<Self> {
        Self::new(self.0 * factor)
    }
}

/// Failures per 10⁹ device-hours.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FitRate(f64);

impl FitRate {
    pub const ZERO: FitRate = FitRate(0.0);

    pub fn new(value: f64) -> Result<Self> {
        check_non_negative("FIT rate", value).map(Self)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Events per hour represented by this rate.
    pub fn per_hour(self) -> f64 {
        self.0 / FIT_HOURS
    }

    /// System rate for `n_devices` identical devices.
    pub fn for_devices(self, n_devices: u64) -> Self {
        Self(self.0 * n_devices as f64)
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0.0
    }
}

impl Add for FitRate {
    type Output = FitRate;

    fn add(self, rhs: FitRate) -> FitRate {
        FitRate(self.0 + rhs.0)
    }
}

impl Sum for FitRate {
    fn sum<I: Iterator<Item = FitRate>>(iter: I) -> FitRate {
        iter.fold(FitRate::ZERO, Add::add)
    }
}

impl fmt::Display for FitRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} FIT", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanTimeKind {
    /// Mean time to upset (MTTU).
    Upset,
    /// Mean time to failure (MTTF).
    Failure,
}

impl MeanTimeKind {
    pub fn abbreviation(self) -> &'static str {
        match self {
            MeanTimeKind::Upset => "MTTU",
            MeanTimeKind::Failure => "MTTF",
        }
    }
}

/// MTTU or MTTF derived from a FIT rate.
///
/// A zero rate is kept as an explicit [`MeanTimeTo::NoneObserved`] instead of
/// an infinite number of hours.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum MeanTimeTo {
    Finite { kind: MeanTimeKind, hours: f64 },
    NoneObserved { kind: MeanTimeKind },
}

impl MeanTimeTo {
    pub fn from_fit(fit: FitRate, kind: MeanTimeKind) -> Self {
        if fit.is_zero() {
            MeanTimeTo::NoneObserved { kind }
        } else {
            MeanTimeTo::Finite {
                kind,
                hours: FIT_HOURS / fit.value(),
            }
        }
    }

    pub fn from_hours(hours: f64, kind: MeanTimeKind) -> Result<Self> {
        if hours.is_finite() && hours > 0.0 {
            Ok(MeanTimeTo::Finite { kind, hours })
        } else {
            Err(Error::non_positive("mean time", hours))
        }
    }

    pub fn kind(&self) -> MeanTimeKind {
        match *self {
            MeanTimeTo::Finite { kind, .. } | MeanTimeTo::NoneObserved { kind } => kind,
        }
    }

    pub fn hours(&self) -> Option<f64> {
        match *self {
            MeanTimeTo::Finite { hours, .. } => Some(hours),
            MeanTimeTo::NoneObserved { .. } => None,
        }
    }

    pub fn months(&self) -> Option<f64> {
        self.hours().map(|h| h / HOURS_PER_MONTH)
    }

    pub fn years(&self) -> Option<f64> {
        self.months().map(|m| m / 12.0)
    }
}

/// FIT = σ × flux × 10⁹.
pub fn fit_from_cross_section(sigma_device_cm2: f64, flux: Flux) -> Result<FitRate> {
    let sigma = check_non_negative("cross-section", sigma_device_cm2)?;
    FitRate::new(sigma * flux.value() * FIT_HOURS)
}

/// Cross-section that produces `fit` under `flux`; inverse of
/// [`fit_from_cross_section`].
pub fn cross_section_from_fit(fit: FitRate, flux: Flux) -> Result<f64> {
    if flux.value() > 0.0 {
        Ok(fit.value() / (flux.value() * FIT_HOURS))
    } else {
        Err(Error::non_positive("flux", flux.value()))
    }
}

pub fn mttf_from_fit(fit: FitRate) -> MeanTimeTo {
    MeanTimeTo::from_fit(fit, MeanTimeKind::Failure)
}

pub fn mttu_from_fit(fit: FitRate) -> MeanTimeTo {
    MeanTimeTo::from_fit(fit, MeanTimeKind::Upset)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn fit_from_pl_cross_section_sum() {
        let fit =
            fit_from_cross_section(2.01e-8 + 8.42e-8 + 1.22e-8, Flux::nyc_sea_level()).unwrap();
        assert!(rel(fit.value(), 1514.5) < 1e-12);
    }

    #[test]
    fn zero_cross_section_gives_zero_fit() {
        let fit = fit_from_cross_section(0.0, Flux::nyc_sea_level()).unwrap();
        assert!(fit.is_zero());
        assert!(matches!(
            mttf_from_fit(fit),
            MeanTimeTo::NoneObserved { .. }
        ));
    }

    #[test]
    fn fit_of_dpu_c_plus_t_cross_section() {
        let fit = fit_from_cross_section(5.28e-8, Flux::nyc_sea_level()).unwrap();
        assert!(rel(fit.value(), 686.4) < 1e-12);
    }

    #[test]
    fn negative_inputs_rejected() {
        assert!(fit_from_cross_section(-1e-9, Flux::nyc_sea_level()).is_err());
        assert!(Flux::new(-1.0).is_err());
        assert!(Fluence::new(f64::NAN).is_err());
        assert!(FitRate::new(-0.5).is_err());
    }

    #[test]
    fn mttu_of_pl_memories_is_904_months() {
        let m = mttu_from_fit(FitRate::new(1514.5).unwrap());
        assert!(rel(m.hours().unwrap(), 660_284.0) < 1e-5);
        assert!(rel(m.months().unwrap(), 904.0) < 1e-3);
    }

    #[test]
    fn unit_fit_case() {
        let m = mttf_from_fit(FitRate::new(1e9).unwrap());
        assert_eq!(m.hours(), Some(1.0));
    }

    #[test]
    fn lfric_total_rate() {
        // 28 failures over 9.35E10 n/cm² at sea level.
        let fit = fit_from_cross_section(28.0 / 9.35e10, Flux::nyc_sea_level()).unwrap();
        assert!((fit.value() - 3.89).abs() < 0.005);
        let m = mttf_from_fit(fit);
        assert!(rel(m.hours().unwrap(), 2.57e8) < 2e-3);
        assert!(rel(m.months().unwrap(), 352_000.0) < 2e-3);
    }

    #[test]
    fn accelerated_fluence_equivalent_exposure() {
        // 1.2E11 n/cm² at 13 n/cm²/h is ~9.2E9 hours of natural exposure.
        let h = Fluence::new(1.2e11)
            .unwrap()
            .equivalent_hours(Flux::nyc_sea_level())
            .unwrap();
        assert!(rel(h, 9.23e9) < 1e-3);
        assert!(h > 1.3e6 * 1000.0);
        assert_eq!(
            Fluence::new(1.0)
                .unwrap()
                .equivalent_hours(Flux::new(0.0).unwrap()),
            None
        );
    }

    #[test]
    fn fluence_from_exposure() {
        let f = Fluence::from_exposure(Flux::per_second(5.6e6).unwrap(), 6.0).unwrap();
        assert!(rel(f.value(), 1.2096e11) < 1e-12);
    }

    proptest! {
        #[test]
        fn round_trip_is_dimensionally_consistent(sigma in 1e-18f64..1e-3, flux in 1e-3f64..1e7) {
            let flux = Flux::new(flux).unwrap();
            let fit = fit_from_cross_section(sigma, flux).unwrap();
            let hours = mttf_from_fit(fit).hours().unwrap();
            prop_assert!(rel(hours * sigma * flux.value() * FIT_HOURS, FIT_HOURS) < 1e-12);
            prop_assert!(rel(cross_section_from_fit(fit, flux).unwrap(), sigma) < 1e-12);
        }

        #[test]
        fn flux_scaling_is_linear(sigma in 1e-18f64..1e-3, flux in 1e-3f64..1e5, k in 1e-2f64..1e3) {
            let base = fit_from_cross_section(sigma, Flux::new(flux).unwrap()).unwrap();
            let scaled = fit_from_cross_section(sigma, Flux::new(flux).unwrap().scaled(k).unwrap()).unwrap();
            prop_assert!(rel(scaled.value(), base.value() * k) < 1e-12);
            let h0 = mttf_from_fit(base).hours().unwrap();
            let h1 = mttf_from_fit(scaled).hours().unwrap();
            prop_assert!(rel(h1, h0 / k) < 1e-12);
        }

        #[test]
        fn fit_is_additive(sigmas in proptest::collection::vec(0f64..1e-6, 1..8)) {
            let flux = Flux::nyc_sea_level();
            let parts: FitRate = sigmas.iter().map(|&s| fit_from_cross_section(s, flux).unwrap()).sum();
            let whole = fit_from_cross_section(sigmas.iter().sum(), flux).unwrap();
            prop_assert!((parts.value() - whole.value()).abs() <= 1e-12 * whole.value().max(1e-300));
        }
    }
}
