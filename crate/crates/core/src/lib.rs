//! Soft-error reliability analysis for radiation-tested devices.
//!
//! The crate turns accelerated radiation-test data into reliability
//! metrics:
//!
//! * [`readback`] extracts upset bits from readback campaigns, clusters them
//!   into SBU/MBU/MCU events and separates out SEFIs.
//! * [`stats`] estimates cross-sections with exact (Garwood) Poisson
//!   confidence intervals and splits application failure rates by category.
//! * [`units`] holds the fluence/flux/FIT/MTTF quantities and conversions.
//! * [`projection`] scales cross-sections to environments and fleet sizes.
//! * [`sim`] is a Monte Carlo simulator of upset arrivals and mitigation
//!   (scrubbing, frame SECDED, interleaving, cache parity/ECC).
//! * [`profile`] and [`report`] bundle measured device data and render
//!   machine- and human-readable reports.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod profile;
pub mod projection;
pub mod readback;
pub mod report;
pub mod sim;
pub mod stats;
pub mod units;

pub use error::{Error, Result};
pub use units::{FitRate, Fluence, Flux, MeanTimeKind, MeanTimeTo};
