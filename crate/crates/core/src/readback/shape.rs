use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::cluster::{UpsetClass, UpsetEvent};
use super::UpsetBit;
use crate::error::{Error, Result};

/// Translation-normalized footprint of an upset event on the
/// (frame, bit) grid: offsets are `(Δframe, Δbit)` with both minima at 0.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ShapeSignature {
    pub frame_extent: u32,
    pub bit_extent: u32,
    pub offsets: Vec<(u32, u32)>,
}

impl ShapeSignature {
    pub fn from_bits(bits: &[UpsetBit]) -> Self {
        Self::from_positions(bits.iter().map(|b| (b.frame, b.bit)))
    }

    /// Normalize arbitrary `(frame, bit)` positions.
    pub fn from_positions(positions: impl IntoIterator<Item = (u32, u32)>) -> Self {
        let pts: Vec<(u32, u32)> = positions.into_iter().collect();
        assert!(!pts.is_empty(), "shape needs at least one bit");
        let f0 = pts.iter().map(|p| p.0).min().expect("non-empty");
        let b0 = pts.iter().map(|p| p.1).min().expect("non-empty");
        let mut offsets: Vec<(u32, u32)> = pts.iter().map(|&(f, b)| (f - f0, b - b0)).collect();
        offsets.sort_unstable();
        offsets.dedup();
        let frame_extent = offsets.iter().map(|o| o.0).max().expect("non-empty") + 1;
        let bit_extent = offsets.iter().map(|o| o.1).max().expect("non-empty") + 1;
        Self {
            frame_extent,
            bit_extent,
            offsets,
        }
    }

    pub fn single_bit() -> Self {
        Self::from_positions([(0, 0)])
    }

    pub fn bit_count(&self) -> usize {
        self.offsets.len()
    }

    /// Largest number of bits sharing one frame.
    pub fn max_bits_per_frame(&self) -> usize {
        let mut per: BTreeMap<u32, usize> = BTreeMap::new();
        for o in &self.offsets {
            *per.entry(o.0).or_default() += 1;
        }
        per.into_values().max().unwrap_or(0)
    }

    pub fn class(&self) -> UpsetClass {
        if self.offsets.len() == 1 {
            UpsetClass::Sbu
        } else if self.frame_extent == 1 {
            UpsetClass::Mbu
        } else {
            UpsetClass::Mcu
        }
    }

    /// Same bits, spread so that no two land in one frame: bits are laid
    /// out in (frame, bit) order on consecutive frames, keeping their bit
    /// offsets. Shapes already at one bit per frame are returned unchanged.
    pub fn interleaved(&self) -> Self {
        if self.max_bits_per_frame() <= 1 {
            return self.clone();
        }
        Self::from_positions(
            self.offsets
                .iter()
                .enumerate()
                .map(|(i, &(_, b))| (i as u32, b)),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeEntry {
    pub shape: ShapeSignature,
    /// Raw weight: an event count or a reported percentage.
    pub weight: f64,
    pub probability: f64,
}

/// Relative frequency per normalized shape; probabilities sum to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeDistribution {
    pub entries: Vec<ShapeEntry>,
}

impl ShapeDistribution {
    /// Renormalize raw weights into probabilities. Entries keep input order.
    pub fn from_weights(weights: Vec<(ShapeSignature, f64)>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::EmptyEvents);
        }
        if weights.iter().any(|(_, w)| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidParameter(
                "shape weights must be finite and >= 0".into(),
            ));
        }
        let total: f64 = weights.iter().map(|(_, w)| w).sum();
        if total <= 0.0 {
            return Err(Error::InvalidParameter("shape weights sum to zero".into()));
        }
        Ok(Self {
            entries: weights
                .into_iter()
                .map(|(shape, weight)| ShapeEntry {
                    shape,
                    weight,
                    probability: weight / total,
                })
                .collect(),
        })
    }

    /// Observed CRAM upset shapes of the XCZU9EG neutron campaign, as raw
    /// percentages (they sum to 99.72 and are renormalized). The footprints
    /// beyond the SBU and two-frame pair are representative layouts with the
    /// reported extents: 2 to 8 frames, up to 3 bits deep, no two bits in
    /// one frame.
    pub fn reference_cram() -> Self {
        let shape = |pts: &[(u32, u32)]| ShapeSignature::from_positions(pts.iter().copied());
        Self::from_weights(vec![
            (shape(&[(0, 0)]), 93.80),
            (shape(&[(0, 0), (1, 0)]), 4.07),
            (shape(&[(0, 0), (1, 1), (2, 1), (3, 2)]), 0.84),
            (
                shape(&[
                    (0, 0),
                    (1, 0),
                    (2, 0),
                    (3, 0),
                    (4, 1),
                    (5, 1),
                    (6, 1),
                    (7, 1),
                ]),
                0.57,
            ),
            (shape(&[(0, 0), (1, 1), (2, 0)]), 0.35),
            (shape(&[(0, 0), (1, 1)]), 0.09),
        ])
        .expect("static weights are valid")
    }

    pub fn single_bit_only() -> Self {
        Self::from_weights(vec![(ShapeSignature::single_bit(), 1.0)]).expect("valid")
    }

    pub fn total_probability(&self) -> f64 {
        self.entries.iter().map(|e| e.probability).sum()
    }

    pub fn probability_of(&self, shape: &ShapeSignature) -> f64 {
        self.entries
            .iter()
            .filter(|e| &e.shape == shape)
            .map(|e| e.probability)
            .sum()
    }

    /// Probability mass per SBU/MBU/MCU class.
    pub fn class_probabilities(&self) -> BTreeMap<UpsetClass, f64> {
        let mut out = BTreeMap::new();
        for e in &self.entries {
            *out.entry(e.shape.class()).or_default() += e.probability;
        }
        out
    }
}

/// Relative frequency of each event shape. SEFI events are skipped.
pub fn shape_histogram(events: &[UpsetEvent]) -> Result<ShapeDistribution> {
    let mut counts: BTreeMap<&ShapeSignature, u64> = BTreeMap::new();
    for e in events.iter().filter(|e| e.class != UpsetClass::Sefi) {
        *counts.entry(&e.shape).or_default() += 1;
    }
    if counts.is_empty() {
        return Err(Error::EmptyEvents);
    }
    let mut weights: Vec<(ShapeSignature, f64)> = counts
        .into_iter()
        .map(|(s, n)| (s.clone(), n as f64))
        .collect();
    // most frequent first; BTreeMap order breaks ties deterministically
    weights.sort_by(|a, b| b.1.total_cmp(&a.1));
    ShapeDistribution::from_weights(weights)
}
