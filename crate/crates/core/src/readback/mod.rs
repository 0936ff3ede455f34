//! Readback post-analysis: upset extraction, event clustering, SEFI
//! separation, shape statistics and static cross-sections.

mod analysis;
mod bits;
mod campaign;
mod cluster;
mod shape;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use analysis::{
    analyze_campaign, analyze_upsets, static_cross_section, AnalysisOptions, ClassCounts,
    ReadbackAnalysis,
};
pub use bits::BitArray;
pub use campaign::{
    parse_upsets_csv, write_upsets_csv, ReadbackCampaign, CONTAINER_HEADER_LEN, CONTAINER_MAGIC,
    CONTAINER_VERSION,
};
pub use cluster::{cluster_events, detect_sefi, UpsetClass, UpsetEvent, DEFAULT_SEFI_THRESHOLD};
pub use shape::{shape_histogram, ShapeDistribution, ShapeEntry, ShapeSignature};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MemoryKind {
    Cram,
    Bram,
    Srl,
    CacheArray,
}

impl MemoryKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cram" => Some(MemoryKind::Cram),
            "bram" => Some(MemoryKind::Bram),
            "srl" => Some(MemoryKind::Srl),
            "cache" | "cache_array" | "cache-array" => Some(MemoryKind::CacheArray),
            _ => None,
        }
    }
}

fn one() -> u32 {
    1
}

/// Frame-organized memory layout. Upset positions are `(frame, bit)`.
///
/// A *block* (the unit checked for SEFIs) is `frames_per_block` consecutive
/// frames; for BRAM a frame is one 36 Kb block, for SRL one slice.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryGeometry {
    pub name: String,
    pub kind: MemoryKind,
    pub frame_count: u32,
    pub bits_per_frame: u32,
    #[serde(default = "one")]
    pub frames_per_block: u32,
}

impl MemoryGeometry {
    pub fn new(
        name: impl Into<String>,
        kind: MemoryKind,
        frame_count: u32,
        bits_per_frame: u32,
    ) -> Result<Self> {
        let g = Self {
            name: name.into(),
            kind,
            frame_count,
            bits_per_frame,
            frames_per_block: 1,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.frame_count == 0 || self.bits_per_frame == 0 || self.frames_per_block == 0 {
            return Err(Error::InvalidParameter(format!(
                "geometry '{}' needs positive frame_count, bits_per_frame and frames_per_block",
                self.name
            )));
        }
        Ok(())
    }

    pub fn total_bits(&self) -> u64 {
        u64::from(self.frame_count) * u64::from(self.bits_per_frame)
    }

    pub fn position(&self, linear: usize) -> (u32, u32) {
        let bpf = self.bits_per_frame as usize;
        ((linear / bpf) as u32, (linear % bpf) as u32)
    }

    pub fn contains(&self, frame: u32, bit: u32) -> bool {
        frame < self.frame_count && bit < self.bits_per_frame
    }

    pub fn block_of(&self, frame: u32) -> u32 {
        frame / self.frames_per_block
    }
}

/// One flipped bit observed in readback `cycle`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct UpsetBit {
    pub cycle: u32,
    pub frame: u32,
    pub bit: u32,
}

impl UpsetBit {
    pub fn new(cycle: u32, frame: u32, bit: u32) -> Self {
        Self { cycle, frame, bit }
    }
}
