use serde::{Deserialize, Serialize};

use super::campaign::{accumulate, group_by_cycle, ReadbackCampaign};
use super::cluster::{cluster_events, detect_sefi, UpsetClass, UpsetEvent, DEFAULT_SEFI_THRESHOLD};
use super::shape::{shape_histogram, ShapeDistribution};
use super::{MemoryGeometry, UpsetBit};
use crate::error::{Error, Result};
use crate::stats::{estimate_cross_section, Basis, CrossSectionEstimate, EstimateOptions};
use crate::units::Fluence;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisOptions {
    pub sefi_threshold_bits: u32,
    pub estimate: EstimateOptions,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            sefi_threshold_bits: DEFAULT_SEFI_THRESHOLD,
            estimate: EstimateOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ClassCounts {
    pub sbu: u64,
    pub mbu: u64,
    pub mcu: u64,
    pub sefi: u64,
}

/// Result of the full readback pipeline for one memory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadbackAnalysis {
    pub memory: String,
    pub geometry: MemoryGeometry,
    pub cycles: u32,
    pub fluence: Fluence,
    /// All newly upset bits, SEFI bursts included.
    pub upset_bits: u64,
    pub sefi_bits: u64,
    /// Upset bits counted toward the cross-section.
    pub nseu_bits: u64,
    pub event_counts: ClassCounts,
    pub per_device: CrossSectionEstimate,
    pub per_bit: CrossSectionEstimate,
    pub shapes: Option<ShapeDistribution>,
    pub sefis: Vec<UpsetEvent>,
    /// Non-SEFI events; omitted from serialized reports.
    #[serde(skip)]
    pub events: Vec<UpsetEvent>,
}

/// Run diff → accumulation → clustering → SEFI detection → estimation on
/// a campaign.
pub fn analyze_campaign(
    campaign: &ReadbackCampaign,
    options: AnalysisOptions,
) -> Result<ReadbackAnalysis> {
    campaign.validate()?;
    let per_cycle = campaign.new_upsets_by_cycle()?;
    analyze_cycles(
        per_cycle,
        &campaign.geometry,
        campaign.fluence,
        campaign.cycles.len() as u32,
        options,
    )
}

/// Same pipeline for pre-diffed upsets (e.g. from CSV). Bits re-observed
/// within one configuration period are counted once.
pub fn analyze_upsets(
    bits: &[UpsetBit],
    geometry: &MemoryGeometry,
    fluence: Fluence,
    config_period: u32,
    options: AnalysisOptions,
) -> Result<ReadbackAnalysis> {
    geometry.validate()?;
    if config_period == 0 {
        return Err(Error::InvalidParameter(
            "config_period must be at least 1".into(),
        ));
    }
    let grouped = group_by_cycle(bits);
    let cycles = grouped.len() as u32;
    analyze_cycles(
        accumulate(grouped, config_period),
        geometry,
        fluence,
        cycles,
        options,
    )
}

fn analyze_cycles(
    per_cycle: Vec<Vec<UpsetBit>>,
    geometry: &MemoryGeometry,
    fluence: Fluence,
    cycles: u32,
    options: AnalysisOptions,
) -> Result<ReadbackAnalysis> {
    if !(fluence.value() > 0.0) {
        return Err(Error::non_positive("fluence", fluence.value()));
    }
    let mut events = Vec::new();
    for bits in &per_cycle {
        if !bits.is_empty() {
            let clustered = cluster_events(bits, geometry)?;
            events.extend(detect_sefi(
                clustered,
                geometry,
                options.sefi_threshold_bits,
            ));
        }
    }
    let (sefis, events): (Vec<_>, Vec<_>) = events
        .into_iter()
        .partition(|e| e.class == UpsetClass::Sefi);

    let mut counts = ClassCounts {
        sefi: sefis.len() as u64,
        ..Default::default()
    };
    for e in &events {
        match e.class {
            UpsetClass::Sbu => counts.sbu += 1,
            UpsetClass::Mbu => counts.mbu += 1,
            UpsetClass::Mcu => counts.mcu += 1,
            UpsetClass::Sefi => unreachable!("partitioned out"),
        }
    }
    let sefi_bits: u64 = sefis.iter().map(|e| e.len() as u64).sum();
    let nseu_bits: u64 = events.iter().map(|e| e.len() as u64).sum();

    let per_device =
        estimate_cross_section(nseu_bits, fluence, Basis::PerDevice, options.estimate)?;
    let per_bit = estimate_cross_section(
        nseu_bits,
        fluence,
        Basis::PerBit {
            bit_count: geometry.total_bits(),
        },
        options.estimate,
    )?;
    let shapes = if events.is_empty() {
        None
    } else {
        Some(shape_histogram(&events)?)
    };

    Ok(ReadbackAnalysis {
        memory: geometry.name.clone(),
        geometry: geometry.clone(),
        cycles,
        fluence,
        upset_bits: nseu_bits + sefi_bits,
        sefi_bits,
        nseu_bits,
        event_counts: counts,
        per_device,
        per_bit,
        shapes,
        sefis,
        events,
    })
}

/// Per-device static cross-section: non-SEFI upset bits over fluence.
pub fn static_cross_section(
    campaign: &ReadbackCampaign,
    options: AnalysisOptions,
) -> Result<CrossSectionEstimate> {
    analyze_campaign(campaign, options).map(|a| a.per_device)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::readback::{BitArray, MemoryKind};
    use proptest::prelude::*;

    fn empty_campaign(frames: u32, bpf: u32, cycles: usize, fluence: f64) -> ReadbackCampaign {
        let n = (frames * bpf) as usize;
        ReadbackCampaign::new(
            MemoryGeometry::new("SRL", MemoryKind::Srl, frames, bpf).unwrap(),
            BitArray::zeros(n),
            BitArray::ones(n),
            vec![BitArray::zeros(n); cycles],
            Fluence::new(fluence).unwrap(),
            50,
        )
        .unwrap()
    }

    #[test]
    fn sefi_bits_excluded_from_cross_section() {
        let mut c = empty_campaign(64, 512, 2, 1.2e11);
        // isolated SBUs in cycle 0
        for f in [1usize, 5, 9] {
            c.cycles[0].set(f * 512 + 7, true);
        }
        // one slice burst of 256 bits in cycle 1
        for k in 0..256 {
            c.cycles[1].set(20 * 512 + 2 * k, true);
        }
        let a = analyze_campaign(&c, AnalysisOptions::default()).unwrap();
        assert_eq!(a.upset_bits, 3 + 256);
        assert_eq!(a.sefi_bits, 256);
        assert_eq!(a.nseu_bits, 3);
        assert_eq!(a.event_counts.sefi, 1);
        assert_eq!(a.sefis.len(), 1);
        assert!((a.per_device.mean.unwrap() - 3.0 / 1.2e11).abs() < 1e-25);
    }

    #[test]
    fn empty_diff_gives_zero_events() {
        let c = empty_campaign(8, 8, 3, 1e10);
        let a = analyze_campaign(&c, AnalysisOptions::default()).unwrap();
        assert_eq!(a.nseu_bits, 0);
        assert!(a.per_device.mean.is_none());
        assert!(a.per_device.ci_high > 0.0);
        assert!(a.shapes.is_none());
    }

    #[test]
    fn prediffed_upsets_are_deduplicated_within_period() {
        let g = MemoryGeometry::new("CRAM", MemoryKind::Cram, 16, 16).unwrap();
        let bits = vec![
            UpsetBit::new(0, 1, 1),
            UpsetBit::new(1, 1, 1),
            UpsetBit::new(1, 9, 9),
        ];
        let a = analyze_upsets(
            &bits,
            &g,
            Fluence::new(1e9).unwrap(),
            50,
            AnalysisOptions::default(),
        )
        .unwrap();
        assert_eq!(a.nseu_bits, 2);
        let b = analyze_upsets(
            &bits,
            &g,
            Fluence::new(1e9).unwrap(),
            1,
            AnalysisOptions::default(),
        )
        .unwrap();
        assert_eq!(b.nseu_bits, 3);
    }

    proptest! {
        #[test]
        fn cross_section_monotone_in_sefi_threshold(
            raw in proptest::collection::vec((0u32..2, 0u32..8, 0u32..64), 0..200),
            t in 1u32..40,
        ) {
            let g = MemoryGeometry::new("BRAM", MemoryKind::Bram, 8, 64).unwrap();
            let bits: Vec<_> = raw.iter().map(|&(c, f, b)| UpsetBit::new(c, f, b)).collect();
            let phi = Fluence::new(1e10).unwrap();
            let at = |thr| {
                let opts = AnalysisOptions { sefi_threshold_bits: thr, ..Default::default() };
                analyze_upsets(&bits, &g, phi, 1, opts).unwrap().nseu_bits
            };
            prop_assert!(at(t - 1) <= at(t));
        }
    }
}
