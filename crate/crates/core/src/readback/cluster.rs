use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::shape::ShapeSignature;
use super::{MemoryGeometry, UpsetBit};
use crate::error::{Error, Result};

/// Bits per block above which an upset burst is treated as a SEFI.
pub const DEFAULT_SEFI_THRESHOLD: u32 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum UpsetClass {
    /// Single-bit upset.
    #[serde(rename = "SBU")]
    Sbu,
    /// Several bits within one frame.
    #[serde(rename = "MBU")]
    Mbu,
    /// Bits spanning two or more frames.
    #[serde(rename = "MCU")]
    Mcu,
    /// Functional interrupt corrupting a whole block; excluded from NSEU counts.
    #[serde(rename = "SEFI")]
    Sefi,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UpsetEvent {
    /// Sorted by (cycle, frame, bit).
    pub bits: Vec<UpsetBit>,
    pub class: UpsetClass,
    pub shape: ShapeSignature,
}

impl UpsetEvent {
    fn from_sorted_bits(bits: Vec<UpsetBit>) -> Self {
        let class = classify(&bits);
        let shape = ShapeSignature::from_bits(&bits);
        Self { bits, class, shape }
    }

    pub fn cycle(&self) -> u32 {
        self.bits[0].cycle
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

fn classify(bits: &[UpsetBit]) -> UpsetClass {
    match bits {
        [_] => UpsetClass::Sbu,
        [first, rest @ ..] if rest.iter().all(|b| b.frame == first.frame) => UpsetClass::Mbu,
        _ => UpsetClass::Mcu,
    }
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // smaller index wins so roots are deterministic
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Group upset bits into events: two bits of the same cycle belong to one
/// event iff a chain of bits links them where consecutive bits are at
/// Chebyshev distance <= 1 on the (frame, bit) grid.
///
/// Duplicate bits are merged. Output events are sorted by their first bit.
pub fn cluster_events(bits: &[UpsetBit], geometry: &MemoryGeometry) -> Result<Vec<UpsetEvent>> {
    for b in bits {
        if !geometry.contains(b.frame, b.bit) {
            return Err(Error::OutOfBounds {
                frame: b.frame,
                bit: b.bit,
                frames: geometry.frame_count,
                bits_per_frame: geometry.bits_per_frame,
            });
        }
    }
    let mut sorted = bits.to_vec();
    sorted.sort_unstable();
    sorted.dedup();

    let index: HashMap<UpsetBit, usize> = sorted.iter().enumerate().map(|(i, b)| (*b, i)).collect();
    let mut sets = DisjointSet::new(sorted.len());
    for (i, b) in sorted.iter().enumerate() {
        // forward half of the 8-neighbourhood; the other half is covered
        // when the neighbour itself is visited
        for (df, db) in [(0i64, 1i64), (1, -1), (1, 0), (1, 1)] {
            let f = i64::from(b.frame) + df;
            let k = i64::from(b.bit) + db;
            if f < 0 || k < 0 || f > u32::MAX as i64 || k > u32::MAX as i64 {
                continue;
            }
            if let Some(&j) = index.get(&UpsetBit::new(b.cycle, f as u32, k as u32)) {
                sets.union(i, j);
            }
        }
    }

    let mut groups: BTreeMap<usize, Vec<UpsetBit>> = BTreeMap::new();
    for (i, b) in sorted.iter().enumerate() {
        let r = sets.find(i);
        groups.entry(r).or_default().push(*b);
    }
    // roots are the smallest member index, so BTreeMap order == first-bit order
    Ok(groups
        .into_values()
        .map(UpsetEvent::from_sorted_bits)
        .collect())
}

/// Reclassify as SEFI every burst whose upset-bit count within one memory
/// block (same cycle) exceeds `threshold_bits`. All events touching such a
/// block are merged into one SEFI event; other events pass through
/// unchanged.
pub fn detect_sefi(
    events: Vec<UpsetEvent>,
    geometry: &MemoryGeometry,
    threshold_bits: u32,
) -> Vec<UpsetEvent> {
    let mut per_block: HashMap<(u32, u32), u64> = HashMap::new();
    for e in &events {
        for b in &e.bits {
            *per_block
                .entry((b.cycle, geometry.block_of(b.frame)))
                .or_default() += 1;
        }
    }
    let hot: HashMap<(u32, u32), usize> = {
        let mut keys: Vec<_> = per_block
            .into_iter()
            .filter(|&(_, n)| n > u64::from(threshold_bits))
            .map(|(k, _)| k)
            .collect();
        keys.sort_unstable();
        keys.into_iter().enumerate().map(|(i, k)| (k, i)).collect()
    };
    if hot.is_empty() {
        return events;
    }

    // events touching hot blocks, unioned through shared blocks
    let mut sets = DisjointSet::new(hot.len());
    let mut owner: Vec<Option<usize>> = Vec::with_capacity(events.len());
    for e in &events {
        let mut touched = e
            .bits
            .iter()
            .filter_map(|b| hot.get(&(b.cycle, geometry.block_of(b.frame))).copied());
        let first = touched.next();
        if let Some(f) = first {
            for t in touched {
                sets.union(f, t);
            }
        }
        owner.push(first);
    }

    let mut out = Vec::new();
    let mut merged: BTreeMap<usize, Vec<UpsetBit>> = BTreeMap::new();
    for (e, own) in events.into_iter().zip(owner) {
        match own {
            Some(block) => merged.entry(sets.find(block)).or_default().extend(e.bits),
            None => out.push(e),
        }
    }
    for (_, mut bits) in merged {
        bits.sort_unstable();
        let shape = ShapeSignature::from_bits(&bits);
        out.push(UpsetEvent {
            bits,
            class: UpsetClass::Sefi,
            shape,
        });
    }
    out.sort_by(|a, b| a.bits[0].cmp(&b.bits[0]));
    out
}
