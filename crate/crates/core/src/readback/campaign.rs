use std::collections::{BTreeMap, HashSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::bits::{byte_len, BitArray};
use super::{MemoryGeometry, MemoryKind, UpsetBit};
use crate::error::{Error, Result};
use crate::units::Fluence;

pub const CONTAINER_MAGIC: &[u8; 4] = b"RBKC";
pub const CONTAINER_VERSION: u16 = 1;
/// magic(4) + version(2) + frame_count(4) + bits_per_frame(4) +
/// cycle_count(4) + config_period(4) + fluence(8)
pub const CONTAINER_HEADER_LEN: usize = 30;

/// A readback test session: one golden image, a compare mask and the
/// captured readbacks, with the device reconfigured every `config_period`
/// readbacks.
#[derive(Debug, Clone, PartialEq)]
pub struct ReadbackCampaign {
    pub geometry: MemoryGeometry,
    pub golden: BitArray,
    /// 1 = compare, 0 = ignore (dynamic bits).
    pub mask: BitArray,
    pub cycles: Vec<BitArray>,
    pub fluence: Fluence,
    pub config_period: u32,
}

impl ReadbackCampaign {
    pub fn new(
        geometry: MemoryGeometry,
        golden: BitArray,
        mask: BitArray,
        cycles: Vec<BitArray>,
        fluence: Fluence,
        config_period: u32,
    ) -> Result<Self> {
        let c = Self {
            geometry,
            golden,
            mask,
            cycles,
            fluence,
            config_period,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        let expected = self.geometry.total_bits() as usize;
        for a in std::iter::once(&self.golden)
            .chain(std::iter::once(&self.mask))
            .chain(&self.cycles)
        {
            if a.len() != expected {
                return Err(Error::LengthMismatch {
                    expected,
                    actual: a.len(),
                });
            }
        }
        if self.cycles.is_empty() {
            return Err(Error::InvalidParameter(
                "campaign has no readback cycles".into(),
            ));
        }
        if !(self.fluence.value() > 0.0) {
            return Err(Error::non_positive("fluence", self.fluence.value()));
        }
        if self.config_period == 0 {
            return Err(Error::InvalidParameter(
                "config_period must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// Masked differences between readback `cycle_index` and the golden image.
    pub fn diff_cycle(&self, cycle_index: usize) -> Result<Vec<UpsetBit>> {
        let readback = self.cycles.get(cycle_index).ok_or(Error::CycleOutOfRange {
            index: cycle_index,
            count: self.cycles.len(),
        })?;
        let cycle = cycle_index as u32;
        Ok(self
            .golden
            .masked_diff(readback, &self.mask)?
            .into_iter()
            .map(|i| {
                let (frame, bit) = self.geometry.position(i);
                UpsetBit { cycle, frame, bit }
            })
            .collect())
    }

    /// Newly appearing upsets of every cycle. Upsets persist until the next
    /// reconfiguration, so a bit already seen within the current
    /// configuration period is not reported again.
    pub fn new_upsets_by_cycle(&self) -> Result<Vec<Vec<UpsetBit>>> {
        let raw = (0..self.cycles.len())
            .map(|k| self.diff_cycle(k))
            .collect::<Result<Vec<_>>>()?;
        Ok(accumulate(raw, self.config_period))
    }

    /// Parse an RBKC container (little-endian).
    pub fn from_container(bytes: &[u8], name: impl Into<String>, kind: MemoryKind) -> Result<Self> {
        let bad = |offset: usize, message: String| Error::MalformedContainer { offset, message };
        if bytes.len() < CONTAINER_HEADER_LEN {
            return Err(bad(
                bytes.len(),
                format!(
                    "truncated header: {} of {CONTAINER_HEADER_LEN} bytes",
                    bytes.len()
                ),
            ));
        }
        if &bytes[0..4] != CONTAINER_MAGIC {
            return Err(bad(
                0,
                format!("bad magic {:?}, expected \"RBKC\"", &bytes[0..4]),
            ));
        }
        let u16_at = |o: usize| u16::from_le_bytes([bytes[o], bytes[o + 1]]);
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
        let version = u16_at(4);
        if version != CONTAINER_VERSION {
            return Err(bad(4, format!("unsupported version {version}")));
        }
        let frame_count = u32_at(6);
        if frame_count == 0 {
            return Err(bad(6, "frame_count is zero".into()));
        }
        let bits_per_frame = u32_at(10);
        if bits_per_frame == 0 {
            return Err(bad(10, "bits_per_frame is zero".into()));
        }
        let cycle_count = u32_at(14);
        if cycle_count == 0 {
            return Err(bad(14, "cycle_count is zero".into()));
        }
        let config_period = u32_at(18);
        if config_period == 0 {
            return Err(bad(18, "config_period is zero".into()));
        }
        let fluence = f64::from_le_bytes(bytes[22..30].try_into().expect("8 bytes"));
        if !(fluence.is_finite() && fluence > 0.0) {
            return Err(bad(22, format!("fluence {fluence} is not positive")));
        }

        let total_bits = u64::from(frame_count) * u64::from(bits_per_frame);
        let array_bytes = total_bits.div_ceil(8);
        let expected = (u64::from(cycle_count) + 2)
            .checked_mul(array_bytes)
            .and_then(|p| p.checked_add(CONTAINER_HEADER_LEN as u64))
            .filter(|&e| e <= usize::MAX as u64)
            .ok_or_else(|| bad(6, "declared dimensions overflow".into()))?
            as usize;
        if bytes.len() < expected {
            return Err(bad(
                bytes.len(),
                format!("truncated payload: {} of {expected} bytes", bytes.len()),
            ));
        }
        if bytes.len() > expected {
            return Err(bad(
                expected,
                format!("{} trailing bytes", bytes.len() - expected),
            ));
        }

        let n = array_bytes as usize;
        let total = total_bits as usize;
        let mut chunks = bytes[CONTAINER_HEADER_LEN..].chunks_exact(n);
        let mut next =
            || BitArray::from_bytes(chunks.next().expect("length checked").to_vec(), total);
        let golden = next()?;
        let mask = next()?;
        let cycles = (0..cycle_count)
            .map(|_| next())
            .collect::<Result<Vec<_>>>()?;
        let geometry = MemoryGeometry::new(name, kind, frame_count, bits_per_frame)?;
        Self::new(
            geometry,
            golden,
            mask,
            cycles,
            Fluence::new(fluence)?,
            config_period,
        )
    }

    pub fn to_container(&self) -> Vec<u8> {
        let n = byte_len(self.geometry.total_bits() as usize);
        let mut out = Vec::with_capacity(CONTAINER_HEADER_LEN + (self.cycles.len() + 2) * n);
        out.extend_from_slice(CONTAINER_MAGIC);
        out.extend_from_slice(&CONTAINER_VERSION.to_le_bytes());
        out.extend_from_slice(&self.geometry.frame_count.to_le_bytes());
        out.extend_from_slice(&self.geometry.bits_per_frame.to_le_bytes());
        out.extend_from_slice(&(self.cycles.len() as u32).to_le_bytes());
        out.extend_from_slice(&self.config_period.to_le_bytes());
        out.extend_from_slice(&self.fluence.value().to_le_bytes());
        out.extend_from_slice(self.golden.as_bytes());
        out.extend_from_slice(self.mask.as_bytes());
        for c in &self.cycles {
            out.extend_from_slice(c.as_bytes());
        }
        out
    }

    pub fn write_container<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&self.to_container())?;
        Ok(())
    }
}

/// Drop re-observations of bits already upset earlier in the same
/// configuration period. Input is indexed by cycle.
pub(crate) fn accumulate(raw: Vec<Vec<UpsetBit>>, config_period: u32) -> Vec<Vec<UpsetBit>> {
    let period = config_period.max(1) as usize;
    let mut seen: HashSet<(u32, u32)> = HashSet::new();
    raw.into_iter()
        .enumerate()
        .map(|(k, bits)| {
            if k % period == 0 {
                seen.clear();
            }
            bits.into_iter()
                .filter(|b| seen.insert((b.frame, b.bit)))
                .collect()
        })
        .collect()
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    cycle: u32,
    frame: u32,
    bit: u32,
}

/// Parse pre-diffed upsets from CSV with header `cycle,frame,bit`.
pub fn parse_upsets_csv<R: Read>(reader: R) -> Result<Vec<UpsetBit>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["cycle", "frame", "bit"] {
        return Err(Error::MalformedInput(format!(
            "expected header 'cycle,frame,bit', got '{}'",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    rdr.deserialize::<CsvRow>()
        .map(|r| {
            r.map(|r| UpsetBit::new(r.cycle, r.frame, r.bit))
                .map_err(Error::from)
        })
        .collect()
}

pub fn write_upsets_csv<W: Write>(bits: &[UpsetBit], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for b in bits {
        wtr.serialize(CsvRow {
            cycle: b.cycle,
            frame: b.frame,
            bit: b.bit,
        })?;
    }
    wtr.flush()?;
    Ok(())
}

/// Group pre-diffed upsets by cycle index (dense, up to the largest cycle).
pub(crate) fn group_by_cycle(bits: &[UpsetBit]) -> Vec<Vec<UpsetBit>> {
    let mut by_cycle: BTreeMap<u32, Vec<UpsetBit>> = BTreeMap::new();
    for b in bits {
        by_cycle.entry(b.cycle).or_default().push(*b);
    }
    let n = by_cycle.keys().next_back().map_or(0, |&c| c as usize + 1);
    let mut out = vec![Vec::new(); n];
    for (c, mut v) in by_cycle {
        v.sort();
        v.dedup();
        out[c as usize] = v;
    }
    out
}
