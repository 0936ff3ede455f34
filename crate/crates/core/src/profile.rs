//! Device profiles: the measured data of one device as human-editable
//! JSON, with a citation string on every value.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::readback::{MemoryGeometry, MemoryKind, ShapeDistribution, ShapeSignature};
use crate::sim::CachePolicy;
use crate::stats::{ApplicationSigma, CampaignLog};
use crate::units::{Fluence, Flux};

/// Overrides the profile search path (platform path-list syntax).
pub const PROFILE_DIR_ENV: &str = "RADREL_PROFILE_DIR";

const BUNDLED: &[(&str, &str)] = &[
    ("xczu9eg", include_str!("../profiles/xczu9eg.json")),
    (
        "xczu9eg-prior-vendor-proton",
        include_str!("../profiles/xczu9eg-prior-vendor-proton.json"),
    ),
    (
        "xczu9eg-prior-vendor-neutron",
        include_str!("../profiles/xczu9eg-prior-vendor-neutron.json"),
    ),
    (
        "xczu9eg-prior-datasheet",
        include_str!("../profiles/xczu9eg-prior-datasheet.json"),
    ),
    (
        "xczu9eg-prior-chipir",
        include_str!("../profiles/xczu9eg-prior-chipir.json"),
    ),
    (
        "xczu9eg-prior-lansce",
        include_str!("../profiles/xczu9eg-prior-lansce.json"),
    ),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryRecord {
    #[serde(flatten)]
    pub geometry: MemoryGeometry,
    pub group: String,
    pub fluence_n_per_cm2: Fluence,
    pub upsets: u64,
    /// Reported per-device value, when one was published.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_device_cm2: Option<f64>,
    pub sigma_bit_cm2: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_bit_ci: Option<[f64; 2]>,
    #[serde(default)]
    pub sefis: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub protection: Option<CachePolicy>,
    #[serde(default)]
    pub citation: String,
}

impl MemoryRecord {
    pub fn name(&self) -> &str {
        &self.geometry.name
    }

    pub fn bit_count(&self) -> u64 {
        self.geometry.total_bits()
    }

    /// Reported per-device σ, or σ_bit × bit count.
    pub fn sigma_device(&self) -> f64 {
        self.sigma_device_cm2
            .unwrap_or(self.sigma_bit_cm2 * self.bit_count() as f64)
    }

    /// Upsets per hour of one device: σ_bit × bit count × flux.
    pub fn upset_rate_per_hour(&self, flux: Flux) -> f64 {
        self.sigma_bit_cm2 * self.bit_count() as f64 * flux.value()
    }
}

/// A reported aggregate row (e.g. data plus tag array).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryTotal {
    pub name: String,
    pub members: Vec<String>,
    pub bits: u64,
    pub upsets: u64,
    pub sigma_bit_cm2: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_bit_ci: Option<[f64; 2]>,
    #[serde(default)]
    pub citation: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApplicationRecord {
    #[serde(flatten)]
    pub log: CampaignLog,
    #[serde(default)]
    pub citation: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeWeight {
    pub offsets: Vec<(u32, u32)>,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GroupInfo {
    pub label: String,
    /// Published sea-level single-device MTTU for the whole group, kept
    /// when it differs from the sum of the member rates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reported_base_mttu_months: Option<f64>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub note: String,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceProfile {
    pub name: String,
    #[serde(default)]
    pub description: String,
    /// False for reference profiles assembled from third-party summaries.
    #[serde(default = "yes")]
    pub authoritative: bool,
    #[serde(default)]
    pub memories: Vec<MemoryRecord>,
    #[serde(default)]
    pub memory_totals: Vec<MemoryTotal>,
    #[serde(default)]
    pub groups: BTreeMap<String, GroupInfo>,
    #[serde(default)]
    pub applications: Vec<ApplicationRecord>,
    #[serde(default)]
    pub benchmarks: Vec<ApplicationRecord>,
    #[serde(default)]
    pub cram_shapes: Vec<ShapeWeight>,
    #[serde(default)]
    pub metadata: BTreeMap<String, serde_json::Value>,
}

/// Printed value against the value recomputed from its inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyCheck {
    pub subject: String,
    pub quantity: String,
    pub printed: f64,
    pub recomputed: f64,
    pub relative_difference: f64,
    pub agrees_to_3_digits: bool,
}

impl ConsistencyCheck {
    fn new(subject: &str, quantity: &str, printed: f64, recomputed: f64) -> Self {
        let three = |x: f64| format!("{x:.2e}");
        Self {
            subject: subject.to_string(),
            quantity: quantity.to_string(),
            printed,
            recomputed,
            relative_difference: if printed == 0.0 {
                recomputed.abs()
            } else {
                (recomputed - printed) / printed
            },
            agrees_to_3_digits: three(printed) == three(recomputed),
        }
    }
}

impl DeviceProfile {
    pub fn from_json(text: &str) -> Result<Self> {
        let p: DeviceProfile = serde_json::from_str(text)?;
        p.validate()?;
        Ok(p)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("profile serializes")
    }

    pub fn bundled_names() -> Vec<&'static str> {
        BUNDLED.iter().map(|(n, _)| *n).collect()
    }

    pub fn bundled(name: &str) -> Result<Self> {
        let (_, text) = BUNDLED
            .iter()
            .find(|(n, _)| *n == name)
            .ok_or_else(|| Error::UnknownProfile(name.to_string()))?;
        Self::from_json(text)
    }

    /// Directories searched for `<name>.json`: the entries of
    /// `RADREL_PROFILE_DIR`, then `./profiles`.
    pub fn search_path() -> Vec<PathBuf> {
        let mut dirs: Vec<PathBuf> = std::env::var_os(PROFILE_DIR_ENV)
            .map(|v| std::env::split_paths(&v).collect())
            .unwrap_or_default();
        dirs.push(PathBuf::from("profiles"));
        dirs
    }

    /// Resolve `name` as a file path, then on the search path, then among
    /// the bundled profiles.
    pub fn load(name: &str) -> Result<Self> {
        Self::load_with(name, &Self::search_path())
    }

    pub fn load_with(name: &str, dirs: &[PathBuf]) -> Result<Self> {
        let direct = Path::new(name);
        if direct.extension().is_some_and(|e| e == "json") && direct.is_file() {
            return Self::from_json(&std::fs::read_to_string(direct)?);
        }
        for dir in dirs {
            let candidate = dir.join(format!("{name}.json"));
            if candidate.is_file() {
                return Self::from_json(&std::fs::read_to_string(candidate)?);
            }
        }
        Self::bundled(name)
    }

    pub fn validate(&self) -> Result<()> {
        if self.memories.is_empty() && self.applications.is_empty() && self.benchmarks.is_empty() {
            return Err(Error::EmptyProfile(self.name.clone()));
        }
        let mut names = BTreeSet::new();
        for m in &self.memories {
            m.geometry.validate()?;
            if !names.insert(m.name()) {
                return Err(Error::InvalidParameter(format!(
                    "duplicate memory '{}'",
                    m.name()
                )));
            }
            let sigmas = [Some(m.sigma_bit_cm2), m.sigma_device_cm2];
            if sigmas
                .into_iter()
                .flatten()
                .any(|s| !(s.is_finite() && s >= 0.0))
            {
                return Err(Error::negative("sigma", m.sigma_bit_cm2));
            }
            if !(m.fluence_n_per_cm2.value() > 0.0) {
                return Err(Error::non_positive("fluence", m.fluence_n_per_cm2.value()));
            }
        }
        for t in &self.memory_totals {
            if let Some(missing) = t.members.iter().find(|n| !names.contains(n.as_str())) {
                return Err(Error::InvalidParameter(format!(
                    "total '{}' references unknown memory '{missing}'",
                    t.name
                )));
            }
        }
        for a in self.applications.iter().chain(&self.benchmarks) {
            a.log.validate()?;
        }
        if !self.cram_shapes.is_empty() {
            self.cram_shape_distribution()?;
        }
        Ok(())
    }

    pub fn memory(&self, name: &str) -> Option<&MemoryRecord> {
        self.memories.iter().find(|m| m.name() == name)
    }

    /// Memory names per group, in profile order.
    pub fn group_members(&self) -> BTreeMap<String, Vec<&MemoryRecord>> {
        let mut out: BTreeMap<String, Vec<&MemoryRecord>> = BTreeMap::new();
        for m in &self.memories {
            out.entry(m.group.clone()).or_default().push(m);
        }
        out
    }

    pub fn group_label(&self, group: &str) -> String {
        self.groups
            .get(group)
            .map(|g| g.label.clone())
            .unwrap_or_else(|| group.to_string())
    }

    pub fn application_sigmas(&self) -> BTreeMap<String, ApplicationSigma> {
        self.applications
            .iter()
            .map(|a| (a.log.benchmark.clone(), ApplicationSigma::from_log(&a.log)))
            .collect()
    }

    /// CRAM event shapes; single-bit only when the profile has none.
    pub fn cram_shape_distribution(&self) -> Result<ShapeDistribution> {
        if self.cram_shapes.is_empty() {
            return Ok(ShapeDistribution::single_bit_only());
        }
        let mut weights = Vec::with_capacity(self.cram_shapes.len());
        for s in &self.cram_shapes {
            if s.offsets.is_empty() {
                return Err(Error::InvalidParameter("empty CRAM shape".into()));
            }
            weights.push((
                ShapeSignature::from_positions(s.offsets.iter().copied()),
                s.weight,
            ));
        }
        ShapeDistribution::from_weights(weights)
    }

    pub fn has_cram(&self) -> bool {
        self.memories
            .iter()
            .any(|m| m.geometry.kind == MemoryKind::Cram)
    }

    /// Recompute derived values from counts, fluences and sizes.
    pub fn consistency(&self) -> Vec<ConsistencyCheck> {
        let mut out = Vec::new();
        for m in &self.memories {
            let bits = m.bit_count() as f64;
            if let Some(printed) = m.sigma_device_cm2 {
                out.push(ConsistencyCheck::new(
                    m.name(),
                    "sigma_device from sigma_bit x bits",
                    printed,
                    m.sigma_bit_cm2 * bits,
                ));
            }
            out.push(ConsistencyCheck::new(
                m.name(),
                "sigma_bit from upsets / fluence / bits",
                m.sigma_bit_cm2,
                m.upsets as f64 / m.fluence_n_per_cm2.value() / bits,
            ));
        }
        for t in &self.memory_totals {
            let members: Vec<&MemoryRecord> =
                t.members.iter().filter_map(|n| self.memory(n)).collect();
            let bits: u64 = members.iter().map(|m| m.bit_count()).sum();
            let upsets: u64 = members.iter().map(|m| m.upsets).sum();
            out.push(ConsistencyCheck::new(
                &t.name,
                "bits from members",
                t.bits as f64,
                bits as f64,
            ));
            out.push(ConsistencyCheck::new(
                &t.name,
                "upsets from members",
                t.upsets as f64,
                upsets as f64,
            ));
            if let Some(first) = members.first() {
                out.push(ConsistencyCheck::new(
                    &t.name,
                    "sigma_bit from upsets / fluence / bits",
                    t.sigma_bit_cm2,
                    t.upsets as f64 / first.fluence_n_per_cm2.value() / t.bits as f64,
                ));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_bundled_profiles_load() {
        for name in DeviceProfile::bundled_names() {
            let p = DeviceProfile::bundled(name).unwrap();
            assert_eq!(p.name, name);
            assert_eq!(p.authoritative, name == "xczu9eg");
        }
        assert!(matches!(
            DeviceProfile::bundled("nope"),
            Err(Error::UnknownProfile(_))
        ));
    }

    #[test]
    fn bundled_profile_is_self_consistent() {
        let p = DeviceProfile::bundled("xczu9eg").unwrap();
        for c in p.consistency() {
            assert!(c.agrees_to_3_digits, "{c:?}");
        }
    }

    #[test]
    fn bundled_values() {
        let p = DeviceProfile::bundled("xczu9eg").unwrap();
        let cram = p.memory("CRAM").unwrap();
        assert_eq!(cram.upsets, 2417);
        assert_eq!(cram.sigma_device_cm2, Some(2.01e-8));
        let shapes = p.cram_shape_distribution().unwrap();
        assert_eq!(shapes, ShapeDistribution::reference_cram());
        let apps = p.application_sigmas();
        assert_eq!(apps.len(), 4);
        assert_eq!(p.group_members()["pl"].len(), 3);
        assert_eq!(
            p.groups["apu_cache"].reported_base_mttu_months,
            Some(24_000.0)
        );
    }

    #[test]
    fn json_round_trip() {
        let p = DeviceProfile::bundled("xczu9eg").unwrap();
        let q = DeviceProfile::from_json(&p.to_json_pretty()).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn directory_override_wins() {
        let dir = tempfile::tempdir().unwrap();
        let mut p = DeviceProfile::bundled("xczu9eg").unwrap();
        p.description = "local copy".into();
        std::fs::write(dir.path().join("xczu9eg.json"), p.to_json_pretty()).unwrap();
        let loaded = DeviceProfile::load_with("xczu9eg", &[dir.path().to_path_buf()]).unwrap();
        assert_eq!(loaded.description, "local copy");
        let file = dir.path().join("xczu9eg.json");
        let direct = DeviceProfile::load_with(file.to_str().unwrap(), &[]).unwrap();
        assert_eq!(direct.description, "local copy");
        let fallback =
            DeviceProfile::load_with("xczu9eg", &[PathBuf::from("/nonexistent")]).unwrap();
        assert_ne!(fallback.description, "local copy");
    }

    #[test]
    fn invalid_profiles_rejected() {
        assert!(matches!(
            DeviceProfile::from_json(r#"{"name": "empty"}"#),
            Err(Error::EmptyProfile(_))
        ));
        let mut p = DeviceProfile::bundled("xczu9eg").unwrap();
        p.memories[0].sigma_bit_cm2 = -1.0;
        assert!(p.validate().is_err());
        let mut p = DeviceProfile::bundled("xczu9eg").unwrap();
        p.memory_totals[0].members.push("ghost".into());
        assert!(p.validate().is_err());
    }
}
