//! Python bindings for the `radrel` toolkit.
//!
//! Structured results cross the boundary as plain dicts (via JSON) so that
//! they match the CLI report schema.

use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyBytes;
use radrel::profile::DeviceProfile as CoreProfile;
use radrel::projection::{self, Deployment, Environment as CoreEnvironment, Scenario};
use radrel::readback::{
    self, AnalysisOptions, MemoryGeometry, MemoryKind, ReadbackCampaign, UpsetBit,
};
use radrel::report;
use radrel::sim::{self, ScrubRace, SimConfig};
use radrel::stats::{self, Basis, Confidence, EstimateOptions};
use radrel::{units, Error, Fluence, Flux, MeanTimeKind};
use serde::Serialize;

fn err(e: Error) -> PyErr {
    match e {
        Error::Io(io) => PyOSError::new_err(io.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn options(confidence: f64, fluence_uncertainty: Option<f64>) -> PyResult<EstimateOptions> {
    let o = EstimateOptions {
        confidence: Confidence::new(confidence).map_err(err)?,
        fluence_uncertainty,
    };
    o.validate().map_err(err)?;
    Ok(o)
}

fn kind(name: &str) -> PyResult<MemoryKind> {
    MemoryKind::parse(name)
        .ok_or_else(|| PyValueError::new_err(format!("unknown memory kind '{name}'")))
}

/// Poisson cross-section estimate with an exact confidence interval.
#[pyclass(frozen, module = "radrel")]
struct CrossSectionEstimate {
    inner: stats::CrossSectionEstimate,
}

#[pymethods]
impl CrossSectionEstimate {
    #[getter]
    fn n_events(&self) -> u64 {
        self.inner.n_events
    }

    /// None when no events were observed.
    #[getter]
    fn mean(&self) -> Option<f64> {
        self.inner.mean
    }

    #[getter]
    fn ci_low(&self) -> f64 {
        self.inner.ci_low
    }

    #[getter]
    fn ci_high(&self) -> f64 {
        self.inner.ci_high
    }

    #[getter]
    fn fluence(&self) -> f64 {
        self.inner.fluence.value()
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner)
    }

    fn __repr__(&self) -> String {
        match self.inner.mean {
            Some(m) => format!(
                "CrossSectionEstimate(n={}, mean={m:.3e}, ci=({:.3e}, {:.3e}))",
                self.inner.n_events, self.inner.ci_low, self.inner.ci_high
            ),
            None => format!(
                "CrossSectionEstimate(n=0, none observed, ci=(0, {:.3e}))",
                self.inner.ci_high
            ),
        }
    }
}

/// Neutron environment: a name and a flux in n/cm²/h.
#[pyclass(frozen, module = "radrel")]
struct Environment {
    inner: CoreEnvironment,
}

#[pymethods]
impl Environment {
    /// Built-in environment by name, e.g. "nyc_sea_level" or "nyc_40kft".
    #[new]
    fn new(name: &str) -> PyResult<Self> {
        CoreEnvironment::builtin(name)
            .map(|inner| Self { inner })
            .map_err(err)
    }

    #[staticmethod]
    fn with_multiplier(name: &str, multiplier: f64) -> PyResult<Self> {
        CoreEnvironment::with_multiplier(name, multiplier)
            .map(|inner| Self { inner })
            .map_err(err)
    }

    #[staticmethod]
    fn with_flux(name: &str, flux_per_hour: f64) -> PyResult<Self> {
        let flux = Flux::new(flux_per_hour).map_err(err)?;
        CoreEnvironment::with_flux(name, flux)
            .map(|inner| Self { inner })
            .map_err(err)
    }

    #[getter]
    fn name(&self) -> &str {
        &self.inner.name
    }

    #[getter]
    fn flux(&self) -> f64 {
        self.inner.flux.value()
    }

    fn __repr__(&self) -> String {
        format!(
            "Environment({:?}, flux={})",
            self.inner.name,
            self.inner.flux.value()
        )
    }
}

/// Measured data of one device.
#[pyclass(frozen, module = "radrel")]
struct DeviceProfile {
    inner: CoreProfile,
}

#[pymethods]
impl DeviceProfile {
    /// Load by name or path, honouring RADREL_PROFILE_DIR.
    #[new]
    #[pyo3(signature = (name = "xczu9eg"))]
    fn new(name: &str) -> PyResult<Self> {
        CoreProfile::load(name)
            .map(|inner| Self { inner })
            .map_err(err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        CoreProfile::from_json(text)
            .map(|inner| Self { inner })
            .map_err(err)
    }

    #[staticmethod]
    fn bundled_names() -> Vec<&'static str> {
        CoreProfile::bundled_names()
    }

    #[getter]
    fn name(&self) -> &str {
        &self.inner.name
    }

    #[getter]
    fn authoritative(&self) -> bool {
        self.inner.authoritative
    }

    #[getter]
    fn memory_names(&self) -> Vec<String> {
        self.inner
            .memories
            .iter()
            .map(|m| m.name().to_string())
            .collect()
    }

    #[getter]
    fn application_names(&self) -> Vec<String> {
        self.inner
            .applications
            .iter()
            .map(|a| a.log.benchmark.clone())
            .collect()
    }

    /// Per-device cross-section of one memory in cm².
    fn sigma_device(&self, memory: &str) -> PyResult<f64> {
        self.inner
            .memory(memory)
            .map(|m| m.sigma_device())
            .ok_or_else(|| PyValueError::new_err(format!("no memory '{memory}'")))
    }

    /// Projection report sections for one scenario, as dicts.
    #[pyo3(signature = (env, nodes = 1))]
    fn project<'py>(
        &self,
        py: Python<'py>,
        env: &Environment,
        nodes: u64,
    ) -> PyResult<Bound<'py, PyAny>> {
        let scenario = Scenario::new(env.inner.clone(), Deployment::new(nodes).map_err(err)?);
        let sections = report::projection_sections(&self.inner, &scenario).map_err(err)?;
        to_py(py, &sections)
    }

    /// Months to the first upset of a memory group, e.g. "pl".
    #[pyo3(signature = (group, env, nodes = 1))]
    fn group_mttu_months(&self, group: &str, env: &Environment, nodes: u64) -> PyResult<f64> {
        let members = self.inner.group_members();
        let sigma: f64 = members
            .get(group)
            .ok_or_else(|| PyValueError::new_err(format!("no group '{group}'")))?
            .iter()
            .map(|m| m.sigma_device())
            .sum();
        let row = projection::project(
            group,
            sigma,
            MeanTimeKind::Upset,
            &env.inner,
            Deployment::new(nodes).map_err(err)?,
        )
        .map_err(err)?;
        Ok(row.mean_time.months().unwrap_or(f64::INFINITY))
    }

    /// {application: {"All": months, "C+H": months}}.
    #[pyo3(signature = (env, nodes = 1))]
    fn application_mttf_months<'py>(
        &self,
        py: Python<'py>,
        env: &Environment,
        nodes: u64,
    ) -> PyResult<Bound<'py, PyAny>> {
        let rows = projection::mttf_table(
            &self.inner.application_sigmas(),
            &env.inner,
            Deployment::new(nodes).map_err(err)?,
        )
        .map_err(err)?;
        let mut out: std::collections::BTreeMap<
            String,
            std::collections::BTreeMap<String, Option<f64>>,
        > = Default::default();
        for r in rows {
            let variant = match r.variant {
                Some(projection::Variant::CPlusH) => "C+H",
                _ => "All",
            };
            out.entry(r.subject)
                .or_default()
                .insert(variant.to_string(), r.mean_time.months());
        }
        to_py(py, &out)
    }

    fn consistency<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.consistency())
    }

    fn to_json(&self) -> String {
        self.inner.to_json_pretty()
    }

    fn __repr__(&self) -> String {
        format!(
            "DeviceProfile({:?}, {} memories)",
            self.inner.name,
            self.inner.memories.len()
        )
    }
}

/// Outcome of a simulation run.
#[pyclass(frozen, module = "radrel")]
struct SimResult {
    inner: sim::SimResult,
}

#[pymethods]
impl SimResult {
    #[getter]
    fn trials(&self) -> u64 {
        self.inner.trials
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[getter]
    fn time_to_first_failure(&self) -> Vec<f64> {
        self.inner.time_to_first_failure.clone()
    }

    #[getter]
    fn censored_trials(&self) -> u64 {
        self.inner.censored_trials
    }

    /// Estimated mean time in hours, or None without failures.
    #[getter]
    fn mean_time_hours(&self) -> Option<f64> {
        self.inner
            .mttu_estimate
            .as_ref()
            .and_then(|e| e.mean_time.hours())
    }

    #[getter]
    fn standard_error_hours(&self) -> Option<f64> {
        self.inner
            .mttu_estimate
            .as_ref()
            .and_then(|e| e.standard_error_hours)
    }

    #[getter]
    fn analytic_rate_per_hour(&self) -> Option<f64> {
        self.inner.analytic_rate_per_hour
    }

    #[getter]
    fn steady_state_backlog(&self) -> Option<f64> {
        self.inner.backlog.as_ref().map(|b| b.steady_state_mean)
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner)
    }

    fn __repr__(&self) -> String {
        format!(
            "SimResult(trials={}, seed={})",
            self.inner.trials, self.inner.seed
        )
    }
}

/// Exact (Garwood) Poisson interval on an event count.
#[pyfunction]
#[pyo3(signature = (n_events, confidence = 0.95))]
fn garwood_interval(n_events: u64, confidence: f64) -> PyResult<(f64, f64)> {
    Ok(stats::garwood_interval(
        n_events,
        Confidence::new(confidence).map_err(err)?,
    ))
}

/// σ = n / Φ, per device or per bit when `bit_count` is given.
#[pyfunction]
#[pyo3(signature = (n_events, fluence, bit_count = None, confidence = 0.95, fluence_uncertainty = None))]
fn estimate_cross_section(
    n_events: u64,
    fluence: f64,
    bit_count: Option<u64>,
    confidence: f64,
    fluence_uncertainty: Option<f64>,
) -> PyResult<CrossSectionEstimate> {
    let basis = match bit_count {
        Some(bit_count) => Basis::PerBit { bit_count },
        None => Basis::PerDevice,
    };
    stats::estimate_cross_section(
        n_events,
        Fluence::new(fluence).map_err(err)?,
        basis,
        options(confidence, fluence_uncertainty)?,
    )
    .map(|inner| CrossSectionEstimate { inner })
    .map_err(err)
}

/// FIT (failures per 10⁹ h) of one device with cross-section σ at `flux`.
#[pyfunction]
fn fit_from_cross_section(sigma_cm2: f64, flux_per_hour: f64) -> PyResult<f64> {
    let flux = Flux::new(flux_per_hour).map_err(err)?;
    units::fit_from_cross_section(sigma_cm2, flux)
        .map(|f| f.value())
        .map_err(err)
}

/// Connected 8-neighbour clusters of upset bits, each a sorted list of
/// (cycle, frame, bit).
#[pyfunction]
fn cluster_events(
    bits: Vec<(u32, u32, u32)>,
    frames: u32,
    bits_per_frame: u32,
) -> PyResult<Vec<Vec<(u32, u32, u32)>>> {
    let geometry =
        MemoryGeometry::new("memory", MemoryKind::Cram, frames, bits_per_frame).map_err(err)?;
    let bits: Vec<UpsetBit> = bits
        .into_iter()
        .map(|(c, f, b)| UpsetBit::new(c, f, b))
        .collect();
    let events = readback::cluster_events(&bits, &geometry).map_err(err)?;
    Ok(events
        .into_iter()
        .map(|e| {
            e.bits
                .into_iter()
                .map(|b| (b.cycle, b.frame, b.bit))
                .collect()
        })
        .collect())
}

/// Analyze an RBKC readback container (bytes) into report sections.
#[pyfunction]
#[pyo3(signature = (data, memory = "CRAM", kind = "cram", sefi_threshold = readback::DEFAULT_SEFI_THRESHOLD, confidence = 0.95))]
fn analyze_readback<'py>(
    py: Python<'py>,
    data: &Bound<'py, PyBytes>,
    memory: &str,
    kind: &str,
    sefi_threshold: u32,
    confidence: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let campaign = ReadbackCampaign::from_container(data.as_bytes(), memory, self::kind(kind)?)
        .map_err(err)?;
    let analysis = readback::analyze_campaign(
        &campaign,
        AnalysisOptions {
            sefi_threshold_bits: sefi_threshold,
            estimate: options(confidence, None)?,
        },
    )
    .map_err(err)?;
    to_py(py, &report::readback_sections(&[analysis]))
}

/// Analyze pre-diffed upsets given as (cycle, frame, bit) tuples.
#[pyfunction]
#[pyo3(signature = (bits, frames, bits_per_frame, fluence, memory = "CRAM", kind = "cram", config_period = 1, sefi_threshold = readback::DEFAULT_SEFI_THRESHOLD, confidence = 0.95))]
#[allow(clippy::too_many_arguments)]
fn analyze_upsets<'py>(
    py: Python<'py>,
    bits: Vec<(u32, u32, u32)>,
    frames: u32,
    bits_per_frame: u32,
    fluence: f64,
    memory: &str,
    kind: &str,
    config_period: u32,
    sefi_threshold: u32,
    confidence: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let geometry =
        MemoryGeometry::new(memory, self::kind(kind)?, frames, bits_per_frame).map_err(err)?;
    let bits: Vec<UpsetBit> = bits
        .into_iter()
        .map(|(c, f, b)| UpsetBit::new(c, f, b))
        .collect();
    let analysis = readback::analyze_upsets(
        &bits,
        &geometry,
        Fluence::new(fluence).map_err(err)?,
        config_period,
        AnalysisOptions {
            sefi_threshold_bits: sefi_threshold,
            estimate: options(confidence, None)?,
        },
    )
    .map_err(err)?;
    to_py(py, &report::readback_sections(&[analysis]))
}

/// Dynamic cross-sections and FIT breakdowns of campaign logs given as a
/// JSON string (one log or a list).
#[pyfunction]
#[pyo3(signature = (logs_json, env = None, confidence = 0.95, fluence_uncertainty = None))]
fn xsection<'py>(
    py: Python<'py>,
    logs_json: &str,
    env: Option<&Environment>,
    confidence: f64,
    fluence_uncertainty: Option<f64>,
) -> PyResult<Bound<'py, PyAny>> {
    let logs = stats::parse_logs_json(logs_json).map_err(err)?;
    let env = env
        .map(|e| e.inner.clone())
        .unwrap_or_else(CoreEnvironment::nyc_sea_level);
    let sections =
        report::xsection_sections(&logs, options(confidence, fluence_uncertainty)?, &env)
            .map_err(err)?;
    to_py(py, &sections)
}

/// Run a simulation config given as a JSON string.
#[pyfunction]
#[pyo3(signature = (config_json, seed = None))]
fn simulate(py: Python<'_>, config_json: &str, seed: Option<u64>) -> PyResult<SimResult> {
    let cfg = SimConfig::from_json(config_json).map_err(err)?;
    let profile = match (&cfg.scrub_race, &cfg.profile) {
        (None, Some(name)) => Some(CoreProfile::load(name).map_err(err)?),
        _ => None,
    };
    let result = py.detach(|| cfg.run(profile.as_ref(), seed)).map_err(err)?;
    Ok(SimResult { inner: result })
}

/// Upsets arriving at `arrival_per_min` against a scrubber correcting
/// `scrub_per_min`, over `horizon_min`.
#[pyfunction]
#[pyo3(signature = (arrival_per_min, scrub_per_min, horizon_min, trials = 1000, seed = sim::DEFAULT_SEED))]
fn run_scrub_race(
    py: Python<'_>,
    arrival_per_min: f64,
    scrub_per_min: f64,
    horizon_min: f64,
    trials: u64,
    seed: u64,
) -> PyResult<SimResult> {
    let race = ScrubRace::new(arrival_per_min, scrub_per_min, horizon_min);
    let result = py
        .detach(|| sim::run_scrub_race(&race, trials, seed))
        .map_err(err)?;
    Ok(SimResult { inner: result })
}

/// Render a saved JSON report as markdown.
#[pyfunction]
fn report_to_markdown(report_json: &str) -> PyResult<String> {
    report::Report::from_json(report_json)
        .map(|r| r.to_markdown())
        .map_err(err)
}

#[pymodule]
#[pyo3(name = "radrel")]
fn radrel_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("HOURS_PER_MONTH", units::HOURS_PER_MONTH)?;
    m.add_class::<CrossSectionEstimate>()?;
    m.add_class::<Environment>()?;
    m.add_class::<DeviceProfile>()?;
    m.add_class::<SimResult>()?;
    m.add_function(wrap_pyfunction!(garwood_interval, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_cross_section, m)?)?;
    m.add_function(wrap_pyfunction!(fit_from_cross_section, m)?)?;
    m.add_function(wrap_pyfunction!(cluster_events, m)?)?;
    m.add_function(wrap_pyfunction!(analyze_readback, m)?)?;
    m.add_function(wrap_pyfunction!(analyze_upsets, m)?)?;
    m.add_function(wrap_pyfunction!(xsection, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(run_scrub_race, m)?)?;
    m.add_function(wrap_pyfunction!(report_to_markdown, m)?)?;
    Ok(())
}
