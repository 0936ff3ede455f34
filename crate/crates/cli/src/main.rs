//! `radrel` command-line front end.
//!
//! Exit codes: 0 success, 1 validation error, 2 malformed input.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use radrel::profile::DeviceProfile;
use radrel::projection::{Deployment, Environment, Scenario};
use radrel::readback::{
    analyze_campaign, analyze_upsets, parse_upsets_csv, write_upsets_csv, AnalysisOptions,
    MemoryGeometry, MemoryKind, ReadbackCampaign, UpsetBit, CONTAINER_MAGIC,
};
use radrel::report::{
    profile_sections, projection_sections, readback_sections, simulation_section,
    xsection_sections, Provenance, Report,
};
use radrel::sim::{SimConfig, SimResult};
use radrel::stats::{parse_logs_csv, parse_logs_json, Confidence, EstimateOptions};
use radrel::{Error, Fluence, Result};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Md,
    Csv,
}

#[derive(Parser)]
#[command(
    name = "radrel",
    version,
    about = "Soft-error reliability analysis of radiation test data"
)]
struct Cli {
    /// Confidence level of the Poisson intervals.
    #[arg(long, global = true, default_value_t = 0.95)]
    confidence: f64,
    /// Relative fluence uncertainty used to widen intervals (e.g. 0.1).
    #[arg(long, global = true)]
    fluence_uncertainty: Option<f64>,
    /// Master seed for simulations.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract, cluster and estimate upsets from a readback container or
    /// an upset CSV (cycle,frame,bit).
    AnalyzeReadback {
        input: PathBuf,
        /// Memory name; also used to look up the geometry of CSV input.
        #[arg(long, default_value = "CRAM")]
        memory: String,
        /// cram, bram, srl or cache.
        #[arg(long, default_value = "cram")]
        kind: String,
        /// Fluence in n/cm² (CSV input only; containers carry their own).
        #[arg(long)]
        fluence: Option<f64>,
        /// Frame count of CSV input; defaults to the profile geometry.
        #[arg(long)]
        frames: Option<u32>,
        /// Bits per frame of CSV input; defaults to the profile geometry.
        #[arg(long)]
        bits_per_frame: Option<u32>,
        /// Cycles between full reconfigurations (CSV input only).
        #[arg(long, default_value_t = 1)]
        config_period: u32,
        /// Upset bits in one block and readback above which a burst is a SEFI.
        #[arg(long, default_value_t = radrel::readback::DEFAULT_SEFI_THRESHOLD)]
        sefi_threshold: u32,
        /// Profile providing the geometry of CSV input.
        #[arg(long, default_value = "xczu9eg")]
        profile: String,
        /// Also write the extracted upset bits as CSV.
        #[arg(long)]
        upsets_csv: Option<PathBuf>,
    },
    /// Dynamic cross-sections and FIT breakdowns from campaign logs.
    Xsection {
        #[arg(required = true)]
        logs: Vec<PathBuf>,
        #[arg(long, default_value = "nyc_sea_level")]
        env: String,
    },
    /// Project a profile to an environment and fleet size.
    Project {
        #[arg(long, default_value = "xczu9eg")]
        profile: String,
        #[arg(long, default_value = "nyc_sea_level")]
        env: String,
        /// Custom flux as a multiple of the sea-level reference; overrides --env.
        #[arg(long)]
        flux_multiplier: Option<f64>,
        #[arg(long, default_value_t = 1)]
        nodes: u64,
        /// Emit the three standard scenarios instead.
        #[arg(long)]
        presets: bool,
    },
    /// Run a simulation config (failure campaign or scrub race).
    Simulate {
        config: PathBuf,
        /// Overrides the profile named in the config.
        #[arg(long)]
        profile: Option<String>,
        #[arg(long)]
        trials: Option<u64>,
        /// Write first-failure samples (or the backlog series) as CSV.
        #[arg(long)]
        samples_csv: Option<PathBuf>,
    },
    /// Re-render saved JSON reports, or build the full profile report when
    /// none are given.
    Report {
        reports: Vec<PathBuf>,
        #[arg(long, default_value = "xczu9eg")]
        profile: String,
    },
}

fn digest(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    hex::encode(h.finalize())
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::MalformedInput(format!("{}: {e}", path.display())))
}

fn estimate_options(cli: &Cli) -> Result<EstimateOptions> {
    let options = EstimateOptions {
        confidence: Confidence::new(cli.confidence)?,
        fluence_uncertainty: cli.fluence_uncertainty,
    };
    options.validate()?;
    Ok(options)
}

fn environment(name: &str, multiplier: Option<f64>) -> Result<Environment> {
    match multiplier {
        Some(k) => Environment::with_multiplier(format!("x{k}"), k),
        None => Environment::builtin(name),
    }
}

fn csv_geometry(
    memory: &str,
    kind: MemoryKind,
    frames: Option<u32>,
    bits_per_frame: Option<u32>,
    profile: &str,
) -> Result<MemoryGeometry> {
    match (frames, bits_per_frame) {
        (Some(f), Some(b)) => MemoryGeometry::new(memory, kind, f, b),
        (None, None) => DeviceProfile::load(profile)?
            .memory(memory)
            .map(|m| m.geometry.clone())
            .ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "memory '{memory}' not in profile '{profile}'; pass --frames and --bits-per-frame"
                ))
            }),
        _ => Err(Error::InvalidParameter(
            "--frames and --bits-per-frame go together".into(),
        )),
    }
}

/// A file written next to the report.
enum SideOutput {
    Upsets(PathBuf, Vec<UpsetBit>),
    Samples(PathBuf, SimResult),
}

impl SideOutput {
    fn write(self) -> Result<()> {
        match self {
            SideOutput::Upsets(path, bits) => write_upsets_csv(&bits, fs::File::create(path)?),
            SideOutput::Samples(path, r) => {
                let f = fs::File::create(path)?;
                if r.backlog.is_some() {
                    r.write_accumulation_csv(f)
                } else {
                    r.write_samples_csv(f)
                }
            }
        }
    }
}

fn run(cli: &Cli) -> Result<(Report, Option<SideOutput>)> {
    let options = estimate_options(cli)?;
    let mut provenance = Provenance::from_options(options);
    match &cli.command {
        Command::AnalyzeReadback {
            input,
            memory,
            kind,
            fluence,
            frames,
            bits_per_frame,
            config_period,
            sefi_threshold,
            profile,
            upsets_csv,
        } => {
            let kind = MemoryKind::parse(kind)
                .ok_or_else(|| Error::InvalidParameter(format!("unknown memory kind '{kind}'")))?;
            let bytes = read(input)?;
            let analysis_options = AnalysisOptions {
                sefi_threshold_bits: *sefi_threshold,
                estimate: options,
            };
            let is_csv = input
                .extension()
                .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
            let analysis = if is_csv {
                let fluence = fluence
                    .ok_or_else(|| Error::InvalidParameter("CSV input needs --fluence".into()))?;
                let geometry = csv_geometry(memory, kind, *frames, *bits_per_frame, profile)?;
                let bits = parse_upsets_csv(bytes.as_slice())?;
                analyze_upsets(
                    &bits,
                    &geometry,
                    Fluence::new(fluence)?,
                    *config_period,
                    analysis_options,
                )?
            } else {
                if !bytes.starts_with(CONTAINER_MAGIC) && bytes.len() >= 4 {
                    return Err(Error::MalformedContainer {
                        offset: 0,
                        message: "bad magic, expected RBKC".into(),
                    });
                }
                let campaign = ReadbackCampaign::from_container(&bytes, memory.clone(), kind)?;
                analyze_campaign(&campaign, analysis_options)?
            };
            provenance
                .fluences
                .insert(analysis.memory.clone(), analysis.fluence.value());
            let mut report = Report::new("analyze-readback", digest(&[&bytes]), provenance);
            report.sections = readback_sections(std::slice::from_ref(&analysis));
            let extra = upsets_csv.clone().map(|path| {
                let mut bits: Vec<_> = analysis
                    .events
                    .iter()
                    .chain(&analysis.sefis)
                    .flat_map(|e| e.bits.iter().copied())
                    .collect();
                bits.sort_unstable();
                SideOutput::Upsets(path, bits)
            });
            Ok((report, extra))
        }
        Command::Xsection { logs, env } => {
            let env = Environment::builtin(env)?;
            let mut all = Vec::new();
            let mut blobs = Vec::new();
            for path in logs {
                let bytes = read(path)?;
                let text = String::from_utf8(bytes.clone()).map_err(|_| {
                    Error::MalformedInput(format!("{} is not UTF-8", path.display()))
                })?;
                let trimmed = text.trim_start();
                if trimmed.starts_with('{') || trimmed.starts_with('[') {
                    all.extend(parse_logs_json(&text)?);
                } else {
                    all.extend(parse_logs_csv(text.as_bytes())?);
                }
                blobs.push(bytes);
            }
            for log in &all {
                provenance
                    .fluences
                    .insert(log.benchmark.clone(), log.fluence.value());
            }
            let parts: Vec<&[u8]> = blobs.iter().map(Vec::as_slice).collect();
            let mut report = Report::new("xsection", digest(&parts), provenance);
            report.sections = xsection_sections(&all, options, &env)?;
            Ok((report, None))
        }
        Command::Project {
            profile,
            env,
            flux_multiplier,
            nodes,
            presets,
        } => {
            let profile = DeviceProfile::load(profile)?;
            let scenarios = if *presets {
                Scenario::standard()
            } else {
                vec![Scenario::new(
                    environment(env, *flux_multiplier)?,
                    Deployment::new(*nodes)?,
                )]
            };
            let json = profile.to_json_pretty();
            let mut report = Report::new("project", digest(&[json.as_bytes()]), provenance);
            if scenarios.len() == 1 {
                report.provenance.scenario = Some(scenarios[0].clone());
            }
            for s in &scenarios {
                let mut secs = projection_sections(&profile, s)?;
                if scenarios.len() > 1 {
                    for sec in &mut secs {
                        retitle(sec, &s.label());
                    }
                }
                report.sections.extend(secs);
            }
            Ok((report, None))
        }
        Command::Simulate {
            config,
            profile,
            trials,
            samples_csv,
        } => {
            let bytes = read(config)?;
            let text = String::from_utf8(bytes.clone())
                .map_err(|_| Error::MalformedInput(format!("{} is not UTF-8", config.display())))?;
            let mut cfg: SimConfig = serde_json::from_str(&text).map_err(Error::from)?;
            if let Some(p) = profile {
                cfg.profile = Some(p.clone());
            }
            if let Some(t) = trials {
                cfg.trials = *t;
            }
            cfg.validate()?;
            let loaded = match (&cfg.scrub_race, &cfg.profile) {
                (None, Some(name)) => Some(DeviceProfile::load(name)?),
                _ => None,
            };
            let result = cfg.run(loaded.as_ref(), cli.seed)?;
            provenance.seed = Some(result.seed);
            if cfg.scrub_race.is_none() {
                let env = cfg.environment.resolve()?;
                provenance.scenario = Some(Scenario::new(env, Deployment::new(cfg.nodes)?));
            }
            let mut report = Report::new("simulate", digest(&[&bytes]), provenance);
            let extra = samples_csv
                .clone()
                .map(|path| SideOutput::Samples(path, result.clone()));
            report.sections.push(simulation_section(result));
            Ok((report, extra))
        }
        Command::Report { reports, profile } => {
            if reports.is_empty() {
                let profile = DeviceProfile::load(profile)?;
                let json = profile.to_json_pretty();
                let mut report = Report::new("report", digest(&[json.as_bytes()]), provenance);
                report.sections = profile_sections(&profile, options)?;
                for s in Scenario::standard() {
                    let mut secs = projection_sections(&profile, &s)?;
                    for sec in &mut secs {
                        retitle(sec, &s.label());
                    }
                    report.sections.extend(secs);
                }
                return Ok((report, None));
            }
            let mut blobs = Vec::new();
            let mut merged: Option<Report> = None;
            for path in reports {
                let bytes = read(path)?;
                let text = String::from_utf8(bytes.clone()).map_err(|_| {
                    Error::MalformedInput(format!("{} is not UTF-8", path.display()))
                })?;
                let r = Report::from_json(&text)?;
                match &mut merged {
                    None => merged = Some(r),
                    Some(m) => {
                        m.command = format!("{} + {}", m.command, r.command);
                        m.provenance.fluences.extend(r.provenance.fluences);
                        m.provenance.notes.extend(r.provenance.notes);
                        m.sections.extend(r.sections);
                    }
                }
                blobs.push(bytes);
            }
            let mut report = merged.expect("at least one report");
            if reports.len() > 1 {
                let parts: Vec<&[u8]> = blobs.iter().map(Vec::as_slice).collect();
                report.inputs_digest = digest(&parts);
            }
            Ok((report, None))
        }
    }
}

fn retitle(section: &mut radrel::report::Section, suffix: &str) {
    use radrel::report::Section::*;
    match section {
        CrossSections { title, .. }
        | EventCounts { title, .. }
        | Shapes { title, .. }
        | Sefis { title, .. }
        | Breakdowns { title, .. }
        | Projections { title, .. }
        | ReportedBase { title, .. }
        | Ratios { title, .. }
        | Simulation { title, .. }
        | Consistency { title, .. } => *title = format!("{title} ({suffix})"),
    }
}

fn render(report: &Report, format: Format) -> Result<String> {
    Ok(match format {
        Format::Json => report.to_json(),
        Format::Md => report.to_markdown(),
        Format::Csv => report.to_csv()?,
    })
}

fn emit(cli: &Cli) -> Result<()> {
    let (report, extra) = run(cli)?;
    let text = render(&report, cli.format)?;
    match &cli.output {
        Some(path) => fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    if let Some(side) = extra {
        side.write()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match emit(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_malformed_input() { 2 } else { 1 })
        }
    }
}
