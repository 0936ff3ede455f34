//! Reports: typed sections built from analysis outputs, rendered as JSON
//! (lossless, re-readable), Markdown tables or long-format CSV.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::profile::{ConsistencyCheck, DeviceProfile};
use crate::projection::{
    mttf_table, project, ratio_report, Environment, ProjectionRow, RatioReport, Scenario,
};
use crate::readback::{ClassCounts, ReadbackAnalysis, ShapeDistribution};
use crate::sim::SimResult;
use crate::stats::{
    dynamic_cross_sections, estimate_cross_section, total_log, ApplicationSigma, Basis,
    CampaignLog, CrossSectionEstimate, ErrorRateBreakdown, EstimateOptions,
};
use crate::units::{FitRate, MeanTimeKind, MeanTimeTo};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Provenance {
    pub confidence: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fluence_uncertainty: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Fluence behind each estimate, n/cm².
    #[serde(default)]
    pub fluences: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<Scenario>,
    #[serde(default)]
    pub notes: Vec<String>,
}

impl Provenance {
    pub fn from_options(options: EstimateOptions) -> Self {
        Self {
            confidence: options.confidence.value(),
            fluence_uncertainty: options.fluence_uncertainty,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRow {
    pub subject: String,
    pub category: String,
    pub estimate: CrossSectionEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventCountsRow {
    pub memory: String,
    pub cycles: u32,
    pub upset_bits: u64,
    pub sefi_bits: u64,
    pub nseu_bits: u64,
    pub events: ClassCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SefiRow {
    pub memory: String,
    pub cycle: u32,
    pub bits: u64,
    pub first_frame: u32,
    pub last_frame: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreakdownRow {
    pub application: String,
    pub breakdown: ErrorRateBreakdown,
    pub fit_c_plus_h: FitRate,
    pub fit_all: FitRate,
}

/// Published group base value carried through the scenario scaling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportedBaseRow {
    pub group: String,
    pub base_months: f64,
    /// Flux multiplier × devices.
    pub divisor: f64,
    pub months: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "section", rename_all = "snake_case")]
pub enum Section {
    CrossSections {
        title: String,
        rows: Vec<EstimateRow>,
    },
    EventCounts {
        title: String,
        rows: Vec<EventCountsRow>,
    },
    Shapes {
        title: String,
        memory: String,
        distribution: ShapeDistribution,
    },
    Sefis {
        title: String,
        rows: Vec<SefiRow>,
    },
    Breakdowns {
        title: String,
        environment: Environment,
        rows: Vec<BreakdownRow>,
    },
    Projections {
        title: String,
        rows: Vec<ProjectionRow>,
    },
    ReportedBase {
        title: String,
        rows: Vec<ReportedBaseRow>,
    },
    Ratios {
        title: String,
        report: RatioReport,
    },
    Simulation {
        title: String,
        result: SimResult,
    },
    Consistency {
        title: String,
        rows: Vec<ConsistencyCheck>,
    },
}

impl Section {
    pub fn title(&self) -> &str {
        match self {
            Section::CrossSections { title, .. }
            | Section::EventCounts { title, .. }
            | Section::Shapes { title, .. }
            | Section::Sefis { title, .. }
            | Section::Breakdowns { title, .. }
            | Section::Projections { title, .. }
            | Section::ReportedBase { title, .. }
            | Section::Ratios { title, .. }
            | Section::Simulation { title, .. }
            | Section::Consistency { title, .. } => title,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool: String,
    pub command: String,
    /// SHA-256 of the input files, hex.
    pub inputs_digest: String,
    pub provenance: Provenance,
    pub sections: Vec<Section>,
}

impl Report {
    pub fn new(
        command: impl Into<String>,
        inputs_digest: impl Into<String>,
        provenance: Provenance,
    ) -> Self {
        Self {
            tool: format!("radrel {}", env!("CARGO_PKG_VERSION")),
            command: command.into(),
            inputs_digest: inputs_digest.into(),
            provenance,
            sections: Vec::new(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# {} report\n", self.command);
        let _ = writeln!(out, "- tool: {}", self.tool);
        let _ = writeln!(out, "- inputs sha256: `{}`", self.inputs_digest);
        let _ = writeln!(out, "- confidence: {}", self.provenance.confidence);
        if let Some(u) = self.provenance.fluence_uncertainty {
            let _ = writeln!(out, "- fluence uncertainty: {u}");
        }
        if let Some(seed) = self.provenance.seed {
            let _ = writeln!(out, "- seed: {seed}");
        }
        if let Some(s) = &self.provenance.scenario {
            let _ = writeln!(
                out,
                "- scenario: {} ({} n/cm²/h), {} device(s)",
                s.environment.name,
                fmt_num(s.environment.flux.value()),
                s.deployment.n_devices
            );
        }
        for (k, v) in &self.provenance.fluences {
            let _ = writeln!(out, "- fluence {k}: {} n/cm²", fmt_sci(*v));
        }
        for n in &self.provenance.notes {
            let _ = writeln!(out, "- note: {n}");
        }
        for s in &self.sections {
            let _ = writeln!(out, "\n## {}\n", s.title());
            render_section_md(s, &mut out);
        }
        out
    }

    /// Long format: one `section,subject,quantity,value` row per number.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["section", "subject", "quantity", "value"])?;
        for s in &self.sections {
            for (subject, quantity, value) in section_values(s) {
                w.write_record([s.title(), &subject, &quantity, &value])?;
            }
        }
        Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("utf-8 csv"))
    }
}

/// `2.01E-08` style, as in published tables.
pub fn fmt_sci(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let s = format!("{x:.2E}");
    let (mantissa, exp) = s.split_once('E').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    format!(
        "{mantissa}E{}{:02}",
        if exp < 0 { '-' } else { '+' },
        exp.abs()
    )
}

/// Four significant digits, scientific outside [1e-3, 1e6).
pub fn fmt_num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 {
        "0".into()
    } else if !(1e-3..1e6).contains(&a) {
        fmt_sci(x)
    } else {
        let decimals = (3 - a.log10().floor() as i32).max(0) as usize;
        format!("{x:.decimals$}")
    }
}

fn fmt_mean_time(m: &MeanTimeTo) -> (String, String) {
    match m.hours() {
        Some(h) => (fmt_num(h), fmt_num(m.months().expect("finite"))),
        None => ("-".into(), "-".into()),
    }
}

fn table(out: &mut String, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) {
    let _ = writeln!(out, "| {} |", header.join(" | "));
    let _ = writeln!(out, "|{}", "---|".repeat(header.len()));
    for r in rows {
        let _ = writeln!(out, "| {} |", r.join(" | "));
    }
}

fn shape_label(offsets: &[(u32, u32)]) -> String {
    offsets
        .iter()
        .map(|(f, b)| format!("({f},{b})"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn render_section_md(s: &Section, out: &mut String) {
    match s {
        Section::CrossSections { rows, .. } => table(
            out,
            &[
                "Subject",
                "Category",
                "Events",
                "Fluence (n/cm²)",
                "Cross-section",
                "Lower",
                "Upper",
                "Unit",
            ],
            rows.iter().map(|r| {
                let e = &r.estimate;
                let none = e.is_none_observed();
                vec![
                    r.subject.clone(),
                    r.category.clone(),
                    e.n_events.to_string(),
                    fmt_sci(e.fluence.value()),
                    e.mean.map_or("-".into(), fmt_sci),
                    if none { "-".into() } else { fmt_sci(e.ci_low) },
                    fmt_sci(e.ci_high),
                    e.basis.unit().into(),
                ]
            }),
        ),
        Section::EventCounts { rows, .. } => table(
            out,
            &[
                "Memory",
                "Cycles",
                "Upset bits",
                "SEFI bits",
                "NSEU bits",
                "SBU",
                "MBU",
                "MCU",
                "SEFI",
            ],
            rows.iter().map(|r| {
                vec![
                    r.memory.clone(),
                    r.cycles.to_string(),
                    r.upset_bits.to_string(),
                    r.sefi_bits.to_string(),
                    r.nseu_bits.to_string(),
                    r.events.sbu.to_string(),
                    r.events.mbu.to_string(),
                    r.events.mcu.to_string(),
                    r.events.sefi.to_string(),
                ]
            }),
        ),
        Section::Shapes {
            memory,
            distribution,
            ..
        } => {
            let _ = writeln!(out, "Memory: {memory}\n");
            table(
                out,
                &[
                    "Shape (frame,bit)",
                    "Frames",
                    "Bits deep",
                    "Class",
                    "Weight",
                    "Share (%)",
                ],
                distribution.entries.iter().map(|e| {
                    vec![
                        shape_label(&e.shape.offsets),
                        e.shape.frame_extent.to_string(),
                        e.shape.bit_extent.to_string(),
                        format!("{:?}", e.shape.class()).to_uppercase(),
                        fmt_num(e.weight),
                        format!("{:.2}", 100.0 * e.probability),
                    ]
                }),
            )
        }
        Section::Sefis { rows, .. } => {
            if rows.is_empty() {
                let _ = writeln!(out, "No SEFIs detected.");
            } else {
                table(
                    out,
                    &["Memory", "Cycle", "Bits", "Frames"],
                    rows.iter().map(|r| {
                        vec![
                            r.memory.clone(),
                            r.cycle.to_string(),
                            r.bits.to_string(),
                            format!("{}-{}", r.first_frame, r.last_frame),
                        ]
                    }),
                )
            }
        }
        Section::Breakdowns {
            environment, rows, ..
        } => {
            let _ = writeln!(
                out,
                "Environment: {} ({} n/cm²/h)\n",
                environment.name,
                fmt_num(environment.flux.value())
            );
            table(
                out,
                &[
                    "Application",
                    "FIT critical",
                    "FIT tolerable",
                    "FIT hang",
                    "FIT C+H",
                    "FIT All",
                ],
                rows.iter().map(|r| {
                    vec![
                        r.application.clone(),
                        fmt_num(r.breakdown.fit_critical.value()),
                        fmt_num(r.breakdown.fit_tolerable.value()),
                        fmt_num(r.breakdown.fit_hang.value()),
                        fmt_num(r.fit_c_plus_h.value()),
                        fmt_num(r.fit_all.value()),
                    ]
                }),
            )
        }
        Section::Projections { rows, .. } => table(
            out,
            &[
                "Subject",
                "Variant",
                "Metric",
                "Environment",
                "Devices",
                "FIT",
                "Hours",
                "Months",
            ],
            rows.iter().map(|r| {
                let (h, m) = fmt_mean_time(&r.mean_time);
                vec![
                    r.subject.clone(),
                    r.variant.map_or("-".into(), |v| v.to_string()),
                    r.mean_time.kind().abbreviation().into(),
                    r.environment.name.clone(),
                    r.deployment.n_devices.to_string(),
                    fmt_num(r.fit.value()),
                    h,
                    m,
                ]
            }),
        ),
        Section::ReportedBase { rows, .. } => table(
            out,
            &["Group", "Base (months)", "Divisor", "Months"],
            rows.iter().map(|r| {
                vec![
                    r.group.clone(),
                    fmt_num(r.base_months),
                    fmt_num(r.divisor),
                    fmt_num(r.months),
                ]
            }),
        ),
        Section::Ratios { report, .. } => table(
            out,
            &["Numerator", "Denominator", "Ratio", "Degradation (%)"],
            report.comparisons.iter().map(|c| {
                vec![
                    c.numerator.clone(),
                    c.denominator.clone(),
                    fmt_num(c.ratio),
                    format!("{:.1}", 100.0 * c.degradation),
                ]
            }),
        ),
        Section::Simulation { result, .. } => {
            table(
                out,
                &["Quantity", "Value"],
                sim_values(result).into_iter().map(|(k, v)| vec![k, v]),
            );
            if !result.failure_counts.is_empty() {
                let _ = writeln!(out);
                table(
                    out,
                    &["Outcome", "Count"],
                    result
                        .failure_counts
                        .iter()
                        .map(|(k, v)| vec![k.clone(), v.to_string()]),
                );
            }
        }
        Section::Consistency { rows, .. } => table(
            out,
            &[
                "Subject",
                "Quantity",
                "Printed",
                "Recomputed",
                "Rel. diff (%)",
                "3 digits",
            ],
            rows.iter().map(|r| {
                vec![
                    r.subject.clone(),
                    r.quantity.clone(),
                    fmt_sci(r.printed),
                    fmt_sci(r.recomputed),
                    format!("{:.3}", 100.0 * r.relative_difference),
                    if r.agrees_to_3_digits { "yes" } else { "no" }.into(),
                ]
            }),
        ),
    }
}

fn sim_values(r: &SimResult) -> Vec<(String, String)> {
    let mut v = vec![
        ("kind".to_string(), format!("{:?}", r.kind)),
        ("trials".into(), r.trials.to_string()),
        ("seed".into(), r.seed.to_string()),
        ("horizon_hours".into(), fmt_num(r.horizon_hours)),
    ];
    if let Some(e) = &r.mttu_estimate {
        let abbr = e.mean_time.kind().abbreviation();
        let (h, m) = fmt_mean_time(&e.mean_time);
        v.push((format!("{abbr}_hours"), h));
        v.push((format!("{abbr}_months"), m));
        v.push((
            "standard_error_hours".into(),
            e.standard_error_hours.map_or("-".into(), fmt_num),
        ));
        v.push(("censored_trials".into(), r.censored_trials.to_string()));
    }
    if let Some(rate) = r.analytic_rate_per_hour {
        v.push(("analytic_rate_per_hour".into(), fmt_sci(rate)));
        if rate > 0.0 {
            v.push(("analytic_mean_hours".into(), fmt_num(1.0 / rate)));
        }
    }
    if let Some(b) = &r.backlog {
        v.push(("steady_state_backlog".into(), fmt_num(b.steady_state_mean)));
        v.push((
            "steady_state_backlog_se".into(),
            fmt_num(b.steady_state_standard_error),
        ));
        v.push(("final_backlog".into(), fmt_num(b.final_mean)));
        v.push((
            "utilisation".into(),
            b.utilisation.map_or("-".into(), fmt_num),
        ));
    }
    v
}

fn section_values(s: &Section) -> Vec<(String, String, String)> {
    let mut out = Vec::new();
    let mut push = |a: &str, b: &str, c: String| out.push((a.to_string(), b.to_string(), c));
    match s {
        Section::CrossSections { rows, .. } => {
            for r in rows {
                let subject = format!("{} {}", r.subject, r.category);
                let e = &r.estimate;
                push(&subject, "events", e.n_events.to_string());
                push(&subject, "fluence", e.fluence.value().to_string());
                push(
                    &subject,
                    "mean",
                    e.mean.map_or(String::new(), |m| m.to_string()),
                );
                push(&subject, "ci_low", e.ci_low.to_string());
                push(&subject, "ci_high", e.ci_high.to_string());
            }
        }
        Section::EventCounts { rows, .. } => {
            for r in rows {
                push(&r.memory, "upset_bits", r.upset_bits.to_string());
                push(&r.memory, "sefi_bits", r.sefi_bits.to_string());
                push(&r.memory, "nseu_bits", r.nseu_bits.to_string());
                push(&r.memory, "sbu", r.events.sbu.to_string());
                push(&r.memory, "mbu", r.events.mbu.to_string());
                push(&r.memory, "mcu", r.events.mcu.to_string());
                push(&r.memory, "sefi", r.events.sefi.to_string());
            }
        }
        Section::Shapes {
            memory,
            distribution,
            ..
        } => {
            for e in &distribution.entries {
                push(
                    &format!("{memory} {}", shape_label(&e.shape.offsets)),
                    "probability",
                    e.probability.to_string(),
                );
            }
        }
        Section::Sefis { rows, .. } => {
            for r in rows {
                push(
                    &format!("{} cycle {}", r.memory, r.cycle),
                    "bits",
                    r.bits.to_string(),
                );
            }
        }
        Section::Breakdowns { rows, .. } => {
            for r in rows {
                push(
                    &r.application,
                    "fit_critical",
                    r.breakdown.fit_critical.value().to_string(),
                );
                push(
                    &r.application,
                    "fit_tolerable",
                    r.breakdown.fit_tolerable.value().to_string(),
                );
                push(
                    &r.application,
                    "fit_hang",
                    r.breakdown.fit_hang.value().to_string(),
                );
                push(
                    &r.application,
                    "fit_c_plus_h",
                    r.fit_c_plus_h.value().to_string(),
                );
                push(&r.application, "fit_all", r.fit_all.value().to_string());
            }
        }
        Section::Projections { rows, .. } => {
            for r in rows {
                let label = r.label();
                let abbr = r.mean_time.kind().abbreviation();
                push(&label, "fit", r.fit.value().to_string());
                push(
                    &label,
                    &format!("{abbr}_hours"),
                    r.mean_time.hours().map_or(String::new(), |h| h.to_string()),
                );
                push(
                    &label,
                    &format!("{abbr}_months"),
                    r.mean_time
                        .months()
                        .map_or(String::new(), |m| m.to_string()),
                );
            }
        }
        Section::ReportedBase { rows, .. } => {
            for r in rows {
                push(&r.group, "months", r.months.to_string());
            }
        }
        Section::Ratios { report, .. } => {
            for c in &report.comparisons {
                push(
                    &format!("{} / {}", c.numerator, c.denominator),
                    "ratio",
                    c.ratio.to_string(),
                );
            }
        }
        Section::Simulation { result, .. } => {
            for (k, v) in sim_values(result) {
                push("simulation", &k, v);
            }
            for (i, t) in result.time_to_first_failure.iter().enumerate() {
                push(&format!("sample {i}"), "time_hours", t.to_string());
            }
            for p in &result.uncorrected_accumulation {
                push(
                    &format!("t={} min", p.time_min),
                    "mean_uncorrected",
                    p.mean_uncorrected.to_string(),
                );
            }
        }
        Section::Consistency { rows, .. } => {
            for r in rows {
                push(
                    &format!("{} {}", r.subject, r.quantity),
                    "recomputed",
                    r.recomputed.to_string(),
                );
            }
        }
    }
    out
}

/// Cross-section, event-count, shape and SEFI sections of readback
/// analyses.
pub fn readback_sections(analyses: &[ReadbackAnalysis]) -> Vec<Section> {
    let mut xs = Vec::new();
    let mut counts = Vec::new();
    let mut sefis = Vec::new();
    let mut shapes = Vec::new();
    for a in analyses {
        xs.push(EstimateRow {
            subject: a.memory.clone(),
            category: "nseu_per_device".into(),
            estimate: a.per_device,
        });
        xs.push(EstimateRow {
            subject: a.memory.clone(),
            category: "nseu_per_bit".into(),
            estimate: a.per_bit,
        });
        counts.push(EventCountsRow {
            memory: a.memory.clone(),
            cycles: a.cycles,
            upset_bits: a.upset_bits,
            sefi_bits: a.sefi_bits,
            nseu_bits: a.nseu_bits,
            events: a.event_counts,
        });
        for e in &a.sefis {
            sefis.push(SefiRow {
                memory: a.memory.clone(),
                cycle: e.cycle(),
                bits: e.len() as u64,
                first_frame: e.bits.iter().map(|b| b.frame).min().unwrap_or(0),
                last_frame: e.bits.iter().map(|b| b.frame).max().unwrap_or(0),
            });
        }
        if let Some(d) = &a.shapes {
            shapes.push(Section::Shapes {
                title: format!("{} event shapes", a.memory),
                memory: a.memory.clone(),
                distribution: d.clone(),
            });
        }
    }
    let mut out = vec![
        Section::CrossSections {
            title: "Static cross-sections".into(),
            rows: xs,
        },
        Section::EventCounts {
            title: "Upset events".into(),
            rows: counts,
        },
    ];
    out.extend(shapes);
    out.push(Section::Sefis {
        title: "SEFIs".into(),
        rows: sefis,
    });
    out
}

fn breakdown_row(name: &str, sigma: &ApplicationSigma, env: &Environment) -> Result<BreakdownRow> {
    let b = sigma.breakdown(env.flux)?;
    Ok(BreakdownRow {
        application: name.to_string(),
        fit_c_plus_h: b.fit_c_plus_h(),
        fit_all: b.fit_all(),
        breakdown: b,
    })
}

/// Per-category dynamic cross-sections of every log, a total row when
/// there are several, and FIT breakdowns at `env`.
pub fn xsection_sections(
    logs: &[CampaignLog],
    options: EstimateOptions,
    env: &Environment,
) -> Result<Vec<Section>> {
    let mut all: Vec<CampaignLog> = logs.to_vec();
    if logs.len() > 1 {
        all.push(total_log("Total", logs)?);
    }
    let mut rows = Vec::new();
    let mut breakdowns = Vec::new();
    for log in &all {
        for (cat, est) in dynamic_cross_sections(log, options)? {
            rows.push(EstimateRow {
                subject: log.benchmark.clone(),
                category: cat.name().into(),
                estimate: est,
            });
        }
        breakdowns.push(breakdown_row(
            &log.benchmark,
            &ApplicationSigma::from_log(log),
            env,
        )?);
    }
    Ok(vec![
        Section::CrossSections {
            title: "Dynamic cross-sections".into(),
            rows,
        },
        Section::Breakdowns {
            title: "Failure-rate breakdown".into(),
            environment: env.clone(),
            rows: breakdowns,
        },
    ])
}

/// Estimates recomputed from the counts stored in a profile, plus the
/// consistency checks of its printed values.
pub fn profile_sections(profile: &DeviceProfile, options: EstimateOptions) -> Result<Vec<Section>> {
    let mut rows = Vec::new();
    for m in &profile.memories {
        for (category, basis) in [
            ("nseu_per_device", Basis::PerDevice),
            (
                "nseu_per_bit",
                Basis::PerBit {
                    bit_count: m.bit_count(),
                },
            ),
        ] {
            rows.push(EstimateRow {
                subject: m.name().to_string(),
                category: category.into(),
                estimate: estimate_cross_section(m.upsets, m.fluence_n_per_cm2, basis, options)?,
            });
        }
    }
    for t in &profile.memory_totals {
        if let Some(first) = t.members.first().and_then(|n| profile.memory(n)) {
            rows.push(EstimateRow {
                subject: t.name.clone(),
                category: "nseu_per_bit".into(),
                estimate: estimate_cross_section(
                    t.upsets,
                    first.fluence_n_per_cm2,
                    Basis::PerBit { bit_count: t.bits },
                    options,
                )?,
            });
        }
    }
    let mut out = vec![Section::CrossSections {
        title: format!("{} memory cross-sections", profile.name),
        rows,
    }];
    let apps: Vec<CampaignLog> = profile.applications.iter().map(|a| a.log.clone()).collect();
    let benches: Vec<CampaignLog> = profile.benchmarks.iter().map(|a| a.log.clone()).collect();
    let sea = Environment::nyc_sea_level();
    for (title, logs) in [("Application", apps), ("Benchmark", benches)] {
        if logs.is_empty() {
            continue;
        }
        let mut secs = xsection_sections(&logs, options, &sea)?;
        for s in &mut secs {
            if let Section::CrossSections { title: t, .. } | Section::Breakdowns { title: t, .. } =
                s
            {
                *t = format!("{title} {}", t.to_lowercase());
            }
        }
        out.extend(secs);
    }
    if let Ok(shapes) = profile.cram_shape_distribution() {
        if profile.has_cram() {
            out.push(Section::Shapes {
                title: "CRAM event shapes".into(),
                memory: "CRAM".into(),
                distribution: shapes,
            });
        }
    }
    out.push(Section::Consistency {
        title: "Profile consistency".into(),
        rows: profile.consistency(),
    });
    Ok(out)
}

/// Memory MTTU rows (each memory and each group), reported group bases,
/// application MTTF rows and their ratios for one scenario.
pub fn projection_sections(profile: &DeviceProfile, scenario: &Scenario) -> Result<Vec<Section>> {
    let env = &scenario.environment;
    let dep = scenario.deployment;
    let mut memory_rows = Vec::new();
    let mut group_rows = Vec::new();
    for (group, members) in profile.group_members() {
        for m in &members {
            memory_rows.push(project(
                m.name(),
                m.sigma_device(),
                MeanTimeKind::Upset,
                env,
                dep,
            )?);
        }
        let sigma: f64 = members.iter().map(|m| m.sigma_device()).sum();
        group_rows.push(project(
            profile.group_label(&group),
            sigma,
            MeanTimeKind::Upset,
            env,
            dep,
        )?);
    }
    let mut out = Vec::new();
    if !memory_rows.is_empty() {
        memory_rows.extend(group_rows.iter().cloned());
        out.push(Section::Projections {
            title: "Memory MTTU".into(),
            rows: memory_rows,
        });
    }
    let divisor = env.reference_multiplier() * dep.n_devices as f64;
    let reported: Vec<ReportedBaseRow> = profile
        .groups
        .iter()
        .filter_map(|(g, info)| {
            info.reported_base_mttu_months.map(|base| ReportedBaseRow {
                group: if info.label.is_empty() {
                    g.clone()
                } else {
                    info.label.clone()
                },
                base_months: base,
                divisor,
                months: base / divisor,
            })
        })
        .collect();
    if !reported.is_empty() {
        out.push(Section::ReportedBase {
            title: "Reported group MTTU".into(),
            rows: reported,
        });
    }
    let apps = profile.application_sigmas();
    let app_rows = mttf_table(&apps, env, dep)?;
    if !app_rows.is_empty() {
        out.push(Section::Projections {
            title: "Application MTTF".into(),
            rows: app_rows.clone(),
        });
    }
    let mut ratio_rows = group_rows;
    ratio_rows.extend(app_rows);
    if ratio_rows.len() > 1 {
        out.push(Section::Ratios {
            title: "Mean-time ratios".into(),
            report: ratio_report(&ratio_rows)?,
        });
    }
    Ok(out)
}

pub fn simulation_section(result: SimResult) -> Section {
    let title = match result.kind {
        crate::sim::SimKind::FailureCampaign => "Failure campaign",
        crate::sim::SimKind::ScrubRace => "Scrub race",
    };
    Section::Simulation {
        title: title.into(),
        result,
    }
}
