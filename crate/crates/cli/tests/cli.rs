use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use radrel::profile::DeviceProfile;
use radrel::projection::Variant;
use radrel::readback::{BitArray, MemoryGeometry, MemoryKind, ReadbackCampaign};
use radrel::report::{Report, Section};
use radrel::stats::CampaignLog;
use radrel::units::HOURS_PER_MONTH;
use radrel::{Fluence, MeanTimeTo};

fn radrel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_radrel"))
        .args(args)
        .env_remove("RADREL_PROFILE_DIR")
        .output()
        .expect("binary runs")
}

fn ok_report(args: &[&str]) -> Report {
    let out = radrel(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    Report::from_json(std::str::from_utf8(&out.stdout).unwrap()).unwrap()
}

fn estimate(report: &Report, subject: &str, category: &str) -> radrel::stats::CrossSectionEstimate {
    report
        .sections
        .iter()
        .find_map(|s| match s {
            Section::CrossSections { rows, .. } => rows
                .iter()
                .find(|r| r.subject == subject && r.category == category)
                .map(|r| r.estimate),
            _ => None,
        })
        .unwrap_or_else(|| panic!("no {subject}/{category} row"))
}

fn months(report: &Report, subject: &str, variant: Option<Variant>) -> f64 {
    let row = report
        .sections
        .iter()
        .find_map(|s| match s {
            Section::Projections { rows, .. } => rows
                .iter()
                .find(|r| r.subject == subject && r.variant == variant),
            _ => None,
        })
        .unwrap_or_else(|| panic!("no projection for {subject}"));
    match row.mean_time {
        MeanTimeTo::Finite { hours, .. } => hours / HOURS_PER_MONTH,
        MeanTimeTo::NoneObserved { .. } => f64::INFINITY,
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// 512 × 1024 memory with `n` isolated single-bit upsets (16 per frame) in
/// one readback, plus an optional 256-bit burst in one frame.
fn planted_container(dir: &Path, n: usize, burst: bool, fluence: f64) -> PathBuf {
    let geometry = MemoryGeometry::new("CRAM", MemoryKind::Cram, 512, 1024).unwrap();
    let len = geometry.total_bits() as usize;
    let golden = BitArray::zeros(len);
    let mut cycle = golden.clone();
    let mut planted = 0;
    'outer: for frame in (0..512).step_by(2) {
        for bit in (0..1024).step_by(64) {
            if planted == n {
                break 'outer;
            }
            cycle.flip(frame * 1024 + bit);
            planted += 1;
        }
    }
    assert_eq!(planted, n);
    if burst {
        for bit in 0..256 {
            cycle.set(511 * 1024 + bit, true);
        }
    }
    let campaign = ReadbackCampaign::new(
        geometry,
        golden,
        BitArray::ones(len),
        vec![cycle],
        Fluence::new(fluence).unwrap(),
        1,
    )
    .unwrap();
    let path = dir.join(format!("planted_{n}_{burst}.rbkc"));
    std::fs::write(&path, campaign.to_container()).unwrap();
    path
}

fn write_logs(dir: &Path, name: &str, logs: &[CampaignLog]) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(logs).unwrap()).unwrap();
    path
}

fn bundled() -> DeviceProfile {
    DeviceProfile::bundled("xczu9eg").unwrap()
}

#[test]
fn readback_planted_cram_upsets() {
    let dir = tempfile::tempdir().unwrap();
    let input = planted_container(dir.path(), 2417, false, 1.2e11);
    let r = ok_report(&["analyze-readback", input.to_str().unwrap()]);
    let e = estimate(&r, "CRAM", "nseu_per_device");
    assert_eq!(e.n_events, 2417);
    assert!(rel(e.mean.unwrap(), 2.01e-8) < 0.005, "{e:?}");
    assert_eq!(r.provenance.fluences["CRAM"], 1.2e11);
}

#[test]
fn readback_burst_is_listed_as_sefi() {
    let dir = tempfile::tempdir().unwrap();
    let input = planted_container(dir.path(), 10, true, 1e10);
    let r = ok_report(&[
        "analyze-readback",
        input.to_str().unwrap(),
        "--memory",
        "SRL",
        "--kind",
        "srl",
    ]);
    let sefis: Vec<_> = r
        .sections
        .iter()
        .filter_map(|s| match s {
            Section::Sefis { rows, .. } => Some(rows),
            _ => None,
        })
        .flatten()
        .collect();
    assert_eq!(sefis.len(), 1);
    assert_eq!(sefis[0].bits, 256);
    assert_eq!(estimate(&r, "SRL", "nseu_per_device").n_events, 10);
}

#[test]
fn readback_empty_diff_gives_one_sided_interval() {
    let dir = tempfile::tempdir().unwrap();
    let input = planted_container(dir.path(), 0, false, 1e10);
    let r = ok_report(&["analyze-readback", input.to_str().unwrap()]);
    let e = estimate(&r, "CRAM", "nseu_per_device");
    assert_eq!(e.n_events, 0);
    assert!(e.mean.is_none());
    assert_eq!(e.ci_low, 0.0);
    assert!(e.ci_high > 0.0);
}

#[test]
fn readback_csv_and_upset_export() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("upsets.csv");
    std::fs::write(&csv, "cycle,frame,bit\n0,1,5\n0,2,6\n0,10,100\n").unwrap();
    let out_csv = dir.path().join("bits.csv");
    let r = ok_report(&[
        "analyze-readback",
        csv.to_str().unwrap(),
        "--fluence",
        "1e10",
        "--upsets-csv",
        out_csv.to_str().unwrap(),
    ]);
    // cross-sections count bits; the adjacent pair is one event
    assert_eq!(estimate(&r, "CRAM", "nseu_per_device").n_events, 3);
    let counts = r
        .sections
        .iter()
        .find_map(|s| match s {
            Section::EventCounts { rows, .. } => Some(rows[0].events),
            _ => None,
        })
        .unwrap();
    assert_eq!((counts.sbu, counts.mcu), (1, 1));
    let exported = std::fs::read_to_string(out_csv).unwrap();
    assert_eq!(exported.lines().count(), 4);
    // CSV input without a fluence is a validation error.
    assert_eq!(
        radrel(&["analyze-readback", csv.to_str().unwrap()])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn malformed_container_exits_2_with_offset() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.rbkc");
    std::fs::write(&bad, b"XXXX0000000000000000000000000000").unwrap();
    let out = radrel(&["analyze-readback", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("offset 0"));

    let good = planted_container(dir.path(), 3, false, 1e10);
    let mut bytes = std::fs::read(&good).unwrap();
    bytes.truncate(bytes.len() - 7);
    let short = dir.path().join("short.rbkc");
    std::fs::write(&short, bytes).unwrap();
    let out = radrel(&["analyze-readback", short.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("offset"));
}

#[test]
fn xsection_benchmark_table() {
    let dir = tempfile::tempdir().unwrap();
    let logs: Vec<CampaignLog> = bundled().benchmarks.into_iter().map(|b| b.log).collect();
    let path = write_logs(dir.path(), "bench.json", &logs);
    let r = ok_report(&["xsection", path.to_str().unwrap()]);
    let total = estimate(&r, "Total", "sdc");
    assert!(rel(total.mean.unwrap(), 9.48e-10) < 0.01, "{total:?}");
    for (name, expected) in [("SHA", 2.85e-10), ("Qsort", 5.42e-9), ("CRC32", 7.44e-10)] {
        let e = estimate(&r, name, "sdc");
        assert!(rel(e.mean.unwrap(), expected) < 0.01, "{name}: {e:?}");
    }

    let md = radrel(&["xsection", path.to_str().unwrap(), "--format", "md"]);
    let text = String::from_utf8(md.stdout).unwrap();
    assert!(text.contains("2.85E-10"));
    assert!(text
        .lines()
        .any(|l| l.contains("| sdc |") && l.contains("| - |")));
}

#[test]
fn xsection_dpu_tolerable_interval() {
    let dir = tempfile::tempdir().unwrap();
    let dpu = bundled()
        .applications
        .into_iter()
        .find(|a| a.log.benchmark == "DPU")
        .unwrap()
        .log;
    let path = write_logs(dir.path(), "dpu.json", &[dpu]);
    let r = ok_report(&["xsection", path.to_str().unwrap()]);
    let e = estimate(&r, "DPU", "tolerable_sdc");
    assert!(rel(e.mean.unwrap(), 5.20e-8) < 0.005);
    assert!(rel(e.ci_low, 5.01e-8) < 0.01);
    assert!(rel(e.ci_high, 5.39e-8) < 0.01);
}

#[test]
fn xsection_csv_all_correct() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("clean.csv");
    std::fs::write(
        &path,
        "benchmark,category,count\nclean,fluence_n_per_cm2,1e10\nclean,runs,100\nclean,correct,100\n",
    )
    .unwrap();
    let r = ok_report(&["xsection", path.to_str().unwrap()]);
    let rows = match &r.sections[0] {
        Section::CrossSections { rows, .. } => rows,
        other => panic!("{other:?}"),
    };
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|row| row.estimate.mean.is_none()));
}

#[test]
fn xsection_rejects_counts_above_runs() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("over.json");
    std::fs::write(
        &path,
        r#"{"benchmark": "x", "fluence_n_per_cm2": 1e10, "counts": {"runs": 2, "critical_sdc": 5}}"#,
    )
    .unwrap();
    assert_eq!(
        radrel(&["xsection", path.to_str().unwrap()]).status.code(),
        Some(1)
    );
    let garbage = dir.path().join("garbage.json");
    std::fs::write(&garbage, "{ not json").unwrap();
    assert_eq!(
        radrel(&["xsection", garbage.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn project_at_altitude() {
    let r = ok_report(&[
        "project",
        "--profile",
        "xczu9eg",
        "--env",
        "nyc_40kft",
        "--nodes",
        "1",
    ]);
    assert!((months(&r, "PL memories", None) - 1.81).abs() < 0.01);
    assert!((months(&r, "DPU", Some(Variant::CPlusH)) - 87.0).abs() < 2.0);
    assert!((months(&r, "DPU", Some(Variant::All)) - 3.9).abs() < 0.2);
}

#[test]
fn project_fleet_and_sea_level() {
    let r = ok_report(&["project", "--env", "nyc_sea_level", "--nodes", "1000"]);
    assert!((months(&r, "PL memories", None) - 0.90).abs() < 0.005);
    let r = ok_report(&["project", "--env", "nyc_sea_level", "--nodes", "1"]);
    assert!(rel(months(&r, "DPU", Some(Variant::All)), 1930.0) < 0.01);
    assert_eq!(radrel(&["project", "--env", "moon"]).status.code(), Some(1));
    assert_eq!(radrel(&["project", "--nodes", "0"]).status.code(), Some(1));
}

#[test]
fn project_presets_cover_three_scenarios() {
    let r = ok_report(&["project", "--presets"]);
    let n = r
        .sections
        .iter()
        .filter(|s| matches!(s, Section::Projections { .. }))
        .count();
    assert_eq!(n, 6);
}

#[test]
fn profile_dir_override() {
    let dir = tempfile::tempdir().unwrap();
    let mut p = bundled();
    for m in &mut p.memories {
        m.sigma_bit_cm2 *= 2.0;
        m.sigma_device_cm2 = m.sigma_device_cm2.map(|s| s * 2.0);
    }
    std::fs::write(dir.path().join("xczu9eg.json"), p.to_json_pretty()).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_radrel"))
        .args(["project", "--env", "nyc_40kft"])
        .env("RADREL_PROFILE_DIR", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let r = Report::from_json(std::str::from_utf8(&out.stdout).unwrap()).unwrap();
    assert!((months(&r, "PL memories", None) - 0.904).abs() < 0.01);
}

#[test]
fn simulate_scrub_race() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("race.json");
    std::fs::write(
        &cfg,
        r#"{"scrub_race": {"arrival_rate_per_min": 8, "scrub_rate_per_min": 1700, "horizon_min": 60}, "trials": 200}"#,
    )
    .unwrap();
    let series = dir.path().join("series.csv");
    let r = ok_report(&[
        "simulate",
        cfg.to_str().unwrap(),
        "--samples-csv",
        series.to_str().unwrap(),
    ]);
    let result = match &r.sections[0] {
        Section::Simulation { result, .. } => result,
        other => panic!("{other:?}"),
    };
    assert!(result.backlog.as_ref().unwrap().steady_state_mean < 1.0);
    assert!(std::fs::read_to_string(series)
        .unwrap()
        .starts_with("time_min,mean_uncorrected"));
}

#[test]
fn simulate_matches_project() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("off.json");
    std::fs::write(
        &cfg,
        r#"{"profile": "xczu9eg", "environment": "nyc_40kft", "groups": ["pl"], "trials": 4000, "seed": 7}"#,
    )
    .unwrap();
    let samples = dir.path().join("samples.csv");
    let r = ok_report(&[
        "simulate",
        cfg.to_str().unwrap(),
        "--samples-csv",
        samples.to_str().unwrap(),
    ]);
    let result = match &r.sections[0] {
        Section::Simulation { result, .. } => result,
        other => panic!("{other:?}"),
    };
    let analytic = ok_report(&["project", "--env", "nyc_40kft"]);
    let expected = months(&analytic, "PL memories", None) * HOURS_PER_MONTH;
    assert!(result
        .mttu_estimate
        .as_ref()
        .unwrap()
        .agrees_with(expected, 3.0));
    assert_eq!(r.provenance.seed, Some(7));
    assert_eq!(
        std::fs::read_to_string(samples).unwrap().lines().count(),
        4001
    );
}

#[test]
fn simulate_zero_trials_is_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("zero.json");
    std::fs::write(&cfg, r#"{"profile": "xczu9eg", "trials": 0}"#).unwrap();
    assert_eq!(
        radrel(&["simulate", cfg.to_str().unwrap()]).status.code(),
        Some(1)
    );
    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"profile": "xczu9eg", "trials": 5, "mitigation": {"dirty_line_fraction": 3}}"#,
    )
    .unwrap();
    assert_eq!(
        radrel(&["simulate", bad.to_str().unwrap()]).status.code(),
        Some(1)
    );
}

#[test]
fn byte_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"profile": "xczu9eg", "environment": "nyc_40kft", "mitigation": {"scrub_rate_per_min": 1700, "frame_ecc": true, "use_profile_protection": true}, "trials": 300}"#,
    )
    .unwrap();
    for args in [
        vec!["simulate", cfg.to_str().unwrap(), "--seed", "11"],
        vec!["project", "--presets"],
        vec!["report"],
    ] {
        let a = radrel(&args);
        let b = radrel(&args);
        assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn report_round_trip_and_merge() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    assert!(
        radrel(&["project", "--env", "nyc_40kft", "-o", a.to_str().unwrap()])
            .status
            .success()
    );
    let input = planted_container(dir.path(), 5, false, 1e10);
    assert!(radrel(&[
        "analyze-readback",
        input.to_str().unwrap(),
        "-o",
        b.to_str().unwrap()
    ])
    .status
    .success());

    let first = Report::from_json(&std::fs::read_to_string(&a).unwrap()).unwrap();
    let again = ok_report(&["report", a.to_str().unwrap()]);
    assert_eq!(first, again);

    let merged = ok_report(&["report", a.to_str().unwrap(), b.to_str().unwrap()]);
    assert_eq!(merged.command, "project + analyze-readback");
    let second = Report::from_json(&std::fs::read_to_string(&b).unwrap()).unwrap();
    assert_eq!(
        merged.sections.len(),
        first.sections.len() + second.sections.len()
    );

    let csv = radrel(&["report", a.to_str().unwrap(), "--format", "csv"]);
    assert!(String::from_utf8(csv.stdout)
        .unwrap()
        .starts_with("section,subject,quantity,value"));
}

#[test]
fn full_profile_report() {
    let r = ok_report(&["report"]);
    assert!(r
        .sections
        .iter()
        .any(|s| matches!(s, Section::Consistency { .. })));
    let projections = r
        .sections
        .iter()
        .filter(|s| matches!(s, Section::Projections { .. }))
        .count();
    assert_eq!(projections, 6);
    let md = radrel(&["report", "--format", "md"]);
    assert!(md.status.success());
}
