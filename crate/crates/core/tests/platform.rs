mod common;

use edgeflow_core::metrics::{round_to, PcrBasis, PlatformTable};
use edgeflow_core::{load_profiles, platform_report, ReportOptions, ResponsivenessMode};

fn reference_rows() -> Vec<edgeflow_core::PlatformRow> {
    let set = load_profiles(common::repo_root().join("configs/reference.csv")).unwrap();
    platform_report(
        &set.devices,
        &set.cloud,
        &set.pricing,
        &ReportOptions::default(),
    )
    .unwrap()
}

#[test]
fn reference_table() {
    let rows = reference_rows();
    let names: Vec<&str> = rows.iter().map(|r| r.platform.as_str()).collect();
    assert_eq!(names, ["cloud", "nano-qwen2.5-3b", "agx-qwen2.5-7b"]);

    let cpr: Vec<f64> = rows.iter().map(|r| round_to(r.cpr_cents, 4)).collect();
    assert_eq!(cpr, [1.6380, 0.0017, 0.0041]);
    let u: Vec<f64> = rows.iter().map(|r| round_to(r.utility, 3)).collect();
    assert_eq!(u, [0.84, 0.565, 0.595]);
    let p: Vec<f64> = rows.iter().map(|r| round_to(r.pcr, 2)).collect();
    assert_eq!(p, [0.51, 332.35, 145.12]);
}

#[test]
fn exact_basis_is_available() {
    let set = load_profiles(common::repo_root().join("configs/reference.csv")).unwrap();
    let opts = ReportOptions {
        pcr_basis: PcrBasis::ExactCpr,
        ..ReportOptions::default()
    };
    let rows = platform_report(&set.devices, &set.cloud, &set.pricing, &opts).unwrap();
    let p: Vec<f64> = rows.iter().map(|r| round_to(r.pcr, 2)).collect();
    assert_eq!(p, [0.51, 328.97, 144.59]);
}

#[test]
fn inverse_ttft_scores_responsiveness() {
    let set = load_profiles(common::repo_root().join("configs/reference.csv")).unwrap();
    let opts = ReportOptions {
        r_mode: ResponsivenessMode::InverseTtft,
        ..ReportOptions::default()
    };
    let rows = platform_report(&set.devices, &set.cloud, &set.pricing, &opts).unwrap();
    assert!((rows[0].r - 1.0 / 1.71).abs() < 1e-12);
    assert!(rows[1..].iter().all(|r| r.utility < 1.0));
}

#[test]
fn table_text() {
    let text = PlatformTable(&reference_rows()).to_string();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("platform"));
    assert!(lines[1].contains("1.6380") && lines[1].contains("0.840") && lines[1].contains("0.51"));
    assert!(lines[2].contains("332.35"));
}
