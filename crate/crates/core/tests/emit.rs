mod common;

use std::fs;

use edgeflow_core::report::{DEVICES_COLUMNS, TIMESERIES_COLUMNS};
use edgeflow_core::{emit_summary, read_summary, run_simulation};

#[test]
fn t1_summary_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_simulation(&common::t1()).unwrap();
    let files = emit_summary(&report, dir.path().join("run")).unwrap();
    assert_eq!(files.len(), 3);

    let summary = read_summary(&files[0]).unwrap();
    assert_eq!(summary.totals.edge_processed, 3);
    assert_eq!(summary.totals, report.totals);
    assert_eq!(summary.config, report.config);
    assert_eq!(summary.devices, report.devices);

    let ts = fs::read_to_string(&files[1]).unwrap();
    let mut lines = ts.lines();
    assert_eq!(lines.next().unwrap(), TIMESERIES_COLUMNS.join(","));
    assert_eq!(lines.next().unwrap(), "0,1,1,0,0,0,0,0,0");
    assert_eq!(lines.count(), 2);

    let dev = fs::read_to_string(&files[2]).unwrap();
    let rows: Vec<&str> = dev.lines().collect();
    assert_eq!(rows[0], DEVICES_COLUMNS.join(","));
    assert_eq!(
        rows[1..],
        ["0,solo,50,1,0.5", "1,solo,100,1,1", "2,solo,100,1,1"]
    );
}

#[test]
fn t2_timeseries_shows_cloud_step() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_simulation(&common::t2()).unwrap();
    emit_summary(&report, dir.path()).unwrap();
    let ts = fs::read_to_string(dir.path().join("timeseries.csv")).unwrap();
    let row1: Vec<&str> = ts.lines().nth(2).unwrap().split(',').collect();
    assert_eq!(row1[..8], ["1", "1", "0", "1", "1", "0", "50", "98"]);
    assert!((row1[8].parse::<f64>().unwrap() - 0.444).abs() < 1e-12);
}

#[test]
fn zero_steps_write_headers_only() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = common::t1();
    cfg.workload.steps = 0;
    let report = run_simulation(&cfg).unwrap();
    emit_summary(&report, dir.path()).unwrap();
    for (file, cols) in [
        ("timeseries.csv", &TIMESERIES_COLUMNS[..]),
        ("devices.csv", &DEVICES_COLUMNS[..]),
    ] {
        let text = fs::read_to_string(dir.path().join(file)).unwrap();
        assert_eq!(text, cols.join(",") + "\n");
    }
    assert_eq!(
        read_summary(dir.path().join("summary.json"))
            .unwrap()
            .totals
            .requests,
        0
    );
}

#[test]
fn unwritable_directory_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("not-a-dir");
    fs::write(&blocker, "x").unwrap();
    let report = run_simulation(&common::t1()).unwrap();
    assert!(emit_summary(&report, blocker.join("out")).is_err());
}
