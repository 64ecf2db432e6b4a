mod common;

use std::collections::BTreeMap;
use std::path::Path;

use common::*;
use hubflow::bundle::{sha256_hex, Bundle, MANIFEST};
use hubflow::pipeline::run;

fn read_dir(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .map(|e| (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap()))
        .collect()
}

#[test]
fn synthetic_workspace_fits_both_directions() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = scenario_dir(tmp.path(), 3);
    let out = run(&cfg).unwrap();
    assert!(out.manifest.errors.is_empty(), "{:?}", out.manifest.errors);
    let bundle = Bundle::load(&out.workspace).unwrap();
    assert!(bundle.fits.inbound.is_some() && bundle.fits.outbound.is_some());
    assert!(bundle.validations.inbound.is_some() && bundle.validations.outbound.is_some());
    assert!(bundle.anovas.outbound.is_some());
    // 5 active days, last 2 held out, 2011-10-12 missing.
    assert_eq!(bundle.settings.training_days, vec![day("2011-10-10"), day("2011-10-11"), day("2011-10-13")]);
    assert_eq!(bundle.settings.holdout_days, vec![day("2011-10-14"), day("2011-10-15")]);
    for a in &out.manifest.artifacts {
        let bytes = std::fs::read(out.workspace.join(&a.path)).unwrap();
        assert_eq!(sha256_hex(&bytes), a.sha256, "{}", a.path);
        assert_eq!(a.config_hash, out.manifest.config_hash);
    }
    assert!(out.summary_text().contains(&out.manifest.config_hash));
}

#[test]
fn flows_match_ground_truth() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = scenario_dir(tmp.path(), 11);
    let out = run(&cfg).unwrap();
    let bundle = Bundle::load(&out.workspace).unwrap();
    let truth = std::fs::read_to_string(tmp.path().join("truth_flows.csv")).unwrap();
    let mut checked = 0;
    for line in truth.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let dir = f[2].parse().unwrap();
        let got = bundle.flows.get(dir).unwrap().get(day(f[0]), f[1].parse().unwrap());
        assert_eq!(got, Some(f[4].parse().unwrap()), "{line}");
        checked += 1;
    }
    assert_eq!(checked, 5 * 12 * 2);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ca = scenario_dir(a.path(), 5);
    let cb = scenario_dir(b.path(), 5);
    run(&ca).unwrap();
    run(&cb).unwrap();
    // A rerun in place clears and rewrites the same bytes.
    run(&ca).unwrap();
    let (ra, rb) = (read_dir(&bundle_dir(&ca)), read_dir(&bundle_dir(&cb)));
    assert!(ra.contains_key(MANIFEST));
    assert_eq!(ra.keys().collect::<Vec<_>>(), rb.keys().collect::<Vec<_>>());
    for (k, v) in &ra {
        assert!(v == &rb[k], "{k} differs");
    }
}

#[test]
fn bad_zone_file_is_an_input_error_naming_the_file() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = scenario_dir(tmp.path(), 1);
    std::fs::write(tmp.path().join("zones.geojson"), r#"{"type":"FeatureCollection","features":[{"type":"Feature"}]}"#)
        .unwrap();
    let err = run(&cfg).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains("zones.geojson"), "{err}");
    assert!(!bundle_dir(&cfg).join(MANIFEST).exists());
}

#[test]
fn missing_probe_file_is_an_input_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = scenario_dir(tmp.path(), 1);
    std::fs::remove_file(tmp.path().join("probes.csv")).unwrap();
    let err = run(&cfg).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains("probes.csv"), "{err}");
}

#[test]
fn unknown_config_key_is_an_input_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = scenario_dir(tmp.path(), 1);
    let mut text = std::fs::read_to_string(&cfg).unwrap();
    text.push_str("\n[extra]\nx = 1\n");
    std::fs::write(&cfg, text).unwrap();
    let err = run(&cfg).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains("hubflow.toml"), "{err}");
}

#[test]
fn empty_training_window_gives_partial_bundle() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = scenario_dir(tmp.path(), 2);
    let text = std::fs::read_to_string(&cfg)
        .unwrap()
        .replace("[forecast]\n", "[forecast]\ntrain_start = 2011-10-14\ntrain_end = 2011-10-15\n");
    std::fs::write(&cfg, text).unwrap();
    let out = run(&cfg).unwrap();
    let stages: Vec<&str> = out.manifest.errors.iter().map(|e| e.stage.as_str()).collect();
    assert!(stages.contains(&"fit_inbound") && stages.contains(&"fit_outbound"), "{stages:?}");
    let bundle = Bundle::load(&out.workspace).unwrap();
    assert!(bundle.fits.outbound.is_none());
    assert!(bundle.trips.is_some() && bundle.flows.outbound.is_some());
}
