mod common;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::http::StatusCode;
use common::*;
use hubflow::api::{router, AppState};
use hubflow::bundle::Bundle;
use hubflow::fixture::write_fixture;
use hubflow::pipeline::run;
use tempfile::TempDir;

fn fixture() -> (TempDir, PathBuf) {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("fixture");
    write_fixture(&dir).unwrap();
    (tmp, dir)
}

fn synthetic() -> (TempDir, PathBuf) {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = scenario_dir(tmp.path(), 21);
    let out = run(&cfg).unwrap();
    (tmp, out.workspace)
}

fn app(dir: &Path) -> (axum::Router, String) {
    let bundle = Bundle::load(dir).unwrap();
    let hash = bundle.config_hash().to_string();
    (router(Arc::new(AppState::new(bundle))), hash)
}

fn assert_hash(r: &Reply, hash: &str) {
    assert_eq!(r.body["config_hash"], hash);
    assert_eq!(r.header_hash.as_deref(), Some(hash));
}

#[tokio::test]
async fn forecast_from_reference_model() {
    let (_t, dir) = fixture();
    let r = get(&dir, "/forecast?direction=outbound&period=9").await;
    assert_eq!(r.status, StatusCode::OK);
    assert!((r.body["prediction"].as_f64().unwrap() - 152.46).abs() < 1e-2, "{}", r.body);
    let all = get(&dir, "/forecast").await;
    let preds = all.body["predictions"].as_array().unwrap();
    assert_eq!(preds.len(), 12);
    assert!((preds[11]["prediction"].as_f64().unwrap() - 54.07692).abs() < 1e-9);

    let rep = get(&dir, "/forecast/report?direction=outbound").await;
    assert_eq!(rep.status, StatusCode::OK);
    assert_eq!(rep.body["report"]["regression_statistics"]["observations"], 311);
}

#[tokio::test]
async fn forecast_parameter_errors() {
    let (_t, dir) = fixture();
    for uri in ["/forecast?period=0", "/forecast?period=13", "/forecast?period=x", "/forecast?direction=sideways"] {
        let r = get(&dir, uri).await;
        assert_eq!(r.status, StatusCode::BAD_REQUEST, "{uri}");
    }
    assert_eq!(get(&dir, "/forecast?bogus=1").await.error_code(), "unknown_parameter");
    let r = get(&dir, "/forecast?direction=inbound").await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);
    assert_eq!(r.error_code(), "not_available");
}

#[tokio::test]
async fn transfer_queries() {
    let (_t, dir) = fixture();
    let r = get(&dir, "/transfer?from=S1&to=S4").await;
    assert_eq!(r.status, StatusCode::OK);
    let plans = r.body["plans"].as_array().unwrap();
    assert_eq!(plans.len(), 1);
    assert_eq!(plans[0]["num_transfers"], 1);
    assert_eq!(plans[0]["legs"][0]["route_id"], "A");
    assert_eq!(plans[0]["legs"][1]["board"], "S3");

    let none = get(&dir, "/transfer?from=S1&to=S4&max_transfers=0").await;
    assert_eq!(none.status, StatusCode::OK);
    assert!(none.body["plans"].as_array().unwrap().is_empty());

    assert_eq!(get(&dir, "/transfer?from=S1&to=S1").await.status, StatusCode::BAD_REQUEST);
    assert_eq!(get(&dir, "/transfer?from=S1").await.status, StatusCode::BAD_REQUEST);
    assert_eq!(get(&dir, "/transfer?from=S1&to=S4&max_transfers=-1").await.status, StatusCode::BAD_REQUEST);
    assert_eq!(get(&dir, "/transfer?from=S1&to=S4&max_transfers=99").await.status, StatusCode::BAD_REQUEST);
    let r = get(&dir, "/transfer?from=S1&to=S99").await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);
    assert_eq!(r.error_code(), "unknown_station");
}

#[tokio::test]
async fn every_response_carries_the_config_hash() {
    let (_t, dir) = fixture();
    let (app, hash) = app(&dir);
    for uri in [
        "/manifest",
        "/zones",
        "/od",
        "/flows?direction=inbound",
        "/forecast?period=3",
        "/forecast/report",
        "/validation",
        "/accessibility?budget_min=20",
        "/reliability",
        "/congestion?date=2011-10-10",
        "/transfer?from=S2&to=S3",
        "/transfer?from=S2&to=S2",
        "/service-extent",
        "/nowhere",
    ] {
        let r = get_from(app.clone(), uri).await;
        assert_hash(&r, &hash);
        if r.status != StatusCode::OK {
            assert!(r.body["error"]["message"].is_string(), "{uri}");
        }
    }
}

#[tokio::test]
async fn stale_artifact_is_refused() {
    let (_t, dir) = fixture();
    let path = dir.join("fit_outbound.json");
    let mut text = std::fs::read_to_string(&path).unwrap();
    text = text.replacen("54.07692", "60.0", 1);
    std::fs::write(&path, text).unwrap();
    let r = get(&dir, "/forecast?period=9").await;
    assert_eq!(r.status, StatusCode::CONFLICT);
    assert_eq!(r.error_code(), "stale_artifact");
    // Unrelated artifacts are still served.
    assert_eq!(get(&dir, "/transfer?from=S1&to=S3").await.status, StatusCode::OK);
}

#[tokio::test]
async fn synthetic_bundle_endpoints() {
    let (_t, dir) = synthetic();
    let (app, hash) = app(&dir);
    let ask = |uri: &'static str| get_from(app.clone(), uri);

    let z = ask("/zones").await;
    assert_eq!(z.status, StatusCode::OK);
    assert_eq!(z.body["count"], 228);
    assert_hash(&z, &hash);

    let od = ask("/od?window=2011-10-11&mode=taxi").await;
    assert_eq!(od.status, StatusCode::OK);
    assert_eq!(od.body["conservation"]["holds"], true);
    let cell_sum: u64 = od.body["cells"].as_array().unwrap().iter().map(|c| c["count"].as_u64().unwrap()).sum();
    assert_eq!(cell_sum + od.body["unassigned"].as_u64().unwrap(), od.body["trips_in_window"].as_u64().unwrap());
    assert!(cell_sum > 0);
    let span = ask("/od?window=2011-10-10/2011-10-11").await;
    assert!(span.body["trips_in_window"].as_u64() > od.body["trips_in_window"].as_u64());
    let inst = ask("/od?window=2011-10-11T00:00:00%2B08:00/2011-10-12T00:00:00%2B08:00").await;
    assert_eq!(inst.body["trips_in_window"], od.body["trips_in_window"]);
    assert_eq!(ask("/od?window=2011-10-11/2011-10-10").await.status, StatusCode::BAD_REQUEST);
    assert_eq!(ask("/od?window=yesterday").await.status, StatusCode::BAD_REQUEST);
    assert_eq!(ask("/od?mode=bus").await.status, StatusCode::BAD_REQUEST);

    let f = ask("/flows?direction=outbound&from=2011-10-11&to=2011-10-11").await;
    assert_eq!(f.status, StatusCode::OK);
    assert_eq!(f.body["entries"].as_array().unwrap().len(), 12);
    assert_eq!(ask("/flows").await.status, StatusCode::BAD_REQUEST);
    assert_eq!(ask("/flows?direction=inbound&from=2011-10-12&to=2011-10-11").await.status, StatusCode::BAD_REQUEST);

    let v = ask("/validation?direction=inbound").await;
    assert_eq!(v.status, StatusCode::OK);
    assert_eq!(v.body["validation"]["samples"].as_array().unwrap().len(), 24);

    let a = ask("/accessibility?budget_min=30").await;
    assert_eq!(a.status, StatusCode::OK);
    let wide = ask("/accessibility?budget_min=120").await;
    assert!(wide.body["reachable"].as_array().unwrap().len() >= a.body["reachable"].as_array().unwrap().len());
    assert_eq!(ask("/accessibility").await.status, StatusCode::BAD_REQUEST);
    assert_eq!(ask("/accessibility?budget_min=-3").await.status, StatusCode::BAD_REQUEST);
    let unknown = ask("/accessibility?budget_min=30&zone=9999").await;
    assert_eq!(unknown.status, StatusCode::NOT_FOUND);
    assert_eq!(unknown.error_code(), "unknown_zone");

    let rel = ask("/reliability?zone=1").await;
    assert_eq!(rel.status, StatusCode::OK);
    assert!(rel.body["reliability"]["zones"].as_array().unwrap().len() <= 1);

    let c = ask("/congestion?date=2011-10-11&period=8").await;
    assert_eq!(c.status, StatusCode::OK);
    let cells = c.body["congestion"]["cells"].as_array().unwrap();
    assert_eq!(cells.len(), 228);
    assert!(cells.iter().all(|c| c["period"] == 8));
    assert!(cells.iter().any(|c| c["samples"].as_u64().unwrap() > 0));
    assert_eq!(ask("/congestion?date=11/10/2011").await.status, StatusCode::BAD_REQUEST);
    assert_eq!(ask("/congestion?date=2011-10-11&zone=0").await.status, StatusCode::NOT_FOUND);

    let e50 = ask("/service-extent?q=0.5").await;
    let e90 = ask("/service-extent?q=0.9").await;
    assert_eq!(e50.status, StatusCode::OK);
    let r = |x: &Reply| x.body["service_extent"]["radius_km"].as_f64().unwrap();
    assert!(r(&e50) <= r(&e90));
    assert_eq!(ask("/service-extent?q=0").await.status, StatusCode::BAD_REQUEST);
    assert_eq!(ask("/service-extent?q=1.5").await.status, StatusCode::BAD_REQUEST);

    let t = ask("/transfer?from=S1&to=S2").await;
    assert!(t.status == StatusCode::OK, "{}", t.body);
}
