#![allow(dead_code)]

use std::path::{Path, PathBuf};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use chrono::NaiveDate;
use http_body_util::BodyExt;
use hubflow::api::{router, AppState};
use hubflow::bundle::Bundle;
use hubflow::gen::generate_into;
use hubflow_core::synth::{NoiseModel, ScenarioConfig};
use serde_json::Value;
use tower::ServiceExt;

pub fn day(s: &str) -> NaiveDate {
    s.parse().unwrap()
}

/// Six days, one event-free week slice, Poisson noise.
pub fn small_scenario(seed: u64) -> ScenarioConfig {
    ScenarioConfig {
        seed,
        start: day("2011-10-10"),
        end: day("2011-10-15"),
        missing_days: vec![day("2011-10-12")],
        event_days: Vec::new(),
        noise: NoiseModel::Poisson,
        bus_stations: 20,
        bus_routes: 5,
        ..ScenarioConfig::default()
    }
}

/// Writes the scenario under `dir` and returns the config path.
pub fn scenario_dir(dir: &Path, seed: u64) -> PathBuf {
    generate_into(&small_scenario(seed), dir).unwrap()
}

pub fn bundle_dir(config: &Path) -> PathBuf {
    config.parent().unwrap().join("bundle")
}

pub struct Reply {
    pub status: StatusCode,
    pub header_hash: Option<String>,
    pub body: Value,
}

pub async fn get(bundle: &Path, uri: &str) -> Reply {
    get_from(router(std::sync::Arc::new(AppState::new(Bundle::load(bundle).unwrap()))), uri).await
}

pub async fn get_from(app: axum::Router, uri: &str) -> Reply {
    let resp = app.oneshot(Request::get(uri).body(Body::empty()).unwrap()).await.unwrap();
    let status = resp.status();
    let header_hash = resp.headers().get("x-config-hash").map(|v| v.to_str().unwrap().to_string());
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let body = serde_json::from_slice(&bytes).unwrap_or_else(|e| panic!("{uri}: non-JSON body ({e})"));
    Reply { status, header_hash, body }
}

impl Reply {
    pub fn error_code(&self) -> &str {
        self.body["error"]["code"].as_str().unwrap_or("")
    }
}
