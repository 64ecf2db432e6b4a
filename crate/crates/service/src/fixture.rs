//! A small hand-built bundle for exercising the API without running the
//! pipeline: the reference outbound model, a two-route bus network and a
//! 2×2 zone grid.

use std::path::Path;

use hubflow_core::od::FlowDirection;
use hubflow_core::probe::Geofence;
use hubflow_core::stats::regression::reference_outbound_fit;
use hubflow_core::stats::report::FitReport;
use hubflow_core::synth::{two_route_network, GridSpec};
use hubflow_core::PeriodScheme;
use serde_json::json;

use crate::bundle::{sha256_hex, BundleWriter, Manifest, Settings};
use crate::config::AnalysisConfig;
use crate::error::RunError;

pub fn fixture_grid() -> GridSpec {
    GridSpec { min_lon: 114.0, min_lat: 22.5, max_lon: 114.1, max_lat: 22.6, columns: 2, rows: 2, districts: 2 }
}

pub fn write_fixture(dir: &Path) -> Result<Manifest, RunError> {
    let hash = sha256_hex(b"hubflow-fixture");
    let mut w = BundleWriter::create(dir, &hash)?;
    let grid = fixture_grid();
    let zones = grid.zones().expect("fixture grid is valid");
    let center = grid.cell_center(0, 0);
    let settings = Settings {
        periods: PeriodScheme::equal(12, 480).expect("twelve periods"),
        hub_name: Some("fixture".into()),
        hub_center: center,
        geofence: Geofence::circle(center, 300.0).expect("valid circle"),
        hub_zone: Some(grid.zone_id(0, 0)),
        analysis: AnalysisConfig::default(),
        date_span: None,
        training_days: Vec::new(),
        holdout_days: Vec::new(),
    };
    w.write_json("settings", "settings.json", &settings)?;
    w.write_json("zones", "zones.geojson", &zones.to_geojson())?;
    w.write_json("network", "network.json", &two_route_network().to_json())?;
    let fit = reference_outbound_fit();
    let dir_name = FlowDirection::Outbound;
    w.write_json(&format!("{dir_name}_fit"), "fit_outbound.json", &fit)?;
    w.write_json(&format!("{dir_name}_report"), "report_outbound.json", &FitReport::new(&fit, None, None))?;
    w.finish(Vec::new(), Vec::new(), json!({ "fixture": true }))
}
