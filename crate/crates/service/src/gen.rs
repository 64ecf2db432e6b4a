//! Writes a generated scenario as pipeline inputs plus a ready config.

use std::path::{Path, PathBuf};

use hubflow_core::synth::{generate, Scenario, ScenarioConfig};

use crate::config::{from_toml, AnalysisConfig, Config, ForecastConfig, HubConfig, Inputs, PeriodsConfig};
use crate::error::RunError;

pub const CONFIG_FILE: &str = "hubflow.toml";

/// Days at the end of the active span held out for validation.
pub const HOLDOUT_DAYS: usize = 2;

pub fn load_scenario_config(path: &Path) -> Result<ScenarioConfig, RunError> {
    let text = std::fs::read_to_string(path).map_err(|e| RunError::input(path, e.to_string()))?;
    let cfg: ScenarioConfig = from_toml(&text).map_err(|e| RunError::input(path, e))?;
    cfg.validate().map_err(|e| RunError::input(path, e.to_string()))?;
    Ok(cfg)
}

/// Pipeline config for a scenario written into the same directory.
pub fn pipeline_config(cfg: &ScenarioConfig) -> Config {
    let active = cfg.active_days();
    let holdout = active[active.len().saturating_sub(HOLDOUT_DAYS)..].to_vec();
    let mut exclude: Vec<_> = cfg.event_days.iter().map(|e| e.date).collect();
    exclude.extend(cfg.missing_days.iter().copied());
    exclude.sort();
    exclude.dedup();
    Config {
        workspace: "bundle".into(),
        inputs: Inputs { probes: "probes.csv".into(), zones: "zones.geojson".into(), network: Some("network.json".into()) },
        hub: HubConfig {
            name: Some("hub".into()),
            lon: Some(cfg.hub.lon),
            lat: Some(cfg.hub.lat),
            radius_m: Some(cfg.hub_radius_m),
            polygon: None,
        },
        periods: PeriodsConfig {
            count: Some(cfg.inbound_means.len() as u32),
            boundaries_min: None,
            utc_offset_min: cfg.utc_offset_min,
        },
        forecast: ForecastConfig { holdout, exclude_dates: exclude, ..ForecastConfig::default() },
        analysis: AnalysisConfig::default(),
    }
}

fn write(path: PathBuf, bytes: &[u8]) -> Result<(), RunError> {
    std::fs::write(&path, bytes).map_err(|e| RunError::output(&path, e))
}

/// Writes probes, zones, network, ground truth and `hubflow.toml` into
/// `dir`; returns the config path.
pub fn write_scenario(scn: &Scenario, dir: &Path) -> Result<PathBuf, RunError> {
    std::fs::create_dir_all(dir).map_err(|e| RunError::output(dir, e))?;
    write(dir.join("probes.csv"), &scn.probe_csv())?;
    let zones = serde_json::to_vec_pretty(&scn.zones.to_geojson()).expect("geojson serializes");
    write(dir.join("zones.geojson"), &zones)?;
    let net = serde_json::to_vec_pretty(&scn.network.to_json()).expect("network serializes");
    write(dir.join("network.json"), &net)?;
    let mut flows = Vec::new();
    scn.truth.write_flows_csv(&mut flows).expect("in-memory write");
    write(dir.join("truth_flows.csv"), &flows)?;
    let mut tallies = Vec::new();
    scn.truth.write_zones_csv(&mut tallies).expect("in-memory write");
    write(dir.join("truth_zones.csv"), &tallies)?;
    let toml = toml::to_string(&pipeline_config(&scn.config)).expect("config serializes");
    let path = dir.join(CONFIG_FILE);
    write(path.clone(), toml.as_bytes())?;
    Ok(path)
}

pub fn generate_into(cfg: &ScenarioConfig, dir: &Path) -> Result<PathBuf, RunError> {
    let scn = generate(cfg).map_err(|e| RunError::input(dir, e.to_string()))?;
    write_scenario(&scn, dir)
}
