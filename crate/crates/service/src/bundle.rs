//! On-disk analysis bundle: a workspace directory holding a manifest plus
//! artifacts, each stamped with the config hash it was computed under.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDate};
use hubflow_core::od::{CongestionCell, CongestionGrid, CongestionThresholds, FlowDirection, FlowSeries, ReliabilityResult};
use hubflow_core::probe::{Geofence, HubDirection, HubEvent, TravelMode, Trip};
use hubflow_core::stats::report::FitReport;
use hubflow_core::stats::{AnovaResult, RegressionFit, ValidationReport};
use hubflow_core::transit::{load_network, BusNetwork};
use hubflow_core::zones::{load_zones, ZoneId, ZoneSet};
use hubflow_core::{DateRange, LonLat, PeriodScheme};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::AnalysisConfig;
use crate::error::RunError;

pub const MANIFEST: &str = "manifest.json";
pub const FORMAT_VERSION: u32 = 1;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputEntry {
    pub role: String,
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactEntry {
    pub name: String,
    pub path: String,
    pub sha256: String,
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorEntry {
    pub stage: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: u32,
    pub config_hash: String,
    pub inputs: Vec<InputEntry>,
    pub artifacts: Vec<ArtifactEntry>,
    pub errors: Vec<ErrorEntry>,
    pub summary: serde_json::Value,
}

/// Resolved parameters the server needs to answer queries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub periods: PeriodScheme,
    pub hub_name: Option<String>,
    pub hub_center: LonLat,
    pub geofence: Geofence,
    pub hub_zone: Option<ZoneId>,
    pub analysis: AnalysisConfig,
    pub date_span: Option<DateRange>,
    pub training_days: Vec<NaiveDate>,
    pub holdout_days: Vec<NaiveDate>,
}

/// Every file name a bundle may contain; cleared before each write.
pub const ARTIFACT_FILES: &[&str] = &[
    "settings.json",
    "zones.geojson",
    "network.json",
    "rejects.json",
    "tracks.csv",
    "trips.csv",
    "hub_events.csv",
    "flows_inbound.csv",
    "flows_outbound.csv",
    "fit_inbound.json",
    "fit_outbound.json",
    "report_inbound.json",
    "report_outbound.json",
    "validation_inbound.json",
    "validation_outbound.json",
    "anova_inbound.json",
    "anova_outbound.json",
    "od.csv",
    "reliability.json",
    "congestion.csv",
];

pub struct BundleWriter {
    dir: PathBuf,
    config_hash: String,
    artifacts: Vec<ArtifactEntry>,
}

impl BundleWriter {
    /// Prepares `dir`, removing any artifacts of an earlier run.
    pub fn create(dir: &Path, config_hash: &str) -> Result<Self, RunError> {
        std::fs::create_dir_all(dir).map_err(|e| RunError::output(dir, e))?;
        for name in ARTIFACT_FILES.iter().chain(std::iter::once(&MANIFEST)) {
            let p = dir.join(name);
            match std::fs::remove_file(&p) {
                Ok(()) => {}
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
                Err(e) => return Err(RunError::output(&p, e)),
            }
        }
        Ok(Self { dir: dir.to_path_buf(), config_hash: config_hash.to_string(), artifacts: Vec::new() })
    }

    pub fn write(&mut self, name: &str, file: &str, bytes: &[u8]) -> Result<(), RunError> {
        debug_assert!(ARTIFACT_FILES.contains(&file), "unregistered artifact {file}");
        let path = self.dir.join(file);
        std::fs::write(&path, bytes).map_err(|e| RunError::output(&path, e))?;
        self.artifacts.push(ArtifactEntry {
            name: name.to_string(),
            path: file.to_string(),
            sha256: sha256_hex(bytes),
            config_hash: self.config_hash.clone(),
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, file: &str, value: &T) -> Result<(), RunError> {
        let mut bytes = serde_json::to_vec_pretty(value).expect("artifacts serialize");
        bytes.push(b'\n');
        self.write(name, file, &bytes)
    }

    pub fn finish(
        self,
        inputs: Vec<InputEntry>,
        errors: Vec<ErrorEntry>,
        summary: serde_json::Value,
    ) -> Result<Manifest, RunError> {
        let manifest = Manifest {
            format: FORMAT_VERSION,
            config_hash: self.config_hash,
            inputs,
            artifacts: self.artifacts,
            errors,
            summary,
        };
        let mut bytes = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
        bytes.push(b'\n');
        let path = self.dir.join(MANIFEST);
        std::fs::write(&path, bytes).map_err(|e| RunError::output(&path, e))?;
        Ok(manifest)
    }
}

pub fn iso(t: i64) -> String {
    DateTime::from_timestamp(t, 0).expect("timestamp in range").format("%Y-%m-%dT%H:%M:%SZ").to_string()
}

fn parse_iso(s: &str) -> Result<i64, String> {
    DateTime::parse_from_rfc3339(s).map(|d| d.timestamp()).map_err(|e| format!("bad time `{s}`: {e}"))
}

fn opt_zone(z: Option<ZoneId>) -> String {
    z.map(|z| z.to_string()).unwrap_or_default()
}

fn parse_opt_zone(s: &str) -> Result<Option<ZoneId>, String> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse().map(|v| Some(ZoneId(v))).map_err(|_| format!("bad zone id `{s}`"))
}

pub const TRIPS_HEADER: &str = "vehicle_id,pickup_time,dropoff_time,pickup_lon,pickup_lat,dropoff_lon,dropoff_lat,pickup_zone,dropoff_zone,truncated_start,truncated_end";

pub fn trips_csv(trips: &[Trip]) -> String {
    let mut s = String::with_capacity(trips.len() * 120);
    s.push_str(TRIPS_HEADER);
    s.push('\n');
    for t in trips {
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{}",
            t.vehicle_id,
            iso(t.pickup_time),
            iso(t.dropoff_time),
            t.pickup_point.lon,
            t.pickup_point.lat,
            t.dropoff_point.lon,
            t.dropoff_point.lat,
            opt_zone(t.pickup_zone),
            opt_zone(t.dropoff_zone),
            u8::from(t.truncated_start),
            u8::from(t.truncated_end),
        )
        .unwrap();
    }
    s
}

fn rows<'a>(text: &'a str, header: &str) -> Result<impl Iterator<Item = (usize, Vec<&'a str>)>, String> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == header => {}
        _ => return Err(format!("expected header `{header}`")),
    }
    Ok(lines.enumerate().map(|(i, l)| (i + 2, l.split(',').collect())))
}

pub fn parse_trips_csv(text: &str) -> Result<Vec<Trip>, String> {
    let num = |s: &str| s.parse::<f64>().map_err(|_| format!("bad number `{s}`"));
    let flag = |s: &str| match s {
        "0" => Ok(false),
        "1" => Ok(true),
        _ => Err(format!("bad flag `{s}`")),
    };
    rows(text, TRIPS_HEADER)?
        .map(|(n, f)| {
            if f.len() != 11 {
                return Err(format!("line {n}: expected 11 fields"));
            }
            Ok(Trip {
                vehicle_id: f[0].to_string(),
                pickup_time: parse_iso(f[1])?,
                dropoff_time: parse_iso(f[2])?,
                pickup_point: LonLat::new(num(f[3])?, num(f[4])?),
                dropoff_point: LonLat::new(num(f[5])?, num(f[6])?),
                pickup_zone: parse_opt_zone(f[7])?,
                dropoff_zone: parse_opt_zone(f[8])?,
                truncated_start: flag(f[9])?,
                truncated_end: flag(f[10])?,
                mode: TravelMode::Taxi,
            })
            .map_err(|e: String| format!("line {n}: {e}"))
        })
        .collect()
}

pub const EVENTS_HEADER: &str = "vehicle_id,time,direction";

pub fn events_csv(events: &[HubEvent]) -> String {
    let mut s = String::with_capacity(events.len() * 40);
    s.push_str(EVENTS_HEADER);
    s.push('\n');
    for e in events {
        let d = match e.direction {
            HubDirection::Enter => "enter",
            HubDirection::Exit => "exit",
        };
        writeln!(s, "{},{},{}", e.vehicle_id, iso(e.time), d).unwrap();
    }
    s
}

pub fn parse_events_csv(text: &str) -> Result<Vec<HubEvent>, String> {
    rows(text, EVENTS_HEADER)?
        .map(|(n, f)| {
            if f.len() != 3 {
                return Err(format!("line {n}: expected 3 fields"));
            }
            let direction = match f[2] {
                "enter" => HubDirection::Enter,
                "exit" => HubDirection::Exit,
                other => return Err(format!("line {n}: bad direction `{other}`")),
            };
            Ok(HubEvent { vehicle_id: f[0].to_string(), time: parse_iso(f[1])?, direction })
        })
        .collect()
}

pub const CONGESTION_HEADER: &str = "date,zone_id,period,samples,mean_speed_kmh,level";

/// Only cells with at least one sample are written.
pub fn congestion_csv(grids: &[CongestionGrid]) -> String {
    let mut s = String::new();
    s.push_str(CONGESTION_HEADER);
    s.push('\n');
    for g in grids {
        for c in g.cells.iter().filter(|c| c.samples > 0) {
            let level = serde_json::to_value(c.level).unwrap();
            writeln!(
                s,
                "{},{},{},{},{},{}",
                g.date,
                c.zone_id,
                c.period,
                c.samples,
                c.mean_speed_kmh.unwrap_or(f64::NAN),
                level.as_str().unwrap()
            )
            .unwrap();
        }
    }
    s
}

/// Sampled cells keyed by (date, zone, period): (samples, mean speed).
pub type SpeedCells = BTreeMap<(NaiveDate, ZoneId, usize), (usize, f64)>;

pub fn parse_congestion_csv(text: &str) -> Result<SpeedCells, String> {
    rows(text, CONGESTION_HEADER)?
        .map(|(n, f)| {
            if f.len() != 6 {
                return Err(format!("line {n}: expected 6 fields"));
            }
            let err = |what: &str| format!("line {n}: bad {what}");
            let date = f[0].parse::<NaiveDate>().map_err(|_| err("date"))?;
            let zone = f[1].parse::<u32>().map_err(|_| err("zone"))?;
            let period = f[2].parse::<usize>().map_err(|_| err("period"))?;
            let samples = f[3].parse::<usize>().map_err(|_| err("samples"))?;
            let speed = f[4].parse::<f64>().map_err(|_| err("speed"))?;
            Ok(((date, ZoneId(zone), period), (samples, speed)))
        })
        .collect()
}

/// Full grid for one date: every zone × period, unsampled cells unknown.
pub fn congestion_grid(
    cells: &SpeedCells,
    zones: &ZoneSet,
    periods: usize,
    date: NaiveDate,
    thresholds: CongestionThresholds,
) -> CongestionGrid {
    let cells = zones
        .zones()
        .iter()
        .flat_map(|z| (1..=periods).map(move |p| (z.zone_id, p)))
        .map(|(zone_id, period)| {
            let (samples, mean) = match cells.get(&(date, zone_id, period)) {
                Some(&(n, m)) => (n, Some(m)),
                None => (0, None),
            };
            CongestionCell { zone_id, period, samples, mean_speed_kmh: mean, level: thresholds.classify(mean) }
        })
        .collect();
    CongestionGrid { date, thresholds, cells }
}

/// Why an artifact cannot be served.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Unavailable {
    /// Not produced by the run (see the manifest errors).
    Missing(String),
    /// Present but its hash or config stamp disagrees with the manifest.
    Stale(String),
}

#[derive(Debug, Clone, Default)]
pub struct PerDirection<T> {
    pub inbound: Option<T>,
    pub outbound: Option<T>,
}

impl<T> PerDirection<T> {
    pub fn get(&self, d: FlowDirection) -> Option<&T> {
        match d {
            FlowDirection::Inbound => self.inbound.as_ref(),
            FlowDirection::Outbound => self.outbound.as_ref(),
        }
    }

    fn set(&mut self, d: FlowDirection, v: T) {
        match d {
            FlowDirection::Inbound => self.inbound = Some(v),
            FlowDirection::Outbound => self.outbound = Some(v),
        }
    }
}

/// A bundle loaded for serving. Only artifacts whose bytes and config stamp
/// match the manifest are loaded; the rest are reported as unavailable.
#[derive(Debug)]
pub struct Bundle {
    pub manifest: Manifest,
    pub settings: Settings,
    pub zones: Option<ZoneSet>,
    pub network: Option<BusNetwork>,
    pub trips: Option<Vec<Trip>>,
    pub events: Option<Vec<HubEvent>>,
    pub flows: PerDirection<FlowSeries>,
    pub fits: PerDirection<RegressionFit>,
    pub reports: PerDirection<FitReport>,
    pub validations: PerDirection<ValidationReport>,
    pub anovas: PerDirection<AnovaResult>,
    pub reliability: Option<ReliabilityResult>,
    pub congestion: Option<SpeedCells>,
    unavailable: BTreeMap<String, Unavailable>,
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("{}: {message}", path.display())]
    Invalid { path: PathBuf, message: String },
}

fn invalid(path: &Path, message: impl Into<String>) -> LoadError {
    LoadError::Invalid { path: path.to_path_buf(), message: message.into() }
}

impl Bundle {
    pub fn config_hash(&self) -> &str {
        &self.manifest.config_hash
    }

    pub fn unavailable(&self, name: &str) -> Option<&Unavailable> {
        self.unavailable.get(name)
    }

    pub fn load(dir: &Path) -> Result<Self, LoadError> {
        let mpath = dir.join(MANIFEST);
        let text = std::fs::read(&mpath).map_err(|e| invalid(&mpath, e.to_string()))?;
        let manifest: Manifest = serde_json::from_slice(&text).map_err(|e| invalid(&mpath, e.to_string()))?;
        if manifest.format != FORMAT_VERSION {
            return Err(invalid(&mpath, format!("unsupported bundle format {}", manifest.format)));
        }
        let mut fresh: BTreeMap<String, Vec<u8>> = BTreeMap::new();
        let mut unavailable = BTreeMap::new();
        for a in &manifest.artifacts {
            if a.config_hash != manifest.config_hash {
                unavailable.insert(a.name.clone(), Unavailable::Stale(format!("{} was computed under another config", a.path)));
                continue;
            }
            match std::fs::read(dir.join(&a.path)) {
                Ok(bytes) if sha256_hex(&bytes) == a.sha256 => {
                    fresh.insert(a.name.clone(), bytes);
                }
                Ok(_) => {
                    unavailable.insert(a.name.clone(), Unavailable::Stale(format!("{} changed after the run", a.path)));
                }
                Err(e) => {
                    unavailable.insert(a.name.clone(), Unavailable::Stale(format!("{}: {e}", a.path)));
                }
            }
        }
        let settings_bytes = fresh
            .remove("settings")
            .ok_or_else(|| invalid(&dir.join("settings.json"), "settings artifact missing or stale"))?;
        let settings: Settings =
            serde_json::from_slice(&settings_bytes).map_err(|e| invalid(&dir.join("settings.json"), e.to_string()))?;

        let mut bundle = Bundle {
            manifest,
            settings,
            zones: None,
            network: None,
            trips: None,
            events: None,
            flows: PerDirection { inbound: None, outbound: None },
            fits: PerDirection { inbound: None, outbound: None },
            reports: PerDirection { inbound: None, outbound: None },
            validations: PerDirection { inbound: None, outbound: None },
            anovas: PerDirection { inbound: None, outbound: None },
            reliability: None,
            congestion: None,
            unavailable,
        };
        let p = bundle.settings.periods.periods_per_day();
        for (name, bytes) in fresh {
            let text = String::from_utf8(bytes).map_err(|e| invalid(&dir.join(&name), e.to_string()))?;
            let path = dir.join(bundle.path_of(&name));
            let bad = |e: String| invalid(&path, e);
            let json = |e: serde_json::Error| invalid(&path, e.to_string());
            let dir_of = |suffix: &str| -> Option<FlowDirection> { name.strip_suffix(suffix).and_then(|d| d.parse().ok()) };
            match name.as_str() {
                "zones" => bundle.zones = Some(load_zones(text.as_bytes()).map_err(|e| bad(e.to_string()))?),
                "network" => bundle.network = Some(load_network(text.as_bytes()).map_err(|e| bad(e.to_string()))?),
                "trips" => bundle.trips = Some(parse_trips_csv(&text).map_err(bad)?),
                "hub_events" => bundle.events = Some(parse_events_csv(&text).map_err(bad)?),
                "reliability" => bundle.reliability = Some(serde_json::from_str(&text).map_err(json)?),
                "congestion" => bundle.congestion = Some(parse_congestion_csv(&text).map_err(bad)?),
                _ => {
                    if let Some(d) = dir_of("_flows") {
                        let series = FlowSeries::read_csv(&text, d, p).map_err(|e| bad(e.to_string()))?;
                        bundle.flows.set(d, series);
                    } else if let Some(d) = dir_of("_fit") {
                        bundle.fits.set(d, serde_json::from_str(&text).map_err(json)?);
                    } else if let Some(d) = dir_of("_report") {
                        bundle.reports.set(d, serde_json::from_str(&text).map_err(json)?);
                    } else if let Some(d) = dir_of("_validation") {
                        bundle.validations.set(d, serde_json::from_str(&text).map_err(json)?);
                    } else if let Some(d) = dir_of("_anova") {
                        bundle.anovas.set(d, serde_json::from_str(&text).map_err(json)?);
                    }
                }
            }
        }
        Ok(bundle)
    }

    fn path_of(&self, name: &str) -> String {
        self.manifest.artifacts.iter().find(|a| a.name == name).map(|a| a.path.clone()).unwrap_or_default()
    }

    /// Reason an artifact is not being served: a stale copy, or the error
    /// recorded for the stage that should have produced it.
    pub fn why_missing(&self, name: &str, stage: &str) -> Unavailable {
        if let Some(u) = self.unavailable.get(name) {
            return u.clone();
        }
        let reason = self
            .manifest
            .errors
            .iter()
            .find(|e| e.stage == stage)
            .map(|e| e.message.clone())
            .unwrap_or_else(|| format!("bundle has no {name} artifact"));
        Unavailable::Missing(reason)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trips_round_trip() {
        let t = Trip {
            vehicle_id: "V1".into(),
            pickup_time: 1_313_107_200,
            dropoff_time: 1_313_108_000,
            pickup_point: LonLat::new(114.123456789, 22.5),
            dropoff_point: LonLat::new(114.0, 22.1),
            pickup_zone: Some(ZoneId(3)),
            dropoff_zone: None,
            truncated_start: true,
            truncated_end: false,
            mode: TravelMode::Taxi,
        };
        let text = trips_csv(std::slice::from_ref(&t));
        assert_eq!(parse_trips_csv(&text).unwrap(), vec![t]);
        assert!(parse_trips_csv("nope\n").is_err());
    }

    #[test]
    fn events_round_trip() {
        let e = HubEvent { vehicle_id: "V".into(), time: 1_313_107_200, direction: HubDirection::Exit };
        assert_eq!(parse_events_csv(&events_csv(std::slice::from_ref(&e))).unwrap(), vec![e]);
    }
}
