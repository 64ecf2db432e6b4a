//! Batch pipeline: inputs → tracks, trips, hub events → flows, fits,
//! validation, OD and zone summaries → bundle on disk.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::io::Cursor;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use hubflow_core::od::{
    build_od_matrix, compute_service_extent, hub_flow_series, reliability, road_condition, FlowDirection, FlowSeries,
    OdMatrix, TimeWindow,
};
use hubflow_core::probe::{build_tracks, detect_hub_events, extract_trips, parse_probe_csv, HubEvent, ProbeRecord, Trip};
use hubflow_core::stats::report::FitReport;
use hubflow_core::stats::{fit_dummy_regression, two_way_anova, validate_mape, AnovaGrid};
use hubflow_core::transit::load_network;
use hubflow_core::zones::{assign_trip_zones, load_zones, ZoneIndex};
use hubflow_core::DateRange;
use rayon::prelude::*;
use serde_json::json;

use crate::bundle::{
    congestion_csv, events_csv, iso, sha256_hex, trips_csv, BundleWriter, ErrorEntry, InputEntry, Manifest, Settings,
};
use crate::config::LoadedConfig;
use crate::error::RunError;

#[derive(Debug)]
pub struct RunOutcome {
    pub workspace: PathBuf,
    pub manifest: Manifest,
}

impl RunOutcome {
    /// Human-readable summary for the terminal.
    pub fn summary_text(&self) -> String {
        let m = &self.manifest;
        let mut s = String::new();
        writeln!(s, "bundle written to {}", self.workspace.display()).unwrap();
        writeln!(s, "config hash {}", m.config_hash).unwrap();
        writeln!(s, "{} artifacts", m.artifacts.len()).unwrap();
        for (k, v) in m.summary.as_object().into_iter().flatten() {
            writeln!(s, "  {k}: {v}").unwrap();
        }
        for e in &m.errors {
            writeln!(s, "error in {}: {}", e.stage, e.message).unwrap();
        }
        s
    }
}

fn read_input(path: &Path) -> Result<Vec<u8>, RunError> {
    std::fs::read(path).map_err(|e| RunError::input(path, e.to_string()))
}

/// Hash of the config bytes and of every input's bytes.
pub fn config_hash(raw_config: &[u8], inputs: &[InputEntry]) -> String {
    let mut buf = Vec::with_capacity(raw_config.len() + 128 * inputs.len());
    buf.extend_from_slice(b"hubflow-config\n");
    buf.extend_from_slice(raw_config);
    for i in inputs {
        buf.extend_from_slice(format!("\n{}\0{}", i.role, i.sha256).as_bytes());
    }
    sha256_hex(&buf)
}

pub fn run(config_path: &Path) -> Result<RunOutcome, RunError> {
    let loaded = LoadedConfig::load(config_path)?;
    let cfg = &loaded.config;

    let zones_path = loaded.resolve(&cfg.inputs.zones);
    let zone_bytes = read_input(&zones_path)?;
    let zones = load_zones(zone_bytes.as_slice()).map_err(|e| RunError::input(&zones_path, e.to_string()))?;

    let probes_path = loaded.resolve(&cfg.inputs.probes);
    let probe_bytes = read_input(&probes_path)?;
    let (mut records, rejects) =
        parse_probe_csv(Cursor::new(&probe_bytes)).map_err(|e| RunError::input(&probes_path, e.to_string()))?;
    if records.is_empty() {
        return Err(RunError::input(&probes_path, "no valid probe records"));
    }

    let mut network = None;
    let mut network_hash = None;
    if let Some(p) = &cfg.inputs.network {
        let path = loaded.resolve(p);
        let bytes = read_input(&path)?;
        network = Some(load_network(bytes.as_slice()).map_err(|e| RunError::input(&path, e.to_string()))?);
        network_hash = Some(sha256_hex(&bytes));
    }

    let file_name = config_path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
    let mut inputs = vec![
        InputEntry { role: "config".into(), path: file_name, sha256: sha256_hex(&loaded.raw) },
        InputEntry { role: "zones".into(), path: cfg.inputs.zones.display().to_string(), sha256: sha256_hex(&zone_bytes) },
        InputEntry { role: "probes".into(), path: cfg.inputs.probes.display().to_string(), sha256: sha256_hex(&probe_bytes) },
    ];
    if let (Some(p), Some(h)) = (&cfg.inputs.network, network_hash) {
        inputs.push(InputEntry { role: "network".into(), path: p.display().to_string(), sha256: h });
    }
    let hash = config_hash(&loaded.raw, &inputs[1..]);
    drop(probe_bytes);

    let scheme = cfg.periods.scheme().expect("validated with the config");
    let fence = cfg.hub.geofence().expect("validated with the config");
    let center = cfg.hub.center();
    let index = ZoneIndex::new(zones.clone());
    let hub_zone = index.locate(center);
    let mut errors = Vec::new();
    if hub_zone.is_none() {
        errors.push(ErrorEntry { stage: "hub_zone".into(), message: "hub centre lies outside every zone".into() });
    }

    let tracks = build_tracks(&records);
    let per_track: Vec<(Vec<Trip>, Vec<HubEvent>)> = tracks
        .par_iter()
        .map(|t| (extract_trips(t), detect_hub_events(t, &fence).expect("validated geofence")))
        .collect();
    let mut all_trips: Vec<Trip> = per_track.iter().flat_map(|(t, _)| t.iter().cloned()).collect();
    let events: Vec<HubEvent> = per_track.into_iter().flat_map(|(_, e)| e).collect();
    assign_trip_zones(&mut all_trips, &index);
    let extracted = all_trips.len();
    if !cfg.analysis.include_degenerate {
        all_trips.retain(|t| !t.is_degenerate());
    }
    let trips = all_trips;

    records.sort_by_key(|r| r.timestamp);
    // Flows come from hub crossings, so a day counts as observed when it has
    // one; probe records alone can spill a few minutes over midnight.
    let mut data_days: BTreeSet<NaiveDate> = events.iter().map(|e| scheme.local_date(e.time)).collect();
    if data_days.is_empty() {
        data_days = records.iter().map(|r| scheme.local_date(r.timestamp)).collect();
    }
    let span = DateRange::new(*data_days.first().expect("records exist"), *data_days.last().expect("records exist"))
        .expect("ordered set");
    let fc = &cfg.forecast;
    let usable = |d: &NaiveDate| !fc.exclude_dates.contains(d) && (!fc.skip_empty_days || data_days.contains(d));
    let holdout_days: Vec<NaiveDate> = fc.holdout.iter().copied().filter(usable).collect();
    let train_range = DateRange {
        start: fc.train_start.unwrap_or(span.start),
        end: fc.train_end.unwrap_or(span.end),
    };
    let training_days: Vec<NaiveDate> =
        train_range.days().filter(|d| usable(d) && !fc.holdout.contains(d)).collect();

    let settings = Settings {
        periods: scheme.clone(),
        hub_name: cfg.hub.name.clone(),
        hub_center: center,
        geofence: fence.clone(),
        hub_zone,
        analysis: cfg.analysis.clone(),
        date_span: Some(span),
        training_days: training_days.clone(),
        holdout_days: holdout_days.clone(),
    };

    let mut writer = BundleWriter::create(&loaded.workspace(), &hash)?;
    writer.write_json("settings", "settings.json", &settings)?;
    writer.write_json("zones", "zones.geojson", &zones.to_geojson())?;
    if let Some(n) = &network {
        writer.write_json("network", "network.json", &n.to_json())?;
    }
    writer.write_json("rejects", "rejects.json", &rejects)?;
    writer.write("tracks", "tracks.csv", tracks_csv(&tracks, &trips).as_bytes())?;
    drop(tracks);
    writer.write("trips", "trips.csv", trips_csv(&trips).as_bytes())?;
    writer.write("hub_events", "hub_events.csv", events_csv(&events).as_bytes())?;

    let mut direction_summary = serde_json::Map::new();
    for dir in [FlowDirection::Inbound, FlowDirection::Outbound] {
        let series = hub_flow_series(&events, &scheme, span, dir);
        let mut bytes = Vec::new();
        series.write_csv(&mut bytes).expect("in-memory write");
        writer.write(&format!("{dir}_flows"), &format!("flows_{dir}.csv"), &bytes)?;
        let summary = forecast_direction(&mut writer, &mut errors, &series, dir, &training_days, &holdout_days, fc.alpha)?;
        direction_summary.insert(dir.to_string(), summary);
    }

    let od = full_od(&trips, &zones);
    if let Some(od) = &od {
        let mut bytes = Vec::new();
        od.write_csv(&mut bytes).expect("in-memory write");
        writer.write("od", "od.csv", &bytes)?;
    }
    if let Some(hz) = hub_zone {
        let departures: Vec<Trip> = trips.iter().filter(|t| t.pickup_zone == Some(hz)).cloned().collect();
        let r = reliability(&departures, &zones, cfg.analysis.min_samples, cfg.analysis.reliability_threshold);
        writer.write_json("reliability", "reliability.json", &r)?;
    }

    let grids: Vec<_> = span
        .days()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&day| {
            let (lo, hi) = scheme.day_bounds(day);
            let a = records.partition_point(|r| r.timestamp < lo);
            let b = records.partition_point(|r| r.timestamp < hi);
            road_condition(&records[a..b], &index, &scheme, day, cfg.analysis.thresholds())
        })
        .collect();
    writer.write("congestion", "congestion.csv", congestion_csv(&grids).as_bytes())?;

    let extent = od.as_ref().map(|od| compute_service_extent(od, &zones, center, cfg.analysis.service_coverage));
    let extent = match extent {
        Some(Ok(e)) => json!(e),
        Some(Err(e)) => json!({ "error": e.to_string() }),
        None => serde_json::Value::Null,
    };
    let inbound_peak = events
        .iter()
        .filter(|e| e.direction == hubflow_core::probe::HubDirection::Enter)
        .fold(std::collections::BTreeMap::<NaiveDate, u64>::new(), |mut m, e| {
            *m.entry(scheme.local_date(e.time)).or_default() += 1;
            m
        })
        .into_iter()
        .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
        .map(|(date, count)| json!({ "date": date, "count": count }));

    let summary = json!({
        "records": records.len(),
        "rejected_lines": rejects.len(),
        "trips_extracted": extracted,
        "trips_used": trips.len(),
        "hub_events": events.len(),
        "date_span": span,
        "hub_zone": hub_zone,
        "training_days": training_days.len(),
        "holdout_days": holdout_days,
        "peak_inbound_day": inbound_peak,
        "service_extent": extent,
        "forecast": direction_summary,
    });
    let manifest = writer.finish(inputs, errors, summary)?;
    Ok(RunOutcome { workspace: loaded.workspace(), manifest })
}

fn forecast_direction(
    writer: &mut BundleWriter,
    errors: &mut Vec<ErrorEntry>,
    series: &FlowSeries,
    dir: FlowDirection,
    training_days: &[NaiveDate],
    holdout_days: &[NaiveDate],
    alpha: f64,
) -> Result<serde_json::Value, RunError> {
    let train = series.filtered(|e| training_days.binary_search(&e.date).is_ok());
    let holdout = series.filtered(|e| holdout_days.contains(&e.date));
    let mut err = |stage: &str, e: hubflow_core::Error| {
        errors.push(ErrorEntry { stage: format!("{stage}_{dir}"), message: e.to_string() });
    };
    let anova = match two_way_anova(&AnovaGrid::from_series(&train), alpha) {
        Ok(a) => {
            writer.write_json(&format!("{dir}_anova"), &format!("anova_{dir}.json"), &a)?;
            Some(a)
        }
        Err(e) => {
            err("anova", e);
            None
        }
    };
    let fit = match fit_dummy_regression(&train, series.periods_per_day) {
        Ok(f) => f,
        Err(e) => {
            err("fit", e);
            return Ok(json!({ "fitted": false }));
        }
    };
    writer.write_json(&format!("{dir}_fit"), &format!("fit_{dir}.json"), &fit)?;
    let validation = if holdout_days.is_empty() {
        None
    } else {
        match validate_mape(&fit, &holdout) {
            Ok(v) => {
                writer.write_json(&format!("{dir}_validation"), &format!("validation_{dir}.json"), &v)?;
                Some(v)
            }
            Err(e) => {
                err("validation", e);
                None
            }
        }
    };
    let report = FitReport::new(&fit, validation.as_ref(), anova.as_ref());
    writer.write_json(&format!("{dir}_report"), &format!("report_{dir}.json"), &report)?;
    Ok(json!({
        "fitted": true,
        "observations": fit.statistics.observations,
        "r_square": fit.statistics.r_square,
        "mean_ape": validation.as_ref().map(|v| v.mean_error),
    }))
}

/// OD matrix over every trip's pickup time.
pub fn full_od(trips: &[Trip], zones: &hubflow_core::zones::ZoneSet) -> Option<OdMatrix> {
    let lo = trips.iter().map(|t| t.pickup_time).min()?;
    let hi = trips.iter().map(|t| t.pickup_time).max()?;
    Some(build_od_matrix(trips, zones, TimeWindow::new(lo, hi + 1).expect("non-empty")).expect("valid window"))
}

fn tracks_csv(tracks: &[hubflow_core::probe::Track], trips: &[Trip]) -> String {
    let mut per_vehicle = std::collections::HashMap::new();
    for t in trips {
        *per_vehicle.entry(t.vehicle_id.as_str()).or_insert(0usize) += 1;
    }
    let mut s = String::from("vehicle_id,records,first_time,last_time,trips\n");
    for t in tracks {
        let (first, last): (&ProbeRecord, &ProbeRecord) = (&t.records[0], &t.records[t.records.len() - 1]);
        writeln!(
            s,
            "{},{},{},{},{}",
            t.vehicle_id,
            t.records.len(),
            iso(first.timestamp),
            iso(last.timestamp),
            per_vehicle.get(t.vehicle_id.as_str()).copied().unwrap_or(0)
        )
        .unwrap();
    }
    s
}
