//! Probe-record ingestion: CSV parsing, per-vehicle tracks, occupied-trip
//! extraction and hub geofence crossings.

use std::collections::BTreeMap;
use std::fmt;
use std::io::BufRead;

use chrono::DateTime;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{self, Equirectangular, LonLat};
use crate::zones::ZoneId;

pub const PROBE_CSV_HEADER: &str = "vehicle_id,timestamp,lon,lat,speed_kmh,heading_deg,state,occupied";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VehicleState {
    OutOfService,
    InService,
    Unknown,
}

impl VehicleState {
    pub fn code(self) -> u8 {
        match self {
            VehicleState::OutOfService => 0,
            VehicleState::InService => 1,
            VehicleState::Unknown => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(VehicleState::OutOfService),
            1 => Some(VehicleState::InService),
            2 => Some(VehicleState::Unknown),
            _ => None,
        }
    }
}

/// One GPS sample from a probe taxi.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeRecord {
    pub vehicle_id: String,
    /// Seconds since the Unix epoch, UTC.
    pub timestamp: i64,
    pub lon: f64,
    pub lat: f64,
    pub speed: f64,
    pub heading: f64,
    pub occupied: bool,
    pub state: VehicleState,
}

impl ProbeRecord {
    pub fn point(&self) -> LonLat {
        LonLat::new(self.lon, self.lat)
    }

    /// Formats the record as a probe CSV line (without newline).
    pub fn to_csv_line(&self) -> String {
        let ts = DateTime::from_timestamp(self.timestamp, 0)
            .expect("timestamp in chrono range")
            .format("%Y-%m-%dT%H:%M:%SZ");
        format!(
            "{},{},{:.6},{:.6},{:.1},{},{},{}",
            self.vehicle_id,
            ts,
            self.lon,
            self.lat,
            self.speed,
            self.heading,
            self.state.code(),
            u8::from(self.occupied)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    EmptyLine,
    FieldCount(usize),
    EmptyVehicleId,
    BadTimestamp,
    BadNumber(&'static str),
    LatOutOfRange,
    LonOutOfRange,
    NegativeSpeed,
    HeadingOutOfRange,
    BadState,
    BadOccupied,
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RejectReason::EmptyLine => write!(f, "empty line"),
            RejectReason::FieldCount(n) => write!(f, "expected 8 fields, found {n}"),
            RejectReason::EmptyVehicleId => write!(f, "empty vehicle id"),
            RejectReason::BadTimestamp => write!(f, "timestamp is not ISO-8601 with zone"),
            RejectReason::BadNumber(field) => write!(f, "{field} is not a number"),
            RejectReason::LatOutOfRange => write!(f, "lat out of range"),
            RejectReason::LonOutOfRange => write!(f, "lon out of range"),
            RejectReason::NegativeSpeed => write!(f, "speed negative"),
            RejectReason::HeadingOutOfRange => write!(f, "heading out of range"),
            RejectReason::BadState => write!(f, "state not in {{0,1,2}}"),
            RejectReason::BadOccupied => write!(f, "occupied not in {{0,1}}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Reject {
    /// 1-based line number in the input, the header being line 1.
    pub line_number: usize,
    pub reason: RejectReason,
    pub raw: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct RejectLog {
    pub entries: Vec<Reject>,
}

impl RejectLog {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Parses a probe CSV stream. Malformed lines are logged, not fatal.
pub fn parse_probe_csv<R: BufRead>(reader: R) -> Result<(Vec<ProbeRecord>, RejectLog)> {
    let mut lines = reader.lines();
    let header = match lines.next() {
        Some(h) => h?,
        None => return Err(Error::Format("missing header line".into())),
    };
    let header = header.trim_start_matches('\u{feff}');
    if header.trim_end() != PROBE_CSV_HEADER {
        return Err(Error::Format(format!(
            "header mismatch: expected `{PROBE_CSV_HEADER}`, found `{header}`"
        )));
    }
    let mut records = Vec::new();
    let mut rejects = RejectLog::default();
    for (idx, line) in lines.enumerate() {
        let line = line?;
        match parse_line(&line) {
            Ok(r) => records.push(r),
            Err(reason) => rejects.entries.push(Reject {
                line_number: idx + 2,
                reason,
                raw: line,
            }),
        }
    }
    Ok((records, rejects))
}

fn parse_line(line: &str) -> std::result::Result<ProbeRecord, RejectReason> {
    if line.trim().is_empty() {
        return Err(RejectReason::EmptyLine);
    }
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    if fields.len() != 8 {
        return Err(RejectReason::FieldCount(fields.len()));
    }
    let vehicle_id = fields[0];
    if vehicle_id.is_empty() {
        return Err(RejectReason::EmptyVehicleId);
    }
    let timestamp = DateTime::parse_from_rfc3339(fields[1])
        .map_err(|_| RejectReason::BadTimestamp)?
        .timestamp();
    let num = |s: &str, name: &'static str| -> std::result::Result<f64, RejectReason> {
        s.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or(RejectReason::BadNumber(name))
    };
    let lon = num(fields[2], "lon")?;
    let lat = num(fields[3], "lat")?;
    let speed = num(fields[4], "speed_kmh")?;
    let heading = num(fields[5], "heading_deg")?;
    if !(-90.0..=90.0).contains(&lat) {
        return Err(RejectReason::LatOutOfRange);
    }
    if !(-180.0..=180.0).contains(&lon) {
        return Err(RejectReason::LonOutOfRange);
    }
    if speed < 0.0 {
        return Err(RejectReason::NegativeSpeed);
    }
    if !(0.0..360.0).contains(&heading) {
        return Err(RejectReason::HeadingOutOfRange);
    }
    let state = fields[6]
        .parse::<u8>()
        .ok()
        .and_then(VehicleState::from_code)
        .ok_or(RejectReason::BadState)?;
    let occupied = match fields[7] {
        "0" => false,
        "1" => true,
        _ => return Err(RejectReason::BadOccupied),
    };
    Ok(ProbeRecord {
        vehicle_id: vehicle_id.to_string(),
        timestamp,
        lon,
        lat,
        speed,
        heading,
        occupied,
        state,
    })
}

/// Time-ordered samples of one vehicle with strictly increasing timestamps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Track {
    pub vehicle_id: String,
    pub records: Vec<ProbeRecord>,
}

/// Groups records by vehicle, sorts by time and drops duplicates.
///
/// Of several records sharing a vehicle and timestamp the first in input
/// order is kept. Tracks come back ordered by vehicle id.
pub fn build_tracks(records: &[ProbeRecord]) -> Vec<Track> {
    let mut groups: BTreeMap<&str, Vec<&ProbeRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(r.vehicle_id.as_str()).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|(vehicle_id, mut recs)| {
            // stable: equal timestamps stay in input order
            recs.sort_by_key(|r| r.timestamp);
            recs.dedup_by_key(|r| r.timestamp);
            Track {
                vehicle_id: vehicle_id.to_string(),
                records: recs.into_iter().cloned().collect(),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TravelMode {
    #[default]
    Taxi,
}

impl fmt::Display for TravelMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TravelMode::Taxi => write!(f, "taxi"),
        }
    }
}

/// A maximal occupied run of a track.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trip {
    pub vehicle_id: String,
    pub pickup_time: i64,
    pub dropoff_time: i64,
    pub pickup_point: LonLat,
    pub dropoff_point: LonLat,
    pub pickup_zone: Option<ZoneId>,
    pub dropoff_zone: Option<ZoneId>,
    pub truncated_start: bool,
    pub truncated_end: bool,
    pub mode: TravelMode,
}

impl Trip {
    /// Single-record runs have zero duration.
    pub fn is_degenerate(&self) -> bool {
        self.dropoff_time <= self.pickup_time
    }

    pub fn duration_s(&self) -> i64 {
        self.dropoff_time - self.pickup_time
    }

    pub fn duration_min(&self) -> f64 {
        self.duration_s() as f64 / 60.0
    }
}

pub fn extract_trips(track: &Track) -> Vec<Trip> {
    let recs = &track.records;
    let mut trips = Vec::new();
    let mut i = 0;
    while i < recs.len() {
        if !recs[i].occupied {
            i += 1;
            continue;
        }
        let start = i;
        while i + 1 < recs.len() && recs[i + 1].occupied {
            i += 1;
        }
        let (first, last) = (&recs[start], &recs[i]);
        trips.push(Trip {
            vehicle_id: track.vehicle_id.clone(),
            pickup_time: first.timestamp,
            dropoff_time: last.timestamp,
            pickup_point: first.point(),
            dropoff_point: last.point(),
            pickup_zone: None,
            dropoff_zone: None,
            truncated_start: start == 0,
            truncated_end: i == recs.len() - 1,
            mode: TravelMode::Taxi,
        });
        i += 1;
    }
    trips
}

/// Default geofence radius around a hub, in metres.
pub const DEFAULT_HUB_RADIUS_M: f64 = 300.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Geofence {
    Circle { center: LonLat, radius_m: f64 },
    Polygon { ring: Vec<LonLat> },
}

impl Geofence {
    pub fn circle(center: LonLat, radius_m: f64) -> Result<Self> {
        let g = Geofence::Circle { center, radius_m };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Geofence::Circle { center, radius_m } => {
                if !center.is_finite() {
                    return Err(Error::Config("geofence centre is not finite".into()));
                }
                if !(radius_m.is_finite() && *radius_m > 0.0) {
                    return Err(Error::Config(format!("geofence radius must be > 0, got {radius_m}")));
                }
                Ok(())
            }
            Geofence::Polygon { ring } => {
                geo::validate_ring(ring).map_err(|e| Error::Config(format!("geofence polygon: {e}")))
            }
        }
    }

    /// Boundary-inclusive containment.
    pub fn contains(&self, p: LonLat) -> bool {
        match self {
            Geofence::Circle { center, radius_m } => {
                Equirectangular::new(center.lat).distance_m(*center, p) <= *radius_m
            }
            Geofence::Polygon { ring } => geo::ring_contains(ring, p),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HubDirection {
    Enter,
    Exit,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HubEvent {
    pub vehicle_id: String,
    pub time: i64,
    pub direction: HubDirection,
}

/// One event per inside/outside transition, stamped at the first record on
/// the new side. The first record fixes the initial side without an event.
pub fn detect_hub_events(track: &Track, geofence: &Geofence) -> Result<Vec<HubEvent>> {
    geofence.validate()?;
    let mut events = Vec::new();
    let mut prev: Option<bool> = None;
    for r in &track.records {
        let inside = geofence.contains(r.point());
        if let Some(was) = prev {
            if was != inside {
                events.push(HubEvent {
                    vehicle_id: track.vehicle_id.clone(),
                    time: r.timestamp,
                    direction: if inside { HubDirection::Enter } else { HubDirection::Exit },
                });
            }
        }
        prev = Some(inside);
    }
    Ok(events)
}
