//! Seeded scenario generator: a rectangular zone grid, probe records for hub
//! visits with known per-period counts, and bus networks.
//!
//! Every hub visit is driven by its own vehicle so tracks never interleave.
//! An inbound visit is an occupied run from an origin zone that ends inside
//! the hub geofence; an outbound visit starts inside the geofence and ends in
//! a destination zone. The geofence crossing falls in the intended period,
//! at least [`PERIOD_MARGIN_S`] away from either period edge.

use std::collections::BTreeMap;
use std::io::Write;

use chrono::NaiveDate;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{Equirectangular, LonLat};
use crate::od::{CongestionLevel, FlowDirection};
use crate::period::{DateRange, PeriodScheme};
use crate::probe::{ProbeRecord, VehicleState, PROBE_CSV_HEADER};
use crate::transit::{BusNetwork, BusRoute, Station};
use crate::zones::{TrafficZone, ZoneId, ZoneSet};

pub const PERIOD_MARGIN_S: i64 = 180;

/// Outbound means per two-hour period: intercept plus period effect of the
/// reference outbound model.
pub const OUTBOUND_MEANS: [f64; 12] = [
    25.64, 7.85, 32.23, 56.46, 90.19, 119.81, 123.15, 136.65, 152.46, 143.69, 106.35, 54.08,
];

/// Morning-heavy arrivals, 1010 vehicles per day.
pub const INBOUND_MEANS: [f64; 12] = [20.0, 6.0, 10.0, 45.0, 150.0, 160.0, 135.0, 120.0, 110.0, 105.0, 95.0, 54.0];

/// Rectangular grid of traffic zones, numbered row-major from the south-west
/// corner starting at 1. Districts are vertical bands of columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    pub min_lon: f64,
    pub min_lat: f64,
    pub max_lon: f64,
    pub max_lat: f64,
    pub columns: u32,
    pub rows: u32,
    pub districts: u32,
}

impl Default for GridSpec {
    /// 19 × 12 = 228 zones over central Shenzhen.
    fn default() -> Self {
        Self { min_lon: 113.85, min_lat: 22.45, max_lon: 114.35, max_lat: 22.65, columns: 19, rows: 12, districts: 6 }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.min_lon, self.min_lat, self.max_lon, self.max_lat].iter().all(|v| v.is_finite());
        if !finite || self.min_lon >= self.max_lon || self.min_lat >= self.max_lat {
            return Err(Error::Config("grid bounding box is empty or not finite".into()));
        }
        if self.columns == 0 || self.rows == 0 || self.districts == 0 || self.districts > self.columns {
            return Err(Error::Config("grid needs columns, rows >= 1 and 1 <= districts <= columns".into()));
        }
        Ok(())
    }

    pub fn zone_count(&self) -> usize {
        (self.columns * self.rows) as usize
    }

    fn lon_at(&self, col: u32) -> f64 {
        self.min_lon + (self.max_lon - self.min_lon) * f64::from(col) / f64::from(self.columns)
    }

    fn lat_at(&self, row: u32) -> f64 {
        self.min_lat + (self.max_lat - self.min_lat) * f64::from(row) / f64::from(self.rows)
    }

    pub fn zone_id(&self, col: u32, row: u32) -> ZoneId {
        ZoneId(row * self.columns + col + 1)
    }

    /// Column and row of the cell holding `p`, if inside the grid.
    pub fn cell_of(&self, p: LonLat) -> Option<(u32, u32)> {
        let fx = (p.lon - self.min_lon) / (self.max_lon - self.min_lon) * f64::from(self.columns);
        let fy = (p.lat - self.min_lat) / (self.max_lat - self.min_lat) * f64::from(self.rows);
        if !(fx >= 0.0 && fy >= 0.0 && fx < f64::from(self.columns) && fy < f64::from(self.rows)) {
            return None;
        }
        Some((fx as u32, fy as u32))
    }

    pub fn cell_center(&self, col: u32, row: u32) -> LonLat {
        LonLat::new((self.lon_at(col) + self.lon_at(col + 1)) / 2.0, (self.lat_at(row) + self.lat_at(row + 1)) / 2.0)
    }

    /// Uniform point in the cell, kept `margin` (a fraction of the cell size)
    /// away from its edges.
    fn sample_in_cell<R: Rng>(&self, rng: &mut R, col: u32, row: u32, margin: f64) -> LonLat {
        let (x0, x1) = (self.lon_at(col), self.lon_at(col + 1));
        let (y0, y1) = (self.lat_at(row), self.lat_at(row + 1));
        let u = margin + rng.random::<f64>() * (1.0 - 2.0 * margin);
        let v = margin + rng.random::<f64>() * (1.0 - 2.0 * margin);
        LonLat::new(x0 + (x1 - x0) * u, y0 + (y1 - y0) * v)
    }

    pub fn zones(&self) -> Result<ZoneSet> {
        self.validate()?;
        let mut zones = Vec::with_capacity(self.zone_count());
        for row in 0..self.rows {
            for col in 0..self.columns {
                let (x0, x1, y0, y1) = (self.lon_at(col), self.lon_at(col + 1), self.lat_at(row), self.lat_at(row + 1));
                let id = self.zone_id(col, row);
                let district = col * self.districts / self.columns + 1;
                zones.push(TrafficZone {
                    zone_id: id,
                    name: format!("Z{:03}", id.0),
                    district: format!("D{district}"),
                    ring: vec![
                        LonLat::new(x0, y0),
                        LonLat::new(x1, y0),
                        LonLat::new(x1, y1),
                        LonLat::new(x0, y1),
                        LonLat::new(x0, y0),
                    ],
                });
            }
        }
        ZoneSet::new(zones)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseModel {
    /// Counts are the means rounded to the nearest integer.
    None,
    #[default]
    Poisson,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventDay {
    pub date: NaiveDate,
    pub multiplier: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub start: NaiveDate,
    pub end: NaiveDate,
    /// Days in the range with no data at all.
    pub missing_days: Vec<NaiveDate>,
    /// Mean hub arrivals per period; the length sets the number of periods.
    pub inbound_means: Vec<f64>,
    pub outbound_means: Vec<f64>,
    pub noise: NoiseModel,
    pub event_days: Vec<EventDay>,
    /// Origin/destination weight per zone in id order. Defaults to a
    /// distance decay away from the hub. The hub's own zone is never drawn.
    pub zone_weights: Option<Vec<f64>>,
    pub hub: LonLat,
    pub hub_radius_m: f64,
    pub utc_offset_min: i32,
    pub grid: GridSpec,
    /// Stations and routes of the generated bus network.
    pub bus_stations: usize,
    pub bus_routes: usize,
}

fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).expect("valid date")
}

/// 27 gaps in 2011-08-01..2011-10-31, leaving 65 days with data.
pub fn default_missing_days() -> Vec<NaiveDate> {
    let mut days = Vec::new();
    days.extend((28..=31).map(|d| date(2011, 8, d)));
    days.extend((1..=16).map(|d| date(2011, 9, d)));
    days.extend((25..=31).map(|d| date(2011, 10, d)));
    days
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let grid = GridSpec::default();
        // centre of the cell holding the Futian interchange
        let (col, row) = grid.cell_of(LonLat::new(114.05, 22.535)).expect("inside default grid");
        Self {
            seed: 1,
            start: date(2011, 8, 1),
            end: date(2011, 10, 31),
            missing_days: default_missing_days(),
            inbound_means: INBOUND_MEANS.to_vec(),
            outbound_means: OUTBOUND_MEANS.to_vec(),
            noise: NoiseModel::Poisson,
            event_days: vec![EventDay { date: date(2011, 10, 1), multiplier: 1.6 }],
            zone_weights: None,
            hub: grid.cell_center(col, row),
            hub_radius_m: 300.0,
            utc_offset_min: 480,
            grid,
            bus_stations: 40,
            bus_routes: 8,
        }
    }
}

/// Distance decay scale of the default zone weights, in metres.
const GRAVITY_SCALE_M: f64 = 4000.0;

/// Extra clearance beyond the geofence radius for points meant to be outside.
const OUTSIDE_CLEARANCE_M: f64 = 200.0;

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        DateRange::new(self.start, self.end).map_err(|e| Error::Config(e.to_string()))?;
        let p = self.inbound_means.len();
        if p == 0 || self.outbound_means.len() != p {
            return Err(Error::Config("inbound and outbound means need the same non-zero length".into()));
        }
        self.scheme()?;
        if self.inbound_means.iter().chain(&self.outbound_means).any(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(Error::Config("period means must be finite and >= 0".into()));
        }
        if let Some(e) = self.event_days.iter().find(|e| !(e.multiplier.is_finite() && e.multiplier > 0.0)) {
            return Err(Error::Config(format!("event multiplier on {} must be > 0", e.date)));
        }
        if let Some(w) = &self.zone_weights {
            if w.len() != self.grid.zone_count() {
                return Err(Error::Config(format!("{} zone weights for {} zones", w.len(), self.grid.zone_count())));
            }
            if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::Config("zone weights must be finite and >= 0".into()));
            }
            let sum: f64 = w.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::Config(format!("zone weights sum to {sum}, expected 1")));
            }
        }
        if self.grid.cell_of(self.hub).is_none() {
            return Err(Error::Config("hub lies outside the zone grid".into()));
        }
        if !(self.hub_radius_m.is_finite() && self.hub_radius_m > 0.0) {
            return Err(Error::Config("hub radius must be > 0".into()));
        }
        let (col, row) = self.grid.cell_of(self.hub).expect("checked");
        let proj = Equirectangular::new(self.hub.lat);
        let half_w = proj.distance_m(self.hub, LonLat::new(self.grid.lon_at(col + 1), self.hub.lat))
            .min(proj.distance_m(self.hub, LonLat::new(self.grid.lon_at(col), self.hub.lat)));
        let half_h = proj.distance_m(self.hub, LonLat::new(self.hub.lon, self.grid.lat_at(row + 1)))
            .min(proj.distance_m(self.hub, LonLat::new(self.hub.lon, self.grid.lat_at(row))));
        if self.hub_radius_m + OUTSIDE_CLEARANCE_M >= half_w.min(half_h) {
            return Err(Error::Config("hub geofence does not fit inside its grid cell".into()));
        }
        if self.bus_stations < 2 && self.bus_routes > 0 {
            return Err(Error::Config("a bus network needs at least 2 stations".into()));
        }
        Ok(())
    }

    pub fn scheme(&self) -> Result<PeriodScheme> {
        let p = u32::try_from(self.inbound_means.len()).map_err(|_| Error::Config("too many periods".into()))?;
        PeriodScheme::equal(p, self.utc_offset_min)
    }

    pub fn date_range(&self) -> DateRange {
        DateRange { start: self.start, end: self.end }
    }

    /// Days in the range that carry data.
    pub fn active_days(&self) -> Vec<NaiveDate> {
        self.date_range().days().filter(|d| !self.missing_days.contains(d)).collect()
    }

    pub fn multiplier(&self, day: NaiveDate) -> f64 {
        self.event_days.iter().filter(|e| e.date == day).map(|e| e.multiplier).product()
    }

    fn means(&self, direction: FlowDirection) -> &[f64] {
        match direction {
            FlowDirection::Inbound => &self.inbound_means,
            FlowDirection::Outbound => &self.outbound_means,
        }
    }

    /// Expected count for one cell of the flow series.
    pub fn expected(&self, day: NaiveDate, period: usize, direction: FlowDirection) -> f64 {
        if self.missing_days.contains(&day) || !self.date_range().contains(day) {
            return 0.0;
        }
        self.means(direction)[period - 1] * self.multiplier(day)
    }

    pub fn weights(&self, zones: &ZoneSet) -> Vec<f64> {
        if let Some(w) = &self.zone_weights {
            return w.clone();
        }
        let proj = Equirectangular::new(self.hub.lat);
        let raw: Vec<f64> = zones
            .zones()
            .iter()
            .map(|z| {
                if z.contains(self.hub) {
                    0.0
                } else {
                    (-proj.distance_m(self.hub, z.centroid()) / GRAVITY_SCALE_M).exp()
                }
            })
            .collect();
        let sum: f64 = raw.iter().sum();
        raw.into_iter().map(|w| w / sum).collect()
    }
}

/// Speed band of a zone, strictly inside the default congestion thresholds.
fn band_speed_range(level: CongestionLevel) -> (f64, f64) {
    match level {
        CongestionLevel::Free => (35.0, 60.0),
        CongestionLevel::Slow => (18.0, 27.0),
        CongestionLevel::Congested => (6.0, 12.0),
        CongestionLevel::Unknown => unreachable!("zones always get a band"),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthFlow {
    pub date: NaiveDate,
    pub period: usize,
    pub direction: FlowDirection,
    pub expected: f64,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneTruth {
    pub zone_id: ZoneId,
    pub band: CongestionLevel,
    /// Inbound visits starting in the zone.
    pub origins: u64,
    /// Outbound visits ending in the zone.
    pub destinations: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// Every (active day, period, direction), ordered by date, direction, period.
    pub flows: Vec<TruthFlow>,
    pub zones: Vec<ZoneTruth>,
}

impl GroundTruth {
    pub fn count(&self, day: NaiveDate, period: usize, direction: FlowDirection) -> u64 {
        self.flows
            .iter()
            .find(|f| f.date == day && f.period == period && f.direction == direction)
            .map_or(0, |f| f.count)
    }

    pub fn daily_total(&self, day: NaiveDate, direction: FlowDirection) -> u64 {
        self.flows.iter().filter(|f| f.date == day && f.direction == direction).map(|f| f.count).sum()
    }

    pub fn write_flows_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "date,period,direction,expected,count")?;
        for f in &self.flows {
            writeln!(w, "{},{},{},{},{}", f.date, f.period, f.direction, f.expected, f.count)?;
        }
        Ok(())
    }

    pub fn write_zones_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "zone_id,band,origins,destinations")?;
        for z in &self.zones {
            let band = match z.band {
                CongestionLevel::Free => "free",
                CongestionLevel::Slow => "slow",
                CongestionLevel::Congested => "congested",
                CongestionLevel::Unknown => "unknown",
            };
            writeln!(w, "{},{},{},{}", z.zone_id, band, z.origins, z.destinations)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub zones: ZoneSet,
    /// Sorted by timestamp, then vehicle id.
    pub records: Vec<ProbeRecord>,
    pub truth: GroundTruth,
    pub network: BusNetwork,
}

impl Scenario {
    pub fn write_probe_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{PROBE_CSV_HEADER}")?;
        for r in &self.records {
            writeln!(w, "{}", r.to_csv_line())?;
        }
        Ok(())
    }

    pub fn probe_csv(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.records.len() * 64);
        self.write_probe_csv(&mut out).expect("writing to memory");
        out
    }
}

struct Generator<'a> {
    cfg: &'a ScenarioConfig,
    rng: ChaCha8Rng,
    proj: Equirectangular,
    bands: Vec<CongestionLevel>,
    cumulative: Vec<f64>,
    records: Vec<ProbeRecord>,
    origins: Vec<u64>,
    destinations: Vec<u64>,
    next_vehicle: u64,
}

impl Generator<'_> {
    fn band_at(&self, p: LonLat) -> CongestionLevel {
        let (col, row) = self.cfg.grid.cell_of(p).expect("generated points stay inside the grid");
        self.bands[(self.cfg.grid.zone_id(col, row).0 - 1) as usize]
    }

    fn speed_at(&mut self, p: LonLat) -> f64 {
        let (lo, hi) = band_speed_range(self.band_at(p));
        // one decimal, as written to the CSV
        (self.rng.random_range(lo..hi) * 10.0).round() / 10.0
    }

    fn push(&mut self, vehicle: &str, t: i64, p: LonLat, occupied: bool) {
        let speed = self.speed_at(p);
        let heading = f64::from(self.rng.random_range(0u32..360));
        self.records.push(ProbeRecord {
            vehicle_id: vehicle.to_string(),
            timestamp: t,
            lon: p.lon,
            lat: p.lat,
            speed,
            heading,
            occupied,
            state: VehicleState::InService,
        });
    }

    /// A weighted zone and a point in it clear of the geofence.
    fn sample_far_point(&mut self) -> (usize, LonLat) {
        let x: f64 = self.rng.random::<f64>() * self.cumulative.last().copied().unwrap_or(1.0);
        // zero-weight zones have no width in the cumulative sums and are skipped
        let zi = self.cumulative.partition_point(|&c| c <= x).min(self.cumulative.len() - 1);
        let cols = self.cfg.grid.columns;
        let (col, row) = (zi as u32 % cols, zi as u32 / cols);
        let clear = self.cfg.hub_radius_m + OUTSIDE_CLEARANCE_M;
        loop {
            let p = self.cfg.grid.sample_in_cell(&mut self.rng, col, row, 0.05);
            if self.proj.distance_m(self.cfg.hub, p) > clear {
                return (zi, p);
            }
        }
    }

    fn sample_inside(&mut self) -> LonLat {
        let r = self.cfg.hub_radius_m / 3.0 * self.rng.random::<f64>();
        let angle = std::f64::consts::TAU * self.rng.random::<f64>();
        let (x, y) = self.proj.project(self.cfg.hub);
        self.proj.unproject(x + r * angle.cos(), y + r * angle.sin())
    }

    fn travel_time_s(&mut self, from: LonLat, to: LonLat) -> i64 {
        let (lo, hi) = band_speed_range(self.band_at(from));
        let kmh = self.rng.random_range(lo..hi);
        let t = (self.proj.distance_m(from, to) / (kmh / 3.6)).ceil() as i64;
        t.max(60)
    }

    fn vehicle(&mut self) -> String {
        self.next_vehicle += 1;
        format!("V{:07}", self.next_vehicle)
    }

    /// Crossing of the geofence at `t_e`.
    fn visit(&mut self, direction: FlowDirection, t_e: i64) {
        let v = self.vehicle();
        let (zi, far) = self.sample_far_point();
        let edge = self.proj.offset_toward(self.cfg.hub, far, self.cfg.hub_radius_m + OUTSIDE_CLEARANCE_M);
        let mid = LonLat::new((far.lon + edge.lon) / 2.0, (far.lat + edge.lat) / 2.0);
        let travel = self.travel_time_s(far, edge);
        match direction {
            FlowDirection::Inbound => {
                self.origins[zi] += 1;
                let inside = self.sample_inside();
                self.push(&v, t_e - 60 - travel, far, true);
                self.push(&v, t_e - 60 - travel / 2, mid, true);
                self.push(&v, t_e - 60, edge, true);
                self.push(&v, t_e, inside, true);
                self.push(&v, t_e + 60, inside, false);
            }
            FlowDirection::Outbound => {
                self.destinations[zi] += 1;
                let inside = self.sample_inside();
                self.push(&v, t_e - 120, inside, false);
                self.push(&v, t_e - 60, inside, true);
                self.push(&v, t_e, edge, true);
                self.push(&v, t_e + travel / 2, mid, true);
                self.push(&v, t_e + travel, far, true);
                self.push(&v, t_e + travel + 60, far, false);
            }
        }
    }

    fn draw_count(&mut self, mean: f64) -> u64 {
        match self.cfg.noise {
            NoiseModel::None => mean.round() as u64,
            NoiseModel::Poisson if mean > 0.0 => {
                Poisson::new(mean).expect("positive finite mean").sample(&mut self.rng) as u64
            }
            NoiseModel::Poisson => 0,
        }
    }
}

/// Builds the scenario for `config`. The same config always yields the same
/// records, truth tables and network.
pub fn generate(config: &ScenarioConfig) -> Result<Scenario> {
    config.validate()?;
    let zones = config.grid.zones()?;
    let scheme = config.scheme()?;
    let weights = config.weights(&zones);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let bands: Vec<CongestionLevel> = (0..zones.len())
        .map(|_| match rng.random::<f64>() {
            x if x < 0.5 => CongestionLevel::Free,
            x if x < 0.8 => CongestionLevel::Slow,
            _ => CongestionLevel::Congested,
        })
        .collect();
    let (hub_col, hub_row) = config.grid.cell_of(config.hub).expect("validated");
    let hub_zone = (config.grid.zone_id(hub_col, hub_row).0 - 1) as usize;
    let mut cumulative = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        if i != hub_zone {
            acc += w;
        }
        cumulative.push(acc);
    }
    if acc <= 0.0 {
        return Err(Error::Config("zone weights outside the hub zone are all zero".into()));
    }
    let network = random_network(&mut rng, &config.grid, config.bus_stations, config.bus_routes, 15)?;
    let mut g = Generator {
        cfg: config,
        rng,
        proj: Equirectangular::new(config.hub.lat),
        bands,
        cumulative,
        records: Vec::new(),
        origins: vec![0; zones.len()],
        destinations: vec![0; zones.len()],
        next_vehicle: 0,
    };
    let mut flows = Vec::new();
    for day in config.active_days() {
        for direction in [FlowDirection::Inbound, FlowDirection::Outbound] {
            for period in 1..=scheme.periods_per_day() {
                let expected = config.expected(day, period, direction);
                let count = g.draw_count(expected);
                let (start, end) = scheme.period_bounds(day, period);
                if end - start <= 2 * PERIOD_MARGIN_S && count > 0 {
                    return Err(Error::Config("periods are too short for the crossing margin".into()));
                }
                for _ in 0..count {
                    let t_e = g.rng.random_range(start + PERIOD_MARGIN_S..end - PERIOD_MARGIN_S);
                    g.visit(direction, t_e);
                }
                flows.push(TruthFlow { date: day, period, direction, expected, count });
            }
        }
    }
    let mut records = std::mem::take(&mut g.records);
    records.sort_by(|a, b| a.timestamp.cmp(&b.timestamp).then_with(|| a.vehicle_id.cmp(&b.vehicle_id)));
    let zone_truth = zones
        .zones()
        .iter()
        .enumerate()
        .map(|(i, z)| ZoneTruth {
            zone_id: z.zone_id,
            band: g.bands[i],
            origins: g.origins[i],
            destinations: g.destinations[i],
        })
        .collect();
    Ok(Scenario {
        config: config.clone(),
        zones,
        records,
        truth: GroundTruth { flows, zones: zone_truth },
        network,
    })
}

/// Stations at distinct grid-cell centres joined by random routes of
/// 2..=`max_stops` stops. Roughly a third of the routes are one-way.
pub fn random_network<R: Rng>(
    rng: &mut R,
    grid: &GridSpec,
    stations: usize,
    routes: usize,
    max_stops: usize,
) -> Result<BusNetwork> {
    grid.validate()?;
    let cells = grid.zone_count();
    if stations > cells {
        return Err(Error::Config(format!("{stations} stations do not fit {cells} grid cells")));
    }
    if routes > 0 && (stations < 2 || max_stops < 2) {
        return Err(Error::Config("routes need at least 2 stations and 2 stops".into()));
    }
    let mut picked: Vec<usize> = (0..cells).collect();
    picked.shuffle(rng);
    picked.truncate(stations);
    picked.sort_unstable();
    let station_list: Vec<Station> = picked
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let p = grid.cell_center(c as u32 % grid.columns, c as u32 / grid.columns);
            Station { id: format!("S{}", i + 1), name: format!("Station {}", i + 1), lon: p.lon, lat: p.lat }
        })
        .collect();
    let route_list = (0..routes)
        .map(|r| {
            let len = rng.random_range(2..=max_stops);
            let mut stops: Vec<usize> = Vec::with_capacity(len);
            while stops.len() < len {
                let s = rng.random_range(0..stations);
                if stops.last() != Some(&s) {
                    stops.push(s);
                }
            }
            BusRoute {
                id: format!("R{}", r + 1),
                stops: stops.into_iter().map(|s| station_list[s].id.clone()).collect(),
                one_way: rng.random_range(0..3) == 0,
            }
        })
        .collect();
    BusNetwork::new(station_list, route_list)
}

/// Two routes sharing station S3: A runs S1-S2-S3, B runs S3-S4.
pub fn two_route_network() -> BusNetwork {
    let station = |i: u32, lon: f64| Station { id: format!("S{i}"), name: format!("Station {i}"), lon, lat: 22.535 };
    let route = |id: &str, stops: &[&str]| BusRoute {
        id: id.into(),
        stops: stops.iter().map(|s| s.to_string()).collect(),
        one_way: false,
    };
    BusNetwork::new(
        vec![station(1, 114.02), station(2, 114.03), station(3, 114.04), station(4, 114.06)],
        vec![route("A", &["S1", "S2", "S3"]), route("B", &["S3", "S4"])],
    )
    .expect("fixture network is valid")
}

/// Per-zone ground-truth tallies keyed by zone id.
pub fn zone_tallies(truth: &GroundTruth) -> BTreeMap<ZoneId, (u64, u64)> {
    truth.zones.iter().map(|z| (z.zone_id, (z.origins, z.destinations))).collect()
}
