//! Aggregations over trips, hub events and probe records.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::LonLat;
use crate::period::{DateRange, PeriodScheme};
use crate::probe::{HubDirection, HubEvent, ProbeRecord, TravelMode, Trip, VehicleState};
use crate::zones::{ZoneId, ZoneIndex, ZoneSet};

/// Half-open epoch-second window `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeWindow {
    pub start: i64,
    pub end: i64,
}

impl TimeWindow {
    pub fn new(start: i64, end: i64) -> Result<Self> {
        if end <= start {
            return Err(Error::Argument(format!("window end {end} must be after start {start}")));
        }
        Ok(Self { start, end })
    }

    pub fn contains(&self, t: i64) -> bool {
        self.start <= t && t < self.end
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OdCell {
    pub origin: ZoneId,
    pub dest: ZoneId,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdMatrix {
    pub window: TimeWindow,
    pub mode: TravelMode,
    /// Non-zero cells ordered by (origin, dest).
    pub counts: Vec<OdCell>,
    /// Trips in the window with a missing or unknown endpoint zone.
    pub unassigned: u64,
    pub trips_in_window: u64,
}

impl OdMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().map(|c| c.count).sum()
    }

    pub fn get(&self, origin: ZoneId, dest: ZoneId) -> u64 {
        self.counts
            .binary_search_by_key(&(origin, dest), |c| (c.origin, c.dest))
            .map(|i| self.counts[i].count)
            .unwrap_or(0)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "origin_zone,dest_zone,count")?;
        for c in &self.counts {
            writeln!(w, "{},{},{}", c.origin, c.dest, c.count)?;
        }
        Ok(())
    }
}

/// Counts trips by (pickup zone, dropoff zone) for trips picked up within
/// `window`. Zones missing from `zones` count as unassigned.
pub fn build_od_matrix(trips: &[Trip], zones: &ZoneSet, window: TimeWindow) -> Result<OdMatrix> {
    TimeWindow::new(window.start, window.end)?;
    let mut counts: BTreeMap<(ZoneId, ZoneId), u64> = BTreeMap::new();
    let mut unassigned = 0;
    let mut in_window = 0;
    for t in trips.iter().filter(|t| window.contains(t.pickup_time)) {
        in_window += 1;
        let known = |z: Option<ZoneId>| z.filter(|&id| zones.get(id).is_some());
        match (known(t.pickup_zone), known(t.dropoff_zone)) {
            (Some(o), Some(d)) => *counts.entry((o, d)).or_default() += 1,
            _ => unassigned += 1,
        }
    }
    Ok(OdMatrix {
        window,
        mode: TravelMode::Taxi,
        counts: counts.into_iter().map(|((origin, dest), count)| OdCell { origin, dest, count }).collect(),
        unassigned,
        trips_in_window: in_window,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowDirection {
    /// Into the hub: enter events, or trips dropping off at the hub.
    Inbound,
    /// Out of the hub: exit events, or trips picking up at the hub.
    Outbound,
}

impl FlowDirection {
    pub fn as_str(self) -> &'static str {
        match self {
            FlowDirection::Inbound => "inbound",
            FlowDirection::Outbound => "outbound",
        }
    }
}

impl fmt::Display for FlowDirection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for FlowDirection {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inbound" | "in" => Ok(FlowDirection::Inbound),
            "outbound" | "out" => Ok(FlowDirection::Outbound),
            other => Err(Error::Argument(format!("unknown direction `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowEntry {
    pub date: NaiveDate,
    /// 1-based period index.
    pub period: usize,
    pub count: u64,
}

/// Per-(date, period) vehicle counts in one direction.
///
/// Series produced by the binning functions are dense over their date range;
/// [`FlowSeries::retain`] can thin them into an observation set for fitting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowSeries {
    pub direction: FlowDirection,
    pub periods_per_day: usize,
    pub entries: Vec<FlowEntry>,
}

impl FlowSeries {
    pub fn retain(&mut self, keep: impl FnMut(&FlowEntry) -> bool) {
        self.entries.retain(keep);
    }

    pub fn filtered(&self, keep: impl FnMut(&&FlowEntry) -> bool) -> FlowSeries {
        FlowSeries {
            direction: self.direction,
            periods_per_day: self.periods_per_day,
            entries: self.entries.iter().filter(keep).copied().collect(),
        }
    }

    pub fn total(&self) -> u64 {
        self.entries.iter().map(|e| e.count).sum()
    }

    pub fn daily_totals(&self) -> BTreeMap<NaiveDate, u64> {
        let mut out = BTreeMap::new();
        for e in &self.entries {
            *out.entry(e.date).or_default() += e.count;
        }
        out
    }

    pub fn get(&self, date: NaiveDate, period: usize) -> Option<u64> {
        self.entries.iter().find(|e| e.date == date && e.period == period).map(|e| e.count)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "date,period,count")?;
        for e in &self.entries {
            writeln!(w, "{},{},{}", e.date, e.period, e.count)?;
        }
        Ok(())
    }

    pub fn read_csv(text: &str, direction: FlowDirection, periods_per_day: usize) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some("date,period,count") {
            return Err(Error::Format("flow series header must be `date,period,count`".into()));
        }
        let entries = lines
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                let f: Vec<&str> = l.split(',').collect();
                let bad = || Error::Format(format!("bad flow series line `{l}`"));
                if f.len() != 3 {
                    return Err(bad());
                }
                Ok(FlowEntry {
                    date: f[0].parse().map_err(|_| bad())?,
                    period: f[1].parse().map_err(|_| bad())?,
                    count: f[2].parse().map_err(|_| bad())?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { direction, periods_per_day, entries })
    }
}

fn dense_series(
    direction: FlowDirection,
    scheme: &PeriodScheme,
    range: DateRange,
    times: impl Iterator<Item = i64>,
) -> FlowSeries {
    let p = scheme.periods_per_day();
    let mut counts = vec![0u64; range.len() * p];
    for t in times {
        let (date, period) = scheme.locate(t);
        if range.contains(date) {
            let day = (date - range.start).num_days() as usize;
            counts[day * p + period - 1] += 1;
        }
    }
    let entries = range
        .days()
        .enumerate()
        .flat_map(|(day, date)| {
            let counts = &counts;
            (1..=p).map(move |period| FlowEntry { date, period, count: counts[day * p + period - 1] })
        })
        .collect();
    FlowSeries { direction, periods_per_day: p, entries }
}

/// Bins hub crossings: enter events feed the inbound series, exit events the
/// outbound one.
pub fn hub_flow_series(
    events: &[HubEvent],
    scheme: &PeriodScheme,
    range: DateRange,
    direction: FlowDirection,
) -> FlowSeries {
    let wanted = match direction {
        FlowDirection::Inbound => HubDirection::Enter,
        FlowDirection::Outbound => HubDirection::Exit,
    };
    dense_series(
        direction,
        scheme,
        range,
        events.iter().filter(|e| e.direction == wanted).map(|e| e.time),
    )
}

/// Bins hub trips: outbound trips (picked up in the hub zone) by pickup time,
/// inbound trips (dropped off in the hub zone) by dropoff time.
pub fn trip_flow_series(
    trips: &[Trip],
    hub_zone: ZoneId,
    scheme: &PeriodScheme,
    range: DateRange,
    direction: FlowDirection,
) -> FlowSeries {
    let times = trips.iter().filter_map(|t| match direction {
        FlowDirection::Outbound => (t.pickup_zone == Some(hub_zone)).then_some(t.pickup_time),
        FlowDirection::Inbound => (t.dropoff_zone == Some(hub_zone)).then_some(t.dropoff_time),
    });
    dense_series(direction, scheme, range, times)
}

pub const DEFAULT_MIN_SAMPLES: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneAccessibility {
    pub zone_id: ZoneId,
    pub samples: usize,
    pub mean_travel_min: Option<f64>,
    pub reachable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccessibilityResult {
    pub budget_min: f64,
    pub min_samples: usize,
    pub zones: Vec<ZoneAccessibility>,
}

impl AccessibilityResult {
    pub fn reachable_zones(&self) -> impl Iterator<Item = ZoneId> + '_ {
        self.zones.iter().filter(|z| z.reachable).map(|z| z.zone_id)
    }
}

fn durations_by_dropoff_zone(trips: &[Trip], zones: &ZoneSet) -> BTreeMap<ZoneId, Vec<f64>> {
    let mut by_zone: BTreeMap<ZoneId, Vec<f64>> = zones.zones().iter().map(|z| (z.zone_id, Vec::new())).collect();
    for t in trips {
        if let Some(v) = t.dropoff_zone.and_then(|z| by_zone.get_mut(&z)) {
            v.push(t.duration_min());
        }
    }
    by_zone
}

/// Mean hub-departure travel time per destination zone and whether it fits
/// in `budget_min` (boundary inclusive).
pub fn accessibility(trips: &[Trip], zones: &ZoneSet, budget_min: f64, min_samples: usize) -> Result<AccessibilityResult> {
    if !(budget_min.is_finite() && budget_min > 0.0) {
        return Err(Error::Argument(format!("budget must be > 0 minutes, got {budget_min}")));
    }
    let zones_out = durations_by_dropoff_zone(trips, zones)
        .into_iter()
        .map(|(zone_id, times)| {
            let mean = (!times.is_empty()).then(|| times.iter().sum::<f64>() / times.len() as f64);
            let reachable = times.len() >= min_samples && mean.is_some_and(|m| m <= budget_min);
            ZoneAccessibility { zone_id, samples: times.len(), mean_travel_min: mean, reachable }
        })
        .collect();
    Ok(AccessibilityResult { budget_min, min_samples, zones: zones_out })
}

/// Nearest-rank percentile of an ascending slice: the value at rank
/// ⌈p/100 · n⌉ (1-based, at least 1).
pub fn nearest_rank(sorted: &[f64], pct: f64) -> f64 {
    assert!(!sorted.is_empty());
    let rank = ((pct / 100.0) * sorted.len() as f64).ceil().max(1.0) as usize;
    sorted[rank.min(sorted.len()) - 1]
}

pub const DEFAULT_RELIABILITY_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReliabilityClass {
    Reliable,
    Poor,
    Undefined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneReliability {
    pub zone_id: ZoneId,
    pub samples: usize,
    /// (p90 − p10) / median of travel time.
    pub spread_index: Option<f64>,
    pub class: ReliabilityClass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityResult {
    pub min_samples: usize,
    pub threshold: f64,
    pub zones: Vec<ZoneReliability>,
}

/// Travel-time spread per destination zone. A zero median leaves the index
/// undefined.
pub fn reliability(trips: &[Trip], zones: &ZoneSet, min_samples: usize, threshold: f64) -> ReliabilityResult {
    let zones_out = durations_by_dropoff_zone(trips, zones)
        .into_iter()
        .map(|(zone_id, mut times)| {
            let samples = times.len();
            let index = if samples >= min_samples.max(1) {
                times.sort_by(f64::total_cmp);
                let median = nearest_rank(&times, 50.0);
                (median > 0.0).then(|| (nearest_rank(&times, 90.0) - nearest_rank(&times, 10.0)) / median)
            } else {
                None
            };
            let class = match index {
                None => ReliabilityClass::Undefined,
                Some(i) if i > threshold => ReliabilityClass::Poor,
                Some(_) => ReliabilityClass::Reliable,
            };
            ZoneReliability { zone_id, samples, spread_index: index, class }
        })
        .collect();
    ReliabilityResult { min_samples, threshold, zones: zones_out }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CongestionLevel {
    Free,
    Slow,
    Congested,
    Unknown,
}

/// Speed thresholds in km/h: `>= free` is free flow, `>= slow` is slow,
/// anything below is congested.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CongestionThresholds {
    pub free_kmh: f64,
    pub slow_kmh: f64,
}

impl Default for CongestionThresholds {
    fn default() -> Self {
        Self { free_kmh: 30.0, slow_kmh: 15.0 }
    }
}

impl CongestionThresholds {
    pub fn classify(&self, mean_speed: Option<f64>) -> CongestionLevel {
        match mean_speed {
            None => CongestionLevel::Unknown,
            Some(v) if v >= self.free_kmh => CongestionLevel::Free,
            Some(v) if v >= self.slow_kmh => CongestionLevel::Slow,
            Some(_) => CongestionLevel::Congested,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CongestionCell {
    pub zone_id: ZoneId,
    pub period: usize,
    pub samples: usize,
    pub mean_speed_kmh: Option<f64>,
    pub level: CongestionLevel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CongestionGrid {
    pub date: NaiveDate,
    pub thresholds: CongestionThresholds,
    /// Every (zone, period) pair, ordered by zone then period.
    pub cells: Vec<CongestionCell>,
}

/// Mean in-service probe speed per (zone, period) on one local date.
pub fn road_condition(
    records: &[ProbeRecord],
    index: &ZoneIndex,
    scheme: &PeriodScheme,
    date: NaiveDate,
    thresholds: CongestionThresholds,
) -> CongestionGrid {
    let p = scheme.periods_per_day();
    let mut sums: BTreeMap<(ZoneId, usize), (f64, usize)> = BTreeMap::new();
    for r in records.iter().filter(|r| r.state == VehicleState::InService) {
        let (d, period) = scheme.locate(r.timestamp);
        if d != date {
            continue;
        }
        if let Some(z) = index.locate(r.point()) {
            let e = sums.entry((z, period)).or_default();
            e.0 += r.speed;
            e.1 += 1;
        }
    }
    let cells = index
        .zones()
        .zones()
        .iter()
        .flat_map(|z| (1..=p).map(move |period| (z.zone_id, period)))
        .map(|(zone_id, period)| {
            let (sum, n) = sums.get(&(zone_id, period)).copied().unwrap_or((0.0, 0));
            let mean = (n > 0).then(|| sum / n as f64);
            CongestionCell { zone_id, period, samples: n, mean_speed_kmh: mean, level: thresholds.classify(mean) }
        })
        .collect();
    CongestionGrid { date, thresholds, cells }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceExtent {
    pub coverage: f64,
    pub radius_km: f64,
    pub covered_volume: u64,
    pub total_volume: u64,
}

/// Smallest hub-centred radius such that OD cells whose origin and
/// destination centroids both lie within it hold at least `coverage` of the
/// matrix volume.
pub fn compute_service_extent(od: &OdMatrix, zones: &ZoneSet, hub: LonLat, coverage: f64) -> Result<ServiceExtent> {
    if !(coverage > 0.0 && coverage <= 1.0) {
        return Err(Error::Argument(format!("coverage must be in (0, 1], got {coverage}")));
    }
    let proj = zones.projection();
    let dist_km = |id: ZoneId| -> Result<f64> {
        let z = zones.get(id).ok_or(Error::UnknownZone(id))?;
        Ok(proj.distance_m(hub, z.centroid()) / 1000.0)
    };
    let mut reach: Vec<(f64, u64)> = od
        .counts
        .iter()
        .filter(|c| c.count > 0)
        .map(|c| Ok((dist_km(c.origin)?.max(dist_km(c.dest)?), c.count)))
        .collect::<Result<_>>()?;
    let total: u64 = reach.iter().map(|r| r.1).sum();
    if total == 0 {
        return Err(Error::NoVolume);
    }
    reach.sort_by(|a, b| a.0.total_cmp(&b.0));
    let target = coverage * total as f64;
    let mut covered = 0u64;
    for (i, &(d, count)) in reach.iter().enumerate() {
        covered += count;
        // include every cell at exactly this distance before testing
        if reach.get(i + 1).is_some_and(|n| n.0 == d) {
            continue;
        }
        if covered as f64 >= target {
            return Ok(ServiceExtent { coverage, radius_km: d, covered_volume: covered, total_volume: total });
        }
    }
    let d = reach.last().map(|r| r.0).unwrap_or(0.0);
    Ok(ServiceExtent { coverage, radius_km: d, covered_volume: total, total_volume: total })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::Equirectangular;
    use crate::probe::HubEvent;
    use crate::zones::{build_index, TrafficZone};

    fn rect(id: u32, x0: f64, y0: f64, x1: f64, y1: f64) -> TrafficZone {
        TrafficZone {
            zone_id: ZoneId(id),
            name: String::new(),
            district: String::new(),
            ring: vec![
                LonLat::new(x0, y0),
                LonLat::new(x1, y0),
                LonLat::new(x1, y1),
                LonLat::new(x0, y1),
                LonLat::new(x0, y0),
            ],
        }
    }

    fn trip(o: Option<u32>, d: Option<u32>, pickup: i64, minutes: f64) -> Trip {
        Trip {
            vehicle_id: "v".into(),
            pickup_time: pickup,
            dropoff_time: pickup + (minutes * 60.0) as i64,
            pickup_point: LonLat::new(0.0, 0.0),
            dropoff_point: LonLat::new(0.0, 0.0),
            pickup_zone: o.map(ZoneId),
            dropoff_zone: d.map(ZoneId),
            truncated_start: false,
            truncated_end: false,
            mode: TravelMode::Taxi,
        }
    }

    fn two_zones() -> ZoneSet {
        ZoneSet::new(vec![rect(1, 0.0, 0.0, 1.0, 1.0), rect(2, 1.0, 0.0, 2.0, 1.0)]).unwrap()
    }

    #[test]
    fn od_counts() {
        let z = two_zones();
        let w = TimeWindow::new(0, 1000).unwrap();
        let trips = [trip(Some(1), Some(2), 0, 5.0), trip(Some(1), Some(2), 10, 5.0), trip(Some(2), Some(1), 20, 5.0)];
        let od = build_od_matrix(&trips, &z, w).unwrap();
        assert_eq!(od.get(ZoneId(1), ZoneId(2)), 2);
        assert_eq!(od.get(ZoneId(2), ZoneId(1)), 1);
        assert_eq!(od.counts.len(), 2);
        assert_eq!(od.unassigned, 0);

        let empty = build_od_matrix(&[], &z, w).unwrap();
        assert!(empty.counts.is_empty());

        let lost = build_od_matrix(&[trip(Some(1), None, 0, 5.0)], &z, w).unwrap();
        assert!(lost.counts.is_empty());
        assert_eq!((lost.unassigned, lost.trips_in_window), (1, 1));

        let outside = build_od_matrix(&[trip(Some(1), Some(2), 1000, 5.0)], &z, w).unwrap();
        assert_eq!(outside.trips_in_window, 0);

        assert!(matches!(build_od_matrix(&trips, &z, TimeWindow { start: 5, end: 5 }), Err(Error::Argument(_))));

        let mut buf = Vec::new();
        od.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "origin_zone,dest_zone,count\n1,2,2\n2,1,1\n");
    }

    fn d(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }

    #[test]
    fn flow_series_binning() {
        let scheme = PeriodScheme::equal(12, 0).unwrap();
        let day = d("2011-08-12");
        let (start, _) = scheme.period_bounds(day, 3);
        let ev = |t, dir| HubEvent { vehicle_id: "v".into(), time: t, direction: dir };
        let events = [ev(start, HubDirection::Enter), ev(start + 100, HubDirection::Enter), ev(start + 5, HubDirection::Exit)];
        let range = DateRange::new(day, d("2011-08-13")).unwrap();
        let s = hub_flow_series(&events, &scheme, range, FlowDirection::Inbound);
        assert_eq!(s.entries.len(), 24);
        assert_eq!(s.get(day, 3), Some(2));
        assert_eq!(s.entries.iter().filter(|e| e.date == day && e.period != 3).map(|e| e.count).sum::<u64>(), 0);
        assert!(s.entries.iter().filter(|e| e.date == d("2011-08-13")).all(|e| e.count == 0));
        let out = hub_flow_series(&events, &scheme, range, FlowDirection::Outbound);
        assert_eq!(out.total(), 1);

        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("date,period,count\n2011-08-12,1,0\n"));
        assert_eq!(FlowSeries::read_csv(&text, FlowDirection::Inbound, 12).unwrap(), s);
    }

    #[test]
    fn trip_flow_uses_pickup_for_outbound_and_dropoff_for_inbound() {
        let scheme = PeriodScheme::equal(12, 0).unwrap();
        let day = d("2011-08-12");
        let (p2, _) = scheme.period_bounds(day, 2);
        // picked up at the end of period 2, dropped off in period 3
        let t = trip(Some(9), Some(9), p2 + 7000, 10.0);
        let range = DateRange::single(day);
        assert_eq!(trip_flow_series(std::slice::from_ref(&t), ZoneId(9), &scheme, range, FlowDirection::Outbound).get(day, 2), Some(1));
        assert_eq!(trip_flow_series(&[t], ZoneId(9), &scheme, range, FlowDirection::Inbound).get(day, 3), Some(1));
    }

    #[test]
    fn accessibility_rules() {
        let z = two_zones();
        let trips = [trip(None, Some(1), 0, 10.0), trip(None, Some(1), 0, 10.0)];
        let a = accessibility(&trips, &z, 15.0, 1).unwrap();
        assert!(a.zones[0].reachable);
        assert_eq!(a.zones[0].mean_travel_min, Some(10.0));
        assert_eq!((a.zones[1].samples, a.zones[1].reachable, a.zones[1].mean_travel_min), (0, false, None));

        let boundary = [trip(None, Some(2), 0, 5.0), trip(None, Some(2), 0, 15.0), trip(None, Some(2), 0, 25.0)];
        let b = accessibility(&boundary, &z, 15.0, 1).unwrap();
        assert!(b.zones[1].reachable);
        let sparse = accessibility(&boundary, &z, 15.0, DEFAULT_MIN_SAMPLES).unwrap();
        assert!(!sparse.zones[1].reachable);

        assert!(matches!(accessibility(&trips, &z, 0.0, 1), Err(Error::Argument(_))));
        assert!(accessibility(&trips, &z, -3.0, 1).is_err());
    }

    #[test]
    fn nearest_rank_percentiles() {
        let v = [5.0, 10.0, 20.0];
        assert_eq!(nearest_rank(&v, 10.0), 5.0);
        assert_eq!(nearest_rank(&v, 50.0), 10.0);
        assert_eq!(nearest_rank(&v, 90.0), 20.0);
        assert_eq!(nearest_rank(&[1.0, 2.0, 3.0, 4.0], 50.0), 2.0);
    }

    #[test]
    fn reliability_rules() {
        let z = two_zones();
        let flat = [10.0, 10.0, 10.0].map(|m| trip(None, Some(1), 0, m));
        let r = reliability(&flat, &z, 3, DEFAULT_RELIABILITY_THRESHOLD);
        assert_eq!(r.zones[0].spread_index, Some(0.0));
        assert_eq!(r.zones[0].class, ReliabilityClass::Reliable);

        let spread = [5.0, 10.0, 20.0].map(|m| trip(None, Some(1), 0, m));
        let r = reliability(&spread, &z, 3, DEFAULT_RELIABILITY_THRESHOLD);
        assert_eq!(r.zones[0].spread_index, Some(1.5));
        assert_eq!(r.zones[0].class, ReliabilityClass::Poor);

        let r = reliability(&[trip(None, Some(1), 0, 4.0)], &z, 3, DEFAULT_RELIABILITY_THRESHOLD);
        assert_eq!(r.zones[0].class, ReliabilityClass::Undefined);
        assert_eq!(r.zones[0].spread_index, None);
    }

    #[test]
    fn congestion_levels() {
        let th = CongestionThresholds::default();
        assert_eq!(th.classify(Some(40.0)), CongestionLevel::Free);
        assert_eq!(th.classify(Some(30.0)), CongestionLevel::Free);
        assert_eq!(th.classify(Some(20.0)), CongestionLevel::Slow);
        assert_eq!(th.classify(Some(15.0)), CongestionLevel::Slow);
        assert_eq!(th.classify(Some(10.0)), CongestionLevel::Congested);
        assert_eq!(th.classify(None), CongestionLevel::Unknown);
    }

    #[test]
    fn road_condition_grid() {
        let idx = build_index(&two_zones());
        let scheme = PeriodScheme::equal(12, 0).unwrap();
        let day = d("2011-08-12");
        let (t, _) = scheme.period_bounds(day, 5);
        let rec = |x: f64, speed: f64, state| ProbeRecord {
            vehicle_id: "v".into(),
            timestamp: t,
            lon: x,
            lat: 0.5,
            speed,
            heading: 0.0,
            occupied: false,
            state,
        };
        let recs = [
            rec(0.5, 35.0, VehicleState::InService),
            rec(0.5, 45.0, VehicleState::InService),
            rec(1.5, 10.0, VehicleState::InService),
            rec(1.5, 90.0, VehicleState::OutOfService),
        ];
        let g = road_condition(&recs, &idx, &scheme, day, CongestionThresholds::default());
        assert_eq!(g.cells.len(), 24);
        let cell = |z: u32, p: usize| g.cells.iter().find(|c| c.zone_id == ZoneId(z) && c.period == p).unwrap();
        assert_eq!(cell(1, 5).mean_speed_kmh, Some(40.0));
        assert_eq!(cell(1, 5).level, CongestionLevel::Free);
        assert_eq!(cell(2, 5).level, CongestionLevel::Congested);
        assert_eq!(cell(2, 5).samples, 1);
        assert_eq!(cell(1, 6).level, CongestionLevel::Unknown);
    }

    /// Zones whose centroids sit at known east-west distances from the hub.
    fn extent_fixture(dists_km: &[f64]) -> (ZoneSet, LonLat) {
        let hub = LonLat::new(114.0, 22.5);
        let proj = Equirectangular::new(22.5);
        let half = 0.001;
        let zones: Vec<TrafficZone> = dists_km
            .iter()
            .enumerate()
            .map(|(i, &km)| {
                let c = proj.offset_toward(hub, LonLat::new(115.0, 22.5), km * 1000.0);
                rect(i as u32 + 1, c.lon - half, c.lat - half, c.lon + half, c.lat + half)
            })
            .collect();
        (ZoneSet::new(zones).unwrap(), hub)
    }

    fn od_of(cells: &[(u32, u32, u64)]) -> OdMatrix {
        OdMatrix {
            window: TimeWindow { start: 0, end: 1 },
            mode: TravelMode::Taxi,
            counts: cells.iter().map(|&(o, d, count)| OdCell { origin: ZoneId(o), dest: ZoneId(d), count }).collect(),
            unassigned: 0,
            trips_in_window: cells.iter().map(|c| c.2).sum(),
        }
    }

    #[test]
    fn service_extent_examples() {
        let (zones, hub) = extent_fixture(&[0.0, 2.0, 10.0]);
        let proj = zones.projection();
        let dist = |id: u32| proj.distance_m(hub, zones.get(ZoneId(id)).unwrap().centroid()) / 1000.0;

        let own = compute_service_extent(&od_of(&[(1, 1, 5)]), &zones, hub, 0.5).unwrap();
        assert!((own.radius_km - dist(1)).abs() < 1e-12);

        let od = od_of(&[(1, 2, 9), (1, 3, 1)]);
        let r = compute_service_extent(&od, &zones, hub, 0.8).unwrap();
        assert!((r.radius_km - 2.0).abs() < 1e-3, "{}", r.radius_km);
        let r = compute_service_extent(&od, &zones, hub, 1.0).unwrap();
        assert!((r.radius_km - 10.0).abs() < 1e-3);
        assert_eq!(r.covered_volume, 10);

        assert!(matches!(compute_service_extent(&od_of(&[]), &zones, hub, 0.5), Err(Error::NoVolume)));
        assert!(matches!(compute_service_extent(&od, &zones, hub, 0.0), Err(Error::Argument(_))));
        assert!(matches!(compute_service_extent(&od_of(&[(1, 99, 1)]), &zones, hub, 0.5), Err(Error::UnknownZone(_))));
    }
}
