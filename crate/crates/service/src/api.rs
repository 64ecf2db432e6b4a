//! Read-only HTTP/JSON API over a loaded bundle.

use std::collections::HashMap;
use std::sync::Arc;

use axum::extract::rejection::QueryRejection;
use axum::extract::{Query, State};
use axum::http::{HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use chrono::{DateTime, NaiveDate};
use hubflow_core::od::{accessibility, build_od_matrix, compute_service_extent, FlowDirection, OdMatrix, TimeWindow};
use hubflow_core::probe::Trip;
use hubflow_core::transit::{find_plans, DEFAULT_MAX_TRANSFERS};
use hubflow_core::zones::{ZoneId, ZoneSet};
use hubflow_core::Error as CoreError;
use serde::Serialize;
use serde_json::{json, Value};

use crate::bundle::{iso, Bundle, Unavailable};
use crate::pipeline::full_od;

/// Upper bound on `max_transfers` accepted by `/transfer`.
pub const MAX_TRANSFERS_LIMIT: usize = 4;

pub struct AppState {
    pub bundle: Bundle,
    full_od: Option<OdMatrix>,
    departures: Vec<Trip>,
}

impl AppState {
    pub fn new(bundle: Bundle) -> Self {
        let full_od = match (&bundle.trips, &bundle.zones) {
            (Some(t), Some(z)) => full_od(t, z),
            _ => None,
        };
        let departures = match (&bundle.trips, bundle.settings.hub_zone) {
            (Some(t), Some(hz)) => t.iter().filter(|t| t.pickup_zone == Some(hz)).cloned().collect(),
            _ => Vec::new(),
        };
        Self { bundle, full_od, departures }
    }
}

pub type Shared = Arc<AppState>;

pub fn router(state: Shared) -> Router {
    Router::new()
        .route("/manifest", get(manifest))
        .route("/zones", get(zones))
        .route("/od", get(od))
        .route("/flows", get(flows))
        .route("/forecast", get(forecast))
        .route("/forecast/report", get(forecast_report))
        .route("/validation", get(validation))
        .route("/accessibility", get(accessibility_view))
        .route("/reliability", get(reliability_view))
        .route("/congestion", get(congestion))
        .route("/transfer", get(transfer))
        .route("/service-extent", get(service_extent))
        .fallback(not_found)
        .with_state(state)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

impl ApiError {
    fn bad(code: &'static str, message: impl Into<String>) -> Self {
        Self { status: StatusCode::BAD_REQUEST, code, message: message.into() }
    }

    fn not_found(code: &'static str, message: impl Into<String>) -> Self {
        Self { status: StatusCode::NOT_FOUND, code, message: message.into() }
    }

    fn unavailable(u: Unavailable) -> Self {
        match u {
            Unavailable::Missing(m) => Self::not_found("not_available", m),
            Unavailable::Stale(m) => Self { status: StatusCode::CONFLICT, code: "stale_artifact", message: m },
        }
    }
}

type ApiResult = Result<Value, ApiError>;

fn respond(state: &AppState, result: ApiResult) -> Response {
    let hash = state.bundle.config_hash().to_string();
    let (status, mut body) = match result {
        Ok(v) => (StatusCode::OK, v),
        Err(e) => (e.status, json!({ "error": { "code": e.code, "message": e.message } })),
    };
    if let Value::Object(m) = &mut body {
        m.insert("config_hash".into(), Value::String(hash.clone()));
    }
    let mut resp = (status, Json(body)).into_response();
    resp.headers_mut().insert("x-config-hash", HeaderValue::from_str(&hash).expect("hex is a valid header"));
    resp
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("response serializes")
}

/// Query parameters with the allowed names checked up front.
struct Params(HashMap<String, String>);

impl Params {
    fn new(q: Result<Query<HashMap<String, String>>, QueryRejection>, allowed: &[&str]) -> Result<Self, ApiError> {
        let Query(map) = q.map_err(|e| ApiError::bad("malformed_query", e.body_text()))?;
        if let Some(k) = map.keys().filter(|k| !allowed.contains(&k.as_str())).min() {
            return Err(ApiError::bad("unknown_parameter", format!("unknown parameter `{k}`")));
        }
        Ok(Self(map))
    }

    fn get(&self, k: &str) -> Option<&str> {
        self.0.get(k).map(String::as_str)
    }

    fn required(&self, k: &str) -> Result<&str, ApiError> {
        self.get(k).ok_or_else(|| ApiError::bad("missing_parameter", format!("parameter `{k}` is required")))
    }

    fn parse<T: std::str::FromStr>(&self, k: &str, what: &str) -> Result<Option<T>, ApiError> {
        self.get(k)
            .map(|v| v.parse::<T>().map_err(|_| ApiError::bad("invalid_parameter", format!("`{k}` must be {what}, got `{v}`"))))
            .transpose()
    }

    fn direction(&self, default: Option<FlowDirection>) -> Result<FlowDirection, ApiError> {
        match (self.get("direction"), default) {
            (None, Some(d)) => Ok(d),
            (None, None) => Err(ApiError::bad("missing_parameter", "parameter `direction` is required")),
            (Some(v), _) => v
                .parse()
                .map_err(|_| ApiError::bad("invalid_parameter", format!("`direction` must be inbound or outbound, got `{v}`"))),
        }
    }

    fn date(&self, k: &str) -> Result<Option<NaiveDate>, ApiError> {
        self.parse(k, "a YYYY-MM-DD date")
    }

    fn period(&self, periods: usize) -> Result<Option<usize>, ApiError> {
        let p: Option<usize> = self.parse("period", "a positive integer")?;
        match p {
            Some(p) if p == 0 || p > periods => {
                Err(ApiError::bad("invalid_parameter", format!("`period` must be in 1..={periods}, got {p}")))
            }
            p => Ok(p),
        }
    }

    fn zone(&self, zones: &ZoneSet) -> Result<Option<ZoneId>, ApiError> {
        let Some(z) = self.parse::<u32>("zone", "a zone id")? else { return Ok(None) };
        let id = ZoneId(z);
        if zones.get(id).is_none() {
            return Err(ApiError::not_found("unknown_zone", format!("zone {z} does not exist")));
        }
        Ok(Some(id))
    }
}

macro_rules! handler {
    ($name:ident, $allowed:expr, |$state:ident, $params:ident| $body:block) => {
        async fn $name(State(s): State<Shared>, q: Result<Query<HashMap<String, String>>, QueryRejection>) -> Response {
            let result = (|| -> ApiResult {
                let $state: &AppState = &s;
                let $params = Params::new(q, $allowed)?;
                $body
            })();
            respond(&s, result)
        }
    };
}

fn need<'a, T>(v: Option<&'a T>, bundle: &Bundle, name: &str, stage: &str) -> Result<&'a T, ApiError> {
    v.ok_or_else(|| ApiError::unavailable(bundle.why_missing(name, stage)))
}

fn zones_of(s: &AppState) -> Result<&ZoneSet, ApiError> {
    need(s.bundle.zones.as_ref(), &s.bundle, "zones", "zones")
}

fn trips_of(s: &AppState) -> Result<&[Trip], ApiError> {
    need(s.bundle.trips.as_ref(), &s.bundle, "trips", "trips").map(Vec::as_slice)
}

handler!(manifest, &[], |s, _p| {
    Ok(json!({ "manifest": to_value(&s.bundle.manifest), "settings": to_value(&s.bundle.settings) }))
});

handler!(zones, &[], |s, _p| {
    let z = zones_of(s)?;
    Ok(json!({ "count": z.len(), "hub_zone": s.bundle.settings.hub_zone, "zones": z.to_geojson() }))
});

/// `YYYY-MM-DD` (one local day), `YYYY-MM-DD/YYYY-MM-DD` (inclusive days)
/// or `start/end` RFC 3339 instants (half-open).
fn parse_window(s: &AppState, text: &str) -> Result<TimeWindow, ApiError> {
    let scheme = &s.bundle.settings.periods;
    let bad = || ApiError::bad("invalid_parameter", format!("cannot parse window `{text}`"));
    let (a, b) = match text.split_once('/') {
        Some((a, b)) => (a, Some(b)),
        None => (text, None),
    };
    let window = if let Ok(d0) = a.parse::<NaiveDate>() {
        let d1 = match b {
            Some(b) => b.parse::<NaiveDate>().map_err(|_| bad())?,
            None => d0,
        };
        TimeWindow::new(scheme.day_bounds(d0).0, scheme.day_bounds(d1).1)
    } else {
        let t0 = DateTime::parse_from_rfc3339(a).map_err(|_| bad())?.timestamp();
        let t1 = DateTime::parse_from_rfc3339(b.ok_or_else(bad)?).map_err(|_| bad())?.timestamp();
        TimeWindow::new(t0, t1)
    };
    window.map_err(|e| ApiError::bad("invalid_parameter", e.to_string()))
}

handler!(od, &["window", "mode"], |s, p| {
    if let Some(m) = p.get("mode") {
        if m != "taxi" {
            return Err(ApiError::bad("invalid_parameter", format!("unsupported mode `{m}`; only taxi is available")));
        }
    }
    let zones = zones_of(s)?;
    let trips = trips_of(s)?;
    let od = match p.get("window") {
        Some(w) => build_od_matrix(trips, zones, parse_window(s, w)?).map_err(|e| ApiError::bad("invalid_parameter", e.to_string()))?,
        None => match &s.full_od {
            Some(od) => od.clone(),
            None => OdMatrix {
                window: TimeWindow { start: 0, end: 1 },
                mode: Default::default(),
                counts: Vec::new(),
                unassigned: 0,
                trips_in_window: 0,
            },
        },
    };
    let assigned = od.total();
    Ok(json!({
        "window": { "start": iso(od.window.start), "end": iso(od.window.end) },
        "mode": od.mode,
        "cells": od.counts,
        "unassigned": od.unassigned,
        "trips_in_window": od.trips_in_window,
        "conservation": {
            "assigned": assigned,
            "unassigned": od.unassigned,
            "trips_in_window": od.trips_in_window,
            "holds": assigned + od.unassigned == od.trips_in_window,
        },
    }))
});

handler!(flows, &["direction", "from", "to"], |s, p| {
    let dir = p.direction(None)?;
    let (from, to) = (p.date("from")?, p.date("to")?);
    if let (Some(a), Some(b)) = (from, to) {
        if b < a {
            return Err(ApiError::bad("invalid_parameter", format!("`to` {b} precedes `from` {a}")));
        }
    }
    let series = need(s.bundle.flows.get(dir), &s.bundle, &format!("{dir}_flows"), "flows")?;
    let series = series.filtered(|e| from.is_none_or(|f| e.date >= f) && to.is_none_or(|t| e.date <= t));
    let totals: Vec<Value> = series.daily_totals().into_iter().map(|(date, total)| json!({ "date": date, "total": total })).collect();
    Ok(json!({
        "direction": dir,
        "periods_per_day": series.periods_per_day,
        "entries": series.entries,
        "daily_totals": totals,
    }))
});

fn fit_for(s: &AppState, dir: FlowDirection) -> Result<&hubflow_core::stats::RegressionFit, ApiError> {
    need(s.bundle.fits.get(dir), &s.bundle, &format!("{dir}_fit"), &format!("fit_{dir}"))
}

handler!(forecast, &["direction", "period"], |s, p| {
    let dir = p.direction(Some(FlowDirection::Outbound))?;
    let fit = fit_for(s, dir)?;
    match p.period(fit.periods_per_day)? {
        Some(period) => {
            let prediction = fit.predict(period).map_err(|e| ApiError::bad("invalid_parameter", e.to_string()))?;
            Ok(json!({ "direction": dir, "period": period, "prediction": prediction }))
        }
        None => {
            let all: Vec<Value> = (1..=fit.periods_per_day)
                .map(|period| json!({ "period": period, "prediction": fit.predict(period).expect("in range") }))
                .collect();
            Ok(json!({ "direction": dir, "predictions": all }))
        }
    }
});

handler!(forecast_report, &["direction"], |s, p| {
    let dir = p.direction(Some(FlowDirection::Outbound))?;
    fit_for(s, dir)?;
    let report = need(s.bundle.reports.get(dir), &s.bundle, &format!("{dir}_report"), &format!("fit_{dir}"))?;
    Ok(json!({ "direction": dir, "report": report }))
});

handler!(validation, &["direction"], |s, p| {
    let dir = p.direction(Some(FlowDirection::Outbound))?;
    fit_for(s, dir)?;
    let v = need(s.bundle.validations.get(dir), &s.bundle, &format!("{dir}_validation"), &format!("validation_{dir}"))?;
    Ok(json!({ "direction": dir, "validation": v }))
});

handler!(accessibility_view, &["budget_min", "min_samples", "zone"], |s, p| {
    let budget: f64 = p
        .parse("budget_min", "a number of minutes")?
        .ok_or_else(|| ApiError::bad("missing_parameter", "parameter `budget_min` is required"))?;
    let min_samples = p.parse("min_samples", "a non-negative integer")?.unwrap_or(s.bundle.settings.analysis.min_samples);
    let zones = zones_of(s)?;
    let zone = p.zone(zones)?;
    trips_of(s)?;
    if s.bundle.settings.hub_zone.is_none() {
        return Err(ApiError::not_found("not_available", "hub centre lies outside every zone"));
    }
    let mut r = accessibility(&s.departures, zones, budget, min_samples)
        .map_err(|e| ApiError::bad("invalid_parameter", e.to_string()))?;
    if let Some(z) = zone {
        r.zones.retain(|c| c.zone_id == z);
    }
    let reachable: Vec<ZoneId> = r.reachable_zones().collect();
    Ok(json!({ "accessibility": r, "reachable": reachable }))
});

handler!(reliability_view, &["zone"], |s, p| {
    let zone = p.zone(zones_of(s)?)?;
    let mut r = need(s.bundle.reliability.as_ref(), &s.bundle, "reliability", "hub_zone")?.clone();
    if let Some(z) = zone {
        r.zones.retain(|c| c.zone_id == z);
    }
    Ok(json!({ "reliability": r }))
});

handler!(congestion, &["date", "period", "zone"], |s, p| {
    let date = p.date("date")?.ok_or_else(|| ApiError::bad("missing_parameter", "parameter `date` is required"))?;
    let periods = s.bundle.settings.periods.periods_per_day();
    let period = p.period(periods)?;
    let zones = zones_of(s)?;
    let zone = p.zone(zones)?;
    let cells = need(s.bundle.congestion.as_ref(), &s.bundle, "congestion", "congestion")?;
    let mut grid = crate::bundle::congestion_grid(cells, zones, periods, date, s.bundle.settings.analysis.thresholds());
    grid.cells.retain(|c| period.is_none_or(|p| c.period == p) && zone.is_none_or(|z| c.zone_id == z));
    Ok(json!({ "congestion": grid }))
});

handler!(transfer, &["from", "to", "max_transfers"], |s, p| {
    let from = p.required("from")?;
    let to = p.required("to")?;
    let max = p.parse("max_transfers", "a non-negative integer")?.unwrap_or(DEFAULT_MAX_TRANSFERS);
    if max > MAX_TRANSFERS_LIMIT {
        return Err(ApiError::bad("invalid_parameter", format!("`max_transfers` must be at most {MAX_TRANSFERS_LIMIT}")));
    }
    let net = need(s.bundle.network.as_ref(), &s.bundle, "network", "network")?;
    let plans = find_plans(net, from, to, max).map_err(|e| match e {
        CoreError::UnknownStation(id) => ApiError::not_found("unknown_station", format!("station `{id}` does not exist")),
        other => ApiError::bad("invalid_parameter", other.to_string()),
    })?;
    Ok(json!({ "from": from, "to": to, "max_transfers": max, "plans": plans }))
});

handler!(service_extent, &["q"], |s, p| {
    let q = p.parse("q", "a fraction in (0, 1]")?.unwrap_or(s.bundle.settings.analysis.service_coverage);
    if !(q > 0.0 && q <= 1.0) {
        return Err(ApiError::bad("invalid_parameter", format!("`q` must be in (0, 1], got {q}")));
    }
    let zones = zones_of(s)?;
    trips_of(s)?;
    let od = s.full_od.as_ref().ok_or_else(|| ApiError::not_found("no_volume", "no trips in the bundle"))?;
    let e = compute_service_extent(od, zones, s.bundle.settings.hub_center, q).map_err(|e| match e {
        CoreError::NoVolume => ApiError::not_found("no_volume", "OD matrix has no volume"),
        other => ApiError::bad("invalid_parameter", other.to_string()),
    })?;
    Ok(json!({ "service_extent": e }))
});

async fn not_found(State(s): State<Shared>) -> Response {
    respond(&s, Err(ApiError::not_found("no_route", "no such endpoint")))
}
