//! Traffic zones and point location.

use std::collections::BTreeSet;
use std::fmt;
use std::io::Read;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result, ZoneIssue};
use crate::geo::{self, Equirectangular, LonLat};
use crate::probe::Trip;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ZoneId(pub u32);

impl fmt::Display for ZoneId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrafficZone {
    pub zone_id: ZoneId,
    pub name: String,
    pub district: String,
    /// Closed exterior ring in lon/lat.
    pub ring: Vec<LonLat>,
}

impl TrafficZone {
    pub fn contains(&self, p: LonLat) -> bool {
        geo::ring_contains(&self.ring, p)
    }

    pub fn centroid(&self) -> LonLat {
        geo::ring_centroid(&self.ring)
    }

    fn bbox(&self) -> BBox {
        BBox::of(&self.ring)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct BBox {
    min_lon: f64,
    min_lat: f64,
    max_lon: f64,
    max_lat: f64,
}

impl BBox {
    fn of(points: &[LonLat]) -> Self {
        points.iter().fold(
            BBox {
                min_lon: f64::INFINITY,
                min_lat: f64::INFINITY,
                max_lon: f64::NEG_INFINITY,
                max_lat: f64::NEG_INFINITY,
            },
            |b, p| BBox {
                min_lon: b.min_lon.min(p.lon),
                min_lat: b.min_lat.min(p.lat),
                max_lon: b.max_lon.max(p.lon),
                max_lat: b.max_lat.max(p.lat),
            },
        )
    }

    fn union(self, o: BBox) -> BBox {
        BBox {
            min_lon: self.min_lon.min(o.min_lon),
            min_lat: self.min_lat.min(o.min_lat),
            max_lon: self.max_lon.max(o.max_lon),
            max_lat: self.max_lat.max(o.max_lat),
        }
    }

    fn intersects(&self, o: &BBox) -> bool {
        self.min_lon <= o.max_lon && o.min_lon <= self.max_lon && self.min_lat <= o.max_lat && o.min_lat <= self.max_lat
    }
}

/// A validated set of traffic zones, kept sorted by zone id.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ZoneSet {
    zones: Vec<TrafficZone>,
    /// Pairs of zones whose interiors overlap. Reported, not rejected.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    overlaps: Vec<(ZoneId, ZoneId)>,
}

impl ZoneSet {
    /// Validates rings and id uniqueness; collects every problem found.
    pub fn new(mut zones: Vec<TrafficZone>) -> Result<Self> {
        let mut issues = Vec::new();
        let mut seen = BTreeSet::new();
        for (i, z) in zones.iter().enumerate() {
            if !seen.insert(z.zone_id) {
                issues.push(ZoneIssue { zone_id: Some(z.zone_id), feature_index: i, reason: "duplicate zone_id".into() });
            }
            if let Err(reason) = geo::validate_ring(&z.ring) {
                issues.push(ZoneIssue { zone_id: Some(z.zone_id), feature_index: i, reason });
            }
        }
        if !issues.is_empty() {
            return Err(Error::ZoneValidation(issues));
        }
        zones.sort_by_key(|z| z.zone_id);
        let overlaps = find_overlaps(&zones);
        Ok(Self { zones, overlaps })
    }

    pub fn zones(&self) -> &[TrafficZone] {
        &self.zones
    }

    pub fn len(&self) -> usize {
        self.zones.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zones.is_empty()
    }

    pub fn overlaps(&self) -> &[(ZoneId, ZoneId)] {
        &self.overlaps
    }

    pub fn get(&self, id: ZoneId) -> Option<&TrafficZone> {
        self.zones.binary_search_by_key(&id, |z| z.zone_id).ok().map(|i| &self.zones[i])
    }

    /// Linear scan; the lowest zone id containing `p` wins.
    pub fn locate_linear(&self, p: LonLat) -> Option<ZoneId> {
        self.zones.iter().find(|z| z.contains(p)).map(|z| z.zone_id)
    }

    /// Projection for planar distances, centred on the mean centroid latitude.
    pub fn projection(&self) -> Equirectangular {
        let lat = if self.zones.is_empty() {
            0.0
        } else {
            self.zones.iter().map(|z| z.centroid().lat).sum::<f64>() / self.zones.len() as f64
        };
        Equirectangular::new(lat)
    }

    pub fn to_geojson(&self) -> Value {
        let features: Vec<Value> = self
            .zones
            .iter()
            .map(|z| {
                json!({
                    "type": "Feature",
                    "properties": { "zone_id": z.zone_id.0, "name": z.name, "district": z.district },
                    "geometry": {
                        "type": "Polygon",
                        "coordinates": [z.ring.iter().map(|p| [p.lon, p.lat]).collect::<Vec<_>>()],
                    },
                })
            })
            .collect();
        json!({ "type": "FeatureCollection", "features": features })
    }
}

fn find_overlaps(zones: &[TrafficZone]) -> Vec<(ZoneId, ZoneId)> {
    let boxes: Vec<BBox> = zones.iter().map(TrafficZone::bbox).collect();
    let mut out = Vec::new();
    for i in 0..zones.len() {
        for j in (i + 1)..zones.len() {
            if boxes[i].intersects(&boxes[j]) && interiors_overlap(&zones[i], &zones[j]) {
                out.push((zones[i].zone_id, zones[j].zone_id));
            }
        }
    }
    out
}

/// Detects interior overlap from proper edge crossings or from a vertex /
/// centroid of one ring lying strictly inside the other.
fn interiors_overlap(a: &TrafficZone, b: &TrafficZone) -> bool {
    let strictly_inside = |z: &TrafficZone, p: LonLat| {
        z.contains(p) && !z.ring.windows(2).any(|w| geo::on_segment(w[0], w[1], p))
    };
    if a.ring.iter().any(|&p| strictly_inside(b, p)) || b.ring.iter().any(|&p| strictly_inside(a, p)) {
        return true;
    }
    if strictly_inside(b, a.centroid()) || strictly_inside(a, b.centroid()) {
        return true;
    }
    for ea in a.ring.windows(2) {
        for eb in b.ring.windows(2) {
            let d1 = geo::orient(eb[0], eb[1], ea[0]);
            let d2 = geo::orient(eb[0], eb[1], ea[1]);
            let d3 = geo::orient(ea[0], ea[1], eb[0]);
            let d4 = geo::orient(ea[0], ea[1], eb[1]);
            if d1 * d2 < 0.0 && d3 * d4 < 0.0 {
                return true;
            }
        }
    }
    false
}

#[derive(Deserialize)]
struct FeatureCollection {
    #[serde(rename = "type")]
    kind: String,
    features: Vec<Value>,
}

/// Reads a GeoJSON FeatureCollection of Polygons with `zone_id`, `name` and
/// `district` properties.
pub fn load_zones<R: Read>(reader: R) -> Result<ZoneSet> {
    let fc: FeatureCollection =
        serde_json::from_reader(reader).map_err(|e| Error::Format(format!("zone file is not GeoJSON: {e}")))?;
    if fc.kind != "FeatureCollection" {
        return Err(Error::Format(format!("expected FeatureCollection, found {}", fc.kind)));
    }
    let mut zones = Vec::with_capacity(fc.features.len());
    let mut issues = Vec::new();
    for (i, f) in fc.features.iter().enumerate() {
        match parse_feature(f) {
            Ok(z) => zones.push(z),
            Err((zone_id, reason)) => issues.push(ZoneIssue { zone_id, feature_index: i, reason }),
        }
    }
    if !issues.is_empty() {
        return Err(Error::ZoneValidation(issues));
    }
    ZoneSet::new(zones)
}

fn parse_feature(f: &Value) -> std::result::Result<TrafficZone, (Option<ZoneId>, String)> {
    let props = f.get("properties").and_then(Value::as_object).ok_or((None, "missing properties".to_string()))?;
    let zone_id = props
        .get("zone_id")
        .and_then(Value::as_u64)
        .and_then(|v| u32::try_from(v).ok())
        .map(ZoneId)
        .ok_or((None, "zone_id missing or not a non-negative integer".to_string()))?;
    let err = |m: &str| (Some(zone_id), m.to_string());
    let text = |k: &str| props.get(k).and_then(Value::as_str).unwrap_or_default().to_string();
    let geom = f.get("geometry").ok_or_else(|| err("missing geometry"))?;
    if geom.get("type").and_then(Value::as_str) != Some("Polygon") {
        return Err(err("geometry is not a Polygon"));
    }
    let rings = geom.get("coordinates").and_then(Value::as_array).ok_or_else(|| err("missing coordinates"))?;
    match rings.len() {
        0 => return Err(err("polygon has no rings")),
        1 => {}
        _ => return Err(err("polygons with holes are not supported")),
    }
    let ring = rings[0]
        .as_array()
        .ok_or_else(|| err("ring is not an array"))?
        .iter()
        .map(|pos| {
            let pos = pos.as_array()?;
            Some(LonLat::new(pos.first()?.as_f64()?, pos.get(1)?.as_f64()?))
        })
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| err("malformed position"))?;
    Ok(TrafficZone { zone_id, name: text("name"), district: text("district"), ring })
}

/// Uniform-grid point-location index over a [`ZoneSet`].
///
/// Each cell lists, in ascending zone id, every zone whose bounding box
/// touches the cell, so a query only tests a handful of candidate rings.
#[derive(Debug, Clone)]
pub struct ZoneIndex {
    zones: ZoneSet,
    origin: (f64, f64),
    cell: (f64, f64),
    dims: (usize, usize),
    cells: Vec<Vec<u32>>,
}

pub fn build_index(zones: &ZoneSet) -> ZoneIndex {
    ZoneIndex::new(zones.clone())
}

impl ZoneIndex {
    pub fn new(zones: ZoneSet) -> Self {
        if zones.is_empty() {
            return Self { zones, origin: (0.0, 0.0), cell: (1.0, 1.0), dims: (0, 0), cells: Vec::new() };
        }
        let boxes: Vec<BBox> = zones.zones.iter().map(TrafficZone::bbox).collect();
        let all = boxes.iter().copied().reduce(BBox::union).unwrap();
        let side = ((zones.len() as f64).sqrt() * 2.0).ceil().clamp(1.0, 512.0) as usize;
        let width = (all.max_lon - all.min_lon).max(f64::MIN_POSITIVE);
        let height = (all.max_lat - all.min_lat).max(f64::MIN_POSITIVE);
        let mut idx = Self {
            zones,
            origin: (all.min_lon, all.min_lat),
            cell: (width / side as f64, height / side as f64),
            dims: (side, side),
            cells: vec![Vec::new(); side * side],
        };
        for (zi, b) in boxes.iter().enumerate() {
            let (c0, r0) = idx.cell_of(b.min_lon, b.min_lat);
            let (c1, r1) = idx.cell_of(b.max_lon, b.max_lat);
            for r in r0..=r1 {
                for c in c0..=c1 {
                    idx.cells[r * side + c].push(zi as u32);
                }
            }
        }
        idx
    }

    // Same arithmetic for bbox corners and queries, so monotonicity of the
    // floating-point ops guarantees a query cell lies within every covering
    // zone's cell range.
    fn cell_of(&self, lon: f64, lat: f64) -> (usize, usize) {
        let c = ((lon - self.origin.0) / self.cell.0).floor();
        let r = ((lat - self.origin.1) / self.cell.1).floor();
        let clamp = |v: f64, n: usize| (v.max(0.0) as usize).min(n - 1);
        (clamp(c, self.dims.0), clamp(r, self.dims.1))
    }

    pub fn zones(&self) -> &ZoneSet {
        &self.zones
    }

    /// Zone containing `p` (boundary-inclusive); the lowest id wins ties.
    pub fn locate(&self, p: LonLat) -> Option<ZoneId> {
        if self.cells.is_empty() || !p.is_finite() {
            return None;
        }
        let (c, r) = self.cell_of(p.lon, p.lat);
        self.cells[r * self.dims.0 + c]
            .iter()
            .map(|&zi| &self.zones.zones[zi as usize])
            .find(|z| z.contains(p))
            .map(|z| z.zone_id)
    }
}

pub fn locate(index: &ZoneIndex, point: LonLat) -> Option<ZoneId> {
    index.locate(point)
}

/// Fills pickup/dropoff zones; endpoints outside every zone stay unset.
pub fn assign_trip_zones(trips: &mut [Trip], index: &ZoneIndex) {
    for t in trips {
        t.pickup_zone = index.locate(t.pickup_point);
        t.dropoff_zone = index.locate(t.dropoff_point);
    }
}
