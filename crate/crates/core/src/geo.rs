//! Planar geometry helpers on WGS84 coordinates.
//!
//! Distances use an equirectangular projection around a reference latitude,
//! which is accurate to well under a percent at city scale.

use serde::{Deserialize, Serialize};

/// Mean Earth radius in metres (IUGG).
pub const EARTH_RADIUS_M: f64 = 6_371_008.8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LonLat {
    pub lon: f64,
    pub lat: f64,
}

impl LonLat {
    pub const fn new(lon: f64, lat: f64) -> Self {
        Self { lon, lat }
    }

    pub fn is_finite(&self) -> bool {
        self.lon.is_finite() && self.lat.is_finite()
    }
}

/// Equirectangular projection centred on a reference latitude.
#[derive(Debug, Clone, Copy)]
pub struct Equirectangular {
    cos_ref: f64,
}

impl Equirectangular {
    pub fn new(reference_lat: f64) -> Self {
        Self {
            cos_ref: reference_lat.to_radians().cos(),
        }
    }

    /// Projected (x, y) in metres relative to the origin of the graticule.
    pub fn project(&self, p: LonLat) -> (f64, f64) {
        (
            p.lon.to_radians() * self.cos_ref * EARTH_RADIUS_M,
            p.lat.to_radians() * EARTH_RADIUS_M,
        )
    }

    pub fn distance_m(&self, a: LonLat, b: LonLat) -> f64 {
        let (ax, ay) = self.project(a);
        let (bx, by) = self.project(b);
        (ax - bx).hypot(ay - by)
    }

    /// Point at `distance_m` from `origin` along the planar bearing towards `toward`.
    /// When both points coincide the offset is taken due east.
    pub fn offset_toward(&self, origin: LonLat, toward: LonLat, distance_m: f64) -> LonLat {
        let (ox, oy) = self.project(origin);
        let (tx, ty) = self.project(toward);
        let (dx, dy) = (tx - ox, ty - oy);
        let len = dx.hypot(dy);
        let (ux, uy) = if len > 0.0 { (dx / len, dy / len) } else { (1.0, 0.0) };
        self.unproject(ox + ux * distance_m, oy + uy * distance_m)
    }

    pub fn unproject(&self, x: f64, y: f64) -> LonLat {
        LonLat {
            lon: (x / (self.cos_ref * EARTH_RADIUS_M)).to_degrees(),
            lat: (y / EARTH_RADIUS_M).to_degrees(),
        }
    }
}

/// Sign of the cross product (b - a) x (p - a): positive when `p` lies left of a→b.
#[inline]
pub fn orient(a: LonLat, b: LonLat, p: LonLat) -> f64 {
    (b.lon - a.lon) * (p.lat - a.lat) - (p.lon - a.lon) * (b.lat - a.lat)
}

/// True when `p` lies on the closed segment a–b.
#[inline]
pub fn on_segment(a: LonLat, b: LonLat, p: LonLat) -> bool {
    orient(a, b, p) == 0.0
        && p.lon >= a.lon.min(b.lon)
        && p.lon <= a.lon.max(b.lon)
        && p.lat >= a.lat.min(b.lat)
        && p.lat <= a.lat.max(b.lat)
}

/// Boundary-inclusive point-in-ring test by ray casting.
///
/// `ring` must be closed (first vertex repeated at the end). Points on an edge
/// or vertex count as inside.
pub fn ring_contains(ring: &[LonLat], p: LonLat) -> bool {
    let mut inside = false;
    for w in ring.windows(2) {
        let (a, b) = (w[0], w[1]);
        if on_segment(a, b, p) {
            return true;
        }
        // half-open rule on latitude so shared vertices are counted once
        if (a.lat <= p.lat) != (b.lat <= p.lat) {
            let o = orient(a, b, p);
            let crosses = if b.lat > a.lat { o > 0.0 } else { o < 0.0 };
            if crosses {
                inside = !inside;
            }
        }
    }
    inside
}

/// True when segments p1–p2 and q1–q2 share at least one point.
pub fn segments_intersect(p1: LonLat, p2: LonLat, q1: LonLat, q2: LonLat) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    on_segment(q1, q2, p1) || on_segment(q1, q2, p2) || on_segment(p1, p2, q1) || on_segment(p1, p2, q2)
}

/// Checks that a ring is closed, has at least three distinct vertices and
/// does not self-intersect. Repeated consecutive vertices are tolerated.
pub fn validate_ring(ring: &[LonLat]) -> Result<(), String> {
    if ring.iter().any(|p| !p.is_finite()) {
        return Err("non-finite coordinate".into());
    }
    if ring.len() < 2 || ring.first() != ring.last() {
        return Err("ring is not closed (first vertex differs from last)".into());
    }
    let mut verts: Vec<LonLat> = Vec::with_capacity(ring.len());
    for &p in ring {
        if verts.last() != Some(&p) {
            verts.push(p);
        }
    }
    // verts is closed again; drop the repeated closing vertex for counting
    let open = &verts[..verts.len() - 1];
    let mut distinct: Vec<LonLat> = open.to_vec();
    distinct.sort_by(|a, b| a.lon.total_cmp(&b.lon).then(a.lat.total_cmp(&b.lat)));
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(format!("ring has {} distinct vertices, need at least 3", distinct.len()));
    }
    if distinct.len() != open.len() {
        return Err("ring is self-intersecting (repeated vertex)".into());
    }
    let n = open.len();
    for i in 0..n {
        let (a1, a2) = (verts[i], verts[i + 1]);
        for j in (i + 1)..n {
            let (b1, b2) = (verts[j], verts[j + 1]);
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                // neighbours share one vertex; they must not overlap beyond it
                let shared = if j == i + 1 { a2 } else { a1 };
                let (other_a, other_b) = if j == i + 1 { (a1, b2) } else { (a2, b1) };
                if orient(a1, a2, other_b) == 0.0 && orient(b1, b2, other_a) == 0.0 {
                    let back = (other_a.lon - shared.lon) * (other_b.lon - shared.lon)
                        + (other_a.lat - shared.lat) * (other_b.lat - shared.lat);
                    if back > 0.0 {
                        return Err(format!("ring is self-intersecting (edges {i} and {j} overlap)"));
                    }
                }
                continue;
            }
            if segments_intersect(a1, a2, b1, b2) {
                return Err(format!("ring is self-intersecting (edges {i} and {j} cross)"));
            }
        }
    }
    Ok(())
}

/// Signed area (shoelace, degrees²) and area centroid of a closed ring.
/// Falls back to the vertex mean for zero-area rings.
pub fn ring_centroid(ring: &[LonLat]) -> LonLat {
    let mut area2 = 0.0;
    let mut cx = 0.0;
    let mut cy = 0.0;
    let origin = ring[0];
    for w in ring.windows(2) {
        let (ax, ay) = (w[0].lon - origin.lon, w[0].lat - origin.lat);
        let (bx, by) = (w[1].lon - origin.lon, w[1].lat - origin.lat);
        let cross = ax * by - bx * ay;
        area2 += cross;
        cx += (ax + bx) * cross;
        cy += (ay + by) * cross;
    }
    if area2 == 0.0 {
        let n = (ring.len() - 1).max(1) as f64;
        let (sx, sy) = ring[..ring.len() - 1]
            .iter()
            .fold((0.0, 0.0), |(x, y), p| (x + p.lon, y + p.lat));
        return LonLat::new(sx / n, sy / n);
    }
    LonLat::new(origin.lon + cx / (3.0 * area2), origin.lat + cy / (3.0 * area2))
}
