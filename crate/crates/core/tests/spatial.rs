use hubflow_core::geo::LonLat;
use hubflow_core::zones::{build_index, load_zones, locate, TrafficZone, ZoneId, ZoneSet};
use proptest::prelude::*;

/// Winding number of `ring` around `p`, with explicit boundary detection.
fn winding_contains(ring: &[LonLat], p: LonLat) -> bool {
    let mut wn = 0i32;
    for w in ring.windows(2) {
        let (a, b) = (w[0], w[1]);
        let cross = (a.lon - p.lon) * (b.lat - p.lat) - (b.lon - p.lon) * (a.lat - p.lat);
        let within = p.lon >= a.lon.min(b.lon)
            && p.lon <= a.lon.max(b.lon)
            && p.lat >= a.lat.min(b.lat)
            && p.lat <= a.lat.max(b.lat);
        if cross == 0.0 && within {
            return true;
        }
        if a.lat <= p.lat {
            if b.lat > p.lat && cross > 0.0 {
                wn += 1;
            }
        } else if b.lat <= p.lat && cross < 0.0 {
            wn -= 1;
        }
    }
    wn != 0
}

fn brute_force(zones: &[TrafficZone], p: LonLat) -> Option<ZoneId> {
    zones.iter().filter(|z| winding_contains(&z.ring, p)).map(|z| z.zone_id).min()
}

/// Star-shaped polygon: increasing angles with gaps below pi.
fn star(cx: f64, cy: f64, radii: &[f64], jitter: &[f64]) -> Vec<LonLat> {
    let n = radii.len();
    let mut ring: Vec<LonLat> = (0..n)
        .map(|i| {
            let a = std::f64::consts::TAU * (i as f64 + jitter[i] * 0.5) / n as f64;
            LonLat::new(cx + radii[i] * a.cos(), cy + radii[i] * a.sin())
        })
        .collect();
    ring.push(ring[0]);
    ring
}

fn zone_set_strategy() -> impl Strategy<Value = Vec<TrafficZone>> {
    let poly = (
        113.8..114.4f64,
        22.4..22.7f64,
        prop::collection::vec((0.005..0.08f64, 0.0..1.0f64), 3..10),
        1u32..10_000,
    );
    prop::collection::vec(poly, 1..12).prop_map(|polys| {
        let mut seen = std::collections::BTreeSet::new();
        polys
            .into_iter()
            .filter(|p| seen.insert(p.3))
            .map(|(cx, cy, rv, id)| {
                let (radii, jitter): (Vec<f64>, Vec<f64>) = rv.into_iter().unzip();
                TrafficZone { zone_id: ZoneId(id), name: String::new(), district: String::new(), ring: star(cx, cy, &radii, &jitter) }
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn index_matches_brute_force(
        zones in zone_set_strategy(),
        points in prop::collection::vec((113.7..114.5f64, 22.3..22.8f64), 50),
    ) {
        let set = ZoneSet::new(zones.clone()).unwrap();
        let index = build_index(&set);
        let vertices = zones.iter().flat_map(|z| z.ring.iter().copied());
        for p in points.into_iter().map(|(x, y)| LonLat::new(x, y)).chain(vertices) {
            prop_assert_eq!(locate(&index, p), brute_force(&zones, p), "point {:?}", p);
            prop_assert_eq!(set.locate_linear(p), brute_force(&zones, p));
        }
    }

    #[test]
    fn geojson_round_trip(zones in zone_set_strategy()) {
        let set = ZoneSet::new(zones).unwrap();
        let text = set.to_geojson().to_string();
        let back = load_zones(text.as_bytes()).unwrap();
        prop_assert_eq!(back.zones(), set.zones());
    }
}

#[test]
fn shared_edges_go_to_lowest_id() {
    let square = |x0: f64, id: u32| TrafficZone {
        zone_id: ZoneId(id),
        name: String::new(),
        district: String::new(),
        ring: vec![
            LonLat::new(x0, 0.0),
            LonLat::new(x0 + 1.0, 0.0),
            LonLat::new(x0 + 1.0, 1.0),
            LonLat::new(x0, 1.0),
            LonLat::new(x0, 0.0),
        ],
    };
    let set = ZoneSet::new(vec![square(1.0, 9), square(0.0, 4)]).unwrap();
    let index = build_index(&set);
    assert_eq!(locate(&index, LonLat::new(1.0, 0.5)), Some(ZoneId(4)));
    assert_eq!(locate(&index, LonLat::new(1.5, 0.5)), Some(ZoneId(9)));
    assert_eq!(locate(&index, LonLat::new(2.5, 0.5)), None);
}
