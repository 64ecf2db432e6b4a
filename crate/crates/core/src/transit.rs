//! Bus network loading and minimum-transfer itinerary search.
//!
//! The search walks the station–route bipartite graph one leg at a time,
//! layered by transfer count. Each layer is enumerated completely (pruned by
//! a lower bound on the legs still needed) so ranking within a layer is exact.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::LonLat;

pub const DEFAULT_MAX_TRANSFERS: usize = 2;
pub const DEFAULT_PLAN_LIMIT: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Station {
    pub id: String,
    #[serde(default)]
    pub name: String,
    pub lon: f64,
    pub lat: f64,
}

impl Station {
    pub fn location(&self) -> LonLat {
        LonLat::new(self.lon, self.lat)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BusRoute {
    pub id: String,
    pub stops: Vec<String>,
    #[serde(default)]
    pub one_way: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct NetworkFile {
    stations: Vec<Station>,
    routes: Vec<BusRoute>,
}

/// Validated route network with station → route adjacency.
#[derive(Debug, Clone)]
pub struct BusNetwork {
    stations: Vec<Station>,
    routes: Vec<BusRoute>,
    station_index: HashMap<String, usize>,
    /// Per route, the station index of each stop.
    route_stops: Vec<Vec<usize>>,
    /// Per station, the routes serving it (ascending, deduplicated).
    routes_at: Vec<Vec<usize>>,
}

impl BusNetwork {
    pub fn new(stations: Vec<Station>, routes: Vec<BusRoute>) -> Result<Self> {
        let mut station_index = HashMap::with_capacity(stations.len());
        for (i, s) in stations.iter().enumerate() {
            if station_index.insert(s.id.clone(), i).is_some() {
                return Err(Error::NetworkValidation(format!("duplicate station id `{}`", s.id)));
            }
        }
        let mut route_ids = HashMap::new();
        let mut route_stops = Vec::with_capacity(routes.len());
        let mut routes_at = vec![Vec::new(); stations.len()];
        for (ri, r) in routes.iter().enumerate() {
            if route_ids.insert(r.id.as_str(), ri).is_some() {
                return Err(Error::NetworkValidation(format!("duplicate route id `{}`", r.id)));
            }
            if r.stops.len() < 2 {
                return Err(Error::NetworkValidation(format!("route `{}` has fewer than 2 stops", r.id)));
            }
            let mut idx = Vec::with_capacity(r.stops.len());
            for s in &r.stops {
                let si = *station_index.get(s).ok_or_else(|| {
                    Error::NetworkValidation(format!("route `{}` references unknown station `{s}`", r.id))
                })?;
                if idx.last() == Some(&si) {
                    return Err(Error::NetworkValidation(format!(
                        "route `{}` repeats station `{s}` consecutively",
                        r.id
                    )));
                }
                idx.push(si);
                if routes_at[si].last() != Some(&ri) && !routes_at[si].contains(&ri) {
                    routes_at[si].push(ri);
                }
            }
            route_stops.push(idx);
        }
        Ok(Self { stations, routes, station_index, route_stops, routes_at })
    }

    pub fn stations(&self) -> &[Station] {
        &self.stations
    }

    pub fn routes(&self) -> &[BusRoute] {
        &self.routes
    }

    pub fn station(&self, id: &str) -> Option<&Station> {
        self.station_index.get(id).map(|&i| &self.stations[i])
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(NetworkFile { stations: self.stations.clone(), routes: self.routes.clone() })
            .expect("network serializes")
    }

    /// Stations reachable by riding route `ri` from station `from`, with the
    /// fewest hops over all boarding/alighting positions.
    fn rides(&self, ri: usize, from: usize) -> BTreeMap<usize, usize> {
        let stops = &self.route_stops[ri];
        let one_way = self.routes[ri].one_way;
        let mut out: BTreeMap<usize, usize> = BTreeMap::new();
        for (i, _) in stops.iter().enumerate().filter(|(_, &s)| s == from) {
            for (j, &t) in stops.iter().enumerate() {
                if t == from || (one_way && j < i) {
                    continue;
                }
                let hops = i.abs_diff(j);
                out.entry(t).and_modify(|h| *h = (*h).min(hops)).or_insert(hops);
            }
        }
        out
    }

    /// Lower bound on legs needed from each station to `dest`, up to `max`.
    fn legs_to(&self, dest: usize, max: usize) -> Vec<usize> {
        let mut level = vec![usize::MAX; self.stations.len()];
        level[dest] = 0;
        for d in 0..max {
            let mut changed = false;
            for (ri, stops) in self.route_stops.iter().enumerate() {
                let one_way = self.routes[ri].one_way;
                for (j, &t) in stops.iter().enumerate() {
                    if level[t] != d {
                        continue;
                    }
                    for (i, &s) in stops.iter().enumerate() {
                        if level[s] == usize::MAX && (!one_way || i < j) {
                            level[s] = d + 1;
                            changed = true;
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }
        level
    }
}

pub fn load_network<R: Read>(reader: R) -> Result<BusNetwork> {
    let file: NetworkFile =
        serde_json::from_reader(reader).map_err(|e| Error::Format(format!("network file: {e}")))?;
    BusNetwork::new(file.stations, file.routes)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Leg {
    pub route_id: String,
    pub board: String,
    pub alight: String,
    /// Inter-station hops ridden on this leg.
    pub stops: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransferPlan {
    pub legs: Vec<Leg>,
    pub num_transfers: usize,
    pub total_stops: usize,
}

impl TransferPlan {
    fn new(legs: Vec<Leg>) -> Self {
        let total_stops = legs.iter().map(|l| l.stops).sum();
        Self { num_transfers: legs.len() - 1, total_stops, legs }
    }

    /// Ranking order: transfers, ridden stops, route ids, then boarding
    /// stations as the final tie-break.
    pub fn rank_cmp(&self, other: &Self) -> Ordering {
        self.num_transfers
            .cmp(&other.num_transfers)
            .then(self.total_stops.cmp(&other.total_stops))
            .then_with(|| self.legs.iter().map(|l| &l.route_id).cmp(other.legs.iter().map(|l| &l.route_id)))
            .then_with(|| {
                self.legs
                    .iter()
                    .map(|l| (&l.board, &l.alight))
                    .cmp(other.legs.iter().map(|l| (&l.board, &l.alight)))
            })
    }
}

/// Up to [`DEFAULT_PLAN_LIMIT`] best plans with at most `max_transfers` transfers.
pub fn find_plans(net: &BusNetwork, origin: &str, dest: &str, max_transfers: usize) -> Result<Vec<TransferPlan>> {
    find_plans_limited(net, origin, dest, max_transfers, DEFAULT_PLAN_LIMIT)
}

/// The first `limit` plans of the full ranking of simple itineraries with at
/// most `max_transfers` transfers. A plan is simple when its boarding,
/// transfer and alighting stations are pairwise distinct and no route is
/// ridden twice.
pub fn find_plans_limited(
    net: &BusNetwork,
    origin: &str,
    dest: &str,
    max_transfers: usize,
    limit: usize,
) -> Result<Vec<TransferPlan>> {
    let o = *net.station_index.get(origin).ok_or_else(|| Error::UnknownStation(origin.to_string()))?;
    let d = *net.station_index.get(dest).ok_or_else(|| Error::UnknownStation(dest.to_string()))?;
    if o == d {
        return Err(Error::Argument("origin and destination are the same station".into()));
    }
    let max_legs = max_transfers + 1;
    let bound = net.legs_to(d, max_legs);
    let mut plans = Vec::new();
    for legs in 1..=max_legs {
        if bound[o] > legs {
            continue;
        }
        let mut layer = Vec::new();
        let mut search = LayerSearch {
            net,
            dest: d,
            legs,
            bound: &bound,
            path: Vec::new(),
            stations: vec![o],
            routes: Vec::new(),
            out: &mut layer,
        };
        search.extend(o);
        layer.sort_by(TransferPlan::rank_cmp);
        let room = limit - plans.len().min(limit);
        plans.extend(layer.into_iter().take(room));
        if plans.len() >= limit {
            break;
        }
    }
    Ok(plans)
}

struct LayerSearch<'a> {
    net: &'a BusNetwork,
    dest: usize,
    legs: usize,
    bound: &'a [usize],
    path: Vec<(usize, usize, usize, usize)>,
    stations: Vec<usize>,
    routes: Vec<usize>,
    out: &'a mut Vec<TransferPlan>,
}

impl LayerSearch<'_> {
    fn extend(&mut self, at: usize) {
        let remaining = self.legs - self.path.len();
        for &ri in &self.net.routes_at[at] {
            if self.routes.contains(&ri) {
                continue;
            }
            for (t, hops) in self.net.rides(ri, at) {
                if self.stations.contains(&t) {
                    continue;
                }
                if remaining == 1 {
                    if t == self.dest {
                        self.path.push((ri, at, t, hops));
                        self.emit();
                        self.path.pop();
                    }
                    continue;
                }
                if t == self.dest || self.bound[t] > remaining - 1 {
                    continue;
                }
                self.path.push((ri, at, t, hops));
                self.stations.push(t);
                self.routes.push(ri);
                self.extend(t);
                self.routes.pop();
                self.stations.pop();
                self.path.pop();
            }
        }
    }

    fn emit(&mut self) {
        let net = self.net;
        let legs = self
            .path
            .iter()
            .map(|&(ri, b, a, hops)| Leg {
                route_id: net.routes[ri].id.clone(),
                board: net.stations[b].id.clone(),
                alight: net.stations[a].id.clone(),
                stops: hops,
            })
            .collect();
        self.out.push(TransferPlan::new(legs));
    }
}
