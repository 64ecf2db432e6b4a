use std::collections::BTreeMap;

use hubflow_core::transit::{find_plans, find_plans_limited, BusNetwork, BusRoute, Station, TransferPlan};
use proptest::prelude::*;

type Key = Vec<(String, String, String)>;

/// Every simple plan of up to `max_legs` legs, found by unpruned depth-first
/// enumeration over all (route, board position, alight position) choices.
fn exhaustive(net: &BusNetwork, origin: &str, dest: &str, max_legs: usize) -> BTreeMap<Key, usize> {
    #[allow(clippy::too_many_arguments)]
    fn walk(
        net: &BusNetwork,
        at: &str,
        dest: &str,
        left: usize,
        visited: &mut Vec<String>,
        routes: &mut Vec<String>,
        legs: &mut Vec<(String, String, String, usize)>,
        out: &mut BTreeMap<Key, usize>,
    ) {
        if left == 0 {
            return;
        }
        for r in net.routes() {
            if routes.contains(&r.id) {
                continue;
            }
            for (i, s) in r.stops.iter().enumerate() {
                if s != at {
                    continue;
                }
                for (j, t) in r.stops.iter().enumerate() {
                    if i == j || (r.one_way && j < i) || t == at || visited.contains(t) {
                        continue;
                    }
                    let hops = i.abs_diff(j);
                    legs.push((r.id.clone(), at.to_string(), t.clone(), hops));
                    if t == dest {
                        // the same board/alight pair can occur at several
                        // positions; the plan keeps the shortest ride
                        let key: Key = legs.iter().map(|l| (l.0.clone(), l.1.clone(), l.2.clone())).collect();
                        let total: usize = legs.iter().map(|l| l.3).sum();
                        out.entry(key).and_modify(|v| *v = (*v).min(total)).or_insert(total);
                    } else {
                        visited.push(t.clone());
                        routes.push(r.id.clone());
                        walk(net, t, dest, left - 1, visited, routes, legs, out);
                        routes.pop();
                        visited.pop();
                    }
                    legs.pop();
                }
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(net, origin, dest, max_legs, &mut vec![origin.to_string()], &mut Vec::new(), &mut Vec::new(), &mut out);
    out
}

fn network() -> impl Strategy<Value = BusNetwork> {
    (3usize..12).prop_flat_map(|n| {
        prop::collection::vec((prop::collection::vec(0..n, 2..15), prop::bool::weighted(0.3)), 0..10).prop_map(
            move |routes| {
                let stations = (1..=n)
                    .map(|i| Station { id: format!("S{i}"), name: String::new(), lon: 114.0, lat: 22.5 })
                    .collect();
                let routes = routes
                    .into_iter()
                    .filter_map(|(mut stops, one_way)| {
                        stops.dedup();
                        (stops.len() >= 2).then_some(stops)
                            .map(|s| (s, one_way))
                    })
                    .enumerate()
                    .map(|(k, (stops, one_way))| BusRoute {
                        id: format!("R{}", k + 1),
                        stops: stops.into_iter().map(|s| format!("S{}", s + 1)).collect(),
                        one_way,
                    })
                    .collect();
                BusNetwork::new(stations, routes).unwrap()
            },
        )
    })
}

fn check_chaining(net: &BusNetwork, plan: &TransferPlan, origin: &str, dest: &str) -> Result<(), TestCaseError> {
    prop_assert_eq!(&plan.legs[0].board, origin);
    prop_assert_eq!(&plan.legs.last().unwrap().alight, dest);
    prop_assert_eq!(plan.num_transfers, plan.legs.len() - 1);
    prop_assert_eq!(plan.total_stops, plan.legs.iter().map(|l| l.stops).sum::<usize>());
    for w in plan.legs.windows(2) {
        prop_assert_eq!(&w[0].alight, &w[1].board);
    }
    let mut boundary: Vec<&String> = plan.legs.iter().map(|l| &l.board).collect();
    boundary.push(&plan.legs.last().unwrap().alight);
    let mut dedup = boundary.clone();
    dedup.sort();
    dedup.dedup();
    prop_assert_eq!(dedup.len(), boundary.len());
    let mut routes: Vec<&String> = plan.legs.iter().map(|l| &l.route_id).collect();
    routes.sort();
    routes.dedup();
    prop_assert_eq!(routes.len(), plan.legs.len());
    for l in &plan.legs {
        let r = net.routes().iter().find(|r| r.id == l.route_id).unwrap();
        prop_assert!(l.stops >= 1);
        prop_assert!(r.stops.contains(&l.board) && r.stops.contains(&l.alight));
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn search_matches_exhaustive_enumeration(net in network(), a in 0usize..12, b in 0usize..12, max_t in 0usize..3) {
        let n = net.stations().len();
        let (o, d) = (format!("S{}", a % n + 1), format!("S{}", b % n + 1));
        prop_assume!(o != d);
        let all = find_plans_limited(&net, &o, &d, max_t, usize::MAX).unwrap();
        let oracle = exhaustive(&net, &o, &d, max_t + 1);
        prop_assert_eq!(all.len(), oracle.len());
        for p in &all {
            check_chaining(&net, p, &o, &d)?;
            let key: Key = p.legs.iter().map(|l| (l.route_id.clone(), l.board.clone(), l.alight.clone())).collect();
            prop_assert_eq!(oracle.get(&key), Some(&p.total_stops));
        }
        for w in all.windows(2) {
            prop_assert_eq!(w[0].rank_cmp(&w[1]), std::cmp::Ordering::Less);
        }
        let top = find_plans(&net, &o, &d, max_t).unwrap();
        prop_assert_eq!(&top[..], &all[..all.len().min(10)]);
        let min_transfers = oracle.keys().map(|k| k.len() - 1).min();
        prop_assert_eq!(top.first().map(|p| p.num_transfers), min_transfers);
    }
}
