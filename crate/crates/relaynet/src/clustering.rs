//! Goal clustering around shared entry points and exhaustive visit ordering.

use serde::{Deserialize, Serialize};

use crate::connectivity::movement_cost;
use crate::error::{Error, Result};
use crate::gridmap::{GridMap, WorldPoint};

/// Largest waypoint count [`visit_order`] accepts by default.
pub const DEFAULT_CAP: usize = 9;

const TIE_TOLERANCE: f64 = 1e-9;

/// A goal with its index in the list it was drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Member {
    pub index: usize,
    pub point: WorldPoint,
}

/// Waypoints grouped around one destination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    /// Entry point shared by every cluster of the group.
    pub start: WorldPoint,
    pub destination: Member,
    /// Pass-through goals in ascending index order.
    pub waypoints: Vec<Member>,
}

/// Cheapest tour from a cluster's start through its waypoints to its
/// destination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisitSequence {
    /// Start, waypoints in visiting order, destination.
    pub points: Vec<WorldPoint>,
    /// Waypoint indices in visiting order.
    pub order: Vec<usize>,
    pub cost: f64,
}

/// Extra travel for reaching `dest` via `p` instead of directly from `start`.
pub fn deviation(map: &GridMap, start: WorldPoint, p: WorldPoint, dest: WorldPoint) -> Result<f64> {
    Ok(movement_cost(map, start, p)? + movement_cost(map, p, dest)? - movement_cost(map, start, dest)?)
}

/// Assigns every waypoint to the destination with the smallest detour from
/// `start`. Ties go to the lower destination index.
pub fn cluster_goals(
    map: &GridMap,
    start: WorldPoint,
    destinations: &[WorldPoint],
    waypoints: &[WorldPoint],
) -> Result<Vec<Cluster>> {
    if destinations.is_empty() {
        return Err(Error::Scenario("clustering needs at least one destination".into()));
    }
    let direct = destinations
        .iter()
        .map(|&d| movement_cost(map, start, d))
        .collect::<Result<Vec<_>>>()?;
    let mut clusters: Vec<Cluster> = destinations
        .iter()
        .enumerate()
        .map(|(i, &point)| Cluster {
            start,
            destination: Member { index: i, point },
            waypoints: Vec::new(),
        })
        .collect();
    for (pi, &p) in waypoints.iter().enumerate() {
        let to_p = movement_cost(map, start, p)?;
        let mut best = (0, f64::INFINITY);
        for (i, &d) in destinations.iter().enumerate() {
            let dev = to_p + movement_cost(map, p, d)? - direct[i];
            if dev < best.1 - TIE_TOLERANCE {
                best = (i, dev);
            }
        }
        clusters[best.0].waypoints.push(Member { index: pi, point: p });
    }
    Ok(clusters)
}

/// Optimal visiting order by enumerating every permutation of the
/// waypoints in lexicographic order; the first strictly cheaper order wins.
pub fn visit_order(map: &GridMap, cluster: &Cluster, cap: usize) -> Result<VisitSequence> {
    let m = cluster.waypoints.len();
    if m > cap {
        return Err(Error::TooManyWaypoints { count: m, cap });
    }
    // Node 0 is the start, 1..=m the waypoints, m+1 the destination.
    let mut pts = vec![cluster.start];
    pts.extend(cluster.waypoints.iter().map(|w| w.point));
    pts.push(cluster.destination.point);
    let mut cost = vec![vec![0.0; m + 2]; m + 2];
    for a in 0..m + 2 {
        for b in 0..m + 2 {
            if a != b {
                cost[a][b] = movement_cost(map, pts[a], pts[b])?;
            }
        }
    }
    let tour = |perm: &[usize]| {
        let mut prev = 0;
        let mut total = 0.0;
        for &w in perm {
            total += cost[prev][w + 1];
            prev = w + 1;
        }
        total + cost[prev][m + 1]
    };

    let mut perm: Vec<usize> = (0..m).collect();
    let mut best = (perm.clone(), tour(&perm));
    while next_permutation(&mut perm) {
        let c = tour(&perm);
        if c < best.1 - TIE_TOLERANCE * best.1.abs().max(1.0) {
            best = (perm.clone(), c);
        }
    }
    let mut points = vec![cluster.start];
    points.extend(best.0.iter().map(|&w| cluster.waypoints[w].point));
    points.push(cluster.destination.point);
    Ok(VisitSequence {
        points,
        order: best.0.iter().map(|&w| cluster.waypoints[w].index).collect(),
        cost: best.1,
    })
}

fn next_permutation(v: &mut [usize]) -> bool {
    let Some(i) = v.windows(2).rposition(|w| w[0] < w[1]) else {
        return false;
    };
    let j = v.iter().rposition(|&x| x > v[i]).expect("a larger element exists");
    v.swap(i, j);
    v[i + 1..].reverse();
    true
}
