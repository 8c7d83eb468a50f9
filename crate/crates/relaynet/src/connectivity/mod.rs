//! Connectivity graphs, min-hop trees, relay synthesis, allocation and the
//! feasibility test.

mod hungarian;
mod relays;

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::eikonal::{base_velocity, solve_eikonal};
use crate::error::{Error, Result};
use crate::gridmap::{GridMap, WorldPoint};
use crate::radio::{coverage_distance, received_power, Fading, RadioParams};

pub use hungarian::{hungarian_assign, Assignment};
pub use relays::{plan_relays, RelayPlan, RelayPosition};
pub(crate) use relays::{synthesize, RelayProblem};

/// Undirected graph of mutual radio links. Node 0 is the base station.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConnGraph {
    adjacency: Vec<Vec<usize>>,
}

impl ConnGraph {
    /// Graph from an explicit edge list. Self loops are ignored.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut adjacency = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a != b && !adjacency[a].contains(&b) {
                adjacency[a].push(b);
                adjacency[b].push(a);
            }
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        ConnGraph { adjacency }
    }

    /// Graph whose edges are given by a symmetric predicate.
    pub fn from_fn(n: usize, mut linked: impl FnMut(usize, usize) -> bool) -> Self {
        let mut adjacency = vec![Vec::new(); n];
        for a in 0..n {
            for b in a + 1..n {
                if linked(a, b) {
                    adjacency[a].push(b);
                    adjacency[b].push(a);
                }
            }
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        ConnGraph { adjacency }
    }

    pub fn len(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.adjacency[node]
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adjacency[a].binary_search(&b).is_ok()
    }

    /// Edges as `(low, high)` pairs in ascending order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(a, list)| list.iter().filter(move |&&b| b > a).map(move |&b| (a, b)))
            .collect()
    }
}

/// Connectivity graph over `positions`, where index 0 is the base station.
///
/// An edge requires the deterministic signal to meet the threshold in both
/// directions.
pub fn build_conn_graph(map: &GridMap, positions: &[WorldPoint], params: &RadioParams) -> Result<ConnGraph> {
    for &p in positions {
        map.free_cell(p)?;
    }
    let rss = |a: WorldPoint, b: WorldPoint| {
        received_power(map, a, b, params, Fading::Deterministic).expect("positions checked in bounds")
    };
    Ok(ConnGraph::from_fn(positions.len(), |a, b| {
        let (pa, pb) = (positions[a], positions[b]);
        rss(pa, pb) >= params.gamma && rss(pb, pa) >= params.gamma
    }))
}

/// Breadth-first tree from node 0.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConnTree {
    pub parent: Vec<Option<usize>>,
    /// Hop count from the root; `None` for unreachable nodes.
    pub depth: Vec<Option<usize>>,
}

impl ConnTree {
    pub fn len(&self) -> usize {
        self.depth.len()
    }

    pub fn is_empty(&self) -> bool {
        self.depth.is_empty()
    }

    pub fn is_reachable(&self, node: usize) -> bool {
        self.depth[node].is_some()
    }

    pub fn unreachable(&self) -> Vec<usize> {
        (0..self.len()).filter(|&n| !self.is_reachable(n)).collect()
    }

    pub fn max_depth(&self) -> Option<usize> {
        self.depth.iter().flatten().copied().max()
    }

    /// Nodes strictly between `node` and the root, nearest first. Empty for
    /// the root, its children and unreachable nodes.
    pub fn relays_of(&self, node: usize) -> Vec<usize> {
        let mut out = Vec::new();
        if !self.is_reachable(node) {
            return out;
        }
        let mut cur = self.parent[node];
        while let Some(p) = cur {
            if p == 0 {
                break;
            }
            out.push(p);
            cur = self.parent[p];
        }
        out
    }
}

/// Min-hop tree rooted at node 0. Among equally deep candidate parents the
/// lowest index wins.
pub fn min_hop_tree(graph: &ConnGraph) -> ConnTree {
    let n = graph.len();
    let mut depth = vec![None; n];
    let mut parent = vec![None; n];
    if n == 0 {
        return ConnTree { parent, depth };
    }
    depth[0] = Some(0);
    let mut queue = VecDeque::from([0]);
    while let Some(u) = queue.pop_front() {
        let du = depth[u].expect("queued nodes have a depth");
        for &v in graph.neighbors(u) {
            if depth[v].is_none() {
                depth[v] = Some(du + 1);
                queue.push_back(v);
            }
        }
    }
    for v in 1..n {
        if let Some(dv) = depth[v] {
            parent[v] = graph
                .neighbors(v)
                .iter()
                .copied()
                .find(|&u| depth[u] == Some(dv - 1));
        }
    }
    ConnTree { parent, depth }
}

/// Straight-segment travel cost `d · (1 + n_o)`, where `n_o` counts the wall
/// and glass runs crossed.
pub fn movement_cost(map: &GridMap, a: WorldPoint, b: WorldPoint) -> Result<f64> {
    let crossings = map.count_traversals(a, b)?;
    Ok(a.distance(b) * (1 + crossings.total()) as f64)
}

/// Outcome of the robot-chain feasibility test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    /// Obstacle-avoiding distance to the farthest goal over `d_cov`.
    pub ratio: f64,
    pub n_robots: usize,
    pub d_cov: f64,
    pub farthest_goal: usize,
    pub path_distance: f64,
}

/// Tests whether a chain of `n_robots` spaced at most `d_cov` apart can
/// reach the goal farthest from the base station along free space.
pub fn check_feasibility(
    map: &GridMap,
    bs: WorldPoint,
    goals: &[WorldPoint],
    n_robots: usize,
    params: &RadioParams,
) -> Result<FeasibilityReport> {
    if goals.is_empty() {
        return Err(Error::Scenario("no goals to test".into()));
    }
    let d_cov = coverage_distance(params)?;
    let source = map.free_cell(bs)?;
    let field = solve_eikonal(&base_velocity(map), source)?;
    let mut farthest = (0, f64::NEG_INFINITY);
    for (i, &g) in goals.iter().enumerate() {
        let cell = map.free_cell(g)?;
        let d = field.value(cell);
        if !d.is_finite() {
            return Err(Error::Unreachable {
                col: cell.col,
                row: cell.row,
            });
        }
        if d > farthest.1 {
            farthest = (i, d);
        }
    }
    let ratio = farthest.1 / d_cov;
    Ok(FeasibilityReport {
        feasible: ratio <= n_robots as f64,
        ratio,
        n_robots,
        d_cov,
        farthest_goal: farthest.0,
        path_distance: farthest.1,
    })
}
