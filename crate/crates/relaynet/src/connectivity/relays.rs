use std::collections::{HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gridmap::{CellIndex, GridMap, WorldPoint};
use crate::radio::{LinkModel, RadioParams};

use super::{hungarian_assign, movement_cost, ConnTree};

/// A relay post chosen by synthesis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelayPosition {
    pub position: WorldPoint,
    /// Goals (indices into the goal list) this relay connected when it was
    /// committed.
    pub covers: Vec<usize>,
    /// Index into the free robots that fills this post.
    pub robot: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelayPlan {
    pub relays: Vec<RelayPosition>,
}

impl RelayPlan {
    pub fn is_empty(&self) -> bool {
        self.relays.is_empty()
    }

    pub fn len(&self) -> usize {
        self.relays.len()
    }
}

/// Greedy relay placement for the goals of `tree`.
///
/// `positions` are the tree's nodes: the base station first, then the goals,
/// all assumed occupied. Candidates lie on a lattice of `stride` cells
/// inside the coverage of the connected nodes. Each round commits the
/// candidate that connects the most unreachable goals, then reduces the
/// depth of the most goals, then is cheapest to reach from a free robot.
/// When no candidate improves either count while goals are still
/// unreachable, the candidate closest (in movement cost) to an unreachable
/// goal is committed if it gets closer than any connected node. At most one
/// relay per free robot is placed; robots are then matched to relays.
pub fn plan_relays(
    map: &GridMap,
    positions: &[WorldPoint],
    tree: &ConnTree,
    free_robots: &[WorldPoint],
    params: &RadioParams,
    stride: usize,
) -> Result<RelayPlan> {
    if positions.len() != tree.len() {
        return Err(Error::Scenario(format!(
            "tree has {} nodes but {} positions were given",
            tree.len(),
            positions.len()
        )));
    }
    let nodes = positions
        .iter()
        .map(|&p| map.free_cell(p))
        .collect::<Result<Vec<_>>>()?;
    for &p in free_robots {
        map.to_cell(p)?;
    }
    let links = LinkModel::new(map, params);
    let problem = RelayProblem {
        links: &links,
        transmitters: vec![true; nodes.len()],
        targets: (1..nodes.len()).collect(),
        nodes,
        sources: free_robots.to_vec(),
        stride,
        max_relays: free_robots.len(),
    };
    let synthesis = synthesize(&problem);
    if !synthesis.uncovered.is_empty() {
        return Err(Error::DisconnectedGoals {
            goals: synthesis.uncovered.iter().map(|&n| n - 1).collect(),
        });
    }

    let mut relays: Vec<RelayPosition> = synthesis
        .relays
        .iter()
        .map(|r| RelayPosition {
            position: map.to_world(r.cell),
            covers: r.covers.iter().map(|&n| n - 1).collect(),
            robot: None,
        })
        .collect();
    if !relays.is_empty() {
        let costs = free_robots
            .iter()
            .map(|&f| relays.iter().map(|r| movement_cost(map, f, r.position)).collect())
            .collect::<Result<Vec<Vec<f64>>>>()?;
        let assignment = hungarian_assign(&costs)?;
        for (robot, task) in assignment.pairs() {
            relays[task].robot = Some(robot);
        }
    }
    Ok(RelayPlan { relays })
}

/// Input to greedy relay synthesis over a fixed node set.
pub(crate) struct RelayProblem<'a> {
    pub links: &'a LinkModel<'a>,
    /// Node 0 is the root.
    pub nodes: Vec<CellIndex>,
    /// Nodes whose coverage may host candidates.
    pub transmitters: Vec<bool>,
    /// Nodes whose reachability and depth are scored.
    pub targets: Vec<usize>,
    /// Where relay robots would come from; breaks ties by travel cost.
    pub sources: Vec<WorldPoint>,
    pub stride: usize,
    pub max_relays: usize,
}

pub(crate) struct SynthRelay {
    pub cell: CellIndex,
    /// Target nodes that became reachable with this relay.
    pub covers: Vec<usize>,
}

pub(crate) struct Synthesis {
    pub relays: Vec<SynthRelay>,
    /// Target nodes still unreachable.
    pub uncovered: Vec<usize>,
}

/// Lexicographic candidate score: newly connected targets, targets with a
/// shorter hop count, then cheapness of reaching the post.
#[derive(Clone, Copy, PartialEq, PartialOrd)]
struct Score {
    connected: usize,
    shortened: usize,
    neg_cost: f64,
}

pub(crate) fn synthesize(problem: &RelayProblem) -> Synthesis {
    let links = problem.links;
    let map = links.map();
    let mut nodes = problem.nodes.clone();
    let mut transmitters = problem.transmitters.clone();
    let mut relays: Vec<SynthRelay> = Vec::new();
    let occupied: HashSet<CellIndex> = nodes.iter().copied().collect();
    let mut taken = occupied.clone();
    let stride = problem.stride.max(1);

    let lattice: Vec<CellIndex> = (0..map.height())
        .step_by(stride)
        .flat_map(|row| (0..map.width()).step_by(stride).map(move |col| CellIndex::new(col, row)))
        .filter(|&c| map.is_free(c))
        .collect();

    while relays.len() < problem.max_relays {
        let n = nodes.len();
        let adjacency: Vec<Vec<usize>> = (0..n)
            .map(|a| (0..n).filter(|&b| b != a && links.linked(nodes[a], nodes[b])).collect())
            .collect();
        let depth = bfs(&adjacency);
        let unreachable: Vec<usize> = problem.targets.iter().copied().filter(|&t| depth[t].is_none()).collect();
        // Hosts must reach the root through transmitters alone; other nodes
        // may never be occupied.
        let through_tx: Vec<Vec<usize>> = (0..n)
            .map(|a| {
                if transmitters[a] {
                    adjacency[a].iter().copied().filter(|&b| transmitters[b]).collect()
                } else {
                    Vec::new()
                }
            })
            .collect();
        let tx_depth = bfs(&through_tx);
        let hosts: Vec<usize> = (0..n).filter(|&i| transmitters[i] && tx_depth[i].is_some()).collect();

        let mut best: Option<(Score, CellIndex, Vec<usize>)> = None;
        for &cand in &lattice {
            if taken.contains(&cand) || !hosts.iter().any(|&h| links.linked(nodes[h], cand)) {
                continue;
            }
            let linked_to: Vec<usize> = (0..n).filter(|&i| links.linked(nodes[i], cand)).collect();
            let improved = with_node(&adjacency, &depth, &linked_to);
            let mut newly = Vec::new();
            let mut shortened = 0;
            for &t in &problem.targets {
                match (depth[t], improved[t]) {
                    (None, Some(_)) => newly.push(t),
                    (Some(a), Some(b)) if b < a => shortened += 1,
                    _ => {}
                }
            }
            if newly.is_empty() && shortened == 0 {
                continue;
            }
            let score = Score {
                connected: newly.len(),
                shortened,
                neg_cost: -min_cost(map, &problem.sources, map.to_world(cand)),
            };
            if best.as_ref().is_none_or(|(b, _, _)| score > *b) {
                best = Some((score, cand, newly));
            }
        }

        let commit = match best {
            Some((_, cell, newly)) => Some((cell, newly)),
            None if !unreachable.is_empty() => frontier_step(problem, &nodes, &hosts, &lattice, &taken, &unreachable)
                .map(|cell| (cell, Vec::new())),
            None => None,
        };
        let Some((cell, covers)) = commit else {
            break;
        };
        taken.insert(cell);
        nodes.push(cell);
        transmitters.push(true);
        relays.push(SynthRelay { cell, covers });
    }

    let n = nodes.len();
    let adjacency: Vec<Vec<usize>> = (0..n)
        .map(|a| (0..n).filter(|&b| b != a && links.linked(nodes[a], nodes[b])).collect())
        .collect();
    let depth = bfs(&adjacency);
    let uncovered = problem.targets.iter().copied().filter(|&t| depth[t].is_none()).collect();
    Synthesis { relays, uncovered }
}

/// Candidate that gets closest to an unreachable target, if it beats every
/// connected host.
fn frontier_step(
    problem: &RelayProblem,
    nodes: &[CellIndex],
    hosts: &[usize],
    lattice: &[CellIndex],
    taken: &HashSet<CellIndex>,
    unreachable: &[usize],
) -> Option<CellIndex> {
    let links = problem.links;
    let map = links.map();
    let gap = |c: CellIndex| {
        unreachable
            .iter()
            .map(|&t| movement_cost(map, map.to_world(c), map.to_world(nodes[t])).expect("cells in bounds"))
            .fold(f64::INFINITY, f64::min)
    };
    let current = hosts.iter().map(|&h| gap(nodes[h])).fold(f64::INFINITY, f64::min);
    let mut best: Option<(f64, CellIndex)> = None;
    for &cand in lattice {
        if taken.contains(&cand) || !hosts.iter().any(|&h| links.linked(nodes[h], cand)) {
            continue;
        }
        let g = gap(cand);
        if g < current - 1e-9 && best.is_none_or(|(b, _)| g < b) {
            best = Some((g, cand));
        }
    }
    best.map(|(_, c)| c)
}

fn min_cost(map: &GridMap, sources: &[WorldPoint], to: WorldPoint) -> f64 {
    sources
        .iter()
        .map(|&s| movement_cost(map, s, to).expect("points in bounds"))
        .fold(f64::INFINITY, f64::min)
        .min(f64::MAX)
}

fn bfs(adjacency: &[Vec<usize>]) -> Vec<Option<usize>> {
    let mut depth = vec![None; adjacency.len()];
    if adjacency.is_empty() {
        return depth;
    }
    depth[0] = Some(0);
    let mut queue = VecDeque::from([0]);
    while let Some(u) = queue.pop_front() {
        let du = depth[u].expect("queued");
        for &v in &adjacency[u] {
            if depth[v].is_none() {
                depth[v] = Some(du + 1);
                queue.push_back(v);
            }
        }
    }
    depth
}

/// Hop counts after adding one node linked to `linked_to`. Depths only
/// shrink, so a relaxation outward from the new node suffices.
fn with_node(adjacency: &[Vec<usize>], depth: &[Option<usize>], linked_to: &[usize]) -> Vec<Option<usize>> {
    let mut out = depth.to_vec();
    let Some(own) = linked_to.iter().filter_map(|&i| depth[i]).min().map(|d| d + 1) else {
        return out;
    };
    let mut queue = VecDeque::new();
    for &v in linked_to {
        if out[v].is_none_or(|d| d > own + 1) {
            out[v] = Some(own + 1);
            queue.push_back(v);
        }
    }
    while let Some(u) = queue.pop_front() {
        let du = out[u].expect("queued");
        for &v in &adjacency[u] {
            if out[v].is_none_or(|d| d > du + 1) {
                out[v] = Some(du + 1);
                queue.push_back(v);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connectivity::{build_conn_graph, min_hop_tree};
    use crate::gridmap::GridMap;

    fn short_range() -> RadioParams {
        // 10 m line-of-sight range.
        RadioParams {
            gamma: -47.0,
            ..RadioParams::default()
        }
    }

    #[test]
    fn nothing_to_do_when_all_goals_are_adjacent() {
        let map = GridMap::open(20, 20, 0.5).unwrap();
        let params = short_range();
        let pts = [
            WorldPoint::new(0.25, 0.25),
            WorldPoint::new(3.25, 0.25),
            WorldPoint::new(0.25, 3.25),
        ];
        let tree = min_hop_tree(&build_conn_graph(&map, &pts, &params).unwrap());
        let plan = plan_relays(&map, &pts, &tree, &[pts[1], pts[2]], &params, 2).unwrap();
        assert!(plan.is_empty());
    }

    #[test]
    fn relay_bridges_a_gap() {
        let map = GridMap::open(60, 2, 0.5).unwrap();
        let params = short_range();
        let bs = map.to_world(CellIndex::new(0, 0));
        let goal = map.to_world(CellIndex::new(30, 0));
        let pts = [bs, goal];
        let tree = min_hop_tree(&build_conn_graph(&map, &pts, &params).unwrap());
        assert!(!tree.is_reachable(1));
        let plan = plan_relays(&map, &pts, &tree, &[bs], &params, 2).unwrap();
        assert_eq!(plan.len(), 1);
        assert_eq!(plan.relays[0].covers, vec![0]);
        assert_eq!(plan.relays[0].robot, Some(0));
    }

    #[test]
    fn too_few_robots_reports_goals() {
        let map = GridMap::open(100, 1, 0.5).unwrap();
        let params = short_range();
        let pts = [map.to_world(CellIndex::new(0, 0)), map.to_world(CellIndex::new(90, 0))];
        let tree = min_hop_tree(&build_conn_graph(&map, &pts, &params).unwrap());
        let r = plan_relays(&map, &pts, &tree, &[pts[0]], &params, 2);
        assert!(matches!(r, Err(Error::DisconnectedGoals { goals }) if goals == vec![0]));
    }
}
