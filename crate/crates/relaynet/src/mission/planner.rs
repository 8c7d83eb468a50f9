use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::clustering::{cluster_goals, visit_order, Cluster, VisitSequence};
use crate::connectivity::{
    check_feasibility, hungarian_assign, min_hop_tree, movement_cost, synthesize, ConnGraph, RelayProblem,
};
use crate::eikonal::{plan_on_coverage, Path};
use crate::error::{Error, Result};
use crate::gridmap::{CellIndex, GridMap, WorldPoint};
use crate::radio::LinkModel;

use super::{DeploymentPlan, Mode, PlannedRelay, Purpose, RobotPlan, Scenario, Segment, WaveRecord};

/// Mission state handed to [`replan`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReplanInput {
    pub reached_goals: BTreeSet<usize>,
    /// Current robot positions; empty means the scenario's starts.
    pub robot_positions: Vec<WorldPoint>,
    /// Robots that stay where they are as relays.
    pub held_posts: Vec<HeldPost>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeldPost {
    pub robot: usize,
    pub position: WorldPoint,
}

/// Plans a deployment in the given mode.
///
/// - FMM: robots are matched to goals by straight-line movement cost and
///   follow shortest paths.
/// - CA-FMM: same matching; goals are planned in min-hop order and each path
///   is biased into the coverage of the base station and the goals planned
///   before it.
/// - DP-FMM: goals are released in waves of those adjacent to the posts
///   already held. Each robot waits for the posts its goal depends on,
///   visits its goal and may then move on to a synthesized relay post.
/// - DPA-FMM: as DP-FMM, but each wave keeps only the goals and relays the
///   remaining goals need as posts; the other goals become waypoints
///   clustered around their link post and visited in optimal order, so
///   fewer robots are deployed.
pub fn plan_deployment(scenario: &Scenario, mode: Mode) -> Result<DeploymentPlan> {
    scenario.validate()?;
    let setup = Setup::new(scenario, &scenario.robot_starts)?;
    match mode {
        Mode::Fmm | Mode::CaFmm => plan_direct(&setup, mode),
        Mode::DpFmm => plan_dp(&setup),
        Mode::DpaFmm => plan_dpa(&setup, &(0..scenario.goals.len()).collect::<Vec<_>>(), &[]),
    }
}

/// Replans the unreached goals in DPA-FMM mode from the robots' current
/// positions. Robots holding posts keep them and are not reassigned.
pub fn replan(scenario: &Scenario, input: &ReplanInput) -> Result<DeploymentPlan> {
    scenario.validate_map_points()?;
    let positions = if input.robot_positions.is_empty() {
        scenario.robot_starts.clone()
    } else {
        input.robot_positions.clone()
    };
    if positions.len() != scenario.robot_starts.len() {
        return Err(Error::Scenario(format!(
            "{} robot positions given for {} robots",
            positions.len(),
            scenario.robot_starts.len()
        )));
    }
    if let Some(&g) = input.reached_goals.iter().find(|&&g| g >= scenario.goals.len()) {
        return Err(Error::Scenario(format!("reached goal {g} does not exist")));
    }
    let setup = Setup::new(scenario, &positions)?;
    let pending: Vec<usize> = (0..scenario.goals.len())
        .filter(|g| !input.reached_goals.contains(g))
        .collect();
    let held = input
        .held_posts
        .iter()
        .map(|h| Ok((h.robot, nearest_free(&scenario.map, h.position)?)))
        .collect::<Result<Vec<_>>>()?;
    plan_dpa(&setup, &pending, &held)
}

impl Scenario {
    fn validate_map_points(&self) -> Result<()> {
        self.radio.validate()?;
        self.map.free_cell(self.bs)?;
        for &g in &self.goals {
            self.map.free_cell(g)?;
        }
        Ok(())
    }
}

/// Free cell containing `p`, or the closest free cell by breadth-first
/// search when `p` now lies on an obstacle.
fn nearest_free(map: &GridMap, p: WorldPoint) -> Result<CellIndex> {
    let start = map.to_cell(p)?;
    if map.is_free(start) {
        return Ok(start);
    }
    let mut seen = vec![false; map.len()];
    seen[map.index(start)] = true;
    let mut queue = VecDeque::from([start]);
    while let Some(c) = queue.pop_front() {
        for n in map.neighbors4(c) {
            if map.is_free(n) {
                return Ok(n);
            }
            if !seen[map.index(n)] {
                seen[map.index(n)] = true;
                queue.push_back(n);
            }
        }
    }
    Err(Error::OnObstacle { x: p.x, y: p.y })
}

/// Snapped positions and cached radio links for one planning call.
struct Setup<'a> {
    scenario: &'a Scenario,
    links: LinkModel<'a>,
    bs: CellIndex,
    starts: Vec<CellIndex>,
    goals: Vec<CellIndex>,
}

impl<'a> Setup<'a> {
    fn new(scenario: &'a Scenario, positions: &[WorldPoint]) -> Result<Self> {
        let map = &scenario.map;
        Ok(Setup {
            scenario,
            links: LinkModel::new(map, &scenario.radio),
            bs: map.free_cell(scenario.bs)?,
            starts: positions.iter().map(|&p| nearest_free(map, p)).collect::<Result<_>>()?,
            goals: scenario
                .goals
                .iter()
                .map(|&g| map.free_cell(g))
                .collect::<Result<_>>()?,
        })
    }

    fn map(&self) -> &GridMap {
        &self.scenario.map
    }

    fn pt(&self, c: CellIndex) -> WorldPoint {
        self.map().to_world(c)
    }

    fn cost(&self, a: CellIndex, b: CellIndex) -> f64 {
        movement_cost(self.map(), self.pt(a), self.pt(b)).expect("cells lie inside the map")
    }

    /// Path biased into the coverage of `txs`, treating `blocked` cells as
    /// occupied. Falls back to ignoring `blocked` when they seal the goal off.
    fn leg(&self, from: CellIndex, to: CellIndex, txs: &[CellIndex], blocked: &[CellIndex]) -> Result<Path> {
        let s = self.scenario;
        let cov = self.links.coverage(txs);
        let attempt = plan_on_coverage(&s.map, from, to, &cov, blocked, s.w_c, &s.radio);
        match attempt {
            Err(Error::Unreachable { .. } | Error::Stagnation { .. }) if !blocked.is_empty() => {
                plan_on_coverage(&s.map, from, to, &cov, &[], s.w_c, &s.radio)
            }
            other => other,
        }
    }

    fn wait(&self, at: CellIndex, robots: Vec<usize>) -> Segment {
        Segment {
            purpose: Purpose::WaitUntil { robots },
            path: Path::new(vec![self.pt(at)]),
        }
    }

    fn empty_plan(&self, mode: Mode) -> DeploymentPlan {
        DeploymentPlan {
            mode,
            robots: self
                .starts
                .iter()
                .map(|&c| RobotPlan {
                    start: self.pt(c),
                    holds_post: false,
                    segments: Vec::new(),
                })
                .collect(),
            robots_used: 0,
            relays: Vec::new(),
            waves: Vec::new(),
            feasibility: None,
        }
    }

    /// Robot assigned to each goal by straight-line movement cost.
    fn allocate(&self, goals: &[usize]) -> Result<BTreeMap<usize, usize>> {
        if goals.len() > self.starts.len() {
            return Err(Error::NotEnoughRobots {
                needed: goals.len(),
                available: self.starts.len(),
            });
        }
        let costs: Vec<Vec<f64>> = self
            .starts
            .iter()
            .map(|&s| goals.iter().map(|&g| self.cost(s, self.goals[g])).collect())
            .collect();
        let assignment = hungarian_assign(&costs)?;
        Ok(assignment.pairs().map(|(r, t)| (goals[t], r)).collect())
    }

    fn feasibility(&self, goals: &[usize], plan: &mut DeploymentPlan) -> Result<()> {
        let s = self.scenario;
        let pts: Vec<WorldPoint> = goals.iter().map(|&g| self.pt(self.goals[g])).collect();
        let report = check_feasibility(&s.map, self.pt(self.bs), &pts, self.starts.len(), &s.radio)?;
        if !report.feasible {
            return Err(Error::Infeasible(Box::new(report)));
        }
        plan.feasibility = Some(report);
        Ok(())
    }

    /// Hop counts over `cells` (root first) under deterministic links.
    fn depths(&self, cells: &[CellIndex]) -> Vec<Option<usize>> {
        let graph = ConnGraph::from_fn(cells.len(), |a, b| self.links.linked(cells[a], cells[b]));
        min_hop_tree(&graph).depth
    }
}

fn finish(mut plan: DeploymentPlan) -> DeploymentPlan {
    plan.robots_used = plan.robots.iter().filter(|r| r.is_used()).count();
    plan
}

fn plan_direct(setup: &Setup, mode: Mode) -> Result<DeploymentPlan> {
    let goals: Vec<usize> = (0..setup.goals.len()).collect();
    let alloc = setup.allocate(&goals)?;
    let mut plan = setup.empty_plan(mode);
    let order: Vec<usize> = if mode == Mode::CaFmm {
        let mut cells = vec![setup.bs];
        cells.extend(&setup.goals);
        let depth = setup.depths(&cells);
        let mut order = goals.clone();
        order.sort_by_key(|&g| (depth[g + 1].unwrap_or(usize::MAX), g));
        order
    } else {
        goals
    };

    let mut transmitters = vec![setup.bs];
    for g in order {
        let robot = alloc[&g];
        let txs: &[CellIndex] = if mode == Mode::CaFmm { &transmitters } else { &[] };
        let path = setup.leg(setup.starts[robot], setup.goals[g], txs, &[])?;
        plan.robots[robot].segments.push(Segment {
            purpose: Purpose::Primary { goal: g },
            path,
        });
        transmitters.push(setup.goals[g]);
    }
    plan.waves.push(WaveRecord {
        goals: (0..setup.goals.len()).collect(),
        relays: Vec::new(),
        robots: alloc.values().copied().collect::<BTreeSet<_>>().into_iter().collect(),
    });
    Ok(finish(plan))
}

/// A held position: the base station (no owner) or a robot's final cell.
#[derive(Debug, Clone, Copy)]
struct Post {
    cell: CellIndex,
    owner: Option<usize>,
}

/// Min-hop structure over the posts alone.
struct PostTree {
    depth: Vec<Option<usize>>,
    parent: Vec<Option<usize>>,
}

impl PostTree {
    fn new(setup: &Setup, posts: &[Post]) -> Self {
        let graph = ConnGraph::from_fn(posts.len(), |a, b| setup.links.linked(posts[a].cell, posts[b].cell));
        let tree = min_hop_tree(&graph);
        PostTree {
            depth: tree.depth,
            parent: tree.parent,
        }
    }

    /// Robots holding `post` and every post above it.
    fn owners(&self, posts: &[Post], post: usize) -> Vec<usize> {
        let mut out = BTreeSet::new();
        let mut cur = Some(post);
        while let Some(p) = cur {
            if let Some(o) = posts[p].owner {
                out.insert(o);
            }
            cur = self.parent[p];
        }
        out.into_iter().collect()
    }
}

/// Remaining goals adjacent to a connected post, with the shallowest such
/// post (lowest index on ties).
fn next_wave(setup: &Setup, posts: &[Post], tree: &PostTree, remaining: &BTreeSet<usize>) -> Vec<(usize, usize)> {
    remaining
        .iter()
        .filter_map(|&g| {
            (0..posts.len())
                .filter(|&p| tree.depth[p].is_some() && setup.links.linked(posts[p].cell, setup.goals[g]))
                .min_by_key(|&p| (tree.depth[p], p))
                .map(|p| (g, p))
        })
        .collect()
}

/// Relays proposed for one wave, strongest first.
fn propose_relays(
    setup: &Setup,
    posts: &[Post],
    wave: &[usize],
    future: &[usize],
    sources: Vec<WorldPoint>,
    max_relays: usize,
) -> Vec<(CellIndex, Vec<usize>)> {
    let mut nodes: Vec<CellIndex> = posts.iter().map(|p| p.cell).collect();
    let mut transmitters = vec![true; nodes.len()];
    nodes.extend(wave.iter().map(|&g| setup.goals[g]));
    transmitters.extend(wave.iter().map(|_| true));
    let first_future = nodes.len();
    nodes.extend(future.iter().map(|&g| setup.goals[g]));
    transmitters.extend(future.iter().map(|_| false));
    // Cells of goals already handled are off limits too.
    let problem = RelayProblem {
        links: &setup.links,
        targets: (first_future..nodes.len()).collect(),
        nodes,
        transmitters,
        sources,
        stride: setup.scenario.knobs.stride,
        max_relays,
    };
    synthesize(&problem)
        .relays
        .into_iter()
        .map(|r| (r.cell, r.covers.iter().map(|&n| future[n - first_future]).collect()))
        .collect()
}

/// Depths over posts, then `kept` goals, then relays, then future goals.
fn layout_depths(
    setup: &Setup,
    posts: &[Post],
    kept: &[usize],
    relays: &[CellIndex],
    future: &[usize],
) -> Vec<Option<usize>> {
    let mut cells: Vec<CellIndex> = posts.iter().map(|p| p.cell).collect();
    cells.extend(kept.iter().map(|&g| setup.goals[g]));
    cells.extend(relays);
    cells.extend(future.iter().map(|&g| setup.goals[g]));
    setup.depths(&cells)
}

/// Smallest subset of the wave goals (greedy, ascending index) that must
/// stay occupied so every relay stays connected and no future goal loses
/// reachability.
fn minimal_kept(setup: &Setup, posts: &[Post], wave: &[usize], relays: &[CellIndex], future: &[usize]) -> Vec<usize> {
    let reach = |kept: &[usize]| {
        let base = posts.len() + kept.len();
        let held = layout_depths(setup, posts, kept, relays, &[]);
        let relays_ok = (base..base + relays.len()).all(|i| held[i].is_some());
        let depth = layout_depths(setup, posts, kept, relays, future);
        let future_reach: Vec<bool> = depth[base + relays.len()..].iter().map(Option::is_some).collect();
        (relays_ok, future_reach)
    };
    let (_, target) = reach(wave);
    let mut kept = wave.to_vec();
    for &g in wave {
        let trial: Vec<usize> = kept.iter().copied().filter(|&k| k != g).collect();
        let (relays_ok, got) = reach(&trial);
        if relays_ok && target.iter().zip(&got).all(|(&t, &r)| !t || r) {
            kept = trial;
        }
    }
    kept
}

fn plan_dp(setup: &Setup) -> Result<DeploymentPlan> {
    let all: Vec<usize> = (0..setup.goals.len()).collect();
    let mut plan = setup.empty_plan(Mode::DpFmm);
    if all.is_empty() {
        return Ok(plan);
    }
    setup.feasibility(&all, &mut plan)?;
    let alloc = setup.allocate(&all)?;

    let mut posts = vec![Post {
        cell: setup.bs,
        owner: None,
    }];
    let mut remaining: BTreeSet<usize> = all.iter().copied().collect();
    while !remaining.is_empty() {
        let tree = PostTree::new(setup, &posts);
        let wave = next_wave(setup, &posts, &tree, &remaining);
        if wave.is_empty() {
            return Err(Error::DisconnectedGoals {
                goals: remaining.into_iter().collect(),
            });
        }
        let wave_goals: Vec<usize> = wave.iter().map(|&(g, _)| g).collect();
        for g in &wave_goals {
            remaining.remove(g);
        }
        let future: Vec<usize> = remaining.iter().copied().collect();
        let sources = wave_goals.iter().map(|&g| setup.pt(setup.goals[g])).collect();
        let proposed = propose_relays(setup, &posts, &wave_goals, &future, sources, wave_goals.len());

        // Only robots whose goals nobody depends on may leave for a relay.
        let mut k = proposed.len();
        let movers = loop {
            let cells: Vec<CellIndex> = proposed[..k].iter().map(|r| r.0).collect();
            let kept = minimal_kept(setup, &posts, &wave_goals, &cells, &future);
            let movers: Vec<usize> = wave_goals.iter().copied().filter(|g| !kept.contains(g)).collect();
            if movers.len() >= k {
                break movers;
            }
            k -= 1;
        };
        let relays = &proposed[..k];
        let relay_of_goal: BTreeMap<usize, usize> = if relays.is_empty() {
            BTreeMap::new()
        } else {
            let costs: Vec<Vec<f64>> = movers
                .iter()
                .map(|&g| relays.iter().map(|r| setup.cost(setup.goals[g], r.0)).collect())
                .collect();
            hungarian_assign(&costs)?
                .pairs()
                .map(|(m, r)| (movers[m], r))
                .collect()
        };

        let post_cells: Vec<CellIndex> = posts.iter().map(|p| p.cell).collect();
        let mut record = WaveRecord {
            goals: wave_goals.clone(),
            relays: Vec::new(),
            robots: Vec::new(),
        };
        let mut new_posts = Vec::new();
        for &(g, parent) in &wave {
            let robot = alloc[&g];
            let owners = tree.owners(&posts, parent);
            let segments = &mut plan.robots[robot].segments;
            if !owners.is_empty() {
                segments.push(setup.wait(setup.starts[robot], owners));
            }
            let path = setup.leg(setup.starts[robot], setup.goals[g], &post_cells, &post_cells)?;
            segments.push(Segment {
                purpose: Purpose::Primary { goal: g },
                path,
            });
            record.robots.push(robot);
            match relay_of_goal.get(&g) {
                Some(&r) => {
                    let (cell, covers) = &relays[r];
                    let id = plan.relays.len();
                    let path = setup.leg(setup.goals[g], *cell, &post_cells, &post_cells)?;
                    plan.robots[robot].segments.push(Segment {
                        purpose: Purpose::RelayMove { relay: id },
                        path,
                    });
                    plan.relays.push(PlannedRelay {
                        position: setup.pt(*cell),
                        robot,
                        wave: plan.waves.len(),
                        covers: covers.clone(),
                    });
                    record.relays.push(id);
                    new_posts.push(Post {
                        cell: *cell,
                        owner: Some(robot),
                    });
                }
                None => new_posts.push(Post {
                    cell: setup.goals[g],
                    owner: Some(robot),
                }),
            }
        }
        posts.extend(new_posts);
        plan.waves.push(record);
    }
    Ok(finish(plan))
}

/// A destination within a DPA wave.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Dest {
    Goal(usize),
    Relay(usize),
}

/// One robot's share of a DPA wave.
struct Tour {
    link: usize,
    dest: Dest,
    sequence: VisitSequence,
}

fn plan_dpa(setup: &Setup, pending: &[usize], held: &[(usize, CellIndex)]) -> Result<DeploymentPlan> {
    let mut plan = setup.empty_plan(Mode::DpaFmm);
    let mut used = vec![false; setup.starts.len()];
    let mut posts = vec![Post {
        cell: setup.bs,
        owner: None,
    }];
    for &(robot, cell) in held {
        if robot >= used.len() {
            return Err(Error::Scenario(format!("held post names unknown robot {robot}")));
        }
        used[robot] = true;
        plan.robots[robot].holds_post = true;
        plan.robots[robot].start = setup.pt(cell);
        posts.push(Post {
            cell,
            owner: Some(robot),
        });
    }
    if pending.is_empty() {
        return Ok(finish(plan));
    }
    setup.feasibility(pending, &mut plan)?;

    let mut remaining: BTreeSet<usize> = pending.iter().copied().collect();
    while !remaining.is_empty() {
        let tree = PostTree::new(setup, &posts);
        let wave = next_wave(setup, &posts, &tree, &remaining);
        let wave_goals: Vec<usize> = wave.iter().map(|&(g, _)| g).collect();
        let parent: BTreeMap<usize, usize> = wave.iter().copied().collect();
        let future: Vec<usize> = remaining.iter().copied().filter(|g| !parent.contains_key(g)).collect();
        let pool: Vec<usize> = (0..used.len()).filter(|&r| !used[r]).collect();

        let mut sources: Vec<WorldPoint> = wave_goals.iter().map(|&g| setup.pt(setup.goals[g])).collect();
        if sources.is_empty() {
            sources = pool.iter().map(|&r| setup.pt(setup.starts[r])).collect();
        }
        let proposed = propose_relays(setup, &posts, &wave_goals, &future, sources, pool.len());
        if wave.is_empty() && proposed.is_empty() {
            return Err(Error::DisconnectedGoals {
                goals: remaining.into_iter().collect(),
            });
        }

        let mut k = proposed.len();
        let tours = loop {
            let cells: Vec<CellIndex> = proposed[..k].iter().map(|r| r.0).collect();
            let kept = minimal_kept(setup, &posts, &wave_goals, &cells, &future);
            let tours = build_tours(setup, &posts, &parent, &wave_goals, &kept, &cells)?;
            if tours.len() <= pool.len() {
                break tours;
            }
            if k == 0 {
                return Err(Error::NotEnoughRobots {
                    needed: tours.len() + (used.len() - pool.len()),
                    available: used.len(),
                });
            }
            k -= 1;
        };

        let costs: Vec<Vec<f64>> = pool
            .iter()
            .map(|&r| {
                let from = setup.pt(setup.starts[r]);
                tours
                    .iter()
                    .map(|t| {
                        let pts = &t.sequence.points;
                        let map = setup.map();
                        let first = movement_cost(map, from, pts[1]).expect("in bounds");
                        let skipped = movement_cost(map, pts[0], pts[1]).expect("in bounds");
                        (first + t.sequence.cost - skipped).max(0.0)
                    })
                    .collect()
            })
            .collect();
        let assignment = hungarian_assign(&costs)?;

        let post_cells: Vec<CellIndex> = posts.iter().map(|p| p.cell).collect();
        let mut record = WaveRecord {
            goals: wave_goals.clone(),
            relays: Vec::new(),
            robots: Vec::new(),
        };
        let mut new_posts = Vec::new();
        let mut by_tour: Vec<(usize, usize)> = assignment.pairs().map(|(p, t)| (t, pool[p])).collect();
        by_tour.sort_unstable();
        for (t, robot) in by_tour {
            let tour = &tours[t];
            used[robot] = true;
            record.robots.push(robot);
            let owners = tree.owners(&posts, tour.link);
            if !owners.is_empty() {
                plan.robots[robot].segments.push(setup.wait(setup.starts[robot], owners));
            }
            let mut at = setup.starts[robot];
            let stops: Vec<CellIndex> = tour.sequence.points[1..]
                .iter()
                .map(|&p| setup.map().to_cell(p).expect("stops lie on the map"))
                .collect();
            for (i, &stop) in stops.iter().enumerate() {
                let path = setup.leg(at, stop, &post_cells, &post_cells)?;
                let purpose = if i + 1 < stops.len() {
                    Purpose::Primary {
                        goal: tour.sequence.order[i],
                    }
                } else {
                    match tour.dest {
                        Dest::Goal(g) => Purpose::Primary { goal: g },
                        Dest::Relay(r) => {
                            let id = plan.relays.len();
                            plan.relays.push(PlannedRelay {
                                position: setup.pt(stop),
                                robot,
                                wave: plan.waves.len(),
                                covers: proposed[r].1.clone(),
                            });
                            record.relays.push(id);
                            Purpose::RelayMove { relay: id }
                        }
                    }
                };
                plan.robots[robot].segments.push(Segment { purpose, path });
                at = stop;
            }
            new_posts.push(Post {
                cell: at,
                owner: Some(robot),
            });
        }
        for g in &wave_goals {
            remaining.remove(g);
        }
        posts.extend(new_posts);
        plan.waves.push(record);
    }
    Ok(finish(plan))
}

/// Groups a wave's goals and relays by link post and turns each group into
/// clustered tours. Kept goals and relays are destinations; the other wave
/// goals are waypoints.
fn build_tours(
    setup: &Setup,
    posts: &[Post],
    parent: &BTreeMap<usize, usize>,
    wave: &[usize],
    kept: &[usize],
    relays: &[CellIndex],
) -> Result<Vec<Tour>> {
    let map = setup.map();
    let cap = setup.scenario.knobs.cluster_cap;

    // Link post of each relay: the first existing post on its path to the
    // base station in the final layout.
    let mut cells: Vec<CellIndex> = posts.iter().map(|p| p.cell).collect();
    cells.extend(kept.iter().map(|&g| setup.goals[g]));
    cells.extend(relays);
    let graph = ConnGraph::from_fn(cells.len(), |a, b| setup.links.linked(cells[a], cells[b]));
    let tree = min_hop_tree(&graph);
    let relay_link = |r: usize| {
        let mut cur = posts.len() + kept.len() + r;
        while cur >= posts.len() {
            cur = tree.parent[cur].expect("relays are connected in the final layout");
        }
        cur
    };

    let mut groups: BTreeMap<usize, (Vec<Dest>, Vec<usize>)> = BTreeMap::new();
    for &g in wave {
        let entry = groups.entry(parent[&g]).or_default();
        if kept.contains(&g) {
            entry.0.push(Dest::Goal(g));
        } else {
            entry.1.push(g);
        }
    }
    for r in 0..relays.len() {
        groups.entry(relay_link(r)).or_default().0.push(Dest::Relay(r));
    }

    let dest_cell = |d: Dest| match d {
        Dest::Goal(g) => setup.goals[g],
        Dest::Relay(r) => relays[r],
    };
    let mut tours = Vec::new();
    for (link, (mut dests, mut waypoints)) in groups {
        let l = setup.pt(posts[link].cell);
        let farthest = |wps: &[usize]| {
            wps.iter()
                .copied()
                .map(|g| (movement_cost(map, l, setup.pt(setup.goals[g])).expect("in bounds"), g))
                .fold(None::<(f64, usize)>, |best, (c, g)| match best {
                    Some((b, _)) if b >= c => best,
                    _ => Some((c, g)),
                })
                .map(|(_, g)| g)
        };
        if dests.is_empty() {
            let g = farthest(&waypoints).expect("a group holds at least one goal");
            waypoints.retain(|&w| w != g);
            dests.push(Dest::Goal(g));
        }
        let clusters = loop {
            let dest_pts: Vec<WorldPoint> = dests.iter().map(|&d| setup.pt(dest_cell(d))).collect();
            let wp_pts: Vec<WorldPoint> = waypoints.iter().map(|&g| setup.pt(setup.goals[g])).collect();
            let clusters = cluster_goals(map, l, &dest_pts, &wp_pts)?;
            match clusters.iter().find(|c| c.waypoints.len() > cap) {
                Some(c) => {
                    let members: Vec<usize> = c.waypoints.iter().map(|m| waypoints[m.index]).collect();
                    let g = farthest(&members).expect("cluster is over the cap");
                    waypoints.retain(|&w| w != g);
                    dests.push(Dest::Goal(g));
                }
                None => break clusters,
            }
        };
        for cluster in clusters {
            let relabeled = Cluster {
                waypoints: cluster
                    .waypoints
                    .iter()
                    .map(|m| crate::clustering::Member {
                        index: waypoints[m.index],
                        point: m.point,
                    })
                    .collect(),
                ..cluster.clone()
            };
            let sequence = visit_order(map, &relabeled, cap)?;
            tours.push(Tour {
                link,
                dest: dests[cluster.destination.index],
                sequence,
            });
        }
    }
    Ok(tours)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radio::RadioParams;

    fn corridor(goals: &[usize]) -> Scenario {
        let map = GridMap::open(120, 3, 0.5).unwrap();
        let params = RadioParams {
            gamma: -47.0,
            ..RadioParams::default()
        };
        let bs = map.to_world(CellIndex::new(0, 1));
        let starts = (0..goals.len()).map(|i| map.to_world(CellIndex::new(1 + i, 0))).collect();
        let goal_pts = goals.iter().map(|&c| map.to_world(CellIndex::new(c, 1))).collect();
        Scenario::new(map, bs, starts, goal_pts, params)
    }

    #[test]
    fn every_goal_is_visited_once() {
        let s = corridor(&[10, 25, 40]);
        for mode in Mode::ALL {
            let plan = plan_deployment(&s, mode).unwrap();
            let mut goals: Vec<usize> = plan.goal_visits().into_iter().map(|(_, g)| g).collect();
            goals.sort_unstable();
            assert_eq!(goals, vec![0, 1, 2], "{mode}");
        }
    }

    #[test]
    fn dp_releases_chain_in_depth_order() {
        // 10 m range; goals 9 m apart.
        let s = corridor(&[18, 36, 54]);
        let plan = plan_deployment(&s, Mode::DpFmm).unwrap();
        let order: Vec<Vec<usize>> = plan.waves.iter().map(|w| w.goals.clone()).collect();
        assert_eq!(order, vec![vec![0], vec![1], vec![2]]);
        let waits: Vec<&Purpose> = plan
            .robots
            .iter()
            .filter_map(|r| r.segments.first().map(|s| &s.purpose))
            .filter(|p| matches!(p, Purpose::WaitUntil { .. }))
            .collect();
        assert_eq!(waits.len(), 2);
    }

    #[test]
    fn dpa_with_nothing_pending_is_empty() {
        let s = corridor(&[10]);
        let input = ReplanInput {
            reached_goals: [0].into_iter().collect(),
            ..ReplanInput::default()
        };
        let plan = replan(&s, &input).unwrap();
        assert_eq!(plan.robots_used, 0);
        assert!(plan.robots.iter().all(|r| r.segments.is_empty()));
    }

    #[test]
    fn replan_without_changes_matches_plan() {
        let s = corridor(&[12, 30, 44]);
        let a = plan_deployment(&s, Mode::DpaFmm).unwrap();
        let b = replan(&s, &ReplanInput::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn dp_needs_feasible_ratio() {
        let s = corridor(&[100]);
        // 50 m over a 10 m range with one robot.
        assert!(matches!(plan_deployment(&s, Mode::DpFmm), Err(Error::Infeasible(_))));
    }

    #[test]
    fn nearest_free_steps_off_walls() {
        let map = crate::gridmap::parse_map("width 3\nheight 1\nresolution 1\n.#.\n").unwrap();
        assert_eq!(
            nearest_free(&map, WorldPoint::new(1.5, 0.5)).unwrap(),
            CellIndex::new(0, 0)
        );
    }
}
