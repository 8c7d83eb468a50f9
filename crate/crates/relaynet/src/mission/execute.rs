use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::connectivity::{min_hop_tree, ConnGraph};
use crate::error::{Error, Result};
use crate::gridmap::{CellIndex, WorldPoint};
use crate::radio::{LinkModel, RadioParams};

use super::planner::{replan, HeldPost, ReplanInput};
use super::{plan_deployment, DeploymentPlan, Mode, Purpose, Scenario};

/// Link model used during execution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Noise {
    /// Deterministic mean signal.
    Off,
    /// Per-tick multipath draws from this seed.
    Seeded(u64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExecOptions {
    pub noise: Noise,
    /// Stop after this tick even if robots are still busy.
    pub stop_at: Option<usize>,
    /// Added to the tick when drawing multipath, so continued executions
    /// see fresh draws.
    pub tick_offset: usize,
}

impl ExecOptions {
    pub fn new(noise: Noise) -> Self {
        ExecOptions {
            noise,
            stop_at: None,
            tick_offset: 0,
        }
    }
}

/// State of the team at the end of a tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub tick: usize,
    pub positions: Vec<WorldPoint>,
    /// Linked to the base station through the tick's min-hop tree.
    pub connected: Vec<bool>,
    /// Tree parent of each robot: `Some(0)` is the base station and
    /// `Some(j + 1)` is robot `j`.
    pub parent: Vec<Option<usize>>,
    /// Travelling or waiting at a goal for a link during this tick.
    pub active: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    GoalReached { goal: usize, connected: bool },
    RelayInPlace { relay: usize },
    WaitStart { on: Vec<usize> },
    WaitEnd,
    HoldStart { goal: usize },
    Disconnected,
    Reconnected,
    Finished,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub tick: usize,
    pub robot: usize,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TraceStatus {
    Complete,
    Stopped,
    /// A robot waited too long at a disconnected goal.
    ReplanRequested { robot: usize, goal: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionTrace {
    pub mode: Mode,
    pub snapshots: Vec<Snapshot>,
    pub events: Vec<Event>,
    pub status: TraceStatus,
    pub used: Vec<bool>,
    pub finish_tick: Vec<Option<usize>>,
    /// Arc length travelled by each robot.
    pub travelled: Vec<f64>,
}

impl MissionTrace {
    pub fn final_tick(&self) -> usize {
        self.snapshots.last().map_or(0, |s| s.tick)
    }

    pub fn reached_goals(&self) -> BTreeSet<usize> {
        self.events
            .iter()
            .filter_map(|e| match e.kind {
                EventKind::GoalReached { goal, .. } => Some(goal),
                _ => None,
            })
            .collect()
    }

    /// Snapshot of the mission for [`replan`]: goals reached so far, current
    /// positions, and the finished robots as held posts.
    pub fn replan_input(&self) -> ReplanInput {
        let last = self.snapshots.last().expect("traces hold at least one snapshot");
        ReplanInput {
            reached_goals: self.reached_goals(),
            robot_positions: last.positions.clone(),
            held_posts: (0..self.used.len())
                .filter(|&r| self.used[r] && self.finish_tick[r].is_some())
                .map(|r| HeldPost {
                    robot: r,
                    position: last.positions[r],
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<MissionTrace> {
        Ok(serde_json::from_str(text)?)
    }
}

pub fn execute_mission(plan: &DeploymentPlan, scenario: &Scenario, noise: Noise) -> Result<MissionTrace> {
    execute_with(plan, scenario, &ExecOptions::new(noise))
}

struct Robot {
    segment: usize,
    progress: f64,
    position: WorldPoint,
    waiting: bool,
    holding: usize,
    finished: bool,
}

/// Synchronous tick loop.
///
/// Tick 0 resolves everything that needs no motion. On every later tick
/// each travelling robot advances `robot_speed` meters along its current
/// segment, the team's connectivity is recomputed from current positions,
/// and then waits, arrivals and goal visits are resolved to a fixpoint. In
/// DP-FMM and DPA-FMM a goal only counts once the robot is connected;
/// until then it holds position.
pub fn execute_with(plan: &DeploymentPlan, scenario: &Scenario, options: &ExecOptions) -> Result<MissionTrace> {
    let n = plan.robots.len();
    let map = &scenario.map;
    let params = match options.noise {
        Noise::Off => scenario.radio.clone(),
        Noise::Seeded(seed) => RadioParams {
            seed,
            ..scenario.radio.clone()
        },
    };
    let links = LinkModel::new(map, &params);
    let bs = map.to_cell(scenario.bs)?;
    let used: Vec<bool> = plan.robots.iter().map(|r| r.is_used()).collect();
    let hold = plan.mode.requires_connected_goals();

    let mut robots: Vec<Robot> = plan
        .robots
        .iter()
        .map(|r| Robot {
            segment: 0,
            progress: 0.0,
            position: r.start,
            waiting: false,
            holding: 0,
            finished: false,
        })
        .collect();
    let mut trace = MissionTrace {
        mode: plan.mode,
        snapshots: Vec::new(),
        events: Vec::new(),
        status: TraceStatus::Complete,
        used: used.clone(),
        finish_tick: vec![None; n],
        travelled: vec![0.0; n],
    };

    let connectivity = |robots: &[Robot], tick: usize| -> Result<(Vec<bool>, Vec<Option<usize>>)> {
        let members: Vec<usize> = (0..n).filter(|&r| used[r]).collect();
        let mut cells: Vec<CellIndex> = vec![bs];
        for &r in &members {
            cells.push(map.to_cell(robots[r].position)?);
        }
        let graph = ConnGraph::from_fn(cells.len(), |a, b| match options.noise {
            Noise::Off => links.linked(cells[a], cells[b]),
            Noise::Seeded(_) => links.linked_noisy(cells[a], cells[b], (tick + options.tick_offset) as u64),
        });
        let tree = min_hop_tree(&graph);
        let mut connected = vec![false; n];
        let mut parent = vec![None; n];
        for (i, &r) in members.iter().enumerate() {
            connected[r] = tree.is_reachable(i + 1);
            parent[r] = tree.parent[i + 1].map(|p| if p == 0 { 0 } else { members[p - 1] + 1 });
        }
        Ok((connected, parent))
    };

    let mut tick = 0;
    let mut active = vec![false; n];
    let mut previous: Option<Vec<bool>> = None;
    loop {
        let mut moved = false;
        if tick > 0 {
            for (r, robot) in robots.iter_mut().enumerate() {
                active[r] = false;
                if robot.finished {
                    continue;
                }
                let segment = &plan.robots[r].segments[robot.segment];
                if matches!(segment.purpose, Purpose::WaitUntil { .. }) {
                    continue;
                }
                active[r] = true;
                let length = segment.path.length;
                if robot.progress < length {
                    let next = (robot.progress + scenario.robot_speed).min(length);
                    trace.travelled[r] += next - robot.progress;
                    robot.progress = next;
                    robot.position = segment.path.point_at(next);
                    moved = true;
                }
            }
        }

        let (connected, parent) = connectivity(&robots, tick)?;
        if let Some(prev) = &previous {
            for r in (0..n).filter(|&r| used[r]) {
                if prev[r] && !connected[r] {
                    trace.events.push(Event {
                        tick,
                        robot: r,
                        kind: EventKind::Disconnected,
                    });
                } else if !prev[r] && connected[r] {
                    trace.events.push(Event {
                        tick,
                        robot: r,
                        kind: EventKind::Reconnected,
                    });
                }
            }
        }

        let changed = resolve(plan, &mut robots, &connected, hold, tick, &mut trace);
        trace.snapshots.push(Snapshot {
            tick,
            positions: robots.iter().map(|r| r.position).collect(),
            connected: connected.clone(),
            parent,
            active: active.clone(),
        });
        previous = Some(connected);

        if robots.iter().all(|r| r.finished) {
            break;
        }
        let mut holders = false;
        for (r, robot) in robots.iter_mut().enumerate() {
            if robot.finished {
                continue;
            }
            let segment = &plan.robots[r].segments[robot.segment];
            if let Purpose::Primary { goal } = segment.purpose {
                if robot.progress >= segment.path.length {
                    holders = true;
                    robot.holding += 1;
                    if robot.holding > scenario.knobs.hold_limit {
                        trace.status = TraceStatus::ReplanRequested { robot: r, goal };
                        return Ok(trace);
                    }
                }
            }
        }
        // Nothing moved or completed, so nothing can change unless a noisy
        // link may still come back for a holding robot.
        let frozen = !moved && !changed && (options.noise == Noise::Off || !holders);
        if tick > 0 && frozen {
            return Err(Error::Deadlock {
                tick,
                waiting: waiting_graph(plan, &robots),
            });
        }
        if options.stop_at == Some(tick) {
            trace.status = TraceStatus::Stopped;
            return Ok(trace);
        }
        if tick >= scenario.knobs.max_ticks {
            return Err(Error::Deadlock {
                tick,
                waiting: format!("tick limit reached; {}", waiting_graph(plan, &robots)),
            });
        }
        tick += 1;
    }
    Ok(trace)
}

fn waiting_graph(plan: &DeploymentPlan, robots: &[Robot]) -> String {
    let mut parts = Vec::new();
    for (r, robot) in robots.iter().enumerate() {
        if robot.finished {
            continue;
        }
        match &plan.robots[r].segments[robot.segment].purpose {
            Purpose::WaitUntil { robots: on } => {
                let pending: Vec<usize> = on.iter().copied().filter(|&o| !robots[o].finished).collect();
                parts.push(format!("robot {r} waits on {pending:?}"));
            }
            Purpose::Primary { goal } => parts.push(format!("robot {r} holds at goal {goal}")),
            Purpose::RelayMove { relay } => parts.push(format!("robot {r} stalled before relay {relay}")),
        }
    }
    parts.join("; ")
}

/// Completes waits, arrivals and goal visits until nothing changes.
fn resolve(
    plan: &DeploymentPlan,
    robots: &mut [Robot],
    connected: &[bool],
    hold: bool,
    tick: usize,
    trace: &mut MissionTrace,
) -> bool {
    let mut any = false;
    loop {
        let mut changed = false;
        for r in 0..robots.len() {
            loop {
                if robots[r].finished {
                    break;
                }
                let segments = &plan.robots[r].segments;
                let Some(segment) = segments.get(robots[r].segment) else {
                    robots[r].finished = true;
                    trace.finish_tick[r] = Some(tick);
                    trace.events.push(Event {
                        tick,
                        robot: r,
                        kind: EventKind::Finished,
                    });
                    changed = true;
                    break;
                };
                let arrived = robots[r].progress >= segment.path.length;
                let done = match &segment.purpose {
                    Purpose::WaitUntil { robots: on } => {
                        if on.iter().all(|&o| robots[o].finished) {
                            if robots[r].waiting {
                                trace.events.push(Event {
                                    tick,
                                    robot: r,
                                    kind: EventKind::WaitEnd,
                                });
                            }
                            true
                        } else {
                            if !robots[r].waiting {
                                robots[r].waiting = true;
                                trace.events.push(Event {
                                    tick,
                                    robot: r,
                                    kind: EventKind::WaitStart { on: on.clone() },
                                });
                            }
                            false
                        }
                    }
                    Purpose::Primary { goal } if arrived => {
                        if hold && !connected[r] {
                            if robots[r].holding == 0 && !robots[r].waiting {
                                robots[r].waiting = true;
                                trace.events.push(Event {
                                    tick,
                                    robot: r,
                                    kind: EventKind::HoldStart { goal: *goal },
                                });
                            }
                            false
                        } else {
                            trace.events.push(Event {
                                tick,
                                robot: r,
                                kind: EventKind::GoalReached {
                                    goal: *goal,
                                    connected: connected[r],
                                },
                            });
                            true
                        }
                    }
                    Purpose::RelayMove { relay } if arrived => {
                        trace.events.push(Event {
                            tick,
                            robot: r,
                            kind: EventKind::RelayInPlace { relay: *relay },
                        });
                        true
                    }
                    _ => false,
                };
                if !done {
                    break;
                }
                let robot = &mut robots[r];
                robot.segment += 1;
                robot.progress = 0.0;
                robot.waiting = false;
                robot.holding = 0;
                if let Some(next) = segments.get(robot.segment) {
                    robot.position = next.path.start();
                }
                changed = true;
            }
        }
        if !changed {
            return any;
        }
        any = true;
    }
}

/// Appends a continuation trace whose tick 0 coincides with the last tick
/// of `total`.
pub fn merge_traces(total: &mut MissionTrace, part: MissionTrace) {
    let offset = total.final_tick();
    for s in part.snapshots.into_iter().skip(1) {
        total.snapshots.push(Snapshot {
            tick: s.tick + offset,
            ..s
        });
    }
    for e in part.events {
        total.events.push(Event {
            tick: e.tick + offset,
            ..e
        });
    }
    for r in 0..total.used.len() {
        total.travelled[r] += part.travelled[r];
        total.used[r] |= part.used[r];
        if total.finish_tick[r].is_none() || part.finish_tick[r].is_some_and(|t| t > 0) {
            total.finish_tick[r] = part.finish_tick[r].map(|t| t + offset);
        }
    }
    total.status = part.status;
}

/// Result of [`run_mission`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub plans: Vec<DeploymentPlan>,
    pub trace: MissionTrace,
    pub replans: usize,
}

/// Plans, executes, and replans whenever a robot waits too long at a
/// disconnected goal, up to `budget` replans.
pub fn run_mission(scenario: &Scenario, mode: Mode, noise: Noise, budget: usize) -> Result<RunOutcome> {
    let plan = plan_deployment(scenario, mode)?;
    let mut trace = execute_mission(&plan, scenario, noise)?;
    let mut plans = vec![plan];
    let mut replans = 0;
    while let TraceStatus::ReplanRequested { robot, goal } = trace.status {
        if replans == budget {
            return Err(Error::ReplanBudget { budget });
        }
        replans += 1;
        log::info!("robot {robot} lost its link at goal {goal}; replanning ({replans}/{budget})");
        let next = replan(scenario, &trace.replan_input())?;
        let options = ExecOptions {
            noise,
            stop_at: None,
            tick_offset: trace.final_tick(),
        };
        let part = execute_with(&next, scenario, &options)?;
        merge_traces(&mut trace, part);
        plans.push(next);
    }
    Ok(RunOutcome { plans, trace, replans })
}
