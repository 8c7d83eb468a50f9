//! End-to-end deployment: planning in four modes, discrete-time execution,
//! reactive replanning and mission metrics.

mod execute;
mod metrics;
mod planner;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::clustering::DEFAULT_CAP;
use crate::connectivity::FeasibilityReport;
use crate::eikonal::Path;
use crate::error::{Error, Result};
use crate::gridmap::{GridMap, WorldPoint};
use crate::radio::RadioParams;

pub use execute::{
    execute_mission, execute_with, merge_traces, run_mission, Event, EventKind, ExecOptions, MissionTrace, Noise,
    RunOutcome, Snapshot, TraceStatus,
};
pub use metrics::{compute_metrics, Metrics};
pub use planner::{plan_deployment, replan, HeldPost, ReplanInput};

/// Planner variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mode {
    #[serde(rename = "FMM")]
    Fmm,
    #[serde(rename = "CA-FMM")]
    CaFmm,
    #[serde(rename = "DP-FMM")]
    DpFmm,
    #[serde(rename = "DPA-FMM")]
    DpaFmm,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Fmm, Mode::CaFmm, Mode::DpFmm, Mode::DpaFmm];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Fmm => "FMM",
            Mode::CaFmm => "CA-FMM",
            Mode::DpFmm => "DP-FMM",
            Mode::DpaFmm => "DPA-FMM",
        }
    }

    /// Whether goal events wait for a live link to the base station.
    pub fn requires_connected_goals(self) -> bool {
        matches!(self, Mode::DpFmm | Mode::DpaFmm)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    /// Case-insensitive; the `-fmm` suffix is optional and `_` may replace
    /// `-`.
    fn from_str(s: &str) -> Result<Mode> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        let key = key.strip_suffix("-fmm").or_else(|| key.strip_suffix("fmm")).unwrap_or(&key);
        match key.trim_end_matches('-') {
            "" => Ok(Mode::Fmm),
            "ca" => Ok(Mode::CaFmm),
            "dp" => Ok(Mode::DpFmm),
            "dpa" => Ok(Mode::DpaFmm),
            _ => Err(Error::Scenario(format!(
                "unknown mode `{s}`; expected one of fmm, ca, dp, dpa"
            ))),
        }
    }
}

/// Tuning knobs shared by the planners and the executor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Knobs {
    /// Most waypoints a single cluster may hold.
    pub cluster_cap: usize,
    /// Relay candidate lattice spacing, in cells.
    pub stride: usize,
    /// Ticks a robot may wait at a disconnected goal before a replan is
    /// requested.
    pub hold_limit: usize,
    /// Safety bound on mission length.
    pub max_ticks: usize,
}

impl Default for Knobs {
    fn default() -> Self {
        Knobs {
            cluster_cap: DEFAULT_CAP,
            stride: 2,
            hold_limit: 20,
            max_ticks: 100_000,
        }
    }
}

/// A deployment problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub map: GridMap,
    pub bs: WorldPoint,
    pub robot_starts: Vec<WorldPoint>,
    pub goals: Vec<WorldPoint>,
    pub radio: RadioParams,
    pub w_c: f64,
    /// Meters advanced per tick.
    pub robot_speed: f64,
    pub knobs: Knobs,
}

impl Scenario {
    /// Scenario with `w_c = 1` and a speed of one cell per tick.
    pub fn new(
        map: GridMap,
        bs: WorldPoint,
        robot_starts: Vec<WorldPoint>,
        goals: Vec<WorldPoint>,
        radio: RadioParams,
    ) -> Self {
        let robot_speed = map.resolution();
        Scenario {
            map,
            bs,
            robot_starts,
            goals,
            radio,
            w_c: 1.0,
            robot_speed,
            knobs: Knobs::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.radio.validate()?;
        if !(self.w_c >= 0.0 && self.w_c.is_finite()) {
            return Err(Error::Scenario(format!("w_c must be >= 0, got {}", self.w_c)));
        }
        if !(self.robot_speed > 0.0 && self.robot_speed.is_finite()) {
            return Err(Error::Scenario(format!(
                "robot speed must be positive, got {}",
                self.robot_speed
            )));
        }
        if self.robot_starts.is_empty() {
            return Err(Error::Scenario("no robots".into()));
        }
        if self.knobs.stride == 0 {
            return Err(Error::Scenario("stride must be at least 1".into()));
        }
        self.map.free_cell(self.bs)?;
        for &p in &self.robot_starts {
            self.map.free_cell(p)?;
        }
        let mut seen = std::collections::HashSet::new();
        for (i, &g) in self.goals.iter().enumerate() {
            let cell = self.map.free_cell(g)?;
            if !seen.insert(cell) {
                return Err(Error::Scenario(format!("goal {i} shares a cell with an earlier goal")));
            }
        }
        Ok(())
    }
}

/// What a plan segment is for.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Purpose {
    /// Travel to and visit a goal.
    Primary { goal: usize },
    /// Travel to a relay post from [`DeploymentPlan::relays`].
    RelayMove { relay: usize },
    /// Stay in place until every listed robot has finished its plan.
    WaitUntil { robots: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub purpose: Purpose,
    /// For waits, a single point at the waiting position.
    pub path: Path,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotPlan {
    pub start: WorldPoint,
    /// Already stationed at a post from an earlier plan.
    pub holds_post: bool,
    pub segments: Vec<Segment>,
}

impl RobotPlan {
    pub fn is_used(&self) -> bool {
        self.holds_post || !self.segments.is_empty()
    }

    pub fn final_position(&self) -> WorldPoint {
        self.segments.last().map_or(self.start, |s| s.path.end())
    }

    /// Planned travel distance.
    pub fn length(&self) -> f64 {
        self.segments.iter().map(|s| s.path.length).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannedRelay {
    pub position: WorldPoint,
    pub robot: usize,
    pub wave: usize,
    /// Goals this relay connected when it was placed.
    pub covers: Vec<usize>,
}

/// One planning round: the goals it handled and the relays it placed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveRecord {
    pub goals: Vec<usize>,
    pub relays: Vec<usize>,
    pub robots: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeploymentPlan {
    pub mode: Mode,
    pub robots: Vec<RobotPlan>,
    pub robots_used: usize,
    pub relays: Vec<PlannedRelay>,
    pub waves: Vec<WaveRecord>,
    pub feasibility: Option<FeasibilityReport>,
}

impl DeploymentPlan {
    /// `(robot, goal)` for every primary segment, in robot then segment
    /// order.
    pub fn goal_visits(&self) -> Vec<(usize, usize)> {
        self.robots
            .iter()
            .enumerate()
            .flat_map(|(r, plan)| {
                plan.segments.iter().filter_map(move |s| match s.purpose {
                    Purpose::Primary { goal } => Some((r, goal)),
                    _ => None,
                })
            })
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<DeploymentPlan> {
        Ok(serde_json::from_str(text)?)
    }
}
