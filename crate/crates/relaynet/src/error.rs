use thiserror::Error;

use crate::connectivity::FeasibilityReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad failure classes, used by front-ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Malformed input documents or invalid parameters.
    Schema,
    /// The scenario cannot be solved as posed.
    Infeasible,
    /// Failures while executing a plan.
    Runtime,
    /// Filesystem errors.
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("map parse error at line {line}, column {column}: {message}")]
    MapParse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("point ({x:.3}, {y:.3}) lies outside the map")]
    OutOfBounds { x: f64, y: f64 },
    #[error("point ({x:.3}, {y:.3}) lies on an obstacle cell")]
    OnObstacle { x: f64, y: f64 },
    #[error("transmitter and receiver are {distance:.4} m apart, below the {minimum} m minimum")]
    TooClose { distance: f64, minimum: f64 },
    #[error("invalid radio parameters: {0}")]
    InvalidRadio(String),
    #[error("radio parameters admit no usable coverage distance (got {distance:.4} m)")]
    InfeasibleRadio { distance: f64 },
    #[error("fields are defined over different grids")]
    MismatchedGrids,
    #[error("source cell ({col}, {row}) has zero velocity")]
    ZeroVelocitySource { col: usize, row: usize },
    #[error("cell ({col}, {row}) cannot reach the source")]
    Unreachable { col: usize, row: usize },
    #[error("gradient descent stalled at ({x:.3}, {y:.3})")]
    Stagnation { x: f64, y: f64 },
    #[error("cost matrix is empty")]
    EmptyMatrix,
    #[error("cost matrix is invalid: {0}")]
    InvalidMatrix(String),
    #[error("deployment is infeasible: ratio {:.3} exceeds {} robots", .0.ratio, .0.n_robots)]
    Infeasible(Box<FeasibilityReport>),
    #[error("goals {goals:?} cannot be connected to the base station")]
    DisconnectedGoals { goals: Vec<usize> },
    #[error("not enough robots: {needed} needed, {available} available")]
    NotEnoughRobots { needed: usize, available: usize },
    #[error("cluster has {count} waypoints, above the cap of {cap}; raise the cap or split the cluster")]
    TooManyWaypoints { count: usize, cap: usize },
    #[error("invalid scenario: {0}")]
    Scenario(String),
    #[error("mission deadlocked at tick {tick}: {waiting}")]
    Deadlock { tick: usize, waiting: String },
    #[error("replan budget of {budget} exhausted")]
    ReplanBudget { budget: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Infeasible(_)
            | Error::InfeasibleRadio { .. }
            | Error::DisconnectedGoals { .. }
            | Error::NotEnoughRobots { .. }
            | Error::Unreachable { .. } => ErrorClass::Infeasible,
            Error::Deadlock { .. } | Error::ReplanBudget { .. } | Error::Stagnation { .. } => {
                ErrorClass::Runtime
            }
            Error::Io(_) => ErrorClass::Io,
            _ => ErrorClass::Schema,
        }
    }
}
