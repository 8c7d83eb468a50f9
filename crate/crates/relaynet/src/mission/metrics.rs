use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::MissionTrace;

/// Mission summary over the robots that were deployed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub d_max: f64,
    pub d_tot: f64,
    /// Final tick.
    pub t: usize,
    pub c_mean: f64,
    pub c_min: f64,
    pub o_mean: f64,
    pub r: usize,
}

/// Distance, time, connectivity and occupation of a finished trace.
///
/// Fractions are taken over ticks `1..=T`, or over tick 0 alone when the
/// mission needed no motion. A robot counts as occupied in a tick when it
/// lies strictly between another active robot and the base station on the
/// tick's tree.
pub fn compute_metrics(trace: &MissionTrace) -> Result<Metrics> {
    if trace.snapshots.is_empty() {
        return Err(Error::Scenario("trace has no ticks".into()));
    }
    let members: Vec<usize> = (0..trace.used.len()).filter(|&r| trace.used[r]).collect();
    let t = trace.final_tick();
    let window: Vec<_> = if t == 0 {
        trace.snapshots.iter().take(1).collect()
    } else {
        trace.snapshots.iter().filter(|s| s.tick >= 1).collect()
    };
    let ticks = window.len() as f64;

    let d: Vec<f64> = members.iter().map(|&r| trace.travelled[r]).collect();
    let mut c = Vec::with_capacity(members.len());
    let mut o = Vec::with_capacity(members.len());
    for &r in &members {
        let connected = window.iter().filter(|s| s.connected[r]).count();
        let occupied = window
            .iter()
            .filter(|s| {
                members
                    .iter()
                    .any(|&j| j != r && s.active[j] && relays_of(&s.parent, j).contains(&r))
            })
            .count();
        c.push(connected as f64 / ticks);
        o.push(occupied as f64 / ticks);
    }

    let mean = |v: &[f64], empty: f64| {
        if v.is_empty() {
            empty
        } else {
            v.iter().sum::<f64>() / v.len() as f64
        }
    };
    Ok(Metrics {
        d_max: d.iter().copied().fold(0.0, f64::max),
        d_tot: d.iter().sum(),
        t,
        c_mean: mean(&c, 1.0),
        c_min: c.iter().copied().fold(1.0, f64::min),
        o_mean: mean(&o, 0.0),
        r: members.len(),
    })
}

/// Robots strictly between `robot` and the base station.
fn relays_of(parent: &[Option<usize>], robot: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut cur = parent[robot];
    while let Some(p) = cur {
        if p == 0 || out.len() > parent.len() {
            break;
        }
        out.push(p - 1);
        cur = parent[p - 1];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridmap::WorldPoint;
    use crate::mission::{Mode, Snapshot, TraceStatus};

    fn chain_trace(ticks: usize) -> MissionTrace {
        let p = WorldPoint::new(0.0, 0.0);
        MissionTrace {
            mode: Mode::DpFmm,
            snapshots: (0..=ticks)
                .map(|tick| Snapshot {
                    tick,
                    positions: vec![p, p],
                    connected: vec![true, true],
                    parent: vec![Some(0), Some(1)],
                    active: vec![false, tick > 0],
                })
                .collect(),
            events: Vec::new(),
            status: TraceStatus::Complete,
            used: vec![true, true],
            finish_tick: vec![Some(0), Some(ticks)],
            travelled: vec![0.0, ticks as f64],
        }
    }

    #[test]
    fn chain_occupation() {
        let m = compute_metrics(&chain_trace(20)).unwrap();
        assert_eq!(m.t, 20);
        assert_eq!(m.r, 2);
        assert_eq!(m.o_mean, 0.5);
        assert_eq!(m.c_min, 1.0);
        assert_eq!(m.d_max, 20.0);
        assert_eq!(m.d_tot, 20.0);
    }

    #[test]
    fn empty_trace_is_an_error() {
        let mut t = chain_trace(1);
        t.snapshots.clear();
        assert!(compute_metrics(&t).is_err());
    }
}
