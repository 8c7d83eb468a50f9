use crate::error::{Error, Result};
use crate::gridmap::{CellIndex, WorldPoint};

use super::{DistanceField, Path};

/// Consecutive steps without lowering `D` before extraction gives up.
const PLATEAU_STEPS: usize = 8;

/// Steepest descent on `D` from `start` to the field's source.
///
/// Steps of half a cell follow the bilinearly interpolated gradient of `D`.
/// When a step would land on an unreachable cell, or the gradient vanishes,
/// the walk instead moves to the lowest neighbouring cell center (no corner
/// cutting). The path ends at the source cell center once within one cell of
/// it.
pub fn extract_path(field: &DistanceField, start: CellIndex) -> Result<Path> {
    if !field.contains(start) || !field.value(start).is_finite() {
        return Err(Error::Unreachable {
            col: start.col,
            row: start.row,
        });
    }
    let res = field.resolution();
    let target = center(field, field.source());
    let mut pos = center(field, start);
    let mut points = vec![pos];
    if start == field.source() {
        return Ok(Path::new(points));
    }

    let step = res / 2.0;
    let max_steps = 8 * (field.width() + field.height());
    let mut best = sample(field, pos);
    let mut stale = 0;

    for _ in 0..max_steps {
        if pos.distance(target) <= res {
            points.push(target);
            return Ok(Path::new(points));
        }
        let next = gradient(field, pos)
            .and_then(|(gx, gy)| {
                let norm = gx.hypot(gy);
                (norm > 1e-12).then(|| WorldPoint::new(pos.x - step * gx / norm, pos.y - step * gy / norm))
            })
            .filter(|&p| cell_of(field, p).is_some_and(|c| field.value(c).is_finite()));

        match next {
            Some(p) => {
                pos = p;
                points.push(p);
            }
            None => {
                let here = cell_of(field, pos).expect("walk stays on the grid");
                let c = center(field, here);
                if c.distance(pos) > 1e-9 {
                    points.push(c);
                }
                let down = lowest_neighbour(field, here).ok_or(Error::Stagnation { x: pos.x, y: pos.y })?;
                pos = center(field, down);
                points.push(pos);
            }
        }

        let value = sample(field, pos);
        if value < best - 1e-12 {
            best = value;
            stale = 0;
        } else {
            stale += 1;
            if stale >= PLATEAU_STEPS {
                return Err(Error::Stagnation { x: pos.x, y: pos.y });
            }
        }
    }
    Err(Error::Stagnation { x: pos.x, y: pos.y })
}

fn center(field: &DistanceField, c: CellIndex) -> WorldPoint {
    let res = field.resolution();
    WorldPoint::new((c.col as f64 + 0.5) * res, (c.row as f64 + 0.5) * res)
}

fn cell_of(field: &DistanceField, p: WorldPoint) -> Option<CellIndex> {
    let res = field.resolution();
    if p.x < 0.0 || p.y < 0.0 {
        return None;
    }
    let c = CellIndex::new((p.x / res).floor() as usize, (p.y / res).floor() as usize);
    field.contains(c).then_some(c)
}

fn finite_value(field: &DistanceField, col: isize, row: isize) -> Option<f64> {
    if col < 0 || row < 0 {
        return None;
    }
    let c = CellIndex::new(col as usize, row as usize);
    if !field.contains(c) {
        return None;
    }
    let v = field.value(c);
    v.is_finite().then_some(v)
}

/// Per-cell gradient: central differences where both neighbours are
/// reachable, one-sided otherwise.
fn cell_gradient(field: &DistanceField, col: isize, row: isize) -> Option<(f64, f64)> {
    let here = finite_value(field, col, row)?;
    let res = field.resolution();
    let axis = |minus: Option<f64>, plus: Option<f64>| match (minus, plus) {
        (Some(m), Some(p)) => (p - m) / (2.0 * res),
        (Some(m), None) => (here - m) / res,
        (None, Some(p)) => (p - here) / res,
        (None, None) => 0.0,
    };
    Some((
        axis(finite_value(field, col - 1, row), finite_value(field, col + 1, row)),
        axis(finite_value(field, col, row - 1), finite_value(field, col, row + 1)),
    ))
}

/// Bilinear blend of the gradients at the four surrounding cell centers,
/// skipping unreachable ones.
fn gradient(field: &DistanceField, p: WorldPoint) -> Option<(f64, f64)> {
    let (c0, r0, tx, ty) = corners(field, p);
    let mut acc = (0.0, 0.0);
    let mut weight = 0.0;
    for (dc, dr, wgt) in [
        (0, 0, (1.0 - tx) * (1.0 - ty)),
        (1, 0, tx * (1.0 - ty)),
        (0, 1, (1.0 - tx) * ty),
        (1, 1, tx * ty),
    ] {
        if let Some((gx, gy)) = cell_gradient(field, c0 + dc, r0 + dr) {
            acc.0 += wgt * gx;
            acc.1 += wgt * gy;
            weight += wgt;
        }
    }
    (weight > 1e-12).then(|| (acc.0 / weight, acc.1 / weight))
}

/// Bilinear sample of `D`, skipping unreachable corners.
fn sample(field: &DistanceField, p: WorldPoint) -> f64 {
    let (c0, r0, tx, ty) = corners(field, p);
    let mut acc = 0.0;
    let mut weight = 0.0;
    for (dc, dr, wgt) in [
        (0, 0, (1.0 - tx) * (1.0 - ty)),
        (1, 0, tx * (1.0 - ty)),
        (0, 1, (1.0 - tx) * ty),
        (1, 1, tx * ty),
    ] {
        if let Some(v) = finite_value(field, c0 + dc, r0 + dr) {
            acc += wgt * v;
            weight += wgt;
        }
    }
    if weight > 1e-12 {
        acc / weight
    } else {
        f64::INFINITY
    }
}

fn corners(field: &DistanceField, p: WorldPoint) -> (isize, isize, f64, f64) {
    let res = field.resolution();
    let gx = p.x / res - 0.5;
    let gy = p.y / res - 0.5;
    let (c0, r0) = (gx.floor(), gy.floor());
    (c0 as isize, r0 as isize, gx - c0, gy - r0)
}

fn lowest_neighbour(field: &DistanceField, c: CellIndex) -> Option<CellIndex> {
    let here = field.value(c);
    let (col, row) = (c.col as isize, c.row as isize);
    let mut best: Option<(f64, CellIndex)> = None;
    for dr in -1..=1 {
        for dc in -1..=1 {
            if dc == 0 && dr == 0 {
                continue;
            }
            let Some(v) = finite_value(field, col + dc, row + dr) else {
                continue;
            };
            if dc != 0 && dr != 0
                && (finite_value(field, col + dc, row).is_none() || finite_value(field, col, row + dr).is_none())
            {
                continue;
            }
            let n = CellIndex::new((col + dc) as usize, (row + dr) as usize);
            if v < here && best.is_none_or(|(b, _)| v < b) {
                best = Some((v, n));
            }
        }
    }
    best.map(|(_, n)| n)
}
