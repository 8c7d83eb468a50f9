use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::gridmap::CellIndex;
use crate::radio::write_matrix;

use super::VelocityField;

/// Cost-to-go from a source cell.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceField {
    values: Vec<f64>,
    source: CellIndex,
    speed: VelocityField,
}

impl DistanceField {
    pub fn width(&self) -> usize {
        self.speed.width()
    }

    pub fn height(&self) -> usize {
        self.speed.height()
    }

    pub fn resolution(&self) -> f64 {
        self.speed.resolution()
    }

    pub fn source(&self) -> CellIndex {
        self.source
    }

    pub fn speed(&self) -> &VelocityField {
        &self.speed
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, cell: CellIndex) -> f64 {
        self.values[self.speed.index(cell)]
    }

    pub fn contains(&self, cell: CellIndex) -> bool {
        self.speed.contains(cell)
    }

    pub fn to_csv(&self) -> String {
        write_matrix(self.width(), &self.values)
    }
}

/// Chebyshev radius of the exactly initialized block around the source.
pub const SEED_RADIUS: isize = 2;

#[derive(Clone, Copy, PartialEq)]
struct Trial {
    value: f64,
    index: usize,
}

impl Eq for Trial {}

impl Ord for Trial {
    // Min-heap on value, ties toward the lower flat index.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .value
            .total_cmp(&self.value)
            .then_with(|| other.index.cmp(&self.index))
    }
}

impl PartialOrd for Trial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// First-order Fast Marching from `source`.
///
/// Cells within [`SEED_RADIUS`] of the source start at their straight-line
/// cost when the box between them and the source is passable. Cells are accepted from a binary heap in order of tentative cost. A
/// cell's tentative cost uses the smaller accepted neighbour along each axis
/// and solves the upwind quadratic when both axes contribute, falling back
/// to the one-sided update otherwise. Zero-speed cells are never accepted
/// and stay at `+∞`.
pub fn solve_eikonal(speed: &VelocityField, source: CellIndex) -> Result<DistanceField> {
    solve_eikonal_observed(speed, source, |_, _| {})
}

/// [`solve_eikonal`] with a hook called for every accepted cell, in
/// acceptance order.
pub fn solve_eikonal_observed(
    speed: &VelocityField,
    source: CellIndex,
    mut on_accept: impl FnMut(CellIndex, f64),
) -> Result<DistanceField> {
    if !speed.contains(source) || speed.speed(source) <= 0.0 {
        return Err(Error::ZeroVelocitySource {
            col: source.col,
            row: source.row,
        });
    }
    let (w, h) = (speed.width(), speed.height());
    let res = speed.resolution();
    let mut values = vec![f64::INFINITY; w * h];
    let mut known = vec![false; w * h];
    let mut heap = BinaryHeap::new();

    let start = speed.index(source);
    values[start] = 0.0;
    heap.push(Trial { value: 0.0, index: start });
    // Seed the block around a point source with straight-line costs; the
    // upwind update alone overestimates diagonals near the source.
    let fs = speed.speed(source);
    for dr in -SEED_RADIUS..=SEED_RADIUS {
        for dc in -SEED_RADIUS..=SEED_RADIUS {
            if (dc, dr) == (0, 0) {
                continue;
            }
            let Some(n) = offset(source, dc, dr, w, h) else {
                continue;
            };
            // Every cell of the bounding box must be passable, so the seed
            // never reaches around a wall.
            let clear = (dr.min(0)..=dr.max(0)).all(|r| {
                (dc.min(0)..=dc.max(0)).all(|c| offset(source, c, r, w, h).is_some_and(|x| speed.speed(x) > 0.0))
            });
            if !clear {
                continue;
            }
            let len = res * ((dc * dc + dr * dr) as f64).sqrt();
            let i = speed.index(n);
            values[i] = 2.0 * len / (fs + speed.speed(n));
            heap.push(Trial { value: values[i], index: i });
        }
    }

    while let Some(Trial { value, index }) = heap.pop() {
        if known[index] || value > values[index] {
            continue;
        }
        known[index] = true;
        let (col, row) = (index % w, index / w);
        on_accept(CellIndex::new(col, row), value);

        let neighbours = [
            (col > 0).then(|| index - 1),
            (col + 1 < w).then(|| index + 1),
            (row > 0).then(|| index - w),
            (row + 1 < h).then(|| index + w),
        ];
        for n in neighbours.into_iter().flatten() {
            if known[n] {
                continue;
            }
            let f = speed.speeds()[n];
            if f <= 0.0 {
                continue;
            }
            let candidate = update(&values, &known, n, w, h, res / f);
            if candidate < values[n] {
                values[n] = candidate;
                heap.push(Trial { value: candidate, index: n });
            }
        }
    }

    Ok(DistanceField {
        values,
        source,
        speed: speed.clone(),
    })
}

fn offset(c: CellIndex, dc: isize, dr: isize, w: usize, h: usize) -> Option<CellIndex> {
    let col = c.col.checked_add_signed(dc).filter(|&x| x < w)?;
    let row = c.row.checked_add_signed(dr).filter(|&y| y < h)?;
    Some(CellIndex::new(col, row))
}

fn update(values: &[f64], known: &[bool], i: usize, w: usize, h: usize, step: f64) -> f64 {
    let (col, row) = (i % w, i / w);
    let pick = |j: Option<usize>| j.filter(|&j| known[j]).map_or(f64::INFINITY, |j| values[j]);
    let horizontal = pick((col > 0).then(|| i - 1)).min(pick((col + 1 < w).then(|| i + 1)));
    let vertical = pick((row > 0).then(|| i - w)).min(pick((row + 1 < h).then(|| i + w)));
    let (a, b) = if horizontal <= vertical {
        (horizontal, vertical)
    } else {
        (vertical, horizontal)
    };
    if b - a >= step || b.is_infinite() {
        a + step
    } else {
        let diff = a - b;
        0.5 * (a + b + (2.0 * step * step - diff * diff).sqrt())
    }
}
